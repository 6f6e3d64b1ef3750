//! Magnetic field models for parameterized coil assemblies.
//!
//! Three source elements are supported: discretized circular current loops
//! (numerical Biot–Savart), finite solenoids with a calibrated core gain, and
//! point-source pole tips standing in for high-permeability tweezer poles.
//! An assembly groups elements into current channels; fields superpose
//! linearly over channels.

mod assembly;
mod builtin;
mod config;
mod elements;
mod field_map;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

pub use assembly::{
    calibrate_channel, calibrate_pair, AssemblyKind, Channel, ChannelElement, ChannelPair,
    CoilAssembly, Discretization, Element, DEFAULT_GRADIENT_STEP,
};
pub use builtin::{
    apply_reference_calibration, builtin_calibrated, coaxial_loop_pair, helmholtz_assembly,
    make_builtin_assembly, mean_winding_radius, tweezer_assembly, two_d_assembly,
    HelmholtzGeometry, RingPair, TweezerGeometry, TwoDGeometry, DEFAULT_CHANNEL_LIMIT,
    HELMHOLTZ_PAIR_FIELDS, TWO_D_FACE_FIELD, TWO_D_REFERENCE_CURRENT,
};
pub use config::{AssemblyConfig, ChannelConfig, ElementConfig, PairConfig};
pub use elements::{
    loop_field, loop_field_with_segments, pole_field, solenoid_field, CurrentLoop, PoleSpec,
    SolenoidSpec, DEFAULT_LOOP_SEGMENTS, DEFAULT_SOLENOID_STACK, POLE_SINGULAR_RADIUS,
    WIRE_SINGULAR_DISTANCE,
};
pub use field_map::{field_map, FieldMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field singular at ({:.6e}, {:.6e}, {:.6e}) m", .point[0], .point[1], .point[2])]
    Singularity { point: [f64; 3] },
    #[error("point ({:.6e}, {:.6e}, {:.6e}) m lies inside a solenoid core", .point[0], .point[1], .point[2])]
    InsideCore { point: [f64; 3] },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("calibration unsatisfiable: {0}")]
    UnsatisfiableCalibration(String),
    #[error("config error: {0}")]
    Config(String),
}

pub(crate) fn point_array(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Principal axis of a coil pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::x(),
            Axis::Y => Vec3::y(),
            Axis::Z => Vec3::z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Magnetic flux density at a point, in tesla.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldVector(pub Vec3);

impl FieldVector {
    pub fn zero() -> Self {
        FieldVector(Vec3::zeros())
    }

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        FieldVector(Vec3::new(x, y, z))
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for FieldVector {
    type Output = FieldVector;
    fn add(self, rhs: FieldVector) -> FieldVector {
        FieldVector(self.0 + rhs.0)
    }
}

impl AddAssign for FieldVector {
    fn add_assign(&mut self, rhs: FieldVector) {
        self.0 += rhs.0;
    }
}

impl Sub for FieldVector {
    type Output = FieldVector;
    fn sub(self, rhs: FieldVector) -> FieldVector {
        FieldVector(self.0 - rhs.0)
    }
}

impl Neg for FieldVector {
    type Output = FieldVector;
    fn neg(self) -> FieldVector {
        FieldVector(-self.0)
    }
}

impl Mul<f64> for FieldVector {
    type Output = FieldVector;
    fn mul(self, rhs: f64) -> FieldVector {
        FieldVector(self.0 * rhs)
    }
}

/// Spatial Jacobian of the field, entry `(i, j) = ∂B_i/∂x_j`, in T/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGradient(pub Matrix3<f64>);

impl Default for FieldGradient {
    fn default() -> Self {
        FieldGradient::zero()
    }
}

impl FieldGradient {
    pub fn zero() -> Self {
        FieldGradient(Matrix3::zeros())
    }

    /// Divergence of the field.
    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Frobenius norm of the antisymmetric part, equal to `|∇×B| / sqrt(2)`.
    pub fn antisymmetric_norm(&self) -> f64 {
        ((self.0 - self.0.transpose()) * 0.5).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}
