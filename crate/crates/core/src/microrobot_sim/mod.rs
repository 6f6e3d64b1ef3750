//! Overdamped rigid-sphere dynamics of a magnetic microrobot.
//!
//! The robot is a sphere of radius `a` carrying a permanent dipole `m` fixed
//! in its body. At low Reynolds number torque and force map directly to
//! angular and linear velocity through the Stokes drag coefficients
//! `8πμa³` and `6πμa`.

mod integrator;
mod source;
mod trajectory;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::ActuationError;
use crate::coil_model::{FieldError, FieldGradient, FieldVector};
use crate::Vec3;

pub use integrator::{Integrator, MAX_ROTATION_PER_STEP};
pub use source::{AssemblyDriven, FieldSource, RotatingUniform, UniformField};
pub use trajectory::{mean_rotation_rate, run, Sample, SimConfig, Trajectory};

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// 4.5 µm bead.
pub const DEFAULT_RADIUS: f64 = 2.25e-6;
pub const DEFAULT_MOMENT: f64 = 1e-13;
/// Water at room temperature, Pa·s.
pub const DEFAULT_VISCOSITY: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("step too large: |omega|*dt = {rotation:.3} rad exceeds {MAX_ROTATION_PER_STEP} rad")]
    StepSize { rotation: f64 },
    #[error("invalid robot state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error("at tick {tick}: {source}")]
    AtTick {
        tick: u64,
        #[source]
        source: Box<SimError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// Free in the fluid.
    Bulk,
    /// Resting on the z = 0 plane, translating by rolling.
    SurfaceRolling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub position: Vec3,
    pub moment: Vec3,
    pub radius: f64,
    pub mode: ContactMode,
    pub time: f64,
}

impl RobotState {
    /// Default bead at `position` with its moment along `direction`. In
    /// surface mode z is set to the radius.
    pub fn bead(position: Vec3, direction: Vec3, mode: ContactMode) -> Self {
        let mut s = RobotState {
            position,
            moment: direction.normalize() * DEFAULT_MOMENT,
            radius: DEFAULT_RADIUS,
            mode,
            time: 0.0,
        };
        if mode == ContactMode::SurfaceRolling {
            s.position.z = s.radius;
        }
        s
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(SimError::InvalidState("radius must be positive".into()));
        }
        let m = self.moment.norm();
        if !(m > 0.0) || !m.is_finite() {
            return Err(SimError::InvalidState(
                "moment must be nonzero and finite".into(),
            ));
        }
        if !self.position.iter().all(|c| c.is_finite()) || !self.time.is_finite() {
            return Err(SimError::InvalidState(
                "position and time must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn moment_direction(&self) -> Vec3 {
        self.moment.normalize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Environment {
    pub viscosity: f64,
    pub temperature: f64,
    /// Brownian rotation.
    pub noise_enabled: bool,
    /// Brownian translation as well; only honoured with `noise_enabled`.
    pub translational_noise: bool,
    pub seed: u64,
    /// Fraction of ideal no-slip rolling speed achieved against the wall.
    pub rolling_slip: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            viscosity: DEFAULT_VISCOSITY,
            temperature: 293.15,
            noise_enabled: false,
            translational_noise: false,
            seed: 0,
            rolling_slip: 1.0,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.viscosity > 0.0) || !self.viscosity.is_finite() {
            return Err(SimError::Argument("viscosity must be positive".into()));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(SimError::Argument("temperature must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rolling_slip) {
            return Err(SimError::Argument("rolling_slip must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn rotational_drag(&self, radius: f64) -> f64 {
        8.0 * PI * self.viscosity * radius.powi(3)
    }

    pub fn translational_drag(&self, radius: f64) -> f64 {
        6.0 * PI * self.viscosity * radius
    }

    /// Highest rotating-field frequency (rad/s) a dipole can follow
    /// synchronously.
    pub fn step_out_frequency(&self, state: &RobotState, b_magnitude: f64) -> f64 {
        state.moment.norm() * b_magnitude / self.rotational_drag(state.radius)
    }
}

/// Γ = m × B.
pub fn magnetic_torque(moment: &Vec3, b: &FieldVector) -> Vec3 {
    moment.cross(&b.0)
}

/// F_i = Σ_j m_j ∂B_i/∂x_j.
pub fn magnetic_force(moment: &Vec3, grad: &FieldGradient) -> Vec3 {
    grad.0 * moment
}
