//! Software twin of a portable, multi-configuration electromagnetic
//! manipulation rig for magnetic microrobots.
//!
//! The crate is split along the signal chain:
//!
//! * [`coil_model`] computes flux density and its spatial Jacobian for the
//!   three built-in coil assemblies (planar four-coil, triaxial ring pairs,
//!   six-pole tweezer) or any assembly loaded from a config file.
//! * [`actuation`] turns operator intent into per-channel currents:
//!   constant-field orientation, rotating fields for rolling and spinning,
//!   vibration and tweezer pole selection.
//! * [`microrobot_sim`] integrates overdamped rigid-sphere dynamics under
//!   magnetic torque and gradient force.
//! * [`hardware`] maps currents to H-bridge duty/polarity and provides a
//!   simulated backend.
//! * [`control_service`] runs the fixed-rate control loop and the line
//!   protocol used by remote clients.
//!
//! All internal quantities are SI (tesla, ampere, metre, second, radian).

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod coil_model;
pub mod control_service;
pub mod hardware;
pub mod microrobot_sim;
mod numfmt;

pub use numfmt::Num;

/// Cartesian 3-vector used for positions, directions, fields and moments.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Vacuum permeability in T·m/A.
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

pub use actuation::{ActuationCommand, CoilCurrents, FieldPerAmpMatrix, RotatingField};
pub use coil_model::{AssemblyKind, CoilAssembly, FieldGradient, FieldVector};
