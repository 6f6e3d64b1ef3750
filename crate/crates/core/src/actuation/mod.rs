//! Operator intent to per-channel coil currents.
//!
//! Every function here is a pure function of its arguments; waveforms take
//! the evaluation time from the caller.

mod currents;
mod inverse;
mod waveform;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use thiserror::Error;

use crate::coil_model::{Axis, FieldError};
use crate::Vec3;

pub use currents::{
    command_currents, orient_currents, select_pole, tweezer_currents, vibrate_currents,
};
pub use inverse::{field_to_currents, FieldPerAmpMatrix, UNREACHABLE_TOLERANCE};
pub use waveform::{rolling_waveform, rotation_axis};

/// Polar angle used for rolling unless the operator picks one: rotation about
/// a horizontal axis.
pub const DEFAULT_ROLL_GAMMA: f64 = FRAC_PI_2;
/// Polar angle used for spinning: rotation about the vertical axis.
pub const DEFAULT_SPIN_GAMMA: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("requested field unreachable, residual {residual:.3e} T")]
    Unreachable { residual: f64 },
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Signed per-channel currents in amperes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilCurrents {
    pub values: Vec<f64>,
    /// Channels held at their limit by uniform down-scaling.
    pub saturated: Vec<bool>,
}

impl CoilCurrents {
    pub fn zeros(channels: usize) -> Self {
        CoilCurrents {
            values: vec![0.0; channels],
            saturated: vec![false; channels],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        CoilCurrents {
            values,
            saturated: vec![false; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }
}

/// Parameters of a rotating field: amplitude (T), angles (rad), rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingField {
    pub magnitude: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl RotatingField {
    pub fn at(&self, t: f64) -> crate::coil_model::FieldVector {
        rolling_waveform(t, self.magnitude, self.gamma, self.alpha, self.omega)
    }

    pub fn axis(&self) -> Vec3 {
        rotation_axis(self.gamma, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Stop,
    Orient,
    Roll,
    Spin,
    Vibrate,
    Tweezer,
}

impl Mode {
    pub fn verb(self) -> &'static str {
        match self {
            Mode::Stop => "STOP",
            Mode::Orient => "ORIENT",
            Mode::Roll => "ROLL",
            Mode::Spin => "SPIN",
            Mode::Vibrate => "VIBRATE",
            Mode::Tweezer => "TWEEZER",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())
    }
}

/// What the operator asked for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActuationCommand {
    Stop,
    Orient { direction: Vec3, strength: f64 },
    Roll(RotatingField),
    Spin(RotatingField),
    Vibrate { axis: Axis, hz: f64, strength: f64 },
    Tweezer { direction: Vec3, strength: f64 },
}

impl ActuationCommand {
    pub fn mode(&self) -> Mode {
        match self {
            ActuationCommand::Stop => Mode::Stop,
            ActuationCommand::Orient { .. } => Mode::Orient,
            ActuationCommand::Roll(_) => Mode::Roll,
            ActuationCommand::Spin(_) => Mode::Spin,
            ActuationCommand::Vibrate { .. } => Mode::Vibrate,
            ActuationCommand::Tweezer { .. } => Mode::Tweezer,
        }
    }

    /// Rolling about a horizontal axis steered by `alpha`.
    pub fn roll(magnitude: f64, alpha: f64, omega: f64) -> Self {
        ActuationCommand::Roll(RotatingField {
            magnitude,
            alpha,
            gamma: DEFAULT_ROLL_GAMMA,
            omega,
        })
    }

    pub fn spin(magnitude: f64, alpha: f64, omega: f64) -> Self {
        ActuationCommand::Spin(RotatingField {
            magnitude,
            alpha,
            gamma: DEFAULT_SPIN_GAMMA,
            omega,
        })
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        let fraction = |s: f64| {
            if (0.0..=1.0).contains(&s) {
                Ok(())
            } else {
                Err(ActuationError::Argument(format!(
                    "strength fraction {s} outside [0, 1]"
                )))
            }
        };
        let direction = |d: &Vec3| {
            if d.iter().all(|c| c.is_finite()) && d.norm() >= 1e-12 {
                Ok(())
            } else {
                Err(ActuationError::Argument("direction must be nonzero".into()))
            }
        };
        match self {
            ActuationCommand::Stop => Ok(()),
            ActuationCommand::Orient {
                direction: d,
                strength,
            }
            | ActuationCommand::Tweezer {
                direction: d,
                strength,
            } => {
                direction(d)?;
                fraction(*strength)
            }
            ActuationCommand::Roll(f) | ActuationCommand::Spin(f) => {
                if !(f.magnitude >= 0.0)
                    || ![f.magnitude, f.alpha, f.gamma, f.omega]
                        .iter()
                        .all(|v| v.is_finite())
                {
                    return Err(ActuationError::Argument(
                        "rotating field needs finite parameters and magnitude >= 0".into(),
                    ));
                }
                Ok(())
            }
            ActuationCommand::Vibrate { hz, strength, .. } => {
                if !(*hz > 0.0) || !hz.is_finite() {
                    return Err(ActuationError::Argument(
                        "vibrate frequency must be > 0".into(),
                    ));
                }
                fraction(*strength)
            }
        }
    }
}
