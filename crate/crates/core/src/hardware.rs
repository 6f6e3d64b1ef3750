//! H-bridge drive mapping and the hardware backend contract.
//!
//! Each channel is driven by one H-bridge: PWM duty sets the current
//! magnitude and the bridge direction sets polarity. Only a simulated backend
//! is provided.

use serde::{Deserialize, Serialize};

/// Currents below this magnitude (A) leave the bridge disabled.
pub const ENABLE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Forward,
    Reverse,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Forward => 1.0,
            Polarity::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSignal {
    pub duty: f64,
    pub polarity: Polarity,
    pub enabled: bool,
}

impl DriveSignal {
    pub const OFF: DriveSignal = DriveSignal {
        duty: 0.0,
        polarity: Polarity::Forward,
        enabled: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverLimits {
    pub supply_voltage: f64,
    /// Current at full duty on one channel, A.
    pub per_channel_max: f64,
    /// Supply limit on the summed channel current magnitudes, A.
    pub total_max: f64,
}

impl Default for DriverLimits {
    fn default() -> Self {
        DriverLimits {
            supply_voltage: 12.0,
            per_channel_max: 3.0,
            total_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveFrame {
    pub signals: Vec<DriveSignal>,
    /// Set when the supply limit forced down-scaling or a channel clipped.
    pub saturated: bool,
}

/// Duty and polarity per channel. When the summed magnitude exceeds
/// `total_max` every channel is scaled by the same factor first.
pub fn currents_to_drive(currents: &[f64], limits: &DriverLimits) -> DriveFrame {
    let total: f64 = currents.iter().map(|i| i.abs()).sum();
    let scale = if total > limits.total_max {
        limits.total_max / total
    } else {
        1.0
    };
    let mut saturated = scale < 1.0;
    let signals = currents
        .iter()
        .map(|&i| {
            let scaled = i * scale;
            let raw = scaled.abs() / limits.per_channel_max;
            if raw > 1.0 {
                saturated = true;
            }
            DriveSignal {
                duty: raw.min(1.0),
                polarity: if scaled < 0.0 {
                    Polarity::Reverse
                } else {
                    Polarity::Forward
                },
                enabled: scaled.abs() > ENABLE_THRESHOLD,
            }
        })
        .collect();
    DriveFrame { signals, saturated }
}

/// Physical (or simulated) coil driver.
pub trait HardwareBackend: Send {
    fn channel_count(&self) -> usize;

    /// Holds `signals` for the next `dt` seconds.
    fn apply(&mut self, signals: &[DriveSignal], dt: f64);

    /// Achieved coil currents after the most recent `apply`, A.
    fn read(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendModel {
    /// Current follows the command immediately.
    #[default]
    Instantaneous,
    /// Coil current relaxes toward the command with time constant `tau` (s).
    FirstOrder { tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBackend {
    model: BackendModel,
    per_channel_max: f64,
    currents: Vec<f64>,
}

impl SimulatedBackend {
    pub fn new(channels: usize, model: BackendModel, per_channel_max: f64) -> Self {
        SimulatedBackend {
            model,
            per_channel_max,
            currents: vec![0.0; channels],
        }
    }

    pub fn target(&self, signal: &DriveSignal) -> f64 {
        if signal.enabled {
            signal.polarity.sign() * signal.duty * self.per_channel_max
        } else {
            0.0
        }
    }
}

impl HardwareBackend for SimulatedBackend {
    fn channel_count(&self) -> usize {
        self.currents.len()
    }

    fn apply(&mut self, signals: &[DriveSignal], dt: f64) {
        if signals.len() != self.currents.len() {
            // channel layout changed (assembly swap); start from rest
            self.currents = vec![0.0; signals.len()];
        }
        let targets: Vec<f64> = signals.iter().map(|s| self.target(s)).collect();
        match self.model {
            BackendModel::Instantaneous => self.currents = targets,
            BackendModel::FirstOrder { tau } => {
                let blend = 1.0 - (-dt.max(0.0) / tau).exp();
                for (i, target) in self.currents.iter_mut().zip(targets) {
                    *i += (target - *i) * blend;
                }
            }
        }
    }

    fn read(&self) -> Vec<f64> {
        self.currents.clone()
    }
}
