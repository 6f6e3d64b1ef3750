use std::f64::consts::TAU;
use std::io::{self, Write};

use crate::coil_model::FieldVector;
use crate::{Num, Vec3};

use super::{Environment, FieldSource, Integrator, RobotState, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Record every `stride`-th tick (the initial state is always recorded).
    pub stride: u64,
}

impl SimConfig {
    pub fn new(dt: f64, duration: f64) -> Self {
        SimConfig {
            dt,
            duration,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !self.duration.is_finite() || self.dt > self.duration {
            return Err(SimError::Argument("need 0 < dt <= duration".into()));
        }
        if self.stride == 0 {
            return Err(SimError::Argument("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn ticks(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: RobotState,
    /// Field at the robot when the step from this state was taken.
    pub field: FieldVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&RobotState> {
        self.samples.last().map(|s| &s.state)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_s,x_m,y_m,z_m,mx,my,mz,bx_t,by_t,bz_t")?;
        for s in &self.samples {
            let p = s.state.position;
            let d = s.state.moment_direction();
            let b = s.field.0;
            let row = [s.state.time, p.x, p.y, p.z, d.x, d.y, d.z, b.x, b.y, b.z];
            let row: Vec<String> = row.iter().map(|v| Num(*v).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates `initial` for `config.duration`, sampling `source` at the
/// robot's position before every step.
pub fn run(
    config: &SimConfig,
    initial: &RobotState,
    env: &Environment,
    source: &mut dyn FieldSource,
) -> Result<Trajectory, SimError> {
    config.validate()?;
    initial.validate()?;
    let mut integrator = Integrator::new(*env)?;
    let at = |tick: u64| {
        move |e: SimError| SimError::AtTick {
            tick,
            source: Box::new(e),
        }
    };

    let ticks = config.ticks();
    let mut samples = Vec::with_capacity((ticks / config.stride + 2) as usize);
    let mut state = *initial;
    let (mut b, mut g) = source.sample(state.time, &state.position).map_err(at(0))?;
    samples.push(Sample { state, field: b });
    for tick in 0..ticks {
        state = integrator
            .step(&state, &b, &g, config.dt)
            .map_err(at(tick))?;
        (b, g) = source
            .sample(state.time, &state.position)
            .map_err(at(tick + 1))?;
        if (tick + 1) % config.stride == 0 || tick + 1 == ticks {
            samples.push(Sample { state, field: b });
        }
    }
    Ok(Trajectory { samples })
}

/// Average angular rate (rad/s) of the moment about `axis` over the samples,
/// from the unwrapped azimuth of its projection onto the plane normal to
/// `axis`.
pub fn mean_rotation_rate(samples: &[Sample], axis: &Vec3) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let n = axis.normalize();
    let e1 = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = (e1 - n * n.dot(&e1)).normalize();
    let e2 = n.cross(&e1);
    let azimuth = |m: &Vec3| m.dot(&e2).atan2(m.dot(&e1));

    let mut total = 0.0;
    let mut prev = azimuth(&samples[0].state.moment);
    for s in &samples[1..] {
        let now = azimuth(&s.state.moment);
        let mut d = now - prev;
        d -= TAU * (d / TAU).round();
        total += d;
        prev = now;
    }
    let span = samples[samples.len() - 1].state.time - samples[0].state.time;
    total / span
}
