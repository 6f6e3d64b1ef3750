use nalgebra::Rotation3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coil_model::{FieldGradient, FieldVector};
use crate::Vec3;

use super::{magnetic_force, magnetic_torque, ContactMode, Environment, RobotState, SimError};

/// Stability guard on the deterministic rotation per step, rad.
pub const MAX_ROTATION_PER_STEP: f64 = 0.5;

/// Explicit-Euler stepper with its own seeded noise stream.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub env: Environment,
    rng: ChaCha8Rng,
}

impl Integrator {
    pub fn new(env: Environment) -> Result<Self, SimError> {
        env.validate()?;
        Ok(Integrator {
            env,
            rng: ChaCha8Rng::seed_from_u64(env.seed),
        })
    }

    fn gaussian3(&mut self) -> Vec3 {
        Vec3::new(
            StandardNormal.sample(&mut self.rng),
            StandardNormal.sample(&mut self.rng),
            StandardNormal.sample(&mut self.rng),
        )
    }

    pub fn step(
        &mut self,
        state: &RobotState,
        b: &FieldVector,
        grad: &FieldGradient,
        dt: f64,
    ) -> Result<RobotState, SimError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::Argument("dt must be positive".into()));
        }
        if !b.is_finite() || !grad.is_finite() {
            return Err(SimError::Argument("field sample is not finite".into()));
        }
        let a = state.radius;
        let env = self.env;

        let omega = magnetic_torque(&state.moment, b) / env.rotational_drag(a);
        let rotation = omega.norm() * dt;
        if rotation > MAX_ROTATION_PER_STEP {
            return Err(SimError::StepSize { rotation });
        }
        let mut rotvec = omega * dt;
        if env.noise_enabled {
            let d_r = super::K_B * env.temperature / env.rotational_drag(a);
            rotvec += self.gaussian3() * (2.0 * d_r * dt).sqrt();
        }
        let magnitude = state.moment.norm();
        let mut moment = Rotation3::new(rotvec) * state.moment;
        moment *= magnitude / moment.norm();

        let mut velocity = magnetic_force(&state.moment, grad) / env.translational_drag(a);
        if state.mode == ContactMode::SurfaceRolling {
            velocity += omega.cross(&Vec3::z()) * (env.rolling_slip * a);
        }
        let mut position = state.position + velocity * dt;
        if env.noise_enabled && env.translational_noise {
            let d_t = super::K_B * env.temperature / env.translational_drag(a);
            position += self.gaussian3() * (2.0 * d_t * dt).sqrt();
        }
        if state.mode == ContactMode::SurfaceRolling {
            position.z = a;
        }

        Ok(RobotState {
            position,
            moment,
            time: state.time + dt,
            ..*state
        })
    }

    /// Advances by `interval` under a field held constant over it, splitting
    /// into equal substeps no longer than `max_dt` and small enough to pass
    /// the rotation guard with margin.
    pub fn advance(
        &mut self,
        state: &RobotState,
        b: &FieldVector,
        grad: &FieldGradient,
        interval: f64,
        max_dt: f64,
    ) -> Result<RobotState, SimError> {
        if !(interval > 0.0) || !(max_dt > 0.0) {
            return Err(SimError::Argument(
                "interval and max_dt must be positive".into(),
            ));
        }
        let omega_bound = self.env.step_out_frequency(state, b.magnitude());
        let by_dt = (interval / max_dt).ceil();
        let by_guard = (omega_bound * interval / (0.5 * MAX_ROTATION_PER_STEP)).ceil();
        let n = by_dt.max(by_guard).max(1.0) as u64;
        let dt = interval / n as f64;
        let mut s = *state;
        for _ in 0..n {
            s = self.step(&s, b, grad, dt)?;
        }
        Ok(s)
    }
}
