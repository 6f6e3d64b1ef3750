use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::actuation::{
    command_currents, ActuationCommand, ActuationError, CoilCurrents, FieldPerAmpMatrix,
    RotatingField,
};
use crate::coil_model::{AssemblyKind, CoilAssembly, FieldError, FieldVector};
use crate::hardware::{
    currents_to_drive, BackendModel, DriveFrame, DriverLimits, HardwareBackend, SimulatedBackend,
};
use crate::microrobot_sim::{
    ContactMode, Environment, Integrator, RobotState, SimError, DEFAULT_MOMENT, DEFAULT_RADIUS,
};
use crate::Vec3;

use super::protocol::{direction_from_degrees, ErrorCode, Message, ProtocolError, TweezerState};
use super::telemetry::{RobotTelemetry, Telemetry};

pub const DEFAULT_TICK_RATE: f64 = 100.0;
/// Stick deflections below this are ignored.
pub const STICK_DEADZONE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub mode: ContactMode,
    pub radius: f64,
    /// |m|, A·m².
    pub moment: f64,
    pub initial_direction: [f64; 3],
    /// Longest integration substep, s.
    pub max_dt: f64,
    pub env: Environment,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            mode: ContactMode::SurfaceRolling,
            radius: DEFAULT_RADIUS,
            moment: DEFAULT_MOMENT,
            initial_direction: [1.0, 0.0, 0.0],
            max_dt: 1e-4,
            env: Environment::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub tick_rate: f64,
    pub assembly: String,
    pub limits: DriverLimits,
    pub backend: BackendModel,
    pub sim: Option<SimSettings>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            tick_rate: DEFAULT_TICK_RATE,
            assembly: AssemblyKind::Helmholtz.name().into(),
            limits: DriverLimits::default(),
            backend: BackendModel::Instantaneous,
            sim: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown assembly {0:?}")]
    UnknownAssembly(String),
    #[error("invalid session config: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Named assemblies a session can switch between.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, (CoilAssembly, FieldPerAmpMatrix)>,
}

impl Registry {
    /// The three reference assemblies.
    pub fn builtin() -> Result<Self, SessionError> {
        let mut r = Registry::default();
        for kind in [
            AssemblyKind::TwoD,
            AssemblyKind::Helmholtz,
            AssemblyKind::Tweezer,
        ] {
            r.insert(CoilAssembly::bundled(kind)?)?;
        }
        Ok(r)
    }

    /// Adds or replaces an assembly under its lowercased name.
    pub fn insert(&mut self, assembly: CoilAssembly) -> Result<(), SessionError> {
        let m = FieldPerAmpMatrix::from_assembly(&assembly)?;
        self.entries
            .insert(assembly.name.to_ascii_lowercase(), (assembly, m));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&(CoilAssembly, FieldPerAmpMatrix)> {
        self.entries.get(&name.to_ascii_lowercase())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
struct AttachedSim {
    integrator: Integrator,
    state: RobotState,
    max_dt: f64,
}

/// Result of one control-loop tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub commanded: CoilCurrents,
    pub drive: DriveFrame,
    pub achieved: Vec<f64>,
    pub telemetry: Telemetry,
    /// Set when the command (or attached simulation) failed this tick and the
    /// session fell back to Stop.
    pub error: Option<ProtocolError>,
}

/// Control-loop state: one active command applied to one assembly, driven
/// through a hardware backend at a fixed tick rate.
pub struct Session {
    registry: Registry,
    assembly: CoilAssembly,
    matrix: FieldPerAmpMatrix,
    command: ActuationCommand,
    tick_rate: f64,
    tick_index: u64,
    limits: DriverLimits,
    backend: Box<dyn HardwareBackend>,
    sim: Option<AttachedSim>,
    last_currents: CoilCurrents,
}

pub fn actuation_error(e: &ActuationError) -> ProtocolError {
    match e {
        ActuationError::ModeMismatch(d) => ProtocolError::with(ErrorCode::ModeMismatch, d.clone()),
        ActuationError::Unreachable { residual } => {
            ProtocolError::with(ErrorCode::Unreachable, format!("residual={residual:e}"))
        }
        ActuationError::Argument(d) => ProtocolError::with(ErrorCode::Range, d.clone()),
        ActuationError::Field(f) => ProtocolError::with(ErrorCode::Internal, f.to_string()),
    }
}

/// Actuation command a self-contained message stands for, converted to SI.
/// `None` for messages that do not name a command on their own (`AXIS`,
/// `SELECT_ASSEMBLY`, `SUBSCRIBE`, `PING`).
pub fn message_command(msg: &Message) -> Option<ActuationCommand> {
    let rotating = |a_mt: f64, f_hz: f64, alpha_deg: f64, gamma_deg: f64| RotatingField {
        magnitude: a_mt * 1e-3,
        alpha: alpha_deg.to_radians(),
        gamma: gamma_deg.to_radians(),
        omega: TAU * f_hz,
    };
    let cmd = match *msg {
        Message::Stop => ActuationCommand::Stop,
        Message::Orient {
            theta_deg,
            phi_deg,
            strength,
        } => ActuationCommand::Orient {
            direction: direction_from_degrees(theta_deg, phi_deg),
            strength,
        },
        Message::Roll {
            a_mt,
            f_hz,
            alpha_deg,
            gamma_deg,
        } => ActuationCommand::Roll(rotating(a_mt, f_hz, alpha_deg, gamma_deg)),
        Message::Spin {
            a_mt,
            f_hz,
            alpha_deg,
            gamma_deg,
        } => ActuationCommand::Spin(rotating(a_mt, f_hz, alpha_deg, gamma_deg)),
        Message::Vibrate { axis, hz, strength } => ActuationCommand::Vibrate { axis, hz, strength },
        Message::Tweezer {
            state: TweezerState::Off,
            ..
        } => ActuationCommand::Stop,
        Message::Tweezer {
            state: TweezerState::On,
            theta_deg,
            phi_deg,
            strength,
        } => ActuationCommand::Tweezer {
            direction: direction_from_degrees(theta_deg, phi_deg),
            strength,
        },
        Message::Axis { .. }
        | Message::SelectAssembly { .. }
        | Message::Subscribe { .. }
        | Message::Ping => return None,
    };
    Some(cmd)
}

impl Session {
    pub fn new(registry: Registry, config: &SessionConfig) -> Result<Self, SessionError> {
        let backend = SimulatedBackend::new(0, config.backend, config.limits.per_channel_max);
        Self::with_backend(registry, config, Box::new(backend))
    }

    pub fn with_backend(
        registry: Registry,
        config: &SessionConfig,
        backend: Box<dyn HardwareBackend>,
    ) -> Result<Self, SessionError> {
        if !(config.tick_rate > 0.0) || !config.tick_rate.is_finite() {
            return Err(SessionError::Config("tick_rate must be positive".into()));
        }
        let l = &config.limits;
        if !(l.per_channel_max > 0.0 && l.total_max > 0.0 && l.supply_voltage > 0.0) {
            return Err(SessionError::Config(
                "driver limits must be positive".into(),
            ));
        }
        if let BackendModel::FirstOrder { tau } = config.backend {
            if !(tau > 0.0) {
                return Err(SessionError::Config("backend tau must be positive".into()));
            }
        }
        let (assembly, matrix) = registry
            .get(&config.assembly)
            .cloned()
            .ok_or_else(|| SessionError::UnknownAssembly(config.assembly.clone()))?;
        let sim = match &config.sim {
            None => None,
            Some(s) => {
                let [x, y, z] = s.initial_direction;
                let dir = Vec3::new(x, y, z);
                if !(dir.norm() > 0.0) || !(s.max_dt > 0.0) {
                    return Err(SessionError::Config(
                        "sim needs a nonzero initial_direction and max_dt > 0".into(),
                    ));
                }
                let mut state = RobotState::bead(assembly.workspace_center, dir, s.mode);
                state.radius = s.radius;
                state.moment = dir.normalize() * s.moment;
                if s.mode == ContactMode::SurfaceRolling {
                    state.position.z = s.radius;
                }
                state.validate()?;
                Some(AttachedSim {
                    integrator: Integrator::new(s.env)?,
                    state,
                    max_dt: s.max_dt,
                })
            }
        };
        let n = assembly.channel_count();
        Ok(Session {
            registry,
            assembly,
            matrix,
            command: ActuationCommand::Stop,
            tick_rate: config.tick_rate,
            tick_index: 0,
            limits: config.limits,
            backend,
            sim,
            last_currents: CoilCurrents::zeros(n),
        })
    }

    pub fn assembly(&self) -> &CoilAssembly {
        &self.assembly
    }

    pub fn command(&self) -> &ActuationCommand {
        &self.command
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }

    /// Seconds since session start, at the next tick.
    pub fn clock(&self) -> f64 {
        self.tick_index as f64 / self.tick_rate
    }

    pub fn sim_attached(&self) -> bool {
        self.sim.is_some()
    }

    pub fn robot(&self) -> Option<&RobotState> {
        self.sim.as_ref().map(|s| &s.state)
    }

    pub fn last_currents(&self) -> &CoilCurrents {
        &self.last_currents
    }

    pub fn force_stop(&mut self) {
        self.command = ActuationCommand::Stop;
    }

    fn is_tweezer(&self) -> bool {
        self.assembly.kind == AssemblyKind::Tweezer
    }

    fn mode_mismatch(&self, what: &str) -> ProtocolError {
        ProtocolError::with(
            ErrorCode::ModeMismatch,
            format!("{what} not available on {}", self.assembly.name),
        )
    }

    fn command_for(&self, msg: &Message) -> Result<Option<ActuationCommand>, ProtocolError> {
        match *msg {
            Message::Tweezer { .. } if !self.is_tweezer() => Err(self.mode_mismatch("TWEEZER")),
            Message::Axis { lx, ly, rx, ry } => {
                let mut cmd = self.command;
                if lx.hypot(ly) > STICK_DEADZONE {
                    let heading = ly.atan2(lx);
                    let planar = Vec3::new(heading.cos(), heading.sin(), 0.0);
                    match &mut cmd {
                        ActuationCommand::Orient { direction, .. }
                        | ActuationCommand::Tweezer { direction, .. } => *direction = planar,
                        _ => {}
                    }
                }
                if rx.hypot(ry) > STICK_DEADZONE {
                    if let ActuationCommand::Roll(f) = &mut cmd {
                        // rolling heading is (sin α, cos α) in the plane
                        f.alpha = rx.atan2(ry);
                    }
                }
                Ok(Some(cmd))
            }
            _ => Ok(message_command(msg)),
        }
    }

    /// Applies a client message. On error nothing changes.
    pub fn apply_message(&mut self, msg: &Message) -> Result<(), ProtocolError> {
        if let Message::SelectAssembly { name } = msg {
            let (assembly, matrix) =
                self.registry.get(name).cloned().ok_or_else(|| {
                    ProtocolError::with(ErrorCode::BadArg, format!("NAME {name}"))
                })?;
            self.assembly = assembly;
            self.matrix = matrix;
            self.command = ActuationCommand::Stop;
            return Ok(());
        }
        let Some(cmd) = self.command_for(msg)? else {
            return Ok(());
        };
        command_currents(&self.assembly, &self.matrix, &cmd, self.clock())
            .map_err(|e| actuation_error(&e))?;
        self.command = cmd;
        Ok(())
    }

    fn step_sim(&mut self, achieved: &[f64]) -> Result<Option<RobotTelemetry>, SimError> {
        let dt = 1.0 / self.tick_rate;
        let Some(sim) = self.sim.as_mut() else {
            return Ok(None);
        };
        let p = sim.state.position;
        let b = self.assembly.field(achieved, &p)?;
        let g = self.assembly.gradient(achieved, &p)?;
        sim.state = sim.integrator.advance(&sim.state, &b, &g, dt, sim.max_dt)?;
        Ok(Some(RobotTelemetry {
            position_um: sim.state.position * 1e6,
            moment_direction: sim.state.moment_direction(),
        }))
    }

    /// One control period: command -> currents -> drive -> backend -> sim.
    pub fn tick(&mut self) -> TickOutput {
        let t = self.clock();
        let mut error = None;
        let commanded = match command_currents(&self.assembly, &self.matrix, &self.command, t) {
            Ok(c) => c,
            Err(e) => {
                error = Some(actuation_error(&e));
                self.command = ActuationCommand::Stop;
                CoilCurrents::zeros(self.assembly.channel_count())
            }
        };
        let drive = currents_to_drive(&commanded.values, &self.limits);
        self.backend.apply(&drive.signals, 1.0 / self.tick_rate);
        let achieved = self.backend.read();
        let b: FieldVector = self.matrix.apply(&achieved);

        let robot = match self.step_sim(&achieved) {
            Ok(r) => r,
            Err(e) => {
                error.get_or_insert(ProtocolError::with(
                    ErrorCode::Internal,
                    format!("sim: {e}"),
                ));
                self.command = ActuationCommand::Stop;
                self.sim.as_ref().map(|s| RobotTelemetry {
                    position_um: s.state.position * 1e6,
                    moment_direction: s.state.moment_direction(),
                })
            }
        };

        let telemetry = Telemetry {
            t,
            mode: self.command.mode().verb().to_string(),
            currents: achieved.clone(),
            b_mt: b.0 * 1e3,
            robot,
        };
        self.last_currents = commanded.clone();
        self.tick_index += 1;
        TickOutput {
            commanded,
            drive,
            achieved,
            telemetry,
            error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_service::protocol::parse_command;

    fn session(assembly: &str) -> Session {
        let cfg = SessionConfig {
            assembly: assembly.into(),
            ..SessionConfig::default()
        };
        Session::new(Registry::builtin().unwrap(), &cfg).unwrap()
    }

    fn apply(s: &mut Session, line: &str) -> Result<(), ProtocolError> {
        s.apply_message(&parse_command(line).unwrap())
    }

    #[test]
    fn starts_stopped_with_zero_output() {
        let mut s = session("helmholtz");
        let out = s.tick();
        assert_eq!(out.telemetry.mode, "STOP");
        assert!(out.achieved.iter().all(|i| *i == 0.0));
        assert!(out.drive.signals.iter().all(|d| !d.enabled));
    }

    #[test]
    fn axis_left_stick_sets_orient_heading() {
        let mut s = session("twod");
        apply(&mut s, "ORIENT THETA=90").unwrap();
        apply(&mut s, "AXIS LX=1 LY=0").unwrap();
        match s.command() {
            ActuationCommand::Orient { direction, .. } => assert_eq!(*direction, Vec3::x()),
            other => panic!("{other:?}"),
        }
        let out = s.tick();
        assert_eq!(out.commanded.values, vec![3.0, -3.0, 0.0, 0.0]);
        // 3 A supply shared by both coils of the pair
        assert_eq!(out.achieved, vec![1.5, -1.5, 0.0, 0.0]);
        assert!(out.drive.saturated);
    }

    #[test]
    fn axis_right_stick_steers_roll() {
        let mut s = session("helmholtz");
        apply(&mut s, "ROLL A=1 F=1").unwrap();
        apply(&mut s, "AXIS RX=1 RY=0").unwrap();
        match s.command() {
            ActuationCommand::Roll(f) => {
                assert!((f.alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tweezer_rules() {
        let mut s = session("helmholtz");
        assert_eq!(
            apply(&mut s, "TWEEZER").unwrap_err().code,
            ErrorCode::ModeMismatch
        );
        apply(&mut s, "SELECT_ASSEMBLY NAME=tweezer").unwrap();
        assert_eq!(
            apply(&mut s, "ROLL A=1 F=1").unwrap_err().code,
            ErrorCode::ModeMismatch
        );
        apply(&mut s, "TWEEZER STATE=on THETA=30").unwrap();
        assert_eq!(s.command().mode().verb(), "TWEEZER");
        let out = s.tick();
        assert_eq!(out.achieved.iter().filter(|i| **i != 0.0).count(), 1);
        apply(&mut s, "TWEEZER STATE=off").unwrap();
        assert_eq!(*s.command(), ActuationCommand::Stop);
    }

    #[test]
    fn select_assembly_forces_stop_and_rejects_unknown() {
        let mut s = session("helmholtz");
        apply(&mut s, "ORIENT THETA=0").unwrap();
        apply(&mut s, "SELECT_ASSEMBLY NAME=twod").unwrap();
        assert_eq!(*s.command(), ActuationCommand::Stop);
        assert_eq!(s.tick().achieved.len(), 4);
        let err = apply(&mut s, "SELECT_ASSEMBLY NAME=nope").unwrap_err();
        assert_eq!(err.code, ErrorCode::BadArg);
        assert_eq!(s.assembly().name, "twod");
    }

    #[test]
    fn failed_message_leaves_state_untouched() {
        let mut s = session("twod");
        apply(&mut s, "ORIENT THETA=45").unwrap();
        let before = *s.command();
        // default gamma needs a vertical pair the planar rig lacks
        assert_eq!(
            apply(&mut s, "ROLL A=1 F=1").unwrap_err().code,
            ErrorCode::Unreachable
        );
        assert_eq!(*s.command(), before);
        apply(&mut s, "ROLL A=1 F=1 GAMMA=0").unwrap();
    }

    #[test]
    fn roll_field_is_constant_magnitude_through_the_stack() {
        let mut s = session("helmholtz");
        apply(&mut s, "ROLL A=2 F=1").unwrap();
        for _ in 0..100 {
            let out = s.tick();
            assert!((out.telemetry.b_mt.norm() - 2.0).abs() < 1e-9);
        }
    }
}
