use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use magdrive_core::actuation::command_currents;
use magdrive_core::coil_model::field_map;
use magdrive_core::control_service::{
    message_command, parse_command, serve, Hub, Registry, ServiceConfig, Session, SimSettings,
};
use magdrive_core::microrobot_sim::{
    self, AssemblyDriven, ContactMode, Environment, FieldSource, RobotState, RotatingUniform,
    SimConfig,
};
use magdrive_core::{ActuationCommand, AssemblyKind, CoilAssembly, FieldPerAmpMatrix, Vec3};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "magdrive",
    version,
    about = "Coil field models, microrobot simulation and the rig control service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the control service.
    Serve {
        /// Service config file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        /// Assembly active at start-up.
        #[arg(long)]
        assembly: Option<String>,
        #[arg(long)]
        tick_rate: Option<f64>,
        /// Attach a simulated robot with default parameters.
        #[arg(long)]
        sim: bool,
    },
    /// Simulate a robot under a command and write its trajectory as CSV.
    Simulate {
        /// Built-in assembly name or path to an assembly TOML file.
        #[arg(long, default_value = "helmholtz")]
        assembly: String,
        /// Command in protocol syntax, e.g. "ROLL A=2 F=1".
        #[arg(long, default_value = "ROLL A=2 F=1")]
        command: String,
        /// Use the ideal uniform rotating field instead of the coil model
        /// (ROLL/SPIN only).
        #[arg(long)]
        ideal: bool,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Record every N-th step.
        #[arg(long, default_value_t = 10)]
        stride: u64,
        #[arg(long, value_enum, default_value_t = Contact::Surface)]
        contact: Contact,
        /// Initial position, µm (z is ignored for surface contact).
        #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true, default_values_t = [0.0, 0.0, 0.0])]
        start: Vec<f64>,
        /// Initial moment direction; defaults to the field direction at t = 0.
        #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        #[arg(long, default_value_t = microrobot_sim::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = microrobot_sim::DEFAULT_MOMENT)]
        moment: f64,
        #[arg(long, default_value_t = microrobot_sim::DEFAULT_VISCOSITY)]
        viscosity: f64,
        /// Enable Brownian rotation.
        #[arg(long)]
        noise: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Sample an assembly's field on a cubic lattice and write it as CSV.
    Fieldmap {
        #[arg(long, default_value = "helmholtz")]
        assembly: String,
        /// Per-channel currents, A.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            conflicts_with = "command"
        )]
        currents: Option<Vec<f64>>,
        /// Command in protocol syntax evaluated at t = 0.
        #[arg(long)]
        command: Option<String>,
        /// Cube side, m.
        #[arg(long, default_value_t = 0.01)]
        extent: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 11)]
        n: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print a built-in assembly as TOML, as a starting point for a custom rig.
    Assembly { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Contact {
    Surface,
    Bulk,
}

fn load_assembly(spec: &str) -> Result<CoilAssembly> {
    if let Some(kind) = AssemblyKind::parse(spec) {
        return Ok(CoilAssembly::bundled(kind)?);
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading assembly {spec}"))?;
    Ok(CoilAssembly::from_toml_str(&text)?)
}

fn parse_cmd(line: &str) -> Result<ActuationCommand> {
    let msg = parse_command(line).map_err(|e| anyhow::anyhow!("{line:?}: {e}"))?;
    match message_command(&msg) {
        Some(c) => Ok(c),
        None => bail!("{} does not name an actuation command", msg.verb()),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn vec3(v: &[f64]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

async fn run_serve(
    config: Option<PathBuf>,
    bind: Option<String>,
    port: Option<u16>,
    assembly: Option<String>,
    tick_rate: Option<f64>,
    sim: bool,
) -> Result<()> {
    let (mut cfg, base) = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            (ServiceConfig::from_toml_str(&text)?, base)
        }
        None => (ServiceConfig::default(), PathBuf::from(".")),
    };
    if let Some(b) = bind {
        cfg.bind = b;
    }
    if let Some(p) = port {
        cfg.port = p;
    }
    if let Some(a) = assembly {
        cfg.assembly = a;
    }
    if let Some(r) = tick_rate {
        cfg.tick_rate = r;
    }
    if sim && cfg.sim.is_none() {
        cfg.sim = Some(SimSettings::default());
    }
    let registry: Registry = cfg.registry(&base)?;
    let session = Session::new(registry, &cfg.session_config())?;
    let listener = tokio::net::TcpListener::bind((cfg.bind.as_str(), cfg.port))
        .await
        .with_context(|| format!("binding {}:{}", cfg.bind, cfg.port))?;
    eprintln!(
        "listening on {} ({} at {} Hz)",
        listener.local_addr()?,
        cfg.assembly,
        cfg.tick_rate
    );
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve(listener, Hub::new(session), shutdown).await?;
    eprintln!("stopped");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    assembly: &str,
    command: &str,
    ideal: bool,
    sim: SimConfig,
    mut initial: RobotState,
    direction: Option<Vec3>,
    env: Environment,
    out: &Option<PathBuf>,
) -> Result<()> {
    let cmd = parse_cmd(command)?;
    let mut source: Box<dyn FieldSource> = if ideal {
        match cmd {
            ActuationCommand::Roll(f) | ActuationCommand::Spin(f) => Box::new(RotatingUniform(f)),
            _ => bail!("--ideal needs a ROLL or SPIN command"),
        }
    } else {
        Box::new(AssemblyDriven::new(load_assembly(assembly)?, cmd)?)
    };
    let dir = match direction {
        Some(d) => d,
        None => {
            let (b, _) = source.sample(0.0, &initial.position)?;
            if b.magnitude() > 0.0 {
                b.0
            } else {
                Vec3::x()
            }
        }
    };
    if dir.norm() == 0.0 || !dir.norm().is_finite() {
        bail!("--direction must be nonzero");
    }
    initial.moment = dir.normalize() * initial.moment.norm();
    let trajectory = microrobot_sim::run(&sim, &initial, &env, source.as_mut())?;
    let mut w = output(out)?;
    trajectory.write_csv(&mut w)?;
    w.flush()?;
    if let Some(last) = trajectory.last() {
        let d = (last.position - initial.position) * 1e6;
        eprintln!(
            "{} samples, displacement ({:.3}, {:.3}, {:.3}) um",
            trajectory.samples.len(),
            d.x,
            d.y,
            d.z
        );
    }
    Ok(())
}

fn run_fieldmap(
    assembly: &str,
    currents: Option<Vec<f64>>,
    command: Option<String>,
    extent: f64,
    n: usize,
    out: &Option<PathBuf>,
) -> Result<()> {
    let a = load_assembly(assembly)?;
    let values = match (currents, command) {
        (Some(c), _) => c,
        (None, Some(line)) => {
            let cmd = parse_cmd(&line)?;
            let m = FieldPerAmpMatrix::from_assembly(&a)?;
            command_currents(&a, &m, &cmd, 0.0)?.values
        }
        (None, None) => vec![0.0; a.channel_count()],
    };
    if values.len() != a.channel_count() {
        bail!(
            "{} has {} channels, got {} currents",
            a.name,
            a.channel_count(),
            values.len()
        );
    }
    let map = field_map(&a, &values, extent, n)?;
    let mut w = output(out)?;
    map.write_csv(&mut w)?;
    w.flush()?;
    eprintln!(
        "center |B| = {:.6} mT, max relative deviation {:.3e}",
        map.center_magnitude * 1e3,
        map.uniformity
    );
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Serve {
            config,
            bind,
            port,
            assembly,
            tick_rate,
            sim,
        } => tokio::runtime::Runtime::new()?
            .block_on(run_serve(config, bind, port, assembly, tick_rate, sim)),
        Command::Simulate {
            assembly,
            command,
            ideal,
            duration,
            dt,
            stride,
            contact,
            start,
            direction,
            radius,
            moment,
            viscosity,
            noise,
            seed,
            out,
        } => {
            let mode = match contact {
                Contact::Surface => ContactMode::SurfaceRolling,
                Contact::Bulk => ContactMode::Bulk,
            };
            let mut initial = RobotState {
                position: vec3(&start) * 1e-6,
                moment: Vec3::x() * moment,
                radius,
                mode,
                time: 0.0,
            };
            if mode == ContactMode::SurfaceRolling {
                initial.position.z = radius;
            }
            let env = Environment {
                viscosity,
                noise_enabled: noise,
                seed,
                ..Environment::default()
            };
            let sim = SimConfig {
                dt,
                duration,
                stride,
            };
            let direction = direction.as_deref().map(vec3);
            run_simulate(
                &assembly, &command, ideal, sim, initial, direction, env, &out,
            )
        }
        Command::Fieldmap {
            assembly,
            currents,
            command,
            extent,
            n,
            out,
        } => run_fieldmap(&assembly, currents, command, extent, n, &out),
        Command::Assembly { name } => {
            let a = load_assembly(&name)?;
            print!("{}", a.to_toml_string()?);
            Ok(())
        }
    }
}
