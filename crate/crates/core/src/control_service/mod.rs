//! Fixed-rate control loop and the remote line protocol.
//!
//! [`Session`] owns the active assembly and command and turns each tick into
//! drive signals and a telemetry record. [`Hub`] puts the single-controller,
//! many-subscriber rules on top, and [`serve`] exposes it over TCP.

mod config;
mod hub;
pub mod protocol;
mod server;
mod session;
mod telemetry;

pub use config::{ServiceConfig, DEFAULT_PORT};
pub use hub::{ClientId, Delivery, Hub};
pub use protocol::{parse_command, parse_line, ErrorCode, Message, ProtocolError};
pub use server::{read_bounded_line, serve};
pub use session::{
    actuation_error, message_command, Registry, Session, SessionConfig, SessionError, SimSettings,
    TickOutput, DEFAULT_TICK_RATE, STICK_DEADZONE,
};
pub use telemetry::{RobotTelemetry, Telemetry};
