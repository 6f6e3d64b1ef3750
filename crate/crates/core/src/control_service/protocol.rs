//! Line protocol spoken by remote clients.
//!
//! Every line is `VERB KEY=VALUE ...`, UTF-8, at most [`MAX_LINE_BYTES`]
//! bytes before the terminating `\n`. Verbs and keys are case-insensitive.
//! Angles travel in degrees and field magnitudes in millitesla.
//!
//! | verb | keys (defaults) |
//! |---|---|
//! | `ORIENT` | `THETA` in-plane angle from +x, `PHI=0` elevation, `S=1` |
//! | `ROLL` | `A` mT, `F` Hz, `ALPHA=0`, `GAMMA=90` |
//! | `SPIN` | `A` mT, `F` Hz, `ALPHA=0`, `GAMMA=0` |
//! | `VIBRATE` | `AXIS` x/y/z, `HZ`, `S=1` |
//! | `TWEEZER` | `STATE=on` on/off, `THETA=0`, `PHI=0`, `S=1` |
//! | `STOP` | |
//! | `SELECT_ASSEMBLY` | `NAME` |
//! | `AXIS` | `LX=0`, `LY=0`, `RX=0`, `RY=0`, each in [-1, 1] |
//! | `SUBSCRIBE` | `DIV=1` telemetry every DIV ticks, 0 unsubscribes |
//! | `PING` | |
//!
//! Replies are `OK`, `OK PONG` or `ERR <code>[ <detail>]`.

use std::fmt;
use std::str::FromStr;

use crate::coil_model::Axis;
use crate::{Num, Vec3};

pub const MAX_LINE_BYTES: usize = 1024;
pub const MAX_FIELD_MT: f64 = 1000.0;
pub const MAX_FREQUENCY_HZ: f64 = 1000.0;
pub const MAX_ANGLE_DEG: f64 = 720.0;
pub const MAX_SUBSCRIBE_DIV: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    UnknownVerb,
    BadArg,
    Range,
    UnknownKey,
    MissingArg,
    TooLong,
    BadEncoding,
    Empty,
    ModeMismatch,
    Busy,
    Unreachable,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownVerb => "unknown-verb",
            ErrorCode::BadArg => "bad-arg",
            ErrorCode::Range => "range",
            ErrorCode::UnknownKey => "unknown-key",
            ErrorCode::MissingArg => "missing-arg",
            ErrorCode::TooLong => "too-long",
            ErrorCode::BadEncoding => "bad-encoding",
            ErrorCode::Empty => "empty",
            ErrorCode::ModeMismatch => "mode-mismatch",
            ErrorCode::Busy => "busy",
            ErrorCode::Unreachable => "unreachable",
            ErrorCode::Internal => "internal",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `ERR` reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub detail: Option<String>,
}

impl ProtocolError {
    pub fn new(code: ErrorCode) -> Self {
        ProtocolError { code, detail: None }
    }

    pub fn with(code: ErrorCode, detail: impl Into<String>) -> Self {
        ProtocolError {
            code,
            detail: Some(detail.into()),
        }
    }
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ERR {}", self.code)?;
        if let Some(d) = &self.detail {
            // replies stay single-line
            write!(f, " {}", d.replace(['\n', '\r'], " "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ProtocolError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TweezerState {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Orient {
        theta_deg: f64,
        phi_deg: f64,
        strength: f64,
    },
    Roll {
        a_mt: f64,
        f_hz: f64,
        alpha_deg: f64,
        gamma_deg: f64,
    },
    Spin {
        a_mt: f64,
        f_hz: f64,
        alpha_deg: f64,
        gamma_deg: f64,
    },
    Vibrate {
        axis: Axis,
        hz: f64,
        strength: f64,
    },
    Tweezer {
        state: TweezerState,
        theta_deg: f64,
        phi_deg: f64,
        strength: f64,
    },
    Stop,
    SelectAssembly {
        name: String,
    },
    Axis {
        lx: f64,
        ly: f64,
        rx: f64,
        ry: f64,
    },
    Subscribe {
        div: u32,
    },
    Ping,
}

impl Message {
    pub fn verb(&self) -> &'static str {
        match self {
            Message::Orient { .. } => "ORIENT",
            Message::Roll { .. } => "ROLL",
            Message::Spin { .. } => "SPIN",
            Message::Vibrate { .. } => "VIBRATE",
            Message::Tweezer { .. } => "TWEEZER",
            Message::Stop => "STOP",
            Message::SelectAssembly { .. } => "SELECT_ASSEMBLY",
            Message::Axis { .. } => "AXIS",
            Message::Subscribe { .. } => "SUBSCRIBE",
            Message::Ping => "PING",
        }
    }

    /// Whether the verb changes actuation and so needs control ownership.
    pub fn needs_control(&self) -> bool {
        !matches!(self, Message::Subscribe { .. } | Message::Ping)
    }
}

/// Unit vector from an in-plane angle from +x and an elevation, degrees.
pub fn direction_from_degrees(theta_deg: f64, phi_deg: f64) -> Vec3 {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    Vec3::new(p.cos() * t.cos(), p.cos() * t.sin(), p.sin())
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())?;
        match self {
            Message::Orient {
                theta_deg,
                phi_deg,
                strength,
            } => write!(
                f,
                " THETA={} PHI={} S={}",
                Num(*theta_deg),
                Num(*phi_deg),
                Num(*strength)
            ),
            Message::Roll {
                a_mt,
                f_hz,
                alpha_deg,
                gamma_deg,
            }
            | Message::Spin {
                a_mt,
                f_hz,
                alpha_deg,
                gamma_deg,
            } => write!(
                f,
                " A={} F={} ALPHA={} GAMMA={}",
                Num(*a_mt),
                Num(*f_hz),
                Num(*alpha_deg),
                Num(*gamma_deg)
            ),
            Message::Vibrate { axis, hz, strength } => {
                write!(f, " AXIS={axis} HZ={} S={}", Num(*hz), Num(*strength))
            }
            Message::Tweezer {
                state,
                theta_deg,
                phi_deg,
                strength,
            } => {
                let s = match state {
                    TweezerState::On => "on",
                    TweezerState::Off => "off",
                };
                write!(
                    f,
                    " STATE={s} THETA={} PHI={} S={}",
                    Num(*theta_deg),
                    Num(*phi_deg),
                    Num(*strength)
                )
            }
            Message::SelectAssembly { name } => write!(f, " NAME={name}"),
            Message::Axis { lx, ly, rx, ry } => write!(
                f,
                " LX={} LY={} RX={} RY={}",
                Num(*lx),
                Num(*ly),
                Num(*rx),
                Num(*ry)
            ),
            Message::Subscribe { div } => write!(f, " DIV={div}"),
            Message::Stop | Message::Ping => Ok(()),
        }
    }
}

/// `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`
fn is_decimal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

struct Args<'a> {
    pairs: Vec<(String, &'a str)>,
    used: Vec<bool>,
}

impl<'a> Args<'a> {
    fn parse(tokens: &[&'a str]) -> Result<Self, ProtocolError> {
        let mut pairs: Vec<(String, &'a str)> = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(ProtocolError::with(ErrorCode::BadArg, *tok));
            };
            let key = k.to_ascii_uppercase();
            if key.is_empty() || v.is_empty() {
                return Err(ProtocolError::with(ErrorCode::BadArg, *tok));
            }
            if pairs.iter().any(|(p, _)| *p == key) {
                return Err(ProtocolError::with(
                    ErrorCode::BadArg,
                    format!("{key} repeated"),
                ));
            }
            pairs.push((key, v));
        }
        let used = vec![false; pairs.len()];
        Ok(Args { pairs, used })
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let i = self.pairs.iter().position(|(k, _)| k == key)?;
        self.used[i] = true;
        Some(self.pairs[i].1)
    }

    fn number(&mut self, key: &str, lo: f64, hi: f64) -> Result<Option<f64>, ProtocolError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        if !is_decimal(v) {
            return Err(ProtocolError::with(ErrorCode::BadArg, key));
        }
        let x = f64::from_str(v).map_err(|_| ProtocolError::with(ErrorCode::BadArg, key))?;
        if !x.is_finite() || x < lo || x > hi {
            return Err(ProtocolError::with(ErrorCode::Range, key));
        }
        Ok(Some(x))
    }

    fn required(&mut self, key: &str, lo: f64, hi: f64) -> Result<f64, ProtocolError> {
        self.number(key, lo, hi)?
            .ok_or_else(|| ProtocolError::with(ErrorCode::MissingArg, key))
    }

    fn optional(
        &mut self,
        key: &str,
        lo: f64,
        hi: f64,
        default: f64,
    ) -> Result<f64, ProtocolError> {
        Ok(self.number(key, lo, hi)?.unwrap_or(default))
    }

    fn finish(self) -> Result<(), ProtocolError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => Err(ProtocolError::with(
                ErrorCode::UnknownKey,
                self.pairs[i].0.clone(),
            )),
            None => Ok(()),
        }
    }
}

fn rotating(args: &mut Args, gamma_default: f64) -> Result<[f64; 4], ProtocolError> {
    Ok([
        args.required("A", 0.0, MAX_FIELD_MT)?,
        args.required("F", -MAX_FREQUENCY_HZ, MAX_FREQUENCY_HZ)?,
        args.optional("ALPHA", -MAX_ANGLE_DEG, MAX_ANGLE_DEG, 0.0)?,
        args.optional("GAMMA", -MAX_ANGLE_DEG, MAX_ANGLE_DEG, gamma_default)?,
    ])
}

/// Parses one line of text, without its terminator.
pub fn parse_command(line: &str) -> Result<Message, ProtocolError> {
    if line.len() > MAX_LINE_BYTES {
        return Err(ProtocolError::new(ErrorCode::TooLong));
    }
    let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
    let Some((verb, rest)) = tokens.split_first() else {
        return Err(ProtocolError::new(ErrorCode::Empty));
    };
    let verb = verb.to_ascii_uppercase();
    let known = [
        "ORIENT",
        "ROLL",
        "SPIN",
        "VIBRATE",
        "TWEEZER",
        "STOP",
        "SELECT_ASSEMBLY",
        "AXIS",
        "SUBSCRIBE",
        "PING",
    ];
    if !known.contains(&verb.as_str()) {
        let mut shown: String = verb.chars().take(32).collect();
        shown.retain(|c| !c.is_control());
        return Err(ProtocolError::with(ErrorCode::UnknownVerb, shown));
    }
    let mut args = Args::parse(rest)?;
    let msg = match verb.as_str() {
        "ORIENT" => Message::Orient {
            theta_deg: args.required("THETA", -MAX_ANGLE_DEG, MAX_ANGLE_DEG)?,
            phi_deg: args.optional("PHI", -90.0, 90.0, 0.0)?,
            strength: args.optional("S", 0.0, 1.0, 1.0)?,
        },
        "ROLL" => {
            let [a_mt, f_hz, alpha_deg, gamma_deg] = rotating(&mut args, 90.0)?;
            Message::Roll {
                a_mt,
                f_hz,
                alpha_deg,
                gamma_deg,
            }
        }
        "SPIN" => {
            let [a_mt, f_hz, alpha_deg, gamma_deg] = rotating(&mut args, 0.0)?;
            Message::Spin {
                a_mt,
                f_hz,
                alpha_deg,
                gamma_deg,
            }
        }
        "VIBRATE" => {
            let axis = match args.raw("AXIS") {
                None => return Err(ProtocolError::with(ErrorCode::MissingArg, "AXIS")),
                Some(v) => {
                    Axis::parse(v).ok_or_else(|| ProtocolError::with(ErrorCode::BadArg, "AXIS"))?
                }
            };
            let hz = args.required("HZ", 0.0, MAX_FREQUENCY_HZ)?;
            if hz == 0.0 {
                return Err(ProtocolError::with(ErrorCode::Range, "HZ"));
            }
            Message::Vibrate {
                axis,
                hz,
                strength: args.optional("S", 0.0, 1.0, 1.0)?,
            }
        }
        "TWEEZER" => {
            let state = match args.raw("STATE").map(|s| s.to_ascii_lowercase()) {
                None => TweezerState::On,
                Some(s) if s == "on" => TweezerState::On,
                Some(s) if s == "off" => TweezerState::Off,
                Some(_) => return Err(ProtocolError::with(ErrorCode::BadArg, "STATE")),
            };
            Message::Tweezer {
                state,
                theta_deg: args.optional("THETA", -MAX_ANGLE_DEG, MAX_ANGLE_DEG, 0.0)?,
                phi_deg: args.optional("PHI", -90.0, 90.0, 0.0)?,
                strength: args.optional("S", 0.0, 1.0, 1.0)?,
            }
        }
        "STOP" => Message::Stop,
        "SELECT_ASSEMBLY" => {
            let name = args
                .raw("NAME")
                .ok_or_else(|| ProtocolError::with(ErrorCode::MissingArg, "NAME"))?;
            let valid = name.len() <= 64
                && name
                    .bytes()
                    .all(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.');
            if !valid {
                return Err(ProtocolError::with(ErrorCode::BadArg, "NAME"));
            }
            Message::SelectAssembly {
                name: name.to_ascii_lowercase(),
            }
        }
        "AXIS" => Message::Axis {
            lx: args.optional("LX", -1.0, 1.0, 0.0)?,
            ly: args.optional("LY", -1.0, 1.0, 0.0)?,
            rx: args.optional("RX", -1.0, 1.0, 0.0)?,
            ry: args.optional("RY", -1.0, 1.0, 0.0)?,
        },
        "SUBSCRIBE" => {
            let div = args.optional("DIV", 0.0, MAX_SUBSCRIBE_DIV as f64, 1.0)?;
            if div.fract() != 0.0 {
                return Err(ProtocolError::with(ErrorCode::BadArg, "DIV"));
            }
            Message::Subscribe { div: div as u32 }
        }
        "PING" => Message::Ping,
        _ => unreachable!("verb checked above"),
    };
    args.finish()?;
    Ok(msg)
}

/// Parses raw bytes as received, including the length and encoding checks.
/// A trailing `\n` or `\r\n` is ignored.
pub fn parse_line(bytes: &[u8]) -> Result<Message, ProtocolError> {
    let mut b = bytes;
    if let Some(stripped) = b.strip_suffix(b"\n") {
        b = stripped;
    }
    if let Some(stripped) = b.strip_suffix(b"\r") {
        b = stripped;
    }
    if b.len() > MAX_LINE_BYTES {
        return Err(ProtocolError::new(ErrorCode::TooLong));
    }
    let text = std::str::from_utf8(b).map_err(|_| ProtocolError::new(ErrorCode::BadEncoding))?;
    parse_command(text)
}
