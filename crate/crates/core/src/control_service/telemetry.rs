use std::fmt;

use crate::{Num, Vec3};

/// One control-loop tick as streamed to subscribers:
///
/// `TLM t=<s> mode=<verb> i=<a1,a2,...> b=<bx,by,bz> [pos=<x,y,z> mdir=<x,y,z>]`
///
/// `b` is the predicted workspace-center field in mT, `pos` the simulated
/// robot position in µm.
#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry {
    pub t: f64,
    pub mode: String,
    pub currents: Vec<f64>,
    pub b_mt: Vec3,
    pub robot: Option<RobotTelemetry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotTelemetry {
    pub position_um: Vec3,
    pub moment_direction: Vec3,
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| Num(*v).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn vec3(v: &Vec3) -> String {
    join(v.as_slice())
}

impl fmt::Display for Telemetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TLM t={} mode={} i={} b={}",
            Num(self.t),
            self.mode,
            join(&self.currents),
            vec3(&self.b_mt)
        )?;
        if let Some(r) = &self.robot {
            write!(
                f,
                " pos={} mdir={}",
                vec3(&r.position_um),
                vec3(&r.moment_direction)
            )?;
        }
        Ok(())
    }
}

impl Telemetry {
    pub fn parse(line: &str) -> Option<Telemetry> {
        let mut tokens = line.split_ascii_whitespace();
        if tokens.next()? != "TLM" {
            return None;
        }
        let numbers = |s: &str| -> Option<Vec<f64>> {
            if s.is_empty() {
                return Some(Vec::new());
            }
            s.split(',').map(|x| x.parse().ok()).collect()
        };
        let triple = |s: &str| -> Option<Vec3> {
            let v = numbers(s)?;
            (v.len() == 3).then(|| Vec3::new(v[0], v[1], v[2]))
        };
        let (mut t, mut mode, mut currents, mut b, mut pos, mut mdir) =
            (None, None, None, None, None, None);
        for tok in tokens {
            let (k, v) = tok.split_once('=')?;
            match k {
                "t" => t = Some(v.parse().ok()?),
                "mode" => mode = Some(v.to_string()),
                "i" => currents = Some(numbers(v)?),
                "b" => b = Some(triple(v)?),
                "pos" => pos = Some(triple(v)?),
                "mdir" => mdir = Some(triple(v)?),
                _ => return None,
            }
        }
        let robot = match (pos, mdir) {
            (Some(position_um), Some(moment_direction)) => Some(RobotTelemetry {
                position_um,
                moment_direction,
            }),
            (None, None) => None,
            _ => return None,
        };
        Some(Telemetry {
            t: t?,
            mode: mode?,
            currents: currents?,
            b_mt: b?,
            robot,
        })
    }
}
