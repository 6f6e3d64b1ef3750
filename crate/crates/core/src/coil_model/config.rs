//! Declarative assembly definitions.
//!
//! Assemblies are stored as TOML. The top level names the assembly and its
//! kind; each `[[channel]]` lists its elements, and `[[pair]]` entries group
//! facing channels:
//!
//! ```toml
//! name = "helmholtz"
//! kind = "helmholtz"          # twod | helmholtz | tweezer
//! workspace_center = [0.0, 0.0, 0.0]
//! loop_segments = 360         # optional
//! solenoid_stack = 20         # optional
//!
//! [[channel]]
//! label = "x-"
//! limit = 3.0                 # A
//! loop_gain = 1.0             # optional
//!
//! [[channel.element]]
//! type = "loop"               # loop | solenoid | pole
//! sign = 1.0                  # optional
//! center = [-0.033, 0.0, 0.0]
//! axis = [1.0, 0.0, 0.0]
//! radius = 0.0366
//! turns = 368
//!
//! [[pair]]
//! axis = "x"
//! lead = 0
//! facing = 1
//! ```
//!
//! Solenoid elements take `face_center`, `axis`, `length`, `core_radius`,
//! `winding_radius`, `turns`, `core_gain`; pole elements take
//! `tip_position`, `tip_axis`, `strength_per_amp`. Axes are normalized on
//! load.

use serde::{Deserialize, Serialize};

use crate::Vec3;

use super::{
    AssemblyKind, Axis, Channel, ChannelElement, ChannelPair, CoilAssembly, CurrentLoop,
    Discretization, Element, FieldError, PoleSpec, SolenoidSpec, DEFAULT_LOOP_SEGMENTS,
    DEFAULT_SOLENOID_STACK,
};

fn default_sign() -> f64 {
    1.0
}

fn default_gain() -> f64 {
    1.0
}

fn default_segments() -> usize {
    DEFAULT_LOOP_SEGMENTS
}

fn default_stack() -> usize {
    DEFAULT_SOLENOID_STACK
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyConfig {
    pub name: String,
    pub kind: AssemblyKind,
    #[serde(default)]
    pub workspace_center: [f64; 3],
    #[serde(default = "default_segments")]
    pub loop_segments: usize,
    #[serde(default = "default_stack")]
    pub solenoid_stack: usize,
    #[serde(rename = "channel")]
    pub channels: Vec<ChannelConfig>,
    #[serde(rename = "pair", default)]
    pub pairs: Vec<PairConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub label: String,
    pub limit: f64,
    #[serde(default = "default_gain")]
    pub loop_gain: f64,
    #[serde(rename = "element")]
    pub elements: Vec<ElementConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ElementConfig {
    Loop {
        #[serde(default = "default_sign")]
        sign: f64,
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        turns: u32,
    },
    Solenoid {
        #[serde(default = "default_sign")]
        sign: f64,
        face_center: [f64; 3],
        axis: [f64; 3],
        length: f64,
        core_radius: f64,
        winding_radius: f64,
        turns: u32,
        #[serde(default = "default_gain")]
        core_gain: f64,
    },
    Pole {
        #[serde(default = "default_sign")]
        sign: f64,
        tip_position: [f64; 3],
        tip_axis: [f64; 3],
        strength_per_amp: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub axis: Axis,
    pub lead: usize,
    pub facing: usize,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    // adding 0.0 folds negative zeros
    [v.x + 0.0, v.y + 0.0, v.z + 0.0]
}

fn unit(a: [f64; 3], what: &str) -> Result<Vec3, FieldError> {
    let v = vec3(a);
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(FieldError::Config(format!(
            "{what} axis must be a nonzero vector"
        )));
    }
    Ok(v / n)
}

impl ElementConfig {
    fn to_element(&self) -> Result<ChannelElement, FieldError> {
        let (element, sign) = match *self {
            ElementConfig::Loop {
                sign,
                center,
                axis,
                radius,
                turns,
            } => (
                Element::Loop(CurrentLoop {
                    center: vec3(center),
                    axis: unit(axis, "loop")?,
                    radius,
                    turns,
                }),
                sign,
            ),
            ElementConfig::Solenoid {
                sign,
                face_center,
                axis,
                length,
                core_radius,
                winding_radius,
                turns,
                core_gain,
            } => (
                Element::Solenoid(SolenoidSpec {
                    face_center: vec3(face_center),
                    axis: unit(axis, "solenoid")?,
                    length,
                    core_radius,
                    winding_radius,
                    turns,
                    core_gain,
                }),
                sign,
            ),
            ElementConfig::Pole {
                sign,
                tip_position,
                tip_axis,
                strength_per_amp,
            } => (
                Element::Pole(PoleSpec {
                    tip_position: vec3(tip_position),
                    tip_axis: unit(tip_axis, "pole")?,
                    strength_per_amp,
                }),
                sign,
            ),
        };
        Ok(ChannelElement { element, sign })
    }

    fn from_element(el: &ChannelElement) -> Self {
        match el.element {
            Element::Loop(l) => ElementConfig::Loop {
                sign: el.sign,
                center: arr(&l.center),
                axis: arr(&l.axis),
                radius: l.radius,
                turns: l.turns,
            },
            Element::Solenoid(s) => ElementConfig::Solenoid {
                sign: el.sign,
                face_center: arr(&s.face_center),
                axis: arr(&s.axis),
                length: s.length,
                core_radius: s.core_radius,
                winding_radius: s.winding_radius,
                turns: s.turns,
                core_gain: s.core_gain,
            },
            Element::Pole(p) => ElementConfig::Pole {
                sign: el.sign,
                tip_position: arr(&p.tip_position),
                tip_axis: arr(&p.tip_axis),
                strength_per_amp: p.strength_per_amp,
            },
        }
    }
}

impl AssemblyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, FieldError> {
        toml::from_str(text).map_err(|e| FieldError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String, FieldError> {
        toml::to_string(self).map_err(|e| FieldError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<CoilAssembly, FieldError> {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                Ok(Channel {
                    label: c.label.clone(),
                    elements: c
                        .elements
                        .iter()
                        .map(ElementConfig::to_element)
                        .collect::<Result<_, FieldError>>()?,
                    limit: c.limit,
                    loop_gain: c.loop_gain,
                })
            })
            .collect::<Result<Vec<_>, FieldError>>()?;
        let assembly = CoilAssembly {
            name: self.name.clone(),
            kind: self.kind,
            channels,
            pairs: self
                .pairs
                .iter()
                .map(|p| ChannelPair {
                    axis: p.axis,
                    lead: p.lead,
                    facing: p.facing,
                })
                .collect(),
            workspace_center: vec3(self.workspace_center),
            discretization: Discretization {
                loop_segments: self.loop_segments,
                solenoid_stack: self.solenoid_stack,
            },
        };
        assembly.validate()?;
        Ok(assembly)
    }

    pub fn from_assembly(a: &CoilAssembly) -> Self {
        AssemblyConfig {
            name: a.name.clone(),
            kind: a.kind,
            workspace_center: arr(&a.workspace_center),
            loop_segments: a.discretization.loop_segments,
            solenoid_stack: a.discretization.solenoid_stack,
            channels: a
                .channels
                .iter()
                .map(|c| ChannelConfig {
                    label: c.label.clone(),
                    limit: c.limit,
                    loop_gain: c.loop_gain,
                    elements: c.elements.iter().map(ElementConfig::from_element).collect(),
                })
                .collect(),
            pairs: a
                .pairs
                .iter()
                .map(|p| PairConfig {
                    axis: p.axis,
                    lead: p.lead,
                    facing: p.facing,
                })
                .collect(),
        }
    }
}

impl CoilAssembly {
    pub fn from_toml_str(text: &str) -> Result<Self, FieldError> {
        AssemblyConfig::from_toml_str(text)?.build()
    }

    pub fn to_toml_string(&self) -> Result<String, FieldError> {
        AssemblyConfig::from_assembly(self).to_toml_string()
    }

    /// One of the bundled assembly files (reference geometry with reference
    /// calibration).
    pub fn bundled(kind: AssemblyKind) -> Result<Self, FieldError> {
        let text = match kind {
            AssemblyKind::TwoD => include_str!("../../assemblies/twod.toml"),
            AssemblyKind::Helmholtz => include_str!("../../assemblies/helmholtz.toml"),
            AssemblyKind::Tweezer => include_str!("../../assemblies/tweezer.toml"),
        };
        Self::from_toml_str(text)
    }
}
