use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Vec3;

use super::elements::{loop_field_raw, pole_field, solenoid_field_with};
use super::{
    Axis, CurrentLoop, FieldError, FieldGradient, FieldVector, PoleSpec, SolenoidSpec,
    DEFAULT_LOOP_SEGMENTS, DEFAULT_SOLENOID_STACK,
};

/// Central-difference step for [`CoilAssembly::gradient`], in metres.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyKind {
    /// Four in-plane solenoids in two facing pairs.
    TwoD,
    /// Three orthogonal coaxial ring pairs.
    Helmholtz,
    /// Six independently driven pole tips.
    Tweezer,
}

impl AssemblyKind {
    pub fn name(self) -> &'static str {
        match self {
            AssemblyKind::TwoD => "twod",
            AssemblyKind::Helmholtz => "helmholtz",
            AssemblyKind::Tweezer => "tweezer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "twod" | "2d" => Some(AssemblyKind::TwoD),
            "helmholtz" => Some(AssemblyKind::Helmholtz),
            "tweezer" => Some(AssemblyKind::Tweezer),
            _ => None,
        }
    }
}

impl fmt::Display for AssemblyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Loop(CurrentLoop),
    Solenoid(SolenoidSpec),
    Pole(PoleSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelElement {
    pub element: Element,
    /// +1 or -1: orientation of this element relative to the channel current.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    pub elements: Vec<ChannelElement>,
    /// Maximum drive current magnitude, A.
    pub limit: f64,
    /// Calibration multiplier applied to loop elements. Solenoids and poles
    /// carry their own calibrated coefficient.
    pub loop_gain: f64,
}

/// Two facing channels along a principal axis. A positive current on `lead`
/// produces field along `+axis` at the workspace center; `facing` is driven
/// with the negated current so both contributions add.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelPair {
    pub axis: Axis,
    pub lead: usize,
    pub facing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discretization {
    pub loop_segments: usize,
    pub solenoid_stack: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            loop_segments: DEFAULT_LOOP_SEGMENTS,
            solenoid_stack: DEFAULT_SOLENOID_STACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoilAssembly {
    pub name: String,
    pub kind: AssemblyKind,
    pub channels: Vec<Channel>,
    pub pairs: Vec<ChannelPair>,
    pub workspace_center: Vec3,
    pub discretization: Discretization,
}

impl CoilAssembly {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn limits(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.limit).collect()
    }

    pub fn pair_for_axis(&self, axis: Axis) -> Option<&ChannelPair> {
        self.pairs.iter().find(|p| p.axis == axis)
    }

    pub fn is_paired(&self) -> bool {
        !self.pairs.is_empty()
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.channels.is_empty() {
            return Err(FieldError::Config("assembly has no channels".into()));
        }
        for (idx, ch) in self.channels.iter().enumerate() {
            if ch.elements.is_empty() {
                return Err(FieldError::Config(format!("channel {idx} has no elements")));
            }
            if !(ch.limit > 0.0) || !ch.limit.is_finite() {
                return Err(FieldError::Config(format!(
                    "channel {idx} limit must be positive"
                )));
            }
            if !(ch.loop_gain > 0.0) || !ch.loop_gain.is_finite() {
                return Err(FieldError::Config(format!(
                    "channel {idx} loop gain must be positive"
                )));
            }
            for el in &ch.elements {
                if el.sign != 1.0 && el.sign != -1.0 {
                    return Err(FieldError::Config(format!(
                        "channel {idx} element sign must be +1 or -1"
                    )));
                }
                match &el.element {
                    Element::Loop(l) => l.validate()?,
                    Element::Solenoid(s) => s.validate()?,
                    Element::Pole(p) => p.validate()?,
                }
            }
        }
        let mut used = vec![false; self.channels.len()];
        for pair in &self.pairs {
            for idx in [pair.lead, pair.facing] {
                if idx >= self.channels.len() {
                    return Err(FieldError::Config(format!("pair references channel {idx}")));
                }
                if used[idx] {
                    return Err(FieldError::Config(format!(
                        "channel {idx} belongs to more than one pair"
                    )));
                }
                used[idx] = true;
            }
        }
        if self.kind == AssemblyKind::Tweezer && self.is_paired() {
            return Err(FieldError::Config(
                "tweezer assemblies drive poles individually and take no pairs".into(),
            ));
        }
        if self.kind == AssemblyKind::Tweezer
            && self
                .channels
                .iter()
                .any(|c| !matches!(c.elements[0].element, Element::Pole(_)))
        {
            return Err(FieldError::Config(
                "every tweezer channel must start with a pole element".into(),
            ));
        }
        if self.discretization.loop_segments < 3 || self.discretization.solenoid_stack == 0 {
            return Err(FieldError::Config("discretization too coarse".into()));
        }
        Ok(())
    }

    fn element_field(
        &self,
        channel: &Channel,
        el: &ChannelElement,
        current: f64,
        point: &Vec3,
    ) -> Result<FieldVector, FieldError> {
        let i = current * el.sign;
        match &el.element {
            Element::Loop(l) => loop_field_raw(
                &l.center,
                &l.axis,
                l.radius,
                i * channel.loop_gain * f64::from(l.turns),
                point,
                self.discretization.loop_segments,
            )
            .map(FieldVector),
            Element::Solenoid(s) => solenoid_field_with(
                s,
                i,
                point,
                self.discretization.solenoid_stack,
                self.discretization.loop_segments,
            ),
            Element::Pole(p) => pole_field(p, i, point),
        }
    }

    /// Field of one channel carrying `current`.
    pub fn channel_field(
        &self,
        channel: usize,
        current: f64,
        point: &Vec3,
    ) -> Result<FieldVector, FieldError> {
        let ch = self.channels.get(channel).ok_or_else(|| {
            FieldError::Argument(format!(
                "channel {channel} out of range for {} channels",
                self.channels.len()
            ))
        })?;
        let mut b = FieldVector::zero();
        for el in &ch.elements {
            b += self.element_field(ch, el, current, point)?;
        }
        Ok(b)
    }

    /// Superposed field of all channels.
    pub fn field(&self, currents: &[f64], point: &Vec3) -> Result<FieldVector, FieldError> {
        if currents.len() != self.channels.len() {
            return Err(FieldError::Argument(format!(
                "expected {} channel currents, got {}",
                self.channels.len(),
                currents.len()
            )));
        }
        let mut b = FieldVector::zero();
        for (idx, &i) in currents.iter().enumerate() {
            b += self.channel_field(idx, i, point)?;
        }
        Ok(b)
    }

    /// Central-difference Jacobian with [`DEFAULT_GRADIENT_STEP`].
    pub fn gradient(&self, currents: &[f64], point: &Vec3) -> Result<FieldGradient, FieldError> {
        self.gradient_with_step(currents, point, DEFAULT_GRADIENT_STEP)
    }

    pub fn gradient_with_step(
        &self,
        currents: &[f64],
        point: &Vec3,
        h: f64,
    ) -> Result<FieldGradient, FieldError> {
        if !(h > 0.0) {
            return Err(FieldError::Argument(
                "gradient step must be positive".into(),
            ));
        }
        let mut jac = nalgebra::Matrix3::zeros();
        for j in 0..3 {
            let mut dx = Vec3::zeros();
            dx[j] = h;
            let plus = self.field(currents, &(point + dx))?;
            let minus = self.field(currents, &(point - dx))?;
            jac.set_column(j, &((plus.0 - minus.0) / (2.0 * h)));
        }
        Ok(FieldGradient(jac))
    }

    fn scale_channel(&mut self, channel: usize, factor: f64) -> Result<(), FieldError> {
        let ch = &mut self.channels[channel];
        for el in &ch.elements {
            if let Element::Solenoid(s) = &el.element {
                if s.core_gain * factor < 1.0 {
                    return Err(FieldError::UnsatisfiableCalibration(format!(
                        "channel {channel} would need core gain {:.6} < 1",
                        s.core_gain * factor
                    )));
                }
            }
        }
        let mut has_loop = false;
        for el in &mut ch.elements {
            match &mut el.element {
                Element::Loop(_) => has_loop = true,
                Element::Solenoid(s) => s.core_gain *= factor,
                Element::Pole(p) => p.strength_per_amp *= factor,
            }
        }
        if has_loop {
            ch.loop_gain *= factor;
        }
        Ok(())
    }
}

fn check_calibration_inputs(measured_b: f64, at_current: f64) -> Result<(), FieldError> {
    if !(measured_b > 0.0) || !measured_b.is_finite() {
        return Err(FieldError::Argument(
            "measured field must be positive".into(),
        ));
    }
    if at_current == 0.0 || !at_current.is_finite() {
        return Err(FieldError::Argument(
            "calibration current must be nonzero".into(),
        ));
    }
    Ok(())
}

fn calibration_factor(model: f64, measured_b: f64) -> Result<f64, FieldError> {
    if !(model > 0.0) {
        return Err(FieldError::UnsatisfiableCalibration(
            "model predicts zero field at the calibration point".into(),
        ));
    }
    Ok(measured_b / model)
}

/// Rescales one channel so that driving it alone at `at_current` yields
/// `|B| = measured_b` at `at_point`.
pub fn calibrate_channel(
    assembly: &CoilAssembly,
    channel: usize,
    measured_b: f64,
    at_current: f64,
    at_point: &Vec3,
) -> Result<CoilAssembly, FieldError> {
    check_calibration_inputs(measured_b, at_current)?;
    let model = assembly
        .channel_field(channel, at_current, at_point)?
        .magnitude();
    let factor = calibration_factor(model, measured_b)?;
    let mut out = assembly.clone();
    out.scale_channel(channel, factor)?;
    Ok(out)
}

/// Rescales both channels of a facing pair by the same factor so that the
/// pair driven at `(+at_current, -at_current)` yields `|B| = measured_b`.
pub fn calibrate_pair(
    assembly: &CoilAssembly,
    axis: Axis,
    measured_b: f64,
    at_current: f64,
    at_point: &Vec3,
) -> Result<CoilAssembly, FieldError> {
    check_calibration_inputs(measured_b, at_current)?;
    let pair = *assembly
        .pair_for_axis(axis)
        .ok_or_else(|| FieldError::Argument(format!("assembly has no {axis} pair")))?;
    let mut currents = vec![0.0; assembly.channel_count()];
    currents[pair.lead] = at_current;
    currents[pair.facing] = -at_current;
    let model = assembly.field(&currents, at_point)?.magnitude();
    let factor = calibration_factor(model, measured_b)?;
    let mut out = assembly.clone();
    out.scale_channel(pair.lead, factor)?;
    out.scale_channel(pair.facing, factor)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{make_builtin_assembly, TwoDGeometry};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn length_mismatch_is_argument_error() {
        let a = make_builtin_assembly(AssemblyKind::TwoD);
        let err = a.field(&[1.0, 0.0], &Vec3::zeros()).unwrap_err();
        assert!(matches!(err, FieldError::Argument(_)));
    }

    #[test]
    fn zero_currents_give_zero_field_and_gradient() {
        for kind in [
            AssemblyKind::TwoD,
            AssemblyKind::Helmholtz,
            AssemblyKind::Tweezer,
        ] {
            let a = make_builtin_assembly(kind);
            let zeros = vec![0.0; a.channel_count()];
            let p = Vec3::new(1e-4, -2e-4, 5e-5);
            assert_eq!(a.field(&zeros, &p).unwrap().magnitude(), 0.0);
            assert_eq!(a.gradient(&zeros, &p).unwrap().0.norm(), 0.0);
        }
    }

    #[test]
    fn calibration_hits_target_and_is_idempotent() {
        let a = make_builtin_assembly(AssemblyKind::TwoD);
        let face = Vec3::new(-TwoDGeometry::default().face_distance, 0.0, 0.0);
        let once = calibrate_channel(&a, 0, 0.201, 2.0, &face).unwrap();
        let b = once.channel_field(0, 2.0, &face).unwrap().magnitude();
        assert_relative_eq!(b, 0.201, max_relative = 1e-9);
        let twice = calibrate_channel(&once, 0, 0.201, 2.0, &face).unwrap();
        let gain = |asm: &CoilAssembly| match asm.channels[0].elements[0].element {
            Element::Solenoid(s) => s.core_gain,
            _ => unreachable!(),
        };
        assert!(((gain(&twice) - gain(&once)) / gain(&once)).abs() < 1e-12);
    }

    #[test]
    fn calibration_rejects_zero_model() {
        let a = make_builtin_assembly(AssemblyKind::Helmholtz);
        // A lone loop's field never vanishes at the center, but zero current
        // is rejected up front.
        assert!(calibrate_channel(&a, 0, 1e-3, 0.0, &Vec3::zeros()).is_err());
        let tw = make_builtin_assembly(AssemblyKind::Tweezer);
        assert!(calibrate_pair(&tw, Axis::X, 1e-3, 1.0, &Vec3::zeros()).is_err());
    }

    #[test]
    fn gain_below_one_is_unsatisfiable() {
        let a = make_builtin_assembly(AssemblyKind::TwoD);
        let face = Vec3::new(-TwoDGeometry::default().face_distance, 0.0, 0.0);
        let err = calibrate_channel(&a, 0, 1e-6, 2.0, &face).unwrap_err();
        assert!(matches!(err, FieldError::UnsatisfiableCalibration(_)));
    }
}
