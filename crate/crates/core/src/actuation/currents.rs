use crate::coil_model::{AssemblyKind, Axis, CoilAssembly, Element};
use crate::Vec3;

use super::{field_to_currents, ActuationCommand, ActuationError, CoilCurrents, FieldPerAmpMatrix};

const TIE_TOLERANCE: f64 = 1e-12;

fn unit_direction(direction: &Vec3) -> Result<Vec3, ActuationError> {
    let n = direction.norm();
    if !(n >= 1e-12) || !n.is_finite() {
        return Err(ActuationError::Argument(
            "direction must be a nonzero finite vector".into(),
        ));
    }
    Ok(direction / n)
}

fn check_fraction(strength: f64) -> Result<(), ActuationError> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(ActuationError::Argument(format!(
            "strength fraction {strength} outside [0, 1]"
        )));
    }
    Ok(())
}

fn require_paired(assembly: &CoilAssembly, what: &str) -> Result<(), ActuationError> {
    if assembly.kind == AssemblyKind::Tweezer || !assembly.is_paired() {
        return Err(ActuationError::ModeMismatch(format!(
            "{what} needs a paired coil assembly, {} has none",
            assembly.name
        )));
    }
    Ok(())
}

/// Constant field along `direction`: each pair is driven in proportion to the
/// direction's component on its axis, the facing coil at the opposite sign.
/// Components along axes the assembly lacks are dropped.
pub fn orient_currents(
    assembly: &CoilAssembly,
    direction: &Vec3,
    strength_fraction: f64,
) -> Result<CoilCurrents, ActuationError> {
    require_paired(assembly, "orient")?;
    let d = unit_direction(direction)?;
    check_fraction(strength_fraction)?;
    let mut currents = CoilCurrents::zeros(assembly.channel_count());
    for pair in &assembly.pairs {
        let limit = assembly.channels[pair.lead]
            .limit
            .min(assembly.channels[pair.facing].limit);
        let i = strength_fraction * limit * d.dot(&pair.axis.unit());
        currents.values[pair.lead] = i;
        currents.values[pair.facing] = -i;
    }
    Ok(currents)
}

/// Square-wave polarity flip of one pair: `+axis` for the first half of each
/// period, `-axis` for the second.
pub fn vibrate_currents(
    assembly: &CoilAssembly,
    axis: Axis,
    t: f64,
    hz: f64,
    strength_fraction: f64,
) -> Result<CoilCurrents, ActuationError> {
    require_paired(assembly, "vibrate")?;
    if !(hz > 0.0) || !hz.is_finite() {
        return Err(ActuationError::Argument(
            "vibrate frequency must be > 0".into(),
        ));
    }
    if assembly.pair_for_axis(axis).is_none() {
        return Err(ActuationError::Argument(format!(
            "assembly {} has no {axis} pair",
            assembly.name
        )));
    }
    let phase = (t * hz).rem_euclid(1.0);
    let sign = if phase < 0.5 { 1.0 } else { -1.0 };
    orient_currents(assembly, &(axis.unit() * sign), strength_fraction)
}

/// Index of the pole whose pull direction best matches `direction`. Within
/// [`TIE_TOLERANCE`] of the best score the lowest channel wins.
pub fn select_pole(assembly: &CoilAssembly, direction: &Vec3) -> Result<usize, ActuationError> {
    if assembly.kind != AssemblyKind::Tweezer {
        return Err(ActuationError::ModeMismatch(format!(
            "tweezer mode needs the tweezer assembly, {} selected",
            assembly.name
        )));
    }
    let d = unit_direction(direction)?;
    let scores: Vec<f64> = assembly
        .channels
        .iter()
        .map(|ch| match &ch.elements[0].element {
            Element::Pole(p) => p.pull_direction().dot(&d),
            _ => f64::NEG_INFINITY,
        })
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(scores
        .iter()
        .position(|&s| s >= best - TIE_TOLERANCE)
        .expect("at least one channel"))
}

/// Drives only the pole selected by [`select_pole`].
pub fn tweezer_currents(
    assembly: &CoilAssembly,
    direction: &Vec3,
    strength_fraction: f64,
) -> Result<CoilCurrents, ActuationError> {
    let pole = select_pole(assembly, direction)?;
    check_fraction(strength_fraction)?;
    let mut currents = CoilCurrents::zeros(assembly.channel_count());
    currents.values[pole] = strength_fraction * assembly.channels[pole].limit;
    Ok(currents)
}

/// Currents for `cmd` at time `t`.
pub fn command_currents(
    assembly: &CoilAssembly,
    m: &FieldPerAmpMatrix,
    cmd: &ActuationCommand,
    t: f64,
) -> Result<CoilCurrents, ActuationError> {
    cmd.validate()?;
    if m.channel_count() != assembly.channel_count() {
        return Err(ActuationError::Argument(
            "field-per-amp matrix does not match the assembly".into(),
        ));
    }
    match cmd {
        ActuationCommand::Stop => Ok(CoilCurrents::zeros(assembly.channel_count())),
        ActuationCommand::Orient {
            direction,
            strength,
        } => orient_currents(assembly, direction, *strength),
        ActuationCommand::Roll(field) | ActuationCommand::Spin(field) => {
            require_paired(assembly, "rotating field")?;
            field_to_currents(m, &field.at(t), &assembly.limits())
        }
        ActuationCommand::Vibrate { axis, hz, strength } => {
            vibrate_currents(assembly, *axis, t, *hz, *strength)
        }
        ActuationCommand::Tweezer {
            direction,
            strength,
        } => tweezer_currents(assembly, direction, *strength),
    }
}
