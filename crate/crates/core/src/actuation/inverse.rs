use nalgebra::{DMatrix, DVector, Matrix3xX};

use crate::coil_model::{CoilAssembly, FieldVector};

use super::{ActuationError, CoilCurrents};

/// Largest least-squares residual (T) accepted as "reachable".
pub const UNREACHABLE_TOLERANCE: f64 = 1e-9;

/// Field at the workspace center per +1 A on each channel, plus the facing
/// pairs whose currents are tied together.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPerAmpMatrix {
    pub columns: Matrix3xX<f64>,
    /// `(lead, facing)` channel indices; facing carries the negated current.
    pub pairs: Vec<(usize, usize)>,
}

impl FieldPerAmpMatrix {
    pub fn from_assembly(assembly: &CoilAssembly) -> Result<Self, ActuationError> {
        let n = assembly.channel_count();
        let mut columns = Matrix3xX::zeros(n);
        for ch in 0..n {
            let b = assembly.channel_field(ch, 1.0, &assembly.workspace_center)?;
            columns.set_column(ch, &b.0);
        }
        Ok(FieldPerAmpMatrix {
            columns,
            pairs: assembly.pairs.iter().map(|p| (p.lead, p.facing)).collect(),
        })
    }

    pub fn channel_count(&self) -> usize {
        self.columns.ncols()
    }

    /// Predicted center field for `currents`.
    pub fn apply(&self, currents: &[f64]) -> FieldVector {
        FieldVector(&self.columns * nalgebra::DVector::from_column_slice(currents))
    }

    /// Free variables of the constrained problem as `(channel, coefficient)`
    /// lists: one per pair, one per unpaired channel.
    fn variables(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.channel_count();
        let mut paired = vec![false; n];
        let mut vars = Vec::new();
        for &(lead, facing) in &self.pairs {
            paired[lead] = true;
            paired[facing] = true;
            vars.push(vec![(lead, 1.0), (facing, -1.0)]);
        }
        vars.extend((0..n).filter(|&c| !paired[c]).map(|c| vec![(c, 1.0)]));
        vars
    }
}

/// Minimum-norm least-squares currents reproducing `desired_b` at the
/// workspace center with facing channels tied to opposite currents. If any
/// channel exceeds its limit the whole vector is scaled down uniformly, which
/// keeps the field direction.
pub fn field_to_currents(
    m: &FieldPerAmpMatrix,
    desired_b: &FieldVector,
    limits: &[f64],
) -> Result<CoilCurrents, ActuationError> {
    let n = m.channel_count();
    if limits.len() != n {
        return Err(ActuationError::Argument(format!(
            "expected {n} channel limits, got {}",
            limits.len()
        )));
    }
    if !desired_b.is_finite() {
        return Err(ActuationError::Argument(
            "desired field must be finite".into(),
        ));
    }
    if m.columns.iter().all(|&c| c == 0.0) {
        return Err(ActuationError::Argument(
            "field-per-amp matrix is all zero".into(),
        ));
    }
    if desired_b.magnitude() == 0.0 {
        return Ok(CoilCurrents::zeros(n));
    }

    let vars = m.variables();
    let mut reduced = DMatrix::zeros(3, vars.len());
    for (k, var) in vars.iter().enumerate() {
        for &(ch, coef) in var {
            for r in 0..3 {
                reduced[(r, k)] += coef * m.columns[(r, ch)];
            }
        }
    }
    let target = DVector::from_column_slice(desired_b.0.as_slice());
    let svd = reduced.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let solution = svd
        .solve(&target, sigma_max * 1e-12)
        .map_err(|e| ActuationError::Argument(e.to_string()))?;
    let residual = (&reduced * &solution - &target).norm();
    if residual > UNREACHABLE_TOLERANCE {
        return Err(ActuationError::Unreachable { residual });
    }

    let mut values = vec![0.0; n];
    for (var, u) in vars.iter().zip(solution.iter()) {
        for &(ch, coef) in var {
            values[ch] = coef * u;
        }
    }
    Ok(limit_uniformly(values, limits))
}

/// Scales `values` by a common factor so that no channel exceeds its limit.
pub(crate) fn limit_uniformly(mut values: Vec<f64>, limits: &[f64]) -> CoilCurrents {
    let ratio = values
        .iter()
        .zip(limits)
        .map(|(v, l)| v.abs() / l)
        .fold(0.0, f64::max);
    let mut saturated = vec![false; values.len()];
    if ratio > 1.0 {
        for v in &mut values {
            *v /= ratio;
        }
        for ((s, v), l) in saturated.iter_mut().zip(&values).zip(limits) {
            *s = v.abs() >= l * (1.0 - 1e-12);
        }
    }
    CoilCurrents { values, saturated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coil_model::{builtin_calibrated, AssemblyKind};
    use approx::assert_relative_eq;

    #[test]
    fn helmholtz_small_pair_one_amp() {
        let a = builtin_calibrated(AssemblyKind::Helmholtz);
        let m = FieldPerAmpMatrix::from_assembly(&a).unwrap();
        let i = field_to_currents(&m, &FieldVector::new(0.0, 0.0, 4e-3), &a.limits()).unwrap();
        let z = a.pairs[2];
        assert_relative_eq!(i.values[z.lead], 1.0, max_relative = 1e-9);
        assert_relative_eq!(i.values[z.facing], -1.0, max_relative = 1e-9);
        for ch in 0..4 {
            assert!(i.values[ch].abs() < 1e-9);
        }
        assert!(!i.any_saturated());
    }

    #[test]
    fn zero_target_zero_currents() {
        let a = builtin_calibrated(AssemblyKind::TwoD);
        let m = FieldPerAmpMatrix::from_assembly(&a).unwrap();
        let i = field_to_currents(&m, &FieldVector::zero(), &a.limits()).unwrap();
        assert_eq!(i, CoilCurrents::zeros(4));
    }

    #[test]
    fn planar_assembly_cannot_make_vertical_field() {
        let a = builtin_calibrated(AssemblyKind::TwoD);
        let m = FieldPerAmpMatrix::from_assembly(&a).unwrap();
        let err =
            field_to_currents(&m, &FieldVector::new(0.0, 0.0, 1e-3), &a.limits()).unwrap_err();
        match err {
            ActuationError::Unreachable { residual } => assert_relative_eq!(residual, 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn saturation_scales_uniformly() {
        let limited = limit_uniformly(vec![6.0, -6.0, 1.5, -1.5], &[3.0; 4]);
        assert_eq!(limited.values, vec![3.0, -3.0, 0.75, -0.75]);
        assert_eq!(limited.saturated, vec![true, true, false, false]);
    }
}
