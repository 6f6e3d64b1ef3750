use crate::coil_model::FieldVector;
use crate::Vec3;

/// Rotating uniform field with constant magnitude.
///
/// `gamma` is the azimuthal angle measured from the z axis and `alpha` the
/// polar angle measured from the y axis. The field at time `t` is
///
/// ```text
/// Bx = A ( cosγ cosα cos ωt + sinα sin ωt)
/// By = A (-cosγ sinα cos ωt + cosα sin ωt)
/// Bz = A   sinγ      cos ωt
/// ```
///
/// which rotates in the plane normal to [`rotation_axis`] with `|B| = A`.
pub fn rolling_waveform(t: f64, a: f64, gamma: f64, alpha: f64, omega: f64) -> FieldVector {
    let (sg, cg) = gamma.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    let (s, c) = (omega * t).sin_cos();
    FieldVector::new(
        a * (cg * ca * c + sa * s),
        a * (-cg * sa * c + ca * s),
        a * sg * c,
    )
}

/// Unit normal of the rotation plane. The field turns right-handed about it:
/// `B(0) × B(π/2ω) = A² n`.
pub fn rotation_axis(gamma: f64, alpha: f64) -> Vec3 {
    let (sg, cg) = gamma.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    Vec3::new(-sg * ca, sg * sa, cg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn default_roll_starts_vertical() {
        let b = rolling_waveform(0.0, 2e-3, FRAC_PI_2, 0.0, 3.0);
        assert!((b.0 - Vec3::new(0.0, 0.0, 2e-3)).norm() < 1e-18);
    }

    #[test]
    fn quarter_period_cross_product_matches_axis() {
        for &(g, a) in &[
            (0.3, 1.1),
            (FRAC_PI_2, 0.0),
            (2.0, -0.7),
            (FRAC_PI_4, FRAC_PI_2),
        ] {
            let omega = 2.0 * PI;
            let b0 = rolling_waveform(0.0, 1.0, g, a, omega).0;
            let b1 = rolling_waveform(0.25, 1.0, g, a, omega).0;
            let n = rotation_axis(g, a);
            assert!((b0.cross(&b1) - n).norm() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-15);
        }
    }
}
