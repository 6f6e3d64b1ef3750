use std::f64::consts::PI;

use crate::{Vec3, MU_0};

use super::{point_array, FieldError, FieldVector};

/// Straight segments per loop unless an assembly overrides it.
pub const DEFAULT_LOOP_SEGMENTS: usize = 360;
/// Loops used to represent a solenoid winding off its axis.
pub const DEFAULT_SOLENOID_STACK: usize = 20;
/// Closer than this to a loop wire the field is reported as singular.
pub const WIRE_SINGULAR_DISTANCE: f64 = 1e-9;
/// Closer than this to a pole tip the point-source model is rejected.
pub const POLE_SINGULAR_RADIUS: f64 = 1e-5;

const AXIS_TOLERANCE: f64 = 1e-9;
// Points this close to a solenoid axis use the closed-form on-axis field.
const ON_AXIS_RADIUS: f64 = 1e-12;

fn check_axis(axis: &Vec3, what: &str) -> Result<(), FieldError> {
    if (axis.norm() - 1.0).abs() > AXIS_TOLERANCE || !axis.iter().all(|c| c.is_finite()) {
        return Err(FieldError::Argument(format!(
            "{what} axis must have unit norm, got {:.12}",
            axis.norm()
        )));
    }
    Ok(())
}

/// Circular current loop. Positive current circulates right-handed about
/// `axis`, so the field at the center points along `+axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentLoop {
    pub center: Vec3,
    pub axis: Vec3,
    pub radius: f64,
    pub turns: u32,
}

impl CurrentLoop {
    pub fn new(center: Vec3, axis: Vec3, radius: f64, turns: u32) -> Result<Self, FieldError> {
        let l = CurrentLoop {
            center,
            axis,
            radius,
            turns,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        check_axis(&self.axis, "loop")?;
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(FieldError::Argument("loop radius must be positive".into()));
        }
        if self.turns == 0 {
            return Err(FieldError::Argument("loop turns must be >= 1".into()));
        }
        Ok(())
    }
}

/// Finite solenoid wound on a ferromagnetic core. The winding spans from
/// `face_center - axis * length` to `face_center`; `axis` points out of the
/// face into the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolenoidSpec {
    pub face_center: Vec3,
    pub axis: Vec3,
    pub length: f64,
    pub core_radius: f64,
    /// Mean radius of the winding. Field formulas use this radius; the core
    /// radius only bounds the invalid interior region.
    pub winding_radius: f64,
    pub turns: u32,
    pub core_gain: f64,
}

impl SolenoidSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        check_axis(&self.axis, "solenoid")?;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.length) || !positive(self.core_radius) || !positive(self.winding_radius) {
            return Err(FieldError::Argument(
                "solenoid length and radii must be positive".into(),
            ));
        }
        if self.winding_radius < self.core_radius {
            return Err(FieldError::Argument(
                "winding radius must not be smaller than the core radius".into(),
            ));
        }
        if self.turns == 0 {
            return Err(FieldError::Argument("solenoid turns must be >= 1".into()));
        }
        if !(self.core_gain >= 1.0) || !self.core_gain.is_finite() {
            return Err(FieldError::Argument(format!(
                "core gain must be >= 1, got {}",
                self.core_gain
            )));
        }
        Ok(())
    }

    fn inside_core(&self, point: &Vec3) -> bool {
        let rel = point - self.face_center;
        let s = rel.dot(&self.axis);
        let radial = (rel - self.axis * s).norm();
        s < 0.0 && s > -self.length && radial < self.core_radius
    }
}

/// Pole tip of a high-permeability tweezer pole, modelled as a point flux
/// source. `tip_axis` points from the tip into the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSpec {
    pub tip_position: Vec3,
    pub tip_axis: Vec3,
    /// Effective source strength in T·m² per ampere.
    pub strength_per_amp: f64,
}

impl PoleSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        check_axis(&self.tip_axis, "pole")?;
        if !(self.strength_per_amp > 0.0) || !self.strength_per_amp.is_finite() {
            return Err(FieldError::Argument(
                "pole strength_per_amp must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Direction a magnetic particle near the workspace center is pulled.
    pub fn pull_direction(&self) -> Vec3 {
        -self.tip_axis
    }
}

/// Right-handed orthonormal pair `(u, v)` with `u × v = axis`.
fn transverse_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Exact Biot–Savart field of a straight filament from `a` to `b`, per unit
/// `μ0 I / 4π`.
fn segment_kernel(a: &Vec3, b: &Vec3, point: &Vec3) -> Vec3 {
    let r1 = point - a;
    let r2 = point - b;
    let n1 = r1.norm();
    let n2 = r2.norm();
    let denom = n1 * n2 * (n1 * n2 + r1.dot(&r2));
    r1.cross(&r2) * ((n1 + n2) / denom)
}

/// Field of a polygonal loop carrying `ampere_turns`, without validation.
pub(crate) fn loop_field_raw(
    center: &Vec3,
    axis: &Vec3,
    radius: f64,
    ampere_turns: f64,
    point: &Vec3,
    segments: usize,
) -> Result<Vec3, FieldError> {
    let rel = point - center;
    let z = rel.dot(axis);
    let rho = (rel - axis * z).norm();
    let wire_distance = ((rho - radius).powi(2) + z * z).sqrt();
    if wire_distance < WIRE_SINGULAR_DISTANCE {
        return Err(FieldError::Singularity {
            point: point_array(point),
        });
    }
    if ampere_turns == 0.0 {
        return Ok(Vec3::zeros());
    }

    let (u, v) = transverse_basis(axis);
    let step = 2.0 * PI / segments as f64;
    let vertex = |k: usize| {
        let theta = step * k as f64;
        center + (u * theta.cos() + v * theta.sin()) * radius
    };
    let mut sum = Vec3::zeros();
    let mut prev = vertex(0);
    for k in 1..=segments {
        let next = if k == segments { vertex(0) } else { vertex(k) };
        sum += segment_kernel(&prev, &next, point);
        prev = next;
    }
    let b = sum * (MU_0 / (4.0 * PI) * ampere_turns);
    if !b.iter().all(|c| c.is_finite()) {
        return Err(FieldError::Singularity {
            point: point_array(point),
        });
    }
    Ok(b)
}

/// Field of a current loop by summing straight-segment Biot–Savart terms
/// over [`DEFAULT_LOOP_SEGMENTS`] chords.
pub fn loop_field(lp: &CurrentLoop, current: f64, point: &Vec3) -> Result<FieldVector, FieldError> {
    loop_field_with_segments(lp, current, point, DEFAULT_LOOP_SEGMENTS)
}

pub fn loop_field_with_segments(
    lp: &CurrentLoop,
    current: f64,
    point: &Vec3,
    segments: usize,
) -> Result<FieldVector, FieldError> {
    lp.validate()?;
    if segments < 3 {
        return Err(FieldError::Argument(
            "a loop needs at least 3 segments".into(),
        ));
    }
    loop_field_raw(
        &lp.center,
        &lp.axis,
        lp.radius,
        current * f64::from(lp.turns),
        point,
        segments,
    )
    .map(FieldVector)
}

/// Solenoid field with the default stack and segment counts.
pub fn solenoid_field(
    spec: &SolenoidSpec,
    current: f64,
    point: &Vec3,
) -> Result<FieldVector, FieldError> {
    solenoid_field_with(
        spec,
        current,
        point,
        DEFAULT_SOLENOID_STACK,
        DEFAULT_LOOP_SEGMENTS,
    )
}

pub(crate) fn solenoid_field_with(
    spec: &SolenoidSpec,
    current: f64,
    point: &Vec3,
    stack: usize,
    segments: usize,
) -> Result<FieldVector, FieldError> {
    spec.validate()?;
    if spec.inside_core(point) {
        return Err(FieldError::InsideCore {
            point: point_array(point),
        });
    }
    if current == 0.0 {
        return Ok(FieldVector::zero());
    }
    let rel = point - spec.face_center;
    let s = rel.dot(&spec.axis);
    let radial = (rel - spec.axis * s).norm();

    if radial < ON_AXIS_RADIUS {
        // Difference of the end-angle cosines of a finite sheet solenoid.
        let r = spec.winding_radius;
        let near = s / (s * s + r * r).sqrt();
        let far = (s + spec.length) / ((s + spec.length).powi(2) + r * r).sqrt();
        let n = f64::from(spec.turns) / spec.length;
        let b = 0.5 * MU_0 * n * current * spec.core_gain * (far - near);
        return Ok(FieldVector(spec.axis * b));
    }

    let ampere_turns = current * spec.core_gain * f64::from(spec.turns) / stack as f64;
    let mut b = Vec3::zeros();
    for k in 0..stack {
        let offset = spec.length * (k as f64 + 0.5) / stack as f64;
        let center = spec.face_center - spec.axis * offset;
        b += loop_field_raw(
            &center,
            &spec.axis,
            spec.winding_radius,
            ampere_turns,
            point,
            segments,
        )?;
    }
    Ok(FieldVector(b))
}

/// Point-source pole model: `B = I·s·r̂ / (4π|r|²)` with `r` from the tip.
pub fn pole_field(pole: &PoleSpec, current: f64, point: &Vec3) -> Result<FieldVector, FieldError> {
    pole.validate()?;
    let r = point - pole.tip_position;
    let dist = r.norm();
    if dist < POLE_SINGULAR_RADIUS {
        return Err(FieldError::Singularity {
            point: point_array(point),
        });
    }
    let scale = current * pole.strength_per_amp / (4.0 * PI * dist * dist * dist);
    Ok(FieldVector(r * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_loop(radius: f64) -> CurrentLoop {
        CurrentLoop::new(Vec3::zeros(), Vec3::z(), radius, 1).unwrap()
    }

    fn on_axis_closed_form(radius: f64, current: f64, z: f64) -> f64 {
        MU_0 * current * radius * radius / (2.0 * (radius * radius + z * z).powf(1.5))
    }

    #[test]
    fn loop_center_matches_analytic() {
        let lp = unit_loop(0.018);
        let b = loop_field(&lp, 1.0, &Vec3::zeros()).unwrap();
        let expected = MU_0 / (2.0 * 0.018);
        assert_relative_eq!(expected, 3.4907e-5, max_relative = 1e-4);
        assert_relative_eq!(b.0.z, expected, max_relative = 1e-3);
        assert!(b.0.x.abs() < 1e-18 && b.0.y.abs() < 1e-18);
    }

    #[test]
    fn loop_on_axis_at_one_radius() {
        let lp = unit_loop(0.018);
        let b = loop_field(&lp, 1.0, &Vec3::new(0.0, 0.0, 0.018)).unwrap();
        let expected = on_axis_closed_form(0.018, 1.0, 0.018);
        assert_relative_eq!(expected, 1.234e-5, max_relative = 1e-3);
        assert_relative_eq!(b.0.z, expected, max_relative = 1e-4);
    }

    #[test]
    fn loop_zero_current_is_exactly_zero() {
        let lp = unit_loop(0.02);
        let b = loop_field(&lp, 0.0, &Vec3::new(0.003, -0.01, 0.02)).unwrap();
        assert_eq!(b, FieldVector::zero());
    }

    #[test]
    fn loop_on_wire_is_singular() {
        let lp = unit_loop(0.02);
        let err = loop_field(&lp, 1.0, &Vec3::new(0.02, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, FieldError::Singularity { .. }));
    }

    #[test]
    fn loop_rejects_bad_axis() {
        assert!(CurrentLoop::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0), 0.01, 1).is_err());
        assert!(CurrentLoop::new(Vec3::zeros(), Vec3::z(), 0.0, 1).is_err());
        assert!(CurrentLoop::new(Vec3::zeros(), Vec3::z(), 0.01, 0).is_err());
    }

    fn coil() -> SolenoidSpec {
        SolenoidSpec {
            face_center: Vec3::zeros(),
            axis: Vec3::x(),
            length: 0.05,
            core_radius: 0.0025,
            winding_radius: 0.0025,
            turns: 980,
            core_gain: 1.0,
        }
    }

    #[test]
    fn solenoid_face_matches_half_infinite_limit() {
        let spec = coil();
        let b = solenoid_field(&spec, 2.0, &Vec3::zeros()).unwrap();
        let n = 980.0 / 0.05;
        let cosine = 0.05 / (0.05f64.powi(2) + 0.0025f64.powi(2)).sqrt();
        assert_relative_eq!(b.0.x, 0.5 * MU_0 * n * 2.0 * cosine, max_relative = 1e-12);
    }

    #[test]
    fn solenoid_inside_core_is_domain_error() {
        let spec = coil();
        let err = solenoid_field(&spec, 1.0, &Vec3::new(-0.01, 0.0005, 0.0)).unwrap_err();
        assert!(matches!(err, FieldError::InsideCore { .. }));
    }

    // the 20-loop midpoint stack differs from the exact axis formula by ~0.5% this close to the face
    #[test]
    fn solenoid_stack_agrees_with_axis_formula_near_axis() {
        let spec = SolenoidSpec {
            winding_radius: 0.0055,
            ..coil()
        };
        let on = solenoid_field(&spec, 1.0, &Vec3::new(0.0175, 0.0, 0.0)).unwrap();
        let near = solenoid_field(&spec, 1.0, &Vec3::new(0.0175, 1e-7, 0.0)).unwrap();
        assert_relative_eq!(on.0.x, near.0.x, max_relative = 1e-2);
    }

    #[test]
    fn pole_inverse_square() {
        let pole = PoleSpec {
            tip_position: Vec3::zeros(),
            tip_axis: Vec3::z(),
            strength_per_amp: 1e-8,
        };
        let b1 = pole_field(&pole, 1.0, &Vec3::new(0.0, 0.0, 1e-3)).unwrap();
        let b2 = pole_field(&pole, 1.0, &Vec3::new(0.0, 0.0, 2e-3)).unwrap();
        assert_relative_eq!(
            b1.magnitude(),
            1e-8 / (4.0 * PI * 1e-6),
            max_relative = 1e-12
        );
        assert_relative_eq!(b1.magnitude(), 7.96e-4, max_relative = 1e-3);
        assert_relative_eq!(b2.magnitude() * 4.0, b1.magnitude(), max_relative = 1e-12);
        assert!(b1.0.z > 0.0);
        let zero = pole_field(&pole, 0.0, &Vec3::new(0.0, 0.0, 1e-3)).unwrap();
        assert_eq!(zero.magnitude(), 0.0);
        assert!(pole_field(&pole, 1.0, &Vec3::new(0.0, 0.0, 5e-6)).is_err());
    }
}
