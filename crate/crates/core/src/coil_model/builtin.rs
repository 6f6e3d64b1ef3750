//! Reference geometries for the three assemblies the rig ships with.

use crate::Vec3;

use super::assembly::{
    calibrate_channel, calibrate_pair, AssemblyKind, Channel, ChannelElement, ChannelPair,
    CoilAssembly, Discretization, Element,
};
use super::{Axis, CurrentLoop, FieldError, PoleSpec, SolenoidSpec};

/// Default per-channel drive limit in amperes (battery-limited).
pub const DEFAULT_CHANNEL_LIMIT: f64 = 3.0;

/// Mean radius of a winding of `turns` round wire of diameter `wire_diameter`
/// filling `length` of a core of radius `core_radius`.
pub fn mean_winding_radius(core_radius: f64, length: f64, turns: u32, wire_diameter: f64) -> f64 {
    let build = f64::from(turns) * wire_diameter * wire_diameter / length;
    core_radius + 0.5 * build
}

/// Planar four-solenoid stand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDGeometry {
    /// Distance from each coil face to the workspace center, m.
    pub face_distance: f64,
    pub length: f64,
    pub core_radius: f64,
    pub turns: u32,
    /// Insulated wire diameter used to estimate the winding radius, m.
    pub wire_diameter: f64,
}

impl Default for TwoDGeometry {
    fn default() -> Self {
        TwoDGeometry {
            face_distance: 0.0175,
            length: 0.05,
            core_radius: 0.0025,
            turns: 980,
            wire_diameter: 0.56e-3,
        }
    }
}

/// Measured face field of each planar coil (T) at [`TWO_D_REFERENCE_CURRENT`].
pub const TWO_D_FACE_FIELD: f64 = 0.201;
pub const TWO_D_REFERENCE_CURRENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingPair {
    pub radius: f64,
    pub spacing: f64,
    pub turns: u32,
}

/// Triaxial ring-pair assembly. The small pair is vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzGeometry {
    pub x: RingPair,
    pub y: RingPair,
    pub z: RingPair,
}

impl Default for HelmholtzGeometry {
    fn default() -> Self {
        HelmholtzGeometry {
            // medium pair
            x: RingPair {
                radius: 0.066 / 1.8,
                spacing: 0.066,
                turns: 368,
            },
            // large pair
            y: RingPair {
                radius: 0.083 / 1.5,
                spacing: 0.083,
                turns: 260,
            },
            // small pair
            z: RingPair {
                radius: 0.036,
                spacing: 0.036 * 1.3,
                turns: 368,
            },
        }
    }
}

/// Center field (T) of each ring pair at 1 A, ordered x, y, z.
pub const HELMHOLTZ_PAIR_FIELDS: [(Axis, f64); 3] =
    [(Axis::X, 2e-3), (Axis::Y, 2e-3), (Axis::Z, 4e-3)];

/// Six pole tips on the vertices of an octahedron: three above the slide
/// plane, three below, staggered by 60°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweezerGeometry {
    /// Minimum distance between an upper and a lower tip, m.
    pub tip_separation: f64,
    pub strength_per_amp: f64,
}

impl Default for TweezerGeometry {
    fn default() -> Self {
        TweezerGeometry {
            tip_separation: 1.5e-3,
            strength_per_amp: 1e-8,
        }
    }
}

impl TweezerGeometry {
    /// Tip positions relative to the workspace center, upper tips first.
    pub fn tip_positions(&self) -> [Vec3; 6] {
        // Adjacent octahedron vertices are sqrt(2) times the circumradius apart.
        let c = self.tip_separation / std::f64::consts::SQRT_2;
        let h = c / 3f64.sqrt();
        let rho = c * (2.0f64 / 3.0).sqrt();
        let at = |deg: f64, z: f64| {
            let a = deg.to_radians();
            Vec3::new(rho * a.cos(), rho * a.sin(), z)
        };
        [
            at(0.0, h),
            at(120.0, h),
            at(240.0, h),
            at(60.0, -h),
            at(180.0, -h),
            at(300.0, -h),
        ]
    }
}

fn single(label: &str, element: Element) -> Channel {
    Channel {
        label: label.to_string(),
        elements: vec![ChannelElement { element, sign: 1.0 }],
        limit: DEFAULT_CHANNEL_LIMIT,
        loop_gain: 1.0,
    }
}

pub fn two_d_assembly(geom: &TwoDGeometry) -> CoilAssembly {
    let winding_radius = mean_winding_radius(
        geom.core_radius,
        geom.length,
        geom.turns,
        geom.wire_diameter,
    );
    let coil = |label: &str, outward: Vec3| {
        single(
            label,
            Element::Solenoid(SolenoidSpec {
                face_center: outward * geom.face_distance,
                axis: -outward,
                length: geom.length,
                core_radius: geom.core_radius,
                winding_radius,
                turns: geom.turns,
                core_gain: 1.0,
            }),
        )
    };
    CoilAssembly {
        name: "twod".into(),
        kind: AssemblyKind::TwoD,
        channels: vec![
            coil("x-", -Vec3::x()),
            coil("x+", Vec3::x()),
            coil("y-", -Vec3::y()),
            coil("y+", Vec3::y()),
        ],
        pairs: vec![
            ChannelPair {
                axis: Axis::X,
                lead: 0,
                facing: 1,
            },
            ChannelPair {
                axis: Axis::Y,
                lead: 2,
                facing: 3,
            },
        ],
        workspace_center: Vec3::zeros(),
        discretization: Discretization::default(),
    }
}

/// Two coaxial loops centered on the origin along `axis`, each on its own
/// channel with the loop axis pointing toward the center.
pub fn coaxial_loop_pair(axis: Axis, pair: &RingPair) -> [Channel; 2] {
    let u = axis.unit();
    let lp = |label: String, side: f64| {
        single(
            &label,
            Element::Loop(CurrentLoop {
                center: u * (side * pair.spacing / 2.0),
                axis: u * -side,
                radius: pair.radius,
                turns: pair.turns,
            }),
        )
    };
    [lp(format!("{axis}-"), -1.0), lp(format!("{axis}+"), 1.0)]
}

pub fn helmholtz_assembly(geom: &HelmholtzGeometry) -> CoilAssembly {
    let mut channels = Vec::with_capacity(6);
    let mut pairs = Vec::with_capacity(3);
    for (axis, ring) in [(Axis::X, &geom.x), (Axis::Y, &geom.y), (Axis::Z, &geom.z)] {
        let lead = channels.len();
        channels.extend(coaxial_loop_pair(axis, ring));
        pairs.push(ChannelPair {
            axis,
            lead,
            facing: lead + 1,
        });
    }
    CoilAssembly {
        name: "helmholtz".into(),
        kind: AssemblyKind::Helmholtz,
        channels,
        pairs,
        workspace_center: Vec3::zeros(),
        discretization: Discretization::default(),
    }
}

pub fn tweezer_assembly(geom: &TweezerGeometry) -> CoilAssembly {
    let channels = geom
        .tip_positions()
        .iter()
        .enumerate()
        .map(|(idx, tip)| {
            single(
                &format!("pole{idx}"),
                Element::Pole(PoleSpec {
                    tip_position: *tip,
                    tip_axis: -tip.normalize(),
                    strength_per_amp: geom.strength_per_amp,
                }),
            )
        })
        .collect();
    CoilAssembly {
        name: "tweezer".into(),
        kind: AssemblyKind::Tweezer,
        channels,
        pairs: Vec::new(),
        workspace_center: Vec3::zeros(),
        discretization: Discretization::default(),
    }
}

/// Uncalibrated reference geometry for `kind` (unit core gains and loop gains).
pub fn make_builtin_assembly(kind: AssemblyKind) -> CoilAssembly {
    match kind {
        AssemblyKind::TwoD => two_d_assembly(&TwoDGeometry::default()),
        AssemblyKind::Helmholtz => helmholtz_assembly(&HelmholtzGeometry::default()),
        AssemblyKind::Tweezer => tweezer_assembly(&TweezerGeometry::default()),
    }
}

/// Applies the reference bench measurements: each planar coil reads 201 mT at
/// its face at 2 A; the ring pairs read 2, 2 and 4 mT (x, y, z) at the center
/// at 1 A. Tweezer poles keep their placeholder strength.
pub fn apply_reference_calibration(assembly: &CoilAssembly) -> Result<CoilAssembly, FieldError> {
    match assembly.kind {
        AssemblyKind::TwoD => {
            let mut out = assembly.clone();
            for ch in 0..assembly.channel_count() {
                let face = match assembly.channels[ch].elements[0].element {
                    Element::Solenoid(s) => s.face_center,
                    _ => {
                        return Err(FieldError::Config(format!(
                            "planar channel {ch} is not a solenoid"
                        )))
                    }
                };
                out =
                    calibrate_channel(&out, ch, TWO_D_FACE_FIELD, TWO_D_REFERENCE_CURRENT, &face)?;
            }
            Ok(out)
        }
        AssemblyKind::Helmholtz => {
            let center = assembly.workspace_center;
            HELMHOLTZ_PAIR_FIELDS
                .iter()
                .try_fold(assembly.clone(), |acc, &(axis, b)| {
                    calibrate_pair(&acc, axis, b, 1.0, &center)
                })
        }
        AssemblyKind::Tweezer => Ok(assembly.clone()),
    }
}

/// Reference geometry with the reference calibration applied. This is what
/// the bundled assembly files contain.
pub fn builtin_calibrated(kind: AssemblyKind) -> CoilAssembly {
    apply_reference_calibration(&make_builtin_assembly(kind))
        .expect("reference calibration of built-in geometry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_d_layout() {
        let a = make_builtin_assembly(AssemblyKind::TwoD);
        a.validate().unwrap();
        assert_eq!(a.channel_count(), 4);
        let axis = |ch: usize| match a.channels[ch].elements[0].element {
            Element::Solenoid(s) => s.axis,
            _ => panic!("not a solenoid"),
        };
        for pair in &a.pairs {
            assert!((axis(pair.lead) + axis(pair.facing)).norm() < 1e-9);
        }
        assert!(axis(0).dot(&axis(2)).abs() < 1e-12);
    }

    #[test]
    fn helmholtz_layout() {
        let a = make_builtin_assembly(AssemblyKind::Helmholtz);
        a.validate().unwrap();
        assert_eq!(a.channel_count(), 6);
        assert_eq!(a.pairs.len(), 3);
        let loop_of = |ch: usize| match a.channels[ch].elements[0].element {
            Element::Loop(l) => l,
            _ => panic!("not a loop"),
        };
        let mut axes = Vec::new();
        for pair in &a.pairs {
            let (l, f) = (loop_of(pair.lead), loop_of(pair.facing));
            // coaxial: both centers on the same line, antiparallel normals
            assert!((l.axis + f.axis).norm() < 1e-9);
            assert!((l.center - f.center).normalize().cross(&l.axis).norm() < 1e-9);
            assert_eq!(l.radius, f.radius);
            axes.push(l.axis);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(axes[i].dot(&axes[j]).abs() < 1e-9);
            }
        }
        let g = HelmholtzGeometry::default();
        assert_relative_eq!(g.z.spacing / g.z.radius, 1.3, max_relative = 1e-12);
        assert_relative_eq!(g.x.spacing / g.x.radius, 1.8, max_relative = 1e-12);
        assert_relative_eq!(g.y.spacing / g.y.radius, 1.5, max_relative = 1e-12);
        assert_eq!((g.x.turns, g.y.turns, g.z.turns), (368, 260, 368));
    }

    #[test]
    fn tweezer_layout() {
        let a = make_builtin_assembly(AssemblyKind::Tweezer);
        a.validate().unwrap();
        assert_eq!(a.channel_count(), 6);
        let tips = TweezerGeometry::default().tip_positions();
        let mut min = f64::INFINITY;
        for up in &tips[..3] {
            assert!(up.z > 0.0);
            for low in &tips[3..] {
                assert!(low.z < 0.0);
                min = min.min((up - low).norm());
            }
        }
        assert!((min - 1.5e-3).abs() < 1e-9);
    }

    #[test]
    fn winding_radius_estimate() {
        let r = mean_winding_radius(0.0025, 0.05, 980, 0.56e-3);
        assert_relative_eq!(
            r,
            0.0025 + 0.5 * 980.0 * 0.56e-3 * 0.56e-3 / 0.05,
            max_relative = 1e-12
        );
        assert!(r > 0.0055 && r < 0.0056);
    }
}
