use approx::assert_relative_eq;
use magdrive_core::coil_model::{
    builtin_calibrated, field_map, loop_field, pole_field, solenoid_field, CurrentLoop, PoleSpec,
    SolenoidSpec,
};
use magdrive_core::{AssemblyKind, CoilAssembly, Vec3, MU_0};
use proptest::prelude::*;

const KINDS: [AssemblyKind; 3] = [
    AssemblyKind::TwoD,
    AssemblyKind::Helmholtz,
    AssemblyKind::Tweezer,
];

fn workspace_point() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z) * 4e-3)
}

fn kind() -> impl Strategy<Value = AssemblyKind> {
    prop::sample::select(KINDS.to_vec())
}

fn close(a: &Vec3, b: &Vec3, scale: f64) -> bool {
    (a - b).norm() <= 1e-12 * scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_is_linear_in_current(k in kind(), p in workspace_point(), s in -5.0..5.0f64, seed in any::<u64>()) {
        let a = builtin_calibrated(k);
        let i: Vec<f64> = (0..a.channel_count())
            .map(|c| ((seed >> (c * 8)) & 0xff) as f64 / 128.0 - 1.0)
            .collect();
        let scaled: Vec<f64> = i.iter().map(|x| x * s).collect();
        let b = a.field(&i, &p).unwrap().0;
        let bs = a.field(&scaled, &p).unwrap().0;
        prop_assert!(close(&bs, &(b * s), b.norm() * s.abs()));
    }

    #[test]
    fn channels_superpose(k in kind(), p in workspace_point(), i in prop::collection::vec(-3.0..3.0f64, 6)) {
        let a = builtin_calibrated(k);
        let i = &i[..a.channel_count()];
        let total = a.field(i, &p).unwrap().0;
        let mut sum = Vec3::zeros();
        let mut scale = 0.0;
        for (ch, &c) in i.iter().enumerate() {
            let b = a.channel_field(ch, c, &p).unwrap().0;
            scale += b.norm();
            sum += b;
        }
        prop_assert!(close(&total, &sum, scale));
    }

    #[test]
    fn gradient_is_divergence_and_curl_free(k in kind(), p in workspace_point(), i in prop::collection::vec(-3.0..3.0f64, 6)) {
        let a = builtin_calibrated(k);
        // pole tips sit under a millimetre from the center, so the
        // difference step is a larger fraction of the distance there
        let (p, tol) = match k {
            AssemblyKind::Tweezer => (p * 0.08, 1e-3),
            _ => (p, 1e-5),
        };
        let g = a.gradient(&i[..a.channel_count()], &p).unwrap();
        let scale = g.0.norm();
        prop_assert!(g.trace().abs() <= tol * scale, "trace {} of {}", g.trace(), scale);
        prop_assert!(g.antisymmetric_norm() <= tol * scale);
    }
}

#[test]
fn loop_center_matches_closed_form() {
    let lp = CurrentLoop::new(Vec3::zeros(), Vec3::z(), 0.05, 10).unwrap();
    let b = loop_field(&lp, 2.0, &Vec3::zeros()).unwrap().0;
    let exact = MU_0 * 2.0 * 10.0 / (2.0 * 0.05);
    assert_relative_eq!(b.z, exact, max_relative = 1e-4);
    assert!(b.x.abs() < 1e-12 * exact && b.y.abs() < 1e-12 * exact);
}

#[test]
fn loop_far_field_is_a_dipole() {
    let (r, n, i) = (0.01, 5u32, 1.5);
    let lp = CurrentLoop::new(Vec3::zeros(), Vec3::z(), r, n).unwrap();
    let m = Vec3::z() * (i * f64::from(n) * std::f64::consts::PI * r * r);
    let p = Vec3::new(0.3, -0.2, 0.4);
    let d = p.norm();
    let u = p / d;
    let dipole = (u * (3.0 * m.dot(&u)) - m) * (MU_0 / (4.0 * std::f64::consts::PI * d.powi(3)));
    let b = loop_field(&lp, i, &p).unwrap().0;
    assert!((b - dipole).norm() < 2e-3 * dipole.norm());
}

#[test]
fn solenoid_points_out_of_its_face() {
    let s = SolenoidSpec {
        face_center: Vec3::zeros(),
        axis: Vec3::x(),
        length: 0.05,
        core_radius: 0.0025,
        winding_radius: 0.005,
        turns: 500,
        core_gain: 3.0,
    };
    let b = solenoid_field(&s, 1.0, &Vec3::new(0.01, 0.0, 0.0))
        .unwrap()
        .0;
    assert!(b.x > 0.0);
    let weaker = solenoid_field(&s, 1.0, &Vec3::new(0.02, 0.0, 0.0))
        .unwrap()
        .0;
    assert!(weaker.x < b.x);
    assert!(solenoid_field(&s, 1.0, &Vec3::new(-0.01, 0.0, 0.0)).is_err());
}

#[test]
fn pole_field_falls_with_inverse_square() {
    let p = PoleSpec {
        tip_position: Vec3::new(0.0, 0.0, 1e-3),
        tip_axis: -Vec3::z(),
        strength_per_amp: 1e-8,
    };
    let near = pole_field(&p, 1.0, &Vec3::new(0.0, 0.0, 0.0))
        .unwrap()
        .magnitude();
    let far = pole_field(&p, 1.0, &Vec3::new(0.0, 0.0, -1e-3))
        .unwrap()
        .magnitude();
    assert_relative_eq!(near / far, 4.0, max_relative = 1e-9);
}

#[test]
fn bundled_assemblies_round_trip_through_toml() {
    for k in KINDS {
        let a = CoilAssembly::bundled(k).unwrap();
        assert_eq!(a, builtin_calibrated(k));
        let again = CoilAssembly::from_toml_str(&a.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, a);
    }
}

#[test]
fn helmholtz_map_is_uniform_near_center() {
    let a = builtin_calibrated(AssemblyKind::Helmholtz);
    let map = field_map(&a, &[0.0, 0.0, 0.0, 0.0, 1.0, -1.0], 0.004, 5).unwrap();
    assert_relative_eq!(map.center_magnitude, 4e-3, max_relative = 1e-9);
    assert!(map.uniformity < 0.02, "uniformity {}", map.uniformity);
    let mut csv = Vec::new();
    map.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 125);
    assert!(text.starts_with("x_m,y_m,z_m,bx_t,by_t,bz_t,bmag_t\n"));
}
