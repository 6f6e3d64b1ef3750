use std::process::{Command, Output};

fn magdrive(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_magdrive"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "magdrive {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn rows(out: &Output) -> Vec<Vec<f64>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fieldmap_of_small_pair() {
    let out = magdrive(&[
        "fieldmap",
        "--assembly",
        "helmholtz",
        "--currents",
        "0,0,0,0,1,-1",
        "--extent",
        "0.002",
        "--n",
        "3",
    ]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("x_m,y_m,z_m,bx_t,by_t,bz_t,bmag_t\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 27);
    let center = &rows[13];
    assert_eq!(&center[..3], &[0.0, 0.0, 0.0]);
    assert!((center[5] - 4e-3).abs() < 1e-12);
}

#[test]
fn fieldmap_from_command() {
    let out = magdrive(&[
        "fieldmap",
        "--assembly",
        "twod",
        "--command",
        "ORIENT THETA=90",
        "--n",
        "2",
    ]);
    assert_eq!(rows(&out).len(), 8);
    let err = Command::new(env!("CARGO_BIN_EXE_magdrive"))
        .args(["fieldmap", "--assembly", "twod", "--currents", "1,2"])
        .output()
        .unwrap();
    assert!(!err.status.success());
}

#[test]
fn simulate_ideal_roll_moves_along_heading() {
    let out = magdrive(&[
        "simulate",
        "--ideal",
        "--command",
        "ROLL A=2 F=2 ALPHA=90",
        "--duration",
        "0.2",
        "--dt",
        "1e-4",
        "--stride",
        "100",
    ]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 21);
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let dx = last[1] - first[1];
    let expected = 2.25e-6 * std::f64::consts::TAU * 2.0 * 0.2;
    assert!(
        (dx - expected).abs() < 0.05 * expected,
        "{dx} vs {expected}"
    );
    assert!((last[2] - first[2]).abs() < 1e-3 * expected);
}

#[test]
fn assembly_dump_reloads() {
    let out = magdrive(&["assembly", "tweezer"]);
    let dir = std::env::temp_dir().join(format!("magdrive-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tweezer.toml");
    std::fs::write(&path, &out.stdout).unwrap();
    let map = magdrive(&[
        "fieldmap",
        "--assembly",
        path.to_str().unwrap(),
        "--command",
        "TWEEZER THETA=0",
        "--extent",
        "1e-4",
        "--n",
        "2",
    ]);
    assert_eq!(rows(&map).len(), 8);
    std::fs::remove_dir_all(&dir).unwrap();
}
