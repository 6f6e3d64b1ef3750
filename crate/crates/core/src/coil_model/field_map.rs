use std::io::{self, Write};

use crate::{Num, Vec3};

use super::{CoilAssembly, FieldError, FieldVector};

/// Field sampled on a regular cubic lattice around the workspace center.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub points: Vec<Vec3>,
    pub samples: Vec<FieldVector>,
    /// `|B|` at the workspace center.
    pub center_magnitude: f64,
    /// Largest relative deviation of `|B|` from `center_magnitude` over the
    /// lattice. Zero for an all-zero map; infinite when only the center
    /// vanishes.
    pub uniformity: f64,
}

/// Samples `assembly` on `grid_n³` points spanning a cube of side
/// `grid_extent` centered on the workspace center.
pub fn field_map(
    assembly: &CoilAssembly,
    currents: &[f64],
    grid_extent: f64,
    grid_n: usize,
) -> Result<FieldMap, FieldError> {
    if grid_n < 2 {
        return Err(FieldError::Argument("grid_n must be at least 2".into()));
    }
    if !(grid_extent > 0.0) || !grid_extent.is_finite() {
        return Err(FieldError::Argument("grid extent must be positive".into()));
    }
    let origin = assembly.workspace_center;
    let center_magnitude = assembly.field(currents, &origin)?.magnitude();
    let coord = |k: usize| grid_extent * (k as f64 / (grid_n - 1) as f64 - 0.5);

    let total = grid_n * grid_n * grid_n;
    let mut points = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(total);
    let mut max_dev: f64 = 0.0;
    let mut any_nonzero = false;
    for i in 0..grid_n {
        for j in 0..grid_n {
            for k in 0..grid_n {
                let p = origin + Vec3::new(coord(i), coord(j), coord(k));
                let b = assembly.field(currents, &p)?;
                let mag = b.magnitude();
                any_nonzero |= mag > 0.0;
                max_dev = max_dev.max((mag - center_magnitude).abs());
                points.push(p);
                samples.push(b);
            }
        }
    }
    let uniformity = if center_magnitude > 0.0 {
        max_dev / center_magnitude
    } else if any_nonzero {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(FieldMap {
        points,
        samples,
        center_magnitude,
        uniformity,
    })
}

impl FieldMap {
    /// Comma-separated export, one sample per line, SI units.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_m,y_m,z_m,bx_t,by_t,bz_t,bmag_t")?;
        for (p, b) in self.points.iter().zip(&self.samples) {
            let row = [p.x, p.y, p.z, b.0.x, b.0.y, b.0.z, b.magnitude()];
            let row: Vec<String> = row.iter().map(|v| Num(*v).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
