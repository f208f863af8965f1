//! P2 PGM and CSV snapshots of fields, masks and profiles.
//!
//! PGM files use max value 65535 with an affine value scaling documented
//! in a header comment line: `# scale <vmin> <vmax>` means a pixel value
//! `p` stands for `vmin + (vmax - vmin) * p / 65535`.  Rows are written
//! top-down (largest y first).

use super::{BoundaryProfile, GridDomain, ScalarField};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Render a field to P2 PGM text.
pub fn field_to_pgm(f: &ScalarField) -> String {
    let spec = f.spec();
    let (vmin, vmax) = (f.min(), f.max());
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let mut out = String::new();
    out.push_str("P2\n");
    let _ = writeln!(out, "# scale {vmin:.17e} {vmax:.17e}");
    let _ = writeln!(out, "{} {}", spec.nx, spec.ny);
    out.push_str("65535\n");
    for j in (0..spec.ny).rev() {
        for i in 0..spec.nx {
            let p = ((f.get(i, j) - vmin) / span * 65535.0).round() as u32;
            let _ = write!(out, "{}", p.min(65535));
            out.push(if i + 1 == spec.nx { '\n' } else { ' ' });
        }
    }
    out
}

/// Render a domain mask to P2 PGM text (inside = 65535).
pub fn mask_to_pgm(d: &GridDomain) -> String {
    let spec = d.spec();
    let mut out = String::new();
    out.push_str("P2\n# scale 0 1\n");
    let _ = writeln!(out, "{} {}", spec.nx, spec.ny);
    out.push_str("65535\n");
    for j in (0..spec.ny).rev() {
        for i in 0..spec.nx {
            let p = if d.is_inside(i, j) { 65535 } else { 0 };
            let _ = write!(out, "{p}");
            out.push(if i + 1 == spec.nx { '\n' } else { ' ' });
        }
    }
    out
}

/// Render a field as `x,y,value` CSV rows with a header line.
pub fn field_to_csv(f: &ScalarField) -> String {
    let spec = f.spec();
    let mut out = String::from("x,y,value\n");
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let p = spec.node(i, j);
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", p.x, p.y, f.get(i, j));
        }
    }
    out
}

/// Render a boundary profile as `index,x,y,value` CSV rows.
pub fn profile_to_csv(p: &BoundaryProfile, d: &GridDomain) -> String {
    let mut out = String::from("index,x,y,value\n");
    for (k, (v, b)) in p.values().iter().zip(d.boundary()).enumerate() {
        let _ = writeln!(
            out,
            "{k},{:.17e},{:.17e},{:.17e}",
            b.position.x, b.position.y, v
        );
    }
    out
}

pub fn write_field_pgm(f: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_pgm(f))?;
    Ok(())
}

pub fn write_mask_pgm(d: &GridDomain, path: &Path) -> Result<()> {
    std::fs::write(path, mask_to_pgm(d))?;
    Ok(())
}

pub fn write_field_csv(f: &ScalarField, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_csv(f))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Point};

    #[test]
    fn pgm_header_and_size() {
        let spec = GridSpec::square(0.0, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(spec, |p| p.x);
        let pgm = field_to_pgm(&f);
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert!(lines.next().unwrap().starts_with("# scale"));
        assert_eq!(lines.next(), Some("8 8"));
        assert_eq!(lines.next(), Some("65535"));
        assert_eq!(lines.count(), 8);
    }

    #[test]
    fn csv_roundtrips_node_values() {
        let spec = GridSpec::square(0.0, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(spec, |p| 3.0 * p.x - p.y);
        let csv = field_to_csv(&f);
        let line = csv.lines().nth(1 + spec.index(3, 5)).unwrap();
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let p = spec.node(3, 5);
        assert_eq!(cols[0], p.x);
        assert_eq!(cols[1], p.y);
        assert_eq!(cols[2], f.get(3, 5));
        let _ = Point::new(cols[0], cols[1]);
    }
}
