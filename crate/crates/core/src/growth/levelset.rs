//! Level-set transport for the strong growth stepper: closest-point
//! velocity extension and first-order Godunov advection.

use crate::grid::{BoundaryNode, GridSpec, Point, ScalarField};

/// Extend boundary-node normal speeds into a band around the interface by
/// closest-point lookup (constant along normals of a signed distance).
/// Returns the speed field (zero outside the band) and the max speed.
pub(crate) fn extend_speed(
    phi: &ScalarField,
    boundary: &[BoundaryNode],
    speeds: &[f64],
    band_cells: f64,
) -> (ScalarField, f64) {
    let spec = phi.spec();
    let band = band_cells * spec.h;
    let mut out = ScalarField::zeros(spec);
    let mut max_speed = 0.0f64;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if phi.values()[idx].abs() > band {
                continue;
            }
            let p = spec.node(i, j);
            let mut best = (f64::INFINITY, 0usize);
            for (k, b) in boundary.iter().enumerate() {
                let d2 = (b.position - p).norm2();
                if d2 < best.0 {
                    best = (d2, k);
                }
            }
            let s = speeds[best.1];
            out.values_mut()[idx] = s;
            max_speed = max_speed.max(s.abs());
        }
    }
    (out, max_speed)
}

/// One upwind step of `φ_t + F |∇φ| = 0` (Godunov gradient).  Nodes where
/// the extended speed vanishes are left untouched.
pub(crate) fn advect(phi: &ScalarField, speed: &ScalarField, dt: f64) -> ScalarField {
    let spec = phi.spec();
    let h = spec.h;
    let mut out = phi.clone();
    for j in 1..spec.ny - 1 {
        for i in 1..spec.nx - 1 {
            let idx = spec.index(i, j);
            let f = speed.values()[idx];
            if f == 0.0 {
                continue;
            }
            let c = phi.get(i, j);
            let dxm = (c - phi.get(i - 1, j)) / h;
            let dxp = (phi.get(i + 1, j) - c) / h;
            let dym = (c - phi.get(i, j - 1)) / h;
            let dyp = (phi.get(i, j + 1) - c) / h;
            let grad = if f > 0.0 {
                (dxm.max(0.0).powi(2)
                    + dxp.min(0.0).powi(2)
                    + dym.max(0.0).powi(2)
                    + dyp.min(0.0).powi(2))
                .sqrt()
            } else {
                (dxp.max(0.0).powi(2)
                    + dxm.min(0.0).powi(2)
                    + dyp.max(0.0).powi(2)
                    + dym.min(0.0).powi(2))
                .sqrt()
            };
            out.values_mut()[idx] = c - dt * f * grad;
        }
    }
    out
}

/// Largest stable time step for speed `f`: `h / max|f|`.
pub(crate) fn cfl_bound(spec: GridSpec, max_speed: f64) -> f64 {
    if max_speed <= 0.0 {
        f64::INFINITY
    } else {
        spec.h / max_speed
    }
}

/// Radius statistics of a boundary about a center: (min, max).
pub fn radius_range(boundary: &[BoundaryNode], center: Point) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for b in boundary {
        let r = b.position.dist(center);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}
