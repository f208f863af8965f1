//! Quadrature over domains and their boundaries.

use super::{BoundaryProfile, GridDomain, ScalarField};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Harmonic moments above this order are refused rather than returned
/// silently inaccurate.
pub const MAX_MOMENT_ORDER: usize = 8;

/// Midpoint-rule integral of `f` over the domain, with cut-cell weighting
/// near the boundary.  Second order on smooth integrands.
pub fn integrate(f: &ScalarField, domain: &GridDomain) -> Result<f64> {
    if f.spec() != domain.spec() {
        return Err(Error::SpecMismatch);
    }
    let h2 = domain.spec().h * domain.spec().h;
    let mut s = 0.0;
    for (idx, &v) in f.values().iter().enumerate() {
        let w = domain.cut_weight(idx);
        if w > 0.0 {
            s += w * v;
        }
    }
    Ok(s * h2)
}

/// `Σ values·ds` over the boundary nodes.
pub fn boundary_integrate(p: &BoundaryProfile, domain: &GridDomain) -> Result<f64> {
    p.check_aligned(domain)?;
    Ok(p
        .values()
        .iter()
        .zip(domain.boundary())
        .map(|(v, b)| v * b.ds)
        .sum())
}

/// Complex harmonic moment `t_n = ∫_D z^n dA`, by cut-cell midpoint
/// quadrature.  Orders above [`MAX_MOMENT_ORDER`] are refused.
pub fn harmonic_moment(domain: &GridDomain, n: usize) -> Result<Complex64> {
    if n > MAX_MOMENT_ORDER {
        return Err(Error::MomentOrder(n, MAX_MOMENT_ORDER));
    }
    let spec = domain.spec();
    let h2 = spec.h * spec.h;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let w = domain.cut_weight(spec.index(i, j));
            if w > 0.0 {
                let p = spec.node(i, j);
                let z = Complex64::new(p.x, p.y);
                s += z.powu(n as u32) * w;
            }
        }
    }
    Ok(s * h2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_disk, GridSpec, Point};
    use std::f64::consts::PI;

    fn unit_disk_256() -> GridDomain {
        let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
        make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap()
    }

    #[test]
    fn unit_disk_area_within_half_percent() {
        let d = unit_disk_256();
        let one = ScalarField::constant(d.spec(), 1.0);
        let a = integrate(&one, &d).unwrap();
        assert!((a - PI).abs() < 0.005 * PI, "area {a}");
    }

    #[test]
    fn disk_mask_area_within_one_percent() {
        // Plain cell count, the coarser oracle from the constructor contract.
        let d = unit_disk_256();
        let h2 = d.spec().h * d.spec().h;
        let count_area = d.mask().iter().filter(|&&m| m).count() as f64 * h2;
        assert!((count_area - PI).abs() < 0.01 * PI, "mask area {count_area}");
    }

    #[test]
    fn ellipse_area_within_one_percent() {
        let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
        let e = crate::grid::make_ellipse(Point::new(0.0, 0.0), 1.2, 1.0, spec).unwrap();
        let one = ScalarField::constant(spec, 1.0);
        let a = integrate(&one, &e).unwrap();
        assert!((a - 1.2 * PI).abs() < 0.01 * 1.2 * PI, "area {a}");
    }

    #[test]
    fn zero_integrand_gives_zero_exactly() {
        let d = unit_disk_256();
        let zero = ScalarField::zeros(d.spec());
        assert_eq!(integrate(&zero, &d).unwrap(), 0.0);
    }

    #[test]
    fn odd_integrand_on_centered_disk_nearly_cancels() {
        let d = unit_disk_256();
        let x = ScalarField::from_fn(d.spec(), |p| p.x);
        let v = integrate(&x, &d).unwrap();
        assert!(v.abs() < 1e-3 * PI, "asymmetry {v}");
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let d = unit_disk_256();
        let other = GridSpec::square(-2.0, 2.0, 128).unwrap();
        let f = ScalarField::zeros(other);
        assert!(matches!(integrate(&f, &d), Err(Error::SpecMismatch)));
    }

    #[test]
    fn boundary_constant_gives_perimeter() {
        let d = unit_disk_256();
        let p = BoundaryProfile::constant(&d, 1.0);
        let s = boundary_integrate(&p, &d).unwrap();
        assert!((s - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "perimeter {s}");
        let zero = BoundaryProfile::constant(&d, 0.0);
        assert_eq!(boundary_integrate(&zero, &d).unwrap(), 0.0);
    }

    #[test]
    fn moment_zero_is_area_and_odd_moment_vanishes() {
        let d = unit_disk_256();
        let t0 = harmonic_moment(&d, 0).unwrap();
        assert!((t0.re - PI).abs() < 0.005 * PI);
        assert!(t0.im.abs() < 1e-12);
        let t1 = harmonic_moment(&d, 1).unwrap();
        assert!(t1.norm() < 1e-3);
    }

    #[test]
    fn translated_disk_first_moment_is_center_times_area() {
        let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
        let c = Point::new(0.4, -0.3);
        let r = 0.7;
        let d = make_disk(c, r, spec).unwrap();
        let t1 = harmonic_moment(&d, 1).unwrap();
        let expect = Complex64::new(c.x, c.y) * PI * r * r;
        assert!((t1 - expect).norm() < 0.01 * expect.norm(), "t1 {t1}");
    }

    #[test]
    fn high_moment_orders_are_refused() {
        let d = unit_disk_256();
        assert!(matches!(
            harmonic_moment(&d, 9),
            Err(Error::MomentOrder(9, MAX_MOMENT_ORDER))
        ));
    }

    #[test]
    fn integrate_refinement_is_second_order() {
        // Halving h cuts the quadrature error on a smooth integrand by a
        // factor in [3.2, 5.0].  A single placement leaves an alignment
        // phase in the error, so the error is averaged over ten disk
        // positions before taking the ratio.
        let r: f64 = 1.0;
        let exact = 1.5 * PI * r.powi(4) / 4.0;
        let centers: Vec<Point> = (0..10)
            .map(|k| {
                let t = (k as f64 * 0.618_033_988_749_894_9).fract();
                let s = (k as f64 * 0.754_877_666_246_692_7).fract();
                Point::new(0.07 * (t - 0.5), 0.07 * (s - 0.5))
            })
            .collect();
        let mut avg = Vec::new();
        for n in [128usize, 256] {
            let spec = GridSpec::square(-2.0, 2.0, n).unwrap();
            let mut e = 0.0;
            for &c in &centers {
                let d = make_disk(c, r, spec).unwrap();
                let field =
                    ScalarField::from_fn(spec, |p| (p.x - c.x).powi(2) + 0.5 * (p.y - c.y).powi(2));
                e += (integrate(&field, &d).unwrap() - exact).abs();
            }
            avg.push(e / centers.len() as f64);
        }
        let ratio = avg[0] / avg[1];
        assert!(
            (3.2..=5.0).contains(&ratio),
            "refinement ratio {ratio} (errors {avg:?})"
        );
    }
}
