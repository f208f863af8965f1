//! Property tests for the grid substrate: linearity of the quadratures,
//! mask nesting, and field finiteness through the public operations.

use elgrow_core::grid::{
    boundary_integrate, integrate, make_disk, BoundaryProfile, GridSpec, Point, ScalarField,
};
use proptest::prelude::*;

fn small_disk() -> (GridSpec, elgrow_core::GridDomain) {
    let spec = GridSpec::square(-2.0, 2.0, 64).unwrap();
    let d = make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap();
    (spec, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integrate_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1u32..5) {
        let (spec, d) = small_disk();
        let f = ScalarField::from_fn(spec, |p| (k as f64 * p.x).sin() + p.y);
        let g = ScalarField::from_fn(spec, |p| p.x * p.y - 0.5);
        let combo = f.scaled(a).axpy(b, &g).unwrap();
        let lhs = integrate(&combo, &d).unwrap();
        let rhs = a * integrate(&f, &d).unwrap() + b * integrate(&g, &d).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn boundary_integrate_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (_, d) = small_disk();
        let f = BoundaryProfile::from_fn(&d, |p| p.x + 2.0);
        let g = BoundaryProfile::from_fn(&d, |p| p.y * p.y);
        let combo = f.zip(&g, |x, y| a * x + b * y);
        let lhs = boundary_integrate(&combo, &d).unwrap();
        let rhs = a * boundary_integrate(&f, &d).unwrap() + b * boundary_integrate(&g, &d).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn nested_level_sets_have_nested_masks(r1 in 0.3f64..1.6, dr in 0.05f64..0.3) {
        let spec = GridSpec::square(-2.0, 2.0, 64).unwrap();
        let inner = make_disk(Point::new(0.0, 0.0), r1, spec);
        let outer = make_disk(Point::new(0.0, 0.0), r1 + dr, spec);
        if let (Ok(inner), Ok(outer)) = (inner, outer) {
            for (a, b) in inner.mask().iter().zip(outer.mask()) {
                prop_assert!(!a || *b);
            }
        }
    }

    #[test]
    fn public_field_operations_stay_finite(c in -10.0f64..10.0, s in -5.0f64..5.0) {
        let spec = GridSpec::square(-1.0, 1.0, 32).unwrap();
        let f = ScalarField::from_fn(spec, |p| c * (p.x * 3.0).cos() + p.y);
        let g = f.scaled(s).axpy(1.0, &f).unwrap().mul(&f).unwrap();
        prop_assert!(g.check_finite("prop").is_ok());
        let lap = g.laplacian_field();
        prop_assert!(lap.check_finite("prop-lap").is_ok());
    }

    #[test]
    fn boundary_nodes_sit_on_the_contour(cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.4f64..1.2) {
        let spec = GridSpec::square(-2.0, 2.0, 64).unwrap();
        if let Ok(d) = make_disk(Point::new(cx, cy), r, spec) {
            for b in d.boundary() {
                prop_assert!((b.outward_normal.norm() - 1.0).abs() <= 1e-12);
                prop_assert!(d.phi().bilinear(b.position).abs() <= spec.h);
            }
        }
    }
}
