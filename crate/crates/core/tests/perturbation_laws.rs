//! First-order variational formulas against direct re-solves.

use elgrow_core::green::{self, green, OperatorDesc};
use elgrow_core::grid::{make_disk, BoundaryProfile, GridDomain, GridSpec, Point, ScalarField};
use elgrow_core::perturb::{
    beltrami_green_variation, hadamard_variation, laws, normal_variation_beltrami,
    normal_variation_schrodinger, schrodinger_green_series, zero_curvature_check, BeltramiFormula,
};
use elgrow_core::Error;
use std::f64::consts::PI;
use std::sync::Arc;

fn unit_disk(n: usize) -> Arc<GridDomain> {
    let spec = GridSpec::square(-2.0, 2.0, n).unwrap();
    Arc::new(make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap())
}

#[test]
fn hadamard_uniform_inflation_of_the_unit_disk() {
    // Radius change dR at R=1 shifts the Robin constant by -1/(2π).
    let domain = unit_disk(256);
    let p = BoundaryProfile::constant(&domain, 1.0);
    let origin = Point::new(0.0, 0.0);
    let coeff = hadamard_variation(&domain, origin, origin, &p, None).unwrap();
    let want = -1.0 / (2.0 * PI);
    assert!((coeff - want).abs() <= 0.03 * want.abs(), "{coeff} vs {want}");

    // p ≡ 0 gives exactly zero.
    let zero = BoundaryProfile::constant(&domain, 0.0);
    assert_eq!(
        hadamard_variation(&domain, origin, origin, &zero, None).unwrap(),
        0.0
    );
}

#[test]
fn enlarging_a_domain_decreases_the_green_function() {
    // δg = -∫ p (∂ₙg)² ds ≤ 0 whenever p ≥ 0.
    let domain = unit_disk(128);
    for profile in [
        BoundaryProfile::constant(&domain, 1.0),
        BoundaryProfile::from_fn(&domain, |q| 1.0 + 0.8 * q.x),
        BoundaryProfile::from_fn(&domain, |q| q.y * q.y),
    ] {
        let v = hadamard_variation(
            &domain,
            Point::new(0.2, 0.1),
            Point::new(-0.3, 0.2),
            &profile,
            None,
        )
        .unwrap();
        assert!(v <= 0.0, "variation {v} must be nonpositive for p ≥ 0");
    }
}

#[test]
fn hadamard_defect_law() {
    let report = laws::hadamard(256, &[0.02, 0.01]).unwrap();
    assert!(
        report.passed,
        "gap ratio {} outside {:?}",
        report.gap_ratio, report.pass_range
    );
}

#[test]
fn zero_curvature_cyclic_integrals_agree() {
    let domain = unit_disk(256);
    let (a, b, c) = (
        Point::new(0.3, 0.1),
        Point::new(-0.25, 0.3),
        Point::new(0.05, -0.4),
    );
    let zc = zero_curvature_check(&domain, a, b, c, None).unwrap();
    assert!(
        zc.max_relative_gap <= 1e-10,
        "pairwise gap {}",
        zc.max_relative_gap
    );

    // Coincident points: the three integrals are the same expression.
    let same = zero_curvature_check(&domain, a, a, a, None).unwrap();
    assert_eq!(same.derivatives[0], same.derivatives[1]);
    assert_eq!(same.derivatives[1], same.derivatives[2]);

    // By construction the first derivative is the Hadamard integral with
    // p = λ∂ₙg_c.
    let gc = green(&OperatorDesc::laplace(), &domain, c, 1.0).unwrap();
    let p = green::normal_derivative(&gc).unwrap();
    let had = hadamard_variation(&domain, b, a, &p, None).unwrap();
    let rel = (zc.derivatives[0] - had).abs() / had.abs().max(1e-300);
    assert!(rel <= 1e-12, "relative gap {rel}");
}

#[test]
fn schrodinger_series_base_cases_and_guards() {
    let domain = unit_disk(128);
    let spec = domain.spec();
    let u = ScalarField::constant(spec, 1.0);
    let w = Point::new(0.1, 0.2);

    // ε = 0 returns the unperturbed Green function.
    let series = schrodinger_green_series(&domain, &u, w, 0.0, 2).unwrap();
    let mut gap = 0.0f64;
    for (a, b) in series.total.values().iter().zip(series.base.total.values()) {
        gap = gap.max((a - b).abs());
    }
    assert_eq!(gap, 0.0);

    // Divergence guard and term cap.
    assert!(matches!(
        schrodinger_green_series(&domain, &u.scaled(50.0), w, 1.0, 2),
        Err(Error::SeriesDivergence(_))
    ));
    assert!(matches!(
        schrodinger_green_series(&domain, &u, w, 0.01, 7),
        Err(Error::SeriesTooLong(7))
    ));
}

#[test]
fn schrodinger_series_first_term_has_two_matching_evaluations() {
    // For constant u the first correction is ε·a·(Tg₀)(z); T applied by
    // the auxiliary solve must agree with direct weighted quadrature of
    // g₀·g_z.
    let domain = unit_disk(256);
    let spec = domain.spec();
    let a = 2.0;
    let u = ScalarField::constant(spec, a);
    let w = Point::new(0.0, 0.0);
    let z = Point::new(0.4, 0.25);
    let g0 = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let via_solve = green::poisson_zero_bc(&domain, &u.mul(&g0.total).unwrap())
        .unwrap()
        .bilinear(z);
    let gz = green(&OperatorDesc::laplace(), &domain, z, 1.0).unwrap();
    let via_quadrature = elgrow_core::dirichlet::integrate_against_green(&domain, &gz, |p| {
        a * g0.value_at(p)
    })
    .unwrap();
    let rel = (via_solve - via_quadrature).abs() / via_solve.abs();
    assert!(rel <= 0.02, "solve {via_solve} vs quadrature {via_quadrature}");
}

#[test]
fn schrodinger_series_defect_law() {
    let report = laws::schrodinger_series(256, &[0.02, 0.01]).unwrap();
    assert!(
        (3.3..=4.8).contains(&report.gap_ratio),
        "gap ratio {}",
        report.gap_ratio
    );
}

#[test]
fn beltrami_formulas_agree_and_reduce_for_constant_p() {
    let domain = unit_disk(256);
    let spec = domain.spec();
    let z = Point::new(0.35, 0.1);
    let w = Point::new(-0.3, 0.2);

    let zero = ScalarField::zeros(spec);
    for formula in [BeltramiFormula::Gradient, BeltramiFormula::Laplacian] {
        let v = beltrami_green_variation(&domain, &zero, w, z, 1.0, formula).unwrap();
        assert_eq!(v, 0.0);
    }

    let one = ScalarField::constant(spec, 1.0);
    let grad = beltrami_green_variation(&domain, &one, w, z, 1.0, BeltramiFormula::Gradient).unwrap();
    let lap = beltrami_green_variation(&domain, &one, w, z, 1.0, BeltramiFormula::Laplacian).unwrap();
    let g_zw = green(&OperatorDesc::laplace(), &domain, w, 1.0)
        .unwrap()
        .value_at(z);
    // With Δp = 0 the second route reduces to -g(z,w).
    assert!((lap + g_zw).abs() <= 0.005 * g_zw.abs(), "lap {lap} vs {}", -g_zw);
    assert!((grad - lap).abs() <= 0.02 * lap.abs(), "grad {grad} vs lap {lap}");
}

#[test]
fn beltrami_defect_laws_both_routes() {
    for formula in [BeltramiFormula::Gradient, BeltramiFormula::Laplacian] {
        let report = laws::beltrami(256, &[0.02, 0.01], formula).unwrap();
        assert!(
            report.passed,
            "{}: gap ratio {} outside {:?}",
            report.law, report.gap_ratio, report.pass_range
        );
    }
}

#[test]
fn normal_variation_schrodinger_base_case_and_uniformity() {
    let domain = unit_disk(256);
    let spec = domain.spec();
    let w = Point::new(0.0, 0.0);
    let base = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let base_nd = green::normal_derivative(&base).unwrap();

    // u ≡ 0 keeps the unperturbed derivative.
    let zero = ScalarField::zeros(spec);
    let v = normal_variation_schrodinger(&domain, &zero, w, 7, 0.3).unwrap();
    assert!((v - base_nd.values()[7]).abs() <= 1e-12);

    // Radial symmetry forces a uniform correction.
    let u = ScalarField::constant(spec, 1.0);
    let eps = 0.2;
    let nb = domain.boundary().len();
    let mut corrections = Vec::new();
    for k in (0..nb).step_by(nb / 16) {
        let v = normal_variation_schrodinger(&domain, &u, w, k, eps).unwrap();
        corrections.push(v - base_nd.values()[k]);
    }
    let mean: f64 = corrections.iter().sum::<f64>() / corrections.len() as f64;
    for c in &corrections {
        assert!(
            (c - mean).abs() <= 0.03 * mean.abs(),
            "correction spread: {c} vs mean {mean}"
        );
    }
}

#[test]
fn normal_variation_beltrami_constant_coefficient_identity() {
    // Δu = 0 and u(ζ)+u(w) = 2c collapse the correction to -ε·c·∂ₙg.
    let domain = unit_disk(128);
    let c = 0.7;
    let u = ScalarField::constant(domain.spec(), c);
    let w = Point::new(0.0, 0.0);
    let zeta = 11;
    let eps = 0.1;
    let base = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let nd = green::normal_derivative(&base).unwrap().values()[zeta];
    let v = normal_variation_beltrami(&domain, &u, w, zeta, eps).unwrap();
    assert!(
        (v - nd * (1.0 - eps * c)).abs() <= 1e-10,
        "{v} vs {}",
        nd * (1.0 - eps * c)
    );
}

#[test]
fn normal_variation_defect_laws() {
    let report = laws::normal_schrodinger(256, &[0.05, 0.025]).unwrap();
    assert!(report.passed, "schrodinger ratio {}", report.gap_ratio);
    let report = laws::normal_beltrami(256, &[0.05, 0.025]).unwrap();
    assert!(report.passed, "beltrami ratio {}", report.gap_ratio);
}

#[test]
fn normal_variations_agree_through_the_conversion_lemma() {
    // λ = 1 + εu maps to the Schrödinger potential λ^{-1/2}Δλ^{1/2}; the
    // converted normal derivative ∂ₙG = ∂ₙg·√(λ(w)λ(ζ)) must match.
    let domain = unit_disk(256);
    let spec = domain.spec();
    let eps = 0.1;
    let u = |p: Point| p.norm2();
    let lambda = ScalarField::from_fn(spec, |p| 1.0 + eps * u(p));
    let w = Point::new(0.0, 0.0);
    let zeta = domain.boundary().len() / 6;

    let bel = green(
        &OperatorDesc::beltrami(lambda.clone()).unwrap(),
        &domain,
        w,
        1.0,
    )
    .unwrap();
    let bel_nd = green::normal_derivative(&bel).unwrap().values()[zeta];
    let zp = domain.boundary()[zeta].position;
    let mapped = bel_nd * (lambda.bilinear(w) * lambda.bilinear(zp)).sqrt();

    // Direct Schrödinger solve with the converted potential.
    let conv = green::convert_beltrami_to_schrodinger(&lambda, &domain, w).unwrap();
    let sch = green(&OperatorDesc::schrodinger(conv.u).unwrap(), &domain, w, 1.0).unwrap();
    let sch_nd = green::normal_derivative(&sch).unwrap().values()[zeta];

    let rel = (mapped - sch_nd).abs() / sch_nd.abs();
    assert!(rel <= 0.03, "mapped {mapped} vs schrodinger {sch_nd}");
}

#[test]
fn variation_reports_serialize_with_the_required_fields() {
    let report = laws::hadamard(128, &[0.04, 0.02]).unwrap();
    let json = report.to_json();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(value["samples"][0]["epsilon"].is_number());
    assert!(value["samples"][0]["defect"].is_number());
    assert!(value["passed"].is_boolean());
    assert_eq!(value["samples"].as_array().unwrap().len(), 2);
}
