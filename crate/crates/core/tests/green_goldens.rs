//! Green-function and Dirichlet goldens on the unit disk, where closed
//! forms exist: g_z(ξ) = (2π)⁻¹ ln|(ξ−z)/(1−z̄ξ)|, the classical Poisson
//! kernel, and separation-of-variables Dirichlet solutions.

use elgrow_core::green::{
    convert_beltrami_to_schrodinger, dirichlet_solve, green, normal_derivative,
    poisson_kernel, OperatorDesc,
};
use elgrow_core::grid::{make_disk, BoundaryProfile, GridDomain, GridSpec, Point, ScalarField};
use elgrow_core::special::bessel_i0;
use elgrow_core::{boundary_integrate, Error};
use std::f64::consts::PI;
use std::sync::Arc;

fn unit_disk(n: usize) -> Arc<GridDomain> {
    let spec = GridSpec::square(-2.0, 2.0, n).unwrap();
    Arc::new(make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap())
}

/// (2π)⁻¹ ln |(ξ−z)/(1−z̄ξ)| as a real formula.
fn disk_green(xi: Point, z: Point) -> f64 {
    let num = xi.dist(z);
    let den = ((1.0 - (z.x * xi.x + z.y * xi.y)).powi(2) + (z.y * xi.x - z.x * xi.y).powi(2)).sqrt();
    (num / den).ln() / (2.0 * PI)
}

#[test]
fn laplace_disk_green_matches_closed_form() {
    let domain = unit_disk(256);
    let spec = domain.spec();
    let w = Point::new(0.3, 0.2);
    let gs = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let mut worst = 0.0f64;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if !domain.mask()[idx] {
                continue;
            }
            let p = spec.node(i, j);
            if domain.depth_cells(p) < 5.0 || p.dist(w) < 5.0 * spec.h {
                continue;
            }
            worst = worst.max((gs.total.values()[idx] - disk_green(p, w)).abs());
        }
    }
    assert!(worst <= 1e-3, "max error {worst}");
}

#[test]
fn green_total_is_nonpositive_and_vanishes_on_boundary() {
    let domain = unit_disk(256);
    let gs = green(&OperatorDesc::laplace(), &domain, Point::new(0.25, -0.15), 1.0).unwrap();
    let mut max_inside = f64::NEG_INFINITY;
    for (idx, &m) in domain.mask().iter().enumerate() {
        if m {
            max_inside = max_inside.max(gs.total.values()[idx]);
        }
    }
    assert!(max_inside <= 1e-9, "interior max {max_inside}");
    let scale = gs.total.linf();
    for b in domain.boundary() {
        assert!(
            gs.total.bilinear(b.position).abs() <= 2e-3 * scale,
            "boundary leak {}",
            gs.total.bilinear(b.position)
        );
    }
}

#[test]
fn schrodinger_with_zero_potential_degenerates_to_laplace() {
    let domain = unit_disk(128);
    let w = Point::new(0.1, 0.3);
    let lap = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let zero = ScalarField::zeros(domain.spec());
    let sch = green(&OperatorDesc::schrodinger(zero).unwrap(), &domain, w, 1.0).unwrap();
    let mut gap = 0.0f64;
    for (a, b) in lap.total.values().iter().zip(sch.total.values()) {
        gap = gap.max((a - b).abs());
    }
    assert!(gap <= 1e-10, "gap {gap}");
}

#[test]
fn constant_beltrami_coefficient_rescales_the_laplace_green() {
    let domain = unit_disk(128);
    let w = Point::new(0.0, 0.0);
    let lap = green(&OperatorDesc::laplace(), &domain, w, 1.0).unwrap();
    let two = ScalarField::constant(domain.spec(), 2.0);
    let bel = green(&OperatorDesc::beltrami(two).unwrap(), &domain, w, 1.0).unwrap();
    let scale = lap.total.linf();
    let mut gap = 0.0f64;
    for (a, b) in lap.total.values().iter().zip(bel.total.values()) {
        gap = gap.max((0.5 * a - b).abs());
    }
    assert!(gap <= 1e-10 * scale, "gap {gap}");
}

#[test]
fn green_rejects_singularities_near_the_boundary() {
    let domain = unit_disk(128);
    let err = green(&OperatorDesc::laplace(), &domain, Point::new(0.999, 0.0), 1.0);
    assert!(matches!(err, Err(Error::TooCloseToBoundary { .. })));
}

#[test]
fn normal_derivative_of_centered_disk_green_is_uniform() {
    let domain = unit_disk(256);
    let gs = green(&OperatorDesc::laplace(), &domain, Point::new(0.0, 0.0), 1.0).unwrap();
    let nd = normal_derivative(&gs).unwrap();
    let target = 1.0 / (2.0 * PI);
    for &v in nd.values() {
        assert!((v - target).abs() <= 0.02 * target, "value {v} vs {target}");
        assert!(v >= 0.0, "harmonic-measure density must be nonnegative");
    }
    // Divergence theorem: the flux reproduces the source strength.
    let flux = boundary_integrate(&nd, &domain).unwrap();
    assert!((flux - 1.0).abs() <= 0.02, "flux {flux}");
}

#[test]
fn poisson_kernel_matches_the_classical_disk_formula() {
    let domain = unit_disk(256);
    let k = domain.boundary().len() / 5;
    let zeta = domain.boundary()[k].position;
    let field = poisson_kernel(&OperatorDesc::laplace(), &domain, k).unwrap();
    for probe in [Point::new(0.0, 0.0), Point::new(0.3, 0.2), Point::new(-0.5, 0.1)] {
        let want = (1.0 - probe.norm2()) / (2.0 * PI * (zeta - probe).norm2());
        let got = field.bilinear(probe);
        assert!((got - want).abs() <= 0.03 * want, "probe {probe:?}: {got} vs {want}");
    }
    // The kernel dies toward other boundary points.
    let opposite = zeta.scaled(-0.9);
    assert!(field.bilinear(opposite).abs() <= 0.02);
    // ∂ₙg_z ds is a probability measure: total flux of any interior
    // source is 1 (same integral as summing P(·, z) over the boundary).
    let gs = green(&OperatorDesc::laplace(), &domain, Point::new(0.3, 0.2), 1.0).unwrap();
    let nd = normal_derivative(&gs).unwrap();
    let mass = boundary_integrate(&nd, &domain).unwrap();
    assert!((mass - 1.0).abs() <= 0.01, "kernel mass {mass}");
}

#[test]
fn poisson_kernel_index_is_validated() {
    let domain = unit_disk(128);
    assert!(matches!(
        poisson_kernel(&OperatorDesc::laplace(), &domain, 10_000),
        Err(Error::BoundaryIndex(..))
    ));
}

#[test]
fn dirichlet_constants_are_exact_and_polynomials_accurate() {
    let domain = unit_disk(256);
    let one = BoundaryProfile::constant(&domain, 1.0);
    let sol = dirichlet_solve(&OperatorDesc::laplace(), &domain, &one).unwrap();
    let spec = domain.spec();
    for (idx, &m) in domain.mask().iter().enumerate() {
        if m {
            assert!((sol.values()[idx] - 1.0).abs() <= 1e-8);
        }
    }
    // Harmonic polynomial Re z².
    let f = BoundaryProfile::from_fn(&domain, |p| p.x * p.x - p.y * p.y);
    let sol = dirichlet_solve(&OperatorDesc::laplace(), &domain, &f).unwrap();
    let mut worst = 0.0f64;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if domain.mask()[idx] {
                let p = spec.node(i, j);
                worst = worst.max((sol.values()[idx] - (p.x * p.x - p.y * p.y)).abs());
            }
        }
    }
    assert!(worst <= 1e-3, "harmonic polynomial error {worst}");
}

#[test]
fn schrodinger_dirichlet_obeys_the_weak_maximum_principle() {
    let domain = unit_disk(128);
    let u = ScalarField::constant(domain.spec(), 2.0);
    let f = BoundaryProfile::constant(&domain, 1.0);
    let sol = dirichlet_solve(&OperatorDesc::schrodinger(u).unwrap(), &domain, &f).unwrap();
    for (idx, &m) in domain.mask().iter().enumerate() {
        if m {
            assert!(sol.values()[idx].abs() <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn green_is_symmetric_in_source_and_observation() {
    let domain = unit_disk(128);
    let spec = domain.spec();
    let a = Point::new(0.4, 0.1);
    let b = Point::new(-0.3, -0.25);
    let ops = [
        OperatorDesc::laplace(),
        OperatorDesc::schrodinger(ScalarField::from_fn(spec, |p| 1.0 + p.x * p.x)).unwrap(),
        OperatorDesc::beltrami(ScalarField::from_fn(spec, |p| 1.0 + 0.5 * p.norm2())).unwrap(),
    ];
    for op in &ops {
        let ga = green(op, &domain, a, 1.0).unwrap();
        let gb = green(op, &domain, b, 1.0).unwrap();
        let scale = ga.total.linf();
        let gap = (ga.value_at(b) - gb.value_at(a)).abs();
        assert!(gap <= 5e-3 * scale, "symmetry gap {gap} (scale {scale})");
    }
}

#[test]
fn boundary_response_identity_holds_for_interior_sources() {
    // For f vanishing on the boundary, ∂ₙf(ζ) = ∫ Δf·P(·, ζ) dA: checked
    // at 16 boundary probes with the kernel fields from the adjoint
    // solves.
    let domain = unit_disk(256);
    let spec = domain.spec();
    // f = (1 - |z|²)·(1 + x/2): vanishes on the unit circle.
    let laplacian = |p: Point| {
        // Δ[(1-x²-y²)(1+x/2)] = -4 - 3x
        -4.0 - 3.0 * p.x
    };
    let dn_exact = |p: Point| {
        // ∂ᵣ[(1-r²)(1+x/2)] at r=1 equals -2(1+x/2) + boundary-tangential
        // terms that vanish radially: d/dr = -2r(1+ (r cosθ)/2) + (1-r²)(cosθ/2)
        -2.0 * (1.0 + p.x / 2.0)
    };
    let lap_field = ScalarField::from_fn(spec, laplacian);
    let nb = domain.boundary().len();
    let scale = 3.0;
    for k in 0..16 {
        let idx = k * nb / 16;
        let kernel = poisson_kernel(&OperatorDesc::laplace(), &domain, idx).unwrap();
        let integral =
            elgrow_core::integrate(&lap_field.mul(&kernel).unwrap(), &domain).unwrap();
        let want = dn_exact(domain.boundary()[idx].position);
        assert!(
            (integral - want).abs() <= 0.03 * scale,
            "probe {idx}: {integral} vs {want}"
        );
    }
}

#[test]
fn conversion_lemma_identity_and_paper_potentials() {
    let domain = unit_disk(256);
    let spec = domain.spec();
    let w = Point::new(0.2, -0.1);

    // λ ≡ 1: u ≡ 0 and the two Green functions coincide.
    let check = convert_beltrami_to_schrodinger(&ScalarField::constant(spec, 1.0), &domain, w)
        .unwrap();
    assert!(check.u.linf() <= 1e-12);
    assert!(check.discrepancy <= 1e-9 * check.scale.max(1.0));

    // λ = exp(2r²) maps to u = 4(r² + 1).
    let lam = ScalarField::from_fn(spec, |p| (2.0 * p.norm2()).exp());
    let check = convert_beltrami_to_schrodinger(&lam, &domain, w).unwrap();
    for (r, theta) in [(0.3, 0.7), (0.6, 2.1), (0.9, 4.0)] {
        let p = Point::new(r * f64::cos(theta), r * f64::sin(theta));
        let want = 4.0 * (p.norm2() + 1.0);
        let got = check.u.bilinear(p);
        assert!((got - want).abs() <= 0.01 * want, "u at r={r}: {got} vs {want}");
    }
    assert!(check.discrepancy <= 1e-3 * check.scale);

    // λ = I0(r)² maps to u ≡ 1.
    let lam = ScalarField::from_fn(spec, |p| bessel_i0(p.norm()).powi(2));
    let check = convert_beltrami_to_schrodinger(&lam, &domain, w).unwrap();
    for (r, theta) in [(0.3, 0.5), (0.7, 3.0)] {
        let p = Point::new(r * f64::cos(theta), r * f64::sin(theta));
        let got = check.u.bilinear(p);
        assert!((got - 1.0).abs() <= 0.01, "u at r={r}: {got}");
    }
    assert!(check.discrepancy <= 1e-3 * check.scale);
}

#[test]
fn conversion_rejects_coefficients_below_the_floor() {
    let domain = unit_disk(128);
    let bad = ScalarField::constant(domain.spec(), 1e-9);
    assert!(matches!(
        convert_beltrami_to_schrodinger(&bad, &domain, Point::new(0.0, 0.0)),
        Err(Error::CoefficientFloor { .. })
    ));
}
