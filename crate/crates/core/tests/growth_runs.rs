//! Strong and weak growth: radial oracles, symmetry preservation,
//! Richardson diagnostics, rate laws and the rejection gate.

use elgrow_core::green::OperatorDesc;
use elgrow_core::grid::{make_disk, make_ellipse, GridDomain, GridSpec, Point, ScalarField};
use elgrow_core::growth::{
    boundary_to_csv, initial_rate_probe, instantaneous_rate, lharmonic_test_functions, log_to_csv,
    moment_trace, radial_area_rate, radius_range, reject_zero_rate_families, run_strong,
    strong_step, weak_step, GrowthState, DEFAULT_CFL_FRACTION,
};
use elgrow_core::special::bessel_i0;
use elgrow_core::Error;
use std::f64::consts::PI;
use std::sync::Arc;

fn disk_state(n: usize, radius: f64, op: OperatorDesc, q: f64) -> GrowthState {
    let spec = GridSpec::square(-2.0, 2.0, n).unwrap();
    let domain = Arc::new(make_disk(Point::new(0.0, 0.0), radius, spec).unwrap());
    GrowthState::new(domain, op, Point::new(0.0, 0.0), q).unwrap()
}

#[test]
fn laplace_disk_growth_follows_the_radial_law() {
    // dR/dt = Q/(2πR): after growing the area by 50% the radius is
    // √(1.5), within 2%.
    let state = disk_state(256, 1.0, OperatorDesc::laplace(), 1.0);
    let t_end = 0.5 * PI;
    let done = run_strong(state, t_end, DEFAULT_CFL_FRACTION).unwrap();
    let want = 1.5f64.sqrt();
    let (lo, hi) = radius_range(done.domain.boundary(), Point::new(0.0, 0.0));
    let mid = 0.5 * (lo + hi);
    assert!((mid - want).abs() <= 0.02 * want, "radius {mid} vs {want}");
    // Rotational symmetry is preserved to a couple of cells.
    assert!(hi - lo <= 2.0 * done.domain.spec().h, "spread {}", hi - lo);
}

#[test]
fn zero_flow_leaves_the_domain_alone() {
    let state = disk_state(128, 1.0, OperatorDesc::laplace(), 0.0);
    let next = strong_step(&state, 0.05).unwrap();
    assert_eq!(state.domain.mask(), next.domain.mask());
    assert!((next.t - 0.05).abs() < 1e-15);
}

#[test]
fn suction_and_cfl_violations_are_refused() {
    let spec = GridSpec::square(-2.0, 2.0, 128).unwrap();
    let domain = Arc::new(make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap());
    assert!(matches!(
        GrowthState::new(domain, OperatorDesc::laplace(), Point::new(0.0, 0.0), -1.0),
        Err(Error::SuctionRefused)
    ));
    let state = disk_state(128, 1.0, OperatorDesc::laplace(), 1.0);
    assert!(matches!(
        strong_step(&state, 10.0),
        Err(Error::CflViolation { .. })
    ));
}

#[test]
fn perturbation_modes_decay_under_laplace_growth() {
    // r(θ) = 1 + 0.1 cos 4θ flattens toward a circle as it grows.
    let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
    let raw = ScalarField::from_fn(spec, |p| {
        let theta = p.y.atan2(p.x);
        p.norm() - (1.0 + 0.1 * (4.0 * theta).cos())
    });
    let domain = Arc::new(GridDomain::from_levelset(raw).unwrap());
    let mut state =
        GrowthState::new(domain, OperatorDesc::laplace(), Point::new(0.0, 0.0), 1.0).unwrap();
    let mut amplitudes = vec![amplitude(&state)];
    for _ in 0..5 {
        let (speeds, iters) = state.boundary_speeds().unwrap();
        let max_vn = speeds.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dt = DEFAULT_CFL_FRACTION * state.domain.spec().h / max_vn;
        let _ = iters;
        for _ in 0..6 {
            state = strong_step(&state, dt).unwrap();
        }
        amplitudes.push(amplitude(&state));
    }
    for w in amplitudes.windows(2) {
        assert!(w[1] < w[0] + 1e-4, "amplitudes {amplitudes:?}");
    }
    assert!(
        amplitudes.last().unwrap() < &(0.8 * amplitudes[0]),
        "no decay: {amplitudes:?}"
    );
}

fn amplitude(state: &GrowthState) -> f64 {
    let (lo, hi) = radius_range(state.domain.boundary(), Point::new(0.0, 0.0));
    0.5 * (hi - lo)
}

#[test]
fn growth_is_nested_under_positive_flow() {
    let mut state = disk_state(128, 0.9, OperatorDesc::laplace(), 1.0);
    for _ in 0..8 {
        let prev = state.clone();
        let (speeds, _) = state.boundary_speeds().unwrap();
        let max_vn = speeds.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dt = DEFAULT_CFL_FRACTION * state.domain.spec().h / max_vn;
        state = strong_step(&state, dt).unwrap();
        // Every node at least one cell deep stays inside.
        let spec = state.domain.spec();
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let idx = spec.index(i, j);
                if prev.domain.mask()[idx] && prev.domain.phi().values()[idx] < -spec.h {
                    assert!(state.domain.mask()[idx], "nesting broken at ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn weak_step_absorbs_the_injected_mass() {
    let state = disk_state(256, 1.0, OperatorDesc::laplace(), 1.0);
    let dt = 1.0;
    let next = weak_step(&state, dt).unwrap();
    let want = PI + dt;
    assert!(
        (next.domain.area() - want).abs() <= 0.01 * want,
        "area {} vs {want}",
        next.domain.area()
    );
    let unchanged = weak_step(&state, 0.0).unwrap();
    assert_eq!(unchanged.domain.mask(), state.domain.mask());
}

#[test]
fn moment_trace_requires_three_samples() {
    let state = disk_state(128, 1.0, OperatorDesc::laplace(), 1.0);
    assert!(matches!(
        moment_trace(&state.log, 1.0, &[]),
        Err(Error::ShortFamily)
    ));
}

#[test]
fn elliptic_richardson_for_lharmonic_test_functions() {
    // d/dt ∫φ dA = Q·φ(w) for Lφ = 0, with φ from Dirichlet solves on an
    // enclosing disk.
    let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
    let lam = ScalarField::from_fn(spec, |p| 1.0 + 0.3 * p.x * p.x);
    let op = OperatorDesc::beltrami(lam).unwrap();
    let enclosing = make_disk(Point::new(0.0, 0.0), 1.6, spec).unwrap();
    let w = Point::new(0.0, 0.0);
    let tests = lharmonic_test_functions(&op, &enclosing, w).unwrap();
    let phi_at_w: Vec<f64> = tests.iter().map(|(_, v)| *v).collect();

    let domain = Arc::new(make_disk(Point::new(0.0, 0.0), 0.9, spec).unwrap());
    let state = GrowthState::new(domain, op, w, 1.0)
        .unwrap()
        .with_test_functions(tests)
        .unwrap();
    let done = run_strong(state, 0.6, DEFAULT_CFL_FRACTION).unwrap();
    let report = moment_trace(&done.log, 1.0, &phi_at_w).unwrap();

    // φ ≡ 1 is the area-rate law at 2%; the nontrivial tests carry the
    // finite-difference noise of small integrals, allow 5%.
    let (rate, target) = report.test_rates[0];
    assert!((rate - target).abs() <= 0.02 * target.abs(), "area rate {rate} vs {target}");
    for &(rate, target) in &report.test_rates[1..] {
        let scale = target.abs().max(0.05);
        assert!((rate - target).abs() <= 0.05 * scale, "rate {rate} vs {target}");
    }
}

#[test]
fn radial_rate_laws_match_the_closed_forms() {
    // Constant permeability: rate 1.
    let flat = radial_area_rate(&|_| 2.0, 0.8, 256).unwrap();
    assert!((flat.predicted - 1.0).abs() < 1e-12);
    assert!((flat.measured - 1.0).abs() <= 0.02);

    // λ = I0(r)² gives 1/I0(R); the series oracle pins the reference.
    let rr = radial_area_rate(&|s| bessel_i0(s).powi(2), 1.0, 256).unwrap();
    let want = 1.0 / bessel_i0(1.0);
    assert!((want - 0.789_848_3).abs() < 1e-6);
    assert!((rr.predicted - want).abs() <= 1e-9);
    assert!((rr.measured - want).abs() <= 0.02 * want, "measured {}", rr.measured);

    // λ = exp(2r²) gives exp(-R²).
    let rr = radial_area_rate(&|s| (2.0 * s * s).exp(), 1.0, 256).unwrap();
    let want = (-1.0f64).exp();
    assert!((want - 0.367_879_4).abs() < 1e-6);
    assert!((rr.measured - want).abs() <= 0.02 * want, "measured {}", rr.measured);

    // Decreasing profiles violate the hypothesis and are refused.
    assert!(matches!(
        radial_area_rate(&|s| 2.0 - s, 0.8, 128),
        Err(Error::DecreasingPermeability(_))
    ));
}

#[test]
fn initial_rates_rise_toward_unity() {
    // u ≡ 0 is Laplacian growth: rate 1 at every radius.
    let flat = initial_rate_probe(&|_| 0.0, &[0.4, 0.2], 192).unwrap();
    for (_, rate) in &flat {
        assert!((rate - 1.0).abs() <= 0.02, "rate {rate}");
    }
    // u ≡ 1: rates 1/I0(R), increasing toward 1 and inside (0, 1].
    let rates = initial_rate_probe(&|_| 1.0, &[0.4, 0.2, 0.1], 192).unwrap();
    for (r, rate) in &rates {
        let want = 1.0 / bessel_i0(*r);
        assert!((rate - want).abs() <= 0.02 * want, "R={r}: {rate} vs {want}");
        assert!(*rate > 0.0 && *rate <= 1.0 + 1e-6);
    }
    assert!(rates.windows(2).all(|w| w[1].1 > w[0].1), "{rates:?}");
}

#[test]
fn schrodinger_growth_slower_than_injection() {
    let spec = GridSpec::square(-2.0, 2.0, 192).unwrap();
    let u = ScalarField::constant(spec, 1.0);
    let domain = Arc::new(make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap());
    let state = GrowthState::new(
        domain,
        OperatorDesc::schrodinger(u).unwrap(),
        Point::new(0.0, 0.0),
        1.0,
    )
    .unwrap();
    let rate = instantaneous_rate(&state).unwrap();
    assert!(rate > 0.0 && rate <= 1.0 + 0.01, "rate {rate}");
}

#[test]
fn zero_rate_families_are_rejected() {
    let spec = GridSpec::square(-2.0, 2.0, 256).unwrap();
    // Foci separating at unit rate, semiminor axis pinned at 1: the area
    // rate vanishes at t = 0.
    let family: Vec<(f64, GridDomain)> = [-0.05f64, 0.0, 0.05]
        .iter()
        .map(|&t| {
            let semi_major = (1.0 + t * t).sqrt();
            (t, make_ellipse(Point::new(0.0, 0.0), semi_major, 1.0, spec).unwrap())
        })
        .collect();
    let verdict = reject_zero_rate_families(&family).unwrap();
    assert!(verdict.rejected, "{}", verdict.reason);

    // A constant family is rejected outright.
    let frozen: Vec<(f64, GridDomain)> = [0.0f64, 0.1, 0.2]
        .iter()
        .map(|&t| (t, make_disk(Point::new(0.0, 0.0), 0.8, spec).unwrap()))
        .collect();
    assert!(reject_zero_rate_families(&frozen).unwrap().rejected);

    // A genuinely growing family passes.
    let state = disk_state(192, 0.8, OperatorDesc::laplace(), 1.0);
    let s1 = strong_step(&state, 0.02).unwrap();
    let s2 = strong_step(&s1, 0.02).unwrap();
    let grown = vec![
        (0.0, (*state.domain).clone()),
        (s1.t, (*s1.domain).clone()),
        (s2.t, (*s2.domain).clone()),
    ];
    let verdict = reject_zero_rate_families(&grown).unwrap();
    assert!(!verdict.rejected, "{}", verdict.reason);
}

#[test]
fn run_log_and_boundary_snapshots_serialize() {
    let state = disk_state(128, 1.0, OperatorDesc::laplace(), 1.0);
    let s1 = strong_step(&state, 0.01).unwrap();
    let s2 = strong_step(&s1, 0.01).unwrap();
    let csv = log_to_csv(&s2.log);
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "step,t,area,rate,re_t1,im_t1,re_t2,im_t2,re_t3,im_t3,re_t4,im_t4,max_vn,solver_iters"
    );
    assert_eq!(csv.lines().count(), 4);

    let snap = boundary_to_csv(s2.t, &s2.domain);
    assert!(snap.starts_with("t,index,x,y\n"));
    assert_eq!(snap.lines().count(), s2.domain.boundary().len() + 1);
}
