//! Subcommand runners: each consumes a validated scenario, writes its
//! artifact tree and returns the per-check outcomes for the manifest.

use crate::config::{ScenarioConfig, VariationConfig};
use crate::expr;
use anyhow::{anyhow, bail, Result};
use elgrow_core::balayage::{partial_balayage, quadrature_domain_check};
use elgrow_core::dirichlet;
use elgrow_core::green::{self, OperatorKind};
use elgrow_core::grid::{io, BoundaryProfile, GridSpec, ScalarField};
use elgrow_core::growth::{self, GrowthState};
use elgrow_core::inverse;
use elgrow_core::perturb::{self, BeltramiFormula};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

fn write(out: &mut Outcome, dir: &Path, name: &str, text: String) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    out.artifacts.push(path);
    Ok(())
}

pub fn run(cfg: &ScenarioConfig, grid_n: Option<usize>, dir: &Path, quiet: bool) -> Result<Outcome> {
    std::fs::create_dir_all(dir)?;
    let mut out = Outcome {
        checks: Vec::new(),
        artifacts: Vec::new(),
    };
    match cfg.command.as_str() {
        "green" => green_cmd(cfg, grid_n, dir, &mut out)?,
        "dirichlet" => dirichlet_cmd(cfg, grid_n, dir, &mut out)?,
        "perturb" => perturb_cmd(cfg, grid_n, dir, &mut out)?,
        "balayage" => balayage_cmd(cfg, grid_n, dir, &mut out)?,
        "grow" => grow_cmd(cfg, grid_n, dir, quiet, &mut out)?,
        "rates" => rates_cmd(cfg, grid_n, dir, &mut out)?,
        "dtn" => dtn_cmd(cfg, grid_n, dir, &mut out)?,
        "reproduce-paper" => reproduce_cmd(dir, quiet, &mut out)?,
        other => bail!("unknown command {other:?}"),
    }
    Ok(out)
}

fn green_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let spec = cfg.grid_spec(grid_n)?;
    let domain = cfg.build_domain(spec)?;
    let op = cfg.build_operator(spec)?;
    let (w, q) = cfg.build_source()?;
    let gs = green::green(&op, &domain, w, q)?;
    let nd = green::normal_derivative(&gs)?;
    let flux = elgrow_core::boundary_integrate(&nd, &domain)?;
    write(out, dir, "green_total.pgm", io::field_to_pgm(&gs.total))?;
    write(out, dir, "green_total.csv", io::field_to_csv(&gs.total))?;
    write(out, dir, "normal_derivative.csv", io::profile_to_csv(&nd, &domain))?;
    write(out, dir, "solver_report.json", serde_json::to_string_pretty(&gs.report)?)?;
    out.checks.push(Check::new(
        "normal-flux-matches-strength",
        (flux - q).abs() <= 0.02 * q.abs().max(1e-12),
        format!("∮∂ₙg ds = {flux:.6}, Q = {q}"),
    ));
    Ok(())
}

fn dirichlet_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let spec = cfg.grid_spec(grid_n)?;
    let domain = cfg.build_domain(spec)?;
    let op = cfg.build_operator(spec)?;
    let expr = cfg.boundary_expr()?;
    let f = BoundaryProfile::from_fn(&domain, |p| expr.eval(p));
    let sol = green::dirichlet_solve(&op, &domain, &f)?;
    let flux = green::normal_derivative_of(&sol, &domain, &f)?;
    write(out, dir, "dirichlet.pgm", io::field_to_pgm(&sol))?;
    write(out, dir, "dirichlet.csv", io::field_to_csv(&sol))?;
    write(out, dir, "boundary_flux.csv", io::profile_to_csv(&flux, &domain))?;
    if matches!(op.kind(), OperatorKind::Laplace) {
        // Extrema live on the boundary for harmonic solutions.
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in f.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mut ok = true;
        for (idx, &v) in sol.values().iter().enumerate() {
            if domain.mask()[idx] && (v < lo - 1e-6 || v > hi + 1e-6) {
                ok = false;
            }
        }
        out.checks.push(Check::new(
            "maximum-principle",
            ok,
            format!("interior range within boundary range [{lo:.4}, {hi:.4}]"),
        ));
    }
    Ok(())
}

fn perturb_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let VariationConfig { law, epsilons } = cfg
        .variation
        .clone()
        .ok_or_else(|| anyhow!("config field `variation` is required for perturb"))?;
    let n = grid_n.unwrap_or(cfg.grid.nx);
    let report = match law.as_str() {
        "hadamard" => perturb::laws::hadamard(n, &epsilons.unwrap_or([0.02, 0.01]))?,
        "schrodinger-series" => {
            perturb::laws::schrodinger_series(n, &epsilons.unwrap_or([0.02, 0.01]))?
        }
        "beltrami-gradient" => {
            perturb::laws::beltrami(n, &epsilons.unwrap_or([0.02, 0.01]), BeltramiFormula::Gradient)?
        }
        "beltrami-laplacian" => perturb::laws::beltrami(
            n,
            &epsilons.unwrap_or([0.02, 0.01]),
            BeltramiFormula::Laplacian,
        )?,
        "normal-schrodinger" => {
            perturb::laws::normal_schrodinger(n, &epsilons.unwrap_or([0.05, 0.025]))?
        }
        "normal-beltrami" => {
            perturb::laws::normal_beltrami(n, &epsilons.unwrap_or([0.05, 0.025]))?
        }
        "dirichlet-schrodinger" => {
            dirichlet::laws::dirichlet_schrodinger(n, &epsilons.unwrap_or([0.1, 0.05]))?
        }
        "dirichlet-beltrami" => {
            dirichlet::laws::dirichlet_beltrami(n, &epsilons.unwrap_or([0.1, 0.05]))?
        }
        other => bail!("unknown variation law {other:?}"),
    };
    write(out, dir, "variation_report.json", report.to_json())?;
    out.checks.push(Check::new(
        &format!("defect-law-{}", report.law),
        report.passed,
        format!("gap ratio {:.3} in [{}, {}]", report.gap_ratio, report.pass_range.0, report.pass_range.1),
    ));
    Ok(())
}

fn balayage_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let spec = cfg.grid_spec(grid_n)?;
    let mu = cfg.build_measure(spec)?;
    let lambda = cfg.lambda_field(spec)?;
    let result = partial_balayage(&mu, lambda.as_ref())?;
    let gap = quadrature_domain_check(&mu, &result, lambda.as_ref())?;
    write(out, dir, "result_density.pgm", io::field_to_pgm(&result.result_density))?;
    write(out, dir, "potential.csv", io::field_to_csv(&result.v))?;
    write(out, dir, "convergence_trace.csv", result.trace_csv())?;
    if let Ok(domain) = result.saturated_domain() {
        write(out, dir, "saturated_mask.pgm", io::mask_to_pgm(&domain))?;
    }
    out.checks.push(Check::new(
        "mass-conserved",
        result.mass_defect <= elgrow_core::balayage::MASS_TOL,
        format!("relative defect {:.2e}", result.mass_defect),
    ));
    out.checks.push(Check::new(
        "exterior-potential-matched",
        gap.gap <= 1e-3 * gap.scale,
        format!("gap {:.3e} vs scale {:.3e}", gap.gap, gap.scale),
    ));
    Ok(())
}

fn grow_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    quiet: bool,
    out: &mut Outcome,
) -> Result<()> {
    let spec = cfg.grid_spec(grid_n)?;
    let domain = cfg.build_domain(spec)?;
    let op = cfg.build_operator(spec)?;
    let (w, q) = cfg.build_source()?;
    let run = cfg
        .run
        .clone()
        .ok_or_else(|| anyhow!("config field `run` is required for grow"))?;
    let state = GrowthState::new(domain, op.clone(), w, q)?;

    let done = if run.mode == "weak" {
        let steps = run.snapshot_stride.max(1);
        let dt = run.t_end / steps as f64;
        let mut s = state;
        for k in 0..steps {
            s = growth::weak_step(&s, dt)?;
            if !quiet {
                println!("weak step {}/{}: area {:.5}", k + 1, steps, s.domain.area());
            }
            write(
                out,
                dir,
                &format!("mask_{:04}.pgm", k + 1),
                io::mask_to_pgm(&s.domain),
            )?;
            write(
                out,
                dir,
                &format!("boundary_{:04}.csv", k + 1),
                growth::boundary_to_csv(s.t, &s.domain),
            )?;
        }
        s
    } else if run.mode == "strong" {
        let mut s = state;
        let mut snap = 0usize;
        while s.t < run.t_end - 1e-12 {
            let remaining = run.t_end - s.t;
            let (speeds, _) = s.boundary_speeds()?;
            let max_vn = speeds.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dt = (run.cfl_fraction * spec.h / max_vn.max(1e-300)).min(remaining);
            s = growth::strong_step(&s, dt)?;
            if s.step % run.snapshot_stride == 0 || s.t >= run.t_end - 1e-12 {
                snap += 1;
                if !quiet {
                    println!("step {}: t = {:.4}, area = {:.5}", s.step, s.t, s.domain.area());
                }
                write(out, dir, &format!("mask_{snap:04}.pgm"), io::mask_to_pgm(&s.domain))?;
                write(
                    out,
                    dir,
                    &format!("boundary_{snap:04}.csv"),
                    growth::boundary_to_csv(s.t, &s.domain),
                )?;
            }
        }
        s
    } else {
        bail!("run.mode must be \"strong\" or \"weak\", got {:?}", run.mode);
    };

    write(out, dir, "run_log.csv", growth::log_to_csv(&done.log))?;
    if done.log.len() >= 3 {
        let report = growth::moment_trace(&done.log, q, &[])?;
        write(out, dir, "moment_report.json", serde_json::to_string_pretty(&report)?)?;
        match op.kind() {
            OperatorKind::Schrodinger => {
                let ok = done
                    .log
                    .iter()
                    .skip(1)
                    .all(|s| s.boundary_flux > 0.0 && s.boundary_flux <= 1.01 * q);
                out.checks.push(Check::new(
                    "area-rate-below-flow-rate",
                    ok,
                    "per-step ∮v_n ds in (0, Q]".into(),
                ));
            }
            _ => {
                let ok = (report.mean_area_rate - q).abs() <= 0.02 * q;
                out.checks.push(Check::new(
                    "area-rate-matches-flow-rate",
                    ok,
                    format!("mean dA/dt = {:.5}, Q = {q}", report.mean_area_rate),
                ));
            }
        }
    }
    Ok(())
}

fn rates_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let rates = cfg
        .rates
        .clone()
        .ok_or_else(|| anyhow!("config field `rates` is required for rates"))?;
    let expr = expr::parse(&rates.lambda).map_err(|e| anyhow!("lambda {:?}: {e}", rates.lambda))?;
    let lam = move |r: f64| expr.eval(elgrow_core::Point::new(r, 0.0));
    let n = grid_n.unwrap_or(cfg.grid.nx);
    let mut csv = String::from("radius,predicted,measured,relative_gap\n");
    let mut all_ok = true;
    for &r in &rates.radii {
        let check = growth::radial_area_rate(&lam, r, n)?;
        let rel = (check.measured - check.predicted).abs() / check.predicted;
        all_ok &= rel <= 0.02;
        csv.push_str(&format!(
            "{r},{:.9e},{:.9e},{:.3e}\n",
            check.predicted, check.measured, rel
        ));
    }
    write(out, dir, "rates.csv", csv)?;
    out.checks.push(Check::new(
        "measured-rates-match-law",
        all_ok,
        "√λ(0)/√λ(R) within 2%".into(),
    ));
    Ok(())
}

fn dtn_cmd(
    cfg: &ScenarioConfig,
    grid_n: Option<usize>,
    dir: &Path,
    out: &mut Outcome,
) -> Result<()> {
    let spec = cfg.grid_spec(grid_n)?;
    let domain = cfg.build_domain(spec)?;
    let lambda = cfg.lambda_field(spec)?;
    let dtn = cfg.dtn.clone().unwrap_or(crate::config::DtnConfig {
        order: 3,
        compare_response_mode: None,
    });
    let matrix = inverse::dtn_matrix(lambda.as_ref(), &domain, dtn.order)?;
    write(out, dir, "dtn_matrix.csv", matrix.to_csv())?;
    let sym = matrix.symmetry_defect();
    out.checks.push(Check::new(
        "dtn-symmetry",
        sym <= 0.02,
        format!("relative asymmetry {sym:.3e}"),
    ));
    if let Some(mode) = dtn.compare_response_mode {
        let f = inverse::mode_profile(&domain, inverse::BoundaryMode::Cos(mode))?;
        let direct = inverse::dtn_direct(lambda.as_ref(), &domain, &f)?;
        let via = inverse::dtn_from_response(
            lambda.as_ref(),
            &domain,
            &f,
            &inverse::ProbeRings::default(),
        )?;
        let mut gap = 0.0f64;
        for (a, b) in via.values().iter().zip(direct.values()) {
            gap = gap.max((a - b).abs());
        }
        let report = serde_json::json!({
            "mode": mode,
            "sup_gap": gap,
            "direct_sup": direct.linf(),
        });
        write(out, dir, "response_comparison.json", serde_json::to_string_pretty(&report)?)?;
        out.checks.push(Check::new(
            "response-pipeline-agrees",
            gap <= 0.03 * direct.linf(),
            format!("sup gap {gap:.3e} vs direct sup {:.3e}", direct.linf()),
        ));
    }
    Ok(())
}

fn reproduce_cmd(dir: &Path, quiet: bool, out: &mut Outcome) -> Result<()> {
    let results = elgrow_core::accept::run_all();
    for r in &results {
        if !quiet {
            println!("{}", r.line());
        }
        out.checks.push(Check::new(
            &format!("{:02}-{}", r.id, r.name),
            r.passed,
            r.detail.clone(),
        ));
    }
    write(out, dir, "acceptance.json", serde_json::to_string_pretty(&results)?)?;
    // The golden table ships alongside, as CSV.
    let spec = GridSpec::square(-2.0, 2.0, 256)?;
    let domain = std::sync::Arc::new(elgrow_core::make_disk(
        elgrow_core::Point::new(0.0, 0.0),
        1.0,
        spec,
    )?);
    let rows = dirichlet::golden_table(&domain)?;
    write(out, dir, "golden_table.csv", dirichlet::golden_rows_to_csv(&rows))?;
    let _ = ScalarField::zeros(spec);
    Ok(())
}
