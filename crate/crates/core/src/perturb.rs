//! Variational formulas for Green functions under operator and domain
//! perturbations, each paired with a direct re-solve defect study.
//!
//! Sign conventions follow the Green normalization `L g = δ_w`, `g ≤ 0`:
//!
//! - domain variation (Hadamard, weighted λ):
//!   `δg_w(z) = -∫_{∂D} p λ ∂ₙg_z ∂ₙg_w ds`;
//! - Schrödinger `Δ - εu`: `g* = Σ εⁿ (TU)ⁿ g_w` with `Tφ(z) = ∫ φ g_z dA`;
//! - Laplace–Beltrami `λ = 1 + εp`:
//!   `δg(z,w) = ∫ p ∇g_z·∇g_w dA`
//!   `       = -g(z,w)(p(z)+p(w))/2 + ½∫ g_z g_w Δp dA`;
//! - normal derivatives: `δ∂ₙg_w(ζ) = ∫ u g_w P_ζ dA` (Schrödinger) and
//!   `½[∫ Δu g_w P_ζ dA − ∂ₙg_w(ζ)(u(ζ)+u(w))]` (Beltrami).
//!
//! `T` is applied through an auxiliary Dirichlet solve (`ΔTφ = φ`, zero
//! boundary data) rather than kernel quadrature, and kernel integrals
//! against `P_ζ` go through the same adjoint route, so every first-order
//! prediction is the exact derivative of the discrete solve family it is
//! tested against.

use crate::error::{Error, Result};
use crate::green::{
    self, green, source_normal_response, GreenSolution, OperatorDesc,
};
use crate::grid::{
    boundary_integrate, make_disk, BoundaryProfile, GridDomain, GridSpec, Point, ScalarField,
};
use serde::Serialize;
use std::sync::Arc;

/// Radius, in cells, of the ball excised around each Green singularity in
/// volume quadratures; the excised mass is restored analytically
/// (documented error budget: 1% of the integral).
const SINGULAR_BALL_CELLS: f64 = 3.0;

/// Cut-cell weight of the excision circle: 0 inside the ball, 1 outside,
/// linear across one cell, so the discrete excised region matches the
/// analytic patch disk to second order.
pub(crate) fn excision_weight(dist: f64, ball: f64, h: f64) -> f64 {
    ((dist - ball) / h + 0.5).clamp(0.0, 1.0)
}

/// One ε sample of a first-order law: the predicted and re-solved changes
/// and their gap.
#[derive(Clone, Debug, Serialize)]
pub struct VariationSample {
    pub epsilon: f64,
    pub predicted_delta: f64,
    pub direct_delta: f64,
    /// `|predicted - direct|` in the law's norm.
    pub gap: f64,
    /// `gap / ε`; first-order correctness makes this scale like ε.
    pub defect: f64,
}

/// Defect study of one variational law at a falling ε sequence.
#[derive(Clone, Debug, Serialize)]
pub struct VariationReport {
    pub law: String,
    pub samples: Vec<VariationSample>,
    /// Gap ratio under ε-halving; 4 for a clean o(ε) law.
    pub gap_ratio: f64,
    pub pass_range: (f64, f64),
    pub passed: bool,
}

impl VariationReport {
    pub(crate) fn from_gaps(law: &str, eps: &[f64], gaps: &[(f64, f64, f64)], range: (f64, f64)) -> Self {
        let samples: Vec<VariationSample> = eps
            .iter()
            .zip(gaps)
            .map(|(&epsilon, &(predicted, direct, gap))| VariationSample {
                epsilon,
                predicted_delta: predicted,
                direct_delta: direct,
                gap,
                defect: gap / epsilon,
            })
            .collect();
        let gap_ratio = samples[0].gap / samples[1].gap.max(1e-300);
        VariationReport {
            law: law.into(),
            samples,
            gap_ratio,
            pass_range: range,
            passed: gap_ratio >= range.0 && gap_ratio <= range.1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn lambda_profile(domain: &GridDomain, lambda: Option<&ScalarField>) -> BoundaryProfile {
    match lambda {
        None => BoundaryProfile::constant(domain, 1.0),
        Some(l) => BoundaryProfile::from_fn(domain, |p| l.bilinear(p)),
    }
}

fn triple_integral(
    domain: &GridDomain,
    p: &BoundaryProfile,
    lam: &BoundaryProfile,
    nd_z: &BoundaryProfile,
    nd_w: &BoundaryProfile,
) -> Result<f64> {
    let product = BoundaryProfile::from_values(
        p.values()
            .iter()
            .zip(lam.values())
            .zip(nd_z.values().iter().zip(nd_w.values()))
            .map(|((&p, &l), (&a, &b))| p * l * a * b)
            .collect(),
    );
    Ok(-boundary_integrate(&product, domain)?)
}

/// First variation of `g_w(z)` when every boundary point moves a distance
/// `ε p(ζ)` along the outward normal: returns the ε-coefficient
/// `-∫ p λ ∂ₙg_z ∂ₙg_w ds` (λ ≡ 1 when absent).
pub fn hadamard_variation(
    domain: &Arc<GridDomain>,
    w: Point,
    z: Point,
    p: &BoundaryProfile,
    lambda: Option<&ScalarField>,
) -> Result<f64> {
    p.check_aligned(domain)?;
    let op = match lambda {
        None => OperatorDesc::laplace(),
        Some(l) => OperatorDesc::beltrami(l.clone())?,
    };
    let gs_w = green(&op, domain, w, 1.0)?;
    let nd_w = green::normal_derivative(&gs_w)?;
    let nd_z = if z.dist(w) < 1e-14 {
        nd_w.clone()
    } else {
        green::normal_derivative(&green(&op, domain, z, 1.0)?)?
    };
    triple_integral(domain, p, &lambda_profile(domain, lambda), &nd_z, &nd_w)
}

/// The three cyclic pumping derivatives of the zero-curvature relation.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroCurvature {
    /// `∂g(a,b)/∂T_c`, `∂g(a,c)/∂T_b`, `∂g(b,c)/∂T_a`.
    pub derivatives: [f64; 3],
    pub max_relative_gap: f64,
}

/// Cyclic symmetry of `∂g(a,b)/∂T_c = -∫ λ² ∂ₙg_a ∂ₙg_b ∂ₙg_c ds`: the
/// three integrals are the same product in different factor order, so
/// they agree to floating-point reassociation.
pub fn zero_curvature_check(
    domain: &Arc<GridDomain>,
    a: Point,
    b: Point,
    c: Point,
    lambda: Option<&ScalarField>,
) -> Result<ZeroCurvature> {
    let op = match lambda {
        None => OperatorDesc::laplace(),
        Some(l) => OperatorDesc::beltrami(l.clone())?,
    };
    let lam = lambda_profile(domain, lambda);
    let nd: Vec<BoundaryProfile> = [a, b, c]
        .iter()
        .map(|&pt| green::normal_derivative(&green(&op, domain, pt, 1.0)?))
        .collect::<Result<_>>()?;
    let weighted = |k: usize| nd[k].zip(&lam, |d, l| d * l);
    let derivatives = [
        triple_integral(domain, &weighted(2), &lam, &nd[0], &nd[1])?,
        triple_integral(domain, &weighted(1), &lam, &nd[0], &nd[2])?,
        triple_integral(domain, &weighted(0), &lam, &nd[1], &nd[2])?,
    ];
    let scale = derivatives
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let mut gap = 0.0f64;
    for i in 0..3 {
        for j in i + 1..3 {
            gap = gap.max((derivatives[i] - derivatives[j]).abs());
        }
    }
    Ok(ZeroCurvature {
        derivatives,
        max_relative_gap: gap / scale,
    })
}

/// Partial sum of the Schrödinger Green series for `Δ − εu`, with the
/// last-term norm as truncation estimate.
#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub base: GreenSolution,
    /// Partial sum including the base term.
    pub total: ScalarField,
    pub terms_used: usize,
    /// Max-norm of the last added term (scaled by its ε power).
    pub last_term_norm: f64,
    /// The ε‖u‖‖T‖ contraction estimate from one power iteration.
    pub contraction_estimate: f64,
}

/// Sum `Σ_{k≤n} εᵏ (TU)ᵏ g_w`, guarding divergence by the one-step
/// contraction estimate (must stay below 0.5).  At most 6 terms.
pub fn schrodinger_green_series(
    domain: &Arc<GridDomain>,
    u: &ScalarField,
    w: Point,
    epsilon: f64,
    n_terms: usize,
) -> Result<SeriesResult> {
    if n_terms > 6 {
        return Err(Error::SeriesTooLong(n_terms));
    }
    let base = green(&OperatorDesc::laplace(), domain, w, 1.0)?;
    let mut sum = base.total.clone();
    let mut term = base.total.clone();
    let mut last_norm = 0.0;
    let mut contraction = 0.0;
    for k in 1..=n_terms {
        let source = u.mul(&term)?;
        term = green::poisson_zero_bc(domain, &source)?;
        if k == 1 {
            contraction = epsilon.abs() * term.linf() / base.total.linf().max(1e-300);
            if contraction >= 0.5 {
                return Err(Error::SeriesDivergence(contraction));
            }
        }
        let scale = epsilon.powi(k as i32);
        sum = sum.axpy(scale, &term)?;
        last_norm = scale.abs() * term.linf();
    }
    Ok(SeriesResult {
        base,
        total: sum,
        terms_used: n_terms,
        last_term_norm: last_norm,
        contraction_estimate: contraction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeltramiFormula {
    /// `∫ p ∇g_z·∇g_w dA`
    Gradient,
    /// `-g(z,w)(p(z)+p(w))/2 + ½ ∫ g_z g_w Δp dA`
    Laplacian,
}

/// First-order change `ε·δg(z,w)` of the `∇λ∇` Green function under
/// `λ = 1 + εp`, by either algebraic route.  The 3-cell balls around `z`
/// and `w` are excised from the quadrature and restored analytically
/// through the singularity split.
pub fn beltrami_green_variation(
    domain: &Arc<GridDomain>,
    p: &ScalarField,
    w: Point,
    z: Point,
    epsilon: f64,
    formula: BeltramiFormula,
) -> Result<f64> {
    let spec = domain.spec();
    let h = spec.h;
    if z.dist(w) < 2.0 * SINGULAR_BALL_CELLS * h {
        return Err(Error::ProbeTooClose);
    }
    let op = OperatorDesc::laplace();
    let gs_z = green(&op, domain, z, 1.0)?;
    let gs_w = green(&op, domain, w, 1.0)?;
    let ball = SINGULAR_BALL_CELLS * h;
    let h2 = h * h;

    let coeff = match formula {
        BeltramiFormula::Gradient => {
            // The integrand steepens like 1/r near each excised ball;
            // node cells within the surrounding annulus are subsampled
            // 3x3 so the midpoint error there stays below the o(ε) term.
            let annulus = 6.0 * ball;
            let integrand =
                |pt: Point, pv: f64| pv * gs_z.grad_at(pt).dot(gs_w.grad_at(pt));
            let mut sum = 0.0;
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    let idx = spec.index(i, j);
                    let wgt = domain.cut_weight(idx);
                    if wgt == 0.0 {
                        continue;
                    }
                    let pt = spec.node(i, j);
                    let cut = excision_weight(pt.dist(z), ball, h)
                        * excision_weight(pt.dist(w), ball, h);
                    if cut == 0.0 {
                        continue;
                    }
                    if pt.dist(z) < annulus || pt.dist(w) < annulus {
                        let mut cell = 0.0;
                        for sj in 0..4 {
                            for si in 0..4 {
                                let q = Point::new(
                                    pt.x + (si as f64 - 1.5) * h / 4.0,
                                    pt.y + (sj as f64 - 1.5) * h / 4.0,
                                );
                                cell += integrand(q, p.bilinear(q));
                            }
                        }
                        sum += cut * wgt * cell / 16.0;
                    } else {
                        sum += cut * wgt * integrand(pt, p.values()[idx]);
                    }
                }
            }
            let mut v = sum * h2;
            // Excised balls: ∫_ball ∇E dA vanishes by symmetry and
            // ∫_ball ∇E (x−z)ᵀ dA = (a²/4)·Id, so the patch keeps the
            // smooth regular gradient plus the odd-kernel cross term.
            let ball_area = std::f64::consts::PI * ball * ball;
            let quarter = 0.25 * ball * ball * 2.0 * std::f64::consts::PI;
            for (a_pt, gs_a, gs_b) in [(z, &gs_z, &gs_w), (w, &gs_w, &gs_z)] {
                v += ball_area
                    * p.bilinear(a_pt)
                    * gs_a.regular_part.grad_bilinear(a_pt).dot(gs_b.grad_at(a_pt));
                let gp = p.grad_bilinear(a_pt);
                let gb = gs_b.grad_at(a_pt);
                v += quarter * gs_a.strength / (2.0 * std::f64::consts::PI) * gp.dot(gb);
            }
            v
        }
        BeltramiFormula::Laplacian => {
            let lap_p = p.laplacian_field();
            let mut sum = 0.0;
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    let idx = spec.index(i, j);
                    let wgt = domain.cut_weight(idx);
                    if wgt == 0.0 {
                        continue;
                    }
                    let pt = spec.node(i, j);
                    let cut = excision_weight(pt.dist(z), ball, h)
                        * excision_weight(pt.dist(w), ball, h);
                    if cut == 0.0 {
                        continue;
                    }
                    sum += cut
                        * wgt
                        * lap_p.values()[idx]
                        * gs_z.total.values()[idx]
                        * gs_w.total.values()[idx];
                }
            }
            let mut integral = sum * h2;
            // Analytic log-ball patch: ∫_{r<a} (2π)^-1 ln r dA
            // = a² ln(a)/2 − a²/4.
            let log_ball = 0.5 * ball * ball * ball.ln() - 0.25 * ball * ball;
            let ball_area = std::f64::consts::PI * ball * ball;
            integral += lap_p.bilinear(z)
                * gs_w.value_at(z)
                * (log_ball + gs_z.regular_part.bilinear(z) * ball_area);
            integral += lap_p.bilinear(w)
                * gs_z.value_at(w)
                * (log_ball + gs_w.regular_part.bilinear(w) * ball_area);
            let g_zw = gs_w.value_at(z);
            -g_zw * 0.5 * (p.bilinear(z) + p.bilinear(w)) + 0.5 * integral
        }
    };
    Ok(epsilon * coeff)
}

/// Predicted `∂ₙg*_w(ζ)` for the Schrödinger operator `Δ − εu`:
/// `∂ₙg_w(ζ) + ε ∫ u g_w P_ζ dA`, the kernel integral done adjointly.
pub fn normal_variation_schrodinger(
    domain: &Arc<GridDomain>,
    u: &ScalarField,
    w: Point,
    zeta_index: usize,
    epsilon: f64,
) -> Result<f64> {
    let nb = domain.boundary().len();
    if zeta_index >= nb {
        return Err(Error::BoundaryIndex(zeta_index, nb));
    }
    let base = green(&OperatorDesc::laplace(), domain, w, 1.0)?;
    let nd = green::normal_derivative(&base)?;
    let corr = source_normal_response(domain, &u.mul(&base.total)?)?;
    Ok(nd.values()[zeta_index] + epsilon * corr.values()[zeta_index])
}

/// Predicted `∂ₙg*_w(ζ)` for `∇(1+εu)∇`:
/// `∂ₙg_w(ζ) + (ε/2)[∫ Δu g_w P_ζ dA − ∂ₙg_w(ζ)(u(ζ)+u(w))]`.
pub fn normal_variation_beltrami(
    domain: &Arc<GridDomain>,
    u: &ScalarField,
    w: Point,
    zeta_index: usize,
    epsilon: f64,
) -> Result<f64> {
    let nb = domain.boundary().len();
    if zeta_index >= nb {
        return Err(Error::BoundaryIndex(zeta_index, nb));
    }
    let base = green(&OperatorDesc::laplace(), domain, w, 1.0)?;
    let nd = green::normal_derivative(&base)?.values()[zeta_index];
    let lap_u = u.laplacian_field();
    let corr = source_normal_response(domain, &lap_u.mul(&base.total)?)?.values()[zeta_index];
    let zeta = domain.boundary()[zeta_index].position;
    Ok(nd + 0.5 * epsilon * (corr - nd * (u.bilinear(zeta) + u.bilinear(w))))
}

/// Defect studies: each first-order law re-solved at a falling ε pair.
/// The raw gap `‖direct(ε) − (base + εF)‖` must shrink under ε-halving by
/// a factor in the law's range (near 4).
pub mod laws {
    use super::*;

    /// Range absorbing grid error for re-solve defect ratios.
    pub const DEFECT_RANGE: (f64, f64) = (3.0, 5.5);
    /// Tighter range for the series law, whose one-term prediction is the
    /// exact derivative of the discrete solve family.
    pub const SERIES_RANGE: (f64, f64) = (3.3, 4.8);

    fn unit_disk(n: usize) -> Result<Arc<GridDomain>> {
        let spec = GridSpec::square(-2.0, 2.0, n)?;
        Ok(Arc::new(make_disk(Point::new(0.0, 0.0), 1.0, spec)?))
    }

    /// Hadamard law on the unit disk with p ≡ 1, compared through the
    /// regular part at the source (the fundamental part is
    /// domain-independent, so the regular parts carry the variation).
    pub fn hadamard(n: usize, eps: &[f64; 2]) -> Result<VariationReport> {
        let domain = unit_disk(n)?;
        let w = Point::new(0.0, 0.0);
        let base = green(&OperatorDesc::laplace(), &domain, w, 1.0)?;
        let base_val = base.regular_part.bilinear(w);
        let coeff =
            hadamard_variation(&domain, w, w, &BoundaryProfile::constant(&domain, 1.0), None)?;
        let mut gaps = Vec::new();
        for &e in eps {
            let inflated = Arc::new(make_disk(w, 1.0 + e, domain.spec())?);
            let re = green(&OperatorDesc::laplace(), &inflated, w, 1.0)?;
            let direct = re.regular_part.bilinear(w) - base_val;
            let predicted = e * coeff;
            gaps.push((predicted, direct, (predicted - direct).abs()));
        }
        Ok(VariationReport::from_gaps("hadamard", eps, &gaps, DEFECT_RANGE))
    }

    /// One-term Schrödinger series against the direct `Δ − εu` solve, in
    /// the max norm over nodes 3 cells clear of the source and boundary.
    pub fn schrodinger_series(n: usize, eps: &[f64; 2]) -> Result<VariationReport> {
        let domain = unit_disk(n)?;
        let w = Point::new(0.2, 0.1);
        let spec = domain.spec();
        let u = ScalarField::from_fn(spec, |p| 1.0 + p.x * p.x);
        let base = green(&OperatorDesc::laplace(), &domain, w, 1.0)?;
        let mut gaps = Vec::new();
        for &e in eps {
            let series = schrodinger_green_series(&domain, &u, w, e, 1)?;
            let direct = green(&OperatorDesc::schrodinger(u.scaled(e))?, &domain, w, 1.0)?;
            let mut gap = 0.0f64;
            let mut pred_delta = 0.0f64;
            let mut dir_delta = 0.0f64;
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    let idx = spec.index(i, j);
                    if !domain.mask()[idx] {
                        continue;
                    }
                    let pt = spec.node(i, j);
                    if domain.depth_cells(pt) < 3.0 || pt.dist(w) < 3.0 * spec.h {
                        continue;
                    }
                    gap = gap.max((series.total.values()[idx] - direct.total.values()[idx]).abs());
                    pred_delta = pred_delta
                        .max((series.total.values()[idx] - base.total.values()[idx]).abs());
                    dir_delta = dir_delta
                        .max((direct.total.values()[idx] - base.total.values()[idx]).abs());
                }
            }
            gaps.push((pred_delta, dir_delta, gap));
        }
        Ok(VariationReport::from_gaps("schrodinger-series", eps, &gaps, SERIES_RANGE))
    }

    pub fn beltrami(n: usize, eps: &[f64; 2], formula: BeltramiFormula) -> Result<VariationReport> {
        let domain = unit_disk(n)?;
        let spec = domain.spec();
        let z = Point::new(0.35, 0.1);
        let w = Point::new(-0.3, 0.2);
        let p = ScalarField::from_fn(spec, |q| 1.0 + 0.5 * q.x);
        let base = green(&OperatorDesc::laplace(), &domain, w, 1.0)?;
        let base_val = base.value_at(z);
        let mut gaps = Vec::new();
        for &e in eps {
            let predicted = beltrami_green_variation(&domain, &p, w, z, e, formula)?;
            let lambda = ScalarField::from_fn(spec, |q| 1.0 + e * (1.0 + 0.5 * q.x));
            let re = green(&OperatorDesc::beltrami(lambda)?, &domain, w, 1.0)?;
            let direct = re.value_at(z) - base_val;
            gaps.push((predicted, direct, (predicted - direct).abs()));
        }
        let name = match formula {
            BeltramiFormula::Gradient => "beltrami-gradient",
            BeltramiFormula::Laplacian => "beltrami-laplacian",
        };
        Ok(VariationReport::from_gaps(name, eps, &gaps, DEFECT_RANGE))
    }

    pub fn normal_schrodinger(n: usize, eps: &[f64; 2]) -> Result<VariationReport> {
        let domain = unit_disk(n)?;
        let u = ScalarField::constant(domain.spec(), 1.0);
        let w = Point::new(0.0, 0.0);
        let zeta = domain.boundary().len() / 3;
        let base = green(&OperatorDesc::laplace(), &domain, w, 1.0)?;
        let base_nd = green::normal_derivative(&base)?.values()[zeta];
        let mut gaps = Vec::new();
        for &e in eps {
            let predicted = normal_variation_schrodinger(&domain, &u, w, zeta, e)?;
            let re = green(&OperatorDesc::schrodinger(u.scaled(e))?, &domain, w, 1.0)?;
            let direct = green::normal_derivative(&re)?.values()[zeta];
            gaps.push((
                predicted - base_nd,
                direct - base_nd,
                (predicted - direct).abs(),
            ));
        }
        Ok(VariationReport::from_gaps("normal-schrodinger", eps, &gaps, DEFECT_RANGE))
    }

    pub fn normal_beltrami(n: usize, eps: &[f64; 2]) -> Result<VariationReport> {
        let domain = unit_disk(n)?;
        let spec = domain.spec();
        let u = ScalarField::from_fn(spec, |p| p.norm2());
        let w = Point::new(0.0, 0.0);
        let zeta = domain.boundary().len() / 4;
        let base = green(&OperatorDesc::laplace(), &domain, w, 1.0)?;
        let base_nd = green::normal_derivative(&base)?.values()[zeta];
        let mut gaps = Vec::new();
        for &e in eps {
            let predicted = normal_variation_beltrami(&domain, &u, w, zeta, e)?;
            let lambda = ScalarField::from_fn(spec, |p| 1.0 + e * p.norm2());
            let re = green(&OperatorDesc::beltrami(lambda)?, &domain, w, 1.0)?;
            let direct = green::normal_derivative(&re)?.values()[zeta];
            gaps.push((
                predicted - base_nd,
                direct - base_nd,
                (predicted - direct).abs(),
            ));
        }
        Ok(VariationReport::from_gaps("normal-beltrami", eps, &gaps, DEFECT_RANGE))
    }
}
