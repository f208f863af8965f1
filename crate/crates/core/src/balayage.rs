//! Partial balayage as an obstacle problem: classical (Laplacian) and
//! elliptic (`∇λ∇`) sweeping of a measure to density at most 1, with the
//! exterior potential preserved.
//!
//! Given a measure μ with potential Λ (so `L Λ = μ`), the balayage is
//! `Bal_λ(μ, 1) = L V`, where `V` is the smallest function with
//! `V ≥ Λ` and `L V ≤ 1` on the whole plane.  Subtracting a particular
//! solution `q` of `L q = 1` turns this into the standard obstacle
//! problem for `W = V − q` (`L W ≤ 0`, `W ≥ Λ − q`), solved by projected
//! SOR.  Point atoms enter the obstacle analytically, never as grid
//! spikes: the log cusp of the obstacle is what pushes the free boundary
//! outward, and a discretized spike would flatten it.

use crate::error::{Error, Result};
use crate::green::system::{assemble_box, ProjectedReport};
use crate::grid::{GridDomain, GridSpec, Measure, Point, ScalarField};
use std::f64::consts::PI;

/// Successive-iterate convergence threshold, relative to the obstacle
/// scale.
const PSOR_TOL: f64 = 1e-11;
/// Row-equation residual demanded off the contact set, in density units
/// (keeps `LV ≤ 1 + 1e-8` honest).
const PSOR_RESID_TOL: f64 = 3e-9;
const PSOR_MAX_SWEEPS: usize = 400_000;

/// Mass-conservation tolerance; a larger defect flags an under-resolved
/// or under-margined box.
pub const MASS_TOL: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Newtonian,
    Elliptic,
}

/// The potential of a measure on a computational box: a grid part (the
/// density's potential plus atom correctors) and the atoms' analytic
/// log kernels.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub kind: PotentialKind,
    pub source: Measure,
    /// Total potential sampled at nodes, atom kernels clamped within a
    /// thousandth of a cell of each atom.
    pub field: ScalarField,
    /// Grid-borne part only (density potential + atom correctors).
    grid_part: ScalarField,
    /// The source the grid part solves against (density plus the atom
    /// corrector sources).
    grid_source: ScalarField,
    /// λ at each atom, fixing the frozen-coefficient kernel strength.
    atom_lambda: Vec<f64>,
}

impl PotentialField {
    /// Potential at an arbitrary point, atoms evaluated analytically.
    pub fn value_at(&self, p: Point) -> f64 {
        let h = self.field.spec().h;
        let mut v = self.grid_part.bilinear(p);
        for (a, &lam) in self.source.atoms().iter().zip(&self.atom_lambda) {
            let r = p.dist(a.point).max(1e-3 * h);
            v += a.mass * r.ln() / (2.0 * PI * lam);
        }
        v
    }

    /// Node values of the obstacle (same clamping as `field`).
    fn node_values(&self) -> Vec<f64> {
        self.field.values().to_vec()
    }

    /// Max-norm residual of the grid-borne equation `L(grid part) =
    /// density + corrector sources`, away from atoms.  The analytic
    /// kernels satisfy their equations identically, so this residual is
    /// what is left of `LΛ = μ` in the grid sense.
    pub fn grid_residual(&self, lambda: Option<&ScalarField>) -> f64 {
        let spec = self.field.spec();
        let h2 = spec.h * spec.h;
        let mut worst = 0.0f64;
        for j in 1..spec.ny - 1 {
            for i in 1..spec.nx - 1 {
                let p = spec.node(i, j);
                if self
                    .source
                    .atoms()
                    .iter()
                    .any(|a| p.dist(a.point) < 5.0 * spec.h)
                {
                    continue;
                }
                let lw = apply_stencil(&self.grid_part, lambda, i, j) / h2;
                worst = worst.max((lw - self.grid_source.get(i, j)).abs());
            }
        }
        worst
    }

    /// Net flux of the total potential through a centered ring of radius
    /// `r`, which should reproduce the enclosed mass (the distributional
    /// sense of `LΛ = μ`).
    pub fn ring_flux(&self, center: Point, r: f64, lambda: Option<&ScalarField>) -> f64 {
        let n = 720;
        let mut flux = 0.0;
        let dh = 0.35 * self.field.spec().h;
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let dir = Point::new(th.cos(), th.sin());
            let p = center + dir.scaled(r);
            let dn = (self.value_at(p + dir.scaled(dh)) - self.value_at(p - dir.scaled(dh)))
                / (2.0 * dh);
            let lam = lambda.map_or(1.0, |l| l.bilinear(p));
            flux += lam * dn * (2.0 * PI * r / n as f64);
        }
        flux
    }
}

/// `λ∇` five-point stencil application (λ ≡ 1 when absent), times `h²`.
fn apply_stencil(f: &ScalarField, lambda: Option<&ScalarField>, i: usize, j: usize) -> f64 {
    let hm = |a: f64, b: f64| 2.0 * a * b / (a + b);
    let lam = |ii: usize, jj: usize| lambda.map_or(1.0, |l| l.get(ii, jj));
    let c = f.get(i, j);
    let mut s = 0.0;
    for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
        let ni = (i as isize + di) as usize;
        let nj = (j as isize + dj) as usize;
        s += hm(lam(i, j), lam(ni, nj)) * (f.get(ni, nj) - c);
    }
    s
}

fn check_margin(mu: &Measure) -> Result<(Point, Point)> {
    let spec = mu.density().spec();
    let (lo, hi) = mu.support_bbox().ok_or(Error::SupportMargin)?;
    let max = spec.max_corner();
    let width = (max.x - spec.origin.x).max(max.y - spec.origin.y);
    let margin = (lo.x - spec.origin.x)
        .min(max.x - hi.x)
        .min(lo.y - spec.origin.y)
        .min(max.y - hi.y);
    if margin + 1e-9 < 0.25 * width {
        return Err(Error::SupportMargin);
    }
    Ok((lo, hi))
}

/// Newtonian potential `U(z) = ∫ (2π)⁻¹ ln|z−w| dμ(w)`: atoms summed
/// analytically, the density part solved on the box with far-field
/// boundary values `M (2π)⁻¹ ln|z−c|` about the density centroid (which
/// zeroes the dipole term).
pub fn newtonian_potential(mu: &Measure) -> Result<PotentialField> {
    potential_impl(mu, None)
}

/// Elliptic potential for `L = ∇λ∇`: atoms carry the frozen-coefficient
/// kernel `(2πλ(w))⁻¹ ln|z−w|` plus a smooth grid corrector solving
/// `L corr = −∇λ·∇(frozen kernel)`.
pub fn elliptic_potential(mu: &Measure, lambda: &ScalarField) -> Result<PotentialField> {
    if lambda.min() < crate::green::LAMBDA_FLOOR {
        return Err(Error::CoefficientFloor {
            min: lambda.min(),
            floor: crate::green::LAMBDA_FLOOR,
        });
    }
    potential_impl(mu, Some(lambda))
}

fn potential_impl(mu: &Measure, lambda: Option<&ScalarField>) -> Result<PotentialField> {
    check_margin(mu)?;
    let spec = mu.density().spec();
    mu.density().check_finite("measure density")?;
    let mut grid_source = mu.density().clone();

    // Density part.
    let dmass = mu.density_mass();
    let grid_part = if dmass.abs() > 0.0 {
        let centroid = Measure::new(mu.density().clone(), vec![])?.centroid();
        let lam_c = lambda.map_or(1.0, |l| l.bilinear(centroid));
        let far = move |p: Point| dmass * p.dist(centroid).max(1e-12).ln() / (2.0 * PI * lam_c);
        let sys = assemble_box(spec, lambda.map(|l| l.values()), Some(mu.density().values()), &far);
        let (x, _) = sys.solve(crate::green::SOLVER_TOL, crate::green::MAX_SWEEPS)?;
        let mut f = ScalarField::from_fn(spec, far);
        for (eq, &idx) in sys.node_of.iter().enumerate() {
            f.values_mut()[idx as usize] = x[eq];
        }
        f
    } else {
        ScalarField::zeros(spec)
    };

    // Atom correctors (identically zero for constant λ).
    let mut grid_part = grid_part;
    let mut atom_lambda = Vec::new();
    for atom in mu.atoms() {
        let lam_w = lambda.map_or(1.0, |l| l.bilinear(atom.point));
        atom_lambda.push(lam_w);
        if let Some(l) = lambda {
            let w = atom.point;
            let m = atom.mass;
            let clamp2 = (0.25 * spec.h) * (0.25 * spec.h);
            let src: Vec<f64> = {
                let mut v = Vec::with_capacity(spec.len());
                for j in 0..spec.ny {
                    for i in 0..spec.nx {
                        let p = spec.node(i, j);
                        let d = p - w;
                        let r2 = d.norm2().max(clamp2);
                        let ge = d.scaled(m / (2.0 * PI * lam_w * r2));
                        let gl = l.grad_bilinear(p);
                        // L corr = -∇λ·∇(m E)
                        v.push(-(gl.x * ge.x + gl.y * ge.y));
                    }
                }
                v
            };
            let sys = assemble_box(spec, Some(l.values()), Some(&src), &|_| 0.0);
            let (x, _) = sys.solve(crate::green::SOLVER_TOL, crate::green::MAX_SWEEPS)?;
            for (eq, &idx) in sys.node_of.iter().enumerate() {
                grid_part.values_mut()[idx as usize] += x[eq];
            }
            for (dst, srcv) in grid_source.values_mut().iter_mut().zip(&src) {
                *dst += srcv;
            }
        }
    }

    // Total at nodes.
    let mut field = grid_part.clone();
    for (a, &lam) in mu.atoms().iter().zip(&atom_lambda) {
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let p = spec.node(i, j);
                let r = p.dist(a.point).max(1e-3 * spec.h);
                let idx = spec.index(i, j);
                field.values_mut()[idx] += a.mass * r.ln() / (2.0 * PI * lam);
            }
        }
    }
    field.check_finite("potential")?;

    Ok(PotentialField {
        kind: if lambda.is_some() {
            PotentialKind::Elliptic
        } else {
            PotentialKind::Newtonian
        },
        source: mu.clone(),
        field,
        grid_part,
        grid_source,
        atom_lambda,
    })
}

/// Result of a partial-balayage solve.
#[derive(Clone, Debug)]
pub struct BalayageResult {
    /// The obstacle-problem solution `V` (smallest with `V ≥ Λ`,
    /// `LV ≤ 1`).
    pub v: ScalarField,
    /// `L V` by the discrete stencil: the swept measure's density.
    pub result_density: ScalarField,
    /// Nodes where the density reached 1 (above one half after the
    /// 0/1 transition band).
    pub saturated: Vec<bool>,
    /// The obstacle Λ at nodes, kept for complementarity checks.
    pub obstacle: ScalarField,
    pub report: ProjectedReport,
    /// Total swept mass relative error against the input measure.
    pub mass_defect: f64,
}

impl BalayageResult {
    /// The saturated set as a redistanced level-set domain.
    pub fn saturated_domain(&self) -> Result<GridDomain> {
        let raw = self.result_density.map(|d| 0.5 - d);
        GridDomain::from_levelset(raw)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("sweep,relative_change\n");
        for (it, ch) in &self.report.trace {
            out.push_str(&format!("{it},{ch:.6e}\n"));
        }
        out
    }
}

/// Partial balayage `Bal_λ(μ, 1)` on the measure's own box.
///
/// The particular solution is analytic (`|z−c|²/4`) for the Laplacian and
/// a box solve of `Lq = 1` otherwise; the projected-SOR obstacle solve
/// then runs in `W = V − q`.  Fails when the input's support margin is
/// too small or the swept mass is not conserved to 0.5%.
pub fn partial_balayage(mu: &Measure, lambda: Option<&ScalarField>) -> Result<BalayageResult> {
    let potential = match lambda {
        None => newtonian_potential(mu)?,
        Some(l) => elliptic_potential(mu, l)?,
    };
    partial_balayage_with_potential(mu, lambda, &potential)
}

fn partial_balayage_with_potential(
    mu: &Measure,
    lambda: Option<&ScalarField>,
    potential: &PotentialField,
) -> Result<BalayageResult> {
    let spec = mu.density().spec();
    let max = spec.max_corner();
    let center = Point::new(0.5 * (spec.origin.x + max.x), 0.5 * (spec.origin.y + max.y));

    // Particular solution of L q = 1.
    let q = match lambda {
        None => ScalarField::from_fn(spec, |p| 0.25 * (p - center).norm2()),
        Some(l) => {
            let ones = vec![1.0; spec.len()];
            let sys = assemble_box(spec, Some(l.values()), Some(&ones), &|_| 0.0);
            let (x, _) = sys.solve(crate::green::SOLVER_TOL, crate::green::MAX_SWEEPS)?;
            let mut f = ScalarField::zeros(spec);
            for (eq, &idx) in sys.node_of.iter().enumerate() {
                f.values_mut()[idx as usize] = x[eq];
            }
            f
        }
    };

    let psi = potential.node_values();
    let obstacle_w: Vec<f64> = psi
        .iter()
        .zip(q.values())
        .map(|(p, qq)| p - qq)
        .collect();

    // Far away the obstacle is active (V = Λ), fixing the frame data.
    let frame = |p: Point| -> f64 {
        let (i, j, _, _) = locate_node(spec, p);
        obstacle_w[spec.index(i, j)]
    };
    let sys = assemble_box(spec, lambda.map(|l| l.values()), None, &frame);
    let interior_obstacle: Vec<f64> = sys
        .node_of
        .iter()
        .map(|&idx| obstacle_w[idx as usize])
        .collect();
    let (w_sol, report) = sys.solve_projected(
        spec.nx,
        &interior_obstacle,
        PSOR_TOL,
        PSOR_RESID_TOL,
        PSOR_MAX_SWEEPS,
    )?;

    // Scatter V = W + q (frame keeps V = Λ) and W with frame values for
    // stencil evaluation.
    let mut v = ScalarField::from_values(spec, psi.clone())?;
    let mut w_field = ScalarField::from_values(spec, obstacle_w.clone())?;
    let mut contact = vec![true; spec.len()];
    for (eq, &idx) in sys.node_of.iter().enumerate() {
        v.values_mut()[idx as usize] = w_sol[eq] + q.values()[idx as usize];
        w_field.values_mut()[idx as usize] = w_sol[eq];
        contact[idx as usize] =
            w_sol[eq] - obstacle_w[idx as usize] <= 1e-13 * (1.0 + obstacle_w[idx as usize].abs());
    }

    // Result density by complementarity.  Deep inside the contact set
    // V = Λ^μ exactly, so L V = μ there (the stencil of the analytic
    // atom kernels would only return their truncation error).  Active
    // nodes and the first contact ring carry `1 + L W`: the ring holds
    // the fractional free-boundary mass of the discrete kink.
    let h2 = spec.h * spec.h;
    let mut density = mu.density().clone();
    for j in 1..spec.ny - 1 {
        for i in 1..spec.nx - 1 {
            let idx = spec.index(i, j);
            let near_active = !contact[idx]
                || !contact[spec.index(i - 1, j)]
                || !contact[spec.index(i + 1, j)]
                || !contact[spec.index(i, j - 1)]
                || !contact[spec.index(i, j + 1)];
            if near_active {
                let lw = apply_stencil(&w_field, lambda, i, j) / h2;
                density.set(i, j, 1.0 + lw);
            }
        }
    }
    let saturated: Vec<bool> = density.values().iter().map(|&d| d >= 0.5).collect();

    let swept_mass: f64 = density.values().iter().sum::<f64>() * h2;
    let total = mu.total_mass();
    let mass_defect = (swept_mass - total).abs() / total.max(1e-300);
    if mass_defect > MASS_TOL {
        return Err(Error::MassConservation(mass_defect));
    }

    let obstacle = ScalarField::from_values(spec, psi)?;
    Ok(BalayageResult {
        v,
        result_density: density,
        saturated,
        obstacle,
        report,
        mass_defect,
    })
}

fn locate_node(spec: GridSpec, p: Point) -> (usize, usize, f64, f64) {
    let i = ((p.x - spec.origin.x) / spec.h).round() as usize;
    let j = ((p.y - spec.origin.y) / spec.h).round() as usize;
    (i.min(spec.nx - 1), j.min(spec.ny - 1), 0.0, 0.0)
}

/// Exterior potential-matching defect of a balayage result: the swept
/// measure must produce the same potential as the input outside the
/// saturated set.
#[derive(Clone, Copy, Debug)]
pub struct ExteriorGap {
    /// `max |Λ^{result} − Λ^{μ}|` over nodes outside the saturated set
    /// inflated by 3 cells.
    pub gap: f64,
    /// `max |Λ^{μ}|` over the same nodes.
    pub scale: f64,
}

pub fn quadrature_domain_check(
    mu: &Measure,
    result: &BalayageResult,
    lambda: Option<&ScalarField>,
) -> Result<ExteriorGap> {
    let spec = mu.density().spec();
    // Potential of the swept density (no atoms); solver noise below the
    // complementarity tolerance is cut so the support stays compact.
    let clipped = result
        .result_density
        .map(|d| if d > 1e-6 { d } else { 0.0 });
    let swept = Measure::new(clipped, vec![])?;
    let pot_result = match lambda {
        None => newtonian_potential(&swept)?,
        Some(l) => elliptic_potential(&swept, l)?,
    };
    let pot_input = match lambda {
        None => newtonian_potential(mu)?,
        Some(l) => elliptic_potential(mu, l)?,
    };

    // Inflate the saturated set by 3 cells.
    let mut excluded = result.saturated.clone();
    for _ in 0..3 {
        let prev = excluded.clone();
        for j in 1..spec.ny - 1 {
            for i in 1..spec.nx - 1 {
                if prev[spec.index(i, j)] {
                    for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                        let ni = (i as isize + di) as usize;
                        let nj = (j as isize + dj) as usize;
                        excluded[spec.index(ni, nj)] = true;
                    }
                }
            }
        }
    }

    let mut gap = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if excluded[idx] {
                continue;
            }
            gap = gap.max((pot_result.field.values()[idx] - pot_input.field.values()[idx]).abs());
            scale = scale.max(pot_input.field.values()[idx].abs());
        }
    }
    Ok(ExteriorGap { gap, scale })
}
