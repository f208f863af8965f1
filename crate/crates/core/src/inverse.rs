//! Forward maps of the boundary-response inverse problems: the operator
//! `A` carrying Schrödinger perturbations to boundary-velocity
//! corrections, the pumping response `p ↦ λ∂ₙg_p`, and the reduction of
//! permeability recovery to the Dirichlet-to-Neumann map.
//!
//! Everything here is a forward evaluation; nothing inverts.  The
//! two-point experiment records distinguishability data for an open
//! question without asserting it.

use crate::error::{Error, Result};
use crate::green::{self, green, OperatorDesc, OperatorKind};
use crate::grid::{BoundaryProfile, GridDomain, Point, ScalarField};
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;

/// Highest boundary Fourier order resolved at the default grid; higher
/// orders are refused.
pub const MAX_MODE_ORDER: usize = 6;

/// `Au(ζ) = ∫_D u(z) g(z,w) P(z,ζ) dA(z)`, evaluated adjointly: solve
/// `Δψ = u·g_w` with zero boundary data, then `Au = ∂ₙψ` (one solve
/// instead of a kernel sum; integrating against `P_ζ` is evaluation of
/// the normal derivative).
pub fn forward_a(
    u: &ScalarField,
    domain: &Arc<GridDomain>,
    w: Point,
) -> Result<BoundaryProfile> {
    let gs = green(&OperatorDesc::laplace(), domain, w, 1.0)?;
    green::source_normal_response(domain, &u.mul(&gs.total)?)
}

/// Boundary velocity profile from pumping at `p`: `λ ∂ₙ g_p`.
pub fn pumping_response(
    lambda: Option<&ScalarField>,
    domain: &Arc<GridDomain>,
    p: Point,
) -> Result<BoundaryProfile> {
    let op = match lambda {
        None => OperatorDesc::laplace(),
        Some(l) => OperatorDesc::beltrami(l.clone())?,
    };
    let gs = green(&op, domain, p, 1.0)?;
    let nd = green::normal_derivative(&gs)?;
    Ok(match op.kind() {
        OperatorKind::Beltrami => BoundaryProfile::from_values(
            nd.values()
                .iter()
                .zip(domain.boundary())
                .map(|(v, b)| v * op.lambda_at(b.position))
                .collect(),
        ),
        _ => nd,
    })
}

/// Interior probe rings for the response-based Dirichlet-to-Neumann
/// reconstruction: `stations` equal-arclength normals, each carrying one
/// probe per ring depth (in cells).
#[derive(Clone, Debug)]
pub struct ProbeRings {
    pub depths_cells: Vec<f64>,
    pub stations: usize,
}

impl Default for ProbeRings {
    fn default() -> Self {
        ProbeRings {
            depths_cells: vec![6.0, 9.0, 12.0],
            stations: 64,
        }
    }
}

/// Arclength-parametrized boundary position and normal, linearly
/// interpolated between traced nodes.
fn boundary_at_arclength(domain: &GridDomain, s: f64) -> (Point, Point) {
    let boundary = domain.boundary();
    let n = boundary.len();
    let total: f64 = boundary.iter().map(|b| b.ds).sum();
    let mut target = s.rem_euclid(total);
    for k in 0..n {
        let seg = boundary[k].position.dist(boundary[(k + 1) % n].position);
        if target <= seg || k == n - 1 {
            let t = if seg > 0.0 { target / seg } else { 0.0 };
            let a = boundary[k].position;
            let b = boundary[(k + 1) % n].position;
            let pos = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            let na = boundary[k].outward_normal;
            let nb = boundary[(k + 1) % n].outward_normal;
            let nrm = Point::new(na.x + t * (nb.x - na.x), na.y + t * (nb.y - na.y))
                .normalized()
                .unwrap_or(na);
            return (pos, nrm);
        }
        target -= seg;
    }
    (boundary[0].position, boundary[0].outward_normal)
}

/// Composite cubic quadrature of a profile along the closed boundary
/// polyline (fourth order in the node spacing, which the peaked response
/// kernels need).
pub fn boundary_integrate_cubic(values: &[f64], domain: &GridDomain) -> f64 {
    let boundary = domain.boundary();
    let n = boundary.len();
    if n < 4 {
        return values
            .iter()
            .zip(boundary)
            .map(|(v, b)| v * b.ds)
            .sum();
    }
    // Cumulative arclength of nodes.
    let mut s = vec![0.0f64; n + 1];
    for k in 0..n {
        s[k + 1] = s[k] + boundary[k].position.dist(boundary[(k + 1) % n].position);
    }
    let mut sum = 0.0;
    for k in 0..n {
        // Integrate the cubic through nodes k-1..k+2 over [s_k, s_{k+1}].
        let idx = [(k + n - 1) % n, k, (k + 1) % n, (k + 2) % n];
        // Unwrapped abscissae around the segment.
        let x = [
            s[k] - boundary[idx[0]].position.dist(boundary[k].position),
            s[k],
            s[k + 1],
            s[k + 1] + boundary[idx[2]].position.dist(boundary[idx[3]].position),
        ];
        let (a, b) = (s[k], s[k + 1]);
        for m in 0..4 {
            // ∫_a^b ℓ_m(x) dx by two-point Gauss (exact for cubics).
            let g = 0.5 * (b - a) / 3.0_f64.sqrt();
            let mid = 0.5 * (a + b);
            let mut w = 0.0;
            for xg in [mid - g, mid + g] {
                let mut l = 1.0;
                for jj in 0..4 {
                    if jj != m {
                        l *= (xg - x[jj]) / (x[m] - x[jj]);
                    }
                }
                w += 0.5 * (b - a) * l;
            }
            sum += w * values[idx[m]];
        }
    }
    sum
}

/// Dirichlet-to-Neumann by the pumping-response pipeline: reconstruct the
/// potential at interior probes from `u(p) = ∫ f·V(p) ds`, then one-sided
/// normal differences anchored on the boundary data.  This is the forward
/// reduction of permeability recovery to the classical boundary-data
/// problem.
pub fn dtn_from_response(
    lambda: Option<&ScalarField>,
    domain: &Arc<GridDomain>,
    f: &BoundaryProfile,
    probes: &ProbeRings,
) -> Result<BoundaryProfile> {
    f.check_aligned(domain)?;
    if domain.n_loops() != 1 {
        return Err(Error::MultipleLoops);
    }
    let h = domain.spec().h;
    for &d in &probes.depths_cells {
        if d < 3.0 {
            return Err(Error::ProbeTooClose);
        }
    }
    let total_len: f64 = domain.boundary().iter().map(|b| b.ds).sum();
    let nring = probes.depths_cells.len();
    let nst = probes.stations;

    // Reconstruct u on each ring station from the response data,
    // normalized by the measured kernel mass: ∮V ds = 1 exactly in the
    // continuum (unit source), so dividing removes the correlated
    // discretization bias of each probe solve.
    let mut ring_values = vec![vec![0.0f64; nst]; nring];
    for st in 0..nst {
        let s = total_len * st as f64 / nst as f64;
        let (pos, nrm) = boundary_at_arclength(domain, s);
        for (r, &depth) in probes.depths_cells.iter().enumerate() {
            let p = pos - nrm.scaled(depth * h);
            let response = pumping_response(lambda, domain, p)?;
            let integrand: Vec<f64> = f
                .values()
                .iter()
                .zip(response.values())
                .map(|(a, b)| a * b)
                .collect();
            let mass = boundary_integrate_cubic(response.values(), domain);
            ring_values[r][st] = boundary_integrate_cubic(&integrand, domain) / mass;
        }
    }

    // Periodic cubic interpolation of ring values at each boundary node's
    // arclength, then a one-sided derivative anchored at f(ζ).
    let mut s_node = 0.0;
    let boundary = domain.boundary();
    let mut out = Vec::with_capacity(boundary.len());
    for (k, b) in boundary.iter().enumerate() {
        let u_at = |ring: usize| -> f64 {
            let x = s_node / total_len * nst as f64;
            let i0 = x.floor() as isize;
            let t = x - i0 as f64;
            let v = |off: isize| ring_values[ring][(i0 + off).rem_euclid(nst as isize) as usize];
            // 4-point Lagrange in the station index.
            let (m1, p0, p1, p2) = (v(-1), v(0), v(1), v(2));
            -t * (t - 1.0) * (t - 2.0) / 6.0 * m1
                + (t * t - 1.0) * (t - 2.0) / 2.0 * p0
                - t * (t + 1.0) * (t - 2.0) / 2.0 * p1
                + t * (t + 1.0) * (t - 1.0) / 6.0 * p2
        };
        // Derivative at depth 0 of the cubic through (0, f) and the rings.
        let mut xs = vec![0.0f64];
        let mut vs = vec![f.values()[k]];
        for (r, &d) in probes.depths_cells.iter().enumerate() {
            xs.push(d * h);
            vs.push(u_at(r));
        }
        let mut dn = 0.0;
        for m in 0..xs.len() {
            let mut dl = 0.0;
            for jj in 0..xs.len() {
                if jj == m {
                    continue;
                }
                let mut prod = 1.0 / (xs[m] - xs[jj]);
                for q in 0..xs.len() {
                    if q != m && q != jj {
                        prod *= (0.0 - xs[q]) / (xs[m] - xs[q]);
                    }
                }
                dl += prod;
            }
            dn += vs[m] * dl;
        }
        // xs measure inward depth, so the outward derivative flips sign.
        out.push(-dn);
        let next = boundary[(k + 1) % boundary.len()].position;
        s_node += b.position.dist(next);
    }
    Ok(BoundaryProfile::from_values(out))
}

/// Direct Dirichlet-to-Neumann: solve the Dirichlet problem for `∇λ∇`
/// and differentiate along the boundary normals.
pub fn dtn_direct(
    lambda: Option<&ScalarField>,
    domain: &GridDomain,
    f: &BoundaryProfile,
) -> Result<BoundaryProfile> {
    let op = match lambda {
        None => OperatorDesc::laplace(),
        Some(l) => OperatorDesc::beltrami(l.clone())?,
    };
    let u = green::dirichlet_solve(&op, domain, f)?;
    green::normal_derivative_of(&u, domain, f)
}

/// Power functional `Q_λ(f) = ∫ f λ ∂ₙu ds`, the energy needed to hold
/// the boundary potential `f`.
pub fn power_functional(
    lambda: Option<&ScalarField>,
    domain: &GridDomain,
    f: &BoundaryProfile,
) -> Result<f64> {
    let nf = dtn_direct(lambda, domain, f)?;
    let lam = match lambda {
        None => BoundaryProfile::constant(domain, 1.0),
        Some(l) => BoundaryProfile::from_fn(domain, |p| l.bilinear(p)),
    };
    let integrand = BoundaryProfile::from_values(
        f.values()
            .iter()
            .zip(nf.values())
            .zip(lam.values())
            .map(|((a, b), l)| a * b * l)
            .collect(),
    );
    crate::grid::boundary_integrate(&integrand, domain)
}

/// Boundary Fourier mode in the arclength angle `θ = 2π s / L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BoundaryMode {
    Constant,
    Cos(usize),
    Sin(usize),
}

impl BoundaryMode {
    pub fn label(&self) -> String {
        match self {
            BoundaryMode::Constant => "1".into(),
            BoundaryMode::Cos(n) => format!("cos{n}"),
            BoundaryMode::Sin(n) => format!("sin{n}"),
        }
    }
}

/// Profile of a boundary mode on the single-loop boundary.
pub fn mode_profile(domain: &GridDomain, mode: BoundaryMode) -> Result<BoundaryProfile> {
    if domain.n_loops() != 1 {
        return Err(Error::MultipleLoops);
    }
    let total: f64 = domain.boundary().iter().map(|b| b.ds).sum();
    let boundary = domain.boundary();
    let mut s = 0.0;
    let mut values = Vec::with_capacity(boundary.len());
    for (k, b) in boundary.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * s / total;
        values.push(match mode {
            BoundaryMode::Constant => 1.0,
            BoundaryMode::Cos(n) => (n as f64 * theta).cos(),
            BoundaryMode::Sin(n) => (n as f64 * theta).sin(),
        });
        s += b.position.dist(boundary[(k + 1) % boundary.len()].position);
    }
    Ok(BoundaryProfile::from_values(values))
}

/// The Dirichlet-to-Neumann matrix over low-order boundary Fourier modes:
/// `M[i][j] = ⟨mode_i, N_λ mode_j⟩` by boundary quadrature.  Modes are
/// unnormalized (`∫ cos² nθ ds = π` on the unit circle), so the unit-disk
/// Laplace diagonal is `M[cos n][cos n] ≈ n·π`.
#[derive(Clone, Debug, Serialize)]
pub struct DtNMatrix {
    pub basis: Vec<BoundaryMode>,
    pub matrix: Vec<Vec<f64>>,
}

impl DtNMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode");
        for m in &self.basis {
            let _ = write!(out, ",{}", m.label());
        }
        out.push('\n');
        for (i, row) in self.matrix.iter().enumerate() {
            let _ = write!(out, "{}", self.basis[i].label());
            for v in row {
                let _ = write!(out, ",{v:.9e}");
            }
            out.push('\n');
        }
        out
    }

    /// Max relative asymmetry `|M - Mᵀ| / |M|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.basis.len();
        let scale = self
            .matrix
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.matrix[i][j] - self.matrix[j][i]).abs());
            }
        }
        worst / scale
    }
}

/// Assemble the DtN matrix for modes up to `order` (≤ 6; higher orders
/// are under-resolved on the default grid and refused).
pub fn dtn_matrix(
    lambda: Option<&ScalarField>,
    domain: &GridDomain,
    order: usize,
) -> Result<DtNMatrix> {
    if order > MAX_MODE_ORDER {
        return Err(Error::ModeOrder(order, MAX_MODE_ORDER));
    }
    let mut basis = vec![BoundaryMode::Constant];
    for n in 1..=order {
        basis.push(BoundaryMode::Cos(n));
        basis.push(BoundaryMode::Sin(n));
    }
    let profiles: Vec<BoundaryProfile> = basis
        .iter()
        .map(|&m| mode_profile(domain, m))
        .collect::<Result<_>>()?;
    let responses: Vec<BoundaryProfile> = profiles
        .iter()
        .map(|f| dtn_direct(lambda, domain, f))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; basis.len()]; basis.len()];
    for (i, fi) in profiles.iter().enumerate() {
        for (j, nj) in responses.iter().enumerate() {
            let integrand = fi.zip(nj, |a, b| a * b);
            matrix[i][j] = crate::grid::boundary_integrate(&integrand, domain)?;
        }
    }
    Ok(DtNMatrix { basis, matrix })
}

/// Distinguishability record for the two-point pumping experiment: the
/// profile gaps produced by two permeabilities at two source points.
/// Collected as evidence for an open question; nothing is asserted.
#[derive(Clone, Debug, Serialize)]
pub struct TwoPointReport {
    pub gap_at_w: f64,
    pub gap_at_xi: f64,
    pub scale: f64,
}

pub fn two_point_response_experiment(
    lambda1: &ScalarField,
    lambda2: &ScalarField,
    domain: &Arc<GridDomain>,
    w: Point,
    xi: Point,
) -> Result<TwoPointReport> {
    let gap = |p: Point| -> Result<(f64, f64)> {
        let r1 = pumping_response(Some(lambda1), domain, p)?;
        let r2 = pumping_response(Some(lambda2), domain, p)?;
        let mut g = 0.0f64;
        let mut s = 0.0f64;
        for (a, b) in r1.values().iter().zip(r2.values()) {
            g = g.max((a - b).abs());
            s = s.max(a.abs()).max(b.abs());
        }
        Ok((g, s))
    };
    let (gw, sw) = gap(w)?;
    let (gx, sx) = gap(xi)?;
    Ok(TwoPointReport {
        gap_at_w: gw,
        gap_at_xi: gx,
        scale: sw.max(sx),
    })
}

/// Least-squares preimage of a target boundary profile under `A` over a
/// tensor-polynomial source basis: an operational probe of how much of
/// the boundary response space the forward map reaches.
#[derive(Clone, Debug, Serialize)]
pub struct PreimageFit {
    /// Relative L²(ds) residual of the best fit.
    pub relative_residual: f64,
    pub basis_size: usize,
}

pub fn forward_a_preimage(
    domain: &Arc<GridDomain>,
    w: Point,
    target: &BoundaryProfile,
    degree: usize,
) -> Result<PreimageFit> {
    Ok(forward_a_preimage_multi(domain, w, std::slice::from_ref(target), degree)?.remove(0))
}

/// Fit several targets against one shared response basis (the basis
/// solves dominate the cost).
pub fn forward_a_preimage_multi(
    domain: &Arc<GridDomain>,
    w: Point,
    targets: &[BoundaryProfile],
    degree: usize,
) -> Result<Vec<PreimageFit>> {
    let spec = domain.spec();
    let mut responses = Vec::new();
    for a in 0..degree {
        for b in 0..degree {
            let u = ScalarField::from_fn(spec, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
            responses.push(forward_a(&u, domain, w)?);
        }
    }
    let nb = domain.boundary().len();
    let ds: Vec<f64> = domain.boundary().iter().map(|b| b.ds).collect();
    let m = responses.len();
    // Normal equations in the ds-weighted inner product, ridge-stabilized
    // (the monomial Gram matrix is ill-conditioned).
    let mut gram = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for k in 0..nb {
                s += responses[i].values()[k] * responses[j].values()[k] * ds[k];
            }
            gram[i][j] = s;
            gram[j][i] = s;
        }
    }
    let trace: f64 = (0..m).map(|i| gram[i][i]).sum();
    let ridge = 1e-12 * trace / m as f64;
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += ridge;
    }

    let mut fits = Vec::new();
    for target in targets {
        target.check_aligned(domain)?;
        let mut rhs = vec![0.0f64; m];
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..nb {
                s += responses[i].values()[k] * target.values()[k] * ds[k];
            }
            rhs[i] = s;
        }
        let coef = solve_dense(gram.clone(), rhs);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..nb {
            let mut fit = 0.0;
            for i in 0..m {
                fit += coef[i] * responses[i].values()[k];
            }
            num += (fit - target.values()[k]).powi(2) * ds[k];
            den += target.values()[k].powi(2) * ds[k];
        }
        fits.push(PreimageFit {
            relative_residual: (num / den.max(1e-300)).sqrt(),
            basis_size: m,
        });
    }
    Ok(fits)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col] / d;
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
                b[r] -= f * b[col];
            }
        }
    }
    (0..n)
        .map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { b[i] / a[i][i] })
        .collect()
}
