//! Direct solvers for the three operator families — Laplacian `Δ`,
//! Schrödinger `Δ − u`, Laplace–Beltrami `∇λ∇` — producing Green
//! functions, Poisson kernels and Dirichlet solutions on a grid domain.
//!
//! Green functions follow the sign convention `L g = Q δ_w` with `g = 0`
//! on the boundary, so `g ≤ 0` inside for `Q > 0`.  The Dirac source is
//! resolved by singularity splitting: `g = Q·E + reg`, where
//! `E = (2π λ(w))⁻¹ ln|z − w|` is the frozen-coefficient fundamental
//! solution and `reg` solves the residual smooth problem with boundary
//! data `−Q·E`.

pub(crate) mod system;

pub use system::{SolveReport, MAX_SWEEPS, SOLVER_TOL};

use crate::error::{Error, Result};
use crate::grid::{BoundaryProfile, GridDomain, Point, ScalarField};
use std::sync::Arc;

/// Floor enforced on Laplace–Beltrami coefficients.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Distances below this fraction of `h` are clamped when the log kernel
/// is evaluated at grid nodes, so fields stay finite at the singularity.
const KERNEL_CLAMP: f64 = 0.25;

/// Minimum clearance, in cells, between a Green singularity and the
/// boundary.
pub const SINGULARITY_CLEARANCE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Laplace,
    Schrodinger,
    Beltrami,
}

/// Descriptor of the driving elliptic operator.
///
/// The coefficient is `u ≥ 0` for Schrödinger and `λ ≥ 1e-6` for
/// Laplace–Beltrami; the Laplacian carries none.
#[derive(Clone, Debug)]
pub struct OperatorDesc {
    kind: OperatorKind,
    coefficient: Option<ScalarField>,
}

impl OperatorDesc {
    pub fn laplace() -> Self {
        OperatorDesc {
            kind: OperatorKind::Laplace,
            coefficient: None,
        }
    }

    pub fn schrodinger(u: ScalarField) -> Result<Self> {
        u.check_finite("schrodinger coefficient")?;
        let min = u.min();
        if min < 0.0 {
            return Err(Error::NegativeCoefficient(min));
        }
        Ok(OperatorDesc {
            kind: OperatorKind::Schrodinger,
            coefficient: Some(u),
        })
    }

    pub fn beltrami(lambda: ScalarField) -> Result<Self> {
        lambda.check_finite("beltrami coefficient")?;
        let min = lambda.min();
        if min < LAMBDA_FLOOR {
            return Err(Error::CoefficientFloor {
                min,
                floor: LAMBDA_FLOOR,
            });
        }
        Ok(OperatorDesc {
            kind: OperatorKind::Beltrami,
            coefficient: Some(lambda),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn coefficient(&self) -> Option<&ScalarField> {
        self.coefficient.as_ref()
    }

    /// λ at a point (1 unless Laplace–Beltrami).
    pub fn lambda_at(&self, p: Point) -> f64 {
        match self.kind {
            OperatorKind::Beltrami => self.coefficient.as_ref().unwrap().bilinear(p),
            _ => 1.0,
        }
    }

    fn lambda_slice(&self) -> Option<&[f64]> {
        match self.kind {
            OperatorKind::Beltrami => self.coefficient.as_ref().map(|f| f.values()),
            _ => None,
        }
    }

    fn c_slice(&self) -> Option<&[f64]> {
        match self.kind {
            OperatorKind::Schrodinger => self.coefficient.as_ref().map(|f| f.values()),
            _ => None,
        }
    }
}

/// Mirror image of the source across the boundary, carried analytically.
/// Subtracting it from the regular problem leaves boundary data that
/// varies on the geometric-mean scale of depth and curvature radius
/// instead of the source depth, which is what keeps normal derivatives of
/// near-boundary singularities accurate.
#[derive(Clone, Copy, Debug)]
struct ImagePart {
    point: Point,
    /// Kernel coefficient: `coeff · ln|z - point| / (2π λ(w))`.
    coeff: f64,
}

/// A solved Green function: `total = Q·E + regular_part` inside the
/// domain, odd-reflection ghosts in a band outside so near-boundary
/// interpolation stays clean.  Internally the regular part splits once
/// more into an analytic image kernel and a smooth grid remainder.
#[derive(Clone, Debug)]
pub struct GreenSolution {
    pub op: OperatorDesc,
    pub domain: Arc<GridDomain>,
    pub w: Point,
    /// Source strength Q in `L g = Q δ_w`.
    pub strength: f64,
    pub regular_part: ScalarField,
    pub total: ScalarField,
    pub report: SolveReport,
    image: Option<ImagePart>,
    /// Grid remainder after the image split (equals `regular_part` when
    /// no image is used).
    smooth_part: ScalarField,
}

impl GreenSolution {
    /// Frozen-coefficient fundamental part `Q·E(p)`, clamped within a
    /// quarter cell of the singularity.
    pub fn fundamental_at(&self, p: Point) -> f64 {
        let h = self.domain.spec().h;
        let r = p.dist(self.w).max(KERNEL_CLAMP * h);
        self.strength * r.ln() / (2.0 * std::f64::consts::PI * self.op.lambda_at(self.w))
    }

    fn image_value(&self, p: Point) -> f64 {
        match &self.image {
            None => 0.0,
            Some(im) => {
                im.coeff * p.dist(im.point).max(1e-12).ln()
                    / (2.0 * std::f64::consts::PI * self.op.lambda_at(self.w))
            }
        }
    }

    fn image_grad(&self, p: Point) -> Point {
        match &self.image {
            None => Point::new(0.0, 0.0),
            Some(im) => {
                let d = p - im.point;
                d.scaled(
                    im.coeff
                        / (2.0 * std::f64::consts::PI
                            * self.op.lambda_at(self.w)
                            * d.norm2().max(1e-24)),
                )
            }
        }
    }

    fn image_normal_derivative(&self, b: &crate::grid::BoundaryNode) -> f64 {
        self.image_grad(b.position).dot(b.outward_normal)
    }

    /// Green value with the singular parts evaluated analytically.
    pub fn value_at(&self, p: Point) -> f64 {
        self.fundamental_at(p) + self.image_value(p) + self.smooth_part.bilinear(p)
    }

    /// Green gradient: analytic singular parts plus the smooth-remainder
    /// gradient.  Inside a 2.5-cell boundary band the remainder is
    /// differenced with interior-biased one-sided stencils (its exterior
    /// continuation has a normal-derivative kink at the boundary, so
    /// central differences must not cross it).
    pub fn grad_at(&self, p: Point) -> Point {
        let h = self.domain.spec().h;
        let d = p - self.w;
        let r2 = d.norm2().max((KERNEL_CLAMP * h) * (KERNEL_CLAMP * h));
        let c = self.strength / (2.0 * std::f64::consts::PI * self.op.lambda_at(self.w) * r2);
        let reg_grad = if self.domain.depth_cells(p) < 2.5 {
            grad_interior_biased(&self.smooth_part, &self.domain, p)
        } else {
            self.smooth_part.grad_bilinear(p)
        };
        reg_grad + d.scaled(c) + self.image_grad(p)
    }
}

/// Bilinear average of node gradients that never difference across the
/// boundary: central where both neighbors are inside, quadratic one-sided
/// into the interior otherwise.
pub(crate) fn grad_interior_biased(field: &ScalarField, domain: &GridDomain, p: Point) -> Point {
    let spec = field.spec();
    let h = spec.h;
    let mask = domain.mask();
    let at = |i: usize, j: usize| field.get(i, j);
    let inside = |i: isize, j: isize| {
        i >= 0
            && j >= 0
            && (i as usize) < spec.nx
            && (j as usize) < spec.ny
            && mask[spec.index(i as usize, j as usize)]
    };
    let one_dir = |i: isize, j: isize, di: isize, dj: isize| -> f64 {
        // Derivative along (di, dj) at node (i, j).
        let f0 = at(i as usize, j as usize);
        if inside(i + di, j + dj) && inside(i - di, j - dj) {
            (at((i + di) as usize, (j + dj) as usize) - at((i - di) as usize, (j - dj) as usize))
                / (2.0 * h)
        } else if inside(i - di, j - dj) && inside(i - 2 * di, j - 2 * dj) {
            (3.0 * f0 - 4.0 * at((i - di) as usize, (j - dj) as usize)
                + at((i - 2 * di) as usize, (j - 2 * dj) as usize))
                / (2.0 * h)
        } else if inside(i + di, j + dj) && inside(i + 2 * di, j + 2 * dj) {
            (-3.0 * f0 + 4.0 * at((i + di) as usize, (j + dj) as usize)
                - at((i + 2 * di) as usize, (j + 2 * dj) as usize))
                / (2.0 * h)
        } else if inside(i - di, j - dj) {
            (f0 - at((i - di) as usize, (j - dj) as usize)) / h
        } else if inside(i + di, j + dj) {
            (at((i + di) as usize, (j + dj) as usize) - f0) / h
        } else {
            0.0
        }
    };
    let (i0, j0, tx, ty) = spec.locate(p);
    let mut gx = 0.0;
    let mut gy = 0.0;
    let mut wsum = 0.0;
    for (di, dj, wgt) in [
        (0usize, 0usize, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let (i, j) = ((i0 + di) as isize, (j0 + dj) as isize);
        if !inside(i, j) {
            continue;
        }
        gx += wgt * one_dir(i, j, 1, 0);
        gy += wgt * one_dir(i, j, 0, 1);
        wsum += wgt;
    }
    if wsum > 0.0 {
        Point::new(gx / wsum, gy / wsum)
    } else {
        Point::new(0.0, 0.0)
    }
}

fn check_clearance(domain: &GridDomain, p: Point, cells: f64) -> Result<()> {
    if domain.depth_cells(p) < cells {
        return Err(Error::TooCloseToBoundary {
            x: p.x,
            y: p.y,
            cells,
        });
    }
    Ok(())
}

/// Solve `L g = Q δ_w` in the domain with `g = 0` on the boundary.
pub fn green(op: &OperatorDesc, domain: &Arc<GridDomain>, w: Point, q: f64) -> Result<GreenSolution> {
    check_clearance(domain, w, SINGULARITY_CLEARANCE)?;
    let spec = domain.spec();
    let h = spec.h;
    let lam_w = op.lambda_at(w);
    let two_pi_lam = 2.0 * std::f64::consts::PI * lam_w;

    // Fundamental part at nodes (clamped at the singular node).
    let fundamental = ScalarField::from_fn(spec, |p| {
        q * p.dist(w).max(KERNEL_CLAMP * h).ln() / two_pi_lam
    });

    // Residual source for the smooth remainder.  The source is singular
    // at w (log for Schrödinger, 1/r for Beltrami), so cells within a
    // few cells of w carry their subsampled average rather than the
    // clamped point value — the first rings hold a fixed share of the
    // source mass.
    let near = 6.0 * h;
    let cell_average = |p: Point, f: &dyn Fn(Point) -> f64| -> f64 {
        if p.dist(w) > near {
            return f(p);
        }
        let mut s = 0.0;
        for sj in 0..6 {
            for si in 0..6 {
                s += f(Point::new(
                    p.x + (si as f64 - 2.5) * h / 6.0,
                    p.y + (sj as f64 - 2.5) * h / 6.0,
                ));
            }
        }
        s / 36.0
    };
    // Image split: reflect the source across the boundary and carry the
    // opposite-sign kernel there analytically.  On a flat boundary the
    // pair cancels exactly, so the grid remainder's data varies on the
    // curvature scale rather than the source depth.  Deep sources skip
    // it (they gain nothing, and the level-set normal degrades near the
    // skeleton).
    let depth = -domain.phi().bilinear(w);
    let grad_phi = domain.phi().grad_bilinear(w);
    let image: Option<ImagePart> = if depth <= 12.0 * h && grad_phi.norm() > 0.9 {
        let n = grad_phi.normalized().unwrap();
        Some(ImagePart {
            point: w + n.scaled(2.0 * depth),
            coeff: -q,
        })
    } else {
        None
    };
    let image_kernel = move |p: Point| -> f64 {
        match image {
            None => 0.0,
            Some(im) => im.coeff * p.dist(im.point).max(1e-12).ln() / two_pi_lam,
        }
    };
    let image_grad = move |p: Point| -> Point {
        match image {
            None => Point::new(0.0, 0.0),
            Some(im) => {
                let d = p - im.point;
                d.scaled(im.coeff / (two_pi_lam * d.norm2().max(1e-24)))
            }
        }
    };

    let source: Option<ScalarField> = match op.kind {
        OperatorKind::Laplace => None,
        OperatorKind::Schrodinger => {
            // (Δ - u)(QE + I + reg) = Qδ  ⇒  (Δ - u) reg = u·(QE + I)
            let u = op.coefficient.as_ref().unwrap();
            let f = |p: Point| {
                u.bilinear(p)
                    * (q * p.dist(w).max(0.05 * h).ln() / two_pi_lam + image_kernel(p))
            };
            Some(ScalarField::from_fn(spec, |p| cell_average(p, &f)))
        }
        OperatorKind::Beltrami => {
            // ∇λ∇(QE + I) = Qδ + ∇λ·∇(QE + I)  ⇒  ∇λ∇ reg = -∇λ·∇(QE + I)
            let lambda = op.coefficient.as_ref().unwrap();
            let clamp2 = (0.05 * h) * (0.05 * h);
            let f = |p: Point| {
                let d = p - w;
                let r2 = d.norm2().max(clamp2);
                let ge = d.scaled(q / (two_pi_lam * r2)) + image_grad(p);
                let gl = lambda.grad_bilinear(p);
                -(gl.x * ge.x + gl.y * ge.y)
            };
            Some(ScalarField::from_fn(spec, |p| cell_average(p, &f)))
        }
    };

    let bfun = move |p: Point| {
        -q * p.dist(w).max(KERNEL_CLAMP * h).ln() / two_pi_lam - image_kernel(p)
    };
    let assembled = system::assemble(
        domain,
        op.lambda_slice(),
        op.c_slice(),
        source.as_ref().map(|s| s.values()),
        &system::BoundaryData::Func(&bfun),
    );
    let (x, report) = assembled.solve(SOLVER_TOL, MAX_SWEEPS)?;

    let mut smooth = ScalarField::zeros(spec);
    for (eq, &idx) in assembled.node_of.iter().enumerate() {
        smooth.values_mut()[idx as usize] = x[eq];
    }
    // Make the remainder smooth across the boundary for interpolation:
    // outside the domain it continues as its boundary data.
    for idx in 0..spec.len() {
        if !domain.mask()[idx] {
            let p = spec.node(idx % spec.nx, idx / spec.nx);
            smooth.values_mut()[idx] = bfun(p);
        }
    }

    let mut regular = ScalarField::zeros(spec);
    let mut total = ScalarField::zeros(spec);
    for idx in 0..spec.len() {
        let p = spec.node(idx % spec.nx, idx / spec.nx);
        regular.values_mut()[idx] = image_kernel(p) + smooth.values()[idx];
        if domain.mask()[idx] {
            total.values_mut()[idx] = fundamental.values()[idx] + regular.values()[idx];
        }
    }
    extend_ghost(&mut total, domain, |_| 0.0);
    total.check_finite("green total")?;
    regular.check_finite("green regular part")?;

    Ok(GreenSolution {
        op: op.clone(),
        domain: domain.clone(),
        w,
        strength: q,
        regular_part: regular,
        total,
        report,
        image,
        smooth_part: smooth,
    })
}

/// Fill a band of exterior nodes with ghost values by quadratic
/// extrapolation along the level-set normal: the parabola through the
/// boundary value at the foot point and two strictly interior samples is
/// evaluated at the node.  Samples never read other ghosts, so the fill
/// is order-independent.
pub(crate) fn extend_ghost(
    field: &mut ScalarField,
    domain: &GridDomain,
    boundary_value: impl Fn(Point) -> f64,
) {
    let spec = domain.spec();
    let h = spec.h;
    let band = 2.6 * h;
    let phi = domain.phi();
    let snapshot = field.clone();
    let m = 1.3 * h;
    for idx in 0..spec.len() {
        let d = phi.values()[idx];
        if !(0.0..=band).contains(&d) {
            continue;
        }
        let p = spec.node(idx % spec.nx, idx / spec.nx);
        let n = match phi.grad_bilinear(p).normalized() {
            Some(n) => n,
            None => continue,
        };
        let foot = p - n.scaled(d);
        let b0 = boundary_value(foot);
        let s1 = sample_interior(&snapshot, domain, foot - n.scaled(m));
        let s2 = sample_interior(&snapshot, domain, foot - n.scaled(2.0 * m));
        let c2 = (s2 - 2.0 * s1 + b0) / (2.0 * m * m);
        let c1 = (b0 - s1) / m + c2 * m;
        field.values_mut()[idx] = b0 + c1 * d + c2 * d * d;
    }
}

/// Bilinear sample restricted to interior corners (weights renormalized);
/// falls back to the plain bilinear value when no corner is inside.
fn sample_interior(field: &ScalarField, domain: &GridDomain, p: Point) -> f64 {
    let spec = field.spec();
    let (i, j, tx, ty) = spec.locate(p);
    let mut num = 0.0;
    let mut den = 0.0;
    for (di, dj, w) in [
        (0usize, 0usize, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        if domain.mask()[spec.index(i + di, j + dj)] {
            num += w * field.get(i + di, j + dj);
            den += w;
        }
    }
    if den > 1e-12 {
        num / den
    } else {
        field.bilinear(p)
    }
}

/// One-sided quadratic normal-derivative stencil for fields vanishing on
/// the boundary: samples at inward depths h, 2h, 3h per boundary node.
/// Linear in the field, so first-order predictions and direct re-solves
/// see the exact same functional.
pub fn normal_stencil_profile(field: &ScalarField, domain: &GridDomain) -> BoundaryProfile {
    let h = domain.spec().h;
    let values = domain
        .boundary()
        .iter()
        .map(|b| {
            let sample = |d: f64| field.bilinear(b.position - b.outward_normal.scaled(d));
            let (g1, g2, g3) = (sample(h), sample(2.0 * h), sample(3.0 * h));
            (5.0 * g1 - 8.0 * g2 + 3.0 * g3) / (2.0 * h)
        })
        .collect();
    BoundaryProfile::from_values(values)
}

/// Outward normal derivative of a Green function on every boundary node:
/// the fundamental part is differentiated analytically and the smooth
/// regular part by the one-sided quadratic stencil (samples at depths
/// h, 2h, 3h), so accuracy survives singularities close to the boundary
/// (the pumping-response kernels need exactly that).
pub fn normal_derivative(gs: &GreenSolution) -> Result<BoundaryProfile> {
    let h = gs.domain.spec().h;
    let two_pi_lam = 2.0 * std::f64::consts::PI * gs.op.lambda_at(gs.w);
    let smooth_dn = normal_stencil_profile(&gs.smooth_part, &gs.domain);
    let values: Vec<f64> = gs
        .domain
        .boundary()
        .iter()
        .zip(smooth_dn.values())
        .map(|(b, &reg_dn)| {
            let d = b.position - gs.w;
            let r2 = d.norm2().max((KERNEL_CLAMP * h) * (KERNEL_CLAMP * h));
            gs.strength * d.dot(b.outward_normal) / (two_pi_lam * r2)
                + gs.image_normal_derivative(b)
                + reg_dn
        })
        .collect();
    let profile = BoundaryProfile::from_values(values);
    if profile.values().iter().all(|v| v.is_finite()) {
        Ok(profile)
    } else {
        Err(Error::NonFinite("normal derivative"))
    }
}

/// The boundary response `ζ ↦ ∫_D s(z) P(z, ζ) dA(z)` of an interior
/// source, realized adjointly: solve `Δψ = s` with zero boundary data and
/// take the outward normal derivative of `ψ`.  Integrating a source
/// against the Poisson kernel is exactly evaluation of that derivative.
pub fn source_normal_response(domain: &GridDomain, source: &ScalarField) -> Result<BoundaryProfile> {
    let psi = poisson_zero_bc(domain, source)?;
    Ok(normal_stencil_profile(&psi, domain))
}

/// Outward normal derivative of a Dirichlet solution, anchored on its
/// known boundary values (one-sided cubic through depths 0, h, 2h, 3h).
pub fn normal_derivative_of(
    field: &ScalarField,
    domain: &GridDomain,
    boundary_values: &BoundaryProfile,
) -> Result<BoundaryProfile> {
    boundary_values.check_aligned(domain)?;
    let h = domain.spec().h;
    let values = domain
        .boundary()
        .iter()
        .zip(boundary_values.values())
        .map(|(b, &f0)| {
            let sample = |d: f64| field.bilinear(b.position - b.outward_normal.scaled(d));
            let (f1, f2, f3) = (sample(h), sample(2.0 * h), sample(3.0 * h));
            (11.0 * f0 - 18.0 * f1 + 9.0 * f2 - 2.0 * f3) / (6.0 * h)
        })
        .collect();
    Ok(BoundaryProfile::from_values(values))
}

/// Interior solve of `L φ = 0` with Dirichlet data `f` on the boundary
/// (values at the traced boundary nodes; ghost-value interpolation makes
/// the returned field smooth across the boundary).
pub fn dirichlet_solve(
    op: &OperatorDesc,
    domain: &GridDomain,
    f: &BoundaryProfile,
) -> Result<ScalarField> {
    f.check_aligned(domain)?;
    let assembled = system::assemble(
        domain,
        op.lambda_slice(),
        op.c_slice(),
        None,
        &system::BoundaryData::Profile(f),
    );
    let (x, _) = assembled.solve(SOLVER_TOL, MAX_SWEEPS)?;
    let spec = domain.spec();
    let mut out = ScalarField::zeros(spec);
    for (eq, &idx) in assembled.node_of.iter().enumerate() {
        out.values_mut()[idx as usize] = x[eq];
    }
    // Nearest-boundary-node data for the ghost band.
    let boundary = domain.boundary();
    let nearest = |p: Point| -> f64 {
        let mut best = (f64::INFINITY, 0usize);
        for (k, b) in boundary.iter().enumerate() {
            let d2 = (b.position - p).norm2();
            if d2 < best.0 {
                best = (d2, k);
            }
        }
        f.values()[best.1]
    };
    extend_ghost(&mut out, domain, nearest);
    out.check_finite("dirichlet solution")?;
    Ok(out)
}

/// Solve `Δψ = source` in the domain with `ψ = 0` on the boundary — the
/// building block realizing integration against the Laplace Green
/// function (`ψ(z) = ∫ source·g_z dA`).
pub fn poisson_zero_bc(domain: &GridDomain, source: &ScalarField) -> Result<ScalarField> {
    if source.spec() != domain.spec() {
        return Err(Error::SpecMismatch);
    }
    let assembled = system::assemble(
        domain,
        None,
        None,
        Some(source.values()),
        &system::BoundaryData::Zero,
    );
    let (x, _) = assembled.solve(SOLVER_TOL, MAX_SWEEPS)?;
    let spec = domain.spec();
    let mut out = ScalarField::zeros(spec);
    for (eq, &idx) in assembled.node_of.iter().enumerate() {
        out.values_mut()[idx as usize] = x[eq];
    }
    extend_ghost(&mut out, domain, |_| 0.0);
    out.check_finite("poisson solve")?;
    Ok(out)
}

/// Same as [`poisson_zero_bc`] for the general operator.
pub fn operator_solve_zero_bc(
    op: &OperatorDesc,
    domain: &GridDomain,
    source: &ScalarField,
) -> Result<ScalarField> {
    if source.spec() != domain.spec() {
        return Err(Error::SpecMismatch);
    }
    let assembled = system::assemble(
        domain,
        op.lambda_slice(),
        op.c_slice(),
        Some(source.values()),
        &system::BoundaryData::Zero,
    );
    let (x, _) = assembled.solve(SOLVER_TOL, MAX_SWEEPS)?;
    let spec = domain.spec();
    let mut out = ScalarField::zeros(spec);
    for (eq, &idx) in assembled.node_of.iter().enumerate() {
        out.values_mut()[idx as usize] = x[eq];
    }
    extend_ghost(&mut out, domain, |_| 0.0);
    out.check_finite("operator solve")?;
    Ok(out)
}

/// The Poisson-kernel field `z ↦ P(ζ, z) = ∂ₙ g_z(ζ)` for the boundary
/// node `ζ`, by one adjoint Dirichlet solve with a unit-mass bump at `ζ`
/// (discrete harmonic-measure density).  The bump spans a few boundary
/// nodes: per-node hats alias against the cut-edge jitter of the traced
/// boundary, a smooth bump does not.  Valid on interior nodes with at
/// least 3 cells of clearance.
pub fn poisson_kernel(
    op: &OperatorDesc,
    domain: &GridDomain,
    zeta_index: usize,
) -> Result<ScalarField> {
    let boundary = domain.boundary();
    if zeta_index >= boundary.len() {
        return Err(Error::BoundaryIndex(zeta_index, boundary.len()));
    }
    let half_width = 2.5 * domain.spec().h;
    let zeta = boundary[zeta_index].position;
    let mut values = vec![0.0; boundary.len()];
    let mut mass = 0.0;
    for (k, b) in boundary.iter().enumerate() {
        let d = b.position.dist(zeta);
        if d < half_width {
            // cos² bump in chord distance.
            let wgt = (0.5 * std::f64::consts::PI * d / half_width).cos().powi(2);
            values[k] = wgt;
            mass += wgt * b.ds;
        }
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    let hat = BoundaryProfile::from_values(values);
    let field = dirichlet_solve(op, domain, &hat)?;
    // For ∇λ∇ the reproducing kernel is λ ∂ₙ g, so divide the adjoint
    // solve by λ(ζ) to return the bare normal derivative.
    let scale = match op.kind {
        OperatorKind::Beltrami => 1.0 / op.lambda_at(boundary[zeta_index].position),
        _ => 1.0,
    };
    Ok(field.scaled(scale))
}

/// Report from [`convert_beltrami_to_schrodinger`].
#[derive(Clone, Debug)]
pub struct ConversionCheck {
    /// `u = λ^{-1/2} Δ λ^{1/2}` by central differences (tiny negatives
    /// clamped to zero).
    pub u: ScalarField,
    /// Number of nodes where the clamp fired.
    pub clamped_nodes: usize,
    /// `max |G_w − g_w √(λ(w)λ(·))|` over nodes ≥ 3 cells from `w` and
    /// the boundary.
    pub discrepancy: f64,
    /// `max |G_w|` over the same nodes, for relative comparisons.
    pub scale: f64,
}

/// Check the Laplace–Beltrami ↔ Schrödinger conversion: with
/// `u = λ^{-1/2} Δ λ^{1/2}`, the function `g_w √(λ(w)λ(z))` built from
/// the `∇λ∇` Green function is a Green function for `Δ − u`.
pub fn convert_beltrami_to_schrodinger(
    lambda: &ScalarField,
    domain: &Arc<GridDomain>,
    w: Point,
) -> Result<ConversionCheck> {
    let min = lambda.min();
    if min < LAMBDA_FLOOR {
        return Err(Error::CoefficientFloor {
            min,
            floor: LAMBDA_FLOOR,
        });
    }
    let sqrt_lambda = lambda.map(f64::sqrt);
    let lap = sqrt_lambda.laplacian_field();
    let mut clamped = 0usize;
    let mut u = ScalarField::zeros(lambda.spec());
    for idx in 0..lambda.spec().len() {
        let v = lap.values()[idx] / sqrt_lambda.values()[idx];
        u.values_mut()[idx] = if v < 0.0 {
            if v > -1e-9 {
                clamped += 1;
                0.0
            } else {
                v // let the operator constructor flag real negativity
            }
        } else {
            v
        };
    }

    let bel = green(&OperatorDesc::beltrami(lambda.clone())?, domain, w, 1.0)?;
    let sch = green(&OperatorDesc::schrodinger(u.clone())?, domain, w, 1.0)?;

    let spec = domain.spec();
    let h = spec.h;
    let lam_w = lambda.bilinear(w);
    let mut discrepancy = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if !domain.mask()[idx] {
                continue;
            }
            let p = spec.node(i, j);
            if domain.depth_cells(p) < 3.0 || p.dist(w) < 3.0 * h {
                continue;
            }
            let mapped = bel.total.values()[idx] * (lam_w * lambda.values()[idx]).sqrt();
            let direct = sch.total.values()[idx];
            discrepancy = discrepancy.max((direct - mapped).abs());
            scale = scale.max(direct.abs());
        }
    }

    Ok(ConversionCheck {
        u,
        clamped_nodes: clamped,
        discrepancy,
        scale,
    })
}
