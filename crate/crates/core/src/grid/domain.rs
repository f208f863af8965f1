//! Bounded planar domains as signed-distance level sets, with a traced
//! boundary polyline.

use super::{GridSpec, Point, ScalarField};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// One node of the traced boundary: a zero crossing of the level set on a
/// grid edge.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryNode {
    pub position: Point,
    /// Unit outward normal (along the level-set gradient).
    pub outward_normal: Point,
    /// Arclength weight: half the length of the two adjacent polyline
    /// segments.
    pub ds: f64,
}

/// Grid edge identifier: index of the lower/left end node plus the axis
/// (0 = x, 1 = y).
pub(crate) type EdgeKey = (u32, u8);

/// A bounded domain on a [`GridSpec`].
///
/// `mask[i]` is equivalent to `phi[i] < 0`; the boundary list holds one
/// node per cut grid edge, ordered along each zero-contour loop
/// (counterclockwise, largest loop first).  The outermost two node rings
/// must stay outside the domain.
#[derive(Clone, Debug)]
pub struct GridDomain {
    spec: GridSpec,
    mask: Vec<bool>,
    phi: ScalarField,
    boundary: Vec<BoundaryNode>,
    /// Start offset of each loop in `boundary`; `loops_offsets.len() - 1`
    /// loops in total.
    loop_offsets: Vec<usize>,
    edge_to_boundary: HashMap<EdgeKey, u32>,
}

impl GridDomain {
    /// Build a domain from a signed distance (or at least sign-correct
    /// level set) field.  The field is taken as-is; use
    /// [`GridDomain::from_levelset`] to redistance first.
    pub fn from_phi(phi: ScalarField) -> Result<Self> {
        phi.check_finite("level set")?;
        let spec = phi.spec();
        let mask: Vec<bool> = phi.values().iter().map(|&v| v < 0.0).collect();

        let mut interior = 0usize;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                if mask[spec.index(i, j)] {
                    if i < 2 || j < 2 || i >= spec.nx - 2 || j >= spec.ny - 2 {
                        return Err(Error::BoundaryAtGridEdge);
                    }
                    interior += 1;
                }
            }
        }
        if interior < 4 {
            return Err(Error::DegenerateShape(
                "domain has fewer than 4 interior nodes".into(),
            ));
        }

        let (loops, edge_of_vertex) = trace_zero_contour(&phi);
        if loops.is_empty() {
            return Err(Error::DegenerateShape("no zero contour found".into()));
        }

        let mut boundary = Vec::new();
        let mut loop_offsets = vec![0usize];
        let mut edge_to_boundary = HashMap::new();
        for lp in &loops {
            let n = lp.len();
            for (k, &vid) in lp.iter().enumerate() {
                let pos = edge_of_vertex[vid].1;
                let prev = edge_of_vertex[lp[(k + n - 1) % n]].1;
                let next = edge_of_vertex[lp[(k + 1) % n]].1;
                let ds = 0.5 * (pos.dist(prev) + pos.dist(next));
                let normal = outward_normal(&phi, pos, prev, next);
                edge_to_boundary.insert(edge_of_vertex[vid].0, boundary.len() as u32);
                boundary.push(BoundaryNode {
                    position: pos,
                    outward_normal: normal,
                    ds,
                });
            }
            loop_offsets.push(boundary.len());
        }

        Ok(GridDomain {
            spec,
            mask,
            phi,
            boundary,
            loop_offsets,
            edge_to_boundary,
        })
    }

    /// Build a domain from an arbitrary level function by extracting its
    /// zero contour and redistancing: every node gets the exact distance
    /// to the traced polyline, signed by the input function.
    pub fn from_levelset(raw: ScalarField) -> Result<Self> {
        let spec = raw.spec();
        let (loops, edge_of_vertex) = trace_zero_contour(&raw);
        if loops.is_empty() {
            return Err(Error::DegenerateShape("no zero contour found".into()));
        }
        let polylines: Vec<Vec<Point>> = loops
            .iter()
            .map(|lp| lp.iter().map(|&v| edge_of_vertex[v].1).collect())
            .collect();
        let phi = redistance(spec, &polylines, &raw);
        GridDomain::from_phi(phi)
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.mask[self.spec.index(i, j)]
    }

    #[inline]
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    #[inline]
    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn n_loops(&self) -> usize {
        self.loop_offsets.len() - 1
    }

    pub fn boundary_loop(&self, k: usize) -> &[BoundaryNode] {
        &self.boundary[self.loop_offsets[k]..self.loop_offsets[k + 1]]
    }

    pub(crate) fn boundary_index_of_edge(&self, key: EdgeKey) -> Option<u32> {
        self.edge_to_boundary.get(&key).copied()
    }

    /// Cut-cell quadrature weight of a node: the clamped linear fraction
    /// `0.5 - phi/h`, which restores second order near the boundary.
    #[inline]
    pub fn cut_weight(&self, idx: usize) -> f64 {
        (0.5 - self.phi.values()[idx] / self.spec.h).clamp(0.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        let h2 = self.spec.h * self.spec.h;
        (0..self.spec.len()).map(|i| self.cut_weight(i)).sum::<f64>() * h2
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary.iter().map(|b| b.ds).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.phi.bilinear(p) < 0.0
    }

    /// Depth of `p` inside the domain, in cells (negative outside).
    pub fn depth_cells(&self, p: Point) -> f64 {
        -self.phi.bilinear(p) / self.spec.h
    }

    /// Area of the symmetric difference with another domain on the same
    /// grid, by cut-cell weights.
    pub fn symmetric_difference_area(&self, other: &GridDomain) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        let h2 = self.spec.h * self.spec.h;
        let mut s = 0.0;
        for idx in 0..self.spec.len() {
            s += (self.cut_weight(idx) - other.cut_weight(idx)).abs();
        }
        Ok(s * h2)
    }

    /// True when the boundary is a single loop of radius 1 about the
    /// origin, up to a few cells.
    pub fn resembles_unit_disk(&self) -> bool {
        if self.n_loops() != 1 {
            return false;
        }
        let h = self.spec.h;
        self.boundary
            .iter()
            .all(|b| (b.position.norm() - 1.0).abs() <= 3.0 * h)
    }
}

fn outward_normal(phi: &ScalarField, pos: Point, prev: Point, next: Point) -> Point {
    if let Some(n) = phi.grad_bilinear(pos).normalized() {
        return n;
    }
    // Degenerate gradient: fall back to the polyline normal, oriented by
    // a probe of phi.
    let t = (next - prev).normalized().unwrap_or(Point::new(1.0, 0.0));
    let n = Point::new(t.y, -t.x);
    let h = phi.spec().h;
    let probe = Point::new(pos.x + 0.5 * h * n.x, pos.y + 0.5 * h * n.y);
    if phi.bilinear(probe) >= 0.0 {
        n
    } else {
        n.scaled(-1.0)
    }
}

/// March the zero contour of `phi`.  Returns the loops (as lists of vertex
/// ids, counterclockwise, sorted by descending circumference) and, per
/// vertex, the grid edge it sits on plus its position.
fn trace_zero_contour(phi: &ScalarField) -> (Vec<Vec<usize>>, Vec<(EdgeKey, Point)>) {
    let spec = phi.spec();
    let inside = |i: usize, j: usize| phi.get(i, j) < 0.0;

    let mut vertex_of_edge: HashMap<EdgeKey, usize> = HashMap::new();
    let mut vertices: Vec<(EdgeKey, Point)> = Vec::new();
    let mut links: Vec<[i64; 2]> = Vec::new();

    let vertex = |key: EdgeKey,
                      vertices: &mut Vec<(EdgeKey, Point)>,
                      links: &mut Vec<[i64; 2]>,
                      vertex_of_edge: &mut HashMap<EdgeKey, usize>|
     -> usize {
        *vertex_of_edge.entry(key).or_insert_with(|| {
            let (base, axis) = key;
            let i = base as usize % spec.nx;
            let j = base as usize / spec.nx;
            let (pa, pb, va, vb) = if axis == 0 {
                (spec.node(i, j), spec.node(i + 1, j), phi.get(i, j), phi.get(i + 1, j))
            } else {
                (spec.node(i, j), spec.node(i, j + 1), phi.get(i, j), phi.get(i, j + 1))
            };
            let t = (va / (va - vb)).clamp(0.0, 1.0);
            let pos = Point::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y));
            vertices.push((key, pos));
            links.push([-1, -1]);
            vertices.len() - 1
        })
    };

    let connect = |va: usize, vb: usize, links: &mut Vec<[i64; 2]>| {
        for (x, y) in [(va, vb), (vb, va)] {
            let slot = &mut links[x];
            if slot[0] < 0 {
                slot[0] = y as i64;
            } else if slot[1] < 0 {
                slot[1] = y as i64;
            }
        }
    };

    for j in 0..spec.ny - 1 {
        for i in 0..spec.nx - 1 {
            let code = (inside(i, j) as u8)
                | (inside(i + 1, j) as u8) << 1
                | (inside(i + 1, j + 1) as u8) << 2
                | (inside(i, j + 1) as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let base = |ii: usize, jj: usize| (jj * spec.nx + ii) as u32;
            let e0 = (base(i, j), 0u8); // bottom
            let e1 = (base(i + 1, j), 1u8); // right
            let e2 = (base(i, j + 1), 0u8); // top
            let e3 = (base(i, j), 1u8); // left
            let segs: &[(EdgeKey, EdgeKey)] = match code {
                1 => &[(e0, e3)],
                2 => &[(e0, e1)],
                3 => &[(e1, e3)],
                4 => &[(e1, e2)],
                6 => &[(e0, e2)],
                7 => &[(e3, e2)],
                8 => &[(e2, e3)],
                9 => &[(e0, e2)],
                11 => &[(e1, e2)],
                12 => &[(e1, e3)],
                13 => &[(e0, e1)],
                14 => &[(e0, e3)],
                5 | 10 => {
                    let center = 0.25
                        * (phi.get(i, j)
                            + phi.get(i + 1, j)
                            + phi.get(i + 1, j + 1)
                            + phi.get(i, j + 1));
                    let diag_joined = (center < 0.0) == (code == 5);
                    if diag_joined {
                        &[(e0, e1), (e2, e3)]
                    } else {
                        &[(e0, e3), (e1, e2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(ka, kb) in segs {
                let va = vertex(ka, &mut vertices, &mut links, &mut vertex_of_edge);
                let vb = vertex(kb, &mut vertices, &mut links, &mut vertex_of_edge);
                connect(va, vb, &mut links);
            }
        }
    }

    // Walk the loops.
    let mut visited = vec![false; vertices.len()];
    let mut loops = Vec::new();
    for start in 0..vertices.len() {
        if visited[start] || links[start][0] < 0 || links[start][1] < 0 {
            continue;
        }
        let mut lp = vec![start];
        visited[start] = true;
        let mut prev = start;
        let mut cur = links[start][0] as usize;
        while cur != start {
            visited[cur] = true;
            lp.push(cur);
            let nxt = if links[cur][0] as usize != prev {
                links[cur][0]
            } else {
                links[cur][1]
            };
            if nxt < 0 {
                break; // open chain (touches an edge defect); drop below
            }
            prev = cur;
            cur = nxt as usize;
        }
        if lp.len() >= 3 && cur == start {
            // Orient counterclockwise.
            let signed_area: f64 = lp
                .iter()
                .zip(lp.iter().cycle().skip(1))
                .map(|(&a, &b)| {
                    let pa = vertices[a].1;
                    let pb = vertices[b].1;
                    pa.x * pb.y - pb.x * pa.y
                })
                .take(lp.len())
                .sum();
            if signed_area < 0.0 {
                lp.reverse();
            }
            loops.push(lp);
        }
    }
    loops.sort_by(|a, b| b.len().cmp(&a.len()));
    (loops, vertices)
}

/// Exact distance from every node to the given polylines, signed by the
/// `sign_source` field (negative inside).
fn redistance(spec: GridSpec, polylines: &[Vec<Point>], sign_source: &ScalarField) -> ScalarField {
    let mut segs: Vec<(Point, Point)> = Vec::new();
    for lp in polylines {
        let n = lp.len();
        for k in 0..n {
            segs.push((lp[k], lp[(k + 1) % n]));
        }
    }
    ScalarField::from_fn(spec, |p| {
        let mut d2 = f64::INFINITY;
        for &(a, b) in &segs {
            let ab = b - a;
            let len2 = ab.norm2();
            let t = if len2 > 0.0 {
                ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = a + ab.scaled(t);
            d2 = d2.min((p - q).norm2());
        }
        let sign = if sign_source.bilinear(p) < 0.0 { -1.0 } else { 1.0 };
        sign * d2.sqrt()
    })
}

/// Disk with an exact signed-distance level set.
///
/// The disk must fit inside the grid with a two-cell margin.
pub fn make_disk(center: Point, radius: f64, spec: GridSpec) -> Result<GridDomain> {
    if !(radius > 0.0) {
        return Err(Error::DegenerateShape(format!("radius {radius} must be > 0")));
    }
    check_margin(center, radius, radius, spec)?;
    let phi = ScalarField::from_fn(spec, |p| p.dist(center) - radius);
    GridDomain::from_phi(phi)
}

/// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
///
/// The signed distance is recovered by closest-point projection onto the
/// traced zero contour, accurate to O(h).
pub fn make_ellipse(center: Point, a: f64, b: f64, spec: GridSpec) -> Result<GridDomain> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::DegenerateShape(format!(
            "semi-axes ({a}, {b}) must be > 0"
        )));
    }
    check_margin(center, a, b, spec)?;
    let raw = ScalarField::from_fn(spec, |p| {
        let dx = (p.x - center.x) / a;
        let dy = (p.y - center.y) / b;
        ((dx * dx + dy * dy).sqrt() - 1.0) * a.min(b)
    });
    GridDomain::from_levelset(raw)
}

fn check_margin(center: Point, rx: f64, ry: f64, spec: GridSpec) -> Result<()> {
    let margin = 2.0 * spec.h;
    let max = spec.max_corner();
    let ok = center.x - rx >= spec.origin.x + margin
        && center.x + rx <= max.x - margin
        && center.y - ry >= spec.origin.y + margin
        && center.y + ry <= max.y - margin;
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeOutOfBounds(format!(
            "extents ({rx:.3}, {ry:.3}) about ({:.3}, {:.3})",
            center.x, center.y
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec256() -> GridSpec {
        GridSpec::square(-2.0, 2.0, 256).unwrap()
    }

    #[test]
    fn disk_signed_distance_is_exact() {
        let d = make_disk(Point::new(0.0, 0.0), 1.0, spec256()).unwrap();
        let spec = d.spec();
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let expect = spec.node(i, j).norm() - 1.0;
                assert!((d.phi().get(i, j) - expect).abs() < 1e-14);
                assert_eq!(d.is_inside(i, j), expect < 0.0);
            }
        }
    }

    #[test]
    fn disk_out_of_bounds_is_an_error() {
        assert!(matches!(
            make_disk(Point::new(0.0, 0.0), 2.5, spec256()),
            Err(Error::ShapeOutOfBounds(_))
        ));
        assert!(matches!(
            make_disk(Point::new(1.5, 0.0), 0.6, spec256()),
            Err(Error::ShapeOutOfBounds(_))
        ));
    }

    #[test]
    fn degenerate_ellipse_is_an_error() {
        assert!(matches!(
            make_ellipse(Point::new(0.0, 0.0), 0.0, 1.0, spec256()),
            Err(Error::DegenerateShape(_))
        ));
    }

    #[test]
    fn nested_disks_have_nested_masks() {
        let small = make_disk(Point::new(0.0, 0.0), 0.5, spec256()).unwrap();
        let large = make_disk(Point::new(0.0, 0.0), 1.0, spec256()).unwrap();
        for idx in 0..small.mask().len() {
            if small.mask()[idx] {
                assert!(large.mask()[idx]);
            }
        }
    }

    #[test]
    fn boundary_is_single_ordered_loop_near_zero_level() {
        let d = make_disk(Point::new(0.1, -0.2), 0.8, spec256()).unwrap();
        assert_eq!(d.n_loops(), 1);
        let h = d.spec().h;
        for b in d.boundary() {
            // Unit normal and on-contour position.
            assert!((b.outward_normal.norm() - 1.0).abs() < 1e-12);
            assert!(d.phi().bilinear(b.position).abs() <= h);
            // For an exact-SDF disk the normal is radial.
            let radial = (b.position - Point::new(0.1, -0.2)).normalized().unwrap();
            assert!(radial.dot(b.outward_normal) > 0.999);
        }
    }

    #[test]
    fn disk_perimeter_from_arclength_weights() {
        let d = make_disk(Point::new(0.0, 0.0), 1.0, spec256()).unwrap();
        let p = d.perimeter();
        assert!(
            (p - 2.0 * std::f64::consts::PI).abs() < 0.01 * 2.0 * std::f64::consts::PI,
            "perimeter {p}"
        );
    }

    #[test]
    fn ellipse_with_equal_axes_matches_disk_mask() {
        let e = make_ellipse(Point::new(0.0, 0.0), 1.0, 1.0, spec256()).unwrap();
        let d = make_disk(Point::new(0.0, 0.0), 1.0, spec256()).unwrap();
        let mismatched = e
            .mask()
            .iter()
            .zip(d.mask())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(mismatched, 0);
    }
}
