//! Grids, domains, fields, measures, quadrature and boundary extraction.
//!
//! Domains are stored as signed-distance level sets on a uniform grid;
//! the boundary is the traced zero contour, one node per cut grid edge.
//! That single representation serves the Green solvers (cut-edge
//! distances), the growth steppers (advected level set) and the balayage
//! masks.

mod domain;
mod field;
pub mod io;
mod measure;
mod quad;

pub use domain::{make_disk, make_ellipse, BoundaryNode, GridDomain};
pub use field::ScalarField;
pub use measure::{BoundaryProfile, Measure};
pub use quad::{boundary_integrate, harmonic_moment, integrate, MAX_MOMENT_ORDER};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn scaled(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    /// Unit vector in the same direction; `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        if n < 1e-300 {
            None
        } else {
            Some(self.scaled(1.0 / n))
        }
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Uniform Cartesian grid: node `(i, j)` sits at `origin + (i h, j h)`.
///
/// Spacing is the same in both axes and there are at least 8 nodes per
/// axis.  Values are stored row-major with `x` fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be > 0")));
        }
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid(format!(
                "node counts ({nx}, {ny}) must be at least 8"
            )));
        }
        if !origin.x.is_finite() || !origin.y.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(GridSpec { origin, h, nx, ny })
    }

    /// Square grid of `n` by `n` nodes covering `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty box [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (n as f64 - 1.0);
        GridSpec::new(Point::new(lo, lo), h, n, n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    pub fn max_corner(&self) -> Point {
        self.node(self.nx - 1, self.ny - 1)
    }

    /// Cell coordinates of `p` clamped to the grid interior, plus the
    /// fractional offsets used for bilinear interpolation.
    pub(crate) fn locate(&self, p: Point) -> (usize, usize, f64, f64) {
        let fx = ((p.x - self.origin.x) / self.h).clamp(0.0, (self.nx - 1) as f64 - 1e-9);
        let fy = ((p.y - self.origin.y) / self.h).clamp(0.0, (self.ny - 1) as f64 - 1e-9);
        let i = fx.floor() as usize;
        let j = fy.floor() as usize;
        (i, j, fx - i as f64, fy - j as f64)
    }
}
