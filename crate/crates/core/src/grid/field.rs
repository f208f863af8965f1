//! Real values on the nodes of a grid.

use super::{GridSpec, Point};
use crate::error::{Error, Result};

/// Node values over the full bounding box of a [`GridSpec`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        ScalarField {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        ScalarField {
            spec,
            values: vec![c; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(Point) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                values.push(f(spec.node(i, j)));
            }
        }
        ScalarField { spec, values }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::SpecMismatch);
        }
        Ok(ScalarField { spec, values })
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.spec.index(i, j);
        self.values[idx] = v;
    }

    /// Bilinear interpolation; `p` is clamped to the grid box.
    pub fn bilinear(&self, p: Point) -> f64 {
        let (i, j, tx, ty) = self.spec.locate(p);
        let v00 = self.get(i, j);
        let v10 = self.get(i + 1, j);
        let v01 = self.get(i, j + 1);
        let v11 = self.get(i + 1, j + 1);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }

    /// Central-difference gradient at an inner node.
    pub fn grad_central(&self, i: usize, j: usize) -> Point {
        let h2 = 2.0 * self.spec.h;
        Point::new(
            (self.get(i + 1, j) - self.get(i - 1, j)) / h2,
            (self.get(i, j + 1) - self.get(i, j - 1)) / h2,
        )
    }

    /// Bilinear interpolation of the central-difference gradient.
    pub fn grad_bilinear(&self, p: Point) -> Point {
        let (i, j, tx, ty) = self.spec.locate(p);
        let i = i.clamp(1, self.spec.nx - 3);
        let j = j.clamp(1, self.spec.ny - 3);
        let g = |di: usize, dj: usize| self.grad_central(i + di, j + dj);
        let (g00, g10, g01, g11) = (g(0, 0), g(1, 0), g(0, 1), g(1, 1));
        let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
        Point::new(
            g00.x * w[0] + g10.x * w[1] + g01.x * w[2] + g11.x * w[3],
            g00.y * w[0] + g10.y * w[1] + g01.y * w[2] + g11.y * w[3],
        )
    }

    /// Five-point Laplacian at an inner node.
    pub fn laplacian_central(&self, i: usize, j: usize) -> f64 {
        let h2 = self.spec.h * self.spec.h;
        (self.get(i + 1, j) + self.get(i - 1, j) + self.get(i, j + 1) + self.get(i, j - 1)
            - 4.0 * self.get(i, j))
            / h2
    }

    /// Five-point Laplacian field; one-sided copies on the frame.
    pub fn laplacian_field(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.spec);
        for j in 1..self.spec.ny - 1 {
            for i in 1..self.spec.nx - 1 {
                out.set(i, j, self.laplacian_central(i, j));
            }
        }
        // Extend to the frame by copying the nearest inner value.
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        for i in 0..nx {
            let ii = i.clamp(1, nx - 2);
            let v = out.get(ii, 1);
            out.set(i, 0, v);
            let v = out.get(ii, ny - 2);
            out.set(i, ny - 1, v);
        }
        for j in 0..ny {
            let jj = j.clamp(1, ny - 2);
            let v = out.get(1, jj);
            out.set(0, j, v);
            let v = out.get(nx - 2, jj);
            out.set(nx - 1, j, v);
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self + s * other` on a shared grid.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Result<ScalarField> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(ScalarField { spec: self.spec, values })
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ScalarField { spec: self.spec, values })
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }
}
