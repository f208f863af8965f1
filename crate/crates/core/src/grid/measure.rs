//! Positive measures and boundary-aligned value profiles.

use super::{GridDomain, Point, ScalarField};
use crate::error::{Error, Result};

/// A point atom of a measure.
#[derive(Clone, Copy, Debug)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// A finite positive Borel measure: a nonnegative grid density plus a
/// finite list of point atoms.
#[derive(Clone, Debug)]
pub struct Measure {
    density: ScalarField,
    atoms: Vec<Atom>,
}

impl Measure {
    pub fn new(density: ScalarField, atoms: Vec<(Point, f64)>) -> Result<Self> {
        density.check_finite("measure density")?;
        let min = density.min();
        if min < 0.0 {
            return Err(Error::NegativeCoefficient(min));
        }
        for &(_, m) in &atoms {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::DegenerateShape(format!("atom mass {m} must be > 0")));
            }
        }
        Ok(Measure {
            density,
            atoms: atoms
                .into_iter()
                .map(|(point, mass)| Atom { point, mass })
                .collect(),
        })
    }

    /// A single atom on an otherwise empty box.
    pub fn atom(spec: super::GridSpec, point: Point, mass: f64) -> Result<Self> {
        Measure::new(ScalarField::zeros(spec), vec![(point, mass)])
    }

    /// Lebesgue measure restricted to a domain, as cut-cell node weights.
    pub fn indicator(domain: &GridDomain) -> Self {
        let spec = domain.spec();
        let values = (0..spec.len()).map(|i| domain.cut_weight(i)).collect();
        Measure {
            density: ScalarField::from_values(spec, values).expect("length matches"),
            atoms: Vec::new(),
        }
    }

    /// Add an atom (mass must be positive).
    pub fn with_atom(mut self, point: Point, mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::DegenerateShape(format!("atom mass {mass} must be > 0")));
        }
        self.atoms.push(Atom { point, mass });
        Ok(self)
    }

    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density_mass(&self) -> f64 {
        let h2 = self.density.spec().h * self.density.spec().h;
        self.density.values().iter().sum::<f64>() * h2
    }

    pub fn total_mass(&self) -> f64 {
        self.density_mass() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// Mass centroid (box center when the measure is empty).
    pub fn centroid(&self) -> Point {
        let spec = self.density.spec();
        let h2 = spec.h * spec.h;
        let mut m = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let w = self.density.get(i, j) * h2;
                if w != 0.0 {
                    let p = spec.node(i, j);
                    m += w;
                    cx += w * p.x;
                    cy += w * p.y;
                }
            }
        }
        for a in &self.atoms {
            m += a.mass;
            cx += a.mass * a.point.x;
            cy += a.mass * a.point.y;
        }
        if m <= 0.0 {
            let max = spec.max_corner();
            Point::new(0.5 * (spec.origin.x + max.x), 0.5 * (spec.origin.y + max.y))
        } else {
            Point::new(cx / m, cy / m)
        }
    }

    /// Bounding box of the support (density above 1e-14 plus atoms).
    pub fn support_bbox(&self) -> Option<(Point, Point)> {
        let spec = self.density.spec();
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                if self.density.get(i, j) > 1e-14 {
                    let p = spec.node(i, j);
                    lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                    hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
                    any = true;
                }
            }
        }
        for a in &self.atoms {
            lo = Point::new(lo.x.min(a.point.x), lo.y.min(a.point.y));
            hi = Point::new(hi.x.max(a.point.x), hi.y.max(a.point.y));
            any = true;
        }
        if any {
            Some((lo, hi))
        } else {
            None
        }
    }
}

/// Real values on the ordered boundary nodes of a [`GridDomain`].
#[derive(Clone, Debug)]
pub struct BoundaryProfile {
    values: Vec<f64>,
}

impl BoundaryProfile {
    pub fn from_values(values: Vec<f64>) -> Self {
        BoundaryProfile { values }
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        BoundaryProfile {
            values: vec![c; domain.boundary().len()],
        }
    }

    pub fn from_fn(domain: &GridDomain, f: impl Fn(Point) -> f64) -> Self {
        BoundaryProfile {
            values: domain.boundary().iter().map(|b| f(b.position)).collect(),
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_aligned(&self, domain: &GridDomain) -> Result<()> {
        if self.values.len() == domain.boundary().len() {
            Ok(())
        } else {
            Err(Error::AlignmentMismatch {
                got: self.values.len(),
                want: domain.boundary().len(),
            })
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BoundaryProfile {
        BoundaryProfile {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two aligned profiles.
    pub fn zip(&self, other: &BoundaryProfile, f: impl Fn(f64, f64) -> f64) -> BoundaryProfile {
        assert_eq!(self.values.len(), other.values.len(), "profiles not aligned");
        BoundaryProfile {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn negative_density_is_rejected() {
        let spec = GridSpec::square(-1.0, 1.0, 16).unwrap();
        let density = ScalarField::constant(spec, -0.5);
        assert!(Measure::new(density, vec![]).is_err());
    }

    #[test]
    fn total_mass_adds_density_and_atoms() {
        let spec = GridSpec::square(-1.0, 1.0, 16).unwrap();
        let density = ScalarField::constant(spec, 1.0);
        let mu = Measure::new(density, vec![(Point::new(0.0, 0.0), 2.0)]).unwrap();
        let box_area = 4.0 * (16.0 / 15.0_f64).powi(2); // node-cell cover of the box
        assert!((mu.total_mass() - (box_area + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn profile_alignment_is_checked() {
        let spec = GridSpec::square(-2.0, 2.0, 64).unwrap();
        let d = crate::grid::make_disk(Point::new(0.0, 0.0), 1.0, spec).unwrap();
        let p = BoundaryProfile::from_values(vec![1.0; 3]);
        assert!(p.check_aligned(&d).is_err());
        assert!(BoundaryProfile::constant(&d, 1.0).check_aligned(&d).is_ok());
    }
}
