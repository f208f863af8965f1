//! Scenario configuration: JSON in, validated objects out.  Unknown keys
//! are errors; parse failures carry serde's line/column diagnostics.

use crate::expr::{self, Expr};
use anyhow::{anyhow, bail, Context, Result};
use elgrow_core::green::OperatorDesc;
use elgrow_core::grid::{self, GridDomain, GridSpec, Measure, Point, ScalarField};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub run: Option<RunConfig>,
    #[serde(default)]
    pub boundary_data: Option<String>,
    #[serde(default)]
    pub variation: Option<VariationConfig>,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub rates: Option<RatesConfig>,
    #[serde(default)]
    pub dtn: Option<DtnConfig>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        // 256² nodes on [-2, 2]².
        GridConfig {
            origin: [-2.0, -2.0],
            h: 4.0 / 255.0,
            nx: 256,
            ny: 256,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "snake_case")]
pub enum DomainConfig {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_x: f64,
        semi_y: f64,
    },
    /// r(θ) = radius + amplitude·cos(mode·θ) about the center.
    PerturbedDisk {
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
        mode: usize,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: String,
    #[serde(default)]
    pub coefficient: Option<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub w: [f64; 2],
    pub q: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// "strong" (level set) or "weak" (balayage).
    #[serde(default = "default_mode")]
    pub mode: String,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    /// Snapshot cadence in steps (strong) or the number of balayage
    /// steps (weak).
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_mode() -> String {
    "strong".into()
}
fn default_cfl() -> f64 {
    elgrow_core::growth::DEFAULT_CFL_FRACTION
}
fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VariationConfig {
    /// hadamard | schrodinger-series | beltrami-gradient |
    /// beltrami-laplacian | normal-schrodinger | normal-beltrami |
    /// dirichlet-schrodinger | dirichlet-beltrami
    pub law: String,
    #[serde(default)]
    pub epsilons: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub density: Option<String>,
    #[serde(default)]
    pub indicator_of_domain: bool,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub point: [f64; 2],
    pub mass: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// Radial permeability λ(r), as an expression in r2.
    pub lambda: String,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DtnConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    /// Optional cos-mode order for the response-pipeline comparison.
    #[serde(default)]
    pub compare_response_mode: Option<usize>,
}

fn default_order() -> usize {
    3
}

impl ScenarioConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn grid_spec(&self, grid_n: Option<usize>) -> Result<GridSpec> {
        let g = &self.grid;
        let spec = match grid_n {
            Some(n) => {
                let width = g.h * (g.nx as f64 - 1.0);
                GridSpec::new(
                    Point::new(g.origin[0], g.origin[1]),
                    width / (n as f64 - 1.0),
                    n,
                    n,
                )?
            }
            None => GridSpec::new(Point::new(g.origin[0], g.origin[1]), g.h, g.nx, g.ny)?,
        };
        Ok(spec)
    }

    pub fn build_domain(&self, spec: GridSpec) -> Result<Arc<GridDomain>> {
        let cfg = self
            .domain
            .as_ref()
            .ok_or_else(|| anyhow!("config field `domain` is required for this command"))?;
        let domain = match cfg {
            DomainConfig::Disk { center, radius } => {
                grid::make_disk(Point::new(center[0], center[1]), *radius, spec)?
            }
            DomainConfig::Ellipse {
                center,
                semi_x,
                semi_y,
            } => grid::make_ellipse(Point::new(center[0], center[1]), *semi_x, *semi_y, spec)?,
            DomainConfig::PerturbedDisk {
                center,
                radius,
                amplitude,
                mode,
            } => {
                let c = Point::new(center[0], center[1]);
                let (r, a, m) = (*radius, *amplitude, *mode as f64);
                let raw = ScalarField::from_fn(spec, |p| {
                    let d = p - c;
                    d.norm() - (r + a * (m * d.y.atan2(d.x)).cos())
                });
                GridDomain::from_levelset(raw)?
            }
        };
        Ok(Arc::new(domain))
    }

    pub fn build_operator(&self, spec: GridSpec) -> Result<OperatorDesc> {
        let cfg = self
            .operator
            .as_ref()
            .ok_or_else(|| anyhow!("config field `operator` is required for this command"))?;
        match cfg.kind.as_str() {
            "laplace" => Ok(OperatorDesc::laplace()),
            "schrodinger" | "beltrami" => {
                let text = cfg.coefficient.as_ref().ok_or_else(|| {
                    anyhow!("operator kind {:?} needs a `coefficient` expression", cfg.kind)
                })?;
                let expr = expr::parse(text)
                    .map_err(|e| anyhow!("operator coefficient {text:?}: {e}"))?;
                let field = ScalarField::from_fn(spec, |p| expr.eval(p));
                Ok(if cfg.kind == "schrodinger" {
                    OperatorDesc::schrodinger(field)?
                } else {
                    OperatorDesc::beltrami(field)?
                })
            }
            other => bail!("unknown operator kind {other:?}"),
        }
    }

    pub fn lambda_field(&self, spec: GridSpec) -> Result<Option<ScalarField>> {
        match &self.operator {
            Some(op) if op.kind == "beltrami" => {
                let text = op
                    .coefficient
                    .as_ref()
                    .ok_or_else(|| anyhow!("beltrami operator needs a coefficient"))?;
                let expr =
                    expr::parse(text).map_err(|e| anyhow!("coefficient {text:?}: {e}"))?;
                Ok(Some(ScalarField::from_fn(spec, |p| expr.eval(p))))
            }
            _ => Ok(None),
        }
    }

    pub fn build_source(&self) -> Result<(Point, f64)> {
        let s = self
            .source
            .as_ref()
            .ok_or_else(|| anyhow!("config field `source` is required for this command"))?;
        Ok((Point::new(s.w[0], s.w[1]), s.q))
    }

    pub fn build_measure(&self, spec: GridSpec) -> Result<Measure> {
        let cfg = self
            .measure
            .as_ref()
            .ok_or_else(|| anyhow!("config field `measure` is required for this command"))?;
        let density = if cfg.indicator_of_domain {
            let domain = self.build_domain(spec)?;
            return with_atoms(Measure::indicator(&domain), &cfg.atoms);
        } else if let Some(text) = &cfg.density {
            let expr = expr::parse(text).map_err(|e| anyhow!("density {text:?}: {e}"))?;
            ScalarField::from_fn(spec, |p| expr.eval(p).max(0.0))
        } else {
            ScalarField::zeros(spec)
        };
        with_atoms(Measure::new(density, vec![])?, &cfg.atoms)
    }

    pub fn boundary_expr(&self) -> Result<Expr> {
        let text = self
            .boundary_data
            .as_ref()
            .ok_or_else(|| anyhow!("config field `boundary_data` is required for this command"))?;
        expr::parse(text).map_err(|e| anyhow!("boundary_data {text:?}: {e}"))
    }
}

fn with_atoms(m: Measure, atoms: &[AtomConfig]) -> Result<Measure> {
    let mut m = m;
    for a in atoms {
        m = m.with_atom(Point::new(a.point[0], a.point[1]), a.mass)?;
    }
    Ok(m)
}
