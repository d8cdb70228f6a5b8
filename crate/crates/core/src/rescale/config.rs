//! Run configuration and the construction of grids, flows and initial data.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::flows::{sine_samples, Flow, HeatFlow, HouliFlow, RiccatiFlow};
use super::{Params, DT_MAX};
use crate::error::{Error, Result};
use crate::mesh::{build_grid, Grid1D, GridKind};
use crate::models::{alpha_steady_state, odd_symmetrize, Family, ModelSpec};
use crate::spline::{Parity, TensorSplines};

/// How scaling rates are closed at each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Rates that freeze the discrete anchors exactly.
    #[default]
    Consistent,
    /// Closed-form expressions in origin derivatives.
    Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    pub nodes: usize,
    /// Outer end of half-line grids, or the period (default `2π`).
    #[serde(default)]
    pub outer_bound: Option<f64>,
    #[serde(default)]
    pub stretch: f64,
}

/// Damping `-strength · (k/K)^{2·order}` on the sine coefficients of both
/// Hou–Li fields, `K = N/2`. Removes grid-scale noise generated where the
/// flow compresses toward `x = π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDamping {
    pub strength: f64,
    pub order: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default)]
    pub residue_threshold: Option<f64>,
    #[serde(default)]
    pub lambda_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitProfile {
    /// `(1 + z²/8 + z⁴/10)^{-1}`
    Heat1dQuartic,
    /// `(1 + (x² + y²)/8 + x⁴/100)^{-1}`
    Heat2dNonradial,
    /// `(1 + |x|²/8)^{-1}`
    Heat,
    /// `(1 + c z²)^{-1}`
    Riccati { c: f64 },
    /// `u = ω = sin x`
    Houli,
    /// The Hölder steady state for the configured `alpha`.
    HouliAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbField {
    U,
    Omega,
    Both,
}

/// `Σ amp · sin(k x)` added to the chosen Hou–Li field(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub field: PerturbField,
    pub sine_modes: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub profile: InitProfile,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn dt_max() -> f64 {
    DT_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Family,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    pub grid: GridSpec,
    #[serde(default = "one")]
    pub cu0: f64,
    pub max_tau: f64,
    pub max_iters: usize,
    pub cfl_safety: f64,
    pub output_every: usize,
    #[serde(default = "dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub stop: StopSpec,
    /// Hou–Li only.
    #[serde(default)]
    pub spectral_damping: Option<SpectralDamping>,
    pub init: InitSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { family: self.model, dim: self.dim, a: self.a, nu: self.nu, alpha: self.alpha }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.cu0 > 0.0) || !self.cu0.is_finite() {
            return bad(format!("cu0 = {} must be positive", self.cu0));
        }
        if !(self.max_tau > 0.0) {
            return bad(format!("max_tau = {} must be positive", self.max_tau));
        }
        if self.max_iters == 0 || self.output_every == 0 {
            return bad("max_iters and output_every must be positive".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety = {} outside (0, 1]", self.cfl_safety));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max = {} must be positive", self.dt_max));
        }
        let kind = self.grid.kind;
        match self.model {
            Family::Heat | Family::Riccati if kind != GridKind::HalfLineEven => {
                return bad(format!("{:?} needs a half-line-even grid", self.model));
            }
            Family::Houli if kind != GridKind::Periodic => return bad("houli needs a periodic grid".into()),
            _ => {}
        }
        if self.model == Family::Houli {
            if let Some(p) = self.grid.outer_bound {
                if (p - 2.0 * PI).abs() > 1e-12 {
                    return bad(format!("houli period must be 2π, got {p}"));
                }
            }
            if self.grid.nodes % 2 != 0 {
                return bad("houli needs an even node count".into());
            }
        } else if self.grid.outer_bound.is_none() {
            return bad("half-line grids need outer_bound".into());
        }
        let init = self.init.profile;
        let ok = match self.model {
            Family::Riccati => matches!(init, InitProfile::Riccati { .. } | InitProfile::Heat | InitProfile::Heat1dQuartic),
            Family::Heat => match init {
                InitProfile::Heat2dNonradial => self.dim == 2,
                InitProfile::Heat1dQuartic | InitProfile::Riccati { .. } => self.dim == 1,
                InitProfile::Heat => true,
                _ => false,
            },
            Family::Houli => {
                if self.alpha < 1.0 {
                    init == InitProfile::HouliAlpha
                } else {
                    init == InitProfile::Houli
                }
            }
        };
        if !ok {
            return bad(format!("initial profile {init:?} does not fit model {:?} (dim {})", self.model, self.dim));
        }
        if let InitProfile::Riccati { c } = init {
            if !(c > 0.0) {
                return bad(format!("riccati profile needs c > 0, got {c}"));
            }
        }
        if self.init.perturbation.is_some() && self.model != Family::Houli {
            return bad("perturbations are only defined for houli runs".into());
        }
        if let Some(d) = self.spectral_damping {
            if self.model != Family::Houli {
                return bad("spectral_damping is only defined for houli runs".into());
            }
            if !(d.strength >= 0.0) || !d.strength.is_finite() || d.order == 0 {
                return bad(format!("spectral_damping needs strength >= 0 and order >= 1, got {d:?}"));
            }
        }
        Ok(())
    }
}

pub(crate) struct Setup {
    pub flow: Box<dyn Flow>,
    pub fields: Vec<f64>,
    pub params: Params,
}

fn rational_profile(c: f64, r2: f64) -> f64 {
    1.0 / (1.0 + c * r2)
}

pub(crate) fn setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.validate()?;
    let g = &cfg.grid;
    let outer = g.outer_bound.unwrap_or(2.0 * PI);
    let grid: Arc<Grid1D> = Arc::new(build_grid(g.kind, g.nodes, outer, g.stretch).map_err(|e| Error::Config(e.to_string()))?);
    let params = Params { a: cfg.a, nu: cfg.nu, alpha: cfg.alpha };
    match cfg.model {
        Family::Riccati | Family::Heat => {
            let axes = vec![grid.clone(); cfg.dim];
            let ts = TensorSplines::new(axes, Parity::Even)?;
            let n = ts.len();
            let coords = |k: usize| -> (f64, f64) {
                let x = ts.coordinate(k, 0);
                let y = if cfg.dim == 2 { ts.coordinate(k, 1) } else { 0.0 };
                (x, y)
            };
            let init = |k: usize| {
                let (x, y) = coords(k);
                let r2 = x * x + y * y;
                match cfg.init.profile {
                    InitProfile::Heat1dQuartic => 1.0 / (1.0 + r2 / 8.0 + r2 * r2 / 10.0),
                    InitProfile::Heat2dNonradial => 1.0 / (1.0 + r2 / 8.0 + x.powi(4) / 100.0),
                    InitProfile::Riccati { c } => rational_profile(c, r2),
                    _ => rational_profile(0.125, r2),
                }
            };
            let c = match cfg.init.profile {
                InitProfile::Riccati { c } => c,
                _ => 0.125,
            };
            let fields: Vec<f64> = (0..n).map(init).collect();
            let profile: Vec<f64> = (0..n)
                .map(|k| {
                    let (x, y) = coords(k);
                    rational_profile(c, x * x + y * y)
                })
                .collect();
            let flow: Box<dyn Flow> = if cfg.model == Family::Riccati {
                Box::new(RiccatiFlow::new(grid, profile))
            } else {
                Box::new(HeatFlow::new(ts, cfg.normalization, profile))
            };
            Ok(Setup { flow, fields, params })
        }
        Family::Houli => {
            let (mut u, mut w, u_profile) = if cfg.alpha < 1.0 {
                let (w, u, _) = alpha_steady_state(cfg.alpha, grid.clone())?;
                (u.values().to_vec(), w.values().to_vec(), u.values().to_vec())
            } else {
                let s = sine_samples(&grid);
                (s.clone(), s.clone(), s)
            };
            if let Some(p) = &cfg.init.perturbation {
                let add = |v: &mut Vec<f64>| {
                    for (x, val) in grid.nodes().iter().zip(v.iter_mut()) {
                        *val += p.sine_modes.iter().map(|&(k, amp)| amp * (k as f64 * x).sin()).sum::<f64>();
                    }
                    odd_symmetrize(v);
                };
                if matches!(p.field, PerturbField::U | PerturbField::Both) {
                    add(&mut u);
                }
                if matches!(p.field, PerturbField::Omega | PerturbField::Both) {
                    add(&mut w);
                }
            }
            let flow = HouliFlow::new(cfg.spec(), grid, cfg.normalization, u_profile, cfg.spectral_damping)?;
            u.extend(w);
            Ok(Setup { flow: Box::new(flow), fields: u, params })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = r#"{"model":"heat","grid":{"kind":"half-line-even","nodes":64,"outer_bound":100,"stretch":4},
        "max_tau":1,"max_iters":10,"cfl_safety":0.4,"output_every":1,"init":{"profile":"heat1d_quartic"}}"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(HEAT).unwrap();
        assert_eq!(c.dim, 1);
        assert_eq!(c.cu0, 1.0);
        assert_eq!(c.dt_max, DT_MAX);
        assert_eq!(c.normalization, Normalization::Consistent);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RunConfig::from_json("{"), Err(Error::Config(_))));
        let swap = |a: &str, b: &str| RunConfig::from_json(&HEAT.replace(a, b));
        assert!(swap("\"cfl_safety\":0.4", "\"cfl_safety\":1.5").is_err());
        assert!(swap("heat1d_quartic", "heat2d_nonradial").is_err());
        assert!(swap("half-line-even", "periodic").is_err());
        assert!(swap("\"model\":\"heat\"", "\"model\":\"houli\"").is_err());
        assert!(swap("\"max_tau\":1", "\"max_tau\":1,\"bogus\":2").is_err());
        let h = r#"{"model":"houli","a":0.95,"grid":{"kind":"periodic","nodes":64},"max_tau":1,"max_iters":10,
            "cfl_safety":0.4,"output_every":1,"init":{"profile":"houli","perturbation":{"field":"omega","sine_modes":[[2,0.01],[1,-0.01]]}}}"#;
        assert!(RunConfig::from_json(h).is_ok());
        assert!(RunConfig::from_json(&h.replace("\"a\":0.95", "\"a\":0.95,\"alpha\":0.9")).is_err());
    }
}
