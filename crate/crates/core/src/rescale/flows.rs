//! Per-model evaluation of rates and right-hand sides for the time loop.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cert::weighted_energy_nodal;
use crate::error::{Error, Result};
use crate::mesh::Grid1D;
use crate::models::{
    heat_anchors, heat_normalization, heat_rates_consistent, heat_rhs, houli_normalization, houli_rate_consistent,
    houli_rhs, odd_symmetrize, riccati_rhs, BiotSavart, ModelSpec, RICCATI_RATES,
};
use crate::spline::{origin_derivatives, Jet, Parity, SplineSolver, TensorSplines};

use super::{stable_dt, CflAxis, Normalization, SpectralDamping};

/// Scaling rates `(ĉ_u, ĉ_l[·])` produced at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub c_u: f64,
    pub c_l: Vec<f64>,
}

/// Point diagnostics of a field state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub anchors: Vec<f64>,
    pub energy: f64,
    pub gamma: f64,
    pub psi_x0: Option<f64>,
}

pub(crate) trait Flow {
    /// Number of length axes carried by the scaling state.
    fn axes(&self) -> usize;
    /// Rates and field derivative at `y` given `C_u` and `λ[·]`.
    fn eval(&self, y: &[f64], cu: f64, lambda: &[f64]) -> Result<(Rates, Vec<f64>)>;
    fn max_dt(&self, y: &[f64], cu: f64, lambda: &[f64], rates: &Rates, safety: f64, dt_max: f64) -> Result<f64>;
    fn observe(&self, y: &[f64]) -> Result<Observation>;
}

fn trapezoid_weights(g: &Grid1D) -> Vec<f64> {
    let h = g.spacings();
    let n = g.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { h[i - 1] } else { 0.0 };
            let r = if i + 1 < n { h[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Rescaled Riccati flow with fixed rates on a half-line grid.
pub(crate) struct RiccatiFlow {
    solver: SplineSolver,
    profile: Vec<f64>,
    weights: Vec<f64>,
}

impl RiccatiFlow {
    pub fn new(grid: Arc<Grid1D>, profile: Vec<f64>) -> Self {
        let weights = trapezoid_weights(&grid);
        Self { solver: SplineSolver::new(grid, Parity::Even), profile, weights }
    }
}

impl Flow for RiccatiFlow {
    fn axes(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], _cu: f64, _lambda: &[f64]) -> Result<(Rates, Vec<f64>)> {
        let jet = self.solver.jet(y);
        let (c_u, c_l) = RICCATI_RATES;
        Ok((Rates { c_u, c_l: vec![c_l] }, riccati_rhs(self.solver.grid().nodes(), &jet)?))
    }

    fn max_dt(&self, _y: &[f64], _cu: f64, _l: &[f64], rates: &Rates, safety: f64, dt_max: f64) -> Result<f64> {
        let g = self.solver.grid();
        let speed: Vec<f64> = g.nodes().iter().map(|z| (rates.c_l[0] * z).abs()).collect();
        stable_dt(&[CflAxis { spacing: &g.local_spacing(), speed: &speed, diffusion: 0.0 }], safety, dt_max)
    }

    fn observe(&self, y: &[f64]) -> Result<Observation> {
        let m0 = self.solver.second_derivatives(y)[0];
        Ok(Observation {
            anchors: vec![y[0], m0],
            energy: l2_gap(y, &self.profile, &self.weights),
            gamma: sup_gap(y, &self.profile),
            psi_x0: None,
        })
    }
}

fn l2_gap(y: &[f64], p: &[f64], w: &[f64]) -> f64 {
    y.iter().zip(p).zip(w).map(|((a, b), w)| w * (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Semilinear heat flow in one or two dimensions.
pub(crate) struct HeatFlow {
    ts: TensorSplines,
    normalization: Normalization,
    profile: Vec<f64>,
    weights: Vec<f64>,
}

impl HeatFlow {
    pub fn new(ts: TensorSplines, normalization: Normalization, profile: Vec<f64>) -> Self {
        let w: Vec<Vec<f64>> = (0..ts.dim()).map(|i| trapezoid_weights(ts.axis(i).grid())).collect();
        let weights = if ts.dim() == 1 {
            w[0].clone()
        } else {
            w[0].iter().flat_map(|wx| w[1].iter().map(move |wy| wx * wy)).collect()
        };
        Self { ts, normalization, profile, weights }
    }
}

impl Flow for HeatFlow {
    fn axes(&self) -> usize {
        self.ts.dim()
    }

    fn eval(&self, y: &[f64], _cu: f64, lambda: &[f64]) -> Result<(Rates, Vec<f64>)> {
        let jet = self.ts.jet(y);
        let (c_u, c_l) = match self.normalization {
            Normalization::Consistent => heat_rates_consistent(&self.ts, &jet, lambda)?,
            Normalization::Formula => heat_normalization(&heat_anchors(&self.ts, y)?, lambda)?,
        };
        let dy = heat_rhs(&self.ts, &jet, c_u, &c_l, lambda)?;
        Ok((Rates { c_u, c_l }, dy))
    }

    fn max_dt(&self, _y: &[f64], _cu: f64, lambda: &[f64], rates: &Rates, safety: f64, dt_max: f64) -> Result<f64> {
        let spacing: Vec<Vec<f64>> = (0..self.axes()).map(|i| self.ts.axis(i).grid().local_spacing()).collect();
        let speed: Vec<Vec<f64>> = (0..self.axes())
            .map(|i| self.ts.axis(i).grid().nodes().iter().map(|x| (rates.c_l[i] * x).abs()).collect())
            .collect();
        let axes: Vec<CflAxis> = (0..self.axes())
            .map(|i| CflAxis { spacing: &spacing[i], speed: &speed[i], diffusion: lambda[i] })
            .collect();
        stable_dt(&axes, safety, dt_max)
    }

    fn observe(&self, y: &[f64]) -> Result<Observation> {
        Ok(Observation {
            anchors: vec![y[0], self.ts.origin_d2(y, 0)],
            energy: l2_gap(y, &self.profile, &self.weights),
            gamma: sup_gap(y, &self.profile),
            psi_x0: None,
        })
    }
}

/// Hou–Li flow on a uniform periodic grid; `y` holds `u` then `ω`.
pub(crate) struct HouliFlow {
    spec: ModelSpec,
    solver: SplineSolver,
    bs: BiotSavart,
    normalization: Normalization,
    u_profile: Vec<f64>,
    sine: Jet,
    damping: Option<SpectralDamping>,
}

impl HouliFlow {
    pub fn new(
        spec: ModelSpec,
        grid: Arc<Grid1D>,
        normalization: Normalization,
        u_profile: Vec<f64>,
        damping: Option<SpectralDamping>,
    ) -> Result<Self> {
        let solver = SplineSolver::new(grid.clone(), Parity::Odd);
        let sine = solver.jet(&sine_samples(&grid));
        Ok(Self { spec, solver, bs: BiotSavart::new(grid)?, normalization, u_profile, sine, damping })
    }

    fn n(&self) -> usize {
        self.solver.grid().len()
    }
}

impl Flow for HouliFlow {
    fn axes(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], cu: f64, _lambda: &[f64]) -> Result<(Rates, Vec<f64>)> {
        let n = self.n();
        let (u, w) = y.split_at(n);
        let uj = self.solver.jet(u);
        let wj = self.solver.jet(w);
        let stream = self.bs.solve(w)?;
        let c_u = match self.normalization {
            Normalization::Consistent => houli_rate_consistent(&self.spec, &self.solver, &uj, &stream, cu)?,
            Normalization::Formula => {
                let uxxx = if self.spec.is_holder() { 0.0 } else { origin_derivatives(self.solver.grid(), u, Parity::Odd)[3] };
                houli_normalization(&self.spec, stream.psi_x0, uj.d1[0], uxxx, cu)?
            }
        };
        let mut c_u = c_u;
        let damped = match self.damping {
            Some(d) => {
                let du = self.bs.spectral_damping(u, d.order)?;
                let dw = self.bs.spectral_damping(w, d.order)?;
                if self.normalization == Normalization::Consistent && !self.spec.is_holder() {
                    // keep the anchor slope of the damped right-hand side at zero
                    c_u += d.strength * self.solver.jet(&du).d1[0] / uj.d1[0];
                }
                Some((d.strength, du, dw))
            }
            None => None,
        };
        let (mut ru, mut rw) = houli_rhs(&self.spec, &uj, &wj, &stream, c_u, cu)?;
        if let Some((k, du, dw)) = damped {
            for i in 0..n {
                ru[i] -= k * du[i];
                rw[i] -= k * dw[i];
            }
        }
        odd_symmetrize(&mut ru);
        odd_symmetrize(&mut rw);
        ru.extend(rw);
        Ok((Rates { c_u, c_l: vec![0.0] }, ru))
    }

    fn max_dt(&self, y: &[f64], cu: f64, _l: &[f64], _rates: &Rates, safety: f64, dt_max: f64) -> Result<f64> {
        let n = self.n();
        let stream = self.bs.solve(&y[n..])?;
        let speed: Vec<f64> = stream.psi.iter().map(|p| 2.0 * self.spec.a * p.abs()).collect();
        let spacing = self.solver.grid().local_spacing();
        let dt = stable_dt(&[CflAxis { spacing: &spacing, speed: &speed, diffusion: self.spec.nu * cu }], safety, dt_max)?;
        // RK4 is stable on the negative real axis down to about -2.78
        Ok(match self.damping {
            Some(d) if d.strength > 0.0 => dt.min(safety * 2.5 / d.strength),
            _ => dt,
        })
    }

    fn observe(&self, y: &[f64]) -> Result<Observation> {
        let n = self.n();
        let (u, w) = y.split_at(n);
        let uj: Jet = self.solver.jet(u);
        let stream = self.bs.solve(w)?;
        let energy = if self.spec.is_holder() {
            f64::NAN
        } else {
            // perturbation from the sampled sine profile
            let dux: Vec<f64> = uj.d1.iter().zip(&self.sine.d1).map(|(a, b)| a - b).collect();
            let dw: Vec<f64> = w.iter().zip(&self.sine.value).map(|(a, b)| a - b).collect();
            let wx0 = self.solver.jet(w).d1[0] - self.sine.d1[0];
            match weighted_energy_nodal(&dux, &dw, wx0) {
                Ok(e) => e,
                Err(Error::SingularIntegrand(_)) => f64::NAN,
                Err(e) => return Err(e),
            }
        };
        Ok(Observation {
            anchors: vec![uj.d1[0]],
            energy,
            gamma: sup_gap(u, &self.u_profile),
            psi_x0: Some(stream.psi_x0),
        })
    }
}

/// `sin x` samples, the smooth Hou–Li profile.
pub(crate) fn sine_samples(g: &Grid1D) -> Vec<f64> {
    let mut v: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
    if (g.period() - 2.0 * PI).abs() < 1e-12 {
        odd_symmetrize(&mut v);
    }
    v
}
