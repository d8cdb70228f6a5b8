//! The dynamic-rescaling time loop.
//!
//! Each step evaluates the model's normalization rates and right-hand side,
//! picks a CFL-limited step, and advances the fields together with
//! `log C_u`, `log C_l[·]`, `log λ[·]` and physical time by classical RK4.
//! Rates are re-evaluated at every RK stage, so the scaling ODEs see the same
//! stage values as the fields and the anchored point values stay fixed to
//! round-off.

mod config;
mod flows;
mod series;

pub use config::{
    GridSpec, InitProfile, InitSpec, Normalization, PerturbField, Perturbation, RunConfig, SpectralDamping, StopSpec,
};
pub use flows::{Observation, Rates};
pub use series::{DiagnosticsRow, DiagnosticsSeries};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use flows::Flow;

/// Model parameters carried in the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub a: f64,
    pub nu: f64,
    pub alpha: f64,
}

/// Scaling bookkeeping. Amplitude and lengths are tracked through their
/// logarithms; `λ_i = C_u / C_l_i²` is integrated alongside as a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleState {
    pub tau: f64,
    pub t_phys: f64,
    pub log_cu: f64,
    pub log_cl: Vec<f64>,
    pub log_lambda: Vec<f64>,
    pub c_u: f64,
    pub c_l: Vec<f64>,
    pub params: Params,
}

/// `log C_u` beyond which the run stops as an amplitude overflow.
pub const LOG_CU_MAX: f64 = 644.720_671_352_494_6; // ln(1e280)

impl RescaleState {
    /// Starts from `C_u = cu0` and unit length scales, so `λ_i = cu0`.
    pub fn new(cu0: f64, axes: usize, params: Params) -> Self {
        let l = cu0.ln();
        Self {
            tau: 0.0,
            t_phys: 0.0,
            log_cu: l,
            log_cl: vec![0.0; axes],
            log_lambda: vec![l; axes],
            c_u: 0.0,
            c_l: vec![0.0; axes],
            params,
        }
    }

    pub fn cu(&self) -> f64 {
        self.log_cu.exp()
    }

    pub fn cl(&self) -> Vec<f64> {
        self.log_cl.iter().map(|x| x.exp()).collect()
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.log_lambda.iter().map(|x| x.exp()).collect()
    }

    /// Largest relative gap between `λ_i` and `C_u / C_l_i²`.
    pub fn lambda_defect(&self) -> f64 {
        self.log_lambda
            .iter()
            .zip(&self.log_cl)
            .map(|(ll, lc)| (ll - (self.log_cu - 2.0 * lc)).exp_m1().abs())
            .fold(0.0, f64::max)
    }
}

/// One axis of CFL input: node spacing, advection speed at each node and a
/// diffusion coefficient.
#[derive(Debug, Clone, Copy)]
pub struct CflAxis<'a> {
    pub spacing: &'a [f64],
    pub speed: &'a [f64],
    pub diffusion: f64,
}

/// Default cap on the step when both limits are vacuous.
pub const DT_MAX: f64 = 0.1;

/// `dt = safety · min(Δx/|v|, 1/(2 Σ_i D_i/Δx_i²))`, capped at `dt_max`.
/// In one dimension the diffusion limit is `Δx²/(2D)`.
pub fn stable_dt(axes: &[CflAxis], safety: f64, dt_max: f64) -> Result<f64> {
    if !(safety > 0.0) || !(dt_max > 0.0) {
        return Err(Error::InvalidParameter(format!("safety {safety} and dt_max {dt_max} must be positive")));
    }
    let mut adv = f64::INFINITY;
    let mut diff_rate = 0.0;
    for ax in axes {
        if ax.spacing.len() != ax.speed.len() {
            return Err(Error::LengthMismatch { expected: ax.spacing.len(), got: ax.speed.len() });
        }
        for (i, (&h, &v)) in ax.spacing.iter().zip(ax.speed).enumerate() {
            if !h.is_finite() || !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v != 0.0 {
                adv = adv.min(h / v.abs());
            }
        }
        if !ax.diffusion.is_finite() {
            return Err(Error::NonFinite(0));
        }
        let hmin = ax.spacing.iter().copied().fold(f64::INFINITY, f64::min);
        diff_rate += ax.diffusion.max(0.0) / (hmin * hmin);
    }
    let diff = if diff_rate > 0.0 { 0.5 / diff_rate } else { f64::INFINITY };
    Ok((safety * adv.min(diff)).min(dt_max))
}

/// Advances the scaling variables over one step from the four stage rates
/// of an RK4 step. `t` obeys `t_τ = C_u`.
pub fn update_scales(state: &RescaleState, stages: &[Rates; 4], dt: f64) -> Result<RescaleState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let d = state.log_cl.len();
    if stages.iter().any(|r| r.c_l.len() != d) {
        return Err(Error::DimensionMismatch(format!("{d} length axes")));
    }
    const W: [f64; 4] = [1.0, 2.0, 2.0, 1.0];
    let avg = |f: &dyn Fn(&Rates) -> f64| stages.iter().zip(W).map(|(r, w)| w * f(r)).sum::<f64>() * dt / 6.0;
    let mut next = state.clone();
    next.log_cu += avg(&|r| r.c_u);
    for i in 0..d {
        next.log_cl[i] -= avg(&|r| r.c_l[i]);
        next.log_lambda[i] += avg(&|r| r.c_u + 2.0 * r.c_l[i]);
    }
    let l = state.log_cu;
    let kt = [
        l.exp(),
        (l + 0.5 * dt * stages[0].c_u).exp(),
        (l + 0.5 * dt * stages[1].c_u).exp(),
        (l + dt * stages[2].c_u).exp(),
    ];
    next.t_phys += dt / 6.0 * (kt[0] + 2.0 * kt[1] + 2.0 * kt[2] + kt[3]);
    next.tau += dt;
    next.c_u = stages[3].c_u;
    next.c_l = stages[3].c_l.clone();
    Ok(next)
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    MaxIters,
    MaxTau,
    Residue,
    LambdaFloor,
    /// `C_u` left the representable range.
    Overflow,
    Blowup(String),
    DegenerateAnchor(String),
}

impl StopReason {
    pub fn is_clean(&self) -> bool {
        !matches!(self, StopReason::Blowup(_) | StopReason::DegenerateAnchor(_))
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::MaxIters => write!(f, "max_iters reached"),
            StopReason::MaxTau => write!(f, "max_tau reached"),
            StopReason::Residue => write!(f, "residue below threshold"),
            StopReason::LambdaFloor => write!(f, "lambda below floor"),
            StopReason::Overflow => write!(f, "amplitude factor overflow"),
            StopReason::Blowup(m) => write!(f, "solver blowup: {m}"),
            StopReason::DegenerateAnchor(m) => write!(f, "degenerate anchor: {m}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: DiagnosticsSeries,
    pub stop: StopReason,
    pub state: RescaleState,
    /// Final nodal fields (Hou–Li: `u` followed by `ω`).
    pub fields: Vec<f64>,
    /// Largest `λ`-consistency defect seen over the run.
    pub max_lambda_defect: f64,
}

fn stop_for(err: Error, iter: usize, tau: f64) -> StopReason {
    match err {
        Error::DegenerateAnchor(m) => StopReason::DegenerateAnchor(format!("{m} (iter {iter}, tau {tau})")),
        e => StopReason::Blowup(format!("{e} (iter {iter}, tau {tau})")),
    }
}

fn shifted(base: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, k)| b + h * k).collect()
}

fn exp_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.exp()).collect()
}

/// Stage-coupled RK4 step from `(y, state)` with first-stage evaluation `k1`.
fn rk4_step(
    flow: &dyn Flow,
    y: &[f64],
    state: &RescaleState,
    k1: (Rates, Vec<f64>),
    dt: f64,
) -> Result<(Vec<f64>, RescaleState)> {
    let stage = |prev: &(Rates, Vec<f64>), h: f64| -> Result<(Rates, Vec<f64>)> {
        let ys = shifted(y, &prev.1, h);
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverBlowup);
        }
        let lcu = state.log_cu + h * prev.0.c_u;
        let llam: Vec<f64> = state
            .log_lambda
            .iter()
            .zip(&prev.0.c_l)
            .map(|(l, c)| l + h * (prev.0.c_u + 2.0 * c))
            .collect();
        flow.eval(&ys, lcu.exp(), &exp_all(&llam))
    };
    let k2 = stage(&k1, 0.5 * dt)?;
    let k3 = stage(&k2, 0.5 * dt)?;
    let k4 = stage(&k3, dt)?;
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverBlowup);
    }
    let st = update_scales(state, &[k1.0, k2.0, k3.0, k4.0], dt)?;
    Ok((next, st))
}

/// Runs a configured simulation. Setup problems are returned as errors;
/// failures inside the loop end the run with the matching [`StopReason`].
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let setup = config::setup(config)?;
    let flow = setup.flow.as_ref();
    let mut y = setup.fields;
    let mut state = RescaleState::new(config.cu0, flow.axes(), setup.params);
    let mut series = DiagnosticsSeries::new(config.model, config.dim);
    let mut max_defect = 0.0f64;

    let row = |state: &RescaleState, rates: &Rates, obs: Observation, iter: usize, dt: f64| DiagnosticsRow {
        iter,
        tau: state.tau,
        dt,
        c_u: rates.c_u,
        c_l: rates.c_l.clone(),
        lambda: state.lambda(),
        log_cu: state.log_cu,
        anchors: obs.anchors,
        energy: obs.energy,
        gamma: obs.gamma,
        psi_x0: obs.psi_x0,
    };

    let mut iter = 0usize;
    let mut last_dt = 0.0;
    let mut current = match flow.eval(&y, state.cu(), &state.lambda()) {
        Ok(k) => k,
        Err(e) => {
            let stop = stop_for(e, 0, 0.0);
            return Ok(RunOutcome { series, stop, state, fields: y, max_lambda_defect: 0.0 });
        }
    };
    state.c_u = current.0.c_u;
    state.c_l = current.0.c_l.clone();
    let mut recorded = true;
    series.rows.push(row(&state, &current.0, flow.observe(&y)?, 0, 0.0));

    let stop = loop {
        if let Some(thr) = config.stop.residue_threshold {
            if flow.observe(&y)?.gamma <= thr {
                break StopReason::Residue;
            }
        }
        if let Some(floor) = config.stop.lambda_floor {
            if state.lambda().iter().any(|&l| l < floor) {
                break StopReason::LambdaFloor;
            }
        }
        if iter >= config.max_iters {
            break StopReason::MaxIters;
        }
        if state.tau >= config.max_tau {
            break StopReason::MaxTau;
        }
        let dt = match flow.max_dt(&y, state.cu(), &state.lambda(), &current.0, config.cfl_safety, config.dt_max) {
            Ok(dt) => dt.min(config.max_tau - state.tau),
            Err(e) => break stop_for(e, iter, state.tau),
        };
        let (ny, nstate) = match rk4_step(flow, &y, &state, current.clone(), dt) {
            Ok(v) => v,
            Err(e) => break stop_for(e, iter, state.tau),
        };
        y = ny;
        state = nstate;
        iter += 1;
        last_dt = dt;
        recorded = false;
        max_defect = max_defect.max(state.lambda_defect());
        if state.log_cu > LOG_CU_MAX || !state.t_phys.is_finite() {
            break StopReason::Overflow;
        }
        current = match flow.eval(&y, state.cu(), &state.lambda()) {
            Ok(k) => k,
            Err(e) => break stop_for(e, iter, state.tau),
        };
        state.c_u = current.0.c_u;
        state.c_l = current.0.c_l.clone();
        if iter % config.output_every == 0 {
            series.rows.push(row(&state, &current.0, flow.observe(&y)?, iter, dt));
            recorded = true;
        }
    };
    if !recorded && stop.is_clean() && stop != StopReason::Overflow {
        series.rows.push(row(&state, &current.0, flow.observe(&y)?, iter, last_dt));
    }
    Ok(RunOutcome { series, stop, state, fields: y, max_lambda_defect: max_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridKind};
    use crate::models::heat_rhs;
    use crate::profiles::{profile_jet, ProfileKind};
    use crate::spline::{Jet, Parity, TensorSplines};
    use std::sync::Arc;

    fn rates(c_u: f64, c_l: f64) -> Rates {
        Rates { c_u, c_l: vec![c_l] }
    }

    fn params() -> Params {
        Params { a: 1.0, nu: 0.0, alpha: 1.0 }
    }

    #[test]
    fn cfl_examples() {
        let h = vec![0.1; 10];
        let zero = vec![0.0; 10];
        let two = vec![2.0; 10];
        let dt = stable_dt(&[CflAxis { spacing: &h, speed: &zero, diffusion: 0.0 }], 0.4, DT_MAX).unwrap();
        assert_eq!(dt, DT_MAX);
        let dt = stable_dt(&[CflAxis { spacing: &h, speed: &two, diffusion: 0.0 }], 0.5, DT_MAX).unwrap();
        assert!((dt - 0.025).abs() < 1e-15);
        let dt = stable_dt(&[CflAxis { spacing: &h, speed: &zero, diffusion: 1.0 }], 0.5, DT_MAX).unwrap();
        assert!((dt - 0.0025).abs() < 1e-15);
        let mut bad = two.clone();
        bad[3] = f64::NAN;
        assert!(stable_dt(&[CflAxis { spacing: &h, speed: &bad, diffusion: 0.0 }], 0.5, DT_MAX).is_err());
    }

    #[test]
    fn scale_updates() {
        let s = RescaleState::new(2.0, 1, params());
        let z = rates(0.0, 0.0);
        let n = update_scales(&s, &[z.clone(), z.clone(), z.clone(), z], 0.1).unwrap();
        assert_eq!(n.log_cu, s.log_cu);
        assert!((n.t_phys - 0.2).abs() < 1e-15);
        assert!((n.tau - 0.1).abs() < 1e-15);

        let s = RescaleState::new(1.0, 1, params());
        let r = rates(-1.0, 0.0);
        let n = update_scales(&s, &[r.clone(), r.clone(), r.clone(), r], 0.1).unwrap();
        assert!((n.cu() - (-0.1f64).exp()).abs() < 1e-12);
        // t = 1 - e^{-τ}
        assert!((n.t_phys - (1.0 - (-0.1f64).exp())).abs() < 1e-8);

        let mut s = RescaleState::new(1.0, 1, params());
        let r = rates(-2.0, 0.5);
        for _ in 0..30 {
            s = update_scales(&s, &[r.clone(), r.clone(), r.clone(), r.clone()], 0.1).unwrap();
        }
        assert!((s.lambda()[0] - (-3.0f64).exp()).abs() < 1e-12);
        assert!(s.lambda_defect() < 1e-12);
    }

    /// `y_i' = -k_i y_i` with constant rates, for checking the integrator order.
    struct Decay(Vec<f64>);

    impl Flow for Decay {
        fn axes(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64], _cu: f64, _l: &[f64]) -> Result<(Rates, Vec<f64>)> {
            Ok((rates(-1.0, 0.5), y.iter().zip(&self.0).map(|(y, k)| -k * y).collect()))
        }
        fn max_dt(&self, _y: &[f64], _cu: f64, _l: &[f64], _r: &Rates, _s: f64, dt_max: f64) -> Result<f64> {
            Ok(dt_max)
        }
        fn observe(&self, _y: &[f64]) -> Result<Observation> {
            Ok(Observation { anchors: vec![], energy: 0.0, gamma: 0.0, psi_x0: None })
        }
    }

    fn step(flow: &dyn Flow, y: &[f64], dt: f64) -> (Vec<f64>, RescaleState) {
        let s = RescaleState::new(1.0, flow.axes(), params());
        let k1 = flow.eval(y, s.cu(), &s.lambda()).unwrap();
        rk4_step(flow, y, &s, k1, dt).unwrap()
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let flow = Decay(vec![1.0, 3.0, 7.0]);
        let y0 = [1.0, -2.0, 0.5];
        let err = |dt: f64| {
            let (y, _) = step(&flow, &y0, dt);
            y.iter().zip(&y0).zip(&flow.0).map(|((y, y0), k)| (y - y0 * (-k * dt).exp()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 32.0).abs() < 2.0, "ratio {ratio}");
    }

    fn config(text: &str) -> RunConfig {
        RunConfig::from_json(text).unwrap()
    }

    const RICCATI: &str = r#"{"model":"riccati","grid":{"kind":"half-line-even","nodes":2000,"outer_bound":1000,"stretch":8},
        "max_tau":0.05,"max_iters":1000,"cfl_safety":0.4,"output_every":1,"init":{"profile":{"riccati":{"c":0.125}}}}"#;

    #[test]
    fn zero_riccati_field_stays_zero() {
        let cfg = config(RICCATI);
        let setup = config::setup(&cfg).unwrap();
        let y = vec![0.0; setup.fields.len()];
        let (next, st) = step(setup.flow.as_ref(), &y, 0.01);
        assert!(next.iter().all(|v| *v == 0.0));
        assert_eq!(st.c_u, -1.0);
        assert_eq!(st.c_l, vec![0.5]);
    }

    /// Heat right-hand side with `λ = 0` whose derivatives come from the exact
    /// profile, so the profile is a fixed point of the semi-discrete flow.
    struct ExactHeat {
        ts: TensorSplines,
        jet: Jet,
    }

    impl Flow for ExactHeat {
        fn axes(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64], _cu: f64, _l: &[f64]) -> Result<(Rates, Vec<f64>)> {
            let jet = Jet { value: y.to_vec(), ..self.jet.clone() };
            let dy = heat_rhs(&self.ts, &jet.into(), -1.0, &[0.5], &[0.0])?;
            Ok((rates(-1.0, 0.5), dy))
        }
        fn max_dt(&self, _y: &[f64], _cu: f64, _l: &[f64], _r: &Rates, _s: f64, dt_max: f64) -> Result<f64> {
            Ok(dt_max)
        }
        fn observe(&self, _y: &[f64]) -> Result<Observation> {
            Ok(Observation { anchors: vec![], energy: 0.0, gamma: 0.0, psi_x0: None })
        }
    }

    #[test]
    fn exact_heat_profile_is_a_fixed_point() {
        let g = Arc::new(build_grid(GridKind::HalfLineEven, 400, 200.0, 4.0).unwrap());
        let jet = Jet::from_fn(g.nodes(), |z| profile_jet(ProfileKind::Heat, z).unwrap());
        let y = jet.value.clone();
        let flow = ExactHeat { ts: TensorSplines::new(vec![g], Parity::Even).unwrap(), jet };
        let (next, st) = step(&flow, &y, 0.05);
        let change = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(change <= 1e-12, "{change}");
        assert!((st.cu() - (-0.05f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn spline_step_from_profile_moves_by_the_spatial_residual() {
        let cfg = config(RICCATI);
        let setup = config::setup(&cfg).unwrap();
        let flow = setup.flow.as_ref();
        let dt = 1e-3;
        let (_, rhs) = flow.eval(&setup.fields, 1.0, &[1.0]).unwrap();
        let bound = dt * rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (next, _) = step(flow, &setup.fields, dt);
        let change = next.iter().zip(&setup.fields).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(bound < 1e-10);
        assert!(change <= 1.01 * bound, "{change} vs {bound}");
    }

    fn csv_bytes(cfg: &RunConfig) -> Vec<u8> {
        let mut out = Vec::new();
        run(cfg).unwrap().series.write_csv(&mut out).unwrap();
        out
    }

    #[test]
    fn runs_are_deterministic() {
        for text in [
            RICCATI,
            r#"{"model":"houli","a":0.9,"grid":{"kind":"periodic","nodes":64},"max_tau":0.3,"max_iters":1000,
               "cfl_safety":0.4,"output_every":5,"spectral_damping":{"strength":10,"order":8},
               "init":{"profile":"houli","perturbation":{"field":"both","sine_modes":[[3,0.02]]}}}"#,
        ] {
            let cfg = config(text);
            assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg));
        }
    }

    #[test]
    fn houli_rhs_is_odd() {
        let cfg = config(
            r#"{"model":"houli","a":0.9,"grid":{"kind":"periodic","nodes":64},"max_tau":1,"max_iters":10,
               "cfl_safety":0.4,"output_every":1,
               "init":{"profile":"houli","perturbation":{"field":"both","sine_modes":[[2,0.1],[5,-0.03]]}}}"#,
        );
        let setup = config::setup(&cfg).unwrap();
        let (_, dy) = setup.flow.eval(&setup.fields, 1.0, &[1.0]).unwrap();
        let n = 64;
        for half in [&dy[..n], &dy[n..]] {
            assert_eq!(half[0], 0.0);
            assert_eq!(half[n / 2], 0.0);
            for j in 1..n {
                assert_eq!(half[j], -half[n - j]);
            }
        }
    }

    #[test]
    fn houli_anchor_is_frozen() {
        let cfg = config(
            r#"{"model":"houli","a":0.95,"grid":{"kind":"periodic","nodes":128},"max_tau":2,"max_iters":100000,
               "cfl_safety":0.4,"output_every":50,"spectral_damping":{"strength":10,"order":8},
               "init":{"profile":"houli","perturbation":{"field":"omega","sine_modes":[[1,-0.01],[2,0.01]]}}}"#,
        );
        let out = run(&cfg).unwrap();
        assert_eq!(out.stop, StopReason::MaxTau);
        let a0 = out.series.rows[0].anchors[0];
        assert!(out.series.rows.iter().all(|r| (r.anchors[0] - a0).abs() < 1e-12));
        assert!(out.max_lambda_defect < 1e-9);
    }

    #[test]
    fn stop_reasons() {
        assert!(StopReason::MaxTau.is_clean());
        assert!(StopReason::Overflow.is_clean());
        assert!(!StopReason::Blowup("x".into()).is_clean());
        assert!(!StopReason::DegenerateAnchor("x".into()).is_clean());
        let mut cfg = config(RICCATI);
        cfg.stop.residue_threshold = Some(1.0);
        assert_eq!(run(&cfg).unwrap().stop, StopReason::Residue);
        let mut cfg = config(RICCATI);
        cfg.max_iters = 3;
        let out = run(&cfg).unwrap();
        assert_eq!(out.stop, StopReason::MaxIters);
        assert_eq!(out.series.rows.last().unwrap().iter, 3);
        assert!(out.series.rows.windows(2).all(|w| w[1].tau > w[0].tau));
    }
}
