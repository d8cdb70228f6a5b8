//! Periodic stream-function solve `-ψ_xx = ω` for odd fields, and the
//! Hölder-continuous steady state.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, GridKind};
use crate::spline::{build_spline, origin_derivatives, Parity, SplineField};

const PARITY_TOL: f64 = 1e-10;

/// Stream function and its derivatives at the nodes.
#[derive(Debug, Clone)]
pub struct Stream {
    pub psi: Vec<f64>,
    pub psi_x: Vec<f64>,
    /// `-ψ_xx` rebuilt from the transform; equals ω up to round-off.
    pub neg_psi_xx: Vec<f64>,
    /// `ψ_x(0)` summed from the sine series.
    pub psi_x0: f64,
    /// `ψ_x(0) = -(1/L) ∫ y ω dy` by the endpoint-corrected trapezoid rule.
    /// Only meaningful for smooth ω.
    pub psi_x0_quadrature: f64,
}

/// Sine-series solver on a uniform periodic grid with an even node count.
pub struct BiotSavart {
    grid: Arc<Grid1D>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for BiotSavart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BiotSavart").field("n", &self.grid.len()).finish()
    }
}

impl BiotSavart {
    pub fn new(grid: Arc<Grid1D>) -> Result<Self> {
        if grid.kind() != GridKind::Periodic || !grid.is_uniform() || grid.len() % 2 != 0 {
            return Err(Error::InvalidGrid("stream solve needs a uniform periodic grid with even node count".into()));
        }
        let mut planner = FftPlanner::new();
        let n = grid.len();
        Ok(Self { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), grid })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    /// Largest even component of `omega`, scaled by `max(1, |ω|∞)`.
    pub fn parity_defect(omega: &[f64]) -> f64 {
        let n = omega.len();
        let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut d = omega[0].abs().max(omega[n / 2].abs());
        for j in 1..n {
            d = d.max((omega[j] + omega[n - j]).abs());
        }
        d / scale
    }

    pub fn solve(&self, omega: &[f64]) -> Result<Stream> {
        let n = self.grid.len();
        if omega.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: omega.len() });
        }
        if let Some(i) = omega.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let defect = Self::parity_defect(omega);
        if defect > PARITY_TOL {
            return Err(Error::ParityViolation(defect));
        }
        let period = self.grid.period();
        let kappa = 2.0 * PI / period;
        let mut spec: Vec<Complex<f64>> = omega.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut spec);
        let nf = n as f64;
        // sine coefficients b_k of ω
        let b: Vec<f64> = (0..n / 2).map(|k| if k == 0 { 0.0 } else { -2.0 * spec[k].im / nf }).collect();

        let synth = |coef: &dyn Fn(usize) -> f64, sine: bool| -> Vec<f64> {
            let mut buf = vec![Complex::new(0.0, 0.0); n];
            for k in 1..n / 2 {
                let c = coef(k);
                // sin: F_k = -i N c / 2; cos: F_k = N c / 2
                let v = if sine { Complex::new(0.0, -0.5 * nf * c) } else { Complex::new(0.5 * nf * c, 0.0) };
                buf[k] = v;
                buf[n - k] = v.conj();
            }
            self.inv.process(&mut buf);
            buf.iter().map(|z| z.re / nf).collect()
        };
        let wave = |k: usize| kappa * k as f64;
        let psi = synth(&|k| b[k] / (wave(k) * wave(k)), true);
        let psi_x = synth(&|k| b[k] / wave(k), false);
        let neg_psi_xx = synth(&|k| b[k], true);
        let psi_x0: f64 = (1..n / 2).map(|k| b[k] / wave(k)).sum();

        let h = period / nf;
        let d = origin_derivatives(&self.grid, omega, Parity::Odd);
        let trap: f64 = (1..n).map(|j| self.grid.nodes()[j] * omega[j]).sum::<f64>() * h;
        let integral = trap - h * h / 12.0 * period * d[1] + h.powi(4) / 720.0 * period * d[3];
        Ok(Stream { psi, psi_x, neg_psi_xx, psi_x0, psi_x0_quadrature: -integral / period })
    }

    /// `Σ_k (k/K)^{2p} v_k sin kx` at the nodes for odd `v` with sine
    /// coefficients `v_k`, where `K = N/2`. Scaled by a rate this is a
    /// high-order damping that only touches the last resolved modes.
    pub fn spectral_damping(&self, v: &[f64], order: u32) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: v.len() });
        }
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let kmax = (n / 2) as f64;
        buf[0] = Complex::new(0.0, 0.0);
        for k in 1..n {
            let kk = k.min(n - k) as f64;
            buf[k] *= (kk / kmax).powi(2 * order as i32);
        }
        self.inv.process(&mut buf);
        Ok(buf.iter().map(|z| z.re / n as f64).collect())
    }
}

/// Stream function of an odd periodic field and `ψ_x(0)`.
pub fn biot_savart(omega: &SplineField) -> Result<(SplineField, f64)> {
    let bs = BiotSavart::new(omega.grid().clone())?;
    let s = bs.solve(omega.values())?;
    let mut psi = s.psi;
    odd_symmetrize(&mut psi);
    Ok((build_spline(omega.grid().clone(), psi, Parity::Odd)?, s.psi_x0))
}

/// Projects nodal values on a uniform periodic grid onto the odd subspace.
pub fn odd_symmetrize(v: &mut [f64]) {
    let n = v.len();
    v[0] = 0.0;
    if n % 2 == 0 {
        v[n / 2] = 0.0;
    }
    for j in 1..n.div_ceil(2) {
        let a = 0.5 * (v[j] - v[n - j]);
        v[j] = a;
        v[n - j] = -a;
    }
}

fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(∫ f, ∫ y f)` over `[a, b]`, grading the nodes towards a singular end.
fn moments(f: &dyn Fn(f64) -> f64, a: f64, b: f64, sing_left: bool, sing_right: bool, gl: &[(f64, f64)]) -> (f64, f64) {
    const P: i32 = 4;
    let (mut i0, mut i1) = (0.0, 0.0);
    let mut add = |y: f64, w: f64| {
        let v = f(y);
        i0 += w * v;
        i1 += w * y * v;
    };
    let h = b - a;
    if sing_left && sing_right {
        let m = 0.5 * (a + b);
        let (l0, l1) = moments(f, a, m, true, false, gl);
        let (r0, r1) = moments(f, m, b, false, true, gl);
        return (l0 + r0, l1 + r1);
    }
    for &(t, w) in gl {
        let s = 0.5 * (t + 1.0);
        if sing_left {
            add(a + h * s.powi(P), 0.5 * w * h * P as f64 * s.powi(P - 1));
        } else if sing_right {
            add(b - h * s.powi(P), 0.5 * w * h * P as f64 * s.powi(P - 1));
        } else {
            add(a + h * s, 0.5 * w * h);
        }
    }
    (i0, i1)
}

/// Samples `ω̄ = sgn(sin x)|sin x|^α`, `ū = sgn(sin x)|sin x|^((1+α)/2)` and the
/// stream function `ψ̄ = ∫₀^x (y - x) ω̄ dy + x ψ̄_x(0)` on a 2π-periodic grid.
pub fn alpha_steady_state(alpha: f64, grid: Arc<Grid1D>) -> Result<(SplineField, SplineField, SplineField)> {
    if !(alpha > super::ALPHA_MIN && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (7/8, 1]")));
    }
    if grid.kind() != GridKind::Periodic || (grid.period() - 2.0 * PI).abs() > 1e-12 {
        return Err(Error::InvalidGrid("steady state needs a 2π-periodic grid".into()));
    }
    let spow = |x: f64, p: f64| {
        let s = x.sin();
        s.signum() * s.abs().powf(p)
    };
    let omega_fn = move |x: f64| if x == 0.0 { 0.0 } else { spow(x, alpha) };
    let nodes = grid.nodes();
    let n = nodes.len();
    let gl = gauss_legendre(20);
    let is_sing = |x: f64| [0.0, PI, 2.0 * PI].iter().any(|s| (x - s).abs() < 1e-12);

    let mut i0 = vec![0.0; n + 1];
    let mut i1 = vec![0.0; n + 1];
    for j in 0..n {
        let a = nodes[j];
        let b = if j + 1 < n { nodes[j + 1] } else { 2.0 * PI };
        let (m0, m1) = if a < PI - 1e-12 && b > PI + 1e-12 {
            let (l0, l1) = moments(&omega_fn, a, PI, is_sing(a), true, &gl);
            let (r0, r1) = moments(&omega_fn, PI, b, true, is_sing(b), &gl);
            (l0 + r0, l1 + r1)
        } else {
            moments(&omega_fn, a, b, is_sing(a), is_sing(b), &gl)
        };
        i0[j + 1] = i0[j] + m0;
        i1[j + 1] = i1[j] + m1;
    }
    let psi_x0 = -i1[n] / (2.0 * PI);
    let mut psi: Vec<f64> = (0..n).map(|j| i1[j] - nodes[j] * i0[j] + nodes[j] * psi_x0).collect();
    let mut omega: Vec<f64> = nodes.iter().map(|&x| omega_fn(x)).collect();
    let mut u: Vec<f64> = nodes.iter().map(|&x| if x == 0.0 { 0.0 } else { spow(x, 0.5 * (1.0 + alpha)) }).collect();
    if n % 2 == 0 {
        odd_symmetrize(&mut psi);
        odd_symmetrize(&mut omega);
        odd_symmetrize(&mut u);
    }
    Ok((
        build_spline(grid.clone(), omega, Parity::Odd)?,
        build_spline(grid.clone(), u, Parity::Odd)?,
        build_spline(grid, psi, Parity::Odd)?,
    ))
}
