//! Weak-advection model in rescaled variables:
//! `u_τ = -2aψu_x + 2uψ_x + c_u u + νC_u u_xx`,
//! `ω_τ = -2aψω_x + 2uu_x + c_u ω + νC_u ω_xx`, with `-ψ_xx = ω`.

use super::biot_savart::{odd_symmetrize, BiotSavart, Stream};
use super::{Family, ModelSpec};
use crate::error::{Error, Result};
use crate::spline::{Jet, SplineField, SplineSolver};

const GUARD: f64 = 1e-12;
const STALE_TOL: f64 = 1e-8;

fn check_stream(omega: &[f64], stream: &Stream) -> Result<()> {
    let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gap = omega
        .iter()
        .zip(&stream.neg_psi_xx)
        .fold(0.0f64, |m, (w, p)| m.max((w - p).abs()));
    if gap > STALE_TOL * scale {
        return Err(Error::StaleStream(gap));
    }
    Ok(())
}

fn houli_only(spec: &ModelSpec) -> Result<()> {
    if spec.family != Family::Houli {
        return Err(Error::InvalidParameter(format!("{:?} is not the Hou–Li family", spec.family)));
    }
    Ok(())
}

/// Both right-hand sides at the nodes. `big_cu` is the current amplitude
/// factor `C_u` multiplying the viscosity.
pub fn houli_rhs(
    spec: &ModelSpec,
    u: &Jet,
    omega: &Jet,
    stream: &Stream,
    c_u: f64,
    big_cu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    houli_only(spec)?;
    let n = u.len();
    if omega.len() != n || stream.psi.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: omega.len().min(stream.psi.len()) });
    }
    check_stream(&omega.value, stream)?;
    let visc = spec.nu * big_cu;
    let a2 = 2.0 * spec.a;
    let mut ru = Vec::with_capacity(n);
    let mut rw = Vec::with_capacity(n);
    for i in 0..n {
        let (psi, psi_x) = (stream.psi[i], stream.psi_x[i]);
        let uv = u.value[i];
        ru.push(-a2 * psi * u.d1[i] + 2.0 * uv * psi_x + c_u * uv + visc * u.d2[i]);
        rw.push(-a2 * psi * omega.d1[i] + 2.0 * uv * u.d1[i] + c_u * omega.value[i] + visc * omega.d2[i]);
    }
    Ok((ru, rw))
}

/// Right-hand sides of spline fields on a uniform periodic grid, projected
/// back onto odd functions.
pub fn houli_rhs_fields(
    spec: &ModelSpec,
    u: &SplineField,
    omega: &SplineField,
    c_u: f64,
    big_cu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let solver = SplineSolver::new(u.grid().clone(), u.parity());
    let stream = BiotSavart::new(omega.grid().clone())?.solve(omega.values())?;
    let (mut ru, mut rw) = houli_rhs(spec, &solver.jet(u.values()), &solver.jet(omega.values()), &stream, c_u, big_cu)?;
    odd_symmetrize(&mut ru);
    odd_symmetrize(&mut rw);
    Ok((ru, rw))
}

/// Closed-form normalization. Smooth profiles:
/// `c_u = 2(a-1)ψ_x(0) - νC_u u_xxx(0)/u_x(0)`; Hölder profiles:
/// `c_u = (α-1)ψ_x(0)`.
pub fn houli_normalization(spec: &ModelSpec, psi_x0: f64, u_x0: f64, u_xxx0: f64, big_cu: f64) -> Result<f64> {
    houli_only(spec)?;
    if spec.is_holder() {
        return Ok((spec.alpha - 1.0) * psi_x0);
    }
    if u_x0.abs() < GUARD {
        return Err(Error::DegenerateAnchor(format!("|u_x(0)| = {:e}", u_x0.abs())));
    }
    let mut c = 2.0 * (spec.a - 1.0) * psi_x0;
    if spec.nu != 0.0 {
        c -= spec.nu * big_cu * u_xxx0 / u_x0;
    }
    Ok(c)
}

pub fn houli_normalization_fields(spec: &ModelSpec, u: &SplineField, omega: &SplineField, big_cu: f64) -> Result<f64> {
    let stream = BiotSavart::new(omega.grid().clone())?.solve(omega.values())?;
    let (ux, uxxx) = if spec.is_holder() {
        (0.0, 0.0)
    } else {
        (u.eval_derivative(0.0, 1)?, u.eval_derivative(0.0, 3)?)
    };
    houli_normalization(spec, stream.psi_x0, ux, uxxx, big_cu)
}

/// Rate holding the discrete anchor `u_x(0)` (the spline slope at the
/// origin node) fixed exactly under the discrete right-hand side. Hölder
/// profiles fall back to the closed form.
pub fn houli_rate_consistent(
    spec: &ModelSpec,
    solver: &SplineSolver,
    u: &Jet,
    stream: &Stream,
    big_cu: f64,
) -> Result<f64> {
    houli_only(spec)?;
    if spec.is_holder() {
        return houli_normalization(spec, stream.psi_x0, 0.0, 0.0, big_cu);
    }
    let slope = |v: &[f64]| solver.jet(v).d1[0];
    let anchor = u.d1[0];
    if anchor.abs() < GUARD {
        return Err(Error::DegenerateAnchor(format!("|u_x(0)| = {:e}", anchor.abs())));
    }
    let visc = spec.nu * big_cu;
    let rest: Vec<f64> = (0..u.len())
        .map(|i| -2.0 * spec.a * stream.psi[i] * u.d1[i] + 2.0 * u.value[i] * stream.psi_x[i] + visc * u.d2[i])
        .collect();
    Ok(-slope(&rest) / anchor)
}
