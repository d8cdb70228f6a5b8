//! Semilinear heat equation in rescaled variables,
//! `u_τ = c_u u - Σ c_l_i x_i u_i + u² + Σ λ_i u_ii`, in one or two dimensions.

use crate::error::{Error, Result};
use crate::spline::{origin_derivatives, AxisJet, SplineField, SplineSolver, TensorSplines};

const GUARD: f64 = 1e-12;

/// Point values at the origin that close the heat normalization:
/// `u0 = u(0)`, `u2[i] = ∂_i² u(0)`, `u4[i][j] = ∂_i² ∂_j² u(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatAnchors {
    pub u0: f64,
    pub u2: Vec<f64>,
    pub u4: Vec<Vec<f64>>,
}

/// Reads the anchors of a sampled field. Second derivatives come from the
/// splines through the origin, fourth derivatives from the origin fit.
pub fn heat_anchors(ts: &TensorSplines, values: &[f64]) -> Result<HeatAnchors> {
    if values.len() != ts.len() {
        return Err(Error::LengthMismatch { expected: ts.len(), got: values.len() });
    }
    let d = ts.dim();
    let u2: Vec<f64> = (0..d).map(|i| ts.origin_d2(values, i)).collect();
    let mut u4 = vec![vec![0.0; d]; d];
    for (i, row) in u4.iter_mut().enumerate() {
        let line = ts.origin_line(values, i);
        row[i] = origin_derivatives(ts.axis(i).grid(), &line, ts.axis(i).parity())[4];
    }
    if d == 2 {
        let (nx, ny) = (ts.shape()[0], ts.shape()[1]);
        let mut col = vec![0.0; nx];
        let g: Vec<f64> = (0..ny)
            .map(|j| {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = values[i * ny + j];
                }
                ts.axis(0).second_derivatives(&col)[0]
            })
            .collect();
        let mixed = origin_derivatives(ts.axis(1).grid(), &g, ts.axis(1).parity())[2];
        u4[0][1] = mixed;
        u4[1][0] = mixed;
    }
    Ok(HeatAnchors { u0: values[0], u2, u4 })
}

/// Closed-form normalization: `c_u = -u0 - Σ λ_j u_jj / u0` and
/// `c_l_i = c_u/2 + u0 + Σ_j λ_j u_iijj / (2 u_ii)`.
pub fn heat_normalization(anchors: &HeatAnchors, lambda: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = anchors.u2.len();
    if lambda.len() != d {
        return Err(Error::DimensionMismatch(format!("{} lambdas for {} axes", lambda.len(), d)));
    }
    if anchors.u0.abs() < GUARD {
        return Err(Error::DegenerateAnchor(format!("|u(0)| = {:e}", anchors.u0.abs())));
    }
    if let Some(v) = anchors.u2.iter().find(|v| v.abs() < GUARD) {
        return Err(Error::DegenerateAnchor(format!("|u_ii(0)| = {:e}", v.abs())));
    }
    let u0 = anchors.u0;
    let c_u = -u0 - (0..d).map(|j| lambda[j] * anchors.u2[j]).sum::<f64>() / u0;
    let c_l = (0..d)
        .map(|i| {
            let s: f64 = (0..d).map(|j| lambda[j] * anchors.u4[i][j]).sum();
            0.5 * c_u + u0 + s / (2.0 * anchors.u2[i])
        })
        .collect();
    Ok((c_u, c_l))
}

/// Rates that hold the discrete anchors fixed exactly: the nodal value at
/// the origin and each origin spline second derivative have zero time
/// derivative under the discrete right-hand side. These agree with
/// [`heat_normalization`] up to the discretization error of the anchors.
pub fn heat_rates_consistent(ts: &TensorSplines, jet: &AxisJet, lambda: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = ts.dim();
    if lambda.len() != d || jet.d1.len() != d {
        return Err(Error::DimensionMismatch(format!("{} lambdas for {} axes", lambda.len(), d)));
    }
    let u = &jet.value;
    let u0 = u[0];
    if u0.abs() < GUARD {
        return Err(Error::DegenerateAnchor(format!("|u(0)| = {:e}", u0.abs())));
    }
    let c_u = -u0 - (0..d).map(|j| lambda[j] * jet.d2[j][0]).sum::<f64>() / u0;
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    let mut c_l = Vec::with_capacity(d);
    for i in 0..d {
        let anchor = ts.origin_d2(u, i);
        if anchor.abs() < GUARD {
            return Err(Error::DegenerateAnchor(format!("|u_ii(0)| = {:e}", anchor.abs())));
        }
        let adv: Vec<f64> = (0..u.len()).map(|k| ts.coordinate(k, i) * jet.d1[i][k]).collect();
        let den = ts.origin_d2(&adv, i);
        if den.abs() < GUARD {
            return Err(Error::DegenerateAnchor(format!("advection term at origin = {:e}", den)));
        }
        let mut num = c_u * anchor + ts.origin_d2(&sq, i);
        for (j, lam) in lambda.iter().enumerate() {
            if *lam != 0.0 {
                num += lam * ts.origin_d2(&jet.d2[j], i);
            }
        }
        c_l.push(num / den);
    }
    Ok((c_u, c_l))
}

pub fn heat_rhs(ts: &TensorSplines, jet: &AxisJet, c_u: f64, c_l: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    let d = ts.dim();
    if c_l.len() != d || lambda.len() != d || jet.d1.len() != d || jet.d2.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "grid has {d} axes, got {} c_l and {} lambda",
            c_l.len(),
            lambda.len()
        )));
    }
    if jet.value.len() != ts.len() {
        return Err(Error::LengthMismatch { expected: ts.len(), got: jet.value.len() });
    }
    Ok((0..jet.value.len())
        .map(|k| {
            let u = jet.value[k];
            let mut r = c_u * u + u * u;
            for i in 0..d {
                r += -c_l[i] * ts.coordinate(k, i) * jet.d1[i][k] + lambda[i] * jet.d2[i][k];
            }
            r
        })
        .collect())
}

/// One-dimensional right-hand side of a spline field.
pub fn heat_rhs_field(u: &SplineField, c_u: f64, c_l: f64, lambda: f64) -> Result<Vec<f64>> {
    let ts = TensorSplines::new(vec![u.grid().clone()], u.parity())?;
    let jet = SplineSolver::new(u.grid().clone(), u.parity()).jet(u.values()).into();
    heat_rhs(&ts, &jet, c_u, &[c_l], &[lambda])
}
