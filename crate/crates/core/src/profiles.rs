//! Closed-form and implicit steady profiles used as ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `(1 + c z²)^{-1}`
    Riccati { c: f64 },
    /// `(1 + z²/8)^{-1}`
    Heat,
    /// `(1 + c y^{2m})^{-1}`
    HighOrder { m: u32, c: f64 },
    /// `(u, ω, ψ) = (sin x, sin x, sin x)`
    HouliSmooth,
    /// Odd root of `U + C sgn(U)|U|^{1+1/λ_B} = -y`.
    Burgers { lambda_b: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileValue {
    Scalar(f64),
    Triple([f64; 3]),
}

impl ProfileKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            ProfileKind::Riccati { c } if !(c > 0.0) => bad(format!("c = {c} must be positive")),
            ProfileKind::HighOrder { m, c } if m < 2 || !(c > 0.0) => {
                bad(format!("need m > 1 and c > 0, got m = {m}, c = {c}"))
            }
            ProfileKind::Burgers { lambda_b, c } if !(lambda_b > 0.0) || !(c > 0.0) => {
                bad(format!("need λ_B > 0 and C > 0, got {lambda_b}, {c}"))
            }
            _ => Ok(()),
        }
    }
}

fn rational_jet(c: f64, p: i32, y: f64) -> [f64; 3] {
    // U = 1/q with q = 1 + c y^p
    let q = 1.0 + c * y.powi(p);
    let q1 = if p >= 1 { c * p as f64 * y.powi(p - 1) } else { 0.0 };
    let q2 = if p >= 2 { c * (p * (p - 1)) as f64 * y.powi(p - 2) } else { 0.0 };
    [1.0 / q, -q1 / (q * q), -q2 / (q * q) + 2.0 * q1 * q1 / (q * q * q)]
}

/// Value and first two derivatives of a scalar profile.
pub fn profile_jet(kind: ProfileKind, x: f64) -> Result<[f64; 3]> {
    kind.validate()?;
    match kind {
        ProfileKind::Riccati { c } => Ok(rational_jet(c, 2, x)),
        ProfileKind::Heat => Ok(rational_jet(0.125, 2, x)),
        ProfileKind::HighOrder { m, c } => Ok(rational_jet(c, 2 * m as i32, x)),
        ProfileKind::Burgers { lambda_b, c } => {
            let u = burgers_profile(x, lambda_b, c)?;
            let p = 1.0 + 1.0 / lambda_b;
            let au = u.abs();
            let d = 1.0 + c * p * au.powf(1.0 / lambda_b);
            let uy = -1.0 / d;
            let dd = if au == 0.0 { 0.0 } else { c * p / lambda_b * au.powf(1.0 / lambda_b - 1.0) * u.signum() * uy };
            Ok([u, uy, dd / (d * d)])
        }
        ProfileKind::HouliSmooth => Ok([x.sin(), x.cos(), -x.sin()]),
    }
}

pub fn analytic_profile(kind: ProfileKind, x: f64) -> Result<ProfileValue> {
    match kind {
        ProfileKind::HouliSmooth => {
            kind.validate()?;
            let s = x.sin();
            Ok(ProfileValue::Triple([s, s, s]))
        }
        _ => Ok(ProfileValue::Scalar(profile_jet(kind, x)?[0])),
    }
}

/// Residual of the steady equation each profile solves.
pub fn profile_residual(kind: ProfileKind, x: f64) -> Result<f64> {
    let [u, uy, _] = profile_jet(kind, x)?;
    Ok(match kind {
        ProfileKind::Riccati { .. } | ProfileKind::Heat => -u - 0.5 * x * uy + u * u,
        ProfileKind::HighOrder { m, .. } => -u - x * uy / (2.0 * m as f64) + u * u,
        ProfileKind::Burgers { lambda_b, .. } => -lambda_b * u + ((1.0 + lambda_b) * x + u) * uy,
        ProfileKind::HouliSmooth => {
            // inviscid a = 1 flow with c_u = 0; ψ = u = ω = sin
            let (s, c) = (x.sin(), x.cos());
            let ru = -2.0 * s * c + 2.0 * s * c;
            let rw = -2.0 * s * c + 2.0 * s * c;
            ru.abs().max(rw.abs())
        }
    })
}

const MAX_ITERS: usize = 200;

/// Root of `U + C sgn(U)|U|^{1+1/λ_B} = -y` by Newton steps safeguarded with
/// bisection on `[-(1+|y|), 1+|y|]`.
pub fn burgers_profile(y: f64, lambda_b: f64, c: f64) -> Result<f64> {
    ProfileKind::Burgers { lambda_b, c }.validate()?;
    if !y.is_finite() {
        return Err(Error::InvalidParameter(format!("y = {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y < 0.0 {
        return Ok(-burgers_profile(-y, lambda_b, c)?);
    }
    let p = 1.0 + 1.0 / lambda_b;
    let g = |u: f64| u + c * u.signum() * u.abs().powf(p) + y;
    let dg = |u: f64| 1.0 + c * p * u.abs().powf(p - 1.0);
    // y > 0 puts the root in [-(1+y), 0)
    let (mut lo, mut hi) = (-(1.0 + y), 0.0);
    let mut u = -y / (1.0 + c);
    for _ in 0..MAX_ITERS {
        let gu = g(u);
        if gu == 0.0 {
            return Ok(u);
        }
        if gu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let mut next = u - gu / dg(u);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs() || hi - lo <= 2.0 * f64::EPSILON * lo.abs() {
            return Ok(next);
        }
        u = next;
    }
    Err(Error::NoConvergence(y))
}

/// `-λ_B U + ((1+λ_B) y + U) U_y` with the implicit-derivative slope.
pub fn burgers_residual(lambda_b: f64, c: f64, y: f64) -> Result<f64> {
    profile_residual(ProfileKind::Burgers { lambda_b, c }, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn explicit_values() {
        assert_eq!(analytic_profile(ProfileKind::Heat, 0.0).unwrap(), ProfileValue::Scalar(1.0));
        assert_eq!(profile_residual(ProfileKind::Heat, 0.0).unwrap(), 0.0);
        let v = analytic_profile(ProfileKind::HighOrder { m: 3, c: 1.0 }, 1.0).unwrap();
        assert_eq!(v, ProfileValue::Scalar(0.5));
        assert_eq!(
            analytic_profile(ProfileKind::HouliSmooth, std::f64::consts::FRAC_PI_2).unwrap(),
            ProfileValue::Triple([1.0, 1.0, 1.0])
        );
        assert!(ProfileKind::HighOrder { m: 1, c: 1.0 }.validate().is_err());
        assert!(ProfileKind::Riccati { c: 0.0 }.validate().is_err());
        assert!(burgers_profile(1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn explicit_residuals_vanish() {
        let kinds = [
            ProfileKind::Heat,
            ProfileKind::Riccati { c: 0.1 },
            ProfileKind::Riccati { c: 10.0 },
            ProfileKind::HighOrder { m: 2, c: 1.0 },
            ProfileKind::HighOrder { m: 5, c: 0.3 },
            ProfileKind::HouliSmooth,
        ];
        for k in kinds {
            for i in 0..256 {
                let x = 20.0 * i as f64 / 255.0;
                assert!(profile_residual(k, x).unwrap().abs() <= 1e-12, "{k:?} at {x}");
            }
        }
    }

    #[test]
    fn burgers_hand_root() {
        let u = burgers_profile(2.0, 0.5, 1.0).unwrap();
        assert!((u + 1.0).abs() < 1e-15);
        assert_eq!(burgers_profile(0.0, 0.5, 1.0).unwrap(), 0.0);
        let [_, uy, _] = profile_jet(ProfileKind::Burgers { lambda_b: 0.5, c: 1.0 }, 0.0).unwrap();
        assert_eq!(uy, -1.0);
    }

    #[test]
    fn burgers_second_derivative_matches_differences() {
        let k = ProfileKind::Burgers { lambda_b: 0.4, c: 1.0 };
        let h = 1e-4;
        for y in [0.3, 1.0, 4.0] {
            let [_, u1a, _] = profile_jet(k, y + h).unwrap();
            let [_, u1b, _] = profile_jet(k, y - h).unwrap();
            let [_, _, u2] = profile_jet(k, y).unwrap();
            assert!(((u1a - u1b) / (2.0 * h) - u2).abs() < 1e-7);
        }
    }

    #[test]
    fn burgers_far_field_ratio_settles() {
        for lb in [0.5, 0.4] {
            let e = lb / (1.0 + lb);
            let ratios: Vec<f64> = (2..=6)
                .map(|k| {
                    let y = 10f64.powi(k);
                    burgers_profile(y, lb, 1.0).unwrap().abs() / y.powf(e)
                })
                .collect();
            for w in ratios.windows(2) {
                assert!((w[1] / w[0] - 1.0).abs() < 0.05, "{ratios:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn burgers_is_odd_and_exact(y in -50.0f64..50.0, lb in 0.2f64..2.0, c in 0.1f64..5.0) {
            let u = burgers_profile(y, lb, c).unwrap();
            prop_assert_eq!(burgers_profile(-y, lb, c).unwrap(), -u);
            prop_assert!(burgers_residual(lb, c, y).unwrap().abs() <= 1e-10);
        }
    }
}
