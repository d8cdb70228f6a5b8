//! Rescaled right-hand sides and normalization rules.
//!
//! Right-hand sides are pure algebra on [`Jet`]s (node values plus first and
//! second derivatives), so the same code runs on spline-derived jets inside
//! the time loop and on exact jets of analytic profiles. Convenience wrappers
//! accepting a [`SplineField`] derive the jet from the spline.

mod biot_savart;
mod heat;
mod houli;

pub use biot_savart::{alpha_steady_state, biot_savart, odd_symmetrize, BiotSavart, Stream};
pub use heat::{
    heat_anchors, heat_normalization, heat_rates_consistent, heat_rhs, heat_rhs_field, HeatAnchors,
};
pub use houli::{
    houli_normalization, houli_normalization_fields, houli_rate_consistent, houli_rhs, houli_rhs_fields,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{Jet, SplineField, SplineSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Riccati,
    Heat,
    Houli,
}

/// Which rescaled PDE is evolved. `a`, `nu` and `alpha` only matter for the
/// Hou–Li family; `dim` only for heat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub dim: usize,
    pub a: f64,
    pub nu: f64,
    pub alpha: f64,
}

/// Lower end (exclusive) of the admissible Hölder exponents.
pub const ALPHA_MIN: f64 = 7.0 / 8.0;

impl ModelSpec {
    pub fn riccati() -> Self {
        Self { family: Family::Riccati, dim: 1, a: 1.0, nu: 0.0, alpha: 1.0 }
    }

    pub fn heat(dim: usize) -> Self {
        Self { family: Family::Heat, dim, a: 1.0, nu: 0.0, alpha: 1.0 }
    }

    pub fn houli(a: f64, nu: f64, alpha: f64) -> Self {
        Self { family: Family::Houli, dim: 1, a, nu, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) || (self.family != Family::Heat && self.dim != 1) {
            return Err(Error::InvalidParameter(format!("dim {} not supported for {:?}", self.dim, self.family)));
        }
        if self.family == Family::Houli {
            if !(self.a > 0.0 && self.a <= 1.0) {
                return Err(Error::InvalidParameter(format!("a = {} outside (0, 1]", self.a)));
            }
            if !(self.nu >= 0.0) || !self.nu.is_finite() {
                return Err(Error::InvalidParameter(format!("nu = {} must be non-negative", self.nu)));
            }
            if !(self.alpha > ALPHA_MIN && self.alpha <= 1.0) {
                return Err(Error::InvalidParameter(format!("alpha = {} outside (7/8, 1]", self.alpha)));
            }
        }
        Ok(())
    }

    pub fn is_holder(&self) -> bool {
        self.family == Family::Houli && self.alpha < 1.0
    }
}

/// Fixed scaling rates of the rescaled Riccati flow.
pub const RICCATI_RATES: (f64, f64) = (-1.0, 0.5);

/// `-u - z u_z / 2 + u²` at each node.
pub fn riccati_rhs(z: &[f64], u: &Jet) -> Result<Vec<f64>> {
    if z.len() != u.len() {
        return Err(Error::LengthMismatch { expected: z.len(), got: u.len() });
    }
    Ok(z.iter()
        .enumerate()
        .map(|(i, &z)| -u.value[i] - 0.5 * z * u.d1[i] + u.value[i] * u.value[i])
        .collect())
}

pub fn riccati_rhs_field(u: &SplineField) -> Result<Vec<f64>> {
    let jet = SplineSolver::new(u.grid().clone(), u.parity()).jet(u.values());
    riccati_rhs(u.grid().nodes(), &jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridKind};
    use std::sync::Arc;

    #[test]
    fn riccati_family_is_steady() {
        let g = build_grid(GridKind::HalfLineEven, 512, 50.0, 3.0).unwrap();
        for c in [0.1, 0.3, 1.0, 10.0] {
            let jet = Jet::from_fn(g.nodes(), |z| {
                let q = 1.0 + c * z * z;
                [1.0 / q, -2.0 * c * z / (q * q), (6.0 * c * c * z * z - 2.0 * c) / (q * q * q)]
            });
            let r = riccati_rhs(g.nodes(), &jet).unwrap();
            assert!(r.iter().all(|v| v.abs() <= 1e-12), "c = {c}");
        }
    }

    #[test]
    fn riccati_constant_fields() {
        let g = Arc::new(build_grid(GridKind::HalfLineEven, 16, 2.0, 0.0).unwrap());
        for v in [0.0, 1.0] {
            let f = crate::spline::build_spline(g.clone(), vec![v; 16], crate::spline::Parity::Even).unwrap();
            assert!(riccati_rhs_field(&f).unwrap().iter().all(|r| r.abs() < 1e-14));
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::houli(0.95, 0.0, 1.0).validate().is_ok());
        assert!(ModelSpec::houli(1.2, 0.0, 1.0).validate().is_err());
        assert!(ModelSpec::houli(0.9, 0.0, 0.8).validate().is_err());
        assert!(ModelSpec::houli(0.9, -1.0, 1.0).validate().is_err());
        assert!(ModelSpec::heat(3).validate().is_err());
        assert!(ModelSpec::heat(2).validate().is_ok());
    }
}
