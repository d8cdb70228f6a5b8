//! Singular weight `ρ = 1/(2π(1 - cos x))`, its orthonormal trigonometric
//! bases and the weighted energy of a perturbation.

use std::f64::consts::PI;

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::mesh::GridKind;
use crate::spline::{SplineField, SplineSolver};

/// `o^k(x) = sin kx - sin (k-1)x`, `k ≥ 1`.
pub fn odd_basis(k: usize, x: f64) -> f64 {
    let k = k as f64;
    (k * x).sin() - ((k - 1.0) * x).sin()
}

/// `e^k(x) = cos kx - cos (k+1)x`, `k ≥ 1`.
pub fn even_basis(k: usize, x: f64) -> f64 {
    let k = k as f64;
    (k * x).cos() - ((k + 1.0) * x).cos()
}

pub fn weight(x: f64) -> f64 {
    1.0 / (2.0 * PI * (1.0 - x.cos()))
}

/// `∫₀^{2π} f g ρ dx` from samples on a uniform periodic grid of `2π`. Both
/// functions must vanish at the origin; the origin node then contributes
/// the limit `f'(0) g'(0) / π`.
pub fn weighted_inner(f: &[f64], g: &[f64], f1_0: f64, g1_0: f64) -> Result<f64> {
    let n = f.len();
    if g.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: g.len() });
    }
    let h = 2.0 * PI / n as f64;
    let mut s = f1_0 * g1_0 / PI;
    for j in 1..n {
        s += f[j] * g[j] * weight(j as f64 * h);
    }
    Ok(s * h)
}

/// Same inner product for analytic functions with known origin slopes.
pub fn weighted_inner_fn(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, f1_0: f64, g1_0: f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let fs: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
    let gs: Vec<f64> = (0..n).map(|j| g(j as f64 * h)).collect();
    weighted_inner(&fs, &gs, f1_0, g1_0).expect("equal lengths")
}

const ANCHOR_TOL: f64 = 1e-8;

/// `E = sqrt(((u_x², ρ) + (ω², ρ)) / 2)` from nodal `u_x`, nodal `ω` and the
/// origin slope `ω_x(0)`.
pub fn weighted_energy_nodal(u_x: &[f64], omega: &[f64], omega_x0: f64) -> Result<f64> {
    if u_x[0].abs() > ANCHOR_TOL {
        return Err(Error::SingularIntegrand(format!("u_x(0) = {:e} does not vanish", u_x[0])));
    }
    if omega[0].abs() > ANCHOR_TOL {
        return Err(Error::SingularIntegrand(format!("omega(0) = {:e} does not vanish", omega[0])));
    }
    // u_x is even with u_x(0) = 0, so u_x² ρ → 0 at the origin
    let mut ux = u_x.to_vec();
    ux[0] = 0.0;
    let e2 = 0.5 * (weighted_inner(&ux, &ux, 0.0, 0.0)? + weighted_inner(omega, omega, omega_x0, omega_x0)?);
    Ok(e2.max(0.0).sqrt())
}

/// Weighted energy of odd periodic spline fields on a uniform `2π` grid.
pub fn weighted_energy(u: &SplineField, omega: &SplineField) -> Result<f64> {
    let g = u.grid();
    if g.kind() != GridKind::Periodic || !g.is_uniform() || (g.period() - 2.0 * PI).abs() > 1e-12 {
        return Err(Error::InvalidGrid("weighted energy needs a uniform 2π-periodic grid".into()));
    }
    if omega.grid().len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), got: omega.grid().len() });
    }
    let su = SplineSolver::new(g.clone(), u.parity()).jet(u.values());
    let sw = SplineSolver::new(omega.grid().clone(), omega.parity()).jet(omega.values());
    weighted_energy_nodal(&su.d1, omega.values(), sw.d1[0])
}

/// `b_i = Σ_{k≥i} c_k/(k(k+1)) - c_{i-1}/i` with `c_0 = 0`, for `i = 1..=K+1`.
/// `c[k-1]` holds `c_k`. Exact for rational inputs.
pub fn b_from_c<T>(c: &[T]) -> Vec<T>
where
    T: Clone + Num + FromPrimitive,
{
    let kk = c.len();
    let from = |v: usize| T::from_usize(v).expect("index fits");
    let mut tail = vec![T::zero(); kk + 2];
    for k in (1..=kk).rev() {
        tail[k] = tail[k + 1].clone() + c[k - 1].clone() / from(k * (k + 1));
    }
    (1..=kk + 1)
        .map(|i| {
            let prev = if i >= 2 { c[i - 2].clone() / from(i) } else { T::zero() };
            tail[i].clone() - prev
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_grid;
    use crate::spline::{build_spline, Parity};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn bases_are_orthonormal() {
        let n = 4096;
        for j in 1..=12 {
            for k in 1..=12 {
                let want = if j == k { 1.0 } else { 0.0 };
                let oo = weighted_inner_fn(|x| odd_basis(j, x), |x| odd_basis(k, x), 1.0, 1.0, n);
                let ee = weighted_inner_fn(|x| even_basis(j, x), |x| even_basis(k, x), 0.0, 0.0, n);
                assert!((oo - want).abs() < 1e-8, "o {j} {k}: {oo}");
                assert!((ee - want).abs() < 1e-8, "e {j} {k}: {ee}");
            }
        }
    }

    #[test]
    fn energy_examples() {
        let g = Arc::new(build_grid(GridKind::Periodic, 512, 2.0 * PI, 0.0).unwrap());
        let zero = build_spline(g.clone(), vec![0.0; 512], Parity::Odd).unwrap();
        let o1 = build_spline(g.clone(), g.nodes().iter().map(|&x| odd_basis(1, x)).collect(), Parity::Odd).unwrap();
        let o12 = build_spline(
            g.clone(),
            g.nodes().iter().map(|&x| odd_basis(1, x) + odd_basis(2, x)).collect(),
            Parity::Odd,
        )
        .unwrap();
        assert_eq!(weighted_energy(&zero, &zero).unwrap(), 0.0);
        assert!((weighted_energy(&zero, &o1).unwrap().powi(2) - 0.5).abs() < 1e-6);
        assert!((weighted_energy(&zero, &o12).unwrap().powi(2) - 1.0).abs() < 1e-6);
        // u = sin has u_x(0) = 1
        assert!(matches!(weighted_energy(&o1, &zero), Err(Error::SingularIntegrand(_))));
    }

    #[test]
    fn b_examples() {
        let b = b_from_c(&[1.0]);
        assert_eq!(b, vec![0.5, -0.5]);
        assert_eq!(b_from_c(&[0.0, 0.0]), vec![0.0; 3]);
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let b = b_from_c(&[q(0, 1), q(1, 1)]);
        assert_eq!(b, vec![q(1, 6), q(1, 6), q(-1, 3)]);
    }

    proptest! {
        #[test]
        fn b_sums_to_zero_exactly(c in proptest::collection::vec((-50i64..50, 1i64..20), 1..25)) {
            let c: Vec<BigRational> = c.into_iter().map(|(n, d)| BigRational::new(n.into(), d.into())).collect();
            let s = b_from_c(&c).into_iter().fold(BigRational::from_integer(0.into()), |a, b| a + b);
            prop_assert_eq!(s, BigRational::from_integer(0.into()));
        }
    }
}
