//! The truncated quadratic form `F_N(a, c)` over the weighted coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `a_k`, `c_k` for `k ≥ 1`; entry `k` lives at index `k - 1`
/// and everything past the stored length is zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedCoefficients {
    a: Vec<f64>,
    c: Vec<f64>,
}

impl WeightedCoefficients {
    pub fn new(a: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if let Some(i) = a.iter().chain(&c).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { a, c })
    }

    /// Largest index carrying storage (the declared support bound).
    pub fn support(&self) -> usize {
        self.a.len().max(self.c.len())
    }

    pub fn a(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.a.get(k - 1).copied().unwrap_or(0.0) }
    }

    pub fn c(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.c.get(k - 1).copied().unwrap_or(0.0) }
    }

    /// Drops every index above `n`.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            a: self.a.iter().take(n).copied().collect(),
            c: self.c.iter().take(n).copied().collect(),
        }
    }

    /// `(a_1..a_n, c_1..c_n)`.
    pub fn to_vector(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.a(k)).chain((1..=n).map(|k| self.c(k))).collect()
    }

    fn sq_sum(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|k| self.a(k).powi(2) + self.c(k).powi(2)).sum()
    }
}

/// Symmetric `2N × 2N` matrix of the truncated form, index order
/// `(a_1..a_N, c_1..c_N)`, held as exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedQuadraticForm {
    n: usize,
    entries: Vec<BigRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    A(i64),
    C(i64),
}

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn base() -> BigRational {
    q(21, 25)
}

fn coefficient(x: Var, y: Var) -> BigRational {
    use Var::*;
    match (x, y) {
        (A(k), A(j)) if k == j => {
            let prev = if k > 1 { q(1, (k - 1) * (k - 1)) } else { BigRational::zero() };
            base() + q(1, k * k) - prev
        }
        (C(k), C(j)) if k == j => base() + q(1, k * (k + 1)),
        (C(_), C(_)) => BigRational::zero(),
        (A(k), A(j)) => {
            let (k, j) = (k.min(j), k.max(j));
            if j == k + 1 {
                q(1, j * j)
            } else {
                q(1, j * j) - q(1, (j - 1) * (j - 1))
            }
        }
        (C(_), A(_)) => coefficient(y, x),
        (A(k), C(j)) => {
            if k == j {
                q(1 + 2 * k - k * k, 2 * k * k * (k + 1))
            } else if k == j + 1 {
                q(j * j - j - 1, 2 * j * j * (j + 1) * (j + 1))
            } else if k == j + 2 {
                q(-(j + 2), 2 * (j + 1) * (j + 1))
            } else if j > k {
                q(1, j * (j + 1))
            } else {
                BigRational::zero()
            }
        }
    }
}

/// Assembles the matrix of `F_N`. Entries are exact; `0.84` is `21/25`.
pub fn build_f(n: usize) -> Result<TruncatedQuadraticForm> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation order must be at least 2, got {n}")));
    }
    let dim = 2 * n;
    let var = |i: usize| if i < n { Var::A(i as i64 + 1) } else { Var::C((i - n) as i64 + 1) };
    let entries = (0..dim * dim)
        .into_par_iter()
        .map(|idx| coefficient(var(idx / dim), var(idx % dim)))
        .collect();
    Ok(TruncatedQuadraticForm { n, entries })
}

impl TruncatedQuadraticForm {
    /// Wraps an explicit symmetric matrix of dimension `2n` (row-major).
    pub fn from_entries(n: usize, entries: Vec<BigRational>) -> Result<Self> {
        let dim = 2 * n;
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch { expected: dim * dim, got: entries.len() });
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim() + j]
    }

    /// Nearest-double copy of the matrix.
    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        nalgebra::DMatrix::from_fn(d, d, |i, j| self.entry(i, j).to_f64().unwrap_or(f64::NAN))
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let m = self.to_f64();
        let v = nalgebra::DVector::from_column_slice(x);
        v.dot(&(&m * &v))
    }
}

/// Evaluates `F_N(a, c)` term by term from the series, without the matrix.
pub fn eval_f_direct(coeffs: &WeightedCoefficients, n: usize) -> Result<f64> {
    if coeffs.support() > n {
        return Err(Error::InvalidParameter(format!(
            "support {} exceeds truncation {n}",
            coeffs.support()
        )));
    }
    let a = |k: usize| if k <= n { coeffs.a(k) } else { 0.0 };
    let c = |k: usize| if k <= n { coeffs.c(k) } else { 0.0 };
    let kf = |k: usize| k as f64;

    // suffix sums: sa[j] = Σ_{i≥j} (1/i² - 1/(i-1)²) a_i, sc[j] = Σ_{i≥j} c_i/(i(i+1))
    let mut sa = vec![0.0; n + 3];
    let mut sc = vec![0.0; n + 3];
    for j in (2..=n).rev() {
        sa[j] = sa[j + 1] + (1.0 / (kf(j) * kf(j)) - 1.0 / (kf(j - 1) * kf(j - 1))) * a(j);
    }
    for j in (1..=n).rev() {
        sc[j] = sc[j + 1] + c(j) / (kf(j) * kf(j + 1));
    }

    let mut diag = 0.0;
    let mut cross = 0.0;
    for k in 1..=n {
        let x = kf(k);
        let prev = if k > 1 { 1.0 / ((x - 1.0) * (x - 1.0)) } else { 0.0 };
        diag += (0.84 + 1.0 / (x * x) - prev) * a(k) * a(k);
        diag += (0.84 + 1.0 / (x * (x + 1.0))) * c(k) * c(k);

        cross += a(k) * a(k + 1) / ((x + 1.0) * (x + 1.0));
        cross += a(k) * sa[k + 2];
        cross += (1.0 + 2.0 * x - x * x) / (2.0 * x * x * (x + 1.0)) * a(k) * c(k);
        cross += (x * x - x - 1.0) / (2.0 * x * x * (x + 1.0) * (x + 1.0)) * a(k + 1) * c(k);
        cross -= (x + 2.0) / (2.0 * (x + 1.0) * (x + 1.0)) * a(k + 2) * c(k);
        cross += a(k) * sc[k + 1];
    }
    Ok(diag + 2.0 * cross)
}

/// Result of the tail comparison `F - F_N ≥ -(2/N)Σ_{k≤N} + (0.84 - 3/N)Σ_{k>N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn tail_remainder_check(n: usize, coeffs: &WeightedCoefficients) -> Result<TailCheck> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation order must be at least 2, got {n}")));
    }
    let k = coeffs.support().max(n);
    let full = eval_f_direct(coeffs, k)?;
    let head = eval_f_direct(&coeffs.truncated(n), n)?;
    let lhs = full - head;
    let low = coeffs.sq_sum(1, n);
    let high = coeffs.sq_sum(n + 1, k);
    let nf = n as f64;
    let rhs = -(2.0 / nf) * low + (0.84 - 3.0 / nf) * high;
    let scale = 1.0 + low + high + full.abs();
    Ok(TailCheck { lhs, rhs, holds: lhs >= rhs - 1e-12 * scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_entries() {
        assert!(build_f(1).is_err());
        let f = build_f(2).unwrap();
        // a1, a2, c1, c2
        assert_eq!(*f.entry(0, 0), q(46, 25));
        assert_eq!(*f.entry(2, 2), q(67, 50));
        assert_eq!(*f.entry(0, 2), q(1, 2));
        assert_eq!(*f.entry(2, 0), q(1, 2));
        // a2 diag: 0.84 + 1/4 - 1
        assert_eq!(*f.entry(1, 1), q(21, 25) + q(1, 4) - q(1, 1));
        // a1-a2 neighbour, a2-c1, a1-c2
        assert_eq!(*f.entry(0, 1), q(1, 4));
        assert_eq!(*f.entry(1, 2), q(-1, 8));
        assert_eq!(*f.entry(0, 3), q(1, 6));
        assert_eq!(*f.entry(2, 3), BigRational::zero());
    }

    #[test]
    fn large_form_is_symmetric_and_bounded() {
        let f = build_f(60).unwrap();
        let d = f.dim();
        let one = q(1, 1);
        for i in 0..d {
            for j in 0..d {
                assert_eq!(f.entry(i, j), f.entry(j, i));
                if i != j {
                    assert!(num_traits::Signed::abs(f.entry(i, j)) <= one);
                }
            }
        }
        assert!(TruncatedQuadraticForm::from_entries(60, f.entries.clone()).is_ok());
        let mut bad = f.entries.clone();
        bad[1] = q(7, 1);
        assert!(TruncatedQuadraticForm::from_entries(60, bad).is_err());
    }

    #[test]
    fn direct_series_examples() {
        let e = |a: Vec<f64>, c: Vec<f64>| eval_f_direct(&WeightedCoefficients::new(a, c).unwrap(), 2).unwrap();
        assert!((e(vec![1.0], vec![]) - 1.84).abs() < 1e-14);
        assert!((e(vec![], vec![1.0]) - 1.34).abs() < 1e-14);
        assert!((e(vec![1.0], vec![1.0]) - 4.18).abs() < 1e-14);
        assert!(eval_f_direct(&WeightedCoefficients::new(vec![0.0; 3], vec![]).unwrap(), 2).is_err());
    }

    #[test]
    fn tail_examples() {
        let n = 200;
        let inner = WeightedCoefficients::new(vec![0.3; 50], vec![-0.1; 200]).unwrap();
        let t = tail_remainder_check(n, &inner).unwrap();
        assert_eq!(t.lhs, 0.0);
        assert!(t.rhs <= 0.0 && t.holds);
        let mut a = vec![0.0; n + 1];
        a[n] = 1.0;
        let t = tail_remainder_check(n, &WeightedCoefficients::new(a, vec![]).unwrap()).unwrap();
        assert!((t.lhs - 0.84).abs() < 1e-4 && (t.rhs - (0.84 - 3.0 / 200.0)).abs() < 1e-14);
        assert!(t.holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matrix_matches_series(a in proptest::collection::vec(-2.0f64..2.0, 0..12),
                                 c in proptest::collection::vec(-2.0f64..2.0, 0..12)) {
            let n = 12;
            let w = WeightedCoefficients::new(a, c).unwrap();
            let direct = eval_f_direct(&w, n).unwrap();
            let quad = build_f(n).unwrap().quadratic(&w.to_vector(n));
            prop_assert!((direct - quad).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }
}
