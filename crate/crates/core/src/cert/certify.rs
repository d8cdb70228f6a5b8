//! Certified lower eigenvalue bound for a truncated form.
//!
//! The decomposition `M - sI ≈ V D Vᵀ` is computed in floating point. The
//! stored doubles in `V` and `D` are then read as exact dyadic rationals and
//! `R = M - sI - V D Vᵀ` is formed exactly, using a wide fixed-point
//! accumulator for the sums of triple products. From
//! `M - θI = V D Vᵀ + (s - θ)I + R` and `‖R‖₂ ≤ dim · max|R_ij|`, positive
//! `D` together with `dim · max|R_ij| < s - θ` proves `M - θI` positive
//! definite.

use nalgebra::SymmetricEigen;
use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::form::TruncatedQuadraticForm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub threshold: f64,
    pub shift: f64,
    /// Smallest computed eigenvalue of `M - sI`.
    pub diag_min: f64,
    /// `max|R_ij|`, rounded up to the next double.
    pub residual_entry_max: f64,
    /// `2N · residual_entry_max`, rounded up.
    pub residual_norm_bound: f64,
    /// `‖R‖_F`, rounded up; reported only.
    pub residual_frobenius_bound: f64,
    pub margin: f64,
    pub verdict: String,
}

impl Certificate {
    pub fn is_verified(&self) -> bool {
        self.verdict == "VERIFIED"
    }
}

/// Parses a decimal literal such as `0.011`, `-2`, `1e-3` or `3/7` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let err = || Error::InvalidParameter(format!("not a decimal number: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| err())? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// A double as `±mant · 2^exp` with integer mantissa.
#[derive(Debug, Clone, Copy)]
struct Dyadic {
    neg: bool,
    mant: u64,
    exp: i32,
}

fn dyadic(x: f64) -> Option<Dyadic> {
    if x == 0.0 {
        return None;
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let e = ((bits >> 52) & 0x7ff) as i32;
    let f = bits & ((1u64 << 52) - 1);
    Some(if e == 0 {
        Dyadic { neg, mant: f, exp: -1074 }
    } else {
        Dyadic { neg, mant: f | (1u64 << 52), exp: e - 1075 }
    })
}

fn mul3(a: u64, b: u64, c: u64) -> [u64; 3] {
    let p = a as u128 * b as u128;
    let lo = (p as u64 as u128) * c as u128;
    let hi = (p >> 64) * c as u128;
    let mid = (lo >> 64) + (hi as u64 as u128);
    [lo as u64, mid as u64, ((hi >> 64) + (mid >> 64)) as u64]
}

/// Exact sum of signed dyadic terms as two unsigned fixed-point integers
/// scaled by `2^base`.
struct Accumulator {
    base: i32,
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Accumulator {
    fn new(base: i32, limbs: usize) -> Self {
        Self { base, pos: vec![0; limbs], neg: vec![0; limbs] }
    }

    fn clear(&mut self) {
        self.pos.iter_mut().for_each(|l| *l = 0);
        self.neg.iter_mut().for_each(|l| *l = 0);
    }

    fn add(&mut self, neg: bool, m: [u64; 3], exp: i32) {
        let shift = (exp - self.base) as usize;
        let (limb, bit) = (shift / 64, (shift % 64) as u32);
        let s = if bit == 0 {
            [m[0], m[1], m[2], 0]
        } else {
            [
                m[0] << bit,
                (m[1] << bit) | (m[0] >> (64 - bit)),
                (m[2] << bit) | (m[1] >> (64 - bit)),
                m[2] >> (64 - bit),
            ]
        };
        let acc = if neg { &mut self.neg } else { &mut self.pos };
        let mut carry = false;
        for (k, v) in s.iter().enumerate() {
            let (r1, c1) = acc[limb + k].overflowing_add(*v);
            let (r2, c2) = r1.overflowing_add(carry as u64);
            acc[limb + k] = r2;
            carry = c1 || c2;
        }
        let mut k = limb + 4;
        while carry {
            let (r, c) = acc[k].overflowing_add(1);
            acc[k] = r;
            carry = c;
            k += 1;
        }
    }

    fn value(&self) -> BigRational {
        let to_big = |limbs: &[u64]| {
            let words: Vec<u32> = limbs.iter().flat_map(|l| [*l as u32, (*l >> 32) as u32]).collect();
            BigInt::from_biguint(Sign::Plus, BigUint::new(words))
        };
        let num = to_big(&self.pos) - to_big(&self.neg);
        let two = BigInt::from(2);
        if self.base >= 0 {
            BigRational::from_integer(num * num_traits::pow(two, self.base as usize))
        } else {
            BigRational::new(num, num_traits::pow(two, (-self.base) as usize))
        }
    }
}

/// Smallest double not below `r`.
fn f64_up(r: &BigRational) -> f64 {
    let x = r.to_f64().unwrap_or(f64::INFINITY);
    match BigRational::from_float(x) {
        Some(v) if v < *r => x.next_up(),
        _ => x,
    }
}

fn f64_down(r: &BigRational) -> f64 {
    -f64_up(&-r)
}

/// Runs the three-step certification of `M - θI ≻ 0` with shift `s`.
pub fn certify_positive(form: &TruncatedQuadraticForm, threshold: &BigRational, shift: &BigRational) -> Result<Certificate> {
    if shift <= threshold {
        return Err(Error::InvalidParameter("shift must exceed the threshold".into()));
    }
    let dim = form.dim();
    let s64 = shift.to_f64().unwrap_or(f64::NAN);
    let mut a = form.to_f64();
    for i in 0..dim {
        a[(i, i)] -= s64;
    }
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    let d: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let v = eig.eigenvectors;
    if d.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Decomposition("non-finite eigenpairs".into()));
    }
    let diag_min = d.iter().copied().fold(f64::INFINITY, f64::min);

    // row-major dyadic copies: vd[i][k] = V_ik
    let vd: Vec<Vec<Option<Dyadic>>> = (0..dim).map(|i| (0..dim).map(|k| dyadic(v[(i, k)])).collect()).collect();
    let dd: Vec<Option<Dyadic>> = d.iter().map(|&x| dyadic(x)).collect();
    let exps = |xs: &mut dyn Iterator<Item = i32>| xs.fold((i32::MAX, i32::MIN), |(lo, hi), e| (lo.min(e), hi.max(e)));
    let (v_lo, v_hi) = exps(&mut vd.iter().flatten().flatten().map(|x| x.exp));
    let (d_lo, d_hi) = exps(&mut dd.iter().flatten().map(|x| x.exp));
    let base = 2 * v_lo + d_lo;
    // each product has < 160 bits; allow for carries of dim² terms
    let top = 2 * v_hi + d_hi + 192 + 64;
    let limbs = ((top - base) as usize).div_ceil(64) + 2;

    let shift_neg = -shift.clone();
    let rows: Vec<(BigRational, f64)> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut acc = Accumulator::new(base, limbs);
            let mut row_max = BigRational::zero();
            let mut row_sq = 0.0;
            for j in i..dim {
                acc.clear();
                for k in 0..dim {
                    if let (Some(x), Some(y), Some(z)) = (vd[i][k], dd[k], vd[j][k]) {
                        acc.add(x.neg ^ y.neg ^ z.neg, mul3(x.mant, y.mant, z.mant), x.exp + y.exp + z.exp);
                    }
                }
                let mut r = form.entry(i, j) - acc.value();
                if i == j {
                    r += &shift_neg;
                }
                let r = r.abs();
                let up = f64_up(&r);
                row_sq += if i == j { up * up } else { 2.0 * up * up };
                if r > row_max {
                    row_max = r;
                }
            }
            (row_max, row_sq)
        })
        .collect();
    let entry_max = rows.iter().map(|r| &r.0).max().cloned().unwrap_or_else(BigRational::zero);
    let frob_sq: f64 = rows.iter().map(|r| r.1).sum();
    let norm_bound = BigRational::from_integer(BigInt::from(dim)) * &entry_max;
    let margin = shift - threshold;

    let verdict = if d.iter().any(|&x| x <= 0.0) {
        format!("FAILED(negative D entry: min {diag_min:e})")
    } else if norm_bound >= margin {
        format!("FAILED(residual too large: {:e} >= margin {:e})", f64_up(&norm_bound), f64_down(&margin))
    } else {
        "VERIFIED".to_string()
    };
    Ok(Certificate {
        n: form.n(),
        threshold: threshold.to_f64().unwrap_or(f64::NAN),
        shift: s64,
        diag_min,
        residual_entry_max: f64_up(&entry_max),
        residual_norm_bound: f64_up(&norm_bound),
        residual_frobenius_bound: (frob_sq * (1.0 + 1e-12)).sqrt().next_up(),
        margin: f64_down(&margin),
        verdict,
    })
}

/// Smallest eigenvalue of `M - θI` by a dense floating-point eigensolve.
/// An independent cross-check only; not part of any certificate.
pub fn dense_min_eigenvalue(form: &TruncatedQuadraticForm, threshold: f64) -> f64 {
    let mut a = form.to_f64();
    for i in 0..form.dim() {
        a[(i, i)] -= threshold;
    }
    a.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::form::build_f;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("0.01").unwrap(), q(1, 100));
        assert_eq!(parse_decimal("0.011").unwrap(), q(11, 1000));
        assert_eq!(parse_decimal("5").unwrap(), q(5, 1));
        assert_eq!(parse_decimal("-2.5e-1").unwrap(), q(-1, 4));
        assert_eq!(parse_decimal("3/7").unwrap(), q(3, 7));
        assert_eq!(parse_decimal(".5").unwrap(), q(1, 2));
        assert!(parse_decimal("abc").is_err());
        assert!(parse_decimal("1/0").is_err());
    }

    #[test]
    fn accumulator_is_exact() {
        let xs = [0.1, -0.3, 1e-200, 7.0, -1e-200, 5e-324];
        let mut acc = Accumulator::new(3 * -1074, 60);
        let mut want = BigRational::zero();
        for &x in &xs {
            for &y in &xs {
                let (a, b, c) = (dyadic(x).unwrap(), dyadic(y).unwrap(), dyadic(x).unwrap());
                acc.add(a.neg ^ b.neg ^ c.neg, mul3(a.mant, b.mant, c.mant), a.exp + b.exp + c.exp);
                let fx = BigRational::from_float(x).unwrap();
                want += fx.clone() * BigRational::from_float(y).unwrap() * fx;
            }
        }
        assert_eq!(acc.value(), want);
    }

    #[test]
    fn small_truncation_verifies() {
        let f = build_f(2).unwrap();
        let c = certify_positive(&f, &q(1, 100), &q(11, 1000)).unwrap();
        assert!(c.is_verified(), "{c:?}");
        // smallest eigenvalue of the 4x4 truncation is about 0.02359
        assert!((c.diag_min - (0.023590 - 0.011)).abs() < 1e-5, "{}", c.diag_min);
        assert!(c.residual_norm_bound < 1e-12);
        assert!(dense_min_eigenvalue(&f, 0.01) > 0.0);
    }

    #[test]
    fn negative_identity_fails() {
        let n = 3;
        let dim = 2 * n;
        let e = (0..dim * dim).map(|k| if k / dim == k % dim { q(-1, 1) } else { q(0, 1) }).collect();
        let f = TruncatedQuadraticForm::from_entries(n, e).unwrap();
        let c = certify_positive(&f, &q(1, 100), &q(11, 1000)).unwrap();
        assert!(c.verdict.starts_with("FAILED(negative D entry"), "{}", c.verdict);
    }

    #[test]
    fn large_threshold_fails() {
        let f = build_f(20).unwrap();
        let c = certify_positive(&f, &q(5, 1), &q(5001, 1000)).unwrap();
        assert!(!c.is_verified());
        assert!(dense_min_eigenvalue(&f, 5.0) < 0.0);
        assert!(certify_positive(&f, &q(1, 10), &q(1, 10)).is_err());
    }
}
