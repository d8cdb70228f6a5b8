//! Weighted-norm stability tools: orthonormal bases, the coefficient map,
//! the truncated quadratic form and its certified positivity.

mod certify;
mod form;
mod weighted;

pub use certify::{certify_positive, dense_min_eigenvalue, parse_decimal, Certificate};
pub use form::{build_f, eval_f_direct, tail_remainder_check, TailCheck, TruncatedQuadraticForm, WeightedCoefficients};
pub use weighted::{
    b_from_c, even_basis, odd_basis, weight, weighted_energy, weighted_energy_nodal, weighted_inner, weighted_inner_fn,
};
