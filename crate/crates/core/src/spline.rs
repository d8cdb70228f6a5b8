//! Cubic-spline fields with parity-aware evaluation.
//!
//! A field is stored as node values plus the spline's second derivatives
//! `m` at the nodes, which fix every cubic piece. Half-line fields with a
//! declared parity are splined over the reflected node set, so the
//! interpolant is C² through the origin; the outer end is natural.
//! Periodic fields use the cyclic spline.
//!
//! Derivatives of order 3 and 4 are only offered at the origin, where they
//! come from a least-squares polynomial fit over the eight nodes closest to
//! zero with the field's parity built into the basis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, GridKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Node values with first and second derivatives at the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Jet {
    pub fn zeros(n: usize) -> Self {
        Self { value: vec![0.0; n], d1: vec![0.0; n], d2: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Samples an analytic function and its derivatives at the given nodes.
    pub fn from_fn(nodes: &[f64], f: impl Fn(f64) -> [f64; 3]) -> Self {
        let mut jet = Self::zeros(nodes.len());
        for (i, &x) in nodes.iter().enumerate() {
            let [v, d1, d2] = f(x);
            jet.value[i] = v;
            jet.d1[i] = d1;
            jet.d2[i] = d2;
        }
        jet
    }
}

#[derive(Debug, Clone)]
struct Tridiagonal {
    sub: Vec<f64>,
    cp: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Tridiagonal {
    fn factor(sub: Vec<f64>, diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        let mut cp = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        inv_denom[0] = 1.0 / diag[0];
        cp[0] = sup[0] * inv_denom[0];
        for i in 1..n {
            let d = diag[i] - sub[i] * cp[i - 1];
            inv_denom[i] = 1.0 / d;
            cp[i] = sup[i] * inv_denom[i];
        }
        Self { sub, cp, inv_denom }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
    }
}

#[derive(Debug, Clone)]
enum System {
    Open(Tridiagonal),
    Cyclic { tri: Tridiagonal, z: Vec<f64>, beta: f64, gamma: f64 },
}

/// Factored spline system for one grid and parity. Building the factor is
/// O(n) and it can be reused for every field on the same grid.
#[derive(Debug, Clone)]
pub struct SplineSolver {
    grid: Arc<Grid1D>,
    parity: Parity,
    h: Vec<f64>,
    system: System,
}

impl SplineSolver {
    pub fn new(grid: Arc<Grid1D>, parity: Parity) -> Self {
        let n = grid.len();
        let h = grid.spacings();
        let system = match grid.kind() {
            GridKind::Periodic => {
                let mut sub = vec![0.0; n];
                let mut diag = vec![0.0; n];
                let mut sup = vec![0.0; n];
                for i in 0..n {
                    let hl = h[(i + n - 1) % n];
                    let hr = h[i];
                    sub[i] = hl;
                    diag[i] = 2.0 * (hl + hr);
                    sup[i] = hr;
                }
                // Sherman-Morrison split of the two corner entries
                let beta = sub[0];
                let alpha = sup[n - 1];
                let gamma = -diag[0];
                diag[0] -= gamma;
                diag[n - 1] -= alpha * beta / gamma;
                let tri = Tridiagonal::factor(sub, &diag, &sup);
                let mut z = vec![0.0; n];
                z[0] = gamma;
                z[n - 1] = alpha;
                tri.solve_in_place(&mut z);
                System::Cyclic { tri, z, beta, gamma }
            }
            _ => {
                let mut sub = vec![0.0; n];
                let mut diag = vec![0.0; n];
                let mut sup = vec![0.0; n];
                match parity {
                    Parity::Even => {
                        diag[0] = 4.0 * h[0];
                        sup[0] = 2.0 * h[0];
                    }
                    Parity::Odd | Parity::None => diag[0] = 1.0,
                }
                for i in 1..n - 1 {
                    sub[i] = h[i - 1];
                    diag[i] = 2.0 * (h[i - 1] + h[i]);
                    sup[i] = h[i];
                }
                diag[n - 1] = 1.0;
                System::Open(Tridiagonal::factor(sub, &diag, &sup))
            }
        };
        Self { grid, parity, h, system }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Second derivatives of the interpolating spline at the nodes.
    pub fn second_derivatives(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let h = &self.h;
        let mut m = vec![0.0; n];
        match &self.system {
            System::Open(tri) => {
                m[0] = match self.parity {
                    Parity::Even => 12.0 * (y[1] - y[0]) / h[0],
                    _ => 0.0,
                };
                for i in 1..n - 1 {
                    m[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
                }
                m[n - 1] = 0.0;
                tri.solve_in_place(&mut m);
                if self.parity == Parity::Odd {
                    m[0] = 0.0;
                }
            }
            System::Cyclic { tri, z, beta, gamma } => {
                for i in 0..n {
                    let ip = (i + 1) % n;
                    let im = (i + n - 1) % n;
                    m[i] = 6.0 * ((y[ip] - y[i]) / h[i] - (y[i] - y[im]) / h[im]);
                }
                tri.solve_in_place(&mut m);
                let fact = (m[0] + beta * m[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
                for (mi, zi) in m.iter_mut().zip(z) {
                    *mi -= fact * zi;
                }
            }
        }
        m
    }

    /// First and second spline derivatives at every node.
    pub fn jet(&self, y: &[f64]) -> Jet {
        let m = self.second_derivatives(y);
        let d1 = self.first_derivatives(y, &m);
        Jet { value: y.to_vec(), d1, d2: m }
    }

    fn first_derivatives(&self, y: &[f64], m: &[f64]) -> Vec<f64> {
        let n = y.len();
        let h = &self.h;
        let mut d1 = vec![0.0; n];
        match self.grid.kind() {
            GridKind::Periodic => {
                for i in 0..n {
                    let ip = (i + 1) % n;
                    d1[i] = (y[ip] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[ip]) / 6.0;
                }
            }
            _ => {
                for i in 0..n - 1 {
                    d1[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
                }
                let k = n - 2;
                d1[n - 1] = (y[n - 1] - y[k]) / h[k] + h[k] * (m[k] + 2.0 * m[n - 1]) / 6.0;
                if self.parity == Parity::Even {
                    d1[0] = 0.0;
                }
            }
        }
        d1
    }
}

/// An interpolating cubic spline on a [`Grid1D`].
#[derive(Debug, Clone)]
pub struct SplineField {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
    parity: Parity,
    m: Vec<f64>,
}

/// Builds the spline of `values` on `grid` with the given parity.
pub fn build_spline(grid: Arc<Grid1D>, values: Vec<f64>, parity: Parity) -> Result<SplineField> {
    let solver = SplineSolver::new(grid, parity);
    SplineField::with_solver(&solver, values)
}

impl SplineField {
    pub fn with_solver(solver: &SplineSolver, values: Vec<f64>) -> Result<Self> {
        let grid = solver.grid().clone();
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let parity = solver.parity();
        if parity == Parity::Odd && values[0] != 0.0 {
            return Err(Error::OddNonzeroAtOrigin(values[0]));
        }
        let m = solver.second_derivatives(&values);
        Ok(Self { grid, values, parity, m })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Second derivatives at the nodes; together with the values these are
    /// the coefficients of every cubic piece.
    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    /// Per-interval cubic coefficients `[c0, c1, c2, c3]` in powers of `x - x_i`.
    pub fn piece_coefficients(&self) -> Vec<[f64; 4]> {
        let h = self.grid.spacings();
        let n = self.values.len();
        (0..h.len())
            .map(|i| {
                let ip = (i + 1) % n;
                let (y0, y1, m0, m1) = (self.values[i], self.values[ip], self.m[i], self.m[ip]);
                [
                    y0,
                    (y1 - y0) / h[i] - h[i] * (2.0 * m0 + m1) / 6.0,
                    0.5 * m0,
                    (m1 - m0) / (6.0 * h[i]),
                ]
            })
            .collect()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_derivative(x, 0)
    }

    /// Derivative of order 0..=4 at `x`. Orders 3 and 4 are only available at
    /// the origin.
    pub fn eval_derivative(&self, x: f64, order: usize) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::OutOfSpan { x, lo: 0.0, hi: self.grid.outer() });
        }
        match order {
            1 if x == 0.0 && self.parity == Parity::Even => Ok(0.0),
            0 | 2 if x == 0.0 && self.parity == Parity::Odd => Ok(0.0),
            0..=2 => self.eval_piece(x, order),
            3 | 4 => {
                if x != 0.0 {
                    return Err(Error::UnsupportedDerivative { order, x });
                }
                Ok(self.origin_fit()[order])
            }
            _ => Err(Error::UnsupportedDerivative { order, x }),
        }
    }

    fn eval_piece(&self, x: f64, order: usize) -> Result<f64> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let (xr, sign) = match self.grid.kind() {
            GridKind::Periodic => (x.rem_euclid(self.grid.period()), 1.0),
            _ => {
                let hi = nodes[n - 1];
                if x.abs() > hi || (x < 0.0 && self.parity == Parity::None) {
                    return Err(Error::OutOfSpan { x, lo: 0.0, hi });
                }
                if x >= 0.0 {
                    (x, 1.0)
                } else {
                    // reflection: f(-x) = p f(x), f'(-x) = -p f'(x), f''(-x) = p f''(x)
                    let p = if self.parity == Parity::Even { 1.0 } else { -1.0 };
                    let s = if order == 1 { -p } else { p };
                    (-x, s)
                }
            }
        };
        let periodic = self.grid.kind() == GridKind::Periodic;
        let last = if periodic { n - 1 } else { n - 2 };
        let i = nodes.partition_point(|&z| z <= xr).saturating_sub(1).min(last);
        let ip = (i + 1) % n;
        let x0 = nodes[i];
        let x1 = if ip == 0 { self.grid.period() } else { nodes[ip] };
        let h = x1 - x0;
        let (a, b) = (x1 - xr, xr - x0);
        let (y0, y1, m0, m1) = (self.values[i], self.values[ip], self.m[i], self.m[ip]);
        let v = match order {
            0 => {
                m0 * a * a * a / (6.0 * h)
                    + m1 * b * b * b / (6.0 * h)
                    + (y0 / h - m0 * h / 6.0) * a
                    + (y1 / h - m1 * h / 6.0) * b
            }
            1 => {
                -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (y1 - y0) / h
                    - (m1 - m0) * h / 6.0
            }
            _ => (m0 * a + m1 * b) / h,
        };
        Ok(sign * v)
    }

    /// Derivatives 0..=4 at the origin from the parity-constrained degree-6
    /// least-squares fit over the eight nearest nodes.
    pub fn origin_fit(&self) -> [f64; 5] {
        origin_derivatives(&self.grid, &self.values, self.parity)
    }
}

/// Derivatives 0..=4 at the origin of the field sampled by `values`, from a
/// degree-6 least-squares polynomial over the eight nodes nearest zero.
/// Even parity fits `{1, x², x⁴, x⁶}`, odd parity `{x, x³, x⁵}`, and no parity
/// a full degree-6 polynomial.
pub fn origin_derivatives(grid: &Grid1D, values: &[f64], parity: Parity) -> [f64; 5] {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(8);
    match (grid.kind(), parity) {
        (GridKind::Periodic, Parity::None) => {
            for j in 0..4 {
                pts.push((nodes[j], values[j]));
                pts.push((nodes[n - 1 - j] - grid.period(), values[n - 1 - j]));
            }
        }
        _ => pts.extend((0..8).map(|j| (nodes[j], values[j]))),
    }
    let scale = pts.iter().fold(0.0f64, |s, p| s.max(p.0.abs()));
    let powers: Vec<usize> = match parity {
        Parity::Even => vec![0, 2, 4, 6],
        Parity::Odd => vec![1, 3, 5],
        Parity::None => (0..=6).collect(),
    };
    let a = DMatrix::from_fn(pts.len(), powers.len(), |r, c| (pts[r].0 / scale).powi(powers[c] as i32));
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(powers.len()));
    let mut out = [0.0; 5];
    for (c, &p) in powers.iter().enumerate() {
        if p <= 4 {
            let fact = (1..=p).product::<usize>() as f64;
            out[p] = coef[c] * fact / scale.powi(p as i32);
        }
    }
    out
}

/// Values and per-axis first and second derivatives on a tensor grid.
/// Index order is row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisJet {
    pub value: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

impl From<Jet> for AxisJet {
    fn from(j: Jet) -> Self {
        Self { value: j.value, d1: vec![j.d1], d2: vec![j.d2] }
    }
}

/// Spline solvers for a one- or two-axis tensor grid of a single parity.
#[derive(Debug, Clone)]
pub struct TensorSplines {
    axes: Vec<SplineSolver>,
}

impl TensorSplines {
    pub fn new(grids: Vec<Arc<Grid1D>>, parity: Parity) -> Result<Self> {
        if grids.is_empty() || grids.len() > 2 {
            return Err(Error::DimensionMismatch(format!("{} axes; only 1 or 2 supported", grids.len())));
        }
        Ok(Self { axes: grids.into_iter().map(|g| SplineSolver::new(g, parity)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &SplineSolver {
        &self.axes[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.grid().len()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate along `axis` of the flat index `idx`.
    pub fn coordinate(&self, idx: usize, axis: usize) -> f64 {
        let nodes = self.axes[axis].grid().nodes();
        match (self.dim(), axis) {
            (1, _) => nodes[idx],
            (_, 0) => nodes[idx / self.axes[1].grid().len()],
            _ => nodes[idx % self.axes[1].grid().len()],
        }
    }

    fn stride(&self, axis: usize) -> usize {
        if self.dim() == 2 && axis == 0 {
            self.axes[1].grid().len()
        } else {
            1
        }
    }

    /// The values along `axis` through the origin.
    pub fn origin_line(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let n = self.axes[axis].grid().len();
        let st = self.stride(axis);
        (0..n).map(|i| values[i * st]).collect()
    }

    /// Spline second derivative at the origin along `axis` of `values`.
    pub fn origin_d2(&self, values: &[f64], axis: usize) -> f64 {
        self.axes[axis].second_derivatives(&self.origin_line(values, axis))[0]
    }

    pub fn jet(&self, values: &[f64]) -> AxisJet {
        if self.dim() == 1 {
            return self.axes[0].jet(values).into();
        }
        let (nx, ny) = (self.axes[0].grid().len(), self.axes[1].grid().len());
        let mut dx = vec![0.0; nx * ny];
        let mut dxx = vec![0.0; nx * ny];
        let mut dy = vec![0.0; nx * ny];
        let mut dyy = vec![0.0; nx * ny];
        let mut col = vec![0.0; nx];
        for j in 0..ny {
            for (i, c) in col.iter_mut().enumerate() {
                *c = values[i * ny + j];
            }
            let jet = self.axes[0].jet(&col);
            for i in 0..nx {
                dx[i * ny + j] = jet.d1[i];
                dxx[i * ny + j] = jet.d2[i];
            }
        }
        for i in 0..nx {
            let jet = self.axes[1].jet(&values[i * ny..(i + 1) * ny]);
            dy[i * ny..(i + 1) * ny].copy_from_slice(&jet.d1);
            dyy[i * ny..(i + 1) * ny].copy_from_slice(&jet.d2);
        }
        AxisJet { value: values.to_vec(), d1: vec![dx, dy], d2: vec![dxx, dyy] }
    }
}
