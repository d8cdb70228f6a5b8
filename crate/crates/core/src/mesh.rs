//! Fixed one-dimensional grids.
//!
//! Half-line grids start at the origin and carry the parity of the fields
//! that live on them; the negative half is implied by reflection. Periodic
//! grids are uniform on `[0, period)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    HalfLineEven,
    HalfLineOdd,
    Periodic,
}

impl GridKind {
    pub fn is_half_line(self) -> bool {
        !matches!(self, GridKind::Periodic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    kind: GridKind,
    period: f64,
}

impl Grid1D {
    /// Wraps an explicit node list after checking the grid invariants.
    /// `period` is ignored for half-line kinds.
    pub fn from_nodes(nodes: Vec<f64>, kind: GridKind, period: f64) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        match kind {
            GridKind::Periodic => {
                if !(period > 0.0) {
                    return Err(Error::InvalidGrid("period must be positive".into()));
                }
                if nodes[0] != 0.0 || *nodes.last().unwrap() >= period {
                    return Err(Error::InvalidGrid("periodic nodes must span [0, period)".into()));
                }
            }
            _ => {
                if nodes[0] != 0.0 {
                    return Err(Error::InvalidGrid("half-line grids start at 0".into()));
                }
            }
        }
        let period = if kind == GridKind::Periodic { period } else { 0.0 };
        Ok(Self { nodes, kind, period })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn outer(&self) -> f64 {
        match self.kind {
            GridKind::Periodic => self.period,
            _ => *self.nodes.last().unwrap(),
        }
    }

    /// Interval widths; periodic grids include the wrap-around interval last.
    pub fn spacings(&self) -> Vec<f64> {
        let mut h: Vec<f64> = self.nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if self.kind == GridKind::Periodic {
            h.push(self.period - self.nodes[self.nodes.len() - 1]);
        }
        h
    }

    /// Smallest interval adjacent to each node.
    pub fn local_spacing(&self) -> Vec<f64> {
        let h = self.spacings();
        let n = self.nodes.len();
        (0..n)
            .map(|i| match self.kind {
                GridKind::Periodic => h[i].min(h[(i + n - 1) % n]),
                _ => {
                    if i == 0 {
                        h[0]
                    } else if i == n - 1 {
                        h[n - 2]
                    } else {
                        h[i].min(h[i - 1])
                    }
                }
            })
            .collect()
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.spacings();
        let h0 = h[0];
        h.iter().all(|&x| (x - h0).abs() <= 1e-12 * h0.max(1.0))
    }
}

/// Builds a grid. Half-line grids use `outer_bound * sinh(stretch*xi)/sinh(stretch)`
/// over uniform `xi` in `[0, 1]` (uniform when `stretch == 0`); periodic grids are
/// uniform on `[0, outer_bound)` with `outer_bound` taken as the period.
pub fn build_grid(kind: GridKind, n_nodes: usize, outer_bound: f64, stretch: f64) -> Result<Grid1D> {
    if n_nodes < MIN_NODES {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_NODES} nodes, got {n_nodes}"
        )));
    }
    if !(outer_bound > 0.0) || !outer_bound.is_finite() {
        return Err(Error::InvalidGrid(format!("outer bound must be positive, got {outer_bound}")));
    }
    if !(stretch >= 0.0) || !stretch.is_finite() {
        return Err(Error::InvalidGrid(format!("stretch must be non-negative, got {stretch}")));
    }
    let nodes = match kind {
        GridKind::Periodic => {
            let h = outer_bound / n_nodes as f64;
            (0..n_nodes).map(|i| i as f64 * h).collect()
        }
        _ => {
            let last = (n_nodes - 1) as f64;
            let mut z: Vec<f64> = (0..n_nodes)
                .map(|i| {
                    let xi = i as f64 / last;
                    if stretch == 0.0 {
                        outer_bound * xi
                    } else {
                        outer_bound * (stretch * xi).sinh() / stretch.sinh()
                    }
                })
                .collect();
            z[0] = 0.0;
            z[n_nodes - 1] = outer_bound;
            z
        }
    };
    Grid1D::from_nodes(nodes, kind, outer_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_half_line() {
        let g = build_grid(GridKind::HalfLineEven, 9, 1.0, 0.0).unwrap();
        for (i, z) in g.nodes().iter().enumerate() {
            assert!((z - 0.125 * i as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn periodic_is_equispaced() {
        let p = 2.0 * std::f64::consts::PI;
        let g = build_grid(GridKind::Periodic, 16, p, 0.0).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.is_uniform());
        assert!(*g.nodes().last().unwrap() < p);
        assert!((g.spacings()[15] - p / 16.0).abs() < 1e-14);
    }

    #[test]
    fn stretched_grid_grows_outward() {
        let g = build_grid(GridKind::HalfLineEven, 2000, 1e5, 10.0).unwrap();
        let h = g.spacings();
        assert!(h.windows(2).all(|w| w[1] > w[0]));
        // map derivative ratio: cosh(10) vs cosh(0)
        assert!(h[h.len() - 1] / h[0] > 1e3);
        assert_eq!(*g.nodes().last().unwrap(), 1e5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_grid(GridKind::HalfLineEven, 7, 1.0, 0.0).is_err());
        assert!(build_grid(GridKind::HalfLineEven, 9, 0.0, 0.0).is_err());
        assert!(build_grid(GridKind::HalfLineOdd, 9, -1.0, 0.0).is_err());
        assert!(build_grid(GridKind::HalfLineOdd, 9, 1.0, -1.0).is_err());
        assert!(Grid1D::from_nodes(vec![0.0, 1.0, 0.5, 2.0, 3.0, 4.0, 5.0, 6.0], GridKind::HalfLineEven, 0.0).is_err());
        assert!(Grid1D::from_nodes((1..9).map(f64::from).collect(), GridKind::HalfLineEven, 0.0).is_err());
    }
}
