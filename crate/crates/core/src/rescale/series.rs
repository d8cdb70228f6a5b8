//! Per-step diagnostics and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub iter: usize,
    pub tau: f64,
    /// Step that produced this row; zero on the initial row.
    pub dt: f64,
    pub c_u: f64,
    pub c_l: Vec<f64>,
    pub lambda: Vec<f64>,
    pub log_cu: f64,
    /// `[u(0), u_zz(0)]` for heat and Riccati, `[u_x(0)]` for Hou–Li.
    pub anchors: Vec<f64>,
    pub energy: f64,
    pub gamma: f64,
    pub psi_x0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub family: Family,
    pub dim: usize,
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsSeries {
    pub fn new(family: Family, dim: usize) -> Self {
        Self { family, dim, rows: Vec::new() }
    }

    /// Column names. Heat and Riccati runs append `rate_l_i = (1/2 - ĉ_l_i)τ`
    /// and `rate_u = (ĉ_u + 1)τ`; Hou–Li runs log `ψ_x(0)` instead.
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["iter", "tau", "dt", "c_u_hat"].iter().map(|s| s.to_string()).collect();
        if self.family == Family::Houli {
            h.extend(["log_Cu", "anchor_0", "E", "gamma", "psi_x0"].iter().map(|s| s.to_string()));
            return h;
        }
        h.extend((1..=self.dim).map(|i| format!("c_l_hat_{i}")));
        h.extend((1..=self.dim).map(|i| format!("lambda_{i}")));
        h.extend(["log_Cu", "anchor_0", "anchor_2", "E", "gamma"].iter().map(|s| s.to_string()));
        h.extend((1..=self.dim).map(|i| format!("rate_l_{i}")));
        h.push("rate_u".into());
        h
    }

    fn record(&self, r: &DiagnosticsRow) -> Vec<String> {
        let f = |x: f64| format!("{x:e}");
        let mut v = vec![r.iter.to_string(), f(r.tau), f(r.dt), f(r.c_u)];
        if self.family == Family::Houli {
            v.extend([f(r.log_cu), f(r.anchors[0]), f(r.energy), f(r.gamma), f(r.psi_x0.unwrap_or(f64::NAN))]);
            return v;
        }
        v.extend(r.c_l.iter().map(|x| f(*x)));
        v.extend(r.lambda.iter().map(|x| f(*x)));
        v.extend([f(r.log_cu), f(r.anchors[0]), f(r.anchors[1]), f(r.energy), f(r.gamma)]);
        v.extend(r.c_l.iter().map(|c| f((0.5 - c) * r.tau)));
        v.push(f((r.c_u + 1.0) * r.tau));
        v
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(self.header()).map_err(io)?;
        for r in &self.rows {
            out.write_record(self.record(r)).map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}
