//! CSV formats for trajectories, envelope tables and sweep results.
//!
//! Floats are written in shortest round-trip form with a decimal point, so
//! files are locale-independent and re-read exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::RunReport;
use crate::bounds;
use crate::config::SweepPoint;
use crate::model::PlantParams;
use crate::sim::{Record, Trajectory};
use crate::Result;

pub const TRAJECTORY_HEADER: &str = "t,x1,x2,x3,u,x3d,S,z1,z2,V1,V2,V,alpha3";
pub const BOUNDS_HEADER: &str = "x1,rho_lo,rho_hi,L_lo,L_hi,mu_lo,mu_hi";
pub const SWEEP_HEADER: &str = "index,alpha1,alpha2,x1_0,realization,status,settled,settling_time,overshoot,steady_state_error,max_abs_u,reaching_time,ultimate_bound_ok,radius_used,lyapunov_violations";

fn write_rows<W: Write, T: Serialize>(w: W, header: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(header.split(','))?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R, header: &str) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    let found = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(crate::Error::Input(format!("unexpected CSV header `{found}`")));
    }
    rd.deserialize().map(|r| r.map_err(Into::into)).collect()
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    write_rows(w, TRAJECTORY_HEADER, &traj.records)
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Vec<Record>> {
    read_rows(r, TRAJECTORY_HEADER)
}

/// One row of the envelope table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub x1: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    #[serde(rename = "L_lo")]
    pub l_lo: f64,
    #[serde(rename = "L_hi")]
    pub l_hi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
}

/// Envelopes on `points` evenly spaced airgaps over `[0, stroke]`.
pub fn bounds_table(p: &PlantParams, points: usize) -> Vec<BoundsRow> {
    (0..points)
        .map(|i| {
            let x1 = if points > 1 { p.stroke * i as f64 / (points - 1) as f64 } else { 0.0 };
            let e = bounds::envelopes(x1, p);
            BoundsRow {
                x1,
                rho_lo: e.rho.lower,
                rho_hi: e.rho.upper,
                l_lo: e.inductance.lower,
                l_hi: e.inductance.upper,
                mu_lo: e.mu.lower,
                mu_hi: e.mu.upper,
            }
        })
        .collect()
}

pub fn write_bounds<W: Write>(w: W, rows: &[BoundsRow]) -> Result<()> {
    write_rows(w, BOUNDS_HEADER, rows)
}

pub fn read_bounds<R: Read>(r: R) -> Result<Vec<BoundsRow>> {
    read_rows(r, BOUNDS_HEADER)
}

/// Outcome of one sweep point. Metrics are empty when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x1_0: f64,
    pub realization: Option<usize>,
    /// `ok`, `uncertified`, `divergence` or `error`.
    pub status: String,
    pub settled: Option<bool>,
    pub settling_time: Option<f64>,
    pub overshoot: Option<f64>,
    pub steady_state_error: Option<f64>,
    pub max_abs_u: Option<f64>,
    pub reaching_time: Option<f64>,
    pub ultimate_bound_ok: Option<bool>,
    pub radius_used: Option<f64>,
    pub lyapunov_violations: Option<usize>,
}

impl SweepRow {
    pub fn from_report(pt: &SweepPoint, rep: &RunReport) -> Self {
        Self {
            settled: Some(rep.settled),
            settling_time: rep.settling_time,
            overshoot: Some(rep.overshoot),
            steady_state_error: rep.steady_state_error,
            max_abs_u: Some(rep.max_abs_u),
            reaching_time: rep.reaching_time,
            ultimate_bound_ok: Some(rep.ultimate_bound_ok),
            radius_used: Some(rep.radius_used),
            lyapunov_violations: Some(rep.lyapunov_violations),
            ..Self::failed(pt, "ok")
        }
    }

    pub fn failed(pt: &SweepPoint, status: &str) -> Self {
        Self {
            index: pt.index,
            alpha1: pt.alpha1,
            alpha2: pt.alpha2,
            x1_0: pt.x1_0,
            realization: pt.realization,
            status: status.into(),
            settled: None,
            settling_time: None,
            overshoot: None,
            steady_state_error: None,
            max_abs_u: None,
            reaching_time: None,
            ultimate_bound_ok: None,
            radius_used: None,
            lyapunov_violations: None,
        }
    }

    /// The row as one CSV line without header, newline-terminated.
    pub fn to_line(&self) -> Result<String> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        wr.serialize(self)?;
        let bytes = wr.into_inner().map_err(|e| crate::Error::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    write_rows(w, SWEEP_HEADER, rows)
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    read_rows(r, SWEEP_HEADER)
}

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
