//! Tabular outputs. Every file has a header row; floats use the shortest
//! representation that parses back to the same value.
//!
//! Potential files start with `#`-prefixed lines holding a JSON header
//! ([`PotentialHeader`]), followed by `xi,re_V,im_V` rows.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{EitError, Result};
use crate::perturbation::ImkRow;
use crate::potential::{Harmonics, PotentialCoefficients, PotentialSpec, XiGrid};
use crate::propagate::{BeamState, PropagationLog};
use crate::spectrum::{BandStructure, ThresholdReport};
use crate::C64;

pub const SCAN_COLUMNS: &str = "delta3_over_gamma3,variant_id,re_K_cm⁻¹,im_K_cm⁻¹";
pub const POTENTIAL_COLUMNS: &str = "xi,re_V,im_V";
pub const TRAJECTORY_COLUMNS: &str = "s,P,re_Q,im_Q";
pub const SNAPSHOT_COLUMNS: &str = "xi,abs_u_sq,re_u,im_u";
pub const BAND_COLUMNS: &str = "q,band_index,re_beta,im_beta";
pub const THRESHOLD_COLUMNS: &str = "W,max_abs_im_beta";

/// Metadata carried by a potential file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialHeader {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub coefficients: Option<PotentialCoefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonics: Option<Harmonics>,
    #[serde(default)]
    pub offset: C64,
    #[serde(rename = "Ldiff_cm", default, skip_serializing_if = "Option::is_none")]
    pub ldiff_cm: Option<f64>,
    #[serde(rename = "R_cm", default, skip_serializing_if = "Option::is_none")]
    pub r_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pt_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_balance: Option<f64>,
    /// Extra run information (tuning knob, calibrated polarizability, ...).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl PotentialHeader {
    pub fn for_spec(spec: &PotentialSpec) -> Self {
        PotentialHeader {
            preset: spec.name.clone(),
            coefficients: spec.coefficients,
            harmonics: spec.harmonics,
            offset: spec.offset,
            ldiff_cm: spec.ldiff_cm,
            r_cm: spec.r_cm,
            ..Default::default()
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| EitError::Parse(format!("line {line}: cannot read {s:?} as a number ({e})")))
}

pub fn write_scan<W: Write>(mut w: W, rows: &[ImkRow]) -> Result<()> {
    writeln!(w, "{SCAN_COLUMNS}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", fmt(r.delta3_over_gamma3), r.variant_id, fmt(r.k.re), fmt(r.k.im))?;
    }
    Ok(())
}

/// Rows of a numeric CSV after the header; `#` lines are collected apart.
struct Table {
    comments: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

fn read_table<R: BufRead>(r: R, columns: &str) -> Result<Table> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut header = false;
    let width = columns.split(',').count();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let n = k + 1;
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header {
            if line.trim() != columns {
                return Err(EitError::Parse(format!("line {n}: expected header {columns:?}, found {line:?}")));
            }
            header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(EitError::Parse(format!("line {n}: expected {width} fields, found {}", fields.len())));
        }
        let values = fields.iter().map(|f| parse_f64(f, n)).collect::<Result<Vec<f64>>>()?;
        rows.push((n, values));
    }
    if !header {
        return Err(EitError::Parse(format!("missing header row {columns:?}")));
    }
    Ok(Table { comments, rows })
}

pub fn read_scan<R: BufRead>(r: R) -> Result<Vec<ImkRow>> {
    read_table(r, SCAN_COLUMNS)?
        .rows
        .into_iter()
        .map(|(n, v)| {
            if v[1] < 0.0 || v[1].fract() != 0.0 {
                return Err(EitError::Parse(format!("line {n}: variant id {} is not an index", v[1])));
            }
            Ok(ImkRow { delta3_over_gamma3: v[0], variant_id: v[1] as usize, k: C64::new(v[2], v[3]) })
        })
        .collect()
}

pub fn write_potential<W: Write>(mut w: W, spec: &PotentialSpec, header: &PotentialHeader) -> Result<()> {
    let json = serde_json::to_string(header).map_err(|e| EitError::Parse(e.to_string()))?;
    writeln!(w, "# {json}")?;
    writeln!(w, "{POTENTIAL_COLUMNS}")?;
    for (x, v) in spec.grid.points().iter().zip(&spec.values) {
        writeln!(w, "{},{},{}", fmt(*x), fmt(v.re), fmt(v.im))?;
    }
    Ok(())
}

pub fn read_potential<R: BufRead>(r: R) -> Result<(PotentialSpec, PotentialHeader)> {
    let table = read_table(r, POTENTIAL_COLUMNS)?;
    let header: PotentialHeader = if table.comments.is_empty() {
        PotentialHeader::default()
    } else {
        serde_json::from_str(&table.comments.join("\n"))
            .map_err(|e| EitError::Parse(format!("potential header: {e}")))?
    };
    let xi: Vec<f64> = table.rows.iter().map(|(_, v)| v[0]).collect();
    let grid = XiGrid::from_samples(&xi)?;
    let values = table.rows.iter().map(|(_, v)| C64::new(v[1], v[2])).collect();
    let mut spec = PotentialSpec::from_samples(&header.preset, grid, values)?;
    spec.coefficients = header.coefficients;
    spec.harmonics = header.harmonics;
    spec.offset = header.offset;
    spec.ldiff_cm = header.ldiff_cm;
    spec.r_cm = header.r_cm;
    Ok((spec, header))
}

pub fn write_trajectory<W: Write>(mut w: W, log: &PropagationLog) -> Result<()> {
    writeln!(w, "{TRAJECTORY_COLUMNS}")?;
    for e in &log.entries {
        writeln!(w, "{},{},{},{}", fmt(e.s), fmt(e.power), fmt(e.quasi_power.re), fmt(e.quasi_power.im))?;
    }
    Ok(())
}

/// (s, P, Q) rows of a trajectory file.
pub fn read_trajectory<R: BufRead>(r: R) -> Result<Vec<(f64, f64, C64)>> {
    Ok(read_table(r, TRAJECTORY_COLUMNS)?
        .rows
        .into_iter()
        .map(|(_, v)| (v[0], v[1], C64::new(v[2], v[3])))
        .collect())
}

pub fn write_snapshot<W: Write>(mut w: W, state: &BeamState) -> Result<()> {
    writeln!(w, "# s = {}", fmt(state.s))?;
    writeln!(w, "{SNAPSHOT_COLUMNS}")?;
    for (x, u) in state.grid.points().iter().zip(&state.u) {
        writeln!(w, "{},{},{},{}", fmt(*x), fmt(u.norm_sqr()), fmt(u.re), fmt(u.im))?;
    }
    Ok(())
}

pub fn write_bands<W: Write>(mut w: W, bands: &BandStructure) -> Result<()> {
    writeln!(w, "{BAND_COLUMNS}")?;
    for (k, q) in bands.q.iter().enumerate() {
        for (b, band) in bands.beta.iter().enumerate() {
            writeln!(w, "{},{},{},{}", fmt(*q), b, fmt(band[k].re), fmt(band[k].im))?;
        }
    }
    Ok(())
}

/// One row per evaluated W (scan points and bisection midpoints, sorted), with
/// the threshold and design W as comments.
pub fn write_threshold<W: Write>(mut w: W, report: &ThresholdReport) -> Result<()> {
    writeln!(w, "# W_c = {}", fmt(report.w_c))?;
    writeln!(w, "# design W = {}", fmt(report.design_w))?;
    writeln!(w, "{THRESHOLD_COLUMNS}")?;
    let mut samples = report.samples.clone();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, m) in samples {
        writeln!(w, "{},{}", fmt(x), fmt(m))?;
    }
    Ok(())
}
