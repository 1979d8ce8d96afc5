// SPDX-License-Identifier: MIT OR Apache-2.0

//! Operating characteristics of SR, SRP and SR-r(μ_A) at one target ARL,
//! with the asymptotic predictions alongside.

use serde::Serialize;

use srkit::asymptotics::{approx_arl, approx_sadd, ArlApprox, AsymptoticConstants, DelayApprox, Level};
use srkit::oc::{calibrate_threshold, ArgmaxKind, HeadStart, OcResult, Procedure, ThresholdAnalysis};
use srkit::{ChangepointModel, Result};

use crate::output::{Cell, CsvTable};

#[derive(Clone, Debug, Serialize)]
pub struct ProcedureRow {
    pub threshold: f64,
    pub head_start: f64,
    pub arl: f64,
    pub arl_approx: f64,
    pub sadd: f64,
    pub sadd_approx: f64,
    pub add_infinity: f64,
    pub argmax: ArgmaxKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub gamma: f64,
    pub sr: ProcedureRow,
    pub srp: ProcedureRow,
    /// SR-r with `r = μ_A`, at the SRP threshold.
    pub sr_r: ProcedureRow,
    /// Lower bound at the SR threshold.
    pub lower_bound: f64,
    pub lower_bound_approx: f64,
}

fn row(res: &OcResult, arl_approx: f64, sadd_approx: f64) -> ProcedureRow {
    ProcedureRow {
        threshold: res.threshold,
        head_start: res.head_start,
        arl: res.arl_false_alarm,
        arl_approx,
        sadd: res.sadd,
        sadd_approx,
        add_infinity: res.add_infinity,
        argmax: res.argmax,
    }
}

/// Evaluates a row at given SR and SRP thresholds.
pub fn evaluate_row(
    model: &ChangepointModel,
    gamma: f64,
    sr_threshold: f64,
    srp_threshold: f64,
    grid_n: usize,
    nu_max: usize,
    constants: &AsymptoticConstants,
) -> Result<TableRow> {
    let zeta = constants.zeta.value;
    let at_gamma = Level::Arl(gamma);

    let sr_analysis = ThresholdAnalysis::new(model, sr_threshold, grid_n)?;
    let sr = sr_analysis.characteristics(Procedure::Sr, nu_max)?;
    let lower_bound = sr.lower_bound.expect("SR carries the lower bound");

    let srp_analysis = ThresholdAnalysis::new(model, srp_threshold, grid_n)?;
    let srp = srp_analysis.characteristics(Procedure::Srp, nu_max)?;
    let sr_r = srp_analysis.characteristics(Procedure::SrR(HeadStart::QuasiMean), nu_max)?;
    let stationary_approx = approx_sadd(DelayApprox::Srp, at_gamma, constants);

    Ok(TableRow {
        gamma,
        sr: row(
            &sr,
            approx_arl(ArlApprox::HeadStart(0.0), sr_threshold, zeta),
            approx_sadd(DelayApprox::Sr, at_gamma, constants),
        ),
        srp: row(
            &srp,
            approx_arl(ArlApprox::QuasiStationary { mean: srp.head_start }, srp_threshold, zeta),
            stationary_approx,
        ),
        sr_r: row(
            &sr_r,
            approx_arl(ArlApprox::HeadStart(sr_r.head_start), srp_threshold, zeta),
            approx_sadd(DelayApprox::DesignedHeadStart, at_gamma, constants),
        ),
        lower_bound,
        lower_bound_approx: approx_sadd(DelayApprox::LowerBound, at_gamma, constants),
    })
}

/// Calibrates SR and SRP to `gamma`, then evaluates the row.
pub fn table_row(
    model: &ChangepointModel,
    gamma: f64,
    grid_n: usize,
    nu_max: usize,
    constants: &AsymptoticConstants,
) -> Result<TableRow> {
    let sr = calibrate_threshold(model, Procedure::Sr, gamma, grid_n)?;
    let srp = calibrate_threshold(model, Procedure::Srp, gamma, grid_n)?;
    evaluate_row(model, gamma, sr.threshold, srp.threshold, grid_n, nu_max, constants)
}

pub const TABLE_HEADER: [&str; 18] = [
    "gamma",
    "sr_threshold",
    "sr_arl",
    "sr_arl_approx",
    "sr_sadd",
    "sr_sadd_approx",
    "srp_threshold",
    "srp_arl",
    "srp_arl_approx",
    "srp_sadd",
    "srp_sadd_approx",
    "srr_head_start",
    "srr_arl",
    "srr_sadd",
    "srr_arl_approx",
    "srr_sadd_approx",
    "lower_bound",
    "lower_bound_approx",
];

/// CSV with one line per target ARL.
pub fn to_csv(rows: &[TableRow]) -> CsvTable {
    let mut t = CsvTable::new("table", &TABLE_HEADER);
    for r in rows {
        let cells: Vec<Cell> = vec![
            r.gamma.into(),
            r.sr.threshold.into(),
            r.sr.arl.into(),
            r.sr.arl_approx.into(),
            r.sr.sadd.into(),
            r.sr.sadd_approx.into(),
            r.srp.threshold.into(),
            r.srp.arl.into(),
            r.srp.arl_approx.into(),
            r.srp.sadd.into(),
            r.srp.sadd_approx.into(),
            r.sr_r.head_start.into(),
            r.sr_r.arl.into(),
            r.sr_r.sadd.into(),
            r.sr_r.arl_approx.into(),
            r.sr_r.sadd_approx.into(),
            r.lower_bound.into(),
            r.lower_bound_approx.into(),
        ];
        t.push(cells);
    }
    t
}
