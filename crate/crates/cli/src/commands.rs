// SPDX-License-Identifier: MIT OR Apache-2.0

//! The five subcommands.

use rayon::prelude::*;
use serde_json::{json, Value};

use srkit::asymptotics::{
    beta_c_at, constant_c, equalizer_head_start, overshoot_constants, stationary_laws,
    AsymptoticConstants, Estimate, LogCorrection, OvershootConfig, OvershootConstants, Provenance,
    StationaryLaws, BETA_C_INFINITY,
};
use srkit::detectors::Start;
use srkit::montecarlo::{
    estimate_add, estimate_arl, estimate_stadd, verify_martingale, McConfig, McEstimate,
};
use srkit::oc::{calibrate_threshold, Calibration, HeadStart, Procedure, ThresholdAnalysis};
use srkit::ChangepointModel;

use crate::config::{Estimator, HeadStartMode, ProcedureName, RunConfig, DEFAULT_GAMMAS};
use crate::output::{Cell, CsvTable, Report};
use crate::table::{table_row, to_csv};
use crate::{CliError, Command};

type CliResult<T> = Result<T, CliError>;

pub fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<Report> {
    match command {
        Command::Calibrate => calibrate(cfg),
        Command::Oc => oc(cfg),
        Command::Table => table(cfg),
        Command::Constants => constants(cfg),
        Command::Simulate => simulate(cfg),
    }
}

/// A target ARL to calibrate to, or a fixed threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Arl(f64),
    Threshold(f64),
}

impl Target {
    fn gamma(&self) -> Option<f64> {
        match self {
            Target::Arl(g) => Some(*g),
            Target::Threshold(_) => None,
        }
    }
}

fn targets(cfg: &RunConfig, command: &str) -> CliResult<Vec<Target>> {
    match (cfg.threshold, cfg.gamma.is_empty()) {
        (Some(a), _) => Ok(vec![Target::Threshold(a)]),
        (None, false) => Ok(cfg.gamma.iter().map(|&g| Target::Arl(g)).collect()),
        (None, true) => Err(CliError::Usage(format!("{command} needs --gamma or --threshold"))),
    }
}

pub fn model(cfg: &RunConfig) -> CliResult<ChangepointModel> {
    Ok(ChangepointModel::from_name(&cfg.model, &cfg.model_params)?)
}

fn pool(cfg: &RunConfig) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_width)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))
}

fn laws_if_needed(model: &ChangepointModel, cfg: &RunConfig) -> CliResult<Option<StationaryLaws>> {
    Ok(match model {
        ChangepointModel::Beta => None,
        _ => Some(stationary_laws(model, cfg.x_max, cfg.grid_n)?),
    })
}

/// Asymptotic constants: supplied overshoot constants, or series MC.
pub fn asymptotic_constants(
    model: &ChangepointModel,
    cfg: &RunConfig,
    laws: Option<&StationaryLaws>,
) -> CliResult<(AsymptoticConstants, Option<OvershootConstants>)> {
    let (zeta, varkappa, overshoot) = match (cfg.zeta, cfg.varkappa) {
        (Some(z), Some(k)) => {
            let supplied = |value| Estimate {
                value,
                std_error: None,
                provenance: Provenance::Supplied,
            };
            (supplied(z), supplied(k), None)
        }
        _ => {
            let ov_cfg = OvershootConfig {
                series_cap: cfg.series_cap,
                mc_paths: cfg.mc_paths,
                seed: cfg.constants_seed,
                parallel_width: cfg.parallel_width,
            };
            let ov = overshoot_constants(model, &ov_cfg)?;
            (ov.zeta, ov.varkappa, Some(ov))
        }
    };
    Ok((AsymptoticConstants::assemble(model, zeta, varkappa, laws)?, overshoot))
}

/// Root of `C_r = C_∞`.
pub fn equalizer_root(model: &ChangepointModel, cfg: &RunConfig) -> CliResult<f64> {
    Ok(match model {
        ChangepointModel::Beta => equalizer_head_start(beta_c_at, BETA_C_INFINITY)?,
        _ => {
            let laws = stationary_laws(model, cfg.x_max, cfg.grid_n)?;
            equalizer_head_start(|r| laws.c_at(r), laws.c_infinity())?
        }
    })
}

fn procedures(model: &ChangepointModel, cfg: &RunConfig) -> CliResult<Vec<Procedure>> {
    let mut root = None;
    cfg.procedures()?
        .into_iter()
        .map(|name| {
            Ok(match name {
                ProcedureName::Sr => Procedure::Sr,
                ProcedureName::Srp => Procedure::Srp,
                ProcedureName::SrR => Procedure::SrR(match cfg.head_start {
                    HeadStartMode::Zero => HeadStart::Fixed(0.0),
                    HeadStartMode::MuA => HeadStart::QuasiMean,
                    HeadStartMode::Value(r) => HeadStart::Fixed(r),
                    HeadStartMode::Equalizer => {
                        if root.is_none() {
                            root = Some(equalizer_root(model, cfg)?);
                        }
                        HeadStart::Fixed(root.unwrap())
                    }
                }),
            })
        })
        .collect()
}

fn analysis_for(
    model: &ChangepointModel,
    procedure: Procedure,
    target: Target,
    grid_n: usize,
) -> CliResult<(Option<Calibration>, ThresholdAnalysis)> {
    let (calibration, threshold) = match target {
        Target::Threshold(a) => (None, a),
        Target::Arl(gamma) => {
            let c = calibrate_threshold(model, procedure, gamma, grid_n)?;
            let a = c.threshold;
            (Some(c), a)
        }
    };
    Ok((calibration, ThresholdAnalysis::new(model, threshold, grid_n)?))
}

fn jobs(procs: &[Procedure], targets: &[Target]) -> Vec<(Procedure, Target)> {
    targets
        .iter()
        .flat_map(|&t| procs.iter().map(move |&p| (p, t)))
        .collect()
}

fn calibrate(cfg: &RunConfig) -> CliResult<Report> {
    if cfg.threshold.is_some() {
        return Err(CliError::Usage("calibrate takes --gamma, not --threshold".into()));
    }
    let model = model(cfg)?;
    let targets = targets(cfg, "calibrate")?;
    let procs = procedures(&model, cfg)?;
    let laws = laws_if_needed(&model, cfg)?;
    let (constants, _) = asymptotic_constants(&model, cfg, laws.as_ref())?;
    let zeta = constants.zeta.value;

    let work = jobs(&procs, &targets);
    let results: Vec<CliResult<Calibration>> = pool(cfg)?.install(|| {
        work.par_iter()
            .map(|&(p, t)| Ok(calibrate_threshold(&model, p, t.gamma().expect("target ARL"), cfg.grid_n)?))
            .collect()
    });

    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut table = CsvTable::new(
        "calibrate",
        &["procedure", "gamma", "threshold", "achieved_arl", "approx_threshold", "evaluations"],
    );
    for r in results {
        let c = r?;
        let approx = c.target_arl * zeta;
        if c.threshold < 1.0 {
            warnings.push(format!(
                "{} at gamma = {}: threshold {:.6e} is below 1; asymptotic approximations do not apply",
                c.procedure.label(),
                c.target_arl,
                c.threshold
            ));
        }
        table.push(vec![
            c.procedure.label().into(),
            c.target_arl.into(),
            c.threshold.into(),
            c.achieved_arl.into(),
            approx.into(),
            c.evaluations.into(),
        ]);
        entries.push(json!({
            "label": c.procedure.label(),
            "calibration": c,
            "approx_threshold": approx,
        }));
    }
    Ok(Report {
        command: "calibrate",
        result: json!({ "zeta": constants.zeta, "calibrations": entries }),
        tables: vec![table],
        warnings,
    })
}

fn oc(cfg: &RunConfig) -> CliResult<Report> {
    let model = model(cfg)?;
    let targets = targets(cfg, "oc")?;
    let procs = procedures(&model, cfg)?;
    let work = jobs(&procs, &targets);
    let results: Vec<CliResult<Value>> = pool(cfg)?.install(|| {
        work.par_iter()
            .map(|&(p, t)| {
                let (calibration, analysis) = analysis_for(&model, p, t, cfg.grid_n)?;
                let res = analysis.characteristics(p, cfg.nu_max)?;
                Ok(json!({
                    "label": p.label(),
                    "gamma": t.gamma(),
                    "calibration": calibration,
                    "lower_bound_at_threshold": analysis.lower_bound()?,
                    "characteristics": res,
                }))
            })
            .collect()
    });
    let entries = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut curves = CsvTable::new(
        "oc",
        &["procedure", "gamma", "threshold", "head_start", "nu", "delay", "survival"],
    );
    let mut summary = CsvTable::new(
        "oc_summary",
        &[
            "procedure",
            "gamma",
            "threshold",
            "head_start",
            "arl",
            "sadd",
            "argmax",
            "add_infinity",
            "lower_bound_at_threshold",
        ],
    );
    for e in &entries {
        let ch = &e["characteristics"];
        let num = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
        let label = e["label"].as_str().unwrap_or_default().to_string();
        let gamma: Cell = e["gamma"].as_f64().into();
        let delays = ch["delay_curve"].as_array().cloned().unwrap_or_default();
        let survival = ch["survival"].as_array().cloned().unwrap_or_default();
        for (nu, (d, p)) in delays.iter().zip(&survival).enumerate() {
            curves.push(vec![
                label.clone().into(),
                gamma.clone(),
                num(&ch["threshold"]).into(),
                num(&ch["head_start"]).into(),
                nu.into(),
                num(d).into(),
                num(p).into(),
            ]);
        }
        summary.push(vec![
            label.into(),
            gamma,
            num(&ch["threshold"]).into(),
            num(&ch["head_start"]).into(),
            num(&ch["arl_false_alarm"]).into(),
            num(&ch["sadd"]).into(),
            ch["argmax"].as_str().unwrap_or_default().into(),
            num(&ch["add_infinity"]).into(),
            num(&e["lower_bound_at_threshold"]).into(),
        ]);
    }
    Ok(Report {
        command: "oc",
        result: json!({ "model": model.name(), "procedures": entries }),
        tables: vec![curves, summary],
        warnings: Vec::new(),
    })
}

fn table(cfg: &RunConfig) -> CliResult<Report> {
    if cfg.threshold.is_some() {
        return Err(CliError::Usage("table takes --gamma, not --threshold".into()));
    }
    let model = model(cfg)?;
    let gammas: Vec<f64> = if cfg.gamma.is_empty() {
        DEFAULT_GAMMAS.to_vec()
    } else {
        cfg.gamma.clone()
    };
    let laws = laws_if_needed(&model, cfg)?;
    let (constants, _) = asymptotic_constants(&model, cfg, laws.as_ref())?;
    let rows: Vec<CliResult<_>> = pool(cfg)?.install(|| {
        gammas
            .par_iter()
            .map(|&g| Ok(table_row(&model, g, cfg.grid_n, cfg.nu_max, &constants)?))
            .collect()
    });
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    Ok(Report {
        command: "table",
        result: json!({ "model": model.name(), "constants": constants, "rows": rows }),
        tables: vec![to_csv(&rows)],
        warnings: Vec::new(),
    })
}

fn law_summary(law: &srkit::asymptotics::LimitLaw, beta: bool) -> Value {
    let points = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0];
    let cdf: Vec<Value> = points
        .iter()
        .map(|&x| json!({ "x": x, "cdf": law.cdf(x) }))
        .collect();
    let closed_form_error = beta.then(|| {
        (0..=2000)
            .map(|i| (i as f64 / 2000.0 * (0.5 * law.x_max()).ln_1p()).exp_m1())
            .map(|x| (law.cdf(x) - x / (1.0 + x)).abs())
            .fold(0.0, f64::max)
    });
    json!({
        "x_max": law.x_max(),
        "grid_nodes": law.nodes().len(),
        "eigenvalue": law.eigenvalue(),
        "tail_mass": law.tail_mass(),
        "iterations": law.iterations(),
        "mean_log1p": law.expect(f64::ln_1p),
        "cdf": cdf,
        "sup_error_vs_closed_form": closed_form_error,
    })
}

fn constants(cfg: &RunConfig) -> CliResult<Report> {
    let model = model(cfg)?;
    let beta = matches!(model, ChangepointModel::Beta);
    let laws = stationary_laws(&model, cfg.x_max, cfg.grid_n)?;
    let (constants, overshoot) = asymptotic_constants(&model, cfg, Some(&laws))?;
    let c_zero = constant_c(&model, LogCorrection::HeadStart(0.0), Some(&laws))?;
    let c_inf = constant_c(&model, LogCorrection::Stationary, Some(&laws))?;
    let equalizer = equalizer_head_start(|r| constants.c_at(r), constants.c_infinity.value)?;
    let equalizer_quadrature = equalizer_head_start(|r| laws.c_at(r), laws.c_infinity())?;

    let mu_rows: Vec<CliResult<(f64, f64)>> = pool(cfg)?.install(|| {
        cfg.mu_thresholds
            .par_iter()
            .map(|&a| {
                let analysis = ThresholdAnalysis::new(&model, a, cfg.grid_n)?;
                Ok((a, analysis.quasi_stationary()?.mean()))
            })
            .collect()
    });
    let mu_rows = mu_rows.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut table = CsvTable::new("constants", &["quantity", "value", "std_error", "provenance"]);
    let prov = |p: Provenance| serde_json::to_value(p).unwrap().as_str().unwrap_or_default().to_string();
    for (name, e) in [
        ("kl", constants.kl),
        ("zeta", constants.zeta),
        ("varkappa", constants.varkappa),
        ("c_zero", constants.c_zero),
        ("c_infinity", constants.c_infinity),
    ] {
        table.push(vec![name.into(), e.value.into(), e.std_error.into(), prov(e.provenance).into()]);
    }
    let quad = prov(Provenance::Quadrature);
    table.push(vec!["c_zero_quadrature".into(), c_zero.quadrature.into(), Cell::Empty, quad.clone().into()]);
    table.push(vec!["c_infinity_quadrature".into(), c_inf.quadrature.into(), Cell::Empty, quad.clone().into()]);
    table.push(vec!["equalizer_head_start".into(), equalizer.into(), Cell::Empty, prov(constants.c_infinity.provenance).into()]);
    table.push(vec!["equalizer_head_start_quadrature".into(), equalizer_quadrature.into(), Cell::Empty, quad.into()]);
    for &(a, mu) in &mu_rows {
        table.push(vec![format!("mu_A(A={a})").into(), mu.into(), Cell::Empty, "solver".into()]);
    }

    let mu_json: Vec<Value> = mu_rows
        .iter()
        .map(|&(a, mu)| json!({ "threshold": a, "log_threshold": a.ln(), "mu_a": mu, "mu_a_minus_log_threshold": mu - a.ln() }))
        .collect();
    Ok(Report {
        command: "constants",
        result: json!({
            "model": model.name(),
            "constants": constants,
            "overshoot": overshoot,
            "c_zero_quadrature": c_zero.quadrature,
            "c_infinity_quadrature": c_inf.quadrature,
            "equalizer_head_start": equalizer,
            "equalizer_head_start_quadrature": equalizer_quadrature,
            "stationary_law": law_summary(&laws.stationary, beta),
            "reciprocal_law": law_summary(&laws.reciprocal, beta),
            "quasi_stationary_means": mu_json,
        }),
        tables: vec![table],
        warnings: Vec::new(),
    })
}

fn estimate_json(e: &McEstimate, solver: Option<f64>) -> Value {
    json!({
        "estimate": e,
        "solver": solver,
        "z_score": solver.map(|s| e.z_score(s)),
    })
}

fn simulate(cfg: &RunConfig) -> CliResult<Report> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Usage("simulate needs a master seed (--seed)".into()))?;
    let model = model(cfg)?;
    let targets = targets(cfg, "simulate")?;
    let procs = procedures(&model, cfg)?;
    let mc = McConfig {
        n_runs: cfg.runs,
        seed,
        step_cap: cfg.step_cap,
        parallel_width: cfg.parallel_width,
    };
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut table = CsvTable::new(
        "simulate",
        &[
            "procedure", "gamma", "threshold", "estimator", "mean", "std_error", "n_runs",
            "censored", "flagged", "solver", "z_score",
        ],
    );
    for (p, t) in jobs(&procs, &targets) {
        let (_, analysis) = analysis_for(&model, p, t, cfg.grid_n)?;
        let a = analysis.threshold();
        let head_start = match p {
            Procedure::Sr => 0.0,
            Procedure::SrR(HeadStart::Fixed(r)) => r,
            Procedure::SrR(HeadStart::QuasiMean) | Procedure::Srp => analysis.quasi_stationary()?.mean(),
        };
        let start = match p {
            Procedure::Srp => Start::QuasiStationary(analysis.quasi_stationary()?),
            Procedure::Sr => Start::Zero,
            Procedure::SrR(_) => Start::HeadStart(head_start),
        };
        let mut add_row = |name: &str, e: &McEstimate, solver: Option<f64>, results: &mut Vec<Value>, extra: Value| {
            table.push(vec![
                p.label().into(),
                t.gamma().into(),
                a.into(),
                name.into(),
                e.mean.into(),
                e.std_error.into(),
                e.n_runs.into(),
                e.censored.into(),
                if e.flagged { "true" } else { "false" }.into(),
                solver.into(),
                solver.map(|s| e.z_score(s)).into(),
            ]);
            let mut v = estimate_json(e, solver);
            v["estimator"] = json!(name);
            if let Value::Object(m) = extra {
                for (k, x) in m {
                    v[k] = x;
                }
            }
            results.push(v);
        };
        let mut results = Vec::new();
        for est in &cfg.estimators {
            match est {
                Estimator::Arl => {
                    let e = estimate_arl(&model, start, a, &mc)?;
                    add_row("arl", &e, Some(analysis.procedure_arl(p)?), &mut results, json!({}));
                }
                Estimator::Add => {
                    let nu = cfg.changepoint;
                    let add = estimate_add(&model, start, a, nu, &mc)?;
                    let curve = match p {
                        Procedure::Srp => analysis.srp_delay_curve(cfg.nu_max.max(nu as usize + 1))?,
                        _ => analysis.delay_curve(head_start, cfg.nu_max.max(nu as usize + 1))?,
                    };
                    let solver = curve.delays.get(nu as usize).copied().unwrap_or(curve.tail);
                    if let Some(w) = &add.warning {
                        warnings.push(format!("{} add: {w}", p.label()));
                    }
                    add_row(
                        "add",
                        &add.delay,
                        Some(solver),
                        &mut results,
                        json!({ "changepoint": nu, "acceptance": add.acceptance }),
                    );
                }
                Estimator::Stadd => {
                    if p != Procedure::Sr {
                        warnings.push(format!("stadd is defined for SR only; skipped for {}", p.label()));
                        continue;
                    }
                    let far = match cfg.stadd_changepoint {
                        Some(v) => v,
                        None => (20.0 * analysis.arl(0.0)?).ceil() as u64,
                    };
                    let e = estimate_stadd(&model, a, far, &mc)?;
                    add_row("stadd", &e, Some(analysis.lower_bound()?), &mut results, json!({ "changepoint": far }));
                }
                Estimator::Martingale => {
                    if p == Procedure::Srp {
                        warnings.push("martingale check needs a fixed head start; skipped for SRP".into());
                        continue;
                    }
                    let m = verify_martingale(&model, a, head_start, &mc)?;
                    add_row("martingale_stop_time", &m.stop_time, Some(analysis.arl(head_start)?), &mut results, json!({}));
                    add_row("martingale_terminal", &m.terminal_minus_head_start, None, &mut results, json!({}));
                    add_row("martingale_difference", &m.difference, Some(0.0), &mut results, json!({}));
                }
            }
        }
        entries.push(json!({
            "label": p.label(),
            "procedure": p,
            "gamma": t.gamma(),
            "threshold": a,
            "head_start": head_start,
            "estimates": results,
        }));
    }
    Ok(Report {
        command: "simulate",
        result: json!({ "model": model.name(), "mc": mc, "procedures": entries }),
        tables: vec![table],
        warnings,
    })
}
