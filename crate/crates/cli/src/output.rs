//! CSV tables and inputs.

use std::io::{Read, Write};
use std::path::Path;

use pcurve_core::battery::TestResult;
use pcurve_core::bias_size::DistortionReport;
use pcurve_core::numkit::EffectDistribution;
use pcurve_core::power::{PowerStudyConfig, PowerTable};
use pcurve_core::pubbias::SelectionRule;
use serde::Serialize;

use crate::error::CliError;

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io {
            path: "<output>".into(),
            source: e,
        },
        k => CliError::Config(format!("{k:?}")),
    }
}

pub fn effect_label(e: &EffectDistribution) -> String {
    match e {
        EffectDistribution::PointMass { h0 } => format!("h{h0}"),
        EffectDistribution::Gamma { alpha, beta } => format!("gamma{alpha}-{beta}"),
        EffectDistribution::Empirical { sample } => format!("empirical{}", sample.len()),
    }
}

pub fn selection_label(s: &SelectionRule) -> &'static str {
    match s {
        SelectionRule::None => "none",
        SelectionRule::Sharp { .. } => "sharp",
        SelectionRule::Smooth { .. } => "smooth",
    }
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// File stem shared by the CSV and SVG of one study: dgp, strategy, effect
/// and selection.
pub fn study_stem(cfg: &PowerStudyConfig) -> String {
    format!(
        "power_{}_{}_{}_{}",
        snake(&cfg.dgp.scenario),
        snake(&cfg.strategy),
        effect_label(&cfg.dgp.effect),
        selection_label(&cfg.selection)
    )
}

#[derive(Serialize)]
struct PowerCsvRow<'a> {
    tau: f64,
    test: &'a str,
    rejection_rate: f64,
    mc_std_err: f64,
    n_kept_mean: f64,
    qp_singular_nonreject: u64,
    insufficient_sample: u64,
    bandwidth_truncated: u64,
    infinite_statistic: u64,
}

pub fn write_power_table<W: Write>(table: &PowerTable, w: W) -> Result<(), CliError> {
    let mut cw = csv::Writer::from_writer(w);
    for r in &table.rows {
        cw.serialize(PowerCsvRow {
            tau: r.tau,
            test: r.test.name(),
            rejection_rate: r.rejection_rate,
            mc_std_err: r.mc_std_err,
            n_kept_mean: r.n_kept_mean,
            qp_singular_nonreject: r.flags.qp_singular_nonreject,
            insufficient_sample: r.flags.insufficient_sample,
            bandwidth_truncated: r.flags.bandwidth_truncated,
            infinite_statistic: r.flags.infinite_statistic,
        })
        .map_err(csv_err)?;
    }
    cw.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        source: e,
    })
}

#[derive(Serialize)]
struct TestCsvRow<'a> {
    test: &'a str,
    statistic: f64,
    pvalue: Option<f64>,
    critical_value: Option<f64>,
    dof: Option<u32>,
    reject: bool,
    n: usize,
    flags: String,
}

pub fn flag_names(r: &TestResult) -> String {
    let f = &r.flags;
    [
        (f.qp_singular_nonreject, "qp_singular_nonreject"),
        (f.insufficient_sample, "insufficient_sample"),
        (f.bandwidth_truncated, "bandwidth_truncated"),
        (f.infinite_statistic, "infinite_statistic"),
    ]
    .iter()
    .filter(|(on, _)| *on)
    .map(|(_, n)| *n)
    .collect::<Vec<_>>()
    .join("|")
}

pub fn write_test_results<W: Write>(results: &[TestResult], w: W) -> Result<(), CliError> {
    let mut cw = csv::Writer::from_writer(w);
    for r in results {
        cw.serialize(TestCsvRow {
            test: r.kind.name(),
            statistic: r.statistic,
            pvalue: r.pvalue,
            critical_value: r.critical_value,
            dof: r.dof,
            reject: r.reject,
            n: r.n,
            flags: flag_names(r),
        })
        .map_err(csv_err)?;
    }
    cw.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        source: e,
    })
}

#[derive(Serialize)]
struct DistortionRow {
    scenario: String,
    strategy: String,
    nominal_size: f64,
    empirical_size: f64,
    bias: f64,
    params: String,
}

pub fn write_distortions<W: Write>(reports: &[DistortionReport], w: W) -> Result<(), CliError> {
    let mut cw = csv::Writer::from_writer(w);
    for r in reports {
        let params = r
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        cw.serialize(DistortionRow {
            scenario: snake(&r.scenario),
            strategy: snake(&r.strategy),
            nominal_size: r.nominal_size,
            empirical_size: r.empirical_size,
            bias: r.bias,
            params,
        })
        .map_err(csv_err)?;
    }
    cw.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        source: e,
    })
}

/// Generic CSV of serializable rows.
pub fn write_rows<W: Write, T: Serialize>(rows: &[T], w: W) -> Result<(), CliError> {
    let mut cw = csv::Writer::from_writer(w);
    for r in rows {
        cw.serialize(r).map_err(csv_err)?;
    }
    cw.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        source: e,
    })
}

/// First column of a CSV as p-values. A non-numeric first row is taken as a
/// header; empty lines are skipped.
pub fn read_pvalues<R: Read>(r: R, origin: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(origin, e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let Some(field) = rec.get(0).map(str::trim).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(p) if (0.0..=1.0).contains(&p) => out.push(p),
            Ok(p) => {
                return Err(CliError::input(origin, format!("line {line}: p-value {p} outside [0, 1]")));
            }
            Err(_) if i == 0 => {}
            Err(_) => return Err(CliError::input(origin, format!("line {line}: not a number: {field:?}"))),
        }
    }
    if out.is_empty() {
        return Err(CliError::input(origin, "no p-values found"));
    }
    Ok(out)
}
