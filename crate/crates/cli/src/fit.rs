use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use lorenzfit::estimate::{fit, gmm_second_stage, nls_fit, weighting_matrix};
use lorenzfit::measures::{atkinson_mc, gini_with_fallback};
use lorenzfit::select::gof_scores;
use lorenzfit::{Error, Family, FitResult, GroupedDataset, McConfig, Method};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::io::{num_cell, open_output, read_grouped, write_jsonl};
use crate::{check_epsilons, FitArgs, Format, MethodArg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub code: String,
    pub message: String,
}

impl From<&Error> for Problem {
    fn from(e: &Error) -> Self {
        Problem {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtkinsonCell {
    pub epsilon: f64,
    pub value: Option<f64>,
    pub null_reason: Option<String>,
}

/// One dataset x family x method result. On `status = "error"` every
/// fit-derived number is null and `error` carries the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub dataset: String,
    pub family: Family,
    /// Requested method.
    pub method: Method,
    pub status: String,
    pub error: Option<Problem>,
    /// Method that produced the estimate; `nls` when GMM fell back.
    pub estimator: Option<Method>,
    /// Parameters by name; the scale is null unless a mean identified it.
    pub params: Option<Map<String, Value>>,
    pub scale_null_reason: Option<String>,
    pub converged: Option<bool>,
    pub starts_tried: Option<usize>,
    pub objective: Option<f64>,
    pub rss: Option<f64>,
    pub k: Option<usize>,
    /// Number of fitted shares, `J - 1`.
    pub n: Option<usize>,
    pub gini: Option<f64>,
    pub gini_method: Option<String>,
    pub gini_mc_std_error: Option<f64>,
    pub gini_null_reason: Option<String>,
    pub atkinson: Vec<AtkinsonCell>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub wssr: Option<f64>,
    pub wssr_null_reason: Option<String>,
    pub lower_bound_gini: f64,
    pub survey_gini: Option<f64>,
    pub warnings: Vec<String>,
}

/// Which estimator's Gini is closer to the survey Gini.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    pub family: Family,
    pub nls_gini: Option<f64>,
    pub gmm_gini: Option<f64>,
    pub survey_gini: Option<f64>,
    /// `nls`, `gmm` or `tie`.
    pub closer: Option<String>,
    pub null_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordError {
    pub dataset: String,
    pub error: Problem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum OutputRecord {
    Fit(FitRow),
    Comparison(Comparison),
    Error(RecordError),
}

pub fn method_name(m: lorenzfit::GiniMethod) -> String {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn error_row(d: &GroupedDataset, family: Family, method: Method, e: &Error, eps: &[f64]) -> FitRow {
    FitRow {
        dataset: d.id().to_string(),
        family,
        method,
        status: "error".into(),
        error: Some(e.into()),
        estimator: None,
        params: None,
        scale_null_reason: None,
        converged: None,
        starts_tried: None,
        objective: None,
        rss: None,
        k: None,
        n: None,
        gini: None,
        gini_method: None,
        gini_mc_std_error: None,
        gini_null_reason: Some(e.code().into()),
        atkinson: eps
            .iter()
            .map(|&epsilon| AtkinsonCell {
                epsilon,
                value: None,
                null_reason: Some(e.code().into()),
            })
            .collect(),
        aic: None,
        bic: None,
        wssr: None,
        wssr_null_reason: Some(e.code().into()),
        lower_bound_gini: d.lower_bound_gini(),
        survey_gini: d.survey_gini(),
        warnings: vec![],
    }
}

fn ok_row(d: &GroupedDataset, method: Method, f: &FitResult, mc: McConfig, eps: &[f64]) -> FitRow {
    let spec = &f.spec;
    let family = spec.family();
    let scale_idx = family.scale_index();
    let mut params = Map::new();
    for (i, (name, v)) in family.param_names().iter().zip(spec.params()).enumerate() {
        let v = if i == scale_idx && !f.scale_recovered { Value::Null } else { Value::from(*v) };
        params.insert((*name).to_string(), v);
    }
    let mut warnings = f.warnings.clone();

    let (gini, gini_method, gini_se, gini_null) = match gini_with_fallback(spec, mc) {
        Ok(g) if g.value.is_finite() => (Some(g.value), Some(method_name(g.method)), g.mc_std_error, None),
        Ok(_) => (None, None, None, Some("non_finite".to_string())),
        Err(e) => {
            warnings.push(format!("Gini: {e}"));
            (None, None, None, Some(e.code().to_string()))
        }
    };
    let atkinson = eps
        .iter()
        .map(|&epsilon| match atkinson_mc(spec, epsilon, mc) {
            Ok(v) if v.is_finite() => AtkinsonCell {
                epsilon,
                value: Some(v),
                null_reason: None,
            },
            Ok(_) => AtkinsonCell {
                epsilon,
                value: None,
                null_reason: Some("non_finite".into()),
            },
            Err(e) => AtkinsonCell {
                epsilon,
                value: None,
                null_reason: Some(e.code().into()),
            },
        })
        .collect();

    let omega = if spec.moment_exists(2.0) {
        weighting_matrix(spec, d).map_err(|e| e.code().to_string())
    } else {
        Err("second_moment_missing".to_string())
    };
    let gof = gof_scores(f, omega.as_ref().ok());
    let (aic, bic, wssr) = match &gof {
        Ok(s) => (finite(s.aic), finite(s.bic), s.wssr.and_then(finite)),
        Err(_) => (None, None, None),
    };
    let wssr_null_reason = match (&omega, wssr) {
        (_, Some(_)) => None,
        (Err(code), None) => Some(code.clone()),
        (Ok(_), None) => Some("non_finite".into()),
    };

    FitRow {
        dataset: d.id().to_string(),
        family,
        method,
        status: "ok".into(),
        error: None,
        estimator: Some(f.method),
        params: Some(params),
        scale_null_reason: (!f.scale_recovered).then(|| "mean_missing".into()),
        converged: Some(f.converged),
        starts_tried: Some(f.starts_tried),
        objective: finite(f.objective),
        rss: finite(f.rss()),
        k: Some(f.k),
        n: Some(f.residuals.len()),
        gini,
        gini_method,
        gini_mc_std_error: gini_se,
        gini_null_reason: gini_null,
        atkinson,
        aic,
        bic,
        wssr,
        wssr_null_reason,
        lower_bound_gini: d.lower_bound_gini(),
        survey_gini: d.survey_gini(),
        warnings,
    }
}

fn compare(d: &GroupedDataset, family: Family, nls: &FitRow, gmm: &FitRow) -> Comparison {
    let (n, g, s) = (nls.gini, gmm.gini, d.survey_gini());
    let (closer, null_reason) = match (n, g, s) {
        (_, _, None) => (None, Some("survey_gini_missing")),
        (None, _, _) => (None, Some("nls_gini_missing")),
        (_, None, _) => (None, Some("gmm_gini_missing")),
        (Some(n), Some(g), Some(s)) => {
            let (en, eg) = ((n - s).abs(), (g - s).abs());
            let c = if en < eg {
                "nls"
            } else if eg < en {
                "gmm"
            } else {
                "tie"
            };
            (Some(c.to_string()), None)
        }
    };
    Comparison {
        dataset: d.id().to_string(),
        family,
        nls_gini: n,
        gmm_gini: g,
        survey_gini: s,
        closer,
        null_reason: null_reason.map(str::to_string),
    }
}

/// All output records for one dataset.
pub fn fit_dataset(d: &GroupedDataset, families: &[Family], method: MethodArg, mc: McConfig, eps: &[f64]) -> Vec<OutputRecord> {
    let mut out = Vec::new();
    for &family in families {
        let row = |m: Method, r: &lorenzfit::Result<FitResult>| match r {
            Ok(f) => ok_row(d, m, f, mc, eps),
            Err(e) => error_row(d, family, m, e, eps),
        };
        match method {
            MethodArg::Nls => out.push(OutputRecord::Fit(row(Method::Nls, &fit(family, d, Method::Nls)))),
            MethodArg::Gmm => out.push(OutputRecord::Fit(row(Method::Gmm, &fit(family, d, Method::Gmm)))),
            MethodArg::Both => {
                let first = nls_fit(family, d);
                let second = match (&first, d.mean()) {
                    (Ok(f), Some(mean)) => gmm_second_stage(f.clone(), d, mean),
                    (Ok(_), None) => Err(Error::MeanRequired),
                    (Err(e), _) => Err(e.clone()),
                };
                let (a, b) = (row(Method::Nls, &first), row(Method::Gmm, &second));
                let cmp = compare(d, family, &a, &b);
                out.push(OutputRecord::Fit(a));
                out.push(OutputRecord::Fit(b));
                out.push(OutputRecord::Comparison(cmp));
            }
        }
    }
    out
}

pub fn run(args: &FitArgs) -> Result<ExitCode> {
    check_epsilons(&args.epsilon)?;
    let mc = args.mc.config()?;
    let records = read_grouped(&args.input)?;
    let mut out = Vec::new();
    for rec in records {
        match rec {
            Ok(d) => out.extend(fit_dataset(&d, &args.families, args.method, mc, &args.epsilon)),
            Err((id, e)) => out.push(OutputRecord::Error(RecordError {
                dataset: id,
                error: (&e).into(),
            })),
        }
    }
    let mut failures = 0;
    for r in &out {
        match r {
            OutputRecord::Error(e) => {
                failures += 1;
                eprintln!("{}: {}", e.dataset, e.error.message);
            }
            OutputRecord::Fit(f) if f.status != "ok" => {
                failures += 1;
                let msg = f.error.as_ref().map_or("", |p| p.message.as_str());
                eprintln!("{} {} {}: {msg}", f.dataset, f.family, f.method);
            }
            _ => {}
        }
    }
    let mut w = open_output(args.output.as_deref())?;
    match args.format {
        Format::Json => write_jsonl(&mut w, &out)?,
        Format::Csv => write_fit_csv(&mut w, &out, &args.epsilon)?,
    }
    w.flush()?;
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn write_fit_csv<W: Write>(w: W, out: &[OutputRecord], eps: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "record", "dataset", "family", "method", "estimator", "status", "error_code", "error", "params",
        "converged", "starts_tried", "objective", "rss", "k", "gini", "gini_method", "gini_mc_std_error",
        "gini_null_reason",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for e in eps {
        header.push(format!("atkinson_{e}"));
        header.push(format!("atkinson_{e}_null_reason"));
    }
    header.extend(
        ["aic", "bic", "wssr", "wssr_null_reason", "lower_bound_gini", "survey_gini", "closer_to_survey"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    let width = header.len();
    for r in out {
        let mut row: Vec<String> = match r {
            OutputRecord::Fit(f) => {
                let closer = out.iter().find_map(|o| match o {
                    OutputRecord::Comparison(c) if c.dataset == f.dataset && c.family == f.family => c.closer.clone(),
                    _ => None,
                });
                let params = f.params.as_ref().map_or_else(String::new, |p| {
                    p.iter()
                        .map(|(k, v)| format!("{k}={}", if v.is_null() { String::new() } else { v.to_string() }))
                        .collect::<Vec<_>>()
                        .join(";")
                });
                let opt = |v: Option<&String>| v.cloned().unwrap_or_default();
                let mut row = vec![
                    "fit".into(),
                    f.dataset.clone(),
                    f.family.to_string(),
                    f.method.to_string(),
                    f.estimator.map_or_else(String::new, |m| m.to_string()),
                    f.status.clone(),
                    opt(f.error.as_ref().map(|p| &p.code)),
                    opt(f.error.as_ref().map(|p| &p.message)),
                    params,
                    f.converged.map_or_else(String::new, |b| b.to_string()),
                    f.starts_tried.map_or_else(String::new, |n| n.to_string()),
                    num_cell(f.objective),
                    num_cell(f.rss),
                    f.k.map_or_else(String::new, |n| n.to_string()),
                    num_cell(f.gini),
                    opt(f.gini_method.as_ref()),
                    num_cell(f.gini_mc_std_error),
                    opt(f.gini_null_reason.as_ref()),
                ];
                for a in &f.atkinson {
                    row.push(num_cell(a.value));
                    row.push(opt(a.null_reason.as_ref()));
                }
                row.extend([
                    num_cell(f.aic),
                    num_cell(f.bic),
                    num_cell(f.wssr),
                    opt(f.wssr_null_reason.as_ref()),
                    f.lower_bound_gini.to_string(),
                    num_cell(f.survey_gini),
                    closer.unwrap_or_default(),
                ]);
                row
            }
            OutputRecord::Comparison(_) => continue,
            OutputRecord::Error(e) => {
                vec!["error".into(), e.dataset.clone(), String::new(), String::new(), String::new(), "error".into(), e.error.code.clone(), e.error.message.clone()]
            }
        };
        row.resize(width, String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
