use std::io::{BufRead, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use lorenzfit::select::{
    dominance_matrix, error_report, Criterion, DominanceMatrix, ErrorReport, GofScores, ABS_LABELS, REL_LABELS,
};
use lorenzfit::{Family, Method};
use serde::Serialize;

use crate::fit::{FitRow, OutputRecord};
use crate::io::open_input;
use crate::io::open_output;
use crate::{Format, ReportArgs};

#[derive(Serialize)]
struct MethodDominance {
    method: Method,
    matrix: DominanceMatrix,
}

#[derive(Serialize)]
struct Report {
    datasets: usize,
    /// Datasets with a survey Gini, the benchmark for the error bins.
    benchmarked: usize,
    abs_bins: Vec<&'static str>,
    rel_bins: Vec<&'static str>,
    gini_errors: ErrorReport,
    dominance: Vec<MethodDominance>,
    warnings: Vec<String>,
}

fn scores(r: &FitRow) -> Option<GofScores> {
    if r.status != "ok" {
        return None;
    }
    Some(GofScores {
        rss: r.rss?,
        aic: r.aic?,
        bic: r.bic?,
        wssr: r.wssr,
        k: r.k?,
        n: r.n?,
        rss_floored: false,
    })
}

fn push_unique<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

fn build(rows: &[FitRow], mut warnings: Vec<String>) -> Report {
    let mut datasets: Vec<String> = Vec::new();
    let mut families: Vec<Family> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        push_unique(&mut datasets, &r.dataset);
        push_unique(&mut families, &r.family);
        push_unique(&mut methods, &r.method);
    }
    let find = |d: &str, f: Family, m: Method| rows.iter().find(|r| r.dataset == d && r.family == f && r.method == m);

    let mut labels = vec!["lower_bound".to_string()];
    let combos: Vec<(Family, Method)> = families.iter().flat_map(|&f| methods.iter().map(move |&m| (f, m))).collect();
    labels.extend(combos.iter().map(|(f, m)| format!("{f}/{m}")));
    let mut bench = Vec::new();
    let mut estimates = Vec::new();
    for d in &datasets {
        let any = rows.iter().find(|r| &r.dataset == d).expect("dataset seen in rows");
        let Some(g) = any.survey_gini else {
            continue;
        };
        bench.push(g);
        let mut row = vec![Some(any.lower_bound_gini)];
        row.extend(combos.iter().map(|&(f, m)| find(d, f, m).and_then(|r| r.gini)));
        estimates.push(row);
    }
    if bench.len() < datasets.len() {
        warnings.push(format!(
            "{} of {} datasets lack a survey Gini and are left out of the error bins",
            datasets.len() - bench.len(),
            datasets.len()
        ));
    }
    let gini_errors = error_report(&labels, &estimates, &bench).expect("rows and benchmarks built together");

    let models: Vec<String> = families.iter().map(|f| f.to_string()).collect();
    let mut dominance = Vec::new();
    for &m in &methods {
        let table: Vec<Vec<Option<GofScores>>> = datasets
            .iter()
            .map(|d| families.iter().map(|&f| find(d, f, m).and_then(scores)).collect())
            .collect();
        for c in [Criterion::Aic, Criterion::Bic, Criterion::Rss, Criterion::Wssr] {
            dominance.push(MethodDominance {
                method: m,
                matrix: dominance_matrix(&models, &table, c),
            });
        }
    }
    Report {
        datasets: datasets.len(),
        benchmarked: bench.len(),
        abs_bins: ABS_LABELS.to_vec(),
        rel_bins: REL_LABELS.to_vec(),
        gini_errors,
        dominance,
        warnings,
    }
}

fn read_rows(input: Box<dyn BufRead>) -> Result<(Vec<FitRow>, Vec<String>)> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<OutputRecord>(&line) {
            Ok(OutputRecord::Fit(r)) => rows.push(r),
            Ok(OutputRecord::Error(e)) => warnings.push(format!("{}: skipped ({})", e.dataset, e.error.code)),
            Ok(OutputRecord::Comparison(_)) => {}
            Err(e) => warnings.push(format!("line {}: not a fit record ({e})", i + 1)),
        }
    }
    Ok((rows, warnings))
}

pub fn run(a: &ReportArgs) -> Result<ExitCode> {
    let (rows, mut warnings) = read_rows(open_input(&a.input)?).with_context(|| format!("cannot read {}", a.input.display()))?;
    if rows.is_empty() {
        warnings.push("input holds no fit records; tables are empty".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let report = build(&rows, warnings);
    let mut out = open_output(a.output.as_deref())?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            out.write_all(b"\n")?;
        }
        Format::Csv => write_csv(&mut out, &report)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

/// Long format: `table,method,row,column,value`.
fn write_csv<W: Write>(w: W, r: &Report) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["table", "method", "row", "column", "value"])?;
    for me in &r.gini_errors.methods {
        c.write_record(["gini_n", &me.method, "", "", &me.n.to_string()])?;
        if let Some(v) = me.mean_abs_error {
            c.write_record(["gini_mean_abs_error", &me.method, "", "", &v.to_string()])?;
        }
        for (label, n) in ABS_LABELS.iter().zip(me.abs_counts) {
            c.write_record(["gini_abs_bin", &me.method, label, "", &n.to_string()])?;
        }
        for (label, n) in REL_LABELS.iter().zip(me.rel_counts) {
            c.write_record(["gini_rel_bin", &me.method, label, "", &n.to_string()])?;
        }
    }
    for d in &r.dominance {
        let m = &d.matrix;
        let table = format!("dominance_{}", format!("{:?}", m.criterion).to_lowercase());
        for (i, row) in m.entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let v = v.map_or_else(String::new, |x| x.to_string());
                c.write_record([table.as_str(), &d.method.to_string(), &m.models[i], &m.models[j], &v])?;
            }
        }
    }
    c.flush()?;
    Ok(())
}
