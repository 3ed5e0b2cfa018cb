use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use lorenzfit::measures::{atkinson_mc, gini_with_fallback, sample_measures, sample_spec};
use lorenzfit::synth::{group_raw, microdata_to_grouped, sample_mixture};
use lorenzfit::{FamilySpec, GroupingPolicy, McConfig, Microdata, MixtureSpec};
use serde::Serialize;

use crate::fit::{method_name, AtkinsonCell};
use crate::io::{is_csv, num_cell, open_output, read_microdata, write_grouped, write_microdata_csv};
use crate::{check_epsilons, Format, GroupArgs, MeasuresArgs, SimulateArgs};

#[derive(Serialize)]
struct MicrodataFile<'a> {
    source: &'a str,
    seed: u64,
    n: usize,
    income: &'a [f64],
    weight: &'a [f64],
}

pub fn simulate(a: &SimulateArgs) -> Result<ExitCode> {
    let (source, m) = if let Some(family) = a.family {
        let spec = FamilySpec::new(family, a.params.clone().unwrap_or_default())?;
        let x = sample_spec(&spec, McConfig::new(a.n, a.seed)?)?;
        (spec.to_string(), Microdata::unit_weights(x)?)
    } else {
        let (label, mix) = match (&a.mixture, a.preset) {
            (Some(v), _) => {
                let &[beta, mu, alpha, sigma, omega] = v.as_slice() else {
                    bail!("--mixture takes 5 values beta,mu,alpha,sigma,omega, got {}", v.len());
                };
                ("mixture".to_string(), MixtureSpec::new(beta, alpha, omega, mu, sigma)?)
            }
            (None, Some(i)) => (format!("preset{i}"), MixtureSpec::preset(i)?),
            (None, None) => bail!("give one of --preset, --mixture or --family with --params"),
        };
        (label, sample_mixture(&mix, a.n, a.seed)?)
    };
    log::info!("simulated {} draws from {source} with seed {}", a.n, a.seed);

    // microdata goes to --output, or to stdout when nothing else is requested
    if a.output.is_some() || a.groups.is_none() {
        let mut w = open_output(a.output.as_deref())?;
        match a.format {
            Format::Csv => write_microdata_csv(&mut w, &m)?,
            Format::Json => {
                let file = MicrodataFile {
                    source: &source,
                    seed: a.seed,
                    n: m.len(),
                    income: m.values(),
                    weight: m.weights(),
                };
                serde_json::to_writer(&mut w, &file)?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
    }
    if let Some(j) = a.groups {
        let d = microdata_to_grouped(&m, GroupingPolicy::plain(j)?, None)?
            .with_id(format!("{source}-n{}-seed{}", a.n, a.seed));
        let path = a.grouped_output.as_deref();
        write_grouped(path, path.is_some_and(is_csv), &[d])?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn group(a: &GroupArgs) -> Result<ExitCode> {
    let rec = read_microdata(&a.input)?;
    let policy = GroupingPolicy::new(a.groups, a.equivalise, a.bottom_code, a.top_code)?;
    let id = a.id.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map_or_else(|| "microdata".into(), |s| s.to_string_lossy().into_owned())
    });
    let d = group_raw(&rec.income, &rec.weight, policy, rec.size.as_deref())
        .with_context(|| format!("cannot group {}", a.input.display()))?
        .with_id(id);
    if d.n_groups() < a.groups {
        log::warn!("{} of {} groups were empty and dropped", a.groups - d.n_groups(), a.groups);
    }
    write_grouped(a.output.as_deref(), a.format == Format::Csv, &[d])?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct MeasuresOut {
    source: String,
    gini: Option<f64>,
    gini_method: Option<String>,
    gini_mc_std_error: Option<f64>,
    gini_null_reason: Option<String>,
    atkinson: Vec<AtkinsonCell>,
    mean: Option<f64>,
    mean_null_reason: Option<String>,
}

pub fn measures(a: &MeasuresArgs) -> Result<ExitCode> {
    check_epsilons(&a.epsilon)?;
    let out = if let Some(path) = &a.input {
        let rec = read_microdata(path)?;
        let m = Microdata::new(rec.income, rec.weight)?;
        let s = sample_measures(&m, &a.epsilon)?;
        MeasuresOut {
            source: path.display().to_string(),
            gini: Some(s.gini),
            gini_method: Some("sample".into()),
            gini_mc_std_error: None,
            gini_null_reason: None,
            atkinson: s
                .atkinson
                .iter()
                .map(|&(epsilon, v)| AtkinsonCell {
                    epsilon,
                    value: Some(v),
                    null_reason: None,
                })
                .collect(),
            mean: Some(s.mean),
            mean_null_reason: None,
        }
    } else {
        let family = a.family.context("--family is required without --input")?;
        let spec = FamilySpec::new(family, a.params.clone().unwrap_or_default())?;
        let mc = a.mc.config()?;
        let (gini, gini_method, se, gnull) = match gini_with_fallback(&spec, mc) {
            Ok(g) => (Some(g.value), Some(method_name(g.method)), g.mc_std_error, None),
            Err(e) => (None, None, None, Some(e.code().to_string())),
        };
        let (mean, mnull) = match spec.mean() {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.code().to_string())),
        };
        MeasuresOut {
            source: spec.to_string(),
            gini,
            gini_method,
            gini_mc_std_error: se,
            gini_null_reason: gnull,
            atkinson: a
                .epsilon
                .iter()
                .map(|&epsilon| match atkinson_mc(&spec, epsilon, mc) {
                    Ok(v) => AtkinsonCell {
                        epsilon,
                        value: Some(v),
                        null_reason: None,
                    },
                    Err(e) => AtkinsonCell {
                        epsilon,
                        value: None,
                        null_reason: Some(e.code().into()),
                    },
                })
                .collect(),
            mean,
            mean_null_reason: mnull,
        }
    };
    let mut w = open_output(a.output.as_deref())?;
    match a.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out)?;
            w.write_all(b"\n")?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["measure", "epsilon", "value", "null_reason"])?;
            c.write_record(["gini", "", &num_cell(out.gini), out.gini_null_reason.as_deref().unwrap_or("")])?;
            for at in &out.atkinson {
                c.write_record([
                    "atkinson",
                    &at.epsilon.to_string(),
                    &num_cell(at.value),
                    at.null_reason.as_deref().unwrap_or(""),
                ])?;
            }
            c.write_record(["mean", "", &num_cell(out.mean), out.mean_null_reason.as_deref().unwrap_or("")])?;
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}
