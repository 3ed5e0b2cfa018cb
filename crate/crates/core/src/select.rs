//! Goodness of fit and model comparison: least-squares AIC/BIC, weighted
//! SSR, pairwise dominance matrices and binned Gini error reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{quadratic_form, FitResult, WeightingMatrix};

const RSS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofScores {
    pub rss: f64,
    pub aic: f64,
    pub bic: f64,
    pub wssr: Option<f64>,
    pub k: usize,
    pub n: usize,
    /// Set when a zero RSS was floored at 1e-300 to keep the logarithm finite.
    pub rss_floored: bool,
}

/// Least-squares information criteria with `n = J - 1` shares:
/// `aic = n ln(rss/n) + 2k`, `bic = n ln(rss/n) + k ln n`.
pub fn gof_scores(fit: &FitResult, omega: Option<&WeightingMatrix>) -> Result<GofScores> {
    let n = fit.residuals.len();
    if n == 0 || fit.k == 0 {
        return Err(Error::InvalidParameter("fit has no residuals or no parameters".into()));
    }
    let raw = fit.rss();
    let rss_floored = raw < RSS_FLOOR;
    let rss = raw.max(RSS_FLOOR);
    let nf = n as f64;
    let kf = fit.k as f64;
    let base = nf * (rss / nf).ln();
    Ok(GofScores {
        rss: raw,
        aic: base + 2.0 * kf,
        bic: base + kf * nf.ln(),
        wssr: omega.map(|w| quadratic_form(&fit.residuals, &w.omega_inv)),
        k: fit.k,
        n,
        rss_floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    Rss,
    Wssr,
}

impl Criterion {
    pub fn value(self, s: &GofScores) -> Option<f64> {
        match self {
            Criterion::Aic => Some(s.aic),
            Criterion::Bic => Some(s.bic),
            Criterion::Rss => Some(s.rss),
            Criterion::Wssr => s.wssr,
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "rss" => Ok(Criterion::Rss),
            "wssr" => Ok(Criterion::Wssr),
            other => Err(Error::Parse(format!("unknown criterion '{other}'"))),
        }
    }
}

/// `entries[r][c]`: share of datasets, among those where both models were
/// scored, on which model `r` has a strictly lower criterion than model `c`.
/// The diagonal is 1; `None` marks pairs never scored together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceMatrix {
    pub models: Vec<String>,
    pub criterion: Criterion,
    pub entries: Vec<Vec<Option<f64>>>,
    pub comparisons: Vec<Vec<usize>>,
}

/// `scores[d][m]` is the score of model `m` on dataset `d`, if it was fitted.
pub fn dominance_matrix(
    models: &[String],
    scores: &[Vec<Option<GofScores>>],
    criterion: Criterion,
) -> DominanceMatrix {
    let m = models.len();
    let mut wins = vec![vec![0usize; m]; m];
    let mut both = vec![vec![0usize; m]; m];
    for row in scores {
        let vals: Vec<Option<f64>> = (0..m)
            .map(|i| row.get(i).and_then(|s| s.as_ref()).and_then(|s| criterion.value(s)))
            .collect();
        for r in 0..m {
            for c in 0..m {
                if let (Some(a), Some(b)) = (vals[r], vals[c]) {
                    both[r][c] += 1;
                    if a < b {
                        wins[r][c] += 1;
                    }
                }
            }
        }
    }
    let entries = (0..m)
        .map(|r| {
            (0..m)
                .map(|c| {
                    if r == c {
                        Some(1.0)
                    } else if both[r][c] == 0 {
                        None
                    } else {
                        Some(wins[r][c] as f64 / both[r][c] as f64)
                    }
                })
                .collect()
        })
        .collect();
    DominanceMatrix {
        models: models.to_vec(),
        criterion,
        entries,
        comparisons: both,
    }
}

/// Upper edges of the absolute-error bins `[0, .01), [.01, .02), [.02, .05), [.05, .1), [.1, inf)`.
pub const ABS_EDGES: [f64; 4] = [0.01, 0.02, 0.05, 0.1];
/// Upper edges of the relative-error bins in percent.
pub const REL_EDGES_PCT: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
pub const ABS_LABELS: [&str; 5] = ["[0, 0.01)", "[0.01, 0.02)", "[0.02, 0.05)", "[0.05, 0.1)", "[0.1, )"];
pub const REL_LABELS: [&str; 5] = ["[0%, 1%)", "[1%, 2%)", "[2%, 5%)", "[5%, 10%)", "[10%, )"];

fn bin(v: f64, edges: &[f64; 4]) -> usize {
    edges.iter().position(|&e| v < e).unwrap_or(edges.len())
}

pub fn abs_bin(err: f64) -> usize {
    bin(err, &ABS_EDGES)
}

pub fn rel_bin_pct(err_pct: f64) -> usize {
    bin(err_pct, &REL_EDGES_PCT)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodErrors {
    pub method: String,
    /// Datasets with both an estimate and a benchmark.
    pub n: usize,
    pub mean_abs_error: Option<f64>,
    pub abs_counts: [usize; 5],
    pub rel_counts: [usize; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub methods: Vec<MethodErrors>,
    pub datasets: usize,
}

/// Bin `|g_hat - g|` and `|g_hat - g| / g` per method. `estimates[d][m]`
/// is method `m`'s Gini on dataset `d`; `benchmark[d]` is the survey Gini.
pub fn error_report(methods: &[String], estimates: &[Vec<Option<f64>>], benchmark: &[f64]) -> Result<ErrorReport> {
    if estimates.len() != benchmark.len() {
        return Err(Error::InvalidParameter(format!(
            "{} estimate rows for {} benchmarks",
            estimates.len(),
            benchmark.len()
        )));
    }
    let mut out: Vec<MethodErrors> = methods
        .iter()
        .map(|m| MethodErrors {
            method: m.clone(),
            n: 0,
            mean_abs_error: None,
            abs_counts: [0; 5],
            rel_counts: [0; 5],
        })
        .collect();
    let mut sums = vec![0.0; methods.len()];
    for (row, &g) in estimates.iter().zip(benchmark) {
        for (i, est) in row.iter().enumerate().take(methods.len()) {
            let Some(e) = est.filter(|v| v.is_finite()) else {
                continue;
            };
            let err = (e - g).abs();
            let me = &mut out[i];
            me.n += 1;
            me.abs_counts[abs_bin(err)] += 1;
            me.rel_counts[rel_bin_pct(100.0 * err / g)] += 1;
            sums[i] += err;
        }
    }
    for (me, s) in out.iter_mut().zip(sums) {
        if me.n > 0 {
            me.mean_abs_error = Some(s / me.n as f64);
        }
    }
    Ok(ErrorReport {
        methods: out,
        datasets: benchmark.len(),
    })
}
