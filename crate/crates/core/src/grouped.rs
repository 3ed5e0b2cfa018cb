//! Grouped income data: cumulative population shares `u_j` and income shares
//! `s_j`, i.e. ordinates of the Lorenz curve, plus optional mean income and
//! survey Gini.
//!
//! Interchange formats:
//!
//! * JSON lines, one record per line:
//!   `{"id": "ZMB-2004", "u": [0.2, ..., 1.0], "s": [0.04, ..., 1.0], "mean": 812.0, "gini": 0.55}`.
//!   `mean` and `gini` may be omitted or `null`.
//! * CSV with a header row `id,share1,...,shareJ[,mean][,gini]`. Shares are
//!   non-cumulative and groups are equal-sized; empty trailing share cells
//!   allow rows with different group counts in one file.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the `s_j <= u_j` check for shares produced in floating point.
const DIAGONAL_SLACK: f64 = 1e-12;
/// Slack on the end points `u_J = s_J = 1` before snapping them to exactly one.
const ENDPOINT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct GroupedDataset {
    id: String,
    u: Vec<f64>,
    s: Vec<f64>,
    mean: Option<f64>,
    survey_gini: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    id: String,
    u: Vec<f64>,
    s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gini: Option<f64>,
}

impl TryFrom<RawDataset> for GroupedDataset {
    type Error = Error;

    fn try_from(r: RawDataset) -> Result<Self> {
        GroupedDataset::new(r.id, r.u, r.s, r.mean, r.gini)
    }
}

impl From<GroupedDataset> for RawDataset {
    fn from(d: GroupedDataset) -> Self {
        RawDataset {
            id: d.id,
            u: d.u,
            s: d.s,
            mean: d.mean,
            gini: d.survey_gini,
        }
    }
}

impl GroupedDataset {
    /// Validate and build a dataset from cumulative shares. Every violated
    /// invariant is reported, not just the first.
    pub fn new(
        id: impl Into<String>,
        mut u: Vec<f64>,
        mut s: Vec<f64>,
        mean: Option<f64>,
        survey_gini: Option<f64>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if u.len() != s.len() {
            problems.push(format!("u has {} entries but s has {}", u.len(), s.len()));
        }
        if u.len() < 2 {
            problems.push(format!("need at least 2 groups, got {}", u.len()));
        }
        if u.iter().chain(&s).any(|v| !v.is_finite()) {
            problems.push("non-finite share".to_string());
        }
        if problems.is_empty() {
            let last = u.len() - 1;
            if (u[last] - 1.0).abs() > ENDPOINT_SLACK {
                problems.push(format!("u_J = {} must equal 1", u[last]));
            } else {
                u[last] = 1.0;
            }
            if (s[last] - 1.0).abs() > ENDPOINT_SLACK {
                problems.push(format!("s_J = {} must equal 1", s[last]));
            } else {
                s[last] = 1.0;
            }
            if !(u[0] > 0.0) {
                problems.push(format!("u_1 = {} must be positive", u[0]));
            }
            if s[0] < 0.0 {
                problems.push(format!("s_1 = {} is negative", s[0]));
            }
            for j in 1..u.len() {
                if !(u[j] > u[j - 1]) {
                    problems.push(format!("u not strictly increasing at j = {}", j + 1));
                }
                if s[j] < s[j - 1] {
                    problems.push(format!("s decreasing at j = {}", j + 1));
                }
            }
            for j in 0..u.len() {
                if s[j] > u[j] + DIAGONAL_SLACK {
                    problems.push(format!(
                        "s_{} = {} exceeds u_{} = {} (above the egalitarian line)",
                        j + 1,
                        s[j],
                        j + 1,
                        u[j]
                    ));
                }
            }
        }
        if let Some(m) = mean {
            if !(m > 0.0 && m.is_finite()) {
                problems.push(format!("mean = {m} must be positive"));
            }
        }
        if let Some(g) = survey_gini {
            if !(0.0..1.0).contains(&g) {
                problems.push(format!("gini = {g} must lie in [0, 1)"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(GroupedDataset {
            id: id.into(),
            u,
            s,
            mean,
            survey_gini,
        })
    }

    /// Build from non-cumulative income shares. `proportions` defaults to
    /// equal-sized groups. Shares must sum to one within 1e-6 and are then
    /// renormalized.
    pub fn from_shares(
        id: impl Into<String>,
        shares: &[f64],
        proportions: Option<&[f64]>,
        mean: Option<f64>,
        survey_gini: Option<f64>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        let j = shares.len();
        if j < 2 {
            return Err(Error::Validation(vec![format!("need at least 2 shares, got {j}")]));
        }
        for (i, &c) in shares.iter().enumerate() {
            if !(c >= 0.0) || !c.is_finite() {
                problems.push(format!("share {} = {c} is negative or not finite", i + 1));
            }
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            problems.push(format!("shares sum to {total}, expected 1"));
        }
        let props: Vec<f64> = match proportions {
            Some(p) => {
                if p.len() != j {
                    problems.push(format!("{} proportions for {j} shares", p.len()));
                }
                let tp: f64 = p.iter().sum();
                if (tp - 1.0).abs() > 1e-6 {
                    problems.push(format!("proportions sum to {tp}, expected 1"));
                }
                p.iter().map(|v| v / tp).collect()
            }
            None => vec![1.0 / j as f64; j],
        };
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let u = cumulate(&props);
        let s = cumulate(&shares.iter().map(|c| c / total).collect::<Vec<_>>());
        GroupedDataset::new(id, u, s, mean, survey_gini)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean
    }

    pub fn survey_gini(&self) -> Option<f64> {
        self.survey_gini
    }

    pub fn n_groups(&self) -> usize {
        self.u.len()
    }

    pub fn with_mean(mut self, mean: Option<f64>) -> Result<Self> {
        if let Some(m) = mean {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Validation(vec![format!("mean = {m} must be positive")]));
            }
        }
        self.mean = mean;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Non-cumulative income shares `c_j = s_j - s_{j-1}`.
    pub fn income_shares(&self) -> Vec<f64> {
        differences(&self.s)
    }

    /// Non-cumulative population proportions `p_j = u_j - u_{j-1}`.
    pub fn proportions(&self) -> Vec<f64> {
        differences(&self.u)
    }

    /// Gini of the linearly interpolated Lorenz curve, which treats incomes as
    /// equal within each group and so bounds the true Gini from below:
    /// `sum_j (s_j - s_{j-1})(u_j + u_{j-1}) - 1`.
    pub fn lower_bound_gini(&self) -> f64 {
        let mut acc = 0.0;
        let (mut u_prev, mut s_prev) = (0.0, 0.0);
        for (&u, &s) in self.u.iter().zip(&self.s) {
            acc += (s - s_prev) * (u + u_prev);
            u_prev = u;
            s_prev = s;
        }
        (acc - 1.0).max(0.0)
    }

    /// Piecewise-linear Lorenz curve through `(0, 0)` and the observed points.
    pub fn empirical_lorenz(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain("empirical_lorenz", format!("u = {u} must lie in [0, 1]")));
        }
        let (mut u0, mut s0) = (0.0, 0.0);
        for (&u1, &s1) in self.u.iter().zip(&self.s) {
            if u <= u1 {
                if u == u1 {
                    return Ok(s1);
                }
                return Ok(s0 + (s1 - s0) * (u - u0) / (u1 - u0));
            }
            u0 = u1;
            s0 = s1;
        }
        Ok(1.0)
    }
}

fn cumulate(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = v
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn differences(v: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    v.iter()
        .map(|&x| {
            let d = x - prev;
            prev = x;
            d
        })
        .collect()
}

/// A parsed input record, or the reason it was rejected.
pub type RecordResult = std::result::Result<GroupedDataset, (String, Error)>;

/// Read JSON-lines records. Blank lines are skipped; a malformed record
/// yields an `Err` entry carrying its line label, without stopping the read.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RecordResult>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let label = format!("line {}", lineno + 1);
        // well-formed records that break an invariant report a validation error
        let rec = match serde_json::from_str::<RawDataset>(&line) {
            Ok(r) => {
                let id = r.id.clone();
                GroupedDataset::try_from(r).map_err(|e| (id, e))
            }
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|x| x.as_str()).map(str::to_string))
                    .unwrap_or(label);
                Err((id, Error::Parse(e.to_string())))
            }
        };
        out.push(rec);
    }
    Ok(out)
}

/// Read the CSV form (`id,share1..shareJ[,pop1..popJ][,mean][,gini]`).
/// Population proportions default to equal groups.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RecordResult>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = col("id").ok_or_else(|| Error::Parse("CSV header lacks an 'id' column".into()))?;
    let mean_col = col("mean");
    let gini_col = col("gini");
    let numbered = |prefix: &str| {
        let mut cols: Vec<(usize, usize)> = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                let h = h.to_ascii_lowercase();
                h.strip_prefix(prefix)
                    .and_then(|k| k.parse::<usize>().ok())
                    .map(|k| (k, i))
            })
            .collect();
        cols.sort_unstable();
        cols
    };
    let share_cols = numbered("share");
    let pop_cols = numbered("pop");
    if share_cols.len() < 2 {
        return Err(Error::Parse("CSV header needs at least share1 and share2".into()));
    }

    let mut out = Vec::new();
    for (rowno, row) in rdr.records().enumerate() {
        let label = format!("row {}", rowno + 2);
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.push(Err((label, Error::from(e))));
                continue;
            }
        };
        let id = row.get(id_col).unwrap_or("").to_string();
        let id = if id.is_empty() { label } else { id };
        let parse_opt = |c: Option<usize>| -> std::result::Result<Option<f64>, Error> {
            match c.and_then(|c| row.get(c)).filter(|v| !v.is_empty()) {
                None => Ok(None),
                Some(v) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("'{v}' is not a number"))),
            }
        };
        let rec = (|| {
            let mut shares = Vec::new();
            for &(_, c) in &share_cols {
                match parse_opt(Some(c))? {
                    Some(v) => shares.push(v),
                    None => break,
                }
            }
            let mut pops = Vec::new();
            for &(_, c) in &pop_cols {
                match parse_opt(Some(c))? {
                    Some(v) => pops.push(v),
                    None => break,
                }
            }
            let mean = parse_opt(mean_col)?;
            let gini = parse_opt(gini_col)?;
            let pops = (!pops.is_empty()).then_some(pops);
            GroupedDataset::from_shares(id.clone(), &shares, pops.as_deref(), mean, gini)
        })();
        out.push(rec.map_err(|e| (id, e)));
    }
    Ok(out)
}

/// Write datasets in the CSV form read by [`read_csv`], padding rows with
/// fewer groups with empty cells.
pub fn write_csv<W: Write>(writer: W, data: &[GroupedDataset]) -> Result<()> {
    let jmax = data.iter().map(|d| d.n_groups()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((1..=jmax).map(|k| format!("share{k}")));
    header.extend((1..=jmax).map(|k| format!("pop{k}")));
    header.extend(["mean".to_string(), "gini".to_string()]);
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for d in data {
        let pad = |v: Vec<f64>| {
            let mut out: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
            out.resize(jmax, String::new());
            out
        };
        let mut row = vec![d.id().to_string()];
        row.extend(pad(d.income_shares()));
        row.extend(pad(d.proportions()));
        row.push(cell(d.mean()));
        row.push(cell(d.survey_gini()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
