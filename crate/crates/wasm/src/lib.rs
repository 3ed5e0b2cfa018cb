//! Browser bindings for the static demo in `www/`.
//!
//! Each exported function wraps a plain Rust function of the same name with a
//! `_impl` suffix, so the logic is testable on native targets.

use lorenzfit::estimate::fit;
use lorenzfit::measures::{gini_with_fallback, sample_measures};
use lorenzfit::synth::{microdata_to_grouped, sample_mixture};
use lorenzfit::{Family, FamilySpec, GroupedDataset, GroupingPolicy, McConfig, Method, MixtureSpec};
use wasm_bindgen::prelude::*;

const MC_N: usize = 200_000;

fn spec(family: &str, params: &[f64]) -> Result<FamilySpec, String> {
    let f: Family = family.parse().map_err(|e: lorenzfit::Error| e.to_string())?;
    FamilySpec::new(f, params.to_vec()).map_err(|e| e.to_string())
}

/// Lorenz ordinates at `points` equally spaced proportions in `[0, 1]`.
pub fn lorenz_curve_impl(family: &str, params: &[f64], points: usize) -> Result<Vec<f64>, String> {
    let s = spec(family, params)?;
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| s.lorenz(i as f64 / n as f64).map_err(|e| e.to_string()))
        .collect()
}

pub fn gini_impl(family: &str, params: &[f64]) -> Result<f64, String> {
    let s = spec(family, params)?;
    let cfg = McConfig::new(MC_N, 1).map_err(|e| e.to_string())?;
    gini_with_fallback(&s, cfg).map(|g| g.value).map_err(|e| e.to_string())
}

/// Fitted distribution for the demo's share table.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct FitSummary {
    family: String,
    params: Vec<f64>,
    gini: f64,
    lower_bound: f64,
    objective: f64,
    curve: Vec<f64>,
}

#[wasm_bindgen]
impl FitSummary {
    #[wasm_bindgen(getter)]
    pub fn family(&self) -> String {
        self.family.clone()
    }
    /// Parameters with the scale left at its placeholder when no mean is given.
    #[wasm_bindgen(getter)]
    pub fn params(&self) -> Vec<f64> {
        self.params.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn gini(&self) -> f64 {
        self.gini
    }
    #[wasm_bindgen(getter)]
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
    #[wasm_bindgen(getter)]
    pub fn objective(&self) -> f64 {
        self.objective
    }
    /// Fitted Lorenz curve at 101 points.
    #[wasm_bindgen(getter)]
    pub fn curve(&self) -> Vec<f64> {
        self.curve.clone()
    }
}

/// Fit `family` to non-cumulative income shares of equal-sized groups.
/// A non-finite or nonpositive `mean` means none; GMM needs one.
pub fn fit_shares_impl(shares: &[f64], mean: f64, family: &str, gmm: bool) -> Result<FitSummary, String> {
    let f: Family = family.parse().map_err(|e: lorenzfit::Error| e.to_string())?;
    let total: f64 = shares.iter().sum();
    if !(total > 0.0) {
        return Err("shares must have a positive sum".into());
    }
    let norm: Vec<f64> = shares.iter().map(|s| s / total).collect();
    let mean = (mean.is_finite() && mean > 0.0).then_some(mean);
    let d = GroupedDataset::from_shares("demo", &norm, None, mean, None).map_err(|e| e.to_string())?;
    let method = if gmm { Method::Gmm } else { Method::Nls };
    let r = fit(f, &d, method).map_err(|e| e.to_string())?;
    let cfg = McConfig::new(MC_N, 1).map_err(|e| e.to_string())?;
    let gini = gini_with_fallback(&r.spec, cfg).map_err(|e| e.to_string())?.value;
    let curve = (0..=100)
        .map(|i| r.spec.lorenz(i as f64 / 100.0).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(FitSummary {
        family: f.to_string(),
        params: r.spec.params().to_vec(),
        gini,
        lower_bound: d.lower_bound_gini(),
        objective: r.objective,
        curve,
    })
}

/// Draws from a mixture preset, summarised for plotting.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct MixtureSample {
    edges: Vec<f64>,
    counts: Vec<f64>,
    shares: Vec<f64>,
    gini: f64,
}

#[wasm_bindgen]
impl MixtureSample {
    /// `bins + 1` histogram edges on `[0, q99]`.
    #[wasm_bindgen(getter)]
    pub fn edges(&self) -> Vec<f64> {
        self.edges.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn counts(&self) -> Vec<f64> {
        self.counts.clone()
    }
    /// Non-cumulative income shares of the requested groups.
    #[wasm_bindgen(getter)]
    pub fn shares(&self) -> Vec<f64> {
        self.shares.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn gini(&self) -> f64 {
        self.gini
    }
}

pub fn sample_preset_impl(preset: usize, n: usize, seed: u64, bins: usize, groups: usize) -> Result<MixtureSample, String> {
    let mix = MixtureSpec::preset(preset).map_err(|e| e.to_string())?;
    let m = sample_mixture(&mix, n, seed).map_err(|e| e.to_string())?;
    let gini = sample_measures(&m, &[]).map_err(|e| e.to_string())?.gini;
    let mut x = m.values().to_vec();
    x.sort_by(f64::total_cmp);
    let top = x[((x.len() - 1) as f64 * 0.99) as usize];
    let bins = bins.max(1);
    let width = top / bins as f64;
    let mut counts = vec![0.0; bins];
    for &v in x.iter().take_while(|&&v| v <= top) {
        counts[((v / width) as usize).min(bins - 1)] += 1.0;
    }
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let policy = GroupingPolicy::plain(groups).map_err(|e| e.to_string())?;
    let d = microdata_to_grouped(&m, policy, None).map_err(|e| e.to_string())?;
    Ok(MixtureSample {
        edges,
        counts,
        shares: d.income_shares(),
        gini,
    })
}

#[wasm_bindgen]
pub fn lorenz_curve(family: &str, params: &[f64], points: usize) -> Result<Vec<f64>, JsError> {
    lorenz_curve_impl(family, params, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gini(family: &str, params: &[f64]) -> Result<f64, JsError> {
    gini_impl(family, params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_shares(shares: &[f64], mean: f64, family: &str, gmm: bool) -> Result<FitSummary, JsError> {
    fit_shares_impl(shares, mean, family, gmm).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sample_preset(preset: usize, n: usize, seed: u64, bins: usize, groups: usize) -> Result<MixtureSample, JsError> {
    sample_preset_impl(preset, n, seed, bins, groups).map_err(|e| JsError::new(&e))
}
