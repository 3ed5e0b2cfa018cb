//! Gini and Atkinson indices: Monte Carlo for a fitted distribution and
//! weighted sample versions for microdata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{FamilySpec, GiniMethod, GiniValue};
use crate::error::{Error, Result};

/// Number of batches behind the Monte Carlo standard error.
pub const MC_BATCHES: usize = 20;
pub const MC_MIN_N: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    n: usize,
    seed: u64,
}

impl McConfig {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < MC_MIN_N {
            return Err(Error::InvalidParameter(format!(
                "Monte Carlo sample size {n} is below {MC_MIN_N}"
            )));
        }
        Ok(McConfig { n, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n: 1_000_000,
            seed: 0,
        }
    }
}

/// Incomes with person weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Microdata {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Microdata {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if values.is_empty() {
            problems.push("no observations".to_string());
        }
        if values.len() != weights.len() {
            problems.push(format!("{} values but {} weights", values.len(), weights.len()));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            problems.push(format!("value {} at index {i} is not positive", values[i]));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            problems.push(format!("weight {} at index {i} is not positive", weights[i]));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Microdata { values, weights })
    }

    pub fn unit_weights(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weighted_mean(&self) -> f64 {
        let sw: f64 = self.values.iter().zip(&self.weights).map(|(x, w)| x * w).sum();
        sw / self.total_weight()
    }

    /// `(value, weight)` pairs sorted by value; the sort is stable so tied
    /// records keep their input order.
    pub fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.values.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }
}

/// Weighted Gini of sorted `(value, weight)` pairs:
/// `sum_i w_i x_i (2 C_{i-1} + w_i - W) / (W sum_i w_i x_i)` with `C` the
/// cumulative weight. Reduces to the usual sorted-sample formula for unit weights.
fn gini_sorted(pairs: &[(f64, f64)]) -> f64 {
    let total_w: f64 = pairs.iter().map(|p| p.1).sum();
    let total_wx: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let mut cum = 0.0;
    let mut acc = 0.0;
    for &(x, w) in pairs {
        acc += w * x * (2.0 * cum + w - total_w);
        cum += w;
    }
    (acc / (total_w * total_wx)).max(0.0)
}

fn gini_unit_sorted(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let total: f64 = x.iter().sum();
    let acc: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| v * (2.0 * i as f64 + 1.0 - n))
        .sum();
    (acc / (n * total)).max(0.0)
}

/// Weighted Atkinson index with inequality aversion `eps >= 0`.
fn atkinson_weighted(values: &[f64], weights: &[f64], eps: f64) -> f64 {
    let total_w: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total_w;
    if eps == 0.0 {
        return 0.0;
    }
    let value = if eps == 1.0 {
        let mean_log = values.iter().zip(weights).map(|(x, w)| w * x.ln()).sum::<f64>() / total_w;
        1.0 - (mean_log - mean.ln()).exp()
    } else {
        let e = 1.0 - eps;
        let m = values.iter().zip(weights).map(|(x, w)| w * (x / mean).powf(e)).sum::<f64>() / total_w;
        1.0 - m.powf(1.0 / e)
    };
    value.clamp(0.0, 1.0)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::domain("atkinson", format!("epsilon = {eps} must be nonnegative")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMeasures {
    pub gini: f64,
    /// `(epsilon, A_epsilon)` in input order.
    pub atkinson: Vec<(f64, f64)>,
    pub mean: f64,
}

/// Weighted Gini, Atkinson indices and mean of microdata.
pub fn sample_measures(m: &Microdata, epsilons: &[f64]) -> Result<SampleMeasures> {
    for &e in epsilons {
        check_epsilon(e)?;
    }
    let gini = gini_sorted(&m.sorted_pairs());
    let atkinson = epsilons
        .iter()
        .map(|&e| (e, atkinson_weighted(m.values(), m.weights(), e)))
        .collect();
    Ok(SampleMeasures {
        gini,
        atkinson,
        mean: m.weighted_mean(),
    })
}

pub fn weighted_gini(m: &Microdata) -> f64 {
    gini_sorted(&m.sorted_pairs())
}

fn batch_sizes(n: usize) -> impl Iterator<Item = usize> {
    let base = n / MC_BATCHES;
    let extra = n % MC_BATCHES;
    (0..MC_BATCHES).map(move |b| base + usize::from(b < extra))
}

/// Inverse-transform draws in `MC_BATCHES` batches; batch `b` uses ChaCha
/// stream `b` under `seed`, so batches are independent and reproducible.
fn sample_batches(spec: &FamilySpec, cfg: McConfig) -> Result<Vec<Vec<f64>>> {
    batch_sizes(cfg.n)
        .enumerate()
        .map(|(b, size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            (0..size)
                .map(|_| {
                    let u = loop {
                        let u: f64 = rng.random();
                        if u > 0.0 {
                            break u;
                        }
                    };
                    spec.quantile(u)
                })
                .collect()
        })
        .collect()
}

/// Draw `cfg.n` variates from `spec` by inverse transform.
pub fn sample_spec(spec: &FamilySpec, cfg: McConfig) -> Result<Vec<f64>> {
    Ok(sample_batches(spec, cfg)?.concat())
}

/// Monte Carlo Gini with a batch-means standard error.
pub fn gini_mc(spec: &FamilySpec, cfg: McConfig) -> Result<GiniValue> {
    if !spec.mean_exists() {
        return Err(Error::Existence {
            what: "Gini index (finite mean)",
            spec: spec.to_string(),
        });
    }
    let mut batches = sample_batches(spec, cfg)?;
    let mut batch_ginis = Vec::with_capacity(MC_BATCHES);
    for b in batches.iter_mut() {
        b.sort_by(f64::total_cmp);
        batch_ginis.push(gini_unit_sorted(b));
    }
    let mut all = batches.concat();
    all.sort_by(f64::total_cmp);
    let value = gini_unit_sorted(&all);

    let k = MC_BATCHES as f64;
    let bar = batch_ginis.iter().sum::<f64>() / k;
    let var = batch_ginis.iter().map(|g| (g - bar).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(GiniValue {
        value,
        method: GiniMethod::MonteCarlo,
        mc_std_error: Some((var / k).sqrt()),
    })
}

/// Monte Carlo Atkinson index `A_eps` of `spec`.
pub fn atkinson_mc(spec: &FamilySpec, eps: f64, cfg: McConfig) -> Result<f64> {
    check_epsilon(eps)?;
    if !spec.mean_exists() || !spec.moment_exists(1.0 - eps) {
        return Err(Error::Existence {
            what: "Atkinson index",
            spec: format!("{spec} at epsilon {eps}"),
        });
    }
    let x = sample_spec(spec, cfg)?;
    let w = vec![1.0; x.len()];
    Ok(atkinson_weighted(&x, &w, eps))
}

/// Gini from the closed form, falling back to Monte Carlo when the GB2
/// series does not converge.
pub fn gini_with_fallback(spec: &FamilySpec, cfg: McConfig) -> Result<GiniValue> {
    match spec.gini_closed() {
        Err(Error::SeriesNotConverged { terms }) => {
            log::info!("3F2 series for {spec} did not converge in {terms} terms; using Monte Carlo");
            gini_mc(spec, cfg)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brute_force_gini(x: &[f64], w: &[f64]) -> f64 {
        let tw: f64 = w.iter().sum();
        let mean = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / tw;
        let mut acc = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                acc += w[i] * w[j] * (x[i] - x[j]).abs();
            }
        }
        acc / (2.0 * tw * tw * mean)
    }

    #[test]
    fn constant_incomes() {
        let m = Microdata::unit_weights(vec![4.0; 7]).unwrap();
        let r = sample_measures(&m, &[0.5, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(r.gini, 0.0, epsilon = 1e-15);
        for (_, a) in r.atkinson {
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-15);
        }
        assert_eq!(r.mean, 4.0);
    }

    #[test]
    fn two_person_limit() {
        for delta in [1e-3, 1e-6, 1e-9] {
            let x = [delta, 1.0];
            let m = Microdata::unit_weights(x.to_vec()).unwrap();
            let g = weighted_gini(&m);
            assert_abs_diff_eq!(g, brute_force_gini(&x, &[1.0, 1.0]), epsilon = 1e-14);
            assert!((g - 0.5).abs() < 2.0 * delta);
        }
    }

    #[test]
    fn weights_match_brute_force_and_duplication() {
        let x = [3.0, 1.0, 7.5, 2.0, 2.0, 10.0];
        let w = [1.0, 2.0, 0.5, 3.0, 1.0, 1.5];
        let m = Microdata::new(x.to_vec(), w.to_vec()).unwrap();
        assert_abs_diff_eq!(weighted_gini(&m), brute_force_gini(&x, &w), epsilon = 1e-14);

        let dup = Microdata::new(vec![1.0, 5.0, 2.0], vec![1.0, 2.0, 1.0]).unwrap();
        let copies = Microdata::unit_weights(vec![1.0, 5.0, 5.0, 2.0]).unwrap();
        let a = sample_measures(&dup, &[0.5, 1.0, 1.5]).unwrap();
        let b = sample_measures(&copies, &[0.5, 1.0, 1.5]).unwrap();
        assert_abs_diff_eq!(a.gini, b.gini, epsilon = 1e-15);
        for (x, y) in a.atkinson.iter().zip(&b.atkinson) {
            assert_abs_diff_eq!(x.1, y.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn atkinson_properties() {
        let m = Microdata::new(vec![1.0, 2.0, 4.0, 9.0], vec![1.0, 1.0, 2.0, 1.0]).unwrap();
        let r = sample_measures(&m, &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(r.atkinson[0].1, 0.0);
        for w in r.atkinson.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        let scaled = Microdata::new(m.values().iter().map(|v| v * 37.0).collect(), m.weights().to_vec()).unwrap();
        let s = sample_measures(&scaled, &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_abs_diff_eq!(s.gini, r.gini, epsilon = 1e-14);
        for (x, y) in s.atkinson.iter().zip(&r.atkinson) {
            assert_abs_diff_eq!(x.1, y.1, epsilon = 1e-14);
        }
        assert!(sample_measures(&m, &[-1.0]).is_err());
    }

    #[test]
    fn microdata_validation() {
        assert!(Microdata::new(vec![1.0, -2.0], vec![1.0, 1.0]).is_err());
        assert!(Microdata::new(vec![1.0], vec![0.0]).is_err());
        assert!(Microdata::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(McConfig::new(999, 1).is_err());
    }

    #[test]
    fn mc_lognormal_and_determinism() {
        let spec = FamilySpec::lognormal(0.0, 1.0).unwrap();
        let cfg = McConfig::new(200_000, 7).unwrap();
        let g = gini_mc(&spec, cfg).unwrap();
        assert_abs_diff_eq!(g.value, 0.520_499_877_813_046_5, epsilon = 0.003);
        let again = gini_mc(&spec, cfg).unwrap();
        assert_eq!(g.value.to_bits(), again.value.to_bits());
        assert_eq!(g.mc_std_error, again.mc_std_error);
        let a = atkinson_mc(&spec, 1.0, cfg).unwrap();
        assert_abs_diff_eq!(a, 1.0 - (-0.5f64).exp(), epsilon = 0.003);
        assert_eq!(atkinson_mc(&spec, 0.0, cfg).unwrap(), 0.0);
    }

    #[test]
    fn mc_near_degenerate_fisk() {
        let spec = FamilySpec::fisk(50.0, 1.0).unwrap();
        let g = gini_mc(&spec, McConfig::new(100_000, 3).unwrap()).unwrap();
        let se = g.mc_std_error.unwrap();
        assert!((g.value - 0.02).abs() <= 3.0 * se, "{} +- {se}", g.value);
        let a = atkinson_mc(&FamilySpec::fisk(100.0, 1.0).unwrap(), 1.5, McConfig::new(10_000, 3).unwrap()).unwrap();
        assert!(a < 0.01);
    }

    #[test]
    fn mc_existence() {
        let spec = FamilySpec::fisk(0.8, 1.0).unwrap();
        assert!(gini_mc(&spec, McConfig::new(1000, 1).unwrap()).is_err());
        // E[X^{1-eps}] needs p > (eps - 1)/a
        let d = FamilySpec::dagum(2.0, 1.0, 0.2).unwrap();
        assert!(atkinson_mc(&d, 1.5, McConfig::new(1000, 1).unwrap()).is_err());
    }
}
