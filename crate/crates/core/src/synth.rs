//! Synthetic data: Weibull + truncated-normal income mixtures, and the
//! reduction of microdata to grouped shares (equivalisation, bottom and top
//! coding, person weights, weighted quantile groups).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouped::GroupedDataset;
use crate::measures::{weighted_gini, Microdata};
use crate::specfun::{normal_quantile_unchecked, std_normal_cdf};

/// Default sample size for mixture simulations.
pub const DEFAULT_MIXTURE_N: usize = 10_000;

/// `omega * Weibull(shape beta, scale alpha) + (1 - omega) * N(mu, sigma^2)`
/// truncated to positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureSpec {
    beta: f64,
    alpha: f64,
    omega: f64,
    mu: f64,
    sigma: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawMixture {
    beta: f64,
    alpha: f64,
    omega: f64,
    mu: f64,
    sigma: f64,
}

impl TryFrom<RawMixture> for MixtureSpec {
    type Error = Error;

    fn try_from(r: RawMixture) -> Result<Self> {
        MixtureSpec::new(r.beta, r.alpha, r.omega, r.mu, r.sigma)
    }
}

impl From<MixtureSpec> for RawMixture {
    fn from(m: MixtureSpec) -> Self {
        RawMixture {
            beta: m.beta,
            alpha: m.alpha,
            omega: m.omega,
            mu: m.mu,
            sigma: m.sigma,
        }
    }
}

/// Fitted cross-country income mixtures, listed as `(beta, mu, alpha, sigma, omega)`.
const PRESETS: [(f64, f64, f64, f64, f64); 6] = [
    (2.02, 5.24, 1.4, 6.27, 0.7),
    (1.79, 6.68, 1.68, 6.5, 0.73),
    (1.63, 8.29, 2.03, 7.05, 0.73),
    (1.38, 10.66, 2.76, 3.13, 0.82),
    (1.35, 11.77, 2.95, 2.18, 0.82),
    (1.25, 13.32, 3.15, 3.02, 0.84),
];

impl MixtureSpec {
    pub fn new(beta: f64, alpha: f64, omega: f64, mu: f64, sigma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(beta > 0.0 && beta.is_finite()) {
            problems.push(format!("beta = {beta} must be positive"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            problems.push(format!("alpha = {alpha} must be positive"));
        }
        if !(0.0..=1.0).contains(&omega) {
            problems.push(format!("omega = {omega} must lie in [0, 1]"));
        }
        if !mu.is_finite() {
            problems.push(format!("mu = {mu} must be finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            problems.push(format!("sigma = {sigma} must be positive"));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParameter(problems.join("; ")));
        }
        Ok(MixtureSpec {
            beta,
            alpha,
            omega,
            mu,
            sigma,
        })
    }

    /// The six built-in parameter sets, numbered from 1.
    pub fn preset(index: usize) -> Result<Self> {
        let (beta, mu, alpha, sigma, omega) = *index
            .checked_sub(1)
            .and_then(|i| PRESETS.get(i))
            .ok_or_else(|| Error::InvalidParameter(format!("preset {index} not in 1..=6")))?;
        Self::new(beta, alpha, omega, mu, sigma)
    }

    pub fn presets() -> Vec<Self> {
        (1..=PRESETS.len()).map(|i| Self::preset(i).expect("valid preset")).collect()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Mixture density at `x > 0`.
pub fn mixture_pdf(spec: &MixtureSpec, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("mixture_pdf", format!("x = {x} must be positive")));
    }
    let MixtureSpec {
        beta,
        alpha,
        omega,
        mu,
        sigma,
    } = *spec;
    let weibull = if omega > 0.0 {
        let z = x / alpha;
        beta / alpha * z.powf(beta - 1.0) * (-z.powf(beta)).exp()
    } else {
        0.0
    };
    let normal = if omega < 1.0 {
        let z = (x - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) / std_normal_cdf(mu / sigma)
    } else {
        0.0
    };
    Ok(omega * weibull + (1.0 - omega) * normal)
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draw `n` incomes (unit weights). Each draw picks the Weibull component
/// with probability `omega`, then inverts that component's CDF.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Microdata> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = spec.mu / spec.sigma;
    let mass = std_normal_cdf(ratio);
    let mut values = Vec::with_capacity(n);
    while values.len() < n {
        let pick: f64 = rng.random();
        let u = open_unit(&mut rng);
        let x = if pick < spec.omega {
            spec.alpha * (-(-u).ln_1p()).powf(1.0 / spec.beta)
        } else {
            // survival-function inversion of N(mu, sigma^2) restricted to x > 0:
            // Phi((mu - x) / sigma) = u Phi(mu / sigma)
            spec.mu - spec.sigma * normal_quantile_unchecked(u * mass)
        };
        if x > 0.0 && x.is_finite() {
            values.push(x);
        }
    }
    Microdata::unit_weights(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingPolicy {
    groups: usize,
    pub equivalise: bool,
    pub bottom_code: bool,
    pub top_code: bool,
}

impl GroupingPolicy {
    pub fn new(groups: usize, equivalise: bool, bottom_code: bool, top_code: bool) -> Result<Self> {
        if groups < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 groups, got {groups}")));
        }
        Ok(GroupingPolicy {
            groups,
            equivalise,
            bottom_code,
            top_code,
        })
    }

    /// Equal groups with no income processing.
    pub fn plain(groups: usize) -> Result<Self> {
        Self::new(groups, false, false, false)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }
}

/// Bottom-coding threshold as a fraction of the mean.
pub const BOTTOM_CODE_FRACTION: f64 = 0.01;
/// Top-coding threshold as a multiple of the median.
pub const TOP_CODE_MULTIPLE: f64 = 10.0;

fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * pairs.iter().map(|p| p.1).sum::<f64>();
    let mut cum = 0.0;
    for &(x, w) in &pairs {
        cum += w;
        if cum >= half {
            return x;
        }
    }
    pairs.last().map_or(f64::NAN, |p| p.0)
}

/// Group microdata into `policy.groups()` weighted quantile groups.
pub fn microdata_to_grouped(
    m: &Microdata,
    policy: GroupingPolicy,
    household_sizes: Option<&[f64]>,
) -> Result<GroupedDataset> {
    group_raw(m.values(), m.weights(), policy, household_sizes)
}

/// As [`microdata_to_grouped`], but accepts raw records: nonpositive or
/// non-finite incomes are dropped after equivalisation.
///
/// Steps, in order: divide income by the square root of household size
/// (when `policy.equivalise`); drop nonpositive incomes; raise incomes below
/// 1% of the weighted mean to that floor (when `policy.bottom_code`, mean
/// taken before coding); cap incomes above 10 times the weighted median
/// (when `policy.top_code`); multiply weights by household size (whenever
/// sizes are given). Coding thresholds use the input weights.
///
/// People are sorted by income (stable) and assigned wholly to the group in
/// which their cumulative weight starts, so a person straddling a cut goes
/// to the lower group. `u_j` are the realized cumulative weight shares and
/// empty groups are dropped.
pub fn group_raw(
    values: &[f64],
    weights: &[f64],
    policy: GroupingPolicy,
    household_sizes: Option<&[f64]>,
) -> Result<GroupedDataset> {
    if values.len() != weights.len() {
        return Err(Error::Validation(vec![format!(
            "{} incomes but {} weights",
            values.len(),
            weights.len()
        )]));
    }
    if let Some(sizes) = household_sizes {
        if sizes.len() != values.len() {
            return Err(Error::Validation(vec![format!(
                "{} incomes but {} household sizes",
                values.len(),
                sizes.len()
            )]));
        }
        if let Some(i) = sizes.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Validation(vec![format!("household size at index {i} is not positive")]));
        }
    } else if policy.equivalise {
        return Err(Error::Validation(vec!["equivalisation needs household sizes".into()]));
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::Validation(vec![format!("weight at index {i} is not positive")]));
    }

    let mut x = Vec::with_capacity(values.len());
    let mut w = Vec::with_capacity(values.len());
    let mut size = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let hs = household_sizes.map_or(1.0, |s| s[i]);
        let v = if policy.equivalise { values[i] / hs.sqrt() } else { values[i] };
        if v > 0.0 && v.is_finite() {
            x.push(v);
            w.push(weights[i]);
            size.push(hs);
        }
    }
    if x.is_empty() {
        return Err(Error::EmptyAfterFiltering);
    }

    if policy.bottom_code {
        let mean = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        let floor = BOTTOM_CODE_FRACTION * mean;
        for v in x.iter_mut() {
            *v = v.max(floor);
        }
    }
    if policy.top_code {
        let cap = TOP_CODE_MULTIPLE * weighted_median(&x, &w);
        for v in x.iter_mut() {
            *v = v.min(cap);
        }
    }
    if household_sizes.is_some() {
        for (wi, s) in w.iter_mut().zip(&size) {
            *wi *= s;
        }
    }

    let people = Microdata::new(x, w)?;
    let pairs = people.sorted_pairs();
    let total_w = people.total_weight();
    let total_income: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let jn = policy.groups;

    let mut group_w = vec![0.0; jn];
    let mut group_inc = vec![0.0; jn];
    let mut cum = 0.0;
    for &(xi, wi) in &pairs {
        let start = cum / total_w;
        // smallest j with start < (j + 1) / J
        let j = ((start * jn as f64).floor() as usize).min(jn - 1);
        group_w[j] += wi;
        group_inc[j] += xi * wi;
        cum += wi;
    }

    let (mut u, mut s) = (Vec::new(), Vec::new());
    let (mut cw, mut ci) = (0.0, 0.0);
    for j in 0..jn {
        if group_w[j] == 0.0 {
            continue;
        }
        cw += group_w[j];
        ci += group_inc[j];
        u.push(cw / total_w);
        s.push((ci / total_income).min(cw / total_w));
    }
    if u.len() < 2 {
        return Err(Error::Validation(vec![format!(
            "only {} non-empty group(s); need at least 2",
            u.len()
        )]));
    }
    let n = u.len();
    u[n - 1] = 1.0;
    s[n - 1] = 1.0;
    let gini = weighted_gini(&people).min(1.0 - f64::EPSILON);
    GroupedDataset::new("microdata", u, s, Some(people.weighted_mean()), Some(gini))
}
