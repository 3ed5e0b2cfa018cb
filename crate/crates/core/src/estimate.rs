//! Fitting Lorenz curves of the GB2 family to grouped shares by nonlinear
//! least squares and by two-step GMM.
//!
//! Shares carry no information on the scale, so both estimators work on the
//! shape parameters only; the scale is recovered afterwards from the sample
//! mean when one is available.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::distributions::{Family, FamilySpec, GiniValue};
use crate::error::{Error, Result};
use crate::grouped::GroupedDataset;
use crate::optim::{self, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nls,
    Gmm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Nls => "nls",
            Method::Gmm => "gmm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Fitted distribution. The scale is a placeholder (1, or `mu = 0` for the
    /// lognormal) unless `scale_recovered` is set.
    pub spec: FamilySpec,
    pub method: Method,
    /// RSS for NLS, the weighted quadratic form for GMM.
    pub objective: f64,
    /// `L(u_j) - s_j` for `j = 1..J-1`.
    pub residuals: Vec<f64>,
    pub starts_tried: usize,
    pub converged: bool,
    /// Number of estimated shape parameters.
    pub k: usize,
    pub scale_recovered: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn rss(&self) -> f64 {
        sum_squares(&self.residuals)
    }

    pub fn gini(&self) -> Result<GiniValue> {
        self.spec.gini_closed()
    }
}

/// Bounds of the interval searched for the second shape parameter when
/// building starting values.
const ROOT_UPPER: f64 = 1e3;
const ROOT_OFFSET: f64 = 1e-6;
/// Gini anchors are clamped away from 0 and 1 so the one-shape inversions stay finite.
const ANCHOR_MIN: f64 = 1e-3;
const ANCHOR_MAX: f64 = 0.999;

fn anchor_gini(d: &GroupedDataset) -> f64 {
    d.survey_gini()
        .unwrap_or_else(|| d.lower_bound_gini())
        .clamp(ANCHOR_MIN, ANCHOR_MAX)
}

/// Starting shape vectors (in [`Family::shape_names`] order) derived from the
/// Gini anchor: the survey Gini when present, else the lower-bound Gini.
pub fn starting_values(family: Family, d: &GroupedDataset) -> Result<Vec<Vec<f64>>> {
    starting_values_for_gini(family, anchor_gini(d))
}

pub fn starting_values_for_gini(family: Family, g: f64) -> Result<Vec<Vec<f64>>> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::domain("starting_values", format!("Gini anchor {g} outside (0, 1)")));
    }
    let starts = match family {
        Family::Fisk => vec![vec![1.0 / g]],
        Family::Weibull => vec![vec![std::f64::consts::LN_2 / -(-g).ln_1p()]],
        Family::Lognormal => {
            vec![vec![std::f64::consts::SQRT_2 * crate::specfun::std_normal_quantile((1.0 + g) / 2.0)?]]
        }
        Family::B2 | Family::SinghMaddala | Family::Dagum => two_shape_grid(family, g),
        Family::Gb2 => {
            let mut out = Vec::with_capacity(60);
            for (a, p, q) in two_shape_grid(Family::B2, g).iter().map(|v| (1.0, v[0], v[1])) {
                out.push(vec![a, p, q]);
            }
            for (a, p, q) in two_shape_grid(Family::SinghMaddala, g).iter().map(|v| (v[0], 1.0, v[1])) {
                out.push(vec![a, p, q]);
            }
            for (a, p, q) in two_shape_grid(Family::Dagum, g).iter().map(|v| (v[0], v[1], 1.0)) {
                out.push(vec![a, p, q]);
            }
            out
        }
    };
    if !starts.is_empty() {
        return Ok(starts);
    }
    let fallback = diagonal_start(family, g);
    if fallback.is_empty() {
        return Err(Error::NoStartingValues(format!("{family} at Gini {g}")));
    }
    log::info!("{family}: Gini {g} is out of reach of the grid; using diagonal starts");
    Ok(fallback)
}

/// Upper end of the diagonal search, far past the grid so Ginis near 0
/// (and near 1) become reachable.
const DIAGONAL_UPPER: f64 = 1e8;

/// Starts for anchors the grid cannot reach: two-shape families solve
/// `G(t, t) = g`; GB2 takes the nested Fisk point and the sub-family diagonals.
fn diagonal_start(family: Family, g: f64) -> Vec<Vec<f64>> {
    let solve = |fam: Family| -> Option<f64> {
        let gini_at = |t: f64| {
            FamilySpec::from_shapes(fam, &[t, t], 1.0)
                .and_then(|s| s.gini_closed())
                .map_or(f64::NAN, |v| v.value)
        };
        // every diagonal needs t > 1 for a finite mean
        solve_bracketed(|t| gini_at(t) - g, 1.0 + ROOT_OFFSET, DIAGONAL_UPPER)
    };
    match family {
        Family::B2 | Family::SinghMaddala | Family::Dagum => solve(family).map(|t| vec![t, t]).into_iter().collect(),
        Family::Gb2 => {
            let mut out = vec![vec![1.0 / g, 1.0, 1.0]];
            out.extend(solve(Family::B2).map(|t| vec![1.0, t, t]));
            out.extend(solve(Family::SinghMaddala).map(|t| vec![t, 1.0, t]));
            out.extend(solve(Family::Dagum).map(|t| vec![t, t, 1.0]));
            out
        }
        _ => Vec::new(),
    }
}

/// For each integer `theta1` in 1..=20, solve `G(theta1, theta2) = g` for `theta2`.
fn two_shape_grid(family: Family, g: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for t1 in 1..=20 {
        let t1 = t1 as f64;
        // existence bound on theta2 for a finite mean
        let lower = match family {
            Family::B2 => 1.0,
            Family::SinghMaddala => 1.0 / t1,
            Family::Dagum => {
                if t1 <= 1.0 {
                    continue;
                }
                0.0
            }
            _ => unreachable!("two-shape families only"),
        };
        let gini_at = |t2: f64| -> f64 {
            FamilySpec::from_shapes(family, &[t1, t2], 1.0)
                .and_then(|s| s.gini_closed())
                .map(|v| v.value)
                .unwrap_or(f64::NAN)
        };
        match solve_bracketed(|t2| gini_at(t2) - g, lower + ROOT_OFFSET, ROOT_UPPER) {
            Some(t2) => out.push(vec![t1, t2]),
            None => log::debug!("{family}: no root for theta1 = {t1} at Gini {g}"),
        }
    }
    out
}

/// First root of `f` on `[lo, hi]`: a log-spaced scan for a sign change,
/// then bisection to 1e-10 relative width.
fn solve_bracketed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Option<f64> {
    const SCAN: usize = 64;
    let ratio = (hi / lo).ln() / SCAN as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=SCAN {
        let x1 = if i == SCAN { hi } else { lo * (ratio * i as f64).exp() };
        let f1 = f(x1);
        if f0 == 0.0 {
            return Some(x0);
        }
        if f0.is_finite() && f1.is_finite() && (f0 < 0.0) != (f1 < 0.0) {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if b - a <= 1e-10 * b.abs().max(1.0) {
                    break;
                }
            }
            return Some(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

fn sum_squares(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// `sum_i sum_j r_i A_ij r_j`, accumulated so that `A = I` reproduces
/// [`FitResult::rss`] bit for bit.
pub fn quadratic_form(r: &[f64], a: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..r.len() {
        let mut row = 0.0;
        for j in 0..r.len() {
            row += r[i] * a[(i, j)] * r[j];
        }
        total += row;
    }
    total
}

/// Residuals `L(u_j) - s_j` for `j < J`.
pub fn lorenz_residuals(spec: &FamilySpec, d: &GroupedDataset) -> Result<Vec<f64>> {
    let j = d.n_groups();
    d.u()[..j - 1]
        .iter()
        .zip(&d.s()[..j - 1])
        .map(|(&u, &s)| Ok(spec.lorenz(u)? - s))
        .collect()
}

fn shapes_spec(family: Family, log_shapes: &[f64]) -> Option<FamilySpec> {
    let shapes: Vec<f64> = log_shapes.iter().map(|v| v.exp()).collect();
    FamilySpec::from_shapes(family, &shapes, 1.0).ok()
}

fn residuals_at(family: Family, d: &GroupedDataset, log_shapes: &[f64]) -> Option<Vec<f64>> {
    let spec = shapes_spec(family, log_shapes)?;
    if !spec.mean_exists() {
        return None;
    }
    lorenz_residuals(&spec, d).ok()
}

fn check_dimensions(family: Family, d: &GroupedDataset) -> Result<()> {
    let k = family.n_shapes();
    if d.n_groups() < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "{family} has {k} shape parameters but dataset '{}' has only {} groups",
            d.id(),
            d.n_groups()
        )));
    }
    Ok(())
}

/// NLS over every documented starting value, keeping the lowest RSS.
pub fn nls_fit(family: Family, d: &GroupedDataset) -> Result<FitResult> {
    check_dimensions(family, d)?;
    let starts = starting_values(family, d)?;
    nls_fit_from(family, d, &starts)
}

/// NLS from the given starting shape vectors.
pub fn nls_fit_from(family: Family, d: &GroupedDataset, starts: &[Vec<f64>]) -> Result<FitResult> {
    check_dimensions(family, d)?;
    let objective = |x: &[f64]| residuals_at(family, d, x).map_or(f64::INFINITY, |r| sum_squares(&r));

    let mut best: Option<(optim::Outcome, usize)> = None;
    for (i, start) in starts.iter().enumerate() {
        if start.len() != family.n_shapes() || start.iter().any(|v| !(*v > 0.0)) {
            log::warn!("{family}: skipping malformed start {start:?}");
            continue;
        }
        let x0: Vec<f64> = start.iter().map(|v| v.ln()).collect();
        let Some(out) = optim::minimize(objective, &x0, Settings::default()) else {
            log::debug!("{family}: start {i} lies outside the existence region");
            continue;
        };
        if !out.f.is_finite() {
            continue;
        }
        match &best {
            Some((b, _)) if out.f >= b.f => {
                if out.f == b.f {
                    log::debug!("{family}: start {i} ties the best RSS; keeping the earlier one");
                }
            }
            _ => best = Some((out, i)),
        }
    }

    let Some((out, idx)) = best else {
        return Err(Error::Convergence {
            func: "nls_fit",
            detail: format!("all {} starts failed for {family} on '{}'", starts.len(), d.id()),
        });
    };
    log::debug!("{family}: best start {idx}, rss {:e} after {} iterations", out.f, out.iterations);
    let spec = shapes_spec(family, &out.x).ok_or_else(|| Error::Convergence {
        func: "nls_fit",
        detail: "optimum left the parameter space".into(),
    })?;
    let residuals = lorenz_residuals(&spec, d)?;
    let mut fit = FitResult {
        objective: sum_squares(&residuals),
        spec,
        method: Method::Nls,
        residuals,
        starts_tried: starts.len(),
        converged: out.converged,
        k: family.n_shapes(),
        scale_recovered: false,
        warnings: Vec::new(),
    };
    if let Some(mean) = d.mean() {
        recover_scale(&mut fit, mean);
    }
    Ok(fit)
}

fn recover_scale(fit: &mut FitResult, mean: f64) {
    match solve_scale(&fit.spec, mean).and_then(|b| fit.spec.with_scale(b)) {
        Ok(spec) => {
            fit.spec = spec;
            fit.scale_recovered = true;
        }
        Err(e) => fit.warnings.push(format!("scale not recovered: {e}")),
    }
}

/// Scale at which the mean of `spec` equals `sample_mean`. For the lognormal
/// this is `mu = ln(mean) - sigma^2 / 2`.
pub fn solve_scale(spec: &FamilySpec, sample_mean: f64) -> Result<f64> {
    if !(sample_mean > 0.0 && sample_mean.is_finite()) {
        return Err(Error::domain("solve_scale", format!("sample mean {sample_mean} must be positive")));
    }
    if spec.family() == Family::Lognormal {
        let sigma = spec.params()[1];
        return Ok(sample_mean.ln() - 0.5 * sigma * sigma);
    }
    let unit = spec.with_scale(1.0)?.mean()?;
    Ok(sample_mean / unit)
}

/// Asymptotic covariance structure of the sample Lorenz ordinates.
#[derive(Debug, Clone)]
pub struct WeightingMatrix {
    /// Fitted group limits `h_j = F^-1(u_j)`, `j < J`.
    pub h: Vec<f64>,
    pub mu: f64,
    pub mu2: f64,
    /// Partial second moments `int_0^{h_j} x^2 dF`.
    pub mu2_partial: Vec<f64>,
    pub w: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// Ridge added to `omega` before inversion (0 when none was needed).
    pub ridge: f64,
    pub condition: f64,
    /// `(omega + ridge I)^-1`.
    pub omega_inv: DMatrix<f64>,
}

const MAX_CONDITION: f64 = 1e12;

/// Build `W`, `Psi` and `Omega = Psi W Psi'` at a fitted spec (scale included).
/// Only the proportions `u` are taken from `d`.
pub fn weighting_matrix(spec: &FamilySpec, d: &GroupedDataset) -> Result<WeightingMatrix> {
    if !spec.moment_exists(2.0) {
        return Err(Error::Existence {
            what: "second moment (GMM weighting matrix)",
            spec: spec.to_string(),
        });
    }
    let jj = d.n_groups();
    let m = jj - 1;
    let u = d.u();
    // Omega is a function of the parameters: fitted Lorenz ordinates, not observed shares
    let s: Vec<f64> = u[..m].iter().map(|&x| spec.lorenz(x)).collect::<Result<_>>()?;
    let mu = spec.mean()?;
    let mu2 = spec.moment(2.0)?;
    let h: Vec<f64> = u[..m].iter().map(|&x| spec.quantile(x)).collect::<Result<_>>()?;
    let mu2_partial: Vec<f64> = h
        .iter()
        .map(|&x| Ok(mu2 * spec.incomplete_moment_cdf(2.0, x)?))
        .collect::<Result<_>>()?;

    let mut w = DMatrix::<f64>::zeros(jj, jj);
    for i in 0..m {
        let lead = u[i] * h[i] - mu * s[i];
        for j in i..m {
            let v = mu2_partial[i] + lead * (h[j] - u[j] * h[j] + mu * s[j]) - h[i] * mu * s[i];
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        // h_J -> infinity cancels analytically
        let v = mu2_partial[i] + lead * mu - h[i] * mu * s[i];
        w[(i, m)] = v;
        w[(m, i)] = v;
    }
    w[(m, m)] = mu2 - mu * mu;

    let mut psi = DMatrix::<f64>::zeros(m, jj);
    for i in 0..m {
        psi[(i, i)] = 1.0 / mu;
        psi[(i, m)] = -s[i] / mu;
    }
    let omega = &psi * &w * psi.transpose();
    let omega = (&omega + omega.transpose()) * 0.5;

    let eig = SymmetricEigen::new(omega.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let mut ridge = 0.0;
    if !(condition <= MAX_CONDITION) {
        ridge = 1e-10 * omega.trace() / m as f64;
        log::warn!(
            "weighting matrix for '{}' is ill-conditioned (condition {condition:e}); adding ridge {ridge:e}",
            d.id()
        );
    }
    let regularized = &omega + DMatrix::<f64>::identity(m, m) * ridge;
    let omega_inv = regularized
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| regularized.try_inverse())
        .ok_or_else(|| Error::Convergence {
            func: "weighting_matrix",
            detail: "Omega is singular".into(),
        })?;

    Ok(WeightingMatrix {
        h,
        mu,
        mu2,
        mu2_partial,
        w,
        psi,
        omega,
        ridge,
        condition,
        omega_inv,
    })
}

/// Minimize `M' A M` over the shapes of `family`, starting at `start`.
fn weighted_fit(
    family: Family,
    d: &GroupedDataset,
    a: &DMatrix<f64>,
    start: &[f64],
) -> Option<optim::Outcome> {
    let objective = |x: &[f64]| residuals_at(family, d, x).map_or(f64::INFINITY, |r| quadratic_form(&r, a));
    let x0: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    optim::minimize(objective, &x0, Settings::default())
}

/// Two-step GMM: NLS first stage with scale recovery, `Omega` at that fit,
/// then the `Omega^-1`-weighted second stage with the scale held fixed. Falls
/// back to the first-stage NLS fit, with a warning, when the second stage fails.
pub fn gmm_fit(family: Family, d: &GroupedDataset) -> Result<FitResult> {
    let mean = d.mean().ok_or(Error::MeanRequired)?;
    let first = nls_fit(family, d)?;
    gmm_second_stage(first, d, mean)
}

/// Second stage of [`gmm_fit`] from a given first-stage fit.
pub fn gmm_second_stage(mut first: FitResult, d: &GroupedDataset, mean: f64) -> Result<FitResult> {
    let family = first.spec.family();
    if !first.scale_recovered {
        let b = solve_scale(&first.spec, mean)?;
        first.spec = first.spec.with_scale(b)?;
        first.scale_recovered = true;
    }
    let wm = weighting_matrix(&first.spec, d)?;
    let start_obj = quadratic_form(&first.residuals, &wm.omega_inv);

    let fallback = |mut first: FitResult, why: String| {
        log::warn!("GMM second stage for {family} on '{}' failed ({why}); using NLS", d.id());
        first.warnings.push(format!("GMM second stage failed ({why}); NLS result retained"));
        Ok(first)
    };

    let Some(out) = weighted_fit(family, d, &wm.omega_inv, &first.spec.shapes()) else {
        return fallback(first, "no finite objective at the first-stage estimate".into());
    };
    if !out.converged {
        return fallback(first, "optimizer did not converge".into());
    }
    let shapes: Vec<f64> = out.x.iter().map(|v| v.exp()).collect();
    let spec = match FamilySpec::from_shapes(family, &shapes, first.spec.scale()) {
        Ok(s) if s.mean_exists() => s,
        _ => return fallback(first, "estimate left the existence region".into()),
    };
    // new shapes need their own scale to reproduce the mean
    let spec = match solve_scale(&spec, mean).and_then(|b| spec.with_scale(b)) {
        Ok(s) => s,
        Err(e) => return fallback(first, format!("scale recovery failed: {e}")),
    };
    let residuals = lorenz_residuals(&spec, d)?;
    let objective = quadratic_form(&residuals, &wm.omega_inv);
    if objective > start_obj {
        return fallback(first, "weighted objective increased".into());
    }
    let mut warnings = first.warnings;
    if wm.ridge > 0.0 {
        warnings.push(format!("weighting matrix regularized with ridge {:e}", wm.ridge));
    }
    Ok(FitResult {
        spec,
        method: Method::Gmm,
        objective,
        residuals,
        starts_tried: first.starts_tried,
        converged: true,
        k: first.k,
        scale_recovered: true,
        warnings,
    })
}

/// Dispatch on the estimation method.
pub fn fit(family: Family, d: &GroupedDataset, method: Method) -> Result<FitResult> {
    match method {
        Method::Nls => nls_fit(family, d),
        Method::Gmm => gmm_fit(family, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::assert_abs_diff_eq;

    fn deciles(spec: &FamilySpec, mean: Option<f64>) -> GroupedDataset {
        let u: Vec<f64> = (1..=10).map(|j| j as f64 / 10.0).collect();
        let s: Vec<f64> = u.iter().map(|&x| spec.lorenz(x).unwrap()).collect();
        GroupedDataset::new("gen", u, s, mean, None).unwrap()
    }

    #[test]
    fn one_shape_starts() {
        assert_abs_diff_eq!(starting_values_for_gini(Family::Fisk, 0.5).unwrap()[0][0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(starting_values_for_gini(Family::Weibull, 0.5).unwrap()[0][0], 1.0, epsilon = 1e-14);
        let sigma = starting_values_for_gini(Family::Lognormal, 0.520_499_877_813_046_5).unwrap()[0][0];
        assert_abs_diff_eq!(sigma, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn singh_maddala_root_matches_dense_scan() {
        let starts = starting_values_for_gini(Family::SinghMaddala, 0.3).unwrap();
        let q = starts.iter().find(|v| v[0] == 2.0).unwrap()[1];
        let g = |q: f64| FamilySpec::singh_maddala(2.0, 1.0, q).unwrap().gini_closed().unwrap().value;
        // dense scan oracle
        let mut best = (f64::INFINITY, 0.0);
        let mut x = 0.5 + 1e-6;
        while x < 50.0 {
            let e = (g(x) - 0.3).abs();
            if e < best.0 {
                best = (e, x);
            }
            x += 1e-4;
        }
        assert!((q - best.1).abs() < 2e-4, "{q} vs {}", best.1);
        assert_abs_diff_eq!(g(q), 0.3, epsilon = 1e-9);
    }

    #[test]
    fn grid_sizes() {
        let g = 0.35;
        for fam in [Family::B2, Family::SinghMaddala, Family::Dagum] {
            let s = starting_values_for_gini(fam, g).unwrap();
            assert!(!s.is_empty() && s.len() <= 20, "{fam}: {}", s.len());
            for v in &s {
                let gv = FamilySpec::from_shapes(fam, v, 1.0).unwrap().gini_closed().unwrap().value;
                assert_abs_diff_eq!(gv, g, epsilon = 1e-8);
            }
        }
        assert!(starting_values_for_gini(Family::Gb2, g).unwrap().len() <= 60);
        // beyond even the diagonal search
        assert!(matches!(
            starting_values_for_gini(Family::B2, 1e-7),
            Err(Error::NoStartingValues(_))
        ));
    }

    #[test]
    fn nls_zero_noise_lognormal() {
        let d = deciles(&FamilySpec::lognormal(0.0, 0.8).unwrap(), None);
        let fit = nls_fit(Family::Lognormal, &d).unwrap();
        assert_abs_diff_eq!(fit.spec.params()[1], 0.8, epsilon = 1e-4);
        assert!(fit.objective <= 1e-12);
        assert_eq!(fit.residuals.len(), 9);
        assert_eq!(fit.k, 1);
    }

    #[test]
    fn nls_zero_noise_fisk() {
        let d = deciles(&FamilySpec::fisk(2.0, 3.0).unwrap(), None);
        let fit = nls_fit(Family::Fisk, &d).unwrap();
        assert_abs_diff_eq!(fit.spec.params()[0], 2.0, epsilon = 1e-4);
    }

    #[test]
    fn gb2_nests_singh_maddala() {
        let sm = FamilySpec::singh_maddala(2.0, 1.0, 1.5).unwrap();
        let d = deciles(&sm, None);
        let fit = nls_fit(Family::Gb2, &d).unwrap();
        let g = fit.gini().unwrap().value;
        assert_abs_diff_eq!(g, sm.gini_closed().unwrap().value, epsilon = 1e-4);
    }

    #[test]
    fn multi_start_beats_each_start() {
        let spec = FamilySpec::dagum(3.0, 1.0, 0.7).unwrap();
        let d = deciles(&spec, None);
        let starts = starting_values(Family::Dagum, &d).unwrap();
        let all = nls_fit_from(Family::Dagum, &d, &starts).unwrap();
        for s in starts.iter().step_by(5) {
            let one = nls_fit_from(Family::Dagum, &d, std::slice::from_ref(s)).unwrap();
            assert!(all.objective <= one.objective);
        }
    }

    #[test]
    fn solve_scale_examples() {
        let w = FamilySpec::weibull(1.0, 3.0).unwrap();
        assert_abs_diff_eq!(solve_scale(&w, 5.0).unwrap(), 5.0, epsilon = 1e-12);
        let ln = FamilySpec::lognormal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(solve_scale(&ln, std::f64::consts::E).unwrap(), 0.5, epsilon = 1e-15);

        let g = FamilySpec::gb2(2.0, 1.0, 1.5, 2.5).unwrap();
        let b = solve_scale(&g, 10.0).unwrap();
        let scaled = g.with_scale(b).unwrap();
        let m = quad::half_line(|x| x * scaled.pdf(x).unwrap());
        assert_abs_diff_eq!(m, 10.0, epsilon = 1e-7);
    }

    #[test]
    fn weighting_matrix_structure() {
        let spec = FamilySpec::lognormal(0.0, 1.0).unwrap();
        let d = deciles(&spec, None);
        let wm = weighting_matrix(&spec, &d).unwrap();
        assert_eq!(wm.omega.nrows(), 9);
        assert_eq!(wm.psi.shape(), (9, 10));
        let asym = (&wm.omega - wm.omega.transpose()).abs().max();
        assert!(asym <= 1e-12);
        let min_eig = SymmetricEigen::new(wm.omega.clone()).eigenvalues.min();
        assert!(min_eig >= -1e-10);
        let var = spec.moment(2.0).unwrap() - spec.mean().unwrap().powi(2);
        assert_abs_diff_eq!(wm.w[(9, 9)], var, epsilon = 1e-12);
    }

    #[test]
    fn weighting_matrix_two_groups() {
        let spec = FamilySpec::weibull(1.3, 2.0).unwrap();
        let d = GroupedDataset::new("two", vec![0.5, 1.0], vec![spec.lorenz(0.5).unwrap(), 1.0], None, None)
            .unwrap();
        let wm = weighting_matrix(&spec, &d).unwrap();
        let psi = [1.0 / wm.mu, -d.s()[0] / wm.mu];
        let mut direct = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                direct += psi[i] * wm.w[(i, j)] * psi[j];
            }
        }
        assert_abs_diff_eq!(wm.omega[(0, 0)], direct, epsilon = 1e-14);
        assert!(direct >= 0.0);
    }

    #[test]
    fn weighting_matrix_needs_second_moment() {
        let spec = FamilySpec::fisk(1.5, 1.0).unwrap();
        let d = deciles(&spec, None);
        assert!(matches!(weighting_matrix(&spec, &d), Err(Error::Existence { .. })));
    }

    #[test]
    fn identity_weight_reproduces_rss() {
        let r = [0.013, -0.002, 1e-7, -0.4, 0.25];
        let id = DMatrix::<f64>::identity(5, 5);
        assert_eq!(quadratic_form(&r, &id), sum_squares(&r));
    }

    #[test]
    fn gmm_zero_noise_fixed_point() {
        let spec = FamilySpec::lognormal(0.0, 0.8).unwrap();
        let d = deciles(&spec, Some(0.32f64.exp()));
        let nls = nls_fit(Family::Lognormal, &d).unwrap();
        let gmm = gmm_fit(Family::Lognormal, &d).unwrap();
        assert_eq!(gmm.method, Method::Gmm);
        assert_abs_diff_eq!(gmm.spec.params()[1], 0.8, epsilon = 1e-3);
        assert_abs_diff_eq!(gmm.spec.params()[1], nls.spec.params()[1], epsilon = 1e-3);
        assert_abs_diff_eq!(gmm.spec.params()[0], 0.0, epsilon = 1e-3);
    }

    #[test]
    fn gmm_requires_mean() {
        let d = deciles(&FamilySpec::lognormal(0.0, 0.8).unwrap(), None);
        let err = gmm_fit(Family::Lognormal, &d).unwrap_err();
        assert_eq!(err.to_string(), "mean required for GMM");
    }

    #[test]
    fn gmm_scale_matches_mean_after_shapes_move() {
        let shares = [0.04, 0.08, 0.13, 0.20, 0.55];
        let d = GroupedDataset::from_shares("z", &shares, None, Some(512.0), Some(0.52)).unwrap();
        let nls = nls_fit(Family::SinghMaddala, &d).unwrap();
        let gmm = gmm_fit(Family::SinghMaddala, &d).unwrap();
        assert!((gmm.spec.shapes()[0] - nls.spec.shapes()[0]).abs() > 1e-3);
        assert_abs_diff_eq!(nls.spec.mean().unwrap(), 512.0, epsilon = 1e-6);
        assert_abs_diff_eq!(gmm.spec.mean().unwrap(), 512.0, epsilon = 1e-6);
    }

    #[test]
    fn nls_ignores_units() {
        let spec = FamilySpec::singh_maddala(2.4, 1.0, 1.3).unwrap();
        let dollars = deciles(&spec, Some(25_000.0));
        let thousands = dollars.clone().with_mean(Some(25.0)).unwrap();
        let a = nls_fit(Family::SinghMaddala, &dollars).unwrap();
        let b = nls_fit(Family::SinghMaddala, &thousands).unwrap();
        assert_eq!(a.shapes_for_test(), b.shapes_for_test());
        assert_eq!(a.objective, b.objective);
        assert_abs_diff_eq!(a.spec.scale() / b.spec.scale(), 1000.0, epsilon = 1e-9);
    }

    impl FitResult {
        fn shapes_for_test(&self) -> Vec<f64> {
            self.spec.shapes()
        }
    }

    #[test]
    fn diagonal_starts_reach_small_ginis() {
        for fam in [Family::B2, Family::SinghMaddala, Family::Dagum] {
            let starts = starting_values_for_gini(fam, 1e-3).unwrap();
            assert_eq!(starts.len(), 1);
            let g = FamilySpec::from_shapes(fam, &starts[0], 1.0).unwrap().gini_closed().unwrap().value;
            assert!((g - 1e-3).abs() < 1e-9, "{fam} {:?}: {g}", starts[0]);
        }
        // GB2: nested Fisk point, then the B2, SM and Dagum diagonals
        let gb2 = starting_values_for_gini(Family::Gb2, 1e-3).unwrap();
        assert_eq!(gb2.len(), 4);
        assert_eq!(gb2[0], vec![1000.0, 1.0, 1.0]);
        let sm = &starting_values_for_gini(Family::SinghMaddala, 1e-3).unwrap()[0];
        assert_eq!(gb2[2], vec![sm[0], 1.0, sm[1]]);
    }
}
