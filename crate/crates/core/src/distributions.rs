//! The GB2 family and the members nested in it: Beta 2, Singh-Maddala,
//! Dagum, Fisk, plus the lognormal (a limiting case) and the Weibull.
//!
//! Every member exposes its cdf, quantile, Lorenz curve, raw moments, the
//! k-th incomplete-moment distribution and the Gini index. Lorenz curves and
//! Gini indices never read the scale parameter, so they are exactly
//! scale-free.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{
    hyp3f2_unit, inc_beta_unchecked, inc_gamma_unchecked, inv_inc_beta_unchecked,
    ln_beta_unchecked, ln_gamma_unchecked, normal_quantile_unchecked, std_normal_cdf,
    SeriesControl,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "gb2")]
    Gb2,
    #[serde(rename = "b2")]
    B2,
    #[serde(rename = "sm")]
    SinghMaddala,
    #[serde(rename = "dagum")]
    Dagum,
    #[serde(rename = "ln")]
    Lognormal,
    #[serde(rename = "fisk")]
    Fisk,
    #[serde(rename = "weibull")]
    Weibull,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Gb2,
        Family::B2,
        Family::SinghMaddala,
        Family::Dagum,
        Family::Lognormal,
        Family::Fisk,
        Family::Weibull,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Gb2 => "gb2",
            Family::B2 => "b2",
            Family::SinghMaddala => "sm",
            Family::Dagum => "dagum",
            Family::Lognormal => "ln",
            Family::Fisk => "fisk",
            Family::Weibull => "weibull",
        }
    }

    /// Parameter names in storage order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Gb2 => &["a", "b", "p", "q"],
            Family::B2 => &["b", "p", "q"],
            Family::SinghMaddala => &["a", "b", "q"],
            Family::Dagum => &["a", "b", "p"],
            Family::Lognormal => &["mu", "sigma"],
            Family::Fisk => &["a", "b"],
            Family::Weibull => &["a", "b"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Index of the scale parameter (`b`, or `mu` for the lognormal).
    pub fn scale_index(self) -> usize {
        match self {
            Family::Gb2 | Family::SinghMaddala | Family::Dagum | Family::Fisk | Family::Weibull => 1,
            Family::B2 | Family::Lognormal => 0,
        }
    }

    pub fn n_shapes(self) -> usize {
        self.n_params() - 1
    }

    pub fn shape_names(self) -> Vec<&'static str> {
        let si = self.scale_index();
        self.param_names()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != si)
            .map(|(_, n)| *n)
            .collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gb2" => Ok(Family::Gb2),
            "b2" | "beta2" => Ok(Family::B2),
            "sm" | "singh-maddala" => Ok(Family::SinghMaddala),
            "dagum" => Ok(Family::Dagum),
            "ln" | "lognormal" => Ok(Family::Lognormal),
            "fisk" => Ok(Family::Fisk),
            "weibull" => Ok(Family::Weibull),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// A family tag together with its full parameter vector (see
/// [`Family::param_names`] for the order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct FamilySpec {
    family: Family,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    family: Family,
    params: Vec<f64>,
}

impl TryFrom<RawSpec> for FamilySpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        FamilySpec::new(raw.family, raw.params)
    }
}

impl From<FamilySpec> for RawSpec {
    fn from(s: FamilySpec) -> Self {
        RawSpec {
            family: s.family,
            params: s.params,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, (n, v)) in self.family.param_names().iter().zip(&self.params).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, ")")
    }
}

/// How a Gini value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GiniMethod {
    ClosedForm,
    Hypergeometric,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniValue {
    pub value: f64,
    pub method: GiniMethod,
    pub mc_std_error: Option<f64>,
}

impl FamilySpec {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        if params.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                params.len()
            )));
        }
        for (i, (&v, name)) in params.iter().zip(family.param_names()).enumerate() {
            let free = family == Family::Lognormal && i == 0;
            if !v.is_finite() || (!free && v <= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{family}: {name} = {v} must be {}",
                    if free { "finite" } else { "positive and finite" }
                )));
            }
        }
        Ok(FamilySpec { family, params })
    }

    pub fn gb2(a: f64, b: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Family::Gb2, vec![a, b, p, q])
    }

    pub fn b2(b: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Family::B2, vec![b, p, q])
    }

    pub fn singh_maddala(a: f64, b: f64, q: f64) -> Result<Self> {
        Self::new(Family::SinghMaddala, vec![a, b, q])
    }

    pub fn dagum(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::new(Family::Dagum, vec![a, b, p])
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Lognormal, vec![mu, sigma])
    }

    pub fn fisk(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Fisk, vec![a, b])
    }

    pub fn weibull(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Weibull, vec![a, b])
    }

    /// Build a spec from shape parameters (in [`Family::shape_names`] order)
    /// and a scale.
    pub fn from_shapes(family: Family, shapes: &[f64], scale: f64) -> Result<Self> {
        if shapes.len() != family.n_shapes() {
            return Err(Error::InvalidParameter(format!(
                "{family} has {} shape parameters, got {}",
                family.n_shapes(),
                shapes.len()
            )));
        }
        let mut params = shapes.to_vec();
        params.insert(family.scale_index(), scale);
        Self::new(family, params)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn scale(&self) -> f64 {
        self.params[self.family.scale_index()]
    }

    pub fn shapes(&self) -> Vec<f64> {
        let si = self.family.scale_index();
        self.params
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != si)
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params[self.family.scale_index()] = scale;
        Self::new(self.family, params)
    }

    /// `(a, b, p, q)` for the members nested in GB2.
    pub fn as_gb2(&self) -> Option<(f64, f64, f64, f64)> {
        let v = &self.params;
        match self.family {
            Family::Gb2 => Some((v[0], v[1], v[2], v[3])),
            Family::B2 => Some((1.0, v[0], v[1], v[2])),
            Family::SinghMaddala => Some((v[0], v[1], 1.0, v[2])),
            Family::Dagum => Some((v[0], v[1], v[2], 1.0)),
            Family::Fisk => Some((v[0], v[1], 1.0, 1.0)),
            Family::Lognormal | Family::Weibull => None,
        }
    }

    /// Whether `E[X^k]` is finite. Valid for negative `k` too.
    pub fn moment_exists(&self, k: f64) -> bool {
        if let Some((a, _, p, q)) = self.as_gb2() {
            return -a * p < k && k < a * q;
        }
        match self.family {
            Family::Lognormal => true,
            Family::Weibull => k > -self.params[0],
            _ => unreachable!(),
        }
    }

    pub fn mean_exists(&self) -> bool {
        self.moment_exists(1.0)
    }

    fn require_moment(&self, k: f64, what: &'static str) -> Result<()> {
        if self.moment_exists(k) {
            Ok(())
        } else {
            Err(Error::Existence {
                what,
                spec: self.to_string(),
            })
        }
    }

    /// Probability density.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain("pdf", format!("x = {x} must be nonnegative")));
        }
        if x == 0.0 {
            // Limits at the origin depend on the shapes; only the finite case
            // matters to callers that integrate the density.
            return Ok(0.0);
        }
        let v = &self.params;
        let d = match self.family {
            Family::Lognormal => {
                let (mu, sigma) = (v[0], v[1]);
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::Weibull => {
                let (a, b) = (v[0], v[1]);
                let z = x / b;
                (a / b) * z.powf(a - 1.0) * (-z.powf(a)).exp()
            }
            _ => {
                let (a, b, p, q) = self.as_gb2().expect("GB2 member");
                let lz = a * (x / b).ln();
                (a.ln() + (a * p - 1.0) * x.ln() - a * p * b.ln() - ln_beta_unchecked(p, q)
                    - (p + q) * softplus(lz))
                .exp()
            }
        };
        Ok(d)
    }

    /// Cumulative distribution function; `cdf(0) = 0` for every member.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain("cdf", format!("x = {x} must be nonnegative")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let v = &self.params;
        Ok(match self.family {
            Family::Gb2 | Family::B2 => {
                let (a, b, p, q) = self.as_gb2().expect("GB2 member");
                gb2_cdf(a, b, p, q, x)
            }
            Family::SinghMaddala => {
                let (a, b, q) = (v[0], v[1], v[2]);
                -(-q * (x / b).powf(a).ln_1p()).exp_m1()
            }
            Family::Dagum => {
                let (a, b, p) = (v[0], v[1], v[2]);
                (-p * (x / b).powf(-a).ln_1p()).exp()
            }
            Family::Fisk => {
                let (a, b) = (v[0], v[1]);
                let z = (x / b).powf(a);
                z / (1.0 + z)
            }
            Family::Lognormal => std_normal_cdf((x.ln() - v[0]) / v[1]),
            Family::Weibull => -(-(x / v[1]).powf(v[0])).exp_m1(),
        })
    }

    /// Quantile function for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain("quantile", format!("u = {u} must lie in (0, 1)")));
        }
        let v = &self.params;
        Ok(match self.family {
            Family::Gb2 | Family::B2 => {
                let (a, b, p, q) = self.as_gb2().expect("GB2 member");
                // Work with whichever of v, 1-v is small to keep the odds accurate.
                let odds = if u <= 0.5 {
                    let w = inv_inc_beta_unchecked(u, p, q)?;
                    w / (1.0 - w)
                } else {
                    let w = inv_inc_beta_unchecked(1.0 - u, q, p)?;
                    (1.0 - w) / w
                };
                b * odds.powf(1.0 / a)
            }
            Family::SinghMaddala => {
                let (a, b, q) = (v[0], v[1], v[2]);
                b * (-(-u).ln_1p() / q).exp_m1().powf(1.0 / a)
            }
            Family::Dagum => {
                let (a, b, p) = (v[0], v[1], v[2]);
                b * (-u.ln() / p).exp_m1().powf(-1.0 / a)
            }
            Family::Fisk => {
                let (a, b) = (v[0], v[1]);
                b * (u / (1.0 - u)).powf(1.0 / a)
            }
            Family::Lognormal => (v[0] + v[1] * normal_quantile_unchecked(u)).exp(),
            Family::Weibull => v[1] * (-(-u).ln_1p()).powf(1.0 / v[0]),
        })
    }

    /// Lorenz curve ordinate at population share `u`.
    pub fn lorenz(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain("lorenz", format!("u = {u} must lie in [0, 1]")));
        }
        self.require_moment(1.0, "Lorenz curve (finite mean)")?;
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(1.0);
        }
        let v = &self.params;
        Ok(match self.family {
            Family::Gb2 | Family::B2 => {
                let (a, _, p, q) = self.as_gb2().expect("GB2 member");
                let w = inv_inc_beta_unchecked(u, p, q)?;
                inc_beta_unchecked(w, p + 1.0 / a, q - 1.0 / a)
            }
            Family::SinghMaddala => {
                let (a, q) = (v[0], v[2]);
                let w = -((-u).ln_1p() / q).exp_m1();
                inc_beta_unchecked(w, 1.0 + 1.0 / a, q - 1.0 / a)
            }
            Family::Dagum => {
                let (a, p) = (v[0], v[2]);
                inc_beta_unchecked(u.powf(1.0 / p), p + 1.0 / a, 1.0 - 1.0 / a)
            }
            Family::Fisk => {
                let a = v[0];
                inc_beta_unchecked(u, 1.0 + 1.0 / a, 1.0 - 1.0 / a)
            }
            Family::Lognormal => std_normal_cdf(normal_quantile_unchecked(u) - v[1]),
            Family::Weibull => inc_gamma_unchecked(-(-u).ln_1p(), 1.0 / v[0] + 1.0),
        })
    }

    /// Raw moment `E[X^k]`.
    pub fn moment(&self, k: f64) -> Result<f64> {
        if !k.is_finite() {
            return Err(Error::domain("moment", format!("k = {k}")));
        }
        self.require_moment(k, "moment")?;
        let v = &self.params;
        let lg = ln_gamma_unchecked;
        Ok(match self.family {
            Family::Gb2 | Family::B2 => {
                let (a, b, p, q) = self.as_gb2().expect("GB2 member");
                b.powf(k) * (ln_beta_unchecked(p + k / a, q - k / a) - ln_beta_unchecked(p, q)).exp()
            }
            Family::SinghMaddala => {
                let (a, b, q) = (v[0], v[1], v[2]);
                b.powf(k) * (lg(1.0 + k / a) + lg(q - k / a) - lg(q)).exp()
            }
            Family::Dagum => {
                let (a, b, p) = (v[0], v[1], v[2]);
                b.powf(k) * (lg(p + k / a) + lg(1.0 - k / a) - lg(p)).exp()
            }
            Family::Fisk => {
                let (a, b) = (v[0], v[1]);
                b.powf(k) * (lg(1.0 + k / a) + lg(1.0 - k / a)).exp()
            }
            Family::Lognormal => (k * v[0] + 0.5 * k * k * v[1] * v[1]).exp(),
            Family::Weibull => v[1].powf(k) * lg(1.0 + k / v[0]).exp(),
        })
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1.0)
    }

    /// `F_(k)(x) = int_0^x t^k dF / E[X^k]`, the distribution of the k-th
    /// incomplete moment.
    pub fn incomplete_moment_cdf(&self, k: f64, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(
                "incomplete_moment_cdf",
                format!("x = {x} must be nonnegative"),
            ));
        }
        if !(k > 0.0) {
            return Err(Error::domain("incomplete_moment_cdf", format!("k = {k} must be positive")));
        }
        self.require_moment(k, "incomplete moment distribution")?;
        if x.is_infinite() {
            return Ok(1.0);
        }
        let v = &self.params;
        match self.family {
            Family::Lognormal => {
                FamilySpec::lognormal(v[0] + k * v[1] * v[1], v[1])?.cdf(x)
            }
            Family::Weibull => {
                let (a, b) = (v[0], v[1]);
                Ok(inc_gamma_unchecked((x / b).powf(a), 1.0 + k / a))
            }
            _ => {
                let (a, b, p, q) = self.as_gb2().expect("GB2 member");
                if x == 0.0 {
                    return Ok(0.0);
                }
                Ok(gb2_cdf(a, b, p + k / a, q - k / a, x))
            }
        }
    }

    /// Gini index from the closed forms; GB2 goes through the `3F2` series.
    pub fn gini_closed(&self) -> Result<GiniValue> {
        self.gini_closed_with(SeriesControl::default())
    }

    pub fn gini_closed_with(&self, ctl: SeriesControl) -> Result<GiniValue> {
        self.require_moment(1.0, "Gini index (finite mean)")?;
        let v = &self.params;
        let lg = ln_gamma_unchecked;
        let closed = |value: f64| GiniValue {
            value,
            method: GiniMethod::ClosedForm,
            mc_std_error: None,
        };
        Ok(match self.family {
            Family::Gb2 => {
                let (a, p, q) = (v[0], v[2], v[3]);
                let value = gb2_gini_series(a, p, q, ctl)?;
                GiniValue {
                    value,
                    method: GiniMethod::Hypergeometric,
                    mc_std_error: None,
                }
            }
            Family::B2 => {
                let (p, q) = (v[1], v[2]);
                let ln = std::f64::consts::LN_2 + ln_beta_unchecked(2.0 * p, 2.0 * q - 1.0)
                    - p.ln()
                    - 2.0 * ln_beta_unchecked(p, q);
                closed(ln.exp())
            }
            Family::SinghMaddala => {
                let (a, q) = (v[0], v[2]);
                closed(-(lg(q) + lg(2.0 * q - 1.0 / a) - lg(q - 1.0 / a) - lg(2.0 * q)).exp_m1())
            }
            Family::Dagum => {
                let (a, p) = (v[0], v[2]);
                closed((lg(p) + lg(2.0 * p + 1.0 / a) - lg(2.0 * p) - lg(p + 1.0 / a)).exp_m1())
            }
            Family::Lognormal => closed(2.0 * std_normal_cdf(v[1] / std::f64::consts::SQRT_2) - 1.0),
            Family::Fisk => closed(1.0 / v[0]),
            Family::Weibull => closed(-(-std::f64::consts::LN_2 / v[0]).exp_m1()),
        })
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn gb2_cdf(a: f64, b: f64, p: f64, q: f64, x: f64) -> f64 {
    let z = (x / b).powf(a);
    if z <= 1.0 {
        inc_beta_unchecked(z / (1.0 + z), p, q)
    } else {
        1.0 - inc_beta_unchecked(1.0 / (1.0 + z), q, p)
    }
}

fn gb2_gini_series(a: f64, p: f64, q: f64, ctl: SeriesControl) -> Result<f64> {
    let ia = 1.0 / a;
    let j1 = hyp3f2_unit(1.0, p + q, 2.0 * p + ia, p + 1.0, 2.0 * (p + q), ctl)?;
    let j2 = hyp3f2_unit(1.0, p + q, 2.0 * p + ia, p + ia + 1.0, 2.0 * (p + q), ctl)?;
    if !j1.converged || !j2.converged {
        return Err(Error::SeriesNotConverged {
            terms: j1.terms.max(j2.terms),
        });
    }
    let ln_pre = ln_beta_unchecked(2.0 * q - ia, 2.0 * p + ia)
        - ln_beta_unchecked(p, q)
        - ln_beta_unchecked(p + ia, q - ia);
    Ok(ln_pre.exp() * (j1.value / p - j2.value / (p + ia)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::assert_abs_diff_eq;

    fn grid_specs() -> Vec<FamilySpec> {
        vec![
            FamilySpec::gb2(2.0, 1.0, 1.5, 2.5).unwrap(),
            FamilySpec::gb2(3.5, 2.0, 0.6, 1.2).unwrap(),
            FamilySpec::b2(1.0, 2.0, 4.0).unwrap(),
            FamilySpec::singh_maddala(2.2, 3.0, 1.7).unwrap(),
            FamilySpec::dagum(3.1, 0.5, 0.8).unwrap(),
            FamilySpec::lognormal(0.3, 0.9).unwrap(),
            FamilySpec::fisk(2.5, 1.3).unwrap(),
            FamilySpec::weibull(1.6, 2.0).unwrap(),
        ]
    }

    #[test]
    fn construction_validates() {
        assert!(FamilySpec::gb2(1.0, 1.0, 1.0, -1.0).is_err());
        assert!(FamilySpec::new(Family::Fisk, vec![1.0]).is_err());
        assert!(FamilySpec::lognormal(-3.0, 1.0).is_ok());
        assert!(FamilySpec::lognormal(0.0, 0.0).is_err());
        let s = FamilySpec::from_shapes(Family::Gb2, &[2.0, 1.5, 2.5], 7.0).unwrap();
        assert_eq!(s.params(), &[2.0, 7.0, 1.5, 2.5]);
        assert_eq!(s.shapes(), vec![2.0, 1.5, 2.5]);
        assert_eq!(Family::SinghMaddala.shape_names(), vec!["a", "q"]);
        let json = serde_json::to_string(&s).unwrap();
        let back: FamilySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<FamilySpec>(r#"{"family":"fisk","params":[-1,1]}"#).is_err());
    }

    #[test]
    fn cdf_trivial_points() {
        let f = FamilySpec::fisk(3.0, 2.0).unwrap();
        assert_abs_diff_eq!(f.cdf(2.0).unwrap(), 0.5, epsilon = 1e-15);
        let w = FamilySpec::weibull(1.7, 2.0).unwrap();
        assert_abs_diff_eq!(w.cdf(2.0).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert!(w.cdf(-1.0).is_err());
        assert_eq!(FamilySpec::lognormal(0.0, 1.0).unwrap().cdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gb2_cdf_against_density_quadrature() {
        let s = FamilySpec::gb2(2.0, 1.0, 1.5, 2.5).unwrap();
        let x: f64 = 0.7;
        let v = x * x / (1.0 + x * x);
        let via_beta = crate::specfun::inc_beta_ratio(v, 1.5, 2.5).unwrap();
        let via_quad = quad::tanh_sinh(|t| s.pdf(t).unwrap(), 0.0, x);
        assert_abs_diff_eq!(s.cdf(x).unwrap(), via_beta, epsilon = 1e-14);
        assert_abs_diff_eq!(s.cdf(x).unwrap(), via_quad, epsilon = 1e-11);
    }

    #[test]
    fn cdf_matches_density_for_all_members() {
        for s in grid_specs() {
            for &x in &[0.2, 0.9, 2.5] {
                let q = quad::zero_to(|t| s.pdf(t).unwrap(), x);
                assert_abs_diff_eq!(s.cdf(x).unwrap(), q, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn quantile_round_trip_and_medians() {
        assert_abs_diff_eq!(FamilySpec::fisk(2.7, 3.3).unwrap().quantile(0.5).unwrap(), 3.3, epsilon = 1e-14);
        assert_abs_diff_eq!(
            FamilySpec::lognormal(0.4, 1.1).unwrap().quantile(0.5).unwrap(),
            0.4f64.exp(),
            epsilon = 1e-14
        );
        for s in grid_specs() {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = s.quantile(u).unwrap();
                assert!((s.cdf(x).unwrap() - u).abs() <= 1e-9, "{s} u={u}");
            }
            assert!(s.quantile(0.0).is_err());
            assert!(s.quantile(1.0).is_err());
        }
    }

    #[test]
    fn lorenz_examples() {
        let ln = FamilySpec::lognormal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(ln.lorenz(0.5).unwrap(), 0.158_655_253_931_457_05, epsilon = 1e-12);
        for s in grid_specs() {
            assert_eq!(s.lorenz(1.0).unwrap(), 1.0);
            assert_eq!(s.lorenz(0.0).unwrap(), 0.0);
        }
        let gb2 = FamilySpec::gb2(2.3, 5.0, 1.0, 1.0).unwrap();
        let fisk = FamilySpec::fisk(2.3, 5.0).unwrap();
        for i in 1..20 {
            let u = i as f64 / 20.0;
            assert_abs_diff_eq!(gb2.lorenz(u).unwrap(), fisk.lorenz(u).unwrap(), epsilon = 1e-12);
        }
        assert!(FamilySpec::fisk(0.9, 1.0).unwrap().lorenz(0.5).is_err());
        assert!(FamilySpec::singh_maddala(2.0, 1.0, 0.4).unwrap().lorenz(0.5).is_err());
    }

    #[test]
    fn lorenz_is_incomplete_moment_at_quantile() {
        for s in grid_specs() {
            for &u in &[0.1, 0.5, 0.93] {
                let x = s.quantile(u).unwrap();
                assert_abs_diff_eq!(
                    s.incomplete_moment_cdf(1.0, x).unwrap(),
                    s.lorenz(u).unwrap(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn moments() {
        let w = FamilySpec::weibull(1.7, 3.0).unwrap();
        assert_abs_diff_eq!(
            w.moment(1.0).unwrap(),
            3.0 * ln_gamma_unchecked(1.0 + 1.0 / 1.7).exp(),
            epsilon = 1e-13
        );
        let ln = FamilySpec::lognormal(0.3, 0.8).unwrap();
        assert_abs_diff_eq!(ln.moment(2.0).unwrap(), (0.6f64 + 2.0 * 0.64).exp(), epsilon = 1e-13);
        let g = FamilySpec::gb2(2.0, 1.0, 1.5, 2.5).unwrap();
        let expect = (ln_beta_unchecked(2.5, 1.5) - ln_beta_unchecked(1.5, 2.5)).exp();
        assert_abs_diff_eq!(g.moment(2.0).unwrap(), expect, epsilon = 1e-13);
        let by_quad = quad::half_line(|t| t * t * g.pdf(t).unwrap());
        assert_abs_diff_eq!(g.moment(2.0).unwrap(), by_quad, epsilon = 1e-9);
        for s in grid_specs() {
            let m1 = quad::half_line(|t| t * s.pdf(t).unwrap());
            assert!((s.moment(1.0).unwrap() - m1).abs() <= 1e-8 * m1, "{s}");
        }
        assert!(FamilySpec::fisk(1.5, 1.0).unwrap().moment(2.0).is_err());
        assert!(FamilySpec::b2(1.0, 1.0, 1.5).unwrap().moment(2.0).is_err());
    }

    #[test]
    fn fisk_moment_uses_shape() {
        // Fisk is GB2 with p = q = 1
        let f = FamilySpec::fisk(3.0, 2.0).unwrap();
        let g = FamilySpec::gb2(3.0, 2.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(f.moment(1.0).unwrap(), g.moment(1.0).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.moment(2.0).unwrap(), g.moment(2.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn incomplete_moment_b2_quadrature() {
        let s = FamilySpec::b2(1.0, 2.0, 4.0).unwrap();
        let num = quad::tanh_sinh(|t| t * t * s.pdf(t).unwrap(), 0.0, 1.5);
        let expect = num / s.moment(2.0).unwrap();
        assert_abs_diff_eq!(s.incomplete_moment_cdf(2.0, 1.5).unwrap(), expect, epsilon = 1e-11);
        assert_eq!(s.incomplete_moment_cdf(2.0, f64::INFINITY).unwrap(), 1.0);
        assert!(s.incomplete_moment_cdf(4.0, 1.0).is_err());
    }

    #[test]
    fn gini_closed_examples() {
        assert_eq!(FamilySpec::fisk(2.0, 9.0).unwrap().gini_closed().unwrap().value, 0.5);
        assert_abs_diff_eq!(
            FamilySpec::weibull(1.0, 4.0).unwrap().gini_closed().unwrap().value,
            0.5,
            epsilon = 1e-15
        );
        // mpmath: 2*ncdf(1/sqrt(2)) - 1
        assert_abs_diff_eq!(
            FamilySpec::lognormal(2.0, 1.0).unwrap().gini_closed().unwrap().value,
            0.520_499_877_813_046_5,
            epsilon = 1e-13
        );
        // Weibull Gini is finite below a = 1 as well
        let w = FamilySpec::weibull(0.5, 1.0).unwrap().gini_closed().unwrap();
        assert_abs_diff_eq!(w.value, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn gb2_gini_reductions() {
        let (a, q) = (2.0, 1.5);
        let g = FamilySpec::gb2(a, 1.0, 1.0, q).unwrap().gini_closed().unwrap();
        assert_eq!(g.method, GiniMethod::Hypergeometric);
        let sm = FamilySpec::singh_maddala(a, 1.0, q).unwrap().gini_closed().unwrap();
        assert_abs_diff_eq!(g.value, sm.value, epsilon = 1e-8);
        // mpmath value of the series expression at (2.5, 1.5, 2)
        let g = FamilySpec::gb2(2.5, 1.0, 1.5, 2.0).unwrap().gini_closed().unwrap();
        assert_abs_diff_eq!(g.value, 0.270_513_787_900_164_18, epsilon = 1e-10);
    }

    #[test]
    fn gini_matches_lorenz_area() {
        for s in grid_specs() {
            let area = quad::tanh_sinh(|u| s.lorenz(u).unwrap(), 0.0, 1.0);
            let g = s.gini_closed().unwrap().value;
            assert_abs_diff_eq!(g, 1.0 - 2.0 * area, epsilon = 1e-8);
        }
    }
}
