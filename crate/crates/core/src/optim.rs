//! Unconstrained minimizers used by the estimators: BFGS with central
//! finite-difference gradients, and a Nelder-Mead simplex fallback.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub rel_f_tol: f64,
    pub grad_tol: f64,
    pub fd_step: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_iter: 500,
            rel_f_tol: 1e-10,
            grad_tol: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BfgsError {
    NonFiniteStart,
    /// No decrease along the search direction; carries the last iterate.
    LineSearch(Vec<f64>),
    NonFiniteGradient,
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], step: f64) -> Option<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        let gi = (fp - fm) / (2.0 * h);
        if !gi.is_finite() {
            return None;
        }
        g[i] = gi;
    }
    Some(g)
}

/// BFGS on the inverse Hessian with an Armijo backtracking line search.
/// Returns `Err` when the quasi-Newton iteration breaks down, so the caller
/// can switch to the simplex method.
pub(crate) fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], s: Settings) -> Result<Outcome, BfgsError> {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    if !fx.is_finite() {
        return Err(BfgsError::NonFiniteStart);
    }
    let mut g = gradient(&f, x.as_slice(), s.fd_step).ok_or(BfgsError::NonFiniteGradient)?;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;

    for iter in 0..s.max_iter {
        if g.norm() < s.grad_tol {
            return Ok(Outcome {
                x: x.as_slice().to_vec(),
                f: fx,
                converged: true,
                iterations: iter,
            });
        }
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            // lost descent; restart from steepest descent
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = g.dot(&dir);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &dir * t;
            let fnew = f(xn.as_slice());
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            return Err(BfgsError::LineSearch(x.as_slice().to_vec()));
        };

        let gn = gradient(&f, xn.as_slice(), s.fd_step).ok_or(BfgsError::NonFiniteGradient)?;
        let step = &xn - &x;
        let y = &gn - &g;
        let sy = step.dot(&y);
        if sy > 1e-300 {
            if first {
                let yy = y.dot(&y);
                if yy > 0.0 {
                    h *= sy / yy;
                }
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s y'H + H y s') + (rho^2 y'Hy + rho) s s'
            h -= (&step * hy.transpose() + &hy * step.transpose()) * rho;
            h += (&step * step.transpose()) * (rho * rho * yhy + rho);
        }

        let rel_change = (fx - fnew).abs() / fx.abs().max(1e-300);
        x = xn;
        g = gn;
        let stalled = rel_change < s.rel_f_tol;
        fx = fnew;
        if stalled || fx == 0.0 {
            return Ok(Outcome {
                x: x.as_slice().to_vec(),
                f: fx,
                converged: true,
                iterations: iter + 1,
            });
        }
    }
    Ok(Outcome {
        x: x.as_slice().to_vec(),
        f: fx,
        converged: false,
        iterations: s.max_iter,
    })
}

/// Nelder-Mead with the standard coefficients (1, 2, 0.5, 0.5).
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], init_step: f64, max_iter: usize) -> Outcome {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += init_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    for iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat = spread <= 1e-12 * vals[0].abs() + 1e-30 && diameter < 1e-6;
        if vals[0].is_finite() && (flat || diameter < 1e-10) {
            return Outcome {
                x: pts[0].clone(),
                f: vals[0],
                converged: true,
                iterations: iter,
            };
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(p, b)| b + 0.5 * (p - b)).collect();
            vals[i] = eval(&shrunk);
            pts[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Outcome {
        x: pts[best].clone(),
        f: vals[best],
        converged: false,
        iterations: max_iter,
    }
}

/// BFGS, falling back to Nelder-Mead from the same start when BFGS breaks
/// down. A BFGS run that hits the iteration cap is refined by the simplex too.
pub(crate) fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], s: Settings) -> Option<Outcome> {
    match bfgs(&f, x0, s) {
        Ok(out) if out.converged => Some(out),
        Ok(out) => {
            let nm = nelder_mead(&f, &out.x, 0.05, 4 * s.max_iter);
            Some(if nm.f <= out.f { nm } else { out })
        }
        Err(BfgsError::NonFiniteStart) => None,
        Err(e) => {
            log::debug!("BFGS broke down ({e:?}); switching to Nelder-Mead");
            let from = match &e {
                BfgsError::LineSearch(x) => x.as_slice(),
                _ => x0,
            };
            let nm = nelder_mead(&f, from, 0.1, 4 * s.max_iter);
            nm.f.is_finite().then_some(nm)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn bfgs_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2) + 1.0;
        let out = bfgs(f, &[0.0, 0.0], Settings::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-5 && (out.x[1] + 1.0).abs() < 1e-5, "{out:?}");
    }

    #[test]
    fn bfgs_rosenbrock() {
        let out = minimize(rosenbrock, &[-1.2, 1.0], Settings::default()).unwrap();
        assert!(out.f < 1e-10, "{out:?}");
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let out = nelder_mead(rosenbrock, &[-1.2, 1.0], 0.1, 5000);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-4, "{out:?}");
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 1.0).powi(2) };
        let out = minimize(f, &[2.0], Settings::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-5);
        assert!(minimize(f, &[0.0], Settings::default()).is_none());
    }
}
