//! Double-exponential (tanh-sinh) quadrature used as an independent oracle in
//! tests. Handles integrable endpoint singularities.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Integrate `f(x, x - a, b - x)` over `(a, b)`. The two gap arguments are
/// computed without cancellation, so integrands singular at an endpoint can
/// use them directly.
pub fn tanh_sinh_gaps<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let tmax = 4.5;

    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = h * FRAC_PI_2 * t.cosh() / (cu * cu);
        let left = h * u.exp() / cu;
        let right = h * (-u).exp() / cu;
        if !(left > 0.0) || !(right > 0.0) || !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + left } else { b - right };
        let v = f(x, left, right);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };

    let mut step = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * step <= tmax {
        let t = k as f64 * step;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * step;
    for _ in 0..12 {
        step *= 0.5;
        let mut k = 1;
        while (k as f64) * step <= tmax {
            let t = k as f64 * step;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * step;
        let done = (next - estimate).abs() <= 1e-15 * next.abs().max(1e-300);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    tanh_sinh_gaps(|x, _, _| f(x), a, b)
}

/// Integrate over `(0, inf)` via `x = t / (1 - t)`.
pub fn half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    tanh_sinh_gaps(
        |t, _, gap| {
            let x = t / gap;
            f(x) / (gap * gap)
        },
        0.0,
        1.0,
    )
}

/// Integrate over `(0, upper)` for a function with mass concentrated near 0
/// or with a singularity there; splits the range at `upper / 2`.
pub fn zero_to<F: Fn(f64) -> f64>(f: F, upper: f64) -> f64 {
    tanh_sinh(&f, 0.0, 0.5 * upper) + tanh_sinh(&f, 0.5 * upper, upper)
}
