//! Error function and its inverse.
//!
//! `erf` uses its Maclaurin series for `|x| < 2.5` and a continued fraction
//! for `erfc` beyond; both are accurate to a few ulps of `1e-15`, well inside
//! the `1.5e-7` absolute bound the models need. `erfinv` starts from Giles'
//! single-precision polynomial and polishes with Newton steps.

use std::f64::consts::PI;

use crate::error::{domain, Result};

const SERIES_LIMIT: f64 = 2.5;

fn erf_series(x: f64) -> f64 {
    // 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

/// `erfc(x)` for `x >= SERIES_LIMIT` by the Laplace continued fraction,
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = x + a / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < SERIES_LIMIT {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc_continued_fraction(x)
    } else {
        erfc_continued_fraction(-x) - 1.0
    }
}

/// Complementary error function, accurate in the right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_LIMIT {
        erfc_continued_fraction(x)
    } else if x <= -SERIES_LIMIT {
        2.0 - erfc_continued_fraction(-x)
    } else {
        1.0 - erf_series(x)
    }
}

fn erfinv_initial(y: f64) -> f64 {
    let mut w = -((1.0 - y) * (1.0 + y)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        [
            3.43273939e-07,
            -3.5233877e-06,
            -4.39150654e-06,
            0.00021858087,
            -0.00125372503,
            -0.00417768164,
            0.246640727,
            1.50140941,
        ]
        .iter()
        .fold(2.81022636e-08, |p, &c| c + p * w)
    } else {
        w = w.sqrt() - 3.0;
        [
            0.000100950558,
            0.00134934322,
            -0.00367342844,
            0.00573950773,
            -0.0076224613,
            0.00943887047,
            1.00167406,
            2.83297682,
        ]
        .iter()
        .fold(-0.000200214257, |p, &c| c + p * w)
    };
    p * y
}

/// Inverse error function on the open interval `(-1, 1)`.
pub fn erfinv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(domain(format!("erfinv is defined on (-1, 1), got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let two_over_sqrt_pi = 2.0 / PI.sqrt();
    let mut x = erfinv_initial(y);
    for _ in 0..3 {
        // residual through erfc keeps precision near |y| -> 1
        let residual = if y > 0.0 {
            (1.0 - y) - erfc(x)
        } else {
            erfc(-x) - (1.0 + y)
        };
        let step = residual / (two_over_sqrt_pi * (-x * x).exp());
        x -= step;
        if step.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    Ok(x)
}
