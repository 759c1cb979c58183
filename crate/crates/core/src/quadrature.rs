//! Gauss-Legendre and uniform trapezoid rules, plus composite Simpson on
//! uniform samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre,
    /// Uniform spacing with half-weight end points.
    Trapezoid,
}

impl std::str::FromStr for QuadratureRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gauss_legendre" | "gauss-legendre" | "gl" => Ok(QuadratureRule::GaussLegendre),
            "trapezoid" | "uniform" => Ok(QuadratureRule::Trapezoid),
            other => Err(format!("unknown quadrature rule '{other}'")),
        }
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on P_n from the Chebyshev-like initial guess, using the
/// three-term recurrence for P_n and its derivative.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights for `rule` with `n` points mapped onto [a, b].
pub fn rule_on_interval(rule: QuadratureRule, n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 || !(b > a) {
        return Err(Error::Input(format!(
            "quadrature needs n >= 2 and b > a, got n = {n}, [{a}, {b}]"
        )));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(match rule {
        QuadratureRule::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            (
                x.iter().map(|x| mid + half * x).collect(),
                w.iter().map(|w| half * w).collect(),
            )
        }
        QuadratureRule::Trapezoid => {
            let h = (b - a) / (n - 1) as f64;
            let nodes = (0..n).map(|j| a + h * j as f64).collect();
            let weights = (0..n)
                .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
                .collect();
            (nodes, weights)
        }
    })
}

/// Composite Simpson weights for `n` uniform samples with spacing `h`.
/// An even sample count closes the last interval with the 3/8 rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 => return w,
        1 => return w,
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
            return w;
        }
        3 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
            return w;
        }
        _ => {}
    }
    let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if n.is_multiple_of(2) {
        let s = n - 4;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Composite Simpson integral of uniform samples spaced `h` apart.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    simpson_weights(values.len(), h)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}
