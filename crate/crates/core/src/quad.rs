//! Gauss-Legendre rules and adaptive integration used by the profile evaluators.

use crate::error::{Error, Result};

/// `sqrt(ln 1e14)`: at `|x| / sqrt(4 mu) > TAIL_S` a unit Gaussian is below `1e-14` of its peak.
pub const TAIL_S: f64 = 5.678_873_5;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed rule mapped onto `[a, b]`.
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Rule { nodes, weights }
    }

    pub fn integrate(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
    }

    /// Nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }
}

/// Adaptive bisection with a 20-point rule; absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let rule = Rule::new(20);
    let whole = rule.integrate(&f, a, b);
    let mut budget = 20_000usize;
    recurse(&rule, &f, a, b, whole, tol, 0, &mut budget)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    rule: &Rule,
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    budget: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let err = (left + right - whole).abs();
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if err <= tol.max(floor) || (b - a) < 1e-12 * (1.0 + a.abs()) {
        return Ok(left + right);
    }
    if depth > 48 || *budget == 0 {
        return Err(Error::Tolerance(format!(
            "adaptive Gauss-Legendre on [{a}, {b}] stalled at error {err:e}"
        )));
    }
    *budget -= 1;
    Ok(recurse(rule, f, a, m, left, 0.5 * tol, depth + 1, budget)?
        + recurse(rule, f, m, b, right, 0.5 * tol, depth + 1, budget)?)
}
