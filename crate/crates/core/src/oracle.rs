//! Brute-force reference implementations and the verification suite.
//!
//! Nothing here touches the FFT code: convolutions are direct sums, derivatives
//! are stencils and integrals are adaptive Simpson. Grids stay small.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::z0_field;
use crate::error::{Error, Result};
use crate::model::{dispersion_symbol, helmholtz_multiplier, kdvb_symbol, EquationTag, ModelParams};
use crate::profiles::{g0_eval, sample, Profiles};
use crate::solver::linear_propagator;
use crate::spectral::{apply_multiplier, dealias, derivative, from_spectrum, to_spectrum, Field, Grid, Spectrum};

/// Outcome of one oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: &str, max_abs_diff: f64, tolerance: f64) -> Self {
        OracleReport { name: name.to_string(), max_abs_diff, tolerance, passed: max_abs_diff <= tolerance }
    }

    /// One human-readable line for logs.
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: diff {:.3e} (tol {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_abs_diff,
            self.tolerance
        )
    }
}

/// Gregory end corrections through fifth differences.
const GREGORY: [f64; 5] = [1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0, 863.0 / 60480.0];

/// Integral of equally spaced samples; exact for polynomials of degree 5 when
/// at least 11 samples are available, plain trapezoid otherwise.
pub fn gregory(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let trap = h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]));
    if n < 11 {
        return trap;
    }
    let mut fwd: Vec<f64> = v[..6].to_vec();
    let mut bwd: Vec<f64> = v[n - 6..].iter().rev().cloned().collect();
    let mut corr = 0.0;
    for (k, c) in GREGORY.iter().enumerate() {
        for i in 0..5 - k {
            fwd[i] = fwd[i + 1] - fwd[i];
            bwd[i] -= bwd[i + 1];
        }
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        corr += c * (bwd[0] + sign * fwd[0]);
    }
    trap - h * corr
}

/// `int kernel(x - y) f(y) dy` at every grid point, restricted to `|x - y| <= radius`.
///
/// The integral is split at `y = x` so kernels with a kink at the origin keep
/// high-order accuracy; each half uses [`gregory`].
pub fn convolve_direct(f: &Field, kernel: impl Fn(f64) -> f64 + Sync, radius: f64) -> Result<Field> {
    let grid = &f.grid;
    if !(radius > 0.0) || radius > grid.half_length() {
        return Err(Error::Domain(format!(
            "convolution radius {radius} must lie in (0, {}]",
            grid.half_length()
        )));
    }
    let n = grid.size();
    let h = grid.spacing();
    let reach = (radius / h).floor() as usize;
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            let left: Vec<f64> = (lo..=i).map(|j| kernel(x - grid.x(j)) * f.values[j]).collect();
            let right: Vec<f64> = (i..=hi).map(|j| kernel(x - grid.x(j)) * f.values[j]).collect();
            gregory(&left, h) + gregory(&right, h)
        })
        .collect();
    Field::new(grid.clone(), values)
}

/// Centered second-order stencil for `d^l/dx^l`, `l` in `{1, 2}`, on the periodic grid.
///
/// With `richardson` the stencils at `h` and `2h` are combined to fourth order.
pub fn finite_difference(f: &Field, l: u32, richardson: bool) -> Result<Field> {
    let n = f.values.len();
    let h = f.grid.spacing();
    let v = |j: isize| f.values[j.rem_euclid(n as isize) as usize];
    let stencil = |j: isize, s: isize| -> Result<f64> {
        let hs = h * s as f64;
        match l {
            1 => Ok((v(j + s) - v(j - s)) / (2.0 * hs)),
            2 => Ok((v(j + s) - 2.0 * v(j) + v(j - s)) / (hs * hs)),
            _ => Err(Error::Config(format!("finite differences support l = 1 or 2, got {l}"))),
        }
    };
    let values = (0..n as isize)
        .map(|j| {
            let d1 = stencil(j, 1)?;
            Ok(if richardson { (4.0 * d1 - stencil(j, 2)?) / 3.0 } else { d1 })
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(f.grid.clone(), values)
}

/// Time derivative at the middle of equally spaced snapshots `delta` apart.
///
/// Three snapshots give the centered stencil; five add a Richardson step.
pub fn time_derivative(snaps: &[Field], delta: f64) -> Result<Field> {
    let combine = |w: &[(usize, f64)]| -> Result<Field> {
        let mut out = vec![0.0; snaps[0].values.len()];
        for &(k, c) in w {
            if snaps[k].values.len() != out.len() {
                return Err(Error::Contract("snapshots live on different grids".into()));
            }
            for (o, v) in out.iter_mut().zip(&snaps[k].values) {
                *o += c * v / delta;
            }
        }
        Field::new(snaps[0].grid.clone(), out)
    };
    match snaps.len() {
        3 => combine(&[(0, -0.5), (2, 0.5)]),
        5 => combine(&[(0, 1.0 / 12.0), (1, -2.0 / 3.0), (3, 2.0 / 3.0), (4, -1.0 / 12.0)]),
        k => Err(Error::Config(format!("time derivative needs 3 or 5 snapshots, got {k}"))),
    }
}

/// Adaptive Simpson quadrature of `g` on `[a, b]` to absolute tolerance `tol`.
pub fn quad_reference(g: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fm, fb) = (g(a), g(0.5 * (a + b)), g(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = 200_000usize;
    simpson(&g, a, b, fa, fm, fb, whole, tol, 0, &mut budget)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    budget: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = 32.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= (15.0 * tol).max(floor) {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= 60 || *budget == 0 {
        return Err(Error::Tolerance(format!("adaptive Simpson on [{a}, {b}] did not reach {tol:e}")));
    }
    *budget -= 1;
    Ok(simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget)?
        + simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget)?)
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values.iter().zip(&b.values).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn unit_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0, 1.0).expect("unit parameters are valid")
}

const REFERENCE_MASS: f64 = 0.1;

/// Names of every check in [`run_suite`], in execution order.
pub const SUITE: &[&str] = &[
    "resolvent-convolution",
    "spectral-round-trip",
    "finite-difference-d2",
    "dealias-count",
    "green-function-synthesis",
    "kdvb-series-remainder",
    "chi-second-derivative",
    "chi-time-derivative",
    "chi-mass",
    "eta-limit-ratio",
    "d-simpson",
    "d-trapezoid",
    "f-star-zero-mean",
    "v-star-zero-mean",
    "z0-zero-mass",
    "w-identity",
    "u-operator-residual",
];

/// Runs the checks named in `selection`, or all of them for `None`.
pub fn run_suite(selection: Option<&[String]>) -> Result<Vec<OracleReport>> {
    let names: Vec<&str> = match selection {
        None => SUITE.to_vec(),
        Some(sel) => sel
            .iter()
            .map(|s| {
                SUITE
                    .iter()
                    .find(|n| **n == s.as_str())
                    .copied()
                    .ok_or_else(|| Error::Config(format!("unknown oracle check '{s}'")))
            })
            .collect::<Result<_>>()?,
    };
    Ok(names.par_iter().map(|n| run_check(n)).collect())
}

/// Runs one named check; internal errors are logged and reported as failures.
pub fn run_check(name: &str) -> OracleReport {
    let res = match name {
        "resolvent-convolution" => resolvent_check(1.0),
        "spectral-round-trip" => round_trip_check(),
        "finite-difference-d2" => fd_check(),
        "dealias-count" => dealias_check(),
        "green-function-synthesis" => green_synthesis_check(),
        "kdvb-series-remainder" => kdvb_remainder_check(),
        "chi-second-derivative" => chi_d2_check(),
        "chi-time-derivative" => chi_dt_check(),
        "chi-mass" => chi_mass_check(),
        "eta-limit-ratio" => eta_ratio_check(),
        "d-simpson" => d_simpson_check(),
        "d-trapezoid" => d_trapezoid_check(),
        "f-star-zero-mean" => f_star_mean_check(),
        "v-star-zero-mean" => v_star_mean_check(),
        "z0-zero-mass" => z0_mass_check(),
        "w-identity" => w_identity_check(),
        "u-operator-residual" => u_operator_check(),
        _ => Err(Error::Config(format!("unknown oracle check '{name}'"))),
    };
    res.unwrap_or_else(|e| {
        log::error!("oracle {name} could not run: {e}");
        OracleReport { name: name.to_string(), max_abs_diff: f64::INFINITY, tolerance: 0.0, passed: false }
    })
}

/// Spectral `(b^2 - d^2)^{-1}` against direct convolution with `e^{-b|x|} / 2b`.
///
/// `sign = -1` flips the multiplier and must fail; it is the negative control.
pub fn resolvent_check(sign: f64) -> Result<OracleReport> {
    let p = unit_params();
    let grid = Grid::new(20.0, 1024)?;
    let f = Field::from_fn(&grid, |x| (-x * x).exp());
    let spec = apply_multiplier(&f, |xi| sign * helmholtz_multiplier(&p, xi, 0))?;
    let b = p.small_b;
    let direct = convolve_direct(&f, |x| (-b * x.abs()).exp() / (2.0 * b), 20.0)?;
    Ok(OracleReport::new("resolvent-convolution", max_diff(&spec, &direct), 1e-8))
}

fn round_trip_check() -> Result<OracleReport> {
    let grid = Grid::new(10.0, 256)?;
    let mut rng = StdRng::seed_from_u64(7);
    let f = Field::new(grid.clone(), (0..grid.size()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let back = from_spectrum(&to_spectrum(&f));
    Ok(OracleReport::new("spectral-round-trip", max_diff(&f, &back) / f.max_abs(), 1e-12))
}

fn fd_check() -> Result<OracleReport> {
    let grid = Grid::new(10.0, 512)?;
    let f = Field::from_fn(&grid, |x| (-x * x).exp());
    let fd = finite_difference(&f, 2, true)?;
    Ok(OracleReport::new("finite-difference-d2", max_diff(&derivative(&f, 2), &fd), 1e-4))
}

fn dealias_check() -> Result<OracleReport> {
    let n = 256usize;
    let grid = Grid::new(5.0, n)?;
    let white = Spectrum::new(grid, vec![num_complex::Complex64::new(1.0, 0.0); n])?;
    let kept = dealias(&white).coeffs.iter().filter(|c| c.norm() != 0.0).count() as i64;
    let half = n as i64 / 2;
    let expected = (-half..half).filter(|k| 3 * k.abs() <= n as i64).count() as i64;
    Ok(OracleReport::new("dealias-count", (kept - expected).abs() as f64, 0.0))
}

/// Linear viscous Fornberg-Whitham evolution of `e^{-x^2}` to `t = 1` against the
/// Fourier integral `(1/2pi) int e^{i xi x - mu xi^2 t - i omega t} sqrt(pi) e^{-xi^2/4} dxi`.
fn green_synthesis_check() -> Result<OracleReport> {
    let p = unit_params();
    let grid = Grid::new(40.0, 512)?;
    let u0 = Field::from_fn(&grid, |x| (-x * x).exp());
    let u1 = from_spectrum(&linear_propagator(&p, EquationTag::ViscousFW, &to_spectrum(&u0), 1.0, 0.0)?);
    let mut diff = 0.0f64;
    for j in (0..grid.size()).step_by(16) {
        let x = grid.x(j);
        let integrand = |xi: f64| {
            PI.sqrt() * (-(p.mu + 0.25) * xi * xi).exp() * (xi * x - dispersion_symbol(&p, xi)).cos()
        };
        let exact = quad_reference(integrand, -7.0, 7.0, 1e-13)? / (2.0 * PI);
        diff = diff.max((exact - u1.values[j]).abs());
    }
    Ok(OracleReport::new("green-function-synthesis", diff, 1e-8))
}

/// `omega - (alpha xi - gamma xi^3)` against `alpha xi^5 / (b^2 (b^2 + xi^2))`.
fn kdvb_remainder_check() -> Result<OracleReport> {
    let p = ModelParams::new(1.0, 1.0, 2.0, 1.0)?;
    let b2 = p.small_b * p.small_b;
    let diff = [0.05f64, 0.1, 0.2].iter().fold(0.0f64, |m, &xi| {
        let exact = p.alpha() * xi.powi(5) / (b2 * (b2 + xi * xi));
        let got = dispersion_symbol(&p, xi) - kdvb_symbol(&p, xi);
        m.max(((got - exact) / exact).abs())
    });
    Ok(OracleReport::new("kdvb-series-remainder", diff, 1e-6))
}

fn reference_profiles() -> Result<Profiles> {
    Profiles::new(unit_params(), REFERENCE_MASS)
}

fn chi_d2_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let grid = Grid::new(20.0, 512)?;
    let chi = Field::from_fn(&grid, |x| prof.chi_star(x));
    let exact = Field::from_fn(&grid, |x| prof.chi_star_deriv(x, 2));
    Ok(OracleReport::new("chi-second-derivative", max_diff(&derivative(&chi, 2), &exact), 1e-8))
}

/// Five-point time derivative of `chi` against the chain rule on `chi_*`.
fn chi_dt_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let alpha = prof.params().alpha();
    let grid = Grid::new(20.0, 256)?;
    let (t, delta) = (2.0, 1e-2);
    let snaps: Vec<Field> = (-2..=2)
        .map(|k| Field::from_fn(&grid, |x| prof.chi(x, t + k as f64 * delta)))
        .collect();
    let fd = time_derivative(&snaps, delta)?;
    let exact = Field::from_fn(&grid, |x| {
        let (z, s) = prof.similarity(x, t);
        let dz = -alpha / s - z / (2.0 * s * s);
        prof.chi_star_deriv(z, 1) * dz / s - prof.chi_star(z) / (2.0 * s * s * s)
    });
    Ok(OracleReport::new("chi-time-derivative", max_diff(&fd, &exact), 1e-8))
}

fn chi_mass_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let r = prof.tail_radius();
    let m = quad_reference(|x| prof.chi_star(x), -r, r, 1e-14)?;
    Ok(OracleReport::new("chi-mass", (m - REFERENCE_MASS).abs(), 1e-10))
}

/// `eta_*(X) / eta_*(-X)` against `exp((beta / 2 mu) int_{-X}^{X} chi_*)`.
fn eta_ratio_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let p = prof.params();
    let r = prof.tail_radius();
    let m = quad_reference(|x| prof.chi_star(x), -r, r, 1e-14)?;
    let expected = (p.beta / (2.0 * p.mu) * m).exp();
    let got = prof.eta_star(r) / prof.eta_star(-r);
    Ok(OracleReport::new("eta-limit-ratio", (got - expected).abs(), 1e-10))
}

fn d_integrand(prof: &Profiles) -> impl Fn(f64) -> f64 + '_ {
    move |y| prof.chi_star(y).powi(3) / prof.eta_star(y)
}

fn d_simpson_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let r = prof.tail_radius();
    let d = prof.constants().d_const;
    let reference = quad_reference(d_integrand(&prof), -r, r, 1e-16)?;
    Ok(OracleReport::new("d-simpson", ((d - reference) / d).abs(), 1e-10))
}

fn d_trapezoid_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let r = prof.tail_radius();
    let d = prof.constants().d_const;
    let f = d_integrand(&prof);
    let trap = |h: f64| {
        let n = (2.0 * r / h).ceil() as usize;
        let h = 2.0 * r / n as f64;
        let v: Vec<f64> = (0..=n).map(|j| f(-r + j as f64 * h)).collect();
        h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n]))
    };
    let diff = ((d - trap(0.1)) / d).abs().max(((d - trap(0.05)) / d).abs());
    Ok(OracleReport::new("d-trapezoid", diff, 1e-10))
}

fn f_star_mean_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let r = prof.tail_radius();
    let m = quad_reference(|x| prof.f_star(x), -r, r, 1e-14)?;
    Ok(OracleReport::new("f-star-zero-mean", m.abs(), 1e-8))
}

fn v_star_mean_check() -> Result<OracleReport> {
    let prof = reference_profiles()?;
    let r = prof.tail_radius();
    let m = quad_reference(|x| prof.v_star(x), -r, r, 1e-15)?;
    Ok(OracleReport::new("v-star-zero-mean", m.abs(), 1e-10))
}

/// `int (u0 - chi(., 0))` for a Gaussian whose mass is fed to the profiles.
fn z0_mass_check() -> Result<OracleReport> {
    let amp = 0.05;
    let prof = Profiles::new(unit_params(), amp * PI.sqrt())?;
    let grid = Grid::new(40.0, 512)?;
    let u0 = Field::from_fn(&grid, |x| amp * (-x * x).exp());
    let chi0 = Field::from_fn(&grid, |x| prof.chi(x, 0.0));
    let gap = u0.integral() - chi0.integral();
    // The projection also refuses data whose mass is off.
    z0_field(&u0, &prof)?;
    Ok(OracleReport::new("z0-zero-mass", gap.abs(), 1e-8))
}

/// `theta d/dx (G0(x, 1 + t) eta(x, t))` against `W(x, t)` with a spectral derivative.
fn w_identity_check() -> Result<OracleReport> {
    let p = unit_params();
    let theta = 0.3;
    let prof = reference_profiles()?.with_theta(theta, 0.0);
    let grid = Grid::new(30.0, 512)?;
    let t = 3.0;
    let shift = p.alpha() * t;
    let prod = sample(&grid, shift, |x| g0_eval(&p, x, 1.0 + t).unwrap_or(0.0) * prof.eta(x, t));
    let lhs = derivative(&prod, 1).scale(theta);
    let rhs = sample(&grid, shift, |x| prof.w_with_amplitude(x, t, theta));
    Ok(OracleReport::new("w-identity", max_diff(&lhs, &rhs), 1e-9))
}

/// `z = U[h](., t, 0)` solves `z_t + alpha z_x + (beta chi z)_x - mu z_xx = 0`.
///
/// Space derivatives are Richardson stencils and the time derivative is a five-point stencil.
fn u_operator_check() -> Result<OracleReport> {
    let p = unit_params();
    let prof = reference_profiles()?;
    let grid: Arc<Grid> = Grid::new(40.0, 1024)?;
    let h = Field::from_fn(&grid, |x| 0.05 * (-(x - 1.0) * (x - 1.0)).exp() - 0.02 * (-x * x / 2.0).exp());
    let (t, delta) = (2.0, 1e-2);
    let snaps = (-2..=2)
        .map(|k| prof.u_operator(&h, t + k as f64 * delta, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let z = &snaps[2];
    let zt = time_derivative(&snaps, delta)?;
    let zx = finite_difference(z, 1, true)?;
    let zxx = finite_difference(z, 2, true)?;
    let chi_z = Field::new(grid.clone(), z.values.iter().zip(grid.points()).map(|(v, x)| p.beta * prof.chi(x, t) * v).collect())?;
    let flux = finite_difference(&chi_z, 1, true)?;
    let resid = (0..grid.size())
        .map(|j| zt.values[j] + p.alpha() * zx.values[j] + flux.values[j] - p.mu * zxx.values[j])
        .fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(OracleReport::new("u-operator-residual", resid, 1e-4))
}
