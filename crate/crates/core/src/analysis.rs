//! Derived fields, trajectory constants, norm series and decay fits.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EquationTag, ModelParams};
use crate::profiles::{antiderivative, sample, try_sample, Profiles};
use crate::solver::{green_function_shifted, Trajectory};
use crate::spectral::{apply_multiplier, derivative, refine, Field, Grid};

/// `||d^l f / dx^l||_p` for `p` in `[1, inf]`; `p = inf` is the grid maximum.
pub fn lp_norm(f: &Field, p: f64, l: u32) -> f64 {
    let g = derivative(f, l);
    if p.is_infinite() {
        return g.max_abs();
    }
    let h = g.grid.spacing();
    if p == 1.0 {
        return h * g.values.iter().map(|v| v.abs()).sum::<f64>();
    }
    if p == 2.0 {
        return (h * g.values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    (h * g.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `int |f| (1 + |x|)^k dx` in grid coordinates.
pub fn weighted_l1_norm(f: &Field, k: f64) -> f64 {
    let g = &f.grid;
    g.spacing()
        * f.values
            .iter()
            .enumerate()
            .map(|(j, v)| v.abs() * (1.0 + g.x(j).abs()).powf(k))
            .sum::<f64>()
}

/// [`weighted_l1_norm`] after 16-fold band-limited interpolation.
///
/// For smooth samples whose modulus has kinks (sign changes, the weight at 0)
/// this shrinks the second-order kink error by a factor of 256.
pub fn weighted_l1_norm_refined(f: &Field, k: f64) -> Result<f64> {
    Ok(weighted_l1_norm(&refine(f, 16)?, k))
}

/// Time series of one norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Norm index; `f64::INFINITY` for the maximum norm.
    pub p: f64,
    pub l: u32,
    pub label: String,
}

/// `C t^exponent (log t)^log_power` fitted in log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub log_power: u32,
    pub prefactor: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
}

/// Value of a time integral plus the uncertainty from its untruncated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub tail_uncertainty: f64,
}

/// Which profiles to subtract from the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// `u - chi`
    First,
    /// `u - chi - V`
    Second,
    /// `u - chi - V - Q`
    Third,
}

impl Order {
    pub fn from_index(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            3 => Ok(Order::Third),
            _ => Err(Error::Config(format!("residual order must be 1, 2 or 3, got {k}"))),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
            Order::Third => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Order::First => "u-chi",
            Order::Second => "u-chi-V",
            Order::Third => "u-chi-V-Q",
        }
    }
}

/// Third-profile amplitude matching the trajectory's equation.
fn theta_for(traj: &Trajectory, prof: &Profiles) -> Option<f64> {
    match traj.kind {
        EquationTag::KdVBurgers => prof.constants().theta_tilde,
        _ => prof.constants().theta(),
    }
}

/// `u - chi`, `u - chi - V` or `u - chi - V - Q` at snapshot `i`.
///
/// For KdV-Burgers runs the third profile uses the amplitude `theta_tilde`.
pub fn residual_field(traj: &Trajectory, i: usize, prof: &Profiles, order: Order) -> Result<Field> {
    let theta = theta_for(traj, prof);
    residual_with_theta(traj, i, prof, order, theta)
}

/// [`residual_field`] with an explicit third-profile amplitude.
pub fn residual_with_theta(
    traj: &Trajectory,
    i: usize,
    prof: &Profiles,
    order: Order,
    theta: Option<f64>,
) -> Result<Field> {
    let u = snapshot(traj, i)?;
    let (t, shift) = (traj.times[i], traj.frame_shift(i));
    let theta = match (order, theta) {
        (Order::Third, None) => {
            return Err(Error::Config("theta is required for the third-order residual".into()))
        }
        (_, th) => th.unwrap_or(0.0),
    };
    try_sample(&traj.grid, shift, |x| {
        let mut p = prof.chi(x, t);
        if order != Order::First {
            p += prof.second_profile_v(x, t);
        }
        if order == Order::Third {
            p += prof.w_with_amplitude(x, t, theta) + prof.third_profile_psi(x, t)?;
        }
        Ok(p)
    })?
    .zip_with(u, |p, u| u - p)
}

fn snapshot(traj: &Trajectory, i: usize) -> Result<&Field> {
    traj.snapshots
        .get(i)
        .ok_or_else(|| Error::Config(format!("snapshot index {i} out of range ({})", traj.len())))
}

/// `psi = u - chi`.
pub fn psi_field(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<Field> {
    residual_field(traj, i, prof, Order::First)
}

/// `w = u - chi - v` with `v` replaced by its asymptotic form `V + Psi`.
pub fn w_field(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<Field> {
    let t = traj.times[i];
    let psi = try_sample(&traj.grid, traj.frame_shift(i), |x| prof.third_profile_psi(x, t))?;
    residual_field(traj, i, prof, Order::Second)?.zip_with(&psi, |a, b| a - b)
}

/// Absolute tolerance on `int (u0 - chi(., 0))`.
pub const Z0_MASS_TOL: f64 = 1e-8;

/// `z0 = eta(x, 0)^{-1} int_{-inf}^x (u0 - chi(., 0))`, with `u0` in lab coordinates.
pub fn z0_field(u0: &Field, prof: &Profiles) -> Result<Field> {
    let grid = &u0.grid;
    let diff = u0.zip_with(&sample(grid, 0.0, |x| prof.chi(x, 0.0)), |u, c| u - c)?;
    let mass = diff.integral();
    if mass.abs() > Z0_MASS_TOL {
        return Err(Error::Consistency(format!(
            "int (u0 - chi(., 0)) = {mass:e}; the profile mass does not match the data"
        )));
    }
    // Remove the residual mass with a unit bump so the antiderivative is periodic.
    let bump = Field::from_fn(grid, |x| (-x * x).exp() / std::f64::consts::PI.sqrt());
    let diff = diff.zip_with(&bump, |d, b| d - mass * b)?;
    let h = antiderivative(&diff)?;
    let values = h.values.iter().zip(grid.points()).map(|(&v, x)| v / prof.eta(x, 0.0)).collect();
    Field::new(grid.clone(), values)
}

/// `theta0 = int z0`.
pub fn theta0(u0: &Field, prof: &Profiles) -> Result<f64> {
    Ok(z0_field(u0, prof)?.integral())
}

/// Ingredients shared by the two forms of `rho`.
struct RhoParts {
    psi: Field,
    chi: Field,
    eta: Field,
    /// `gamma (b^2 - d^2)^{-1} d^4 chi`
    disp: Field,
}

fn rho_parts(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<RhoParts> {
    let (t, shift) = (traj.times[i], traj.frame_shift(i));
    let p = prof.params();
    let grid = &traj.grid;
    let b2 = p.small_b * p.small_b;
    let chi4 = sample(grid, shift, |x| prof.chi_deriv(x, t, 4));
    let disp = apply_multiplier(&chi4, |xi| Complex64::new(p.gamma() / (b2 + xi * xi), 0.0))?;
    Ok(RhoParts {
        psi: psi_field(traj, i, prof)?,
        chi: sample(grid, shift, |x| prof.chi(x, t)),
        eta: sample(grid, shift, |x| prof.eta(x, t)),
        disp,
    })
}

/// `rho = -eta^{-1} ((beta/2) psi^2 + alpha R d^2 psi + gamma R d^4 chi)`, `R = (b^2 - d^2)^{-1}`.
pub fn rho_field(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<Field> {
    let parts = rho_parts(traj, i, prof)?;
    let p = prof.params();
    let b2 = p.small_b * p.small_b;
    let alpha = p.alpha();
    let r2 = apply_multiplier(&parts.psi, |xi| Complex64::new(-alpha * xi * xi / (b2 + xi * xi), 0.0))?;
    combine_rho(&parts, &r2, p.beta)
}

/// Form of `rho` after integrating the resolvent term by parts:
/// `-eta^{-1} ((beta/2) psi^2 + (beta B / (b mu)) chi R d psi + gamma R d^4 chi)`.
/// Pointwise different from [`rho_field`], equal after integration in `x`.
pub fn rho_alt_field(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<Field> {
    let parts = rho_parts(traj, i, prof)?;
    let p = prof.params();
    let b2 = p.small_b * p.small_b;
    let c = p.beta * p.cap_b / (p.small_b * p.mu);
    let r1 = apply_multiplier(&parts.psi, |xi| Complex64::new(0.0, xi / (b2 + xi * xi)))?;
    let mid = r1.zip_with(&parts.chi, |r, chi| c * chi * r)?;
    combine_rho(&parts, &mid, p.beta)
}

/// `rho~ = -eta^{-1} ((beta/2) psi^2 + gamma d^2 psi)` for the KdV-Burgers twin.
pub fn rho_tilde_field(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<Field> {
    let psi = psi_field(traj, i, prof)?;
    let (t, shift) = (traj.times[i], traj.frame_shift(i));
    let p = prof.params();
    let d2 = derivative(&psi, 2).scale(p.gamma());
    let eta = sample(&traj.grid, shift, |x| prof.eta(x, t));
    let vals = (0..psi.values.len())
        .map(|j| -(0.5 * p.beta * psi.values[j].powi(2) + d2.values[j]) / eta.values[j])
        .collect();
    Field::new(traj.grid.clone(), vals)
}

fn combine_rho(parts: &RhoParts, middle: &Field, beta: f64) -> Result<Field> {
    let vals = (0..parts.psi.values.len())
        .map(|j| {
            let psi = parts.psi.values[j];
            -(0.5 * beta * psi * psi + middle.values[j] + parts.disp.values[j]) / parts.eta.values[j]
        })
        .collect();
    Field::new(parts.psi.grid.clone(), vals)
}

/// Trapezoid integral of `values` over `times` plus a power-law tail uncertainty.
///
/// The tail `A t^s` is fitted on the last decade of times; `A t_end^{s+1} / |s+1|`
/// is reported as uncertainty and never added to the value.
pub fn integrate_with_tail(times: &[f64], values: &[f64]) -> Result<ThetaEstimate> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Config("need at least two samples to integrate in time".into()));
    }
    let value = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum::<f64>();
    let t_end = *times.last().unwrap();
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= t_end / 10.0 && t > 0.0 && v != 0.0)
        .map(|(&t, &v)| (t.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 3 {
        if values.iter().all(|&v| v == 0.0) {
            return Ok(ThetaEstimate { value, tail_uncertainty: 0.0 });
        }
        return Err(Error::Config("too few nonzero samples in the last decade to fit the tail".into()));
    }
    let (intercept, slope) = ols(&pts);
    if slope >= -1.0 {
        return Err(Error::NonIntegrableTail { slope });
    }
    let tail = intercept.exp() * t_end.powf(slope + 1.0) / (slope + 1.0).abs();
    Ok(ThetaEstimate { value, tail_uncertainty: tail })
}

/// `theta1 = int_0^inf int rho dx dt` over the trajectory.
pub fn theta1(traj: &Trajectory, prof: &Profiles) -> Result<ThetaEstimate> {
    let ints = spatial_integrals(traj, |i| rho_field(traj, i, prof))?;
    integrate_with_tail(&traj.times, &ints)
}

/// The `rho~` analogue of [`theta1`] on a KdV-Burgers trajectory.
pub fn theta1_tilde(traj: &Trajectory, prof: &Profiles) -> Result<ThetaEstimate> {
    let ints = spatial_integrals(traj, |i| rho_tilde_field(traj, i, prof))?;
    integrate_with_tail(&traj.times, &ints)
}

/// `theta = theta0 + theta1`; the trajectory must start at `t = 0`.
pub fn theta(traj: &Trajectory, prof: &Profiles) -> Result<(f64, ThetaEstimate)> {
    let th0 = theta0(&initial_lab_field(traj)?, prof)?;
    Ok((th0, theta1(traj, prof)?))
}

/// `theta~ = theta0 + theta1~`, sharing `theta0` with the viscous equation.
pub fn theta_tilde(traj_kdvb: &Trajectory, prof: &Profiles) -> Result<(f64, ThetaEstimate)> {
    let th0 = theta0(&initial_lab_field(traj_kdvb)?, prof)?;
    Ok((th0, theta1_tilde(traj_kdvb, prof)?))
}

fn initial_lab_field(traj: &Trajectory) -> Result<Field> {
    if traj.times.first() != Some(&0.0) {
        return Err(Error::Config("theta0 needs a snapshot at t = 0".into()));
    }
    // At t = 0 both frames coincide.
    Ok(traj.snapshots[0].clone())
}

fn spatial_integrals(traj: &Trajectory, f: impl Fn(usize) -> Result<Field> + Sync) -> Result<Vec<f64>> {
    (0..traj.len()).into_par_iter().map(|i| Ok(f(i)?.integral())).collect()
}

/// `||d^l (residual)||_p` at every snapshot.
pub fn norm_series(traj: &Trajectory, prof: &Profiles, order: Order, p: f64, l: u32) -> Result<NormSeries> {
    let values = (0..traj.len())
        .into_par_iter()
        .map(|i| Ok(lp_norm(&residual_field(traj, i, prof, order)?, p, l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormSeries { times: traj.times.clone(), values, p, l, label: order.label().to_string() })
}

/// `||d^l V(., t)||_p` at every snapshot, for ladder checks.
pub fn profile_norm_series(
    traj: &Trajectory,
    label: &str,
    p: f64,
    l: u32,
    f: impl Fn(f64, f64) -> Result<f64> + Sync,
) -> Result<NormSeries> {
    let values = (0..traj.len())
        .into_par_iter()
        .map(|i| {
            let t = traj.times[i];
            Ok(lp_norm(&try_sample(&traj.grid, traj.frame_shift(i), |x| f(x, t))?, p, l))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormSeries { times: traj.times.clone(), values, p, l, label: label.to_string() })
}

/// `||d^l (T(., t) - G0(., t))||_p`, evaluated in the frame moving with `alpha`.
pub fn kernel_gap_series(p: &ModelParams, grid: &Arc<Grid>, times: &[f64], l: u32, norm_p: f64) -> Result<NormSeries> {
    let values = times
        .par_iter()
        .map(|&t| {
            let shift = p.alpha() * t;
            let tk = green_function_shifted(p, grid, t, shift)?;
            let g = Field::from_fn(grid, |z| {
                (-z * z / (4.0 * p.mu * t)).exp() / (4.0 * std::f64::consts::PI * p.mu * t).sqrt()
            });
            Ok(lp_norm(&(&tk - &g), norm_p, l))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormSeries { times: times.to_vec(), values, p: norm_p, l, label: "T-G0".into() })
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
fn ols(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Fits `log v = log C + p log t + q log log t` with `q` fixed.
///
/// `window` defaults to the last decade of the series.
pub fn decay_fit(series: &NormSeries, log_power: u32, window: Option<(f64, f64)>) -> Result<DecayFit> {
    if log_power > 1 {
        return Err(Error::Config(format!("log power must be 0 or 1, got {log_power}")));
    }
    let t_max = series.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = window.unwrap_or((t_max / 10.0, t_max));
    let mut pts = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::Domain(format!("nonpositive value {v} at t = {t} in fit window")));
        }
        if !(t > 0.0) || (log_power == 1 && !(t > 1.0)) {
            return Err(Error::Domain(format!("t = {t} is outside the domain of the fit model")));
        }
        let y = if log_power == 1 { v.ln() - t.ln().ln() } else { v.ln() };
        pts.push((t.ln(), y));
    }
    if pts.len() < 5 {
        return Err(Error::Config(format!("fit window [{lo}, {hi}] holds {} points; need 5", pts.len())));
    }
    let (a, b) = ols(&pts);
    let rms = (pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok(DecayFit { exponent: b, log_power, prefactor: a.exp(), rms_residual: rms, window: (lo, hi) })
}

/// Least-squares amplitude `<f, g> / <g, g>`.
pub fn project_amplitude(f: &Field, shape: &Field) -> Result<f64> {
    let num: f64 = f.zip_with(shape, |a, b| a * b)?.values.iter().sum();
    let den: f64 = shape.values.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::Domain("projection onto a zero shape".into()));
    }
    Ok(num / den)
}

/// Amplitude of `(u - chi - V - Psi)(1 + t)` along `V_*` at snapshot `i`.
pub fn theta_hat(traj: &Trajectory, i: usize, prof: &Profiles) -> Result<f64> {
    let t = traj.times[i];
    let w = w_field(traj, i, prof)?.scale(1.0 + t);
    let shape = sample(&traj.grid, traj.frame_shift(i), |x| prof.v_star(prof.similarity(x, t).0));
    project_amplitude(&w, &shape)
}

/// Grid in the similarity variable wide enough for every profile shape.
fn profile_grid(prof: &Profiles) -> Result<Arc<Grid>> {
    Grid::new(2.0 * prof.tail_radius(), 4096)
}

/// `C0 = |kappa d| ||d^l V_*||_p`: `||d^l (u - chi)||_p ~ C0 log(1 + t) (1 + t)^{-1 + 1/(2p) - l/2}`.
pub fn log_rate_amplitude(prof: &Profiles, p: f64, l: u32) -> Result<f64> {
    let c = prof.constants();
    let v = Field::from_fn(&profile_grid(prof)?, |z| prof.v_star(z));
    Ok((c.kappa * c.d_const).abs() * lp_norm(&v, p, l))
}

/// `c0 = ||d^l (theta V_* + Psi_*)||_p`: `||d^l (u - chi - V)||_p ~ c0 (1 + t)^{-1 + 1/(2p) - l/2}`.
pub fn third_rate_amplitude(prof: &Profiles, theta: f64, p: f64, l: u32) -> Result<f64> {
    let q = try_sample(&profile_grid(prof)?, 0.0, |z| Ok(theta * prof.v_star(z) + prof.psi_star(z)?))?;
    Ok(lp_norm(&q, p, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> NormSeries {
        let values = times.iter().map(|&t| f(t)).collect();
        NormSeries { times, values, p: 2.0, l: 0, label: "synthetic".into() }
    }

    fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> =
            (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect();
        (v[0], v[n - 1]) = (a, b);
        v
    }

    #[test]
    fn lp_norm_examples() {
        let g = Grid::new(PI, 64).unwrap();
        assert_eq!(lp_norm(&Field::from_fn(&g, |_| -2.5), f64::INFINITY, 0), 2.5);
        let k0 = 3.0;
        let s = Field::from_fn(&g, |x| (k0 * x).sin());
        assert!((lp_norm(&s, 2.0, 1) - k0 * PI.sqrt()).abs() < 1e-12);
        let g = Grid::new(20.0, 512).unwrap();
        let gauss = Field::from_fn(&g, |x| (-x * x).exp());
        assert!((lp_norm(&gauss, 1.0, 0) - PI.sqrt()).abs() < 1e-10);
        assert!((lp_norm(&gauss, 2.0, 0) - (PI / 2.0).powf(0.25)).abs() < 1e-10);
        assert!((lp_norm(&gauss, 3.0, 0) - (PI / 3.0).sqrt().powf(1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_examples() {
        let g = Grid::new(40.0, 8192).unwrap();
        assert_eq!(weighted_l1_norm(&Field::zeros(&g), 1.0), 0.0);
        let f = Field::from_fn(&g, |x| (-x.abs()).exp());
        assert!((weighted_l1_norm(&f, 1.0) - 4.0).abs() < 1e-6);
        assert_eq!(weighted_l1_norm(&f, 0.0), lp_norm(&f, 1.0, 0));
    }

    #[test]
    fn fit_pure_power() {
        let s = series(logspace(1.0, 100.0, 40), |t| 3.0 * t.powf(-0.75));
        let fit = decay_fit(&s, 0, Some((1.0, 100.0))).unwrap();
        assert!((fit.exponent + 0.75).abs() < 1e-12, "{:?}", fit);
        assert!((fit.prefactor - 3.0).abs() < 1e-11);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn fit_with_log_factor() {
        let s = series(logspace(10.0, 1000.0, 60), |t| t.ln() / t);
        let fit = decay_fit(&s, 1, Some((10.0, 1000.0))).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-12);
        let plain = decay_fit(&s, 0, Some((10.0, 1000.0))).unwrap();
        assert!(plain.exponent > -0.85 && plain.exponent < -0.7, "{}", plain.exponent);
    }

    #[test]
    fn fit_errors() {
        let s = series(logspace(1.0, 100.0, 40), |t| 1.0 / t);
        assert!(matches!(decay_fit(&s, 0, Some((50.0, 51.0))), Err(Error::Config(_))));
        let z = series(logspace(1.0, 100.0, 40), |_| 0.0);
        assert!(matches!(decay_fit(&z, 0, Some((1.0, 100.0))), Err(Error::Domain(_))));
        // Default window is the last decade.
        let fit = decay_fit(&s, 0, None).unwrap();
        assert_eq!(fit.window, (10.0, 100.0));
    }

    #[test]
    fn tail_integration() {
        let times = logspace(1.0, 1000.0, 2000);
        let vals: Vec<f64> = times.iter().map(|t| -2.0 * t.powf(-1.5)).collect();
        let est = integrate_with_tail(&times, &vals).unwrap();
        // int_1^1000 -2 t^{-3/2} = -4 (1 - 1000^{-1/2}); tail = 4 * 1000^{-1/2}.
        assert!((est.value + 4.0 * (1.0 - 1000f64.powf(-0.5))).abs() < 1e-3, "{}", est.value);
        assert!((est.tail_uncertainty - 4.0 / 1000f64.sqrt()).abs() < 1e-9);

        let scaled: Vec<f64> = vals.iter().map(|v| -3.0 * v).collect();
        let s = integrate_with_tail(&times, &scaled).unwrap();
        assert!((s.value + 3.0 * est.value).abs() < 1e-12 * est.value.abs());
        assert!((s.tail_uncertainty - 3.0 * est.tail_uncertainty).abs() < 1e-12);

        let slow: Vec<f64> = times.iter().map(|t| 1.0 / t.sqrt()).collect();
        assert!(matches!(integrate_with_tail(&times, &slow), Err(Error::NonIntegrableTail { .. })));
        let zero = vec![0.0; times.len()];
        assert_eq!(integrate_with_tail(&times, &zero).unwrap(), ThetaEstimate { value: 0.0, tail_uncertainty: 0.0 });
    }

    #[test]
    fn z0_of_the_profile_is_zero() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let prof = Profiles::new(p, 0.1).unwrap();
        let g = Grid::new(40.0, 512).unwrap();
        let u0 = Field::from_fn(&g, |x| prof.chi(x, 0.0));
        let z0 = z0_field(&u0, &prof).unwrap();
        assert!(z0.max_abs() < 1e-14);
        assert!(theta0(&u0, &prof).unwrap().abs() < 1e-14);
    }

    #[test]
    fn z0_rejects_mass_mismatch() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let prof = Profiles::new(p, 0.1).unwrap();
        let g = Grid::new(40.0, 512).unwrap();
        let u0 = Field::from_fn(&g, |x| 0.06 * (-x * x).exp());
        assert!(matches!(z0_field(&u0, &prof), Err(Error::Consistency(_))));
    }

    #[test]
    fn rate_amplitudes() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let prof = Profiles::new(p, 0.1).unwrap();
        let c = prof.constants();
        let dense = (0..=200_000).map(|k| prof.v_star(-20.0 + 40.0 * k as f64 / 200_000.0).abs()).fold(0.0, f64::max);
        let c0 = log_rate_amplitude(&prof, f64::INFINITY, 0).unwrap();
        assert!((c0 / ((c.kappa * c.d_const).abs() * dense) - 1.0).abs() < 1e-3);

        let psi_only = third_rate_amplitude(&prof, 0.0, 2.0, 1).unwrap();
        assert!(psi_only > 0.0);
        let both = third_rate_amplitude(&prof, 0.2, 2.0, 1).unwrap();
        assert!(both != psi_only);

        let zero = Profiles::new(p, 0.0).unwrap();
        assert_eq!(log_rate_amplitude(&zero, 2.0, 0).unwrap(), 0.0);
        assert_eq!(third_rate_amplitude(&zero, 0.0, 2.0, 0).unwrap(), 0.0);
    }
}
