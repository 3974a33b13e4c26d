//! Closed-form asymptotic profiles.
//!
//! With `s = x / sqrt(4 mu)`, `R = beta M / (2 mu)` and `E = e^R - 1`, the
//! Hopf-Cole solution of the Burgers equation is
//!
//! ```text
//! D(x)      = 1 + (E/2) erfc(s)
//! q(x)      = E exp(-s^2) / (2 sqrt(pi mu) D(x))
//! chi_*(x)  = (2 mu / beta) q(x)
//! eta_*(x)  = exp((beta / 2 mu) int_{-inf}^x chi_*) = e^R / D(x)
//! ```
//!
//! `q` satisfies `q' = -(x / 2 mu) q + q^2`, which gives every higher derivative
//! without differentiating `erfc`. The denominator never vanishes and never
//! overflows, so no scaled error function is needed.
//!
//! Time-dependent profiles live on `zeta = (x - alpha (1 + t)) / sqrt(1 + t)`:
//!
//! ```text
//! chi(x, t) = chi_*(zeta) / sqrt(1 + t)
//! V(x, t)   = -kappa d V_*(zeta) log(1 + t) / (1 + t)
//! W(x, t)   = theta V_*(zeta) / (1 + t)
//! Psi(x, t) = Psi_*(zeta) / (1 + t)
//! ```
//!
//! `Psi_*` is `-d/dx (eta_* J)` with `J = int_0^1 G(1 - tau) * F(tau) dtau` and
//! `F(x, tau) = F_*(x / sqrt(tau)) tau^{-3/2}`. This is the sign produced by the
//! forcing `-gamma chi_xxx` in the linearized equation for `v`; it is checked
//! against direct simulation in the integration tests.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::{self, Rule, TAIL_S};
use crate::spectral::{apply_multiplier, derivative, Field, Grid};

/// Constants feeding the profile formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    /// `M = int u0`.
    pub mass: f64,
    pub kappa: f64,
    /// `d = int chi_*^3 / eta_*`.
    pub d_const: f64,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
    /// Third-profile amplitude of the KdV-Burgers twin.
    pub theta_tilde: Option<f64>,
}

impl ProfileConstants {
    /// `theta0 + theta1` when both are known.
    pub fn theta(&self) -> Option<f64> {
        Some(self.theta0? + self.theta1?)
    }
}

/// `kappa = beta^2 B / (4 b^3 mu^2)`.
pub fn compute_kappa(p: &ModelParams) -> f64 {
    p.kappa()
}

/// Heat kernel `G(x, t) = exp(-x^2 / 4 mu t) / sqrt(4 pi mu t)`.
pub fn g_eval(p: &ModelParams, x: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(gauss(p.mu, x, t))
}

/// Convected heat kernel `G0(x, t) = G(x - alpha t, t)`.
pub fn g0_eval(p: &ModelParams, x: f64, t: f64) -> Result<f64> {
    g_eval(p, x - p.alpha() * t, t)
}

fn gauss(mu: f64, x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * mu * t)).exp() / (4.0 * PI * mu * t).sqrt()
}

/// Number of Fourier modes kept for `J`.
const PSI_MODES: usize = 128;
/// Relative agreement required between two Gauss-Legendre resolutions in sigma.
const PSI_REFINE_TOL: f64 = 1e-12;

/// Fourier samples of `J` on a periodic box of half-length `half_length`.
#[derive(Debug, Clone)]
struct PsiTable {
    half_length: f64,
    dk: f64,
    j_hat: Vec<Complex64>,
}

impl PsiTable {
    /// `(J(x), J'(x))` by direct trigonometric synthesis.
    fn eval(&self, x: f64) -> (f64, f64) {
        if x.abs() >= self.half_length {
            return (0.0, 0.0);
        }
        let rot = Complex64::from_polar(1.0, self.dk * x);
        let mut z = Complex64::new(1.0, 0.0);
        let (mut s0, mut s1) = (Complex64::default(), Complex64::default());
        for (m, c) in self.j_hat.iter().enumerate().skip(1) {
            z *= rot;
            let term = c * z;
            s0 += term;
            s1 += term * (self.dk * m as f64);
        }
        let norm = 1.0 / (2.0 * self.half_length);
        let j = norm * (self.j_hat[0].re + 2.0 * s0.re);
        // d/dx of c e^{i k x} is i k c e^{i k x}; its real part is -k Im(.).
        let jp = -norm * 2.0 * s1.im;
        (j, jp)
    }
}

/// Evaluator for every closed-form profile at fixed parameters and mass.
#[derive(Debug)]
pub struct Profiles {
    params: ModelParams,
    consts: ProfileConstants,
    r: f64,
    e: f64,
    psi: OnceLock<Arc<PsiTable>>,
}

impl Clone for Profiles {
    fn clone(&self) -> Self {
        let psi = OnceLock::new();
        if let Some(t) = self.psi.get() {
            let _ = psi.set(t.clone());
        }
        Profiles { params: self.params, consts: self.consts, r: self.r, e: self.e, psi }
    }
}

impl Profiles {
    /// Builds the evaluator and computes `kappa` and `d` for mass `M`.
    pub fn new(params: ModelParams, mass: f64) -> Result<Self> {
        params.validate()?;
        if !mass.is_finite() {
            return Err(Error::Config(format!("mass must be finite, got {mass}")));
        }
        let r = params.beta * mass / (2.0 * params.mu);
        let mut prof = Profiles {
            params,
            consts: ProfileConstants {
                mass,
                kappa: params.kappa(),
                d_const: 0.0,
                theta0: None,
                theta1: None,
                theta_tilde: None,
            },
            r,
            e: r.exp_m1(),
            psi: OnceLock::new(),
        };
        prof.consts.d_const = prof.compute_d()?;
        Ok(prof)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn constants(&self) -> &ProfileConstants {
        &self.consts
    }

    pub fn with_theta(mut self, theta0: f64, theta1: f64) -> Self {
        self.consts.theta0 = Some(theta0);
        self.consts.theta1 = Some(theta1);
        self
    }

    pub fn with_theta_tilde(mut self, theta_tilde: f64) -> Self {
        self.consts.theta_tilde = Some(theta_tilde);
        self
    }

    /// `beta M / (2 mu)`; `eta_*(+inf) = exp` of this.
    pub fn hopf_cole_exponent(&self) -> f64 {
        self.r
    }

    /// Radius beyond which every profile integrand is below `1e-14` of its peak.
    pub fn tail_radius(&self) -> f64 {
        2.0 * self.params.mu.sqrt() * (TAIL_S + self.r.abs().sqrt())
    }

    /// `zeta` and `sqrt(1 + t)` for lab coordinate `x`.
    pub fn similarity(&self, x: f64, t: f64) -> (f64, f64) {
        let s = (1.0 + t).sqrt();
        ((x - self.params.alpha() * (1.0 + t)) / s, s)
    }

    fn denominator(&self, x: f64) -> f64 {
        let s = x / (2.0 * self.params.mu.sqrt());
        1.0 + 0.5 * self.e * libm::erfc(s)
    }

    /// `q, q', q'', q''', q''''` at `x`.
    pub fn q_derivs(&self, x: f64) -> [f64; 5] {
        if self.e == 0.0 {
            return [0.0; 5];
        }
        let mu = self.params.mu;
        let s = x / (2.0 * mu.sqrt());
        let q = self.e * (-s * s).exp() / (2.0 * (PI * mu).sqrt() * self.denominator(x));
        let a = x / (2.0 * mu);
        let q1 = -a * q + q * q;
        let q2 = -q / (2.0 * mu) - a * q1 + 2.0 * q * q1;
        let q3 = -q1 / mu - a * q2 + 2.0 * (q1 * q1 + q * q2);
        let q4 = -1.5 * q2 / mu - a * q3 + 2.0 * (3.0 * q1 * q2 + q * q3);
        [q, q1, q2, q3, q4]
    }

    pub fn chi_star(&self, x: f64) -> f64 {
        self.chi_star_deriv(x, 0)
    }

    /// `d^l chi_* / dx^l` for `l <= 4`.
    pub fn chi_star_deriv(&self, x: f64, l: usize) -> f64 {
        assert!(l <= 4, "chi_* derivatives are available up to order 4");
        2.0 * self.params.mu / self.params.beta * self.q_derivs(x)[l]
    }

    pub fn chi(&self, x: f64, t: f64) -> f64 {
        self.chi_deriv(x, t, 0)
    }

    /// `d^l chi / dx^l` at `(x, t)`.
    pub fn chi_deriv(&self, x: f64, t: f64, l: usize) -> f64 {
        let (z, s) = self.similarity(x, t);
        self.chi_star_deriv(z, l) / s.powi(1 + l as i32)
    }

    pub fn eta_star(&self, x: f64) -> f64 {
        self.r.exp() / self.denominator(x)
    }

    pub fn eta(&self, x: f64, t: f64) -> f64 {
        self.eta_star(self.similarity(x, t).0)
    }

    /// `eta_x = (beta / 2 mu) chi eta`.
    pub fn eta_x(&self, x: f64, t: f64) -> f64 {
        let (z, s) = self.similarity(x, t);
        self.q_derivs(z)[0] * self.eta_star(z) / s
    }

    /// `V_* = (4 pi mu)^{-1/2} d/dx (eta_* e^{-x^2/4mu})`, expanded by the product rule.
    pub fn v_star(&self, x: f64) -> f64 {
        let mu = self.params.mu;
        let g = (-x * x / (4.0 * mu)).exp() / (4.0 * PI * mu).sqrt();
        g * self.eta_star(x) * (self.q_derivs(x)[0] - x / (2.0 * mu))
    }

    /// `V(x, t) = -kappa d V_*(zeta) log(1 + t) / (1 + t)`.
    pub fn second_profile_v(&self, x: f64, t: f64) -> f64 {
        let (z, s) = self.similarity(x, t);
        let c = &self.consts;
        -c.kappa * c.d_const * self.v_star(z) * t.ln_1p() / (s * s)
    }

    /// `F_* = gamma chi_*'' / eta_* - kappa d (4 pi mu)^{-1/2} e^{-x^2/4mu}`.
    pub fn f_star(&self, x: f64) -> f64 {
        let mu = self.params.mu;
        let c = &self.consts;
        self.params.gamma() * self.chi_star_deriv(x, 2) / self.eta_star(x)
            - c.kappa * c.d_const * (-x * x / (4.0 * mu)).exp() / (4.0 * PI * mu).sqrt()
    }

    /// `d = int chi_*^3 / eta_*` by adaptive Gauss-Legendre over the tail radius.
    pub fn compute_d(&self) -> Result<f64> {
        if self.consts.mass == 0.0 {
            return Ok(0.0);
        }
        let f = |y: f64| self.chi_star(y).powi(3) / self.eta_star(y);
        let r = self.tail_radius();
        let coarse = Rule::new(64).integrate(&f, -r, r);
        quad::integrate(f, -r, r, 1e-14 * coarse.abs())
    }

    /// `W(x, t)` with amplitude `theta0 + theta1`.
    pub fn third_profile_w(&self, x: f64, t: f64) -> Result<f64> {
        let theta = self
            .consts
            .theta()
            .ok_or_else(|| Error::Config("theta is required for W but was not computed".into()))?;
        Ok(self.w_with_amplitude(x, t, theta))
    }

    /// `theta V_*(zeta) / (1 + t)` for an explicit amplitude.
    pub fn w_with_amplitude(&self, x: f64, t: f64, theta: f64) -> f64 {
        let (z, s) = self.similarity(x, t);
        theta * self.v_star(z) / (s * s)
    }

    pub fn psi_star(&self, x: f64) -> Result<f64> {
        let table = self.psi_table()?;
        Ok(self.psi_from_table(table, x))
    }

    pub fn third_profile_psi(&self, x: f64, t: f64) -> Result<f64> {
        let (z, s) = self.similarity(x, t);
        Ok(self.psi_star(z)? / (s * s))
    }

    /// `Q = W + Psi`.
    pub fn third_profile_q(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.third_profile_w(x, t)? + self.third_profile_psi(x, t)?)
    }

    /// `Psi_*` at `xs` using a fixed number of Gauss-Legendre nodes in sigma.
    pub fn psi_star_fixed(&self, xs: &[f64], sigma_nodes: usize) -> Vec<f64> {
        let table = self.build_psi_table(sigma_nodes);
        xs.iter().map(|&x| self.psi_from_table(&table, x)).collect()
    }

    fn psi_from_table(&self, table: &PsiTable, x: f64) -> f64 {
        let (j, jp) = table.eval(x);
        -self.eta_star(x) * (self.q_derivs(x)[0] * j + jp)
    }

    fn psi_table(&self) -> Result<&PsiTable> {
        if let Some(t) = self.psi.get() {
            return Ok(t);
        }
        let mut n = 24;
        let mut prev = self.build_psi_table(n);
        loop {
            n *= 2;
            let next = self.build_psi_table(n);
            let scale = next.j_hat.iter().fold(0.0f64, |m, c| m.max(c.norm()));
            let gap = prev
                .j_hat
                .iter()
                .zip(&next.j_hat)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
            if gap <= PSI_REFINE_TOL * scale {
                let _ = self.psi.set(Arc::new(next));
                return Ok(self.psi.get().expect("just set"));
            }
            if n >= 1536 {
                return Err(Error::Tolerance(format!(
                    "Psi_* sigma quadrature did not settle: gap {gap:e} vs scale {scale:e}"
                )));
            }
            prev = next;
        }
    }

    /// `J^(xi) = int_0^1 (2 / sigma) exp(-mu (1 - sigma^2) xi^2) F_*^(sigma xi) dsigma`.
    fn build_psi_table(&self, sigma_nodes: usize) -> PsiTable {
        let mu = self.params.mu;
        let radius = self.tail_radius();
        let half_length = 2.0 * radius;
        let dk = PI / half_length;
        let mut j_hat = vec![Complex64::default(); PSI_MODES];
        if self.consts.mass == 0.0 {
            return PsiTable { half_length, dk, j_hat };
        }

        let hy = 0.05 * mu.sqrt() / (1.0 + 0.25 * self.r.abs().sqrt());
        let ny = (2.0 * radius / hy).ceil() as usize;
        let ys: Vec<f64> = (0..=ny).map(|j| -radius + j as f64 * hy).collect();
        let fs: Vec<f64> = ys.iter().map(|&y| self.f_star(y)).collect();

        let rule = Rule::new(sigma_nodes);
        let mut f_hat = vec![Complex64::default(); PSI_MODES];
        for (sigma, w) in rule.mapped(0.0, 1.0) {
            f_hat.iter_mut().for_each(|c| *c = Complex64::default());
            for (&y, &f) in ys.iter().zip(&fs) {
                let rot = Complex64::from_polar(1.0, -sigma * dk * y);
                let mut z = Complex64::new(f, 0.0);
                for c in f_hat.iter_mut() {
                    *c += z;
                    z *= rot;
                }
            }
            for (m, c) in j_hat.iter_mut().enumerate() {
                let xi = dk * m as f64;
                let damp = (-mu * (1.0 - sigma * sigma) * xi * xi).exp();
                *c += f_hat[m] * (hy * w * 2.0 / sigma * damp);
            }
        }
        PsiTable { half_length, dk, j_hat }
    }

    /// `U[h](x, t, tau) = d/dx( eta(x, t) [G0(t - tau) * (eta(., tau)^{-1} H)](x) )`, `H' = h`.
    ///
    /// `H` tends to `int h` on the right, so a smooth step carrying that limit is
    /// split off and convolved in closed form; the remainder is periodic.
    pub fn u_operator(&self, h: &Field, t: f64, tau: f64) -> Result<Field> {
        if !(tau >= 0.0 && tau < t) {
            return Err(Error::Domain(format!("U needs 0 <= tau < t, got tau = {tau}, t = {t}")));
        }
        let grid = &h.grid;
        let mu = self.params.mu;
        let alpha = self.params.alpha();
        let dt = t - tau;
        let width = mu.sqrt().max(4.0 * grid.spacing());
        let step = |x: f64, var: f64| 0.5 * libm::erfc(-x / (2.0 * var).sqrt());
        let bump = |x: f64, var: f64| (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        let var0 = width * width;

        // Antiderivative of h: closed-form step for the mass, spectral for the rest.
        let mass = h.integral();
        let rest = h.zip_with(&Field::from_fn(grid, |x| bump(x, var0)), |a, b| a - mass * b)?;
        let mut big_h = antiderivative(&rest)?;
        let base = big_h.values[0];
        for (v, x) in big_h.values.iter_mut().zip(grid.points()) {
            *v += mass * step(x, var0) - base;
        }

        // eta(., tau)^{-1} H tends to c = mass e^{-R} on the right.
        let c = mass * (-self.r).exp();
        let k = Field::new(
            grid.clone(),
            big_h
                .values
                .iter()
                .zip(grid.points())
                .map(|(&v, x)| v / self.eta(x, tau) - c * step(x, var0))
                .collect(),
        )?;
        let conv = apply_multiplier(&k, |xi| {
            Complex64::from_polar((-mu * dt * xi * xi).exp(), -alpha * dt * xi)
        })?;
        conv.warn_if_truncated("U-operator convolution");
        let conv_x = derivative(&conv, 1);
        let var1 = var0 + 2.0 * mu * dt;
        let values = grid
            .points()
            .into_iter()
            .enumerate()
            .map(|(j, x)| {
                let xs = x - alpha * dt;
                let y = conv.values[j] + c * step(xs, var1);
                let yx = conv_x.values[j] + c * bump(xs, var1);
                self.eta_x(x, t) * y + self.eta(x, t) * yx
            })
            .collect();
        Field::new(grid.clone(), values)
    }
}

/// Antiderivative of a zero-mean periodic field, fixed to vanish at the left edge.
pub fn antiderivative(f: &Field) -> Result<Field> {
    let mean = f.integral() / (2.0 * f.grid.half_length());
    let tol = 1e-10 * f.max_abs().max(1e-300);
    if mean.abs() > tol {
        return Err(Error::Consistency(format!("antiderivative of a field with mean {mean:e}")));
    }
    let nyq = f.grid.nyquist();
    let g = apply_multiplier(f, |xi| {
        if xi == 0.0 || xi.abs() >= nyq {
            Complex64::default()
        } else {
            Complex64::new(0.0, -1.0 / xi)
        }
    })?;
    let v0 = g.values[0];
    Ok(g.map(|v| v - v0))
}

/// Samples `P(x + shift)` on `grid`, for profiles evaluated in a moving frame.
pub fn sample(grid: &Arc<Grid>, shift: f64, p: impl Fn(f64) -> f64) -> Field {
    Field::from_fn(grid, |x| p(x + shift))
}

/// Fallible variant of [`sample`].
pub fn try_sample(grid: &Arc<Grid>, shift: f64, p: impl Fn(f64) -> Result<f64>) -> Result<Field> {
    let values = grid.points().into_iter().map(|x| p(x + shift)).collect::<Result<Vec<_>>>()?;
    Field::new(grid.clone(), values)
}
