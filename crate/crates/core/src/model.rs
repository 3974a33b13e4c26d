//! Physical parameters and Fourier symbols.
//!
//! The viscous Fornberg-Whitham equation
//!
//! ```text
//! u_t + beta u u_x + 2 B b (b^2 - d_xx)^{-1} u_x = mu u_xx
//! ```
//!
//! has linear symbol `-mu xi^2 - i omega(xi)` with `omega(xi) = 2 B b xi / (b^2 + xi^2)`.
//! Expanding `omega` for small `xi` gives the matched KdV-Burgers phase
//! `alpha xi - gamma xi^3` with `alpha = 2B/b` and `gamma = 2B/b^3`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `beta`, `B`, `b`, `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    #[serde(rename = "B")]
    pub cap_b: f64,
    #[serde(rename = "b")]
    pub small_b: f64,
    pub mu: f64,
}

/// Drift speed and effective third-order dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, cap_b: f64, small_b: f64, mu: f64) -> Result<Self> {
        let p = ModelParams { beta, cap_b, small_b, mu };
        p.validate()?;
        Ok(p)
    }

    /// Checks `B > 0`, `b > 0`, `mu > 0`, `beta != 0`.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.beta, self.cap_b, self.small_b, self.mu]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if self.cap_b <= 0.0 || self.small_b <= 0.0 || self.mu <= 0.0 {
            return Err(Error::Config(format!(
                "need B > 0, b > 0, mu > 0 (got B={}, b={}, mu={})",
                self.cap_b, self.small_b, self.mu
            )));
        }
        if self.beta == 0.0 {
            return Err(Error::Config("beta must be nonzero".into()));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedParams {
        let alpha = 2.0 * self.cap_b / self.small_b;
        DerivedParams { alpha, gamma: alpha / (self.small_b * self.small_b) }
    }

    pub fn alpha(&self) -> f64 {
        self.derived().alpha
    }

    pub fn gamma(&self) -> f64 {
        self.derived().gamma
    }

    /// `kappa = beta^2 B / (4 b^3 mu^2)`.
    pub fn kappa(&self) -> f64 {
        let b = self.small_b;
        self.beta * self.beta * self.cap_b / (4.0 * b * b * b * self.mu * self.mu)
    }
}

/// `omega(xi) = 2 B b xi / (b^2 + xi^2)`.
pub fn dispersion_symbol(p: &ModelParams, xi: f64) -> f64 {
    let b = p.small_b;
    2.0 * p.cap_b * b * xi / (b * b + xi * xi)
}

/// `(i xi)^l / (b^2 + xi^2)`, the symbol of `(b^2 - d_xx)^{-1} d_x^l`.
pub fn helmholtz_multiplier(p: &ModelParams, xi: f64, l: u32) -> Complex64 {
    let b = p.small_b;
    i_xi_pow(xi, l) / (b * b + xi * xi)
}

/// `alpha xi - gamma xi^3`: phase of `alpha u_x + gamma u_xxx`.
pub fn kdvb_symbol(p: &ModelParams, xi: f64) -> f64 {
    let d = p.derived();
    d.alpha * xi - d.gamma * xi * xi * xi
}

/// `(i xi)^l` without going through `powi` on complex numbers.
pub fn i_xi_pow(xi: f64, l: u32) -> Complex64 {
    let m = xi.powi(l as i32);
    match l % 4 {
        0 => Complex64::new(m, 0.0),
        1 => Complex64::new(0.0, m),
        2 => Complex64::new(-m, 0.0),
        _ => Complex64::new(0.0, -m),
    }
}

/// Which evolution equation a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquationTag {
    ViscousFW,
    KdVBurgers,
    /// Burgers with the drift `alpha u_x`, whose exact solution is `chi`.
    Burgers,
    /// Linearization around `chi` with the dispersive forcing.
    AuxLinear,
}

/// Real phase `phi` of the linear part, written `u_t + phi(-i d_x) u = mu u_xx`.
pub fn phase(tag: EquationTag, p: &ModelParams, xi: f64) -> f64 {
    match tag {
        EquationTag::ViscousFW => dispersion_symbol(p, xi),
        EquationTag::KdVBurgers => kdvb_symbol(p, xi),
        EquationTag::Burgers | EquationTag::AuxLinear => p.alpha() * xi,
    }
}

/// Linear symbol `-mu xi^2 - i (phi(xi) - c xi)` seen from a frame moving at speed `c`.
pub fn linear_symbol(tag: EquationTag, p: &ModelParams, xi: f64, frame_speed: f64) -> Complex64 {
    let ph = match tag {
        // Written in closed form to avoid cancellation between omega and alpha xi.
        EquationTag::ViscousFW if frame_speed == p.alpha() => {
            let b = p.small_b;
            -p.alpha() * xi * xi * xi / (b * b + xi * xi)
        }
        EquationTag::KdVBurgers if frame_speed == p.alpha() => -p.gamma() * xi * xi * xi,
        EquationTag::Burgers | EquationTag::AuxLinear if frame_speed == p.alpha() => 0.0,
        _ => phase(tag, p, xi) - frame_speed * xi,
    };
    Complex64::new(-p.mu * xi * xi, -ph)
}
