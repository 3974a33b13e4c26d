//! Time integration with the linear part treated exactly per Fourier mode.
//!
//! Every equation is written `u_t = L u + N(u, t)` in spectral space. `L` is the
//! diagonal symbol from [`crate::model::linear_symbol`], optionally seen from the
//! frame moving at speed `alpha`. `N` is `-(beta/2)(u^2)_x` with two-thirds
//! dealiasing, or for the auxiliary linear problem `-(beta chi v)_x + forcing`.
//!
//! Two schemes are provided: ETDRK4 (Cox-Matthews, contour-free phi functions)
//! and variable-step IMEX-BDF2, started with one ETDRK4 step.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{linear_symbol, EquationTag, ModelParams};
use crate::profiles::Profiles;
use crate::spectral::{from_spectrum, is_retained, mode_index, Field, Grid, Spectrum};

/// Space-time function evaluated in lab coordinates.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Background and forcing of the linearized equation
/// `v_t + alpha v_x + (beta chi v)_x - mu v_xx = forcing`.
#[derive(Clone)]
pub struct AuxTerms {
    pub background: SpaceTimeFn,
    pub forcing: SpaceTimeFn,
}

impl AuxTerms {
    /// `chi` as background and `-gamma chi_xxx` as forcing, both analytic.
    pub fn from_profiles(prof: &Profiles) -> Self {
        let gamma = prof.params().gamma();
        let p1 = Arc::new(prof.clone());
        let p2 = p1.clone();
        AuxTerms {
            background: Arc::new(move |x, t| p1.chi(x, t)),
            forcing: Arc::new(move |x, t| -gamma * p2.chi_deriv(x, t, 3)),
        }
    }
}

impl fmt::Debug for AuxTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AuxTerms { .. }")
    }
}

/// Equation to integrate; only the auxiliary problem carries extra data.
#[derive(Debug, Clone)]
pub enum EquationKind {
    ViscousFW,
    KdVBurgers,
    Burgers,
    AuxLinear(AuxTerms),
}

impl EquationKind {
    pub fn tag(&self) -> EquationTag {
        match self {
            EquationKind::ViscousFW => EquationTag::ViscousFW,
            EquationKind::KdVBurgers => EquationTag::KdVBurgers,
            EquationKind::Burgers => EquationTag::Burgers,
            EquationKind::AuxLinear(_) => EquationTag::AuxLinear,
        }
    }

    /// Kinds without forcing; `AuxLinear` needs [`AuxTerms`].
    pub fn from_tag(tag: EquationTag) -> Result<Self> {
        match tag {
            EquationTag::ViscousFW => Ok(EquationKind::ViscousFW),
            EquationTag::KdVBurgers => Ok(EquationKind::KdVBurgers),
            EquationTag::Burgers => Ok(EquationKind::Burgers),
            EquationTag::AuxLinear => {
                Err(Error::Config("AuxLinear needs a background and forcing".into()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    #[serde(rename = "etdrk4")]
    Etdrk4,
    #[serde(rename = "imex-bdf2")]
    ImexBdf2,
}

/// Largest step accepted regardless of the solution size.
pub const DT_CAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub moving_frame: bool,
    #[serde(default)]
    pub scheme: Scheme,
}

/// `min(0.5 h / (|beta| max|u|), 0.05)`.
pub fn cfl_limit(p: &ModelParams, grid: &Grid, max_u: f64) -> f64 {
    let adv = p.beta.abs() * max_u;
    if adv > 0.0 {
        (0.5 * grid.spacing() / adv).min(DT_CAP)
    } else {
        DT_CAP
    }
}

impl SolverConfig {
    /// Checks step size, end time and snapshot ordering.
    pub fn validate(&self, p: &ModelParams, grid: &Grid, max_u: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::Config("at least one snapshot time is required".into()));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("snapshot times must be strictly increasing".into()));
        }
        let (first, last) = (self.snapshot_times[0], *self.snapshot_times.last().unwrap());
        if first < 0.0 || last > self.t_end {
            return Err(Error::Config(format!(
                "snapshot times must lie in [0, {}], got [{first}, {last}]",
                self.t_end
            )));
        }
        let limit = cfl_limit(p, grid, max_u);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!("dt = {} exceeds the CFL limit {limit}", self.dt)));
        }
        Ok(())
    }
}

/// Snapshots of one run. Fields are stored in the computational frame.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub kind: EquationTag,
    pub grid: Arc<Grid>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub config: SolverConfig,
}

impl Trajectory {
    /// Lab position of the grid origin at time `t`: `alpha t` in the moving frame.
    pub fn frame_shift_at(&self, t: f64) -> f64 {
        if self.config.moving_frame {
            self.params.alpha() * t
        } else {
            0.0
        }
    }

    pub fn frame_shift(&self, i: usize) -> f64 {
        self.frame_shift_at(self.times[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::integral).collect()
    }
}

/// Exact linear evolution over `dt`: multiplies each mode by `exp(L(xi) dt)`.
pub fn linear_propagator(
    p: &ModelParams,
    kind: EquationTag,
    s: &Spectrum,
    dt: f64,
    frame_speed: f64,
) -> Result<Spectrum> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!("propagator needs dt >= 0, got {dt}")));
    }
    Ok(s.scaled_by(|xi| (linear_symbol(kind, p, xi, frame_speed) * dt).exp()))
}

/// `phi_1`, `phi_2`, `phi_3` at `z`.
pub fn phi_functions(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 0.5 {
        let mut out = [Complex64::default(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            // sum_n z^n / (n + k + 1)!
            let mut term = Complex64::new(1.0 / factorial(k + 1), 0.0);
            let mut acc = term;
            for n in 1..25 {
                term *= z / (n + k + 1) as f64;
                acc += term;
            }
            *o = acc;
        }
        out
    } else {
        let ez = z.exp();
        let p1 = (ez - 1.0) / z;
        let p2 = (ez - 1.0 - z) / (z * z);
        let p3 = (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
        [p1, p2, p3]
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

struct EtdCoeffs {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoeffs {
    fn new(lin: &[Complex64], h: f64) -> Self {
        let n = lin.len();
        let mut c = EtdCoeffs {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in lin {
            let z = l * h;
            let [p1, p2, p3] = phi_functions(z);
            let [h1, _, _] = phi_functions(0.5 * z);
            c.e.push(z.exp());
            c.e2.push((0.5 * z).exp());
            c.q.push(0.5 * h * h1);
            c.f1.push(h * (p1 - 3.0 * p2 + 4.0 * p3));
            c.f2.push(h * (p2 - 2.0 * p3));
            c.f3.push(h * (-p2 + 4.0 * p3));
        }
        c
    }
}

/// Reusable stepping state for one grid and equation.
struct Integrator<'a> {
    p: ModelParams,
    kind: &'a EquationKind,
    grid: Arc<Grid>,
    frame_speed: f64,
    lin: Vec<Complex64>,
    ik: Vec<Complex64>,
    dealias: Vec<bool>,
    cache: HashMap<u64, EtdCoeffs>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    blowup_level: f64,
}

impl<'a> Integrator<'a> {
    fn new(p: ModelParams, kind: &'a EquationKind, grid: Arc<Grid>, moving: bool, u0_max: f64) -> Self {
        let frame_speed = if moving { p.alpha() } else { 0.0 };
        let n = grid.size();
        let tag = kind.tag();
        let lin = grid.wavenumbers().iter().map(|&xi| linear_symbol(tag, &p, xi, frame_speed)).collect();
        let ik = (0..n)
            .map(|j| if j == n / 2 { Complex64::default() } else { Complex64::new(0.0, grid.wavenumbers()[j]) })
            .collect();
        let dealias = (0..n).map(|j| is_retained(mode_index(j, n), n)).collect();
        Integrator {
            p,
            kind,
            frame_speed,
            lin,
            ik,
            dealias,
            cache: HashMap::new(),
            buf: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); grid.scratch_len()],
            blowup_level: 1e6 * u0_max.max(1.0),
            grid,
        }
    }

    fn to_real(&mut self, s: &[Complex64]) -> Vec<f64> {
        self.buf.copy_from_slice(s);
        self.grid.inverse_in_place(&mut self.buf, &mut self.scratch);
        self.buf.iter().map(|c| c.re).collect()
    }

    fn to_spec(&mut self, v: &[f64], out: &mut [Complex64]) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = Complex64::new(x, 0.0);
        }
        self.grid.forward_in_place(out, &mut self.scratch);
    }

    /// Nonlinear term in spectral space; checks the real-space state for blow-up.
    fn nonlinear(&mut self, s: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let u = self.to_real(s);
        let max = u.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if !(max <= self.blowup_level) {
            return Err(Error::BlowUp { time: t, max_amplitude: max });
        }
        let n = u.len();
        let mut out = vec![Complex64::default(); n];
        match self.kind {
            EquationKind::AuxLinear(aux) => {
                let shift = self.frame_speed * t;
                let (bg, forcing) = (aux.background.clone(), aux.forcing.clone());
                let prod: Vec<f64> = (0..n)
                    .map(|j| self.p.beta * bg(self.grid.x(j) + shift, t) * u[j])
                    .collect();
                self.to_spec(&prod, &mut out);
                for j in 0..n {
                    out[j] = if self.dealias[j] { -self.ik[j] * out[j] } else { Complex64::default() };
                }
                let f: Vec<f64> = (0..n).map(|j| forcing(self.grid.x(j) + shift, t)).collect();
                let mut fs = vec![Complex64::default(); n];
                self.to_spec(&f, &mut fs);
                for (o, x) in out.iter_mut().zip(fs) {
                    *o += x;
                }
            }
            _ => {
                let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
                self.to_spec(&sq, &mut out);
                let c = -0.5 * self.p.beta;
                for j in 0..n {
                    out[j] = if self.dealias[j] { c * self.ik[j] * out[j] } else { Complex64::default() };
                }
            }
        }
        Ok(out)
    }

    fn coeffs(&mut self, h: f64) -> &EtdCoeffs {
        let lin = &self.lin;
        self.cache.entry(h.to_bits()).or_insert_with(|| EtdCoeffs::new(lin, h))
    }

    /// One ETDRK4 step; also returns `N(v, t)` for reuse by multistep schemes.
    fn etdrk4(&mut self, v: &[Complex64], t: f64, h: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let nv = self.nonlinear(v, t)?;
        self.coeffs(h);
        let n = v.len();
        let a: Vec<Complex64> = {
            let c = &self.cache[&h.to_bits()];
            (0..n).map(|j| c.e2[j] * v[j] + c.q[j] * nv[j]).collect()
        };
        let na = self.nonlinear(&a, t + 0.5 * h)?;
        let b: Vec<Complex64> = {
            let c = &self.cache[&h.to_bits()];
            (0..n).map(|j| c.e2[j] * v[j] + c.q[j] * na[j]).collect()
        };
        let nb = self.nonlinear(&b, t + 0.5 * h)?;
        let cc: Vec<Complex64> = {
            let c = &self.cache[&h.to_bits()];
            (0..n).map(|j| c.e2[j] * a[j] + c.q[j] * (2.0 * nb[j] - nv[j])).collect()
        };
        let nc = self.nonlinear(&cc, t + h)?;
        let c = &self.cache[&h.to_bits()];
        let out = (0..n)
            .map(|j| c.e[j] * v[j] + c.f1[j] * nv[j] + 2.0 * c.f2[j] * (na[j] + nb[j]) + c.f3[j] * nc[j])
            .collect();
        Ok((out, nv))
    }

    fn spectrum_of(&mut self, f: &Field) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); f.values.len()];
        self.to_spec(&f.values, &mut out);
        out
    }

    fn field_of(&mut self, s: &[Complex64]) -> Field {
        Field { grid: self.grid.clone(), values: self.to_real(s) }
    }
}

/// Multistep history for IMEX-BDF2.
struct Bdf2State {
    prev: Vec<Complex64>,
    prev_n: Vec<Complex64>,
    prev_h: f64,
}

/// Advances `f` by one step of `cfg.dt` from time `t`.
///
/// IMEX-BDF2 needs history, so a lone step always uses the ETDRK4 starter.
pub fn step(p: &ModelParams, kind: &EquationKind, cfg: &SolverConfig, f: &Field, t: f64) -> Result<Field> {
    let mut it = Integrator::new(*p, kind, f.grid.clone(), cfg.moving_frame, f.max_abs());
    let s = it.spectrum_of(f);
    let (next, _) = it.etdrk4(&s, t, cfg.dt)?;
    Ok(it.field_of(&next))
}

/// Integrates from `u0` and records the requested snapshots.
///
/// Steps are shortened uniformly inside each interval between snapshot times so
/// every snapshot lands exactly on its time.
pub fn simulate(p: &ModelParams, kind: &EquationKind, cfg: &SolverConfig, u0: &Field) -> Result<Trajectory> {
    p.validate()?;
    let grid = u0.grid.clone();
    let amp = match kind {
        EquationKind::AuxLinear(aux) => {
            let bg = aux.background.clone();
            u0.max_abs().max(grid.points().iter().fold(0.0f64, |m, &x| m.max(bg(x, 0.0).abs())))
        }
        _ => u0.max_abs(),
    };
    cfg.validate(p, &grid, amp)?;
    if !u0.decay_guard() {
        return Err(Error::Config(format!(
            "initial data does not decay inside the domain (outer-band ratio {:e})",
            u0.guard_ratio()
        )));
    }

    let mut it = Integrator::new(*p, kind, grid.clone(), cfg.moving_frame, u0.max_abs());
    let mut v = it.spectrum_of(u0);
    let mut t = 0.0;
    let mut bdf: Option<Bdf2State> = None;
    let mut times = Vec::with_capacity(cfg.snapshot_times.len());
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());

    for &target in &cfg.snapshot_times {
        let span = target - t;
        if span > 0.0 {
            let n = ((span / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for k in 0..n {
                let tk = t + k as f64 * h;
                v = match (cfg.scheme, bdf.take()) {
                    (Scheme::Etdrk4, _) => it.etdrk4(&v, tk, h)?.0,
                    (Scheme::ImexBdf2, None) => {
                        let (next, nv) = it.etdrk4(&v, tk, h)?;
                        bdf = Some(Bdf2State { prev: v, prev_n: nv, prev_h: h });
                        next
                    }
                    (Scheme::ImexBdf2, Some(st)) => {
                        let nv = it.nonlinear(&v, tk)?;
                        let w = h / st.prev_h;
                        let a0 = (1.0 + 2.0 * w) / (1.0 + w);
                        let a1 = 1.0 + w;
                        let a2 = w * w / (1.0 + w);
                        let next = (0..v.len())
                            .map(|j| {
                                let rhs = a1 * v[j] - a2 * st.prev[j]
                                    + h * ((1.0 + w) * nv[j] - w * st.prev_n[j]);
                                rhs / (a0 - h * it.lin[j])
                            })
                            .collect();
                        bdf = Some(Bdf2State { prev: v, prev_n: nv, prev_h: h });
                        next
                    }
                };
            }
            t = target;
        }
        let field = it.field_of(&v);
        if !field.is_finite() {
            return Err(Error::BlowUp { time: t, max_amplitude: f64::INFINITY });
        }
        if !field.decay_guard() {
            return Err(Error::DomainTooSmall {
                time: t,
                ratio: field.guard_ratio(),
                threshold: crate::spectral::GUARD_THRESHOLD,
            });
        }
        times.push(target);
        snapshots.push(field);
    }

    Ok(Trajectory { params: *p, kind: kind.tag(), grid, times, snapshots, config: cfg.clone() })
}

/// Green function `T(x, t)` of the viscous Fornberg-Whitham linear part.
pub fn green_function_field(p: &ModelParams, grid: &Arc<Grid>, t: f64) -> Result<Field> {
    green_function_shifted(p, grid, t, 0.0)
}

/// `T(x + shift, t)` on `grid`; `shift = alpha t` centres it in the moving frame.
pub fn green_function_shifted(p: &ModelParams, grid: &Arc<Grid>, t: f64, shift: f64) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Green function needs t > 0, got {t}")));
    }
    let norm = 1.0 / (2.0 * grid.half_length());
    let n = grid.size();
    let coeffs = grid
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &xi)| {
            let z = linear_symbol(EquationTag::ViscousFW, p, xi, 0.0) * t + Complex64::new(0.0, xi * shift);
            let c = z.exp() * norm;
            if j == n / 2 {
                Complex64::new(c.re, 0.0)
            } else {
                c
            }
        })
        .collect();
    let field = from_spectrum(&Spectrum::new(grid.clone(), coeffs)?);
    if !field.decay_guard() {
        return Err(Error::DomainTooSmall {
            time: t,
            ratio: field.guard_ratio(),
            threshold: crate::spectral::GUARD_THRESHOLD,
        });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::to_spectrum;
    use std::f64::consts::PI;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_branches_agree_near_switch() {
        for &z in &[Complex64::new(0.49, 0.0), Complex64::new(-0.3, 0.39), Complex64::new(0.0, -0.499)] {
            let series = phi_functions(z);
            let ez = z.exp();
            let direct = [(ez - 1.0) / z, (ez - 1.0 - z) / (z * z), (ez - 1.0 - z - 0.5 * z * z) / (z * z * z)];
            for k in 0..3 {
                assert!((series[k] - direct[k]).norm() < 1e-12, "k={k} z={z}");
            }
        }
        let at0 = phi_functions(Complex64::default());
        assert!((at0[0].re - 1.0).abs() < 1e-16 && (at0[1].re - 0.5).abs() < 1e-16);
        assert!((at0[2].re - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn propagator_identity_and_modulus() {
        let p = unit();
        let g = Grid::new(10.0, 64).unwrap();
        let s = to_spectrum(&Field::from_fn(&g, |x| (-x * x).exp()));
        let same = linear_propagator(&p, EquationTag::ViscousFW, &s, 0.0, 0.0).unwrap();
        assert_eq!(same, s);
        let out = linear_propagator(&p, EquationTag::ViscousFW, &s, 0.3, 0.0).unwrap();
        for (j, &xi) in g.wavenumbers().iter().enumerate() {
            let ratio = out.coeffs[j].norm() / s.coeffs[j].norm();
            if s.coeffs[j].norm() > 1e-200 {
                assert!((ratio - (-0.3 * xi * xi).exp()).abs() < 1e-13 * (1.0 + ratio));
            }
        }
        assert!(linear_propagator(&p, EquationTag::ViscousFW, &s, -1.0, 0.0).is_err());
    }

    #[test]
    fn cfl_and_config_validation() {
        let p = unit();
        let g = Grid::new(10.0, 64).unwrap();
        let good = SolverConfig { dt: 0.01, t_end: 1.0, snapshot_times: vec![0.0, 1.0], moving_frame: false, scheme: Scheme::Etdrk4 };
        assert!(good.validate(&p, &g, 1.0).is_ok());
        let mut bad = good.clone();
        bad.dt = 0.2;
        assert!(bad.validate(&p, &g, 0.0).is_err());
        let mut bad = good.clone();
        bad.snapshot_times = vec![0.5, 0.2];
        assert!(bad.validate(&p, &g, 1.0).is_err());
        let mut bad = good.clone();
        bad.snapshot_times = vec![2.0];
        assert!(bad.validate(&p, &g, 1.0).is_err());
        // 0.5 h / max|u| = 0.5 * 0.3125 / 10
        assert!((cfl_limit(&p, &g, 10.0) - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = unit();
        let g = Grid::new(20.0, 128).unwrap();
        let cfg = SolverConfig { dt: 0.05, t_end: 2.0, snapshot_times: vec![0.0, 1.0, 2.0], moving_frame: true, scheme: Scheme::Etdrk4 };
        let tr = simulate(&p, &EquationKind::ViscousFW, &cfg, &Field::zeros(&g)).unwrap();
        assert!(tr.snapshots.iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(tr.times, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn green_function_basics() {
        let p = unit();
        let g = Grid::new(64.0, 1024).unwrap();
        let t = green_function_field(&p, &g, 2.0).unwrap();
        assert!((t.integral() - 1.0).abs() < 1e-13);
        assert!(green_function_field(&p, &g, 0.0).is_err());
        let tiny = Grid::new(5.0, 64).unwrap();
        assert!(matches!(green_function_field(&p, &tiny, 20.0), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn heat_equation_variance_growth() {
        // Vanishing dispersion and nonlinearity in the moving frame reduce to pure heat flow.
        let p = ModelParams::new(1e-300, 1.0, 1.0, 0.5).unwrap();
        let g = Grid::new(30.0, 256).unwrap();
        let v0 = 0.7;
        let u0 = Field::from_fn(&g, |x| (-x * x / (2.0 * v0)).exp() / (2.0 * PI * v0).sqrt());
        let cfg = SolverConfig { dt: 0.05, t_end: 0.05, snapshot_times: vec![0.05], moving_frame: true, scheme: Scheme::Etdrk4 };
        let tr = simulate(&p, &EquationKind::Burgers, &cfg, &u0).unwrap();
        let f = &tr.snapshots[0];
        let var = f.values.iter().zip(g.points()).map(|(v, x)| v * x * x).sum::<f64>() * g.spacing();
        assert!((var - (v0 + 2.0 * 0.5 * 0.05)).abs() < 1e-12);
    }
}
