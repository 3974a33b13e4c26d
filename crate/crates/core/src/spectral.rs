//! Periodic grids, Fourier transforms and spectral operators.
//!
//! A [`Grid`] samples `[-L, L)` at `x_j = -L + j h`. Spectra use Fourier-series
//! coefficients about the origin,
//!
//! ```text
//! c_k = (1/N) sum_j f_j exp(-i xi_k x_j),    f_j = sum_k c_k exp(i xi_k x_j),
//! ```
//!
//! so a whole-line function with transform `f^(xi) = int f e^{-i xi x} dx` has
//! `c_k ~ f^(xi_k) / (2L)`. Coefficients are stored in FFT order: index `j`
//! holds mode `k = j` for `j < N/2` and `k = j - N` otherwise.

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::i_xi_pow;

/// Fraction of the domain at each end inspected by the decay guard.
pub const GUARD_BAND: f64 = 0.05;
/// Largest allowed outer-band amplitude relative to the field maximum.
pub const GUARD_THRESHOLD: f64 = 1e-10;

/// Serializable grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(alias = "L")]
    pub half_length: f64,
    #[serde(alias = "N")]
    pub size: usize,
    /// Permit sizes that are not powers of two.
    #[serde(default)]
    pub allow_any_size: bool,
}

/// Uniform periodic grid with cached FFT plans.
pub struct Grid {
    half_length: f64,
    size: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("size", &self.size)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.size == other.size
    }
}

impl Grid {
    /// Power-of-two grid on `[-L, L)` with `N` points.
    pub fn new(half_length: f64, size: usize) -> Result<Arc<Grid>> {
        Self::from_spec(&GridSpec { half_length, size, allow_any_size: false })
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Arc<Grid>> {
        let (l, n) = (spec.half_length, spec.size);
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Config(format!("grid half-length must be positive, got {l}")));
        }
        if n < 16 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and >= 16, got {n}")));
        }
        if !spec.allow_any_size && !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size {n} is not a power of two (set allow_any_size to override)"
            )));
        }
        let mut planner = FftPlanner::new();
        let dk = std::f64::consts::PI / l;
        let wavenumbers = (0..n).map(|j| mode_index(j, n) as f64 * dk).collect();
        Ok(Arc::new(Grid {
            half_length: l,
            size: n,
            spacing: 2.0 * l / n as f64,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            half_length: self.half_length,
            size: self.size,
            allow_any_size: !self.size.is_power_of_two(),
        }
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest resolved wavenumber `pi / h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.x(j)).collect()
    }

    /// In-place forward transform to origin-referenced coefficients.
    pub fn forward_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
        let inv_n = 1.0 / self.size as f64;
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= if j % 2 == 0 { inv_n } else { -inv_n };
        }
    }

    /// In-place inverse of [`Grid::forward_in_place`].
    pub fn inverse_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        for (j, c) in buf.iter_mut().enumerate() {
            if j % 2 == 1 {
                *c = -*c;
            }
        }
        self.inverse.process_with_scratch(buf, scratch);
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    fn check_same(self: &Arc<Self>, other: &Arc<Grid>) -> Result<()> {
        if Arc::ptr_eq(self, other) || **self == **other {
            Ok(())
        } else {
            Err(Error::Config(format!("grid mismatch: {self:?} vs {other:?}")))
        }
    }
}

/// Band-limited interpolation of `f` onto a grid `factor` times finer.
///
/// The Nyquist coefficient is split evenly between the two new modes `+-N/2`.
pub fn refine(f: &Field, factor: usize) -> Result<Field> {
    let n = f.grid.size();
    let m = n * factor.max(1);
    let fine = Grid::from_spec(&GridSpec { half_length: f.grid.half_length(), size: m, allow_any_size: true })?;
    let s = to_spectrum(f);
    let mut c = vec![Complex64::default(); m];
    for (j, &v) in s.coeffs.iter().enumerate() {
        let k = mode_index(j, n);
        if factor > 1 && k == -(n as i64 / 2) {
            let half = Complex64::new(0.5 * v.re, 0.0);
            c[k.rem_euclid(m as i64) as usize] = half;
            c[(-k) as usize] = half;
        } else {
            c[k.rem_euclid(m as i64) as usize] = v;
        }
    }
    Ok(from_spectrum(&Spectrum::new(fine, c)?))
}

/// Signed mode number of FFT index `j`.
pub fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size {
            return Err(Error::Config(format!(
                "field has {} values but grid has {} points",
                values.len(),
                grid.size
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite sample at index {j}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.size] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.size).map(|j| f(grid.x(j))).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination; grids must agree.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Rectangle-rule integral, spectrally accurate for periodic data.
    pub fn integral(&self) -> f64 {
        self.grid.spacing * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest outer-band amplitude divided by the overall maximum.
    pub fn guard_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        let band = ((GUARD_BAND * n as f64).ceil() as usize).max(1);
        let edge = self.values[..band]
            .iter()
            .chain(&self.values[n - band..])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        edge / max
    }

    /// Whole-line surrogate check: the outer 5% must be negligible.
    pub fn decay_guard(&self) -> bool {
        self.guard_ratio() < GUARD_THRESHOLD
    }

    /// Logs a domain-truncation warning when the guard fails.
    pub fn warn_if_truncated(&self, what: &str) -> bool {
        let ok = self.decay_guard();
        if !ok {
            log::warn!(
                "domain truncation: {what} has outer-band ratio {:e} (threshold {:e})",
                self.guard_ratio(),
                GUARD_THRESHOLD
            );
        }
        ok
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b).expect("grid mismatch in Field addition")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b).expect("grid mismatch in Field subtraction")
    }
}

/// Fourier coefficients about the origin, FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: Arc<Grid>,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.size {
            return Err(Error::Config(format!(
                "spectrum has {} coefficients but grid has {} points",
                coeffs.len(),
                grid.size
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    /// Coefficient of signed mode `k` in `-N/2..N/2`.
    pub fn mode(&self, k: i64) -> Complex64 {
        let n = self.grid.size as i64;
        self.coeffs[k.rem_euclid(n) as usize]
    }

    /// Multiply every mode by `m(xi)` with no symmetry requirement.
    pub fn scaled_by(&self, m: impl Fn(f64) -> Complex64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.grid.wavenumbers)
            .map(|(&c, &xi)| c * m(xi))
            .collect();
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// `sum |c_k|^2`, normalized so that `2L` times it equals the squared L2 norm.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn to_spectrum(f: &Field) -> Spectrum {
    let g = &f.grid;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut scratch = vec![Complex64::default(); g.scratch_len()];
    g.forward_in_place(&mut buf, &mut scratch);
    Spectrum { grid: g.clone(), coeffs: buf }
}

/// Inverse transform keeping the real part.
pub fn from_spectrum(s: &Spectrum) -> Field {
    let g = &s.grid;
    let mut buf = s.coeffs.clone();
    let mut scratch = vec![Complex64::default(); g.scratch_len()];
    g.inverse_in_place(&mut buf, &mut scratch);
    Field { grid: g.clone(), values: buf.iter().map(|c| c.re).collect() }
}

/// Relative tolerance for the Hermitian-symmetry check on multipliers.
const SYMMETRY_TOL: f64 = 1e-12;

/// Scales each mode by `m(xi)` and returns the real result.
///
/// `m(-xi)` must equal `conj(m(xi))`. The unpaired Nyquist mode uses `Re m`, which
/// zeroes it for odd derivatives.
pub fn apply_multiplier(f: &Field, m: impl Fn(f64) -> Complex64) -> Result<Field> {
    let g = &f.grid;
    let n = g.size;
    let ms: Vec<Complex64> = g.wavenumbers.iter().map(|&xi| m(xi)).collect();
    let scale = ms.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    for j in 1..n / 2 {
        let gap = (ms[j] - ms[n - j].conj()).norm();
        if gap > SYMMETRY_TOL * scale {
            return Err(Error::Contract(format!(
                "multiplier is not Hermitian at xi = {} (gap {gap:e})",
                g.wavenumbers[j]
            )));
        }
    }
    if ms[0].im.abs() > SYMMETRY_TOL * scale {
        return Err(Error::Contract("multiplier is not real at xi = 0".into()));
    }
    let mut s = to_spectrum(f);
    for (j, c) in s.coeffs.iter_mut().enumerate() {
        *c *= if j == n / 2 { Complex64::new(ms[j].re, 0.0) } else { ms[j] };
    }
    Ok(from_spectrum(&s))
}

/// `d^l f / dx^l`.
pub fn derivative(f: &Field, l: u32) -> Field {
    if l == 0 {
        return f.clone();
    }
    apply_multiplier(f, |xi| i_xi_pow(xi, l)).expect("(i xi)^l is Hermitian")
}

/// True when mode `k` survives the two-thirds rule.
pub fn is_retained(k: i64, n: usize) -> bool {
    3 * k.unsigned_abs() as usize <= n
}

/// Zeroes modes with `|xi| > (2/3) xi_nyquist`.
pub fn dealias(s: &Spectrum) -> Spectrum {
    let n = s.grid.size;
    let coeffs = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| if is_retained(mode_index(j, n), n) { c } else { Complex64::default() })
        .collect();
    Spectrum { grid: s.grid.clone(), coeffs }
}
