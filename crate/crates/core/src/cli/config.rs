//! Run configuration read from TOML.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{EquationTag, ModelParams};
use crate::profiles::Profiles;
use crate::solver::{Scheme, SolverConfig};
use crate::spectral::{Field, Grid, GridSpec};

/// One experiment: model, equation, grid, time stepping, data and requested outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Run directory name; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelParams,
    pub kind: EquationTag,
    pub grid: GridSpec,
    pub solver: SolverSection,
    pub initial_data: InitialData,
    #[serde(default)]
    pub analyses: Analyses,
}

/// Time stepping. Snapshot times are the union of an explicit list, a uniform
/// set every `snapshot_every`, and `snapshot_log_count` times spaced evenly in
/// `log(1 + t)` and rounded to multiples of `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub snapshot_log_count: Option<usize>,
    #[serde(default)]
    pub moving_frame: bool,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SolverSection {
    pub fn to_solver_config(&self) -> Result<SolverConfig> {
        let mut times = self.snapshot_times.clone();
        if let Some(every) = self.snapshot_every {
            if !(every > 0.0) {
                return Err(Error::Config(format!("snapshot_every must be positive, got {every}")));
            }
            let n = (self.t_end / every + 1e-9).floor() as usize;
            times.extend((0..=n).map(|k| k as f64 * every));
        }
        if let Some(count) = self.snapshot_log_count {
            if count < 2 || !(self.dt > 0.0) {
                return Err(Error::Config("snapshot_log_count needs at least 2 points and dt > 0".into()));
            }
            let top = self.t_end.ln_1p();
            times.extend((0..count).map(|i| {
                let t = (top * i as f64 / (count - 1) as f64).exp_m1();
                (t / self.dt).round() * self.dt
            }));
        }
        times.sort_by(f64::total_cmp);
        let tol = 1e-9 * self.dt.abs().max(f64::MIN_POSITIVE);
        times.dedup_by(|b, a| (*b - *a).abs() <= tol);
        Ok(SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            snapshot_times: times,
            moving_frame: self.moving_frame,
            scheme: self.scheme,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianTerm {
    pub amp: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

fn one() -> f64 {
    1.0
}

impl GaussianTerm {
    fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        self.amp * (-z * z).exp()
    }

    fn mass(&self) -> f64 {
        self.amp * self.width * PI.sqrt()
    }
}

/// Initial data families, evaluated in lab coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    /// `amp exp(-((x - center) / width)^2)`
    Gaussian {
        amp: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    SumOfGaussians { terms: Vec<GaussianTerm> },
    /// `chi(., 0)` carrying `mass`.
    DiffusionWave { mass: f64 },
    /// Two-column CSV `x,u` sampled on the run grid.
    FromFile { path: PathBuf },
}

impl InitialData {
    /// Samples the data; relative file paths resolve against `base`.
    pub fn sample(&self, p: &ModelParams, grid: &Arc<Grid>, base: &Path) -> Result<Field> {
        match self {
            InitialData::Zero => Ok(Field::zeros(grid)),
            InitialData::Gaussian { amp, width, center } => {
                let g = GaussianTerm { amp: *amp, width: *width, center: *center };
                Ok(Field::from_fn(grid, |x| g.eval(x)))
            }
            InitialData::SumOfGaussians { terms } => {
                Ok(Field::from_fn(grid, |x| terms.iter().map(|g| g.eval(x)).sum()))
            }
            InitialData::DiffusionWave { mass } => {
                let prof = Profiles::new(*p, *mass)?;
                Ok(Field::from_fn(grid, |x| prof.chi(x, 0.0)))
            }
            InitialData::FromFile { path } => read_field(grid, &base.join(path)),
        }
    }

    /// Exact mass when the family has one in closed form.
    pub fn exact_mass(&self) -> Option<f64> {
        match self {
            InitialData::Zero => Some(0.0),
            InitialData::Gaussian { amp, width, .. } => Some(amp * width * PI.sqrt()),
            InitialData::SumOfGaussians { terms } => Some(terms.iter().map(GaussianTerm::mass).sum()),
            InitialData::DiffusionWave { mass } => Some(*mass),
            InitialData::FromFile { .. } => None,
        }
    }
}

fn read_field(grid: &Arc<Grid>, path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read initial data {}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(grid.size());
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let bad = || Error::Config(format!("{}:{}: expected 'x,u'", path.display(), line_no + 1));
        let mut cols = line.split(',');
        let x: f64 = cols.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let u: f64 = cols.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let j = values.len();
        if j >= grid.size() || (x - grid.x(j)).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(Error::Config(format!(
                "{}:{}: x = {x} does not match grid point {j}",
                path.display(),
                line_no + 1
            )));
        }
        values.push(u);
    }
    if values.len() != grid.size() {
        return Err(Error::Config(format!(
            "{}: {} rows for a grid of {}",
            path.display(),
            values.len(),
            grid.size()
        )));
    }
    Field::new(grid.clone(), values)
}

/// Norm index: a number in `[1, inf)` or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormIndex(pub f64);

impl Serialize for NormIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Int(v) => v as f64,
            Raw::Str(s) if s == "inf" => f64::INFINITY,
            Raw::Str(s) => return Err(serde::de::Error::custom(format!("norm index '{s}' is not a number or \"inf\""))),
        };
        if !(p >= 1.0) {
            return Err(serde::de::Error::custom(format!("norm index must be >= 1, got {p}")));
        }
        Ok(NormIndex(p))
    }
}

impl std::fmt::Display for NormIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `||d^l (u - profiles)||_p` at every snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormRequest {
    pub order: u32,
    pub p: NormIndex,
    #[serde(default)]
    pub l: u32,
}

/// `||d^l (T - G0)||_p` at every positive snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGapRequest {
    pub p: NormIndex,
    #[serde(default)]
    pub l: u32,
}

/// Decay fit of a stored series, addressed by its key (see [`series_key`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub series: String,
    #[serde(default)]
    pub log_power: u32,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    /// Times at which the profile table is written.
    #[serde(default)]
    pub profiles_at: Vec<f64>,
    #[serde(default)]
    pub norms: Vec<NormRequest>,
    #[serde(default)]
    pub kernel_gaps: Vec<KernelGapRequest>,
    /// Compute `theta0`, `theta1` and their uncertainty.
    #[serde(default)]
    pub theta: bool,
    #[serde(default)]
    pub fits: Vec<FitRequest>,
}

/// `label:p=P:l=L`, the key used in `norms.csv` and by fit requests.
pub fn series_key(label: &str, p: f64, l: u32) -> String {
    format!("{label}:p={}:l={l}", NormIndex(p))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks that do not need the initial data.
    pub fn check(&self) -> Result<()> {
        self.model.validate()?;
        Grid::from_spec(&self.grid)?;
        self.solver.to_solver_config()?;
        if self.kind == EquationTag::AuxLinear {
            return Err(Error::Config("kind AuxLinear is internal and cannot be run from a config".into()));
        }
        for n in &self.analyses.norms {
            crate::analysis::Order::from_index(n.order)?;
        }
        if self.analyses.profiles_at.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("profiles_at times must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "ViscousFW"
[model]
beta = 1.0
B = 1.0
b = 1.0
mu = 1.0
[grid]
L = 20.0
N = 64
[solver]
dt = 0.05
t_end = 1.0
snapshot_every = 0.5
[initial_data]
family = "zero"
"#;

    #[test]
    fn minimal_parses() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.initial_data, InitialData::Zero);
        assert_eq!(cfg.solver.to_solver_config().unwrap().snapshot_times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn snapshot_sources_union() {
        let s = SolverSection {
            dt: 0.05,
            t_end: 100.0,
            snapshot_times: vec![50.0, 0.0],
            snapshot_every: Some(25.0),
            snapshot_log_count: Some(10),
            moving_frame: false,
            scheme: Scheme::Etdrk4,
        };
        let t = s.to_solver_config().unwrap().snapshot_times;
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 100.0);
        assert_eq!(t.iter().filter(|&&x| (x - 50.0).abs() < 1e-9).count(), 1);
        assert!(t.iter().all(|x| ((x / 0.05).round() * 0.05 - x).abs() < 1e-9));
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("mu = 1.0", "mu = 1.0\nnu = 2.0");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("family = \"zero\"", "family = \"gaussian\"\namp = 1.0\nsigma = 2.0");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn norm_index_forms() {
        let a = MINIMAL.to_string() + "[analyses]\nnorms = [{ order = 1, p = \"inf\" }, { order = 2, p = 2 }]\n";
        let cfg = RunConfig::from_toml(&a).unwrap();
        assert!(cfg.analyses.norms[0].p.0.is_infinite());
        assert_eq!(cfg.analyses.norms[1].p.0, 2.0);
        let bad = MINIMAL.to_string() + "[analyses]\nnorms = [{ order = 4, p = 2 }]\n";
        assert!(RunConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn gaussian_mass() {
        let d = InitialData::Gaussian { amp: 0.05, width: 1.0, center: 0.0 };
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(20.0, 256).unwrap();
        let f = d.sample(&p, &grid, Path::new(".")).unwrap();
        assert!((f.integral() - d.exact_mass().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn keys() {
        assert_eq!(series_key("u-chi", f64::INFINITY, 1), "u-chi:p=inf:l=1");
        assert_eq!(series_key("u-chi", 2.0, 0), "u-chi:p=2:l=0");
    }
}
