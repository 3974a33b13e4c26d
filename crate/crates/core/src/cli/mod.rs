//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or domain
//! error, 3 blow-up.

pub mod config;
pub mod persist;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, DecayFit, NormSeries, Order, ThetaEstimate};
use crate::error::{Error, Result};
use crate::model::EquationTag;
use crate::oracle::{self, OracleReport};
use crate::profiles::Profiles;
use crate::solver::{simulate, EquationKind, Trajectory};
use crate::spectral::{Field, Grid};

use config::{series_key, RunConfig};
use persist::{csv_table, norms_csv, parse_norms_csv, RunDir};

/// Environment variable overriding the output root.
pub const RUN_DIR_ENV: &str = "FW_RUN_DIR";

#[derive(Debug, Parser)]
#[command(name = "vfw", version, about = "Viscous Fornberg-Whitham asymptotics laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more configs and write their run directories.
    Simulate(SimulateArgs),
    /// Print the profile table at one time as CSV.
    Profiles(ProfilesArgs),
    /// Run the oracle suite and print the reports as JSON.
    Verify(VerifyArgs),
    /// Run matched viscous Fornberg-Whitham and KdV-Burgers problems and compare theta.
    CompareKdvb(CompareArgs),
    /// Refit a stored series from norms.csv.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Output root; overrides FW_RUN_DIR.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Configs run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub t: f64,
    /// Amplitude of W; the W and Q columns are omitted without it.
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Restrict to these checks; an empty list runs nothing.
    #[arg(long, num_args = 0..)]
    pub only: Option<Vec<String>>,
    /// Print the check names and exit.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Run directory or norms.csv file.
    pub input: PathBuf,
    /// Series key, e.g. `u-chi:p=2:l=0`.
    #[arg(long)]
    pub series: String,
    #[arg(long, default_value_t = 0)]
    pub log_power: u32,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    pub window: Option<Vec<f64>>,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Tolerance(_) => 1,
        Error::BlowUp { .. } => 3,
        _ => 2,
    }
}

/// Output root: explicit flag, then `FW_RUN_DIR`, then `./runs`.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(RUN_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Parses the command line and runs it.
pub fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = Cli::parse();
    ExitCode::from(run(cli))
}

pub fn run(cli: Cli) -> u8 {
    let res = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Profiles(a) => cmd_profiles(&a).map(|csv| {
            emit(&csv);
            0
        }),
        Command::Verify(a) => cmd_verify(&a),
        Command::CompareKdvb(a) => cmd_compare_kdvb(&a).map(|r| {
            emit_line(&serde_json::to_string_pretty(&r).expect("report serializes"));
            0
        }),
        Command::Fit(a) => cmd_fit(&a).map(|f| {
            emit_line(&serde_json::to_string_pretty(&f).expect("fit serializes"));
            0
        }),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit_line(text: &str) {
    emit(text);
    emit("\n");
}

/// Theta amplitude with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub theta0: f64,
    pub theta1: ThetaEstimate,
    pub theta: f64,
}

/// Everything computed for one config.
#[derive(Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub profiles: Profiles,
    pub mass: f64,
    /// `theta` for viscous runs, `theta~` for KdV-Burgers runs.
    pub theta: Option<ThetaSummary>,
    pub series: Vec<NormSeries>,
    pub fits: Vec<(String, DecayFit)>,
}

fn base_dir(config_path: &Path) -> &Path {
    config_path.parent().unwrap_or(Path::new("."))
}

/// Samples the data, integrates and runs the requested analyses.
pub fn execute(cfg: &RunConfig, base: &Path) -> Result<RunOutput> {
    execute_kind(cfg, cfg.kind, base)
}

fn execute_kind(cfg: &RunConfig, tag: EquationTag, base: &Path) -> Result<RunOutput> {
    cfg.check()?;
    let grid = Grid::from_spec(&cfg.grid)?;
    let u0 = cfg.initial_data.sample(&cfg.model, &grid, base)?;
    let mass = u0.integral();
    let mut profiles = Profiles::new(cfg.model, mass)?;
    let trajectory = simulate(&cfg.model, &EquationKind::from_tag(tag)?, &cfg.solver.to_solver_config()?, &u0)?;
    let a = &cfg.analyses;

    let wants_theta = a.theta || a.norms.iter().any(|n| n.order == 3);
    let theta = if wants_theta { Some(theta_summary(&trajectory, &profiles)?) } else { None };
    if let Some(th) = theta {
        profiles = if tag == EquationTag::KdVBurgers {
            profiles.with_theta_tilde(th.theta)
        } else {
            profiles.with_theta(th.theta0, th.theta1.value)
        };
    }

    let mut series = Vec::new();
    for n in &a.norms {
        series.push(analysis::norm_series(&trajectory, &profiles, Order::from_index(n.order)?, n.p.0, n.l)?);
    }
    let positive: Vec<f64> = trajectory.times.iter().copied().filter(|t| *t > 0.0).collect();
    for k in &a.kernel_gaps {
        series.push(analysis::kernel_gap_series(&cfg.model, &grid, &positive, k.l, k.p.0)?);
    }
    let fits = a
        .fits
        .iter()
        .map(|f| {
            let s = find_series(&series, &f.series)?;
            let fit = analysis::decay_fit(s, f.log_power, f.window.map(|w| (w[0], w[1])))?;
            Ok((f.series.clone(), fit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput { trajectory, profiles, mass, theta, series, fits })
}

fn theta_summary(traj: &Trajectory, prof: &Profiles) -> Result<ThetaSummary> {
    let (theta0, theta1) = if traj.kind == EquationTag::KdVBurgers {
        analysis::theta_tilde(traj, prof)?
    } else {
        analysis::theta(traj, prof)?
    };
    Ok(ThetaSummary { theta0, theta1, theta: theta0 + theta1.value })
}

fn find_series<'a>(series: &'a [NormSeries], key: &str) -> Result<&'a NormSeries> {
    series.iter().find(|s| series_key(&s.label, s.p, s.l) == key).ok_or_else(|| {
        let known: Vec<String> = series.iter().map(|s| series_key(&s.label, s.p, s.l)).collect();
        Error::Config(format!("no series '{key}'; available: {known:?}"))
    })
}

#[derive(Serialize)]
struct FitRecord<'a> {
    series: &'a str,
    #[serde(flatten)]
    fit: &'a DecayFit,
}

/// Writes a run directory for `out` and returns its path.
pub fn persist_run(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<PathBuf> {
    let mut run = RunDir::create(dir)?;
    let traj = &out.trajectory;
    let grid = &traj.grid;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let shift = traj.frame_shift(i);
        let x: Vec<f64> = grid.points().iter().map(|x| x + shift).collect();
        run.write(&format!("snapshots/u_{i:05}.csv"), csv_table(&["x", "u"], &[x, snap.values.clone()]).as_bytes())?;
    }
    if !out.series.is_empty() {
        run.write("norms.csv", norms_csv(&out.series).as_bytes())?;
    }
    let fits: Vec<FitRecord> = out.fits.iter().map(|(s, f)| FitRecord { series: s, fit: f }).collect();
    run.write_json("fits.json", &fits)?;
    let theta = match (traj.kind, out.theta) {
        (EquationTag::KdVBurgers, _) => None,
        (_, th) => th.map(|t| t.theta),
    };
    for &t in &cfg.analyses.profiles_at {
        let shift = traj.frame_shift_at(t);
        let csv = profile_table(&out.profiles, grid, shift, t, theta)?;
        run.write(&format!("profiles/t_{}.csv", persist::fmt_num(t)), csv.as_bytes())?;
    }
    let meta = serde_json::json!({
        "name": run_name(cfg, dir),
        "rate_amplitudes": rate_amplitudes(cfg, out)?,
        "config": cfg,
        "mass": out.mass,
        "constants": out.profiles.constants(),
        "theta": out.theta,
        "snapshot_times": traj.times,
        "frame_shifts": (0..traj.len()).map(|i| traj.frame_shift(i)).collect::<Vec<_>>(),
        "fits": fits,
    });
    run.finish(meta)?;
    Ok(dir.to_path_buf())
}

/// `C0` for order-1 and `c0` for order-2 norm requests, keyed by series.
fn rate_amplitudes(cfg: &RunConfig, out: &RunOutput) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for n in &cfg.analyses.norms {
        let value = match (n.order, out.theta) {
            (1, _) => analysis::log_rate_amplitude(&out.profiles, n.p.0, n.l)?,
            (2, Some(th)) => analysis::third_rate_amplitude(&out.profiles, th.theta, n.p.0, n.l)?,
            _ => continue,
        };
        map.insert(series_key(Order::from_index(n.order)?.label(), n.p.0, n.l), value);
    }
    Ok(map)
}

fn run_name(cfg: &RunConfig, dir: &Path) -> String {
    cfg.name.clone().unwrap_or_else(|| dir.file_name().map_or("run".into(), |s| s.to_string_lossy().into_owned()))
}

/// `x, chi, eta, V, Psi` and, with `theta`, `W, Q` at time `t` on `grid` shifted by `shift`.
pub fn profile_table(prof: &Profiles, grid: &Arc<Grid>, shift: f64, t: f64, theta: Option<f64>) -> Result<String> {
    let xs: Vec<f64> = grid.points().iter().map(|x| x + shift).collect();
    let col = |f: &dyn Fn(f64) -> Result<f64>| xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>();
    let chi = col(&|x| Ok(prof.chi(x, t)))?;
    let eta = col(&|x| Ok(prof.eta(x, t)))?;
    let v = col(&|x| Ok(prof.second_profile_v(x, t)))?;
    let psi = col(&|x| prof.third_profile_psi(x, t))?;
    Ok(match theta {
        None => csv_table(&["x", "chi", "eta", "V", "Psi"], &[xs, chi, eta, v, psi]),
        Some(th) => {
            let w = col(&|x| Ok(prof.w_with_amplitude(x, t, th)))?;
            let q: Vec<f64> = w.iter().zip(&psi).map(|(a, b)| a + b).collect();
            csv_table(&["x", "chi", "eta", "V", "W", "Psi", "Q"], &[xs, chi, eta, v, w, psi, q])
        }
    })
}

fn run_one(path: &Path, root: &Path) -> Result<PathBuf> {
    let cfg = RunConfig::load(path)?;
    let out = execute(&cfg, base_dir(path))?;
    let name = cfg.name.clone().unwrap_or_else(|| {
        path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned())
    });
    persist_run(&cfg, &out, &root.join(name))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<u8> {
    let root = output_root(a.out.as_deref());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<PathBuf>> = pool.install(|| a.configs.par_iter().map(|c| run_one(c, &root)).collect());
    let mut code = 0;
    for (c, r) in a.configs.iter().zip(results) {
        match r {
            Ok(dir) => emit_line(&dir.display().to_string()),
            Err(e) => {
                eprintln!("error: {}: {e}", c.display());
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}

pub fn cmd_profiles(a: &ProfilesArgs) -> Result<String> {
    if !(a.t >= 0.0) {
        return Err(Error::Config(format!("--t must be non-negative, got {}", a.t)));
    }
    let cfg = RunConfig::load(&a.config)?;
    let grid = Grid::from_spec(&cfg.grid)?;
    let mass = match cfg.initial_data.exact_mass() {
        Some(m) => m,
        None => cfg.initial_data.sample(&cfg.model, &grid, base_dir(&a.config))?.integral(),
    };
    let prof = Profiles::new(cfg.model, mass)?;
    let shift = if cfg.solver.moving_frame { cfg.model.alpha() * a.t } else { 0.0 };
    profile_table(&prof, &grid, shift, a.t, a.theta)
}

/// Runs the selected oracle checks; prints JSON and returns 1 on any failure.
pub fn cmd_verify(a: &VerifyArgs) -> Result<u8> {
    if a.list {
        for n in oracle::SUITE {
            emit_line(n);
        }
        return Ok(0);
    }
    let reports = oracle::run_suite(a.only.as_deref())?;
    emit_line(&serde_json::to_string_pretty(&reports).expect("reports serialize"));
    Ok(verify_code(&reports))
}

pub fn verify_code(reports: &[OracleReport]) -> u8 {
    if reports.iter().all(|r| r.passed) {
        0
    } else {
        1
    }
}

/// Matched VFW and KdV-Burgers runs from the same data.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub theta0: f64,
    pub theta: f64,
    pub theta_uncertainty: f64,
    pub theta_tilde: f64,
    pub theta_tilde_uncertainty: f64,
    pub order3_fit_vfw: DecayFit,
    pub order3_fit_kdvb: DecayFit,
}

pub fn compare_kdvb(cfg: &RunConfig, base: &Path) -> Result<CompareReport> {
    let mut cfg = cfg.clone();
    cfg.analyses.theta = true;
    let order3 = config::NormRequest { order: 3, p: config::NormIndex(2.0), l: 0 };
    if !cfg.analyses.norms.contains(&order3) {
        cfg.analyses.norms.push(order3);
    }
    let key = series_key(Order::Third.label(), 2.0, 0);
    let runs = [EquationTag::ViscousFW, EquationTag::KdVBurgers]
        .par_iter()
        .map(|&tag| execute_kind(&cfg, tag, base))
        .collect::<Result<Vec<_>>>()?;
    let fit = |o: &RunOutput| analysis::decay_fit(find_series(&o.series, &key)?, 0, None);
    let (v, k) = (&runs[0], &runs[1]);
    let (tv, tk) = (v.theta.expect("theta requested"), k.theta.expect("theta requested"));
    Ok(CompareReport {
        theta0: tv.theta0,
        theta: tv.theta,
        theta_uncertainty: tv.theta1.tail_uncertainty,
        theta_tilde: tk.theta,
        theta_tilde_uncertainty: tk.theta1.tail_uncertainty,
        order3_fit_vfw: fit(v)?,
        order3_fit_kdvb: fit(k)?,
    })
}

pub fn cmd_compare_kdvb(a: &CompareArgs) -> Result<CompareReport> {
    let cfg = RunConfig::load(&a.config)?;
    let report = compare_kdvb(&cfg, base_dir(&a.config))?;
    let name = cfg.name.clone().unwrap_or_else(|| {
        a.config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut run = RunDir::create(&output_root(a.out.as_deref()).join(format!("{name}-compare-kdvb")))?;
    run.write_json("compare.json", &report)?;
    run.finish(serde_json::json!({ "name": name, "config": cfg }))?;
    Ok(report)
}

pub fn cmd_fit(a: &FitArgs) -> Result<DecayFit> {
    let path = if a.input.is_dir() { a.input.join("norms.csv") } else { a.input.clone() };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let series = parse_norms_csv(&text)?;
    let window = a.window.as_ref().map(|w| (w[0], w[1]));
    analysis::decay_fit(find_series(&series, &a.series)?, a.log_power, window)
}

/// Samples a config's initial data, for callers that drive the solver directly.
pub fn initial_field(cfg: &RunConfig, base: &Path) -> Result<Field> {
    let grid = Grid::from_spec(&cfg.grid)?;
    cfg.initial_data.sample(&cfg.model, &grid, base)
}
