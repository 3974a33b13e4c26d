//! Scaling laws, refinement stability and decay rates of the closed-form profiles.

use num_complex::Complex64;
use vfw_core::analysis::{decay_fit, lp_norm, weighted_l1_norm_refined, z0_field, NormSeries};
use vfw_core::model::ModelParams;
use vfw_core::profiles::{g_eval, sample, Profiles};
use vfw_core::spectral::{apply_multiplier, derivative, Field, Grid};

fn unit() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn eta_derivatives_scale_self_similarly() {
    let prof = Profiles::new(unit(), 0.1).unwrap();
    let grid = Grid::new(200.0, 4096).unwrap();
    let eta_x = |t: f64| sample(&grid, prof.params().alpha() * (1.0 + t), |x| prof.eta_x(x, t));
    let base = eta_x(0.0);
    for t in [1.0, 3.0, 10.0] {
        let s = 1.0 + t;
        let f = eta_x(t);
        for l in [0u32, 1] {
            for p in [2.0, f64::INFINITY] {
                // ||d^l eta_x(t)||_p = s^{-1/2 - l/2 + 1/(2p)} ||d^l eta_x(0)||_p
                let expected = lp_norm(&base, p, l) * s.powf(-0.5 - 0.5 * l as f64 + 0.5 / p);
                let got = lp_norm(&f, p, l);
                if p.is_infinite() {
                    // Grid maxima move with the scaling; compare to sampling accuracy.
                    assert!(((got - expected) / expected).abs() < 1e-3, "t={t} l={l} p=inf");
                } else {
                    assert!(((got - expected) / expected).abs() < 1e-10, "t={t} l={l} p={p}");
                }
            }
        }
    }
}

#[test]
fn heat_flow_of_zero_mean_data_decays_at_three_quarters() {
    let p = unit();
    let grid = Grid::new(400.0, 4096).unwrap();
    let phi = derivative(&Field::from_fn(&grid, |x| g_eval(&p, x, 1.0).unwrap()), 1);
    let times = logspace(10.0, 1000.0, 41);
    let values = times
        .iter()
        .map(|&t| {
            let f = apply_multiplier(&phi, |xi| Complex64::new((-p.mu * t * xi * xi).exp(), 0.0)).unwrap();
            assert!(f.decay_guard());
            lp_norm(&f, 2.0, 0)
        })
        .collect();
    let s = NormSeries { times, values, p: 2.0, l: 0, label: "heat".into() };
    let fit = decay_fit(&s, 0, Some((10.0, 1000.0))).unwrap();
    assert!((fit.exponent + 0.75).abs() <= 0.02, "{}", fit.exponent);
}

#[test]
fn psi_star_sobolev_norms_settle_under_sigma_refinement() {
    let prof = Profiles::new(unit(), 0.1).unwrap();
    let grid = Grid::new(40.0, 1024).unwrap();
    let xs = grid.points();
    let coarse = Field::new(grid.clone(), prof.psi_star_fixed(&xs, 48)).unwrap();
    let fine = Field::new(grid.clone(), prof.psi_star_fixed(&xs, 96)).unwrap();
    assert!(coarse.decay_guard());
    for m in 0..=4 {
        for p in [1.0, 2.0, f64::INFINITY] {
            let (a, b) = (lp_norm(&coarse, p, m), lp_norm(&fine, p, m));
            assert!(b.is_finite() && b > 0.0);
            assert!(((a - b) / b).abs() < 1e-6, "m={m} p={p}: {a} vs {b}");
        }
    }
}

#[test]
fn second_profile_sup_norm_at_time_one() {
    let prof = Profiles::new(unit(), 0.1).unwrap();
    let c = prof.constants();
    let dense = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let n = 400_000;
        (0..=n).map(|k| f(lo + (hi - lo) * k as f64 / n as f64).abs()).fold(0.0f64, f64::max)
    };
    let v_star_max = dense(&|x| prof.v_star(x), -20.0, 20.0);
    let alpha = prof.params().alpha();
    let v1_max = dense(&|x| prof.second_profile_v(x, 1.0), 2.0 * alpha - 30.0, 2.0 * alpha + 30.0);
    let expected = c.kappa * c.d_const.abs() * v_star_max * 2f64.ln() / 2.0;
    assert!(((v1_max - expected) / expected).abs() < 1e-6);
}

#[test]
fn weighted_norm_of_z0_is_refinement_stable() {
    let prof = Profiles::new(unit(), 0.1).unwrap();
    let amp = 0.1 / std::f64::consts::PI.sqrt();
    let z0_norm = |n: usize| {
        let grid = Grid::new(64.0, n).unwrap();
        let u0 = Field::from_fn(&grid, |x| amp * (-x * x).exp());
        weighted_l1_norm_refined(&z0_field(&u0, &prof).unwrap(), 1.0).unwrap()
    };
    let (a, b) = (z0_norm(1024), z0_norm(2048));
    assert!(a.is_finite() && a > 0.0);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn z0_vanishes_for_the_diffusion_wave() {
    let prof = Profiles::new(unit(), 0.3).unwrap();
    let grid = Grid::new(64.0, 1024).unwrap();
    let u0 = Field::from_fn(&grid, |x| prof.chi(x, 0.0));
    assert!(z0_field(&u0, &prof).unwrap().max_abs() < 1e-14);
}

#[test]
fn u_operator_decays_at_three_quarters() {
    let prof = Profiles::new(unit(), 0.1).unwrap();
    let grid = Grid::new(256.0, 4096).unwrap();
    let h = Field::from_fn(&grid, |x| 0.05 * x * (-x * x).exp());
    let times = logspace(10.0, 100.0, 11);
    let values = times.iter().map(|&t| lp_norm(&prof.u_operator(&h, t, 0.0).unwrap(), 2.0, 0)).collect();
    let s = NormSeries { times, values, p: 2.0, l: 0, label: "U".into() };
    let fit = decay_fit(&s, 0, Some((10.0, 100.0))).unwrap();
    assert!((fit.exponent + 0.75).abs() < 0.1, "{}", fit.exponent);
}
