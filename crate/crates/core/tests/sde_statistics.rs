//! Monte Carlo checks with explicit statistical error budgets.

use recoil_diffusion::analytic::FreeRecoilSolution;
use recoil_diffusion::fields::Force;
use recoil_diffusion::sde::{estimate_moments, simulate_with, DriftSource, Ensemble, MsdPolynomialFit, SdeConfig};
use recoil_diffusion::DiffusionParams;

/// Stationary variance of the Euler-Maruyama OU chain, averaged over
/// snapshots spaced further apart than the variance correlation time.
fn em_stationary_variance(gamma: f64, d: f64, dt: f64, seed: u64) -> (f64, f64) {
    let params = DiffusionParams::with_diffusion(d).unwrap();
    let drift = DriftSource::Smoluchowski(Force::harmonic(gamma));
    let n = 100_000;
    let ens0 = Ensemble::gaussian(n, 0.0, (d / gamma).sqrt(), seed);
    let burn_in = 1.0;
    let spacing = 0.1;
    let every = (spacing / dt).round() as usize;
    let config = SdeConfig::new(dt, burn_in + 2.0).with_snapshot_every(every);
    let mut samples = Vec::new();
    simulate_with(&ens0, &drift, &params, &config, |e| {
        if e.time() > burn_in + 1e-9 {
            let m = estimate_moments(e).unwrap();
            samples.push((m.msd - m.mean * m.mean, m.se_msd));
        }
    })
    .unwrap();
    let k = samples.len() as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / k;
    // snapshots are close to independent, so the standard error shrinks with sqrt(k)
    let se = samples.iter().map(|s| s.1).sum::<f64>() / k / k.sqrt();
    (mean, se)
}

#[test]
fn ou_weak_error_shrinks_with_the_step() {
    let (gamma, d) = (10.0, 0.5);
    let exact = d / gamma;
    let mut errors = Vec::new();
    for (i, dt) in [0.01, 0.005, 0.0025].into_iter().enumerate() {
        let (var, se) = em_stationary_variance(gamma, d, dt, 900 + i as u64);
        let em = d / (gamma * (1.0 - gamma * dt / 2.0));
        assert!((var - em).abs() < 4.0 * se, "dt {dt}: {var} vs chain variance {em} (se {se})");
        errors.push((var - exact).abs());
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    // first-order weak bias: halving the step roughly halves the error
    let ratio = errors[0] / errors[2];
    assert!(ratio > 2.5 && ratio < 6.0, "{ratio}");
}

fn fit_msd(drift: &DriftSource, d: f64, ens0: &Ensemble, t_end: f64, dt: f64) -> recoil_diffusion::sde::QuadraticFit {
    let params = DiffusionParams::with_diffusion(d).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * t_end / 10.0).collect();
    let every = (t_end / 10.0 / dt).round() as usize;
    let mut fit = MsdPolynomialFit::new(times, ens0.n_particles()).unwrap();
    let config = SdeConfig::new(dt, t_end).with_snapshot_every(every);
    simulate_with(ens0, drift, &params, &config, |e| fit.record(e).unwrap()).unwrap();
    fit.finish().unwrap()
}

#[test]
fn recoil_msd_grows_quadratically() {
    let (d, alpha) = (0.5, 1.0);
    let ens0 = Ensemble::gaussian(100_000, 0.0, alpha / 2f64.sqrt(), 31);
    let drift = DriftSource::AnalyticRecoil(FreeRecoilSolution::new(d, alpha).unwrap());
    let fit = fit_msd(&drift, d, &ens0, 2.0, 1e-3);
    let [c0, c1, c2] = fit.coefficients;
    let se = fit.standard_errors;
    assert!(c2 >= 0.0);
    assert!((c2 - 2.0 * d * d / (alpha * alpha)).abs() < 3.0 * se[2], "c2 {c2} +- {}", se[2]);
    assert!(c1.abs() < 3.0 * se[1], "c1 {c1} +- {}", se[1]);
    assert!((c0 - alpha * alpha / 2.0).abs() < 3.0 * se[0], "c0 {c0} +- {}", se[0]);
}

#[test]
fn brownian_msd_has_no_quadratic_term() {
    let d = 0.5;
    let ens0 = Ensemble::gaussian(100_000, 0.0, 0.5, 32);
    let drift = DriftSource::Smoluchowski(Force::zero());
    let fit = fit_msd(&drift, d, &ens0, 2.0, 0.01);
    let [_, c1, c2] = fit.coefficients;
    let se = fit.standard_errors;
    assert!(c2.abs() < 3.0 * se[2], "c2 {c2} +- {}", se[2]);
    assert!((c1 - 2.0 * d).abs() < 3.0 * se[1], "c1 {c1} +- {}", se[1]);
}
