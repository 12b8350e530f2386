use proptest::prelude::*;

use recoil_diffusion::analytic::FreeRecoilSolution;
use recoil_diffusion::deriv::derivative;
use recoil_diffusion::evolve::fokker_planck::{Drift, FokkerPlanckStepper, TimeScheme};
use recoil_diffusion::evolve::madelung::{madelung_compose, madelung_decompose};
use recoil_diffusion::fields::{
    current_velocity, hj_residual, momentum_residual, omega_recoil, osmotic_velocity, q_potential, Force,
};
use recoil_diffusion::sde::{simulate, DriftSource, Ensemble, SdeConfig};
use recoil_diffusion::{
    diagnostics, DiffusionParams, Execution, Grid, Mode, ScalarField, ScalarKind, Scheme, VectorField, VectorKind,
};

/// Smooth periodic fields on `[-L, L)`: a positive density, a phase, its
/// time derivative and a potential.
#[derive(Debug, Clone)]
struct Triple {
    rho: ScalarField,
    s: ScalarField,
    ds_dt: ScalarField,
    omega: ScalarField,
}

fn periodic_triple() -> impl Strategy<Value = Triple> {
    (
        0.1f64..1.0,
        -0.5f64..0.5,
        0.0f64..6.3,
        -1.0f64..1.0,
        -1.0f64..1.0,
        -2.0f64..2.0,
    )
        .prop_map(|(a, b, c, s1, s2, w)| {
            let grid = Grid::symmetric(std::f64::consts::PI, 128).unwrap();
            let rho = ScalarField::density_from_fn(grid, |x| (a * x.cos() + b * (2.0 * x + c).sin()).exp()).unwrap();
            let s = ScalarField::from_fn(grid, ScalarKind::S, |x| s1 * x.sin() + s2 * (3.0 * x).cos());
            let ds_dt = ScalarField::from_fn(grid, ScalarKind::S, |x| s2 * x.cos() - s1);
            let omega = ScalarField::from_fn(grid, ScalarKind::Omega, |x| w * (x + c).cos());
            Triple { rho, s, ds_dt, omega }
        })
}

fn params() -> impl Strategy<Value = DiffusionParams> {
    (0.1f64..2.0).prop_map(|d| DiffusionParams::with_diffusion(d).unwrap())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_recoil_is_an_involution(t in periodic_triple(), p in params()) {
        let q = q_potential(&t.rho, &p, Scheme::Spectral).unwrap();
        let twice = omega_recoil(&q, &omega_recoil(&q, &t.omega).unwrap()).unwrap();
        prop_assert!(max_diff(twice.values(), t.omega.values()) < 1e-10 * (1.0 + q.max_abs()));
    }

    #[test]
    fn recoil_hj_is_standard_hj_with_reflected_potential(t in periodic_triple(), p in params()) {
        for scheme in [Scheme::Spectral, Scheme::Central] {
            let q = q_potential(&t.rho, &p, scheme).unwrap();
            let recoil = hj_residual(&t.s, &t.rho, &t.omega, Mode::Recoil, &t.ds_dt, &p, scheme).unwrap();
            let reflected = omega_recoil(&q, &t.omega).unwrap();
            let standard = hj_residual(&t.s, &t.rho, &reflected, Mode::Standard, &t.ds_dt, &p, scheme).unwrap();
            prop_assert!(max_diff(recoil.values(), standard.values()) < 1e-10 * (1.0 + q.max_abs()));
        }
    }

    #[test]
    fn velocities_decompose_the_drift(t in periodic_triple(), p in params(), scale in -3.0f64..3.0) {
        let grid = *t.rho.grid();
        let b = VectorField::from_fn(grid, VectorKind::B, |x| scale * x.sin());
        for scheme in [Scheme::Spectral, Scheme::Central] {
            let u = osmotic_velocity(&t.rho, &p, scheme).unwrap();
            let v = current_velocity(&b, &t.rho, &p, scheme).unwrap();
            for i in 0..grid.len() {
                prop_assert!((v.values()[i] + u.values()[i] - b.values()[i]).abs() < 1e-12 * (1.0 + u.max_abs()));
            }
        }
    }

    #[test]
    fn spectral_and_central_q_converge(alpha in 0.5f64..2.0, x0 in -1.0f64..1.0, p in params()) {
        let grid = Grid::symmetric(24.0, 2048).unwrap();
        let rho = ScalarField::density_from_fn(grid, |x| (-(x - x0).powi(2) / (alpha * alpha)).exp()).unwrap();
        let spectral = q_potential(&rho, &p, Scheme::Spectral).unwrap();
        let central = q_potential(&rho, &p, Scheme::Central).unwrap();
        // compare where the density is well resolved; Q is quadratic in x there
        let h = grid.spacing();
        let scale = p.d * p.d / (alpha * alpha);
        for i in 0..grid.len() {
            if (grid.x(i) - x0).abs() < 2.0 * alpha {
                let exact = 2.0 * p.d * p.d * ((grid.x(i) - x0).powi(2) / alpha.powi(4) - 1.0 / (alpha * alpha));
                prop_assert!((spectral.values()[i] - exact).abs() < 1e-8 * (1.0 + scale));
                prop_assert!((central.values()[i] - exact).abs() < 20.0 * h * h * scale / (alpha * alpha));
            }
        }
    }

    #[test]
    fn gradient_of_hj_residual_is_the_momentum_residual(t in periodic_triple(), p in params()) {
        let grid = *t.rho.grid();
        let mode = if t.s.values()[0] > 0.0 { Mode::Recoil } else { Mode::Standard };
        let hj = hj_residual(&t.s, &t.rho, &t.omega, mode, &t.ds_dt, &p, Scheme::Spectral).unwrap();
        let q = q_potential(&t.rho, &p, Scheme::Spectral).unwrap();
        let v = VectorField::new(grid, derivative(&grid, t.s.values(), Scheme::Spectral), VectorKind::V).unwrap();
        let dv_dt = VectorField::new(grid, derivative(&grid, t.ds_dt.values(), Scheme::Spectral), VectorKind::V).unwrap();
        let mom = momentum_residual(&v, &q, &t.omega, mode, &dv_dt, Scheme::Spectral).unwrap();
        let grad = derivative(&grid, hj.values(), Scheme::Spectral);
        prop_assert!(max_diff(&grad, mom.values()) < 1e-8 * (1.0 + q.max_abs()));
    }

    #[test]
    fn madelung_round_trip(alpha in 0.7f64..2.0, k in -2.0f64..2.0, c in -0.5f64..0.5, p in params()) {
        let grid = Grid::symmetric(16.0, 512).unwrap();
        let rho = ScalarField::density_from_fn(grid, |x| (-x * x / (alpha * alpha)).exp()).unwrap();
        // keep the phase gradient resolvable: |S'/2D| well below the Nyquist wavenumber
        let s = ScalarField::from_fn(grid, ScalarKind::S, |x| p.d * (k * x + c * x * x));
        let psi = madelung_compose(&rho, &s, &p).unwrap();
        let m = madelung_decompose(&psi, &p).unwrap();
        prop_assert!(max_diff(m.rho.values(), rho.values()) < 1e-12);
        for i in 0..grid.len() {
            let x = grid.x(i);
            if x.abs() < 2.0 * alpha {
                let exact = p.d * (k + 2.0 * c * x);
                prop_assert!((m.v.values()[i] - exact).abs() < 1e-7 * (1.0 + exact.abs()), "x {x}");
                // S is recovered up to a constant
                let offset = m.s.values()[grid.len() / 2] - s.values()[grid.len() / 2];
                prop_assert!((m.s.values()[i] - s.values()[i] - offset).abs() < 1e-7 * (1.0 + s.max_abs()));
            }
        }
    }

    #[test]
    fn periodic_quadrature_is_exact_for_band_limited_functions(a in -5.0f64..0.0, w in 1.0f64..10.0, log_n in 3u32..10,
                                                               c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, m in 1u32..3) {
        let n = 1usize << log_n;
        let grid = Grid::new(a, a + w, n).unwrap();
        let k = 2.0 * std::f64::consts::PI * m as f64 / w;
        let f = grid.sample(|x| c0 + c1 * (k * (x - a)).sin());
        prop_assert!((grid.integrate(&f) - c0 * w).abs() < 1e-12 * (1.0 + c0.abs() * w + c1.abs() * w));
        for i in 0..n {
            prop_assert!((grid.interpolate_linear(&f, grid.x(i)) - f[i]).abs() < 1e-12 * (1.0 + f[i].abs()));
        }
        // the running integral is exact for linear integrands
        let lin = grid.sample(|x| c0 + c1 * x);
        let cumulative = grid.cumulative_integral(&lin);
        for (i, f) in cumulative.iter().enumerate() {
            let (x0, x) = (grid.x(0), grid.x(i));
            let exact = c0 * (x - x0) + 0.5 * c1 * (x * x - x0 * x0);
            prop_assert!((f - exact).abs() < 1e-10 * (1.0 + exact.abs() + c1.abs() * w * w));
        }
    }

    #[test]
    fn fokker_planck_conserves_mass(gamma in 0.0f64..3.0, shift in -2.0f64..2.0, p in params()) {
        let grid = Grid::symmetric(12.0, 256).unwrap();
        let rho = ScalarField::density_from_fn(grid, |x| (-(x - shift).powi(2)).exp()).unwrap().into_values();
        let drift = Drift::Field(VectorField::from_fn(grid, VectorKind::B, |x| -gamma * x));
        for scheme in [TimeScheme::CrankNicolson, TimeScheme::Implicit] {
            let mut stepper = FokkerPlanckStepper::new(grid, drift.clone(), &p, 0.01, scheme).unwrap();
            let mut r = rho.clone();
            for k in 0..200 {
                stepper.step(&mut r, k as f64 * 0.01).unwrap();
            }
            prop_assert!((grid.integrate(&r) - 1.0).abs() < 1e-10);
            prop_assert!(r.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn free_recoil_energy_is_constant(d in 0.1f64..2.0, alpha in 0.5f64..2.0, t in 0.0f64..5.0) {
        let sol = FreeRecoilSolution::new(d, alpha).unwrap();
        let grid = Grid::symmetric(60.0, 4096).unwrap();
        let e0 = sol.eval(0.0, grid).unwrap().total_energy;
        let et = sol.eval(t, grid).unwrap().total_energy;
        prop_assert!((e0 - d * d / (alpha * alpha)).abs() < 1e-9 * e0);
        prop_assert!((et - e0).abs() < 1e-9 * e0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ensembles_do_not_depend_on_the_execution_mode(seed in any::<u64>(), n in 1usize..3000, gamma in 0.0f64..2.0) {
        let p = DiffusionParams::with_diffusion(0.5).unwrap();
        let drift = DriftSource::Smoluchowski(Force::harmonic(gamma));
        let ens0 = Ensemble::gaussian(n, 0.0, 1.0, seed);
        let run = |execution| {
            let config = SdeConfig::new(0.01, 0.2).with_snapshot_every(5).with_execution(execution);
            simulate(&ens0, &drift, &p, &config).unwrap()
        };
        let seq = run(Execution::Sequential);
        let par = run(Execution::Parallel);
        prop_assert_eq!(seq.len(), par.len());
        for (a, b) in seq.iter().zip(&par) {
            prop_assert!(a.positions().iter().zip(b.positions()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn kinetic_energy_is_nonnegative_and_quadratic(t in periodic_triple(), scale in -3.0f64..3.0) {
        let grid = *t.rho.grid();
        let v = VectorField::from_fn(grid, VectorKind::V, |x| x.cos() + 0.3);
        let scaled = VectorField::from_fn(grid, VectorKind::V, |x| scale * (x.cos() + 0.3));
        let e = diagnostics::kinetic_energy(&t.rho, &v).unwrap();
        let es = diagnostics::kinetic_energy(&t.rho, &scaled).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((es - scale * scale * e).abs() < 1e-12 * (1.0 + es));
    }
}
