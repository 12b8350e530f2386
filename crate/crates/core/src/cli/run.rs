use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scenario::{Engine, InitialSpec, PotentialSpec, Scenario};
use super::{io_error, CliError, CliResult};
use crate::analytic::{AnalyticState, Dim, FreeBrownianSolution, FreeRecoilSolution, HarmonicRecoilSolution};
use crate::deriv::Scheme;
use crate::diagnostics::{
    self, support_norm, wave_identity_residuals, Column, ControlVolume, DiagnosticRecord, DiagnosticSeries,
};
use crate::error::{Error, Result};
use crate::evolve::{
    madelung_compose, madelung_decompose, Drift, FokkerPlanckStepper, Potential, SplitStepPropagator, TimeScheme,
    TimeStepping, WaveField,
};
use crate::fields::{
    current_velocity, girsanov_residual, hj_residual, omega_recoil, q_potential, DiffusionParams, GirsanovOptions,
    Mode, ScalarField, ScalarKind, VectorField, VectorKind,
};
use crate::grid::Grid;
use crate::sde::{self, DriftSource, Ensemble, GriddedDrift, SdeConfig};

/// Allowed `max |b - 2D grad phi|` before the Girsanov column is left empty.
pub const GIRSANOV_TOLERANCE: f64 = 1e-3;

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the scenario file bytes.
    pub scenario_hash: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub overrides: Vec<String>,
    pub outputs: Vec<String>,
}

/// Run the scenario at `scenario_path` and write its outputs to `out_dir`.
pub fn run(scenario_path: &Path, out_dir: &Path, overrides: &[String]) -> CliResult<RunManifest> {
    let start = Instant::now();
    let (scenario, text) = Scenario::load(scenario_path, overrides)?;
    let results = run_scenario(&scenario)?;

    std::fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    for (engine, series) in &results {
        let columns = csv_columns(&scenario, *engine);
        let file = format!("{}_{}.csv", scenario.name, engine);
        write(&out_dir.join(&file), &series.to_csv(&columns))?;
        outputs.push(file);
        summary.insert(engine.to_string(), engine_summary(series, &columns));
    }
    let summary = serde_json::json!({
        "name": scenario.name,
        "mode": scenario.mode,
        "engines": summary,
    });
    write(&out_dir.join("summary.json"), &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
    outputs.push("summary.json".into());

    let manifest = RunManifest {
        scenario_hash: hex(&Sha256::digest(text.as_bytes())),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        overrides: overrides.to_vec(),
        outputs,
    };
    write(&out_dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).unwrap() + "\n"))?;
    Ok(manifest)
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(io_error(path))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Requested outputs; the ensemble table also carries its mean and the
/// standard error of the msd.
pub fn csv_columns(scenario: &Scenario, engine: Engine) -> Vec<Column> {
    let mut columns = scenario.outputs();
    if engine == Engine::Sde {
        for extra in [Column::Mean, Column::MsdSe] {
            if !columns.contains(&extra) {
                columns.push(extra);
            }
        }
    }
    columns
}

fn engine_summary(series: &DiagnosticSeries, columns: &[Column]) -> serde_json::Value {
    let last = series.records().last().copied().unwrap_or_default();
    let finals: serde_json::Map<String, serde_json::Value> =
        columns.iter().map(|c| (c.name().to_string(), serde_json::json!(last.get(*c)))).collect();
    serde_json::json!({
        "rows": series.len(),
        "t_final": series.times().last(),
        "final": finals,
    })
}

/// Run every requested engine, without touching the file system.
pub fn run_scenario(scenario: &Scenario) -> CliResult<Vec<(Engine, DiagnosticSeries)>> {
    let ctx = Context::new(scenario)?;
    scenario
        .engines()
        .into_iter()
        .map(|engine| {
            log::info!("running {engine}");
            let series = match engine {
                Engine::Analytic => ctx.analytic(),
                Engine::Schrodinger => ctx.schrodinger(),
                Engine::FokkerPlanck => ctx.fokker_planck(),
                Engine::Sde => ctx.sde(),
            };
            series.map(|s| (engine, s)).map_err(|source| CliError::Engine { engine, source })
        })
        .collect()
}

struct Context<'a> {
    scenario: &'a Scenario,
    params: DiffusionParams,
    grid: Grid,
    stepping: TimeStepping,
    omega: ScalarField,
}

impl<'a> Context<'a> {
    fn new(scenario: &'a Scenario) -> CliResult<Self> {
        let params = scenario.diffusion_params()?;
        let grid = scenario.build_grid()?;
        let mut stepping = TimeStepping::to_time(scenario.t_end, scenario.dt);
        if let Some(every) = scenario.snapshot_every {
            stepping = stepping.with_snapshot_every(every);
        }
        let force = scenario.force();
        let omega = ScalarField::from_fn(grid, ScalarKind::Omega, |x| force.omega(x, &params));
        Ok(Self { scenario, params, grid, stepping, omega })
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        (0..=self.stepping.n_steps).filter(|k| *k == 0 || self.stepping.is_snapshot(*k)).collect()
    }

    fn time(&self, step: usize) -> f64 {
        step as f64 * self.stepping.dt
    }

    fn mode(&self) -> Mode {
        self.scenario.mode
    }

    fn volume(&self) -> Option<ControlVolume> {
        self.scenario.control_volume
    }

    fn initial_density(&self) -> Result<ScalarField> {
        match &self.scenario.initial {
            InitialSpec::Gaussian { alpha } => ScalarField::density_from_fn(self.grid, |x| (-x * x / (alpha * alpha)).exp()),
            InitialSpec::File { path } => {
                let (xs, rho) = read_density_file(path)?;
                let at = |x: f64| {
                    if x < xs[0] || x > xs[xs.len() - 1] {
                        return 0.0;
                    }
                    let k = xs.partition_point(|s| *s <= x).clamp(1, xs.len() - 1);
                    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    (1.0 - w) * rho[k - 1] + w * rho[k]
                };
                ScalarField::density(self.grid, self.grid.sample(at))
            }
        }
    }

    fn alpha(&self) -> Option<f64> {
        match self.scenario.initial {
            InitialSpec::Gaussian { alpha } => Some(alpha),
            InitialSpec::File { .. } => None,
        }
    }

    fn analytic(&self) -> Result<DiagnosticSeries> {
        let d = self.params.d;
        let unsupported = || Error::Unsupported("no closed form for this potential and initial state".into());
        let alpha = self.alpha().ok_or_else(unsupported)?;
        let eval: Box<dyn Fn(f64) -> Result<AnalyticState>> = match (&self.scenario.potential, self.mode()) {
            (PotentialSpec::Free, Mode::Recoil) => {
                let sol = FreeRecoilSolution::new(d, alpha)?;
                Box::new(move |t| sol.eval(t, self.grid))
            }
            (PotentialSpec::Free, Mode::Standard) => {
                let sol = FreeBrownianSolution::from_width(d, alpha, Dim::One)?;
                Box::new(move |t| sol.eval(t, self.grid))
            }
            // The matched recoil state is also the stationary Smoluchowski state,
            // so it serves both modes; unmatched widths fail at t > 0.
            (PotentialSpec::Harmonic { gamma }, _) => {
                let sol = HarmonicRecoilSolution::new(d, alpha, *gamma)?;
                Box::new(move |t| sol.eval(t, self.grid))
            }
            (PotentialSpec::SmoluchowskiForce { .. }, _) => return Err(unsupported()),
        };
        let mut series = DiagnosticSeries::new();
        for k in self.snapshot_steps() {
            let t = self.time(k);
            let st = eval(t)?;
            let target = match self.mode() {
                Mode::Standard => st.omega.clone(),
                Mode::Recoil => omega_recoil(&st.q, &st.omega)?,
            };
            let hj = hj_residual(&st.s, &st.rho, &st.omega, self.mode(), &st.ds_dt, &self.params, Scheme::Central)?;
            let options =
                GirsanovOptions { scheme: Scheme::Central, tolerance: GIRSANOV_TOLERANCE, support: Some(&st.rho) };
            let girsanov = girsanov_residual(&st.phi, &st.b, &target, &st.dphi_dt, &self.params, &options)?;
            let record = DiagnosticRecord {
                msd: Some(st.msd),
                e_kin: Some(st.kinetic_energy),
                e_total: Some(st.total_energy),
                mass: Some(diagnostics::mass(&st.rho)),
                hj_residual_norm: Some(support_norm(hj.values(), &st.rho)?),
                girsanov_residual_norm: Some(support_norm(girsanov.values(), &st.rho)?),
                momentum_rate: self.momentum_rate(&st.rho, &st.q)?,
                mean: Some(0.0),
                msd_se: None,
            };
            series.push(t, record)?;
        }
        Ok(series)
    }

    fn momentum_rate(&self, rho: &ScalarField, q: &ScalarField) -> Result<Option<f64>> {
        self.volume()
            .map(|vol| diagnostics::momentum_rate(rho, q, &self.omega, &vol, self.mode(), Scheme::Central))
            .transpose()
    }

    fn initial_wave(&self) -> Result<WaveField> {
        let rho = self.initial_density()?;
        madelung_compose(&rho, &ScalarField::zeros(self.grid, ScalarKind::S), &self.params)
    }

    /// Walk the Schrodinger evolution and hand every snapshot step, with
    /// its neighbours one step before and after, to `visit`.
    fn walk_schrodinger(&self, mut visit: impl FnMut(usize, &WaveField, &WaveField, &WaveField) -> Result<()>) -> Result<()> {
        let dt = self.stepping.dt;
        let potential = Potential::Static(self.omega.clone());
        let mut forward = SplitStepPropagator::new(self.grid, potential.clone(), &self.params, dt)?;
        let mut backward = SplitStepPropagator::new(self.grid, potential, &self.params, -dt)?;
        let mut psi = self.initial_wave()?;
        for k in 0..=self.stepping.n_steps {
            if k > 0 {
                forward.step(&mut psi, self.time(k - 1))?;
            }
            if k == 0 || self.stepping.is_snapshot(k) {
                let mut prev = psi.clone();
                backward.step(&mut prev, self.time(k))?;
                let mut next = psi.clone();
                forward.step(&mut next, self.time(k))?;
                visit(k, &prev, &psi, &next)?;
            }
        }
        Ok(())
    }

    fn schrodinger(&self) -> Result<DiagnosticSeries> {
        let mut series = DiagnosticSeries::new();
        self.walk_schrodinger(|k, prev, psi, next| {
            let f = madelung_decompose(psi, &self.params)?;
            let q = q_potential(&f.rho, &self.params, Scheme::Spectral)?;
            let res = wave_identity_residuals(
                prev,
                psi,
                next,
                self.stepping.dt,
                &self.omega,
                &self.params,
                Mode::Recoil,
                Scheme::Central,
                GIRSANOV_TOLERANCE,
            )?;
            let mean = self.grid.integrate(&self.grid.nodes().zip(f.rho.values()).map(|(x, r)| x * r).collect::<Vec<_>>());
            let record = DiagnosticRecord {
                msd: Some(diagnostics::msd(&f.rho)),
                e_kin: Some(diagnostics::kinetic_energy(&f.rho, &f.v)?),
                e_total: Some(diagnostics::total_energy(&f.rho, &f.v, &q, &self.omega, Mode::Recoil)?),
                mass: Some(diagnostics::mass(&f.rho)),
                hj_residual_norm: Some(res.hj),
                girsanov_residual_norm: res.girsanov,
                momentum_rate: self.momentum_rate(&f.rho, &q)?,
                mean: Some(mean),
                msd_se: None,
            };
            series.push(self.time(k), record)
        })?;
        Ok(series)
    }

    fn fokker_planck(&self) -> Result<DiagnosticSeries> {
        let force = self.scenario.force();
        let b = VectorField::from_fn(self.grid, VectorKind::B, |x| force.drift(x, &self.params));
        let mut stepper = FokkerPlanckStepper::new(
            self.grid,
            Drift::Field(b.clone()),
            &self.params,
            self.stepping.dt,
            TimeScheme::CrankNicolson,
        )?;
        let mut rho = self.initial_density()?.into_values();
        let mut series = DiagnosticSeries::new();
        for k in 0..=self.stepping.n_steps {
            if k > 0 {
                stepper.step(&mut rho, self.time(k - 1))?;
            }
            if !(k == 0 || self.stepping.is_snapshot(k)) {
                continue;
            }
            let field = ScalarField::new(self.grid, rho.clone(), ScalarKind::Rho)?;
            let v = current_velocity(&b, &field, &self.params, Scheme::Spectral)?;
            let q = q_potential(&field, &self.params, Scheme::Spectral)?;
            let mean = self.grid.integrate(&self.grid.nodes().zip(&rho).map(|(x, r)| x * r).collect::<Vec<_>>());
            let record = DiagnosticRecord {
                msd: Some(diagnostics::msd(&field)),
                e_kin: Some(diagnostics::kinetic_energy(&field, &v)?),
                e_total: Some(diagnostics::total_energy(&field, &v, &q, &self.omega, Mode::Standard)?),
                mass: Some(diagnostics::mass(&field)),
                // the phase is fixed only up to a function of time here
                hj_residual_norm: None,
                girsanov_residual_norm: None,
                momentum_rate: self.momentum_rate(&field, &q)?,
                mean: Some(mean),
                msd_se: None,
            };
            series.push(self.time(k), record)?;
        }
        Ok(series)
    }

    fn sde(&self) -> Result<DiagnosticSeries> {
        let n = self.scenario.engines.sde.map(|s| s.n_particles).unwrap_or(0);
        let seed = self.scenario.seed;
        let ens0 = match self.scenario.initial {
            InitialSpec::Gaussian { alpha } => Ensemble::gaussian(n, 0.0, alpha / 2f64.sqrt(), seed),
            InitialSpec::File { .. } => Ensemble::from_density(n, &self.initial_density()?, seed)?,
        };
        let drift = match (self.mode(), &self.scenario.potential, self.alpha()) {
            (Mode::Standard, _, _) => DriftSource::Smoluchowski(self.scenario.force()),
            (Mode::Recoil, PotentialSpec::Free, Some(alpha)) => {
                DriftSource::AnalyticRecoil(FreeRecoilSolution::new(self.params.d, alpha)?)
            }
            (Mode::Recoil, _, _) => DriftSource::GridInterpolated(self.schrodinger_drift()?),
        };
        let config = SdeConfig::new(self.stepping.dt, self.stepping.t_end())
            .with_snapshot_every(self.stepping.snapshot_every);
        let mut series = DiagnosticSeries::new();
        let mut failure = None;
        sde::simulate_with(&ens0, &drift, &self.params, &config, |ens| {
            if failure.is_some() {
                return;
            }
            let record = sde::estimate_moments(ens).map(|m| DiagnosticRecord {
                msd: Some(m.msd),
                mean: Some(m.mean),
                msd_se: Some(m.se_msd),
                ..Default::default()
            });
            if let Err(e) = record.and_then(|r| series.push(ens.time(), r)) {
                failure = Some(e);
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(series),
        }
    }

    /// Forward drift `u + v` of the Schrodinger evolution at every snapshot.
    fn schrodinger_drift(&self) -> Result<GriddedDrift> {
        let (mut times, mut fields) = (Vec::new(), Vec::new());
        self.walk_schrodinger(|k, _, psi, _| {
            let f = madelung_decompose(psi, &self.params)?;
            let b = f.u.values().iter().zip(f.v.values()).map(|(u, v)| u + v).collect();
            times.push(self.time(k));
            fields.push(VectorField::new(self.grid, b, VectorKind::B)?);
            Ok(())
        })?;
        GriddedDrift::new(times, fields)
    }
}

fn read_density_file(path: &PathBuf) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut rho = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(|c| c.trim().parse::<f64>());
        match (cols.next(), cols.next()) {
            (Some(Ok(x)), Some(Ok(r))) => {
                xs.push(x);
                rho.push(r);
            }
            // header row
            _ if xs.is_empty() && i == 0 => {}
            _ => {
                return Err(Error::InvalidInput(format!("{}:{}: expected `x,rho`", path.display(), i + 1)));
            }
        }
    }
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!("{}: need at least two rows with increasing x", path.display())));
    }
    Ok((xs, rho))
}
