//! Euler-Maruyama ensembles for `dX = b(X, t) dt + sqrt(2D) dW`.
//!
//! Every Gaussian increment comes from a [`rng::CounterRng`] keyed by the
//! ensemble seed, the particle index and the global step index, so results
//! are bitwise identical under any thread count or [`Execution`] mode.

pub mod rng;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::analytic::{ClosedForm, FreeRecoilSolution};
use crate::error::{Error, Result};
use crate::fields::{DiffusionParams, Force, ScalarField, VectorField};
use crate::grid::Grid;
use crate::par::{self, Execution};
use rng::{CounterRng, Domain};

/// Particles allowed outside a gridded drift before the run is refused.
pub const MAX_OUTSIDE_FRACTION: f64 = 1e-3;

/// Particle positions together with the RNG lineage that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: Vec<f64>,
    time: f64,
    master_seed: u64,
    step: u64,
}

impl Ensemble {
    pub fn new(positions: Vec<f64>, master_seed: u64) -> Self {
        Self { positions, time: 0.0, master_seed, step: 0 }
    }

    /// `n` independent draws from `N(mean, std^2)`.
    pub fn gaussian(n: usize, mean: f64, std: f64, master_seed: u64) -> Self {
        let positions = (0..n as u64)
            .map(|p| {
                let xi: f64 = CounterRng::new(master_seed, p, 0, Domain::Initial).sample(StandardNormal);
                mean + std * xi
            })
            .collect();
        Self::new(positions, master_seed)
    }

    /// `n` draws from a gridded density by inverting its cumulative
    /// distribution, linear between nodes.
    pub fn from_density(n: usize, rho: &ScalarField, master_seed: u64) -> Result<Self> {
        let grid = rho.grid();
        // plain trapezoid keeps the distribution monotone
        let h = grid.spacing();
        let mut cdf = vec![0.0; grid.len()];
        for i in 1..cdf.len() {
            cdf[i] = cdf[i - 1] + 0.5 * h * (rho.values()[i - 1] + rho.values()[i]);
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) || cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::NonPositiveDensity("cannot sample from this density".into()));
        }
        let positions = (0..n as u64)
            .map(|p| {
                let u: f64 = CounterRng::new(master_seed, p, 0, Domain::Initial).random::<f64>() * total;
                let k = cdf.partition_point(|c| *c < u).clamp(1, cdf.len() - 1);
                let w = (u - cdf[k - 1]) / (cdf[k] - cdf[k - 1]).max(f64::MIN_POSITIVE);
                grid.x(k - 1) + w.clamp(0.0, 1.0) * grid.spacing()
            })
            .collect();
        Ok(Self::new(positions, master_seed))
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Steps taken since the ensemble was created.
    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Drift field driving the ensemble.
#[derive(Debug, Clone)]
pub enum DriftSource {
    /// `F(x) / (m beta)` with the friction and mass of the run's parameters.
    Smoluchowski(Force),
    /// Closed-form recoil drift.
    AnalyticRecoil(FreeRecoilSolution),
    /// Drift snapshots, linearly interpolated in `x` and `t`.
    GridInterpolated(GriddedDrift),
}

/// Time-ordered drift snapshots on a common grid.
#[derive(Debug, Clone)]
pub struct GriddedDrift {
    times: Vec<f64>,
    fields: Vec<VectorField>,
}

impl GriddedDrift {
    pub fn new(times: Vec<f64>, fields: Vec<VectorField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidInput(format!(
                "{} times for {} drift snapshots",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("drift snapshot times must increase strictly".into()));
        }
        let grid = fields[0].grid();
        if fields.iter().any(|f| f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { times, fields })
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    fn covers(&self, t0: f64, t1: f64) -> bool {
        let tol = 1e-9 * t1.abs().max(1.0);
        self.times[0] <= t0 + tol && *self.times.last().unwrap() >= t1 - tol
    }

    fn value(&self, x: f64, t: f64) -> f64 {
        let grid = self.grid();
        let at = |k: usize| grid.interpolate_linear(self.fields[k].values(), x);
        let j = self.times.partition_point(|s| *s <= t);
        if j == 0 {
            return at(0);
        }
        if j == self.times.len() {
            return at(j - 1);
        }
        let w = (t - self.times[j - 1]) / (self.times[j] - self.times[j - 1]);
        (1.0 - w) * at(j - 1) + w * at(j)
    }
}

impl DriftSource {
    fn value(&self, x: f64, t: f64, params: &DiffusionParams) -> f64 {
        match self {
            DriftSource::Smoluchowski(force) => force.drift(x, params),
            DriftSource::AnalyticRecoil(sol) => sol.drift(x, t),
            DriftSource::GridInterpolated(g) => g.value(x, t),
        }
    }
}

/// Integration settings for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Emit every this many steps; the final step is always emitted.
    pub snapshot_every: usize,
    pub execution: Execution,
}

impl SdeConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, snapshot_every: 1, execution: Execution::default() }
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::NegativeTime(self.t_end));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidInput("snapshot stride must be at least 1".into()));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidInput(format!(
                "t_end {} is not a whole number of steps of {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Run the ensemble and collect snapshots, the initial one included.
pub fn simulate(
    ens0: &Ensemble,
    drift: &DriftSource,
    params: &DiffusionParams,
    config: &SdeConfig,
) -> Result<Vec<Ensemble>> {
    let mut out = Vec::new();
    simulate_with(ens0, drift, params, config, |e| out.push(e.clone()))?;
    Ok(out)
}

/// Like [`simulate`], but hands each snapshot to `observe` instead of
/// storing it. Returns the final ensemble.
pub fn simulate_with(
    ens0: &Ensemble,
    drift: &DriftSource,
    params: &DiffusionParams,
    config: &SdeConfig,
    mut observe: impl FnMut(&Ensemble),
) -> Result<Ensemble> {
    let n_steps = config.n_steps()?;
    if !(params.d >= 0.0 && params.d.is_finite()) {
        return Err(Error::InvalidParams(format!("diffusion coefficient must be >= 0, got {}", params.d)));
    }
    if let DriftSource::GridInterpolated(g) = drift {
        if !g.covers(ens0.time, ens0.time + config.t_end) {
            return Err(Error::InvalidInput(format!(
                "drift snapshots do not cover [{}, {}]",
                ens0.time,
                ens0.time + config.t_end
            )));
        }
    }
    let mut ens = ens0.clone();
    let t0 = ens.time;
    let dt = config.dt;
    let noise = (2.0 * params.d * dt).sqrt();
    let n = ens.n_particles();
    observe(&ens);
    for k in 1..=n_steps {
        let t = t0 + (k - 1) as f64 * dt;
        if let DriftSource::GridInterpolated(g) = drift {
            check_domain(&ens.positions, g.grid(), config.execution)?;
        }
        let (seed, step) = (ens.master_seed, ens.step);
        par::for_each_indexed(config.execution, &mut ens.positions, |p, x| {
            let xi: f64 = CounterRng::new(seed, p as u64, step, Domain::Step).sample(StandardNormal);
            *x += drift.value(*x, t, params) * dt + noise * xi;
        });
        ens.step += 1;
        ens.time = t0 + k as f64 * dt;
        if k.is_multiple_of(config.snapshot_every) || k == n_steps {
            observe(&ens);
        }
    }
    debug_assert_eq!(ens.positions.len(), n);
    Ok(ens)
}

fn check_domain(positions: &[f64], grid: &Grid, exec: Execution) -> Result<()> {
    let chunks: Vec<&[f64]> = positions.chunks(4096).collect();
    let outside: usize = par::map_collect(exec, &chunks, |c| c.iter().filter(|x| !grid.contains(**x)).count())
        .into_iter()
        .sum();
    if outside == 0 {
        return Ok(());
    }
    let fraction = outside as f64 / positions.len() as f64;
    if fraction > MAX_OUTSIDE_FRACTION {
        return Err(Error::DriftDomainExceeded { fraction });
    }
    log::warn!("{outside} particles outside the drift grid, extrapolating linearly");
    Ok(())
}

/// Sample moments with plug-in standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Second moment about the origin.
    pub msd: f64,
    pub se_mean: f64,
    pub se_msd: f64,
}

pub fn estimate_moments(ens: &Ensemble) -> Result<Moments> {
    let x = ens.positions();
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewParticles(n));
    }
    let (mean, se_mean) = mean_and_se(x.iter().copied(), n);
    let (msd, se_msd) = mean_and_se(x.iter().map(|x| x * x), n);
    Ok(Moments { mean, msd, se_mean, se_msd })
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (nf - 1.0) / nf).sqrt())
}

/// Histogram density with one bin of width `h` centred on each node.
pub fn density_histogram(ens: &Ensemble, grid: &Grid) -> Result<ScalarField> {
    let n = ens.n_particles();
    if n == 0 {
        return Err(Error::TooFewParticles(0));
    }
    let h = grid.spacing();
    let mut counts = vec![0.0; grid.len()];
    let mut inside = 0usize;
    for &x in ens.positions() {
        let k = ((x - grid.x_min()) / h + 0.5).floor();
        if k >= 0.0 && (k as usize) < grid.len() {
            counts[k as usize] += 1.0;
            inside += 1;
        }
    }
    let coverage = inside as f64 / n as f64;
    if coverage < 1.0 - MAX_OUTSIDE_FRACTION {
        return Err(Error::CoverageTooLow { coverage });
    }
    ScalarField::density(*grid, counts)
}

/// Least-squares fit `msd(t) = c0 + c1 t + c2 t^2` accumulated snapshot by
/// snapshot.
///
/// Each coefficient is a fixed linear combination of the snapshot second
/// moments, hence an average over particles of a per-particle statistic;
/// the standard error is the spread of that statistic, which accounts for
/// the correlation between snapshots of the same trajectory.
#[derive(Debug, Clone)]
pub struct MsdPolynomialFit {
    times: Vec<f64>,
    /// `weights[j][k]`: weight of snapshot `k` in coefficient `j`.
    weights: [Vec<f64>; 3],
    per_particle: [Vec<f64>; 3],
    recorded: Vec<bool>,
}

/// Fitted coefficients in increasing power of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub coefficients: [f64; 3],
    pub standard_errors: [f64; 3],
}

impl MsdPolynomialFit {
    pub fn new(times: Vec<f64>, n_particles: usize) -> Result<Self> {
        if times.len() < 4 {
            return Err(Error::InvalidInput("a quadratic fit with error bars needs at least 4 times".into()));
        }
        if n_particles < 2 {
            return Err(Error::TooFewParticles(n_particles));
        }
        // normal equations (A^T A) c = A^T m with A = [1, t, t^2]
        let mut ata = [[0.0; 3]; 3];
        for &t in &times {
            let row = [1.0, t, t * t];
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        let inv = invert3(&ata)
            .ok_or_else(|| Error::InvalidInput("fit times are degenerate".into()))?;
        let weights = std::array::from_fn(|j| {
            times.iter().map(|&t| inv[j][0] + inv[j][1] * t + inv[j][2] * t * t).collect()
        });
        let recorded = vec![false; times.len()];
        Ok(Self { times, weights, per_particle: std::array::from_fn(|_| vec![0.0; n_particles]), recorded })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Add the snapshot whose time is closest to `ens.time()`; snapshots at
    /// times not listed are ignored.
    pub fn record(&mut self, ens: &Ensemble) -> Result<()> {
        if ens.n_particles() != self.per_particle[0].len() {
            return Err(Error::InvalidInput("particle count changed".into()));
        }
        let tol = 1e-9 * ens.time().abs().max(1.0);
        let Some(k) = self.times.iter().position(|t| (t - ens.time()).abs() <= tol) else {
            return Ok(());
        };
        self.recorded[k] = true;
        for j in 0..3 {
            let w = self.weights[j][k];
            for (acc, x) in self.per_particle[j].iter_mut().zip(ens.positions()) {
                *acc += w * x * x;
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<QuadraticFit> {
        if let Some(k) = self.recorded.iter().position(|r| !r) {
            return Err(Error::InvalidInput(format!("no snapshot recorded at t = {}", self.times[k])));
        }
        let n = self.per_particle[0].len();
        let mut coefficients = [0.0; 3];
        let mut standard_errors = [0.0; 3];
        for j in 0..3 {
            let (m, se) = mean_and_se(self.per_particle[j].iter().copied(), n);
            coefficients[j] = m;
            standard_errors[j] = se;
        }
        Ok(QuadraticFit { coefficients, standard_errors })
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if det.abs() < 1e-300 {
        return None;
    }
    // inverse = adjugate / det, adjugate = transposed cofactors
    Some(std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / det)))
}
