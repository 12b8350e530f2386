//! Numerical time evolution.
//!
//! The recoil dynamics is integrated through its linearization
//! `i dpsi/dt = -D psi'' + Omega/(2D) psi` with `psi = sqrt(rho) exp(i S/(2D))`
//! ([`schrodinger`], [`madelung`]); the standard dynamics through the
//! Fokker-Planck equation itself ([`fokker_planck`]).

pub mod fokker_planck;
pub mod madelung;
pub mod schrodinger;

pub use fokker_planck::{evolve_fokker_planck, Drift, FokkerPlanckStepper, TimeScheme};
pub use madelung::{
    log_density_time_derivative, madelung_compose, madelung_decompose, phase_time_derivative,
    MadelungFields, WaveField,
};
pub use schrodinger::{evolve_schrodinger, Potential, SplitStepPropagator};

use crate::error::{Error, Result};

/// Fixed-step time stepping with snapshots every `snapshot_every` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepping {
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_every: usize,
}

impl TimeStepping {
    /// Snapshots default to every 1/100 of the run.
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, snapshot_every: (n_steps / 100).max(1) }
    }

    /// Steps of size close to `dt` that land exactly on `t_end`.
    pub fn to_time(t_end: f64, dt: f64) -> Self {
        let n = (t_end / dt).round().max(1.0) as usize;
        Self::new(t_end / n as f64, n)
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every.max(1);
        self
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidInput("snapshot stride must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn is_snapshot(&self, step: usize) -> bool {
        step.is_multiple_of(self.snapshot_every) || step == self.n_steps
    }
}
