use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

use super::madelung::WaveField;
use super::TimeStepping;
use crate::deriv::fft_pair;
use crate::error::{Error, Result};
use crate::fields::{DiffusionParams, ScalarField};
use crate::grid::Grid;
use crate::Snapshot;

/// Potential `Omega` of the linearized dynamics.
#[derive(Clone)]
pub enum Potential {
    Static(ScalarField),
    /// `Omega(x, t)`, sampled on the grid every half step.
    Dynamic(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Static(field) => f.debug_tuple("Static").field(field).finish(),
            Potential::Dynamic(_) => f.write_str("Dynamic(..)"),
        }
    }
}

impl Potential {
    pub fn zero(grid: Grid) -> Self {
        Potential::Static(ScalarField::zeros(grid, crate::fields::ScalarKind::Omega))
    }
}

/// Strang split-step propagator for `i dpsi/dt = -D psi'' + Omega/(2D) psi`.
///
/// One step is a half-step potential phase, the exact kinetic step
/// `exp(-i D k^2 dt)` in Fourier space, and another half-step potential
/// phase. Each propagator owns its FFT plans and scratch space.
pub struct SplitStepPropagator {
    grid: Grid,
    d: f64,
    dt: f64,
    kinetic: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    potential: Potential,
    static_half: Option<Vec<Complex64>>,
    sample: Vec<f64>,
}

impl SplitStepPropagator {
    /// `dt` may be negative to propagate backwards.
    pub fn new(grid: Grid, potential: Potential, params: &DiffusionParams, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidInput(format!("time step must be non-zero, got {dt}")));
        }
        let n = grid.len();
        let d = params.d;
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0 / n as f64, -d * k * k * dt))
            .collect();
        let (fft, ifft) = fft_pair(n);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len())];
        let static_half = match &potential {
            Potential::Static(omega) => {
                if omega.grid() != &grid {
                    return Err(Error::GridMismatch);
                }
                check_phase(&grid, omega.values(), d, dt)?;
                Some(half_step_phases(omega.values(), d, dt))
            }
            Potential::Dynamic(_) => None,
        };
        Ok(Self { grid, d, dt, kinetic, fft, ifft, scratch, potential, static_half, sample: vec![0.0; n] })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply_potential(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        match (&self.static_half, &self.potential) {
            (Some(phases), _) => {
                psi.iter_mut().zip(phases).for_each(|(p, ph)| *p *= ph);
            }
            (None, Potential::Dynamic(f)) => {
                for (s, x) in self.sample.iter_mut().zip(self.grid.nodes()) {
                    *s = f(x, t);
                }
                check_phase(&self.grid, &self.sample, self.d, self.dt)?;
                let scale = -self.dt / (4.0 * self.d);
                psi.iter_mut()
                    .zip(&self.sample)
                    .for_each(|(p, o)| *p *= Complex64::from_polar(1.0, scale * o));
            }
            (None, Potential::Static(_)) => unreachable!("static phases are precomputed"),
        }
        Ok(())
    }

    /// Advance `psi` from `t` to `t + dt`.
    pub fn step(&mut self, psi: &mut WaveField, t: f64) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let values = psi.values_mut();
        self.apply_potential(values, t)?;
        self.fft.process_with_scratch(values, &mut self.scratch);
        values.iter_mut().zip(&self.kinetic).for_each(|(p, k)| *p *= k);
        self.ifft.process_with_scratch(values, &mut self.scratch);
        self.apply_potential(values, t + self.dt)
    }

    pub fn advance(&mut self, psi: &mut WaveField, t: f64, n_steps: usize) -> Result<f64> {
        let mut time = t;
        for _ in 0..n_steps {
            self.step(psi, time)?;
            time += self.dt;
        }
        Ok(time)
    }
}

fn half_step_phases(omega: &[f64], d: f64, dt: f64) -> Vec<Complex64> {
    let scale = -dt / (4.0 * d);
    omega.iter().map(|o| Complex64::from_polar(1.0, scale * o)).collect()
}

/// Phase `Omega/(2D) * dt/2` must stay below `pi` at every node.
fn check_phase(grid: &Grid, omega: &[f64], d: f64, dt: f64) -> Result<()> {
    let max = omega.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    let phase = max * dt.abs() / (4.0 * d);
    if !(phase <= PI) {
        return Err(Error::StabilityViolation(format!(
            "potential phase {phase:.3} per half step exceeds pi on [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    Ok(())
}

/// Evolve `psi0` and return snapshots at `t = 0`, every
/// `stepping.snapshot_every` steps, and at the final step.
pub fn evolve_schrodinger(
    psi0: &WaveField,
    potential: Potential,
    stepping: &TimeStepping,
    params: &DiffusionParams,
) -> Result<Vec<Snapshot<WaveField>>> {
    stepping.validate()?;
    let mut prop = SplitStepPropagator::new(*psi0.grid(), potential, params, stepping.dt)?;
    let mut psi = psi0.clone();
    let mut out = vec![Snapshot { time: 0.0, state: psi.clone() }];
    for step in 1..=stepping.n_steps {
        let t = (step - 1) as f64 * stepping.dt;
        prop.step(&mut psi, t)?;
        if stepping.is_snapshot(step) {
            out.push(Snapshot { time: step as f64 * stepping.dt, state: psi.clone() });
        }
    }
    Ok(out)
}
