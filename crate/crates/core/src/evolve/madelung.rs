use std::f64::consts::PI;

use num_complex::Complex64;

use crate::deriv::{complex_derivative, Scheme};
use crate::error::{Error, Result};
use crate::fields::{
    osmotic_velocity, DiffusionParams, ScalarField, ScalarKind, VectorField, VectorKind,
    DENSITY_FLOOR,
};
use crate::grid::Grid;

/// Complex field `psi` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `int |psi|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let scale = 1.0 / self.norm().sqrt();
        self.values.iter_mut().for_each(|c| *c *= scale);
    }

    /// `|psi|^2`, not renormalized.
    pub fn density(&self) -> ScalarField {
        let values = self.values.iter().map(|c| c.norm_sqr()).collect();
        ScalarField::new(self.grid, values, ScalarKind::Rho).expect("lengths match")
    }

    /// `<x^2> = int x^2 |psi|^2 dx`.
    pub fn second_moment(&self) -> f64 {
        self.grid
            .nodes()
            .zip(&self.values)
            .map(|(x, c)| x * x * c.norm_sqr())
            .sum::<f64>()
            * self.grid.spacing()
    }
}

/// `psi = sqrt(rho) exp(i S / (2D))`, normalized.
///
/// `S` carries velocity-potential units (`v = dS/dx`), so the stored phase is
/// `S/(2D)`.
pub fn madelung_compose(
    rho: &ScalarField,
    s: &ScalarField,
    params: &DiffusionParams,
) -> Result<WaveField> {
    if rho.grid() != s.grid() {
        return Err(Error::GridMismatch);
    }
    if rho.label() != ScalarKind::Rho {
        return Err(Error::InvalidInput(format!("expected a density, got {:?}", rho.label())));
    }
    if let Some(v) = rho.values().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::NonPositiveDensity(format!("value {v}")));
    }
    if !rho.values().iter().any(|v| *v > 0.0) {
        return Err(Error::NonPositiveDensity("density vanishes everywhere".into()));
    }
    let values = rho
        .values()
        .iter()
        .zip(s.values())
        .map(|(r, s)| Complex64::from_polar(r.sqrt(), s / (2.0 * params.d)))
        .collect();
    let mut psi = WaveField { grid: *rho.grid(), values };
    psi.normalize();
    Ok(psi)
}

/// Hydrodynamic fields recovered from `psi`.
#[derive(Debug, Clone)]
pub struct MadelungFields {
    pub rho: ScalarField,
    /// `2D` times the unwrapped phase, anchored at the density maximum.
    pub s: ScalarField,
    pub v: VectorField,
    pub u: VectorField,
}

fn wrap(angle: f64) -> f64 {
    angle - 2.0 * PI * ((angle + PI) / (2.0 * PI)).floor()
}

/// Split `psi` into density, phase and velocities.
///
/// `v = 2D Im(conj(psi) psi') / |psi|^2` uses the spectral derivative of
/// `psi`, so it needs no phase unwrapping. The phase itself is unwrapped
/// outwards from the density maximum, using the local wavenumber `v/(2D)` to
/// pick the branch; below the density floor it is held constant. A node
/// increment more than `pi/2` away from the predicted one means `psi` has a
/// node or is under-resolved, and is reported as
/// [`Error::PhaseUnwrapFailure`].
pub fn madelung_decompose(psi: &WaveField, params: &DiffusionParams) -> Result<MadelungFields> {
    let grid = psi.grid;
    let n = grid.len();
    let h = grid.spacing();
    let d = params.d;
    let rho = psi.density();
    let max = rho.values().iter().fold(0.0f64, |m, &v| m.max(v));
    if !(max > 0.0) {
        return Err(Error::NonPositiveDensity("psi vanishes everywhere".into()));
    }
    let floor = DENSITY_FLOOR * max;

    let dpsi = complex_derivative(&grid, &psi.values, 1);
    let v: Vec<f64> = psi
        .values
        .iter()
        .zip(&dpsi)
        .map(|(p, dp)| 2.0 * d * (p.conj() * dp).im / p.norm_sqr().max(floor))
        .collect();
    let wavenumber: Vec<f64> = v.iter().map(|v| v / (2.0 * d)).collect();

    let arg: Vec<f64> = psi.values.iter().map(|c| c.arg()).collect();
    let resolved: Vec<bool> = rho.values().iter().map(|&r| r >= floor).collect();
    let anchor = rho
        .values()
        .iter()
        .enumerate()
        .fold(0, |best, (i, &r)| if r > rho.values()[best] { i } else { best });

    let mut phase = vec![0.0; n];
    phase[anchor] = arg[anchor];
    let link = |from: usize, to: usize, phase: &mut [f64]| -> Result<()> {
        if !(resolved[from] && resolved[to]) {
            phase[to] = phase[from];
            return Ok(());
        }
        let sign = if to > from { 1.0 } else { -1.0 };
        let predicted = sign * 0.5 * h * (wavenumber[from] + wavenumber[to]);
        let correction = wrap(arg[to] - arg[from] - predicted);
        if correction.abs() > 0.5 * PI {
            return Err(Error::PhaseUnwrapFailure { x: grid.x(to) });
        }
        phase[to] = phase[from] + predicted + correction;
        Ok(())
    };
    for i in anchor + 1..n {
        link(i - 1, i, &mut phase)?;
    }
    for i in (0..anchor).rev() {
        link(i + 1, i, &mut phase)?;
    }

    let s = phase.iter().map(|p| 2.0 * d * p).collect();
    let u = osmotic_velocity(&rho, params, Scheme::Spectral)?;
    Ok(MadelungFields {
        s: ScalarField::new(grid, s, ScalarKind::S)?,
        v: VectorField::new(grid, v, VectorKind::V)?,
        u,
        rho,
    })
}

/// `dS/dt` at the middle of two snapshots `2 dt` apart:
/// `2D arg(psi_next conj(psi_prev)) / (2 dt)`, zero below the density floor.
pub fn phase_time_derivative(
    prev: &WaveField,
    next: &WaveField,
    dt: f64,
    params: &DiffusionParams,
) -> Result<ScalarField> {
    if prev.grid != next.grid {
        return Err(Error::GridMismatch);
    }
    let max = prev.values.iter().fold(0.0f64, |m, c| m.max(c.norm_sqr()));
    let floor = DENSITY_FLOOR * max;
    let values = prev
        .values
        .iter()
        .zip(&next.values)
        .map(|(a, b)| {
            if a.norm_sqr() < floor || b.norm_sqr() < floor {
                0.0
            } else {
                2.0 * params.d * (b * a.conj()).arg() / (2.0 * dt)
            }
        })
        .collect();
    ScalarField::new(prev.grid, values, ScalarKind::S)
}

/// Centered `d ln(rho)/dt` from snapshots `2 dt` apart, with the density floor.
pub fn log_density_time_derivative(
    prev: &ScalarField,
    next: &ScalarField,
    dt: f64,
) -> Result<ScalarField> {
    if prev.grid() != next.grid() {
        return Err(Error::GridMismatch);
    }
    let max = prev.values().iter().fold(0.0f64, |m, &v| m.max(v));
    let floor = DENSITY_FLOOR * max;
    let values = prev
        .values()
        .iter()
        .zip(next.values())
        .map(|(a, b)| (b.max(floor).ln() - a.max(floor).ln()) / (2.0 * dt))
        .collect();
    ScalarField::new(*prev.grid(), values, ScalarKind::Phi)
}
