//! Observables: moments, energies, pressure, control-volume balances and
//! the time series that the runner writes out.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::deriv::{derivative, Scheme};
use crate::error::{Error, Result};
use crate::evolve::{
    log_density_time_derivative, madelung_decompose, phase_time_derivative, WaveField,
};
use crate::fields::{
    girsanov_residual, hj_residual, omega_recoil, q_potential, support_mask, DiffusionParams, GirsanovOptions,
    Mode, ScalarField, ScalarKind, VectorField,
};
use crate::grid::Grid;

fn check_grids(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

pub fn mass(rho: &ScalarField) -> f64 {
    rho.grid().integrate(rho.values())
}

/// `int x^2 rho dx`.
pub fn msd(rho: &ScalarField) -> f64 {
    let g = rho.grid();
    g.integrate(&g.nodes().zip(rho.values()).map(|(x, r)| x * x * r).collect::<Vec<_>>())
}

/// `int rho v^2/2 dx`.
pub fn kinetic_energy(rho: &ScalarField, v: &VectorField) -> Result<f64> {
    check_grids(rho.grid(), v.grid())?;
    let f: Vec<f64> = rho.values().iter().zip(v.values()).map(|(r, v)| 0.5 * r * v * v).collect();
    Ok(rho.grid().integrate(&f))
}

/// Energy functional of a mode.
///
/// Recoil: `int (v^2/2 - Q + Omega) rho`, conserved for static `Omega`.
/// Standard: `int (v^2/2 + Q - Omega) rho`, which vanishes for free Brownian
/// expansion.
pub fn total_energy(
    rho: &ScalarField,
    v: &VectorField,
    q: &ScalarField,
    omega: &ScalarField,
    mode: Mode,
) -> Result<f64> {
    check_grids(rho.grid(), v.grid())?;
    check_grids(rho.grid(), q.grid())?;
    check_grids(rho.grid(), omega.grid())?;
    let sign = match mode {
        Mode::Standard => 1.0,
        Mode::Recoil => -1.0,
    };
    let f: Vec<f64> = (0..rho.grid().len())
        .map(|i| {
            let v = v.values()[i];
            rho.values()[i] * (0.5 * v * v + sign * (q.values()[i] - omega.values()[i]))
        })
        .collect();
    Ok(rho.grid().integrate(&f))
}

/// `sqrt(int rho r^2 dx)`.
pub fn rho_weighted_norm(residual: &[f64], rho: &ScalarField) -> Result<f64> {
    if residual.len() != rho.grid().len() {
        return Err(Error::GridMismatch);
    }
    let f: Vec<f64> = residual.iter().zip(rho.values()).map(|(r, p)| p * r * r).collect();
    Ok(rho.grid().integrate(&f).max(0.0).sqrt())
}

/// [`rho_weighted_norm`] restricted to the support of `rho` (see
/// [`support_mask`]). Past the support the phase is frozen and floored
/// logarithms dominate, so residuals there carry no information.
pub fn support_norm(residual: &[f64], rho: &ScalarField) -> Result<f64> {
    if residual.len() != rho.grid().len() {
        return Err(Error::GridMismatch);
    }
    let masked: Vec<f64> =
        residual.iter().zip(support_mask(rho)).map(|(r, m)| if m { *r } else { 0.0 }).collect();
    rho_weighted_norm(&masked, rho)
}

/// Interval `[a, b]` of a one-dimensional control volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlVolume {
    pub a: f64,
    pub b: f64,
}

impl ControlVolume {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::VolumeOutsideGrid { a, b });
        }
        Ok(Self { a, b })
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.a < self.b && grid.contains(self.a) && grid.contains(self.b) {
            Ok(())
        } else {
            Err(Error::VolumeOutsideGrid { a: self.a, b: self.b })
        }
    }
}

/// Momentum rate of change inside `vol`: `int_V rho d(Omega - Q)/dx`,
/// negated in recoil mode.
pub fn momentum_rate(
    rho: &ScalarField,
    q: &ScalarField,
    omega: &ScalarField,
    vol: &ControlVolume,
    mode: Mode,
    scheme: Scheme,
) -> Result<f64> {
    let grid = rho.grid();
    check_grids(grid, q.grid())?;
    check_grids(grid, omega.grid())?;
    vol.check(grid)?;
    let source: Vec<f64> = omega.values().iter().zip(q.values()).map(|(o, q)| o - q).collect();
    let grad = derivative(grid, &source, scheme);
    let f: Vec<f64> = rho.values().iter().zip(&grad).map(|(r, g)| r * g).collect();
    let rate = grid.integrate_interval(&f, vol.a, vol.b)?;
    Ok(match mode {
        Mode::Standard => rate,
        Mode::Recoil => -rate,
    })
}

/// Mass in a volume carried along by the current velocity:
/// `int_{V(t+dt)} rho(t+dt) - int_{V(t)} rho(t)`, with the endpoints of
/// `V(t+dt)` moved by `v(t) dt`. The mismatch is `O(dt^2)` for
/// `dt <= 0.01 alpha^2 / D`.
pub fn comoving_mass_check(
    rho_t: &ScalarField,
    rho_t_dt: &ScalarField,
    v: &VectorField,
    vol: &ControlVolume,
    dt: f64,
) -> Result<f64> {
    let grid = rho_t.grid();
    check_grids(grid, rho_t_dt.grid())?;
    check_grids(grid, v.grid())?;
    vol.check(grid)?;
    let moved = ControlVolume {
        a: vol.a + grid.interpolate_cubic(v.values(), vol.a) * dt,
        b: vol.b + grid.interpolate_cubic(v.values(), vol.b) * dt,
    };
    moved.check(grid)?;
    Ok(grid.integrate_interval(rho_t_dt.values(), moved.a, moved.b)?
        - grid.integrate_interval(rho_t.values(), vol.a, vol.b)?)
}

/// Pressure `P` with `dP/dx = rho dQ/dx`, gauged to vanish at the left edge.
pub fn pressure_field(rho: &ScalarField, q: &ScalarField, scheme: Scheme) -> Result<ScalarField> {
    let grid = rho.grid();
    check_grids(grid, q.grid())?;
    if rho.values().iter().any(|r| !(*r >= 0.0) || !r.is_finite()) || !(rho.max_abs() > 0.0) {
        return Err(Error::NonPositiveDensity("pressure needs a positive density".into()));
    }
    let dq = derivative(grid, q.values(), scheme);
    let f: Vec<f64> = rho.values().iter().zip(&dq).map(|(r, d)| r * d).collect();
    ScalarField::new(*grid, grid.cumulative_integral(&f), ScalarKind::P)
}

/// Norms of the two identity residuals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub hj: f64,
    /// `None` when the recovered drift fails the gradient check.
    pub girsanov: Option<f64>,
}

/// Hamilton-Jacobi and Girsanov residuals of a wave-function evolution at
/// the middle of three snapshots spaced by `dt`.
///
/// Time derivatives are centred differences, space derivatives use
/// `scheme`. Norms are [`support_norm`]s. The Schrodinger evolution realises recoil dynamics, so the
/// Girsanov check uses `Omega_r = 2Q - Omega` in recoil mode and `Omega`
/// otherwise. `girsanov_tolerance` bounds `max |b - 2D grad phi|` where the
/// density is resolved.
#[allow(clippy::too_many_arguments)]
pub fn wave_identity_residuals(
    prev: &WaveField,
    mid: &WaveField,
    next: &WaveField,
    dt: f64,
    omega: &ScalarField,
    params: &DiffusionParams,
    mode: Mode,
    scheme: Scheme,
    girsanov_tolerance: f64,
) -> Result<IdentityResiduals> {
    let fields = madelung_decompose(mid, params)?;
    let rho = ScalarField::density(*mid.grid(), fields.rho.values().to_vec())?;
    let ds_dt = phase_time_derivative(prev, next, dt, params)?;
    let dlog_rho = log_density_time_derivative(&prev.density(), &next.density(), dt)?;

    let hj = hj_residual(&fields.s, &rho, omega, mode, &ds_dt, params, scheme)?;

    let d = params.d;
    let max = rho.max_abs();
    let ln_rho = |r: f64| r.max(crate::fields::DENSITY_FLOOR * max).ln();
    let phi = ScalarField::from_fn(*rho.grid(), ScalarKind::Phi, |_| 0.0);
    let phi_values: Vec<f64> =
        rho.values().iter().zip(fields.s.values()).map(|(r, s)| 0.5 * ln_rho(*r) + s / (2.0 * d)).collect();
    let phi = ScalarField::new(*phi.grid(), phi_values, ScalarKind::Phi)?;
    let dphi_dt = ScalarField::new(
        *rho.grid(),
        dlog_rho.values().iter().zip(ds_dt.values()).map(|(l, s)| 0.5 * l + s / (2.0 * d)).collect(),
        ScalarKind::Phi,
    )?;
    let b = VectorField::new(
        *rho.grid(),
        fields.u.values().iter().zip(fields.v.values()).map(|(u, v)| u + v).collect(),
        crate::fields::VectorKind::B,
    )?;
    let target = match mode {
        Mode::Standard => omega.clone(),
        Mode::Recoil => omega_recoil(&q_potential(&rho, params, scheme)?, omega)?,
    };
    let options = GirsanovOptions { scheme, tolerance: girsanov_tolerance, support: Some(&rho) };

    let girsanov = match girsanov_residual(&phi, &b, &target, &dphi_dt, params, &options) {
        Ok(r) => Some(support_norm(r.values(), &rho)?),
        Err(Error::DriftNotGradient { deviation, tolerance }) => {
            log::warn!("girsanov residual skipped: |b - 2D grad phi| = {deviation:e} > {tolerance:e}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(IdentityResiduals { hj: support_norm(hj.values(), &rho)?, girsanov })
}

/// Columns a [`DiagnosticSeries`] can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Msd,
    EKin,
    ETotal,
    Mass,
    HjResidualNorm,
    GirsanovResidualNorm,
    MomentumRate,
    Mean,
    MsdSe,
}

impl Column {
    pub const DEFAULT: [Column; 5] = [
        Column::Msd,
        Column::EKin,
        Column::ETotal,
        Column::HjResidualNorm,
        Column::GirsanovResidualNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Msd => "msd",
            Column::EKin => "e_kin",
            Column::ETotal => "e_total",
            Column::Mass => "mass",
            Column::HjResidualNorm => "hj_residual_norm",
            Column::GirsanovResidualNorm => "girsanov_residual_norm",
            Column::MomentumRate => "momentum_rate",
            Column::Mean => "mean",
            Column::MsdSe => "msd_se",
        }
    }
}

/// One row of a series; `None` marks a quantity the engine cannot supply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub msd: Option<f64>,
    pub e_kin: Option<f64>,
    pub e_total: Option<f64>,
    pub mass: Option<f64>,
    pub hj_residual_norm: Option<f64>,
    pub girsanov_residual_norm: Option<f64>,
    pub momentum_rate: Option<f64>,
    pub mean: Option<f64>,
    pub msd_se: Option<f64>,
}

impl DiagnosticRecord {
    pub fn get(&self, column: Column) -> Option<f64> {
        match column {
            Column::Msd => self.msd,
            Column::EKin => self.e_kin,
            Column::ETotal => self.e_total,
            Column::Mass => self.mass,
            Column::HjResidualNorm => self.hj_residual_norm,
            Column::GirsanovResidualNorm => self.girsanov_residual_norm,
            Column::MomentumRate => self.momentum_rate,
            Column::Mean => self.mean,
            Column::MsdSe => self.msd_se,
        }
    }
}

/// Records at strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    times: Vec<f64>,
    records: Vec<DiagnosticRecord>,
}

impl DiagnosticSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, record: DiagnosticRecord) -> Result<()> {
        if let Some(last) = self.times.last() {
            if !(t > *last) {
                return Err(Error::InvalidInput(format!("time {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        self.records.push(record);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn records(&self) -> &[DiagnosticRecord] {
        &self.records
    }

    pub fn column(&self, column: Column) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.get(column)).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with a `t` column first. Numbers use the shortest representation
    /// that round-trips; unavailable values are left empty.
    pub fn to_csv(&self, columns: &[Column]) -> String {
        let mut out = String::from("t");
        for c in columns {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (t, r) in self.times.iter().zip(&self.records) {
            write!(out, "{t:?}").unwrap();
            for c in columns {
                out.push(',');
                if let Some(v) = r.get(*c) {
                    write!(out, "{v:?}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}
