//! Field types and the local operators of the diffusion hydrodynamics:
//! osmotic and current velocities, the `Q` potential, the `Omega`
//! constructions, and residuals of the momentum, Hamilton-Jacobi and
//! Girsanov laws in both the standard and the recoil form.

use serde::{Deserialize, Serialize};

use crate::deriv::{derivative, second_derivative, Scheme};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative density floor used wherever `rho` is divided by or logged.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Rho,
    S,
    Q,
    Omega,
    Phi,
    P,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    /// Osmotic velocity `D grad ln rho`.
    U,
    /// Current velocity.
    V,
    /// Forward drift.
    B,
    /// External force.
    F,
    Residual,
}

/// Which momentum law the ensemble obeys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `dv/dt + (v.grad)v = grad(Omega - Q)`.
    Standard,
    /// Action-reaction in the mean: `dv/dt + (v.grad)v = grad(Q - Omega)`.
    Recoil,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Diffusion constant.
    pub d: f64,
    pub mass: f64,
    /// Friction rate `beta`.
    pub friction: f64,
}

impl DiffusionParams {
    pub fn new(d: f64, mass: f64, friction: f64) -> Result<Self> {
        for (name, v) in [("D", d), ("m", mass), ("beta", friction)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { d, mass, friction })
    }

    /// Unit mass and friction.
    pub fn with_diffusion(d: f64) -> Result<Self> {
        Self::new(d, 1.0, 1.0)
    }
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident, $kind:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: Grid,
            values: Vec<f64>,
            label: $kind,
        }

        impl $name {
            pub fn new(grid: Grid, values: Vec<f64>, label: $kind) -> Result<Self> {
                if values.len() != grid.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} values for a grid of {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok(Self { grid, values, label })
            }

            pub fn from_fn(grid: Grid, label: $kind, f: impl Fn(f64) -> f64) -> Self {
                Self { values: grid.sample(f), grid, label }
            }

            pub fn zeros(grid: Grid, label: $kind) -> Self {
                Self { values: vec![0.0; grid.len()], grid, label }
            }

            pub fn grid(&self) -> &Grid {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn label(&self) -> $kind {
                self.label
            }

            pub fn with_label(mut self, label: $kind) -> Self {
                self.label = label;
                self
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            fn same_grid(&self, grid: &Grid) -> Result<()> {
                if &self.grid == grid {
                    Ok(())
                } else {
                    Err(Error::GridMismatch)
                }
            }
        }
    };
}

field_type!(
    /// Real scalar sampled on a grid at one instant: `rho`, `S`, `Q`, `Omega`, `phi` or `P`.
    ScalarField,
    ScalarKind
);
field_type!(
    /// One-component velocity (or force) field.
    VectorField,
    VectorKind
);

impl ScalarField {
    /// Probability density normalized to unit integral.
    pub fn density(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonPositiveDensity(format!("value {v}")));
        }
        let mass = grid.integrate(&values);
        if !(mass > 0.0) {
            return Err(Error::NonPositiveDensity("zero total mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, values, label: ScalarKind::Rho })
    }

    pub fn density_from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::density(grid, grid.sample(f))
    }
}

fn ensure_density(rho: &ScalarField) -> Result<f64> {
    if rho.label != ScalarKind::Rho {
        return Err(Error::InvalidInput(format!("expected a density, got {:?}", rho.label)));
    }
    let max = rho.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if !(max > 0.0) || rho.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPositiveDensity(
            "density has no positive finite values".into(),
        ));
    }
    Ok(max)
}

/// `max(rho, eps * max rho)`.
pub(crate) fn floored(rho: &[f64], max: f64) -> impl Iterator<Item = f64> + '_ {
    let floor = DENSITY_FLOOR * max;
    rho.iter().map(move |&r| r.max(floor))
}

/// `u = D grad ln rho`.
pub fn osmotic_velocity(
    rho: &ScalarField,
    params: &DiffusionParams,
    scheme: Scheme,
) -> Result<VectorField> {
    let max = ensure_density(rho)?;
    let grid = rho.grid;
    let values = match scheme {
        Scheme::Spectral => {
            // u = 2D R'/R with R = sqrt(rho); the floor only enters the denominator
            let amp: Vec<f64> = rho.values.iter().map(|r| r.max(0.0).sqrt()).collect();
            let d_amp = derivative(&grid, &amp, Scheme::Spectral);
            d_amp
                .iter()
                .zip(floored(&rho.values, max))
                .map(|(da, r)| 2.0 * params.d * da / r.sqrt())
                .collect()
        }
        Scheme::Central => {
            let log_rho: Vec<f64> = floored(&rho.values, max).map(f64::ln).collect();
            derivative(&grid, &log_rho, Scheme::Central)
                .into_iter()
                .map(|g| params.d * g)
                .collect()
        }
    };
    Ok(VectorField { grid, values, label: VectorKind::U })
}

/// `Q = u^2/2 + D div u`.
pub fn q_potential(rho: &ScalarField, params: &DiffusionParams, scheme: Scheme) -> Result<ScalarField> {
    let max = ensure_density(rho)?;
    let grid = rho.grid;
    let d = params.d;
    let values = match scheme {
        // identical to u^2/2 + D u' but needs only derivatives of sqrt(rho)
        Scheme::Spectral => {
            let amp: Vec<f64> = rho.values.iter().map(|r| r.max(0.0).sqrt()).collect();
            let dd_amp = second_derivative(&grid, &amp, Scheme::Spectral);
            dd_amp
                .iter()
                .zip(floored(&rho.values, max))
                .map(|(dda, r)| 2.0 * d * d * dda / r.sqrt())
                .collect()
        }
        Scheme::Central => {
            let u = osmotic_velocity(rho, params, Scheme::Central)?;
            let du = derivative(&grid, &u.values, Scheme::Central);
            u.values
                .iter()
                .zip(&du)
                .map(|(u, du)| 0.5 * u * u + d * du)
                .collect()
        }
    };
    Ok(ScalarField { grid, values, label: ScalarKind::Q })
}

/// `v = b - u`.
pub fn current_velocity(
    b: &VectorField,
    rho: &ScalarField,
    params: &DiffusionParams,
    scheme: Scheme,
) -> Result<VectorField> {
    b.same_grid(&rho.grid)?;
    let u = osmotic_velocity(rho, params, scheme)?;
    let values = b.values.iter().zip(&u.values).map(|(b, u)| b - u).collect();
    Ok(VectorField { grid: b.grid, values, label: VectorKind::V })
}

/// Smoluchowski effective potential `F^2/(2 m^2 beta^2) + (D / m beta) div F`.
pub fn omega_smoluchowski(
    force: &VectorField,
    params: &DiffusionParams,
    scheme: Scheme,
) -> Result<ScalarField> {
    let mb = params.mass * params.friction;
    let div = derivative(&force.grid, &force.values, scheme);
    let values = force
        .values
        .iter()
        .zip(&div)
        .map(|(f, df)| f * f / (2.0 * mb * mb) + params.d / mb * df)
        .collect();
    Ok(ScalarField { grid: force.grid, values, label: ScalarKind::Omega })
}

/// `Omega_r = 2Q - Omega`, the potential that puts the recoil
/// Hamilton-Jacobi equation into standard form.
pub fn omega_recoil(q: &ScalarField, omega: &ScalarField) -> Result<ScalarField> {
    q.same_grid(&omega.grid)?;
    let values = q.values.iter().zip(&omega.values).map(|(q, o)| 2.0 * q - o).collect();
    Ok(ScalarField { grid: q.grid, values, label: ScalarKind::Omega })
}

/// Hamilton-Jacobi residual.
///
/// Standard: `dS/dt + |grad S|^2/2 + Q - Omega`.
/// Recoil: `dS/dt + |grad S|^2/2 - Q + Omega`.
pub fn hj_residual(
    s: &ScalarField,
    rho: &ScalarField,
    omega: &ScalarField,
    mode: Mode,
    ds_dt: &ScalarField,
    params: &DiffusionParams,
    scheme: Scheme,
) -> Result<ScalarField> {
    s.same_grid(&rho.grid)?;
    s.same_grid(&omega.grid)?;
    s.same_grid(&ds_dt.grid)?;
    let q = q_potential(rho, params, scheme)?;
    let grad_s = derivative(&s.grid, &s.values, scheme);
    let sign = match mode {
        Mode::Standard => 1.0,
        Mode::Recoil => -1.0,
    };
    let values = (0..s.grid.len())
        .map(|i| {
            ds_dt.values[i] + 0.5 * grad_s[i] * grad_s[i] + sign * (q.values[i] - omega.values[i])
        })
        .collect();
    Ok(ScalarField { grid: s.grid, values, label: ScalarKind::Residual })
}

/// Momentum-law residual.
///
/// Standard: `dv/dt + v v' - (Omega - Q)'`. Recoil: `dv/dt + v v' - (Q - Omega)'`.
pub fn momentum_residual(
    v: &VectorField,
    q: &ScalarField,
    omega: &ScalarField,
    mode: Mode,
    dv_dt: &VectorField,
    scheme: Scheme,
) -> Result<VectorField> {
    v.same_grid(&q.grid)?;
    v.same_grid(&omega.grid)?;
    v.same_grid(&dv_dt.grid)?;
    let grid = v.grid;
    let dv = derivative(&grid, &v.values, scheme);
    let source: Vec<f64> = q
        .values
        .iter()
        .zip(&omega.values)
        .map(|(q, o)| match mode {
            Mode::Standard => o - q,
            Mode::Recoil => q - o,
        })
        .collect();
    let grad_source = derivative(&grid, &source, scheme);
    let values = (0..grid.len())
        .map(|i| dv_dt.values[i] + v.values[i] * dv[i] - grad_source[i])
        .collect();
    Ok(VectorField { grid, values, label: VectorKind::Residual })
}

/// Relative density below which a field counts as unresolved.
pub const SUPPORT_FRACTION: f64 = 1e-8;

/// Nodes where `rho > SUPPORT_FRACTION * max(rho)`.
pub fn support_mask(rho: &ScalarField) -> Vec<bool> {
    let max = rho.values.iter().fold(0.0f64, |m, &v| m.max(v));
    rho.values.iter().map(|&r| r > SUPPORT_FRACTION * max).collect()
}

/// Controls the `b = 2D grad phi` precondition of [`girsanov_residual`].
#[derive(Debug, Clone, Copy)]
pub struct GirsanovOptions<'a> {
    pub scheme: Scheme,
    /// Allowed `max |b - 2D grad phi|`.
    pub tolerance: f64,
    /// When given, the gradient check only covers nodes where this density
    /// exceeds [`SUPPORT_FRACTION`] of its maximum.
    pub support: Option<&'a ScalarField>,
}

impl Default for GirsanovOptions<'_> {
    fn default() -> Self {
        Self { scheme: Scheme::Spectral, tolerance: 1e-6, support: None }
    }
}

/// `Omega_target - 2D [dphi/dt + (b^2/(2D) + div b)/2]`.
pub fn girsanov_residual(
    phi: &ScalarField,
    b: &VectorField,
    omega_target: &ScalarField,
    dphi_dt: &ScalarField,
    params: &DiffusionParams,
    options: &GirsanovOptions<'_>,
) -> Result<ScalarField> {
    b.same_grid(&phi.grid)?;
    omega_target.same_grid(&phi.grid)?;
    dphi_dt.same_grid(&phi.grid)?;
    let grid = phi.grid;
    let d = params.d;

    let grad_phi = derivative(&grid, &phi.values, options.scheme);
    let mask: Vec<bool> = match options.support {
        Some(rho) => {
            rho.same_grid(&grid)?;
            support_mask(rho)
        }
        None => vec![true; grid.len()],
    };
    let deviation = (0..grid.len())
        .filter(|&i| mask[i])
        .map(|i| (b.values[i] - 2.0 * d * grad_phi[i]).abs())
        .fold(0.0, f64::max);
    if !(deviation <= options.tolerance) {
        return Err(Error::DriftNotGradient { deviation, tolerance: options.tolerance });
    }

    let div_b = derivative(&grid, &b.values, options.scheme);
    let values = (0..grid.len())
        .map(|i| {
            let bi = b.values[i];
            omega_target.values[i]
                - 2.0 * d * (dphi_dt.values[i] + 0.5 * (bi * bi / (2.0 * d) + div_b[i]))
        })
        .collect();
    Ok(ScalarField { grid, values, label: ScalarKind::Residual })
}

/// Smoluchowski external force given as a polynomial
/// `F(x) = c0 + c1 x + c2 x^2 + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Force {
    pub coefficients: Vec<f64>,
}

impl Force {
    pub fn zero() -> Self {
        Self { coefficients: Vec::new() }
    }

    /// `F = -k x`.
    pub fn harmonic(stiffness: f64) -> Self {
        Self { coefficients: vec![0.0, -stiffness] }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn divergence(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    }

    /// Forward drift `F / (m beta)`.
    pub fn drift(&self, x: f64, params: &DiffusionParams) -> f64 {
        self.value(x) / (params.mass * params.friction)
    }

    pub fn sample(&self, grid: Grid) -> VectorField {
        VectorField::from_fn(grid, VectorKind::F, |x| self.value(x))
    }

    /// Closed-form Smoluchowski `Omega` for this force.
    pub fn omega(&self, x: f64, params: &DiffusionParams) -> f64 {
        let mb = params.mass * params.friction;
        let f = self.value(x);
        f * f / (2.0 * mb * mb) + params.d / mb * self.divergence(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid, alpha: f64) -> ScalarField {
        ScalarField::density_from_fn(grid, |x| (-x * x / (alpha * alpha)).exp()).unwrap()
    }

    fn params(d: f64) -> DiffusionParams {
        DiffusionParams::with_diffusion(d).unwrap()
    }

    /// Central difference of ln rho evaluated straight from the closed form.
    fn central_log_oracle(alpha: f64, d: f64, x: f64, h: f64) -> f64 {
        let ln_rho = |x: f64| -x * x / (alpha * alpha);
        d * (ln_rho(x + h) - ln_rho(x - h)) / (2.0 * h)
    }

    #[test]
    fn osmotic_velocity_of_gaussian() {
        let grid = Grid::symmetric(16.0, 4096).unwrap();
        let rho = gaussian(grid, 1.0);
        let p = params(0.5);
        for scheme in [Scheme::Spectral, Scheme::Central] {
            let u = osmotic_velocity(&rho, &p, scheme).unwrap();
            let i = grid.nodes().position(|x| (x - 1.0).abs() < 1e-9).unwrap();
            assert!((u.values()[i] + 1.0).abs() < 1e-6, "{scheme:?}: {}", u.values()[i]);
            let oracle = central_log_oracle(1.0, 0.5, 1.0, grid.spacing());
            assert!((u.values()[i] - oracle).abs() < 1e-6);
            // u = -2Dx/alpha^2 wherever rho is resolved
            for (x, u) in grid.nodes().zip(u.values()) {
                if x.abs() < 4.0 {
                    assert!((u + 2.0 * 0.5 * x).abs() < 1e-6, "x={x} u={u}");
                }
            }
        }
    }

    #[test]
    fn uniform_density_has_no_osmotic_velocity_or_q() {
        let grid = Grid::symmetric(3.0, 64).unwrap();
        let rho = ScalarField::density(grid, vec![1.0; 64]).unwrap();
        for scheme in [Scheme::Spectral, Scheme::Central] {
            assert!(osmotic_velocity(&rho, &params(1.0), scheme).unwrap().max_abs() < 1e-13);
            assert!(q_potential(&rho, &params(1.0), scheme).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_density_is_rejected() {
        let grid = Grid::symmetric(3.0, 64).unwrap();
        let rho = ScalarField::new(grid, vec![0.0; 64], ScalarKind::Rho).unwrap();
        assert!(matches!(
            osmotic_velocity(&rho, &params(1.0), Scheme::Spectral),
            Err(Error::NonPositiveDensity(_))
        ));
        assert!(ScalarField::density(grid, vec![0.0; 64]).is_err());
        let mut neg = vec![1.0; 64];
        neg[3] = -1.0;
        assert!(ScalarField::density(grid, neg).is_err());
    }

    #[test]
    fn q_of_gaussian_matches_closed_form() {
        let grid = Grid::symmetric(20.0, 4096).unwrap();
        let rho = gaussian(grid, 1.0);
        for scheme in [Scheme::Spectral, Scheme::Central] {
            let q = q_potential(&rho, &params(0.5), scheme).unwrap();
            let err = grid
                .nodes()
                .zip(q.values())
                .zip(rho.values())
                .filter(|(_, r)| **r > 1e-8)
                .map(|((x, q), _)| (q - (0.5 * x * x - 0.5)).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-5, "{scheme:?}: {err}");
        }
    }

    #[test]
    fn free_brownian_3d_q_along_axis() {
        // The 3D Laplacian of sqrt(rho) adds (2/r) d/dr; along the axis Q
        // picks up the two transverse -D/(2 tau) terms.
        let (d, tau) = (0.5, 1.3);
        let grid = Grid::symmetric(20.0, 2048).unwrap();
        let rho = ScalarField::density_from_fn(grid, |x| (-x * x / (4.0 * d * tau)).exp()).unwrap();
        let q1 = q_potential(&rho, &params(d), Scheme::Spectral).unwrap();
        for (x, q) in grid.nodes().zip(q1.values()) {
            if x.abs() < 4.0 {
                let q3 = x * x / (8.0 * tau * tau) - 3.0 * d / (2.0 * tau);
                assert!((q - 2.0 * d / (2.0 * tau) - q3).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn harmonic_stationary_state_has_no_current() {
        let (d, gamma) = (0.5, 1.0);
        let grid = Grid::symmetric(16.0, 1024).unwrap();
        let rho =
            ScalarField::density_from_fn(grid, |x| (-gamma * x * x / (2.0 * d)).exp()).unwrap();
        let b = VectorField::from_fn(grid, VectorKind::B, |x| -gamma * x);
        let v = current_velocity(&b, &rho, &params(d), Scheme::Spectral).unwrap();
        let worst = v
            .values()
            .iter()
            .zip(rho.values())
            .filter(|(_, r)| **r > 1e-10)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{worst}");
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = Grid::symmetric(3.0, 64).unwrap();
        let g2 = Grid::symmetric(3.0, 128).unwrap();
        let rho = ScalarField::density(g1, vec![1.0; 64]).unwrap();
        let b = VectorField::zeros(g2, VectorKind::B);
        assert_eq!(
            current_velocity(&b, &rho, &params(1.0), Scheme::Spectral),
            Err(Error::GridMismatch)
        );
        let q = ScalarField::zeros(g1, ScalarKind::Q);
        let o = ScalarField::zeros(g2, ScalarKind::Omega);
        assert_eq!(omega_recoil(&q, &o), Err(Error::GridMismatch));
    }

    #[test]
    fn smoluchowski_omega_for_harmonic_force() {
        let (d, gamma) = (0.5, 2.0);
        let p = DiffusionParams::new(d, 1.0, 1.0).unwrap();
        let grid = Grid::symmetric(4.0, 64).unwrap();
        let force = Force::harmonic(p.mass * p.friction * gamma);
        let omega = omega_smoluchowski(&force.sample(grid), &p, Scheme::Central).unwrap();
        for (x, o) in grid.nodes().zip(omega.values()) {
            let expected = 0.5 * gamma * gamma * x * x - d * gamma;
            assert!((o - expected).abs() < 1e-12);
            assert!((force.omega(x, &p) - expected).abs() < 1e-12);
        }
        let i = grid.nodes().position(|x| x == 1.0).unwrap();
        assert!((omega.values()[i] - 1.0).abs() < 1e-12);
        let zero = omega_smoluchowski(&VectorField::zeros(grid, VectorKind::F), &p, Scheme::Central)
            .unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn omega_recoil_examples() {
        let grid = Grid::symmetric(3.0, 32).unwrap();
        let q = ScalarField::from_fn(grid, ScalarKind::Q, |x| 0.5 * x * x - 0.5);
        let omega = ScalarField::from_fn(grid, ScalarKind::Omega, |x| 2.0 * x * x - 1.0);
        let r = omega_recoil(&q, &omega).unwrap();
        for (x, r) in grid.nodes().zip(r.values()) {
            assert!((r + x * x).abs() < 1e-13);
        }
        let r0 = omega_recoil(&q, &ScalarField::zeros(grid, ScalarKind::Omega)).unwrap();
        assert!(r0.values().iter().zip(q.values()).all(|(r, q)| *r == 2.0 * q));
        let same = omega_recoil(&q, &q).unwrap();
        assert_eq!(same.values(), q.values());
    }

    #[test]
    fn trivial_hj_residual_vanishes() {
        let grid = Grid::symmetric(3.0, 64).unwrap();
        let rho = ScalarField::density(grid, vec![1.0; 64]).unwrap();
        let zero = |k| ScalarField::zeros(grid, k);
        for mode in [Mode::Standard, Mode::Recoil] {
            let r = hj_residual(
                &zero(ScalarKind::S),
                &rho,
                &zero(ScalarKind::Omega),
                mode,
                &zero(ScalarKind::S),
                &params(1.0),
                Scheme::Spectral,
            )
            .unwrap();
            assert!(r.max_abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_girsanov_residual_and_gradient_check() {
        let grid = Grid::symmetric(3.0, 64).unwrap();
        let p = params(0.7);
        let phi = ScalarField::from_fn(grid, ScalarKind::Phi, |_| 2.5);
        let b = VectorField::zeros(grid, VectorKind::B);
        let zero = ScalarField::zeros(grid, ScalarKind::Omega);
        let r = girsanov_residual(&phi, &b, &zero, &zero, &p, &GirsanovOptions::default()).unwrap();
        assert_eq!(r.max_abs(), 0.0);

        let bad_b = VectorField::from_fn(grid, VectorKind::B, |x| (PI * x / 3.0).sin());
        let err = girsanov_residual(&phi, &bad_b, &zero, &zero, &p, &GirsanovOptions::default());
        assert!(matches!(err, Err(Error::DriftNotGradient { .. })));
    }

    #[test]
    fn force_polynomial() {
        let f = Force { coefficients: vec![1.0, -2.0, 3.0] };
        assert_eq!(f.value(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(f.divergence(2.0), -2.0 + 12.0);
        assert_eq!(Force::zero().value(3.0), 0.0);
        assert_eq!(Force::zero().divergence(3.0), 0.0);
    }
}
