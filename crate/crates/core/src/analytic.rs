//! Closed-form solutions of the three worked examples: free Brownian
//! expansion, free expansion with recoil, and the harmonically confined
//! recoil process. They serve as oracles for every numerical engine.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Mode, ScalarField, ScalarKind, VectorField, VectorKind};
use crate::grid::Grid;

/// Pointwise closed forms of one diffusion process.
///
/// `phase` is the Hamilton-Jacobi function `S` (velocity potential,
/// `v = dS/dx`), fixed including its time-dependent constant.
pub trait ClosedForm {
    fn diffusion(&self) -> f64;
    fn mode(&self) -> Mode;
    fn log_rho(&self, x: f64, t: f64) -> f64;
    fn log_rho_dot(&self, x: f64, t: f64) -> f64;
    fn osmotic(&self, x: f64, t: f64) -> f64;
    fn current(&self, x: f64, t: f64) -> f64;
    fn phase(&self, x: f64, t: f64) -> f64;
    fn phase_dot(&self, x: f64, t: f64) -> f64;
    fn q(&self, x: f64, t: f64) -> f64;
    fn omega(&self, x: f64) -> f64;
    fn pressure(&self, x: f64, t: f64) -> f64;
    fn msd(&self, t: f64) -> f64;
    fn kinetic_energy(&self, t: f64) -> f64;
    /// Energy functional of the process' own mode (see
    /// [`crate::diagnostics::total_energy`]).
    fn total_energy(&self, t: f64) -> f64;

    fn rho(&self, x: f64, t: f64) -> f64 {
        self.log_rho(x, t).exp()
    }

    fn drift(&self, x: f64, t: f64) -> f64 {
        self.osmotic(x, t) + self.current(x, t)
    }

    /// Girsanov potential `phi = ln(rho)/2 + S/(2D)`, so that `b = 2D dphi/dx`.
    fn phi(&self, x: f64, t: f64) -> f64 {
        0.5 * self.log_rho(x, t) + self.phase(x, t) / (2.0 * self.diffusion())
    }

    fn phi_dot(&self, x: f64, t: f64) -> f64 {
        0.5 * self.log_rho_dot(x, t) + self.phase_dot(x, t) / (2.0 * self.diffusion())
    }
}

/// Every closed-form field of a solution at one instant.
#[derive(Debug, Clone)]
pub struct AnalyticState {
    pub time: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub v: VectorField,
    pub b: VectorField,
    pub s: ScalarField,
    pub ds_dt: ScalarField,
    pub q: ScalarField,
    pub omega: ScalarField,
    pub p: ScalarField,
    pub phi: ScalarField,
    pub dphi_dt: ScalarField,
    pub msd: f64,
    pub kinetic_energy: f64,
    pub total_energy: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// Sample every closed form of `sol` on `grid` at time `t`.
pub fn evaluate<C: ClosedForm + ?Sized>(sol: &C, t: f64, grid: Grid) -> Result<AnalyticState> {
    check_time(t)?;
    let scalar = |kind, f: &dyn Fn(f64) -> f64| ScalarField::from_fn(grid, kind, f);
    let vector = |kind, f: &dyn Fn(f64) -> f64| VectorField::from_fn(grid, kind, f);
    Ok(AnalyticState {
        time: t,
        rho: scalar(ScalarKind::Rho, &|x| sol.rho(x, t)),
        u: vector(VectorKind::U, &|x| sol.osmotic(x, t)),
        v: vector(VectorKind::V, &|x| sol.current(x, t)),
        b: vector(VectorKind::B, &|x| sol.drift(x, t)),
        s: scalar(ScalarKind::S, &|x| sol.phase(x, t)),
        ds_dt: scalar(ScalarKind::S, &|x| sol.phase_dot(x, t)),
        q: scalar(ScalarKind::Q, &|x| sol.q(x, t)),
        omega: scalar(ScalarKind::Omega, &|x| sol.omega(x)),
        p: scalar(ScalarKind::P, &|x| sol.pressure(x, t)),
        phi: scalar(ScalarKind::Phi, &|x| sol.phi(x, t)),
        dphi_dt: scalar(ScalarKind::Phi, &|x| sol.phi_dot(x, t)),
        msd: sol.msd(t),
        kinetic_energy: sol.kinetic_energy(t),
        total_energy: sol.total_energy(t),
    })
}

/// Spatial dimension of the free Brownian example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    fn count(self) -> f64 {
        match self {
            Dim::One => 1.0,
            Dim::Three => 3.0,
        }
    }
}

/// Free Brownian expansion of a Gaussian with `alpha^2 = 4 D t0`.
///
/// In three dimensions the fields are sampled along the x axis through the
/// origin; `msd` and the kinetic energy are the full 3D values. In one
/// dimension everything is the per-axis factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeBrownianSolution {
    pub d: f64,
    pub t0: f64,
    pub dim: Dim,
}

impl FreeBrownianSolution {
    pub fn new(d: f64, t0: f64, dim: Dim) -> Result<Self> {
        if !(d > 0.0 && t0 > 0.0) {
            return Err(Error::InvalidParams(format!("need D > 0 and t0 > 0, got {d}, {t0}")));
        }
        Ok(Self { d, t0, dim })
    }

    /// Start from `rho_0 ~ exp(-x^2/alpha^2)`.
    pub fn from_width(d: f64, alpha: f64, dim: Dim) -> Result<Self> {
        Self::new(d, alpha * alpha / (4.0 * d), dim)
    }

    fn tau(&self, t: f64) -> f64 {
        t + self.t0
    }

    pub fn eval(&self, t: f64, grid: Grid) -> Result<AnalyticState> {
        evaluate(self, t, grid)
    }
}

impl ClosedForm for FreeBrownianSolution {
    fn diffusion(&self) -> f64 {
        self.d
    }

    fn mode(&self) -> Mode {
        Mode::Standard
    }

    fn log_rho(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        -0.5 * self.dim.count() * (4.0 * PI * self.d * tau).ln() - x * x / (4.0 * self.d * tau)
    }

    fn log_rho_dot(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        -0.5 * self.dim.count() / tau + x * x / (4.0 * self.d * tau * tau)
    }

    fn osmotic(&self, x: f64, t: f64) -> f64 {
        -x / (2.0 * self.tau(t))
    }

    fn current(&self, x: f64, t: f64) -> f64 {
        x / (2.0 * self.tau(t))
    }

    fn phase(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        x * x / (4.0 * tau) + 0.5 * self.dim.count() * self.d * (4.0 * PI * self.d * tau).ln()
    }

    fn phase_dot(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        -x * x / (4.0 * tau * tau) + 0.5 * self.dim.count() * self.d / tau
    }

    fn q(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        x * x / (8.0 * tau * tau) - self.dim.count() * self.d / (2.0 * tau)
    }

    fn omega(&self, _x: f64) -> f64 {
        0.0
    }

    fn pressure(&self, x: f64, t: f64) -> f64 {
        -self.d / (2.0 * self.tau(t)) * self.rho(x, t)
    }

    fn msd(&self, t: f64) -> f64 {
        2.0 * self.dim.count() * self.d * self.tau(t)
    }

    fn kinetic_energy(&self, t: f64) -> f64 {
        self.dim.count() * self.d / (4.0 * self.tau(t))
    }

    /// `int (v^2/2 + Q) rho` vanishes identically over the whole space.
    fn total_energy(&self, _t: f64) -> f64 {
        0.0
    }
}

/// Free one-dimensional expansion with recoil (`Omega = 0`), started from
/// `rho_0 ~ exp(-x^2/alpha^2)` with zero current velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRecoilSolution {
    pub d: f64,
    pub alpha: f64,
}

impl FreeRecoilSolution {
    pub fn new(d: f64, alpha: f64) -> Result<Self> {
        if !(d > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need D > 0 and alpha > 0, got {d}, {alpha}"
            )));
        }
        Ok(Self { d, alpha })
    }

    /// `alpha^4 + 4 D^2 t^2`.
    fn width4(&self, t: f64) -> f64 {
        self.alpha.powi(4) + 4.0 * self.d * self.d * t * t
    }

    pub fn eval(&self, t: f64, grid: Grid) -> Result<AnalyticState> {
        evaluate(self, t, grid)
    }
}

impl ClosedForm for FreeRecoilSolution {
    fn diffusion(&self) -> f64 {
        self.d
    }

    fn mode(&self) -> Mode {
        Mode::Recoil
    }

    fn log_rho(&self, x: f64, t: f64) -> f64 {
        let s = self.width4(t);
        let a2 = self.alpha * self.alpha;
        self.alpha.ln() - 0.5 * (PI * s).ln() - x * x * a2 / s
    }

    fn log_rho_dot(&self, x: f64, t: f64) -> f64 {
        let s = self.width4(t);
        let ds = 8.0 * self.d * self.d * t;
        let a2 = self.alpha * self.alpha;
        -0.5 * ds / s + x * x * a2 * ds / (s * s)
    }

    fn osmotic(&self, x: f64, t: f64) -> f64 {
        -2.0 * self.d * self.alpha * self.alpha * x / self.width4(t)
    }

    fn current(&self, x: f64, t: f64) -> f64 {
        4.0 * self.d * self.d * t * x / self.width4(t)
    }

    fn phase(&self, x: f64, t: f64) -> f64 {
        let d = self.d;
        2.0 * d * d * x * x * t / self.width4(t) - d * (2.0 * d * t / (self.alpha * self.alpha)).atan()
    }

    fn phase_dot(&self, x: f64, t: f64) -> f64 {
        let d = self.d;
        let s = self.width4(t);
        let a2 = self.alpha * self.alpha;
        let a4 = a2 * a2;
        2.0 * d * d * x * x * (a4 - 4.0 * d * d * t * t) / (s * s) - 2.0 * d * d * a2 / s
    }

    fn q(&self, x: f64, t: f64) -> f64 {
        let s = self.width4(t);
        let a2 = self.alpha * self.alpha;
        2.0 * self.d * self.d * a2 / s * (a2 * x * x / s - 1.0)
    }

    fn omega(&self, _x: f64) -> f64 {
        0.0
    }

    fn pressure(&self, x: f64, t: f64) -> f64 {
        -2.0 * self.d * self.d * self.alpha * self.alpha / self.width4(t) * self.rho(x, t)
    }

    fn msd(&self, t: f64) -> f64 {
        let a2 = self.alpha * self.alpha;
        a2 / 2.0 + 2.0 * self.d * self.d * t * t / a2
    }

    fn kinetic_energy(&self, t: f64) -> f64 {
        let d2 = self.d * self.d;
        4.0 * d2 * d2 * t * t / (self.alpha * self.alpha * self.width4(t))
    }

    /// `int (v^2/2 - Q) rho = D^2/alpha^2` at every time.
    fn total_energy(&self, _t: f64) -> f64 {
        self.d * self.d / (self.alpha * self.alpha)
    }
}

/// Recoil process in `Omega = gamma^2 x^2/2 - D gamma` started from
/// `rho_0 ~ exp(-x^2/alpha^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRecoilSolution {
    pub d: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl HarmonicRecoilSolution {
    pub fn new(d: f64, alpha: f64, gamma: f64) -> Result<Self> {
        if !(d > 0.0 && alpha > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need D, alpha, gamma > 0, got {d}, {alpha}, {gamma}"
            )));
        }
        Ok(Self { d, alpha, gamma })
    }

    /// The width for which `rho_0` is the stationary state.
    pub fn matched(d: f64, gamma: f64) -> Result<Self> {
        Self::new(d, (2.0 * d / gamma).sqrt(), gamma)
    }

    /// `alpha^2 = 2D/gamma` up to `1e-12 alpha^2`.
    pub fn is_matched(&self) -> bool {
        let a2 = self.alpha * self.alpha;
        (a2 - 2.0 * self.d / self.gamma).abs() <= 1e-12 * a2
    }

    pub fn potential(&self, x: f64) -> f64 {
        0.5 * self.gamma * self.gamma * x * x - self.d * self.gamma
    }

    pub fn initial_density(&self, x: f64) -> f64 {
        (-x * x / (self.alpha * self.alpha)).exp() / (PI.sqrt() * self.alpha)
    }

    /// `b(x, 0) = -2Dx/alpha^2 = u(x, 0)` for any width.
    pub fn initial_drift(&self, x: f64) -> f64 {
        -2.0 * self.d * x / (self.alpha * self.alpha)
    }

    /// Closed form for the matched width; the initial instant for any width.
    /// Later times of an unmatched width have no closed form here and return
    /// [`Error::Unsupported`].
    pub fn eval(&self, t: f64, grid: Grid) -> Result<AnalyticState> {
        check_time(t)?;
        if !self.is_matched() && t > 0.0 {
            return Err(Error::Unsupported(format!(
                "alpha^2 = {} differs from 2D/gamma = {}; use the Schrodinger engine",
                self.alpha * self.alpha,
                2.0 * self.d / self.gamma
            )));
        }
        evaluate(&InitialOrStationary(*self), t, grid)
    }
}

/// The state `rho_0`, `v = 0`, `S = 0`: stationary when matched and the
/// initial data otherwise.
struct InitialOrStationary(HarmonicRecoilSolution);

impl ClosedForm for InitialOrStationary {
    fn diffusion(&self) -> f64 {
        self.0.d
    }

    fn mode(&self) -> Mode {
        Mode::Recoil
    }

    fn log_rho(&self, x: f64, _t: f64) -> f64 {
        let a = self.0.alpha;
        -x * x / (a * a) - (PI.sqrt() * a).ln()
    }

    fn log_rho_dot(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn osmotic(&self, x: f64, _t: f64) -> f64 {
        self.0.initial_drift(x)
    }

    fn current(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn phase(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn phase_dot(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn q(&self, x: f64, _t: f64) -> f64 {
        let (d, a2) = (self.0.d, self.0.alpha * self.0.alpha);
        2.0 * d * d * x * x / (a2 * a2) - 2.0 * d * d / a2
    }

    fn omega(&self, x: f64) -> f64 {
        self.0.potential(x)
    }

    fn pressure(&self, x: f64, t: f64) -> f64 {
        let (d, a2) = (self.0.d, self.0.alpha * self.0.alpha);
        -2.0 * d * d / a2 * self.rho(x, t)
    }

    fn msd(&self, _t: f64) -> f64 {
        0.5 * self.0.alpha * self.0.alpha
    }

    fn kinetic_energy(&self, _t: f64) -> f64 {
        0.0
    }

    /// `-<Q> + <Omega>` of the Gaussian.
    fn total_energy(&self, _t: f64) -> f64 {
        let (d, g, a2) = (self.0.d, self.0.gamma, self.0.alpha * self.0.alpha);
        let msd = 0.5 * a2;
        let mean_q = 2.0 * d * d * msd / (a2 * a2) - 2.0 * d * d / a2;
        let mean_omega = 0.5 * g * g * msd - d * g;
        mean_omega - mean_q
    }
}
