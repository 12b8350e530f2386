//! Spatial differentiation on a [`Grid`].

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Differentiation scheme.
///
/// `Spectral` treats the samples as one period of a smooth periodic function
/// and is exact to roundoff for band-limited data; use it for fields that
/// decay at both ends (densities, wave functions). `Central` is second order,
/// with one-sided second-order stencils at the two edges, and is the right
/// choice for fields that grow towards the boundary (phases `S`, `phi`,
/// velocities, linear forces).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Spectral,
    Central,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

pub fn derivative(grid: &Grid, values: &[f64], scheme: Scheme) -> Vec<f64> {
    match scheme {
        Scheme::Spectral => spectral_real(grid, values, 1),
        Scheme::Central => central_derivative(grid, values),
    }
}

pub fn second_derivative(grid: &Grid, values: &[f64], scheme: Scheme) -> Vec<f64> {
    match scheme {
        Scheme::Spectral => spectral_real(grid, values, 2),
        Scheme::Central => central_second_derivative(grid, values),
    }
}

pub(crate) fn central_derivative(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.spacing();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    out
}

fn central_second_derivative(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h2 = grid.spacing() * grid.spacing();
    let mut out = vec![0.0; n];
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    out
}

fn spectral_real(grid: &Grid, values: &[f64], order: u32) -> Vec<f64> {
    let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_complex(grid, buf, order).into_iter().map(|c| c.re).collect()
}

/// Spectral derivative of a complex periodic field.
pub fn complex_derivative(grid: &Grid, values: &[Complex64], order: u32) -> Vec<Complex64> {
    spectral_complex(grid, values.to_vec(), order)
}

fn spectral_complex(grid: &Grid, mut buf: Vec<Complex64>, order: u32) -> Vec<Complex64> {
    let n = buf.len();
    let (fwd, inv) = fft_pair(n);
    fwd.process(&mut buf);
    let k = grid.wavenumbers();
    let scale = 1.0 / n as f64;
    for (j, c) in buf.iter_mut().enumerate() {
        // odd derivatives of the Nyquist mode are not representable
        if j == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let factor = Complex64::new(0.0, k[j]).powu(order);
        *c *= factor * scale;
    }
    inv.process(&mut buf);
    buf
}
