//! Uniform periodic grid on `[x_min, x_max)` and the quadrature rules used
//! throughout the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `n_points` nodes `x_i = x_min + i * spacing`.
///
/// The right end `x_max` is the periodic image of `x_min` and is not itself a
/// node, so `spacing = (x_max - x_min) / n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Symmetric grid on `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Position of the last node, `x_max - spacing`.
    pub fn x_last(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * dk
                } else {
                    (j as f64 - n as f64) * dk
                }
            })
            .collect()
    }

    /// Whether `x` lies between the first and the last node.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_last()
    }

    /// Trapezoidal rule on the periodic grid: `h * sum(values)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        values.iter().sum::<f64>() * self.spacing()
    }

    /// Running integral `F_i = int_{x_0}^{x_i} f dx`, fourth order.
    ///
    /// Cumulative trapezoid plus the Euler-Maclaurin end correction
    /// `-h^2/12 (f'_i - f'_0)`, with `f'` from second-order differences.
    pub fn cumulative_integral(&self, values: &[f64]) -> Vec<f64> {
        let h = self.spacing();
        let df = crate::deriv::central_derivative(self, values);
        let mut out = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..values.len() {
            acc += 0.5 * h * (values[i - 1] + values[i]);
            out.push(acc - h * h / 12.0 * (df[i] - df[0]));
        }
        out
    }

    /// `int_a^b f dx` for `a, b` anywhere between the first and last node.
    ///
    /// The running integral is interpolated by cubic Hermite segments with
    /// slopes `f` itself, so the result is fourth order in the spacing and
    /// smooth in the endpoints.
    pub fn integrate_interval(&self, values: &[f64], a: f64, b: f64) -> Result<f64> {
        if !(self.contains(a) && self.contains(b)) || !(a <= b) {
            return Err(Error::VolumeOutsideGrid { a, b });
        }
        let cumulative = self.cumulative_integral(values);
        Ok(self.hermite(&cumulative, values, b) - self.hermite(&cumulative, values, a))
    }

    fn hermite(&self, f: &[f64], df: &[f64], x: f64) -> f64 {
        let h = self.spacing();
        let pos = (x - self.x_min) / h;
        let i = (pos.floor() as usize).min(self.n_points - 2);
        let s = pos - i as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1]
    }

    /// Piecewise-linear interpolation, extrapolating linearly from the two
    /// outermost nodes outside the grid.
    pub fn interpolate_linear(&self, values: &[f64], x: f64) -> f64 {
        let h = self.spacing();
        let pos = (x - self.x_min) / h;
        let i = if pos < 0.0 {
            0
        } else {
            (pos.floor() as usize).min(self.n_points - 2)
        };
        let s = pos - i as f64;
        values[i] + s * (values[i + 1] - values[i])
    }

    /// Four-point Lagrange interpolation (third order) inside the grid.
    pub fn interpolate_cubic(&self, values: &[f64], x: f64) -> f64 {
        let n = self.n_points;
        let pos = (x - self.x_min) / self.spacing();
        let base = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = pos - base as f64;
        let mut acc = 0.0;
        for j in 0..4 {
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    w *= (s - m as f64) / (j as f64 - m as f64);
                }
            }
            acc += w * values[base + j];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(-1.0, 1.0, 4).is_err());
        assert!(Grid::new(-1.0, 1.0, 100).is_err());
        assert!(Grid::new(1.0, -1.0, 64).is_err());
        assert!(Grid::new(-1.0, 1.0, 64).is_ok());
    }

    #[test]
    fn spacing_excludes_right_end() {
        let g = Grid::new(0.0, 8.0, 8).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.x_last(), 7.0);
    }

    #[test]
    fn gaussian_integrates_to_one() {
        let g = Grid::symmetric(10.0, 256).unwrap();
        let v = g.sample(|x| (-x * x).exp() / PI.sqrt());
        assert_relative_eq!(g.integrate(&v), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn interval_integral_is_fourth_order() {
        // int_0^1 cos x dx = sin 1
        let err = |n| {
            let g = Grid::symmetric(4.0, n).unwrap();
            let v = g.sample(f64::cos);
            (g.integrate_interval(&v, 0.03, 1.0).unwrap() - (1.0f64.sin() - 0.03f64.sin())).abs()
        };
        let order = (err(64) / err(128)).log2();
        assert!(order > 3.5, "order {order}");
    }

    #[test]
    fn interval_outside_is_rejected() {
        let g = Grid::symmetric(4.0, 64).unwrap();
        let v = vec![1.0; 64];
        assert!(matches!(
            g.integrate_interval(&v, -5.0, 0.0),
            Err(Error::VolumeOutsideGrid { .. })
        ));
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = Grid::symmetric(4.0, 32).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let v = g.sample(f);
        for &x in &[-3.9, -0.123, 0.5, 3.6] {
            assert_relative_eq!(g.interpolate_cubic(&v, x), f(x), epsilon = 1e-11);
        }
    }
}
