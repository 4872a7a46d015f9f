//! Functions on the uniform grid `zeta_i = i/(n-1)` of `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::modal::{eigenfunction, ModalVector};
use crate::error::{Error, Result};

/// Samples of a real function on a uniform grid of `[0, 1]`, integrated with the
/// composite trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need at least 2 points, got {}", values.len()),
            });
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(n >= 2, "grid needs at least 2 points");
        let h = 1.0 / (n - 1) as f64;
        Self {
            values: (0..n).map(|i| f(i as f64 * h)).collect(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_fn(n, |_| c)
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.len()).map(move |i| i as f64 * h)
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.len() {
            0.5 * h
        } else {
            h
        }
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v)
            .sum()
    }

    /// `<self, other>` under the trapezoid rule.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| self.weight(i) * a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Piecewise-linear interpolant at `zeta` (clamped to `[0, 1]`).
    pub fn interpolate(&self, zeta: f64) -> f64 {
        let last = self.len() - 1;
        let pos = (zeta.clamp(0.0, 1.0) * last as f64).min(last as f64);
        let i = (pos.floor() as usize).min(last - 1);
        let w = pos - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            (1.0 - w) * self.values[i] + w * self.values[i + 1]
        }
    }

    /// Resample onto a grid of `n` points by linear interpolation.
    pub fn resample(&self, n: usize) -> Self {
        Self::from_fn(n, |z| self.interpolate(z))
    }

    /// Project onto the first `order` sine modes:
    /// `c_j = trapezoid(f(zeta) sqrt(2) sin(j pi zeta))`.
    pub fn to_modal(&self, order: usize) -> Result<ModalVector> {
        let needed = 2 * order + 1;
        if self.len() < needed {
            return Err(Error::GridTooCoarse {
                grid: self.len(),
                modes: order,
                needed,
            });
        }
        let coefficients = (1..=order)
            .map(|j| {
                self.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.weight(i) * v * eigenfunction(j, self.node(i)))
                    .sum()
            })
            .collect();
        Ok(ModalVector::new(coefficients))
    }
}

/// Free-function form of [`GridFunction::to_modal`].
pub fn grid_to_modal(f: &GridFunction, order: usize) -> Result<ModalVector> {
    f.to_modal(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn first_mode_projects_to_unit_vector() {
        let f = GridFunction::from_fn(513, |z| eigenfunction(1, z));
        let c = f.to_modal(4).unwrap();
        assert!((c.get(1) - 1.0).abs() < 1e-12);
        for j in 2..=4 {
            assert!(c.get(j).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_projects_to_zero() {
        let c = GridFunction::zeros(33).to_modal(8).unwrap();
        assert!(c.coefficients().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parabola_matches_analytic_sine_coefficients() {
        // int_0^1 z(1-z) sqrt(2) sin(j pi z) dz = 2 sqrt(2) (1 - (-1)^j) / (j pi)^3
        let f = GridFunction::from_fn(513, |z| z * (1.0 - z));
        let c = f.to_modal(2).unwrap();
        let c1 = 4.0 * 2f64.sqrt() / PI.powi(3);
        assert!((c.get(1) - c1).abs() < 1e-6, "{} vs {}", c.get(1), c1);
        assert!(c.get(2).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let f = GridFunction::zeros(8);
        assert!(matches!(
            f.to_modal(4),
            Err(Error::GridTooCoarse { needed: 9, .. })
        ));
    }

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let f = GridFunction::from_fn(5, |z| 2.0 * z);
        assert_eq!(f.interpolate(0.25), 0.5);
        assert!((f.interpolate(0.375) - 0.75).abs() < 1e-15);
        assert_eq!(f.interpolate(1.0), 2.0);
        assert_eq!(f.interpolate(1.5), 2.0);
    }

    #[test]
    fn projection_is_idempotent() {
        let f = GridFunction::from_fn(129, |z| (3.0 * z).exp() * z * (1.0 - z));
        let once = f.to_modal(16).unwrap().to_grid(129);
        let twice = once.to_modal(16).unwrap().to_grid(129);
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
