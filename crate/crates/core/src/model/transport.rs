//! Transport model `x_t = x_z - alpha x - eps h x` on `(0, 1)` with the nonlocal
//! inflow condition `x(1, t) = -eps psi(x(t))`, `psi(x) = int f x`.

use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportModel {
    alpha: f64,
    h: GridFunction,
    h_lower: f64,
    f: GridFunction,
    epsilon: f64,
}

impl TransportModel {
    pub fn new(alpha: f64, h: GridFunction, f: GridFunction, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("decay coefficient must be > 0, got {alpha}"),
            });
        }
        if h.len() != f.len() {
            return Err(Error::DimensionMismatch {
                expected: h.len(),
                found: f.len(),
            });
        }
        let h_lower = h.min();
        if !(h_lower > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("coefficient must be bounded below by c > 0, min is {h_lower}"),
            });
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be finite and >= 0, got {epsilon}"),
            });
        }
        Ok(Self {
            alpha,
            h,
            h_lower,
            f,
            epsilon,
        })
    }

    /// `h` and `f` constant on an `n`-point grid.
    pub fn uniform(n: usize, alpha: f64, h: f64, f: f64, epsilon: f64) -> Result<Self> {
        Self::new(
            alpha,
            GridFunction::constant(n, h),
            GridFunction::constant(n, f),
            epsilon,
        )
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.alpha, self.h.clone(), self.f.clone(), epsilon)
    }

    pub fn grid_size(&self) -> usize {
        self.h.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h.spacing()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    /// Essential lower bound `c` of `h` (grid minimum).
    pub fn h_lower(&self) -> f64 {
        self.h_lower
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `psi(x) = int_0^1 f(s) x(s) ds` by the trapezoid rule.
    pub fn psi(&self, x: &GridFunction) -> f64 {
        self.f.inner(x)
    }

    /// Largest `eps` for which the boundary-perturbed generator stays dissipative:
    /// `(2 alpha)^(1/2) / ||f||`.
    pub fn epsilon_max(&self) -> f64 {
        (2.0 * self.alpha).sqrt() / self.f.norm()
    }
}
