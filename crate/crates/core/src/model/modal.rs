//! States expanded in the Dirichlet sine basis `phi_j(x) = sqrt(2) sin(j pi x)`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Dirichlet Laplacian eigenvalue `alpha_j = j^2 pi^2` (1-based mode index).
#[inline]
pub fn eigenvalue(j: usize) -> f64 {
    let j = j as f64;
    j * j * PI * PI
}

/// Square root of [`eigenvalue`], the multiplier of `(-Laplacian)^(1/2)`.
#[inline]
pub fn sqrt_eigenvalue(j: usize) -> f64 {
    j as f64 * PI
}

/// Value of the normalized eigenfunction `phi_j` at `x`.
#[inline]
pub fn eigenfunction(j: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (j as f64 * PI * x).sin()
}

/// Modal amplitudes `c_1..c_N`; index 0 of the backing vector holds mode 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalVector {
    coefficients: Vec<f64>,
}

impl ModalVector {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn zeros(order: usize) -> Self {
        Self::new(vec![0.0; order])
    }

    /// The basis vector `phi_j` (1-based) in an `order`-mode truncation.
    pub fn mode(order: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= order, "mode {j} outside 1..={order}");
        let mut c = vec![0.0; order];
        c[j - 1] = 1.0;
        Self::new(c)
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Amplitude of mode `j` (1-based).
    pub fn get(&self, j: usize) -> f64 {
        self.coefficients[j - 1]
    }

    /// `||v||_X`, the L2(0,1) norm.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `||v||_{X_1} = (sum alpha_j c_j^2)^(1/2)`.
    pub fn norm_x1(&self) -> f64 {
        self.weighted_norm(eigenvalue)
    }

    /// `||v||_{X_-1} = (sum c_j^2 / alpha_j)^(1/2)`.
    pub fn norm_x_minus1(&self) -> f64 {
        self.weighted_norm(|j| 1.0 / eigenvalue(j))
    }

    fn weighted_norm(&self, weight: impl Fn(usize) -> f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| weight(i + 1) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.order(), other.order());
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Multiply mode `j` by `f(j)`.
    pub fn map_modes(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        Self::new(
            self.coefficients
                .iter()
                .enumerate()
                .map(|(i, &c)| f(i + 1, c))
                .collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| s * c)
    }

    /// Truncate or zero-pad to `order` modes.
    pub fn resized(&self, order: usize) -> Self {
        let mut c = self.coefficients.clone();
        c.resize(order, 0.0);
        Self::new(c)
    }

    /// Grid values `sum_j c_j phi_j(zeta)` at `zeta_i = i/(n-1)`.
    pub fn to_grid(&self, n: usize) -> super::GridFunction {
        super::GridFunction::from_fn(n, |z| {
            self.coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * eigenfunction(i + 1, z))
                .sum()
        })
    }
}

impl From<Vec<f64>> for ModalVector {
    fn from(c: Vec<f64>) -> Self {
        Self::new(c)
    }
}

impl Add for &ModalVector {
    type Output = ModalVector;
    fn add(self, rhs: Self) -> ModalVector {
        ModalVector::new(
            self.coefficients
                .iter()
                .zip(&rhs.coefficients)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &ModalVector {
    type Output = ModalVector;
    fn sub(self, rhs: Self) -> ModalVector {
        ModalVector::new(
            self.coefficients
                .iter()
                .zip(&rhs.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl Mul<&ModalVector> for f64 {
    type Output = ModalVector;
    fn mul(self, rhs: &ModalVector) -> ModalVector {
        rhs.scaled(self)
    }
}
