//! Spectral Galerkin model of `x_t = x_zz + g x - rho (-d_zz)^(1/2) x` on `(0, 1)`
//! with homogeneous Dirichlet conditions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::modal::{eigenfunction, eigenvalue, sqrt_eigenvalue, ModalVector};
use crate::error::{Error, Result};

/// Tolerance applied to the contraction eigenvalue test (`mu_max <= 1`).
pub const CONTRACTION_TOL: f64 = 1e-10;

/// Which operator the scalar feedback acts through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlOperator {
    /// `B = (-Laplacian)^(1/2)`, multiplier `alpha_j^(1/2)` on mode `j`.
    #[default]
    FractionalLaplacian,
    /// `B = 0`: feedback channel switched off.
    Disabled,
}

impl ControlOperator {
    #[inline]
    pub fn multiplier(self, j: usize) -> f64 {
        match self {
            ControlOperator::FractionalLaplacian => sqrt_eigenvalue(j),
            ControlOperator::Disabled => 0.0,
        }
    }
}

/// Outcome of the potential contraction test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub ok: bool,
    /// Largest eigenvalue of `alpha^(-1/2) G alpha^(-1/2)`.
    pub mu_max: f64,
    /// `1 - mu_max`.
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralDiffusionModel {
    order: usize,
    potential: GridFunction,
    coupling: DMatrix<f64>,
    rho: f64,
    control: ControlOperator,
    contraction: ContractionCheck,
}

impl SpectralDiffusionModel {
    pub fn new(order: usize, potential: GridFunction, rho: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter {
                name: "modes",
                reason: "need at least one mode".into(),
            });
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("gain must be finite and >= 0, got {rho}"),
            });
        }
        let needed = 2 * order + 1;
        if potential.len() < needed {
            return Err(Error::GridTooCoarse {
                grid: potential.len(),
                modes: order,
                needed,
            });
        }
        let coupling = coupling_matrix(&potential, order);
        let contraction = contraction_from_coupling(&coupling)?;
        Ok(Self {
            order,
            potential,
            coupling,
            rho,
            control: ControlOperator::default(),
            contraction,
        })
    }

    /// Model with `g = 0`.
    pub fn unperturbed(order: usize, grid: usize, rho: f64) -> Result<Self> {
        Self::new(order, GridFunction::zeros(grid), rho)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("gain must be finite and >= 0, got {rho}"),
            });
        }
        Ok(Self {
            rho,
            ..self.clone()
        })
    }

    pub fn with_control(mut self, control: ControlOperator) -> Self {
        self.control = control;
        self
    }

    /// Same potential and gain at a different truncation order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        Ok(Self::new(order, self.potential.clone(), self.rho)?.with_control(self.control))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn potential(&self) -> &GridFunction {
        &self.potential
    }

    /// `G_jk = <g phi_k, phi_j>`.
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn control(&self) -> ControlOperator {
        self.control
    }

    pub fn contraction(&self) -> ContractionCheck {
        self.contraction
    }

    pub fn contraction_ok(&self) -> bool {
        self.contraction.ok
    }

    /// True when the potential vanishes identically, so every operator is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.potential.values().iter().all(|&v| v == 0.0)
    }

    pub fn control_multiplier(&self, j: usize) -> f64 {
        self.control.multiplier(j)
    }

    /// `A_N = diag(-alpha_j) + G`.
    pub fn open_loop_generator(&self) -> DMatrix<f64> {
        let mut a = self.coupling.clone();
        for j in 1..=self.order {
            a[(j - 1, j - 1)] -= eigenvalue(j);
        }
        a
    }

    /// `B_N = diag(alpha_j^(1/2))` (zero when the channel is disabled).
    pub fn control_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |r, c| {
            if r == c {
                self.control_multiplier(r + 1)
            } else {
                0.0
            }
        })
    }

    /// `A_N - rho B_N` for an arbitrary gain.
    pub fn closed_loop_generator_at(&self, rho: f64) -> DMatrix<f64> {
        let mut a = self.open_loop_generator();
        for j in 1..=self.order {
            a[(j - 1, j - 1)] -= rho * self.control_multiplier(j);
        }
        a
    }

    pub fn closed_loop_generator(&self) -> DMatrix<f64> {
        self.closed_loop_generator_at(self.rho)
    }

    /// Apply `B` mode-wise.
    pub fn apply_control(&self, v: &ModalVector) -> ModalVector {
        v.map_modes(|j, c| self.control_multiplier(j) * c)
    }
}

fn coupling_matrix(g: &GridFunction, order: usize) -> DMatrix<f64> {
    let n = g.len();
    // basis[j][i] = phi_{j+1}(zeta_i)
    let basis: Vec<Vec<f64>> = (1..=order)
        .map(|j| (0..n).map(|i| eigenfunction(j, g.node(i))).collect())
        .collect();
    let weighted: Vec<f64> = (0..n).map(|i| g.weight(i) * g.values()[i]).collect();
    let mut m = DMatrix::zeros(order, order);
    for r in 0..order {
        for c in r..order {
            let s: f64 = (0..n)
                .map(|i| weighted[i] * basis[r][i] * basis[c][i])
                .sum();
            m[(r, c)] = s;
            m[(c, r)] = s;
        }
    }
    m
}

fn contraction_from_coupling(coupling: &DMatrix<f64>) -> Result<ContractionCheck> {
    let order = coupling.nrows();
    let scaled = DMatrix::from_fn(order, order, |r, c| {
        coupling[(r, c)] / (sqrt_eigenvalue(r + 1) * sqrt_eigenvalue(c + 1))
    });
    let eig = SymmetricEigen::try_new(scaled, 1e-14, 10_000).ok_or(Error::EigenFailure(order))?;
    let mu_max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionCheck {
        ok: mu_max <= 1.0 + CONTRACTION_TOL,
        mu_max,
        margin: 1.0 - mu_max,
    })
}

/// Test `int g y^2 <= ||y||^2_{H_0^1}` on the first `order` modes.
pub fn contraction_condition_check(g: &GridFunction, order: usize) -> Result<ContractionCheck> {
    let needed = 2 * order + 1;
    if g.len() < needed {
        return Err(Error::GridTooCoarse {
            grid: g.len(),
            modes: order,
            needed,
        });
    }
    contraction_from_coupling(&coupling_matrix(g, order))
}

/// Smooth random potential `g(z) = scale * sum_k a_k cos(k pi z)`, rescaled so the
/// contraction eigenvalue on `order` modes equals `1 - margin`.
pub fn random_potential(grid: usize, order: usize, margin: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shape = GridFunction::from_fn(grid, |z| {
        amps.iter()
            .enumerate()
            .map(|(k, a)| a * (k as f64 * std::f64::consts::PI * z).cos() / (1 + k) as f64)
            .sum()
    });
    let check = contraction_condition_check(&shape, order)?;
    if check.mu_max <= 0.0 {
        // indefinite shapes always have a positive eigenvalue; an all-negative
        // shape is already contractive for any positive scale
        return Ok(shape);
    }
    let s = (1.0 - margin) / check.mu_max;
    Ok(shape.map(|v| s * v))
}
