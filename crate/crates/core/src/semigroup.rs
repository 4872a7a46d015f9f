//! Open-loop evolution operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{
    eigenvalue, sqrt_eigenvalue, GridFunction, ModalVector, SpectralDiffusionModel, TransportModel,
};

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// `e^{tA}` for a symmetric generator `A`, through one eigendecomposition
/// `A = V diag(lambda) V^T`.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        let n = generator.nrows();
        if generator.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: generator.ncols(),
            });
        }
        let eig =
            SymmetricEigen::try_new(generator, 1e-15, 100_000).ok_or(Error::EigenFailure(n))?;
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Coordinates of `v` in the eigenbasis.
    pub fn to_eigen(&self, v: &ModalVector) -> DVector<f64> {
        self.eigenvectors
            .tr_mul(&DVector::from_column_slice(v.coefficients()))
    }

    pub fn from_eigen(&self, y: &DVector<f64>) -> ModalVector {
        ModalVector::new((&self.eigenvectors * y).as_slice().to_vec())
    }

    pub fn apply(&self, t: f64, v: &ModalVector) -> Result<ModalVector> {
        check_time(t)?;
        if v.order() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: v.order(),
            });
        }
        if t == 0.0 {
            return Ok(v.clone());
        }
        let mut y = self.to_eigen(v);
        for (yi, lam) in y.iter_mut().zip(self.eigenvalues.iter()) {
            *yi *= (lam * t).exp();
        }
        Ok(self.from_eigen(&y))
    }

    /// Largest eigenvalue (the asymptotic growth rate).
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `S_0(t) v`: mode `j` decays by `e^{-alpha_j t}`.
pub fn diag_semigroup_apply(t: f64, v: &ModalVector) -> Result<ModalVector> {
    check_time(t)?;
    Ok(v.map_modes(|j, c| (-eigenvalue(j) * t).exp() * c))
}

/// Semigroup generated by `Laplacian + g` on the model's modes.
pub fn open_loop_propagator(model: &SpectralDiffusionModel) -> Result<Propagator> {
    if !model.contraction_ok() {
        log::warn!(
            "potential violates the contraction condition (mu_max = {:.6}); semigroup may grow",
            model.contraction().mu_max
        );
    }
    Propagator::new(model.open_loop_generator())
}

/// `S(t) v` for the potential-perturbed heat semigroup.
pub fn perturbed_semigroup_apply(
    model: &SpectralDiffusionModel,
    t: f64,
    v: &ModalVector,
) -> Result<ModalVector> {
    check_time(t)?;
    open_loop_propagator(model)?.apply(t, v)
}

/// Per-mode bound `|c_j(t)| <= e^{-alpha_j t}||v|| + ||g||_inf (1 - e^{-alpha_j t}) / alpha_j ||v||`.
pub fn perturbed_mode_bounds(model: &SpectralDiffusionModel, t: f64, v: &ModalVector) -> Vec<f64> {
    let g_sup = model.potential().sup_norm();
    let norm = v.norm();
    (1..=model.order())
        .map(|j| {
            let a = eigenvalue(j);
            let decay = (-a * t).exp();
            decay * norm + g_sup * (-(-a * t).exp_m1()) / a * norm
        })
        .collect()
}

/// `(S(t)u)(z) = e^{-alpha t} u(z + t)` for `z + t < 1`, zero otherwise; linear
/// interpolation at off-grid points.
pub fn transport_semigroup_apply(
    model: &TransportModel,
    t: f64,
    u: &GridFunction,
) -> Result<GridFunction> {
    check_time(t)?;
    if u.len() != model.grid_size() {
        return Err(Error::DimensionMismatch {
            expected: model.grid_size(),
            found: u.len(),
        });
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    Ok(shift_decay(u, t, model.alpha()))
}

pub(crate) fn shift_decay(u: &GridFunction, t: f64, alpha: f64) -> GridFunction {
    let last = (u.len() - 1) as f64;
    let decay = (-alpha * t).exp();
    let shift = t * last;
    let mut out = u.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let pos = i as f64 + shift;
        // points whose characteristic reaches the outflow boundary carry nothing
        *v = if pos < last - 1e-9 * last {
            decay * u.interpolate(pos / last)
        } else {
            0.0
        };
    }
    out
}

/// Yosida regularization of `B = (-Laplacian)^(1/2)`:
/// `c_j -> lambda alpha_j^(1/2) / (lambda + alpha_j) c_j`.
pub fn yosida_control_apply(lambda: f64, v: &ModalVector) -> Result<ModalVector> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be > 0, got {lambda}"),
        });
    }
    Ok(v.map_modes(|j, c| yosida_multiplier(lambda, j) * c))
}

pub fn yosida_multiplier(lambda: f64, j: usize) -> f64 {
    lambda * sqrt_eigenvalue(j) / (lambda + eigenvalue(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_potential;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_semigroup_identity_and_first_mode() {
        let v = ModalVector::new(vec![0.4, -1.0, 2.0]);
        assert_eq!(diag_semigroup_apply(0.0, &v).unwrap(), v);
        let out = diag_semigroup_apply(0.1, &ModalVector::mode(3, 1)).unwrap();
        assert!((out.get(1) - (-0.1 * PI * PI).exp()).abs() < 1e-15);
        assert!((out.get(1) - 0.372708).abs() < 1e-6);
        assert!(diag_semigroup_apply(-1.0, &v).is_err());
    }

    #[test]
    fn two_mode_norm_closed_form() {
        let v = ModalVector::new(vec![1.0, 1.0]);
        let t = 0.03;
        let n = diag_semigroup_apply(t, &v).unwrap().norm();
        let expect = ((-2.0 * PI * PI * t).exp() + (-8.0 * PI * PI * t).exp()).sqrt();
        assert!((n - expect).abs() < 1e-15);
    }

    #[test]
    fn perturbed_reduces_to_diagonal_for_zero_potential() {
        let m = SpectralDiffusionModel::unperturbed(12, 65, 0.0).unwrap();
        let v = ModalVector::new((1..=12).map(|j| 1.0 / j as f64).collect());
        let a = perturbed_semigroup_apply(&m, 0.02, &v).unwrap();
        let b = diag_semigroup_apply(0.02, &v).unwrap();
        assert!((&a - &b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn constant_potential_commutes() {
        for c in [1.0, 9.0] {
            let m = SpectralDiffusionModel::new(10, GridFunction::constant(129, c), 0.0).unwrap();
            let v = ModalVector::new((1..=10).map(|j| (j as f64).cos()).collect());
            for t in [0.01, 0.1, 0.5] {
                let a = perturbed_semigroup_apply(&m, t, &v).unwrap();
                let b = diag_semigroup_apply(t, &v).unwrap().scaled((c * t).exp());
                assert!((&a - &b).norm() <= 1e-6 * b.norm(), "c={c} t={t}");
            }
        }
    }

    #[test]
    fn perturbed_modes_respect_variation_of_constants_bound() {
        let g = random_potential(257, 12, 0.3, 5).unwrap();
        let m = SpectralDiffusionModel::new(12, g, 0.0).unwrap();
        let v = ModalVector::new((1..=12).map(|j| ((j * 7) % 5) as f64 - 2.0).collect());
        for t in [0.0, 0.01, 0.2, 1.0] {
            let out = perturbed_semigroup_apply(&m, t, &v).unwrap();
            let bound = perturbed_mode_bounds(&m, t, &v);
            for (c, b) in out.coefficients().iter().zip(&bound) {
                assert!(c.abs() <= b * (1.0 + 1e-12) + 1e-14, "t={t}: {c} > {b}");
            }
        }
    }

    #[test]
    fn transport_shift_and_nilpotency() {
        let m = TransportModel::uniform(513, 1.0, 1.0, 1.0, 0.0).unwrap();
        let one = GridFunction::constant(513, 1.0);
        assert_eq!(transport_semigroup_apply(&m, 0.0, &one).unwrap(), one);
        let s = transport_semigroup_apply(&m, 0.25, &one).unwrap();
        let mid = s.interpolate(0.5);
        assert!((mid - (-0.25f64).exp()).abs() < 1e-14);
        assert!((mid - 0.7788).abs() < 1e-4);
        let u = GridFunction::from_fn(513, |z| (5.0 * z).sin() + 2.0);
        assert_eq!(
            transport_semigroup_apply(&m, 1.0, &u).unwrap().sup_norm(),
            0.0
        );
        assert_eq!(
            transport_semigroup_apply(&m, 1.7, &u).unwrap().sup_norm(),
            0.0
        );
    }

    #[test]
    fn yosida_multipliers() {
        let v = ModalVector::new(vec![1.0; 8]);
        let out = yosida_control_apply(1e8, &v).unwrap();
        for j in 1..=8 {
            let b = sqrt_eigenvalue(j);
            // relative error alpha_j / (lambda + alpha_j)
            let rel = eigenvalue(j) / (1e8 + eigenvalue(j));
            assert!(((out.get(j) - b).abs() / b - rel).abs() < 1e-12);
        }
        let a3 = eigenvalue(3);
        let at = yosida_control_apply(a3, &ModalVector::mode(5, 3)).unwrap();
        assert!((at.get(3) - a3.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(
            yosida_control_apply(3.0, &ModalVector::zeros(4)).unwrap(),
            ModalVector::zeros(4)
        );
        assert!(yosida_control_apply(0.0, &v).is_err());
    }
}
