use nalgebra::{DMatrix, DVector};

use crate::model::ModalVector;

/// `exp(t A) x` by dense Pade scaling-and-squaring (nalgebra), independent of the
/// eigendecomposition used by the solvers.
pub fn expm_apply(generator: &DMatrix<f64>, t: f64, x: &ModalVector) -> ModalVector {
    let e = (generator * t).exp();
    let y = e * DVector::from_column_slice(x.coefficients());
    ModalVector::new(y.as_slice().to_vec())
}
