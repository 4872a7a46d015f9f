//! Final-state observability constant
//! `delta = inf_x int_0^T <B S(t) x, S(t) x> dt / ||S(T) x||^2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::admissibility::{phi1, EnsembleSpec};
use crate::error::{Error, Result};
use crate::model::{eigenvalue, Provenance, SpectralDiffusionModel, TransportModel};
use crate::semigroup::Propagator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityEstimate {
    pub delta: f64,
    pub provenance: Provenance,
    /// Mode, node or member attaining the minimum.
    pub witness: String,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be > 0, got {horizon}"),
        })
    }
}

/// Closed form for a diagonal model: `min_j b_j (e^{2 alpha_j T} - 1) / (2 alpha_j)`.
pub fn diagonal_observability_delta(
    model: &SpectralDiffusionModel,
    horizon: f64,
) -> Result<ObservabilityEstimate> {
    check_horizon(horizon)?;
    let mut best = (f64::INFINITY, 0);
    for j in 1..=model.order() {
        let a = eigenvalue(j);
        let r = model.control_multiplier(j) * (2.0 * a * horizon).exp_m1() / (2.0 * a);
        if r < best.0 {
            best = (r, j);
        }
    }
    Ok(ObservabilityEstimate {
        delta: best.0,
        provenance: Provenance::Analytic,
        witness: format!("mode:{}", best.1),
    })
}

/// Observability ratio in terms of the final state `z` written in the eigenbasis of
/// the open-loop generator: `z^T P z / |z|^2` with
/// `P_mn = K_mn (1 - e^{-(l_m + l_n) T}) / (l_m + l_n)` and `K = V^T B V`.
struct FinalStateForm {
    p: DMatrix<f64>,
    block: usize,
}

impl FinalStateForm {
    fn new(model: &SpectralDiffusionModel, horizon: f64) -> Result<Self> {
        let prop = Propagator::new(model.open_loop_generator())?;
        let v = prop.eigenvectors();
        let k = v.transpose() * model.control_matrix() * v;
        let lam = prop.eigenvalues();
        // eigenvalues come out unordered; keep the slow ones whose weights stay finite
        let mut order: Vec<usize> = (0..lam.len()).collect();
        order.sort_by(|&a, &b| lam[b].total_cmp(&lam[a]));
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&m| -2.0 * lam[m] * horizon < 600.0)
            .collect();
        let block = keep.len();
        let p = DMatrix::from_fn(block, block, |r, c| {
            let mu = lam[keep[r]] + lam[keep[c]];
            k[(keep[r], keep[c])] * horizon * phi1(-mu * horizon)
        });
        Ok(Self { p, block })
    }

    fn ratio(&self, z: &DVector<f64>) -> f64 {
        (z.transpose() * &self.p * z)[(0, 0)] / z.norm_squared()
    }
}

/// Ensemble estimate for a coupled model. Members are the eigen-directions, random
/// final states and the minimizing eigenvector of the finite quadratic form; the
/// reported value is the smallest ratio seen.
pub fn ensemble_observability_delta(
    model: &SpectralDiffusionModel,
    horizon: f64,
    spec: &EnsembleSpec,
) -> Result<ObservabilityEstimate> {
    check_horizon(horizon)?;
    let form = FinalStateForm::new(model, horizon)?;
    if form.block == 0 || (spec.size == 0 && !spec.structured) {
        return Err(Error::EmptyEnsemble);
    }
    let mut best = (f64::INFINITY, String::from("none"));
    let mut consider = |r: f64, label: String| {
        if r < best.0 {
            best = (r, label);
        }
    };
    if spec.structured {
        for m in 0..form.block {
            consider(form.p[(m, m)], format!("eigen:{m}"));
        }
        let eig = SymmetricEigen::try_new(form.p.clone(), 1e-15, 100_000)
            .ok_or(Error::EigenFailure(form.block))?;
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty block");
        let z = eig.eigenvectors.column(imin).into_owned();
        consider(form.ratio(&z), "min-eigenvector".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for k in 0..spec.size {
        let z = DVector::from_fn(form.block, |_, _| rng.random_range(-1.0..1.0));
        if z.norm_squared() > 0.0 {
            consider(form.ratio(&z), format!("random:{k}"));
        }
    }
    Ok(ObservabilityEstimate {
        delta: best.0,
        provenance: Provenance::Estimate,
        witness: best.1,
    })
}

/// Closed form when the model is diagonal, ensemble estimate otherwise.
pub fn estimate_observability_delta(
    model: &SpectralDiffusionModel,
    horizon: f64,
    spec: &EnsembleSpec,
) -> Result<ObservabilityEstimate> {
    if model.is_diagonal() {
        diagonal_observability_delta(model, horizon)
    } else {
        ensemble_observability_delta(model, horizon, spec)
    }
}

/// Observability of the bounded part `h` of the transport control operator.
/// A unit mass at `s` in `[T, 1]` gives `int_0^T e^{2 alpha (T - t)} h(s - t) dt`;
/// the infimum is the minimum over those `s`. Needs `T < 1`, otherwise `S(T) = 0`.
pub fn transport_observability_delta(
    model: &TransportModel,
    horizon: f64,
) -> Result<ObservabilityEstimate> {
    check_horizon(horizon)?;
    if horizon >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("transport semigroup vanishes for T >= 1, got {horizon}"),
        });
    }
    let h = model.h();
    let alpha = model.alpha();
    let n = model.grid_size();
    let dz = model.spacing();
    let steps = (((horizon / dz).ceil() as usize) * 4).max(64);
    let dt = horizon / steps as f64;
    let first = ((horizon / dz) - 1e-9).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in first..n {
        let s = k as f64 * dz;
        let g = |t: f64| (2.0 * alpha * (horizon - t)).exp() * h.interpolate(s - t);
        let mut acc = 0.5 * (g(0.0) + g(horizon));
        for q in 1..steps {
            acc += g(q as f64 * dt);
        }
        let r = acc * dt;
        if r < best.0 {
            best = (r, s);
        }
    }
    Ok(ObservabilityEstimate {
        delta: best.0,
        provenance: Provenance::Analytic,
        witness: format!("node:{}", best.1),
    })
}
