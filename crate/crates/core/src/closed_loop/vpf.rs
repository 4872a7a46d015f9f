//! Picard iteration on the variation-of-parameters formula
//! `x(t) = S(t)x0 - rho int_0^t S(t-s) B x(s) ds`.
//!
//! Work happens in the eigenbasis of the open-loop generator, where `S(t)` is
//! diagonal. The convolution is advanced with the exponential integrator that is
//! exact for inputs linear between time nodes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ModalVector, SpectralDiffusionModel, Trajectory};
use crate::semigroup::Propagator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpfOptions {
    /// Time steps on `[0, T]`.
    pub steps: usize,
    /// Exponent of the `L^p(0, T; X)` distance between iterates.
    pub p: f64,
    /// Stop once the iterate distance drops below `tolerance * ||x||_{L^p}`.
    pub tolerance: f64,
}

impl Default for VpfOptions {
    fn default() -> Self {
        Self {
            steps: 2000,
            p: 2.0,
            tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VpfSolution {
    pub trajectory: Trajectory,
    /// `||x^{k+1} - x^k||_{L^p}` for each performed iteration.
    pub distances: Vec<f64>,
    pub converged: bool,
}

impl VpfSolution {
    /// Successive distance ratios `d_{k+1} / d_k`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// `(e^z - 1)/z` and `(e^z - 1 - z)/z^2`, stable near `z = 0`.
fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1e-3 {
        let phi1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
        let phi2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
        (phi1, phi2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

/// Trapezoid `L^p` norm of a sampled norm sequence.
pub fn lp_norm(times: &[f64], norms: &[f64], p: f64) -> f64 {
    let s: f64 = times
        .windows(2)
        .zip(norms.windows(2))
        .map(|(t, n)| 0.5 * (t[1] - t[0]) * (n[0].powf(p) + n[1].powf(p)))
        .sum();
    s.powf(1.0 / p)
}

struct Kernel {
    decay: Vec<f64>,
    w_prev: Vec<f64>,
    w_next: Vec<f64>,
}

impl Kernel {
    fn new(eigenvalues: &DVector<f64>, h: f64) -> Self {
        let mut decay = Vec::new();
        let mut w_prev = Vec::new();
        let mut w_next = Vec::new();
        for &lam in eigenvalues.iter() {
            let z = lam * h;
            let (phi1, phi2) = phi12(z);
            decay.push(z.exp());
            // int_0^h e^{lam(h - s)} (1 - s/h) ds and int_0^h e^{lam(h - s)} s/h ds
            w_next.push(h * phi2);
            w_prev.push(h * (phi1 - phi2));
        }
        Self {
            decay,
            w_prev,
            w_next,
        }
    }
}

pub fn vpf_fixed_point_solve(
    model: &SpectralDiffusionModel,
    x0: &ModalVector,
    horizon: f64,
    iterations: usize,
    opts: VpfOptions,
) -> Result<VpfSolution> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be > 0, got {horizon}"),
        });
    }
    if opts.steps == 0 || !(opts.p >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "vpf options",
            reason: "need steps >= 1 and p >= 1".into(),
        });
    }
    if x0.order() != model.order() {
        return Err(Error::DimensionMismatch {
            expected: model.order(),
            found: x0.order(),
        });
    }
    let n = model.order();
    let steps = opts.steps;
    let h = horizon / steps as f64;
    let times: Vec<f64> = (0..=steps)
        .map(|i| horizon * i as f64 / steps as f64)
        .collect();

    let open = Propagator::new(model.open_loop_generator())?;
    let v = open.eigenvectors();
    // B in eigen coordinates
    let b_eig: DMatrix<f64> = v.transpose() * model.control_matrix() * v;
    let z0 = open.to_eigen(x0);
    let free: Vec<DVector<f64>> = times
        .iter()
        .map(|&t| z0.zip_map(open.eigenvalues(), |z, lam| z * (lam * t).exp()))
        .collect();
    let kernel = Kernel::new(open.eigenvalues(), h);
    let rho = model.rho();

    let mut current = free.clone();
    let mut distances = Vec::new();
    let mut converged = false;
    for it in 0..iterations.max(1) {
        let forcing: Vec<DVector<f64>> = current.iter().map(|z| &b_eig * z).collect();
        let mut next = Vec::with_capacity(steps + 1);
        let mut conv = DVector::zeros(n);
        next.push(free[0].clone());
        for i in 0..steps {
            for m in 0..n {
                conv[m] = kernel.decay[m] * conv[m]
                    + kernel.w_prev[m] * forcing[i][m]
                    + kernel.w_next[m] * forcing[i + 1][m];
            }
            next.push(&free[i + 1] - rho * &conv);
        }
        let diff: Vec<f64> = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).norm())
            .collect();
        let d = lp_norm(&times, &diff, opts.p);
        let size: Vec<f64> = next.iter().map(|z| z.norm()).collect();
        let scale = lp_norm(&times, &size, opts.p);
        current = next;
        if let Some(&prev) = distances.last() {
            if d > prev * (1.0 + 1e-9) && d > 1e3 * f64::EPSILON * scale {
                return Err(Error::Divergence {
                    iteration: it,
                    previous: prev,
                    current: d,
                });
            }
        }
        distances.push(d);
        if d <= opts.tolerance * scale {
            converged = true;
            break;
        }
    }

    let states = current.iter().map(|z| open.from_eigen(z)).collect();
    Ok(VpfSolution {
        trajectory: Trajectory::modal(times, states, rho)?
            .with_contraction_flag(model.contraction_ok()),
        distances,
        converged,
    })
}
