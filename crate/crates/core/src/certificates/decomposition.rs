//! Structural checks for the transport model: the range decomposition of the
//! control operator and the regularity of the boundary-injection profile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::admissibility::EnsembleSpec;
use crate::error::{Error, Result};
use crate::model::{GridFunction, Trajectory, TransportModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityWitness {
    pub member: String,
    /// `<A_m x, x>`.
    pub form: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativitySweep {
    pub epsilon: f64,
    pub dissipative: bool,
    /// Largest `<A_m x, x> / ||x||^2` over the members.
    pub max_ratio: f64,
    /// The inequality `<A_m x,x> <= (eps^2 |f|^2 / 2 - alpha) |x|^2 - x(0)^2 / 2`.
    pub bound_holds: bool,
    pub witness: Option<DissipativityWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `||_X B|| = max h` for the bounded part `x -> h x`.
    pub xb_norm: f64,
    pub epsilon: f64,
    /// `(2 alpha)^{1/2} / ||f||`.
    pub epsilon_max: f64,
    pub within_threshold: bool,
    pub members: usize,
    pub at_epsilon: DissipativitySweep,
    pub at_half_epsilon: DissipativitySweep,
    pub passed: bool,
}

/// Interior profiles; the last node is overwritten by the boundary constraint.
fn profiles(model: &TransportModel, spec: &EnsembleSpec) -> Vec<(String, GridFunction)> {
    let n = model.grid_size();
    let mut out = vec![
        ("one".to_string(), GridFunction::constant(n, 1.0)),
        ("f".to_string(), model.f().clone()),
        ("ramp-up".to_string(), GridFunction::from_fn(n, |z| z)),
        (
            "ramp-down".to_string(),
            GridFunction::from_fn(n, |z| 1.0 - z),
        ),
        (
            "outflow-bump".to_string(),
            GridFunction::from_fn(n, |z| (1.0 - (z - 0.9).abs() / 0.1).max(0.0)),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for k in 0..spec.size {
        let amps: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        out.push((
            format!("random:{k}"),
            GridFunction::from_fn(n, |z| {
                amps.iter()
                    .enumerate()
                    .map(|(m, a)| a * (m as f64 * std::f64::consts::PI * z).cos())
                    .sum()
            }),
        ));
    }
    out
}

/// Project onto the discrete domain `x(1) = -eps psi(x)`, solving exactly for the
/// last node.
pub fn impose_boundary(model: &TransportModel, epsilon: f64, x: &mut GridFunction) -> Result<()> {
    let n = x.len();
    let last = n - 1;
    x.values_mut()[last] = 0.0;
    let psi_int = model.psi(x);
    let wb = x.weight(last) * model.f().values()[last];
    let xb = -epsilon * psi_int / (1.0 + epsilon * wb);
    x.values_mut()[last] = xb;
    let residual = xb + epsilon * model.psi(x);
    if residual.abs() > 1e-10 * (1.0 + xb.abs()) {
        return Err(Error::BoundaryConstraint {
            index: last,
            residual,
        });
    }
    Ok(())
}

/// `<A_m x, x> = int x' x - alpha |x|^2`. The first term is exact for the piecewise
/// linear interpolant and telescopes to `(x(1)^2 - x(0)^2) / 2`.
pub fn transport_form(model: &TransportModel, x: &GridFunction) -> f64 {
    let v = x.values();
    let transport: f64 = v
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (w[0] + w[1]))
        .sum();
    transport - model.alpha() * x.inner(x)
}

fn sweep(
    model: &TransportModel,
    epsilon: f64,
    members: &[(String, GridFunction)],
) -> Result<DissipativitySweep> {
    let fnorm2 = model.f().inner(model.f());
    let mut max_ratio = f64::NEG_INFINITY;
    let mut witness: Option<DissipativityWitness> = None;
    let mut bound_holds = true;
    for (label, base) in members {
        let mut x = base.clone();
        impose_boundary(model, epsilon, &mut x)?;
        let norm_sq = x.inner(&x);
        if norm_sq == 0.0 {
            continue;
        }
        let form = transport_form(model, &x);
        let x0 = x.values()[0];
        let x1 = *x.values().last().expect("grid has nodes");
        let scale = norm_sq + x0 * x0 + x1 * x1;
        let bound = (0.5 * epsilon * epsilon * fnorm2 - model.alpha()) * norm_sq - 0.5 * x0 * x0;
        if form > bound + 1e-12 * scale {
            bound_holds = false;
        }
        let ratio = form / norm_sq;
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        if form > 1e-12 * scale && witness.as_ref().is_none_or(|w| form / w.norm_sq < ratio) {
            witness = Some(DissipativityWitness {
                member: label.clone(),
                form,
                norm_sq,
            });
        }
    }
    Ok(DissipativitySweep {
        epsilon,
        dissipative: witness.is_none(),
        max_ratio,
        bound_holds,
        witness,
    })
}

pub fn check_decomposition(
    model: &TransportModel,
    spec: &EnsembleSpec,
) -> Result<DecompositionReport> {
    let members = profiles(model, spec);
    let eps = model.epsilon();
    let epsilon_max = model.epsilon_max();
    let at_epsilon = sweep(model, eps, &members)?;
    let at_half_epsilon = sweep(model, 0.5 * eps, &members)?;
    let within_threshold = eps <= epsilon_max;
    let passed = within_threshold
        && at_epsilon.dissipative
        && at_epsilon.bound_holds
        && at_half_epsilon.dissipative;
    Ok(DecompositionReport {
        xb_norm: model.h().max(),
        epsilon: eps,
        epsilon_max,
        within_threshold,
        members: members.len(),
        at_epsilon,
        at_half_epsilon,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `g(z) = int_z^1 e^{-alpha(1-r)} psi(u(r)) dr` on the model grid.
    pub g: GridFunction,
    pub g_at_one: f64,
    pub max_difference_quotient: f64,
    /// `sup |e^{-alpha(1-r)} psi(u(r))|`, which bounds `|g'|`.
    pub derivative_bound: f64,
    pub ok: bool,
}

/// Build `g` from a grid trajectory sampled on `[0, 1]` (later samples are ignored).
pub fn boundary_regularity_check(
    model: &TransportModel,
    path: &Trajectory,
) -> Result<RegularityReport> {
    let states = path
        .grid_states()
        .ok_or_else(|| Error::TrajectoryMismatch("boundary regularity needs grid states".into()))?;
    let times = path.times();
    if path.end_time() < 1.0 - 1e-12 {
        return Err(Error::TrajectoryMismatch(format!(
            "path must cover [0, 1], ends at {}",
            path.end_time()
        )));
    }
    let alpha = model.alpha();
    let mut r: Vec<f64> = Vec::new();
    let mut q: Vec<f64> = Vec::new();
    for (k, (&t, x)) in times.iter().zip(states).enumerate() {
        if t > 1.0 + 1e-12 {
            // close the interval at r = 1 by linear interpolation
            let (t0, q0) = (r[k - 1], q[k - 1]);
            let q1 = (-alpha * (1.0 - t)).exp() * model.psi(x);
            r.push(1.0);
            q.push(q0 + (q1 - q0) * (1.0 - t0) / (t - t0));
            break;
        }
        r.push(t.min(1.0));
        q.push((-alpha * (1.0 - t)).exp() * model.psi(x));
        if t >= 1.0 - 1e-12 {
            break;
        }
    }
    // tail integrals Q_k = int_{r_k}^1 of the piecewise linear q
    let m = r.len();
    let mut tail = vec![0.0; m];
    for k in (0..m - 1).rev() {
        tail[k] = tail[k + 1] + 0.5 * (r[k + 1] - r[k]) * (q[k] + q[k + 1]);
    }
    let n = model.grid_size();
    let mut g = GridFunction::zeros(n);
    for i in 0..n {
        let z = g.node(i);
        if i == n - 1 {
            g.values_mut()[i] = 0.0;
            continue;
        }
        let k = r
            .partition_point(|&rk| rk <= z)
            .saturating_sub(1)
            .min(m - 2);
        let qz = q[k] + (q[k + 1] - q[k]) * (z - r[k]) / (r[k + 1] - r[k]);
        g.values_mut()[i] = 0.5 * (r[k + 1] - z) * (qz + q[k + 1]) + tail[k + 1];
    }
    let dz = g.spacing();
    let max_difference_quotient = g
        .values()
        .windows(2)
        .map(|w| ((w[1] - w[0]) / dz).abs())
        .fold(0.0, f64::max);
    let derivative_bound = q.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let g_at_one = *g.values().last().expect("grid has nodes");
    let ok = g_at_one == 0.0
        && max_difference_quotient.is_finite()
        && max_difference_quotient <= derivative_bound * (1.0 + 1e-9) + 1e-300;
    Ok(RegularityReport {
        g,
        g_at_one,
        max_difference_quotient,
        derivative_bound,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> EnsembleSpec {
        EnsembleSpec {
            size: 50,
            ..Default::default()
        }
    }

    #[test]
    fn threshold_value() {
        let m = TransportModel::uniform(129, 0.5, 1.0, 1.0, 0.0).unwrap();
        assert!((m.epsilon_max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unperturbed_boundary_is_dissipative() {
        let m = TransportModel::uniform(129, 0.5, 1.0, 1.0, 0.0).unwrap();
        let r = check_decomposition(&m, &spec()).unwrap();
        assert!(r.passed && r.at_epsilon.witness.is_none());
        assert!(r.at_epsilon.max_ratio <= -0.5 + 1e-12);
    }

    #[test]
    fn below_threshold_passes_far_above_fails() {
        let base = TransportModel::uniform(257, 0.5, 1.0, 1.0, 0.0).unwrap();
        let ok = check_decomposition(&base.with_epsilon(0.9).unwrap(), &spec()).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = check_decomposition(&base.with_epsilon(10.0).unwrap(), &spec()).unwrap();
        assert!(!bad.passed);
        let w = bad.at_epsilon.witness.expect("witness");
        assert!(w.form > 0.0);
        assert!(bad.at_epsilon.bound_holds);
    }

    #[test]
    fn boundary_constraint_is_exact() {
        let m = TransportModel::uniform(65, 0.5, 1.0, 1.0, 0.3).unwrap();
        let mut x = GridFunction::from_fn(65, |z| z * z + 0.2);
        impose_boundary(&m, 0.3, &mut x).unwrap();
        let xb = *x.values().last().unwrap();
        assert!((xb + 0.3 * m.psi(&x)).abs() < 1e-14);
    }

    #[test]
    fn regularity_closed_form() {
        // psi(u) = 1 everywhere with f = 1, u = 1: g(z) = 1 - e^{-(1 - z)} for alpha = 1
        let n = 129;
        let m = TransportModel::uniform(n, 1.0, 1.0, 1.0, 0.0).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let states = vec![GridFunction::constant(n, 1.0); times.len()];
        let path = Trajectory::grid(times, states, 0.0).unwrap();
        let r = boundary_regularity_check(&m, &path).unwrap();
        assert!(r.ok);
        assert_eq!(r.g_at_one, 0.0);
        for (i, v) in r.g.values().iter().enumerate() {
            let z = r.g.node(i);
            assert!((v - (1.0 - (-(1.0 - z)).exp())).abs() < 1e-5, "z={z}");
        }
    }

    #[test]
    fn regularity_zero_path() {
        let n = 33;
        let m = TransportModel::uniform(n, 1.0, 1.0, 1.0, 0.0).unwrap();
        let times = vec![0.0, 0.5, 1.0, 1.5];
        let path = Trajectory::grid(times, vec![GridFunction::zeros(n); 4], 0.0).unwrap();
        let r = boundary_regularity_check(&m, &path).unwrap();
        assert!(r.g.values().iter().all(|&v| v == 0.0));
    }
}
