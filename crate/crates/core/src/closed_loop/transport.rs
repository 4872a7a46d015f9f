use crate::error::{Error, Result};
use crate::model::{GridFunction, Trajectory, TransportModel};

use super::heat::output_times;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Target Courant number `dt / dz`; the step is shrunk so it divides `dt_out`.
    pub courant: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { courant: 1.0 }
    }
}

/// First-order upwind solver for the closed transport loop.
///
/// Each step transports toward `z - dt` with the one-sided difference on `[z, z + dz]`,
/// damps by `1 - dt (alpha + eps h(z))`, then sets the inflow node from
/// `x(1) = -eps psi(x)` (solved exactly for the inflow value, which appears in the
/// trapezoid sum for `psi`).
pub fn transport_closed_loop_solve(
    model: &TransportModel,
    x0: &GridFunction,
    t_end: f64,
    dt_out: f64,
    opts: TransportOptions,
) -> Result<Trajectory> {
    let n = model.grid_size();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let times = output_times(t_end, dt_out)?;
    let dz = model.spacing();
    if !(opts.courant > 0.0) || opts.courant > 1.0 {
        return Err(Error::Cfl {
            dt: opts.courant * dz,
            dz,
        });
    }
    let interval = times[1] - times[0];
    let substeps = (interval / (opts.courant * dz) - 1e-9).ceil().max(1.0) as usize;
    let dt = interval / substeps as f64;
    if dt > dz * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, dz });
    }
    let nu = (dt / dz).min(1.0);
    let eps = model.epsilon();
    let damping: Vec<f64> = model
        .h()
        .values()
        .iter()
        .map(|h| 1.0 - dt * (model.alpha() + eps * h))
        .collect();
    if damping.iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt_out",
            reason: format!("step {dt} too large for the zeroth-order terms"),
        });
    }
    let f = model.f();
    let last = n - 1;
    let boundary_self = f.weight(last) * f.values()[last];

    let mut x = x0.values().to_vec();
    // the inflow node carries boundary data from the first step on
    let psi0: f64 = (0..last).map(|i| f.weight(i) * f.values()[i] * x[i]).sum();
    x[last] = -eps * psi0 / (1.0 + eps * boundary_self);
    let mut next = x.clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    for _ in 1..times.len() {
        for _ in 0..substeps {
            for i in 0..last {
                next[i] = damping[i] * ((1.0 - nu) * x[i] + nu * x[i + 1]);
            }
            let psi_interior: f64 = (0..last)
                .map(|i| f.weight(i) * f.values()[i] * next[i])
                .sum();
            next[last] = -eps * psi_interior / (1.0 + eps * boundary_self);
            std::mem::swap(&mut x, &mut next);
        }
        states.push(GridFunction::new(x.clone())?);
    }
    Trajectory::grid(times, states, eps)
}
