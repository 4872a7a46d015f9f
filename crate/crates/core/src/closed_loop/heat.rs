use crate::error::{Error, Result};
use crate::model::{ModalVector, SpectralDiffusionModel, Trajectory};
use crate::par::Execution;
use crate::semigroup::Propagator;

/// Uniform output grid `0, dt, ..., t_end`; `dt_out` must divide `t_end`.
pub fn output_times(t_end: f64, dt_out: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be > 0, got {t_end}"),
        });
    }
    if !(dt_out > 0.0 && dt_out <= t_end) {
        return Err(Error::InvalidParameter {
            name: "dt_out",
            reason: format!("must lie in (0, t_end], got {dt_out}"),
        });
    }
    let k = (t_end / dt_out).round();
    if (k * dt_out - t_end).abs() > 1e-9 * t_end {
        return Err(Error::InvalidParameter {
            name: "dt_out",
            reason: format!("{dt_out} does not divide t_end = {t_end}"),
        });
    }
    let k = k as usize;
    Ok((0..=k).map(|i| t_end * i as f64 / k as f64).collect())
}

/// Exact samples of `c' = (diag(-alpha) + G - rho diag(alpha^(1/2))) c` at multiples of `dt_out`.
pub fn heat_closed_loop_solve(
    model: &SpectralDiffusionModel,
    x0: &ModalVector,
    t_end: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    heat_closed_loop_solve_with(
        model,
        x0,
        &output_times(t_end, dt_out)?,
        Execution::default(),
    )
}

/// As [`heat_closed_loop_solve`] on an explicit, increasing time grid starting at 0.
pub fn heat_closed_loop_solve_with(
    model: &SpectralDiffusionModel,
    x0: &ModalVector,
    times: &[f64],
    exec: Execution,
) -> Result<Trajectory> {
    if x0.order() != model.order() {
        return Err(Error::DimensionMismatch {
            expected: model.order(),
            found: x0.order(),
        });
    }
    let closed = Propagator::new(model.closed_loop_generator())?;
    // a nonzero state never reaches zero in finite time, so the switching
    // indicator stays 1 and the closed loop is the linear system throughout
    let states = exec
        .map(times, |&t| closed.apply(t, x0))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::modal(times.to_vec(), states, model.rho())?
        .with_contraction_flag(model.contraction_ok()))
}

/// Relative change of the norm sequence when the truncation order is doubled.
pub fn truncation_change(
    model: &SpectralDiffusionModel,
    x0: &ModalVector,
    times: &[f64],
) -> Result<f64> {
    let coarse = heat_closed_loop_solve_with(model, x0, times, Execution::default())?;
    let fine_model = model.with_order(2 * model.order())?;
    let fine = heat_closed_loop_solve_with(
        &fine_model,
        &x0.resized(fine_model.order()),
        times,
        Execution::default(),
    )?;
    let scale = x0.norm().max(f64::MIN_POSITIVE);
    Ok(coarse
        .norms()
        .iter()
        .zip(fine.norms())
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max))
}
