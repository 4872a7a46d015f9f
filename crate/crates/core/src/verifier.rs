//! Checks of the certified inequalities on computed trajectories.

use serde::{Deserialize, Serialize};

use crate::certificates::lemma1_bounds;
use crate::closed_loop::{heat_closed_loop_solve_with, lp_norm};
use crate::error::{Error, Result};
use crate::model::{ModalVector, SpectralDiffusionModel, StabilityCertificate, States, Trajectory};
use crate::oracle::expm_apply;
use crate::par::Execution;

/// Floor below which a squared norm is treated as underflow.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Warn,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Worst-case `bound - quantity`.
    pub slack: Option<f64>,
    /// Worst-case `bound / quantity`.
    pub slack_factor: Option<f64>,
    /// Worst sample for a pass, first violating sample for a failure.
    pub witness: Option<usize>,
    pub quantity: Option<f64>,
    pub bound: Option<f64>,
    pub detail: String,
}

impl Check {
    fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            slack: None,
            slack_factor: None,
            witness: None,
            quantity: None,
            bound: None,
            detail: detail.into(),
        }
    }

    fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Worst sample of `quantity_i <= bound_i`.
struct Tally {
    worst: Option<(usize, f64, f64)>,
    first_violation: Option<usize>,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: None,
            first_violation: None,
        }
    }

    fn add(&mut self, i: usize, quantity: f64, bound: f64) {
        let slack = bound - quantity;
        if !(slack >= 0.0) && self.first_violation.is_none() {
            self.first_violation = Some(i);
        }
        if self
            .worst
            .is_none_or(|(_, q, b)| slack < b - q || slack.is_nan())
        {
            self.worst = Some((i, quantity, bound));
        }
    }

    fn finish(self, name: &str, detail: impl Into<String>) -> Check {
        let Some((i, q, b)) = self.worst else {
            return Check::skipped(name, "no samples");
        };
        let failed = self.first_violation.is_some();
        Check {
            name: name.into(),
            status: if failed { Status::Fail } else { Status::Pass },
            slack: Some(b - q),
            slack_factor: Some(if q > 0.0 { b / q } else { f64::INFINITY }),
            witness: Some(self.first_violation.unwrap_or(i)),
            quantity: Some(q),
            bound: Some(b),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: String,
    pub checks: Vec<Check>,
    pub sigma_meas: Option<f64>,
    pub sigma_cert: Option<f64>,
    pub margin: Option<f64>,
    pub passed: bool,
}

impl VerificationReport {
    fn new(kind: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(Check::passed);
        Self {
            kind: kind.into(),
            checks,
            sigma_meas: None,
            sigma_cert: None,
            margin: None,
            passed,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn state_distance(a: &Trajectory, b: &Trajectory, i: usize) -> Result<f64> {
    match (a.states(), b.states()) {
        (States::Modal(x), States::Modal(y)) => Ok((&x[i] - &y[i]).norm()),
        (States::Grid(x), States::Grid(y)) => Ok(x[i].zip_map(&y[i], |p, q| p - q).norm()),
        _ => Err(Error::TrajectoryMismatch(
            "both trajectories need stored states of the same kind".into(),
        )),
    }
}

fn sample_index(traj: &Trajectory, t: f64) -> Result<usize> {
    traj.index_at(t, 1e-9 * t.max(1.0))
        .ok_or_else(|| Error::TrajectoryMismatch(format!("no sample at t = {t}")))
}

/// The three one-period feedback estimates, using `M`, `T`, `p` from `cert` and the gain of `traj`:
/// the `L^p(0,T)` bound, the convolution bound on `[T, 2T]` (recovered as
/// `(S(t)x0 - x(t)) / rho` from `open_loop`), and the pointwise bound at every sample.
pub fn verify_lemma1(
    traj: &Trajectory,
    cert: &StabilityCertificate,
    open_loop: &Trajectory,
) -> Result<VerificationReport> {
    if traj.times() != open_loop.times() {
        return Err(Error::TrajectoryMismatch(
            "closed and open loop need identical sample times".into(),
        ));
    }
    let x0_gap = state_distance(traj, open_loop, 0)?;
    let n0 = traj.initial_norm();
    if x0_gap > 1e-12 * n0.max(f64::MIN_POSITIVE) {
        return Err(Error::TrajectoryMismatch(format!(
            "initial states differ by {x0_gap:e}"
        )));
    }
    let horizon = cert.horizon;
    if traj.end_time() < 2.0 * horizon * (1.0 - 1e-12) {
        return Err(Error::TrajectoryMismatch(format!(
            "need samples on [0, {}], trajectory ends at {}",
            2.0 * horizon,
            traj.end_time()
        )));
    }
    let rho = traj.rho();
    let bounds = lemma1_bounds(cert.m, horizon, cert.p, rho);
    if !(bounds.a < 1.0 && rho >= 0.0) {
        return Err(Error::InvalidCertificate(format!(
            "gain {rho} outside the contraction range, rho T^(1/p) M = {}",
            bounds.a
        )));
    }
    let k_t = sample_index(traj, horizon)?;
    let times = traj.times();
    let norms = traj.norms();

    let mut lp = Tally::new();
    lp.add(
        k_t,
        lp_norm(&times[..=k_t], &norms[..=k_t], cert.p),
        bounds.lp * n0,
    );
    let lp = lp.finish(
        "lp_norm",
        "||x||_{L^p(0,T)} <= T^(1/p) / (1 - rho T^(1/p) M) ||x0||",
    );

    let conv = if rho == 0.0 {
        Check {
            status: Status::Pass,
            slack: Some(bounds.m_rho * n0),
            quantity: Some(0.0),
            bound: Some(bounds.m_rho * n0),
            ..Check::skipped("convolution", "rho = 0: the convolution term vanishes")
        }
    } else {
        let mut tally = Tally::new();
        for (i, &t) in times.iter().enumerate() {
            if t >= horizon * (1.0 - 1e-12) && t <= 2.0 * horizon * (1.0 + 1e-12) {
                tally.add(
                    i,
                    state_distance(traj, open_loop, i)? / rho,
                    bounds.m_rho * n0,
                );
            }
        }
        tally.finish(
            "convolution",
            "||int_0^t S(t-s) B x(s) ds|| <= M_rho ||x0|| on [T, 2T]",
        )
    };

    let mut point = Tally::new();
    for (i, &n) in norms.iter().enumerate() {
        point.add(i, n, bounds.pointwise * n0);
    }
    let point = point.finish(
        "pointwise",
        "||x(t)|| <= (1 + a / (1 - a)) ||x0||, a = rho T^(1/p) M",
    );

    Ok(VerificationReport::new(
        "feedback_bounds",
        vec![lp, conv, point],
    ))
}

/// Least-squares slope of `ln ||x(kT)||` against `kT`, negated. Underflowed samples are dropped.
pub fn measured_rate(traj: &Trajectory, horizon: f64) -> Option<f64> {
    let mut pts = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * horizon;
        if t > traj.end_time() * (1.0 + 1e-12) {
            break;
        }
        let Some(i) = traj.index_at(t, 1e-9 * t.max(1.0)) else {
            break;
        };
        let n = traj.norms()[i];
        if n * n > UNDERFLOW {
            pts.push((t, n.ln()));
        }
        k += 1;
    }
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tbar).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Exponential envelope, per-period contraction, monotonicity and the measured rate.
pub fn verify_decay(traj: &Trajectory, cert: &StabilityCertificate) -> Result<VerificationReport> {
    if !cert.valid {
        return Err(Error::InvalidCertificate(
            cert.reason
                .clone()
                .unwrap_or_else(|| "certificate is not valid".into()),
        ));
    }
    let horizon = cert.horizon;
    let periods = (traj.end_time() / horizon + 1e-9).floor() as usize;
    if periods < 3 {
        return Err(Error::TrajectoryMismatch(format!(
            "need at least 3 periods of length {horizon}, trajectory ends at {}",
            traj.end_time()
        )));
    }
    let n0 = traj.initial_norm();
    if n0 == 0.0 {
        let mut r = VerificationReport::new(
            "decay",
            ["envelope", "period_ratio", "monotone", "rate"]
                .iter()
                .map(|n| Check {
                    status: Status::Pass,
                    ..Check::skipped(n, "zero initial state")
                })
                .collect(),
        );
        r.sigma_cert = Some(cert.sigma);
        return Ok(r);
    }
    let times = traj.times();
    let norms = traj.norms();

    let mut env = Tally::new();
    for (i, (&t, &n)) in times.iter().zip(norms).enumerate() {
        env.add(i, n, cert.envelope(t) * n0);
    }
    let env = env.finish("envelope", "||x(t)|| <= K e^{-sigma t} ||x0||");

    let mut ratio = Tally::new();
    let mut skipped = 0;
    for k in 0..periods {
        let a = sample_index(traj, k as f64 * horizon)?;
        let b = sample_index(traj, (k + 1) as f64 * horizon)?;
        let den = norms[a] * norms[a];
        if den < UNDERFLOW {
            skipped += 1;
            continue;
        }
        ratio.add(b, norms[b] * norms[b] / den, cert.c2);
    }
    let ratio = ratio.finish(
        "period_ratio",
        format!("||x((k+1)T)||^2 / ||x(kT)||^2 <= C2; {skipped} underflowed periods skipped"),
    );

    let mut mono = Tally::new();
    for i in 1..norms.len() {
        mono.add(i, norms[i], norms[i - 1]);
    }
    let mut mono = mono.finish("monotone", "||x(t)|| nonincreasing");
    if mono.status == Status::Fail && traj.contraction_ok() == Some(false) {
        mono.status = Status::Warn;
        mono.detail
            .push_str("; contraction test failed, downgraded to a warning");
    }

    let sigma_meas = measured_rate(traj, horizon);
    let rate = match sigma_meas {
        Some(s) => {
            let mut t = Tally::new();
            t.add(0, cert.sigma, s);
            let mut c = t.finish(
                "rate",
                "sigma_cert <= sigma_meas (least squares on ln ||x(kT)||)",
            );
            c.witness = None;
            c
        }
        None => Check::skipped("rate", "fewer than two resolvable period samples"),
    };

    let mut report = VerificationReport::new("decay", vec![env, ratio, mono, rate]);
    report.sigma_meas = sigma_meas;
    report.sigma_cert = Some(cert.sigma);
    report.margin = sigma_meas.map(|s| s - cert.sigma);
    Ok(report)
}

/// Largest relative error between the closed-loop solver and the dense
/// matrix-exponential oracle over `t_samples`.
pub fn oracle_expm_compare(
    model: &SpectralDiffusionModel,
    x0: &ModalVector,
    t_samples: &[f64],
) -> Result<f64> {
    let mut times: Vec<f64> = std::iter::once(0.0)
        .chain(t_samples.iter().copied())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let traj = heat_closed_loop_solve_with(model, x0, &times, Execution::default())?;
    let gen = model.closed_loop_generator();
    let states = traj
        .modal_states()
        .expect("heat solver stores modal states");
    let mut worst: f64 = 0.0;
    for (&t, s) in times.iter().zip(states) {
        let reference = expm_apply(&gen, t, x0);
        let err = (s - &reference).norm();
        let scale = reference.norm();
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(worst)
}
