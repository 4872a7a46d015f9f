//! The four commands. Each writes its files into `out` and returns an outcome.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{CertifySettings, Config, Kind, SweepGrid};
use super::manifest::{heat_hash, transport_hash, Manifest};
use super::CliError;
use crate::certificates::{
    check_decomposition, compute_theorem2_certificate, compute_theorem3_certificate,
    constant_entries, estimate_admissibility_m, estimate_observability_delta,
    estimate_transport_admissibility_m, search_rho1, transport_observability_delta,
    AdmissibilityEstimate, ConstantEntry, DecompositionReport, ObservabilityEstimate, Rho1Search,
};
use crate::closed_loop::{heat_closed_loop_solve, transport_closed_loop_solve, TransportOptions};
use crate::error::Error;
use crate::model::io::{read_trajectory, write_snapshots, write_trajectory};
use crate::model::{sqrt_eigenvalue, ModelKind, Provenance, StabilityCertificate, Trajectory};
use crate::par::Execution;
use crate::verifier::{measured_rate, verify_decay, Check, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Fail,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Run(Error::Io(e.to_string())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Run(e.into()))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::Run(Error::Io(format!("{}: {e}", path.display()))))
}

fn model_hash(cfg: &Config, kind: Kind) -> Result<String, CliError> {
    Ok(match kind {
        Kind::Heat => heat_hash(&cfg.heat_model()?),
        Kind::Transport => transport_hash(&cfg.transport_model()?),
    })
}

/// Run the closed loop at `gain`.
fn simulate_at(
    cfg: &Config,
    kind: Kind,
    gain: f64,
    t_end: f64,
    dt_out: f64,
    courant: f64,
) -> Result<Trajectory, CliError> {
    match kind {
        Kind::Heat => {
            let model = cfg.heat_model()?.with_rho(gain)?;
            let x0 = cfg.heat_initial(model.order())?;
            Ok(heat_closed_loop_solve(&model, &x0, t_end, dt_out)?)
        }
        Kind::Transport => {
            let model = cfg.transport_model()?.with_epsilon(gain)?;
            let x0 = cfg.transport_initial(model.grid_size())?;
            Ok(transport_closed_loop_solve(
                &model,
                &x0,
                t_end,
                dt_out,
                TransportOptions { courant },
            )?)
        }
    }
}

pub fn simulate(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let kind = cfg.kind()?;
    let sim = cfg.simulation("simulate")?;
    let gain = match kind {
        Kind::Heat => cfg
            .heat_rho()?
            .ok_or_else(|| CliError::Config("model.rho: missing".into()))?,
        Kind::Transport => cfg
            .transport_epsilon()?
            .ok_or_else(|| CliError::Config("model.epsilon: missing".into()))?,
    };
    let traj = simulate_at(cfg, kind, gain, sim.t_end, sim.dt_out, sim.courant)?;
    let mut files = vec!["trajectory.csv".to_string()];
    write_trajectory(&traj, create(&out.join("trajectory.csv"))?)?;
    if kind == Kind::Transport {
        write_snapshots(&traj, create(&out.join("snapshots.csv"))?)?;
        files.push("snapshots.csv".into());
    }
    let manifest = Manifest::new(
        "simulate",
        kind.as_str(),
        model_hash(cfg, kind)?,
        Some(gain),
        files,
        cfg,
    );
    write_json(&out.join("trajectory.manifest.json"), &manifest)?;
    info!(
        "simulated {} samples, final norm {:e}",
        traj.len(),
        traj.norms()[traj.len() - 1]
    );
    Ok(Outcome::Complete)
}

/// Estimated constants shared by `certify` and `sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pipeline {
    pub model_kind: String,
    pub model_hash: String,
    pub path: String,
    pub horizon: f64,
    pub p: f64,
    pub admissibility: AdmissibilityEstimate,
    pub m: f64,
    pub m_provenance: Provenance,
    pub observability: ObservabilityEstimate,
    pub delta: f64,
    pub delta_provenance: Provenance,
    /// `||B*||` (direct) or `||_X B||` (decomposition).
    pub l: f64,
    pub c: Option<f64>,
    pub decomposition: Option<DecompositionReport>,
    pub rho1: Rho1Search,
}

impl Pipeline {
    pub fn build(cfg: &Config) -> Result<Self, CliError> {
        let kind = cfg.kind()?;
        let s: CertifySettings = cfg.certify(kind)?;
        let (admissibility, observability, l, c, decomposition) = match kind {
            Kind::Heat => {
                let model = cfg.heat_model()?;
                let a = estimate_admissibility_m(&model, s.horizon, s.p, &s.ensemble)?;
                let o = estimate_observability_delta(&model, s.horizon, &s.ensemble)?;
                // B* maps X_-1 to X with multipliers b_j / alpha_j^(1/2)
                let l = (1..=model.order())
                    .map(|j| model.control_multiplier(j) / sqrt_eigenvalue(j))
                    .fold(0.0, f64::max);
                (a, o, l, Some(s.c), None)
            }
            Kind::Transport => {
                let model = cfg.transport_model()?;
                let a = estimate_transport_admissibility_m(&model, s.horizon, s.p, &s.ensemble)?;
                let o = transport_observability_delta(&model, s.horizon)?;
                let d = check_decomposition(&model, &s.ensemble)?;
                (a, o, d.xb_norm, None, Some(d))
            }
        };
        let (m, m_provenance) = match s.m_override {
            Some(v) => (v, Provenance::Config),
            None => (admissibility.m, Provenance::Estimate),
        };
        let (delta, delta_provenance) = match s.delta_override {
            Some(v) => (v, Provenance::Config),
            None => (observability.delta, observability.provenance),
        };
        let mut p = Self {
            model_kind: kind.as_str().into(),
            model_hash: model_hash(cfg, kind)?,
            path: s.path,
            horizon: s.horizon,
            p: s.p,
            admissibility,
            m,
            m_provenance,
            observability,
            delta,
            delta_provenance,
            l,
            c,
            decomposition,
            rho1: Rho1Search {
                rho1: None,
                limit: f64::NAN,
                single_crossing: true,
                diagnostics: String::new(),
            },
        };
        p.rho1 = search_rho1(|r| p.raw_certificate(r).c2, p.m, p.horizon, p.p);
        Ok(p)
    }

    fn raw_certificate(&self, rho: f64) -> StabilityCertificate {
        match self.c {
            Some(c) => compute_theorem2_certificate(
                self.m,
                self.delta,
                self.horizon,
                self.p,
                self.l,
                c,
                rho,
            ),
            None => {
                compute_theorem3_certificate(self.m, self.delta, self.horizon, self.p, self.l, rho)
            }
        }
    }

    pub fn certificate(&self, rho: f64) -> StabilityCertificate {
        let mut cert = self.raw_certificate(rho);
        cert.rho1 = self.rho1.rho1;
        cert.provenance.insert("M".into(), self.m_provenance);
        cert.provenance
            .insert("delta".into(), self.delta_provenance);
        cert
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub tool: String,
    pub version: String,
    pub pipeline: Pipeline,
    pub gain: Option<f64>,
    pub gain_source: String,
    pub certificate: Option<StabilityCertificate>,
    pub constants: Vec<ConstantEntry>,
    pub notes: Vec<String>,
}

pub fn certify(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let kind = cfg.kind()?;
    let pipeline = Pipeline::build(cfg)?;
    let configured = match kind {
        Kind::Heat => cfg.heat_rho()?,
        Kind::Transport => cfg.transport_epsilon()?,
    };
    let (gain, gain_source) = match (configured, pipeline.rho1.rho1) {
        (Some(g), _) => (Some(g), "model"),
        (None, Some(r)) => (Some(0.5 * r), "half_rho1"),
        (None, None) => (None, "none"),
    };
    let certificate = gain.map(|g| pipeline.certificate(g));
    let constants = certificate
        .as_ref()
        .map(constant_entries)
        .unwrap_or_default();
    let mut notes = Vec::new();
    if pipeline.c.is_some() {
        notes.push(
            "C is not determined by the model; it is a configuration input (default 1) and the \
             certificate is conditional on it"
                .to_string(),
        );
    }
    notes.push(
        "M is the largest ratio over the sampled inputs, a lower estimate of the true constant"
            .into(),
    );
    if pipeline.delta_provenance == Provenance::Estimate {
        notes.push("delta is an ensemble estimate for a coupled model, not a proven bound".into());
    }
    if let Some(d) = &pipeline.decomposition {
        notes.push(format!(
            "decomposition check {} at epsilon = {} (threshold {}); uniformity in the gain is not tested",
            if d.passed { "PASS" } else { "FAIL" },
            d.epsilon,
            d.epsilon_max
        ));
    }
    if pipeline.rho1.rho1.is_none() {
        notes.push(format!("no certified gain: {}", pipeline.rho1.diagnostics));
    }
    let report = CertifyReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        pipeline,
        gain,
        gain_source: gain_source.into(),
        certificate,
        constants,
        notes,
    };
    write_json(&out.join("certificate.json"), &report)?;
    info!("rho1 = {:?}", report.pipeline.rho1.rho1);
    Ok(Outcome::Complete)
}

fn load_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Run(Error::Io(format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Run(Error::Parse(format!("{}: {e}", path.display()))))
}

fn manifest_path(traj: &Path) -> PathBuf {
    traj.with_extension("manifest.json")
}

pub fn verify(
    cfg: &Config,
    out: &Path,
    traj_path: Option<PathBuf>,
    cert_path: Option<PathBuf>,
) -> Result<Outcome, CliError> {
    let (default_traj, default_cert) = cfg.verify_paths(out);
    let traj_path = traj_path.unwrap_or(default_traj);
    let cert_path = cert_path.unwrap_or(default_cert);
    let cert_doc = load_json(&cert_path)?;
    let manifest: Manifest = serde_json::from_value(load_json(&manifest_path(&traj_path))?)
        .map_err(|e| CliError::Run(Error::Parse(format!("trajectory manifest: {e}"))))?;
    let cert_hash = cert_doc["pipeline"]["model_hash"]
        .as_str()
        .unwrap_or_default();
    if cert_hash != manifest.model_hash {
        return Err(CliError::Run(Error::TrajectoryMismatch(format!(
            "model-hash mismatch: trajectory {} vs certificate {cert_hash}",
            manifest.model_hash
        ))));
    }
    let cert_value = &cert_doc["certificate"];
    if cert_value.is_null() || cert_value["valid"] != serde_json::Value::Bool(true) {
        let reason = cert_value["reason"]
            .as_str()
            .unwrap_or("no certificate was issued");
        return Err(CliError::Run(Error::InvalidCertificate(reason.to_string())));
    }
    let cert: StabilityCertificate = serde_json::from_value(cert_value.clone())
        .map_err(|e| CliError::Run(Error::Parse(format!("certificate: {e}"))))?;
    let kind = match manifest.model_kind.as_str() {
        "heat" => ModelKind::Heat,
        "transport" => ModelKind::Transport,
        other => {
            return Err(CliError::Run(Error::Parse(format!(
                "unknown model kind `{other}`"
            ))))
        }
    };
    let gain = manifest.gain.unwrap_or(f64::NAN);
    let file = fs::File::open(&traj_path)
        .map_err(|e| CliError::Run(Error::Io(format!("{}: {e}", traj_path.display()))))?;
    let traj = read_trajectory(file, kind, gain)?;
    let mut report = verify_decay(&traj, &cert)?;
    let same_gain = (gain - cert.rho).abs() <= 1e-9 * cert.rho.abs().max(1e-300);
    report.checks.push(Check {
        name: "gain".into(),
        status: if same_gain {
            Status::Pass
        } else {
            Status::Fail
        },
        slack: None,
        slack_factor: None,
        witness: None,
        quantity: Some(gain),
        bound: Some(cert.rho),
        detail: "trajectory gain equals the certified gain".into(),
    });
    report.passed = report.passed && same_gain;
    write_json(&out.join("verification.json"), &report)?;
    Ok(if report.passed {
        Outcome::Complete
    } else {
        Outcome::Fail
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub c2: Option<f64>,
    pub sigma_cert: Option<f64>,
    pub sigma_meas: Option<f64>,
    pub pass: Option<bool>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

pub fn sweep_rows(cfg: &Config, pipeline: &Pipeline) -> Result<Vec<SweepRow>, CliError> {
    let kind = cfg.kind()?;
    let rhos = match cfg.sweep_grid()? {
        SweepGrid::Absolute(r) => r,
        SweepGrid::Fractions(f) => {
            let r1 = pipeline.rho1.rho1.ok_or_else(|| {
                CliError::Config("sweep.rho_fractions: no certified gain to scale".into())
            })?;
            f.iter().map(|x| x * r1).collect()
        }
    };
    let (t_end, dt_out) = cfg.sweep_times(pipeline.horizon)?;
    let courant = cfg.simulate.as_ref().and_then(|s| s.courant).unwrap_or(1.0);
    let mut cfg = cfg.clone();
    if let Some(m) = cfg.model.as_mut() {
        m.initial.get_or_insert_with(|| "ones".into());
    }
    let rows = Execution::default().map(&rhos, |&rho| -> Result<SweepRow, CliError> {
        let cert = pipeline.certificate(rho);
        let traj = simulate_at(&cfg, kind, rho, t_end, dt_out, courant)?;
        let sigma_meas = measured_rate(&traj, pipeline.horizon);
        let pass = if cert.valid {
            Some(verify_decay(&traj, &cert)?.passed)
        } else {
            None
        };
        Ok(SweepRow {
            rho,
            c2: cert.c2.is_finite().then_some(cert.c2),
            sigma_cert: cert.valid.then_some(cert.sigma),
            sigma_meas,
            pass,
        })
    });
    rows.into_iter().collect()
}

pub fn sweep(cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let kind = cfg.kind()?;
    let pipeline = Pipeline::build(cfg)?;
    let rows = sweep_rows(cfg, &pipeline)?;
    let mut w = csv::Writer::from_writer(create(&out.join("sweep.csv"))?);
    let csv_err = |e: csv::Error| CliError::Run(Error::Io(e.to_string()));
    w.write_record(["rho", "C2", "sigma_cert", "sigma_meas", "pass"])
        .map_err(csv_err)?;
    for r in &rows {
        let pass = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "none",
        };
        w.write_record([
            r.rho.to_string(),
            opt(r.c2),
            opt(r.sigma_cert),
            opt(r.sigma_meas),
            pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Run(e.into()))?;
    let manifest = Manifest::new(
        "sweep",
        kind.as_str(),
        pipeline.model_hash.clone(),
        None,
        vec!["sweep.csv".into()],
        cfg,
    );
    write_json(&out.join("sweep.manifest.json"), &manifest)?;
    Ok(if rows.iter().any(|r| r.pass == Some(false)) {
        Outcome::Fail
    } else {
        Outcome::Complete
    })
}
