use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Where a certificate constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Closed form or exact formula evaluation.
    Analytic,
    /// Sampled lower/upper estimate with no proof attached.
    Estimate,
    /// Supplied by the user.
    Config,
}

/// Which stability argument produced the constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificatePath {
    /// Observability of `B` itself; uses the embedding constant `C` and `L = ||B*||`.
    Direct,
    /// Observability of the bounded part of a range decomposition of `B`.
    Decomposition,
}

/// Every constant of the exponential-decay certificate `||x(t)|| <= K e^{-sigma t} ||x0||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub horizon: f64,
    pub p: f64,
    pub m: f64,
    pub delta: f64,
    /// `||B*||` (direct path) or `||_X B||` (decomposition path).
    pub l: f64,
    /// Embedding constant, direct path only.
    pub c: Option<f64>,
    pub rho: f64,
    pub m_rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
    pub sigma: f64,
    pub rho1: Option<f64>,
    pub path: CertificatePath,
    pub valid: bool,
    /// Why the certificate is invalid, if it is.
    pub reason: Option<String>,
    pub provenance: BTreeMap<String, Provenance>,
}

impl StabilityCertificate {
    /// `1 / (T^(1/p) M)`, the upper end of the admissible gain range.
    pub fn gain_limit(&self) -> f64 {
        1.0 / (self.horizon.powf(1.0 / self.p) * self.m)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.k * (-self.sigma * t).exp()
    }
}
