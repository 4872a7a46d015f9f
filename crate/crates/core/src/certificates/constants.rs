//! Closed-form constants: the one-period feedback bounds and the decay certificate.
//! Every function here is plain arithmetic on its arguments, so recomputing from
//! stored fields reproduces the stored values exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{CertificatePath, Provenance, StabilityCertificate};

/// `a = rho T^{1/p} M`.
pub fn contraction_factor(m: f64, horizon: f64, p: f64, rho: f64) -> f64 {
    rho * horizon.powf(1.0 / p) * m
}

/// `1 / (T^{1/p} M)`; infinite when `M = 0`.
pub fn gain_limit(m: f64, horizon: f64, p: f64) -> f64 {
    1.0 / (horizon.powf(1.0 / p) * m)
}

/// `M_rho = M T^{1/p} / (1 - a) (2 + a)`.
pub fn m_rho(m: f64, horizon: f64, p: f64, rho: f64) -> f64 {
    let a = contraction_factor(m, horizon, p, rho);
    m * horizon.powf(1.0 / p) / (1.0 - a) * (2.0 + a)
}

/// `M T^{1+1/p} / (1 - a) * scale * (2 + a / (1 - a))`. The direct path uses
/// `scale = C L`, the decomposition path `scale = ||_X B||`.
pub fn c1(m: f64, horizon: f64, p: f64, rho: f64, scale: f64) -> f64 {
    let a = contraction_factor(m, horizon, p, rho);
    m * horizon.powf(1.0 + 1.0 / p) / (1.0 - a) * scale * (2.0 + a / (1.0 - a))
}

/// `C2 = (2 rho^2 (delta M_rho + C1) + 1) / (1 + rho delta)`.
pub fn c2(rho: f64, delta: f64, m_rho: f64, c1: f64) -> f64 {
    (2.0 * rho * rho * (delta * m_rho + c1) + 1.0) / (1.0 + rho * delta)
}

pub fn k_from_c2(c2: f64) -> f64 {
    c2.powf(-0.5)
}

pub fn sigma_from_c2(c2: f64, horizon: f64) -> f64 {
    -c2.ln() / (2.0 * horizon)
}

/// Right-hand sides of the three one-period feedback estimates, per unit `||x0||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Bounds {
    pub a: f64,
    /// `||x||_{L^p(0,T)} <= lp * ||x0||`.
    pub lp: f64,
    /// `||x(t)|| <= pointwise * ||x0||` on `[0, T]`.
    pub pointwise: f64,
    /// Convolution term on `[T, 2T]`.
    pub m_rho: f64,
}

pub fn lemma1_bounds(m: f64, horizon: f64, p: f64, rho: f64) -> Lemma1Bounds {
    let a = contraction_factor(m, horizon, p, rho);
    Lemma1Bounds {
        a,
        lp: horizon.powf(1.0 / p) / (1.0 - a),
        pointwise: 1.0 + a / (1.0 - a),
        m_rho: m_rho(m, horizon, p, rho),
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    m: f64,
    delta: f64,
    horizon: f64,
    p: f64,
    l: f64,
    c: Option<f64>,
    rho: f64,
    path: CertificatePath,
) -> StabilityCertificate {
    let mut provenance = BTreeMap::new();
    provenance.insert("M".to_string(), Provenance::Estimate);
    provenance.insert("delta".to_string(), Provenance::Analytic);
    provenance.insert("L".to_string(), Provenance::Analytic);
    if c.is_some() {
        provenance.insert("C".to_string(), Provenance::Config);
    }
    for k in ["M_rho", "C1", "C2", "K", "sigma"] {
        provenance.insert(k.to_string(), Provenance::Analytic);
    }
    let limit = gain_limit(m, horizon, p);
    let mut cert = StabilityCertificate {
        horizon,
        p,
        m,
        delta,
        l,
        c,
        rho,
        m_rho: f64::NAN,
        c1: f64::NAN,
        c2: f64::NAN,
        k: f64::NAN,
        sigma: f64::NAN,
        rho1: None,
        path,
        valid: false,
        reason: None,
        provenance,
    };
    let bad_inputs = [
        ("M", m),
        ("delta", delta),
        ("L", l),
        ("C", c.unwrap_or(1.0)),
    ]
    .into_iter()
    .find(|(_, v)| !(v.is_finite() && *v >= 0.0));
    if let Some((name, v)) = bad_inputs {
        cert.reason = Some(format!("{name} = {v} is not a finite nonnegative number"));
        return cert;
    }
    if !(horizon > 0.0 && p > 1.0 && p.is_finite()) {
        cert.reason = Some(format!(
            "need T > 0 and 1 < p < inf, got T = {horizon}, p = {p}"
        ));
        return cert;
    }
    if !(rho > 0.0 && rho < limit) {
        cert.reason = Some(format!("gain {rho} outside (0, {limit})"));
        return cert;
    }
    let scale = match path {
        CertificatePath::Direct => c.unwrap_or(1.0) * l,
        CertificatePath::Decomposition => l,
    };
    cert.m_rho = m_rho(m, horizon, p, rho);
    cert.c1 = c1(m, horizon, p, rho, scale);
    cert.c2 = c2(rho, delta, cert.m_rho, cert.c1);
    cert.k = k_from_c2(cert.c2);
    cert.sigma = sigma_from_c2(cert.c2, horizon);
    cert.valid = cert.c2 > 0.0 && cert.c2 < 1.0;
    if !cert.valid {
        cert.reason = Some(format!("C2 = {} is not in (0, 1)", cert.c2));
    }
    cert
}

/// Certificate through the observability of `B` itself.
pub fn compute_theorem2_certificate(
    m: f64,
    delta: f64,
    horizon: f64,
    p: f64,
    l: f64,
    c: f64,
    rho: f64,
) -> StabilityCertificate {
    assemble(
        m,
        delta,
        horizon,
        p,
        l,
        Some(c),
        rho,
        CertificatePath::Direct,
    )
}

/// Certificate through the bounded part of a range decomposition.
pub fn compute_theorem3_certificate(
    m: f64,
    delta: f64,
    horizon: f64,
    p: f64,
    xb_norm: f64,
    rho: f64,
) -> StabilityCertificate {
    assemble(
        m,
        delta,
        horizon,
        p,
        xb_norm,
        None,
        rho,
        CertificatePath::Decomposition,
    )
}

/// Recompute `C2`, `K` and `sigma` from the stored fields of a certificate.
pub fn recompute(cert: &StabilityCertificate) -> (f64, f64, f64) {
    let scale = match cert.path {
        CertificatePath::Direct => cert.c.unwrap_or(1.0) * cert.l,
        CertificatePath::Decomposition => cert.l,
    };
    let mr = m_rho(cert.m, cert.horizon, cert.p, cert.rho);
    let c1v = c1(cert.m, cert.horizon, cert.p, cert.rho, scale);
    let c2v = c2(cert.rho, cert.delta, mr, c1v);
    (c2v, k_from_c2(c2v), sigma_from_c2(c2v, cert.horizon))
}
