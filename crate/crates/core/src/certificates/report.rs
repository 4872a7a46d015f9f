//! Flat listing of certificate constants for JSON reports.

use serde::{Deserialize, Serialize};

use crate::model::{CertificatePath, Provenance, StabilityCertificate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub name: String,
    pub value: Option<f64>,
    pub formula: String,
    pub provenance: Provenance,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn constant_entries(cert: &StabilityCertificate) -> Vec<ConstantEntry> {
    let prov = |k: &str| {
        cert.provenance
            .get(k)
            .copied()
            .unwrap_or(Provenance::Analytic)
    };
    let c1_formula = match cert.path {
        CertificatePath::Direct => {
            "M C L T^(1+1/p) / (1 - rho T^(1/p) M) * (2 + a / (1 - a)), a = rho T^(1/p) M"
        }
        CertificatePath::Decomposition => {
            "M T^(1+1/p) / (1 - rho T^(1/p) M) * ||_X B|| * (2 + a / (1 - a)), a = rho T^(1/p) M"
        }
    };
    let mut out = vec![
        (
            "M",
            Some(cert.m),
            "sup of the convolution-to-input ratio over the ensemble (lower estimate)",
        ),
        (
            "delta",
            Some(cert.delta),
            "inf of int_0^T <B S(t)x, S(t)x> dt / ||S(T)x||^2",
        ),
        (
            "L",
            Some(cert.l),
            match cert.path {
                CertificatePath::Direct => {
                    "||B*||, spectral multiplier alpha_j^(1/2) against the X_-1 weight"
                }
                CertificatePath::Decomposition => "||_X B|| = max h",
            },
        ),
    ];
    if let Some(c) = cert.c {
        out.push(("C", Some(c), "embedding constant, user supplied"));
    }
    out.extend([
        (
            "M_rho",
            finite(cert.m_rho),
            "M T^(1/p) / (1 - rho T^(1/p) M) * (2 + rho M T^(1/p))",
        ),
        ("C1", finite(cert.c1), c1_formula),
        (
            "C2",
            finite(cert.c2),
            "(2 rho^2 (delta M_rho + C1) + 1) / (1 + rho delta)",
        ),
        ("K", finite(cert.k), "C2^(-1/2)"),
        ("sigma", finite(cert.sigma), "-ln(C2) / (2T)"),
        (
            "rho1",
            cert.rho1,
            "largest rho in (0, 1/(T^(1/p) M)) with C2(rho) < 1, by bisection",
        ),
    ]);
    out.into_iter()
        .map(|(name, value, formula)| ConstantEntry {
            name: name.to_string(),
            value,
            formula: formula.to_string(),
            provenance: prov(name),
        })
        .collect()
}
