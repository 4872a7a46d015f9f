//! Model fingerprints and run manifests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::model::{SpectralDiffusionModel, TransportModel};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn feed(h: &mut Sha256, tag: &str, values: &[f64]) {
    h.update(tag.as_bytes());
    h.update((values.len() as u64).to_le_bytes());
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
}

/// Hash of everything that defines the heat model except the gain.
pub fn heat_hash(model: &SpectralDiffusionModel) -> String {
    let mut h = Sha256::new();
    h.update(b"heat");
    h.update((model.order() as u64).to_le_bytes());
    h.update(format!("{:?}", model.control()).as_bytes());
    feed(&mut h, "g", model.potential().values());
    hex(&h.finalize())
}

/// Hash of the transport model except `epsilon`, which plays the role of the gain.
pub fn transport_hash(model: &TransportModel) -> String {
    let mut h = Sha256::new();
    h.update(b"transport");
    feed(&mut h, "alpha", &[model.alpha()]);
    feed(&mut h, "h", model.h().values());
    feed(&mut h, "f", model.f().values());
    hex(&h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub model_kind: String,
    pub model_hash: String,
    pub gain: Option<f64>,
    pub files: Vec<String>,
    /// The scenario as read, with `--seed` applied.
    pub config: Config,
}

impl Manifest {
    pub fn new(
        command: &str,
        kind: &str,
        model_hash: String,
        gain: Option<f64>,
        files: Vec<String>,
        config: &Config,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            model_kind: kind.to_string(),
            model_hash,
            gain,
            files,
            config: config.clone(),
        }
    }
}
