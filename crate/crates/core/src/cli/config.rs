//! TOML scenario files. Every field is optional at parse time; `resolve_*`
//! validates the fields each command needs and names the offending path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certificates::EnsembleSpec;
use crate::model::io::{read_grid, read_modal};
use crate::model::{
    eigenfunction, random_potential, GridFunction, ModalVector, SpectralDiffusionModel,
    TransportModel, DEFAULT_GRID, DEFAULT_MODES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field(path: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{path}: {reason}"))
}

/// A constant or a grid CSV path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    File(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<String>,
    pub modes: Option<usize>,
    pub grid: Option<usize>,
    pub rho: Option<f64>,
    pub potential: Option<String>,
    pub initial: Option<String>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub h: Option<Profile>,
    pub f: Option<Profile>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub courant: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub path: Option<String>,
    pub horizon: Option<f64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub ensemble_size: Option<usize>,
    pub ensemble_pieces: Option<usize>,
    pub seed: Option<u64>,
    /// Overrides for the estimated constants.
    pub m: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub rho: Option<Vec<f64>>,
    pub rho_fractions: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub trajectory: Option<String>,
    pub certificate: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelSection>,
    pub simulate: Option<SimulateSection>,
    pub certify: Option<CertifySection>,
    pub sweep: Option<SweepSection>,
    pub verify: Option<VerifySection>,
    /// Directory that relative file references are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))?;
        cfg.base = base.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// `--seed` replaces every seed in the file.
    pub fn override_seed(&mut self, seed: u64) {
        self.model.get_or_insert_with(Default::default).seed = Some(seed);
        self.certify.get_or_insert_with(Default::default).seed = Some(seed);
    }

    fn resolve_path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn model_section(&self) -> Result<&ModelSection, ConfigError> {
        self.model
            .as_ref()
            .ok_or_else(|| field("model", "missing section"))
    }

    pub fn kind(&self) -> Result<Kind, ConfigError> {
        match self.model_section()?.kind.as_deref() {
            Some("heat") => Ok(Kind::Heat),
            Some("transport") => Ok(Kind::Transport),
            Some(other) => Err(field(
                "model.kind",
                format!("expected `heat` or `transport`, got `{other}`"),
            )),
            None => Err(field("model.kind", "missing")),
        }
    }

    pub fn model_seed(&self) -> u64 {
        self.model.as_ref().and_then(|m| m.seed).unwrap_or(0)
    }

    fn read_grid_file(&self, path_field: &str, p: &str) -> Result<GridFunction, ConfigError> {
        let full = self.resolve_path(p);
        let file = std::fs::File::open(&full)
            .map_err(|e| field(path_field, format!("{}: {e}", full.display())))?;
        read_grid(file).map_err(|e| field(path_field, e))
    }

    /// Heat model without its gain (the caller sets it).
    pub fn heat_model(&self) -> Result<SpectralDiffusionModel, ConfigError> {
        let m = self.model_section()?;
        let modes = m.modes.unwrap_or(DEFAULT_MODES);
        let grid = m.grid.unwrap_or(DEFAULT_GRID.max(2 * modes + 1));
        if modes == 0 {
            return Err(field("model.modes", "must be >= 1"));
        }
        let potential = match m.potential.as_deref().unwrap_or("zero") {
            "zero" => GridFunction::zeros(grid),
            s if s.starts_with("constant:") => {
                let c: f64 = s["constant:".len()..]
                    .parse()
                    .map_err(|_| field("model.potential", format!("bad constant in `{s}`")))?;
                GridFunction::constant(grid, c)
            }
            s if s.starts_with("random:") => {
                let margin: f64 = s["random:".len()..]
                    .parse()
                    .map_err(|_| field("model.potential", format!("bad margin in `{s}`")))?;
                random_potential(grid, modes, margin, self.model_seed())
                    .map_err(|e| field("model.potential", e))?
            }
            s if s.starts_with("grid:") => {
                self.read_grid_file("model.potential", &s["grid:".len()..])?
            }
            other => {
                return Err(field(
                    "model.potential",
                    format!(
                    "expected zero, constant:<c>, random:<margin> or grid:<path>, got `{other}`"
                ),
                ))
            }
        };
        SpectralDiffusionModel::new(modes, potential, 0.0).map_err(|e| field("model", e))
    }

    /// Heat gain; required for simulation.
    pub fn heat_rho(&self) -> Result<Option<f64>, ConfigError> {
        match self.model_section()?.rho {
            Some(r) if !(r >= 0.0 && r.is_finite()) => {
                Err(field("model.rho", format!("must be >= 0, got {r}")))
            }
            r => Ok(r),
        }
    }

    fn profile(
        &self,
        name: &str,
        value: &Option<Profile>,
        default: f64,
        grid: usize,
    ) -> Result<GridFunction, ConfigError> {
        match value {
            None => Ok(GridFunction::constant(grid, default)),
            Some(Profile::Constant(c)) => Ok(GridFunction::constant(grid, *c)),
            Some(Profile::File(p)) => Ok(self.read_grid_file(name, p)?.resample(grid)),
        }
    }

    /// Transport model with `epsilon = 0` when the field is absent.
    pub fn transport_model(&self) -> Result<TransportModel, ConfigError> {
        let m = self.model_section()?;
        let grid = m.grid.unwrap_or(DEFAULT_GRID);
        let alpha = m.alpha.unwrap_or(0.5);
        let h = self.profile("model.h", &m.h, 1.0, grid)?;
        let f = self.profile("model.f", &m.f, 1.0, grid)?;
        let eps = m.epsilon.unwrap_or(0.0);
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(field("model.epsilon", format!("must be >= 0, got {eps}")));
        }
        TransportModel::new(alpha, h, f, eps).map_err(|e| field("model", e))
    }

    pub fn transport_epsilon(&self) -> Result<Option<f64>, ConfigError> {
        Ok(self.model_section()?.epsilon)
    }

    fn initial_spec(&self) -> Result<&str, ConfigError> {
        self.model_section()?
            .initial
            .as_deref()
            .ok_or_else(|| field("model.initial", "missing"))
    }

    fn mode_index(spec: &str) -> Result<usize, ConfigError> {
        spec["mode:".len()..]
            .parse::<usize>()
            .ok()
            .filter(|&j| j >= 1)
            .ok_or_else(|| field("model.initial", format!("bad mode index in `{spec}`")))
    }

    pub fn heat_initial(&self, order: usize) -> Result<ModalVector, ConfigError> {
        let spec = self.initial_spec()?;
        match spec {
            "ones" => Ok(ModalVector::new(vec![1.0; order])),
            s if s.starts_with("mode:") => {
                let j = Self::mode_index(s)?;
                if j > order {
                    return Err(field(
                        "model.initial",
                        format!("mode {j} exceeds model.modes = {order}"),
                    ));
                }
                Ok(ModalVector::mode(order, j))
            }
            s if s.starts_with("modal:") => {
                let full = self.resolve_path(&s["modal:".len()..]);
                let file = std::fs::File::open(&full)
                    .map_err(|e| field("model.initial", format!("{}: {e}", full.display())))?;
                let v = read_modal(file).map_err(|e| field("model.initial", e))?;
                if v.order() > order {
                    return Err(field(
                        "model.initial",
                        format!("{} modes exceed model.modes = {order}", v.order()),
                    ));
                }
                Ok(v.resized(order))
            }
            s if s.starts_with("grid:") => self
                .read_grid_file("model.initial", &s["grid:".len()..])?
                .to_modal(order)
                .map_err(|e| field("model.initial", e)),
            other => Err(field(
                "model.initial",
                format!("expected ones, mode:<j>, modal:<path> or grid:<path>, got `{other}`"),
            )),
        }
    }

    pub fn transport_initial(&self, grid: usize) -> Result<GridFunction, ConfigError> {
        let spec = self.initial_spec()?;
        match spec {
            "ones" => Ok(GridFunction::constant(grid, 1.0)),
            s if s.starts_with("mode:") => {
                let j = Self::mode_index(s)?;
                Ok(GridFunction::from_fn(grid, |z| eigenfunction(j, z)))
            }
            s if s.starts_with("grid:") => Ok(self
                .read_grid_file("model.initial", &s["grid:".len()..])?
                .resample(grid)),
            other => Err(field(
                "model.initial",
                format!("expected ones, mode:<j> or grid:<path>, got `{other}`"),
            )),
        }
    }

    pub fn simulation(&self, section: &str) -> Result<Simulation, ConfigError> {
        let s = self.simulate.clone().unwrap_or_default();
        let t_end = s
            .t_end
            .ok_or_else(|| field(&format!("{section}.t_end"), "missing"))?;
        let dt_out = s
            .dt_out
            .ok_or_else(|| field(&format!("{section}.dt_out"), "missing"))?;
        positive(&format!("{section}.t_end"), t_end)?;
        positive(&format!("{section}.dt_out"), dt_out)?;
        Ok(Simulation {
            t_end,
            dt_out,
            courant: s.courant.unwrap_or(1.0),
        })
    }

    pub fn certify(&self, kind: Kind) -> Result<CertifySettings, ConfigError> {
        let c = self.certify.clone().unwrap_or_default();
        let path = match (c.path.as_deref(), kind) {
            (None | Some("direct"), Kind::Heat) => "direct",
            (None | Some("decomposition"), Kind::Transport) => "decomposition",
            (Some(p @ ("direct" | "decomposition")), _) => {
                return Err(field(
                    "certify.path",
                    format!("`{p}` is not available for the {} model", kind.as_str()),
                ))
            }
            (Some(other), _) => {
                return Err(field(
                    "certify.path",
                    format!("expected direct or decomposition, got `{other}`"),
                ))
            }
        };
        let horizon = c.horizon.unwrap_or(match kind {
            Kind::Heat => 1.0,
            Kind::Transport => 0.5,
        });
        positive("certify.horizon", horizon)?;
        if kind == Kind::Transport && horizon >= 1.0 {
            return Err(field("certify.horizon", "transport needs T < 1"));
        }
        let p = c.p.unwrap_or(2.0);
        if !(p > 1.0 && p.is_finite()) {
            return Err(field("certify.p", format!("need 1 < p < inf, got {p}")));
        }
        let embedding = c.c.unwrap_or(1.0);
        positive("certify.c", embedding)?;
        for (name, v) in [("certify.m", c.m), ("certify.delta", c.delta)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(field(name, format!("must be >= 0, got {v}")));
                }
            }
        }
        let defaults = EnsembleSpec::default();
        Ok(CertifySettings {
            path: path.to_string(),
            horizon,
            p,
            c: embedding,
            ensemble: EnsembleSpec {
                size: c.ensemble_size.unwrap_or(defaults.size),
                seed: c.seed.unwrap_or(defaults.seed),
                pieces: c.ensemble_pieces.unwrap_or(defaults.pieces),
                structured: true,
            },
            m_override: c.m,
            delta_override: c.delta,
        })
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid, ConfigError> {
        let s = self.sweep.clone().unwrap_or_default();
        let grid = match (s.rho, s.rho_fractions) {
            (Some(_), Some(_)) => {
                return Err(field("sweep", "give either rho or rho_fractions, not both"))
            }
            (Some(r), None) => SweepGrid::Absolute(r),
            (None, Some(f)) => SweepGrid::Fractions(f),
            (None, None) => SweepGrid::Fractions(vec![0.25, 0.5, 0.75]),
        };
        let values = match &grid {
            SweepGrid::Absolute(v) | SweepGrid::Fractions(v) => v,
        };
        if values.is_empty() {
            return Err(field("sweep.rho", "empty grid"));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(field(
                "sweep.rho",
                format!("entries must be >= 0, got {bad}"),
            ));
        }
        Ok(grid)
    }

    pub fn sweep_times(&self, horizon: f64) -> Result<(f64, f64), ConfigError> {
        let s = self.sweep.clone().unwrap_or_default();
        let t_end = s.t_end.unwrap_or(4.0 * horizon);
        let dt_out = s.dt_out.unwrap_or(horizon / 20.0);
        positive("sweep.t_end", t_end)?;
        positive("sweep.dt_out", dt_out)?;
        Ok((t_end, dt_out))
    }

    pub fn verify_paths(&self, out: &Path) -> (PathBuf, PathBuf) {
        let v = self.verify.clone().unwrap_or_default();
        let traj = v
            .trajectory
            .map_or_else(|| out.join("trajectory.csv"), |p| self.resolve_path(&p));
        let cert = v
            .certificate
            .map_or_else(|| out.join("certificate.json"), |p| self.resolve_path(&p));
        (traj, cert)
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("must be > 0, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Heat,
    Transport,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Heat => "heat",
            Kind::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub t_end: f64,
    pub dt_out: f64,
    pub courant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifySettings {
    pub path: String,
    pub horizon: f64,
    pub p: f64,
    pub c: f64,
    pub ensemble: EnsembleSpec,
    pub m_override: Option<f64>,
    pub delta_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    Absolute(Vec<f64>),
    Fractions(Vec<f64>),
}
