use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::modal::ModalVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Heat,
    Transport,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Heat => "heat",
            ModelKind::Transport => "transport",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum States {
    Modal(Vec<ModalVector>),
    Grid(Vec<GridFunction>),
    /// Only the norm column survived (e.g. a transport CSV without snapshots).
    NormsOnly,
}

/// Time samples of a closed-loop solution together with their `X` norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: States,
    norms: Vec<f64>,
    model: ModelKind,
    rho: f64,
    contraction_ok: Option<bool>,
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => {
            return Err(Error::TrajectoryMismatch(
                "trajectory has no samples".into(),
            ))
        }
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::TrajectoryMismatch(format!(
                "first sample at t = {t0}, expected 0"
            )))
        }
        _ => {}
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::TrajectoryMismatch(format!(
            "times not strictly increasing near t = {}",
            w[0]
        )));
    }
    Ok(())
}

impl Trajectory {
    pub fn modal(times: Vec<f64>, states: Vec<ModalVector>, rho: f64) -> Result<Self> {
        check_times(&times)?;
        if states.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        let norms = states.iter().map(ModalVector::norm).collect();
        Ok(Self {
            times,
            states: States::Modal(states),
            norms,
            model: ModelKind::Heat,
            rho,
            contraction_ok: None,
        })
    }

    pub fn grid(times: Vec<f64>, states: Vec<GridFunction>, rho: f64) -> Result<Self> {
        check_times(&times)?;
        if states.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        let norms = states.iter().map(GridFunction::norm).collect();
        Ok(Self {
            times,
            states: States::Grid(states),
            norms,
            model: ModelKind::Transport,
            rho,
            contraction_ok: None,
        })
    }

    pub fn norms_only(
        times: Vec<f64>,
        norms: Vec<f64>,
        model: ModelKind,
        rho: f64,
    ) -> Result<Self> {
        check_times(&times)?;
        if norms.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: norms.len(),
            });
        }
        Ok(Self {
            times,
            states: States::NormsOnly,
            norms,
            model,
            rho,
            contraction_ok: None,
        })
    }

    pub fn with_contraction_flag(mut self, ok: bool) -> Self {
        self.contraction_ok = Some(ok);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &States {
        &self.states
    }

    pub fn modal_states(&self) -> Option<&[ModalVector]> {
        match &self.states {
            States::Modal(s) => Some(s),
            _ => None,
        }
    }

    pub fn grid_states(&self) -> Option<&[GridFunction]> {
        match &self.states {
            States::Grid(s) => Some(s),
            _ => None,
        }
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn contraction_ok(&self) -> Option<bool> {
        self.contraction_ok
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_norm(&self) -> f64 {
        self.norms[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty by construction")
    }

    /// Index of the sample at time `t`, if one lies within `tol`.
    pub fn index_at(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.times.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }
}
