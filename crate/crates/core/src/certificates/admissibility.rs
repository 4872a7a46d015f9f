//! Lower estimates of the p-admissibility constant
//! `M = sup_u ||int_0^T S(T-s) B u(s) ds||_X / ||u||_{L^p(0,T;X)}`.
//!
//! Every ensemble member is built from pieces `u(s) = d e^{-kappa (T - s)}` on
//! `[a, b)`, for which both the convolution and the `L^p` norm have closed forms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eigenvalue, GridFunction, ModalVector, SpectralDiffusionModel, TransportModel};
use crate::par::Execution;
use crate::semigroup::Propagator;

/// `(e^z - 1) / z`, continuous at 0.
pub(crate) fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// `int_a^b e^{mu (T - s)} ds`.
pub(crate) fn exp_window(mu: f64, horizon: f64, a: f64, b: f64) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    (mu * (horizon - b)).exp() * len * phi1(mu * len)
}

/// Sampling spec shared by the ensemble estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Number of random members.
    pub size: usize,
    pub seed: u64,
    /// Time pieces of the random piecewise-constant inputs.
    pub pieces: usize,
    /// Include the structured per-mode members.
    pub structured: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            size: 200,
            seed: 0x5eed,
            pieces: 8,
            structured: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece<D> {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    pub direction: D,
}

/// Input signal on `[0, horizon]` made of exponential pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal<D> {
    pub label: String,
    pub horizon: f64,
    pub pieces: Vec<Piece<D>>,
}

impl<D: Clone> InputSignal<D> {
    /// Shift onto `[longer - horizon, longer]` and pad with zero in front,
    /// preserving both the convolution at the final time and the `L^p` norm.
    pub fn delayed_to(&self, longer: f64) -> Self {
        let shift = longer - self.horizon;
        assert!(shift >= 0.0, "cannot delay onto a shorter horizon");
        Self {
            label: format!("{}@{}", self.label, self.horizon),
            horizon: longer,
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    start: p.start + shift,
                    end: p.end + shift,
                    rate: p.rate,
                    direction: p.direction.clone(),
                })
                .collect(),
        }
    }
}

fn piece_lp_power(norm: f64, rate: f64, horizon: f64, a: f64, b: f64, p: f64) -> f64 {
    norm.powf(p) * exp_window(-p * rate, horizon, a, b)
}

pub type ModalInput = InputSignal<ModalVector>;

impl ModalInput {
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.pieces
            .iter()
            .map(|pc| {
                piece_lp_power(
                    pc.direction.norm(),
                    pc.rate,
                    self.horizon,
                    pc.start,
                    pc.end,
                    p,
                )
            })
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Convolution `int_0^T S(T-s) B u(s) ds` for the heat model, exact per piece.
pub struct HeatConvolution {
    propagator: Propagator,
    control_eigen: DMatrix<f64>,
}

impl HeatConvolution {
    pub fn new(model: &SpectralDiffusionModel) -> Result<Self> {
        let propagator = Propagator::new(model.open_loop_generator())?;
        let v = propagator.eigenvectors();
        let control_eigen = v.transpose() * model.control_matrix();
        Ok(Self {
            propagator,
            control_eigen,
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn apply(&self, input: &ModalInput) -> ModalVector {
        let n = self.propagator.order();
        let mut acc = DVector::zeros(n);
        for pc in &input.pieces {
            let w = &self.control_eigen * DVector::from_column_slice(pc.direction.coefficients());
            for m in 0..n {
                let mu = self.propagator.eigenvalues()[m] - pc.rate;
                acc[m] += exp_window(mu, input.horizon, pc.start, pc.end) * w[m];
            }
        }
        self.propagator.from_eigen(&acc)
    }

    pub fn ratio(&self, input: &ModalInput, p: f64) -> f64 {
        let denom = input.lp_norm(p);
        if denom == 0.0 {
            return 0.0;
        }
        self.apply(input).norm() / denom
    }

    /// Exact `L^2` gain of the truncated system: square root of the largest
    /// eigenvalue of the controllability Gramian.
    pub fn gramian_gain(&self, horizon: f64) -> Result<f64> {
        let n = self.propagator.order();
        let kk = &self.control_eigen * self.control_eigen.transpose();
        let lam = self.propagator.eigenvalues();
        let w = DMatrix::from_fn(n, n, |r, c| {
            let mu = lam[r] + lam[c];
            kk[(r, c)] * exp_window(mu, horizon, 0.0, horizon)
        });
        let eig = SymmetricEigen::try_new(w, 1e-15, 100_000).ok_or(Error::EigenFailure(n))?;
        Ok(eig.eigenvalues.iter().copied().fold(0.0, f64::max).sqrt())
    }
}

/// Structured and random inputs for the heat model.
pub fn heat_ensemble(order: usize, horizon: f64, p: f64, spec: &EnsembleSpec) -> Vec<ModalInput> {
    let mut out = Vec::new();
    let whole = |label: String, rate: f64, direction: ModalVector| InputSignal {
        label,
        horizon,
        pieces: vec![Piece {
            start: 0.0,
            end: horizon,
            rate,
            direction,
        }],
    };
    if spec.structured {
        for j in 1..=order {
            let e = ModalVector::mode(order, j);
            out.push(whole(format!("constant:{j}"), 0.0, e.clone()));
            out.push(whole(format!("matched:{j}"), eigenvalue(j), e.clone()));
            if (p - 2.0).abs() > 1e-12 {
                out.push(whole(format!("holder:{j}"), eigenvalue(j) / (p - 1.0), e));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pieces = spec.pieces.max(1);
    for k in 0..spec.size {
        let pcs = (0..pieces)
            .map(|q| Piece {
                start: horizon * q as f64 / pieces as f64,
                end: horizon * (q + 1) as f64 / pieces as f64,
                rate: 0.0,
                direction: ModalVector::new(
                    (0..order).map(|_| rng.random_range(-1.0..1.0)).collect(),
                ),
            })
            .collect();
        out.push(InputSignal {
            label: format!("random:{k}"),
            horizon,
            pieces: pcs,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityEstimate {
    /// Largest observed ratio: a lower estimate of the true constant.
    pub m: f64,
    /// Label of the maximizing member.
    pub witness: String,
    pub members: usize,
}

fn pick_max(labels: impl Iterator<Item = String>, ratios: &[f64]) -> AdmissibilityEstimate {
    let mut best = (0.0, String::from("none"));
    let mut count = 0;
    for (label, &r) in labels.zip(ratios) {
        count += 1;
        if r > best.0 {
            best = (r, label);
        }
    }
    AdmissibilityEstimate {
        m: best.0,
        witness: best.1,
        members: count,
    }
}

fn check_horizon(horizon: f64, p: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be > 0, got {horizon}"),
        });
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("need 1 < p < inf, got {p}"),
        });
    }
    Ok(())
}

/// Max ratio over an explicit list of inputs (all sharing `horizon`).
pub fn admissibility_over(
    model: &SpectralDiffusionModel,
    inputs: &[ModalInput],
    p: f64,
    exec: Execution,
) -> Result<AdmissibilityEstimate> {
    if inputs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let conv = HeatConvolution::new(model)?;
    let ratios = exec.map(inputs, |u| conv.ratio(u, p));
    Ok(pick_max(inputs.iter().map(|u| u.label.clone()), &ratios))
}

/// Lower estimate of `M` for the heat model on `[0, horizon]`.
pub fn estimate_admissibility_m(
    model: &SpectralDiffusionModel,
    horizon: f64,
    p: f64,
    spec: &EnsembleSpec,
) -> Result<AdmissibilityEstimate> {
    check_horizon(horizon, p)?;
    let inputs = heat_ensemble(model.order(), horizon, p, spec);
    let mut est = admissibility_over(model, &inputs, p, Execution::default())?;
    if spec.structured && (p - 2.0).abs() < 1e-12 {
        let g = HeatConvolution::new(model)?.gramian_gain(horizon)?;
        est.members += 1;
        if g > est.m {
            est.m = g;
            est.witness = "gramian".into();
        }
    }
    Ok(est)
}

pub type GridInput = InputSignal<GridFunction>;

impl GridInput {
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.pieces
            .iter()
            .map(|pc| {
                piece_lp_power(
                    pc.direction.norm(),
                    pc.rate,
                    self.horizon,
                    pc.start,
                    pc.end,
                    p,
                )
            })
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `u(s)` evaluated at grid node `i`.
    fn value(&self, s: f64, i: usize) -> f64 {
        self.pieces
            .iter()
            .find(|pc| s >= pc.start && s < pc.end || (s == self.horizon && pc.end == self.horizon))
            .map_or(0.0, |pc| {
                pc.direction.values()[i] * (-pc.rate * (self.horizon - s)).exp()
            })
    }

    fn psi_at(&self, model: &TransportModel, s: f64) -> f64 {
        self.pieces
            .iter()
            .find(|pc| s >= pc.start && s < pc.end || (s == self.horizon && pc.end == self.horizon))
            .map_or(0.0, |pc| {
                model.psi(&pc.direction) * (-pc.rate * (self.horizon - s)).exp()
            })
    }
}

/// Convolution for the transport model, integrated along characteristics with the
/// trapezoid rule on grid nodes:
/// `y(z) = int_0^T e^{-alpha(T-s)} (h u(s))(z + T - s) ds + e^{-alpha(1-z)} psi(u(T - 1 + z))`.
pub fn transport_convolution(model: &TransportModel, input: &GridInput) -> GridFunction {
    let n = model.grid_size();
    let dz = model.spacing();
    let horizon = input.horizon;
    let h = model.h().values();
    let alpha = model.alpha();
    let reach = ((horizon / dz) + 1e-9).floor() as usize;
    let mut out = GridFunction::zeros(n);
    for (i, y) in out.values_mut().iter_mut().enumerate() {
        // nodes k = i..=i+reach along the characteristic, travel time tau = (k - i) dz
        let top = (i + reach).min(n - 1);
        let mut acc = 0.0;
        for k in i..top {
            let g = |k: usize| {
                let tau = (k - i) as f64 * dz;
                (-alpha * tau).exp() * h[k] * input.value(horizon - tau, k)
            };
            acc += 0.5 * dz * (g(k) + g(k + 1));
        }
        let z = i as f64 * dz;
        if z > 1.0 - horizon {
            acc += (-alpha * (1.0 - z)).exp() * input.psi_at(model, horizon - (1.0 - z));
        }
        *y = acc;
    }
    out
}

pub fn transport_ensemble(
    model: &TransportModel,
    horizon: f64,
    p: f64,
    spec: &EnsembleSpec,
) -> Vec<GridInput> {
    let n = model.grid_size();
    let alpha = model.alpha();
    let mut out = Vec::new();
    let whole = |label: &str, rate: f64, direction: GridFunction| InputSignal {
        label: label.to_string(),
        horizon,
        pieces: vec![Piece {
            start: 0.0,
            end: horizon,
            rate,
            direction,
        }],
    };
    if spec.structured {
        let f = model.f().clone();
        let one = GridFunction::constant(n, 1.0);
        let h = model.h().clone();
        for (name, dir) in [("f", f), ("one", one), ("h", h)] {
            out.push(whole(&format!("constant:{name}"), 0.0, dir.clone()));
            out.push(whole(&format!("matched:{name}"), alpha / (p - 1.0), dir));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pieces = spec.pieces.max(1);
    for k in 0..spec.size {
        let pcs = (0..pieces)
            .map(|q| {
                let amps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                Piece {
                    start: horizon * q as f64 / pieces as f64,
                    end: horizon * (q + 1) as f64 / pieces as f64,
                    rate: 0.0,
                    direction: GridFunction::from_fn(n, |z| {
                        amps.iter()
                            .enumerate()
                            .map(|(m, a)| a * (m as f64 * std::f64::consts::PI * z).cos())
                            .sum()
                    }),
                }
            })
            .collect();
        out.push(InputSignal {
            label: format!("random:{k}"),
            horizon,
            pieces: pcs,
        });
    }
    out
}

/// Lower estimate of `M` for the transport model's full control operator
/// (bounded part `h` plus the boundary injection through `psi`).
pub fn estimate_transport_admissibility_m(
    model: &TransportModel,
    horizon: f64,
    p: f64,
    spec: &EnsembleSpec,
) -> Result<AdmissibilityEstimate> {
    check_horizon(horizon, p)?;
    let inputs = transport_ensemble(model, horizon, p, spec);
    if inputs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let ratios = Execution::default().map(&inputs, |u| {
        let d = u.lp_norm(p);
        if d == 0.0 {
            0.0
        } else {
            transport_convolution(model, u).norm() / d
        }
    });
    Ok(pick_max(inputs.iter().map(|u| u.label.clone()), &ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sqrt_eigenvalue, ControlOperator};

    #[test]
    fn exp_window_matches_quadrature() {
        let (mu, t, a, b) = (-3.0, 1.2, 0.1, 0.9);
        let m = 20_000;
        let h = (b - a) / m as f64;
        let quad: f64 = (0..m)
            .map(|k| {
                let s = a + (k as f64 + 0.5) * h;
                (mu * (t - s)).exp() * h
            })
            .sum();
        assert!((exp_window(mu, t, a, b) - quad).abs() < 1e-9);
    }

    #[test]
    fn disabled_channel_gives_zero() {
        let m = SpectralDiffusionModel::unperturbed(8, 33, 0.0)
            .unwrap()
            .with_control(ControlOperator::Disabled);
        let est = estimate_admissibility_m(
            &m,
            1.0,
            2.0,
            &EnsembleSpec {
                size: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(est.m, 0.0);
    }

    #[test]
    fn constant_mode_input_ratio_closed_form() {
        let m = SpectralDiffusionModel::unperturbed(6, 33, 0.0).unwrap();
        let conv = HeatConvolution::new(&m).unwrap();
        let (t, p) = (0.3, 3.0);
        for j in 1..=6 {
            let u = InputSignal {
                label: String::new(),
                horizon: t,
                pieces: vec![Piece {
                    start: 0.0,
                    end: t,
                    rate: 0.0,
                    direction: ModalVector::mode(6, j),
                }],
            };
            let a = eigenvalue(j);
            let expect = (1.0 - (-a * t).exp()) / (a.sqrt() * t.powf(1.0 / p));
            let got = conv.ratio(&u, p);
            assert!((got - expect).abs() <= 1e-12 * expect, "j={j}");
        }
        let _ = sqrt_eigenvalue(1);
    }

    #[test]
    fn empty_ensemble_is_an_error() {
        let m = SpectralDiffusionModel::unperturbed(4, 17, 0.0).unwrap();
        let spec = EnsembleSpec {
            size: 0,
            structured: false,
            ..Default::default()
        };
        assert_eq!(
            estimate_admissibility_m(&m, 1.0, 2.0, &spec),
            Err(Error::EmptyEnsemble)
        );
    }

    #[test]
    fn diagonal_l2_gain_is_attained_by_matched_inputs() {
        let m = SpectralDiffusionModel::unperturbed(16, 65, 0.0).unwrap();
        let est = estimate_admissibility_m(
            &m,
            1.0,
            2.0,
            &EnsembleSpec {
                size: 20,
                ..Default::default()
            },
        )
        .unwrap();
        // sup_j ((1 - e^{-2 alpha_j T}) / 2)^(1/2)
        let exact = ((1.0 - (-2.0 * eigenvalue(16)).exp()) / 2.0).sqrt();
        assert!((est.m - exact).abs() < 1e-12);
    }

    #[test]
    fn transport_boundary_input_matches_closed_form() {
        // h = 0 is not allowed, so isolate the boundary term with a tiny h and
        // compare against e^{-alpha(1 - z)} psi(u)
        let n = 257;
        let model = TransportModel::uniform(n, 1.0, 1e-12, 1.0, 0.0).unwrap();
        let u = InputSignal {
            label: String::new(),
            horizon: 1.0,
            pieces: vec![Piece {
                start: 0.0,
                end: 1.0,
                rate: 0.0,
                direction: GridFunction::constant(n, 1.0),
            }],
        };
        let y = transport_convolution(&model, &u);
        for (i, v) in y.values().iter().enumerate().skip(1) {
            let z = y.node(i);
            assert!((v - (-(1.0 - z)).exp()).abs() < 1e-9, "z={z}");
        }
    }
}
