//! Pure-state tomography.
//!
//! Two backends share one contract. The `model` backend samples the output
//! law of an ideal tomography routine directly: a phase-randomised estimate
//! `phi sqrt(1 - e^2) |psi> + e |w>` with `e <= eps` except on a failure event
//! of probability `delta`. The `empirical` backend measures every copy in a
//! Haar-random basis and inverts the measurement channel.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian, haar_unitary, random_phase, CMatrix, CVector};
use crate::sim::{ProjectedCopies, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TomoBackend {
    #[default]
    Model,
    Empirical,
}

impl fmt::Display for TomoBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TomoBackend::Model => "model",
            TomoBackend::Empirical => "empirical",
        })
    }
}

impl FromStr for TomoBackend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(TomoBackend::Model),
            "empirical" => Ok(TomoBackend::Empirical),
            _ => Err(Error::Config(format!("unknown tomography backend {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomoResult {
    pub estimate: StateVector,
    pub copies_charged: u64,
    pub backend: TomoBackend,
    /// Trace distance the model backend injected; `None` for the empirical
    /// backend.
    pub injected_error: Option<f64>,
}

/// `ceil(c (2^m + ln(1/delta)) / eps^2)`.
pub fn tomo_copies(c: f64, m: usize, eps: f64, delta: f64) -> u64 {
    tomo_copies_ln(c, m, eps, (1.0 / delta).ln())
}

/// As [`tomo_copies`] with `ln(1/delta)` passed directly, for failure
/// probabilities too small to represent.
pub fn tomo_copies_ln(c: f64, m: usize, eps: f64, ln_inv_delta: f64) -> u64 {
    (c * ((1u64 << m) as f64 + ln_inv_delta) / (eps * eps)).ceil() as u64
}

/// Haar-random unit vector orthogonal to `psi`.
fn orthogonal_direction<R: Rng + ?Sized>(psi: &CVector, rng: &mut R) -> CVector {
    loop {
        let g = CVector::from_fn(psi.len(), |_, _| gaussian(rng));
        let w = &g - psi * psi.dotc(&g);
        let nrm = w.norm();
        if nrm > 1e-8 {
            return w / Complex64::new(nrm, 0.0);
        }
    }
}

/// Samples the ideal tomography output law. `ln_inv_delta` is the natural
/// log of the inverse failure probability.
pub fn tomo_model_ln<R: Rng + ?Sized>(
    target: &StateVector,
    eps: f64,
    ln_inv_delta: f64,
    c_tomo: f64,
    rng: &mut R,
) -> Result<TomoResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("tomography accuracy {eps} outside (0, 1)")));
    }
    let m = target.n();
    let psi = target.amps();
    let fail = rng.random::<f64>() < (-ln_inv_delta).exp();
    let e = if fail {
        eps + (eps.min(1.0 - eps)) * (1.0 - rng.random::<f64>())
    } else {
        eps * rng.random::<f64>()
    };
    let amps = if psi.len() == 1 {
        psi.clone()
    } else {
        let w = orthogonal_direction(psi, rng);
        psi * Complex64::new((1.0 - e * e).sqrt(), 0.0) + w * Complex64::new(e, 0.0)
    };
    let phase = random_phase(rng);
    Ok(TomoResult {
        estimate: StateVector::normalized(amps * phase)?,
        copies_charged: tomo_copies_ln(c_tomo, m, eps, ln_inv_delta),
        backend: TomoBackend::Model,
        injected_error: Some(if psi.len() == 1 { 0.0 } else { e }),
    })
}

pub fn tomo_model<R: Rng + ?Sized>(
    target: &StateVector,
    eps: f64,
    delta: f64,
    c_tomo: f64,
    rng: &mut R,
) -> Result<TomoResult> {
    tomo_model_ln(target, eps, (1.0 / delta).ln(), c_tomo, rng)
}

/// Source of identical copies of an unknown state.
pub trait CopySource {
    fn next_copy(&mut self) -> Option<StateVector>;
}

/// Hands out a fixed number of copies of one state.
pub struct RepeatedState {
    state: StateVector,
    remaining: u64,
}

impl RepeatedState {
    pub fn new(state: StateVector, copies: u64) -> Self {
        RepeatedState {
            state,
            remaining: copies,
        }
    }
}

impl CopySource for RepeatedState {
    fn next_copy(&mut self) -> Option<StateVector> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.state.clone())
    }
}

impl From<ProjectedCopies> for RepeatedState {
    fn from(p: ProjectedCopies) -> Self {
        RepeatedState::new(p.state, p.copies)
    }
}

/// Random-basis measurements and linear inversion. Uses
/// `c_emp * tomo_copies(c_tomo, ..)` copies.
#[allow(clippy::too_many_arguments)]
pub fn tomo_empirical<R: Rng + ?Sized>(
    source: &mut dyn CopySource,
    m: usize,
    eps: f64,
    ln_inv_delta: f64,
    c_tomo: f64,
    c_emp: f64,
    rng: &mut R,
) -> Result<TomoResult> {
    let copies = (c_emp * tomo_copies_ln(c_tomo, m, eps, ln_inv_delta) as f64).ceil() as u64;
    let d = 1usize << m;
    let mut acc = CMatrix::zeros(d, d);
    for _ in 0..copies {
        let psi = source.next_copy().ok_or(Error::ProviderExhausted)?;
        if psi.n() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: psi.n(),
            });
        }
        let basis = haar_unitary(d, rng);
        let amps = basis.adjoint() * psi.amps();
        let w = WeightedIndex::new(amps.iter().map(|a| a.norm_sqr())).map_err(|e| Error::Degenerate(e.to_string()))?;
        let k = w.sample(rng);
        let u = basis.column(k);
        acc += u * u.adjoint();
    }
    // E[|u><u|] = (rho + I) / (d + 1)
    let rho = acc * Complex64::new((d as f64 + 1.0) / copies as f64, 0.0) - CMatrix::identity(d, d);
    let eig = SymmetricEigen::new(rho);
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(TomoResult {
        estimate: StateVector::normalized(eig.eigenvectors.column(top).into_owned())?,
        copies_charged: copies,
        backend: TomoBackend::Empirical,
        injected_error: None,
    })
}
