//! Learner dispatch shared by `learn` and `sweep`.

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pauli_learn::circuit::DenseUnitary;
use pauli_learn::composed::{double_system, learn_composed};
use pauli_learn::dimension::{learn_junta, learn_kdim, learn_kdim_base, SupportAccess};
use pauli_learn::instances::Witness;
use pauli_learn::params::LearnParams;
use pauli_learn::report::LearnReport;
use pauli_learn::sim::{HeisenbergOrder, QueryOracle};
use pauli_learn::{CMatrix, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    KdimFwd,
    KdimInv,
    Junta,
    KdimBase,
    Composed,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::KdimFwd => "kdim-fwd",
            LearnerKind::KdimInv => "kdim-inv",
            LearnerKind::Junta => "junta",
            LearnerKind::KdimBase => "kdim-base",
            LearnerKind::Composed => "composed",
        }
    }

    fn uses_inverse(self) -> bool {
        matches!(self, LearnerKind::KdimInv | LearnerKind::Composed)
    }
}

/// Structural promises handed to a learner.
#[derive(Clone, Debug, Default)]
pub struct Bounds {
    /// Pauli dimension for the k-dimensional learners, junta size for `junta`.
    pub k: Option<usize>,
    pub depth: Option<usize>,
    pub nullity: Option<usize>,
    pub order: Option<HeisenbergOrder>,
}

impl Bounds {
    /// Fills whatever the command line left open from a witness.
    pub fn or_from_witness(mut self, kind: LearnerKind, w: &Witness) -> Self {
        if self.k.is_none() {
            self.k = match kind {
                LearnerKind::Junta => w.junta_qubits.as_ref().map(Vec::len),
                _ => match (w.a, w.b, &w.junta_qubits) {
                    (Some(a), Some(b), _) => Some(2 * a + b),
                    (_, _, Some(q)) => Some(2 * q.len()),
                    _ => None,
                },
            };
        }
        self.depth = self.depth.or(w.depth);
        self.nullity = self.nullity.or(w.nullity).or(w.t.map(|t| 2 * t));
        self.order = self.order.or(w.order);
        self
    }

    fn need(v: Option<usize>, what: &str) -> Result<usize, Error> {
        v.ok_or_else(|| Error::Config(format!("{what} is required; pass it as a flag or supply a witness")))
    }
}

/// Outcome of one learner run. `Err` is reserved for usage problems; learner
/// failures come back as a failed report.
pub struct RunOutcome {
    pub report: LearnReport,
    pub failed: bool,
}

pub fn is_usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse(_) | Error::TooManyQubits { .. })
}

/// Runs `kind` against a fresh oracle for `u`. Scores the estimate against
/// `u` when `score` is set.
pub fn run_learner(
    kind: LearnerKind,
    u: &DenseUnitary,
    bounds: &Bounds,
    params: &LearnParams,
    seed: u64,
    score: bool,
) -> Result<RunOutcome, Error> {
    params.validate()?;
    if u.n() > params.dense_cap {
        return Err(Error::TooManyQubits {
            n: u.n(),
            cap: params.dense_cap,
        });
    }
    let oracle = QueryOracle::new(u.clone(), kind.uses_inverse());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result: Result<(LearnReport, CMatrix, CMatrix), Error> = match kind {
        LearnerKind::Composed => {
            let depth = Bounds::need(bounds.depth, "depth bound")?;
            let nullity = Bounds::need(bounds.nullity, "nullity bound")?;
            let order = bounds.order.unwrap_or(HeisenbergOrder::AdjointFirst);
            if 2 * u.n() > params.dense_cap {
                return Err(Error::TooManyQubits {
                    n: 2 * u.n(),
                    cap: params.dense_cap,
                });
            }
            learn_composed(&oracle, depth, nullity, order, params, &mut rng)
                .map(|(est, rep)| (rep, double_system(u.matrix()), est.dense()))
        }
        _ => {
            let k = Bounds::need(bounds.k, "dimension bound")?;
            let learned = match kind {
                LearnerKind::KdimFwd => learn_kdim(&oracle, k, SupportAccess::Forward, params, &mut rng),
                LearnerKind::KdimInv => learn_kdim(&oracle, k, SupportAccess::Inverse, params, &mut rng),
                LearnerKind::KdimBase => learn_kdim_base(&oracle, k, SupportAccess::Forward, params, &mut rng),
                _ => learn_junta(&oracle, k, params, &mut rng),
            };
            learned.and_then(|(est, rep)| Ok((rep, u.matrix().clone(), est.dense(params.dense_cap)?)))
        }
    };
    let (mut report, failed) = match result {
        Ok((mut rep, truth, est)) => {
            if score {
                rep.score_full(&truth, &est)?;
            }
            (rep, false)
        }
        Err(e) if is_usage_error(&e) => return Err(e),
        Err(e) => {
            let mut rep = LearnReport::failed(kind.name(), u.n(), params.eps, params.delta, &e);
            rep.queries = oracle.counts().into();
            (rep, true)
        }
    };
    report.seed = Some(seed);
    report.config = Some(params.clone());
    Ok(RunOutcome { report, failed })
}
