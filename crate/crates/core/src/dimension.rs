//! Learning unitaries with low Pauli dimension.
//!
//! The pipeline: sample the Pauli support from Bell measurements of the
//! Choi state (or by amplified sampling when inverse queries are allowed),
//! find a Clifford that maps the sampled subgroup onto the canonical
//! subgroup `W_{a,b}`, learn the conjugated oracle as a block-diagonal
//! unitary, and finally bootstrap that constant-accuracy learner to `1/eps`
//! query scaling by learning successive powers of the residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockdiag::{learn_block_diag, BlockDiagUnitary};
use crate::clifford::{clifford_to_block, qubits_to_end, CliffordOp};
use crate::error::{Error, Result};
use crate::f2::Subspace;
use crate::linalg::{principal_root, CMatrix};
use crate::params::LearnParams;
use crate::report::{matrix_rows, LearnReport, QueryTotals};
use crate::sim::{amplified_support_sample, bell_sample_counts, QueryCounts, QueryOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    ForwardOnly,
    WithInverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    pub subspace: Subspace,
    pub queries: QueryCounts,
    pub mode: SupportMode,
}

/// Bell samples drawn by [`learn_support_forward`]:
/// `ceil(2 (k + ln(1/delta)) / eps_sup)`.
pub fn forward_sample_count(k_bound: usize, eps_sup: f64, delta: f64) -> u64 {
    (2.0 * (k_bound as f64 + (1.0 / delta).ln()) / eps_sup).ceil() as u64
}

fn add_bell_samples<R: Rng + ?Sized>(oracle: &QueryOracle, mut s: Subspace, m: u64, rng: &mut R) -> Result<Subspace> {
    for (v, _) in bell_sample_counts(oracle, m, rng)? {
        s.insert(v)?;
    }
    Ok(s)
}

fn check_support_args(eps_sup: f64, delta: f64) -> Result<()> {
    if !(eps_sup > 0.0 && eps_sup <= 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("eps_sup={eps_sup}, delta={delta} out of range")));
    }
    Ok(())
}

/// Span of Bell samples, using forward queries only.
pub fn learn_support_forward<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k_bound: usize,
    eps_sup: f64,
    delta: f64,
    rng: &mut R,
) -> Result<SupportEstimate> {
    check_support_args(eps_sup, delta)?;
    let start = oracle.counts();
    let m = forward_sample_count(k_bound, eps_sup, delta);
    let subspace = add_bell_samples(oracle, Subspace::zero(oracle.n()), m, rng)?;
    Ok(SupportEstimate {
        subspace,
        queries: oracle.counts() - start,
        mode: SupportMode::ForwardOnly,
    })
}

fn grow_support_inverse<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    mut found: Subspace,
    k_bound: usize,
    eps_sup: f64,
    delta: f64,
    amp_const: f64,
    rng: &mut R,
) -> Result<Subspace> {
    let per_call = delta / k_bound.max(1) as f64;
    for _ in 0..k_bound.max(1) {
        match amplified_support_sample(oracle, &found, eps_sup, per_call, amp_const, rng)? {
            Some(v) => {
                found.insert(v)?;
            }
            None => break,
        }
    }
    Ok(found)
}

/// Grows the support one new direction at a time by amplified sampling
/// outside the current span.
pub fn learn_support_inverse<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k_bound: usize,
    eps_sup: f64,
    delta: f64,
    amp_const: f64,
    rng: &mut R,
) -> Result<SupportEstimate> {
    check_support_args(eps_sup, delta)?;
    if !oracle.allows_inverse() {
        return Err(Error::InverseUnavailable);
    }
    let start = oracle.counts();
    let subspace = grow_support_inverse(
        oracle,
        Subspace::zero(oracle.n()),
        k_bound,
        eps_sup,
        delta,
        amp_const,
        rng,
    )?;
    Ok(SupportEstimate {
        subspace,
        queries: oracle.counts() - start,
        mode: SupportMode::WithInverse,
    })
}

/// Learned unitary `C^† (I ⊗ ⊕ V_y) C`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredEstimate {
    pub clifford: CliffordOp,
    pub blockdiag: BlockDiagUnitary,
}

impl StructuredEstimate {
    pub fn n(&self) -> usize {
        self.blockdiag.n()
    }

    pub fn a(&self) -> usize {
        self.blockdiag.a()
    }

    pub fn b(&self) -> usize {
        self.blockdiag.b()
    }

    pub fn dense(&self, cap: usize) -> Result<CMatrix> {
        let c = self.clifford.dense(cap)?;
        Ok(c.adjoint() * self.blockdiag.dense() * c)
    }

    fn fill_report(&self, report: &mut LearnReport) {
        report.a = Some(self.a());
        report.b = Some(self.b());
        report.clifford = self.clifford.gates().iter().map(|g| g.to_string()).collect();
        report.blocks = self.blockdiag.blocks().iter().map(matrix_rows).collect();
    }
}

/// Which queries the support stage may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportAccess {
    Forward,
    Inverse,
}

impl SupportAccess {
    fn mode(self) -> SupportMode {
        match self {
            SupportAccess::Forward => SupportMode::ForwardOnly,
            SupportAccess::Inverse => SupportMode::WithInverse,
        }
    }
}

/// The canonical-frame problem left after support learning.
struct Reduction {
    support: SupportEstimate,
    clifford: CliffordOp,
    a: usize,
    b: usize,
    conjugated: QueryOracle,
}

/// Samples the support to `eps/K`, decomposes it, and tops the samples up
/// once if the found `(a, b)` calls for the finer `eps / (K 2^{a+b})`.
fn reduce<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k_bound: usize,
    access: SupportAccess,
    params: &LearnParams,
    rng: &mut R,
) -> Result<Reduction> {
    let start = oracle.counts();
    let coarse = params.eps / params.support_k;
    let delta = params.delta / 4.0;
    let sample = |found: Subspace, eps_sup: f64, already: u64, rng: &mut R| -> Result<Subspace> {
        match access {
            SupportAccess::Forward => {
                let m = forward_sample_count(k_bound, eps_sup, delta);
                add_bell_samples(oracle, found, m.saturating_sub(already), rng)
            }
            SupportAccess::Inverse => {
                grow_support_inverse(oracle, found, k_bound, eps_sup, delta, params.amp_query_const, rng)
            }
        }
    };
    let mut subspace = sample(Subspace::zero(oracle.n()), coarse, 0, rng)?;
    let (_, a, b) = clifford_to_block(&subspace)?;
    let fine = params.eps / (params.support_k * (1u64 << (a + b)) as f64);
    if fine < coarse {
        let already = forward_sample_count(k_bound, coarse, delta);
        subspace = sample(subspace, fine, already, rng)?;
    }
    let (clifford, a, b) = clifford_to_block(&subspace)?;
    let conjugated = oracle.conjugated(&clifford.dense(params.dense_cap)?)?;
    Ok(Reduction {
        support: SupportEstimate {
            subspace,
            queries: oracle.counts() - start,
            mode: access.mode(),
        },
        clifford,
        a,
        b,
        conjugated,
    })
}

fn support_strings(s: &Subspace) -> Vec<String> {
    s.basis().iter().map(|v| v.to_string()).collect()
}

/// Support learning, Clifford reduction and one block-diagonal learning
/// pass at accuracy `eps`. No bootstrapping.
pub fn learn_kdim_base<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k_bound: usize,
    access: SupportAccess,
    params: &LearnParams,
    rng: &mut R,
) -> Result<(StructuredEstimate, LearnReport)> {
    params.validate()?;
    let start = oracle.counts();
    let red = reduce(oracle, k_bound, access, params, rng)?;
    let (blockdiag, _) = learn_block_diag(&red.conjugated, red.a, red.b, params, rng)?;
    let est = StructuredEstimate {
        clifford: red.clifford,
        blockdiag,
    };
    let mut report = LearnReport::new("kdim-base", oracle.n(), params.eps, params.delta);
    est.fill_report(&mut report);
    report.support = support_strings(&red.support.subspace);
    report.queries = QueryTotals::from(oracle.counts() - start);
    Ok((est, report))
}

/// A constant-accuracy learner for block-diagonal unitaries in the
/// canonical frame.
pub trait BaseLearner: Sync {
    fn learn(
        &self,
        oracle: &QueryOracle,
        a: usize,
        b: usize,
        params: &LearnParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<BlockDiagUnitary>;
}

/// [`learn_block_diag`] as a base learner.
pub struct ColumnTomography;

impl BaseLearner for ColumnTomography {
    fn learn(
        &self,
        oracle: &QueryOracle,
        a: usize,
        b: usize,
        params: &LearnParams,
        rng: &mut ChaCha8Rng,
    ) -> Result<BlockDiagUnitary> {
        learn_block_diag(oracle, a, b, params, rng).map(|(v, _)| v)
    }
}

/// Reads the simulated unitary directly and charges nothing. Only useful for
/// checking the bootstrap schedule in isolation.
pub struct ExactReadout;

impl BaseLearner for ExactReadout {
    fn learn(
        &self,
        oracle: &QueryOracle,
        a: usize,
        b: usize,
        _params: &LearnParams,
        _rng: &mut ChaCha8Rng,
    ) -> Result<BlockDiagUnitary> {
        BlockDiagUnitary::from_dense(oracle.effective_unitary(), a, b)
    }
}

/// Doubling rounds after the initial run: `max(0, ceil(log2(e0 / eps)))`.
pub fn bootstrap_rounds(base_error: f64, eps: f64) -> usize {
    (base_error / eps).log2().ceil().max(0.0) as usize
}

/// Index of the estimate with the smallest median distance to the others,
/// and that median.
fn cluster_median(estimates: &[BlockDiagUnitary]) -> Result<(usize, f64)> {
    let k = estimates.len();
    if k == 1 {
        return Ok((0, 0.0));
    }
    let inner: Vec<CMatrix> = estimates.iter().map(|e| e.inner()).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| crate::metrics::dist_phaseop(&inner[i], &inner[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![vec![0.0; k]; k];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        table[i][j] = d;
        table[j][i] = d;
    }
    let mut best = (0, f64::INFINITY);
    for (i, row) in table.iter().enumerate() {
        let mut others: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .collect();
        others.sort_by(f64::total_cmp);
        let med = others[others.len() / 2];
        if med < best.1 {
            best = (i, med);
        }
    }
    Ok(best)
}

/// Runs the base learner `reps` times on independent streams and keeps the
/// most central estimate.
fn amplified_base(
    oracle: &QueryOracle,
    base: &dyn BaseLearner,
    a: usize,
    b: usize,
    params: &LearnParams,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BlockDiagUnitary> {
    let seeds: Vec<u64> = (0..reps).map(|_| rng.random()).collect();
    let runs: Vec<Result<BlockDiagUnitary>> = seeds
        .par_iter()
        .map(|&s| base.learn(oracle, a, b, params, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect();
    let ok: Vec<BlockDiagUnitary> = runs.into_iter().filter_map(|r| r.ok()).collect();
    if ok.len() * 2 <= reps {
        return Err(Error::learner(
            "bootstrap",
            format!("only {} of {reps} base runs succeeded", ok.len()),
        ));
    }
    let (idx, spread) = cluster_median(&ok)?;
    if spread > params.bootstrap_base_error {
        return Err(Error::learner(
            "bootstrap",
            format!("base estimates too dispersed (median distance {spread:.3})"),
        ));
    }
    Ok(ok.into_iter().nth(idx).expect("index in range"))
}

/// Outcome of [`bootstrap`].
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapOutcome {
    pub estimate: BlockDiagUnitary,
    pub rounds: usize,
    pub queries: QueryCounts,
}

/// Heisenberg-limited learning of an `(a, b)`-block-diagonal oracle.
///
/// Round 0 learns `U` itself. Round `r >= 1` learns the residual power
/// `(U W^†)^{2^r}` to constant accuracy, takes its principal `2^r`-th root
/// and folds it into `W`. Each round runs the base learner
/// `params.reps_for(delta)` times and keeps the most central output.
pub fn bootstrap(
    oracle: &QueryOracle,
    base: &dyn BaseLearner,
    a: usize,
    b: usize,
    params: &LearnParams,
    rng: &mut ChaCha8Rng,
) -> Result<BootstrapOutcome> {
    params.validate()?;
    let start = oracle.counts();
    let rounds = bootstrap_rounds(params.bootstrap_base_error, params.eps);
    let reps = params.reps_for(params.delta);
    let base_params = LearnParams {
        eps: params.bootstrap_base_eps,
        ..params.clone()
    };
    let n = oracle.n();
    let mut w = amplified_base(oracle, base, a, b, &base_params, reps, rng)?;
    for r in 1..=rounds {
        let power = 1u64 << r;
        let derived = oracle.residual_power(&w.dense(), power)?;
        let v = amplified_base(&derived, base, a, b, &base_params, reps, rng)?;
        let root = principal_root(&v.inner(), power).map_err(|e| match e {
            Error::BranchAmbiguity(t) => {
                Error::learner("bootstrap", format!("round {r}: eigenphase {t:.3} at the branch cut"))
            }
            other => other,
        })?;
        let root = BlockDiagUnitary::from_dense(&root, a, b)?;
        let root = BlockDiagUnitary::new(n, a, b, root.blocks().to_vec())?;
        w = root.mul(&w)?;
    }
    Ok(BootstrapOutcome {
        estimate: w,
        rounds,
        queries: oracle.counts() - start,
    })
}

/// Support learning, Clifford reduction and the bootstrapped block learner.
pub fn learn_kdim<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k_bound: usize,
    access: SupportAccess,
    params: &LearnParams,
    rng: &mut R,
) -> Result<(StructuredEstimate, LearnReport)> {
    params.validate()?;
    let start = oracle.counts();
    let red = reduce(oracle, k_bound, access, params, rng)?;
    let mut stream = ChaCha8Rng::seed_from_u64(rng.random());
    let out = bootstrap(&red.conjugated, &ColumnTomography, red.a, red.b, params, &mut stream)?;
    let est = StructuredEstimate {
        clifford: red.clifford,
        blockdiag: out.estimate,
    };
    let name = match access {
        SupportAccess::Forward => "kdim-fwd",
        SupportAccess::Inverse => "kdim-inv",
    };
    let mut report = LearnReport::new(name, oracle.n(), params.eps, params.delta);
    est.fill_report(&mut report);
    report.support = support_strings(&red.support.subspace);
    report.rounds = Some(out.rounds);
    report.queries = QueryTotals::from(oracle.counts() - start);
    Ok((est, report))
}

/// Learns a unitary acting on at most `k` unknown qubits, with forward
/// queries only. The report lists the qubits found (1-based).
pub fn learn_junta<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    k: usize,
    params: &LearnParams,
    rng: &mut R,
) -> Result<(StructuredEstimate, LearnReport)> {
    params.validate()?;
    let n = oracle.n();
    let start = oracle.counts();
    let eps_sup = params.eps / (params.support_k * (1u64 << (2 * k).min(62)) as f64);
    let support = learn_support_forward(oracle, 2 * k, eps_sup, params.delta / 4.0, rng)?;
    let qubits = support.subspace.qubit_support();
    if qubits.len() > k {
        return Err(Error::learner(
            "junta support",
            format!("support touches {} qubits, more than k = {k}", qubits.len()),
        ));
    }
    let clifford = qubits_to_end(n, &qubits)?;
    let conjugated = oracle.conjugated(&clifford.dense(params.dense_cap)?)?;
    let mut stream = ChaCha8Rng::seed_from_u64(rng.random());
    let out = bootstrap(&conjugated, &ColumnTomography, qubits.len(), 0, params, &mut stream)?;
    let est = StructuredEstimate {
        clifford,
        blockdiag: out.estimate,
    };
    let mut report = LearnReport::new("junta", n, params.eps, params.delta);
    est.fill_report(&mut report);
    report.support = support_strings(&support.subspace);
    report.junta_qubits = Some(qubits.iter().map(|q| q + 1).collect());
    report.rounds = Some(out.rounds);
    report.queries = QueryTotals::from(oracle.counts() - start);
    Ok((est, report))
}
