//! Learning `U^† ⊗ U` when `U` is a shallow circuit composed with a
//! Clifford circuit carrying a few non-Clifford gates.
//!
//! Write `SWAP_i` for the swap of qubit `i` with its partner in a second
//! copy of the register. Then
//!
//! ```text
//! U^† ⊗ U = [ prod_i (U^† ⊗ I) SWAP_i (U ⊗ I) ] SWAP
//! (U^† ⊗ I) SWAP_i (U ⊗ I) = (I ⊗ I + sum_P U^† P_i U ⊗ P_i) / 2
//! ```
//!
//! so it is enough to learn the `3n` Heisenberg-evolved single-qubit Paulis
//! `U^† P_i U`, each of which has low Pauli dimension for this class.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::DenseUnitary;
use crate::dimension::{learn_kdim, SupportAccess};
use crate::error::{Error, Result};
use crate::f2::{PauliVec, Subspace};
use crate::linalg::{eigenvalues, identity, kron, polar_unitary, CMatrix};
use crate::params::LearnParams;
use crate::pauli::{pauli_expand, support_span, PauliOperator};
use crate::report::{matrix_rows, LearnReport, QueryTotals};
use crate::sim::{HeisenbergOrder, QueryOracle};

/// Largest `n` for which [`clifford_nullity`] runs its exhaustive search.
pub const NULLITY_CAP: usize = 6;

/// The three Pauli letters, in the order the factors use them.
pub const LETTERS: [char; 3] = ['X', 'Y', 'Z'];

/// Hermitian Pauli `P` on qubit `q` of `n`.
pub fn single_qubit_pauli(n: usize, q: usize, letter: char) -> PauliOperator {
    let mut v = PauliVec::zero(n);
    match letter {
        'X' => v.set_x(q, true),
        'Y' => {
            v.set_x(q, true);
            v.set_z(q, true);
        }
        'Z' => v.set_z(q, true),
        _ => panic!("not a Pauli letter: {letter}"),
    }
    PauliOperator::new(v, 0)
}

/// `U^† P U` (adjoint first) or `U P U^†` (forward first).
pub fn heisenberg_pauli_oracle(oracle: &QueryOracle, p: &PauliOperator, order: HeisenbergOrder) -> Result<QueryOracle> {
    oracle.heisenberg(p, order)
}

fn evolved(u: &CMatrix, p: &CMatrix, order: HeisenbergOrder) -> CMatrix {
    match order {
        HeisenbergOrder::AdjointFirst => u.adjoint() * p * u,
        HeisenbergOrder::ForwardFirst => u * p * u.adjoint(),
    }
}

/// The `2n`-qubit swap of the two registers.
pub fn register_swap(n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for y in 0..d {
            m[(y * d + x, x * d + y)] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

/// `(I ⊗ I + sum_P O_P ⊗ P_i) / 2` for the evolved Paulis `O_X, O_Y, O_Z`.
pub fn assemble_factor(n: usize, qubit: usize, evolved_paulis: &[CMatrix; 3]) -> Result<CMatrix> {
    let d = 1usize << n;
    let mut m = identity(d * d);
    for (letter, o) in LETTERS.iter().zip(evolved_paulis) {
        let p = single_qubit_pauli(n, qubit, *letter).matrix(n)?;
        m += kron(o, &p);
    }
    Ok(m * Complex64::new(0.5, 0.0))
}

/// Product of per-qubit factors followed by the register swap, arranged to
/// estimate `U^† ⊗ U` in either composition order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedEstimate {
    pub n: usize,
    pub order: HeisenbergOrder,
    /// One `2n`-qubit unitary per qubit.
    pub factors: Vec<CMatrix>,
}

impl ComposedEstimate {
    /// Exact factors of a known unitary.
    pub fn exact(u: &DenseUnitary, order: HeisenbergOrder) -> Result<Self> {
        let n = u.n();
        let factors = (0..n)
            .map(|q| {
                let os = LETTERS.map(|l| {
                    let p = single_qubit_pauli(n, q, l).matrix(n).expect("n within cap");
                    evolved(u.matrix(), &p, order)
                });
                assemble_factor(n, q, &os)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ComposedEstimate { n, order, factors })
    }

    /// Dense `2n`-qubit estimate of `U^† ⊗ U`.
    pub fn dense(&self) -> CMatrix {
        let d = 1usize << self.n;
        let prod = self.factors.iter().fold(identity(d * d), |acc, f| acc * f);
        let swap = register_swap(self.n);
        match self.order {
            HeisenbergOrder::AdjointFirst => prod * swap,
            // the factors give U ⊗ U^†; swapping the registers flips it
            HeisenbergOrder::ForwardFirst => swap * prod,
        }
    }
}

/// `U^† ⊗ U` for a known unitary.
pub fn double_system(u: &CMatrix) -> CMatrix {
    kron(&u.adjoint(), u)
}

/// Removes the unknown global phase of an estimate of a Hermitian,
/// self-inverse, traceless operator and rounds it back to one. The sign is
/// left undetermined.
fn hermitian_up_to_sign(est: &CMatrix) -> Result<CMatrix> {
    let s: Complex64 = eigenvalues(est)?.iter().map(|l| l * l).sum();
    let theta = 0.5 * s.arg();
    let m = est * Complex64::from_polar(1.0, -theta);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    polar_unitary(&h)
}

/// Fixes the sign of `h ≈ ±O` by preparing its `+1` eigenvector, applying
/// `U` (or `U^†`), and measuring `P` on the target qubit.
fn fix_sign<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    h: CMatrix,
    p: &PauliOperator,
    order: HeisenbergOrder,
    shots: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    let eig = SymmetricEigen::new(h.clone());
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let v = eig.eigenvectors.column(top).into_owned();
    let u = oracle.effective_unitary();
    let psi = match order {
        HeisenbergOrder::AdjointFirst => {
            oracle.charge_forward(shots as u64);
            u * v
        }
        HeisenbergOrder::ForwardFirst => {
            oracle.charge_inverse(shots as u64)?;
            u.adjoint() * v
        }
    };
    let pm = p.matrix(oracle.n())?;
    let expectation = psi.dotc(&(pm * &psi)).re;
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let plus = (0..shots).filter(|_| rng.random::<f64>() < p_plus).count();
    Ok(if 2 * plus < shots { -h } else { h })
}

/// Pauli-dimension bound `2^{d+1} + t` on every evolved Pauli.
pub fn term_dimension_bound(depth: usize, nullity: usize) -> usize {
    (1usize << (depth + 1)) + nullity
}

/// Learns `U^† ⊗ U` from the `3n` evolved Paulis of `U`. `order` says which
/// side the shallow circuit sits on: `AdjointFirst` for `U = QC`,
/// `ForwardFirst` for `U = CQ`.
pub fn learn_composed<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    depth_bound: usize,
    nullity_bound: usize,
    order: HeisenbergOrder,
    params: &LearnParams,
    rng: &mut R,
) -> Result<(ComposedEstimate, LearnReport)> {
    params.validate()?;
    if !oracle.allows_inverse() {
        return Err(Error::InverseUnavailable);
    }
    let n = oracle.n();
    let start = oracle.counts();
    let k_bound = term_dimension_bound(depth_bound, nullity_bound);
    // diamond eps/(6n) per term, and diamond <= 2 dist_phaseop
    let term_params = LearnParams {
        eps: params.eps / (12.0 * n as f64),
        delta: params.delta / (3.0 * n as f64),
        ..params.clone()
    };
    let terms: Vec<(usize, char, u64)> = (0..n)
        .flat_map(|q| LETTERS.map(|l| (q, l)))
        .map(|(q, l)| (q, l, rng.random()))
        .collect();
    let learned = terms
        .par_iter()
        .map(|&(q, letter, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = single_qubit_pauli(n, q, letter);
            let fail = |e: Error| Error::learner(&format!("term {letter}{}", q + 1), e.to_string());
            let derived = heisenberg_pauli_oracle(oracle, &p, order).map_err(fail)?;
            let (est, report) =
                learn_kdim(&derived, k_bound, SupportAccess::Inverse, &term_params, &mut rng).map_err(fail)?;
            let h = hermitian_up_to_sign(&est.dense(params.dense_cap)?).map_err(fail)?;
            let h = fix_sign(oracle, h, &p, order, params.sign_shots, &mut rng).map_err(fail)?;
            Ok((h, report.rounds.unwrap_or(0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let factors = learned
        .chunks(3)
        .enumerate()
        .map(|(q, c)| {
            let os = [c[0].0.clone(), c[1].0.clone(), c[2].0.clone()];
            polar_unitary(&assemble_factor(n, q, &os)?)
                .map_err(|e| Error::learner(&format!("factor {}", q + 1), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let est = ComposedEstimate { n, order, factors };
    let mut report = LearnReport::new("composed", n, params.eps, params.delta);
    report.rounds = learned.iter().map(|l| l.1).max();
    report.queries = QueryTotals::from(oracle.counts() - start);
    report.blocks = est.factors.iter().map(matrix_rows).collect();
    Ok((est, report))
}

/// Dimension of the span of the Pauli support of every evolved Pauli, as
/// `(qubit, letter, dim)`.
pub fn evolved_dimensions(u: &CMatrix, order: HeisenbergOrder) -> Result<Vec<(usize, char, usize)>> {
    let n = crate::linalg::square_qubits(u)?;
    let mut out = Vec::with_capacity(3 * n);
    for q in 0..n {
        for l in LETTERS {
            let p = single_qubit_pauli(n, q, l).matrix(n)?;
            out.push((q, l, support_span(&evolved(u, &p, order), 1e-10)?.dim()));
        }
    }
    Ok(out)
}

/// The subgroup of Paulis that `U` maps to signed Paulis, and its
/// co-dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct NullityWitness {
    pub subspace: Subspace,
    pub t: usize,
}

/// Exhaustive search for the subgroup `S` of `x` with `U^† W_x U = ±W_y`.
/// Such `x` always form a subgroup, so `S` is simply their set.
pub fn clifford_nullity(u: &DenseUnitary, tol: f64) -> Result<NullityWitness> {
    let n = u.n();
    if n > NULLITY_CAP {
        return Err(Error::TooManyQubits { n, cap: NULLITY_CAP });
    }
    let m = u.matrix();
    let mut s = Subspace::zero(n);
    for key in 1..(1u128 << (2 * n)) {
        let x = PauliVec::from_key(n, key);
        if s.contains(&x)? {
            continue;
        }
        let w = crate::pauli::weyl_matrix(&x, n)?;
        let conj = m.adjoint() * w * m;
        let top = pauli_expand(&conj)?
            .iter()
            .map(|(_, c)| c.norm_sqr())
            .fold(0.0, f64::max);
        if top >= 1.0 - tol {
            s.insert(x)?;
        }
    }
    let t = 2 * n - s.dim();
    Ok(NullityWitness { subspace: s, t })
}
