//! Learning (approximately) block-diagonal unitaries.
//!
//! A unitary is `(a, b)`-block-diagonal when it equals
//! `I ⊗ (A_0 ⊕ ... ⊕ A_{2^b - 1})` with each `A_y` acting on the last `a`
//! qubits. Each column `z` of every block is read off one state: project
//! `U` onto the canonical Pauli subgroup, apply it to
//! `|0...0>|+^b>|z>`, and run state tomography on the trailing `a + b`
//! qubits. Column phases are random, so a second run on `U (I ⊗ H^a)` is
//! used to line them up.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::f2::Subspace;
use crate::linalg::{haar_unitary, identity, kron, polar_unitary, unitarity_residual, CMatrix, CVector, ONE};
use crate::metrics::dist_phaseop;
use crate::params::LearnParams;
use crate::report::{matrix_rows, LearnReport, QueryTotals};
use crate::sim::{collect_projected_copies, QueryOracle, StateVector};
use crate::tomography::{tomo_copies_ln, tomo_empirical, tomo_model_ln, RepeatedState, TomoBackend};

/// Tolerance on block unitarity.
pub const BLOCK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagUnitary {
    n: usize,
    a: usize,
    b: usize,
    blocks: Vec<CMatrix>,
}

impl BlockDiagUnitary {
    pub fn new(n: usize, a: usize, b: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if a + b > n {
            return Err(Error::Config(format!("a + b = {} exceeds n = {n}", a + b)));
        }
        if blocks.len() != 1 << b {
            return Err(Error::DimensionMismatch {
                expected: 1 << b,
                got: blocks.len(),
            });
        }
        for blk in &blocks {
            if blk.nrows() != 1 << a || blk.ncols() != 1 << a {
                return Err(Error::DimensionMismatch {
                    expected: 1 << a,
                    got: blk.nrows(),
                });
            }
            let res = unitarity_residual(blk);
            if !(res <= BLOCK_TOL) {
                return Err(Error::NotUnitary(res));
            }
        }
        Ok(BlockDiagUnitary { n, a, b, blocks })
    }

    pub fn identity(n: usize, a: usize, b: usize) -> Self {
        assert!(a + b <= n);
        BlockDiagUnitary {
            n,
            a,
            b,
            blocks: vec![identity(1 << a); 1 << b],
        }
    }

    /// Independent Haar-random blocks.
    pub fn random<R: Rng + ?Sized>(n: usize, a: usize, b: usize, rng: &mut R) -> Self {
        assert!(a + b <= n);
        BlockDiagUnitary {
            n,
            a,
            b,
            blocks: (0..1usize << b).map(|_| haar_unitary(1 << a, rng)).collect(),
        }
    }

    /// Reads the block structure out of a dense matrix by averaging the
    /// `2^{n-a-b}` copies of each block, then rounds every block to the
    /// nearest unitary.
    pub fn from_dense(m: &CMatrix, a: usize, b: usize) -> Result<Self> {
        let n = crate::linalg::square_qubits(m)?;
        if a + b > n {
            return Err(Error::Config(format!("a + b = {} exceeds n = {n}", a + b)));
        }
        let (inner, blk) = (1usize << (a + b), 1usize << a);
        let copies = 1usize << (n - a - b);
        let scale = Complex64::new(1.0 / copies as f64, 0.0);
        let blocks = (0..1usize << b)
            .map(|y| {
                let mut acc = CMatrix::zeros(blk, blk);
                for c in 0..copies {
                    let off = c * inner + y * blk;
                    acc += m.view((off, off), (blk, blk));
                }
                polar_unitary(&(acc * scale))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockDiagUnitary { n, a, b, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `A_0 ⊕ ... ⊕ A_{2^b - 1}` on the trailing `a + b` qubits.
    pub fn inner(&self) -> CMatrix {
        let blk = 1usize << self.a;
        let mut m = CMatrix::zeros(blk << self.b, blk << self.b);
        for (y, a_y) in self.blocks.iter().enumerate() {
            m.view_mut((y * blk, y * blk), (blk, blk)).copy_from(a_y);
        }
        m
    }

    pub fn dense(&self) -> CMatrix {
        kron(&identity(1 << (self.n - self.a - self.b)), &self.inner())
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if (self.n, self.a, self.b) != (other.n, other.a, other.b) {
            return Err(Error::Config(format!(
                "block shapes differ: ({}, {}, {}) vs ({}, {}, {})",
                self.n, self.a, self.b, other.n, other.a, other.b
            )));
        }
        Ok(())
    }

    /// Blockwise `self * other`, rounded back to exact unitarity.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| polar_unitary(&(x * y)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_blocks(blocks))
    }

    fn with_blocks(&self, blocks: Vec<CMatrix>) -> Self {
        BlockDiagUnitary {
            n: self.n,
            a: self.a,
            b: self.b,
            blocks,
        }
    }

    pub fn adjoint(&self) -> Self {
        self.with_blocks(self.blocks.iter().map(|x| x.adjoint()).collect())
    }

    /// Right-multiplies every block by the same diagonal.
    pub fn times_diag(&self, d: &DiagPhase) -> Result<Self> {
        if d.dim() != 1 << self.a {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.a,
                got: d.dim(),
            });
        }
        let dm = d.matrix();
        Ok(self.with_blocks(self.blocks.iter().map(|x| x * &dm).collect()))
    }

    /// Phase-insensitive operator distance, computed on the inner part.
    pub fn dist_phaseop(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        dist_phaseop(&self.inner(), &other.inner())
    }
}

/// Diagonal unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagPhase {
    phases: Vec<Complex64>,
}

impl DiagPhase {
    pub fn new(phases: Vec<Complex64>) -> Result<Self> {
        if let Some(p) = phases.iter().find(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Degenerate(format!("phase of modulus {}", p.norm())));
        }
        Ok(DiagPhase { phases })
    }

    pub fn identity(dim: usize) -> Self {
        DiagPhase { phases: vec![ONE; dim] }
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        DiagPhase {
            phases: (0..dim).map(|_| crate::linalg::random_phase(rng)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn conj(&self) -> Self {
        DiagPhase {
            phases: self.phases.iter().map(|p| p.conj()).collect(),
        }
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(self.phases.clone()))
    }
}

/// Assembles the blocks from column states: column `z` of `A_y` is
/// `sqrt(2^b)` times the `y`-th length-`2^a` slice of estimate `z`.
pub fn collate_columns(estimates: &[StateVector], a: usize, b: usize) -> Result<Vec<CMatrix>> {
    if estimates.len() != 1 << a {
        return Err(Error::DimensionMismatch {
            expected: 1 << a,
            got: estimates.len(),
        });
    }
    if let Some(e) = estimates.iter().find(|e| e.n() != a + b) {
        return Err(Error::DimensionMismatch {
            expected: a + b,
            got: e.n(),
        });
    }
    let blk = 1usize << a;
    let scale = Complex64::new(((1u64 << b) as f64).sqrt(), 0.0);
    Ok((0..1usize << b)
        .map(|y| CMatrix::from_fn(blk, blk, |r, z| estimates[z].amps()[y * blk + r] * scale))
        .collect())
}

/// Nearest unitary to a square matrix.
pub fn polar_round(a: &CMatrix) -> Result<CMatrix> {
    polar_unitary(a)
}

/// Recovers the inverse column phases from `V0 = A Φ` and
/// `V0p = A H^{⊗a} Φ'`: column 0 of `V0^† V0p` is `Φ^† (2^{-a/2}, ...) φ'_0`.
pub fn align_phases(v0: &CMatrix, v0p: &CMatrix) -> Result<DiagPhase> {
    if v0.shape() != v0p.shape() || v0.nrows() != v0.ncols() {
        return Err(Error::DimensionMismatch {
            expected: v0.nrows(),
            got: v0p.nrows(),
        });
    }
    let dim = v0.nrows();
    let m = v0.adjoint() * v0p;
    let floor = 0.25 / (dim as f64).sqrt();
    let phases = (0..dim)
        .map(|j| {
            let e = m[(j, 0)];
            if e.norm() < floor {
                Err(Error::Degenerate(format!(
                    "phase-alignment entry {j} has modulus {:.3e} below {floor:.3e}",
                    e.norm()
                )))
            } else {
                Ok(e / e.norm())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagPhase { phases })
}

/// `I ⊗ H^{⊗a}` on `n` qubits.
pub fn hadamard_layer(n: usize, a: usize) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let h1 = CMatrix::from_row_slice(2, 2, &[h, h, h, -h].map(|v| Complex64::new(v, 0.0)));
    let mut ha = identity(1);
    for _ in 0..a {
        ha = kron(&ha, &h1);
    }
    kron(&identity(1 << (n - a)), &ha)
}

/// Per-column resources of one pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnBudget {
    /// Accuracy each column is learned to.
    pub eps: f64,
    /// `ln` of the inverse per-column tomography failure probability.
    pub ln_inv_delta: f64,
    /// Copies the tomography routine consumes.
    pub copies: u64,
    /// Postselection attempts allowed before giving up.
    pub max_attempts: u64,
}

impl ColumnBudget {
    pub fn new(a: usize, b: usize, params: &LearnParams) -> Self {
        let m = a + b;
        let eps = params.eps.min(params.eps_cap);
        let ln_inv_delta = 5.0 * (1u64 << m) as f64;
        let base = tomo_copies_ln(params.c_tomo, m, eps, ln_inv_delta);
        let copies = match params.backend {
            TomoBackend::Model => base,
            TomoBackend::Empirical => (params.c_emp * base as f64).ceil() as u64,
        };
        // acceptance is at least (1 - 2 eps)^2 for an eps-close target
        let p_min = (1.0 - 2.0 * eps).powi(2);
        let slack = ((1u64 << a) as f64 / params.delta).ln() + (1u64 << m) as f64;
        let max_attempts = ((2.0 / p_min) * (copies as f64 + slack)).ceil() as u64;
        ColumnBudget {
            eps,
            ln_inv_delta,
            copies,
            max_attempts,
        }
    }
}

/// One pass: tomography of every column, collation and rounding.
fn learn_columns<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    a: usize,
    b: usize,
    params: &LearnParams,
    budget: &ColumnBudget,
    rng: &mut R,
) -> Result<Vec<CMatrix>> {
    let n = oracle.n();
    let target = Subspace::canonical(n, a, b)?;
    let seeds: Vec<u64> = (0..1usize << a).map(|_| rng.random()).collect();
    let estimates = seeds
        .par_iter()
        .enumerate()
        .map(|(z, &seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let input = StateVector::column_input(n, a, b, z);
            let got = collect_projected_copies(oracle, &target, &input, budget.copies, budget.max_attempts, &mut rng)?;
            let state = got.state.suffix(a + b)?;
            let res = match params.backend {
                TomoBackend::Model => tomo_model_ln(&state, budget.eps, budget.ln_inv_delta, params.c_tomo, &mut rng)?,
                TomoBackend::Empirical => {
                    let mut src = RepeatedState::new(state, got.copies);
                    tomo_empirical(
                        &mut src,
                        a + b,
                        budget.eps,
                        budget.ln_inv_delta,
                        params.c_tomo,
                        params.c_emp,
                        &mut rng,
                    )?
                }
            };
            Ok(res.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    collate_columns(&estimates, a, b)?.iter().map(polar_round).collect()
}

/// Learns an approximately `(a, b)`-block-diagonal unitary. The output is
/// exactly block diagonal.
pub fn learn_block_diag<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    a: usize,
    b: usize,
    params: &LearnParams,
    rng: &mut R,
) -> Result<(BlockDiagUnitary, LearnReport)> {
    params.validate()?;
    let n = oracle.n();
    if a + b > n {
        return Err(Error::Config(format!("a + b = {} exceeds n = {n}", a + b)));
    }
    let start = oracle.counts();
    let budget = ColumnBudget::new(a, b, params);
    let v = learn_columns(oracle, a, b, params, &budget, rng)?;
    let primed_oracle = oracle.right_multiplied(&hadamard_layer(n, a))?;
    let mut retried = false;
    let d = loop {
        let vp = learn_columns(&primed_oracle, a, b, params, &budget, rng)?;
        match align_phases(&v[0], &vp[0]) {
            Ok(d) => break d,
            Err(Error::Degenerate(_)) if !retried => retried = true,
            Err(Error::Degenerate(reason)) => return Err(Error::learner("phase alignment", reason)),
            Err(e) => return Err(e),
        }
    };
    let blocks = v.iter().map(|vy| vy * d.matrix()).collect();
    let est = BlockDiagUnitary::new(n, a, b, blocks)?;

    let mut report = LearnReport::new("blockdiag", n, params.eps, params.delta);
    report.a = Some(a);
    report.b = Some(b);
    report.queries = QueryTotals::from(oracle.counts() - start);
    report.blocks = est.blocks().iter().map(matrix_rows).collect();
    Ok((est, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DenseUnitary;
    use crate::linalg::{op_norm, random_phase};
    use crate::pauli::pauli_expand;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn dense_has_canonical_support() {
        let mut r = rng(1);
        let u = BlockDiagUnitary::random(4, 1, 1, &mut r);
        let w = Subspace::canonical(4, 1, 1).unwrap();
        let supp = pauli_expand(&u.dense()).unwrap().support(1e-10);
        for p in supp {
            assert!(w.contains(&p).unwrap(), "{p}");
        }
        let back = BlockDiagUnitary::from_dense(&u.dense(), 1, 1).unwrap();
        assert!(back.dist_phaseop(&u).unwrap() < 1e-10);
    }

    #[test]
    fn block_algebra() {
        let mut r = rng(2);
        let u = BlockDiagUnitary::random(3, 1, 1, &mut r);
        let v = BlockDiagUnitary::random(3, 1, 1, &mut r);
        let uv = u.mul(&v).unwrap();
        assert!((uv.dense() - u.dense() * v.dense()).norm() < 1e-10);
        assert!((u.adjoint().dense() - u.dense().adjoint()).norm() < 1e-12);
        assert!(u.mul(&BlockDiagUnitary::random(3, 2, 0, &mut r)).is_err());
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(BlockDiagUnitary::new(2, 1, 1, vec![identity(2)]).is_err());
        assert!(BlockDiagUnitary::new(2, 1, 0, vec![CMatrix::from_element(2, 2, ONE)]).is_err());
        assert!(BlockDiagUnitary::new(2, 2, 1, vec![identity(4); 2]).is_err());
    }

    #[test]
    fn collate_b0_is_verbatim() {
        let mut r = rng(3);
        let cols: Vec<_> = (0..4)
            .map(|_| StateVector::normalized(crate::linalg::haar_state(4, &mut r)).unwrap())
            .collect();
        let a = collate_columns(&cols, 2, 0).unwrap();
        assert_eq!(a.len(), 1);
        for (z, col) in cols.iter().enumerate() {
            assert_eq!(a[0].column(z).into_owned(), col.amps().clone());
        }
        assert!(collate_columns(&cols[..3], 2, 0).is_err());
    }

    #[test]
    fn collate_exact_columns() {
        // noiseless column states of a block-diagonal U give A_y = B_y Φ
        let mut r = rng(4);
        let (n, a, b) = (3, 1, 1);
        let u = BlockDiagUnitary::random(n, a, b, &mut r);
        let phases = DiagPhase::random(2, &mut r);
        let cols: Vec<_> = (0..2)
            .map(|z| {
                let out = u.dense() * StateVector::column_input(n, a, b, z).amps();
                let s = StateVector::new(out).unwrap().suffix(a + b).unwrap();
                StateVector::new(s.amps() * phases.phases()[z]).unwrap()
            })
            .collect();
        let blocks = collate_columns(&cols, a, b).unwrap();
        for (y, blk) in blocks.iter().enumerate() {
            assert!((blk - &u.blocks()[y] * phases.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn collate_zero_slice() {
        let cols = vec![StateVector::basis(2, 0), StateVector::basis(2, 1)];
        let blocks = collate_columns(&cols, 1, 1).unwrap();
        assert_eq!(blocks[1], CMatrix::zeros(2, 2));
        assert!(polar_round(&blocks[1]).is_err());
    }

    #[test]
    fn polar_examples() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(0.5)]));
        assert!((polar_round(&d).unwrap() - identity(2)).norm() < 1e-12);
        let mut r = rng(5);
        let u = haar_unitary(4, &mut r);
        assert!((polar_round(&u).unwrap() - &u).norm() < 1e-12);
        for _ in 0..50 {
            let e =
                crate::linalg::haar_unitary(4, &mut r) * CMatrix::from_fn(4, 4, |_, _| crate::linalg::gaussian(&mut r));
            let e = &e * c(0.1 / op_norm(&e));
            let got = polar_round(&(&u + e)).unwrap();
            assert!(op_norm(&(got - &u)) <= 0.2 + 1e-9);
        }
    }

    fn phase_case(a: usize, noise: f64, r: &mut ChaCha8Rng) -> f64 {
        let dim = 1 << a;
        let base = haar_unitary(dim, r);
        let phi = DiagPhase::random(dim, r);
        let phi_p = DiagPhase::random(dim, r);
        let h = hadamard_layer(a, a);
        let mut v0 = &base * phi.matrix();
        let mut v0p = &base * h * phi_p.matrix();
        if noise > 0.0 {
            let kick = |m: &CMatrix, r: &mut ChaCha8Rng| {
                let g = CMatrix::from_fn(dim, dim, |_, _| crate::linalg::gaussian(r));
                let g = (&g + g.adjoint()) * c(0.5);
                let g = &g * c(noise / op_norm(&g));
                // exp(iG) to first order, rounded
                polar_unitary(&((identity(dim) + g * Complex64::new(0.0, 1.0)) * m)).unwrap()
            };
            v0 = kick(&v0, r);
            v0p = kick(&v0p, r);
        }
        let d = align_phases(&v0, &v0p).unwrap();
        dist_phaseop(&d.matrix(), &phi.conj().matrix()).unwrap()
    }

    #[test]
    fn align_noiseless() {
        let mut r = rng(6);
        for a in 0..=3 {
            assert!(phase_case(a, 0.0, &mut r) < 1e-9);
        }
        let u = haar_unitary(4, &mut r);
        let d = align_phases(&u, &(&u * hadamard_layer(2, 2))).unwrap();
        assert!(dist_phaseop(&d.matrix(), &identity(4)).unwrap() < 1e-9);
    }

    #[test]
    fn align_perturbed() {
        let mut r = rng(7);
        for _ in 0..50 {
            assert!(phase_case(2, 0.05, &mut r) <= 24.0 * 0.05);
        }
    }

    #[test]
    fn align_degenerate() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        // V0^† V0p = X has a zero in column 0
        assert!(matches!(align_phases(&identity(2), &x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn learns_identity_blocks() {
        let params = LearnParams::with_accuracy(0.05, 0.1);
        let oracle = QueryOracle::new(DenseUnitary::identity(3), false);
        let (est, report) = learn_block_diag(&oracle, 1, 1, &params, &mut rng(8)).unwrap();
        assert!(est.dist_phaseop(&BlockDiagUnitary::identity(3, 1, 1)).unwrap() <= params.c_out * 0.05);
        assert_eq!(report.queries.inverse, 0);
        assert_eq!(report.queries.forward, oracle.counts().forward);
    }

    #[test]
    fn learns_random_blocks() {
        let params = LearnParams::with_accuracy(0.05, 0.1);
        let mut r = rng(9);
        let mut ok = 0;
        for _ in 0..5 {
            let truth = BlockDiagUnitary::random(4, 1, 1, &mut r);
            let g = random_phase(&mut r);
            let oracle = QueryOracle::new(DenseUnitary::new(truth.dense() * g).unwrap(), false);
            let (est, _) = learn_block_diag(&oracle, 1, 1, &params, &mut r).unwrap();
            if dist_phaseop(&est.dense(), oracle.effective_unitary()).unwrap() <= params.c_out * params.eps {
                ok += 1;
            }
        }
        assert!(ok >= 4);
    }

    #[test]
    fn budget_matches_formula() {
        let p = LearnParams::with_accuracy(0.1, 0.1);
        let bud = ColumnBudget::new(1, 1, &p);
        assert_eq!(bud.copies, tomo_copies_ln(4.0, 2, 0.1, 20.0));
        let want = (2.0 / 0.64 * (bud.copies as f64 + (20.0f64).ln() + 4.0)).ceil() as u64;
        assert_eq!(bud.max_attempts, want);
        let clamped = ColumnBudget::new(1, 1, &LearnParams::with_accuracy(0.4, 0.1));
        assert_eq!(clamped.eps, 0.25);
    }
}
