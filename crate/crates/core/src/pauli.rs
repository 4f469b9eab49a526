//! Pauli operators, Pauli expansions of dense matrices, projections onto
//! Pauli subspaces and twirls.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2::{PauliVec, Subspace};
use crate::linalg::{i_pow, square_qubits, CMatrix, ZERO};

/// Largest qubit count for which dense Pauli expansions are attempted.
pub const DENSE_EXPAND_CAP: usize = 12;

/// `i^phase * W_vec`, with `W_vec` the Hermitian Weyl operator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliOperator {
    pub vec: PauliVec,
    phase: u8,
}

impl PauliOperator {
    pub fn new(vec: PauliVec, phase: i64) -> Self {
        PauliOperator {
            vec,
            phase: phase.rem_euclid(4) as u8,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(PauliVec::zero(n), 0)
    }

    /// Phase exponent `k` in `i^k W`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn n(&self) -> usize {
        self.vec.n()
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.vec, -(self.phase as i64))
    }

    pub fn neg(&self) -> Self {
        Self::new(self.vec, self.phase as i64 + 2)
    }

    /// Exponent `e` with `self = i^e X^x Z^z` (qubit-wise X before Z).
    pub(crate) fn xz_phase(&self) -> i64 {
        self.phase as i64 + self.vec.y_count() as i64
    }

    pub(crate) fn from_xz(n: usize, x: u64, z: u64, e: i64) -> Self {
        let v = PauliVec::new(n, x, z).expect("mask within n");
        Self::new(v, e - v.y_count() as i64)
    }

    /// Operator product `self * rhs`.
    pub fn mul(&self, rhs: &PauliOperator) -> Self {
        assert_eq!(self.n(), rhs.n());
        // X^a Z^b X^c Z^d = (-1)^{b.c} X^{a+c} Z^{b+d}
        let sign = 2 * (self.vec.z() & rhs.vec.x()).count_ones() as i64;
        let e = self.xz_phase() + rhs.xz_phase() + sign;
        Self::from_xz(self.n(), self.vec.x() ^ rhs.vec.x(), self.vec.z() ^ rhs.vec.z(), e)
    }

    pub fn commutes(&self, other: &PauliOperator) -> bool {
        self.vec.commutes(&other.vec)
    }

    /// Dense matrix, refusing more than `cap` qubits.
    pub fn matrix(&self, cap: usize) -> Result<CMatrix> {
        let n = self.n();
        if n > cap {
            return Err(Error::TooManyQubits { n, cap });
        }
        let dim = 1usize << n;
        let (a, b) = (self.vec.x() as usize, self.vec.z() as usize);
        let ph = i_pow(self.xz_phase());
        let mut m = CMatrix::zeros(dim, dim);
        for c in 0..dim {
            let s = if (b & c).count_ones() % 2 == 0 { ph } else { -ph };
            m[(c ^ a, c)] = s;
        }
        Ok(m)
    }
}

/// Dense matrix of the Hermitian Weyl operator `W_x`.
pub fn weyl_matrix(x: &PauliVec, cap: usize) -> Result<CMatrix> {
    PauliOperator::new(*x, 0).matrix(cap)
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{sign}{}", self.vec.letters())
    }
}

impl FromStr for PauliOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        Ok(PauliOperator::new(PauliVec::from_letters(body)?, phase))
    }
}

/// In-place Walsh-Hadamard transform (unnormalised).
fn walsh_hadamard(v: &mut [Complex64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for i in (0..len).step_by(2 * h) {
            for j in i..i + h {
                let (u, w) = (v[j], v[j + h]);
                v[j] = u + w;
                v[j + h] = u - w;
            }
        }
        h *= 2;
    }
}

/// Coefficients `alpha_x` of `A = sum_x alpha_x W_x`, stored densely by
/// [`PauliVec::key`].
#[derive(Clone, Debug, PartialEq)]
pub struct PauliExpansion {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl PauliExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: &PauliVec) -> Complex64 {
        self.coeffs[x.key() as usize]
    }

    /// All `4^n` coefficients in key order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliVec, Complex64)> + '_ {
        let n = self.n;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (PauliVec::from_key(n, k as u128), c))
    }

    /// Pauli vectors with `|alpha_x| > tau`.
    pub fn support(&self, tau: f64) -> Vec<PauliVec> {
        self.iter().filter(|(_, c)| c.norm() > tau).map(|(v, _)| v).collect()
    }

    /// `sum_x |alpha_x|^2`, equal to `||A||_F^2 / 2^n`.
    pub fn weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Rebuilds the dense matrix.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.n;
        let dim = 1usize << n;
        let mut out = CMatrix::zeros(dim, dim);
        let mut row = vec![ZERO; dim];
        for a in 0..dim {
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = self.coeffs[(a << n) | b] * i_pow((a & b).count_ones() as i64);
            }
            if row.iter().all(|c| *c == ZERO) {
                continue;
            }
            walsh_hadamard(&mut row);
            for c in 0..dim {
                out[(c ^ a, c)] = row[c];
            }
        }
        out
    }

    /// Zeroes every coefficient outside `s`.
    pub fn restrict(&self, s: &Subspace) -> Result<PauliExpansion> {
        if s.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: s.n(),
            });
        }
        let mut coeffs = vec![ZERO; self.coeffs.len()];
        for v in s.elements()? {
            let k = v.key() as usize;
            coeffs[k] = self.coeffs[k];
        }
        Ok(PauliExpansion { n: self.n, coeffs })
    }

    /// JSON form listing terms with `|alpha| > tau`.
    pub fn to_json(&self, tau: f64) -> ExpansionJson {
        ExpansionJson {
            n: self.n,
            terms: self
                .iter()
                .filter(|(_, c)| c.norm() > tau)
                .map(|(v, c)| TermJson {
                    pauli: v.to_string(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &ExpansionJson) -> Result<Self> {
        if j.n > DENSE_EXPAND_CAP {
            return Err(Error::TooManyQubits {
                n: j.n,
                cap: DENSE_EXPAND_CAP,
            });
        }
        let mut coeffs = vec![ZERO; 1usize << (2 * j.n)];
        for t in &j.terms {
            let p: PauliOperator = t.pauli.parse()?;
            if p.n() != j.n {
                return Err(Error::DimensionMismatch {
                    expected: j.n,
                    got: p.n(),
                });
            }
            coeffs[p.vec.key() as usize] += i_pow(p.phase() as i64) * Complex64::new(t.re, t.im);
        }
        Ok(PauliExpansion { n: j.n, coeffs })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExpansionJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

fn expand_checked(a: &CMatrix) -> Result<usize> {
    let n = square_qubits(a)?;
    if n > DENSE_EXPAND_CAP {
        return Err(Error::TooManyQubits {
            n,
            cap: DENSE_EXPAND_CAP,
        });
    }
    Ok(n)
}

/// Pauli expansion in `O(n 4^n)` via one Walsh-Hadamard transform per
/// `x`-pattern.
pub fn pauli_expand(a: &CMatrix) -> Result<PauliExpansion> {
    let n = expand_checked(a)?;
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut coeffs = vec![ZERO; dim * dim];
    let mut row = vec![ZERO; dim];
    for xa in 0..dim {
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = a[(c, c ^ xa)];
        }
        walsh_hadamard(&mut row);
        for (zb, &t) in row.iter().enumerate() {
            coeffs[(xa << n) | zb] = t * i_pow((xa & zb).count_ones() as i64) * scale;
        }
    }
    Ok(PauliExpansion { n, coeffs })
}

/// Pauli expansion by explicit traces `tr(W_x A) / 2^n`; quadratic slower and
/// kept as an independent reference.
pub fn pauli_expand_naive(a: &CMatrix) -> Result<PauliExpansion> {
    let n = expand_checked(a)?;
    let dim = 1usize << n;
    let mut coeffs = vec![ZERO; dim * dim];
    for (k, slot) in coeffs.iter_mut().enumerate() {
        let w = weyl_matrix(&PauliVec::from_key(n, k as u128), n)?;
        *slot = (w * a).trace() / dim as f64;
    }
    Ok(PauliExpansion { n, coeffs })
}

/// Span of the Pauli vectors carrying coefficient above `tau`.
pub fn support_span(a: &CMatrix, tau: f64) -> Result<Subspace> {
    let e = pauli_expand(a)?;
    Subspace::span(e.n(), e.support(tau))
}

/// `Pi_S(A) = sum_{x in S} alpha_x W_x`.
pub fn pauli_project(a: &CMatrix, s: &Subspace) -> Result<CMatrix> {
    let n = expand_checked(a)?;
    if s.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.n(),
        });
    }
    if let Some((ca, cb)) = s.as_canonical() {
        return Ok(project_canonical(a, n, ca, cb));
    }
    Ok(pauli_expand(a)?.restrict(s)?.reconstruct())
}

/// Projection onto `W_{a,b}`: average the diagonal blocks over the leading
/// identity register and drop the off-diagonal `Z`-register blocks.
fn project_canonical(m: &CMatrix, n: usize, a: usize, b: usize) -> CMatrix {
    let dim = 1usize << n;
    let lead = 1usize << (n - a - b);
    let inner = 1usize << (a + b);
    let blocks = 1usize << b;
    let blk = 1usize << a;
    let mut avg = CMatrix::zeros(inner, inner);
    for x in 0..lead {
        let off = x * inner;
        for y in 0..blocks {
            let o = y * blk;
            for r in 0..blk {
                for c in 0..blk {
                    avg[(o + r, o + c)] += m[(off + o + r, off + o + c)];
                }
            }
        }
    }
    avg /= Complex64::new(lead as f64, 0.0);
    let mut out = CMatrix::zeros(dim, dim);
    for x in 0..lead {
        let off = x * inner;
        out.view_mut((off, off), (inner, inner)).copy_from(&avg);
    }
    out
}

/// Largest complement dimension for which the explicit twirl is evaluated.
pub const TWIRL_CAP: usize = 20;

/// Uniform average of `W_q A W_q^dagger` over `q in S^perp`.
pub fn pauli_twirl(a: &CMatrix, s: &Subspace) -> Result<CMatrix> {
    let n = expand_checked(a)?;
    if s.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.n(),
        });
    }
    let comp = s.symplectic_complement();
    if comp.dim() > TWIRL_CAP {
        return Err(Error::ComplementTooLarge(comp.dim()));
    }
    let dim = 1usize << n;
    let mut acc = CMatrix::zeros(dim, dim);
    let elems = comp.elements()?;
    for q in &elems {
        let (xa, zb) = (q.x() as usize, q.z() as usize);
        for c in 0..dim {
            let sc = (zb & c).count_ones();
            for r in 0..dim {
                let parity = ((zb & r).count_ones() + sc) % 2;
                let v = a[(r, c)];
                acc[(r ^ xa, c ^ xa)] += if parity == 0 { v } else { -v };
            }
        }
    }
    Ok(acc / Complex64::new(elems.len() as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, identity, ONE};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn op(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    fn random_matrix(dim: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(dim, dim, |_, _| crate::linalg::gaussian(&mut rng))
    }

    #[test]
    fn weyl_y_is_hermitian_y() {
        let y = weyl_matrix(&"Y".parse().unwrap(), 4).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[ZERO, -crate::linalg::I, crate::linalg::I, ZERO]);
        assert!((y - want).norm() < 1e-15);
    }

    #[test]
    fn string_round_trip() {
        for s in ["+XIZ", "-YY", "+iZ", "-iXYZ", "+III"] {
            assert_eq!(op(s).to_string(), s);
        }
        assert!("*X".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn products_match_dense() {
        let ops = ["+XYZ", "-iZZX", "+iYIY", "-XXI", "+IZY"];
        for a in ops {
            for b in ops {
                let (pa, pb) = (op(a), op(b));
                let lhs = pa.mul(&pb).matrix(3).unwrap();
                let rhs = pa.matrix(3).unwrap() * pb.matrix(3).unwrap();
                assert!((lhs - rhs).norm() < 1e-12, "{a} * {b}");
            }
        }
        // XZ = -iY
        assert_eq!(op("X").mul(&op("Z")), op("-iY"));
    }

    #[test]
    fn expand_examples() {
        // identity expands to a single term
        let e = pauli_expand(&identity(4)).unwrap();
        assert_eq!(e.support(1e-12), vec![PauliVec::zero(2)]);
        // CNOT = (II + ZI + IX - ZX)/2
        let mut cnot = CMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot[(r, c)] = ONE;
        }
        let e = pauli_expand(&cnot).unwrap();
        let get = |s: &str| e.get(&s.parse().unwrap());
        for (s, v) in [("II", 0.5), ("ZI", 0.5), ("IX", 0.5), ("ZX", -0.5)] {
            assert!((get(s) - Complex64::new(v, 0.0)).norm() < 1e-14, "{s}");
        }
        assert_eq!(e.support(1e-12).len(), 4);
    }

    #[test]
    fn fast_matches_naive() {
        for n in 1..=3 {
            let a = random_matrix(1 << n, n as u64);
            let f = pauli_expand(&a).unwrap();
            let s = pauli_expand_naive(&a).unwrap();
            for ((_, x), (_, y)) in f.iter().zip(s.iter()) {
                assert!((x - y).norm() < 1e-12);
            }
            assert!((f.reconstruct() - &a).norm() < 1e-10);
        }
    }

    #[test]
    fn json_round_trip() {
        let a = random_matrix(4, 9);
        let e = pauli_expand(&a).unwrap();
        let text = serde_json::to_string(&e.to_json(0.0)).unwrap();
        let back = PauliExpansion::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!((back.reconstruct() - a).norm() < 1e-12);
    }

    #[test]
    fn canonical_projection_fast_path() {
        let a = random_matrix(16, 5);
        for (ca, cb) in [(1, 1), (0, 2), (2, 0), (1, 0), (0, 0)] {
            let w = Subspace::canonical(4, ca, cb).unwrap();
            let fast = pauli_project(&a, &w).unwrap();
            let slow = pauli_expand(&a).unwrap().restrict(&w).unwrap().reconstruct();
            assert!((fast - slow).norm() < 1e-10, "({ca},{cb})");
        }
    }

    #[test]
    fn twirl_full_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(4, &mut rng);
        let full = Subspace::full(2);
        assert!((pauli_twirl(&u, &full).unwrap() - &u).norm() < 1e-12);
        let zero = Subspace::zero(2);
        let t = pauli_twirl(&u, &zero).unwrap();
        let want = identity(4) * (u.trace() / 4.0);
        assert!((t - want).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projection_is_idempotent_and_linear(seed in any::<u64>(), gens in prop::collection::vec((0u64..8, 0u64..8), 0..4)) {
            let s = Subspace::span(3, gens.iter().map(|&(x, z)| PauliVec::new(3, x, z).unwrap())).unwrap();
            let a = random_matrix(8, seed);
            let b = random_matrix(8, seed ^ 0xabc);
            let pa = pauli_project(&a, &s).unwrap();
            prop_assert!((pauli_project(&pa, &s).unwrap() - &pa).norm() < 1e-10);
            let pab = pauli_project(&(&a + &b * Complex64::new(0.5, -1.0)), &s).unwrap();
            let lin = &pa + pauli_project(&b, &s).unwrap() * Complex64::new(0.5, -1.0);
            prop_assert!((pab - lin).norm() < 1e-10);
            prop_assert!((pauli_twirl(&a, &s).unwrap() - pa).norm() < 1e-10);
        }

        #[test]
        fn product_phases_associate(a in 0u64..16, b in 0u64..16, c in 0u64..16, d in 0u64..16, e in 0u64..16, f in 0u64..16) {
            let p = PauliOperator::new(PauliVec::new(4, a, b).unwrap(), 1);
            let q = PauliOperator::new(PauliVec::new(4, c, d).unwrap(), 2);
            let r = PauliOperator::new(PauliVec::new(4, e, f).unwrap(), 3);
            prop_assert_eq!(p.mul(&q).mul(&r), p.mul(&q.mul(&r)));
            // W_x^2 = I
            let w = PauliOperator::new(p.vec, 0);
            prop_assert_eq!(w.mul(&w), PauliOperator::identity(4));
        }
    }
}
