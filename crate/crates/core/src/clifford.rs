//! Clifford circuits as conjugation tableaux, and the synthesis of Cliffords
//! that move a symplectic basis onto the canonical subspace `W_{a,b}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::f2::{symplectic_gram_schmidt, PauliVec, Subspace, SymplecticBasis};
use crate::linalg::{apply_1q, apply_2q, identity, CMatrix, I, ONE, ZERO};
use crate::pauli::PauliOperator;

/// A Clifford gate on 0-based qubits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![q],
            Gate::Cnot(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            g => g,
        }
    }

    /// `G P G^dagger`.
    pub fn conjugate(&self, p: &PauliOperator) -> PauliOperator {
        let n = p.n();
        let bit = |q: usize| 1u64 << (n - 1 - q);
        let (mut x, mut z, mut e) = (p.vec.x(), p.vec.z(), p.xz_phase());
        let get = |m: u64, q: usize| (m & bit(q) != 0) as i64;
        match *self {
            Gate::H(q) => {
                let (a, b) = (get(x, q), get(z, q));
                e += 2 * a * b;
                x = (x & !bit(q)) | if b == 1 { bit(q) } else { 0 };
                z = (z & !bit(q)) | if a == 1 { bit(q) } else { 0 };
            }
            Gate::S(q) => {
                let a = get(x, q);
                e += a;
                if a == 1 {
                    z ^= bit(q);
                }
            }
            Gate::Sdg(q) => {
                let a = get(x, q);
                e += 3 * a;
                if a == 1 {
                    z ^= bit(q);
                }
            }
            Gate::X(q) => e += 2 * get(z, q),
            Gate::Z(q) => e += 2 * get(x, q),
            Gate::Y(q) => e += 2 * (get(x, q) + get(z, q)),
            Gate::Cnot(c, t) => {
                if get(x, c) == 1 {
                    x ^= bit(t);
                }
                if get(z, t) == 1 {
                    z ^= bit(c);
                }
            }
            Gate::Cz(a, b) => {
                let (xa, xb) = (get(x, a), get(x, b));
                e += 2 * xa * xb;
                if xa == 1 {
                    z ^= bit(b);
                }
                if xb == 1 {
                    z ^= bit(a);
                }
            }
        }
        PauliOperator::from_xz(n, x, z, e)
    }

    fn matrix_1q(&self) -> [[Complex64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |v: f64| Complex64::new(v, 0.0);
        match self {
            Gate::H(_) => [[r(h), r(h)], [r(h), r(-h)]],
            Gate::S(_) => [[ONE, ZERO], [ZERO, I]],
            Gate::Sdg(_) => [[ONE, ZERO], [ZERO, -I]],
            Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y(_) => [[ZERO, -I], [I, ZERO]],
            Gate::Z(_) => [[ONE, ZERO], [ZERO, -ONE]],
            _ => unreachable!(),
        }
    }

    /// Left-multiplies the rows of `m` (an `n`-qubit operator or state).
    pub fn apply_dense(&self, m: &mut CMatrix, n: usize) {
        match *self {
            Gate::Cnot(c, t) => {
                let mut g = [[ZERO; 4]; 4];
                for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    g[r][col] = ONE;
                }
                apply_2q(m, n, c, t, &g);
            }
            Gate::Cz(a, b) => {
                let mut g = [[ZERO; 4]; 4];
                for (k, row) in g.iter_mut().enumerate() {
                    row[k] = if k == 3 { -ONE } else { ONE };
                }
                apply_2q(m, n, a, b, &g);
            }
            g => apply_1q(m, n, g.qubits()[0], &g.matrix_1q()),
        }
    }
}

impl fmt::Display for Gate {
    /// Text form with 1-based qubits, e.g. `CNOT 1 4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "SDG",
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::Cnot(..) => "CNOT",
            Gate::Cz(..) => "CZ",
        };
        write!(f, "{name}")?;
        for q in self.qubits() {
            write!(f, " {}", q + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Gate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let name = it.next().ok_or_else(|| Error::Parse("empty gate line".into()))?;
        let qs: Vec<usize> = it
            .map(|t| match t.parse::<usize>() {
                Ok(q) if q >= 1 => Ok(q - 1),
                _ => Err(Error::Parse(format!("bad qubit index {t:?} (1-based)"))),
            })
            .collect::<Result<_>>()?;
        let want = |k: usize| -> Result<()> {
            if qs.len() != k {
                return Err(Error::Parse(format!("{name} takes {k} qubit(s)")));
            }
            Ok(())
        };
        let g = match name.to_ascii_uppercase().as_str() {
            "H" => (want(1)?, Gate::H(qs[0])).1,
            "S" => (want(1)?, Gate::S(qs[0])).1,
            "SDG" => (want(1)?, Gate::Sdg(qs[0])).1,
            "X" => (want(1)?, Gate::X(qs[0])).1,
            "Y" => (want(1)?, Gate::Y(qs[0])).1,
            "Z" => (want(1)?, Gate::Z(qs[0])).1,
            "CNOT" | "CX" => (want(2)?, Gate::Cnot(qs[0], qs[1])).1,
            "CZ" => (want(2)?, Gate::Cz(qs[0], qs[1])).1,
            other => return Err(Error::Parse(format!("unknown Clifford gate {other:?}"))),
        };
        if let Gate::Cnot(a, b) | Gate::Cz(a, b) = g {
            if a == b {
                return Err(Error::Parse("two-qubit gate on a single qubit".into()));
            }
        }
        Ok(g)
    }
}

/// A Clifford `C = G_m ... G_1` kept both as its gate list and as the images
/// `C X_q C^dagger`, `C Z_q C^dagger` of the single-qubit generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CliffordOp {
    n: usize,
    /// Images of `X_0..X_{n-1}` followed by `Z_0..Z_{n-1}`.
    images: Vec<PauliOperator>,
    gates: Vec<Gate>,
}

impl CliffordOp {
    pub fn identity(n: usize) -> Self {
        let mut images: Vec<PauliOperator> = (0..n).map(|q| PauliOperator::new(PauliVec::x_on(n, q), 0)).collect();
        images.extend((0..n).map(|q| PauliOperator::new(PauliVec::z_on(n, q), 0)));
        CliffordOp {
            n,
            images,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n: usize, gates: &[Gate]) -> Result<Self> {
        let mut c = Self::identity(n);
        for &g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Parses one gate per line; blank lines and `#` comments are skipped.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let gates: Vec<Gate> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<_>>()?;
        Self::from_gates(n, &gates)
    }

    pub fn to_text(&self) -> String {
        self.gates.iter().map(|g| format!("{g}\n")).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends `g`, so that the operator becomes `G C`.
    pub fn push(&mut self, g: Gate) -> Result<()> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q + 1,
            });
        }
        for im in self.images.iter_mut() {
            *im = g.conjugate(im);
        }
        self.gates.push(g);
        Ok(())
    }

    /// `C P C^dagger`.
    pub fn conjugate(&self, p: &PauliOperator) -> Result<PauliOperator> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.n(),
            });
        }
        let n = self.n;
        let mut out = PauliOperator::new(PauliVec::zero(n), p.xz_phase());
        for q in 0..n {
            if p.vec.x_bit(q) {
                out = out.mul(&self.images[q]);
            }
            if p.vec.z_bit(q) {
                out = out.mul(&self.images[n + q]);
            }
        }
        Ok(out)
    }

    /// Image of the Hermitian Weyl operator `W_v`.
    pub fn conjugate_vec(&self, v: &PauliVec) -> Result<PauliOperator> {
        self.conjugate(&PauliOperator::new(*v, 0))
    }

    /// Image of a subspace.
    pub fn conjugate_subspace(&self, s: &Subspace) -> Result<Subspace> {
        let imgs: Vec<PauliVec> = s
            .basis()
            .iter()
            .map(|v| self.conjugate_vec(v).map(|p| p.vec))
            .collect::<Result<_>>()?;
        Subspace::span(self.n, imgs)
    }

    /// Symplectic part of the tableau: images of `X_q` then `Z_q`.
    pub fn symplectic_images(&self) -> Vec<PauliVec> {
        self.images.iter().map(|p| p.vec).collect()
    }

    /// Sign bits: `true` where the image is `-W`.
    pub fn sign_bits(&self) -> Vec<bool> {
        self.images.iter().map(|p| p.phase() == 2).collect()
    }

    pub fn inverse(&self) -> Self {
        let gates: Vec<Gate> = self.gates.iter().rev().map(Gate::inverse).collect();
        Self::from_gates(self.n, &gates).expect("same qubit range")
    }

    /// `self` followed by `next`, i.e. the operator `next * self`.
    pub fn then(&self, next: &CliffordOp) -> Result<Self> {
        if next.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: next.n,
            });
        }
        let mut c = self.clone();
        for &g in &next.gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn dense(&self, cap: usize) -> Result<CMatrix> {
        if self.n > cap {
            return Err(Error::TooManyQubits { n: self.n, cap });
        }
        let mut m = identity(1 << self.n);
        for g in &self.gates {
            g.apply_dense(&mut m, self.n);
        }
        Ok(m)
    }

    /// Random circuit of `len` gates drawn from `{H, S, CNOT}`.
    pub fn random<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Self {
        let mut c = Self::identity(n);
        for _ in 0..len {
            let q = rng.random_range(0..n);
            let g = match rng.random_range(0..3) {
                0 => Gate::H(q),
                1 => Gate::S(q),
                _ if n > 1 => {
                    let mut t = rng.random_range(0..n - 1);
                    if t >= q {
                        t += 1;
                    }
                    Gate::Cnot(q, t)
                }
                _ => Gate::H(q),
            };
            c.push(g).unwrap();
        }
        c
    }
}

struct Synth {
    c: CliffordOp,
    tracked: Vec<PauliOperator>,
    free: Vec<bool>,
}

impl Synth {
    fn gate(&mut self, g: Gate) {
        self.c.push(g).expect("qubits in range");
        for p in self.tracked.iter_mut() {
            *p = g.conjugate(p);
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.gate(Gate::Cnot(a, b));
        self.gate(Gate::Cnot(b, a));
        self.gate(Gate::Cnot(a, b));
    }

    /// Turns `Z`/`Y` factors of tracked operator `idx` into `X` on the free
    /// qubits, skipping `keep`.
    fn clear_z(&mut self, idx: usize, keep: Option<usize>) {
        for q in 0..self.c.n {
            if !self.free[q] || Some(q) == keep {
                continue;
            }
            let v = self.tracked[idx].vec;
            if v.z_bit(q) {
                self.gate(if v.x_bit(q) { Gate::S(q) } else { Gate::H(q) });
            }
        }
    }

    /// Reduces the free part of tracked operator `idx` to a single `X` on
    /// qubit `target`.
    fn reduce_to_x(&mut self, idx: usize, target: usize) -> Result<()> {
        self.clear_z(idx, None);
        let v = self.tracked[idx].vec;
        let support: Vec<usize> = (0..self.c.n).filter(|&q| self.free[q] && v.x_bit(q)).collect();
        if support.is_empty() {
            return Err(Error::MalformedBasis(
                "generator has no support on the remaining qubits".into(),
            ));
        }
        let p = if support.contains(&target) { target } else { support[0] };
        for &j in &support {
            if j != p {
                self.gate(Gate::Cnot(p, j));
            }
        }
        if p != target {
            self.swap(p, target);
        }
        Ok(())
    }
}

/// A Clifford `C` with `C x_i C^dagger = ±X` and `C z_i C^dagger = ±Z` on
/// qubit `n - a + i` for each pair, and `C g_j C^dagger = ±Z` on qubit
/// `n - a - b + j` for each isotropic vector. Hence `C span(B) C^dagger =
/// W_{a,b}`.
pub fn canonicalize_subgroup(basis: &SymplecticBasis) -> Result<CliffordOp> {
    basis.check()?;
    let n = basis.n;
    let (a, b) = (basis.a(), basis.b());
    let tracked = basis.vectors().into_iter().map(|v| PauliOperator::new(v, 0)).collect();
    let mut s = Synth {
        c: CliffordOp::identity(n),
        tracked,
        free: vec![true; n],
    };

    for i in 0..a {
        let t = n - a + i;
        let (ix, iz) = (2 * i, 2 * i + 1);
        s.reduce_to_x(ix, t)?;
        if s.tracked[iz].vec != PauliVec::z_on(n, t) {
            s.gate(Gate::H(t));
            if s.tracked[iz].vec.z_bit(t) {
                s.gate(Gate::S(t));
            }
            s.clear_z(iz, Some(t));
            for q in 0..n {
                if q != t && s.free[q] && s.tracked[iz].vec.x_bit(q) {
                    s.gate(Gate::Cnot(t, q));
                }
            }
            s.gate(Gate::H(t));
        }
        s.free[t] = false;
    }

    for j in 0..b {
        let t = n - a - b + j;
        let idx = 2 * a + j;
        s.reduce_to_x(idx, t)?;
        for q in n - a - b..t {
            if s.tracked[idx].vec.z_bit(q) {
                s.gate(Gate::Cz(t, q));
            }
        }
        s.gate(Gate::H(t));
        s.free[t] = false;
    }

    for (k, p) in s.tracked.iter().enumerate() {
        let want = if k < 2 * a {
            let q = n - a + k / 2;
            if k % 2 == 0 {
                PauliVec::x_on(n, q)
            } else {
                PauliVec::z_on(n, q)
            }
        } else {
            PauliVec::z_on(n, n - a - b + (k - 2 * a))
        };
        if p.vec != want {
            return Err(Error::MalformedBasis(format!("generator {k} did not reach its target")));
        }
    }
    Ok(s.c)
}

/// Clifford `C` with `C T C^dagger = W_{a,b}` for the decomposition `(a, b)`
/// of `T`.
pub fn clifford_to_block(t: &Subspace) -> Result<(CliffordOp, usize, usize)> {
    let nb = symplectic_gram_schmidt(t, t)?;
    let c = canonicalize_subgroup(&nb.inner)?;
    Ok((c, nb.inner.a(), nb.inner.b()))
}

/// SWAP network moving `qubits` (in the given order) onto the last
/// `qubits.len()` positions.
pub fn qubits_to_end(n: usize, qubits: &[usize]) -> Result<CliffordOp> {
    let k = qubits.len();
    if k > n || qubits.iter().any(|&q| q >= n) {
        return Err(Error::DimensionMismatch { expected: n, got: k });
    }
    let mut pos: Vec<usize> = (0..n).collect(); // pos[logical] = physical
    let mut at: Vec<usize> = (0..n).collect(); // at[physical] = logical
    let mut c = CliffordOp::identity(n);
    for (i, &q) in qubits.iter().enumerate() {
        let dest = n - k + i;
        let src = pos[q];
        if src != dest {
            for g in [Gate::Cnot(src, dest), Gate::Cnot(dest, src), Gate::Cnot(src, dest)] {
                c.push(g)?;
            }
            let other = at[dest];
            at.swap(src, dest);
            pos[q] = dest;
            pos[other] = src;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::weyl_matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_conj(c: &CMatrix, p: &PauliOperator) -> CMatrix {
        c * p.matrix(8).unwrap() * c.adjoint()
    }

    #[test]
    fn gate_rules_match_dense() {
        let gates = [
            Gate::H(0),
            Gate::S(1),
            Gate::Sdg(2),
            Gate::X(0),
            Gate::Y(1),
            Gate::Z(2),
            Gate::Cnot(0, 2),
            Gate::Cnot(2, 1),
            Gate::Cz(1, 0),
        ];
        for g in gates {
            let c = CliffordOp::from_gates(3, &[g]).unwrap();
            let u = c.dense(8).unwrap();
            for k in 0..64u128 {
                let p = PauliOperator::new(PauliVec::from_key(3, k), 1);
                let img = g.conjugate(&p).matrix(8).unwrap();
                assert!((img - dense_conj(&u, &p)).norm() < 1e-12, "{g} on {p}");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let c = CliffordOp::parse(4, "H 3\nCNOT 1 4\n# comment\nS 2\nCZ 2 3\n").unwrap();
        assert_eq!(c.gates()[1], Gate::Cnot(0, 3));
        assert_eq!(CliffordOp::parse(4, &c.to_text()).unwrap(), c);
        assert!(CliffordOp::parse(2, "CNOT 1 3").is_err());
        assert!(CliffordOp::parse(2, "CNOT 0 1").is_err());
        assert!(CliffordOp::parse(2, "T 1").is_err());
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let c = CliffordOp::from_gates(1, &[Gate::H(0)]).unwrap();
        assert_eq!(c.conjugate(&"+X".parse().unwrap()).unwrap(), "+Z".parse().unwrap());
        assert_eq!(c.conjugate(&"+Y".parse().unwrap()).unwrap(), "-Y".parse().unwrap());
    }

    #[test]
    fn canonicalize_small_examples() {
        let pv = |s: &str| s.parse::<PauliVec>().unwrap();
        // <ZI, IX> is isotropic of dimension 2: maps onto W_{0,2}
        let t = Subspace::span(2, [pv("ZI"), pv("IX")]).unwrap();
        let (c, a, b) = clifford_to_block(&t).unwrap();
        assert_eq!((a, b), (0, 2));
        assert_eq!(c.conjugate_subspace(&t).unwrap(), Subspace::canonical(2, 0, 2).unwrap());
        // a single pair on qubit 0 of 3
        let t = Subspace::span(3, [pv("XII"), pv("ZII")]).unwrap();
        let (c, a, b) = clifford_to_block(&t).unwrap();
        assert_eq!((a, b), (1, 0));
        assert_eq!(c.conjugate_subspace(&t).unwrap(), Subspace::canonical(3, 1, 0).unwrap());
        // malformed: a "pair" that commutes
        let bad = SymplecticBasis {
            n: 2,
            pairs: vec![(pv("XI"), pv("IZ"))],
            isotropic: vec![],
        };
        assert!(canonicalize_subgroup(&bad).is_err());
    }

    #[test]
    fn qubit_permutation() {
        let c = qubits_to_end(5, &[1, 3]).unwrap();
        let img = c.conjugate_vec(&"+IXIZI".parse().unwrap()).unwrap();
        assert_eq!(img.vec, "+IIIXZ".parse().unwrap());
        let c = qubits_to_end(4, &[3, 2]).unwrap();
        let img = c.conjugate_vec(&"+IIXZ".parse().unwrap()).unwrap();
        assert_eq!(img.vec, "+IIZX".parse().unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tableau_matches_dense(seed in any::<u64>(), key in 0u128..256) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = CliffordOp::random(4, 30, &mut rng);
            let u = c.dense(8).unwrap();
            prop_assert!(crate::linalg::is_unitary(&u, 1e-10));
            let p = PauliOperator::new(PauliVec::from_key(4, key), 0);
            let img = c.conjugate(&p).unwrap();
            prop_assert!((img.matrix(8).unwrap() - dense_conj(&u, &p)).norm() < 1e-10);
            let inv = c.inverse();
            prop_assert_eq!(inv.conjugate(&img).unwrap(), p);
        }

        #[test]
        fn canonicalizes_random_subgroups(seed in any::<u64>(), gens in prop::collection::vec((0u64..32, 0u64..32), 0..6)) {
            let n = 5;
            let t = Subspace::span(n, gens.iter().map(|&(x, z)| PauliVec::new(n, x, z).unwrap())).unwrap();
            let (c, a, b) = clifford_to_block(&t).unwrap();
            let w = Subspace::canonical(n, a, b).unwrap();
            prop_assert_eq!(c.conjugate_subspace(&t).unwrap(), w.clone());
            prop_assert_eq!(2 * a + b, t.dim());
            // dense check on one generator
            let _ = seed;
            if let Some(g) = t.basis().first() {
                let u = c.dense(8).unwrap();
                let img = &u * weyl_matrix(g, 8).unwrap() * u.adjoint();
                let want = c.conjugate_vec(g).unwrap();
                prop_assert!(w.contains(&want.vec).unwrap());
                prop_assert!((img - want.matrix(8).unwrap()).norm() < 1e-10);
            }
        }
    }
}
