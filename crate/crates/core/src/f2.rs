//! Binary symplectic vector spaces.
//!
//! A [`PauliVec`] is a pair `(x | z)` of `n`-bit masks naming the Weyl
//! operator `i^{x.z} X^x Z^z`. Qubit `q` (0-based, qubit 0 first in strings)
//! lives at bit `n - 1 - q`, so `x` and `z` read as integers match the
//! computational-basis index convention used by the dense simulator.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported qubit count for packed vectors.
pub const MAX_QUBITS: usize = 64;

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PauliVec {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliVec {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "too many qubits: {n}");
        PauliVec { n: n as u8, x: 0, z: 0 }
    }

    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, cap: MAX_QUBITS });
        }
        if x & !mask(n) != 0 || z & !mask(n) != 0 {
            return Err(Error::Parse(format!("bit mask exceeds {n} qubits")));
        }
        Ok(PauliVec { n: n as u8, x, z })
    }

    /// `X` on qubit `q`.
    pub fn x_on(n: usize, q: usize) -> Self {
        let mut v = Self::zero(n);
        v.set_x(q, true);
        v
    }

    /// `Z` on qubit `q`.
    pub fn z_on(n: usize, q: usize) -> Self {
        let mut v = Self::zero(n);
        v.set_z(q, true);
        v
    }

    /// Inverse of [`PauliVec::key`].
    pub fn from_key(n: usize, key: u128) -> Self {
        let m = mask(n) as u128;
        PauliVec {
            n: n as u8,
            x: ((key >> n) & m) as u64,
            z: (key & m) as u64,
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    /// The `2n`-bit integer `x << n | z`; the column order of the echelon form.
    pub fn key(&self) -> u128 {
        ((self.x as u128) << self.n) | self.z as u128
    }

    fn bit(&self, q: usize) -> u64 {
        debug_assert!(q < self.n());
        1u64 << (self.n() - 1 - q)
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x & self.bit(q) != 0
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z & self.bit(q) != 0
    }

    pub fn set_x(&mut self, q: usize, on: bool) {
        let b = self.bit(q);
        if on {
            self.x |= b
        } else {
            self.x &= !b
        }
    }

    pub fn set_z(&mut self, q: usize, on: bool) {
        let b = self.bit(q);
        if on {
            self.z |= b
        } else {
            self.z &= !b
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn support_qubits(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    /// `[self, other]`: 0 if the operators commute, 1 otherwise.
    pub fn symp(&self, other: &PauliVec) -> u8 {
        assert_eq!(self.n, other.n, "symplectic product of mismatched lengths");
        (((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) & 1) as u8
    }

    pub fn commutes(&self, other: &PauliVec) -> bool {
        self.symp(other) == 0
    }

    /// Exchanges the `x` and `z` halves.
    pub fn swapped(&self) -> Self {
        PauliVec {
            n: self.n,
            x: self.z,
            z: self.x,
        }
    }

    pub fn letter(&self, q: usize) -> char {
        match (self.x_bit(q), self.z_bit(q)) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    /// Parses the letters of a Pauli string without its sign.
    pub(crate) fn from_letters(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, cap: MAX_QUBITS });
        }
        let mut v = PauliVec::zero(n);
        for (q, c) in s.chars().enumerate() {
            match c {
                'I' => {}
                'X' => v.set_x(q, true),
                'Y' => {
                    v.set_x(q, true);
                    v.set_z(q, true)
                }
                'Z' => v.set_z(q, true),
                other => return Err(Error::Parse(format!("unexpected Pauli letter {other:?}"))),
            }
        }
        Ok(v)
    }

    pub(crate) fn letters(&self) -> String {
        (0..self.n()).map(|q| self.letter(q)).collect()
    }
}

/// `[a, b]` with an explicit length check.
pub fn symplectic_product(a: &PauliVec, b: &PauliVec) -> Result<u8> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    Ok(a.symp(b))
}

impl Add for PauliVec {
    type Output = PauliVec;
    fn add(self, rhs: PauliVec) -> PauliVec {
        assert_eq!(self.n, rhs.n, "sum of mismatched lengths");
        PauliVec {
            n: self.n,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
        }
    }
}

impl AddAssign for PauliVec {
    fn add_assign(&mut self, rhs: PauliVec) {
        *self = *self + rhs;
    }
}

impl fmt::Display for PauliVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "+{}", self.letters())
    }
}

impl FromStr for PauliVec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s.strip_prefix('+').unwrap_or(s);
        if body.starts_with(['-', 'i']) {
            return Err(Error::Parse(format!("{s:?}: unsigned Pauli expected")));
        }
        PauliVec::from_letters(body)
    }
}

impl Serialize for PauliVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subspace of `F_2^{2n}` kept in reduced row-echelon form: basis keys are
/// sorted by decreasing pivot bit and each pivot is cleared from every other
/// basis vector. Equal subspaces therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    n: usize,
    basis: Vec<PauliVec>,
}

fn pivot(key: u128) -> u32 {
    127 - key.leading_zeros()
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_QUBITS);
        Subspace { n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Subspace::zero(n);
        for q in 0..n {
            s.insert(PauliVec::x_on(n, q)).unwrap();
            s.insert(PauliVec::z_on(n, q)).unwrap();
        }
        s
    }

    pub fn span<I: IntoIterator<Item = PauliVec>>(n: usize, gens: I) -> Result<Self> {
        let mut s = Subspace::zero(n);
        for g in gens {
            s.insert(g)?;
        }
        Ok(s)
    }

    /// The canonical subspace `W_{a,b}`: the last `a` qubits carry arbitrary
    /// Paulis, the `b` qubits before them carry `Z`-type Paulis only.
    pub fn canonical(n: usize, a: usize, b: usize) -> Result<Self> {
        if a + b > n {
            return Err(Error::Config(format!("a + b = {} exceeds n = {n}", a + b)));
        }
        let mut s = Subspace::zero(n);
        for q in n - a..n {
            s.insert(PauliVec::x_on(n, q))?;
            s.insert(PauliVec::z_on(n, q))?;
        }
        for q in n - a - b..n - a {
            s.insert(PauliVec::z_on(n, q))?;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Echelon basis, pivots descending.
    pub fn basis(&self) -> &[PauliVec] {
        &self.basis
    }

    fn check_len(&self, v: &PauliVec) -> Result<()> {
        if v.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.n(),
            });
        }
        Ok(())
    }

    /// Residual of `v` after elimination against the basis; zero iff `v` is in
    /// the span.
    pub fn reduce(&self, v: &PauliVec) -> PauliVec {
        let mut k = v.key();
        for b in &self.basis {
            let bk = b.key();
            if k >> pivot(bk) & 1 == 1 {
                k ^= bk;
            }
        }
        PauliVec::from_key(self.n, k)
    }

    pub fn contains(&self, v: &PauliVec) -> Result<bool> {
        self.check_len(v)?;
        Ok(self.reduce(v).is_zero())
    }

    /// Adds `v` to the span. Returns whether the dimension grew.
    pub fn insert(&mut self, v: PauliVec) -> Result<bool> {
        self.check_len(&v)?;
        let r = self.reduce(&v);
        if r.is_zero() {
            return Ok(false);
        }
        let rk = r.key();
        let p = pivot(rk);
        for b in self.basis.iter_mut() {
            let bk = b.key();
            if bk >> p & 1 == 1 {
                *b = PauliVec::from_key(self.n, bk ^ rk);
            }
        }
        let pos = self
            .basis
            .iter()
            .position(|b| pivot(b.key()) < p)
            .unwrap_or(self.basis.len());
        self.basis.insert(pos, r);
        Ok(true)
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        let mut s = self.clone();
        for v in &other.basis {
            s.insert(*v)?;
        }
        Ok(s)
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> Result<bool> {
        for v in &self.basis {
            if !other.contains(v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `S^perp = { y : [y, s] = 0 for all s in S }`.
    pub fn symplectic_complement(&self) -> Subspace {
        let n = self.n;
        // [y, s] is the ordinary dot product of y with s's swapped halves, so
        // the complement is the kernel of the swapped echelon matrix.
        let rows = Subspace::span(n, self.basis.iter().map(|v| v.swapped())).unwrap();
        let pivots: Vec<u32> = rows.basis.iter().map(|r| pivot(r.key())).collect();
        let mut out = Subspace::zero(n);
        for f in 0..(2 * n) as u32 {
            if pivots.contains(&f) {
                continue;
            }
            let mut k: u128 = 1u128 << f;
            for (r, &p) in rows.basis.iter().zip(&pivots) {
                if r.key() >> f & 1 == 1 {
                    k |= 1u128 << p;
                }
            }
            out.insert(PauliVec::from_key(n, k)).unwrap();
        }
        out
    }

    pub fn is_isotropic(&self) -> bool {
        self.basis
            .iter()
            .enumerate()
            .all(|(i, u)| self.basis[i + 1..].iter().all(|v| u.commutes(v)))
    }

    /// All `2^dim` elements, in binary-counter order over the echelon basis.
    pub fn elements(&self) -> Result<Vec<PauliVec>> {
        if self.dim() > 24 {
            return Err(Error::ComplementTooLarge(self.dim()));
        }
        let mut out = Vec::with_capacity(1 << self.dim());
        out.push(PauliVec::zero(self.n));
        for b in &self.basis {
            let len = out.len();
            for i in 0..len {
                let v = out[i] + *b;
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Qubits on which some element acts non-trivially.
    pub fn qubit_support(&self) -> Vec<usize> {
        let (x, z) = self.basis.iter().fold((0u64, 0u64), |(x, z), v| (x | v.x, z | v.z));
        let probe = PauliVec { n: self.n as u8, x, z };
        probe.support_qubits()
    }

    /// `Some((a, b))` when this subspace is exactly `W_{a,b}`.
    pub fn as_canonical(&self) -> Option<(usize, usize)> {
        let n = self.n;
        let a = (0..n)
            .rev()
            .take_while(|&q| {
                self.reduce(&PauliVec::x_on(n, q)).is_zero() && self.reduce(&PauliVec::z_on(n, q)).is_zero()
            })
            .count();
        let b = (0..n - a)
            .rev()
            .take_while(|&q| self.reduce(&PauliVec::z_on(n, q)).is_zero())
            .count();
        (self.dim() == 2 * a + b).then_some((a, b))
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.basis.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Subspace {
    /// Parses newline-separated Pauli strings. `n` is needed because an empty
    /// list carries no length.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut s = Subspace::zero(n);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            s.insert(line.parse()?)?;
        }
        Ok(s)
    }
}

/// A basis `{(x_i, z_i)} ∪ {z_j}` in which the pairs satisfy
/// `[x_i, z_j] = δ_ij`, all other products among pair members vanish, and the
/// isotropic vectors commute with everything in the basis.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymplecticBasis {
    pub n: usize,
    /// `(x_i, z_i)`.
    pub pairs: Vec<(PauliVec, PauliVec)>,
    pub isotropic: Vec<PauliVec>,
}

impl SymplecticBasis {
    pub fn a(&self) -> usize {
        self.pairs.len()
    }

    pub fn b(&self) -> usize {
        self.isotropic.len()
    }

    pub fn vectors(&self) -> Vec<PauliVec> {
        let mut v: Vec<PauliVec> = self.pairs.iter().flat_map(|&(x, z)| [x, z]).collect();
        v.extend(self.isotropic.iter().copied());
        v
    }

    pub fn span(&self) -> Subspace {
        Subspace::span(self.n, self.vectors()).unwrap()
    }

    /// Checks every defining relation, plus linear independence.
    pub fn check(&self) -> Result<()> {
        let all = self.vectors();
        if all.iter().any(|v| v.n() != self.n) {
            return Err(Error::MalformedBasis("vector of the wrong length".into()));
        }
        if self.span().dim() != all.len() {
            return Err(Error::MalformedBasis("vectors are linearly dependent".into()));
        }
        for (i, (xi, zi)) in self.pairs.iter().enumerate() {
            for (j, (xj, zj)) in self.pairs.iter().enumerate() {
                let want = (i == j) as u8;
                if xi.symp(zj) != want || xi.symp(xj) != 0 || zi.symp(zj) != 0 {
                    return Err(Error::MalformedBasis(format!("pair relations fail at ({i},{j})")));
                }
            }
        }
        for (j, g) in self.isotropic.iter().enumerate() {
            if all.iter().any(|v| v.symp(g) != 0) {
                return Err(Error::MalformedBasis(format!("isotropic vector {j} anticommutes")));
            }
        }
        Ok(())
    }
}

/// Output of the nested Gram-Schmidt: a symplectic basis of the inner space
/// `T` extended to one of the outer space `S ⊇ T`.
///
/// The first `ell` isotropic vectors of `inner` are paired with `partners`
/// drawn from `S`, so that `(partners[i], inner.isotropic[i])` is a
/// symplectic pair of `S`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NestedBasis {
    pub inner: SymplecticBasis,
    pub partners: Vec<PauliVec>,
    pub outer_pairs: Vec<(PauliVec, PauliVec)>,
    pub outer_isotropic: Vec<PauliVec>,
}

impl NestedBasis {
    pub fn ell(&self) -> usize {
        self.partners.len()
    }

    /// The symplectic basis of the outer space.
    pub fn outer(&self) -> SymplecticBasis {
        let ell = self.ell();
        let mut pairs = self.inner.pairs.clone();
        pairs.extend(self.partners.iter().zip(&self.inner.isotropic).map(|(&x, &z)| (x, z)));
        pairs.extend(self.outer_pairs.iter().copied());
        let mut isotropic: Vec<PauliVec> = self.inner.isotropic[ell..].to_vec();
        isotropic.extend(self.outer_isotropic.iter().copied());
        SymplecticBasis {
            n: self.inner.n,
            pairs,
            isotropic,
        }
    }
}

/// Pairs up `first` greedily: take the head, look for the first later element
/// anticommuting with it, and clean the remainder (and `others`) against the
/// new pair. Returns the pairs as `(x, z)` and the unpaired leftovers.
fn pair_off(mut list: Vec<PauliVec>, others: &mut [PauliVec]) -> (Vec<(PauliVec, PauliVec)>, Vec<PauliVec>) {
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    while !list.is_empty() {
        let z = list.remove(0);
        match list.iter().position(|t| t.symp(&z) == 1) {
            Some(j) => {
                let x = list.remove(j);
                for t in list.iter_mut().chain(others.iter_mut()) {
                    let (cx, cz) = (x.symp(t), z.symp(t));
                    if cx == 1 {
                        *t += z;
                    }
                    if cz == 1 {
                        *t += x;
                    }
                }
                pairs.push((x, z));
            }
            None => unpaired.push(z),
        }
    }
    (pairs, unpaired)
}

/// The three-phase nested Gram-Schmidt on explicit generator lists.
/// `t_gens` must be independent generators of `T`; `s_extra` must extend them
/// to independent generators of `S`.
pub fn gram_schmidt_generators(n: usize, t_gens: Vec<PauliVec>, s_extra: Vec<PauliVec>) -> NestedBasis {
    let mut h = s_extra;

    // phase one: pair within T, keeping H clean
    let (inner_pairs, mut a) = pair_off(t_gens, &mut h);

    // phase two: pair leftover isotropic T-vectors with S-generators
    let mut inner_iso = Vec::new();
    let mut partners = Vec::new();
    let mut leftover = Vec::new();
    while !a.is_empty() {
        let z = a.remove(0);
        match h.iter().position(|s| s.symp(&z) == 1) {
            Some(j) => {
                let x = h.remove(j);
                for t in a.iter_mut() {
                    if x.symp(t) == 1 {
                        *t += z;
                    }
                }
                for s in h.iter_mut() {
                    let (cx, cz) = (x.symp(s), z.symp(s));
                    if cx == 1 {
                        *s += z;
                    }
                    if cz == 1 {
                        *s += x;
                    }
                }
                inner_iso.push(z);
                partners.push(x);
            }
            None => leftover.push(z),
        }
    }
    inner_iso.extend(leftover);

    // phase three: pair what is left of H
    let (outer_pairs, outer_isotropic) = pair_off(h, &mut []);

    NestedBasis {
        inner: SymplecticBasis {
            n,
            pairs: inner_pairs,
            isotropic: inner_iso,
        },
        partners,
        outer_pairs,
        outer_isotropic,
    }
}

/// Nested symplectic Gram-Schmidt for `T ⊆ S`, using the echelon bases as the
/// input generator order.
pub fn symplectic_gram_schmidt(t: &Subspace, s: &Subspace) -> Result<NestedBasis> {
    if t.n != s.n {
        return Err(Error::DimensionMismatch {
            expected: t.n,
            got: s.n,
        });
    }
    if !t.is_subspace_of(s)? {
        return Err(Error::NotSubspace("T is not contained in S".into()));
    }
    let mut grown = t.clone();
    let mut extra = Vec::new();
    for v in &s.basis {
        if grown.insert(*v)? {
            extra.push(*v);
        }
    }
    Ok(gram_schmidt_generators(t.n, t.basis.clone(), extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(s: &str) -> PauliVec {
        s.parse().unwrap()
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = PauliVec> {
        let m = mask(n);
        (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliVec::new(n, x & m, z & m).unwrap())
    }

    fn arb_subspace(n: usize, max_gens: usize) -> impl Strategy<Value = Subspace> {
        prop::collection::vec(arb_vec(n), 0..=max_gens).prop_map(move |g| Subspace::span(n, g).unwrap())
    }

    #[test]
    fn parse_and_print() {
        let v = pv("+XIZY");
        assert_eq!(v.n(), 4);
        assert_eq!(v.x(), 0b1001);
        assert_eq!(v.z(), 0b0011);
        assert_eq!(v.to_string(), "+XIZY");
        assert_eq!(pv("XZ"), pv("+XZ"));
        assert!("-XZ".parse::<PauliVec>().is_err());
        assert!("+XQ".parse::<PauliVec>().is_err());
    }

    #[test]
    fn symplectic_product_examples() {
        // X and Z anticommute; X and X commute
        assert_eq!(pv("X").symp(&pv("Z")), 1);
        assert_eq!(pv("X").symp(&pv("X")), 0);
        assert_eq!(pv("XX").symp(&pv("ZZ")), 0);
        assert_eq!(pv("XY").symp(&pv("ZI")), 1);
        assert!(symplectic_product(&pv("X"), &pv("XX")).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(Subspace::zero(3).symplectic_complement(), Subspace::full(3));
        let z = Subspace::span(1, [pv("Z")]).unwrap();
        assert_eq!(z.symplectic_complement(), z);
        // W_{1,1} on 3 qubits: complement is Paulis on qubit 0 times {I,Z} on qubit 1
        let w = Subspace::canonical(3, 1, 1).unwrap();
        let expect = Subspace::span(3, [pv("XII"), pv("ZII"), pv("IZI")]).unwrap();
        assert_eq!(w.symplectic_complement(), expect);
    }

    #[test]
    fn canonical_detection() {
        for (n, a, b) in [(4, 1, 1), (3, 0, 2), (5, 2, 0), (2, 0, 0), (3, 1, 2)] {
            let w = Subspace::canonical(n, a, b).unwrap();
            assert_eq!(w.dim(), 2 * a + b);
            assert_eq!(w.as_canonical(), Some((a, b)));
        }
        let s = Subspace::span(3, [pv("IIX")]).unwrap();
        assert_eq!(s.as_canonical(), None);
        let s = Subspace::span(3, [pv("ZYI"), pv("IIX")]).unwrap();
        assert_eq!(s.as_canonical(), None);
        assert!(Subspace::canonical(2, 2, 1).is_err());
    }

    #[test]
    fn subspace_text_round_trip() {
        let s = Subspace::span(3, [pv("XYZ"), pv("ZZI")]).unwrap();
        assert_eq!(Subspace::parse(3, &s.to_string()).unwrap(), s);
    }

    #[test]
    fn gram_schmidt_examples() {
        // T = S = <Z1, X1> on two qubits
        let t = Subspace::span(2, [pv("ZI"), pv("XI")]).unwrap();
        let nb = symplectic_gram_schmidt(&t, &t).unwrap();
        assert_eq!((nb.inner.a(), nb.inner.b(), nb.ell()), (1, 0, 0));

        let t = Subspace::span(2, [pv("ZI"), pv("IZ")]).unwrap();
        let nb = symplectic_gram_schmidt(&t, &t).unwrap();
        assert_eq!((nb.inner.a(), nb.inner.b(), nb.ell()), (0, 2, 0));

        let t = Subspace::span(2, [pv("ZI")]).unwrap();
        let s = Subspace::span(2, [pv("ZI"), pv("XI")]).unwrap();
        let nb = symplectic_gram_schmidt(&t, &s).unwrap();
        assert_eq!((nb.inner.a(), nb.inner.b(), nb.ell()), (0, 1, 1));
        assert_eq!(nb.partners, vec![pv("XI")]);

        assert!(symplectic_gram_schmidt(&s, &t).is_err());
    }

    proptest! {
        #[test]
        fn bilinear(x in arb_vec(7), y in arb_vec(7), z in arb_vec(7)) {
            prop_assert_eq!((x + y).symp(&z), x.symp(&z) ^ y.symp(&z));
        }

        #[test]
        fn complement_dimension_and_involution(s in arb_subspace(6, 8)) {
            let c = s.symplectic_complement();
            prop_assert_eq!(s.dim() + c.dim(), 12);
            for u in s.basis() {
                for v in c.basis() {
                    prop_assert_eq!(u.symp(v), 0);
                }
            }
            prop_assert_eq!(c.symplectic_complement(), s);
        }

        #[test]
        fn echelon_form_is_canonical(g in prop::collection::vec(arb_vec(5), 0..8)) {
            let a = Subspace::span(5, g.clone()).unwrap();
            let b = Subspace::span(5, g.into_iter().rev()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn gram_schmidt_relations(s in arb_subspace(6, 8), picks in prop::collection::vec(any::<bool>(), 12)) {
            let t = Subspace::span(6, s.basis().iter().zip(&picks).filter(|(_, &p)| p).map(|(v, _)| *v)).unwrap();
            let nb = symplectic_gram_schmidt(&t, &s).unwrap();
            prop_assert!(nb.inner.check().is_ok());
            prop_assert_eq!(nb.inner.span(), t.clone());
            let outer = nb.outer();
            prop_assert!(outer.check().is_ok());
            prop_assert_eq!(outer.span(), s.clone());
            prop_assert!(nb.ell() <= nb.inner.b());
            // deterministic
            prop_assert_eq!(symplectic_gram_schmidt(&t, &s).unwrap(), nb);
        }
    }
}
