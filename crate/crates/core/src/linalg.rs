//! Dense complex linear algebra helpers shared by the simulator and learners.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `i^k` for any integer `k`.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Number of qubits for a `2^n`-dimensional space.
pub fn qubits_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Checks that `m` is square of size `2^n` and returns `n`.
pub fn square_qubits(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    qubits_of(m.nrows())
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Frobenius norm of `U^dagger U - I`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.nrows();
    (u.adjoint() * u - identity(d)).norm()
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.nrows() == u.ncols() && unitarity_residual(u) <= tol
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().sum()
}

pub fn rank(m: &CMatrix, tol: f64) -> usize {
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Nearest unitary in any unitarily invariant norm: `L R^dagger` from the SVD
/// `A = L S R^dagger`.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let svd = a.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-12) {
        return Err(Error::Degenerate(format!(
            "rank-deficient matrix in polar rounding (smallest singular value {smin:.3e})"
        )));
    }
    let (Some(l), Some(rt)) = (svd.u, svd.v_t) else {
        return Err(Error::Degenerate("SVD did not converge".into()));
    };
    Ok(l * rt)
}

/// Eigen-decomposition of a (numerically) normal matrix via complex Schur.
/// Returns the Schur vectors and the diagonal of the triangular factor.
pub fn normal_eig(m: &CMatrix) -> Result<(CMatrix, Vec<Complex64>)> {
    // Clustered spectra can stall the QR iteration at the tightest tolerance.
    let schur = [1e-14, 1e-12, 1e-10]
        .into_iter()
        .find_map(|tol| nalgebra::Schur::try_new(m.clone(), tol, 100_000))
        .ok_or_else(|| Error::Degenerate("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let diag = (0..t.nrows()).map(|j| t[(j, j)]).collect();
    Ok((q, diag))
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    normal_eig(m).map(|(_, d)| d)
}

/// Eigenphases closer than this to the branch cut make the principal root
/// ill-defined.
pub const BRANCH_MARGIN: f64 = 0.2;

/// Principal `p`-th root of a unitary after removing the global phase
/// `arg tr V`. The root is returned up to that global phase.
pub fn principal_root(v: &CMatrix, p: u64) -> Result<CMatrix> {
    assert!(p >= 1);
    let (q, diag) = normal_eig(v)?;
    let tr: Complex64 = diag.iter().sum();
    let g = if tr.norm() > 1e-12 { tr.conj() / tr.norm() } else { ONE };
    let limit = std::f64::consts::PI - BRANCH_MARGIN;
    let mut roots = Vec::with_capacity(diag.len());
    for lam in &diag {
        let theta = (lam * g).arg();
        if theta.abs() >= limit {
            return Err(Error::BranchAmbiguity(theta));
        }
        roots.push(Complex64::from_polar(1.0, theta / p as f64));
    }
    let d = CMatrix::from_diagonal(&CVector::from_vec(roots));
    let root = &q * d * q.adjoint();
    // Schur vectors of a slightly non-normal input are not exactly the
    // eigenvectors, so round back to the unitary group.
    polar_unitary(&root)
}

/// Integer power by repeated squaring.
pub fn matrix_power(m: &CMatrix, mut p: u64) -> CMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Left-multiplies every column of `m` (rows indexed by `n`-qubit basis states,
/// qubit 0 most significant) by the single-qubit gate `g` on qubit `q`.
pub fn apply_1q(m: &mut CMatrix, n: usize, q: usize, g: &[[Complex64; 2]; 2]) {
    let bit = 1usize << (n - 1 - q);
    let dim = 1usize << n;
    for c in 0..m.ncols() {
        for r in 0..dim {
            if r & bit == 0 {
                let a0 = m[(r, c)];
                let a1 = m[(r | bit, c)];
                m[(r, c)] = g[0][0] * a0 + g[0][1] * a1;
                m[(r | bit, c)] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }
}

/// Two-qubit analogue of [`apply_1q`]. The 4x4 gate is indexed by
/// `2 * bit(q1) + bit(q2)`.
pub fn apply_2q(m: &mut CMatrix, n: usize, q1: usize, q2: usize, g: &[[Complex64; 4]; 4]) {
    assert_ne!(q1, q2);
    let b1 = 1usize << (n - 1 - q1);
    let b2 = 1usize << (n - 1 - q2);
    let dim = 1usize << n;
    for c in 0..m.ncols() {
        for r in 0..dim {
            if r & (b1 | b2) == 0 {
                let idx = [r, r | b2, r | b1, r | b1 | b2];
                let v: Vec<Complex64> = idx.iter().map(|&i| m[(i, c)]).collect();
                for (row, &i) in idx.iter().enumerate() {
                    m[(i, c)] = (0..4).map(|k| g[row][k] * v[k]).sum();
                }
            }
        }
    }
}

/// Embeds a 2^k x 2^k gate acting on the listed qubits into an `n`-qubit
/// operator. The first listed qubit is the most significant gate index bit.
pub fn embed(n: usize, qubits: &[usize], g: &CMatrix) -> CMatrix {
    let dim = 1usize << n;
    let k = qubits.len();
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().fold(0, |a, m| a | m);
    let local = |r: usize| -> usize {
        let mut s = 0;
        for (j, m) in masks.iter().enumerate() {
            if r & m != 0 {
                s |= 1 << (k - 1 - j);
            }
        }
        s
    };
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        let lc = local(c);
        let rest = c & !all;
        for lr in 0..(1usize << k) {
            let v = g[(lr, lc)];
            if v == ZERO {
                continue;
            }
            let mut r = rest;
            for (j, m) in masks.iter().enumerate() {
                if lr & (1 << (k - 1 - j)) != 0 {
                    r |= m;
                }
            }
            out[(r, c)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 4, 8, 16] {
            assert!(is_unitary(&haar_unitary(d, &mut rng), 1e-10));
        }
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(4, &mut rng);
        let a = &u * Complex64::new(0.3, 0.0);
        assert!((polar_unitary(&a).unwrap() - &u).norm() < 1e-10);
        assert!(polar_unitary(&CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn principal_root_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // eigenphases within +-1 so the root is well defined
        let q = haar_unitary(4, &mut rng);
        let phases = [0.9, -0.4, 0.1, -1.0];
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            4,
            phases.iter().map(|&t| Complex64::from_polar(1.0, t)),
        ));
        let v = &q * d * q.adjoint();
        for p in [1u64, 2, 4, 8] {
            let r = principal_root(&v, p).unwrap();
            let back = matrix_power(&r, p);
            // equal up to global phase
            let ph = (back.adjoint() * &v).trace();
            let ph = ph / ph.norm();
            assert!((back * ph - &v).norm() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn principal_root_rejects_branch_cut() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![
            ONE,
            ONE,
            Complex64::from_polar(1.0, 3.1),
            Complex64::from_polar(1.0, -3.1),
        ]));
        // trace phase is ~0 so the two eigenphases near pi stay there
        assert!(matches!(principal_root(&d, 2), Err(Error::BranchAmbiguity(_))));
    }

    #[test]
    fn embed_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = haar_unitary(4, &mut rng);
        let mut arr = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                arr[i][j] = g[(i, j)];
            }
        }
        let mut m = identity(8);
        apply_2q(&mut m, 3, 2, 0, &arr);
        assert!((m - embed(3, &[2, 0], &g)).norm() < 1e-12);
    }
}
