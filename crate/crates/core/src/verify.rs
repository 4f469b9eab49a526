//! Self-check suites run by `pauli-learn verify <suite>`.
//!
//! Each suite re-derives a module's invariants on seeded random inputs and
//! reports one outcome per property.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::DenseUnitary;
use crate::clifford::{clifford_to_block, CliffordOp};
use crate::composed::{
    double_system, evolved_dimensions, single_qubit_pauli, term_dimension_bound, ComposedEstimate, LETTERS,
};
use crate::error::{Error, Result};
use crate::f2::{symplectic_gram_schmidt, PauliVec, Subspace};
use crate::instances::{gen_instance, InstanceSpec, LayerGate};
use crate::linalg::{gaussian, haar_state, haar_unitary, identity, kron, CMatrix};
use crate::metrics::{dist_phase_f, dist_phaseop, norm_chain_check};
use crate::pauli::{pauli_expand, pauli_project, pauli_twirl, support_span, weyl_matrix, PauliOperator};
use crate::sim::{lcu_circuit_exact, lcu_project_apply, HeisenbergOrder, Projected, QueryOracle, StateVector};
use crate::tomography::{tomo_empirical, tomo_model, RepeatedState};

pub const SUITES: [&str; 7] = ["symplectic", "pauli", "clifford", "lcu", "tomo", "metrics", "composed"];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Uniformly random nonzero-or-zero vector of `F_2^{2n}`.
pub fn random_pauli_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliVec {
    PauliVec::from_key(n, rng.random_range(0..1u128 << (2 * n)))
}

/// Span of `gens` random vectors.
pub fn random_subspace<R: Rng + ?Sized>(n: usize, gens: usize, rng: &mut R) -> Subspace {
    Subspace::span(n, (0..gens).map(|_| random_pauli_vec(n, rng))).expect("same length")
}

pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = &mut rng;
    match name {
        "symplectic" => symplectic(r),
        "pauli" => pauli(r),
        "clifford" => clifford(r),
        "lcu" => lcu(r),
        "tomo" => tomo(r),
        "metrics" => metrics(r),
        "composed" => composed(r),
        _ => Err(Error::Config(format!(
            "unknown suite {name:?}; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

fn symplectic(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let mut failures = 0;
    let trials = 500;
    for _ in 0..trials {
        let n = r.random_range(1..=8);
        let s = random_subspace(n, r.random_range(0..=2 * n), r);
        let t = Subspace::span(n, s.basis().iter().copied().filter(|_| r.random::<bool>()))?;
        let nb = symplectic_gram_schmidt(&t, &s)?;
        let ok =
            nb.inner.check().is_ok() && nb.outer().check().is_ok() && nb.inner.span() == t && nb.outer().span() == s;
        failures += usize::from(!ok);
    }
    let gs = CheckOutcome::new(
        "nested Gram-Schmidt relations and spans",
        failures == 0,
        format!("{failures}/{trials} failures"),
    );

    let mut bad_perp = 0;
    for _ in 0..trials {
        let n = r.random_range(1..=6);
        let s = random_subspace(n, r.random_range(0..=2 * n), r);
        let perp = s.symplectic_complement();
        let ok = perp.dim() == 2 * n - s.dim()
            && perp.symplectic_complement() == s
            && s.basis().iter().all(|a| perp.basis().iter().all(|b| a.symp(b) == 0));
        bad_perp += usize::from(!ok);
    }
    let perp = CheckOutcome::new(
        "complement dimension and double complement",
        bad_perp == 0,
        format!("{bad_perp}/{trials} failures"),
    );

    let mut bad_form = 0;
    for _ in 0..trials {
        let n = r.random_range(1..=8);
        let (a, b, c) = (random_pauli_vec(n, r), random_pauli_vec(n, r), random_pauli_vec(n, r));
        let ok = (a + b).symp(&c) == a.symp(&c) ^ b.symp(&c) && a.symp(&a) == 0 && a.symp(&b) == b.symp(&a);
        bad_form += usize::from(!ok);
    }
    let form = CheckOutcome::new(
        "symplectic form is bilinear and alternating",
        bad_form == 0,
        format!("{bad_form}/{trials} failures"),
    );
    Ok(vec![gs, perp, form])
}

fn random_matrix(d: usize, r: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| gaussian(r))
}

fn pauli(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let trials = 200;
    let mut worst_twirl: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(1..=4);
        let a = haar_unitary(1 << n, r);
        let s = random_subspace(n, r.random_range(0..=2 * n), r);
        let proj = pauli_project(&a, &s)?;
        worst_twirl = worst_twirl.max((&proj - pauli_twirl(&a, &s)?).norm());
        worst_idem = worst_idem.max((pauli_project(&proj, &s)? - &proj).norm());
        let e = pauli_expand(&a)?;
        let hs = a.norm_squared() / (1u64 << n) as f64;
        worst_parseval = worst_parseval.max((e.weight() - hs).abs());
    }
    Ok(vec![
        CheckOutcome::new(
            "twirl equals projection",
            worst_twirl <= 1e-10,
            format!("max discrepancy {worst_twirl:.2e}"),
        ),
        CheckOutcome::new(
            "projection is idempotent",
            worst_idem <= 1e-10,
            format!("max discrepancy {worst_idem:.2e}"),
        ),
        CheckOutcome::new(
            "Parseval identity",
            worst_parseval <= 1e-9,
            format!("max discrepancy {worst_parseval:.2e}"),
        ),
    ])
}

fn clifford(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let trials = 200;
    let mut bad_canon = 0;
    for _ in 0..trials {
        let n = r.random_range(1..=6);
        let t = random_subspace(n, r.random_range(0..=2 * n), r);
        let (c, a, b) = clifford_to_block(&t)?;
        let mapped = c.conjugate_subspace(&t)?;
        let target = Subspace::canonical(n, a, b)?;
        // dense: every canonical generator pulled back lies in T
        let cm = c.dense(n)?;
        let dense_ok = target.basis().iter().all(|w| {
            let wm = weyl_matrix(w, n).expect("small n");
            let back = cm.adjoint() * wm * &cm;
            let span = support_span(&back, 1e-9).expect("small n");
            span.dim() == 1 && span.is_subspace_of(&t).unwrap_or(false)
        });
        bad_canon += usize::from(mapped != target || !dense_ok);
    }
    let mut bad_conj = 0;
    for _ in 0..trials {
        let n = r.random_range(1..=4);
        let c = CliffordOp::random(n, 12, r);
        let p = PauliOperator::new(random_pauli_vec(n, r), 0);
        let cm = c.dense(n)?;
        let want = &cm * p.matrix(n)? * cm.adjoint();
        bad_conj += usize::from((c.conjugate(&p)?.matrix(n)? - want).norm() > 1e-9);
    }
    let mut bad_inv = 0;
    for _ in 0..trials {
        let n = r.random_range(1..=4);
        let c = CliffordOp::random(n, 12, r);
        let both = c.then(&c.inverse())?;
        bad_inv += usize::from((both.dense(n)? - identity(1 << n)).norm() > 1e-9);
    }
    Ok(vec![
        CheckOutcome::new(
            "canonicalising Clifford maps T onto W_{a,b}",
            bad_canon == 0,
            format!("{bad_canon}/{trials} failures"),
        ),
        CheckOutcome::new(
            "tableau conjugation matches dense",
            bad_conj == 0,
            format!("{bad_conj}/{trials} failures"),
        ),
        CheckOutcome::new(
            "inverse undoes the circuit",
            bad_inv == 0,
            format!("{bad_inv}/{trials} failures"),
        ),
    ])
}

fn lcu(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let instances = 20;
    let attempts = 10_000;
    let mut worst_exact: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for _ in 0..instances {
        let n = r.random_range(1..=3);
        let u = DenseUnitary::new(haar_unitary(1 << n, r))?;
        let s = random_subspace(n, r.random_range(0..=2 * n), r);
        let psi = StateVector::normalized(haar_state(1 << n, r))?;
        let oracle = QueryOracle::new(u, false);
        let p = oracle.acceptance_probability(&s, &psi)?;
        let (p_exact, _) = lcu_circuit_exact(&oracle, &s, &psi)?;
        worst_exact = worst_exact.max((p - p_exact).abs());
        let hits = (0..attempts)
            .filter(|_| matches!(lcu_project_apply(&oracle, &s, &psi, r), Ok(Projected::Accepted(_))))
            .count();
        let sigma = (p * (1.0 - p) / attempts as f64).sqrt().max(1e-12);
        worst_sigma = worst_sigma.max((hits as f64 / attempts as f64 - p).abs() / sigma);
    }
    Ok(vec![
        CheckOutcome::new(
            "circuit-exact acceptance matches projection",
            worst_exact <= 1e-8,
            format!("max gap {worst_exact:.2e}"),
        ),
        CheckOutcome::new(
            "statistical acceptance within 3 sigma",
            worst_sigma <= 3.0,
            format!("max deviation {worst_sigma:.2} sigma"),
        ),
    ])
}

fn tomo(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let trials = 200;
    let eps = 0.1;
    let mut over = 0;
    for _ in 0..trials {
        let m = r.random_range(1..=3);
        let psi = StateVector::normalized(haar_state(1 << m, r))?;
        let res = tomo_model(&psi, eps, 0.05, 4.0, r)?;
        let trace_dist = (1.0 - res.estimate.fidelity(&psi)).max(0.0).sqrt();
        over += usize::from(trace_dist > eps + 1e-12);
    }
    let model = CheckOutcome::new(
        "model backend within eps outside its failure event",
        over as f64 <= trials as f64 * 0.05 + 3.0 * (trials as f64 * 0.05 * 0.95).sqrt(),
        format!("{over}/{trials} above eps at delta 0.05"),
    );
    let psi = StateVector::normalized(haar_state(4, r))?;
    let mut src = RepeatedState::new(psi.clone(), u64::MAX);
    let res = tomo_empirical(&mut src, 2, 0.2, 10f64.ln(), 4.0, 4.0, r)?;
    let td = (1.0 - res.estimate.fidelity(&psi)).max(0.0).sqrt();
    let emp = CheckOutcome::new(
        "empirical backend reaches eps",
        td <= 0.2,
        format!("trace distance {td:.3}"),
    );
    Ok(vec![model, emp])
}

/// Phases scanned by the brute-force Frobenius check.
const FRAME_GRID: usize = 20_000;

fn metrics(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let z = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]));
    let known = (dist_phaseop(&identity(2), &z)? - 2f64.sqrt()).abs();
    let trials = 50;
    let mut worst_tri: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    let mut chain_fail = 0;
    for _ in 0..trials {
        let d = 1 << r.random_range(1..=3);
        let (u, v, w) = (haar_unitary(d, r), haar_unitary(d, r), haar_unitary(d, r));
        let (uv, vw, uw) = (dist_phaseop(&u, &v)?, dist_phaseop(&v, &w)?, dist_phaseop(&u, &w)?);
        worst_tri = worst_tri.max(uw - uv - vw);
        worst_inv = worst_inv.max((dist_phaseop(&(&w * &u), &(&w * &v))? - uv).abs());
        let numeric = (0..FRAME_GRID)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / FRAME_GRID as f64;
                (&u * Complex64::from_polar(1.0, t) - &v).norm() / (d as f64).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst_f = worst_f.max((numeric - dist_phase_f(&u, &v)?).abs());
        chain_fail += usize::from(!norm_chain_check(&random_matrix(d, r)).holds);
    }
    let a = random_matrix(4, r);
    let tensor = (kron(&identity(3), &a).norm() - 3f64.sqrt() * a.norm()).abs();
    Ok(vec![
        CheckOutcome::new(
            "dist_phaseop(I, Z) = sqrt 2",
            known <= 1e-8,
            format!("error {known:.2e}"),
        ),
        CheckOutcome::new(
            "triangle inequality",
            worst_tri <= 1e-7,
            format!("max violation {worst_tri:.2e}"),
        ),
        CheckOutcome::new(
            "unitary invariance",
            worst_inv <= 1e-7,
            format!("max discrepancy {worst_inv:.2e}"),
        ),
        CheckOutcome::new(
            "phase-aligned Frobenius closed form",
            worst_f <= 1e-5,
            format!("max discrepancy {worst_f:.2e}"),
        ),
        CheckOutcome::new(
            "Schatten norm chain",
            chain_fail == 0,
            format!("{chain_fail}/{trials} failures"),
        ),
        CheckOutcome::new(
            "Frobenius tensor identity",
            tensor <= 1e-9,
            format!("error {tensor:.2e}"),
        ),
    ])
}

fn composed(r: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let trials = 50;
    let mut worst_id: f64 = 0.0;
    let mut worst_herm: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(1..=4);
        let u = DenseUnitary::new(haar_unitary(1 << n, r))?;
        let order = if r.random::<bool>() {
            HeisenbergOrder::AdjointFirst
        } else {
            HeisenbergOrder::ForwardFirst
        };
        let est = ComposedEstimate::exact(&u, order)?;
        worst_id = worst_id.max((est.dense() - double_system(u.matrix())).norm());
        let oracle = QueryOracle::new(u, true);
        for q in 0..n {
            for l in LETTERS {
                let t = oracle.heisenberg(&single_qubit_pauli(n, q, l), order)?;
                let m = t.effective_unitary();
                let dim = 1 << n;
                worst_herm = worst_herm
                    .max((m - m.adjoint()).norm())
                    .max((m * m - identity(dim)).norm());
            }
        }
    }
    let mut too_big = 0;
    for _ in 0..100 {
        let (d, t) = (r.random_range(0..=1), r.random_range(0..=1));
        let spec = InstanceSpec::ShallowDoped {
            n: r.random_range(2..=4),
            d,
            t,
            order: HeisenbergOrder::AdjointFirst,
            layer_gate: LayerGate::Haar,
            clifford_len: None,
        };
        let inst = gen_instance(&spec, 12, r)?;
        let bound = term_dimension_bound(d, 2 * t);
        too_big += evolved_dimensions(inst.unitary.matrix(), HeisenbergOrder::AdjointFirst)?
            .iter()
            .filter(|x| x.2 > bound)
            .count();
    }
    Ok(vec![
        CheckOutcome::new(
            "exact factors reproduce U^† ⊗ U",
            worst_id <= 1e-9,
            format!("max error {worst_id:.2e}"),
        ),
        CheckOutcome::new(
            "evolved Paulis are Hermitian involutions",
            worst_herm <= 1e-9,
            format!("max error {worst_herm:.2e}"),
        ),
        CheckOutcome::new(
            "evolved Pauli dimension within 2^(d+1) + 2t",
            too_big == 0,
            format!("{too_big} terms over the bound"),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for s in SUITES {
            for c in run_suite(s, 7).unwrap() {
                assert!(c.passed, "{s}: {} ({})", c.name, c.detail);
            }
        }
        assert!(run_suite("nope", 0).is_err());
    }
}
