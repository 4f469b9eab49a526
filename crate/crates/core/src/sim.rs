//! Dense simulation behind a query-counted oracle.
//!
//! Learners only see a [`QueryOracle`]. Every primitive that uses the hidden
//! unitary charges the shared counters, and derived oracles (conjugated,
//! powered, Heisenberg-evolved) charge the underlying base queries they would
//! consume on hardware.

use std::collections::HashMap;
use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Binomial, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::circuit::DenseUnitary;
use crate::clifford::Gate;
use crate::error::{Error, Result};
use crate::f2::{PauliVec, Subspace};
use crate::linalg::{apply_1q, CMatrix, CVector, ONE};
use crate::pauli::{pauli_expand, pauli_project, PauliOperator};

/// Normalised pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        let n = crate::linalg::qubits_of(amps.len())?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Degenerate(format!("state has norm {norm}")));
        }
        Ok(StateVector { n, amps })
    }

    /// Normalises `amps`, failing on the zero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 1e-300) {
            return Err(Error::Degenerate("zero vector".into()));
        }
        Self::new(amps / Complex64::new(norm, 0.0))
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = CVector::zeros(1 << n);
        amps[index] = ONE;
        StateVector { n, amps }
    }

    /// `|0^{n-a-b}>|+^b>|z>` with `z` an `a`-bit index.
    pub fn column_input(n: usize, a: usize, b: usize, z: usize) -> Self {
        let mut amps = CVector::zeros(1 << n);
        let w = Complex64::new((1.0 / (1u64 << b) as f64).sqrt(), 0.0);
        for y in 0..(1usize << b) {
            amps[(y << a) | z] = w;
        }
        StateVector { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// The trailing `k`-qubit factor of a state of the form `|0...0>|phi>`.
    pub fn suffix(&self, k: usize) -> Result<StateVector> {
        let dim = 1usize << k;
        let head: f64 = self.amps.rows(0, dim).norm_squared();
        if (head - 1.0).abs() > 1e-8 {
            return Err(Error::Degenerate(format!(
                "leading register not in |0> (weight {head})"
            )));
        }
        StateVector::normalized(self.amps.rows(0, dim).into_owned())
    }
}

/// Outcome of one postselection attempt.
#[derive(Clone, Debug, PartialEq)]
pub enum Projected {
    Accepted(StateVector),
    Rejected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub forward: u64,
    pub inverse: u64,
    #[serde(default)]
    pub controlled_fwd: u64,
    #[serde(default)]
    pub controlled_inv: u64,
}

impl QueryCounts {
    pub const FORWARD: QueryCounts = QueryCounts {
        forward: 1,
        inverse: 0,
        controlled_fwd: 0,
        controlled_inv: 0,
    };
    pub const INVERSE: QueryCounts = QueryCounts {
        forward: 0,
        inverse: 1,
        controlled_fwd: 0,
        controlled_inv: 0,
    };

    pub fn total(&self) -> u64 {
        self.forward + self.inverse + self.controlled_fwd + self.controlled_inv
    }

    pub fn times(&self, k: u64) -> QueryCounts {
        QueryCounts {
            forward: self.forward * k,
            inverse: self.inverse * k,
            controlled_fwd: self.controlled_fwd * k,
            controlled_inv: self.controlled_inv * k,
        }
    }
}

impl Add for QueryCounts {
    type Output = QueryCounts;
    fn add(self, o: QueryCounts) -> QueryCounts {
        QueryCounts {
            forward: self.forward + o.forward,
            inverse: self.inverse + o.inverse,
            controlled_fwd: self.controlled_fwd + o.controlled_fwd,
            controlled_inv: self.controlled_inv + o.controlled_inv,
        }
    }
}

impl Sub for QueryCounts {
    type Output = QueryCounts;
    fn sub(self, o: QueryCounts) -> QueryCounts {
        QueryCounts {
            forward: self.forward - o.forward,
            inverse: self.inverse - o.inverse,
            controlled_fwd: self.controlled_fwd - o.controlled_fwd,
            controlled_inv: self.controlled_inv - o.controlled_inv,
        }
    }
}

#[derive(Default, Debug)]
struct Counters {
    forward: AtomicU64,
    inverse: AtomicU64,
    controlled_fwd: AtomicU64,
    controlled_inv: AtomicU64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Which conjugation a Heisenberg-evolved oracle implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeisenbergOrder {
    /// `U^dagger P U`.
    #[serde(rename = "QC")]
    AdjointFirst,
    /// `U P U^dagger`.
    #[serde(rename = "CQ")]
    ForwardFirst,
}

#[derive(Default, Debug)]
struct Caches {
    projections: Mutex<HashMap<Subspace, Arc<CMatrix>>>,
    bell: OnceLock<Arc<Vec<f64>>>,
}

/// Black-box access to a unitary with query accounting.
///
/// Clones share counters and caches. Derived oracles share the counters of
/// their parent and charge the base queries each application would use.
#[derive(Clone, Debug)]
pub struct QueryOracle {
    n: usize,
    effective: Arc<CMatrix>,
    counters: Arc<Counters>,
    allow_inverse: bool,
    cost_fwd: QueryCounts,
    cost_inv: QueryCounts,
    caches: Arc<Caches>,
}

impl QueryOracle {
    pub fn new(target: DenseUnitary, allow_inverse: bool) -> Self {
        QueryOracle {
            n: target.n(),
            effective: Arc::new(target.into_matrix()),
            counters: Arc::default(),
            allow_inverse,
            cost_fwd: QueryCounts::FORWARD,
            cost_inv: QueryCounts::INVERSE,
            caches: Arc::default(),
        }
    }

    fn derive(&self, effective: CMatrix, cost_fwd: QueryCounts, cost_inv: QueryCounts, allow_inverse: bool) -> Self {
        QueryOracle {
            n: self.n,
            effective: Arc::new(effective),
            counters: Arc::clone(&self.counters),
            allow_inverse,
            cost_fwd,
            cost_inv,
            caches: Arc::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allows_inverse(&self) -> bool {
        self.allow_inverse
    }

    /// Base queries charged by one forward application.
    pub fn forward_cost(&self) -> QueryCounts {
        self.cost_fwd
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            forward: self.counters.forward.load(Ordering::SeqCst),
            inverse: self.counters.inverse.load(Ordering::SeqCst),
            controlled_fwd: self.counters.controlled_fwd.load(Ordering::SeqCst),
            controlled_inv: self.counters.controlled_inv.load(Ordering::SeqCst),
        }
    }

    fn charge(&self, c: QueryCounts) {
        self.counters.forward.fetch_add(c.forward, Ordering::SeqCst);
        self.counters.inverse.fetch_add(c.inverse, Ordering::SeqCst);
        self.counters
            .controlled_fwd
            .fetch_add(c.controlled_fwd, Ordering::SeqCst);
        self.counters
            .controlled_inv
            .fetch_add(c.controlled_inv, Ordering::SeqCst);
    }

    pub(crate) fn charge_forward(&self, times: u64) {
        self.charge(self.cost_fwd.times(times));
    }

    pub(crate) fn charge_inverse(&self, times: u64) -> Result<()> {
        if !self.allow_inverse {
            return Err(Error::InverseUnavailable);
        }
        self.charge(self.cost_inv.times(times));
        Ok(())
    }

    /// The simulated unitary. This is ground truth for harnesses and
    /// diagnostics; learners never read it.
    pub fn effective_unitary(&self) -> &CMatrix {
        &self.effective
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: psi.n,
            });
        }
        Ok(())
    }

    /// `U|psi>` or `U^dagger|psi>`.
    pub fn apply(&self, dir: Direction, psi: &StateVector) -> Result<StateVector> {
        self.check_state(psi)?;
        let amps = match dir {
            Direction::Forward => {
                self.charge_forward(1);
                &*self.effective * &psi.amps
            }
            Direction::Inverse => {
                self.charge_inverse(1)?;
                self.effective.adjoint() * &psi.amps
            }
        };
        StateVector::normalized(amps)
    }

    /// `C U C^dagger` for a known unitary `C`.
    pub fn conjugated(&self, c: &CMatrix) -> Result<Self> {
        self.check_square(c)?;
        let eff = c * &*self.effective * c.adjoint();
        Ok(self.derive(eff, self.cost_fwd, self.cost_inv, self.allow_inverse))
    }

    /// `U M` for a known unitary `M`.
    pub fn right_multiplied(&self, m: &CMatrix) -> Result<Self> {
        self.check_square(m)?;
        let eff = &*self.effective * m;
        Ok(self.derive(eff, self.cost_fwd, self.cost_inv, self.allow_inverse))
    }

    /// `(U W^dagger)^p` for a known unitary `W`; each application uses `p`
    /// queries.
    pub fn residual_power(&self, w: &CMatrix, p: u64) -> Result<Self> {
        self.check_square(w)?;
        let eff = crate::linalg::matrix_power(&(&*self.effective * w.adjoint()), p);
        Ok(self.derive(eff, self.cost_fwd.times(p), self.cost_inv.times(p), self.allow_inverse))
    }

    /// `U^dagger P U` (or `U P U^dagger`). One application costs one forward
    /// and one inverse query, and the result is its own inverse.
    pub fn heisenberg(&self, p: &PauliOperator, order: HeisenbergOrder) -> Result<Self> {
        if !self.allow_inverse {
            return Err(Error::InverseUnavailable);
        }
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.n(),
            });
        }
        let pm = p.matrix(self.n)?;
        let u = &*self.effective;
        let eff = match order {
            HeisenbergOrder::AdjointFirst => u.adjoint() * pm * u,
            HeisenbergOrder::ForwardFirst => u * pm * u.adjoint(),
        };
        let cost = self.cost_fwd + self.cost_inv;
        Ok(self.derive(eff, cost, cost, true))
    }

    fn check_square(&self, m: &CMatrix) -> Result<()> {
        let d = 1usize << self.n;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
        Ok(())
    }

    /// `Pi_S(U)`, cached per subspace.
    pub(crate) fn projected(&self, s: &Subspace) -> Result<Arc<CMatrix>> {
        if s.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: s.n(),
            });
        }
        if let Some(m) = self.caches.projections.lock().unwrap().get(s) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(pauli_project(&self.effective, s)?);
        self.caches
            .projections
            .lock()
            .unwrap()
            .insert(s.clone(), Arc::clone(&m));
        Ok(m)
    }

    /// Acceptance probability `||Pi_S(U)|psi>||^2` of one LCU attempt.
    /// Simulator-side; charges nothing.
    pub fn acceptance_probability(&self, s: &Subspace, psi: &StateVector) -> Result<f64> {
        self.check_state(psi)?;
        Ok((&*self.projected(s)? * &psi.amps).norm_squared())
    }

    /// Bell-basis outcome distribution of the Choi state, indexed by
    /// [`PauliVec::key`]. Simulator-side; charges nothing.
    pub fn bell_distribution(&self) -> Result<Arc<Vec<f64>>> {
        if let Some(d) = self.caches.bell.get() {
            return Ok(Arc::clone(d));
        }
        let probs = if self.n <= CHOI_STATEVECTOR_CAP {
            choi_bell_probabilities(&self.effective, self.n)
        } else {
            pauli_expand(&self.effective)?
                .iter()
                .map(|(_, c)| c.norm_sqr())
                .collect()
        };
        Ok(Arc::clone(self.caches.bell.get_or_init(|| Arc::new(probs))))
    }

    /// Total Bell mass on vectors inside `a`. Simulator-side.
    pub fn bell_mass(&self, a: &Subspace) -> Result<f64> {
        let d = self.bell_distribution()?;
        let mut mass = 0.0;
        for (k, &p) in d.iter().enumerate() {
            if p > 0.0 && a.contains(&PauliVec::from_key(self.n, k as u128))? {
                mass += p;
            }
        }
        Ok(mass)
    }
}

/// Largest `n` for which the `2n`-qubit Choi state is simulated explicitly.
pub const CHOI_STATEVECTOR_CAP: usize = 10;

/// Builds `(I ⊗ U)|Omega>` on `2n` qubits, applies `CNOT(i, n+i)` and `H(i)`
/// for every `i`, and reads off outcome probabilities. The first register
/// yields the `z` bits and the second the `x` bits.
fn choi_bell_probabilities(u: &CMatrix, n: usize) -> Vec<f64> {
    let d = 1usize << n;
    let mut state = CMatrix::zeros(d * d, 1);
    let scale = 1.0 / (d as f64).sqrt();
    for x in 0..d {
        for y in 0..d {
            state[(x * d + y, 0)] = u[(y, x)] * scale;
        }
    }
    for i in 0..n {
        Gate::Cnot(i, n + i).apply_dense(&mut state, 2 * n);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hm = [
            [Complex64::new(h, 0.0); 2],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ];
        apply_1q(&mut state, 2 * n, i, &hm);
    }
    let mut probs = vec![0.0; d * d];
    for r1 in 0..d {
        for r2 in 0..d {
            let p = state[(r1 * d + r2, 0)].norm_sqr();
            // x bits from the second register, z bits from the first
            probs[(r2 << n) | r1] = if p < 1e-28 { 0.0 } else { p };
        }
    }
    probs
}

/// Draws `m` Bell-basis outcomes on the Choi state of the oracle, charging
/// `m` forward applications.
pub fn bell_sample_choi<R: Rng + ?Sized>(oracle: &QueryOracle, m: usize, rng: &mut R) -> Result<Vec<PauliVec>> {
    let dist = oracle.bell_distribution()?;
    let w = WeightedIndex::new(dist.iter().copied()).map_err(|e| Error::Degenerate(e.to_string()))?;
    oracle.charge_forward(m as u64);
    Ok((0..m)
        .map(|_| PauliVec::from_key(oracle.n, w.sample(rng) as u128))
        .collect())
}

/// Outcome counts of `m` Bell-basis measurements, drawn as one multinomial
/// sample; only outcomes seen at least once are returned. Charges `m`
/// forward applications.
pub fn bell_sample_counts<R: Rng + ?Sized>(oracle: &QueryOracle, m: u64, rng: &mut R) -> Result<Vec<(PauliVec, u64)>> {
    let dist = oracle.bell_distribution()?;
    oracle.charge_forward(m);
    let mut left = m;
    let mut mass: f64 = dist.iter().sum();
    let mut out = Vec::new();
    for (k, &p) in dist.iter().enumerate() {
        if left == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q)
            .map_err(|e| Error::Degenerate(e.to_string()))?
            .sample(rng);
        if c > 0 {
            out.push((PauliVec::from_key(oracle.n, k as u128), c));
        }
        left -= c;
        mass -= p;
    }
    Ok(out)
}

/// One postselection attempt of the LCU block encoding of `Pi_S(U)`.
pub fn lcu_project_apply<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    s: &Subspace,
    psi: &StateVector,
    rng: &mut R,
) -> Result<Projected> {
    oracle.check_state(psi)?;
    let phi = &*oracle.projected(s)? * &psi.amps;
    oracle.charge_forward(1);
    let p = phi.norm_squared();
    if p > 0.0 && rng.random::<f64>() < p {
        Ok(Projected::Accepted(StateVector::normalized(phi)?))
    } else {
        Ok(Projected::Rejected)
    }
}

/// Largest `n + dim S^perp` for the explicit LCU circuit.
pub const LCU_CIRCUIT_CAP: usize = 14;

/// Runs the LCU circuit `PREP^dagger SEL PREP` explicitly on `dim S^perp`
/// ancillas plus the system. Returns the probability of the all-zero ancilla
/// outcome and the postselected state. Charges one forward query.
pub fn lcu_circuit_exact(oracle: &QueryOracle, s: &Subspace, psi: &StateVector) -> Result<(f64, Option<StateVector>)> {
    oracle.check_state(psi)?;
    let n = oracle.n;
    let gens = s.symplectic_complement().basis().to_vec();
    let l = gens.len();
    if n + l > LCU_CIRCUIT_CAP {
        return Err(Error::TooManyQubits {
            n: n + l,
            cap: LCU_CIRCUIT_CAP,
        });
    }
    let total = n + l;
    let dsys = 1usize << n;
    let mut state = CMatrix::zeros(1 << total, 1);
    for i in 0..dsys {
        state[(i, 0)] = psi.amps[i];
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hm = [
        [Complex64::new(h, 0.0); 2],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    ];
    for q in 0..l {
        apply_1q(&mut state, total, q, &hm);
    }
    let weyls: Vec<CMatrix> = gens
        .iter()
        .map(|g| crate::pauli::weyl_matrix(g, n))
        .collect::<Result<_>>()?;
    let controlled = |state: &mut CMatrix, i: usize| {
        let bit = 1usize << (l - 1 - i);
        for anc in 0..(1usize << l) {
            if anc & bit != 0 {
                let block = state.view((anc * dsys, 0), (dsys, 1)).into_owned();
                state
                    .view_mut((anc * dsys, 0), (dsys, 1))
                    .copy_from(&(&weyls[i] * block));
            }
        }
    };
    for i in 0..l {
        controlled(&mut state, i);
    }
    oracle.charge_forward(1);
    for anc in 0..(1usize << l) {
        let block = state.view((anc * dsys, 0), (dsys, 1)).into_owned();
        state
            .view_mut((anc * dsys, 0), (dsys, 1))
            .copy_from(&(&*oracle.effective * block));
    }
    for i in (0..l).rev() {
        controlled(&mut state, i);
    }
    for q in 0..l {
        apply_1q(&mut state, total, q, &hm);
    }
    let accepted = CVector::from_iterator(dsys, (0..dsys).map(|i| state[(i, 0)]));
    let p = accepted.norm_squared();
    let out = if p > 1e-300 {
        Some(StateVector::normalized(accepted)?)
    } else {
        None
    };
    Ok((p, out))
}

/// `d` accepted copies of the projected state and the attempts spent.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedCopies {
    pub state: StateVector,
    pub copies: u64,
    pub attempts: u64,
}

/// Repeats LCU attempts until `d` successes or `max_attempts`. The attempt
/// count is drawn from its exact negative-binomial law instead of looping;
/// every attempt is charged.
pub fn collect_projected_copies<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    s: &Subspace,
    psi: &StateVector,
    d: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<ProjectedCopies> {
    oracle.check_state(psi)?;
    let phi = &*oracle.projected(s)? * &psi.amps;
    let p = phi.norm_squared().min(1.0);
    let attempts = if p <= 1e-300 {
        u64::MAX
    } else if p >= 1.0 - 1e-15 || d == 0 {
        d
    } else {
        // failures before the d-th success: Poisson with Gamma(d, (1-p)/p) rate
        let lambda = Gamma::new(d as f64, (1.0 - p) / p)
            .map_err(|e| Error::Degenerate(e.to_string()))?
            .sample(rng);
        let failures = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::Degenerate(e.to_string()))?
                .sample(rng)
        } else {
            0.0
        };
        d.saturating_add(failures.min(u64::MAX as f64 / 2.0) as u64)
    };
    if attempts > max_attempts {
        oracle.charge_forward(max_attempts);
        return Err(Error::PostselectionExhausted { attempts: max_attempts });
    }
    oracle.charge_forward(attempts);
    Ok(ProjectedCopies {
        state: StateVector::normalized(phi)?,
        copies: d,
        attempts,
    })
}

/// Chebyshev polynomial `T_L(x)` for real `x`, any sign.
fn chebyshev(l: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (l * x.acos()).cos()
    } else if x > 1.0 {
        (l * x.acosh()).cosh()
    } else {
        let s = if (l as i64) % 2 == 0 { 1.0 } else { -1.0 };
        s * (l * (-x).acosh()).cosh()
    }
}

/// Sequence length `L` (odd) of the fixed-point search that reaches success
/// probability at least `1 - delta` whenever the marked mass is at least
/// `alpha`.
pub fn fixed_point_length(alpha: f64, delta: f64) -> u64 {
    let d = delta.sqrt();
    let need = (1.0 / d).acosh() / (1.0 / (1.0 - alpha).sqrt()).acosh();
    let mut l = need.ceil().max(1.0) as u64;
    if l.is_multiple_of(2) {
        l += 1;
    }
    l
}

/// Success probability of the fixed-point search of length `l` tuned for
/// failure `delta`, when the marked mass is `mu`.
pub fn fixed_point_success(l: u64, delta: f64, mu: f64) -> f64 {
    let d = delta.sqrt();
    let gamma = 1.0 / chebyshev(1.0 / l as f64, 1.0 / d);
    let t = chebyshev(l as f64, (1.0 - mu).max(0.0).sqrt() / gamma);
    (1.0 - d * d * t * t).clamp(0.0, 1.0)
}

/// Amplified sampling of a Bell outcome outside `a`, simulated at the level
/// of the fixed-point amplification guarantee. Charges
/// `ceil(c ln(1/delta) / sqrt(alpha))` queries, split evenly between forward
/// and inverse.
pub fn amplified_support_sample<R: Rng + ?Sized>(
    oracle: &QueryOracle,
    a: &Subspace,
    alpha: f64,
    delta: f64,
    amp_const: f64,
    rng: &mut R,
) -> Result<Option<PauliVec>> {
    if !oracle.allow_inverse {
        return Err(Error::InverseUnavailable);
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("alpha={alpha}, delta={delta} out of range")));
    }
    let q = (amp_const * (1.0 / delta).ln() / alpha.sqrt()).ceil().max(1.0) as u64;
    let inv = q / 2;
    oracle.charge_forward(q - inv);
    oracle.charge_inverse(inv)?;

    let dist = oracle.bell_distribution()?;
    let n = oracle.n;
    let mut outside = Vec::new();
    let mut mu = 0.0;
    for (k, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            let v = PauliVec::from_key(n, k as u128);
            if !a.contains(&v)? {
                outside.push((v, p));
                mu += p;
            }
        }
    }
    if outside.is_empty() {
        return Ok(None);
    }
    let l = fixed_point_length(alpha, delta);
    if rng.random::<f64>() >= fixed_point_success(l, delta, mu) {
        return Ok(None);
    }
    let w = WeightedIndex::new(outside.iter().map(|(_, p)| *p)).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(Some(outside[w.sample(rng)].0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, identity, kron};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[&[f64]]) -> CMatrix {
        let d = rows.len();
        CMatrix::from_fn(d, d, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        mat(&[&[h, h], &[h, -h]])
    }

    fn cnot() -> CMatrix {
        mat(&[
            &[1., 0., 0., 0.],
            &[0., 1., 0., 0.],
            &[0., 0., 0., 1.],
            &[0., 0., 1., 0.],
        ])
    }

    fn oracle(m: CMatrix, inv: bool) -> QueryOracle {
        QueryOracle::new(DenseUnitary::new(m).unwrap(), inv)
    }

    fn pv(s: &str) -> PauliVec {
        s.parse().unwrap()
    }

    #[test]
    fn apply_counts_queries() {
        let x = oracle(mat(&[&[0., 1.], &[1., 0.]]), false);
        let out = x.apply(Direction::Forward, &StateVector::basis(1, 0)).unwrap();
        assert_eq!(out, StateVector::basis(1, 1));
        assert_eq!(x.counts().forward, 1);
        assert!(matches!(
            x.apply(Direction::Inverse, &out),
            Err(Error::InverseUnavailable)
        ));
        let h = oracle(hadamard(), false);
        let psi = StateVector::basis(1, 1);
        let back = h
            .apply(Direction::Forward, &h.apply(Direction::Forward, &psi).unwrap())
            .unwrap();
        assert!((back.fidelity(&psi) - 1.0).abs() < 1e-12);
        assert_eq!(h.counts().forward, 2);
    }

    #[test]
    fn bell_sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = oracle(mat(&[&[1., 0.], &[0., -1.]]), false);
        assert!(bell_sample_choi(&z, 50, &mut rng)
            .unwrap()
            .iter()
            .all(|v| *v == pv("Z")));
        assert_eq!(z.counts().forward, 50);

        let h = oracle(hadamard(), false);
        let s = bell_sample_choi(&h, 4000, &mut rng).unwrap();
        let xs = s.iter().filter(|v| **v == pv("X")).count();
        assert!(s.iter().all(|v| *v == pv("X") || *v == pv("Z")));
        assert!((xs as f64 - 2000.0).abs() < 4.0 * 31.7);

        let c = oracle(cnot(), false);
        let d = c.bell_distribution().unwrap();
        for k in ["II", "ZI", "IX", "ZX"] {
            assert!((d[pv(k).key() as usize] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_counts_are_multinomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = oracle(hadamard(), false);
        let counts = bell_sample_counts(&h, 1_000_000_000, &mut rng).unwrap();
        assert_eq!(counts.iter().map(|c| c.1).sum::<u64>(), 1_000_000_000);
        assert_eq!(counts.len(), 2);
        let xs = counts.iter().find(|c| c.0 == pv("X")).unwrap().1 as f64;
        assert!((xs - 5e8).abs() < 4.0 * 15_812.0);
        assert_eq!(h.counts().forward, 1_000_000_000);
    }

    #[test]
    fn choi_distribution_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            let u = haar_unitary(1 << n, &mut rng);
            let via_choi = choi_bell_probabilities(&u, n);
            let via_exp: Vec<f64> = pauli_expand(&u).unwrap().iter().map(|(_, c)| c.norm_sqr()).collect();
            for (a, b) in via_choi.iter().zip(&via_exp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lcu_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = oracle(hadamard(), false);
        let zsub = Subspace::span(1, [pv("Z")]).unwrap();
        let psi = StateVector::basis(1, 0);
        assert!((h.acceptance_probability(&zsub, &psi).unwrap() - 0.5).abs() < 1e-12);
        let (p, st) = lcu_circuit_exact(&h, &zsub, &psi).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((st.unwrap().fidelity(&psi) - 1.0).abs() < 1e-12);
        let mut acc = 0;
        for _ in 0..2000 {
            if let Projected::Accepted(s) = lcu_project_apply(&h, &zsub, &psi, &mut rng).unwrap() {
                assert!((s.fidelity(&psi) - 1.0).abs() < 1e-12);
                acc += 1;
            }
        }
        assert!((acc as f64 - 1000.0).abs() < 4.0 * 22.4);
        assert_eq!(h.counts().forward, 2001);

        // support inside S: always accepted, output U|psi>
        let full = Subspace::full(1);
        match lcu_project_apply(&h, &full, &psi, &mut rng).unwrap() {
            Projected::Accepted(s) => assert!((s.amps()[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12),
            Projected::Rejected => panic!("must accept"),
        }
        // traceless U, S = {0}
        let z = oracle(mat(&[&[1., 0.], &[0., -1.]]), false);
        assert_eq!(z.acceptance_probability(&Subspace::zero(1), &psi).unwrap(), 0.0);
        assert_eq!(
            lcu_project_apply(&z, &Subspace::zero(1), &psi, &mut rng).unwrap(),
            Projected::Rejected
        );
    }

    #[test]
    fn lcu_circuit_agrees_with_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(8, &mut rng);
        let o = oracle(u, false);
        for gens in [vec!["XIZ"], vec!["ZII", "IZI"], vec!["XXI", "ZZI", "IIY"]] {
            let s = Subspace::span(3, gens.iter().map(|g| pv(g))).unwrap();
            let psi = StateVector::normalized(crate::linalg::haar_state(8, &mut rng)).unwrap();
            let p = o.acceptance_probability(&s, &psi).unwrap();
            let (pc, st) = lcu_circuit_exact(&o, &s, &psi).unwrap();
            assert!((p - pc).abs() < 1e-10);
            let phi = StateVector::normalized(&*o.projected(&s).unwrap() * psi.amps()).unwrap();
            assert!(st.unwrap().fidelity(&phi) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn collecting_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = kron(&identity(2), &hadamard());
        let o = oracle(u.clone(), false);
        let psi = StateVector::basis(2, 0);
        let full = Subspace::full(2);
        let c = collect_projected_copies(&o, &full, &psi, 5, 100, &mut rng).unwrap();
        assert_eq!((c.copies, c.attempts), (5, 5));

        // acceptance 1/2
        let s = Subspace::span(2, [pv("IZ")]).unwrap();
        let mut total = 0;
        for _ in 0..200 {
            total += collect_projected_copies(&o, &s, &psi, 100, 10_000, &mut rng)
                .unwrap()
                .attempts;
        }
        let mean = total as f64 / 200.0;
        // negative binomial: mean 200, sd sqrt(200)/... per run ~ 14.1
        assert!((mean - 200.0).abs() < 4.0 * 14.2 / 200f64.sqrt(), "mean {mean}");

        let z = oracle(kron(&identity(2), &mat(&[&[1., 0.], &[0., -1.]])), false);
        let before = z.counts().forward;
        let r = collect_projected_copies(&z, &Subspace::zero(2), &psi, 1, 3, &mut rng);
        assert!(matches!(r, Err(Error::PostselectionExhausted { attempts: 3 })));
        assert_eq!(z.counts().forward - before, 3);
    }

    #[test]
    fn fixed_point_guarantee() {
        for &(alpha, delta) in &[(0.4, 0.1), (0.01, 0.05), (0.2, 0.3)] {
            let l = fixed_point_length(alpha, delta);
            for k in 0..=20 {
                let mu = alpha + (1.0 - alpha) * k as f64 / 20.0;
                assert!(
                    fixed_point_success(l, delta, mu) >= 1.0 - delta - 1e-9,
                    "alpha {alpha} mu {mu}"
                );
            }
        }
        assert!(fixed_point_success(fixed_point_length(0.5, 0.1), 0.1, 0.0) < 1e-12);
    }

    #[test]
    fn amplified_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = oracle(hadamard(), true);
        let xsub = Subspace::span(1, [pv("X")]).unwrap();
        for _ in 0..20 {
            let before = h.counts();
            let got = amplified_support_sample(&h, &xsub, 0.4, 0.1, 3.0, &mut rng).unwrap();
            assert!(got.is_none() || got == Some(pv("Z")));
            let spent = h.counts() - before;
            assert_eq!(spent.total(), (3.0 * 10f64.ln() / 0.4f64.sqrt()).ceil() as u64);
        }
        // nothing outside
        assert_eq!(
            amplified_support_sample(&h, &Subspace::full(1), 0.4, 0.1, 3.0, &mut rng).unwrap(),
            None
        );
        // full mass outside, alpha = 1
        let z = oracle(mat(&[&[1., 0.], &[0., -1.]]), true);
        let before = z.counts();
        assert_eq!(
            amplified_support_sample(&z, &Subspace::zero(1), 1.0, 0.1, 3.0, &mut rng).unwrap(),
            Some(pv("Z"))
        );
        assert_eq!((z.counts() - before).total(), (3.0 * 10f64.ln()).ceil() as u64);
        let fwd_only = oracle(hadamard(), false);
        assert!(matches!(
            amplified_support_sample(&fwd_only, &xsub, 0.4, 0.1, 3.0, &mut rng),
            Err(Error::InverseUnavailable)
        ));
    }

    #[test]
    fn derived_oracle_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let o = oracle(haar_unitary(4, &mut rng), true);
        let w = haar_unitary(4, &mut rng);
        let pw = o.residual_power(&w, 4).unwrap();
        pw.apply(Direction::Forward, &StateVector::basis(2, 0)).unwrap();
        assert_eq!(o.counts().forward, 4);
        let hz = o
            .heisenberg(&"+ZI".parse().unwrap(), HeisenbergOrder::AdjointFirst)
            .unwrap();
        hz.apply(Direction::Inverse, &StateVector::basis(2, 1)).unwrap();
        assert_eq!((o.counts().forward, o.counts().inverse), (5, 1));
        let fwd_only = oracle(identity(4), false);
        assert!(fwd_only
            .heisenberg(&"+ZI".parse().unwrap(), HeisenbergOrder::AdjointFirst)
            .is_err());
    }
}
