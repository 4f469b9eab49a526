//! Random ground-truth unitaries with recorded structure.
//!
//! Instance specs are JSON objects tagged by `kind`:
//!
//! ```json
//! {"kind": "junta", "n": 6, "k": 2, "qubits": [2, 5]}
//! {"kind": "kdim", "n": 5, "a": 1, "b": 1}
//! {"kind": "shallow_doped", "n": 4, "d": 1, "t": 1}
//! ```
//!
//! Qubits are 1-based in every file.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blockdiag::BlockDiagUnitary;
use crate::circuit::{CircuitGate, DenseUnitary};
use crate::clifford::CliffordOp;
use crate::composed::clifford_nullity;
use crate::error::{Error, Result};
use crate::f2::Subspace;
use crate::linalg::{apply_2q, embed, haar_unitary, identity, CMatrix, ONE, ZERO};
use crate::sim::HeisenbergOrder;

/// Two-qubit gate used in the shallow layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerGate {
    #[default]
    Haar,
    Cz,
}

fn default_order() -> HeisenbergOrder {
    HeisenbergOrder::AdjointFirst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Junta {
        n: usize,
        k: usize,
        /// 1-based; drawn at random when absent.
        #[serde(default)]
        qubits: Option<Vec<usize>>,
    },
    Kdim {
        n: usize,
        a: usize,
        b: usize,
        /// Length of the random scrambling Clifford; `4n` when absent.
        #[serde(default)]
        clifford_len: Option<usize>,
    },
    ShallowDoped {
        n: usize,
        d: usize,
        t: usize,
        /// `QC` applies the Clifford part first, `CQ` the shallow part.
        #[serde(default = "default_order")]
        order: HeisenbergOrder,
        #[serde(default)]
        layer_gate: LayerGate,
        #[serde(default)]
        clifford_len: Option<usize>,
    },
}

impl InstanceSpec {
    pub fn n(&self) -> usize {
        match self {
            InstanceSpec::Junta { n, .. } | InstanceSpec::Kdim { n, .. } | InstanceSpec::ShallowDoped { n, .. } => *n,
        }
    }
}

/// Ground-truth structure of a generated instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junta_qubits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Generators of the support subgroup.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<HeisenbergOrder>,
    /// Qubit pairs of each shallow layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<Vec<[usize; 2]>>,
    /// Gates of the Clifford-plus-T part, in application order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clifford: Vec<CircuitGate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nullity: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub unitary: DenseUnitary,
    pub witness: Witness,
}

fn bad(msg: String) -> Error {
    Error::Config(msg)
}

fn random_qubits<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut pick = all[..k].to_vec();
    pick.sort_unstable();
    pick
}

fn junta<R: Rng + ?Sized>(n: usize, k: usize, qubits: Option<&[usize]>, rng: &mut R) -> Result<Instance> {
    if k > n {
        return Err(bad(format!("junta size {k} exceeds n = {n}")));
    }
    let qs: Vec<usize> = match qubits {
        Some(given) => {
            let mut qs: Vec<usize> = given.to_vec();
            qs.sort_unstable();
            qs.dedup();
            if qs.len() != given.len() || qs.len() != k || qs.iter().any(|&q| q == 0 || q > n) {
                return Err(bad(format!(
                    "junta qubits {given:?} must be {k} distinct values in 1..={n}"
                )));
            }
            qs.iter().map(|q| q - 1).collect()
        }
        None => random_qubits(n, k, rng),
    };
    let g = haar_unitary(1 << k, rng);
    let m = embed(n, &qs, &g);
    Ok(Instance {
        unitary: DenseUnitary::new(m)?,
        witness: Witness {
            kind: "junta".into(),
            n,
            junta_qubits: Some(qs.iter().map(|q| q + 1).collect()),
            ..Default::default()
        },
    })
}

fn kdim<R: Rng + ?Sized>(n: usize, a: usize, b: usize, len: usize, rng: &mut R) -> Result<Instance> {
    if a + b > n {
        return Err(bad(format!("a + b = {} exceeds n = {n}", a + b)));
    }
    let v = BlockDiagUnitary::random(n, a, b, rng);
    let c = CliffordOp::random(n, len, rng);
    let cm = c.dense(n)?;
    let u = cm.adjoint() * v.dense() * &cm;
    let support = c.inverse().conjugate_subspace(&Subspace::canonical(n, a, b)?)?;
    Ok(Instance {
        unitary: DenseUnitary::new(u)?,
        witness: Witness {
            kind: "kdim".into(),
            n,
            a: Some(a),
            b: Some(b),
            support: support.basis().iter().map(|p| p.to_string()).collect(),
            clifford: c.gates().iter().map(CircuitGate::from_clifford).collect(),
            ..Default::default()
        },
    })
}

fn cz_matrix() -> [[num_complex::Complex64; 4]; 4] {
    let mut g = [[ZERO; 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = if i == 3 { -ONE } else { ONE };
    }
    g
}

#[allow(clippy::too_many_arguments)]
fn shallow_doped<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    t: usize,
    order: HeisenbergOrder,
    layer_gate: LayerGate,
    len: usize,
    cap: usize,
    rng: &mut R,
) -> Result<Instance> {
    // Clifford part with T gates spliced in at random positions
    let cliff = CliffordOp::random(n, len, rng);
    let mut gates: Vec<CircuitGate> = cliff.gates().iter().map(CircuitGate::from_clifford).collect();
    for _ in 0..t {
        let pos = rng.random_range(0..=gates.len());
        let q = rng.random_range(0..n);
        gates.insert(pos, CircuitGate::new("T", &[q], &[]));
    }
    let mut c = identity(1 << n);
    for g in &gates {
        g.apply(&mut c, n)?;
    }

    let mut q = identity(1 << n);
    let mut layers = Vec::with_capacity(d);
    for _ in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let pairs: Vec<[usize; 2]> = perm.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        for &[x, y] in &pairs {
            let g = match layer_gate {
                LayerGate::Cz => cz_matrix(),
                LayerGate::Haar => {
                    let h = haar_unitary(4, rng);
                    std::array::from_fn(|r| std::array::from_fn(|s| h[(r, s)]))
                }
            };
            apply_2q(&mut q, n, x, y, &g);
        }
        layers.push(pairs.iter().map(|&[x, y]| [x + 1, y + 1]).collect());
    }
    let u: CMatrix = match order {
        HeisenbergOrder::AdjointFirst => &q * &c,
        HeisenbergOrder::ForwardFirst => &c * &q,
    };
    let nullity = if n <= cap.min(crate::composed::NULLITY_CAP) {
        Some(clifford_nullity(&DenseUnitary::new(c)?, 1e-9)?.t)
    } else {
        None
    };
    Ok(Instance {
        unitary: DenseUnitary::new(u)?,
        witness: Witness {
            kind: "shallow_doped".into(),
            n,
            depth: Some(d),
            t: Some(t),
            order: Some(order),
            layers,
            clifford: gates,
            nullity,
            ..Default::default()
        },
    })
}

/// Draws an instance. `cap` bounds the qubit count.
pub fn gen_instance<R: Rng + ?Sized>(spec: &InstanceSpec, cap: usize, rng: &mut R) -> Result<Instance> {
    let n = spec.n();
    if n == 0 {
        return Err(bad("n must be positive".into()));
    }
    if n > cap {
        return Err(Error::TooManyQubits { n, cap });
    }
    match spec {
        InstanceSpec::Junta { n, k, qubits } => junta(*n, *k, qubits.as_deref(), rng),
        InstanceSpec::Kdim { n, a, b, clifford_len } => kdim(*n, *a, *b, clifford_len.unwrap_or(4 * n), rng),
        InstanceSpec::ShallowDoped {
            n,
            d,
            t,
            order,
            layer_gate,
            clifford_len,
        } => shallow_doped(*n, *d, *t, *order, *layer_gate, clifford_len.unwrap_or(4 * n), cap, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composed::{evolved_dimensions, term_dimension_bound};
    use crate::f2::symplectic_gram_schmidt;
    use crate::pauli::support_span;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn parses_specs() {
        let s: InstanceSpec = serde_json::from_str(r#"{"kind":"junta","n":6,"k":2,"qubits":[2,5]}"#).unwrap();
        assert_eq!(
            s,
            InstanceSpec::Junta {
                n: 6,
                k: 2,
                qubits: Some(vec![2, 5])
            }
        );
        let s: InstanceSpec =
            serde_json::from_str(r#"{"kind":"shallow_doped","n":4,"d":1,"t":1,"order":"CQ"}"#).unwrap();
        assert!(matches!(
            s,
            InstanceSpec::ShallowDoped {
                order: HeisenbergOrder::ForwardFirst,
                ..
            }
        ));
        assert!(serde_json::from_str::<InstanceSpec>(r#"{"kind":"nope","n":2}"#).is_err());
    }

    #[test]
    fn junta_on_given_qubits() {
        let spec = InstanceSpec::Junta {
            n: 6,
            k: 2,
            qubits: Some(vec![2, 5]),
        };
        let inst = gen_instance(&spec, 12, &mut rng(1)).unwrap();
        assert_eq!(inst.witness.junta_qubits, Some(vec![2, 5]));
        let span = support_span(inst.unitary.matrix(), 1e-10).unwrap();
        assert_eq!(span.qubit_support(), vec![1, 4]);
        let bad = InstanceSpec::Junta {
            n: 6,
            k: 2,
            qubits: Some(vec![2, 7]),
        };
        assert!(gen_instance(&bad, 12, &mut rng(1)).is_err());
    }

    #[test]
    fn kdim_decomposition() {
        let spec = InstanceSpec::Kdim {
            n: 5,
            a: 1,
            b: 1,
            clifford_len: None,
        };
        let inst = gen_instance(&spec, 12, &mut rng(2)).unwrap();
        let span = support_span(inst.unitary.matrix(), 1e-10).unwrap();
        let nb = symplectic_gram_schmidt(&span, &span).unwrap();
        assert_eq!((nb.inner.a(), nb.inner.b()), (1, 1));
        let claimed = Subspace::span(5, inst.witness.support.iter().map(|s| s.parse().unwrap())).unwrap();
        assert_eq!(claimed, span);
    }

    #[test]
    fn shallow_doped_structure() {
        let spec = InstanceSpec::ShallowDoped {
            n: 4,
            d: 1,
            t: 1,
            order: HeisenbergOrder::AdjointFirst,
            layer_gate: LayerGate::Haar,
            clifford_len: None,
        };
        let mut r = rng(3);
        for _ in 0..5 {
            let inst = gen_instance(&spec, 12, &mut r).unwrap();
            let w = &inst.witness;
            assert!(w.nullity.unwrap() <= 2);
            assert_eq!(w.layers.len(), 1);
            let bound = term_dimension_bound(1, 2);
            for (_, _, dim) in evolved_dimensions(inst.unitary.matrix(), HeisenbergOrder::AdjointFirst).unwrap() {
                assert!(dim <= bound);
            }
        }
    }

    #[test]
    fn over_cap() {
        let spec = InstanceSpec::Kdim {
            n: 9,
            a: 1,
            b: 0,
            clifford_len: None,
        };
        assert!(matches!(
            gen_instance(&spec, 8, &mut rng(0)),
            Err(Error::TooManyQubits { .. })
        ));
    }
}
