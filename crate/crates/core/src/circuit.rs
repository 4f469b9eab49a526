//! Dense unitaries and the JSON formats used to exchange them.
//!
//! A unitary file is either a dense matrix
//! `{"n": 2, "rows": [[re, im, re, im, ...], ...]}` or a circuit
//! `{"n": 2, "gates": [{"name": "H", "qubits": [1]}, ...]}` with 1-based
//! qubits over the gate set `H S SDG T TDG X Y Z CNOT CZ U1 U2`. `U1` takes
//! one angle (the phase gate `diag(1, e^{i t})`); `U2` takes the eight reals
//! of a row-major 2x2 complex matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordOp, Gate};
use crate::error::{Error, Result};
use crate::linalg::{apply_1q, identity, is_unitary, square_qubits, unitarity_residual, CMatrix, ONE, ZERO};

/// Tolerance for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-8;

/// Qubit cap for dense simulation unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseUnitary {
    n: usize,
    matrix: CMatrix,
}

impl DenseUnitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = square_qubits(&matrix)?;
        let res = unitarity_residual(&matrix);
        if !(res <= UNITARY_TOL * (matrix.nrows() as f64).sqrt().max(1.0)) {
            return Err(Error::NotUnitary(res));
        }
        Ok(DenseUnitary { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        DenseUnitary {
            n,
            matrix: identity(1 << n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        DenseUnitary {
            n: self.n,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn to_file(&self) -> UnitaryFile {
        let d = self.dim();
        let rows = (0..d)
            .map(|r| {
                (0..d)
                    .flat_map(|c| [self.matrix[(r, c)].re, self.matrix[(r, c)].im])
                    .collect()
            })
            .collect();
        UnitaryFile::Rows { n: self.n, rows }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircuitGate {
    pub name: String,
    /// 1-based.
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
}

impl CircuitGate {
    pub fn new(name: &str, qubits: &[usize], params: &[f64]) -> Self {
        CircuitGate {
            name: name.to_string(),
            qubits: qubits.iter().map(|q| q + 1).collect(),
            params: params.to_vec(),
        }
    }

    pub fn from_clifford(g: &Gate) -> Self {
        let text = g.to_string();
        let name = text.split_whitespace().next().unwrap_or_default();
        CircuitGate::new(name, &g.qubits(), &[])
    }

    fn zero_based(&self, n: usize) -> Result<Vec<usize>> {
        self.qubits
            .iter()
            .map(|&q| {
                if q == 0 || q > n {
                    Err(Error::Parse(format!("qubit {q} out of range 1..={n}")))
                } else {
                    Ok(q - 1)
                }
            })
            .collect()
    }

    /// Left-multiplies `m` by this gate.
    pub fn apply(&self, m: &mut CMatrix, n: usize) -> Result<()> {
        let qs = self.zero_based(n)?;
        let name = self.name.to_ascii_uppercase();
        let one_q = |want: usize| -> Result<()> {
            if qs.len() != want {
                return Err(Error::Parse(format!("{} takes {want} qubit(s)", self.name)));
            }
            Ok(())
        };
        let params = |want: usize| -> Result<()> {
            if self.params.len() != want {
                return Err(Error::Parse(format!("{} takes {want} parameter(s)", self.name)));
            }
            Ok(())
        };
        match name.as_str() {
            "T" | "TDG" => {
                one_q(1)?;
                let s = if name == "T" { 1.0 } else { -1.0 };
                let ph = Complex64::from_polar(1.0, s * std::f64::consts::FRAC_PI_4);
                apply_1q(m, n, qs[0], &[[ONE, ZERO], [ZERO, ph]]);
            }
            "U1" => {
                one_q(1)?;
                params(1)?;
                let ph = Complex64::from_polar(1.0, self.params[0]);
                apply_1q(m, n, qs[0], &[[ONE, ZERO], [ZERO, ph]]);
            }
            "U2" => {
                one_q(1)?;
                params(8)?;
                let p = &self.params;
                let c = |k: usize| Complex64::new(p[2 * k], p[2 * k + 1]);
                let g = [[c(0), c(1)], [c(2), c(3)]];
                let gm = CMatrix::from_row_slice(2, 2, &[g[0][0], g[0][1], g[1][0], g[1][1]]);
                if !is_unitary(&gm, UNITARY_TOL) {
                    return Err(Error::NotUnitary(unitarity_residual(&gm)));
                }
                apply_1q(m, n, qs[0], &g);
            }
            _ => {
                let line = std::iter::once(name.clone())
                    .chain(self.qubits.iter().map(|q| q.to_string()))
                    .collect::<Vec<_>>()
                    .join(" ");
                let g: Gate = line.parse()?;
                g.apply_dense(m, n);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<CircuitGate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn push_clifford(&mut self, c: &CliffordOp) {
        self.gates.extend(c.gates().iter().map(CircuitGate::from_clifford));
    }

    pub fn unitary(&self, cap: usize) -> Result<DenseUnitary> {
        if self.n > cap {
            return Err(Error::TooManyQubits { n: self.n, cap });
        }
        let mut m = identity(1 << self.n);
        for g in &self.gates {
            g.apply(&mut m, self.n)?;
        }
        DenseUnitary::new(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum UnitaryFile {
    Rows { n: usize, rows: Vec<Vec<f64>> },
    Gates { n: usize, gates: Vec<CircuitGate> },
}

impl UnitaryFile {
    pub fn to_unitary(&self, cap: usize) -> Result<DenseUnitary> {
        match self {
            UnitaryFile::Rows { n, rows } => {
                if *n > cap {
                    return Err(Error::TooManyQubits { n: *n, cap });
                }
                let d = 1usize << n;
                if rows.len() != d || rows.iter().any(|r| r.len() != 2 * d) {
                    return Err(Error::Parse(format!("expected {d} rows of {} reals", 2 * d)));
                }
                let m = CMatrix::from_fn(d, d, |r, c| Complex64::new(rows[r][2 * c], rows[r][2 * c + 1]));
                DenseUnitary::new(m)
            }
            UnitaryFile::Gates { n, gates } => Circuit {
                n: *n,
                gates: gates.clone(),
            }
            .unitary(cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = DenseUnitary::new(haar_unitary(4, &mut rng)).unwrap();
        let text = serde_json::to_string(&u.to_file()).unwrap();
        let back: UnitaryFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_unitary(12).unwrap(), u);
    }

    #[test]
    fn circuit_file() {
        let text =
            r#"{"n":2,"gates":[{"name":"H","qubits":[1]},{"name":"CNOT","qubits":[1,2]},{"name":"T","qubits":[2]}]}"#;
        let f: UnitaryFile = serde_json::from_str(text).unwrap();
        let u = f.to_unitary(12).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |00> -> (|00> + e^{i pi/4}|11>)/sqrt 2
        assert!((u.matrix()[(0, 0)].re - h).abs() < 1e-12);
        assert!((u.matrix()[(3, 0)] - Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)).norm() < 1e-12);
        let bad = r#"{"n":2,"gates":[{"name":"CNOT","qubits":[1,3]}]}"#;
        let f: UnitaryFile = serde_json::from_str(bad).unwrap();
        assert!(f.to_unitary(12).is_err());
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_element(2, 2, ONE);
        assert!(matches!(DenseUnitary::new(m), Err(Error::NotUnitary(_))));
        assert!(matches!(
            DenseUnitary::new(CMatrix::zeros(3, 3)),
            Err(Error::NotPowerOfTwo(3))
        ));
    }

    #[test]
    fn u2_gate() {
        let g = CircuitGate {
            name: "U2".into(),
            qubits: vec![1],
            params: vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        };
        let mut m = identity(2);
        g.apply(&mut m, 1).unwrap();
        assert_eq!(m[(0, 1)], ONE);
    }
}
