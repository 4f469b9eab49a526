//! The JSON report emitted by every learner run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::metrics::{dist_phaseop, DistanceReport};
use crate::params::LearnParams;
use crate::sim::QueryCounts;

pub const SCHEMA: &str = "v1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTotals {
    pub forward: u64,
    pub inverse: u64,
}

impl From<QueryCounts> for QueryTotals {
    fn from(c: QueryCounts) -> Self {
        QueryTotals {
            forward: c.forward + c.controlled_fwd,
            inverse: c.inverse + c.controlled_inv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub stage: String,
    pub reason: String,
}

/// Dense matrix as rows of interleaved `re, im` pairs.
pub type MatrixRows = Vec<Vec<f64>>;

pub fn matrix_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).flat_map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub schema: String,
    pub status: String,
    pub learner: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    pub eps: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub queries: QueryTotals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_phaseop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diamond_upper: Option<f64>,
    /// Generators of the learned support, as Pauli strings.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub support: Vec<String>,
    /// 1-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub junta_qubits: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Canonicalising Clifford as gate lines.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub clifford: Vec<String>,
    /// Learned blocks (or composed factors) as dense rows.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub blocks: Vec<MatrixRows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<FailureInfo>,
    /// Constants the run used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<LearnParams>,
}

impl LearnReport {
    pub fn new(learner: &str, n: usize, eps: f64, delta: f64) -> Self {
        LearnReport {
            schema: SCHEMA.to_string(),
            status: "ok".to_string(),
            learner: learner.to_string(),
            n,
            a: None,
            b: None,
            eps,
            delta,
            seed: None,
            queries: QueryTotals::default(),
            dist_phaseop: None,
            diamond_upper: None,
            support: Vec::new(),
            junta_qubits: None,
            rounds: None,
            clifford: Vec::new(),
            blocks: Vec::new(),
            error: None,
            config: None,
        }
    }

    pub fn failed(learner: &str, n: usize, eps: f64, delta: f64, err: &Error) -> Self {
        let mut r = Self::new(learner, n, eps, delta);
        r.status = "failed".to_string();
        let (stage, reason) = match err {
            Error::LearnerFailure { stage, reason } => (stage.clone(), reason.clone()),
            Error::PostselectionExhausted { .. } => ("postselection".to_string(), err.to_string()),
            Error::BranchAmbiguity(_) => ("bootstrap".to_string(), err.to_string()),
            Error::Degenerate(_) => ("rounding".to_string(), err.to_string()),
            other => ("setup".to_string(), other.to_string()),
        };
        r.error = Some(FailureInfo { stage, reason });
        r
    }

    /// Fills the ground-truth distances.
    pub fn score(&mut self, truth: &CMatrix, estimate: &CMatrix) -> Result<()> {
        let d = dist_phaseop(truth, estimate)?;
        self.dist_phaseop = Some(d);
        self.diamond_upper = Some(2.0 * d);
        Ok(())
    }

    pub fn score_full(&mut self, truth: &CMatrix, estimate: &CMatrix) -> Result<DistanceReport> {
        let r = DistanceReport::compute(truth, estimate)?;
        self.dist_phaseop = Some(r.phaseop);
        self.diamond_upper = Some(r.diamond_upper);
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut r = LearnReport::new("kdim-fwd", 3, 0.1, 0.1);
        r.a = Some(1);
        r.queries = QueryTotals {
            forward: 10,
            inverse: 0,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], "v1");
        assert_eq!(v["queries"]["forward"], 10);
        assert!(v.get("dist_phaseop").is_none());
        let back: LearnReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
