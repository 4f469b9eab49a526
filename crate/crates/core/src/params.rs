//! Tunable constants shared by the learners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomography::TomoBackend;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    /// Target accuracy.
    pub eps: f64,
    /// Target failure probability.
    pub delta: f64,
    /// Constant in the tomography copy count.
    pub c_tomo: f64,
    /// Extra copy factor for the measurement-based tomography backend.
    pub c_emp: f64,
    pub backend: TomoBackend,
    /// Constant in the amplified-sampling query charge.
    pub amp_query_const: f64,
    /// Accuracies above this are clamped before running the block learner.
    pub eps_cap: f64,
    /// Success criterion multiplier: a run succeeds when its error is at
    /// most `c_out * eps`.
    pub c_out: f64,
    /// Support is learned to `eps / (support_k * 2^{a+b})`.
    pub support_k: f64,
    /// Accuracy requested from the base learner inside each bootstrap round.
    pub bootstrap_base_eps: f64,
    /// Assumed error bound of a bootstrap base run; sets the round count.
    pub bootstrap_base_error: f64,
    /// Repetitions per bootstrap round for median amplification. `None`
    /// means `ceil(18 ln(1/delta))`.
    pub bootstrap_reps: Option<usize>,
    /// Shots used to fix the sign of each learned Heisenberg-evolved Pauli.
    pub sign_shots: usize,
    /// Largest qubit count simulated densely.
    pub dense_cap: usize,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            eps: 0.1,
            delta: 0.1,
            c_tomo: 4.0,
            c_emp: 4.0,
            backend: TomoBackend::Model,
            amp_query_const: 3.0,
            eps_cap: 0.25,
            c_out: 8.0,
            support_k: 2.0,
            bootstrap_base_eps: 0.05,
            bootstrap_base_error: 0.4,
            bootstrap_reps: None,
            sign_shots: 15,
            dense_cap: crate::circuit::DEFAULT_DENSE_CAP,
        }
    }
}

impl LearnParams {
    pub fn with_accuracy(eps: f64, delta: f64) -> Self {
        LearnParams {
            eps,
            delta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("eps", self.eps)?;
        unit("delta", self.delta)?;
        unit("eps_cap", self.eps_cap.min(0.49))?;
        unit("bootstrap_base_eps", self.bootstrap_base_eps)?;
        for (name, v) in [
            ("c_tomo", self.c_tomo),
            ("c_emp", self.c_emp),
            ("amp_query_const", self.amp_query_const),
            ("c_out", self.c_out),
            ("support_k", self.support_k),
            ("bootstrap_base_error", self.bootstrap_base_error),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sign_shots == 0 || self.bootstrap_reps == Some(0) {
            return Err(Error::Config("shot and repetition counts must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: expected a count, got {value:?}")))
        };
        match key {
            "eps" => self.eps = num()?,
            "delta" => self.delta = num()?,
            "c_tomo" => self.c_tomo = num()?,
            "c_emp" => self.c_emp = num()?,
            "tomo_backend" | "backend" => self.backend = value.parse()?,
            "amp_query_const" => self.amp_query_const = num()?,
            "eps_cap" => self.eps_cap = num()?,
            "c_out" => self.c_out = num()?,
            "support_k" => self.support_k = num()?,
            "bootstrap_base_eps" => self.bootstrap_base_eps = num()?,
            "bootstrap_base_error" => self.bootstrap_base_error = num()?,
            "bootstrap_reps" => self.bootstrap_reps = Some(count()?),
            "sign_shots" => self.sign_shots = count()?,
            "dense_cap" => self.dense_cap = count()?,
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    /// Repetitions for one amplified bootstrap round at failure probability
    /// `delta`.
    pub fn reps_for(&self, delta: f64) -> usize {
        self.bootstrap_reps
            .unwrap_or_else(|| (18.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file() {
        let mut p = LearnParams::default();
        p.apply_config("c_tomo = 6  # bigger\n\neps_cap=0.2\ntomo_backend=empirical\n")
            .unwrap();
        assert_eq!(p.c_tomo, 6.0);
        assert_eq!(p.eps_cap, 0.2);
        assert_eq!(p.backend, TomoBackend::Empirical);
        assert!(p.apply_config("nope=1").is_err());
        assert!(p.apply_config("c_tomo").is_err());
        assert!(p.apply_config("eps=2").is_err());
    }

    #[test]
    fn default_reps() {
        let p = LearnParams::default();
        assert_eq!(p.reps_for(0.1), 42);
    }
}
