//! Distances between unitaries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, is_unitary, op_norm, rank, trace_norm, CMatrix};

fn same_shape(u: &CMatrix, v: &CMatrix) -> Result<()> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: v.nrows(),
        });
    }
    Ok(())
}

const GRID: usize = 64;
const GOLDEN_TOL: f64 = 1e-11;

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > GOLDEN_TOL {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    fc.min(fd).min(f((lo + hi) / 2.0))
}

/// Minimises `f` over the circle: a coarse grid, then golden-section
/// refinement around every grid local minimum and around `seed`.
fn minimise_on_circle(f: impl Fn(f64) -> f64, seed: f64) -> f64 {
    let step = std::f64::consts::TAU / GRID as f64;
    let vals: Vec<f64> = (0..GRID).map(|k| f(k as f64 * step)).collect();
    let mut best = golden(&f, seed - step, seed + step);
    for k in 0..GRID {
        let (prev, next) = (vals[(k + GRID - 1) % GRID], vals[(k + 1) % GRID]);
        if vals[k] <= prev && vals[k] <= next {
            let t = k as f64 * step;
            best = best.min(golden(&f, t - step, t + step));
        }
    }
    best
}

/// `min_theta ||e^{i theta} U - V||_op`.
pub fn dist_phaseop(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    same_shape(u, v)?;
    let overlap = (v.adjoint() * u).trace();
    let seed = -overlap.arg();
    if is_unitary(u, 1e-8) && is_unitary(v, 1e-8) {
        // ||e^{it} U - V|| = ||e^{it} V^dagger U - I||, a normal matrix
        let lams = eigenvalues(&(v.adjoint() * u))?;
        let f = |t: f64| {
            let ph = Complex64::from_polar(1.0, t);
            lams.iter().map(|l| (ph * l - 1.0).norm()).fold(0.0, f64::max)
        };
        return Ok(minimise_on_circle(f, seed));
    }
    let f = |t: f64| op_norm(&(u * Complex64::from_polar(1.0, t) - v));
    Ok(minimise_on_circle(f, seed))
}

/// `min_theta ||e^{i theta} U - V||_F / sqrt(d)` in closed form.
pub fn dist_phase_f(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    same_shape(u, v)?;
    let d = u.nrows() as f64;
    let overlap = (v.adjoint() * u).trace().norm();
    let val = (u.norm_squared() + v.norm_squared()) / d - 2.0 * overlap / d;
    Ok(val.max(0.0).sqrt())
}

/// Upper bound on the diamond distance between the channels of two unitaries.
pub fn diamond_upper(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    Ok(2.0 * dist_phaseop(u, v)?)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistanceReport {
    pub op: f64,
    pub phaseop: f64,
    pub diamond_upper: f64,
    pub frob_normalized: f64,
}

impl DistanceReport {
    pub fn compute(u: &CMatrix, v: &CMatrix) -> Result<Self> {
        same_shape(u, v)?;
        let phaseop = dist_phaseop(u, v)?;
        Ok(DistanceReport {
            op: op_norm(&(u - v)),
            phaseop,
            diamond_upper: 2.0 * phaseop,
            frob_normalized: dist_phase_f(u, v)?,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormChain {
    pub op: f64,
    pub frob: f64,
    pub trace: f64,
    pub rank: usize,
    pub holds: bool,
}

/// Schatten norms of `a` and whether
/// `||A||_op <= ||A||_F <= ||A||_tr <= sqrt(r) ||A||_F <= r ||A||_op` holds.
pub fn norm_chain_check(a: &CMatrix) -> NormChain {
    let op = op_norm(a);
    let frob = a.norm();
    let trace = trace_norm(a);
    let scale = op.max(1.0);
    let r = rank(a, 1e-12 * scale);
    let tol = 1e-9 * scale * (1.0 + r as f64);
    let rf = r as f64;
    let holds = op <= frob + tol
        && frob <= trace + tol
        && trace <= rf.sqrt() * frob + tol
        && frob <= rf.sqrt() * op + tol
        && trace <= rf * op + tol;
    NormChain {
        op,
        frob,
        trace,
        rank: r,
        holds,
    }
}
