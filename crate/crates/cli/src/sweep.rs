//! Grid sweeps with CSV output and fitted scaling slopes.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use pauli_learn::instances::{gen_instance, InstanceSpec};
use pauli_learn::params::LearnParams;
use pauli_learn::Error;

use crate::runner::{run_learner, Bounds, LearnerKind};

pub const HEADER: [&str; 10] = [
    "k",
    "a",
    "b",
    "eps",
    "seed",
    "queries_fwd",
    "queries_inv",
    "dist_phaseop",
    "wall_ms",
    "status",
];

/// One instance shape: `(a, b)` for the k-dimensional learners, `k` for the
/// junta learner.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    #[serde(default)]
    pub a: Option<usize>,
    #[serde(default)]
    pub b: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub learner: Option<LearnerKind>,
    pub n: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub k: usize,
    pub a: usize,
    pub b: usize,
    pub eps: f64,
    pub seed: u64,
    pub queries_fwd: u64,
    pub queries_inv: u64,
    pub dist_phaseop: Option<f64>,
    pub wall_ms: u128,
    pub status: String,
}

struct Point {
    kind: LearnerKind,
    k: usize,
    a: usize,
    b: usize,
    spec: InstanceSpec,
    eps: f64,
    seed: u64,
}

fn points(grid: &Grid, kind: LearnerKind) -> Result<Vec<Point>, Error> {
    let mut out = Vec::new();
    for shape in &grid.shapes {
        let (k, a, b, spec) = match (kind, *shape) {
            (
                LearnerKind::Junta,
                Shape {
                    k: Some(k),
                    a: None,
                    b: None,
                },
            ) => (
                k,
                k,
                0,
                InstanceSpec::Junta {
                    n: grid.n,
                    k,
                    qubits: None,
                },
            ),
            (
                LearnerKind::KdimFwd | LearnerKind::KdimInv | LearnerKind::KdimBase,
                Shape {
                    a: Some(a),
                    b: Some(b),
                    k: None,
                },
            ) => (
                2 * a + b,
                a,
                b,
                InstanceSpec::Kdim {
                    n: grid.n,
                    a,
                    b,
                    clifford_len: None,
                },
            ),
            (LearnerKind::Composed, _) => {
                return Err(Error::Config(
                    "sweeps support the kdim-fwd, kdim-inv, kdim-base and junta learners".into(),
                ))
            }
            (LearnerKind::Junta, _) => return Err(Error::Config("junta shapes take only \"k\"".into())),
            _ => return Err(Error::Config("k-dimensional shapes take \"a\" and \"b\"".into())),
        };
        for &eps in &grid.eps {
            for &seed in &grid.seeds {
                out.push(Point {
                    kind,
                    k,
                    a,
                    b,
                    spec: spec.clone(),
                    eps,
                    seed,
                });
            }
        }
    }
    Ok(out)
}

fn run_point(p: &Point, base: &LearnParams) -> Result<Row, Error> {
    let start = Instant::now();
    let mut params = base.clone();
    params.eps = p.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let inst = gen_instance(&p.spec, params.dense_cap, &mut rng)?;
    let bounds = Bounds {
        k: Some(if p.kind == LearnerKind::Junta {
            p.k
        } else {
            2 * p.a + p.b
        }),
        ..Bounds::default()
    };
    let out = run_learner(p.kind, &inst.unitary, &bounds, &params, p.seed, true)?;
    Ok(Row {
        k: p.k,
        a: p.a,
        b: p.b,
        eps: p.eps,
        seed: p.seed,
        queries_fwd: out.report.queries.forward,
        queries_inv: out.report.queries.inverse,
        dist_phaseop: out.report.dist_phaseop,
        wall_ms: start.elapsed().as_millis(),
        status: out.report.status,
    })
}

/// Runs every grid point on a pool of `jobs` workers. Rows come back in grid
/// order whatever the scheduling.
pub fn run_grid(grid: &Grid, kind: LearnerKind, base: &LearnParams, jobs: usize) -> Result<Vec<Row>, Error> {
    base.validate()?;
    if grid.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::Config("grid accuracies must lie in (0, 1)".into()));
    }
    let pts = points(grid, kind)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| pts.par_iter().map(|p| run_point(p, base)).collect())
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two
/// distinct abscissae.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (pts.len() >= 2 && sxx > 1e-12).then(|| sxy / sxx)
}

/// Slopes of `ln(queries)` against `ln(1/eps)` per shape and of
/// `log2(queries)` against `k` per accuracy, over successful rows.
pub fn summary(rows: &[Row]) -> Vec<String> {
    let ok: Vec<&Row> = rows.iter().filter(|r| r.status == "ok").collect();
    let total = |r: &Row| (r.queries_fwd + r.queries_inv).max(1) as f64;
    let mut lines = Vec::new();
    let mut shapes: Vec<(usize, usize, usize)> = ok.iter().map(|r| (r.k, r.a, r.b)).collect();
    shapes.sort_unstable();
    shapes.dedup();
    for (k, a, b) in shapes {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .filter(|r| (r.k, r.a, r.b) == (k, a, b))
            .map(|r| ((1.0 / r.eps).ln(), total(r).ln()))
            .collect();
        if let Some(s) = fit_slope(&pts) {
            lines.push(format!("# slope_inv_eps k={k} a={a} b={b}: {s:.4}"));
        }
    }
    let mut accuracies: Vec<f64> = ok.iter().map(|r| r.eps).collect();
    accuracies.sort_by(f64::total_cmp);
    accuracies.dedup();
    for eps in accuracies {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .filter(|r| r.eps == eps)
            .map(|r| (r.k as f64, total(r).log2()))
            .collect();
        if let Some(s) = fit_slope(&pts) {
            lines.push(format!("# slope_log2_k eps={eps}: {s:.4}"));
        }
    }
    lines
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.eps.to_string(),
            r.seed.to_string(),
            r.queries_fwd.to_string(),
            r.queries_inv.to_string(),
            r.dist_phaseop.map(|d| format!("{d:.6e}")).unwrap_or_default(),
            r.wall_ms.to_string(),
            r.status.clone(),
        ])?;
    }
    let mut inner = w.into_inner().map_err(|e| e.into_error())?;
    for line in summary(rows) {
        writeln!(inner, "{line}")?;
    }
    inner.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0]
            .iter()
            .map(|x: &f64| (x.ln(), (3.0 * x * x).ln()))
            .collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&[(1.0, 2.0)]), None);
        assert_eq!(fit_slope(&[(1.0, 2.0), (1.0, 3.0)]), None);
    }

    #[test]
    fn summary_lines() {
        let row = |eps: f64, k: usize, q: u64| Row {
            k,
            a: 1,
            b: k - 2,
            eps,
            seed: 0,
            queries_fwd: q,
            queries_inv: 0,
            dist_phaseop: None,
            wall_ms: 0,
            status: "ok".into(),
        };
        let rows = vec![row(0.1, 2, 100), row(0.05, 2, 400), row(0.1, 3, 200)];
        let s = summary(&rows);
        assert_eq!(
            s,
            vec![
                "# slope_inv_eps k=2 a=1 b=0: 2.0000".to_string(),
                "# slope_log2_k eps=0.1: 1.0000".to_string()
            ]
        );
    }
}
