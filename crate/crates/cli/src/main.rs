//! `pauli-learn`: generate instances, run learners, sweep grids and run the
//! self-check suites.

mod runner;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pauli_learn::circuit::UnitaryFile;
use pauli_learn::instances::{gen_instance, InstanceSpec, Witness};
use pauli_learn::params::LearnParams;
use pauli_learn::sim::HeisenbergOrder;
use pauli_learn::verify::run_suite;

use runner::{run_learner, Bounds, LearnerKind};

#[derive(Parser)]
#[command(
    name = "pauli-learn",
    version,
    about = "Query-efficient learning of structured unitaries"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Target accuracy; overrides the configuration file.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Target failure probability; overrides the configuration file.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    learner: Option<LearnerKind>,
    /// File of `key=value` constants.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    dense_cap: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance and its ground-truth witness from a spec file.
    Gen {
        spec: PathBuf,
        /// Witness path; defaults to `<out>.witness.json`.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Run a learner on an instance file and write its report.
    Learn {
        instance: PathBuf,
        /// Ground truth; enables the distance fields of the report.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Pauli dimension bound, or junta size for the junta learner.
        #[arg(long)]
        k: Option<usize>,
        /// Depth bound of the shallow part for the composed learner.
        #[arg(long)]
        depth: Option<usize>,
        /// Clifford-nullity bound for the composed learner.
        #[arg(long)]
        nullity: Option<usize>,
        /// Which side the shallow part sits on: QC or CQ.
        #[arg(long, value_parser = parse_order)]
        order: Option<HeisenbergOrder>,
    },
    /// Run a grid of learner runs and write one CSV row per run.
    Sweep { grid: PathBuf },
    /// Run a self-check suite.
    Verify { suite: String },
}

fn parse_order(s: &str) -> Result<HeisenbergOrder, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("expected QC or CQ, got {s:?}"))
}

enum Failure {
    /// Exit code 2.
    Usage(String),
    /// Exit code 1.
    Run(String),
}

impl From<pauli_learn::Error> for Failure {
    fn from(e: pauli_learn::Error) -> Self {
        if runner::is_usage_error(&e) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl Common {
    fn params(&self) -> Result<LearnParams, Failure> {
        let mut p = LearnParams::default();
        if let Some(path) = &self.config {
            p.apply_config(&read(path)?)?;
        }
        if let Some(e) = self.eps {
            p.eps = e;
        }
        if let Some(d) = self.delta {
            p.delta = d;
        }
        if let Some(c) = self.dense_cap {
            p.dense_cap = c;
        }
        p.validate()?;
        Ok(p)
    }
}

fn cmd_gen(c: &Common, spec_path: &Path, witness: Option<&Path>) -> Result<(), Failure> {
    let spec: InstanceSpec = parse_json(spec_path)?;
    let out = c.out.as_deref().ok_or_else(|| usage("gen needs --out"))?;
    let cap = c.dense_cap.unwrap_or(pauli_learn::circuit::DEFAULT_DENSE_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let inst = gen_instance(&spec, cap, &mut rng)?;
    let witness_path = witness.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".witness.json");
        PathBuf::from(p)
    });
    write(
        Some(out),
        &serde_json::to_string(&inst.unitary.to_file()).expect("instance serialises"),
    )?;
    write(
        Some(&witness_path),
        &serde_json::to_string_pretty(&inst.witness).expect("witness serialises"),
    )?;
    Ok(())
}

fn cmd_learn(c: &Common, instance: &Path, witness: Option<&Path>, bounds: Bounds) -> Result<(), Failure> {
    let kind = c.learner.ok_or_else(|| usage("learn needs --learner"))?;
    let params = c.params()?;
    let file: UnitaryFile = parse_json(instance)?;
    let u = file.to_unitary(params.dense_cap)?;
    let witness: Option<Witness> = witness.map(parse_json).transpose()?;
    if let Some(w) = &witness {
        if w.n != u.n() {
            return Err(usage(format!("witness is for {} qubits, instance has {}", w.n, u.n())));
        }
    }
    let bounds = match &witness {
        Some(w) => bounds.or_from_witness(kind, w),
        None => bounds,
    };
    let out = run_learner(kind, &u, &bounds, &params, c.seed, witness.is_some())?;
    write(c.out.as_deref(), &(out.report.to_json() + "\n"))?;
    if out.failed {
        let e = out
            .report
            .error
            .as_ref()
            .map(|e| format!("{}: {}", e.stage, e.reason))
            .unwrap_or_default();
        return Err(Failure::Run(format!("learner failed during {e}")));
    }
    Ok(())
}

fn cmd_sweep(c: &Common, grid_path: &Path) -> Result<(), Failure> {
    let grid: sweep::Grid = parse_json(grid_path)?;
    let kind = grid
        .learner
        .or(c.learner)
        .ok_or_else(|| usage("sweep needs a learner in the grid file or --learner"))?;
    let mut params = c.params()?;
    if let Some(d) = grid.delta {
        params.delta = d;
    }
    if c.jobs == 0 {
        return Err(usage("--jobs must be positive"));
    }
    let rows = sweep::run_grid(&grid, kind, &params, c.jobs)?;
    let mut buf = Vec::new();
    sweep::write_csv(&rows, &mut buf).map_err(|e| Failure::Run(e.to_string()))?;
    write(c.out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))
}

fn cmd_verify(c: &Common, suite: &str) -> Result<(), Failure> {
    let outcomes = run_suite(suite, c.seed)?;
    let mut text = String::new();
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{tag} {suite}: {} ({})\n", o.name, o.detail));
    }
    write(c.out.as_deref(), &text)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} check(s) failed in suite {suite}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let result = match &cli.cmd {
        Cmd::Gen { spec, witness } => cmd_gen(c, spec, witness.as_deref()),
        Cmd::Learn {
            instance,
            witness,
            k,
            depth,
            nullity,
            order,
        } => cmd_learn(
            c,
            instance,
            witness.as_deref(),
            Bounds {
                k: *k,
                depth: *depth,
                nullity: *nullity,
                order: *order,
            },
        ),
        Cmd::Sweep { grid } => cmd_sweep(c, grid),
        Cmd::Verify { suite } => cmd_verify(c, suite),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("pauli-learn: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("pauli-learn: {msg}");
            ExitCode::from(2)
        }
    }
}
