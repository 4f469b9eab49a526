use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pauli-learn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn gen_then_learn_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), r#"{"kind":"junta","n":5,"k":2}"#).unwrap();
    let g = run(d, &["gen", "spec.json", "--seed", "4", "--out", "inst.json"]);
    assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
    let w: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("inst.json.witness.json")).unwrap()).unwrap();
    assert_eq!(w["junta_qubits"].as_array().unwrap().len(), 2);

    let learn = |out: &str| {
        let o = run(
            d,
            &[
                "learn",
                "inst.json",
                "--witness",
                "inst.json.witness.json",
                "--learner",
                "junta",
                "--eps",
                "0.1",
                "--seed",
                "9",
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(d.join(out)).unwrap()
    };
    let (a, b) = (learn("r1.json"), learn("r2.json"));
    assert_eq!(a, b);
    let r: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(r["schema"], "v1");
    assert_eq!(r["status"], "ok");
    assert_eq!(r["queries"]["inverse"], 0);
    assert_eq!(r["junta_qubits"], w["junta_qubits"]);
    assert!(r["dist_phaseop"].as_f64().unwrap() <= 8.0 * 0.1);
}

#[test]
fn kdim_witness_and_report_without_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), r#"{"kind":"kdim","n":3,"a":1,"b":1}"#).unwrap();
    assert_eq!(code(&run(d, &["gen", "spec.json", "--out", "inst.json"])), 0);
    let w: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("inst.json.witness.json")).unwrap()).unwrap();
    assert_eq!((w["a"].as_u64(), w["b"].as_u64()), (Some(1), Some(1)));
    assert_eq!(w["support"].as_array().unwrap().len(), 3);

    let o = run(
        d,
        &[
            "learn",
            "inst.json",
            "--learner",
            "kdim-fwd",
            "--k",
            "3",
            "--eps",
            "0.2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.get("dist_phaseop").is_none());
    assert!(r["queries"]["forward"].as_u64().unwrap() > 0);

    // no bound and no witness
    let o = run(d, &["learn", "inst.json", "--learner", "kdim-fwd"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{not json").unwrap();
    let o = run(d, &["gen", "bad.json", "--out", "x.json"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    fs::write(d.join("big.json"), r#"{"kind":"junta","n":30,"k":2}"#).unwrap();
    assert_eq!(code(&run(d, &["gen", "big.json", "--out", "x.json"])), 2);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "pauli"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert!(text.contains("Parseval"));
    assert_eq!(code(&run(dir.path(), &["verify", "lcu"])), 0);
    assert_eq!(code(&run(dir.path(), &["verify", "no-such-suite"])), 2);
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("grid.json"),
        r#"{"learner":"kdim-fwd","n":4,"shapes":[],"eps":[0.1],"seeds":[1]}"#,
    )
    .unwrap();
    let o = run(d, &["sweep", "grid.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "k,a,b,eps,seed,queries_fwd,queries_inv,dist_phaseop,wall_ms,status\n"
    );
}

#[test]
fn sweep_rows_are_ordered_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("grid.json"),
        r#"{"learner":"kdim-base","n":4,"shapes":[{"a":1,"b":0},{"a":1,"b":1}],"eps":[0.2,0.1],"seeds":[1,2]}"#,
    )
    .unwrap();
    let strip = |o: Output| -> Vec<String> {
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                // drop wall_ms, the one column that depends on the machine
                let mut f: Vec<&str> = l.split(',').collect();
                if f.len() == 10 {
                    f.remove(8);
                }
                f.join(",")
            })
            .collect()
    };
    let one = strip(run(d, &["sweep", "grid.json", "--jobs", "1"]));
    let four = strip(run(d, &["sweep", "grid.json", "--jobs", "4"]));
    assert_eq!(one, four);
    assert_eq!(one.len(), 1 + 8 + 2 + 2);
    assert!(one[1].starts_with("2,1,0,0.2,1,"));
    assert!(one[8].starts_with("3,1,1,0.1,2,"));
    assert!(one.iter().filter(|l| l.starts_with('#')).count() == 4);
}
