//! End-to-end tests of the `anng` binary.

use std::path::Path;
use std::process::{Command, Output};

fn anng() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anng"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    anng()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SWEEP_CONFIG: &str = "\
suite=query-sweep
n=256
d=6
tau=2.0
r=1.3
r0=1.8
epsilon=0.2
trials=20
dataset_seed=1
graph_seed=2
query_seed=3
mc_samples=2000
model=uniform:0.5
model=exact
";

#[test]
fn gen_dataset_accepts_dense_and_rejects_sparse_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["gen-dataset", "--n", "1024", "--d", "5", "--seed", "7", "--out", "pts.annd"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("omega=2"));

    // omega = 1 exactly is refused by the generator.
    let out = run(
        &["gen-dataset", "--n", "1024", "--d", "10", "--seed", "7", "--out", "bad.annd"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("must exceed 1"));
    assert!(!dir.path().join("bad.annd").exists());
}

#[test]
fn build_graph_round_trips_and_validates_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["gen-dataset", "--n", "512", "--d", "6", "--seed", "7", "--out", "pts.annd"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    // uniform:1.0 builds the same adjacency as exact.
    for (model, file) in [("uniform:1.0", "u1.anng"), ("exact", "ex.anng")] {
        let out = run(
            &[
                "build-graph", "--dataset", "pts.annd", "--tau", "2.0", "--model", model,
                "--seed", "5", "--out", file,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).contains("pred_mean_degree"));
    }
    let u1 = anng::io::read_graph(&dir.path().join("u1.anng")).unwrap();
    let ex = anng::io::read_graph(&dir.path().join("ex.anng")).unwrap();
    for i in 0..u1.n() {
        assert_eq!(u1.neighbors(i), ex.neighbors(i), "vertex {i}");
    }

    // Reversed two-sided probabilities are rejected.
    let out = run(
        &[
            "build-graph", "--dataset", "pts.annd", "--tau", "2.0", "--model",
            "twosided:0.3,0.5", "--seed", "5", "--out", "t.anng",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("delta1 > delta2"), "{}", stderr(&out));

    // Unknown model grammar names the token.
    let out = run(
        &[
            "build-graph", "--dataset", "pts.annd", "--tau", "2.0", "--model", "foo:bar",
            "--seed", "5", "--out", "t.anng",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("foo:bar"));
    assert!(stderr(&out).contains("expected exact | uniform:DELTA"));
}

#[test]
fn query_emits_json_and_rejects_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(
        &["gen-dataset", "--n", "512", "--d", "6", "--seed", "7", "--out", "pts.annd"],
        dir.path()
    )
    .status
    .success());
    assert!(run(
        &[
            "build-graph", "--dataset", "pts.annd", "--tau", "2.0", "--model", "exact",
            "--seed", "5", "--out", "g.anng",
        ],
        dir.path()
    )
    .status
    .success());

    let out = run(
        &[
            "query", "--dataset", "pts.annd", "--graph", "g.anng", "--r", "1.4",
            "--plant", "9", "--start", "random:11",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(json["status"] == "Success" || json["status"] == "FailNoProgress");
    assert!(json["steps"].is_u64());
    assert!(json["comparisons"].is_u64());
    assert!(json["sin_theta_terminal"].is_f64());

    // r outside (1, 2^omega) is refused with the range in the message.
    let out = run(
        &[
            "query", "--dataset", "pts.annd", "--graph", "g.anng", "--r", "9.0",
            "--plant", "9", "--start", "random:11",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("(1, 2^omega)"), "{}", stderr(&out));

    // A graph built over a different dataset shape is refused.
    assert!(run(
        &["gen-dataset", "--n", "256", "--d", "6", "--seed", "8", "--out", "other.annd"],
        dir.path()
    )
    .status
    .success());
    let out = run(
        &[
            "query", "--dataset", "other.annd", "--graph", "g.anng", "--r", "1.4",
            "--plant", "9", "--start", "random:11",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));

    // Fixed starts work and out-of-range ones are refused.
    let out = run(
        &[
            "query", "--dataset", "pts.annd", "--graph", "g.anng", "--r", "1.4",
            "--plant", "9", "--start", "fixed:100000",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("out of range"), "{}", stderr(&out));
}

#[test]
fn query_reads_explicit_query_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(
        &["gen-dataset", "--n", "256", "--d", "4", "--seed", "7", "--out", "pts.annd"],
        dir.path()
    )
    .status
    .success());
    assert!(run(
        &[
            "build-graph", "--dataset", "pts.annd", "--tau", "2.0", "--model",
            "uniform:0.8", "--seed", "5", "--out", "g.anng",
        ],
        dir.path()
    )
    .status
    .success());
    std::fs::write(dir.path().join("q.json"), "[0.5, -0.5, 0.5, 0.5]").unwrap();
    let out = run(
        &[
            "query", "--dataset", "pts.annd", "--graph", "g.anng", "--r", "1.5",
            "--qfile", "q.json", "--start", "fixed:0",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("\"status\""));
}

#[test]
fn experiment_reruns_are_byte_identical_and_manifest_checksums_match() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.cfg"), SWEEP_CONFIG).unwrap();

    for out_dir in ["run1", "run2"] {
        let out = run(
            &["experiment", "--config", "exp.cfg", "--out", out_dir],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    // Different thread count, same bytes.
    let out = anng()
        .args(["experiment", "--config", "exp.cfg", "--out", "run3", "--threads", "1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let csv1 = std::fs::read(dir.path().join("run1/query-sweep.csv")).unwrap();
    let csv2 = std::fs::read(dir.path().join("run2/query-sweep.csv")).unwrap();
    let csv3 = std::fs::read(dir.path().join("run3/query-sweep.csv")).unwrap();
    assert_eq!(csv1, csv2, "rerun changed the CSV");
    assert_eq!(csv1, csv3, "thread count changed the CSV");

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("run1/manifest.json")).unwrap())
            .unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 2);
    for entry in artifacts {
        let path = dir.path().join("run1").join(
            Path::new(entry["path"].as_str().unwrap())
                .file_name()
                .unwrap(),
        );
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(
            entry["crc32"].as_u64().unwrap() as u32,
            crc32fast::hash(&bytes),
            "manifest checksum mismatch for {}",
            path.display()
        );
        assert_eq!(entry["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn experiment_rejects_bad_configs_and_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();

    std::fs::write(dir.path().join("empty.cfg"), "").unwrap();
    let out = run(
        &["experiment", "--config", "empty.cfg", "--out", "bad1"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("required keys"), "{}", stderr(&out));

    std::fs::write(dir.path().join("unknown.cfg"), "suite=progress\nwibble=1\n").unwrap();
    let out = run(
        &["experiment", "--config", "unknown.cfg", "--out", "bad2"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown key 'wibble'"), "{}", stderr(&out));

    // Valid syntax, infeasible run (r outside range): no partial outputs.
    let cfg = SWEEP_CONFIG.replace("r=1.3", "r=9.0");
    std::fs::write(dir.path().join("infeasible.cfg"), cfg).unwrap();
    let out = run(
        &["experiment", "--config", "infeasible.cfg", "--out", "bad3"],
        dir.path(),
    );
    assert!(!out.status.success());
    let produced: Vec<_> = std::fs::read_dir(dir.path().join("bad3"))
        .map(|entries| entries.map(|e| e.unwrap().file_name()).collect())
        .unwrap_or_default();
    assert!(produced.is_empty(), "partial outputs left behind: {produced:?}");
}

#[test]
fn progress_twosided_and_concentration_suites_run() {
    let dir = tempfile::tempdir().unwrap();
    let progress = "\
suite=progress
n=128
d=5
tau=2.3
trials=50
dataset_seed=1
graph_seed=2
query_seed=3
progress_s=1.4
progress_eps=0.2
model=uniform:0.5
model=uniform:1.0
";
    std::fs::write(dir.path().join("p.cfg"), progress).unwrap();
    let out = run(&["experiment", "--config", "p.cfg", "--out", "p"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("p/progress.csv").exists());

    let twosided = "\
suite=twosided
n=128
d=5
tau=2.0
r=1.3
r0=1.8
epsilon=0.2
trials=20
dataset_seed=1
graph_seed=2
query_seed=3
mc_samples=2000
delta1=0.6
";
    std::fs::write(dir.path().join("t.cfg"), twosided).unwrap();
    let out = run(&["experiment", "--config", "t.cfg", "--out", "t"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("t/twosided.csv").exists());

    let concentration = "\
suite=concentration
n=64
d=5
tau=2.0
trials=50
dataset_seed=1
graph_seed=2
query_seed=3
model=uniform:0.5
";
    std::fs::write(dir.path().join("c.cfg"), concentration).unwrap();
    let out = run(&["experiment", "--config", "c.cfg", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("c/concentration.csv")).unwrap();
    assert!(csv.starts_with("model,"));
}
