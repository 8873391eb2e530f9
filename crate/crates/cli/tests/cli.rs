use std::path::Path;
use std::process::{Command, Output};

fn mflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mflab")).args(args).env_remove("MFLAB_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_data_writes_round_trip_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = mflab(&["gen-data", "--delta", "0.5", "--dim", "3", "--count", "10", "--seed", "7", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("y,x1,x2,x3\n"));
    assert_eq!(text.lines().count(), 11);
    let again = dir.path().join("e.csv");
    mflab(&["gen-data", "--delta", "0.5", "--dim", "3", "--count", "10", "--seed", "7", "--out", s(&again)]);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = mflab(&["gen-data", "--delta", "1.5", "--dim", "3", "--count", "10", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert_eq!(code(&mflab(&["no-such-command"])), 2);
    assert_eq!(code(&mflab(&["experiment", "run", s(&dir.path().join("missing.toml")), "--out", s(dir.path())])), 2);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"x\"\nkind = \"prop1_gap\"\nseed = 1\n[parameters]\nladder = [10]\n").unwrap();
    let run = dir.path().join("run");
    assert_eq!(code(&mflab(&["experiment", "run", s(&cfg), "--out", s(&run)])), 2);
    assert!(!run.exists());
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_mflab"))
        .args(["gen-data", "--delta", "0.5", "--dim", "2", "--count", "2", "--out", "/dev/null"])
        .env("MFLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn divergent_training_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, "delta = 0.5\ndim = 10\nlayers = [20]\nepsilon = 1e6\nsteps = 500\n").unwrap();
    let o = mflab(&["train-sgd", "--config", s(&cfg), "--out", s(&dir.path().join("run"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_sgd_writes_trace_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.json");
    std::fs::write(
        &cfg,
        r#"{"delta": 0.5, "dim": 4, "layers": [6, 5], "activation": "relu", "epsilon": 0.01, "xi": "pow:-0.25", "steps": 200, "seed": 3, "mode": "full_backprop", "snapshot_every": 50}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let o = mflab(&["train-sgd", "--config", s(&cfg), "--out", s(&run)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(run.join("trace.csv")).unwrap();
    assert!(trace.lines().next().unwrap().contains("layer2_norm_q50"));
    assert_eq!(trace.lines().count(), 1 + 5);
    let weights = std::fs::read_to_string(run.join("weights_final.csv")).unwrap();
    // 6 units * (4 + 2) + 5 units * (6 + 2)
    assert_eq!(weights.lines().count(), 1 + 36 + 40);
}

#[test]
fn simulate_pde_and_compare_dist() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "delta = 0.8\nJ = 30\ndt = 1e-4\nsteps = 100\nxi = \"const:1\"\nseed = 2\ninit = \"gaussian\"\nrecord_every = 25\n").unwrap();
    for kind in ["piecewise2", "relu2", "joint3"] {
        let run = dir.path().join(kind);
        let o = mflab(&["simulate-pde", "--kind", kind, "--config", s(&cfg), "--out", s(&run)]);
        assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let traj = std::fs::read_to_string(run.join("trajectory.csv")).unwrap();
        assert!(traj.starts_with("step,t,risk,lambda_plus,lambda_minus"));
        assert_eq!(traj.lines().count(), 1 + 5);
        assert!(run.join("particles_t100.csv").exists());
    }
    let a = dir.path().join("piecewise2/particles_t100.csv");
    let out = dir.path().join("cmp.csv");
    let o = mflab(&["compare-dist", "--a", s(&a), "--b", s(&a), "--metrics", "w2,kl", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("w2,0.0,"));
    assert!(text.contains("kl,0.0,"));
    let o = mflab(&["compare-dist", "--a", s(&a), "--b", s(&a), "--metrics", "w3", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_pde_rejects_quantile_init_for_relu() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "init = \"quantiles\"\nsteps = 10\n").unwrap();
    let o = mflab(&["simulate-pde", "--kind", "relu2", "--config", s(&cfg), "--out", s(&dir.path().join("r"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_statics_emits_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.txt");
    std::fs::write(&grid, "0.0\n0.5\n1.0\n").unwrap();
    let out = dir.path().join("s.csv");
    let o = mflab(&["eval-statics", "--delta", "0.5", "--activation", "relu", "--grid", s(&grid), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("r,q_plus,q_minus,v,u_inf,psi_inf"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn experiment_hoeffding_suite_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    std::fs::write(
        &cfg,
        "name = \"grid\"\nkind = \"statics_grid\"\nseed = 1\n[parameters]\ndelta = 0.5\npoints = 5\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    let o = mflab(&["experiment", "run", s(&cfg), "--out", s(&run)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("record.json").exists());

    let suite = dir.path().join("h.toml");
    std::fs::write(
        &suite,
        "replicates = 2\npermutations = 19\n[[rows]]\nn_samples = 50\nlambda = 0.01\nnodes = 6\ndim = 6\n",
    )
    .unwrap();
    let hrun = dir.path().join("suite");
    let o = mflab(&["hoeffding-suite", "--config", s(&suite), "--seed", "4", "--out", s(&hrun)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(hrun.join("rows.csv").exists());
    assert!(hrun.join("summary.json").exists());

    let rep = dir.path().join("report");
    let o = mflab(&["report", s(&run), s(&hrun), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(rep.join("report.md")).unwrap();
    assert!(md.contains("statics_grid") && md.contains("hoeffding_table"));
}

#[test]
fn budget_stops_long_pde_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "J = 50\ndt = 1e-6\nsteps = 100000000\nrecord_every = 1000\n").unwrap();
    let run = dir.path().join("r");
    let o = mflab(&["simulate-pde", "--kind", "joint3", "--config", s(&cfg), "--out", s(&run), "--budget-seconds", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(run.join("summary.json")).unwrap();
    assert!(summary.contains("\"interrupted\": true") || summary.contains("\"interrupted\":true"));
}
