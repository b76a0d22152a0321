use regretlab::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("regretlab").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn counterexample_prints_the_exact_value() {
    let (code, out, _) = call(&["counterexample", "--hmax", "1000", "--T", "1000"]);
    assert_eq!(code, 0);
    assert!(out.contains("absolute: 249.75"), "{out}");
    let (_, out, _) = call(&["counterexample", "--hmax", "2", "--T", "2"]);
    assert!(out.contains("absolute: 0.25"), "{out}");
    let (_, out, _) = call(&["counterexample", "--hmax", "2", "--T", "2", "--p", "0"]);
    assert!(out.contains("absolute: 0\n"), "{out}");
}

#[test]
fn classify_named_environments() {
    let (code, out, _) = call(&["classify", "--env", "heaven_hell"]);
    assert_eq!(code, 0);
    assert!(out.contains("communicating: false"));
    assert!(out.contains("weakly_communicating: false"));
    assert!(out.contains("witness: "));
    let (_, out, _) = call(&["classify", "--env", "chain", "--param", "n=3"]);
    assert!(out.contains("communicating: true"), "{out}");
}

#[test]
fn classify_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let model = regretlab::mdp::Model::Continuing(regretlab::mdp::two_point_bandit(1.0).unwrap());
    std::fs::write(&path, regretlab::mdp::model_to_json(&model)).unwrap();
    let (code, out, _) = call(&["classify", "--mdp", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("ergodic: true"), "{out}");
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["bogus"]).0, 2);
    assert_eq!(call(&["classify"]).0, 2);
    let (code, _, err) = call(&["classify", "--mdp", "/nonexistent/m.json"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(call(&["counterexample", "--hmax", "1", "--T", "10"]).0, 2);
}

#[test]
fn io_failures_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"environment": {"prior": {"kind": "heaven_hell", "p": 0.5}}, "agent": {"agent": "psrl", "H": 1}, "T": 5, "seeds": [1]}"#,
    )
    .unwrap();
    // The output directory is an existing regular file.
    let (code, _, err) = call(&["run", "--config", cfg.to_str().unwrap(), "--out", cfg.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
    let (code, _, err) = call(&["run", "--config", dir.path().join("missing.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn heaven_hell_half_of_t() {
    let (code, out, _) = call(&["heaven-hell", "--T", "10"]);
    assert_eq!(code, 0);
    assert!(out.contains("expected regret: 5"), "{out}");
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"environment": {"prior": {"kind": "heaven_hell", "p": 0.5}}, "agent": {"agent": "psrl", "H": 1}, "T": 20, "seeds": [1, 2, 3]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let (code, out, err) = call(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("mean final regret"), "{out}");
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("seed_2.csv").exists());
}
