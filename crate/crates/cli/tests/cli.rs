use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn psrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const RUN: &str = r#"{
    "env": {"family": "chain", "n": 5},
    "agent": {"kind": "psrl"},
    "run": {"episodes": 400, "seeds": [0, 1, 2], "record_decomposition": true, "sweep_n": [3, 4, 5]}
}"#;

#[test]
fn run_and_sweep_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.json", RUN);
    for (sub, file) in [("run", "trace.csv"), ("sweep", "sweep.csv")] {
        let mut outputs = Vec::new();
        for (tag, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
            let out = dir.path().join(tag).join(file);
            let status = psrl(&[
                sub,
                "--config",
                &config,
                "--out",
                out.to_str().unwrap(),
                "--parallel",
                threads,
            ]);
            assert!(
                status.status.success(),
                "{}",
                String::from_utf8_lossy(&status.stderr)
            );
            let mut files: Vec<_> = fs::read_dir(dir.path().join(tag))
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| {
                    p.file_name()
                        .unwrap()
                        .to_str()
                        .unwrap()
                        .starts_with(file.trim_end_matches(".csv"))
                })
                .collect();
            files.sort();
            outputs.push(
                files
                    .iter()
                    .map(|p| fs::read(p).unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[1], outputs[2]);
    }
    let trace = fs::read_to_string(dir.path().join("a").join("trace_seed1.csv")).unwrap();
    assert!(trace.starts_with("episode,delta,cum_regret,delta_opt,delta_conc\n"));
    assert_eq!(trace.lines().count(), 401);
    let slope = fs::read_to_string(dir.path().join("a").join("sweep_slope.csv")).unwrap();
    assert!(slope.starts_with("N,median_lt,slope_window\n"));
}

#[test]
fn seed_flag_selects_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.json", RUN);
    let one = psrl(&["run", "--config", &config, "--seed", "2"]);
    assert!(one.status.success());
    let out = dir.path().join("multi.csv");
    psrl(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    let from_multi = fs::read(dir.path().join("multi_seed2.csv")).unwrap();
    assert_eq!(one.stdout, from_multi);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        RUN.replace(r#""episodes": 400"#, r#""episodes": 400, "unknown": true"#),
        RUN.replace(r#""kind": "psrl""#, r#""kind": "ucrl3""#),
        RUN.replace(r#""episodes": 400"#, r#""episodes": 0"#),
        RUN.replace(r#""seeds": [0, 1, 2]"#, r#""seeds": []"#),
        "{ not json".to_owned(),
    ];
    for (i, body) in cases.iter().enumerate() {
        let config = write(dir.path(), &format!("bad{i}.json"), body);
        let out = psrl(&[
            "run",
            "--config",
            &config,
            "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "case {i}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let missing = psrl(&[
        "run",
        "--config",
        dir.path().join("nope.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
    let no_sizes = write(
        dir.path(),
        "nosweep.json",
        &RUN.replace(r#", "sweep_n": [3, 4, 5]"#, ""),
    );
    assert_eq!(
        psrl(&["sweep", "--config", &no_sizes]).status.code(),
        Some(2)
    );
}

#[test]
fn estimate_dominance_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let est = write(
        dir.path(),
        "est.json",
        r#"{"env": {"family": "fig1_bandit_s", "n": 10}, "agent": {"kind": "ucrl2_fh"}, "run": {"episodes": 50, "seeds": [0, 1]}}"#,
    );
    let out = psrl(&["estimate", "--config", &est]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("seed,episode,imagined_v1,true_v1\n"));
    assert_eq!(text.lines().count(), 101);

    let dom = write(
        dir.path(),
        "dom.json",
        r#"{"x": {"kind": "gaussian", "mean": 0.5, "var": 0.5}, "y": {"kind": "dirichlet_dot", "alpha": [1, 1], "v": [0, 1]}, "n_samples": 20000}"#,
    );
    let out = psrl(&["dominance", "--config", &dom, "--seed", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("c,margin,se,violated\n"));

    let cov = write(
        dir.path(),
        "cov.json",
        r#"{"alpha": [2, 3, 1], "horizon": 4, "delta": 0.1, "trials": 20000}"#,
    );
    let out = psrl(&["coverage", "--config", &cov]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("trials,violations,rate,bound,delta,standard_error\n20000,"));

    let bad = write(
        dir.path(),
        "baddom.json",
        r#"{"x": {"kind": "gaussian", "mean": 0, "var": 1}, "y": {"kind": "gaussian", "mean": 0, "var": 1}, "n_samples": 10}"#,
    );
    assert_eq!(
        psrl(&["dominance", "--config", &bad]).status.code(),
        Some(2)
    );
}
