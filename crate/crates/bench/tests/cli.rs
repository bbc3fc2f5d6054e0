use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("isac-bench-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ranging_is_byte_identical_across_runs() {
    let dir = scratch("det");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = bench(&[
            "run",
            "ranging",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
    for (name, body) in &fa {
        let first = String::from_utf8_lossy(body)
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert!(
            first.starts_with("# experiment=ranging seed=7 config_hash="),
            "{name}: {first}"
        );
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dir = scratch("workers");
    let mut bodies = Vec::new();
    for workers in [1, 3] {
        let cfg = dir.join(format!("w{workers}.toml"));
        fs::write(&cfg, format!("workers = {workers}\nranging.trials = 6\n")).unwrap();
        let out = dir.join(format!("out{workers}"));
        let o = bench(&[
            "run",
            "ranging",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
        let body: Vec<(String, String)> = csv_files(&out)
            .into_iter()
            .map(|(n, b)| {
                (
                    n,
                    String::from_utf8(b)
                        .unwrap()
                        .split_once('\n')
                        .unwrap()
                        .1
                        .to_string(),
                )
            })
            .collect();
        bodies.push(body);
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn cancellation_budget_reports_stages() {
    let dir = scratch("cancel");
    let o = bench(&[
        "run",
        "cancellation-budget",
        "--out",
        dir.to_str().unwrap(),
        "--plots",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for stage in ["first stage", "analog", "digital", "total"] {
        assert!(
            text.lines()
                .any(|l| l.starts_with("PASS") && l.contains(stage)),
            "{text}"
        );
    }
    assert!(dir.join("cancellation_budget.csv").exists());
    assert!(dir.join("cancellation_budget.svg").exists());
}

#[test]
fn unknown_experiment_is_usage_error() {
    let o = bench(&["run", "unknown-name"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown-name"));
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_3() {
    let dir = scratch("config");
    let bad = dir.join("bad.toml");
    fs::write(&bad, "seed = 1\nradio.fft_sise = 32\n").unwrap();
    let o = bench(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("fft_sise") && err.contains("line 2"), "{err}");

    let o = bench(&["run", "los-dominance", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let missing = dir.join("missing.toml");
    assert_eq!(
        bench(&["validate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn validate_fills_defaults() {
    let dir = scratch("validate");
    let empty = dir.join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = bench(&["validate", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("radio.fft_size = 64\n"), "{text}");
    assert!(text.contains("ranging.trials = 100\n"), "{text}");
    assert!(text.contains("# config_hash="), "{text}");

    let small = dir.join("small.toml");
    fs::write(&small, "radio.fft_size = 32\nradio.cp_len = 8\n").unwrap();
    let text = stdout(&bench(&["validate", small.to_str().unwrap()]));
    assert!(text.contains("radio.fft_size = 32\n"), "{text}");
}

#[test]
fn list_names_every_experiment() {
    let o = bench(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in [
        "phase-offsets",
        "los-dominance",
        "motion-ambiguity",
        "separator-harm",
        "comms-impact",
        "stft-irregular",
        "cancellation-budget",
        "ranging",
        "velocity",
        "localization",
    ] {
        assert!(
            text.lines()
                .any(|l| l.split_whitespace().next() == Some(name)),
            "{name}"
        );
    }
}
