use std::fs;
use std::path::Path;

use entangle_cli::config::{load_config, RunConfig};
use entangle_cli::run::{analyze, REPRODUCTION_TOL};
use entangle_cli::{main_with_args, EXIT_CONFIG, EXIT_MONOTONICITY, EXIT_OK};

const NV: &str = "
[run]
seed = 3
[model]
kind = nv
[grid]
T = 5 us
nt = 2000
[functional]
kind = PE_cspace
[optimizer]
amplitude_scale = 50 MHz, 100 kHz
max_evals = 400
restarts = 5
";

const GENERIC_KROTOV: &str = "
[model]
kind = generic
omega1 = 1 rad/ns
omega2 = 1.3 rad/ns
lambda = 0.7
[grid]
T = 4 ns
nt = 200
[functional]
kind = LI_ginvariant
target = CNOT
w = 0.8
[optimizer]
lambda_a = 300
max_iter = 15
[guess]
kind = sin2
peak = 0.3 rad/ns
carrier = 0.9 rad/ns
";

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_cli(args: &[&str]) -> i32 {
    let mut v = vec!["entangle"];
    v.extend_from_slice(args);
    v.push("--quiet");
    main_with_args(v)
}

fn run_to(config: &Path, out: &Path) -> i32 {
    run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn output_headers_are_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "nv.conf", NV);
    let out = tmp.path().join("out");
    assert_eq!(run_to(&cfg, &out), EXIT_OK);
    assert_eq!(
        first_line(&out.join("results.csv")),
        "iter,J_total,J_T,error,c1,c2,c3,g1,g2,g3,pop_loss"
    );
    assert_eq!(first_line(&out.join("pulses.csv")), "t_ns,omega_mw,omega_rf");
    assert_eq!(first_line(&out.join("weyl_path.csv")), "eval_index,c1,c2,c3,metric");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["algorithm", "stop", "J_T", "error", "metrics", "seed"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    // 17 significant digits.
    let row = fs::read_to_string(out.join("pulses.csv")).unwrap();
    let cell = row.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    assert_eq!(cell.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
}

#[test]
fn nv_pe_run_stays_in_ground_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "nv.conf", NV);
    let out = tmp.path().join("out");
    assert_eq!(run_to(&cfg, &out), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["metrics"]["f_pe_tilde"].as_f64().unwrap() > 1.0 - 1e-10);
    assert_eq!(summary["stop"], "success");
    let path = fs::read_to_string(out.join("weyl_path.csv")).unwrap();
    let mut rows = 0;
    for line in path.lines().skip(1) {
        let c3: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(c3.abs() < 1e-3 * std::f64::consts::PI, "{line}");
        rows += 1;
    }
    assert!(rows > 10);
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, body) in [("nv.conf", NV), ("krotov.conf", GENERIC_KROTOV)] {
        let cfg = write_config(tmp.path(), name, body);
        let a = tmp.path().join(format!("{name}.a"));
        let b = tmp.path().join(format!("{name}.b"));
        assert_eq!(run_to(&cfg, &a), EXIT_OK);
        assert_eq!(run_to(&cfg, &b), EXIT_OK);
        for f in ["results.csv", "pulses.csv", "weyl_path.csv", "summary.json"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{name}: {f}");
        }
    }
    let cfg = write_config(tmp.path(), "nv.conf", NV);
    let c = tmp.path().join("nv.c");
    assert_eq!(
        run_cli(&["run", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "4"]),
        EXIT_OK
    );
    assert_ne!(
        fs::read(tmp.path().join("nv.conf.a/weyl_path.csv")).unwrap(),
        fs::read(c.join("weyl_path.csv")).unwrap()
    );
}

#[test]
fn stored_pulses_reproduce_recorded_j_t() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, body) in [("nv.conf", NV), ("krotov.conf", GENERIC_KROTOV)] {
        let cfg_path = write_config(tmp.path(), name, body);
        let out = tmp.path().join(name).with_extension("out");
        assert_eq!(run_to(&cfg_path, &out), EXIT_OK);
        let mut cfg = load_config(&cfg_path).unwrap();
        cfg.output_dir = out.clone();
        let a = analyze(&cfg, &out).unwrap();
        let dev = a.deviation().unwrap();
        assert!(dev <= REPRODUCTION_TOL, "{name}: {dev:e}");
        assert_eq!(
            run_cli(&["analyze", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]),
            EXIT_OK
        );
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "nv.conf", NV);
    let out = tmp.path().join("sweep");
    let code = run_cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--sweep",
        "grid.T=",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        fs::read_to_string(out.join("sweep.csv")).unwrap(),
        "value,error,J_T,pop_loss,in_pe,concurrence,stop\n"
    );
}

#[test]
fn sweep_runs_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "nv.conf", NV);
    let out = tmp.path().join("sweep");
    let code = run_cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--sweep",
        "run.seed=1,2",
    ]);
    assert_eq!(code, EXIT_OK);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
    assert!(out.join("run.seed=1/results.csv").exists());
    assert!(out.join("run.seed=2/pulses.csv").exists());
}

#[test]
fn table_defaults_load_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "t.conf",
        "[model]\nkind = transmon\n[grid]\nT = 100 ns\nnt = 2000\n[functional]\nkind = PE_ginvariant\n",
    );
    let c: RunConfig = load_config(&cfg).unwrap();
    let entangle_cli::config::ModelConfig::Transmon(p) = c.model else {
        panic!("not a transmon")
    };
    assert_eq!(p, entangle_core::models::TransmonParams::default());
}

#[test]
fn config_errors_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let w = write_config(tmp.path(), "w.conf", &format!("{NV}\n[functional]\n").replace(
        "kind = PE_cspace",
        "kind = PE_cspace\nw = 1.5",
    ));
    assert_eq!(run_to(&w, &tmp.path().join("o")), EXIT_CONFIG);
    let unknown = write_config(tmp.path(), "u.conf", &NV.replace("restarts = 5", "restarts = 5\nbogus = 2"));
    assert_eq!(run_to(&unknown, &tmp.path().join("o")), EXIT_CONFIG);
    assert_eq!(run_to(&tmp.path().join("missing.conf"), &tmp.path().join("o")), EXIT_CONFIG);
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn monotonicity_violation_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let body = GENERIC_KROTOV
        .replace("lambda_a = 300", "lambda_a = 2\nabort_on_violation = true");
    let cfg = write_config(tmp.path(), "k.conf", &body);
    let out = tmp.path().join("out");
    assert_eq!(run_to(&cfg, &out), EXIT_MONOTONICITY);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stop"], "monotonicity_violation");
}
