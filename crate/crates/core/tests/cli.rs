use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fracflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
        .args(args)
        .env_remove("FRACFLOW_WORKERS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_value(csv: &str, column: &str) -> f64 {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == column).expect("column present");
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    rows.last().unwrap()[idx].parse().unwrap()
}

#[test]
fn closed_form_example_at_unit_time() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"schema_version": 1, "beta": 0.5, "lambda": 1, "g": {"type": "const", "value": 0},
            "u_a": 1, "grid": {"start": 0.1, "stop": 1.0, "count": 10}, "method": "closed_form"}"#,
    );
    let o = fracflow(&["solve-caputo", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // E_{1/2}(−1) = e·erfc(1)
    assert!((last_value(&stdout(&o), "value") - 0.427_583_576_155_807).abs() < 1e-7);
}

#[test]
fn rl_with_zero_source_is_zero() {
    let d = TempDir::new().unwrap();
    for method in ["mc", "quad", "closed_form"] {
        let cfg = write(
            d.path(),
            "r.json",
            &format!(
                r#"{{"schema_version": 1, "beta": 0.5, "lambda": 1, "g": {{"type": "const", "value": 0}},
                    "grid": [0.2, 0.5, 1.0], "method": "{method}", "mc": {{"n_paths": 200}}}}"#
            ),
        );
        let out = d.path().join("r.csv");
        let o = fracflow(&["solve-rl", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(&out).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let idx = r.headers().unwrap().iter().position(|h| h == "value").unwrap();
        let mut n = 0;
        for row in r.records() {
            assert_eq!(row.unwrap()[idx].parse::<f64>().unwrap(), 0.0, "{method}");
            n += 1;
        }
        assert_eq!(n, 3);
    }
}

#[test]
fn unknown_key_is_named_and_exits_one() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "u.json",
        r#"{"schema_version": 1, "beta": 0.5, "lambda": 1, "g": {"type": "sin", "a": 1, "colour": 2},
            "grid": [0.5], "method": "quad"}"#,
    );
    let o = fracflow(&["solve-caputo", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let cfg = write(d.path(), "v.json", r#"{"schema_version": 1, "alpha": 0.5, "grid": [1.0], "extra": true}"#);
    let o = fracflow(&["ml", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));
}

#[test]
fn schema_and_usage_errors_exit_one() {
    let d = TempDir::new().unwrap();
    let quad_needs_stable = write(
        d.path(),
        "q.json",
        r#"{"schema_version": 1, "kernel": {"type": "multi_term", "weights": [1.0], "betas": [0.5]},
            "lambda": 1, "g": {"type": "const", "value": 1}, "grid": [0.5], "method": "quad"}"#,
    );
    assert_eq!(fracflow(&["solve-caputo", "--config", &quad_needs_stable]).status.code(), Some(1));
    let wrong_version = write(d.path(), "w.json", r#"{"schema_version": 9, "alpha": 0.5, "grid": [1.0]}"#);
    assert_eq!(fracflow(&["ml", "--config", &wrong_version]).status.code(), Some(1));
    assert_eq!(fracflow(&["ml", "--config", "/nonexistent/x.json"]).status.code(), Some(1));
    assert_eq!(fracflow(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(fracflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn horizon_exhaustion_exits_two() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "h.json",
        r#"{"schema_version": 1, "beta": 0.5, "lambda": 1, "g": {"type": "const", "value": 1},
            "grid": [1.0], "method": "mc", "mc": {"n_paths": 500, "horizon_override": 0.01}}"#,
    );
    let o = fracflow(&["solve-caputo", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mc_output_is_byte_identical_across_runs_and_workers() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "m.json",
        r#"{"schema_version": 1, "kernel": {"type": "variable_order", "order": {"type": "poly", "coeffs": [0.4, 0.2]}, "range": [0.4, 0.6]},
            "lambda": 1, "g": {"type": "sin"}, "u_a": 1, "grid": [0.3, 1.0], "method": "mc",
            "mc": {"n_paths": 2000, "master_seed": 11}}"#,
    );
    let a = fracflow(&["solve-caputo", "--config", &cfg, "--workers", "1"]);
    let b = fracflow(&["solve-caputo", "--config", &cfg, "--workers", "1"]);
    let c = fracflow(&["solve-caputo", "--config", &cfg, "--workers", "2"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn tables_have_headers() {
    let d = TempDir::new().unwrap();
    let ml = write(d.path(), "ml.json", r#"{"schema_version": 1, "alpha": 0.5, "grid": [-1.0, 0.0]}"#);
    let o = fracflow(&["ml", "--config", &ml]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("z,value\n"));
    assert!((last_value(&text, "value") - 1.0).abs() < 1e-15);

    let den = write(d.path(), "d.json", r#"{"schema_version": 1, "beta": 0.5, "grid": [1.0]}"#);
    let o = fracflow(&["density", "--config", &den]);
    assert!(stdout(&o).starts_with("x,density,cdf\n"));
    // Lévy density at 1
    let want = (-0.25f64).exp() / (2.0 * std::f64::consts::PI.sqrt());
    assert!((last_value(&stdout(&o), "density") - want).abs() < 1e-12);

    let ex = write(
        d.path(),
        "e.json",
        r#"{"schema_version": 1, "beta": 0.5, "t": 1, "grid": [0.5, 1.0, 2.0]}"#,
    );
    let o = fracflow(&["exit-law", "--config", &ex]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("s,density,laplace_at_lambda\n"));
    assert!((last_value(&text, "laplace_at_lambda") - 0.427_583_576_155_807).abs() < 1e-6);
}
