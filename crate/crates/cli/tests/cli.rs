use std::f64::consts::PI;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conekernel"))
        .args(args)
        .env_remove("CONEKERNEL_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(header: &str, name: &str) -> usize {
    header
        .split(',')
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn flux_free_kernel_has_free_modulus() {
    let o = run(&[
        "kernel", "--rho", "1", "--alpha", "0", "--t", "1", "--x", "1,0", "--y", "1,0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    let (abs, route) = (column(header, "abs"), column(header, "route"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let v: f64 = r[abs].parse().unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-12, "{} route: {v}", r[route]);
    }
}

#[test]
fn csv_rows_carry_provenance() {
    let o = run(&["kernel", "--t", "0.5", "--x", "1,0", "--y", "2,1", "--route", "closed"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("schema_version,config_hash,variant,rho,alpha,abs_tol,rel_tol,truncation,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[1].len(), 64);
    assert_eq!(row[2], "derivation_consistent");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["--bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["kernel", "--t", "1", "--x", "1", "--y", "1,0"]).status.code(),
        Some(1)
    );
    let o = run(&["kernel", "--alpha", "2", "--t", "1", "--x", "1,0", "--y", "1,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert_eq!(
        run(&["kernel", "--t", "0", "--x", "1,0", "--y", "1,0"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["selftest", "--criterion", "11"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("wave-dispersive"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["compare", "--rho", "2", "--alpha", "0.25"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let args = ["b-bounds", "--theta", "0.7", "--theta-p", "2.0"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[cone]\nrho = 2.0\nalpha = 0.25\n\n[compare]\nsamples = 3\n").unwrap();
    let out = dir.path().join("out.csv");
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "-0.4",
        "--output",
        out.to_str().unwrap(),
        "compare",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let (rho, alpha) = (column(header, "rho"), column(header, "alpha"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][rho], "2.0");
    assert_eq!(rows[0][alpha], "-0.4");

    std::fs::write(&cfg, "[cone]\nradius = 2.0\n").unwrap();
    assert_eq!(
        run(&["--config", cfg.to_str().unwrap(), "compare"]).status.code(),
        Some(1)
    );
}

#[test]
fn shipped_config_runs() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/default.toml");
    let a = run(&["--config", cfg, "kernel", "--t", "1", "--x", "1,0", "--y", "1,2"]);
    let b = run(&["kernel", "--t", "1", "--x", "1,0", "--y", "1,2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn scan_reports_are_json_lines() {
    let o = run(&["heat-scan"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(v["kind"], "scan_report");
    assert_eq!(v["provenance"]["schema_version"], 1);
    assert_eq!(v["record"]["converged"], true);
}

#[test]
fn specmeasure_routes_agree() {
    let o = run(&["specmeasure", "--lambda", "1.5", "--x", "1,0", "--y", "2,1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    let (re, im) = (column(header, "re"), column(header, "im"));
    let vals: Vec<(f64, f64)> = lines
        .map(|l| {
            let r: Vec<&str> = l.split(',').collect();
            (r[re].parse().unwrap(), r[im].parse().unwrap())
        })
        .collect();
    assert_eq!(vals.len(), 3);
    for v in &vals[1..] {
        assert!(
            (v.0 - vals[0].0).abs() < 1e-9 && (v.1 - vals[0].1).abs() < 1e-9,
            "{v:?} vs {:?}",
            vals[0]
        );
    }
}

#[test]
fn quick_selftest_subset() {
    let o = run(&[
        "selftest",
        "--quick",
        "--criterion",
        "1",
        "--criterion",
        "6",
        "--criterion",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("PASS [ 1]"));
    assert!(lines[1].starts_with("FAIL [ 6]") && lines[1].contains("[expected:"));
    assert!(lines[2].starts_with("PASS [10]"));
}
