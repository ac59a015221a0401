use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn oscerr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscerr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = oscerr(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn trees_lists_every_tree_up_to_order() {
    let out = ok(&["trees", "--max-order", "4"]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 1 + 1 + 2 + 4);
    let bushy = rows.iter().find(|r| r.starts_with("0111\t")).expect("bushy tree of order 4");
    let fields: Vec<&str> = bushy.split('\t').collect();
    // rho, alpha, sigma, gamma
    assert_eq!(&fields[1..5], ["4", "1", "6", "4"]);
}

#[test]
fn coeffs_modified_runge2() {
    let out = ok(&["coeffs", "--method", "runge2", "--max-order", "4", "--modified"]);
    let find = |enc: &str| {
        out.lines()
            .find(|l| l.split('\t').next() == Some(enc))
            .unwrap_or_else(|| panic!("no row for {enc}"))
            .to_string()
    };
    assert!(find("011").ends_with("-1/4"), "{}", find("011"));
    assert!(find("012").ends_with("-1"), "{}", find("012"));
    assert!(find("0122").ends_with("3/2"), "{}", find("0122"));
    assert!(find("0123").ends_with("3"), "{}", find("0123"));
}

#[test]
fn design_tuned_from_c2() {
    let out = ok(&["design-tuned", "--c2", "1"]);
    assert!(out.contains("order\t3"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("tuning") && l.ends_with("\t0")), "{out}");
    // c2 = 2/3 admits no third-order method with the tuning condition
    assert_eq!(oscerr(&["design-tuned", "--c2", "2/3"]).status.code(), Some(1));
}

#[test]
fn argument_errors_exit_one() {
    assert_eq!(oscerr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(oscerr(&["coeffs", "--method", "nosuch"]).status.code(), Some(1));
    assert_eq!(oscerr(&["integrate", "--h", "0.1"]).status.code(), Some(1));
    assert_eq!(oscerr(&["integrate", "--h", "-0.1", "--t-end", "1"]).status.code(), Some(1));
    assert_eq!(oscerr(&["experiment", "--problem", "kepler"]).status.code(), Some(1));
    assert_eq!(oscerr(&["--help"]).status.code(), Some(0));
}

#[test]
fn integrate_writes_seventeen_digits_deterministically() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(&["--output-dir", d, "integrate", "--method", "heun3", "--h", "0.01", "--t-end", "5", "--stride", "10", "--output", name]);
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let lines = csv_lines(&dir.path().join("a.csv"));
    assert_eq!(lines[0], "t,y1,y2");
    assert_eq!(lines.len(), 1 + 51);
    for field in lines[1].split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first, [0.0, 1.0, 0.0]);
}

#[test]
fn estimate_and_elint_csvs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--output-dir", d, "estimate", "--method", "runge2", "--problem", "airy", "--h", "0.01", "--t-end", "40", "--dt", "0.1", "--output", "est.csv"]);
    let lines = csv_lines(&dir.path().join("est.csv"));
    assert_eq!(lines[0], "t,est1,est2,est1_leading_only");
    assert!(lines.len() > 10);

    ok(&["--output-dir", d, "elint", "--tree", "01", "--tree", "011", "--t-end", "10", "--stride", "500", "--output", "el.csv"]);
    let lines = csv_lines(&dir.path().join("el.csv"));
    assert_eq!(lines[0], "t,I_01_1,I_01_2,I_011_1,I_011_2");
    assert_eq!(lines.len(), 1 + 101);
}

#[test]
fn problem_fit_prints_constants() {
    let out = ok(&["problem", "emden", "--fit", "--t-fit", "150"]);
    assert!(out.contains("c1"), "{out}");
    assert!(out.contains("chi"), "{out}");
    let out = ok(&["problem", "airy", "--fit", "--t-fit", "150"]);
    assert!(out.contains("s0"), "{out}");
}

#[test]
fn experiment_writes_csvs_report_and_plots() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ok(&[
        "--output-dir", d, "--workers", "2", "experiment", "--methods", "runge2,heun3", "--h", "0.01",
        "--t-end", "80", "--reference-h", "0.002", "--fit-window", "10,80",
    ]);
    assert_eq!(out.lines().filter(|l| l.ends_with("ok")).count(), 2, "{out}");
    for stem in ["runge2_h0.01", "heun3_h0.01"] {
        for suffix in ["_error.csv", "_estimate.csv", ".svg", "_loglog.svg"] {
            assert!(dir.path().join(format!("{stem}{suffix}")).exists(), "{stem}{suffix}");
        }
        assert_eq!(csv_lines(&dir.path().join(format!("{stem}_error.csv")))[0], "t,err1,err2");
    }
    let report = std::fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("method = \"runge2\""), "{report}");
    assert!(report.contains("[cells.fit]"), "{report}");
    assert_eq!(report.matches("[[cells]]").count(), 2, "{report}");
}

#[test]
fn experiment_partial_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = oscerr(&[
        "--output-dir", d, "experiment", "--problem", "airy", "--methods", "runge2", "--h", "0.01,2",
        "--t-end", "300", "--reference-h", "0.002", "--no-plot",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("failure"), "{report}");
    assert!(!dir.path().join("runge2_h0.01.svg").exists());
}

#[test]
fn experiment_with_no_methods_writes_empty_report() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--output-dir", d, "experiment", "--methods", "", "--t-end", "10"]);
    let report = std::fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("cells = []"), "{report}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("from_config");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "output_dir = {:?}\nworkers = 1\n\n[experiment]\nmethods = [\"runge2\"]\nstep_sizes = [0.01]\nt_end = 30.0\nreference_h = 0.002\nplot = false\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    ok(&["--config", config.to_str().unwrap(), "experiment", "--methods", "heun3"]);
    assert!(out_dir.join("heun3_h0.01_error.csv").exists());
    assert!(!out_dir.join("runge2_h0.01_error.csv").exists());
    assert!(!out_dir.join("heun3_h0.01.svg").exists());

    std::fs::write(&config, "[experiment]\nmethodz = [\"runge2\"]\n").unwrap();
    assert_eq!(oscerr(&["--config", config.to_str().unwrap(), "experiment"]).status.code(), Some(1));
}
