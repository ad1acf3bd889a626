//! End-to-end behaviour of the `fekete` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;

fn fekete(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fekete"))
        .args(args)
        .env_remove("FEKETE_BACKEND")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn brownian(m: usize, method: serde_json::Value, n: &[usize], out: &Path) -> serde_json::Value {
    let mut cfg = json!({
        "kernel": {"name": "brownian"},
        "domain": {"name": "interval01", "m": m},
        "method": method,
        "output": out,
    });
    if !n.is_empty() {
        cfg["n_values"] = json!(n);
    }
    cfg
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", brownian(40, json!({"name": "algorithm1"}), &[2, 3, 4], &out));
    let o = fekete(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let points = read(&out.join("points.csv"));
    let mut lines = points.lines();
    assert_eq!(lines.next(), Some("n,rank,index,x1"));
    assert_eq!(lines.count(), 2 + 3 + 4);
    let metrics = read(&out.join("metrics.csv"));
    assert!(metrics.starts_with("n,max_power,cond,status\n"));
    assert_eq!(metrics.lines().skip(1).filter(|l| l.ends_with(",ok")).count(), 3);
    assert!(read(&out.join("timings.csv")).starts_with("n,build_s,solve_s\n"));
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("run.json"))).unwrap();
    assert_eq!(report["method"], "algorithm1");
    assert_eq!(report["records"].as_array().unwrap().len(), 3);
}

#[test]
fn malformed_configs_exit_one_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad = [
        json!({"kernel": {"name": "brownian"}, "domain": {"name": "interval01", "m": 20}, "method": {"name": "algorithm1"}, "output": out}),
        brownian(20, json!({"name": "algorithm1"}), &[3, 25], &out),
        brownian(20, json!({"name": "algorithm2", "schedule": [4, 3]}), &[], &out),
        brownian(20, json!({"name": "algorithm1"}), &[3, 3], &out),
        brownian(20, json!({"name": "simplex"}), &[3], &out),
        brownian(20, json!({"name": "algorithm1", "schedule": [3]}), &[3], &out),
        {
            let mut c = brownian(20, json!({"name": "algorithm1"}), &[3], &out);
            c["unknown"] = json!(1);
            c
        },
        {
            let mut c = brownian(20, json!({"name": "algorithm1"}), &[3], &out);
            c["solver"] = json!({"backend": "mosek"});
            c
        },
    ];
    for (i, cfg) in bad.into_iter().enumerate() {
        let path = write_config(tmp.path(), &format!("bad{i}.json"), cfg);
        let o = fekete(&["run", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "config {i}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "config {i}");
        assert!(!out.exists(), "config {i} left artifacts");
    }
    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(fekete(&["run", garbage.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(fekete(&["run", tmp.path().join("absent.json").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn failed_selection_exits_two_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", brownian(8, json!({"name": "algorithm1"}), &[2, 6], &out));
    let o = fekete(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = 6"));
    let metrics = read(&out.join("metrics.csv"));
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert!(rows[0].ends_with(",ok"));
    assert_eq!(rows[1], "6,,,failed");
    // failed rows contribute no points
    assert!(read(&out.join("points.csv")).lines().skip(1).all(|l| l.starts_with("2,")));
}

#[test]
fn solver_breakdown_exits_one_with_error_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", brownian(20, json!({"name": "algorithm1"}), &[3], &out));
    let o = fekete(&["run", cfg.to_str().unwrap(), "--backend", "external:/nonexistent/solver"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(read(&out.join("metrics.csv")).contains("3,,,error"));
}

#[test]
fn external_backend_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", brownian(40, json!({"name": "algorithm1"}), &[3, 5], Path::new("unused")));
    let builtin = tmp.path().join("builtin");
    let external = tmp.path().join("external");
    let backend = format!("external:{} solve", env!("CARGO_BIN_EXE_fekete"));
    assert_eq!(fekete(&["run", cfg.to_str().unwrap(), "--output", builtin.to_str().unwrap()]).status.code(), Some(0));
    let o = fekete(&["run", cfg.to_str().unwrap(), "--output", external.to_str().unwrap(), "--backend", &backend]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&builtin.join("points.csv")), read(&external.join("points.csv")));
    let report: serde_json::Value = serde_json::from_str(&read(&external.join("run.json"))).unwrap();
    assert_eq!(report["backend"], backend);
}

#[test]
fn environment_selects_the_backend() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", brownian(20, json!({"name": "algorithm1"}), &[3], &out));
    let o = Command::new(env!("CARGO_BIN_EXE_fekete"))
        .args(["run", cfg.to_str().unwrap()])
        .env("FEKETE_BACKEND", "external:/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    // the flag wins over the environment
    let o = Command::new(env!("CARGO_BIN_EXE_fekete"))
        .args(["run", cfg.to_str().unwrap(), "--backend", "builtin"])
        .env("FEKETE_BACKEND", "external:/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn dump_socp_writes_readable_programs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", brownian(30, json!({"name": "algorithm2", "schedule": [1, 3, 5]}), &[], &out));
    assert_eq!(fekete(&["run", cfg.to_str().unwrap(), "--dump-socp"]).status.code(), Some(0));
    assert!(!out.join("socp_n1.json").exists());
    for n in [3, 5] {
        let path = out.join(format!("socp_n{n}.json"));
        let prog = fekete_core::socp::ConicProgram::from_json(&read(&path)).unwrap();
        assert!(prog.validate().is_ok());
        let solved = tmp.path().join(format!("solved{n}.json"));
        assert_eq!(fekete(&["solve", path.to_str().unwrap(), solved.to_str().unwrap()]).status.code(), Some(0));
        let r: serde_json::Value = serde_json::from_str(&read(&solved)).unwrap();
        assert_eq!(r["v"].as_array().unwrap().len(), prog.num_vars());
    }
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", brownian(60, json!({"name": "p_greedy"}), &[3, 7, 11], Path::new("unused")));
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        assert_eq!(fekete(&["run", cfg.to_str().unwrap(), "--output", d.to_str().unwrap()]).status.code(), Some(0));
    }
    for file in ["points.csv", "metrics.csv"] {
        assert_eq!(read(&dirs[0].join(file)), read(&dirs[1].join(file)), "{file}");
    }
}

#[test]
fn compare_outer_joins_on_n() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [
        ("a1", json!({"name": "algorithm1"}), vec![3, 4]),
        ("pg", json!({"name": "p_greedy"}), vec![4, 5]),
        ("a2", json!({"name": "algorithm2", "schedule": [2, 4]}), vec![]),
    ];
    let mut dirs = Vec::new();
    for (name, method, n) in runs {
        let out = tmp.path().join(name);
        let cfg = write_config(tmp.path(), &format!("{name}.json"), brownian(30, method, &n, &out));
        assert_eq!(fekete(&["run", cfg.to_str().unwrap()]).status.code(), Some(0), "{name}");
        dirs.push(out);
    }
    let table = tmp.path().join("table.csv");
    let mut args = vec!["compare"];
    args.extend(dirs.iter().map(|d| d.to_str().unwrap()));
    args.extend(["--output", table.to_str().unwrap()]);
    assert_eq!(fekete(&args).status.code(), Some(0));

    let mut r = csv::Reader::from_path(&table).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..3], ["kernel", "domain", "n"]);
    assert_eq!(header.len(), 3 + 3 * 3);
    assert!(header.contains(&"p_greedy_max_power".to_string()));
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let ns: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(ns, ["2", "3", "4", "5"]);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    // n = 4 appears in all three runs, n = 5 only in the greedy one
    assert!(rows[2].iter().all(|c| !c.is_empty()));
    assert!(rows[3][col("algorithm1_status")].is_empty());
    assert_eq!(&rows[3][col("p_greedy_status")], "ok");
}

#[test]
fn compare_labels_repeated_methods_by_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for name in ["left", "right"] {
        let out = tmp.path().join(name);
        let cfg = write_config(tmp.path(), &format!("{name}.json"), brownian(20, json!({"name": "p_greedy"}), &[2], &out));
        assert_eq!(fekete(&["run", cfg.to_str().unwrap()]).status.code(), Some(0));
        dirs.push(out);
    }
    let table = fekete_cli::compare(&dirs).unwrap();
    assert!(table.header.contains(&"p_greedy@left_cond".to_string()));
    assert!(table.header.contains(&"p_greedy@right_cond".to_string()));
}

#[test]
fn compare_reports_every_missing_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = fekete(&["compare", empty.to_str().unwrap(), tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("run.json").count(), 2, "{err}");
    assert_eq!(err.matches("metrics.csv").count(), 2, "{err}");
}
