use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tpbo");

fn tpbo(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn xor_csv(dir: &Path) {
    write(dir, "xor.csv", "x1,x2,y\n-1,-1,-1\n1,-1,1\n-1,1,1\n1,1,-1\n");
}

fn se_model(dir: &Path) {
    let rows: Vec<String> = (0..12)
        .map(|i| {
            let a = -1.0 + i as f64 / 6.0;
            let b = (i as f64 * 0.7).sin();
            format!("{a},{b},{}", a * a + b)
        })
        .collect();
    write(dir, "aux.csv", &format!("x1,x2,y\n{}\n", rows.join("\n")));
    let o = tpbo(&["pretrain", "--aux", "aux.csv", "--out", "se.json"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn pretrain_xor_gives_eighth_duals() {
    let dir = tempfile::tempdir().unwrap();
    xor_csv(dir.path());
    let o = tpbo(
        &["pretrain", "--aux", "xor.csv", "--kernel", "poly", "--degree", "2", "--offset", "1", "--task", "classification", "--out", "m.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("lambda="));
    let m = json(dir.path(), "m.json");
    let alpha: Vec<f64> = m["alpha"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, w) in alpha.iter().zip([-0.125, 0.125, 0.125, -0.125]) {
        assert!((a - w).abs() < 1e-9, "{alpha:?}");
    }
    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    assert!(text.contains("1.2500000000000000e-1"));
}

#[test]
fn pretrain_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.csv", "x1,y\n0.1,2\n0.5,2\n0.9,2\n");
    let o = tpbo(&["pretrain", "--aux", "c.csv", "--out", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("vanishing"));
    assert_eq!(tpbo(&["pretrain", "--aux", "missing.csv", "--out", "m.json"], dir.path()).status.code(), Some(2));
    write(dir.path(), "bad.csv", "x1,y\n0.1,oops\n");
    assert_eq!(tpbo(&["pretrain", "--aux", "bad.csv", "--out", "m.json"], dir.path()).status.code(), Some(2));
    xor_csv(dir.path());
    assert_eq!(tpbo(&["pretrain", "--aux", "xor.csv", "--task", "ranking", "--out", "m.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn pretrain_square_distance_targets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", "x1,y\n0,490\n1,500\n2,530\n");
    let o = tpbo(&["pretrain", "--aux", "d.csv", "--target-square-distance", "500", "--out", "d.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(dir.path(), "d.json");
    assert_eq!(m["normalization"]["y_min"].as_f64(), Some(0.0));
    assert_eq!(m["normalization"]["y_max"].as_f64(), Some(900.0));
}

#[test]
fn bench_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench", "--functions", "himmelblau", "--methods", "tp-ei,ei", "--seeds", "2", "--iters", "5", "--out"];
    let mut a = args.to_vec();
    a.extend(["a.csv", "--summary", "s.csv"]);
    assert!(tpbo(&a, dir.path()).status.success());
    let mut b = args.to_vec();
    b.push("b.csv");
    assert!(tpbo(&b, dir.path()).status.success());
    let ra = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(ra.lines().count(), 1 + 20);
    assert_eq!(ra, std::fs::read_to_string(dir.path().join("b.csv")).unwrap());
    let summary = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(summary.starts_with("method,function,iteration,median,q25,q75\n"));
    assert_eq!(summary.lines().count(), 1 + 10);
}

#[test]
fn bench_all_functions() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpbo(&["bench", "--functions", "all", "--methods", "ei", "--seeds", "1", "--iters", "1", "--out", "r.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    names.dedup();
    assert_eq!(names.len(), 6);
}

#[test]
fn bench_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = tpbo(&["bench", "--methods", "pi", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tp-ei"));
    let o = tpbo(&["bench", "--functions", "levy", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("himmelblau"));
}

#[test]
fn suggest_tell_cycle() {
    let dir = tempfile::tempdir().unwrap();
    se_model(dir.path());
    let first = tpbo(&["suggest", "--session", "s.json", "--model", "se.json", "--seed", "4"], dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    let again = tpbo(&["suggest", "--session", "s.json"], dir.path());
    assert_eq!(stdout(&first), stdout(&again));

    let s = json(dir.path(), "s.json");
    let x: Vec<f64> = s["pending"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
    for key in ["model_ref", "domain", "iteration", "observations", "pending", "seed", "acquisition"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }

    let xs = format!("{},{}", x[0], x[1]);
    let o = tpbo(&["tell", "--session", "s.json", "--x", &xs, "--y", "0.25"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(dir.path(), "s.json");
    assert_eq!(s["iteration"], 1);
    assert!(s["pending"].is_null());

    let o = tpbo(&["tell", "--session", "s.json", "--x", "-0.5,2", "--y", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = tpbo(&["tell", "--session", "s.json", "--x", "0.5", "--y", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = tpbo(&["tell", "--session", "s.json", "--x", "-0.5,0.5", "--y", "0.1"], dir.path());
    assert!(o.status.success());
    assert!(stderr(&o).contains("no suggestion was pending"));
    assert_eq!(json(dir.path(), "s.json")["iteration"], 2);

    let next = tpbo(&["suggest", "--session", "s.json"], dir.path());
    assert!(next.status.success());
    assert_ne!(stdout(&next), stdout(&first));
}

#[test]
fn suggest_needs_a_model_for_new_sessions() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tpbo(&["suggest", "--session", "s.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn optimize_runs_a_builtin_function() {
    let dir = tempfile::tempdir().unwrap();
    se_model(dir.path());
    let o = tpbo(&["optimize", "--function", "himmelblau", "--model", "se.json", "--iters", "4", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("t=")).count(), 4);
    assert!(out.contains("best x="));
    let repeat = tpbo(&["optimize", "--function", "himmelblau", "--model", "se.json", "--iters", "4", "--seed", "1"], dir.path());
    assert_eq!(out, stdout(&repeat));
}
