mod common;

use std::fs;

use common::*;

const COARSE: &str = "[solver]\nmax_edge_len = 2.4\n[sweep]\nn_points = 9\n";

#[test]
fn simulate_writes_outputs_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", COARSE);
    let out = dir.path().join("sim");
    let out_s = out.to_str().unwrap();
    let r = run(&["simulate", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let s4p = fs::read_to_string(out.join("sparams.s4p")).unwrap();
    assert_eq!(s4p.lines().next(), Some("# GHz S RI R 50"));
    let net = read_touchstone(&s4p, 4).unwrap();
    assert_eq!(net.points.len(), 9);
    assert_eq!(write_touchstone(&net), s4p);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert!(meta["solver_calls"].as_u64().unwrap() > 0);
    assert!(meta["eps_eff"].as_f64().unwrap() > 1.0);
    assert!(meta["mesh"]["unknowns"].as_u64().unwrap() > 0);

    let before: Vec<Vec<u8>> = ["sparams.s4p", "sparams.csv", "sparams.svg"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    let r = run(&["simulate", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&r), 0);
    let after: Vec<Vec<u8>> = ["sparams.s4p", "sparams.csv", "sparams.svg"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(before, after);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["solver_calls"].as_u64(), Some(0));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();
    let cfg = write_config(dir.path(), "h1.toml", "[design]\nh1 = 4.725\n");
    let r = run(&["simulate", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("h1"));

    let cfg = write_config(dir.path(), "typo.toml", "[design]\nwidht = 10.0\n");
    let r = run(&["simulate", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("widht"));

    let r = run(&["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&r), 2);
    let r = run(&["sweep", "depth", "--out", out_s]);
    assert_eq!(code(&r), 2);
}

#[test]
fn report_on_empty_or_corrupt_dir_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 2);
    fs::write(dir.path().join("report.csv"), "garbage\n").unwrap();
    let r = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 2);
}

#[test]
fn width_study_and_report_regeneration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[solver]\nmax_edge_len = 2.4\n[study]\nn_points = 21\n");
    let out = dir.path().join("width");
    let r = run(&["sweep", "width", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}{}", String::from_utf8_lossy(&r.stdout), String::from_utf8_lossy(&r.stderr));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 7);
    let s4p = fs::read_dir(&out).unwrap().flatten().filter(|e| e.path().extension().is_some_and(|x| x == "s4p")).count();
    assert_eq!(s4p, 6);

    let svg = fs::read(out.join("summary.svg")).unwrap();
    let md = fs::read(out.join("summary.md")).unwrap();
    fs::remove_file(out.join("summary.svg")).unwrap();
    fs::remove_file(out.join("summary.md")).unwrap();
    let r = run(&["report", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    assert_eq!(fs::read(out.join("summary.svg")).unwrap(), svg);
    assert_eq!(fs::read(out.join("summary.md")).unwrap(), md);
    assert_eq!(String::from_utf8_lossy(&r.stdout).matches("resonance").count(), 6);
}

#[test]
fn reduced_optimization_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ga.toml",
        "seed = 5\n[solver]\nmax_edge_len = 2.4\n[sweep]\nn_points = 5\n[optimizer]\npopulation = 6\ngenerations = 3\n",
    );
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        // Separate caches: the second run must not depend on the first.
        let r = run(&["optimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        let trace = fs::read_to_string(out.join("ga_trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + 3);
        let best: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        files.push((fs::read(out.join("best_design.toml")).unwrap(), trace));
        // The best-design file is itself a valid configuration.
        let r = run(&["simulate", "--config", out.join("best_design.toml").to_str().unwrap(), "--out", out.join("check").to_str().unwrap()]);
        assert_eq!(code(&r), 0);
    }
    assert_eq!(files[0], files[1]);
}
