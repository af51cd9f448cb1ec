use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use manifold_fpe::bayes::{predict, FilterState};
use manifold_fpe::config::ExperimentConfig;
use manifold_fpe::fpe::DensityGrid;
use manifold_fpe::geometry::Chart;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mfpe-cli-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn mfpe(cmd: &str, config: &Path, out: &Path, seed: Option<u64>) -> (i32, String) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mfpe"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out);
    if let Some(s) = seed {
        c.arg("--seed").arg(s.to_string());
    }
    let o = c.output().unwrap();
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    (o.status.code().unwrap(), text)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

fn read(out: &Path, name: &str) -> DensityGrid {
    DensityGrid::read_csv(&out.join(name), Chart::sphere()).unwrap()
}

fn small_check() -> Value {
    json!({"kind": "check", "check": {"points": 200}})
}

fn small_fpe(convention: &str, t_final: f64) -> Value {
    let drift = if convention == "stratonovich" {
        json!({"preset": "constant", "theta": 0.3, "phi": 0.2})
    } else {
        json!({"preset": "zero"})
    };
    json!({
        "kind": "fpe",
        "grid": {"n_theta": 16, "n_phi": 32},
        "sde": {"convention": convention, "drift": drift, "sigma_theta": 0.5, "sigma_phi": 0.5},
        "init": {"kind": "von_mises_fisher", "kappa": 4.0, "mean": [1.0, 0.0, 0.0]},
        "solver": {"t_final": t_final}
    })
}

fn small_filter(measurements: Value, oracle: bool) -> Value {
    json!({
        "kind": "filter",
        "seed": 3,
        "grid": {"n_theta": 24, "n_phi": 48},
        "sde": {"convention": "ito", "drift": {"preset": "zero"}, "sigma_theta": 0.1, "sigma_phi": 0.1},
        "init": {"kind": "von_mises_fisher", "kappa": 100.0, "mean": [1.0, 0.0, 0.0]},
        "solver": {"t_final": 0.4},
        "filter": {"measurements": measurements, "particles": 2000, "dt": 0.01, "oracle": oracle}
    })
}

#[test]
fn check_passes_and_writes_csv() {
    let d = scratch("check");
    let cfg = write_config(&d, "c.json", &small_check());
    let (code, text) = mfpe("check", &cfg, &d.join("out"), None);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(d.join("out/check.csv")).unwrap();
    assert!(csv.starts_with("name,chart,finest_error,tolerance,min_order,max_order,passed"));
    assert_eq!(manifest(&d.join("out"))["passed"], json!(true));
}

#[test]
fn check_with_zero_tolerance_exits_two() {
    let d = scratch("check-tol");
    let mut v = small_check();
    v["check"]["tolerance_scale"] = json!(0.0);
    let cfg = write_config(&d, "c.json", &v);
    let (code, text) = mfpe("check", &cfg, &d.join("out"), None);
    assert_eq!(code, 2, "{text}");
}

#[test]
fn invalid_configs_exit_three() {
    let d = scratch("invalid");
    let mut unknown = small_fpe("ito", 0.1);
    unknown["solver"]["bogus"] = json!(1);
    let mut missing = small_fpe("ito", 0.1);
    missing["init"] = json!({"kind": "file", "path": "nope.csv"});
    let bad_z = small_filter(json!([{"t": 0.1, "kappa": 5.0, "z": [1.0, 1.0, 0.0]}]), false);
    let mut wrong_kind = small_fpe("ito", 0.1);
    wrong_kind["kind"] = json!("mc");
    for (i, (cmd, v)) in [
        ("fpe", unknown),
        ("fpe", missing),
        ("filter", bad_z),
        ("fpe", wrong_kind),
    ]
    .into_iter()
    .enumerate()
    {
        let cfg = write_config(&d, &format!("c{i}.json"), &v);
        let (code, text) = mfpe(cmd, &cfg, &d.join(format!("out{i}")), None);
        assert_eq!(code, 3, "case {i}: {text}");
    }
    let (code, _) = mfpe("fpe", &d.join("absent.json"), &d.join("o"), None);
    assert_eq!(code, 3);
}

#[test]
fn degenerate_update_exits_four() {
    let d = scratch("degenerate");
    let mut v = small_filter(json!([{"t": 0.0, "kappa": 1e4, "z": [-1.0, 0.0, 0.0]}]), false);
    v["init"] = json!({"kind": "point", "theta": 1.55, "phi": 0.01});
    let cfg = write_config(&d, "c.json", &v);
    let (code, text) = mfpe("filter", &cfg, &d.join("out"), None);
    assert_eq!(code, 4, "{text}");
}

#[test]
fn zero_horizon_reproduces_input() {
    let d = scratch("zero");
    let (code, _) = mfpe(
        "fpe",
        &write_config(&d, "a.json", &small_fpe("ito", 0.3)),
        &d.join("a"),
        None,
    );
    assert_eq!(code, 0);
    let mut v = small_fpe("ito", 0.0);
    v["init"] = json!({"kind": "file", "path": "a/final.csv"});
    let (code, text) = mfpe("fpe", &write_config(&d, "b.json", &v), &d.join("b"), None);
    assert_eq!(code, 0, "{text}");
    assert_eq!(
        std::fs::read(d.join("a/final.csv")).unwrap(),
        std::fs::read(d.join("b/final.csv")).unwrap()
    );
}

#[test]
fn runs_are_deterministic() {
    let d = scratch("determinism");
    let mc = json!({
        "kind": "mc",
        "seed": 5,
        "grid": {"n_theta": 16, "n_phi": 32},
        "sde": {"convention": "stratonovich", "drift": {"preset": "brownian"}},
        "init": {"kind": "von_mises_fisher", "kappa": 10.0, "mean": [0.0, 0.0, 1.0]},
        "mc": {"particles": 3000, "dt": 0.01},
        "solver": {"t_final": 0.2}
    });
    let cfg = write_config(&d, "mc.json", &mc);
    let fpe = write_config(&d, "fpe.json", &small_fpe("stratonovich", 0.2));
    for (cmd, cfg, files) in [
        ("mc", &cfg, ["ensemble.csv", "density.csv"]),
        ("fpe", &fpe, ["final.csv", "final.csv"]),
    ] {
        assert_eq!(mfpe(cmd, cfg, &d.join(format!("{cmd}1")), None).0, 0);
        assert_eq!(mfpe(cmd, cfg, &d.join(format!("{cmd}2")), None).0, 0);
        for f in files {
            let a = std::fs::read(d.join(format!("{cmd}1")).join(f)).unwrap();
            let b = std::fs::read(d.join(format!("{cmd}2")).join(f)).unwrap();
            assert!(a == b, "{cmd}/{f} differs between runs");
        }
    }
    assert_eq!(mfpe("mc", &cfg, &d.join("mc3"), Some(6)).0, 0);
    assert_ne!(
        std::fs::read(d.join("mc1/ensemble.csv")).unwrap(),
        std::fs::read(d.join("mc3/ensemble.csv")).unwrap()
    );
}

#[test]
fn seed_override_is_recorded() {
    let d = scratch("seed");
    let cfg = write_config(&d, "c.json", &small_fpe("ito", 0.05));
    let (code, _) = mfpe("fpe", &cfg, &d.join("out"), Some(1234));
    assert_eq!(code, 0);
    let m = manifest(&d.join("out"));
    assert_eq!(m["config"]["seed"], json!(1234));
    assert_eq!(m["command"], json!("fpe"));
}

#[test]
fn conventions_agree_on_the_same_process() {
    let d = scratch("conventions");
    let mut strat = small_fpe("ito", 0.3);
    strat["grid"] = json!({"n_theta": 32, "n_phi": 64});
    strat["sde"] = json!({"convention": "stratonovich", "drift": {"preset": "brownian"}});
    let mut ito = strat.clone();
    ito["sde"] = json!({"convention": "ito", "drift": {"preset": "zero"}});
    assert_eq!(
        mfpe("fpe", &write_config(&d, "s.json", &strat), &d.join("s"), None).0,
        0
    );
    assert_eq!(mfpe("fpe", &write_config(&d, "i.json", &ito), &d.join("i"), None).0, 0);
    let (s, i) = (read(&d.join("s"), "final.csv"), read(&d.join("i"), "final.csv"));
    let l1 = s.l1_distance(&i).unwrap();
    assert!(l1 <= 5e-4, "L1 {l1:e}");
}

#[test]
fn empty_schedule_filter_matches_fpe() {
    let d = scratch("empty-schedule");
    let f = small_filter(json!([]), true);
    let mut p = f.clone();
    p["kind"] = json!("fpe");
    p.as_object_mut().unwrap().remove("filter");
    assert_eq!(mfpe("filter", &write_config(&d, "f.json", &f), &d.join("f"), None).0, 0);
    assert_eq!(mfpe("fpe", &write_config(&d, "p.json", &p), &d.join("p"), None).0, 0);
    let a = read(&d.join("f"), "posterior_000.csv");
    let b = read(&d.join("p"), "final.csv");
    assert!(a.linf_distance(&b).unwrap() < 1e-12);
}

#[test]
fn flat_likelihoods_equal_prediction_only() {
    let d = scratch("flat");
    let z = json!([1.0, 0.0, 0.0]);
    let v = small_filter(
        json!([{"t": 0.2, "kappa": 0.0, "z": z}, {"t": 0.4, "kappa": 0.0, "z": z}]),
        false,
    );
    assert_eq!(mfpe("filter", &write_config(&d, "a.json", &v), &d.join("a"), None).0, 0);
    let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
    let shape = cfg.shape().unwrap();
    let spec = cfg.spec().unwrap();
    let mut state = FilterState::new(cfg.init.density(shape, &d).unwrap());
    for _ in 0..2 {
        state = predict(&state, &spec, 0.2, &cfg.solver).unwrap();
    }
    let a = read(&d.join("a"), "posterior_001.csv");
    assert!(a.linf_distance(&state.density).unwrap() < 1e-12 * a.max_value());
}

#[test]
fn filter_against_particles_within_budget() {
    let d = scratch("filter");
    let v = small_filter(json!([{"t": 0.2, "kappa": 10.0, "z": [1.0, 0.0, 0.0]}]), true);
    let mut v = v;
    v["filter"]["particles"] = json!(20000);
    v["filter"]["budget_l1"] = json!(0.5);
    let (code, text) = mfpe("filter", &write_config(&d, "c.json", &v), &d.join("out"), None);
    assert_eq!(code, 0, "{text}");
    let table = std::fs::read_to_string(d.join("out/filter.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(d.join("out/oracle_000.csv").exists());
}
