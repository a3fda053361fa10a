use std::fs;
use std::path::Path;

use polaron::cli::run_with_args;
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["polaron"];
    v.extend_from_slice(args);
    run_with_args(v)
}

fn scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_SWEEP: &str = "[truncation]\ncav_cutoff = 1\nmech_cutoff = 5\n\n[sweep]\naxis = \"omega_p\"\nstart = 99.4\nstop = 99.6\npoints = 5\n";

#[test]
fn manifest_echoes_the_main_text_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["spectrum", "--output", out.to_str().unwrap()]), 0);
    let m = manifest(&out);
    let p = &m["config"]["params"];
    let expect = [
        ("omega_m", 1.0),
        ("omega_c", 100.0),
        ("omega_a", 100.0),
        ("g_ac", 0.5),
        ("g_cm", 0.1),
        ("gamma_ac", 0.01),
        ("gamma_m", 1e-4),
        ("n_th", 3.45),
        ("f_p", 0.01),
        ("omega_p", 99.5),
        ("f_inc", 0.0),
    ];
    for (k, v) in expect {
        assert_eq!(p[k].as_f64(), Some(v), "{k}");
    }
    assert_eq!(m["derived"]["q_ac"].as_f64(), Some(1e4));
    assert_eq!(m["derived"]["q_m"].as_f64(), Some(1e4));
    assert_eq!(m["config"]["truncation"]["cav_cutoff"].as_u64(), Some(3));
    assert_eq!(m["config"]["truncation"]["mech_cutoff"].as_u64(), Some(30));
    assert_eq!(m["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn sweep_output_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL_SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--output",
            a.to_str().unwrap(),
            "--workers",
            "1"
        ]),
        0
    );
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            &cfg,
            "--output",
            b.to_str().unwrap(),
            "--workers",
            "3"
        ]),
        0
    );
    let sa = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(sa, fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    let text = String::from_utf8(sa).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("omega_p,detuning_from_omega_c,phonon_number"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "9.9400000000000006e1");
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn steady_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "[truncation]\ncav_cutoff = 1\nmech_cutoff = 6\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["steady", "--config", &cfg, "--output", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["steady", "--config", &cfg, "--output", b.to_str().unwrap()]), 0);
    let doc = fs::read(a.join("steady_state.json")).unwrap();
    assert_eq!(doc, fs::read(b.join("steady_state.json")).unwrap());
    let v: Value = serde_json::from_slice(&doc).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    assert!(v["observables"]["phonon_number"].as_f64().unwrap() > 0.0);
}

#[test]
fn truncation_check_reports_drifts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "[params]\nf_p = 0\ng_cm = 0\nn_th = 0.5\n[truncation]\ncav_cutoff = 1\nmech_cutoff = 12\n",
    );
    let out = tmp.path().join("o");
    assert_eq!(
        run(&[
            "steady",
            "--config",
            &cfg,
            "--output",
            out.to_str().unwrap(),
            "--check-truncation"
        ]),
        0
    );
    let v: Value = serde_json::from_slice(&fs::read(out.join("truncation_check.json")).unwrap()).unwrap();
    assert_eq!(v["doubled_truncation"]["mech_cutoff"].as_u64(), Some(24));
    let drift = v["max_relative_drift"].as_f64().unwrap();
    assert!(drift < 1e-2, "{drift}");
    assert!(v["scalars"]["phonon_number"]["relative_drift"].is_number());
}

#[test]
fn jsd_and_incoherent_sweep_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "[truncation]\ncav_cutoff = 1\nmech_cutoff = 6\n[jsd]\npoints = 201\n[incoherent_sweep]\nq_m = [10.0]\nq_ac = { values = [100.0, 1000.0] }\n",
    );
    let out = tmp.path().join("j");
    assert_eq!(run(&["jsd", "--config", &cfg, "--output", out.to_str().unwrap()]), 0);
    let t = fs::read_to_string(out.join("transitions.csv")).unwrap();
    assert!(t.starts_with("E_initial,E_final,omega,weight,delta_phonon,class"));
    assert_eq!(fs::read_to_string(out.join("jsd.csv")).unwrap().lines().count(), 202);

    let out = tmp.path().join("i");
    assert_eq!(
        run(&["incoherent-sweep", "--config", &cfg, "--output", out.to_str().unwrap()]),
        0
    );
    let t = fs::read_to_string(out.join("incoherent_sweep.csv")).unwrap();
    assert_eq!(t.lines().count(), 3);
    let m = manifest(&out);
    assert_eq!(m["config"]["params"]["n_th"].as_f64(), Some(0.0));
    assert_eq!(m["config"]["params"]["f_p"].as_f64(), Some(0.0));
}

#[test]
fn evolve_writes_trajectory_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "[truncation]\ncav_cutoff = 1\nmech_cutoff = 4\n[evolve]\nt_final = 200\nsamples = 20\ninitial = { kind = \"fock\", l = 2 }\n",
    );
    let out = tmp.path().join("e");
    assert_eq!(run(&["evolve", "--config", &cfg, "--output", out.to_str().unwrap()]), 0);
    let t = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(t.starts_with("time,photon_number,phonon_number,atom_excitation,g2_phonon,trace_residual"));
    assert_eq!(t.lines().count(), 22);
    let fit: Value = serde_json::from_slice(&fs::read(out.join("cooling_fit.json")).unwrap()).unwrap();
    assert!(fit.get("gamma_eff").is_some() || fit.get("error").is_some());
}

#[test]
fn wigner_writes_map_and_density() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(
        tmp.path(),
        "[params]\nn_th = 0\n[truncation]\ncav_cutoff = 1\nmech_cutoff = 5\n[wigner]\nx_points = 11\np_points = 11\n",
    );
    let out = tmp.path().join("w");
    assert_eq!(run(&["wigner", "--config", &cfg, "--output", out.to_str().unwrap()]), 0);
    assert_eq!(fs::read_to_string(out.join("wigner.csv")).unwrap().lines().count(), 122);
    assert_eq!(
        fs::read_to_string(out.join("mech_density.csv"))
            .unwrap()
            .lines()
            .count(),
        37
    );
    let v: Value = serde_json::from_slice(&fs::read(out.join("wigner.json")).unwrap()).unwrap();
    assert!(v["min_value"].is_number());
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = scenario(tmp.path(), "[params]\nq_ac = 1e4\ngamma_ac = 0.01\n");
    let out = tmp.path().join("x");
    assert_eq!(run(&["steady", "--config", &bad, "--output", out.to_str().unwrap()]), 2);
    assert!(!out.exists());
    assert_eq!(run(&["steady", "--config", "/nonexistent/scenario.toml"]), 2);
    assert_eq!(run(&["no-such-experiment"]), 2);
    let wrong = scenario(tmp.path(), "experiment = \"jsd\"\n");
    assert_eq!(run(&["steady", "--config", &wrong]), 2);
    assert_eq!(run(&["steady", "--workers", "0"]), 2);
}

#[test]
fn shipped_scenarios_resolve() {
    use polaron::cli::config::ScenarioInput;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let input = ScenarioInput::load(&path).unwrap();
        let experiment = input.experiment.expect("shipped scenarios name their experiment");
        input
            .resolve(experiment)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 7);
}
