//! End-to-end tests of the binary: exit codes, JSON/CSV shapes,
//! determinism, and round-trips through the documented file formats.

use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qwres() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qwres"))
}

fn sandbox(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qwres-cli-{test}-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("create test sandbox");
    dir
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_str(&stdout_str(out)).expect("stdout parses as JSON")
}

fn write_state(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).expect("write fixture");
    path
}

/// `gallery double-barrier -o` writes a walk whose solver resonances
/// reproduce the printed closed-form ones.
#[test]
fn gallery_walk_round_trips_through_the_solver() {
    let dir = sandbox("roundtrip");
    let walk = dir.join("walk.json");
    let out = qwres()
        .args(["gallery", "double-barrier", "--k", "3", "--r", "0.6"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));
    let truth = json_of(&out);
    let exact: Vec<(f64, f64)> = truth["resonances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
        .collect();

    let out = qwres().arg("resonances").arg(&walk).output().unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));
    let doc = json_of(&out);
    let rows = doc["resonances"].as_array().unwrap();
    assert_eq!(rows.len(), exact.len());
    for row in rows {
        let (re, im) = (row["re"].as_f64().unwrap(), row["im"].as_f64().unwrap());
        let nearest = exact
            .iter()
            .map(|(a, b)| ((re - a).powi(2) + (im - b).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-8, "solver root ({re},{im}) off by {nearest}");
        assert_eq!(row["mult"].as_u64(), Some(1));
    }
    assert_eq!(doc["summary"]["sum_mult"].as_u64(), Some(6));
    assert_eq!(doc["summary"]["budget"].as_u64(), Some(6));
}

/// Identical inputs give byte-identical outputs, on the plain solver
/// path and on the parallel sweep path alike.
#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = sandbox("determinism");
    let walk = dir.join("walk.json");
    qwres()
        .args(["gallery", "double-barrier", "--k", "2", "--r", "0.5"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();

    let a = qwres().arg("resonances").arg(&walk).output().unwrap();
    let b = qwres().arg("resonances").arg(&walk).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);

    let sweep = |threads: &str| {
        let mut cmd = qwres();
        cmd.arg("perturb")
            .arg(&walk)
            .args(["--theta-grid", "4", "--eps", "1e-3,1e-4"])
            .env("QWRES_THREADS", threads);
        cmd.output().unwrap()
    };
    let p1 = sweep("1");
    let p2 = sweep("2");
    assert!(p1.status.success() && p2.status.success());
    assert_eq!(p1.stdout, p2.stdout, "sweep output depends on threading");
}

/// A single-coin walk has no resonances: empty list, exit 0.
#[test]
fn single_coin_walk_yields_an_empty_list() {
    let dir = sandbox("single");
    let walk = write_state(&dir, "walk.json", r#"{"coins":[{"x":4,"rotation":0.5}]}"#);
    let out = qwres().arg("resonances").arg(&walk).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let doc = json_of(&out);
    assert_eq!(doc["resonances"].as_array().unwrap().len(), 0);
    assert_eq!(doc["summary"]["budget"].as_u64(), Some(0));
}

/// Malformed JSON exits 1 and points at the offending location.
#[test]
fn malformed_json_fails_with_a_location() {
    let dir = sandbox("badjson");
    let walk = write_state(&dir, "walk.json", r#"{"coins":[{"x":0,"#);
    let out = qwres().arg("resonances").arg(&walk).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("line") && err.contains("column"), "{err}");
}

/// A non-unitary coin exits 1 and cites the admissibility assumption.
#[test]
fn inadmissible_coin_cites_the_assumption() {
    let dir = sandbox("inadmissible");
    let walk = write_state(
        &dir,
        "walk.json",
        r#"{"coins":[{"x":0,"matrix":[[[1,0],[0,0]],[[0,0],[2,0]]]}]}"#,
    );
    let out = qwres().arg("resonances").arg(&walk).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("admissibility assumption"), "{err}");
}

/// The heatmap CSV is a rectangular `x,n,amp` grid over the final
/// window, starting from the unevolved state.
#[test]
fn simulate_emits_the_heatmap_grid() {
    let dir = sandbox("heatmap");
    let walk = dir.join("walk.json");
    qwres()
        .args(["gallery", "double-barrier", "--k", "5", "--r", "0.70710678"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let state = write_state(
        &dir,
        "state.json",
        r#"{"amplitudes":[{"x":1,"L":[0,0],"R":[1,0]}]}"#,
    );
    let heat = dir.join("heat.csv");
    let out = qwres()
        .arg("simulate")
        .arg(&walk)
        .arg(&state)
        .args(["-n", "8", "--emit-plotdata"])
        .arg(&heat)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));

    let final_state = json_of(&out);
    let sites = final_state["amplitudes"].as_array().unwrap().len();
    let csv = fs::read_to_string(&heat).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,n,amp"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), sites * 9, "one row per site and step");
    // The initial step has all mass at x = 1.
    let at = |x: i64, n: i64| {
        rows.iter()
            .find_map(|r| {
                let mut it = r.split(',');
                let rx: i64 = it.next()?.parse().ok()?;
                let rn: i64 = it.next()?.parse().ok()?;
                let amp: f64 = it.next()?.parse().ok()?;
                (rx == x && rn == n).then_some(amp)
            })
            .expect("grid row")
    };
    assert!((at(1, 0) - 1.0).abs() < 1e-12);
    assert_eq!(at(3, 0), 0.0);
}

/// The observe time series has the documented header and one row per
/// step; the summary partitions the mass at the final time.
#[test]
fn observe_emits_series_and_summary() {
    let dir = sandbox("observe");
    let walk = dir.join("walk.json");
    qwres()
        .args(["gallery", "double-barrier", "--k", "3", "--r", "0.6"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let state = write_state(
        &dir,
        "state.json",
        r#"{"amplitudes":[{"x":1,"L":[0,0],"R":[1,0]}]}"#,
    );
    let series = dir.join("series.csv");
    let out = qwres()
        .arg("observe")
        .arg(&walk)
        .arg(&state)
        .args(["--n-max", "20", "--J", "-1,4", "--emit-plotdata"])
        .arg(&series)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));

    let csv = fs::read_to_string(&series).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,survival,c_plus,c_minus,flat_norm"));
    assert_eq!(lines.count(), 21);

    let doc = json_of(&out);
    assert!(doc["survival_final"].as_f64().unwrap() <= 1.0);
    let wl = &doc["weak_limit"];
    let total = wl["c_plus_hat"].as_f64().unwrap()
        + wl["c_minus_hat"].as_f64().unwrap()
        + wl["flat_norm_sq"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-10, "weights sum to {total}");
    assert!(doc["decay"]["lambda0"].as_f64().unwrap() > 0.0);
    assert!(doc["tau"]["tau"].as_f64().unwrap() > 0.0);
}

/// `expand --verify` reconstructs the cutoff and matches direct
/// evolution, exiting 0.
#[test]
fn expand_verifies_against_direct_evolution() {
    let dir = sandbox("expand");
    let walk = dir.join("walk.json");
    qwres()
        .args(["gallery", "double-barrier", "--k", "3", "--r", "0.6"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let state = write_state(
        &dir,
        "state.json",
        r#"{"amplitudes":[{"x":1,"L":[0,0],"R":[1,0]}]}"#,
    );
    let out = qwres()
        .arg("expand")
        .arg(&walk)
        .arg(&state)
        .args(["--J", "-1,4", "--verify", "--predict", "15"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let doc = json_of(&out);
    assert!(doc["residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(doc["verification"]["passed"].as_bool(), Some(true));
    assert!(doc["prediction"]["state"]["amplitudes"].is_array());

    // J that misses the perturbation is a domain error.
    let out = qwres()
        .arg("expand")
        .arg(&walk)
        .arg(&state)
        .args(["--J", "1,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

/// `states` writes a state spec that feeds back into `simulate`; a
/// non-resonance is refused with exit 1.
#[test]
fn states_round_trip_into_simulate() {
    let dir = sandbox("states");
    let walk = dir.join("walk.json");
    let out = qwres()
        .args(["gallery", "double-barrier", "--k", "2", "--r", "0.5"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let truth = json_of(&out);
    let z = &truth["resonances"][0];
    let lambda = format!("{},{}", z[0].as_f64().unwrap(), z[1].as_f64().unwrap());

    let phi = dir.join("phi.json");
    let out = qwres()
        .arg("states")
        .arg(&walk)
        .args(["--lambda", &lambda, "--window", "-4,6"])
        .arg("-o")
        .arg(&phi)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));

    let out = qwres()
        .arg("simulate")
        .arg(&walk)
        .arg(&phi)
        .args(["-n", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));

    let out = qwres()
        .arg("states")
        .arg(&walk)
        .args(["--lambda", "0.9,0.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("not a resonance"));
}

/// Both triple-barrier parameter spellings agree byte for byte, and the
/// multiplicity-two condition is detected.
#[test]
fn triple_barrier_spellings_agree() {
    let args_a = [
        "gallery",
        "triple-barrier",
        "--r",
        "-1=0.75",
        "--r",
        "0=0.9230769230769231",
        "--r",
        "1=0.3333333333333333",
    ];
    let args_b = [
        "gallery",
        "triple-barrier",
        "--r-1",
        "0.75",
        "--r0",
        "0.9230769230769231",
        "--r1",
        "0.3333333333333333",
    ];
    let a = qwres().args(args_a).output().unwrap();
    let b = qwres().args(args_b).output().unwrap();
    assert!(a.status.success(), "{}", stderr_str(&a));
    assert!(b.status.success(), "{}", stderr_str(&b));
    assert_eq!(a.stdout, b.stdout);
    let doc = json_of(&a);
    assert_eq!(doc["multiplicity_two"].as_bool(), Some(true));
    assert!(doc["double_roots"].is_array());
    // Solver agrees: two double roots.
    let rows = doc["resonances"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["mult"].as_u64() == Some(2)));
}

/// The quick verification suite prints one verdict line per check and
/// exits 0.
#[test]
fn verify_quick_passes() {
    let out = qwres()
        .args(["verify", "--suite", "quick"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.starts_with("PASS")), "{text}");
}

/// The σ-root and cutoff-spectrum methods agree on a generic model.
#[test]
fn resonance_methods_cross_check() {
    let dir = sandbox("both");
    let walk = dir.join("walk.json");
    qwres()
        .args([
            "gallery",
            "triple-barrier",
            "--r-1",
            "0.4",
            "--r0",
            "0.7",
            "--r1",
            "0.55",
        ])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let out = qwres()
        .arg("resonances")
        .arg(&walk)
        .args(["--method", "both"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let doc = json_of(&out);
    assert!(doc["agreement"].as_f64().unwrap() < 1e-6);
}

/// `-o` writes atomically: the target appears, no temp files remain.
#[test]
fn output_files_are_written_atomically() {
    let dir = sandbox("atomic");
    let walk = dir.join("walk.json");
    qwres()
        .args(["gallery", "double-barrier", "--k", "1", "--r", "0.5"])
        .arg("-o")
        .arg(&walk)
        .output()
        .unwrap();
    let target = dir.join("res.json");
    let out = qwres()
        .arg("resonances")
        .arg(&walk)
        .arg("-o")
        .arg(&target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));
    assert!(out.stdout.is_empty(), "-o redirects away from stdout");
    assert!(target.exists());
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains(".tmp"))
        .collect();
    assert!(
        leftovers.is_empty(),
        "temp files left behind: {leftovers:?}"
    );
}

/// The walk JSON written by the tool re-reads to equal values: σ of the
/// original and of a rewrite round-trip coincide exactly.
#[test]
fn walk_json_round_trips_to_equal_values() {
    let dir = sandbox("walkjson");
    // Rotation shorthand on input...
    let walk = write_state(
        &dir,
        "walk.json",
        r#"{"coins":[{"x":0,"rotation":0.7},{"x":2,"matrix":[[[0,0.6],[0.8,0]],[[-0.8,0],[0,-0.6]]]}]}"#,
    );
    let a = qwres().arg("sigma").arg(&walk).output().unwrap();
    assert!(a.status.success(), "{}", stderr_str(&a));

    // ...expands to the canonical matrix form after one simulate pass.
    let state = write_state(
        &dir,
        "state.json",
        r#"{"amplitudes":[{"x":1,"L":[0.5,0],"R":[0,0.5]}]}"#,
    );
    let echoed = dir.join("echo.json");
    let out = qwres()
        .arg("simulate")
        .arg(&walk)
        .arg(&state)
        .args(["-n", "0"])
        .arg("-o")
        .arg(&echoed)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_str(&out));
    let b = qwres()
        .arg("simulate")
        .arg(&walk)
        .arg(&echoed)
        .args(["-n", "0"])
        .output()
        .unwrap();
    let direct = qwres()
        .arg("simulate")
        .arg(&walk)
        .arg(&state)
        .args(["-n", "0"])
        .output()
        .unwrap();
    // Echoing a state through the canonical writer is idempotent.
    assert_eq!(json_of(&b), json_of(&direct));
}
