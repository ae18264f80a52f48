use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critwave"))
}

#[test]
fn constants_json() {
    let out = bin().arg("constants").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["z0"].as_f64().unwrap() - 1.681792830507429).abs() < 1e-12);
    let s4 = 8.0 * std::f64::consts::PI.powi(2) / 3.0;
    assert!((v["sigma4"].as_f64().unwrap() - s4).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["profile", "--nu", "1", "--bogus"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("profile").output().unwrap().status.code(), Some(2));
    let out = bin().args(["profile", "--nu", "1.86", "--out", "/definitely/not/here/phi.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["radiation", "asymptotic", "--in", "/definitely/not/here.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn computation_failure_exit_1() {
    let out = bin().args(["profile", "--nu", "1.0", "--y-stop", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn profile_csv_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.csv");
    let out = bin().args(["profile", "--nu", "1.86", "--out"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("y,phi,dphi,H"));
    assert!(text.lines().count() > 50);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verify_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, t) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("t.csv"));
    let out = bin().args(["verify", "--tol", "1e-10", "--out"]).arg(&a).arg("--table").arg(&t).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().args(["verify", "--jobs", "2", "--out"]).arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let (ja, jb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["overall"], serde_json::Value::Bool(true));
    assert!(v["items"].as_array().unwrap().len() >= 12);
    let table = fs::read_to_string(&t).unwrap();
    assert!(table.starts_with("k,range,y_k,lambda_k,min_g,product,contribution\n"));
}

#[test]
fn verify_negative_control_exit_3() {
    let out = bin().args(["verify", "--nu0", "1.0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["overall"], serde_json::Value::Bool(false));
}

#[test]
fn radiation_round_trip_via_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let prof = dir.path().join("g.csv");
    let out = bin()
        .args(["radiation", "to-data", "--gspec", "bump:-3:1", "--rmin", "0.5", "--rmax", "6", "--dr", "0.01", "--out"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().args(["radiation", "from-data", "--ds", "0.5", "--in"]).arg(&data).arg("--out").arg(&prof).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&prof).unwrap();
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let s: f64 = rec[0].parse().unwrap();
        let g: f64 = rec[1].parse().unwrap();
        let x: f64 = s + 3.0;
        let want = if x.abs() < 1.0 { (1.0 - x * x).powi(4) } else { 0.0 };
        assert!((g - want).abs() < 1e-6, "s = {s}: {g} vs {want}");
        seen += 1;
    }
    assert!(seen > 10);
    let out = bin().args(["radiation", "asymptotic", "--in"]).arg(&prof).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["alpha1"].as_f64().unwrap() < 0.0);
}

#[test]
fn residues_of_ground_state_profile_spec() {
    let out = bin().args(["radiation", "residues", "--gspec", "ramp:-1:1", "--R", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["radius"].as_f64(), Some(2.0));
    assert_eq!(v["tau1"].as_f64(), Some(0.0));
}

#[test]
fn simulate_presets() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.csv");
    let diag = dir.path().join("diag.json");
    let out = bin()
        .args(["simulate", "--preset", "ground-state", "--rmin", "0.5", "--rmax", "5.5", "--dr", "0.05", "--T", "1", "--save-every", "10", "--out"])
        .arg(&snap)
        .arg("--diagnostics")
        .arg(&diag)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&snap).unwrap();
    assert_eq!(text.lines().next(), Some("t,r,u,u_t"));
    assert_eq!(text.lines().count(), 1 + 3 * 101);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&diag).unwrap()).unwrap();
    let e: Vec<f64> = v["energy"].as_array().unwrap().iter().map(|p| p["energy"].as_f64().unwrap()).collect();
    assert!((e[2] - e[0]).abs() < 1e-3 * e[0].abs());

    let out = bin()
        .args(["simulate", "--preset", "free-wave", "--gspec", "bump:-3:1", "--linear", "--rmin", "1", "--rmax", "5", "--dr", "0.05", "--T", "1", "--cfl", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin()
        .args(["simulate", "--preset", "self-similar", "--nu", "0.8", "--rmin", "1", "--rmax", "3", "--dr", "0.05", "--T", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["simulate", "--preset", "free-wave", "--rmin", "1", "--rmax", "3", "--dr", "0.05", "--T", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_blow_up_exit_1_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.csv");
    let out = bin()
        .args(["simulate", "--preset", "free-wave", "--gspec", "bump:-3:1:400", "--boundary", "outflow", "--rmin", "1", "--rmax", "8", "--dr", "0.02", "--T", "4", "--out"])
        .arg(&snap)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&snap).unwrap().lines().count() > 1);
}
