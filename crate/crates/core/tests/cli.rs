use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_menger-surf");

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("MENGER_SEED").env_remove("MENGER_THREADS").output().unwrap()
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn validate(name: &str, doc: &Value) {
    let text = std::fs::read_to_string(schema_dir().join(format!("{name}.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

/// One small invocation per subcommand.
fn cases() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("integrand", vec!["--points", "0,0,0;1,0,0;0,1,0;0,0,1", "--p", "9"]),
        ("energy", vec!["--analytic", "torus", "--p", "9", "--samples", "5000"]),
        ("local-energy", vec!["--analytic", "sphere", "--center", "0,0,1", "--ball-radius", "0.5", "--p", "9", "--samples", "5000"]),
        ("scaling", vec!["--p", "10", "--radii", "1,2", "--samples", "5000"]),
        ("diverge", vec!["--alpha", "3", "--p", "8", "--nmax", "3", "--samples", "5000"]),
        ("density", vec!["--analytic", "sphere", "--center", "0,0,1", "--ball-radius", "0.5", "--depth", "5"]),
        ("beta", vec!["--analytic", "sphere", "--center", "0,0,1", "--radii", "0.4,0.2", "--grid-level", "1"]),
        ("oscillation", vec!["--analytic", "torus", "--center", "3,0,0", "--pairs", "300"]),
        ("goodtetra", vec!["--shape", "icosphere", "--subdiv", "3", "--center", "0,0,1", "--rays", "512"]),
        ("minimize", vec!["--shape", "icosahedron", "--p", "9", "--iters", "50"]),
    ]
}

fn with(name: &str, args: &[&str], extra: &[&str]) -> Vec<String> {
    std::iter::once(name).chain(args.iter().copied()).chain(extra.iter().copied()).map(String::from).collect()
}

#[test]
fn every_subcommand_matches_its_schema() {
    for (name, args) in cases() {
        let argv = with(name, &args, &["--seed", "3"]);
        let doc = json_of(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        validate(name, &doc);
        assert_eq!(doc["seed"], 3);
    }
}

#[test]
fn csv_has_a_fixed_header() {
    let headers = [
        ("integrand", "value,powered,diameter"),
        ("energy", "value,std_error,n_samples,seed,p"),
        ("local-energy", "value,std_error,n_samples,seed,p"),
        ("scaling", "radius,value,std_error,normalized"),
        ("diverge", "n,r_n,patch_integral,std_error,min_dist_ratio"),
        ("density", "radius,patch_area,quotient,passes_theorem31,error_bound"),
        ("beta", "radius,beta,normal_x,normal_y,normal_z"),
        ("oscillation", "d,max_oscillation,pairs"),
        ("goodtetra", "stopping_distance,case_label,eta_achieved,iterations,projection_fraction"),
        ("minimize", "iteration,objective,constraint_value,accepted"),
    ];
    for ((name, args), (hname, header)) in cases().into_iter().zip(headers) {
        assert_eq!(name, hname);
        let argv = with(name, &args, &["--format", "csv"]);
        let out = run(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        let width = header.split(',').count();
        assert!(lines.all(|l| l.split(',').count() == width), "{name}");
    }
}

#[test]
fn csv_floats_carry_17_significant_digits() {
    let out = run(&["scaling", "--p", "8", "--radii", "1", "--samples", "2000", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = value.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{value}");
}

#[test]
fn circumsphere_sphere_example() {
    let doc = json_of(&[
        "energy", "--analytic", "sphere", "--radius", "1", "--integrand", r#"{"kind":"circumsphere"}"#, "--p", "4",
        "--samples", "100000", "--seed", "7",
    ]);
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v - 24936.727304).abs() < 1e-3, "{v}");
    assert!(doc["result"]["std_error"].as_f64().unwrap() < 1e-9 * v);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["energy", "--analytic", "sphere", "--p", "9", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["energy", "--p", "9"]).status.code(), Some(2));
    assert_eq!(run(&["energy", "--analytic", "sphere", "--shape", "cube", "--p", "9"]).status.code(), Some(2));
    let missing = run(&["energy", "--mesh", "/definitely/not/here.obj", "--p", "9"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
    // too few samples is an infeasible parameter, found at run time
    assert_eq!(run(&["energy", "--analytic", "sphere", "--p", "9", "--samples", "10"]).status.code(), Some(1));
    assert_eq!(run(&["goodtetra", "--analytic", "saddle", "--center", "0,0,0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn environment_seed_yields_to_flag() {
    let base = ["energy", "--analytic", "torus", "--p", "9", "--samples", "3000", "--format", "csv"];
    let env_run = |seed: &str, extra: &[&str]| {
        let out = Command::new(BIN).args(base).args(extra).env("MENGER_SEED", seed).output().unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let flag = String::from_utf8(run(&[&base[..], &["--seed", "11"]].concat()).stdout).unwrap();
    assert_eq!(env_run("11", &[]), flag);
    assert_eq!(env_run("12", &["--seed", "11"]), flag);
    assert_ne!(env_run("12", &[]), flag);
}

#[test]
fn environment_threads_are_recorded() {
    let out = Command::new(BIN)
        .args(["scaling", "--p", "8", "--radii", "1", "--samples", "2000"])
        .env("MENGER_THREADS", "3")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["run"]["threads"], 3);
}

#[test]
fn minimize_writes_audit_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let audit = dir.path().join("audit.csv");
    let mesh = dir.path().join("final.obj");
    let doc = json_of(&[
        "minimize", "--shape", "icosahedron", "--p", "9", "--iters", "30",
        "--audit", audit.to_str().unwrap(), "--mesh-out", mesh.to_str().unwrap(),
    ]);
    let audit = std::fs::read_to_string(audit).unwrap();
    assert_eq!(audit.lines().next(), Some("iteration,objective,constraint_value,accepted"));
    assert_eq!(audit.lines().count(), 31);
    let mesh = std::fs::read_to_string(mesh).unwrap();
    assert_eq!(mesh.lines().filter(|l| l.starts_with("v ")).count(), 12);
    assert_eq!(doc["result"]["vertices"], 12);
}

#[test]
fn output_file_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["scaling", "--p", "8", "--radii", "1", "--samples", "2000", "--output", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    validate("scaling", &doc);
}

#[test]
fn mesh_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ico.off");
    let m = menger_surf::surface::shapes::icosphere(2, 1.0);
    std::fs::write(&path, menger_surf::surface::io::to_off(&m)).unwrap();
    let doc = json_of(&["density", "--mesh", path.to_str().unwrap(), "--center", "0,0,1", "--ball-radius", "0.5"]);
    let q = doc["result"]["quotient"].as_f64().unwrap();
    assert!((q / std::f64::consts::PI - 1.0).abs() < 0.05, "{q}");
    let renamed = dir.path().join("ico.mesh");
    std::fs::rename(&path, &renamed).unwrap();
    let p = renamed.to_str().unwrap();
    assert_eq!(run(&["density", "--mesh", p, "--center", "0,0,1", "--ball-radius", "0.5"]).status.code(), Some(2));
    let doc = json_of(&["density", "--mesh", p, "--mesh-format", "off", "--center", "0,0,1", "--ball-radius", "0.5"]);
    assert_eq!(doc["result"]["quotient"].as_f64().unwrap(), q);
}
