use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antipode")).args(args).env_remove("ANTIPODE_THREADS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    let _ = std::fs::remove_file(&p);
    p
}

#[test]
fn critical_gap_of_two_sevenths() {
    let v = json(&run(&["angle", "gap", "2/7"]));
    assert_eq!(v["a"], "3/13");
    assert_eq!(v["b"], "15/26");
    assert_eq!(v["length"], "9/26");
}

#[test]
fn rho_inverse_of_one_third() {
    let v = json(&run(&["angle", "rho-inv", "1/3"]));
    assert_eq!(v["theta"], "2/7");
}

#[test]
fn rotation_number_of_one_fifth() {
    let v = json(&run(&["angle", "rho", "1/5"]));
    assert!(v.to_string().contains("1/4"), "{v}");
}

#[test]
fn classify_small_parameter() {
    let v = json(&run(&["classify", "--q", "0.1"]));
    assert_eq!(v["class"], "central");
}

#[test]
fn bad_input_fails() {
    assert!(!run(&["frobnicate"]).status.success());
    assert!(!run(&["angle", "gap", "two sevenths"]).status.success());
    assert!(!run(&["classify", "--q", "nonsense"]).status.success());
}

#[test]
fn selftest_subset_passes() {
    let out = run(&["selftest", "--only", "1,4,6"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
}

#[test]
fn julia_render_writes_image_and_sidecar() {
    let out = scratch("julia.ppm");
    let res = run(&["julia", "--q", "1-6i", "--width", "48", "--height", "48", "--extent", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let bytes = std::fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P6"));
    let sidecar = PathBuf::from(format!("{}.json", out.display()));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(sidecar).unwrap()).unwrap();
    assert!(meta.is_object());
}

#[test]
fn internal_ray_csv() {
    let out = scratch("ray.csv");
    let res = run(&["ray", "internal", "--q", "0.5i", "--theta", "0", "--depth", "10", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("k,re,im,potential"));
}

#[test]
fn real_parameter_side_rays_land_at_a_fixed_point() {
    let v = json(&run(&["ray", "internal", "--q", "0.5", "--theta", "0", "--side", "plus", "--depth", "20"]));
    assert_eq!(v["landed"], true);
    let z = &v["landing_point"];
    let (re, im) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
    assert!(re.abs() < 1e-9 && (im - 1.0).abs() < 1e-9, "{z}");
}
