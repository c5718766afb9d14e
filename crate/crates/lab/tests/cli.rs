use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn corpus_list_names_every_entry() {
    let o = lab(&["corpus", "list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), lkcurv_lab::corpus::ids().len());
    assert!(text.lines().any(|l| l.starts_with("whitney-cusp\t")));
}

#[test]
fn unknown_format_is_a_usage_error() {
    let o = lab(&["curvature", "--set", "disc", "--point", "0,0", "--k", "1", "--format", "xml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_entry_and_bad_point_are_usage_errors() {
    assert_eq!(code(&lab(&["density", "--set", "no-such-set", "--point", "0,0"])), 2);
    assert_eq!(code(&lab(&["density", "--set", "disc", "--point", "0,zero"])), 2);
    assert_eq!(code(&lab(&["density", "--set", "disc", "--point", "5,5", "--samples", "100"])), 2);
}

#[test]
fn tangent_sphere_is_a_precondition_error() {
    // the rim of the half disc touches the sphere of radius 2/√2
    let o = lab(&["retract", "--set", "half-disc", "--r", "0.3", "--r-prime", "1", "--r0", "1.6"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("transverse"));
}

#[test]
fn retract_on_two_rays_passes() {
    let o = lab(&["retract", "--set", "star-2", "--r", "0.5", "--r-prime", "1", "--starts", "10", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("trajectory,s,x0,x1,stratum,rho"));
}

#[test]
fn outputs_are_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = lab(&[
            "curvature", "--set", "half-line", "--point", "0,0", "--k", "1", "--samples", "10000", "--seed", "7", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.json");
    let b = run("b.json");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 3, "planes": 20, "fibers": 20, "radii": [0.4, 0.2, 0.1, 0.05]}"#).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["curvature", "--set", "circle", "--point", "1,0", "--k", "1", "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = lab(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let base = run(&[]);
    assert_eq!(base["radii"], serde_json::json!([0.4, 0.2, 0.1, 0.05]));
    let other = run(&["--radii", "0.3,0.15,0.075,0.0375"]);
    assert_eq!(other["radii"][0], 0.3);
    assert_ne!(run(&["--seed", "4"]), base);
}

#[test]
fn sweep_csv_has_the_documented_header() {
    let o = lab(&[
        "sweep", "--set", "half-space-stack", "--points", "5", "--samples", "400", "--radii", "0.2,0.1,0.05,0.025", "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,k,value,stderr"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn linear_pair_regularity_matches_its_annotation() {
    let o = lab(&["regularity", "--set", "half-plane-pair", "--pair", "half-plane,axis", "--at", "0,0,0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["whitney_b"], "pass");
    assert_eq!(v["matches"], true);
}
