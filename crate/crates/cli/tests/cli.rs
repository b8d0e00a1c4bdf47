use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_blaschke-div");

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("blaschke-div-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

const HALF_DIVISOR: &str = r#"{"entries":[{"re":0.5,"im":0.0,"mult":1}]}"#;

const SINGLE_VERTEX_HALF: &str = concat!(
    r#"{"scheme":{"vertices":[{"id":"v","sigma":"v","delta":2}]},"#,
    r#""factors":{"v":{"entries":[{"re":0.5,"im":0.0,"mult":1}]}}}"#
);

#[test]
fn psi_matches_the_degree_one_closed_form() {
    let dir = workdir("psi-forward");
    write_file(&dir, "d.json", HALF_DIVISOR);
    let out = run_in(&dir, &["psi", "--divisor", "d.json", "--out", "r.json"]);
    assert_ok(&out);

    let result = read_json(&dir.join("r.json"));
    let entry = &result["entries"][0];
    let expected = 2.0 - 3.0_f64.sqrt();
    assert!((entry["re"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!(entry["im"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(entry["mult"], 1);

    let audit = read_json(&dir.join("r.audit.json"));
    assert!(audit["round_trip_residual"].as_f64().unwrap() < 1e-8);

    let manifest = read_json(&dir.join("r.manifest.json"));
    assert_eq!(manifest["subcommand"], "psi");
    assert_eq!(manifest["outputs"][0], "r.json");
}

#[test]
fn psi_inverse_round_trips_the_image() {
    let dir = workdir("psi-inverse");
    write_file(&dir, "d.json", HALF_DIVISOR);
    assert_ok(&run_in(&dir, &["psi", "--divisor", "d.json", "--out", "image.json"]));
    assert_ok(&run_in(
        &dir,
        &["psi", "--divisor", "image.json", "--inverse", "--out", "back.json"],
    ));
    let back = read_json(&dir.join("back.json"));
    assert!((back["entries"][0]["re"].as_f64().unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn rerun_reproduces_outputs_byte_identically() {
    let dir = workdir("rerun");
    write_file(&dir, "d.json", HALF_DIVISOR);
    assert_ok(&run_in(&dir, &["psi", "--divisor", "d.json", "--out", "r.json"]));
    let files = ["r.json", "r.audit.json", "r.manifest.json"];
    let before: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.join(f)).unwrap()).collect();

    fs::remove_file(dir.join("r.json")).unwrap();
    fs::remove_file(dir.join("r.audit.json")).unwrap();
    assert_ok(&run_in(&dir, &["rerun", "r.manifest.json"]));

    for (f, old) in files.iter().zip(&before) {
        assert_eq!(&fs::read(dir.join(f)).unwrap(), old, "{f} changed under rerun");
    }
}

#[test]
fn malformed_divisor_json_is_a_validation_failure() {
    let dir = workdir("psi-malformed");
    write_file(&dir, "bad.json", r#"{"entries":[{"#);
    let out = run_in(&dir, &["psi", "--divisor", "bad.json", "--out", "r.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(!dir.join("r.json").exists());
}

#[test]
fn missing_required_flags_exit_2() {
    let dir = workdir("usage");
    let out = run_in(&dir, &["psi", "--out", "r.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn degenerate_rejects_an_escaped_point_at_one() {
    let dir = workdir("degenerate-one");
    write_file(
        &dir,
        "d.json",
        r#"{"entries":[{"re":1.0,"im":0.0,"mult":1},{"re":0.3,"im":0.0,"mult":1}]}"#,
    );
    let out = run_in(&dir, &["degenerate", "--target", "d.json", "--out", "d.csv"]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("hypothesis"), "stderr: {stderr}");
}

#[test]
fn degenerate_schedule_decays_and_converges() {
    let dir = workdir("degenerate-decay");
    write_file(&dir, "d.json", r#"{"entries":[{"re":0.0,"im":1.0,"mult":1}]}"#);
    let out = run_in(&dir, &["degenerate", "--target", "d.json", "--out", "d.csv"]);
    assert_ok(&out);

    let csv = fs::read_to_string(dir.join("d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,sup_deviation"));
    let sups: Vec<f64> = lines
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sups.len(), 4);
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "not decaying: {sups:?}");
    assert!(*sups.last().unwrap() < 1e-3);

    let audit = read_json(&dir.join("d.audit.json"));
    assert_eq!(audit["converged"], true);
    assert_eq!(audit["trending_down"], true);
}

#[test]
fn degenerate_interior_target_gives_a_zero_column() {
    let dir = workdir("degenerate-interior");
    write_file(&dir, "d.json", HALF_DIVISOR);
    assert_ok(&run_in(
        &dir,
        &["degenerate", "--target", "d.json", "--steps", "3", "--out", "d.csv"],
    ));
    let csv = fs::read_to_string(dir.join("d.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("0"));
    }
}

#[test]
fn degenerate_requires_exactly_one_target_source() {
    let dir = workdir("degenerate-modes");
    write_file(&dir, "d.json", HALF_DIVISOR);
    let out = run_in(&dir, &["degenerate", "--out", "d.csv"]);
    assert_eq!(exit_code(&out), 2);
}

const CANTOR_SPEC: &str = r#"{
  "region": {"type": "disk", "center": [0.5, 0.0], "radius": 0.55},
  "branches": [
    {"type": "affine", "a": [0.3333333333333333, 0.0], "b": [0.0, 0.0]},
    {"type": "affine", "a": [0.3333333333333333, 0.0], "b": [0.6666666666666666, 0.0]}
  ],
  "depth": 12
}"#;

#[test]
fn dim_matches_the_cantor_oracle() {
    let dir = workdir("dim-cantor");
    write_file(&dir, "spec.json", CANTOR_SPEC);
    let out = run_in(&dir, &["dim", "--system", "spec.json", "--out", "report.json"]);
    assert_ok(&out);
    let report = read_json(&dir.join("report.json"));
    let dimension = report["dimension"].as_f64().unwrap();
    assert!((dimension - 2.0_f64.ln() / 3.0_f64.ln()).abs() < 1e-3);
    assert!(report["certification"]["containment_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn dim_depth_beyond_the_word_budget_exits_4() {
    let dir = workdir("dim-budget");
    write_file(&dir, "spec.json", CANTOR_SPEC);
    let out = run_in(
        &dir,
        &["dim", "--system", "spec.json", "--depth", "25", "--out", "report.json"],
    );
    assert_eq!(exit_code(&out), 4);
}

#[test]
fn dim_requires_exactly_one_mode() {
    let dir = workdir("dim-modes");
    write_file(&dir, "spec.json", CANTOR_SPEC);
    let both = run_in(
        &dir,
        &["dim", "--system", "spec.json", "--julia", "z^2-0.1", "--out", "r.json"],
    );
    assert_eq!(exit_code(&both), 2);
    let neither = run_in(&dir, &["dim", "--out", "r.json"]);
    assert_eq!(exit_code(&neither), 2);
}

#[test]
fn external_ray_of_the_chebyshev_map_lands_at_two() {
    let dir = workdir("ray-external");
    let out = run_in(
        &dir,
        &["ray", "--poly", "z^2-2", "--angle", "0/1", "--g-min", "1e-9", "--out", "ray.csv"],
    );
    assert_ok(&out);
    let csv = fs::read_to_string(dir.join("ray.csv")).unwrap();
    assert!(csv.starts_with("potential,re,im\n"));
    let audit = read_json(&dir.join("ray.audit.json"));
    let landing = audit["landing"].as_array().unwrap();
    assert!((landing[0].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(landing[1].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn internal_ray_of_a_monomial_product_is_radial() {
    let dir = workdir("ray-internal");
    write_file(
        &dir,
        "sd.json",
        concat!(
            r#"{"scheme":{"vertices":[{"id":"v","sigma":"v","delta":2}]},"#,
            r#""factors":{"v":{"entries":[{"re":0.0,"im":0.0,"mult":1}]}}}"#
        ),
    );
    let out = run_in(
        &dir,
        &[
            "ray",
            "--divisor",
            "sd.json",
            "--vertex",
            "v",
            "--boundary-point",
            "1,0",
            "--out",
            "ray.csv",
        ],
    );
    assert_ok(&out);
    let csv = fs::read_to_string(dir.join("ray.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let mut cells = line.split(',');
        let re: f64 = cells.nth(1).unwrap().parse().unwrap();
        let im: f64 = cells.next().unwrap().parse().unwrap();
        assert!(re > 0.0);
        assert!(im.abs() < 1e-10, "sample off the radius: {line}");
    }
}

#[test]
fn fatou_moebius_chart_is_machine_exact() {
    let dir = workdir("fatou-moebius");
    assert_ok(&run_in(&dir, &["fatou", "--map", "moebius", "--out", "f.json"]));
    let report = read_json(&dir.join("f.json"));
    assert_eq!(report["chart"]["kind"], "attracting");
    assert!(report["chart"]["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn fatou_return_check_matches_the_multiplier_law() {
    let dir = workdir("fatou-return");
    let lambda = {
        let alpha = 1.0 / 160.0;
        let (im, re) = (std::f64::consts::TAU * alpha).sin_cos();
        format!("{re}+{im}i")
    };
    let out = run_in(
        &dir,
        &[
            "fatou",
            "--coeffs",
            &format!("0;{lambda};1"),
            "--alpha",
            "0.00625,0",
            "--return-check",
            "--out",
            "f.json",
        ],
    );
    assert_ok(&out);
    let check = &read_json(&dir.join("f.json"))["return_multiplier"];
    assert_eq!(check["passed"], true);
    assert!((check["modulus_ratio"].as_f64().unwrap() - 1.0).abs() < 0.05);
    assert!(check["arg_offset_turns"].as_f64().unwrap() < 0.05);
}

#[test]
fn fatou_return_check_requires_alpha() {
    let dir = workdir("fatou-return-alpha");
    let out = run_in(
        &dir,
        &["fatou", "--map", "moebius", "--return-check", "--out", "f.json"],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn raster_output_is_deterministic_and_shaped_like_a_disk() {
    let dir = workdir("raster");
    let args = |out: &str| {
        [
            "raster", "--poly", "z^2", "--width", "64", "--height", "64", "--budget", "64",
            "--out",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([out.to_string()])
        .collect::<Vec<_>>()
    };
    let first = args("a.pgm");
    let second = args("b.pgm");
    assert_ok(&run_in(&dir, &first.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_ok(&run_in(&dir, &second.iter().map(String::as_str).collect::<Vec<_>>()));
    let a = fs::read(dir.join("a.pgm")).unwrap();
    let b = fs::read(dir.join("b.pgm")).unwrap();
    assert_eq!(a, b);

    assert!(a.starts_with(b"P5\n64 64\n255\n"));
    let pixels = &a[a.len() - 64 * 64..];
    assert_eq!(pixels[32 * 64 + 32], 0, "center of the disk must be interior");
    assert!(pixels[0] > 0, "corner must escape");
}

#[test]
fn raster_with_zero_width_exits_2() {
    let dir = workdir("raster-zero");
    let out = run_in(
        &dir,
        &["raster", "--poly", "z^2", "--width", "0", "--out", "z.pgm"],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn scheme_info_reports_the_marking_count() {
    let dir = workdir("scheme-info");
    write_file(
        &dir,
        "scheme.json",
        r#"{"vertices":[{"id":"u","sigma":"v","delta":3},{"id":"v","sigma":"v","delta":2}]}"#,
    );
    let out = run_in(&dir, &["scheme-info", "--scheme", "scheme.json", "--out", "info.json"]);
    assert_ok(&out);
    let info = read_json(&dir.join("info.json"));
    assert_eq!(info["markings"], 3);
    assert_eq!(info["vertices"], 2);
    assert_eq!(info["cycles"][0][0], "v");
}

#[test]
fn stretch_of_an_interior_divisor_is_the_identity() {
    let dir = workdir("stretch-identity");
    write_file(
        &dir,
        "sd.json",
        concat!(
            r#"{"scheme":{"vertices":[{"id":"v","sigma":"v","delta":2}]},"#,
            r#""factors":{"v":{"entries":[{"re":0.3,"im":0.0,"mult":1}]}}}"#
        ),
    );
    let out = run_in(&dir, &["stretch", "--divisor", "sd.json", "--out", "st.json"]);
    assert_ok(&out);
    let audit = read_json(&dir.join("st.audit.json"));
    assert_eq!(audit["records"].as_array().unwrap().len(), 0);
    let stretched = read_json(&dir.join("st.json"));
    let entry = &stretched["factors"]["v"]["entries"][0];
    assert!((entry["re"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn track_keeps_the_fixed_point_of_the_doubling_product() {
    let dir = workdir("track");
    write_file(
        &dir,
        "base.json",
        concat!(
            r#"{"scheme":{"vertices":[{"id":"v","sigma":"v","delta":2}]},"#,
            r#""factors":{"v":{"entries":[{"re":0.0,"im":0.0,"mult":1}]}}}"#
        ),
    );
    write_file(
        &dir,
        "pert.json",
        concat!(
            r#"{"scheme":{"vertices":[{"id":"v","sigma":"v","delta":2}]},"#,
            r#""factors":{"v":{"entries":[{"re":0.1,"im":0.05,"mult":1}]}}}"#
        ),
    );
    let out = run_in(
        &dir,
        &[
            "track", "--base", "base.json", "--perturbed", "pert.json", "--vertex", "v",
            "--point", "1,0", "--out", "t.json",
        ],
    );
    assert_ok(&out);
    let tracked = read_json(&dir.join("t.json"));
    assert!((tracked["tracked"][0].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(tracked["tracked"][1].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn motion_follows_the_quadratic_fixed_point() {
    let dir = workdir("motion");
    let out = run_in(
        &dir,
        &[
            "motion", "--base", "z^2", "--target", "z^2-0.05", "--points", "1,0", "--out",
            "m.json",
        ],
    );
    assert_ok(&out);
    let moved = read_json(&dir.join("m.json"));
    let expected = (1.0 + 1.2_f64.sqrt()) / 2.0;
    assert!((moved["points"][0][0].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn rerun_of_a_missing_manifest_exits_2() {
    let dir = workdir("rerun-missing");
    let out = run_in(&dir, &["rerun", "absent.manifest.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn help_enumerates_every_subcommand() {
    let dir = workdir("help");
    let out = run_in(&dir, &["--help"]);
    assert_ok(&out);
    let help = String::from_utf8_lossy(&out.stdout);
    for name in [
        "psi",
        "degenerate",
        "dim",
        "ray",
        "fatou",
        "raster",
        "scheme-info",
        "stretch",
        "track",
        "motion",
        "rerun",
    ] {
        assert!(help.contains(name), "--help is missing {name}");
    }
}
