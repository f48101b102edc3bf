use std::path::Path;
use std::process::{Command, Output};

use pcf_bsfwm::pcf::{DispersionModel, FibreGeometry};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcf-bsfwm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn embedded(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["config"].to_string()
    } else {
        text.lines()
            .find_map(|l| l.strip_prefix("# config: "))
            .expect("config header line")
            .to_string()
    }
}

#[test]
fn dispersion_reports_zdw_from_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = run(&["dispersion", "--pitch", "1.39", "--ratio", "0.55", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    let line = line.lines().find(|l| l.starts_with("zero-dispersion wavelength:")).expect("zdw line");
    let model = DispersionModel::new(FibreGeometry::new(1.39, 0.55).unwrap()).unwrap();
    let z = model.find_zdw((0.4, 2.0)).unwrap().lambda_um;
    assert_eq!(line, format!("zero-dispersion wavelength: {:.3} µm ({:.2} nm)", z, z * 1e3));

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# schema_version: 1\n"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "lambda_um,n_eff,beta_rad_per_m,beta1_s_per_m,beta2_s2_per_m,vg_m_per_s");
    assert!(data_rows(&text).len() > 100);
}

#[test]
fn out_of_domain_design_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.csv");
    let o = run(&["dispersion", "--pitch", "1.39", "--ratio", "0.95", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error:"));
    assert!(!out.exists());
}

#[test]
fn empty_grid_exits_2() {
    let o = run(&["symmetry-map", "--pitch-grid", "2.0:1.0:0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn seedless_is_rejected() {
    let o = run(&["dispersion", "--pitch", "1.39", "--ratio", "0.55", "--seedless"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["dispersion", "--pitchh", "1.39"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_pump_root_exits_3() {
    let o = run(&["compensate", "--pitch", "1.78", "--ratio", "0.437", "--target", "500", "--fractions", "0"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn single_cell_map_has_one_row() {
    let o = run(&["symmetry-map", "--pitch-grid", "1.39:1.39:0.02", "--ratio-grid", "0.55:0.55:0.005"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1.39,0.55,"));
}

#[test]
fn map_contours_one_group_per_level() {
    let o = run(&[
        "symmetry-map",
        "--pitch-grid",
        "1.3:1.5:0.05",
        "--ratio-grid",
        "0.5:0.6:0.025",
        "--levels",
        "0.8,0.9,1.0",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let contours = v["data"]["contours"].as_array().unwrap();
    assert_eq!(contours.len(), 3);
    assert_eq!(v["kind"], "symmetry-map");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn compensate_three_fractions() {
    let o = run(&[
        "compensate",
        "--pitch",
        "1.78",
        "--ratio",
        "0.437",
        "--target",
        "1550",
        "--fractions=-0.01,0,0.01",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    let centre: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(centre[3].parse::<f64>().unwrap(), 0.0);
    assert!(rows.iter().all(|r| r.ends_with(",ok")));
}

#[test]
fn phasematch_small_grid() {
    let o = run(&[
        "phasematch",
        "--pitch",
        "1.78",
        "--ratio",
        "0.437",
        "--pump",
        "auto",
        "--target",
        "1550",
        "--q-grid",
        "800:802:2",
        "--s-grid",
        "900:902:2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# schema_version: 1\n"));
    assert_eq!(data_rows(&text).len(), 4);
}

#[test]
fn auto_pump_is_resolved_in_embedded_config() {
    let o = run(&[
        "envelope", "--pitch", "1.78", "--ratio", "0.437", "--pump", "auto", "--target", "1550", "--s-grid",
        "700:720:10",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("fixed pump (auto): 637.3186 nm"));
    let text = stdout(&o);
    let cfg = text.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(cfg).unwrap();
    assert!(v["pump_nm"].is_number());
    assert_eq!(data_rows(&text).len(), 3);
}

#[test]
fn missing_target_is_a_config_error() {
    let o = run(&["envelope", "--pitch", "1.78", "--ratio", "0.437", "--pump", "auto"]);
    assert_eq!(code(&o), 2);
}

fn round_trip(ext: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join(format!("first.{ext}"));
    let mut a: Vec<&str> = args.to_vec();
    a.extend(["--out", first.to_str().unwrap()]);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, embedded(&first)).unwrap();
    let second = dir.path().join(format!("second.{ext}"));
    let o = run(&[args[0], "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn csv_reproduces_from_embedded_config() {
    round_trip(
        "csv",
        &["envelope", "--pitch", "1.78", "--ratio", "0.437", "--pump", "auto", "--target", "1550", "--s-grid", "700:760:5"],
    );
}

#[test]
fn json_reproduces_from_embedded_config() {
    round_trip(
        "json",
        &[
            "compensate",
            "--pitch",
            "1.78",
            "--ratio",
            "0.437",
            "--target",
            "1550",
            "--axis",
            "ratio",
            "--fractions",
            "0,0.005",
            "--format",
            "json",
        ],
    );
}

#[test]
fn flags_override_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "command = \"compensate\"\npitch_um = 1.78\nd_over_pitch = 0.437\ntarget_nm = 1550.0\nfractions = [0.0]\n",
    )
    .unwrap();
    let o = run(&["compensate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&stdout(&o)).len(), 1);

    let o = run(&["compensate", "--config", cfg.to_str().unwrap(), "--fractions", "0,0.001"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&stdout(&o)).len(), 2);

    let o = run(&["envelope", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "config for another command must be rejected");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "pitch = 1.78\n").unwrap();
    let o = run(&["dispersion", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_config_file_is_io_error() {
    let o = run(&["dispersion", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn csv_map_writes_contour_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let o = run(&[
        "symmetry-map",
        "--pitch-grid",
        "1.3:1.5:0.05",
        "--ratio-grid",
        "0.5:0.6:0.025",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("cells:"));
    let side = dir.path().join("map.contours.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert!(v.is_object() || v.is_array());
}
