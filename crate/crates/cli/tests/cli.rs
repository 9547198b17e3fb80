use std::path::Path;
use std::process::{Command, Output};

fn nvspin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvspin")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|s| s.trim_matches('"').to_string()).collect())
        .collect()
}

#[test]
fn csv_starts_with_provenance_header() {
    let text = stdout(&nvspin(&["levels"]));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# nvspin levels config_sha256="));
    assert_eq!(lines.next().unwrap(), "index,energy_mhz,label");
    assert_eq!(rows(&text).len(), 6);
}

#[test]
fn zero_couplings_give_bare_zeeman_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bare.toml");
    std::fs::write(
        &cfg,
        "[[system.nuclei]]\nspecies = \"c13\"\na_par_mhz = 0.0\na_perp_mhz = 0.0\na_ani_mhz = 0.0\n",
    )
    .unwrap();
    let text = stdout(&nvspin(&["levels", "--config", cfg.to_str().unwrap()]));
    let e: Vec<f64> = rows(&text).iter().map(|r| r[1].parse().unwrap()).collect();
    let larmor = 1.07e-3 * 486.8;
    assert!((e[1] - e[0] - larmor).abs() < 1e-9);
    let zeeman = 2.8025 * 486.8;
    assert!((e[2] - (2870.0 - zeeman) + larmor / 2.0).abs() < 1e-9, "{}", e[2]);
}

#[test]
fn pairs_reports_every_family_combination() {
    let text = stdout(&nvspin(&["pairs"]));
    let r = rows(&text);
    assert_eq!(r.len(), 10);
    let aa: f64 = r.iter().find(|r| r[0] == "AA").unwrap()[1].parse().unwrap();
    assert!((aa - 359.2).abs() < 10.0, "{aa}");
}

#[test]
fn json_output_carries_records() {
    let text = stdout(&nvspin(&["stats", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "stats");
    let records = v["records"].as_array().unwrap();
    let k1 = records.iter().find(|r| r["key"] == "k=1").unwrap();
    assert!((k1["value"].as_f64().unwrap() - 0.153).abs() < 0.003);
}

#[test]
fn overrides_change_the_digest() {
    let a = stdout(&nvspin(&["extract"]));
    let b = stdout(&nvspin(&["extract", "--set", "field.bz_gauss=500"]));
    assert_ne!(a.lines().next(), b.lines().next());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = nvspin(&["spectrum", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn side_tables_are_written_where_asked() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.csv");
    let set = format!("ramsey.fit_path={:?}", fit.to_str().unwrap());
    stdout(&nvspin(&["ramsey", "--set", &set]));
    let text = std::fs::read_to_string(&fit).unwrap();
    assert!(text.starts_with("# nvspin ramsey"));
    assert!(text.contains("t2_us"));
}

#[test]
fn unknown_keys_exit_with_config_code() {
    let out = nvspin(&["levels", "--set", "field.bz=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("nvspin:"));
}

#[test]
fn invalid_physics_exits_with_config_code() {
    let out = nvspin(&["stats", "--set", "stats.p=1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let missing = Path::new("/nonexistent/nvspin.toml");
    let out = nvspin(&["levels", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
