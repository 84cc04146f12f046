use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn cbnsafe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbnsafe")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn probability(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn validate_bundled_files() {
    assert_eq!(code(&cbnsafe(&["validate", &model("perception.cbn.json")])), 0);
    assert_eq!(code(&cbnsafe(&["validate", &model("perception.ft.json"), "--fault-tree"])), 0);
}

#[test]
fn validate_reports_bad_row_sum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(
        &path,
        r#"{"schema": 1,
            "variables": [{"name": "Rain", "states": ["yes", "no"]}],
            "cpts": [{"variable": "Rain", "parents": [], "rows": [[0.3, 0.6]]}]}"#,
    )
    .unwrap();
    let out = cbnsafe(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("Rain"), "{}", stdout(&out));
}

#[test]
fn validate_unreadable_file() {
    let out = cbnsafe(&["validate", "/nonexistent/model.json"]);
    assert_ne!(code(&out), 0);
    assert!(!out.stderr.is_empty());
}

#[test]
fn query_intervention_on_confounded_model() {
    let out = cbnsafe(&["query", &model("confounding.cbn.json"), "-t", "Perception", "--do", "Luminance=high"]);
    assert_eq!(code(&out), 0);
    assert!((probability(&stdout(&out), "Perception=FN") - 0.0585).abs() < 1e-9);
    let out = cbnsafe(&["query", &model("confounding.cbn.json"), "-t", "Perception", "-e", "Luminance=high"]);
    assert!((probability(&stdout(&out), "Perception=FN") - 0.047625).abs() < 1e-9);
}

#[test]
fn query_fusion_given_both_sensors_detect() {
    let out = cbnsafe(&["query", &model("perception.cbn.json"), "-t", "Fusion", "-e", "Sen1=TP", "-e", "Sen2=TP"]);
    assert_eq!(code(&out), 0);
    assert_eq!(probability(&stdout(&out), "Fusion=FN"), 0.0);
}

#[test]
fn query_do_on_every_variable_gives_point_distribution() {
    let chain = model("confounding_measure_causal.cbn.json");
    let out = cbnsafe(&[
        "query",
        &chain,
        "-t",
        "Brightness",
        "--do",
        "Weather=rain",
        "--do",
        "Luminance=low",
        "--do",
        "Brightness=high",
        "--do",
        "Perception=TP",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(probability(&text, "Brightness=high"), 1.0);
    assert_eq!(probability(&text, "Brightness=low"), 0.0);
}

#[test]
fn query_do_on_parent_chain() {
    let chain = model("confounding_measure_causal.cbn.json");
    let out = cbnsafe(&["query", &chain, "-t", "Brightness", "--do", "Luminance=medium", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["probabilities"]["medium"], 1.0);
}

#[test]
fn query_path_specific() {
    let out = cbnsafe(&[
        "query",
        &model("perception.cbn.json"),
        "-t",
        "Fusion",
        "--paths",
        "TrafficDensity->Sen2->Fusion",
        "--active",
        "high",
        "--reference",
        "low",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(probability(&stdout(&out), "Fusion=FN") > 0.0);
}

#[test]
fn malformed_assignment_is_usage_error() {
    let out = cbnsafe(&["query", &model("perception.cbn.json"), "-t", "Fusion", "-e", "Sen1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn metrics_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let config = model("perception-analysis.json");
    for path in [&a, &b] {
        let out = cbnsafe(&["metrics", &config, "-o", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    let rce = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["metric"] == "RCE" && e["variable"] == "TrafficDensity" && e["subject"] == "high")
        .unwrap();
    assert!((rce["value"].as_f64().unwrap() - 9.64).abs() < 0.02);
}

#[test]
fn metrics_csv_header() {
    let out = cbnsafe(&["metrics", &model("perception-analysis.json"), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout(&out).lines().next().unwrap(),
        "metric,variable,subject,value,numerator,denominator"
    );
}

#[test]
fn metrics_rejects_unknown_reference_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(models().join("perception-analysis.json"))
        .unwrap()
        .replace("\"Occlusion\": \"none\"", "\"Occlusion\": \"total\"")
        .replace("perception.cbn.json", &model("perception.cbn.json"));
    let config = dir.path().join("config.json");
    fs::write(&config, text).unwrap();
    let report = dir.path().join("report.json");
    let out = cbnsafe(&["metrics", config.to_str().unwrap(), "-o", report.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!report.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("total"));
}

#[test]
fn tornado_formats() {
    let config = model("perception-analysis.json");
    let csv = cbnsafe(&["tornado", &config, "--format", "csv"]);
    assert_eq!(code(&csv), 0);
    let text = stdout(&csv);
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("variable,state,conditional,interventional,baseline"));
    let svg = cbnsafe(&["tornado", &config, "--format", "svg"]);
    assert!(stdout(&svg).starts_with("<svg"));
}

#[test]
fn pairwise_and_paths() {
    let config = model("perception-analysis.json");
    let out = cbnsafe(&["pairwise", &config, "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("RCE2,Occlusion&TrafficDensity,largely&high"));
    let out = cbnsafe(&["paths", &config]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["path_sets"].as_array().unwrap().len(), 3);
    assert!(v["path_sets"].as_array().unwrap().iter().all(|p| p["identifiable"] == true));
}

#[test]
fn fault_tree_commands() {
    let tree = model("perception.ft.json");
    let out = cbnsafe(&["ft", "eval", &tree]);
    assert!((probability(&stdout(&out), "P(FusionFN)") - 1.176e-4).abs() < 1e-12);
    let out = cbnsafe(&["ft", "cutsets", &tree]);
    assert_eq!(stdout(&out).lines().count(), 2);
    let out = cbnsafe(&["ft", "importance", &tree, "--format", "csv"]);
    assert!(stdout(&out).contains("RRW,TrafficDensity,absent,inf"), "{}", stdout(&out));

    let dir = tempfile::tempdir().unwrap();
    let converted = dir.path().join("ft.cbn.json");
    assert_eq!(code(&cbnsafe(&["ft", "to-cbn", &tree, "-o", converted.to_str().unwrap()])), 0);
    assert_eq!(code(&cbnsafe(&["validate", converted.to_str().unwrap()])), 0);
    let out = cbnsafe(&["query", converted.to_str().unwrap(), "-t", "FusionFN"]);
    assert!((probability(&stdout(&out), "FusionFN=occurs") - 1.176e-4).abs() < 1e-12);
}

#[test]
fn sample_and_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("samples.csv");
    let net = model("confounding.cbn.json");
    let out = cbnsafe(&["sample", &net, "-n", "20000", "--seed", "3", "-o", data.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let again = dir.path().join("again.csv");
    cbnsafe(&["sample", &net, "-n", "20000", "--seed", "3", "-o", again.to_str().unwrap()]);
    assert_eq!(fs::read(&data).unwrap(), fs::read(&again).unwrap());

    let fitted = dir.path().join("fitted.json");
    let out = cbnsafe(&["fit", &net, data.to_str().unwrap(), "-o", fitted.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = cbnsafe(&["query", fitted.to_str().unwrap(), "-t", "Weather"]);
    assert!((probability(&stdout(&out), "Weather=sun") - 0.6).abs() < 0.02);
}

#[test]
fn reproduce_fault_tree_group() {
    let out = cbnsafe(&["reproduce", "--only", "fta"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("criterion  4") && text.contains("criterion 12"));
    assert!(!text.contains("criterion  1 "));
}

#[test]
fn reproduce_names_perturbed_criterion() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(models()).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    let path = dir.path().join("confounding.cbn.json");
    let text = fs::read_to_string(&path).unwrap();
    let perturbed = text.replacen("0.6", "0.5", 1).replacen("0.3", "0.4", 1);
    assert_ne!(text, perturbed);
    fs::write(&path, perturbed).unwrap();
    let out = cbnsafe(&["reproduce", "--only", "confounding", "--models", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("FAIL criterion  1"), "{}", stdout(&out));
}

#[test]
fn reproduce_unknown_group_is_usage_error() {
    assert_eq!(code(&cbnsafe(&["reproduce", "--only", "everything"])), 2);
}

#[test]
fn svg_metrics_is_usage_error() {
    let out = cbnsafe(&["metrics", &model("perception-analysis.json"), "--format", "svg"]);
    assert_eq!(code(&out), 2);
}
