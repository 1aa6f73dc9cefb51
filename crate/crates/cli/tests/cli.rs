use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn lapcens(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lapcens"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_line(o: &Output) -> Value {
    serde_json::from_str(stdout(o).trim()).expect("valid json on stdout")
}

#[test]
fn convert_prints_seven_digit_triple() {
    let o = lapcens(&["convert", "tw0", "1", "1", "0.1"], None);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "(-0.7677042, 3.565768, 1.767704)\n");
}

#[test]
fn convert_round_trips_through_json() {
    let o = lapcens(&["convert", "tw", "-0.7677042", "3.565768", "1.767704", "--format", "json"], None);
    let v = json_line(&o);
    assert!((v["mu"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["p"].as_f64().unwrap() - 0.1).abs() < 1e-6);
}

#[test]
fn degenerate_sample_output() {
    let o = lapcens(&["sample", "ps:1,3", "--n", "2"], None);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3.0\n3.0\n");
}

#[test]
fn sample_is_reproducible_by_seed() {
    let a = lapcens(&["sample", "ps:0.5,15", "--n", "1000", "--seed", "7"], None);
    let b = lapcens(&["sample", "ps:0.5,15", "--n", "1000", "--seed", "7"], None);
    let c = lapcens(&["sample", "ps:0.5,15", "--n", "1000", "--seed", "8"], None);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(stdout(&a).lines().count(), 1000);
}

#[test]
fn zero_inflated_pareto_zero_fraction() {
    let o = lapcens(&["sample", "pa0:5,2,0.1", "--n", "100000", "--seed", "1"], None);
    let text = stdout(&o);
    let zeros = text.lines().filter(|l| l.parse::<f64>().unwrap() == 0.0).count();
    let frac = zeros as f64 / 1e5;
    assert!((frac - 0.1).abs() < 0.006, "{frac}");
}

#[test]
fn bad_spec_exits_one() {
    let o = lapcens(&["sample", "zz:1,2"], None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_line(&o)["error"], "spec_parse");
}

#[test]
fn fit_large_stable_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.txt");
    let o = lapcens(&["sample", "ps:0.5,15", "--n", "100000", "--seed", "21"], None);
    std::fs::write(&path, &o.stdout).unwrap();
    let o = lapcens(&["fit", "ps", path.to_str().unwrap()], None);
    assert!(o.status.success());
    let v = json_line(&o);
    let g = v["gamma_hat"].as_f64().unwrap();
    assert!((0.48..=0.52).contains(&g), "{g}");
    assert!(v["ci_lambda"].as_array().unwrap().len() == 2);
}

#[test]
fn all_zero_stdin_is_statistical_error() {
    let o = lapcens(&["fit", "tweedie", "--alpha", "0.05", "-"], Some("0\n0\n0\n0\n"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_line(&o)["error"], "all_zero_sample");
}

#[test]
fn unparsable_row_is_input_error() {
    let o = lapcens(&["fit", "ps"], Some("1.0\n2.0\nfoo\n"));
    assert_eq!(o.status.code(), Some(1));
    let v = json_line(&o);
    assert_eq!(v["error"], "invalid_value");
    assert!(v["message"].as_str().unwrap().contains("row 3"));
}

#[test]
fn gof_from_csv_column() {
    let o = lapcens(&["sample", "ps:0.6,2", "--n", "300", "--seed", "4"], None);
    let mut csv = String::from("id,x\n");
    for (i, l) in stdout(&o).lines().enumerate() {
        csv.push_str(&format!("{i},{l}\n"));
    }
    let o = lapcens(&["gof", "ps", "--column", "x"], Some(&csv));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_line(&o);
    assert!(v["z"].is_number());
    assert!(v["reject"].is_boolean());
}

#[test]
fn regime_error_exits_two() {
    let mut text = String::new();
    for i in 0..20 {
        text.push_str(if i < 10 { "0\n" } else { "1.5\n" });
    }
    let o = lapcens(&["fit", "ps"], Some(&text));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_line(&o)["error"], "regime_error");
}

#[test]
fn missing_argument_exits_one() {
    let o = lapcens(&["fit"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn table_six_rows() {
    let o = lapcens(&["experiment", "--table", "6"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("tw0:0.75,0.5,0.1,-1.868961,60.29735,5.737921"));
    assert!(text.contains("tw0:1,1,0.1,-0.7677042,3.565768,1.767704"));
    assert!(text.contains("tw0:1,1.25,0.2,-0.9883402,2.546270,1.590672"));
}

#[test]
fn table_one_desk_scale_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = lapcens(
        &["experiment", "--table", "1", "--desk-scale", "--out-dir", dir.path().to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table-1.csv")).unwrap();
    // header + 4 models x 3 sizes x 2 parameters
    assert_eq!(csv.lines().count(), 1 + 24);
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("table-1.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(csv.lines().skip(1).all(|l| l.contains(",1000,")));
}

#[test]
fn experiment_config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"generator":"ps:0.5,2","fit_target":"ps","n_grid":[50],"replications":20,"base_seed":3,"metrics":["size","rrmse"]}"#,
    )
    .unwrap();
    let a = lapcens(&["experiment", cfg.to_str().unwrap()], None);
    let b = lapcens(&["experiment", cfg.to_str().unwrap()], None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 4);

    std::fs::write(
        &cfg,
        r#"{"cells":[{"generator":"pa:5,2","fit_target":"ps","n_grid":[50],"metrics":["rrmse"]}]}"#,
    )
    .unwrap();
    let o = lapcens(&["experiment", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let v = json_line(&o);
    assert_eq!(v["error"], "config_error");
    assert!(v["message"].as_str().unwrap().contains("$.cells[0].generator"));
}

#[test]
fn gof_without_point_estimates() {
    let o = lapcens(&["sample", "we0:5,1,0.1", "--n", "500", "--seed", "3"], None);
    let o = lapcens(&["gof", "tweedie"], Some(&stdout(&o)));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_line(&o);
    assert_eq!(v["fit_error"], "non_finite_estimate");
    assert!(v["z"].is_number() && v["reject"].is_boolean());
}
