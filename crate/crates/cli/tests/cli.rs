use std::process::{Command, Output};

fn lpcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpcomp")).args(args).output().expect("spawn lpcomp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(o: &Output) -> Vec<String> {
    // skip comment lines and the column header
    stdout(o).lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

#[test]
fn cp_check_reports_convergence() {
    let o = lpcomp(&["cp-check", "--f", "pow:0.9", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&o);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains("converges"), "{}", rows[0]);
    let o = lpcomp(&["cp-check", "--f", "pow:1"]);
    assert!(data_rows(&o)[0].contains("diverges"));
}

#[test]
fn header_carries_version_and_config() {
    let o = lpcomp(&["ball", "--group", "Z", "--n", "3", "--seed", "9"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# lpcomp {}", env!("CARGO_PKG_VERSION")));
    let cfg = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let v: serde_json::Value = serde_json::from_str(cfg).unwrap();
    assert_eq!(v["experiment"]["group"], "Z");
    assert_eq!(v["seed"], 9);
    assert_eq!(data_rows(&o).len(), 7);
}

#[test]
fn bourgain_range_gives_one_row_per_depth() {
    let o = lpcomp(&["bourgain-check", "--J", "4..12", "--q", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&o).len(), 9);
}

#[test]
fn json_rows_are_keyed_by_column() {
    let o = lpcomp(&["folner", "--group", "C2wrZ", "--n", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["cond1"], true);
    assert_eq!(rows[0]["sizeRatio"].as_f64().unwrap(), 5.0 / 3.0);
}

#[test]
fn thread_count_does_not_change_output() {
    for args in [&["zwrz", "--radius", "6"][..], &["profile", "--group", "Z^2", "--method", "heuristic", "--n", "3"]] {
        let one = lpcomp(&[args, &["--threads", "1"]].concat());
        let four = lpcomp(&[args, &["--threads", "4"]].concat());
        assert_eq!(one.status.code(), Some(0));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("lpcomp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("walk.csv");
    let o = lpcomp(&["walk", "--group", "Z", "--n", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let direct = lpcomp(&["walk", "--group", "Z", "--n", "3"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(lpcomp(&["cp-check", "--f", "bogus"]).status.code(), Some(2));
    assert_eq!(lpcomp(&["ball", "--group", "Q", "--n", "2"]).status.code(), Some(2));
    assert_eq!(lpcomp(&["folner", "--group", "Z", "--n", "2"]).status.code(), Some(2));
    assert_eq!(lpcomp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lpcomp(&["ball", "--group", "F3", "--n", "40"]).status.code(), Some(3));
}

#[test]
fn run_config_round_trip_and_unknown_fields() {
    let dir = std::env::temp_dir().join(format!("lpcomp-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.json");
    std::fs::write(&good, r#"{"experiment":{"command":"ball","group":"Z","n":2},"seed":4}"#).unwrap();
    let o = lpcomp(&["run", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(data_rows(&o).len(), 5);

    // the stamped header is itself a valid configuration
    let header = stdout(&o).lines().nth(1).unwrap().strip_prefix("# config: ").unwrap().to_string();
    let again = dir.join("again.json");
    std::fs::write(&again, header).unwrap();
    assert_eq!(lpcomp(&["run", "--config", again.to_str().unwrap()]).stdout, o.stdout);

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"experiment":{"command":"ball","group":"Z","n":2,"radius":3}}"#).unwrap();
    assert_eq!(lpcomp(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
