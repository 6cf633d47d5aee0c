use std::path::PathBuf;
use std::process::{Command, Output};

fn systems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn system(name: &str) -> String {
    systems_dir().join(name).to_string_lossy().into_owned()
}

fn tilesa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilesa"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_emits_one_row_per_run_and_a_summary() {
    let chain = system("chain10.tiles");
    let o = tilesa(&["simulate", "--system", &chain, "--runs", "100", "--rng-seed", "42", "--gse", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "run,elapsed,growth_errors,facet_errors,terminated_by");
    assert_eq!(lines.len(), 1 + 100 + 1);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[100].starts_with("99,"));
    assert!(lines[101].starts_with("mean,"));
    assert!(lines[101].ends_with(",truncated:0"));
}

#[test]
fn simulate_is_byte_identical_across_invocations_and_thread_counts() {
    let a1 = system("A1.tiles");
    let args = ["simulate", "--system", &a1, "--runs", "6", "--rng-seed", "7", "--gse", "9"];
    let first = tilesa(&args);
    let second = tilesa(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let mut serial = vec!["--jobs", "1"];
    serial.extend_from_slice(&args);
    assert_eq!(tilesa(&serial).stdout, first.stdout);
    let mut wide = vec!["--jobs", "3"];
    wide.extend_from_slice(&args);
    assert_eq!(tilesa(&wide).stdout, first.stdout);
}

#[test]
fn missing_system_is_a_usage_error() {
    let o = tilesa(&["simulate", "--runs", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn unreadable_or_malformed_system_is_a_usage_error() {
    let o = tilesa(&["terminal", "--system", "/nonexistent/x.tiles"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tiles");
    std::fs::write(&bad, "temperature two\n").unwrap();
    let o = tilesa(&["terminal", "--system", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn budget_hits_exit_3_unless_allowed() {
    let chain = system("chain10.tiles");
    let base = ["simulate", "--system", &chain, "--runs", "4", "--max-events", "3"];
    let o = tilesa(&base);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6, "rows are still written");
    assert!(text.contains("event-budget"));
    let mut allowed = base.to_vec();
    allowed.push("--allow-truncated");
    assert_eq!(tilesa(&allowed).status.code(), Some(0));
}

#[test]
fn events_log_is_tab_separated() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.tsv");
    let chain = system("chain10.tiles");
    let o = tilesa(&[
        "simulate",
        "--system",
        &chain,
        "--runs",
        "2",
        "--events-log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("# run 0\n"));
    assert!(text.contains("# run 1\n"));
    let event = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = event.split('\t').collect();
    assert_eq!(fields.len(), 6);
    assert!(fields[0].parse::<f64>().unwrap() > 0.0);
    assert!(fields[1] == "A" || fields[1] == "D");
    assert_eq!(fields[4], "C");
}

#[test]
fn experiment_header_and_rows() {
    let o = tilesa(&[
        "experiment",
        "--builtin",
        "A1",
        "--height",
        "4",
        "--ratios",
        "1,5",
        "--runs",
        "10",
        "--rng-seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "ratio,runs,mean_per_tile_error,stderr,mean_growth_errors,mean_facet_errors,fraction_runs_with_error"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.0000000000000000,10,"));
    assert!(lines[2].starts_with("5.0000000000000000,10,"));
}

#[test]
fn experiment_single_ratio_gives_single_row() {
    let o = tilesa(&["experiment", "--builtin", "B1", "--height", "3", "--ratios", "7.5", "--runs", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn experiment_is_deterministic() {
    let args = ["experiment", "--builtin", "A1", "--height", "5", "--ratios", "2.5", "--runs", "8"];
    assert_eq!(tilesa(&args).stdout, tilesa(&args).stdout);
}

#[test]
fn experiment_on_a_system_without_x_and_y_is_a_module_error() {
    let chain = system("chain10.tiles");
    let o = tilesa(&["experiment", "--system", &chain, "--ratios", "1", "--runs", "2"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"X\""));
}

#[test]
fn emit_system_matches_shipped_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("A1.tiles");
    let o = tilesa(&["experiment", "--builtin", "A1", "--runs", "0", "--emit-system", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        std::fs::read_to_string(systems_dir().join("A1.tiles")).unwrap()
    );
}

#[test]
fn optimize_reports_five_to_one_for_a1() {
    let o = tilesa(&["optimize", "--system", &system("A1.tiles"), "--numeric"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "tile,count,closed_form,numeric,objective_closed_form,objective_numeric,residual_closed_form,residual_numeric"
    );
    assert_eq!(lines.len(), 3);
    let field = |line: &str, i: usize| line.split(',').nth(i).unwrap().parse::<f64>().unwrap();
    let (x, y) = (lines[1], lines[2]);
    assert!(x.starts_with("X,1250,") && y.starts_with("Y,50,"));
    assert!((field(x, 2) / field(y, 2) - 5.0).abs() < 1e-12);
    assert!((field(x, 3) - 5.0 / 6.0).abs() < 1e-6);
}

#[test]
fn optimize_without_numeric_leaves_columns_empty() {
    let o = tilesa(&["optimize", "--system", &system("B1.tiles")]);
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(3), Some(""));
    assert!(row.ends_with(','));
}

#[test]
fn estimate_time_chain50() {
    let o = tilesa(&["estimate-time", "--system", &system("chain50.tiles"), "--runs", "10000", "--rng-seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "runs,mean,variance,ci95,s_upper,planned_runs,variance_bound_24S2,tail_violations");
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[0], "10000");
    let mean: f64 = f[1].parse().unwrap();
    assert!((47.5..=52.5).contains(&mean), "{mean}");
    assert_eq!(f[4], "50.000000000000000");
    assert_eq!(f[7], "0");
}

#[test]
fn estimate_time_single_run_has_no_interval() {
    let o = tilesa(&["estimate-time", "--system", &system("chain10.tiles"), "--runs", "1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1).unwrap().split(',').nth(3), Some(""));
}

#[test]
fn estimate_time_rejects_runs_with_eps() {
    let o = tilesa(&["estimate-time", "--system", &system("chain10.tiles"), "--runs", "5", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn terminal_grid_for_chain10() {
    let o = tilesa(&["terminal", "--system", &system("chain10.tiles")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "[S] C C C C C C C C C C [stop]\n");
}

#[test]
fn help_exits_zero() {
    let o = tilesa(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("estimate-time"));
}
