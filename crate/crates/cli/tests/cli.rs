use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cubedc::harness::read_table;

fn cubedc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubedc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn estimate_location_two_groups() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "loc.csv", "x\n-0.5\n0.2\n3.0\n1.0\n");
    let out_csv = dir.path().join("report.csv");
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        &input,
        "--groups",
        "2",
        "--output",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("-0.150000") && text.contains("2.000000"),
        "{text}"
    );
    assert!(text.contains("theta0   0.925000"), "{text}");
    let report = fs::read_to_string(out_csv).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.925);
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.075);
}

#[test]
fn single_group_needs_no_se() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "loc.csv", "x\n-0.5\n0.2\n3.0\n1.0\n");
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        &input,
        "--groups",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need at least two groups for SE"));
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        &input,
        "--groups",
        "1",
        "--no-se",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn remainder_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "loc.csv", "x\n1\n2\n3\n4\n5\n");
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        &input,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("1 observations discarded"));
}

#[test]
fn missing_file_names_the_path() {
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        "/no/such/file.csv",
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/file.csv"));
}

#[test]
fn schema_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let header = write(dir.path(), "h.csv", "x1,y\n1,2\n");
    let o = cubedc(&[
        "estimate",
        "--example",
        "maxscore",
        "--input",
        &header,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let value = write(dir.path(), "v.csv", "x,a,y,pi\n1,0,1,0.5\n1,2,1,0.5\n");
    let o = cubedc(&[
        "estimate",
        "--example",
        "valuesearch",
        "--input",
        &value,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let nan = write(dir.path(), "n.csv", "x\n1\nnan\n");
    let o = cubedc(&[
        "estimate",
        "--example",
        "location",
        "--input",
        &nan,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn shuffle_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = std::iter::once("x".to_string())
        .chain((0..40).map(|i| format!("{}", i as f64 / 7.0)))
        .collect::<Vec<_>>()
        .join("\n");
    let input = write(dir.path(), "loc.csv", &body);
    let run = |seed: &str| {
        stdout(&cubedc(&[
            "estimate",
            "--example",
            "location",
            "--input",
            &input,
            "--groups",
            "4",
            "--shuffle",
            seed,
        ]))
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn maxscore_and_valuesearch_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let ms = write(
        dir.path(),
        "ms.csv",
        "x1,x2,y\n1,0,1\n0,1,-1\n1,0,2\n0,1,-2\n",
    );
    let o = cubedc(&[
        "estimate",
        "--example",
        "maxscore",
        "--input",
        &ms,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let vs = write(
        dir.path(),
        "vs.csv",
        "x,a,y,pi\n0.5,1,2,0.5\n-1,0,1,0.5\n0.25,1,3,0.5\n1,0,0,0.5\n",
    );
    let o = cubedc(&[
        "estimate",
        "--example",
        "valuesearch",
        "--input",
        &vs,
        "--groups",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn simulate_writes_round_trippable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let o = cubedc(&[
        "simulate",
        "--example",
        "maxscore",
        "--n-exp",
        "10",
        "--s-exp",
        "2",
        "--reps",
        "20",
        "--seed",
        "7",
        "--pooled",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "example,N,S,reps,coord,bias,sd,se_mean,cp,pooled_sd,runtime_s"
    );
    assert_eq!(text.lines().count(), 3);
    let table = read_table(text.as_bytes()).unwrap();
    let mut again = Vec::new();
    cubedc::harness::write_table(&table, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);

    let o = cubedc(&["table", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn simulate_output_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let path = dir.path().join(format!("t{threads}.csv"));
        let o = cubedc(&[
            "--threads",
            threads,
            "simulate",
            "--example",
            "valuesearch",
            "--n-exp",
            "9",
            "--s-exp",
            "3",
            "--reps",
            "30",
            "--seed",
            "5",
            "--no-timing",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(path).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn threads_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_cubedc"))
        .env("CUBEDC_THREADS", "0")
        .args([
            "simulate",
            "--example",
            "location",
            "--n-exp",
            "6",
            "--s-exp",
            "1",
            "--reps",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec![
            "simulate",
            "--example",
            "location",
            "--n-exp",
            "24",
            "--s-exp",
            "4",
        ],
        vec![
            "simulate",
            "--example",
            "location",
            "--n-exp",
            "4",
            "--s-exp",
            "6",
        ],
        vec![
            "simulate",
            "--example",
            "nonsense",
            "--n-exp",
            "8",
            "--s-exp",
            "2",
        ],
        vec![
            "simulate",
            "--example",
            "location",
            "--n-exp",
            "8",
            "--s-exp",
            "2",
            "--level",
            "1.5",
        ],
        vec!["rate-check", "--example", "location", "--reps", "300"],
        vec![
            "rate-check",
            "--example",
            "location",
            "--s-exp",
            "2",
            "--n-exps",
            "4,5,6",
        ],
        vec![
            "rate-check",
            "--example",
            "location",
            "--n-exp",
            "6",
            "--s-exps",
            "1,2,3,4",
            "--reps",
            "10",
        ],
        vec!["limit-var", "--step", "0.5"],
    ] {
        let o = cubedc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn numeric_failure_exits_one() {
    let o = cubedc(&[
        "limit-var",
        "--reps",
        "500",
        "--half-width",
        "1",
        "--step",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("boundary"));
}

#[test]
fn rate_check_reports_slope() {
    let o = cubedc(&[
        "rate-check",
        "--example",
        "location",
        "--n-exp",
        "5",
        "--s-exps",
        "1,2,3,4",
        "--reps",
        "300",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("GroupCount") && text.contains("slope"),
        "{text}"
    );
    assert_eq!(
        text.lines().filter(|l| l.starts_with("location")).count(),
        4
    );
}

#[test]
fn limit_var_reports_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let o = cubedc(&[
        "limit-var",
        "--reps",
        "10000",
        "--half-width",
        "6",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(path).unwrap();
    let a: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(5)
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.8..1.4).contains(&a), "{a}");
}
