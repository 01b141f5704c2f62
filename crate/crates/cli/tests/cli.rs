use std::process::{Command, Output};

fn lunepv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lunepv"))
        .args(args)
        .env_remove("LUNEPV_TOL")
        .env_remove("LUNEPV_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and first row of a CSV record as (key, value) pairs.
fn record(o: &Output) -> Vec<(String, String)> {
    let text = stdout(o);
    let mut lines = text.lines();
    let keys = lines.next().unwrap().split(',').map(String::from);
    let vals = lines.next().unwrap().split(',').map(String::from);
    keys.zip(vals).collect()
}

fn field(o: &Output, key: &str) -> String {
    record(o)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .unwrap_or_else(|| panic!("no {key}"))
}

const CHEAP: [&str; 6] = [
    "--tol",
    "1e-2",
    "--final-window",
    "0.00390625",
    "--windows",
    "3",
];

#[test]
fn delta_examples() {
    let cases = [
        (["--x", "1", "--y", "0", "--a", "0.3"], "RightMoon", "+1"),
        (["--x", "0", "--y", "0", "--a", "0.3"], "Lens", "0"),
        (["--x", "1", "--y", "0", "--a", "-0.3"], "LeftMoon", "-1"),
    ];
    for (args, region, d) in cases {
        let o = lunepv(&[&["delta"][..], &args].concat());
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(field(&o, "region"), region);
        assert_eq!(field(&o, "delta"), d);
    }
}

#[test]
fn compare_formats_carry_identical_numbers() {
    let args = ["compare", "--x", "2", "--y", "0", "--a", "0.5"];
    let csv = lunepv(&args);
    let json = lunepv(&[&args[..], &["--format", "json"]].concat());
    assert_eq!(csv.status.code(), Some(0));
    let obj: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    for key in [
        "i_num_plus",
        "i_num_minus",
        "i_jordan",
        "disc_plus",
        "disc_minus",
        "err_bound",
    ] {
        let from_csv: f64 = field(&csv, key).parse().unwrap();
        assert_eq!(
            from_csv.to_bits(),
            obj[key].as_f64().unwrap().to_bits(),
            "{key}"
        );
    }
    let jordan: f64 = field(&csv, "i_jordan").parse().unwrap();
    assert!((jordan - std::f64::consts::FRAC_PI_2 * 5776f64.ln()).abs() < 1e-12);
}

#[test]
fn domain_errors_exit_2() {
    let o = lunepv(&["compare", "--x", "0", "--y", "0.9", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x = 0"));

    let o = lunepv(&[
        "oracle",
        "f",
        "--a",
        "0",
        "--samples",
        "1000000",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("moons empty"));

    let o = lunepv(&["delta", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_is_reproducible_across_jobs() {
    let args = [
        "oracle",
        "inner",
        "--x",
        "2",
        "--y",
        "0",
        "--center",
        "0.5",
        "--samples",
        "200000",
        "--seed",
        "42",
    ];
    let one = lunepv(&[&args[..], &["--jobs", "1"]].concat());
    let three = lunepv(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn scan_zero_row() {
    let o = lunepv(&["scan", "--a-min", "0", "--a-max", "0", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,F,abs_err,evals,converged,refinement_delta");
    assert_eq!(lines.len(), 2);
    assert_eq!(field(&o, "F").parse::<f64>().unwrap(), 0.0);
    assert!(!text.contains('\r'));
}

#[test]
fn scan_is_byte_identical_across_jobs() {
    let args = [
        &["scan", "--a-min", "0.1", "--a-max", "0.9", "--steps", "9"][..],
        &CHEAP,
    ]
    .concat();
    let one = lunepv(&[&args[..], &["--jobs", "1"]].concat());
    let four = lunepv(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 10);
    // touch-point windows do not decay, so rows are flagged
    assert_eq!(one.status.code(), Some(3));
}

#[test]
fn scan_rows_are_symmetric_in_a() {
    let args = [
        &[
            "scan", "--a-min", "-0.5", "--a-max", "0.5", "--steps", "2", "--format", "json",
        ][..],
        &CHEAP,
    ]
    .concat();
    let o = lunepv(&args);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let get = |i: usize, k: &str| rows[i][k].as_f64().unwrap();
    assert!((get(0, "F") - get(1, "F")).abs() <= get(0, "abs_err") + get(1, "abs_err"));
}

#[test]
fn flags_override_environment() {
    let base = ["inner", "--x", "1.2", "--y", "0.3", "--center", "-0.5"];
    let from_env = Command::new(env!("CARGO_BIN_EXE_lunepv"))
        .args(base)
        .env("LUNEPV_TOL", "1e-6")
        .output()
        .unwrap();
    assert_eq!(field(&from_env, "abs_tol").parse::<f64>().unwrap(), 1e-6);
    let from_flag = Command::new(env!("CARGO_BIN_EXE_lunepv"))
        .args(base)
        .args(["--tol", "1e-7"])
        .env("LUNEPV_TOL", "1e-6")
        .output()
        .unwrap();
    assert_eq!(field(&from_flag, "abs_tol").parse::<f64>().unwrap(), 1e-7);
    let value: f64 = field(&from_flag, "value").parse().unwrap();
    assert!((value + 0.924_935_471_413_949_2).abs() < 1e-6);
}

#[test]
fn eval_f_exit_codes_and_out_file() {
    let dir = std::env::temp_dir().join(format!("lunepv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("far.json");
    let o = lunepv(&[
        "eval-f",
        "--a",
        "2.5",
        "--tol",
        "1e-4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let obj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(obj["converged"], serde_json::Value::Bool(true));
    assert!(obj["value"].as_f64().unwrap().is_finite());
    std::fs::remove_dir_all(&dir).unwrap();

    let o = lunepv(&[&["eval-f", "--a", "0.5"][..], &CHEAP].concat());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(field(&o, "converged"), "false");
    assert_eq!(
        field(&o, "touchpoint_window").parse::<f64>().unwrap(),
        0.00390625
    );
}
