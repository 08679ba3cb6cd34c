use std::io::Write;
use std::process::{Command, Output, Stdio};

fn hoqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoqc"))
        .args(args)
        .env_remove("HOQC_TOL")
        .output()
        .expect("binary runs")
}

fn hoqc_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hoqc"))
        .args(args)
        .env_remove("HOQC_TOL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

const IDENTITY_CHANNEL: &str = r#"{"factors":[{"label":"B","dim":2},{"label":"A","dim":2}],
"data":[[1,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[1,0]]}"#;

const HALF_IDENTITY_CHANNEL: &str = r#"{"factors":[{"label":"B","dim":2},{"label":"A","dim":2}],
"data":[[0.5,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0.5,0]]}"#;

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn sig_reports_lambda_and_dimension() {
    for (expr, num, den, delta) in [
        ("A:2 -> B:2", 1, 2, 12),
        ("A:2", 1, 2, 3),
        ("comb2(A0:2,A1:2,A2:2,A3:2)", 1, 4, 204),
    ] {
        let o = hoqc(&["sig", expr, "--output", "json"]);
        assert_eq!(code(&o), 0, "{expr}");
        let v = json(&o);
        assert_eq!(v["lambda"]["num"], num);
        assert_eq!(v["lambda"]["den"], den);
        assert_eq!(v["delta_dim"], delta);
    }
}

#[test]
fn sig_elides_long_lists() {
    let expr = "comb4(A0:2,A1:2,A2:2,A3:2,A4:2,A5:2,A6:2,A7:2)";
    let v = json(&hoqc(&["sig", expr, "--output", "json"]));
    assert_eq!(v["strings"].as_array().unwrap().len(), 64);
    assert_eq!(v["count"], 170);
    let full = json(&hoqc(&["sig", expr, "--output", "json", "--full"]));
    assert_eq!(full["strings"].as_array().unwrap().len(), 170);
    assert_eq!(full["elided"], 0);
}

#[test]
fn syntax_errors_exit_two() {
    let o = hoqc(&["sig", "A:2 ->"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax"));
    assert_eq!(code(&hoqc(&["eq", "A:2", "(B:2"])), 2);
    assert_eq!(code(&hoqc(&["frobnicate"])), 2);
}

#[test]
fn eq_exit_codes() {
    assert_eq!(
        code(&hoqc(&["eq", "(A:2 * B:2) -> C:2", "A:2 -> (B:2 -> C:2)"])),
        0
    );
    assert_eq!(
        code(&hoqc(&["eq", "A:2 -> B:2", "bar(B:2) -> bar(A:2)"])),
        0
    );
    let o = hoqc(&["eq", "A:2", "bar(A:2)", "--output", "json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["equal"], false);
    assert!(v["witness"].is_string());
}

#[test]
fn eq_witness_names_a_string() {
    let o = hoqc(&["eq", "A:2 -> B:2", "bar(A:2) * B:2", "--output", "json"]);
    assert_eq!(code(&o), 1);
    assert!(json(&o)["witness"].as_str().unwrap().contains('='));
}

#[test]
fn check_identity_channel() {
    let f = write_temp(IDENTITY_CHANNEL);
    let path = f.path().to_str().unwrap();
    assert_eq!(code(&hoqc(&["check", path, "A:2 -> B:2", "--det"])), 0);
    assert_eq!(code(&hoqc(&["check", path, "bar(A:2 -> B:2)", "--det"])), 1);
    let o = hoqc(&["check", path, "A:2 -> B:2", "--output", "json"]);
    let v = json(&o);
    assert_eq!(v["verdict"], true);
    for key in [
        "psd_deficit",
        "trace_deviation",
        "forbidden_mass",
        "tolerance",
    ] {
        assert!(v[key].is_number(), "{key}");
    }
}

#[test]
fn check_half_identity_event() {
    let f = write_temp(HALF_IDENTITY_CHANNEL);
    let path = f.path().to_str().unwrap();
    assert_eq!(code(&hoqc(&["check", path, "A:2 -> B:2", "--event"])), 0);
    assert_eq!(code(&hoqc(&["check", path, "A:2 -> B:2", "--det"])), 1);
    let v = json(&hoqc(&[
        "check",
        path,
        "A:2 -> B:2",
        "--event",
        "--output",
        "json",
    ]));
    assert!(v["gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn check_reads_stdin() {
    assert_eq!(
        code(&hoqc_stdin(
            &["check", "-", "A:2 -> B:2"],
            IDENTITY_CHANNEL.as_bytes()
        )),
        0
    );
}

#[test]
fn malformed_data_exits_three() {
    let short = r#"{"factors":[{"label":"A","dim":2}],"data":[[1,0]]}"#;
    assert_eq!(
        code(&hoqc_stdin(&["check", "-", "A:2"], short.as_bytes())),
        3
    );
    assert_eq!(code(&hoqc_stdin(&["check", "-", "A:2"], b"not json")), 3);
    assert_eq!(
        code(&hoqc_stdin(
            &["check", "-", "A:2 -> C:2"],
            IDENTITY_CHANNEL.as_bytes()
        )),
        3
    );
    assert_eq!(code(&hoqc(&["check", "/nonexistent/file.json", "A:2"])), 3);
}

#[test]
fn random_round_trip_and_reproducible() {
    let a = hoqc(&["random", "A:2 -> B:3", "--seed", "17"]);
    let b = hoqc(&["random", "A:2 -> B:3", "--seed", "17"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = hoqc(&["random", "A:2 -> B:3", "--seed", "18"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(
        code(&hoqc_stdin(
            &["check", "-", "A:2 -> B:3", "--det"],
            &a.stdout
        )),
        0
    );
}

#[test]
fn random_state_is_density_matrix() {
    let o = hoqc(&["random", "A:2", "--seed", "1"]);
    let v = json(&o);
    let data = v["data"].as_array().unwrap();
    let tr = data[0][0].as_f64().unwrap() + data[3][0].as_f64().unwrap();
    assert!((tr - 1.0).abs() < 1e-12);
}

#[test]
fn verify_theorems() {
    assert_eq!(
        code(&hoqc(&["verify", "interst", "--m", "2", "--n", "2"])),
        0
    );
    assert_eq!(code(&hoqc(&["verify", "comb-strings", "--n", "6"])), 0);
    let o = hoqc(&[
        "verify",
        "tombstone",
        "--m",
        "2",
        "--n",
        "3",
        "--output",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["claim"], "tombstone");
    assert_eq!(v["equal"], true);
    assert_eq!(v["lhs_size"], v["rhs_size"]);
}

#[test]
fn verify_respects_size_limit() {
    assert_eq!(
        code(&hoqc(&["verify", "interst", "--m", "4", "--n", "3"])),
        2
    );
    assert_eq!(
        code(&hoqc(&[
            "verify",
            "interst",
            "--m",
            "1",
            "--n",
            "1",
            "--size-limit",
            "1"
        ])),
        2
    );
}

#[test]
fn verify_numeric_suites() {
    assert_eq!(
        code(&hoqc(&[
            "verify",
            "duality",
            "--types",
            "3",
            "--samples",
            "5",
            "--seed",
            "4"
        ])),
        0
    );
    let o = hoqc(&[
        "verify",
        "cascade-agreement",
        "--n",
        "2",
        "--samples",
        "20",
        "--output",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["report"]["failures"], 0);
}

#[test]
fn tolerance_from_environment() {
    let f = write_temp(IDENTITY_CHANNEL);
    let o = Command::new(env!("CARGO_BIN_EXE_hoqc"))
        .args([
            "check",
            f.path().to_str().unwrap(),
            "A:2 -> B:2",
            "--output",
            "json",
        ])
        .env("HOQC_TOL", "1e-5")
        .output()
        .unwrap();
    assert_eq!(json(&o)["tolerance"], 1e-5);
    assert_eq!(code(&hoqc(&["sig", "A:2", "--tol", "-1"])), 2);
}

#[test]
fn switch_demo_passes() {
    let o = hoqc(&["switch", "--output", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["total_dim"], 256);
    assert_eq!(v["deterministic"]["verdict"], true);
    assert!(v["union_forbidden_mass"].as_f64().unwrap() <= 1e-9);
    for order in v["single_orders"].as_array().unwrap() {
        assert!(order["forbidden_mass"].as_f64().unwrap() > 1e-9);
    }
}
