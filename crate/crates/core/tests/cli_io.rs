//! Protocol tests for the `mueller-stokes` binary: document parsing, exit
//! codes, error objects on stderr, and value-exact round trips.

mod common;

use std::fs;
use std::path::PathBuf;

use common::run_cli;
use serde_json::{json, Value};

fn parse_lines(stdout: &str) -> Vec<Value> {
    stdout
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("every output line is a document"))
        .collect()
}

fn error_kind(stderr: &str) -> String {
    let v: Value = serde_json::from_str(stderr.trim()).expect("stderr carries an error object");
    v["error"]["kind"]
        .as_str()
        .expect("error objects name their kind")
        .to_string()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("mueller-stokes-test-{}-{name}", std::process::id()))
}

#[test]
fn selftest_reports_every_constant_table() {
    let (status, out, _) = run_cli(&["selftest"], None);
    assert_eq!(status, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 8, "unexpected selftest output:\n{out}");
    for line in lines {
        assert!(line.starts_with("ok "), "unexpected selftest line: {line}");
    }
}

#[test]
fn help_is_not_an_error() {
    let (status, out, _) = run_cli(&["--help"], None);
    assert_eq!(status, 0);
    assert!(out.contains("convert"));

    let (status, _, _) = run_cli(&["no-such-command"], None);
    assert_eq!(status, 1);
}

#[test]
fn convert_translates_and_keeps_metadata() {
    let doc = r#"{"kind":"stokes","convention":"internal","data":[1.0,0.2,0.3,0.4],"meta":{"source":"bench-7"}}"#;
    let (status, out, _) = run_cli(&["convert", "--to", "van-de-hulst"], Some(doc));
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0]["kind"], "stokes");
    assert_eq!(docs[0]["convention"], "van-de-hulst");
    assert_eq!(docs[0]["meta"]["source"], "bench-7");
    let expect = [1.0, -0.4, 0.2, -0.3];
    for (k, want) in expect.iter().enumerate() {
        assert_eq!(docs[0]["data"][k].as_f64().unwrap(), *want);
    }
}

#[test]
fn convert_uses_the_document_tag_by_default() {
    let doc = r#"{"kind":"stokes","convention":"iquv","data":[1.0,0.4,0.2,-0.3]}"#;
    let (status, out, _) = run_cli(&["convert", "--to", "internal"], Some(doc));
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    let expect = [1.0, 0.2, 0.3, 0.4];
    for (k, want) in expect.iter().enumerate() {
        assert_eq!(docs[0]["data"][k].as_f64().unwrap(), *want);
    }
}

#[test]
fn conflicting_convention_sources_are_a_parse_error() {
    let doc = r#"{"kind":"stokes","convention":"iquv","data":[1,0,0,0]}"#;
    let (status, out, err) = run_cli(&["convert", "--from", "internal", "--to", "iquv"], Some(doc));
    assert_eq!(status, 2);
    assert!(out.is_empty());
    assert_eq!(error_kind(&err), "parse");
}

#[test]
fn unknown_conventions_are_usage_errors() {
    let (status, _, err) = run_cli(&["convert", "--to", "nonsense"], Some(""));
    assert_eq!(status, 1);
    assert!(err.contains("unknown convention"), "stderr was: {err}");
}

#[test]
fn malformed_or_excess_input_is_a_parse_error() {
    let (status, _, err) = run_cli(&["check"], Some("not json\n"));
    assert_eq!(status, 2);
    assert_eq!(error_kind(&err), "parse");

    let identity = r#"{"kind":"mueller","data":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;
    let two = format!("{identity}\n{identity}\n");
    let (status, _, err) = run_cli(&["check"], Some(&two));
    assert_eq!(status, 2);
    assert_eq!(error_kind(&err), "parse");

    let (status, _, err) = run_cli(&["check"], Some(""));
    assert_eq!(status, 2);
    assert_eq!(error_kind(&err), "parse");
}

#[test]
fn mismatched_document_kinds_are_rejected() {
    let stokes = r#"{"kind":"stokes","data":[1,0,0,0]}"#;
    let (status, _, err) = run_cli(&["decompose"], Some(stokes));
    assert_eq!(status, 2);
    assert_eq!(error_kind(&err), "parse");
}

#[test]
fn domain_failures_use_exit_code_three() {
    let nonphysical = r#"{"kind":"mueller","data":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,-1.5]]}"#;
    let (status, out, err) = run_cli(&["decompose"], Some(nonphysical));
    assert_eq!(status, 3);
    assert!(out.is_empty());
    assert_eq!(error_kind(&err), "nonphysical-matrix");

    let (status, _, err) = run_cli(&["targets", "mems", "--gamma", "1.5"], None);
    assert_eq!(status, 3);
    assert_eq!(error_kind(&err), "parameter-out-of-range");

    let (status, _, err) = run_cli(&["targets", "werner", "--p", "-0.1"], None);
    assert_eq!(status, 3);
    assert_eq!(error_kind(&err), "parameter-out-of-range");

    // A pure product probe has a singular reshuffled matrix.
    let product = json!({
        "kind": "density4",
        "data": [
            [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        ],
    })
    .to_string();
    let (_, werner, _) = run_cli(&["targets", "werner", "--p", "0.5"], None);
    let feed = format!("{product}\n{werner}");
    let (status, _, err) = run_cli(&["probe", "--in", "-", "--out", "-"], Some(&feed));
    assert_eq!(status, 3);
    assert_eq!(error_kind(&err), "singular-probe");
}

#[test]
fn from_jones_emits_the_three_companions() {
    let identity = r#"{"kind":"jones","data":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#;
    let (status, out, _) = run_cli(&["from-jones"], Some(identity));
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    let kinds: Vec<&str> = docs.iter().map(|d| d["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["mueller", "h", "c"]);
    assert_eq!(docs[0]["convention"], "internal");
    for i in 0..4 {
        for j in 0..4 {
            let v = docs[0]["data"][i][j].as_f64().unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "mueller[{i}][{j}] = {v}");
        }
    }
}

#[test]
fn check_reports_the_channel_diagnostics() {
    let identity = r#"{"kind":"mueller","data":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#;
    let (status, out, _) = run_cli(&["check"], Some(identity));
    assert_eq!(status, 0);
    let report: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(report["is_mueller_jones"], true);
    assert_eq!(report["cp"], true);
    assert!((report["eigenvalues"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    for k in 1..4 {
        assert!(report["eigenvalues"][k].as_f64().unwrap().abs() < 1e-12);
    }
    assert_eq!(report["trace_preserving"], true);
    assert!(report["trace_preservation_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn decompose_lists_factors_and_operators() {
    let depolarizer = r#"{"kind":"mueller","data":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#;
    let (status, out, _) = run_cli(&["decompose"], Some(depolarizer));
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    assert_eq!(docs.len(), 12);

    // Each factor is emitted as adjacent jones and mueller views, then the
    // Kraus operators follow as a block.
    for alpha in 0..4 {
        let jones = &docs[2 * alpha];
        assert_eq!(jones["kind"], "jones");
        assert_eq!(jones["meta"]["role"], "jones-factor");
        assert_eq!(jones["meta"]["index"], alpha.to_string());
        assert_eq!(jones["meta"]["lambda"], "0.5");
        assert_eq!(jones["meta"]["probability"], "0.25");

        let mueller = &docs[2 * alpha + 1];
        assert_eq!(mueller["kind"], "mueller");
        assert_eq!(mueller["meta"]["role"], "mueller-jones-factor");
        assert_eq!(mueller["meta"]["index"], alpha.to_string());
    }
    for d in &docs[8..] {
        assert_eq!(d["kind"], "jones");
        assert_eq!(d["meta"]["role"], "kraus-operator");
        assert_eq!(d["meta"]["probability"], "0.25");
    }
}

#[test]
fn targets_describe_their_parameters() {
    let (status, out, _) = run_cli(&["targets", "bell", "--index", "3"], None);
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    assert_eq!(docs[0]["kind"], "density4");
    assert_eq!(docs[0]["meta"]["family"], "bell");
    assert_eq!(docs[0]["meta"]["index"], "3");

    let (status, out, _) = run_cli(&["targets", "werner", "--p", "0.25"], None);
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    assert_eq!(docs[0]["meta"]["family"], "werner");
    assert_eq!(docs[0]["meta"]["p"], "0.25");

    let (status, out, _) = run_cli(&["targets", "mems", "--gamma", "0.5"], None);
    assert_eq!(status, 0);
    let docs = parse_lines(&out);
    assert_eq!(docs[0]["meta"]["family"], "mems");
    assert_eq!(docs[0]["meta"]["gamma"], "0.5");

    let (status, _, _) = run_cli(&["targets", "bell", "--index", "4"], None);
    assert_eq!(status, 1);
}

#[test]
fn probe_accepts_files_and_stdin() {
    let (_, singlet, _) = run_cli(&["targets", "bell", "--index", "3"], None);
    let (_, werner, _) = run_cli(&["targets", "werner", "--p", "0.5"], None);

    let singlet_path = temp_path("singlet.json");
    let werner_path = temp_path("werner.json");
    fs::write(&singlet_path, &singlet).unwrap();
    fs::write(&werner_path, &werner).unwrap();

    let (s_files, from_files, _) = run_cli(
        &[
            "probe",
            "--in",
            singlet_path.to_str().unwrap(),
            "--out",
            werner_path.to_str().unwrap(),
        ],
        None,
    );
    let (s_mixed, from_mixed, _) = run_cli(
        &["probe", "--in", singlet_path.to_str().unwrap(), "--out", "-"],
        Some(&werner),
    );
    let feed = format!("{singlet}{werner}");
    let (s_stdin, from_stdin, _) = run_cli(&["probe", "--in", "-", "--out", "-"], Some(&feed));

    fs::remove_file(&singlet_path).ok();
    fs::remove_file(&werner_path).ok();

    assert_eq!(s_files, 0);
    assert_eq!(s_mixed, 0);
    assert_eq!(s_stdin, 0);
    assert_eq!(from_files, from_stdin);
    assert_eq!(from_mixed, from_stdin);

    let docs = parse_lines(&from_stdin);
    assert_eq!(docs[0]["kind"], "mueller");
    let expect = [1.0, 0.5, 0.5, 0.5];
    for i in 0..4 {
        for j in 0..4 {
            let v = docs[0]["data"][i][j].as_f64().unwrap();
            let want = if i == j { expect[i] } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "mueller[{i}][{j}] = {v}");
        }
    }
}

#[test]
fn documents_round_trip_without_value_loss() {
    // Shortest-round-trip printing must hand back the exact bit patterns,
    // including extremes and a 17-significant-digit decimal.
    let payloads = [
        ["1e308", "0.1", "5e-324", "0.3333333333333333"],
        ["0.12345678901234567", "-2.5e-300", "9007199254740993", "6.02214076e23"],
    ];
    for values in payloads {
        let doc = format!(
            r#"{{"kind":"stokes","convention":"internal","data":[{},{},{},{}]}}"#,
            values[0], values[1], values[2], values[3]
        );
        let (status, out, _) = run_cli(&["convert", "--to", "internal"], Some(&doc));
        assert_eq!(status, 0);
        let docs = parse_lines(&out);
        for (k, literal) in values.iter().enumerate() {
            let sent: f64 = literal.parse().unwrap();
            let received = docs[0]["data"][k].as_f64().unwrap();
            assert_eq!(
                received.to_bits(),
                sent.to_bits(),
                "slot {k}: sent {literal}, received {received}"
            );
        }
    }
}

#[test]
fn probe_output_is_byte_stable() {
    let (_, singlet, _) = run_cli(&["targets", "bell", "--index", "3"], None);
    let (_, werner, _) = run_cli(&["targets", "werner", "--p", "0.5"], None);
    let feed = format!("{singlet}{werner}");
    let (s1, first, _) = run_cli(&["probe", "--in", "-", "--out", "-"], Some(&feed));
    let (s2, second, _) = run_cli(&["probe", "--in", "-", "--out", "-"], Some(&feed));
    assert_eq!(s1, 0);
    assert_eq!(s2, 0);
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn a_closed_output_stream_is_not_an_error() {
    use std::io::Write;
    use std::process::{Command, Stdio};

    let mut child = Command::new(env!("CARGO_BIN_EXE_mueller-stokes"))
        .arg("decompose")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");

    // Dropping the read end before the input arrives guarantees every write
    // the child attempts lands on a pipe with no reader, the situation a
    // pipeline into `head` produces intermittently.
    drop(child.stdout.take());

    let doc = r#"{"kind":"mueller","data":[[1,0,0,0],[0,0.5,0,0],[0,0,0.5,0],[0,0,0,0.5]]}"#;
    child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(doc.as_bytes())
        .expect("feeding input");
    let out = child.wait_with_output().expect("child finishes");

    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stderr.is_empty());
}
