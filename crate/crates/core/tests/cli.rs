use std::path::Path;
use std::process::{Command, Output};

use oeq::cli::files::{load_decomposition, load_instance};
use serde_json::Value;

const IDENTITY: &str = r#"{"version":1,"n":1,"m":1,"G_E":[[1]],"G_F":[[1]],
  "f_samples":[{"in":[1],"out":[1]}],"g_samples":[{"in":[1],"out":[1]}]}"#;

const SQUARE: &str = r#"{"version":1,"n":1,"m":2,"G_E":[[1]],"G_F":[[1,0],[0,1]],
  "f_samples":[{"in":[1],"out":[1,1]},{"in":[2],"out":[2,4]},{"in":[-1],"out":[-1,1]}],
  "g_samples":[{"in":[1],"out":[1,0]},{"in":[2],"out":[2,0]}]}"#;

const DOUBLED: &str = r#"{"version":1,"n":1,"m":1,"G_E":[[1]],"G_F":[[1]],
  "f_samples":[{"in":[1],"out":[1]}],"g_samples":[{"in":[1],"out":[2]}]}"#;

fn oeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oeq")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn verify_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["verify", &file(dir.path(), "id.json", IDENTITY)]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["max_abs_residual"], 0.0);
    assert_eq!(report["pass"], true);
}

#[test]
fn verify_square_lift() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["verify", &file(dir.path(), "sq.json", SQUARE)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["pair_count"], 6);
}

#[test]
fn verify_tampered() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["verify", &file(dir.path(), "bad.json", DOUBLED)]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["max_abs_residual"], 1.0);
    assert_eq!(report["pass"], false);
}

#[test]
fn verify_tolerance_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["verify", &file(dir.path(), "bad.json", DOUBLED), "--tol", "1.5"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn malformed_files_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["verify", &file(dir.path(), "trunc.json", "{\"version\":1,\n\"n\":")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let wrong = IDENTITY.replace("\"out\":[1]}],\"g", "\"out\":[1,2]}],\"g");
    let out = oeq(&["verify", &file(dir.path(), "wrong.json", &wrong)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("f_samples"));
}

#[test]
fn extract_summary() {
    let dir = tempfile::tempdir().unwrap();
    let dec_path = dir.path().join("dec.json");
    let out = oeq(&[
        "extract",
        &file(dir.path(), "sq.json", SQUARE),
        "--json",
        "-o",
        dec_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let summary = stdout_json(&out);
    assert_eq!(summary["rank_L"], 2);
    assert_eq!(summary["rank_M"], 1);
    assert!((summary["A"][0][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(summary["pass"], true);

    let dec = load_decomposition(&dec_path).unwrap();
    assert_eq!(dec.image_span().rank(), 2);
    assert_eq!(dec.primal_section().len(), 3);
}

#[test]
fn extract_text_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["extract", &file(dir.path(), "sq.json", SQUARE)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rank L = 2, rank M = 1"));
    assert!(text.contains("cond(A)"));
}

#[test]
fn extract_refuses_non_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = oeq(&["extract", &file(dir.path(), "bad.json", DOUBLED), "--json"]);
    assert_eq!(code(&out), 3);
    assert_eq!(stdout_json(&out)["error"]["stage"], "precondition");
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn roundtrip_passes() {
    let out = oeq(&[
        "roundtrip", "--seed", "42", "--dims", "2", "4", "--rank-l", "3", "--rank-m", "1", "--sections", "polynomial",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn roundtrip_every_mode() {
    for pairing in ["standard", "random-spd", "random-invertible"] {
        for sections in ["zero", "polynomial", "trigonometric"] {
            let out = oeq(&["roundtrip", "--seed", "5", "--dims", "2", "5", "--pairing", pairing, "--sections", sections]);
            assert_eq!(code(&out), 0, "{pairing} {sections}");
        }
    }
}

#[test]
fn roundtrip_rank_equation() {
    let out = oeq(&["roundtrip", "--dims", "2", "4", "--rank-l", "2", "--rank-m", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rank"));
}

#[test]
fn roundtrip_bad_flags() {
    assert_eq!(code(&oeq(&["roundtrip", "--dims", "2"])), 2);
    assert_eq!(code(&oeq(&["roundtrip", "--dims", "1", "2", "--pairing", "hermitian"])), 2);
    assert_eq!(code(&oeq(&["roundtrip", "--dims", "3", "2"])), 2);
    assert_eq!(code(&oeq(&[])), 2);
}

#[test]
fn roundtrip_is_deterministic() {
    let args = ["roundtrip", "--seed", "7", "--dims", "1", "2", "--rank-l", "2", "--rank-m", "1", "--json"];
    let first = oeq(&args);
    let second = oeq(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn gen_writes_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let p = path.to_str().unwrap();
    let out = oeq(&["gen", "--seed", "9", "--dims", "2", "3", "--pairing", "random-spd", "-o", p]);
    assert_eq!(code(&out), 0);
    let inst = load_instance(&path).unwrap();
    assert_eq!((inst.n(), inst.m()), (2, 3));
    assert_eq!(inst.f().len(), 6);
    assert_eq!(code(&oeq(&["verify", p])), 0);
    assert_eq!(code(&oeq(&["extract", p])), 0);

    let again = dir.path().join("again.json");
    oeq(&["gen", "--seed", "9", "--dims", "2", "3", "--pairing", "random-spd", "-o", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&oeq(&["--help"])), 0);
    assert_eq!(code(&oeq(&["verify", "--help"])), 0);
}
