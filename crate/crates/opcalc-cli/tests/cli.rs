//! End-to-end checks of the binary: recorded outputs, exit codes, format
//! round trips, and byte-for-byte determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opcalc_cli::output::{DimReport, DimRow};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .and_then(Path::parent)
        .expect("workspace root")
        .to_path_buf()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn opcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcalc"))
        .args(args)
        .current_dir(repo_root())
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = opcalc(args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is utf8")
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let out = opcalc(args);
    (
        out.status.code().expect("an exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn dual_of_the_commutative_operad_is_recorded() {
    let csv = stdout(&[
        "dual", "--operad", "comm-nu", "--max-arity", "4", "--field", "q", "--format", "csv",
    ]);
    assert_eq!(csv, "arity,degree,dim\n2,1,1\n3,2,2\n4,3,6\n");
}

#[test]
fn composition_counts_set_partitions() {
    let csv = stdout(&[
        "compose", "--left", "comm-nu", "--right", "comm-nu", "--max-arity", "4", "--format",
        "csv",
    ]);
    assert_eq!(csv, "arity,degree,dim\n1,0,1\n2,0,2\n3,0,5\n4,0,15\n");
    let table = stdout(&[
        "compose", "--left", "comm-nu", "--right", "comm-nu", "--max-arity", "4",
    ]);
    assert_eq!(
        table,
        "arity  degree  dim\n\
         1      0       1\n\
         2      0       2\n\
         3      0       5\n\
         4      0       15\n"
    );
}

#[test]
fn primitives_mod_two_sit_at_powers_of_two() {
    let csv = stdout(&[
        "primitives", "--char", "2", "--gens", "1:1", "--max-degree", "8", "--format", "csv",
    ]);
    assert_eq!(csv, "degree,dim\n1,1\n2,1\n3,0\n4,1\n5,0\n6,0\n7,0\n8,1\n");
}

#[test]
fn json_output_reparses_into_the_same_value() {
    let s = stdout(&[
        "dual", "--operad", "comm-nu", "--max-arity", "4", "--format", "json",
    ]);
    let parsed: DimReport = serde_json::from_str(&s).expect("parses back");
    let expected = DimReport {
        rows: vec![
            DimRow {
                arity: 2,
                degree: 1,
                dim: 1,
            },
            DimRow {
                arity: 3,
                degree: 2,
                dim: 2,
            },
            DimRow {
                arity: 4,
                degree: 3,
                dim: 6,
            },
        ],
    };
    assert_eq!(parsed, expected);
    let mut again = serde_json::to_string_pretty(&parsed).unwrap();
    again.push('\n');
    assert_eq!(again, s);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let args = [
        "tower", "--operad", "comm-nu", "--max-arity", "4", "--max-stage", "3", "--format",
        "json",
    ];
    let first = stdout(&args);
    let second = stdout(&args);
    assert_eq!(first, second);
    let threaded = Command::new(env!("CARGO_BIN_EXE_opcalc"))
        .args(args)
        .env("OPCALC_THREADS", "4")
        .current_dir(repo_root())
        .output()
        .expect("binary runs");
    assert!(threaded.status.success());
    assert_eq!(String::from_utf8(threaded.stdout).unwrap(), first);
}

#[test]
fn invalid_inputs_exit_with_code_two() {
    let (code, err) = exit_code(&["dual", "--operad", "nope", "--max-arity", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown operad"), "{err}");

    let (code, err) = exit_code(&["dual", "--operad", "comm-nu", "--max-arity", "9"]);
    assert_eq!(code, 2);
    assert!(err.contains("cells"), "{err}");

    let (code, _) = exit_code(&[
        "dual", "--operad", "comm-nu", "--max-arity", "4", "--min-deg", "-40", "--max-deg", "0",
    ]);
    assert_eq!(code, 2);

    // clap's own parse failures use the same code
    let (code, _) = exit_code(&["dual", "--no-such-flag"]);
    assert_eq!(code, 2);
    let (code, _) = exit_code(&[]);
    assert_eq!(code, 2);
}

#[test]
fn inconsistent_presentations_exit_with_code_three() {
    let file = data("inconsistent.json");
    let (code, err) = exit_code(&["dual", "--operad-json", &file, "--max-arity", "3"]);
    assert_eq!(code, 3);
    assert!(err.contains("inconsistent relation"), "{err}");
}

#[test]
fn presented_lie_operad_dualizes_from_a_file() {
    let file = data("lie.json");
    let csv = stdout(&["dual", "--operad-json", &file, "--max-arity", "3", "--format", "csv"]);
    assert_eq!(csv, "arity,degree,dim\n2,1,1\n3,2,1\n");
}

#[test]
fn lie_presentations_load_from_a_file() {
    let file = data("heisenberg.json");
    let csv = stdout(&["envelope", "--lie-json", &file, "--max-degree", "3", "--format", "csv"]);
    assert_eq!(csv, "degree,dim\n0,1\n1,2\n2,4\n3,6\n");
    let builtin = stdout(&["envelope", "--lie", "heisenberg", "--max-degree", "3", "--format", "csv"]);
    assert_eq!(csv, builtin);
}

#[test]
fn one_sided_brackets_are_rejected_as_input() {
    let dir = std::env::temp_dir().join(format!("opcalc-lie-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("onesided.json");
    std::fs::write(
        &path,
        r#"{"field": "Q",
            "generators": [{"label": "x", "degree": 1}, {"label": "y", "degree": 1},
                           {"label": "z", "degree": 2}],
            "brackets": [{"left": "x", "right": "y", "value": [{"gen": "z", "coeff": "1"}]}]}"#,
    )
    .unwrap();
    let (code, err) = exit_code(&[
        "envelope",
        "--lie-json",
        path.to_str().unwrap(),
        "--max-degree",
        "3",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("antisymmetric"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sequences_load_from_a_file() {
    let file = data("seq.json");
    let csv = stdout(&[
        "compose", "--left", &file, "--right", &file, "--max-arity", "3", "--format", "csv",
    ]);
    assert_eq!(csv, "arity,degree,dim\n1,0,1\n2,0,4\n3,0,12\n");
}

#[test]
fn milnor_moore_fails_honestly_in_characteristic_two() {
    let out = stdout(&[
        "mm-check", "--lie", "abelian", "--gens", "1:1", "--field", "f2", "--max-degree", "2",
    ]);
    assert!(out.contains("all_iso: false"), "{out}");
    assert!(out.contains("primitively_generated: true"), "{out}");
}

#[test]
fn the_axiom_checker_passes_every_builtin() {
    let table = stdout(&["check"]);
    assert_eq!(
        table,
        "triv: ok\ncomm-nu: ok\nass-nu: ok\nlie: ok\nlie-shifted: ok\n"
    );
}

#[test]
fn corpus_replay_passes() {
    let corpus = repo_root().join("corpus");
    let out = stdout(&["--seed-corpus", corpus.to_str().unwrap()]);
    assert!(out.lines().count() >= 8, "{out}");
    assert!(out.lines().all(|l| l.ends_with(": ok")), "{out}");
}

#[test]
fn corpus_mismatches_exit_with_code_three() {
    let dir = std::env::temp_dir().join(format!("opcalc-corpus-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("stale.json"),
        r#"{"argv": ["check", "--operad", "triv"], "expected": "something else\n"}"#,
    )
    .unwrap();
    let (code, err) = exit_code(&["--seed-corpus", dir.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("corpus"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}
