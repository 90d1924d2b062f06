use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sac-oie"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_input_exits_one_and_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["score", "--scheme", "exact", "--pred", "absent.jsonl", "--gold", &fixture("five_gold.jsonl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.jsonl"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["score", "--scheme", "rouge"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
    let o = run(dir.path(), &["--set", "train.epochs=zero", "gen-toy", "--out-dir", "."]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = run(dir.path(), &["--workers", "0", "gen-toy", "--out-dir", "."]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unknown_extension_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gold.xml"), "<x/>").unwrap();
    let o = run(dir.path(), &["score", "--scheme", "exact", "--pred", "gold.xml", "--gold", "gold.xml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("extension"), "{}", stderr(&o));
}

#[test]
fn malformed_records_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "{\"id\": \"s1\", \"tokens\": [\"a\"]}\n").unwrap();
    let o = run(dir.path(), &["score", "--scheme", "exact", "--pred", "bad.jsonl", "--gold", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn gold_scored_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gold = fixture("five_gold.jsonl");
    for scheme in ["exact", "carb", "benchie"] {
        let o = run(dir.path(), &["score", "--scheme", scheme, "--pred", &gold, "--gold", &gold]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        for key in ["precision", "recall", "f1"] {
            assert!(text.contains(&format!("{key:<10} 100.00")), "{scheme}: {text}");
        }
    }
}

#[test]
fn score_report_matches_committed_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["score", "--scheme", "carb", "--pred", &fixture("five_pred.jsonl"), "--gold", &fixture("five_gold.jsonl"), "--auc"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(fixture("five_carb_report.txt")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), golden);
}

#[test]
fn conversions_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(run(p, &["gen-toy", "--out-dir", ".", "--dim", "8", "--count", "6"]).status.success());
    for (args, out) in [
        (vec!["convert", "--in", "toy.conll", "--to", "chunks", "--out", "a.chunks.jsonl"], "a.chunks.jsonl"),
        (vec!["convert", "--in", "toy.jsonl", "--to", "conllu", "--out", "a.conllu"], "a.conllu"),
        (
            vec!["convert", "--in", "toy.jsonl", "--to", "conll2000", "--chunks", "toy.chunks.jsonl", "--out", "b.conll"],
            "b.conll",
        ),
        (vec!["convert", "--in", "toy.jsonl", "--to", "tuples", "--out", "b.jsonl"], "b.jsonl"),
    ] {
        let o = run(p, &args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        assert!(p.join(out).exists());
    }
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.chunks.jsonl"), read("toy.chunks.jsonl"));
    assert_eq!(read("b.conll"), read("toy.conll"));
    assert_eq!(read("b.jsonl"), read("toy.jsonl"));
    let o = run(p, &["convert", "--in", "a.conllu", "--to", "chunks", "--out", "c.jsonl"]);
    assert_eq!(o.status.code(), Some(1), "CoNLL-U carries no chunks");
}

#[test]
fn alignment_table_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(run(p, &["gen-toy", "--out-dir", ".", "--dim", "8"]).status.success());
    let table = run(p, &["analyze-alignment", "--chunks", "toy.chunks.jsonl", "--gold", "toy.jsonl"]);
    let json = run(p, &["analyze-alignment", "--chunks", "toy.chunks.jsonl", "--gold", "toy.jsonl", "--format", "json"]);
    assert!(table.status.success() && json.status.success());
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let f1 = v["f1"].as_f64().unwrap();
    let table = String::from_utf8(table.stdout).unwrap();
    assert!(table.contains(&format!("F1={f1:.1}")), "{table}");
}
