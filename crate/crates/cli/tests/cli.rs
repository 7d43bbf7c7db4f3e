//! End-to-end tests of the `cswitch` binary.

use std::path::Path;
use std::process::{Command, Output};

fn cswitch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cswitch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn write(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).unwrap();
}

const CORPUS: &str = "alarm\tset alarm for nine am\t[IN:CREATE_ALARM set alarm [SL:DATE_TIME for nine am ] ]\n\
     weather\tweather in paris today\t[IN:GET_WEATHER weather in [SL:LOCATION paris ] today ]\n\
     alarm\twake me at five\t[IN:CREATE_ALARM wake me [SL:DATE_TIME at five ] ]\n";

#[test]
fn ingest_reports_rejects_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "corpus.tsv",
        &format!("{CORPUS}alarm\tbroken\t[IN:BAD broken\n"),
    );
    let out = cswitch(
        dir.path(),
        &[
            "ingest",
            "--input",
            "corpus.tsv",
            "--rejects",
            "rejects.jsonl",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("accepted            3"), "{text}");
    assert!(text.contains("rejected            1"), "{text}");
    let rejects = std::fs::read_to_string(dir.path().join("rejects.jsonl")).unwrap();
    assert!(rejects.contains("\"line\":4"), "{rejects}");
}

#[test]
fn ingest_header_and_dedup_flags() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "corpus.tsv",
        &format!("domain\tutterance\tsemantic_parse\n{CORPUS}{CORPUS}"),
    );
    let out = cswitch(
        dir.path(),
        &["ingest", "--input", "corpus.tsv", "--header", "--dedup"],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("accepted            3"), "{text}");
    assert!(text.contains("duplicates dropped  3"), "{text}");
}

#[test]
fn column_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", "alarm\tonly two columns\n");
    let out = cswitch(dir.path(), &["ingest", "--input", "corpus.tsv"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("line 1"));
}

#[test]
fn unknown_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = cswitch(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cswitch(dir.path(), &["ingest", "--bogus-flag", "x"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cswitch(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn mark_generate_filter_align_chain() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", CORPUS);
    write(dir.path(), "table.tsv", "set\tkaro\nfor\tke liye\ntoday\taaj\n");

    let out = cswitch(
        dir.path(),
        &["mark", "--input", "corpus.tsv", "--output", "marked.tsv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let out = cswitch(
        dir.path(),
        &[
            "generate",
            "--marked",
            "marked.tsv",
            "--output",
            "records.jsonl",
            "--backend-kind",
            "mock",
            "--mock-mode",
            "faithful",
            "--mock-table",
            "table.tsv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let out = cswitch(
        dir.path(),
        &[
            "filter",
            "--records",
            "records.jsonl",
            "--marked",
            "marked.tsv",
            "--out-dir",
            "fout",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("throughput  100.0%"));

    let out = cswitch(
        dir.path(),
        &[
            "align",
            "--accepted",
            "fout/accepted.jsonl",
            "--marked",
            "marked.tsv",
            "--output",
            "augmented.tsv",
            "--rejects",
            "arej.jsonl",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let augmented = std::fs::read_to_string(dir.path().join("augmented.tsv")).unwrap();
    assert_eq!(augmented.lines().count(), 3);
    assert!(augmented.contains("karo alarm ke liye nine am"));
    assert!(augmented.contains("[SL:DATE_TIME ke liye nine am ]"));
}

#[test]
fn generate_resumes_from_existing_records() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", CORPUS);
    let out = cswitch(
        dir.path(),
        &["mark", "--input", "corpus.tsv", "--output", "marked.tsv"],
    );
    assert!(out.status.success());
    let args = [
        "generate",
        "--marked",
        "marked.tsv",
        "--output",
        "records.jsonl",
        "--backend-kind",
        "mock",
    ];
    let out = cswitch(dir.path(), &args);
    assert!(stdout(&out).contains("generated 3 record(s) (0 already in checkpoint)"));
    let out = cswitch(dir.path(), &args);
    assert!(
        stdout(&out).contains("generated 0 record(s) (3 already in checkpoint)"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn unreachable_backend_is_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", CORPUS);
    let out = cswitch(
        dir.path(),
        &["mark", "--input", "corpus.tsv", "--output", "marked.tsv"],
    );
    assert!(out.status.success());
    let out = cswitch(
        dir.path(),
        &[
            "generate",
            "--marked",
            "marked.tsv",
            "--output",
            "records.jsonl",
            "--backend-kind",
            "http",
            "--url",
            "http://127.0.0.1:9/generate",
            "--retries",
            "0",
            "--timeout-s",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn strict_containment_flag_switches_to_four_rule_filtering() {
    let dir = tempfile::tempdir().unwrap();
    // One nested utterance; the candidate flattens the containment.
    write(
        dir.path(),
        "marked.tsv",
        "u000001\talarm\tx [ y [ z ]_2 ]_1\t[IN:A x [SL:B y [IN:C z ] ] ]\n",
    );
    write(
        dir.path(),
        "records.jsonl",
        "{\"id\":\"u000001\",\"domain\":\"alarm\",\"marked_text\":\"x [ y [ z ]_2 ]_1\",\
         \"status\":\"candidate\",\"text\":\"x [ y ]_1 [ z ]_2\",\"backend_info\":\"test\"}\n",
    );
    let out = cswitch(
        dir.path(),
        &[
            "filter",
            "--records",
            "records.jsonl",
            "--marked",
            "marked.tsv",
            "--out-dir",
            "strict",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rejected: MismatchedContainment  1"));

    let out = cswitch(
        dir.path(),
        &[
            "filter",
            "--records",
            "records.jsonl",
            "--marked",
            "marked.tsv",
            "--out-dir",
            "relaxed",
            "--strict-containment",
            "false",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("throughput  100.0%"));
}

#[test]
fn augment_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", &CORPUS.repeat(10));
    write(dir.path(), "english.txt", "alarm\nweather\nparis\nset\n");
    write(dir.path(), "hindi.txt", "karo\nmausam\naaj\n");
    write(dir.path(), "table.tsv", "set\tkaro\ntoday\taaj\n");
    write(
        dir.path(),
        "cfg.toml",
        r#"
rng_seed = 7

[paths]
corpus_in = "corpus.tsv"
lexicon_a = "english.txt"
lexicon_b = "hindi.txt"

[backend]
kind = "mock"
mock_mode = "faithful"
mock_table = "table.tsv"
"#,
    );
    for out_dir in ["out_a", "out_b"] {
        let out = cswitch(
            dir.path(),
            &["augment", "--config", "cfg.toml", "--out-dir", out_dir],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in [
        "augmented.tsv",
        "records.jsonl",
        "filter_rejected.jsonl",
        "throughput.json",
        "throughput.txt",
        "stats.json",
        "stats.txt",
        "summary.json",
    ] {
        let a = std::fs::read(dir.path().join("out_a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("out_b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn eval_prints_per_domain_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "gold.tsv",
        "alarm\tx\t[IN:A x ]\nalarm\ty\t[IN:B y ]\nweather\tz\t[IN:C z ]\nweather\tw\t[IN:D w ]\n",
    );
    write(
        dir.path(),
        "pred.tsv",
        "alarm\tx\t[IN:A x ]\nalarm\ty\t[IN:FLIP y ]\nweather\tz\t[IN:C z ]\nweather\tw\t[IN:D w ]\n",
    );
    let out = cswitch(
        dir.path(),
        &[
            "eval",
            "--pred",
            "pred.tsv",
            "--gold",
            "gold.tsv",
            "--json-out",
            "eval.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("overall  75.0%"), "{text}");
    assert!(text.contains("alarm    50.0% (1/2)"), "{text}");
    assert!(text.contains("weather  100.0% (2/2)"), "{text}");
    let json = std::fs::read_to_string(dir.path().join("eval.json")).unwrap();
    assert!(json.contains("\"overall_em\": 0.75"));
}

#[test]
fn unparseable_gold_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gold.tsv", "alarm\tx\t[IN:A x\n");
    write(dir.path(), "pred.tsv", "alarm\tx\t[IN:A x ]\n");
    let out = cswitch(dir.path(), &["eval", "--pred", "pred.tsv", "--gold", "gold.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gold parse on line 1"));
}

#[test]
fn splits_are_nested_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", &CORPUS.repeat(20)); // 60 rows
    for out_dir in ["sp_a", "sp_b"] {
        let out = cswitch(
            dir.path(),
            &[
                "splits",
                "--input",
                "corpus.tsv",
                "--sizes",
                "10,30",
                "--out-dir",
                out_dir,
                "--rng-seed",
                "11",
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let small = std::fs::read_to_string(dir.path().join("sp_a/seed_10.tsv")).unwrap();
    let large = std::fs::read_to_string(dir.path().join("sp_a/seed_30.tsv")).unwrap();
    assert_eq!(small.lines().count(), 10);
    assert_eq!(large.lines().count(), 30);
    let large_set: std::collections::HashSet<&str> = large.lines().collect();
    assert!(small.lines().all(|line| large_set.contains(line)));
    assert_eq!(
        std::fs::read(dir.path().join("sp_a/seed_30.tsv")).unwrap(),
        std::fs::read(dir.path().join("sp_b/seed_30.tsv")).unwrap()
    );
}

#[test]
fn stats_reads_plain_lines() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "english.txt", "the\nweather\n");
    write(dir.path(), "hindi.txt", "mausam\nkaisa\nhai\n");
    write(dir.path(), "cs.txt", "the mausam kaisa hai\nweather 9\n");
    let out = cswitch(
        dir.path(),
        &[
            "stats",
            "--input",
            "cs.txt",
            "--format",
            "lines",
            "--lexicon-a",
            "english.txt",
            "--lexicon-b",
            "hindi.txt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("english vocabulary size"), "{text}");
    assert!(text.contains("Total utterances                        2"), "{text}");
}

#[test]
fn export_seed_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.tsv", &CORPUS.repeat(4));
    let cs_line = "cs [ tokens here ]_1\n";
    write(dir.path(), "cs.txt", &cs_line.repeat(12));
    for output in ["seed_a.tsv", "seed_b.tsv"] {
        let out = cswitch(
            dir.path(),
            &[
                "export-seed",
                "--corpus",
                "corpus.tsv",
                "--cs",
                "cs.txt",
                "--size",
                "6",
                "--output",
                output,
                "--rng-seed",
                "3",
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(dir.path().join("seed_a.tsv")).unwrap(),
        std::fs::read(dir.path().join("seed_b.tsv")).unwrap()
    );
}
