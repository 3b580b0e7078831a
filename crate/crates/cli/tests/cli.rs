use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use awelab::corpus::{save_archive, synth_corpus, SplitSpec, SynthPreset};
use awelab::harness::{run_dimension_sweep, ExperimentConfig};
use awelab::retrieval::{as_queries, build_index, load_embeddings, mean_average_precision};
use awelab::sa::TrainConfig;

fn awelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awelab"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = awelab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_json(path: &Path, v: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string(v).unwrap()).unwrap();
}

fn small_corpus(dir: &Path) -> std::path::PathBuf {
    let mut preset = SynthPreset::source(21);
    preset.n_words = 8;
    preset.segments_per_word = 10;
    let path = dir.join("src.jsonl");
    save_archive(&synth_corpus(&preset.build(&[]).unwrap()).unwrap(), &path).unwrap();
    path
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = awelab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(awelab(&["train"]).status.code(), Some(2));
}

#[test]
fn operational_errors_exit_one() {
    let out = awelab(&[
        "encode",
        "--model",
        "/nonexistent/m.json",
        "--archive",
        "/nonexistent/a.jsonl",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn gradcheck_reports_and_passes() {
    for seed in ["7", "8"] {
        let stdout = ok(&["gradcheck", "--seed", seed]);
        assert!(stdout.starts_with("max relative error"), "{stdout}");
    }
}

#[test]
fn file_pipeline_matches_in_process_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = small_corpus(d);
    let split = SplitSpec {
        train_count: 40,
        db_count: 24,
        query_count: 8,
        finetune_count: 0,
        seed: 3,
    };
    let tc = TrainConfig {
        batch_size: 8,
        max_batches: 12,
        seed: 4,
        ..Default::default()
    };
    let cfg = ExperimentConfig {
        source_corpus: corpus.clone(),
        target_corpus: None,
        source_split: Some(split),
        target_split: None,
        dims: vec![6],
        ne_m: vec![3],
        finetune_sizes: vec![],
        train: tc.clone(),
        finetune: None,
        out_dir: d.join("sweep"),
        seed: 9,
        psed: None,
        pca_pairs: vec![],
    };
    let report = run_dimension_sweep(&cfg).unwrap();

    write_json(&d.join("split.json"), &split);
    write_json(&d.join("train.json"), &tc);
    let sp = d.join("splits");
    ok(&[
        "split",
        "--archive",
        p(&corpus),
        "--config",
        p(&d.join("split.json")),
        "--out",
        p(&sp),
    ]);
    let model = d.join("m.json");
    ok(&[
        "train",
        "--archive",
        p(&sp.join("train.jsonl")),
        "--dim",
        "6",
        "--config",
        p(&d.join("train.json")),
        "--seed",
        "9",
        "--out",
        p(&model),
    ]);
    assert_eq!(
        std::fs::read(&model).unwrap(),
        std::fs::read(d.join("sweep/models/sa_6.json")).unwrap()
    );

    for part in ["db", "query"] {
        ok(&[
            "encode",
            "--model",
            p(&model),
            "--archive",
            p(&sp.join(format!("{part}.jsonl"))),
            "--out",
            p(&d.join(format!("{part}.emb"))),
        ]);
    }
    ok(&[
        "index",
        "--embeddings",
        p(&d.join("db.emb")),
        "--out",
        p(&d.join("db.idx")),
    ]);
    let printed = ok(&[
        "eval-map",
        "--index",
        p(&d.join("db.idx")),
        "--queries",
        p(&d.join("query.emb")),
    ]);
    let sa = report.cell("SA_6").unwrap().map;
    assert_eq!(printed.trim(), format!("{sa:.4}"));
    let index = build_index(load_embeddings(d.join("db.idx")).unwrap()).unwrap();
    let q = load_embeddings(d.join("query.emb")).unwrap();
    assert_eq!(
        mean_average_precision(&index, &as_queries(&q))
            .unwrap()
            .to_bits(),
        sa.to_bits()
    );

    for part in ["db", "query"] {
        ok(&[
            "ne-encode",
            "--m",
            "3",
            "--archive",
            p(&sp.join(format!("{part}.jsonl"))),
            "--out",
            p(&d.join(format!("{part}.ne"))),
        ]);
    }
    let printed = ok(&[
        "eval-map",
        "--index",
        p(&d.join("db.ne")),
        "--queries",
        p(&d.join("query.ne")),
    ]);
    assert_eq!(
        printed.trim(),
        format!("{:.4}", report.cell("NE_117").unwrap().map)
    );
}

#[test]
fn search_psed_and_pca() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = small_corpus(d);
    let emb = d.join("all.ne");
    ok(&[
        "ne-encode",
        "--archive",
        p(&corpus),
        "--m",
        "2",
        "--out",
        p(&emb),
    ]);
    let entries = load_embeddings(&emb).unwrap();
    let (first, second) = (&entries[0], &entries[1]);

    let stdout = ok(&["search", "--index", p(&emb), "--k", "3", &first.id]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], format!("# {}", first.id));
    assert!(lines[1].starts_with(&format!("1\t{}\t", first.id)));

    let mut child = Command::new(env!("CARGO_BIN_EXE_awelab"))
        .args(["search", "--index", p(&emb), "--k", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.take().unwrap(), "{}\n{}", first.id, second.id).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .filter(|l| l.starts_with('#'))
            .count(),
        2
    );

    let table = ok(&[
        "analyze-psed",
        "--archive",
        p(&corpus),
        "--embeddings",
        p(&emb),
    ]);
    assert!(table.starts_with("distance, pair_count, mean_cosine, variance\n0, "));
    assert_eq!(table.lines().count(), 6);

    let words: Vec<&str> = {
        let mut w: Vec<&str> = entries.iter().map(|e| e.word.as_str()).collect();
        w.dedup();
        w
    };
    let pair = format!("{},{}", words[0], words[1]);
    let same = format!("{},{}", words[0], words[0]);
    let stdout = ok(&[
        "pca-pairs",
        "--embeddings",
        p(&emb),
        "--pair",
        &pair,
        "--pair",
        &same,
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "word_a, word_b, dx, dy");
    assert_eq!(
        lines[2],
        format!("{}, {}, 0.000000, 0.000000", words[0], words[0])
    );
}

#[test]
fn synth_presets_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&[
        "synth",
        "--preset",
        "pair",
        "--seed",
        "3",
        "--out",
        p(&d.join("pair")),
    ]);
    let src = awelab::corpus::load_archive(d.join("pair/source.jsonl")).unwrap();
    let tgt = awelab::corpus::load_archive(d.join("pair/target.jsonl")).unwrap();
    assert_eq!(src.len(), 2000);
    assert_eq!(src.words().len(), 40);
    assert!(src.words().is_disjoint(&tgt.words()));

    ok(&[
        "synth",
        "--preset",
        "target",
        "--seed",
        "3",
        "--out",
        p(&d.join("t.jsonl")),
    ]);
    assert_eq!(
        std::fs::read(d.join("t.jsonl")).unwrap(),
        std::fs::read(d.join("pair/target.jsonl")).unwrap()
    );

    write_json(
        &d.join("split.json"),
        &SplitSpec {
            train_count: 0,
            db_count: 100,
            query_count: 20,
            finetune_count: 30,
            seed: 1,
        },
    );
    let stdout = ok(&[
        "split",
        "--archive",
        p(&d.join("t.jsonl")),
        "--config",
        p(&d.join("split.json")),
        "--out",
        p(&d.join("s")),
    ]);
    assert_eq!(stdout, "train: 0\ndb: 100\nquery: 20\nfinetune: 30\n");
}
