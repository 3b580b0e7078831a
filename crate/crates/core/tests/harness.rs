use std::path::Path;

use awelab::analysis::PsedOptions;
use awelab::corpus::{save_archive, synth_corpus, SplitSpec, SynthPreset};
use awelab::harness::*;
use awelab::sa::TrainConfig;
use awelab::Error;

fn write_corpora(dir: &Path) {
    let mut src = SynthPreset::source(11);
    src.n_words = 10;
    src.segments_per_word = 10;
    let mut tgt = SynthPreset::target(12);
    tgt.n_words = 12;
    tgt.segments_per_word = 6;
    let (s, t) = SynthPreset::build_pair(&src, &tgt).unwrap();
    save_archive(&synth_corpus(&s).unwrap(), dir.join("src.jsonl")).unwrap();
    save_archive(&synth_corpus(&t).unwrap(), dir.join("tgt.jsonl")).unwrap();
}

fn config(dir: &Path, out: &str) -> ExperimentConfig {
    ExperimentConfig {
        source_corpus: dir.join("src.jsonl"),
        target_corpus: Some(dir.join("tgt.jsonl")),
        source_split: Some(SplitSpec {
            train_count: 50,
            db_count: 20,
            query_count: 10,
            finetune_count: 0,
            seed: 1,
        }),
        target_split: Some(SplitSpec {
            train_count: 0,
            db_count: 36,
            query_count: 8,
            finetune_count: 24,
            seed: 2,
        }),
        dims: vec![4, 8],
        ne_m: vec![3, 6],
        finetune_sizes: vec![0, 10, 20],
        train: TrainConfig {
            batch_size: 8,
            max_batches: 15,
            seed: 3,
            ..Default::default()
        },
        finetune: Some(TrainConfig {
            batch_size: 8,
            max_batches: 5,
            seed: 4,
            ..Default::default()
        }),
        out_dir: dir.join(out),
        seed: 5,
        psed: Some(PsedOptions::default()),
        pca_pairs: vec![],
    }
}

#[test]
fn dimension_sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    write_corpora(dir.path());
    let cfg = config(dir.path(), "a");
    let r1 = run_dimension_sweep(&cfg).unwrap();
    assert_eq!(r1.rows(), ["SA_4", "SA_8", "NE_117", "NE_234"]);
    assert_eq!(r1.cell("NE_117").unwrap().dim, 117);
    assert_eq!(r1.cell("NE_234").unwrap().dim, 234);
    assert!(r1
        .cells
        .iter()
        .all(|c| c.column == "src" && c.config_hash == cfg.hash() && c.seed == 5));
    assert_eq!(r1.loss_curves.len(), 2);
    assert!(dir.path().join("a/models/sa_8.json").exists());

    let cfg2 = ExperimentConfig {
        out_dir: dir.path().join("b"),
        ..cfg.clone()
    };
    let r2 = run_dimension_sweep(&cfg2).unwrap();
    for (a, b) in r1.cells.iter().zip(&r2.cells) {
        assert_eq!(a.map.to_bits(), b.map.to_bits());
    }
    assert_eq!(
        load_cells(dir.path().join("a/cells.jsonl")).unwrap(),
        r1.cells
    );
    assert_eq!(
        ExperimentReport::load(dir.path().join("a/report.json")).unwrap(),
        r1
    );
    assert!(std::fs::read_to_string(dir.path().join("a/report.txt"))
        .unwrap()
        .contains("NE_234"));
}

#[test]
fn transfer_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_corpora(dir.path());
    let mut cfg = config(dir.path(), "t");
    cfg.ne_m = vec![6];
    let r = run_transfer_experiment(&cfg).unwrap();
    assert_eq!(r.rows(), ["NE", "SA-no-transfer", "SA+0", "SA+10", "SA+20"]);
    assert!(r
        .cells
        .iter()
        .all(|c| c.column == "tgt" && (0.0..=1.0).contains(&c.map)));
    let psed = r.psed.as_ref().unwrap();
    assert_eq!(psed.buckets[0].distance, 0);
    assert!(psed.total_pairs() > 0);
    for m in ["pretrained", "no-transfer", "sa+10", "sa+20"] {
        assert!(
            dir.path()
                .join("t/models")
                .join(format!("{m}.json"))
                .exists(),
            "{m}"
        );
    }
    let rerun = run_transfer_experiment(&cfg).unwrap();
    assert_eq!(rerun, r);
}

#[test]
fn aborted_run_keeps_finished_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_corpora(dir.path());
    let mut cfg = config(dir.path(), "x");
    cfg.pca_pairs = vec![("no.such".into(), "word".into())];
    let err = run_transfer_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::UnknownWord(_)), "{err}");
    let cells = load_cells(dir.path().join("x/cells.jsonl")).unwrap();
    assert_eq!(cells.len(), 6);
    assert!(cells
        .iter()
        .all(|c| c.config_hash == cfg.hash() && c.seed == cfg.seed));
    assert!(!dir.path().join("x/report.json").exists());
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_corpora(dir.path());
    let base = config(dir.path(), "v");

    let cfg = ExperimentConfig {
        dims: vec![],
        ..base.clone()
    };
    assert!(matches!(
        run_dimension_sweep(&cfg),
        Err(Error::ExperimentConfig(_))
    ));
    let cfg = ExperimentConfig {
        source_corpus: dir.path().join("missing.jsonl"),
        ..base.clone()
    };
    assert!(matches!(
        run_dimension_sweep(&cfg),
        Err(Error::ExperimentConfig(_))
    ));
    let cfg = ExperimentConfig {
        finetune_sizes: vec![0, 100],
        ..base.clone()
    };
    assert!(matches!(
        run_transfer_experiment(&cfg),
        Err(Error::ExperimentConfig(_))
    ));
    let cfg = ExperimentConfig {
        finetune_sizes: vec![0],
        ..base.clone()
    };
    assert!(matches!(
        run_transfer_experiment(&cfg),
        Err(Error::ExperimentConfig(_))
    ));
    let cfg = ExperimentConfig {
        target_corpus: None,
        ..base
    };
    assert!(matches!(
        run_transfer_experiment(&cfg),
        Err(Error::ExperimentConfig(_))
    ));
}

#[test]
fn config_load_resolves_relative_paths_and_hash_tracks_content() {
    let dir = tempfile::tempdir().unwrap();
    write_corpora(dir.path());
    let mut cfg = config(dir.path(), "r");
    cfg.source_corpus = "src.jsonl".into();
    cfg.target_corpus = Some("tgt.jsonl".into());
    cfg.out_dir = "r".into();
    let path = dir.path().join("exp.json");
    cfg.save(&path).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded.source_corpus, dir.path().join("src.jsonl"));
    assert_eq!(loaded.out_dir, dir.path().join("r"));
    assert_eq!(loaded.hash().len(), 64);
    let other = ExperimentConfig {
        seed: 6,
        ..loaded.clone()
    };
    assert_ne!(other.hash(), loaded.hash());
    assert_eq!(loaded.clone().hash(), loaded.hash());
}
