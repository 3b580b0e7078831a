use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::report::{CellLog, ExperimentReport, LossCurve, PcaPairDiff, ReportCell};
use crate::analysis::{centroid_from_embeddings, pair_difference_vectors, pca_fit, psed_buckets};
use crate::corpus::{load_archive, split_dataset, Segment, SegmentArchive, Splits};
use crate::error::{Error, Result};
use crate::ne::ne_encode;
use crate::retrieval::{
    as_queries, build_index, embed_archive, mean_average_precision, IndexedEmbedding,
};
use crate::sa::{encode, save_checkpoint, train, Embedding, SaModel, TrainConfig};

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    report: ExperimentReport,
    log: CellLog,
}

impl<'a> Run<'a> {
    fn start(cfg: &'a ExperimentConfig, experiment: &str) -> Result<Self> {
        let out = &cfg.out_dir;
        fs::create_dir_all(out.join("models")).map_err(|e| Error::io(out, e))?;
        cfg.save(out.join("config.json"))?;
        Ok(Self {
            cfg,
            report: ExperimentReport::new(experiment, cfg.hash(), cfg.seed),
            log: CellLog::create(out)?,
        })
    }

    fn record(&mut self, row: String, column: &str, dim: usize, map: f64) -> Result<()> {
        let cell = ReportCell {
            row,
            column: column.to_string(),
            dim,
            map,
            config_hash: self.report.config_hash.clone(),
            seed: self.report.seed,
        };
        log::info!("{} / {}: MAP {:.4}", cell.row, cell.column, cell.map);
        self.log.append(&cell)?;
        self.report.cells.push(cell);
        Ok(())
    }

    fn train(
        &mut self,
        label: &str,
        model: SaModel,
        data: &SegmentArchive,
        tc: &TrainConfig,
    ) -> Result<SaModel> {
        let (model, curve) = train(model, data, tc)?;
        save_checkpoint(
            &model,
            self.cfg
                .out_dir
                .join("models")
                .join(format!("{label}.json")),
        )?;
        self.report.loss_curves.push(LossCurve {
            label: label.to_string(),
            points: curve,
        });
        Ok(model)
    }

    fn finish(self) -> Result<ExperimentReport> {
        self.report.save(&self.cfg.out_dir)?;
        Ok(self.report)
    }
}

fn corpus_label(archive: &SegmentArchive, path: &Path) -> String {
    archive
        .segments()
        .first()
        .map(|s| s.lang.clone())
        .filter(|l| !l.is_empty())
        .unwrap_or_else(|| {
            path.file_stem()
                .map_or("corpus".into(), |s| s.to_string_lossy().into_owned())
        })
}

/// MAP of `f` with `splits.db` as the index and `splits.query` as queries.
pub fn evaluate_map<F>(splits: &Splits, f: F) -> Result<f64>
where
    F: Fn(&Segment) -> Result<Embedding> + Sync + Send,
{
    let db = embed_archive(&splits.db, &f)?;
    let queries = embed_archive(&splits.query, &f)?;
    mean_average_precision(&build_index(db)?, &as_queries(&queries))
}

/// Fits a 2-component PCA on `entries` and projects the centroid difference
/// of every word pair.
pub fn pca_pair_diffs(
    entries: &[IndexedEmbedding],
    pairs: &[(String, String)],
) -> Result<Vec<PcaPairDiff>> {
    let Some(first) = entries.first() else {
        return Err(Error::InsufficientData("no embeddings".into()));
    };
    let vectors: Vec<Vec<f64>> = entries.iter().map(|e| e.vector.to_vec()).collect();
    let proj = pca_fit(&vectors, first.vector.dim().min(2))?;
    let centroids = pairs
        .iter()
        .map(|(a, b)| {
            Ok((
                centroid_from_embeddings(entries, a)?,
                centroid_from_embeddings(entries, b)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs = pair_difference_vectors(&centroids, &proj)?;
    Ok(pairs
        .iter()
        .zip(diffs)
        .map(|((a, b), diff)| PcaPairDiff {
            word_a: a.clone(),
            word_b: b.clone(),
            diff,
        })
        .collect())
}

/// Trains one autoencoder per entry of `cfg.dims` on the source train split
/// and scores it, together with every NE configuration, on the source
/// database/query splits. Rows are `SA_{d}` and `NE_{F*m}`.
pub fn run_dimension_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate_sweep()?;
    let source = load_archive(&cfg.source_corpus)?;
    let splits = split_dataset(&source, cfg.source_split.as_ref().expect("validated"))?;
    let column = corpus_label(&source, &cfg.source_corpus);
    let f = source.feature_dim();

    let mut run = Run::start(cfg, "dimension-sweep")?;
    for &d in &cfg.dims {
        let model = run.train(
            &format!("sa_{d}"),
            SaModel::new(f, d, cfg.seed),
            &splits.train,
            &cfg.train,
        )?;
        let map = evaluate_map(&splits, |s| encode(&model, &s.features))?;
        run.record(format!("SA_{d}"), &column, d, map)?;
    }
    for &m in &cfg.ne_m {
        let map = evaluate_map(&splits, |s| Ok(ne_encode(&s.features, m)))?;
        run.record(format!("NE_{}", f * m), &column, f * m, map)?;
    }
    run.finish()
}

/// Pretrains on the source corpus and evaluates on the target corpus: the NE
/// baseline, an autoencoder trained on target fine-tune data alone, and the
/// pretrained autoencoder fine-tuned on each requested amount of target data
/// (`SA+0` is the pretrained model unchanged). Uses `cfg.dims[0]`.
pub fn run_transfer_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate_transfer()?;
    let source = load_archive(&cfg.source_corpus)?;
    let target_path = cfg.target_corpus.as_ref().expect("validated");
    let target = load_archive(target_path)?;
    if source.feature_dim() != target.feature_dim() {
        return Err(Error::ExperimentConfig(format!(
            "source features have {} dims, target features {}",
            source.feature_dim(),
            target.feature_dim()
        )));
    }
    let pretrain_data = match &cfg.source_split {
        Some(spec) => split_dataset(&source, spec)?.train,
        None => source.clone(),
    };
    let splits = split_dataset(&target, cfg.target_split.as_ref().expect("validated"))?;
    let column = corpus_label(&target, target_path);
    let f = target.feature_dim();
    let d = cfg.dims[0];
    let ft = cfg.finetune_config();

    let mut run = Run::start(cfg, "transfer")?;
    for &m in &cfg.ne_m {
        let map = evaluate_map(&splits, |s| Ok(ne_encode(&s.features, m)))?;
        let row = if cfg.ne_m.len() == 1 {
            "NE".to_string()
        } else {
            format!("NE_{}", f * m)
        };
        run.record(row, &column, f * m, map)?;
    }

    let largest = *cfg.finetune_sizes.iter().max().expect("validated");
    let scratch = run.train(
        "no-transfer",
        SaModel::new(f, d, cfg.seed),
        &splits.finetune.take(largest),
        ft,
    )?;
    let map = evaluate_map(&splits, |s| encode(&scratch, &s.features))?;
    run.record("SA-no-transfer".into(), &column, d, map)?;

    let pretrained = run.train(
        "pretrained",
        SaModel::new(f, d, cfg.seed),
        &pretrain_data,
        &cfg.train,
    )?;
    for &size in &cfg.finetune_sizes {
        let model = if size == 0 {
            pretrained.clone()
        } else {
            run.train(
                &format!("sa+{size}"),
                pretrained.clone(),
                &splits.finetune.take(size),
                ft,
            )?
        };
        let map = evaluate_map(&splits, |s| encode(&model, &s.features))?;
        run.record(format!("SA+{size}"), &column, d, map)?;
    }

    if cfg.psed.is_some() || !cfg.pca_pairs.is_empty() {
        let embeddings = embed_archive(&target, |s| encode(&pretrained, &s.features))?;
        if let Some(opts) = &cfg.psed {
            run.report.psed = Some(psed_buckets(&target, &embeddings, opts)?);
        }
        if !cfg.pca_pairs.is_empty() {
            run.report.pca = pca_pair_diffs(&embeddings, &cfg.pca_pairs)?;
        }
    }
    run.finish()
}
