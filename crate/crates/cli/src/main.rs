use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use awelab::analysis::{psed_buckets, PsedOptions};
use awelab::corpus::{
    load_archive, save_archive, split_dataset, synth_corpus, SplitSpec, SynthConfig, SynthPreset,
};
use awelab::harness::{
    pca_pair_diffs, run_dimension_sweep, run_transfer_experiment, ExperimentConfig,
};
use awelab::ne::{ne_encode, NeConfig};
use awelab::retrieval::{
    as_queries, build_index, embed_archive, load_embeddings, mean_average_precision,
    save_embeddings,
};
use awelab::sa::{
    encode, gradient_check, load_checkpoint, save_checkpoint, train, SaModel, TrainConfig,
};
use awelab::{corpus::FeatureSequence, par};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde::de::DeserializeOwned;
use serde_json::from_str;

#[derive(Parser)]
#[command(
    name = "awelab",
    version,
    about = "Acoustic word embedding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Source,
    Target,
    Pair,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic segment archive.
    Synth {
        /// Synthesis config (JSON).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in preset; `pair` writes source.jsonl and target.jsonl into --out.
        #[arg(long, required_unless_present = "config")]
        preset: Option<Preset>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition an archive into train/db/query/finetune archives in --out.
    Split {
        #[arg(long)]
        archive: PathBuf,
        /// Split spec (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an autoencoder from scratch.
    Train {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        dim: usize,
        /// Training config (JSON); defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Initialisation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue training a checkpoint on a (small) archive.
    Finetune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use only the first N segments of the archive.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every segment with a trained encoder.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every segment with the partition-average baseline.
    NeEncode {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an embedding file as a retrieval index and write it to --out.
    Index {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the index against query ids given as arguments or, one per line, on stdin.
    Search {
        #[arg(long)]
        index: PathBuf,
        /// Embedding file holding the query ids; defaults to the index itself.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        ids: Vec<String>,
    },
    /// Mean average precision of queries against an index.
    EvalMap {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
    },
    /// Cosine similarity statistics by phoneme edit distance.
    AnalyzePsed {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_distance: usize,
        /// Sample this many random pairs instead of enumerating all pairs.
        #[arg(long)]
        sample_pairs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projected centroid differences for word pairs.
    PcaPairs {
        #[arg(long)]
        embeddings: PathBuf,
        /// Word pair as `WORD_A,WORD_B`; repeatable.
        #[arg(long = "pair", required = true, value_parser = parse_pair)]
        pairs: Vec<(String, String)>,
    },
    /// Compare backpropagated gradients against finite differences on a random instance.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
    },
    /// Train one autoencoder per configured dimension and report MAP.
    SweepDim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pretrain on the source corpus and evaluate transfer to the target corpus.
    TransferExp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(format!("expected WORD_A,WORD_B, got `{s}`")),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn train_config(path: Option<&Path>) -> Result<TrainConfig> {
    path.map_or_else(|| Ok(TrainConfig::default()), read_json)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn experiment_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    Ok(cfg)
}

fn synth(
    config: Option<PathBuf>,
    preset: Option<Preset>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    if let Some(path) = config {
        let mut cfg: SynthConfig = read_json(&path)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let archive = synth_corpus(&cfg)?;
        save_archive(&archive, out)?;
        println!("{} segments -> {}", archive.len(), out.display());
        return Ok(());
    }
    let seed = seed.unwrap_or(0);
    let (src, tgt) =
        SynthPreset::build_pair(&SynthPreset::source(seed), &SynthPreset::target(seed + 1))?;
    match preset.expect("clap requires --preset without --config") {
        Preset::Source => save_archive(&synth_corpus(&src)?, out)?,
        Preset::Target => save_archive(&synth_corpus(&tgt)?, out)?,
        Preset::Pair => {
            create_dir(out)?;
            save_archive(&synth_corpus(&src)?, out.join("source.jsonl"))?;
            save_archive(&synth_corpus(&tgt)?, out.join("target.jsonl"))?;
        }
    }
    Ok(())
}

fn search(index: &Path, queries: Option<&Path>, k: usize, ids: Vec<String>) -> Result<()> {
    let entries = load_embeddings(index)?;
    let pool = match queries {
        Some(q) => load_embeddings(q)?,
        None => entries.clone(),
    };
    let index = build_index(entries)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut run = |id: &str| -> Result<()> {
        let Some(q) = pool.iter().find(|e| e.id == id) else {
            bail!("unknown query id `{id}`");
        };
        writeln!(out, "# {id}")?;
        for (rank, (hit, score)) in index.query(&q.vector, Some(k))?.hits().iter().enumerate() {
            writeln!(out, "{}\t{hit}\t{score:.6}", rank + 1)?;
        }
        out.flush()?;
        Ok(())
    };
    if ids.is_empty() {
        for line in io::stdin().lock().lines() {
            let line = line?;
            let id = line.trim();
            if !id.is_empty() {
                run(id)?;
            }
        }
    } else {
        for id in &ids {
            run(id)?;
        }
    }
    Ok(())
}

fn gradcheck(seed: u64, eps: f64) -> Result<bool> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = [4, 8, 16][rng.random_range(0..3)];
    let f = [3, 5, 39][rng.random_range(0..3)];
    let t = [1, 2, 7, 50][rng.random_range(0..4)];
    let model = SaModel::new(f, d, rng.random());
    let frames = ndarray::Array2::from_shape_simple_fn((t, f), || rng.random_range(-1.0..1.0));
    let report = gradient_check(&model, &FeatureSequence::new(frames)?, eps)?;
    println!(
        "max relative error {:.3e} (d={d}, F={f}, T={t}, {} parameters)",
        report.max_rel_error, report.checked
    );
    Ok(report.passes(1e-4))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth {
            config,
            preset,
            seed,
            out,
        } => synth(config, preset, seed, &out)?,
        Command::Split {
            archive,
            config,
            seed,
            out,
        } => {
            let mut spec: SplitSpec = read_json(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let splits = split_dataset(&load_archive(&archive)?, &spec)?;
            create_dir(&out)?;
            for (name, part) in [
                ("train", &splits.train),
                ("db", &splits.db),
                ("query", &splits.query),
                ("finetune", &splits.finetune),
            ] {
                save_archive(part, out.join(format!("{name}.jsonl")))?;
                println!("{name}: {}", part.len());
            }
        }
        Command::Train {
            archive,
            dim,
            config,
            seed,
            out,
        } => {
            let data = load_archive(&archive)?;
            let tc = train_config(config.as_deref())?;
            let (model, curve) = train(SaModel::new(data.feature_dim(), dim, seed), &data, &tc)?;
            save_checkpoint(&model, &out)?;
            if let (Some(first), Some(last)) = (curve.first(), curve.last()) {
                println!(
                    "loss {:.6} -> {:.6} over {} batches",
                    first.1,
                    last.1,
                    curve.len()
                );
            }
        }
        Command::Finetune {
            model,
            archive,
            config,
            size,
            out,
        } => {
            let mut data = load_archive(&archive)?;
            if let Some(n) = size {
                if n > data.len() {
                    bail!("--size {n} exceeds archive size {}", data.len());
                }
                data = data.take(n);
            }
            let tc = train_config(config.as_deref())?;
            let model = awelab::sa::fine_tune(load_checkpoint(&model)?, &data, &tc)?;
            save_checkpoint(&model, &out)?;
        }
        Command::Encode {
            model,
            archive,
            out,
        } => {
            let model = load_checkpoint(&model)?;
            let embs = embed_archive(&load_archive(&archive)?, |s| encode(&model, &s.features))?;
            save_embeddings(&embs, &out)?;
        }
        Command::NeEncode { archive, m, out } => {
            let m = NeConfig::new(m)?.m;
            let embs = embed_archive(&load_archive(&archive)?, |s| Ok(ne_encode(&s.features, m)))?;
            save_embeddings(&embs, &out)?;
        }
        Command::Index { embeddings, out } => {
            let index = build_index(load_embeddings(&embeddings)?)?;
            save_embeddings(index.entries(), &out)?;
            println!("{} entries, dim {}", index.len(), index.dim());
        }
        Command::Search {
            index,
            queries,
            k,
            ids,
        } => search(&index, queries.as_deref(), k, ids)?,
        Command::EvalMap { index, queries } => {
            let index = build_index(load_embeddings(&index)?)?;
            let queries = load_embeddings(&queries)?;
            println!(
                "{:.4}",
                mean_average_precision(&index, &as_queries(&queries))?
            );
        }
        Command::AnalyzePsed {
            archive,
            embeddings,
            max_distance,
            sample_pairs,
            seed,
            out,
        } => {
            let opts = PsedOptions {
                max_distance,
                sample_pairs,
                seed,
            };
            let stats = psed_buckets(
                &load_archive(&archive)?,
                &load_embeddings(&embeddings)?,
                &opts,
            )?;
            let table = stats.to_table();
            match out {
                Some(p) => {
                    fs::write(&p, table).with_context(|| format!("writing {}", p.display()))?
                }
                None => print!("{table}"),
            }
        }
        Command::PcaPairs { embeddings, pairs } => {
            println!("word_a, word_b, dx, dy");
            for d in pca_pair_diffs(&load_embeddings(&embeddings)?, &pairs)? {
                let dy = d.diff.get(1).copied().unwrap_or(0.0);
                println!("{}, {}, {:.6}, {dy:.6}", d.word_a, d.word_b, d.diff[0]);
            }
        }
        Command::Gradcheck { seed, eps } => {
            if !gradcheck(seed, eps)? {
                eprintln!("error: gradient check failed (tolerance 1e-4)");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::SweepDim { config, seed, out } => {
            let report = run_dimension_sweep(&experiment_config(&config, seed, out)?)?;
            print!("{}", report.to_table());
        }
        Command::TransferExp { config, seed, out } => {
            let report = run_transfer_experiment(&experiment_config(&config, seed, out)?)?;
            print!("{}", report.to_table());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    par::init_from_env();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
