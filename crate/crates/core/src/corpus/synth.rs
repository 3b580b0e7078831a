//! Synthetic "languages" for desk-scale experiments.
//!
//! A language is a set of phoneme templates (a mean feature vector and a
//! spread per phoneme) plus a lexicon. Each spoken token of a word holds every
//! phoneme of the word for a random number of frames, with Gaussian noise
//! around the template mean. Two languages can share some or all templates
//! while using disjoint lexicons.

use std::collections::{HashMap, HashSet};

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FeatureSequence, Segment, SegmentArchive};
use crate::error::{Error, Result};
use crate::{rng_from_seed, DEFAULT_FEATURE_DIM, DEFAULT_MAX_FRAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeTemplate {
    pub symbol: String,
    pub mean: Vec<f64>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexEntry {
    pub word: String,
    pub phonemes: Vec<String>,
}

impl LexEntry {
    pub fn from_phonemes(phonemes: Vec<String>) -> Self {
        Self {
            word: phonemes.join("."),
            phonemes,
        }
    }
}

fn default_max_frames() -> usize {
    DEFAULT_MAX_FRAMES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub lang: String,
    pub phoneme_inventory: Vec<String>,
    /// One template per inventory symbol.
    pub phoneme_templates: Vec<PhonemeTemplate>,
    pub lexicon: Vec<LexEntry>,
    /// Inclusive `[min, max]` frames spent on each phoneme.
    pub frames_per_phoneme: [usize; 2],
    pub noise_scale: f64,
    pub segments_per_word: usize,
    #[serde(default = "default_max_frames")]
    pub max_frames: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn feature_dim(&self) -> usize {
        self.phoneme_templates.first().map_or(0, |t| t.mean.len())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        let inventory: HashSet<&str> = self.phoneme_inventory.iter().map(String::as_str).collect();
        if inventory.len() != self.phoneme_inventory.len() {
            return bad("phoneme inventory has duplicate symbols".into());
        }
        let dim = self.feature_dim();
        if dim == 0 {
            return bad("phoneme templates are empty".into());
        }
        let mut templated = HashSet::new();
        for t in &self.phoneme_templates {
            if !inventory.contains(t.symbol.as_str()) {
                return bad(format!(
                    "template for `{}` which is not in the inventory",
                    t.symbol
                ));
            }
            if !templated.insert(t.symbol.as_str()) {
                return bad(format!("two templates for `{}`", t.symbol));
            }
            if t.mean.len() != dim {
                return bad(format!(
                    "template `{}` has dimension {}, expected {dim}",
                    t.symbol,
                    t.mean.len()
                ));
            }
            if !t.spread.is_finite() || t.spread < 0.0 || t.mean.iter().any(|v| !v.is_finite()) {
                return bad(format!(
                    "template `{}` has non-finite or negative values",
                    t.symbol
                ));
            }
        }
        if let Some(missing) = self
            .phoneme_inventory
            .iter()
            .find(|p| !templated.contains(p.as_str()))
        {
            return bad(format!("no template for phoneme `{missing}`"));
        }
        let [lo, hi] = self.frames_per_phoneme;
        if lo == 0 || lo > hi {
            return bad(format!(
                "frames_per_phoneme [{lo}, {hi}] must satisfy 1 <= min <= max"
            ));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return bad(format!(
                "noise_scale {} must be finite and >= 0",
                self.noise_scale
            ));
        }
        let mut words = HashSet::new();
        for e in &self.lexicon {
            if e.word.is_empty() || e.phonemes.is_empty() {
                return bad("lexicon entries need a word and at least one phoneme".into());
            }
            if !words.insert(e.word.as_str()) {
                return bad(format!("word `{}` appears twice in the lexicon", e.word));
            }
            if let Some(p) = e.phonemes.iter().find(|p| !inventory.contains(p.as_str())) {
                return bad(format!(
                    "word `{}` uses phoneme `{p}` outside the inventory",
                    e.word
                ));
            }
            if e.phonemes.len() * hi > self.max_frames {
                return bad(format!(
                    "word `{}` can reach {} frames, limit is {}",
                    e.word,
                    e.phonemes.len() * hi,
                    self.max_frames
                ));
            }
        }
        Ok(())
    }
}

/// Generates the archive described by `cfg`. Deterministic in `cfg.seed`.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<SegmentArchive> {
    cfg.validate()?;
    let dim = cfg.feature_dim();
    let templates: HashMap<&str, &PhonemeTemplate> = cfg
        .phoneme_templates
        .iter()
        .map(|t| (t.symbol.as_str(), t))
        .collect();
    let mut rng = rng_from_seed(cfg.seed);
    let [lo, hi] = cfg.frames_per_phoneme;

    let mut segments = Vec::with_capacity(cfg.lexicon.len() * cfg.segments_per_word);
    for entry in &cfg.lexicon {
        for j in 0..cfg.segments_per_word {
            let mut rows: Vec<f64> = Vec::new();
            for p in &entry.phonemes {
                let tpl = templates[p.as_str()];
                let k = rng.random_range(lo..=hi);
                for _ in 0..k {
                    for &m in &tpl.mean {
                        let eps: f64 = StandardNormal.sample(&mut rng);
                        rows.push(m + cfg.noise_scale * tpl.spread * eps);
                    }
                }
            }
            let t = rows.len() / dim;
            let frames = Array2::from_shape_vec((t, dim), rows).expect("row-major frames");
            segments.push(Segment {
                id: format!("{}-{}-{j:04}", cfg.lang, entry.word),
                lang: cfg.lang.clone(),
                word: entry.word.clone(),
                phonemes: entry.phonemes.clone(),
                features: FeatureSequence::new(frames)?,
            });
        }
    }
    SegmentArchive::with_max_frames(segments, cfg.max_frames)
}

/// `n` templates with standard-normal means, symbols `p00`, `p01`, ...
pub fn random_templates(n: usize, dim: usize, spread: f64, seed: u64) -> Vec<PhonemeTemplate> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|i| PhonemeTemplate {
            symbol: format!("p{i:02}"),
            mean: (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
            spread,
        })
        .collect()
}

/// Keeps the first `round(overlap * n)` templates of `base` and redraws the
/// means of the rest. Symbols are preserved.
pub fn derive_templates(base: &[PhonemeTemplate], overlap: f64, seed: u64) -> Vec<PhonemeTemplate> {
    let keep = (overlap.clamp(0.0, 1.0) * base.len() as f64).round() as usize;
    let mut rng = rng_from_seed(seed);
    base.iter()
        .enumerate()
        .map(|(i, t)| {
            if i < keep {
                t.clone()
            } else {
                PhonemeTemplate {
                    symbol: t.symbol.clone(),
                    mean: t
                        .mean
                        .iter()
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect(),
                    spread: t.spread,
                }
            }
        })
        .collect()
}

fn random_word(inventory: &[String], len: usize, rng: &mut impl Rng) -> Vec<String> {
    (0..len)
        .map(|_| inventory.choose(rng).expect("non-empty inventory").clone())
        .collect()
}

/// Applies one random substitution, insertion or deletion.
fn mutate(
    word: &[String],
    inventory: &[String],
    len: [usize; 2],
    rng: &mut impl Rng,
) -> Vec<String> {
    let mut w = word.to_vec();
    let op = rng.random_range(0..3);
    match op {
        0 if w.len() < len[1] => {
            let at = rng.random_range(0..=w.len());
            w.insert(at, inventory.choose(rng).unwrap().clone());
        }
        1 if w.len() > len[0] => {
            let at = rng.random_range(0..w.len());
            w.remove(at);
        }
        _ => {
            let at = rng.random_range(0..w.len());
            w[at] = inventory.choose(rng).unwrap().clone();
        }
    }
    w
}

/// Draws `n_words` distinct words whose lengths fall in `len` (inclusive).
///
/// About half the words are fresh random strings; the rest are one or two
/// edits away from an earlier word, so that small edit distances are well
/// populated. Phoneme sequences listed in `exclude` are never produced.
pub fn random_lexicon(
    inventory: &[String],
    n_words: usize,
    len: [usize; 2],
    exclude: &[LexEntry],
    seed: u64,
) -> Result<Vec<LexEntry>> {
    if inventory.is_empty() || len[0] == 0 || len[0] > len[1] {
        return Err(Error::ConfigInvalid(format!(
            "cannot draw words of length {len:?} from {} phonemes",
            inventory.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut taken: HashSet<Vec<String>> = exclude.iter().map(|e| e.phonemes.clone()).collect();
    let mut words: Vec<Vec<String>> = Vec::with_capacity(n_words);
    let attempts = 1000 * (n_words + 1);
    for _ in 0..attempts {
        if words.len() == n_words {
            break;
        }
        let cand = if words.is_empty() || rng.random_bool(0.5) {
            let l = rng.random_range(len[0]..=len[1]);
            random_word(inventory, l, &mut rng)
        } else {
            let base = words.choose(&mut rng).unwrap().clone();
            let mut w = mutate(&base, inventory, len, &mut rng);
            if rng.random_bool(0.5) {
                w = mutate(&w, inventory, len, &mut rng);
            }
            w
        };
        if taken.insert(cand.clone()) {
            words.push(cand);
        }
    }
    if words.len() < n_words {
        return Err(Error::ConfigInvalid(format!(
            "could only draw {} of {n_words} distinct words",
            words.len()
        )));
    }
    Ok(words.into_iter().map(LexEntry::from_phonemes).collect())
}

/// Word pairs `(stem, stem + suffix)` sharing one suffix, for difference-vector
/// analysis. Stems have lengths in `stem_len`.
pub fn suffix_pairs(
    inventory: &[String],
    n_pairs: usize,
    suffix: &[String],
    stem_len: [usize; 2],
    exclude: &[LexEntry],
    seed: u64,
) -> Result<Vec<(LexEntry, LexEntry)>> {
    let mut rng = rng_from_seed(seed);
    let mut taken: HashSet<Vec<String>> = exclude.iter().map(|e| e.phonemes.clone()).collect();
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..1000 * (n_pairs + 1) {
        if pairs.len() == n_pairs {
            break;
        }
        let l = rng.random_range(stem_len[0]..=stem_len[1]);
        let stem = random_word(inventory, l, &mut rng);
        let mut long = stem.clone();
        long.extend(suffix.iter().cloned());
        if taken.contains(&stem) || taken.contains(&long) {
            continue;
        }
        taken.insert(stem.clone());
        taken.insert(long.clone());
        pairs.push((LexEntry::from_phonemes(stem), LexEntry::from_phonemes(long)));
    }
    if pairs.len() < n_pairs {
        return Err(Error::ConfigInvalid(format!(
            "could only draw {} of {n_pairs} suffix pairs",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Compact recipe for a synthetic language; expands into a [`SynthConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPreset {
    pub lang: String,
    pub feature_dim: usize,
    pub n_phonemes: usize,
    /// Seed of the shared base inventory; languages that should share
    /// acoustics use the same value.
    pub inventory_seed: u64,
    /// Fraction of base templates kept unchanged.
    pub inventory_overlap: f64,
    pub spread: f64,
    pub n_words: usize,
    pub word_len: [usize; 2],
    /// Number of `(stem, stem + suffix)` pairs included in the lexicon.
    pub n_suffix_pairs: usize,
    pub frames_per_phoneme: [usize; 2],
    pub noise_scale: f64,
    pub segments_per_word: usize,
    pub seed: u64,
}

impl SynthPreset {
    /// Desk-scale source language: 40 words, 50 tokens each, 12 phonemes.
    pub fn source(seed: u64) -> Self {
        Self {
            lang: "src".into(),
            feature_dim: DEFAULT_FEATURE_DIM,
            n_phonemes: 12,
            inventory_seed: 1,
            inventory_overlap: 1.0,
            spread: 1.0,
            n_words: 40,
            word_len: [3, 6],
            n_suffix_pairs: 0,
            frames_per_phoneme: [2, 4],
            noise_scale: 0.5,
            segments_per_word: 50,
            seed,
        }
    }

    /// Target language sharing the source inventory, with a disjoint
    /// 200-word lexicon (six tokens each) that contains four suffix pairs.
    pub fn target(seed: u64) -> Self {
        Self {
            lang: "tgt".into(),
            n_words: 200,
            n_suffix_pairs: 4,
            segments_per_word: 6,
            ..Self::source(seed)
        }
    }

    /// Expands the preset. Lexicon entries whose phoneme sequences occur in
    /// `exclude` are never generated.
    pub fn build(&self, exclude: &[LexEntry]) -> Result<SynthConfig> {
        let base = random_templates(
            self.n_phonemes,
            self.feature_dim,
            self.spread,
            self.inventory_seed,
        );
        let templates = if self.inventory_overlap >= 1.0 {
            base
        } else {
            derive_templates(&base, self.inventory_overlap, self.seed ^ 0x7e3d)
        };
        let inventory: Vec<String> = templates.iter().map(|t| t.symbol.clone()).collect();

        let mut lexicon = Vec::with_capacity(self.n_words);
        if self.n_suffix_pairs > 0 {
            let suffix = vec![inventory[inventory.len() - 1].clone()];
            let stem_len = [
                self.word_len[0],
                self.word_len[1].saturating_sub(1).max(self.word_len[0]),
            ];
            for (a, b) in suffix_pairs(
                &inventory,
                self.n_suffix_pairs,
                &suffix,
                stem_len,
                exclude,
                self.seed ^ 0x5f1,
            )? {
                lexicon.push(a);
                lexicon.push(b);
            }
        }
        let mut avoid = exclude.to_vec();
        avoid.extend(lexicon.iter().cloned());
        let rest = self.n_words.saturating_sub(lexicon.len());
        lexicon.extend(random_lexicon(
            &inventory,
            rest,
            self.word_len,
            &avoid,
            self.seed ^ 0x1e7,
        )?);

        let cfg = SynthConfig {
            lang: self.lang.clone(),
            phoneme_inventory: inventory,
            phoneme_templates: templates,
            lexicon,
            frames_per_phoneme: self.frames_per_phoneme,
            noise_scale: self.noise_scale,
            segments_per_word: self.segments_per_word,
            max_frames: DEFAULT_MAX_FRAMES,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a source/target configuration pair with disjoint lexicons.
    pub fn build_pair(
        source: &SynthPreset,
        target: &SynthPreset,
    ) -> Result<(SynthConfig, SynthConfig)> {
        let src = source.build(&[])?;
        let tgt = target.build(&src.lexicon)?;
        Ok((src, tgt))
    }
}
