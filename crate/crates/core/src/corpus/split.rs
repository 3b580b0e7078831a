use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Segment, SegmentArchive};
use crate::error::{Error, Result};
use crate::rng_from_seed;

/// Requested sizes of the four partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub db_count: usize,
    pub query_count: usize,
    pub finetune_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.train_count + self.db_count + self.query_count + self.finetune_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: SegmentArchive,
    pub db: SegmentArchive,
    pub query: SegmentArchive,
    pub finetune: SegmentArchive,
}

/// Partitions `archive` by a seeded shuffle.
///
/// Train and database take the first slices of the shuffled order. Queries
/// are then drawn from the remainder in shuffled order, skipping segments
/// whose word is absent from the database; skipped segments stay available
/// for fine-tuning, which takes the next unused segments.
pub fn split_dataset(archive: &SegmentArchive, spec: &SplitSpec) -> Result<Splits> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    if spec.total() > archive.len() {
        return Err(Error::InfeasibleSplit(format!(
            "requested {} segments, archive has {}",
            spec.total(),
            archive.len()
        )));
    }
    let mut order: Vec<usize> = (0..archive.len()).collect();
    order.shuffle(&mut rng_from_seed(spec.seed));

    let segs = archive.segments();
    let (train_idx, rest) = order.split_at(spec.train_count);
    let (db_idx, rest) = rest.split_at(spec.db_count);

    let db_words: HashSet<&str> = db_idx.iter().map(|&i| segs[i].word.as_str()).collect();
    let mut query_idx = Vec::with_capacity(spec.query_count);
    let mut leftover = Vec::with_capacity(rest.len());
    for &i in rest {
        if query_idx.len() < spec.query_count && db_words.contains(segs[i].word.as_str()) {
            query_idx.push(i);
        } else {
            leftover.push(i);
        }
    }
    if query_idx.len() < spec.query_count {
        return Err(Error::InfeasibleSplit(format!(
            "only {} of {} queries have a word present in the database",
            query_idx.len(),
            spec.query_count
        )));
    }
    let finetune_idx = &leftover[..spec.finetune_count];

    let pick = |idx: &[usize]| -> SegmentArchive {
        let v: Vec<Segment> = idx.iter().map(|&i| segs[i].clone()).collect();
        SegmentArchive::from_validated(v, archive.feature_dim())
    };
    Ok(Splits {
        train: pick(train_idx),
        db: pick(db_idx),
        query: pick(&query_idx),
        finetune: pick(finetune_idx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_util::seg;

    fn archive(n: usize, words: usize) -> SegmentArchive {
        SegmentArchive::new(
            (0..n)
                .map(|i| {
                    seg(
                        &format!("s{i}"),
                        &format!("w{}", i % words),
                        &["p"],
                        &[vec![i as f64]],
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn spec(t: usize, d: usize, q: usize, f: usize) -> SplitSpec {
        SplitSpec {
            train_count: t,
            db_count: d,
            query_count: q,
            finetune_count: f,
            seed: 5,
        }
    }

    #[test]
    fn sizes_and_disjointness() {
        let a = archive(100, 10);
        let s = split_dataset(&a, &spec(60, 30, 5, 5)).unwrap();
        assert_eq!(
            (s.train.len(), s.db.len(), s.query.len(), s.finetune.len()),
            (60, 30, 5, 5)
        );
        let mut ids = HashSet::new();
        for part in [&s.train, &s.db, &s.query, &s.finetune] {
            for x in part.iter() {
                assert!(ids.insert(x.id.clone()));
            }
        }
        assert_eq!(ids.len(), 100);
        let dbw = s.db.words();
        assert!(s.query.iter().all(|q| dbw.contains(q.word.as_str())));
    }

    #[test]
    fn over_request_is_infeasible() {
        let a = archive(100, 10);
        assert!(matches!(
            split_dataset(&a, &spec(60, 30, 6, 5)),
            Err(Error::InfeasibleSplit(_))
        ));
        assert!(matches!(
            split_dataset(&SegmentArchive::empty(), &spec(0, 0, 0, 0)),
            Err(Error::EmptyArchive)
        ));
    }

    #[test]
    fn query_word_must_exist_in_db() {
        // every segment has its own word, so no query can find a relevant db item
        let a = archive(10, 10);
        assert!(matches!(
            split_dataset(&a, &spec(0, 5, 1, 0)),
            Err(Error::InfeasibleSplit(_))
        ));
    }

    #[test]
    fn deterministic() {
        let a = archive(100, 7);
        assert_eq!(
            split_dataset(&a, &spec(50, 20, 10, 10)).unwrap(),
            split_dataset(&a, &spec(50, 20, 10, 10)).unwrap()
        );
    }
}
