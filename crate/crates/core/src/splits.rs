//! Nested, stratified seed-set sampling for seed-size experiments.
//!
//! For sizes like `[100, 500, 1000, 2000, 3000]` each seed set is a subset
//! of the next larger one, so performance curves over seed size compare
//! like with like. Sampling is stratified by domain and fully determined
//! by the RNG seed.

use std::path::{Path, PathBuf};

use crate::corpus::{self, CorpusError, Utterance};
use crate::sample::{SampleError, StratifiedSampler};

/// One seed set: the requested size and the chosen corpus indices in
/// input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSplit {
    pub size: usize,
    pub indices: Vec<usize>,
}

/// Draws one nested seed set per size.
pub fn make_splits(
    corpus: &[Utterance],
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<SeedSplit>, SampleError> {
    let sampler = StratifiedSampler::new(corpus.iter().map(|u| u.domain.as_str()), seed);
    let chains = sampler.take_nested(sizes)?;
    Ok(sizes
        .iter()
        .zip(chains)
        .map(|(&size, indices)| SeedSplit { size, indices })
        .collect())
}

/// Writes each seed set as `seed_<size>.tsv` in the corpus schema and
/// returns the file paths.
pub fn write_splits(
    corpus: &[Utterance],
    splits: &[SeedSplit],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, CorpusError> {
    let mut paths = Vec::with_capacity(splits.len());
    for split in splits {
        let path = out_dir.as_ref().join(format!("seed_{}.tsv", split.size));
        corpus::write_corpus(
            &path,
            split.indices.iter().map(|&i| {
                let u = &corpus[i];
                (
                    u.domain.clone(),
                    u.text.clone(),
                    u.parse.as_ref().map(|p| p.serialize()).unwrap_or_default(),
                )
            }),
        )?;
        paths.push(path);
    }
    Ok(paths)
}
