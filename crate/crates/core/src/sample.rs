//! Deterministic stratified sampling over domain-tagged records.
//!
//! Selection is reproducible: one seeded permutation per domain, integer
//! largest-remainder allocation for single draws, and an incremental
//! largest-deficit fill for nested size chains (every smaller sample is a
//! subset of every larger one).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("requested {requested} records but only {available} are available")]
    SizeTooLarge { requested: usize, available: usize },
    #[error("sizes must be strictly increasing, got {0:?}")]
    SizesNotIncreasing(Vec<usize>),
}

/// Stable 64-bit FNV-1a, used to derive a per-domain RNG stream.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Groups record indices by domain and fixes one shuffled order per group.
pub struct StratifiedSampler {
    /// domain -> shuffled input indices
    groups: BTreeMap<String, Vec<usize>>,
    total: usize,
}

impl StratifiedSampler {
    pub fn new<'a>(domains: impl IntoIterator<Item = &'a str>, seed: u64) -> Self {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut total = 0;
        for (idx, domain) in domains.into_iter().enumerate() {
            groups.entry(domain.to_string()).or_default().push(idx);
            total += 1;
        }
        for (domain, indices) in groups.iter_mut() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(domain.as_bytes()));
            indices.shuffle(&mut rng);
        }
        StratifiedSampler { groups, total }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Largest-remainder allocation of `size` slots across domains, in
    /// proportion to group sizes. Each allocation is within one of the
    /// exact proportional quota.
    fn allocate(&self, size: usize) -> BTreeMap<&str, usize> {
        let mut alloc: BTreeMap<&str, usize> = BTreeMap::new();
        if self.total == 0 {
            return alloc;
        }
        let mut remainders: Vec<(u128, &str)> = Vec::new();
        let mut assigned = 0usize;
        for (domain, indices) in &self.groups {
            let exact = size as u128 * indices.len() as u128;
            let floor = (exact / self.total as u128) as usize;
            let rem = exact % self.total as u128;
            alloc.insert(domain.as_str(), floor);
            assigned += floor;
            if rem > 0 {
                remainders.push((rem, domain.as_str()));
            }
        }
        // Largest remainder first; ties broken by domain name for
        // determinism.
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        for (_, domain) in remainders.into_iter().take(size - assigned) {
            *alloc.get_mut(domain).unwrap() += 1;
        }
        alloc
    }

    /// Draws `size` records stratified by domain; returned indices are in
    /// input order.
    pub fn take(&self, size: usize) -> Result<Vec<usize>, SampleError> {
        if size > self.total {
            return Err(SampleError::SizeTooLarge {
                requested: size,
                available: self.total,
            });
        }
        let alloc = self.allocate(size);
        let mut selected = Vec::with_capacity(size);
        for (domain, indices) in &self.groups {
            let n = alloc[domain.as_str()];
            selected.extend_from_slice(&indices[..n]);
        }
        selected.sort_unstable();
        Ok(selected)
    }

    /// Draws one sample per size such that each smaller sample is a subset
    /// of the next larger one. Sizes must be strictly increasing. Slots
    /// beyond the previous size are filled greedily toward the proportional
    /// quotas of the current size.
    pub fn take_nested(&self, sizes: &[usize]) -> Result<Vec<Vec<usize>>, SampleError> {
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SampleError::SizesNotIncreasing(sizes.to_vec()));
        }
        if let Some(&max) = sizes.last() {
            if max > self.total {
                return Err(SampleError::SizeTooLarge {
                    requested: max,
                    available: self.total,
                });
            }
        }

        let domains: Vec<&str> = self.groups.keys().map(|d| d.as_str()).collect();
        let counts: Vec<usize> = self.groups.values().map(|v| v.len()).collect();
        let mut taken: Vec<usize> = vec![0; domains.len()];
        let mut filled = 0usize;
        let mut out = Vec::with_capacity(sizes.len());

        for &size in sizes {
            while filled < size {
                // Largest deficit relative to this size's quota; compare
                // count_d * size - taken_d * total without division.
                let mut best: Option<(i128, usize)> = None;
                for (i, (&count, &got)) in counts.iter().zip(taken.iter()).enumerate() {
                    if got >= count {
                        continue;
                    }
                    let deficit =
                        count as i128 * size as i128 - got as i128 * self.total as i128;
                    let better = match best {
                        None => true,
                        Some((best_deficit, _)) => deficit > best_deficit,
                    };
                    if better {
                        best = Some((deficit, i));
                    }
                }
                let (_, pick) = best.expect("sizes bounded by total");
                taken[pick] += 1;
                filled += 1;
            }
            let mut selected = Vec::with_capacity(size);
            for (i, domain) in domains.iter().enumerate() {
                selected.extend_from_slice(&self.groups[*domain][..taken[i]]);
            }
            selected.sort_unstable();
            out.push(selected);
        }
        Ok(out)
    }
}
