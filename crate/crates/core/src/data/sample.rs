//! Seeded construction of candidate groups from known-relevant pairs.

use std::collections::{BTreeMap, HashMap};

use super::dataset::{CandidateGroup, RankingDataset};
use crate::error::{Error, Result};
use crate::rng::Prng;

/// Number of queries kept per dataset unless overridden.
pub const DEFAULT_MAX_QUERIES: usize = 1000;

/// Draws `k - 1` irrelevant documents per query.
///
/// Queries are taken in ascending row order. When there are more than
/// `max_queries` of them, the first `max_queries` of a seeded shuffle are
/// kept. A query with several relevant documents gets one of them (the
/// first after a seeded shuffle) and none of the others can be drawn as
/// irrelevant. Irrelevant rows come from a partial Fisher–Yates pass over
/// `0..doc_pool_size` that skips the query's relevant rows.
pub fn sample_candidates(
    relevant_pairs: &[(usize, usize)],
    doc_pool_size: usize,
    k: usize,
    seed: u64,
    max_queries: Option<usize>,
) -> Result<RankingDataset> {
    if k < 2 {
        return Err(Error::Config(format!("candidate size must be at least 2, got {k}")));
    }
    if doc_pool_size < k {
        return Err(Error::Capacity { pool: doc_pool_size, k });
    }
    let mut by_query: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(q, d) in relevant_pairs {
        if d >= doc_pool_size {
            return Err(Error::Shape(format!(
                "relevant document {d} of query {q} outside pool of {doc_pool_size}"
            )));
        }
        let docs = by_query.entry(q).or_default();
        if !docs.contains(&d) {
            docs.push(d);
        }
    }
    if by_query.is_empty() {
        return Err(Error::EmptyInput("no relevant pairs to sample from".into()));
    }

    let mut rng = Prng::new(seed);
    let mut queries: Vec<usize> = by_query.keys().copied().collect();
    if let Some(cap) = max_queries {
        if queries.len() > cap {
            rng.shuffle(&mut queries);
            queries.truncate(cap);
            queries.sort_unstable();
        }
    }

    let mut groups = Vec::with_capacity(queries.len());
    for q in queries {
        let mut relevant = by_query[&q].clone();
        if relevant.len() > 1 {
            rng.shuffle(&mut relevant);
        }
        if doc_pool_size - relevant.len() < k - 1 {
            return Err(Error::Capacity {
                pool: doc_pool_size - relevant.len() + 1,
                k,
            });
        }
        let irrelevant_rows = draw_excluding(&mut rng, doc_pool_size, k - 1, &relevant);
        groups.push(CandidateGroup {
            query_row: q,
            relevant_row: relevant[0],
            irrelevant_rows,
        });
    }
    RankingDataset::from_groups(groups)
}

/// Partial Fisher–Yates over a virtual `0..pool` array, swaps kept sparse.
fn draw_excluding(rng: &mut Prng, pool: usize, count: usize, excluded: &[usize]) -> Vec<usize> {
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        let j = i + rng.index(pool - i);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(j, at_i);
        swapped.insert(i, at_j);
        i += 1;
        if !excluded.contains(&at_j) {
            out.push(at_j);
        }
    }
    out
}
