//! Labeled query/document pairs grouped into candidate sets, and the
//! JSON-lines pair manifest.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled (query, document) pair. Rows index into the query and
/// document embedding matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    #[serde(rename = "q")]
    pub query_row: usize,
    #[serde(rename = "d")]
    pub doc_row: usize,
    #[serde(rename = "y")]
    pub label: u8,
}

/// One relevant document plus the sampled irrelevant ones for a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateGroup {
    pub query_row: usize,
    pub relevant_row: usize,
    pub irrelevant_rows: Vec<usize>,
}

impl CandidateGroup {
    /// Candidate size `k`.
    pub fn size(&self) -> usize {
        1 + self.irrelevant_rows.len()
    }

    /// Document rows with the relevant one first.
    pub fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.relevant_row).chain(self.irrelevant_rows.iter().copied())
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.size());
        for d in self.candidates() {
            if !seen.insert(d) {
                return Err(Error::Schema(format!(
                    "query {} lists document {d} more than once",
                    self.query_row
                )));
            }
        }
        Ok(())
    }
}

/// Pairs in manifest order, grouped per query. Every group holds exactly
/// one relevant document and all groups share the candidate size `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingDataset {
    pairs: Vec<Pair>,
    groups: Vec<CandidateGroup>,
    k: usize,
}

impl RankingDataset {
    /// Builds a dataset from groups; pairs are laid out relevant-first per group.
    pub fn from_groups(groups: Vec<CandidateGroup>) -> Result<Self> {
        let k = groups
            .first()
            .map(CandidateGroup::size)
            .ok_or_else(|| Error::EmptyInput("dataset has no candidate groups".into()))?;
        let mut pairs = Vec::with_capacity(groups.len() * k);
        for g in &groups {
            pairs.push(Pair {
                query_row: g.query_row,
                doc_row: g.relevant_row,
                label: 1,
            });
            pairs.extend(g.irrelevant_rows.iter().map(|&d| Pair {
                query_row: g.query_row,
                doc_row: d,
                label: 0,
            }));
        }
        Self::checked(pairs, groups, k)
    }

    /// Groups pairs by contiguous query blocks and validates them.
    pub fn from_pairs(pairs: Vec<Pair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("manifest has no pairs".into()));
        }
        let mut groups = Vec::new();
        let mut finished = HashSet::new();
        let mut start = 0;
        while start < pairs.len() {
            let query_row = pairs[start].query_row;
            if !finished.insert(query_row) {
                return Err(Error::Schema(format!("lines for query {query_row} are not contiguous")));
            }
            let end = pairs[start..]
                .iter()
                .position(|p| p.query_row != query_row)
                .map_or(pairs.len(), |n| start + n);
            let block = &pairs[start..end];
            let relevant: Vec<usize> = block.iter().filter(|p| p.label == 1).map(|p| p.doc_row).collect();
            if relevant.len() != 1 {
                return Err(Error::Schema(format!(
                    "query {query_row} has {} relevant documents, expected exactly 1",
                    relevant.len()
                )));
            }
            groups.push(CandidateGroup {
                query_row,
                relevant_row: relevant[0],
                irrelevant_rows: block.iter().filter(|p| p.label == 0).map(|p| p.doc_row).collect(),
            });
            start = end;
        }
        let k = groups[0].size();
        Self::checked(pairs, groups, k)
    }

    fn checked(pairs: Vec<Pair>, groups: Vec<CandidateGroup>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Schema(format!("candidate size must be at least 2, got {k}")));
        }
        for g in &groups {
            if g.size() != k {
                return Err(Error::Schema(format!(
                    "query {} has {} candidates, other groups have {k}",
                    g.query_row,
                    g.size()
                )));
            }
            g.validate()?;
        }
        if let Some(p) = pairs.iter().find(|p| p.label > 1) {
            return Err(Error::Schema(format!(
                "label {} for query {} is not 0 or 1",
                p.label, p.query_row
            )));
        }
        Ok(RankingDataset { pairs, groups, k })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn groups(&self) -> &[CandidateGroup] {
        &self.groups
    }

    /// Candidate size shared by all groups.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn query_count(&self) -> usize {
        self.groups.len()
    }

    /// `N`, the number of labeled pairs.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| f64::from(p.label)).collect()
    }

    /// Fails with a shape error if any row index falls outside the matrices.
    pub fn check_bounds(&self, query_rows: usize, doc_rows: usize) -> Result<()> {
        for p in &self.pairs {
            if p.query_row >= query_rows {
                return Err(Error::Shape(format!(
                    "query row {} out of bounds for {query_rows} query embeddings",
                    p.query_row
                )));
            }
            if p.doc_row >= doc_rows {
                return Err(Error::Shape(format!(
                    "document row {} out of bounds for {doc_rows} document embeddings",
                    p.doc_row
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    q: usize,
    d: usize,
    y: i64,
}

fn parse_lines<R: BufRead>(source: R) -> Result<Vec<(usize, ManifestLine)>> {
    let mut out = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line.map_err(|source| Error::Io { offset: 0, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine =
            serde_json::from_str(&line).map_err(|e| Error::Schema(format!("line {}: {e}", n + 1)))?;
        out.push((n + 1, parsed));
    }
    Ok(out)
}

/// Reads a JSON-lines manifest of `{"q": int, "d": int, "y": 0|1}` objects.
pub fn read_manifest<R: BufRead>(source: R) -> Result<RankingDataset> {
    let mut pairs = Vec::new();
    for (n, line) in parse_lines(source)? {
        if line.y != 0 && line.y != 1 {
            return Err(Error::Schema(format!("line {n}: label {} is not 0 or 1", line.y)));
        }
        pairs.push(Pair {
            query_row: line.q,
            doc_row: line.d,
            label: line.y as u8,
        });
    }
    RankingDataset::from_pairs(pairs)
}

/// Writes the dataset's pairs as LF-terminated JSON lines.
pub fn write_manifest<W: Write>(dataset: &RankingDataset, mut sink: W) -> Result<()> {
    let mut offset = 0u64;
    for p in dataset.pairs() {
        let line = format!("{{\"q\":{},\"d\":{},\"y\":{}}}\n", p.query_row, p.doc_row, p.label);
        sink.write_all(line.as_bytes())
            .map_err(|source| Error::Io { offset, source })?;
        offset += line.len() as u64;
    }
    sink.flush().map_err(|source| Error::Io { offset, source })
}

/// Reads known-relevant `(query, document)` pairs from JSON lines. Lines
/// may omit `y`; lines with `"y": 0` are skipped, so a full manifest is
/// accepted too.
pub fn read_relevant_pairs<R: BufRead>(source: R) -> Result<Vec<(usize, usize)>> {
    #[derive(Deserialize)]
    struct Line {
        q: usize,
        d: usize,
        #[serde(default = "one")]
        y: i64,
    }
    fn one() -> i64 {
        1
    }
    let mut out = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line.map_err(|source| Error::Io { offset: 0, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::Schema(format!("line {}: {e}", n + 1)))?;
        match parsed.y {
            1 => out.push((parsed.q, parsed.d)),
            0 => {}
            y => return Err(Error::Schema(format!("line {}: label {y} is not 0 or 1", n + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("no relevant pairs".into()));
    }
    Ok(out)
}
