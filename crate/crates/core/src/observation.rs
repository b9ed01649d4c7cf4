//! Induced-subgraph sampling and the sufficient statistics the estimators use.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TypedGraph;

/// What an observer sees: the sampled vertices, the edges among them, and
/// each sampled vertex's total degree and block.
///
/// `degrees` and `labels` are aligned with `sample_ids`. Labels are 0-based
/// in memory and 1-based in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservedData", into = "RawObservedData")]
pub struct ObservedData {
    k: usize,
    sample_ids: Vec<usize>,
    degrees: Vec<u64>,
    labels: Vec<usize>,
    induced_edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawObservedData {
    #[serde(rename = "K")]
    k: usize,
    sample_ids: Vec<usize>,
    induced_edges: Vec<(usize, usize)>,
    degrees: Vec<u64>,
    labels: Vec<usize>,
}

impl TryFrom<RawObservedData> for ObservedData {
    type Error = Error;

    fn try_from(raw: RawObservedData) -> Result<Self> {
        let labels = raw
            .labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::validation("labels", "labels are 1-based"))
            })
            .collect::<Result<Vec<_>>>()?;
        ObservedData::new(
            raw.k,
            raw.sample_ids,
            raw.degrees,
            labels,
            raw.induced_edges,
        )
    }
}

impl From<ObservedData> for RawObservedData {
    fn from(obs: ObservedData) -> Self {
        RawObservedData {
            k: obs.k,
            sample_ids: obs.sample_ids,
            induced_edges: obs.induced_edges,
            degrees: obs.degrees,
            labels: obs.labels.iter().map(|l| l + 1).collect(),
        }
    }
}

impl ObservedData {
    pub fn new(
        k: usize,
        sample_ids: Vec<usize>,
        degrees: Vec<u64>,
        labels: Vec<usize>,
        induced_edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("K", "must be positive"));
        }
        if sample_ids.is_empty() {
            return Err(Error::validation("sample_ids", "sample is empty"));
        }
        if degrees.len() != sample_ids.len() || labels.len() != sample_ids.len() {
            return Err(Error::validation(
                "degrees/labels",
                "must have one entry per sampled vertex",
            ));
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        if let Some(dup) = sample_ids.iter().find(|&&v| !seen.insert(v)) {
            return Err(Error::validation(
                "sample_ids",
                format!("vertex {dup} appears twice"),
            ));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::validation(
                "labels",
                format!("label {} outside 1..{k}", l + 1),
            ));
        }
        let mut pairs = HashSet::with_capacity(induced_edges.len());
        for &(u, v) in &induced_edges {
            if !seen.contains(&u) || !seen.contains(&v) {
                return Err(Error::validation(
                    "induced_edges",
                    format!("edge ({u}, {v}) leaves the sample"),
                ));
            }
            if u == v || !pairs.insert((u.min(v), u.max(v))) {
                return Err(Error::validation(
                    "induced_edges",
                    format!("edge ({u}, {v}) is a self-loop or repeated"),
                ));
            }
        }
        Ok(ObservedData {
            k,
            sample_ids,
            degrees,
            labels,
            induced_edges,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn induced_edges(&self) -> &[(usize, usize)] {
        &self.induced_edges
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("observed data: {e}")))
    }
}

/// Draws `n` vertices uniformly without replacement and records what an
/// observer of the induced subgraph would see. Sample ids are sorted.
pub fn sample_induced(graph: &TypedGraph, n: usize, seed: u64) -> Result<ObservedData> {
    let total = graph.n_vertices();
    if n == 0 || n > total {
        return Err(Error::Argument(format!(
            "sample size {n} must lie in 1..={total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = rand::seq::index::sample(&mut rng, total, n).into_vec();
    ids.sort_unstable();

    let mut in_sample = vec![false; total];
    for &v in &ids {
        in_sample[v] = true;
    }
    let mut induced = Vec::new();
    for &u in &ids {
        for &w in graph.neighbors(u) {
            if w > u && in_sample[w] {
                induced.push((u, w));
            }
        }
    }
    let degrees = ids.iter().map(|&v| graph.degree(v) as u64).collect();
    let labels = ids.iter().map(|&v| graph.block(v)).collect();
    ObservedData::new(graph.k(), ids, degrees, labels, induced)
}

/// Counts derived from an observation. Per-vertex vectors are aligned with
/// the sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    k: usize,
    blocks: Vec<usize>,
    pendant: Vec<u64>,
    v_counts: Vec<u64>,
    e: Vec<Vec<u64>>,
    e_s: u64,
}

impl SufficientStats {
    /// Assembles statistics directly from per-vertex blocks, pendant degrees
    /// and a symmetric within-sample edge-count matrix.
    pub fn from_parts(
        k: usize,
        blocks: Vec<usize>,
        pendant: Vec<u64>,
        e: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if k == 0 || blocks.is_empty() {
            return Err(Error::validation(
                "K",
                "need at least one block and one vertex",
            ));
        }
        if blocks.len() != pendant.len() {
            return Err(Error::validation("pendant", "one entry per sampled vertex"));
        }
        if blocks.iter().any(|&b| b >= k) {
            return Err(Error::validation("labels", format!("label outside 1..{k}")));
        }
        if e.len() != k || e.iter().any(|r| r.len() != k) {
            return Err(Error::validation("E", format!("expected a {k}x{k} matrix")));
        }
        let mut v_counts = vec![0u64; k];
        for &b in &blocks {
            v_counts[b] += 1;
        }
        let mut e_s = 0;
        for i in 0..k {
            for j in i..k {
                if e[i][j] != e[j][i] {
                    return Err(Error::validation("E", "matrix is not symmetric"));
                }
                let pairs = if i == j {
                    v_counts[i] * v_counts[i].saturating_sub(1) / 2
                } else {
                    v_counts[i] * v_counts[j]
                };
                if e[i][j] > pairs {
                    return Err(Error::Consistency(format!(
                        "E[{}][{}] = {} exceeds the {pairs} available pairs",
                        i + 1,
                        j + 1,
                        e[i][j]
                    )));
                }
                e_s += e[i][j];
            }
        }
        Ok(SufficientStats {
            k,
            blocks,
            pendant,
            v_counts,
            e,
            e_s,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sample size |W|.
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Block of each sampled vertex.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Pendant degree d̃(v) of each sampled vertex.
    pub fn pendant(&self) -> &[u64] {
        &self.pendant
    }

    /// Sampled vertices per block (V_i).
    pub fn v_counts(&self) -> &[u64] {
        &self.v_counts
    }

    /// Within-sample edges by unordered block pair (E_ij, symmetric).
    pub fn e(&self) -> &[Vec<u64>] {
        &self.e
    }

    pub fn e_s(&self) -> u64 {
        self.e_s
    }

    pub fn pendant_sum(&self) -> u64 {
        self.pendant.iter().sum()
    }

    pub fn max_pendant(&self) -> u64 {
        self.pendant.iter().copied().max().unwrap_or(0)
    }

    /// Σ d(v) over the sample, reconstructed as Σ d̃(v) + 2 E_S.
    pub fn sum_degrees(&self) -> u64 {
        self.pendant_sum() + 2 * self.e_s
    }

    /// Number of vertex pairs inside the sample between blocks `i` and `j`.
    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        if i == j {
            let v = self.v_counts[i];
            v * v.saturating_sub(1) / 2
        } else {
            self.v_counts[i] * self.v_counts[j]
        }
    }
}

pub fn sufficient_stats(obs: &ObservedData) -> Result<SufficientStats> {
    let index: HashMap<usize, usize> = obs
        .sample_ids
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let k = obs.k;
    let mut inner_degree = vec![0u64; obs.n()];
    let mut e = vec![vec![0u64; k]; k];
    for &(u, v) in &obs.induced_edges {
        let (a, b) = (index[&u], index[&v]);
        inner_degree[a] += 1;
        inner_degree[b] += 1;
        let (ta, tb) = (obs.labels[a], obs.labels[b]);
        e[ta][tb] += 1;
        if ta != tb {
            e[tb][ta] += 1;
        }
    }
    let pendant = obs
        .degrees
        .iter()
        .zip(&inner_degree)
        .zip(&obs.sample_ids)
        .map(|((&d, &inner), &id)| {
            d.checked_sub(inner).ok_or_else(|| {
                Error::Consistency(format!(
                    "vertex {id} has degree {d} but {inner} neighbours inside the sample"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SufficientStats::from_parts(k, obs.labels.clone(), pendant, e)
}
