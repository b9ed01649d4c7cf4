//! Stochastic block model parameters and graph generation.
//!
//! Blocks are 0-based in memory. The text formats read and written here use
//! 1-based block labels.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the generative model: block sizes and a symmetric matrix of
/// edge probabilities between blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSbmSpec", into = "RawSbmSpec")]
pub struct SbmSpec {
    block_sizes: Vec<usize>,
    p: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSbmSpec {
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    block_sizes: Vec<usize>,
    p: Vec<Vec<f64>>,
}

impl TryFrom<RawSbmSpec> for SbmSpec {
    type Error = Error;

    fn try_from(raw: RawSbmSpec) -> Result<Self> {
        if let Some(k) = raw.k {
            if k != raw.block_sizes.len() {
                return Err(Error::validation(
                    "K",
                    format!("K = {k} but {} block sizes given", raw.block_sizes.len()),
                ));
            }
        }
        SbmSpec::new(raw.block_sizes, raw.p)
    }
}

impl From<SbmSpec> for RawSbmSpec {
    fn from(spec: SbmSpec) -> Self {
        RawSbmSpec {
            k: Some(spec.k()),
            block_sizes: spec.block_sizes,
            p: spec.p,
        }
    }
}

impl SbmSpec {
    pub fn new(block_sizes: Vec<usize>, p: Vec<Vec<f64>>) -> Result<Self> {
        let k = block_sizes.len();
        if k == 0 {
            return Err(Error::validation(
                "block_sizes",
                "at least one block is required",
            ));
        }
        if let Some(i) = block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::validation(
                "block_sizes",
                format!("block {} is empty", i + 1),
            ));
        }
        if p.len() != k || p.iter().any(|row| row.len() != k) {
            return Err(Error::validation("p", format!("expected a {k}x{k} matrix")));
        }
        for i in 0..k {
            for j in 0..k {
                let v = p[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(
                        "p",
                        format!("p[{}][{}] = {v} is not a probability", i + 1, j + 1),
                    ));
                }
                if p[j][i] != v {
                    return Err(Error::validation(
                        "p",
                        format!("matrix is not symmetric at ({}, {})", i + 1, j + 1),
                    ));
                }
            }
        }
        Ok(SbmSpec { block_sizes, p })
    }

    /// The single-block model G(N, p).
    pub fn erdos_renyi(n: usize, p: f64) -> Result<Self> {
        SbmSpec::new(vec![n], vec![vec![p]])
    }

    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn n_vertices(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[i][j]
    }

    /// Block index of each vertex under the contiguous layout used by
    /// [`generate_sbm`].
    pub fn block_layout(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect()
    }
}

/// An undirected simple graph whose vertices carry a block label.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedGraph {
    k: usize,
    block_of: Vec<usize>,
    adj: Vec<Vec<usize>>,
    n_edges: usize,
}

impl TypedGraph {
    /// Builds a graph from 0-based block labels and an edge list. Pair order
    /// is irrelevant; self-loops and repeated pairs are rejected.
    pub fn new(k: usize, block_of: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = block_of.len();
        if n == 0 {
            return Err(Error::validation("n_vertices", "graph has no vertices"));
        }
        if let Some(v) = block_of.iter().position(|&b| b >= k) {
            return Err(Error::validation(
                "block_of",
                format!("vertex {v} has block {} outside 1..{k}", block_of[v] + 1),
            ));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::validation(
                    "edges",
                    format!("edge ({u}, {v}) references a vertex >= {n}"),
                ));
            }
            if u == v {
                return Err(Error::validation(
                    "edges",
                    format!("self-loop at vertex {u}"),
                ));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::validation(
                    "edges",
                    format!("duplicate edge ({u}, {})", w[0]),
                ));
            }
        }
        Ok(TypedGraph {
            k,
            block_of,
            adj,
            n_edges: edges.len(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_vertices(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn block(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn blocks(&self) -> &[usize] {
        &self.block_of
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Each edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &b in &self.block_of {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Draws a graph from the model. Vertices are laid out block by block; every
/// unordered pair is an independent Bernoulli trial.
pub fn generate_sbm(spec: &SbmSpec, seed: u64) -> TypedGraph {
    let block_of = spec.block_layout();
    let n = block_of.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let row = &spec.p[block_of[u]];
        for v in (u + 1)..n {
            if rng.random::<f64>() < row[block_of[v]] {
                edges.push((u, v));
            }
        }
    }
    TypedGraph::new(spec.k(), block_of, &edges).expect("generated graph is simple")
}

/// Two-block model whose probabilities deviate from the homogeneous value
/// `p_tilde` by `epsilon` while the mean degree stays fixed. Positive
/// `epsilon` makes the blocks cohesive, negative makes them incohesive.
pub fn cohesion_spec(n1: usize, n2: usize, p_tilde: f64, epsilon: f64) -> Result<SbmSpec> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Argument(format!(
            "cohesion model needs at least two vertices per block, got ({n1}, {n2})"
        )));
    }
    if !(0.0..=1.0).contains(&p_tilde) {
        return Err(Error::validation(
            "p_tilde",
            format!("{p_tilde} is not a probability"),
        ));
    }
    let cross = (n1 * n2) as f64;
    let slope11 = cross / (2.0 * choose2(n1 as u64));
    let slope22 = cross / (2.0 * choose2(n2 as u64));

    // Each p is affine in epsilon; intersect the three feasible intervals.
    let mut lo = p_tilde - 1.0;
    let mut hi = p_tilde;
    for slope in [slope11, slope22] {
        lo = lo.max(-p_tilde / slope);
        hi = hi.min((1.0 - p_tilde) / slope);
    }
    const TOL: f64 = 1e-12;
    if !epsilon.is_finite() || epsilon < lo - TOL || epsilon > hi + TOL {
        return Err(Error::Range {
            what: "epsilon".into(),
            reason: format!("{epsilon} is outside the feasible interval [{lo:.6}, {hi:.6}]"),
        });
    }
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    let p11 = clamp(p_tilde + slope11 * epsilon);
    let p22 = clamp(p_tilde + slope22 * epsilon);
    let p12 = clamp(p_tilde - epsilon);
    SbmSpec::new(vec![n1, n2], vec![vec![p11, p12], vec![p12, p22]])
}

/// Expected degree of a uniformly chosen vertex,
/// `(2/N) [sum_i C(N_i,2) p_ii + sum_{i<j} N_i N_j p_ij]`.
pub fn mean_degree(spec: &SbmSpec) -> f64 {
    let sizes = spec.block_sizes();
    let mut twice_edges = 0.0;
    for i in 0..spec.k() {
        twice_edges += choose2(sizes[i] as u64) * spec.prob(i, i);
        for j in (i + 1)..spec.k() {
            twice_edges += (sizes[i] * sizes[j]) as f64 * spec.prob(i, j);
        }
    }
    2.0 * twice_edges / spec.n_vertices() as f64
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Block sizes drawn from a Chinese restaurant process over `n_seed`
/// vertices, then padded with `n_fill` vertices spread evenly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpPartition {
    /// Sizes produced by the restaurant process alone.
    pub seeded_sizes: Vec<usize>,
    /// Sizes after the even fill.
    pub block_sizes: Vec<usize>,
}

impl CrpPartition {
    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }
}

pub fn crp_assignment(
    n_seed_vertices: usize,
    n_fill_vertices: usize,
    concentration: f64,
    seed: u64,
) -> Result<CrpPartition> {
    if n_seed_vertices == 0 {
        return Err(Error::Argument("CRP needs at least one seed vertex".into()));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::Argument(format!(
            "CRP concentration must be positive and finite, got {concentration}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tables: Vec<usize> = Vec::new();
    for m in 0..n_seed_vertices {
        let u = rng.random::<f64>() * (m as f64 + concentration);
        let mut acc = 0.0;
        let mut chosen = None;
        for (t, &count) in tables.iter().enumerate() {
            acc += count as f64;
            if u < acc {
                chosen = Some(t);
                break;
            }
        }
        match chosen {
            Some(t) => tables[t] += 1,
            None => tables.push(1),
        }
    }
    let block_sizes = even_fill(&tables, n_fill_vertices);
    Ok(CrpPartition {
        seeded_sizes: tables,
        block_sizes,
    })
}

/// Adds `n_fill` vertices to the blocks as evenly as possible; the remainder
/// goes one each to the lowest-indexed blocks.
pub fn even_fill(sizes: &[usize], n_fill: usize) -> Vec<usize> {
    let k = sizes.len();
    if k == 0 {
        return Vec::new();
    }
    let base = n_fill / k;
    let extra = n_fill % k;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| s + base + usize::from(i < extra))
        .collect()
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().filter(|(_, line)| match line {
        Ok(l) => {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        }
        Err(_) => true,
    })
}

fn parse_pair(line: &str, lineno: usize, what: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| {
                Error::Parse(format!("{what} line {}: expected two fields", lineno + 1))
            })?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{what} line {}: {e}", lineno + 1)))
    };
    let a = next()?;
    let b = next()?;
    Ok((a, b))
}

/// Writes one `u v` pair per line (0-based vertex ids).
pub fn write_edge_list<W: Write>(graph: &TypedGraph, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# {} vertices, {} edges",
        graph.n_vertices(),
        graph.n_edges()
    )?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

/// Writes one `v block` pair per line with 1-based blocks.
pub fn write_labels<W: Write>(graph: &TypedGraph, mut out: W) -> Result<()> {
    writeln!(out, "# K = {}", graph.k())?;
    for (v, &b) in graph.blocks().iter().enumerate() {
        writeln!(out, "{v} {}", b + 1)?;
    }
    Ok(())
}

/// Reads a graph from an edge list and a label file. The label file defines
/// the vertex set: it must name every vertex `0..n` exactly once. `K` is the
/// largest label present.
pub fn read_typed_graph<E: BufRead, L: BufRead>(edges: E, labels: L) -> Result<TypedGraph> {
    let mut label_map = BTreeMap::new();
    for (lineno, line) in data_lines(labels) {
        let (v, b) = parse_pair(&line?, lineno, "labels")?;
        if b == 0 {
            return Err(Error::Parse(format!(
                "labels line {}: blocks are 1-based",
                lineno + 1
            )));
        }
        if label_map.insert(v, b - 1).is_some() {
            return Err(Error::Parse(format!(
                "labels line {}: vertex {v} labelled twice",
                lineno + 1
            )));
        }
    }
    let n = label_map.len();
    if label_map
        .keys()
        .next_back()
        .is_some_and(|&max| max + 1 != n)
    {
        return Err(Error::Parse(format!(
            "label file must cover vertices 0..{n} without gaps"
        )));
    }
    let block_of: Vec<usize> = label_map.into_values().collect();
    let k = block_of.iter().max().map_or(0, |&m| m + 1);

    let mut edge_list = Vec::new();
    for (lineno, line) in data_lines(edges) {
        edge_list.push(parse_pair(&line?, lineno, "edges")?);
    }
    TypedGraph::new(k, block_of, &edge_list)
}
