//! Degree, closeness and betweenness kernels, plus the deterministic ranking
//! used everywhere top-k sets are extracted.
//!
//! Closeness sums distances over the vertices reachable from `v` only, so a
//! disconnected graph still scores every vertex. Betweenness is the exact
//! unweighted value with each unordered pair `{s, t}` counted once.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Degree,
    Closeness,
    Betweenness,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Degree, Metric::Closeness, Metric::Betweenness];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Degree => "degree",
            Metric::Closeness => "closeness",
            Metric::Betweenness => "betweenness",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "degree" | "dc" => Ok(Metric::Degree),
            "closeness" | "cc" => Ok(Metric::Closeness),
            "betweenness" | "bc" => Ok(Metric::Betweenness),
            other => Err(Error::Usage(format!("unknown metric {other:?}"))),
        }
    }
}

/// Per-vertex scores for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub metric: Metric,
    pub scores: Vec<f64>,
    /// Sum of distances to reachable vertices (closeness only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_closeness_sum: Option<Vec<f64>>,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn rank(&self) -> Ranking {
        rank(self)
    }
}

pub fn compute(g: &Graph, metric: Metric) -> CentralityVector {
    match metric {
        Metric::Degree => degree_centrality(g),
        Metric::Closeness => closeness_centrality(g),
        Metric::Betweenness => betweenness_centrality(g),
    }
}

pub fn degree_centrality(g: &Graph) -> CentralityVector {
    CentralityVector {
        metric: Metric::Degree,
        scores: (0..g.n()).map(|v| g.degree(v) as f64).collect(),
        inv_closeness_sum: None,
    }
}

/// Hop distances from `source`; `u32::MAX` marks unreachable vertices.
pub fn bfs_distances(g: &Graph, source: Vertex) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = VecDeque::with_capacity(g.n());
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in g.neighbors(u) {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Sum of hop distances from `v` to every vertex it can reach.
pub fn distance_sum(g: &Graph, v: Vertex) -> u64 {
    bfs_distances(g, v)
        .into_iter()
        .filter(|&d| d != u32::MAX)
        .map(u64::from)
        .sum()
}

pub fn closeness_centrality(g: &Graph) -> CentralityVector {
    let sums: Vec<f64> = (0..g.n())
        .into_par_iter()
        .map(|v| distance_sum(g, v) as f64)
        .collect();
    let scores = sums
        .iter()
        .map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    CentralityVector {
        metric: Metric::Closeness,
        scores,
        inv_closeness_sum: Some(sums),
    }
}

/// Reusable buffers for one Brandes single-source pass.
struct BrandesScratch {
    dist: Vec<u32>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<Vertex>,
    queue: VecDeque<Vertex>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            dist: vec![u32::MAX; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    /// Adds the dependencies of `source` on every vertex into `acc`.
    fn accumulate(&mut self, g: &Graph, source: Vertex, acc: &mut [f64]) {
        for &v in &self.order {
            self.dist[v] = u32::MAX;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
        }
        self.order.clear();

        self.dist[source] = 0;
        self.sigma[source] = 1.0;
        self.queue.push_back(source);
        while let Some(u) = self.queue.pop_front() {
            self.order.push(u);
            let du = self.dist[u];
            for &w in g.neighbors(u) {
                if self.dist[w] == u32::MAX {
                    self.dist[w] = du + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == du + 1 {
                    self.sigma[w] += self.sigma[u];
                }
            }
        }

        // Predecessors are recovered from distances instead of stored lists.
        for &w in self.order.iter().rev() {
            let dw = self.dist[w];
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &u in g.neighbors(w) {
                if self.dist[u] != u32::MAX && self.dist[u] + 1 == dw {
                    self.delta[u] += self.sigma[u] * coeff;
                }
            }
            if w != source {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// Sources are processed in fixed contiguous blocks and the block partials are
/// summed in block order, so the floating-point result does not depend on the
/// thread count.
const BLOCK: usize = 32;

pub fn betweenness_centrality(g: &Graph) -> CentralityVector {
    let n = g.n();
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; n];
            let mut scratch = BrandesScratch::new(n);
            for s in b * BLOCK..((b + 1) * BLOCK).min(n) {
                scratch.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut scores = vec![0.0; n];
    for part in &partials {
        for (x, p) in scores.iter_mut().zip(part) {
            *x += p;
        }
    }
    // Every unordered pair was visited from both ends.
    for x in &mut scores {
        *x /= 2.0;
    }
    CentralityVector {
        metric: Metric::Betweenness,
        scores,
        inv_closeness_sum: None,
    }
}

/// Vertices sorted by score descending, ties broken by ascending id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    order: Vec<Vertex>,
    rank_of: Vec<usize>,
}

impl Ranking {
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<Vertex> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| compare_desc(scores[a], scores[b]).then(a.cmp(&b)));
        let mut rank_of = vec![0; scores.len()];
        for (r, &v) in order.iter().enumerate() {
            rank_of[v] = r;
        }
        Ranking { order, rank_of }
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    /// Zero-based rank of `v` (0 is the most central vertex).
    pub fn rank_of(&self, v: Vertex) -> usize {
        self.rank_of[v]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The first `k` vertices in rank order.
    pub fn prefix(&self, k: usize) -> Result<&[Vertex]> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidK {
                k,
                n: self.len(),
                min: 1,
            });
        }
        Ok(&self.order[..k])
    }

    pub fn top_k(&self, k: usize) -> Result<BTreeSet<Vertex>> {
        Ok(self.prefix(k)?.iter().copied().collect())
    }
}

fn compare_desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

pub fn rank(cv: &CentralityVector) -> Ranking {
    Ranking::from_scores(&cv.scores)
}

pub fn top_k(r: &Ranking, k: usize) -> Result<BTreeSet<Vertex>> {
    r.top_k(k)
}
