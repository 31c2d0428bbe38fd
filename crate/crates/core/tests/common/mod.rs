//! Shared test helpers: seeded graph generators, brute-force oracles and
//! dataset lookup.
#![allow(dead_code)]

use std::path::PathBuf;

use netstab::graph::{load_edge_list, IngestOptions};
use netstab::{Graph, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INF: u32 = u32::MAX;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi `G(n, p)`.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Random recursive tree plus `extra` random chords: always connected.
pub fn connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((r.random_range(0..v), v));
    }
    for _ in 0..extra {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, edges)
}

/// Random pairs that are not edges of `g`.
pub fn random_non_edges(g: &Graph, count: usize, seed: u64) -> Vec<(Vertex, Vertex)> {
    let mut r = rng(seed);
    let n = g.n();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * (count + 1) {
        attempts += 1;
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        let pair = (a.min(b), a.max(b));
        if a != b && !g.has_edge(a, b) && !out.contains(&pair) {
            out.push(pair);
        }
    }
    out.sort();
    out
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn floyd(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.n();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                if d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Shortest-path counts `sigma[s][t]` from Floyd distances: a path to `t`
/// extends a shortest path to a neighbor one step closer.
pub fn path_counts(g: &Graph, d: &[Vec<u32>]) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut by_dist: Vec<Vertex> = (0..n).filter(|&t| d[s][t] != INF).collect();
        by_dist.sort_by_key(|&t| d[s][t]);
        sigma[s][s] = 1.0;
        for &t in by_dist.iter().skip(1) {
            sigma[s][t] = g
                .neighbors(t)
                .iter()
                .filter(|&&w| d[s][w] != INF && d[s][w] + 1 == d[s][t])
                .map(|&w| sigma[s][w])
                .sum();
        }
    }
    sigma
}

/// Betweenness by summing `sigma_sv * sigma_vt / sigma_st` over unordered
/// pairs.
pub fn betweenness_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let d = floyd(g);
    let sigma = path_counts(g, &d);
    let mut bc = vec![0.0; n];
    for (v, score) in bc.iter_mut().enumerate() {
        for s in 0..n {
            for t in s + 1..n {
                if s == v || t == v || d[s][t] == INF || d[s][v] == INF || d[v][t] == INF {
                    continue;
                }
                if d[s][v] + d[v][t] == d[s][t] {
                    *score += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
    }
    bc
}

/// `1 / sum of distances to reachable vertices`, 0 for isolated vertices.
pub fn closeness_oracle(g: &Graph) -> Vec<f64> {
    floyd(g)
        .iter()
        .map(|row| {
            let s: u64 = row
                .iter()
                .filter(|&&x| x != INF)
                .map(|&x| u64::from(x))
                .sum();
            if s == 0 {
                0.0
            } else {
                1.0 / s as f64
            }
        })
        .collect()
}

pub fn distance_sum_oracle(g: &Graph, v: Vertex) -> u64 {
    floyd(g)[v]
        .iter()
        .filter(|&&x| x != INF)
        .map(|&x| u64::from(x))
        .sum()
}

/// Directory holding the real-world edge lists: `NETSTAB_DATA` if set,
/// otherwise `data/` at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("NETSTAB_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Loads `<data_dir>/<name>.txt`, or explains why it could not.
pub fn dataset(name: &str) -> Result<Graph, String> {
    let path = data_dir().join(format!("{name}.txt"));
    if !path.exists() {
        return Err(format!("dataset {} not found", path.display()));
    }
    load_edge_list(&path, &IngestOptions::default()).map_err(|e| e.to_string())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
