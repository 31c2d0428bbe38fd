//! Rank-preservation bounds.
//!
//! For two vertices `v1` ranked above `v2`, each metric gets a lower bound on
//! the score gap that keeps `v1` above `v2` after edges are added:
//!
//! * degree: `v1` cannot lose degree, so a gap larger than the additions at
//!   `v2` is enough;
//! * closeness (on distance sums): an edge from `v2` to a vertex `t` at
//!   distance `d_t` shortens the sum by at least `(d_t - 1) * R_t`, where `R_t`
//!   counts `t` and every vertex with a shortest path from `v2` through `t`;
//! * betweenness: `v1` loses pairs whose shortest paths avoid it afterwards
//!   (P) or are diluted by new equally short paths (Q), `v2` gains new pairs
//!   (R). Pairs outside those three groups are tracked as a residual so the
//!   decomposition adds up to the exact change.
//!
//! Certificates come in two modes. `Realized` evaluates a bound against one
//! concrete perturbation. `Expected` needs no sampling: it plugs the
//! per-pair addition probability `epsilon / n` into the same estimators.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{betweenness_centrality, bfs_distances, distance_sum, Metric};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::perturbation::PerturbedTrial;

pub const DEFAULT_DECOMPOSE_CAP: usize = 2_000;

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    Expected,
    Realized,
}

/// `safe` holds iff `gap > bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub metric: Metric,
    pub v1: Option<Vertex>,
    pub v2: Option<Vertex>,
    pub gap: f64,
    pub bound: f64,
    pub safe: bool,
    pub mode: BoundMode,
}

impl GapCertificate {
    pub fn new(metric: Metric, gap: f64, bound: f64, mode: BoundMode) -> Self {
        GapCertificate {
            metric,
            v1: None,
            v2: None,
            gap,
            bound,
            safe: gap > bound,
            mode,
        }
    }

    pub fn for_pair(mut self, v1: Vertex, v2: Vertex) -> Self {
        self.v1 = Some(v1);
        self.v2 = Some(v2);
        self
    }
}

/// Degree bound: `v2` gains about `epsilon` edges, `v1` loses none.
pub fn degree_gap_bound(gap: f64, epsilon: f64) -> GapCertificate {
    GapCertificate::new(Metric::Degree, gap, epsilon, BoundMode::Expected)
}

/// True iff the original degree gap exceeds the edges actually added at `v2`.
/// Whenever this holds `v1` keeps a degree at least that of `v2`.
pub fn degree_gap_check(trial: &PerturbedTrial, v1: Vertex, v2: Vertex) -> Result<bool> {
    trial.graph.check_vertex(v1)?;
    trial.graph.check_vertex(v2)?;
    let add1 = trial.additions_to(v1);
    let add2 = trial.additions_to(v2);
    let d1 = trial.graph.degree(v1) - add1;
    let d2 = trial.graph.degree(v2) - add2;
    if d1 < d2 {
        return Err(Error::InvalidArgument(format!(
            "vertex {v1} (degree {d1}) does not outrank {v2} (degree {d2})"
        )));
    }
    Ok(d1 - d2 > add2)
}

/// Shortest-path distances and path counts from one source.
#[derive(Debug, Clone)]
pub(crate) struct PathCounts {
    pub dist: Vec<u32>,
    pub sigma: Vec<f64>,
}

pub(crate) fn path_counts(g: &Graph, source: Vertex) -> PathCounts {
    let n = g.n();
    let mut dist = vec![UNREACHED; n];
    let mut sigma = vec![0.0; n];
    let mut queue = VecDeque::with_capacity(n);
    dist[source] = 0;
    sigma[source] = 1.0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == UNREACHED {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[u] + 1 {
                sigma[w] += sigma[u];
            }
        }
    }
    PathCounts { dist, sigma }
}

/// For every vertex `t`, the number of vertices (including `t`) having at
/// least one shortest path from `root` that passes through `t`. Unreachable
/// vertices get 0.
pub fn shortest_path_reach_counts(g: &Graph, root: Vertex) -> Vec<usize> {
    let dist = bfs_distances(g, root);
    let n = g.n();
    let words = n.div_ceil(64);
    let mut order: Vec<Vertex> = (0..n).filter(|&v| dist[v] != UNREACHED).collect();
    order.sort_by_key(|&v| dist[v]);

    let mut slot = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        slot[v] = i;
    }
    let mut sets = vec![0u64; order.len() * words];
    for i in (0..order.len()).rev() {
        let v = order[i];
        sets[i * words + v / 64] |= 1 << (v % 64);
        for &w in g.neighbors(v) {
            if dist[w] != UNREACHED && dist[w] == dist[v] + 1 {
                let j = slot[w];
                // j > i: children come later in BFS order.
                let (head, tail) = sets.split_at_mut(j * words);
                let dst = &mut head[i * words..(i + 1) * words];
                for (d, s) in dst.iter_mut().zip(&tail[..words]) {
                    *d |= *s;
                }
            }
        }
    }
    let mut counts = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        counts[v] = sets[i * words..(i + 1) * words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum();
    }
    counts
}

/// Reach count of a single `t` (see [`shortest_path_reach_counts`]), by a
/// forward walk over the shortest-path DAG.
fn reach_count_from(g: &Graph, dist: &[u32], t: Vertex) -> usize {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![t];
    seen[t] = true;
    let mut count = 0;
    while let Some(u) = stack.pop() {
        count += 1;
        for &w in g.neighbors(u) {
            if !seen[w] && dist[w] != UNREACHED && dist[w] == dist[u] + 1 {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetImpact {
    pub t: Vertex,
    /// Hop distance from `v` in the original graph; `None` if unreachable.
    pub distance: Option<u32>,
    pub reach: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessImpact {
    pub v: Vertex,
    pub added_targets: Vec<TargetImpact>,
    /// `sum (d_t - 1) * R_t` over reachable targets.
    pub worst_case_decrease: f64,
    /// Targets left out of the sum because `v` cannot reach them.
    pub unreachable: Vec<Vertex>,
}

/// Distance-sum decrease bound for `v` if edges `v - t` are added for every
/// `t` in `targets`.
pub fn closeness_worst_case_decrease(
    g: &Graph,
    v: Vertex,
    targets: &[Vertex],
) -> Result<ClosenessImpact> {
    g.check_vertex(v)?;
    let dist = bfs_distances(g, v);
    let mut added_targets = Vec::with_capacity(targets.len());
    let mut unreachable = Vec::new();
    let mut total = 0.0;
    for &t in targets {
        g.check_vertex(t)?;
        if t == v || g.has_edge(v, t) {
            return Err(Error::InvalidArgument(format!(
                "target {t} is {v} itself or already adjacent to it"
            )));
        }
        if dist[t] == UNREACHED {
            unreachable.push(t);
            added_targets.push(TargetImpact {
                t,
                distance: None,
                reach: 0,
            });
            continue;
        }
        let reach = reach_count_from(g, &dist, t);
        total += f64::from(dist[t] - 1) * reach as f64;
        added_targets.push(TargetImpact {
            t,
            distance: Some(dist[t]),
            reach,
        });
    }
    Ok(ClosenessImpact {
        v,
        added_targets,
        worst_case_decrease: total,
        unreachable,
    })
}

/// Checks `sum_before(v) - sum_after(v) >= (d_x - 1) * R_x` for the single
/// new edge `v - x`. This always holds; a `false` means a bug.
pub fn closeness_single_edge_property(g: &Graph, v: Vertex, x: Vertex) -> Result<bool> {
    let impact = closeness_worst_case_decrease(g, v, &[x])?;
    match impact.added_targets[0].distance {
        Some(d) if d >= 2 => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{x} must be reachable from {v} at distance >= 2"
            )))
        }
    }
    let before = distance_sum(g, v);
    let after = distance_sum(&g.with_added_edges(&[(v, x)]), v);
    Ok((before - after) as f64 >= impact.worst_case_decrease)
}

/// `sum (d_t - 1) R_t` over every non-neighbor `t` reachable from `v`: the
/// worst-case decrease if all of them were joined to `v`.
pub fn closeness_exposure(g: &Graph, v: Vertex) -> Result<f64> {
    g.check_vertex(v)?;
    let dist = bfs_distances(g, v);
    let reach = shortest_path_reach_counts(g, v);
    Ok((0..g.n())
        .filter(|&t| dist[t] != UNREACHED && dist[t] >= 2)
        .map(|t| f64::from(dist[t] - 1) * reach[t] as f64)
        .sum())
}

/// Expected distance-sum decrease at `v`: every non-neighbor is joined to `v`
/// with probability `epsilon / n`.
pub fn closeness_expected_decrease(g: &Graph, v: Vertex, epsilon: f64) -> Result<f64> {
    Ok(epsilon / g.n() as f64 * closeness_exposure(g, v)?)
}

/// Closeness certificate on distance sums: `gap = sum(v2) - sum(v1)`.
pub fn closeness_expected_certificate(
    g: &Graph,
    v1: Vertex,
    v2: Vertex,
    epsilon: f64,
) -> Result<GapCertificate> {
    g.check_vertex(v1)?;
    let gap = distance_sum(g, v2) as f64 - distance_sum(g, v1) as f64;
    let bound = closeness_expected_decrease(g, v2, epsilon)?;
    Ok(GapCertificate::new(Metric::Closeness, gap, bound, BoundMode::Expected).for_pair(v1, v2))
}

/// Realized closeness certificate: the bound is the worst-case decrease at
/// `v2` from the edges the trial actually attached to it.
pub fn closeness_realized_certificate(
    g: &Graph,
    trial: &PerturbedTrial,
    v1: Vertex,
    v2: Vertex,
) -> Result<GapCertificate> {
    let targets: Vec<Vertex> = trial
        .added_edges
        .iter()
        .filter_map(|&(a, b)| match (a == v2, b == v2) {
            (true, _) => Some(b),
            (_, true) => Some(a),
            _ => None,
        })
        .collect();
    let impact = closeness_worst_case_decrease(g, v2, &targets)?;
    let gap = distance_sum(g, v2) as f64 - distance_sum(g, v1) as f64;
    Ok(GapCertificate::new(
        Metric::Closeness,
        gap,
        impact.worst_case_decrease,
        BoundMode::Realized,
    )
    .for_pair(v1, v2))
}

/// Change in the betweenness of `v` split by how each pair `{s, t}` changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BcDecomposition {
    pub v: Vertex,
    /// Pairs that routed through `v` before and no longer do.
    pub loss_p: f64,
    /// Pairs at unchanged distance that gained shortest paths, charged
    /// `q * sigma(v) / ((sigma + q) * sigma)` with `q` the number of new paths.
    pub loss_q: f64,
    /// Pairs that newly route through `v`.
    pub gain_r: f64,
    /// Everything else, e.g. a shorter distance that still passes through `v`,
    /// or new paths of a Q pair that also use `v`.
    pub residual: f64,
    pub total_change: f64,
    pub pairs_p: usize,
    pub pairs_q: usize,
    pub pairs_r: usize,
    pub pairs_residual: usize,
}

impl BcDecomposition {
    fn add(&mut self, other: &BcDecomposition) {
        self.loss_p += other.loss_p;
        self.loss_q += other.loss_q;
        self.gain_r += other.gain_r;
        self.residual += other.residual;
        self.pairs_p += other.pairs_p;
        self.pairs_q += other.pairs_q;
        self.pairs_r += other.pairs_r;
        self.pairs_residual += other.pairs_residual;
    }

    /// `gain_r - loss_p - loss_q + residual`.
    pub fn category_sum(&self) -> f64 {
        self.gain_r - self.loss_p - self.loss_q + self.residual
    }
}

/// Fraction of `s`-`t` shortest paths through `v`, with path counts from `s`
/// and from `v`.
#[inline]
fn fraction_through(from_s: &PathCounts, from_v: &PathCounts, v: Vertex, t: Vertex) -> (f64, f64) {
    let d = from_s.dist[t];
    if d == UNREACHED || from_s.dist[v] == UNREACHED || from_v.dist[t] == UNREACHED {
        return (0.0, 0.0);
    }
    if from_s.dist[v] + from_v.dist[t] != d {
        return (0.0, 0.0);
    }
    let through = from_s.sigma[v] * from_v.sigma[t];
    (through / from_s.sigma[t], through)
}

const SOURCE_BLOCK: usize = 16;

/// Exact P/Q/R/residual split of `BC_trial(v) - BC(v)` for each `v`.
pub fn bc_decompose_many(
    g: &Graph,
    trial: &PerturbedTrial,
    vs: &[Vertex],
    cap: usize,
) -> Result<Vec<BcDecomposition>> {
    let n = g.n();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    if trial.graph.n() != n {
        return Err(Error::Mismatch(
            "trial graph has a different vertex count".into(),
        ));
    }
    for &v in vs {
        g.check_vertex(v)?;
    }
    let pert = &trial.graph;
    let from_v: Vec<(PathCounts, PathCounts)> = vs
        .iter()
        .map(|&v| (path_counts(g, v), path_counts(pert, v)))
        .collect();

    let partials: Vec<Vec<BcDecomposition>> = (0..n.div_ceil(SOURCE_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc: Vec<BcDecomposition> = vs
                .iter()
                .map(|&v| BcDecomposition {
                    v,
                    ..Default::default()
                })
                .collect();
            for s in b * SOURCE_BLOCK..((b + 1) * SOURCE_BLOCK).min(n) {
                let old_s = path_counts(g, s);
                let new_s = path_counts(pert, s);
                for ((&v, (old_v, new_v)), out) in vs.iter().zip(&from_v).zip(acc.iter_mut()) {
                    if s == v {
                        continue;
                    }
                    for t in s + 1..n {
                        if t == v {
                            continue;
                        }
                        let (f_old, through_old) = fraction_through(&old_s, old_v, v, t);
                        let (f_new, _) = fraction_through(&new_s, new_v, v, t);
                        classify_pair(
                            out,
                            f_old,
                            f_new,
                            through_old,
                            (old_s.dist[t], new_s.dist[t]),
                            (old_s.sigma[t], new_s.sigma[t]),
                        );
                    }
                }
            }
            acc
        })
        .collect();

    let mut out: Vec<BcDecomposition> = vs
        .iter()
        .map(|&v| BcDecomposition {
            v,
            ..Default::default()
        })
        .collect();
    for part in &partials {
        for (o, p) in out.iter_mut().zip(part) {
            o.add(p);
        }
    }
    for o in &mut out {
        o.total_change = o.category_sum();
    }
    Ok(out)
}

fn classify_pair(
    out: &mut BcDecomposition,
    f_old: f64,
    f_new: f64,
    through_old: f64,
    (d_old, d_new): (u32, u32),
    (sigma_old, sigma_new): (f64, f64),
) {
    if f_old > 0.0 && f_new == 0.0 {
        out.loss_p += f_old;
        out.pairs_p += 1;
    } else if f_old > 0.0 && d_old == d_new && sigma_new > sigma_old {
        // Old paths keep their length, so they are all still shortest.
        let diluted = through_old / sigma_new;
        out.loss_q += f_old - diluted;
        out.residual += f_new - diluted;
        out.pairs_q += 1;
    } else if f_old == 0.0 && f_new > 0.0 {
        out.gain_r += f_new;
        out.pairs_r += 1;
    } else if f_new != f_old {
        out.residual += f_new - f_old;
        out.pairs_residual += 1;
    }
}

pub fn bc_decompose(
    g: &Graph,
    trial: &PerturbedTrial,
    v: Vertex,
    cap: usize,
) -> Result<BcDecomposition> {
    Ok(bc_decompose_many(g, trial, &[v], cap)?.remove(0))
}

/// Realized betweenness certificate with the data needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetweennessCheck {
    pub certificate: GapCertificate,
    pub residual_v1: f64,
    pub residual_v2: f64,
    pub bc_original: (f64, f64),
    pub bc_perturbed: (f64, f64),
    /// `BC_trial(v1) >= BC_trial(v2)`.
    pub order_preserved: bool,
}

impl BetweennessCheck {
    /// Residuals that do not work against `v1`; with these, a safe
    /// certificate guarantees the order is kept.
    pub fn residuals_favor_v1(&self) -> bool {
        self.residual_v1 >= self.residual_v2
    }
}

/// Bound `loss_P(v1) + loss_Q(v1) + gain_R(v2)` against the original gap.
pub fn betweenness_gap_bound(
    g: &Graph,
    trial: &PerturbedTrial,
    v1: Vertex,
    v2: Vertex,
    cap: usize,
) -> Result<BetweennessCheck> {
    let parts = bc_decompose_many(g, trial, &[v1, v2], cap)?;
    let before = betweenness_centrality(g).scores;
    let after = betweenness_centrality(&trial.graph).scores;
    let bound = parts[0].loss_p + parts[0].loss_q + parts[1].gain_r;
    let gap = before[v1] - before[v2];
    Ok(BetweennessCheck {
        certificate: GapCertificate::new(Metric::Betweenness, gap, bound, BoundMode::Realized)
            .for_pair(v1, v2),
        residual_v1: parts[0].residual,
        residual_v2: parts[1].residual,
        bc_original: (before[v1], before[v2]),
        bc_perturbed: (after[v1], after[v2]),
        order_preserved: after[v1] >= after[v2],
    })
}

/// Sampling-free betweenness impact estimates for one vertex at one noise
/// level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedBcImpact {
    pub v: Vertex,
    pub epsilon: f64,
    /// Expected loss: each pair through `v` weighted by the chance that some
    /// added edge creates an equally short or shorter route between its ends.
    pub loss: f64,
    /// Expected gain: for every possible new edge `v - t`, the number of pairs
    /// `(x, y)` with `x` strictly closer to `v` than to `t` and `y` strictly
    /// closer to `t` than to `v`, weighted by `epsilon / n`.
    pub gain: f64,
}

/// Computes [`ExpectedBcImpact`] for each of `vs` at each of `epsilons`.
/// The result is indexed `[epsilon][vertex]`.
///
/// The loss term for a pair `{s, t}` at distance `D` counts the vertex pairs
/// `(a, b)` with `d(s, a) + 1 + d(b, t) <= D` (an upper bound on the new edges
/// that could reroute it) and applies `1 - (1 - p)^count`.
pub fn betweenness_expected_impact(
    g: &Graph,
    epsilons: &[f64],
    vs: &[Vertex],
) -> Result<Vec<Vec<ExpectedBcImpact>>> {
    let n = g.n();
    for &v in vs {
        g.check_vertex(v)?;
    }
    let log_keep: Vec<f64> = epsilons
        .iter()
        .map(|&eps| (1.0 - (eps / n as f64).min(1.0)).ln())
        .collect();

    // within[t][j] = number of vertices within distance j of t.
    let within: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|t| {
            let d = bfs_distances(g, t);
            let ecc = d
                .iter()
                .filter(|&&x| x != UNREACHED)
                .max()
                .copied()
                .unwrap_or(0);
            let mut hist = vec![0u32; ecc as usize + 1];
            for x in d.into_iter().filter(|&x| x != UNREACHED) {
                hist[x as usize] += 1;
            }
            for j in 1..hist.len() {
                hist[j] += hist[j - 1];
            }
            hist
        })
        .collect();
    let cum = |t: Vertex, j: u32| -> f64 {
        let h = &within[t];
        f64::from(h[(j as usize).min(h.len() - 1)])
    };

    let from_v: Vec<PathCounts> = vs.iter().map(|&v| path_counts(g, v)).collect();
    let levels = epsilons.len();

    // Per block: loss per (vertex, level), then the unscaled gain per vertex.
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(SOURCE_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut loss = vec![0.0; vs.len() * levels];
            let mut gain = vec![0.0; vs.len()];
            for s in b * SOURCE_BLOCK..((b + 1) * SOURCE_BLOCK).min(n) {
                let from_s = path_counts(g, s);
                for (i, (&v, pv)) in vs.iter().zip(&from_v).enumerate() {
                    if s == v {
                        continue;
                    }
                    for t in s + 1..n {
                        if t == v {
                            continue;
                        }
                        let (f, _) = fraction_through(&from_s, pv, v, t);
                        if f == 0.0 {
                            continue;
                        }
                        let d = from_s.dist[t];
                        let mut count = 0.0;
                        for j in 0..d {
                            let at_j = cum(s, j) - if j == 0 { 0.0 } else { cum(s, j - 1) };
                            count += at_j * cum(t, d - 1 - j);
                        }
                        for (l, lk) in log_keep.iter().enumerate() {
                            loss[i * levels + l] += f * (1.0 - (count * lk).exp());
                        }
                    }
                    if !g.has_edge(v, s) {
                        let (mut near_v, mut near_s) = (0.0, 0.0);
                        for x in 0..n {
                            let (dv, ds) = (pv.dist[x], from_s.dist[x]);
                            if x != v && dv < ds {
                                near_v += 1.0;
                            } else if ds < dv {
                                near_s += 1.0;
                            }
                        }
                        gain[i] += near_v * near_s;
                    }
                }
            }
            (loss, gain)
        })
        .collect();

    let mut loss = vec![0.0; vs.len() * levels];
    let mut gain = vec![0.0; vs.len()];
    for (pl, pg) in &partials {
        for (a, b) in loss.iter_mut().zip(pl) {
            *a += b;
        }
        for (a, b) in gain.iter_mut().zip(pg) {
            *a += b;
        }
    }
    Ok(epsilons
        .iter()
        .enumerate()
        .map(|(l, &epsilon)| {
            let p = epsilon / n as f64;
            vs.iter()
                .enumerate()
                .map(|(i, &v)| ExpectedBcImpact {
                    v,
                    epsilon,
                    loss: loss[i * levels + l],
                    gain: gain[i] * p,
                })
                .collect()
        })
        .collect())
}
