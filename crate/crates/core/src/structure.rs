//! Diagnostics computed on the unperturbed graph: stable clusters of
//! centrality values, top-k subgraph density, and how many high-ranked
//! neighbors the top-k vertices share.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::centrality::{CentralityVector, Metric, Ranking};
use crate::error::{Error, Result};
use crate::graph::{density_of, Graph, Vertex};
use crate::stability::jaccard;

pub const DEFAULT_THETA: f64 = 0.1;
pub const DEFAULT_POOLS: [usize; 4] = [100, 50, 25, 10];
pub const DEFAULT_DENSITY_THRESHOLD: f64 = 0.6;

/// Ranks `first..=last`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub first: usize,
    pub last: usize,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, rank: usize) -> bool {
        (self.first..=self.last).contains(&rank)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableClustering {
    pub metric: Metric,
    pub prefix_size: usize,
    pub theta: f64,
    pub clusters: Vec<Cluster>,
    /// Ranks `r` whose score is zero, where the relative gap to `r + 1` is
    /// undefined. Such gaps never open a new cluster.
    pub degenerate: Vec<usize>,
    /// Vertex and score at each rank `1..=prefix_size`.
    pub members: Vec<(Vertex, f64)>,
}

impl StableClustering {
    /// Index of the cluster holding 1-based `rank`.
    pub fn cluster_of(&self, rank: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(rank))
    }

    /// Rows `rank,vertex,score,cluster_id` (vertex printed by label).
    pub fn write_csv<W: Write>(&self, g: &Graph, prefix: &str, out: &mut W) -> std::io::Result<()> {
        for (i, &(v, score)) in self.members.iter().enumerate() {
            let rank = i + 1;
            let cluster = self.cluster_of(rank).expect("clusters cover the prefix");
            writeln!(out, "{prefix}{rank},{},{score},{cluster}", g.label(v))?;
        }
        Ok(())
    }
}

/// Greedy scan over ranks `1..=m`: a cluster closes after rank `r` when
/// `(X(r) - X(r+1)) / X(r) >= theta`.
pub fn stable_clusters(cv: &CentralityVector, m: usize, theta: f64) -> Result<StableClustering> {
    stable_clusters_ranked(cv, &cv.rank(), m, theta)
}

pub fn stable_clusters_ranked(
    cv: &CentralityVector,
    ranking: &Ranking,
    m: usize,
    theta: f64,
) -> Result<StableClustering> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "theta must be positive, got {theta}"
        )));
    }
    let prefix = ranking.prefix(m)?;
    let scores: Vec<f64> = prefix.iter().map(|&v| cv.scores[v]).collect();
    let (clusters, degenerate) = split_by_relative_gap(&scores, theta);
    Ok(StableClustering {
        metric: cv.metric,
        prefix_size: m,
        theta,
        clusters,
        degenerate,
        members: prefix.iter().copied().zip(scores).collect(),
    })
}

/// Partition of descending `scores` into clusters; also returns the 1-based
/// ranks with zero score.
pub fn split_by_relative_gap(scores: &[f64], theta: f64) -> (Vec<Cluster>, Vec<usize>) {
    let mut clusters = Vec::new();
    let mut degenerate = Vec::new();
    let mut first = 1;
    for r in 1..=scores.len() {
        let here = scores[r - 1];
        if here == 0.0 {
            degenerate.push(r);
        }
        let boundary = match scores.get(r) {
            None => true,
            Some(_) if here == 0.0 => false,
            Some(&next) => (here - next) / here >= theta,
        };
        if boundary {
            clusters.push(Cluster { first, last: r });
            first = r + 1;
        }
    }
    (clusters, degenerate)
}

/// Cumulative cluster sizes: the values of k that end a cluster.
pub fn cluster_boundary_ks(sc: &StableClustering) -> Vec<usize> {
    sc.clusters.iter().map(|c| c.last).collect()
}

/// Density of the subgraph induced by the top `k` vertices.
pub fn subgraph_density(g: &Graph, r: &Ranking, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK {
            k,
            n: g.n(),
            min: 2,
        });
    }
    Ok(density_of(g, r.prefix(k)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    Low,
    Medium,
    High,
}

/// Cut points on the average JI at the smallest pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandThresholds {
    pub high: f64,
    pub medium: f64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds {
            high: 0.5,
            medium: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolPoint {
    /// Pool size as configured.
    pub pool: usize,
    /// Pool size actually used (`min(pool, n)`).
    pub effective: usize,
    pub avg_ji: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichClubStats {
    pub k: usize,
    pub density: f64,
    pub common_neighbor_curve: Vec<PoolPoint>,
    pub band: Band,
    pub thresholds: BandThresholds,
}

/// Average, over pairs `(u, v)` of the top `k`, of the Jaccard index between
/// their neighbors inside the top-`N` pool (the pair itself excluded). Pairs
/// with two empty restricted neighborhoods count as 0.
pub fn common_top_neighbors(
    g: &Graph,
    r: &Ranking,
    k: usize,
    pools: &[usize],
) -> Result<Vec<PoolPoint>> {
    if k < 2 {
        return Err(Error::InvalidK {
            k,
            n: g.n(),
            min: 2,
        });
    }
    let top = r.prefix(k)?;
    let pairs = (k * (k - 1) / 2) as f64;
    pools
        .iter()
        .map(|&pool| {
            let effective = pool.min(g.n());
            if effective == 0 {
                return Err(Error::InvalidArgument("pool size must be positive".into()));
            }
            let in_pool = r.top_k(effective)?;
            let restricted: Vec<BTreeSet<Vertex>> = top
                .iter()
                .map(|&u| {
                    g.neighbors(u)
                        .iter()
                        .copied()
                        .filter(|w| in_pool.contains(w))
                        .collect()
                })
                .collect();
            let mut total = 0.0;
            for i in 0..k {
                for j in i + 1..k {
                    let (u, v) = (top[i], top[j]);
                    let a: BTreeSet<Vertex> =
                        restricted[i].iter().copied().filter(|&w| w != v).collect();
                    let b: BTreeSet<Vertex> =
                        restricted[j].iter().copied().filter(|&w| w != u).collect();
                    total += match jaccard(&a, &b) {
                        Ok(ji) => ji,
                        Err(Error::EmptySets) => 0.0,
                        Err(e) => return Err(e),
                    };
                }
            }
            Ok(PoolPoint {
                pool,
                effective,
                avg_ji: total / pairs,
            })
        })
        .collect()
}

/// Band read off the `N = 10` point of the curve.
pub fn band_classify(curve: &[PoolPoint], thresholds: &BandThresholds) -> Result<Band> {
    let point = curve.iter().find(|p| p.pool == 10).ok_or_else(|| {
        Error::InvalidArgument("common-neighbor curve has no N = 10 point".into())
    })?;
    Ok(if point.avg_ji >= thresholds.high {
        Band::High
    } else if point.avg_ji >= thresholds.medium {
        Band::Medium
    } else {
        Band::Low
    })
}

pub fn rich_club_stats(
    g: &Graph,
    r: &Ranking,
    k: usize,
    pools: &[usize],
    thresholds: &BandThresholds,
) -> Result<RichClubStats> {
    let curve = common_top_neighbors(g, r, k, pools)?;
    Ok(RichClubStats {
        k,
        density: subgraph_density(g, r, k)?,
        band: band_classify(&curve, thresholds)?,
        common_neighbor_curve: curve,
        thresholds: *thresholds,
    })
}

/// A dense core inside a sparse top-k set: the largest subset found by
/// repeatedly dropping the member with the fewest links to the rest, whose
/// density reaches `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseCore {
    pub members: Vec<Vertex>,
    pub density: f64,
}

pub fn dense_core(g: &Graph, top: &[Vertex], threshold: f64) -> Option<DenseCore> {
    let mut members: Vec<Vertex> = top.to_vec();
    while members.len() >= 3 {
        let density = density_of(g, &members);
        if density >= threshold {
            return Some(DenseCore { members, density });
        }
        let inside: BTreeSet<Vertex> = members.iter().copied().collect();
        // Drop the weakest member; on ties the lowest-ranked one (latest in list).
        let (drop_at, _) = members
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                (
                    i,
                    g.neighbors(v).iter().filter(|w| inside.contains(w)).count(),
                )
            })
            .min_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("at least three members");
        members.remove(drop_at);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::{degree_centrality, Ranking};
    use crate::graph::fixtures::*;

    fn cv(scores: &[f64]) -> CentralityVector {
        CentralityVector {
            metric: Metric::Betweenness,
            scores: scores.to_vec(),
            inv_closeness_sum: None,
        }
    }

    fn spans(sc: &StableClustering) -> Vec<(usize, usize)> {
        sc.clusters.iter().map(|c| (c.first, c.last)).collect()
    }

    #[test]
    fn planted_gap() {
        let sc = stable_clusters(&cv(&[10.0, 9.8, 9.7, 5.0, 4.9]), 5, 0.1).unwrap();
        assert_eq!(spans(&sc), vec![(1, 3), (4, 5)]);
        assert_eq!(cluster_boundary_ks(&sc), vec![3, 5]);
    }

    #[test]
    fn equal_scores_form_one_cluster() {
        let sc = stable_clusters(&cv(&[3.0; 7]), 7, 0.05).unwrap();
        assert_eq!(spans(&sc), vec![(1, 7)]);
        assert_eq!(cluster_boundary_ks(&sc), vec![7]);
    }

    #[test]
    fn geometric_scores_split_everywhere() {
        let scores: Vec<f64> = (0..6).map(|i| 64.0 * 0.5f64.powi(i)).collect();
        let sc = stable_clusters(&cv(&scores), 6, 0.4).unwrap();
        assert_eq!(sc.clusters.len(), 6);
        assert_eq!(cluster_boundary_ks(&sc), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn zero_scores_are_degenerate() {
        let sc = stable_clusters(&cv(&[4.0, 0.0, 0.0]), 3, 0.1).unwrap();
        assert_eq!(spans(&sc), vec![(1, 1), (2, 3)]);
        assert_eq!(sc.degenerate, vec![2, 3]);
    }

    #[test]
    fn bad_clustering_inputs() {
        assert!(stable_clusters(&cv(&[1.0, 2.0]), 3, 0.1).is_err());
        assert!(stable_clusters(&cv(&[1.0, 2.0]), 2, 0.0).is_err());
    }

    #[test]
    fn clique_density_and_neighbors() {
        // K5 plus a pendant path; degree puts the clique on top.
        let g = Graph::from_edges(
            8,
            [
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 7),
            ],
        );
        let r = degree_centrality(&g).rank();
        assert_eq!(subgraph_density(&g, &r, 5).unwrap(), 1.0);
        assert!(matches!(
            subgraph_density(&g, &r, 1),
            Err(Error::InvalidK { .. })
        ));

        // Pool {0..4} only: every pair shares exactly the other three members.
        let curve = common_top_neighbors(&g, &r, 5, &[5]).unwrap();
        assert_eq!(curve[0].avg_ji, 1.0);
    }

    #[test]
    fn star_pair_shares_nothing() {
        let g = star(6);
        let r = degree_centrality(&g).rank();
        let curve = common_top_neighbors(&g, &r, 2, &[7]).unwrap();
        assert_eq!(curve[0].avg_ji, 0.0);
    }

    #[test]
    fn bands() {
        let t = BandThresholds::default();
        let point = |avg_ji| {
            vec![PoolPoint {
                pool: 10,
                effective: 10,
                avg_ji,
            }]
        };
        assert_eq!(band_classify(&point(1.0), &t).unwrap(), Band::High);
        assert_eq!(band_classify(&point(0.5), &t).unwrap(), Band::High);
        assert_eq!(band_classify(&point(0.3), &t).unwrap(), Band::Medium);
        assert_eq!(band_classify(&point(0.0), &t).unwrap(), Band::Low);
        let no_ten = vec![PoolPoint {
            pool: 25,
            effective: 25,
            avg_ji: 1.0,
        }];
        assert!(band_classify(&no_ten, &t).is_err());
    }

    #[test]
    fn pools_truncate_to_n() {
        let g = complete(6);
        let r = Ranking::from_scores(&[1.0; 6]);
        let curve = common_top_neighbors(&g, &r, 3, &DEFAULT_POOLS).unwrap();
        assert!(curve.iter().all(|p| p.effective == 6));
    }

    #[test]
    fn dense_core_inside_sparse_set() {
        // Triangle 0-1-2 plus three loosely attached vertices.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5)]);
        let top = [0, 1, 2, 3, 4, 5];
        assert!(density_of(&g, &top) < 0.6);
        let core = dense_core(&g, &top, 0.9).unwrap();
        let mut members = core.members.clone();
        members.sort();
        assert_eq!(members, vec![0, 1, 2]);
        assert_eq!(core.density, 1.0);
        assert!(dense_core(&path(6), &top, 0.9).is_none());
    }
}
