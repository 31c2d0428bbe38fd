//! Perturbation-free stability prediction.
//!
//! Three conditions are checked on the original graph for a given metric and
//! `k`:
//!
//! 1. the top-k boundary is protected: the rank-k vertex beats every vertex of
//!    the cluster that follows it by more than the expected noise impact;
//! 2. `k` closes a stable cluster;
//! 3. the top-k vertices form a dense, tightly shared neighborhood.
//!
//! All three true predicts high stability, all three false predicts low
//! stability, anything else abstains.
//!
//! Nothing in this module samples noise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    betweenness_expected_impact, closeness_exposure, degree_gap_bound, BoundMode, GapCertificate,
};
use crate::centrality::{compute, distance_sum, CentralityVector, Metric, Ranking};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::perturbation::check_epsilon;
use crate::stability::{StabilityClass, StabilityReport};
use crate::structure::{
    cluster_boundary_ks, dense_core, rich_club_stats, stable_clusters_ranked, Band, BandThresholds,
    DenseCore, RichClubStats, StableClustering, DEFAULT_DENSITY_THRESHOLD, DEFAULT_POOLS,
    DEFAULT_THETA,
};

/// How many ranks past the largest `k` the clustering looks at.
pub const DEFAULT_LOOKAHEAD: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateParams {
    pub theta: f64,
    pub density_threshold: f64,
    pub bands: BandThresholds,
    pub pools: Vec<usize>,
    pub lookahead: usize,
}

impl Default for TemplateParams {
    fn default() -> Self {
        TemplateParams {
            theta: DEFAULT_THETA,
            density_threshold: DEFAULT_DENSITY_THRESHOLD,
            bands: BandThresholds::default(),
            pools: DEFAULT_POOLS.to_vec(),
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    HighStable,
    LowStable,
    Indeterminate,
}

impl Prediction {
    pub fn from_conditions(c1: bool, c2: bool, c3: bool) -> Self {
        match (c1, c2, c3) {
            (true, true, true) => Prediction::HighStable,
            (false, false, false) => Prediction::LowStable,
            _ => Prediction::Indeterminate,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::HighStable => "high",
            Prediction::LowStable => "low",
            Prediction::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateVerdict {
    pub metric: Metric,
    pub k: usize,
    pub epsilon: f64,
    pub cond1_gap: bool,
    pub certificates: Vec<GapCertificate>,
    pub cond2_cluster: bool,
    pub boundary_ks: Vec<usize>,
    pub cond3_structure: bool,
    pub rich_club: RichClubStats,
    pub prediction: Prediction,
    pub notes: Vec<String>,
    /// Set when the top-k is sparse but a subset of it is dense.
    pub dense_core: Option<DenseCore>,
}

/// Everything about one metric that the verdicts for many `(k, epsilon)`
/// share: scores, ranking, clusters and the noise impact estimates.
#[derive(Debug, Clone)]
pub struct TemplateContext {
    pub metric: Metric,
    pub scores: CentralityVector,
    pub ranking: Ranking,
    pub clustering: StableClustering,
    pub params: TemplateParams,
    epsilons: Vec<f64>,
    /// Closeness: distance sum and `sum (d_t - 1) R_t` per candidate.
    closeness: BTreeMap<Vertex, (f64, f64)>,
    /// Betweenness: `(loss, gain)` per candidate, one entry per epsilon.
    betweenness: BTreeMap<Vertex, Vec<(f64, f64)>>,
}

impl TemplateContext {
    pub fn new(
        g: &Graph,
        metric: Metric,
        ks: &[usize],
        epsilons: &[f64],
        params: &TemplateParams,
    ) -> Result<Self> {
        let n = g.n();
        let max_k = ks
            .iter()
            .copied()
            .max()
            .ok_or_else(|| Error::InvalidArgument("no values of k given".into()))?;
        for &k in ks {
            if k < 2 || k > n {
                return Err(Error::InvalidK { k, n, min: 2 });
            }
        }
        for &eps in epsilons {
            check_epsilon(g, eps)?;
        }
        let scores = compute(g, metric);
        let ranking = scores.rank();
        let prefix = (max_k + params.lookahead.max(1)).min(n);
        let clustering = stable_clusters_ranked(&scores, &ranking, prefix, params.theta)?;
        let mut ctx = TemplateContext {
            metric,
            scores,
            ranking,
            clustering,
            params: params.clone(),
            epsilons: epsilons.to_vec(),
            closeness: BTreeMap::new(),
            betweenness: BTreeMap::new(),
        };

        let mut candidates: Vec<Vertex> = ks
            .iter()
            .flat_map(|&k| ctx.boundary_pairs(k))
            .flat_map(|(a, b)| [a, b])
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        match metric {
            Metric::Degree => {}
            Metric::Closeness => {
                for &v in &candidates {
                    let sum = distance_sum(g, v) as f64;
                    let raw = closeness_exposure(g, v)?;
                    ctx.closeness.insert(v, (sum, raw));
                }
            }
            Metric::Betweenness => {
                let per_level = betweenness_expected_impact(g, epsilons, &candidates)?;
                for (i, &v) in candidates.iter().enumerate() {
                    let row = per_level
                        .iter()
                        .map(|lvl| (lvl[i].loss, lvl[i].gain))
                        .collect();
                    ctx.betweenness.insert(v, row);
                }
            }
        }
        Ok(ctx)
    }

    /// `(rank-k vertex, v2)` for every `v2` in the cluster holding rank `k + 1`.
    fn boundary_pairs(&self, k: usize) -> Vec<(Vertex, Vertex)> {
        let order = self.ranking.order();
        if k >= order.len() {
            return Vec::new();
        }
        let v1 = order[k - 1];
        let last = self
            .clustering
            .cluster_of(k + 1)
            .map(|c| self.clustering.clusters[c].last)
            .unwrap_or(k + 1);
        (k + 1..=last).map(|r| (v1, order[r - 1])).collect()
    }

    fn certificate(&self, v1: Vertex, v2: Vertex, epsilon: f64) -> Result<GapCertificate> {
        let x = &self.scores.scores;
        let n = x.len() as f64;
        let cert = match self.metric {
            Metric::Degree => degree_gap_bound(x[v1] - x[v2], epsilon),
            Metric::Closeness => {
                let (s1, _) = self.closeness[&v1];
                let (s2, raw) = self.closeness[&v2];
                GapCertificate::new(
                    Metric::Closeness,
                    s2 - s1,
                    raw * epsilon / n,
                    BoundMode::Expected,
                )
            }
            Metric::Betweenness => {
                let level = self
                    .epsilons
                    .iter()
                    .position(|&e| e == epsilon)
                    .ok_or_else(|| {
                        Error::Mismatch(format!("noise level {epsilon} was not prepared"))
                    })?;
                let loss = self.betweenness[&v1][level].0;
                let gain = self.betweenness[&v2][level].1;
                GapCertificate::new(
                    Metric::Betweenness,
                    x[v1] - x[v2],
                    loss + gain,
                    BoundMode::Expected,
                )
            }
        };
        Ok(cert.for_pair(v1, v2))
    }

    pub fn evaluate(&self, g: &Graph, k: usize, epsilon: f64) -> Result<TemplateVerdict> {
        if k < 2 || k > g.n() {
            return Err(Error::InvalidK {
                k,
                n: g.n(),
                min: 2,
            });
        }
        if k > self.clustering.prefix_size {
            return Err(Error::Mismatch(format!("k = {k} was not prepared")));
        }
        let certificates = self
            .boundary_pairs(k)
            .into_iter()
            .map(|(a, b)| self.certificate(a, b, epsilon))
            .collect::<Result<Vec<_>>>()?;
        let cond1 = certificates.iter().all(|c| c.safe);
        let boundary_ks = cluster_boundary_ks(&self.clustering);
        let cond2 = boundary_ks.contains(&k);
        let rich_club =
            rich_club_stats(g, &self.ranking, k, &self.params.pools, &self.params.bands)?;
        let cond3 =
            rich_club.density >= self.params.density_threshold && rich_club.band == Band::High;

        let mut notes = Vec::new();
        if certificates.is_empty() {
            notes.push("no vertices below rank k; boundary condition holds vacuously".to_string());
        }
        let mut core = None;
        if rich_club.density < self.params.density_threshold {
            let top = self.ranking.prefix(k)?;
            if let Some(dc) = dense_core(g, top, self.params.density_threshold) {
                notes.push(format!(
                    "dense core of {} of the top {k} vertices (density {:.2})",
                    dc.members.len(),
                    dc.density
                ));
                core = Some(dc);
            }
        }
        Ok(TemplateVerdict {
            metric: self.metric,
            k,
            epsilon,
            cond1_gap: cond1,
            certificates,
            cond2_cluster: cond2,
            boundary_ks,
            cond3_structure: cond3,
            rich_club,
            prediction: Prediction::from_conditions(cond1, cond2, cond3),
            notes,
            dense_core: core,
        })
    }
}

pub fn evaluate_template(
    g: &Graph,
    metric: Metric,
    k: usize,
    epsilon: f64,
    params: &TemplateParams,
) -> Result<TemplateVerdict> {
    TemplateContext::new(g, metric, &[k], &[epsilon], params)?.evaluate(g, k, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    TrueNegative,
    FalseNegative,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub metric: Metric,
    pub k: usize,
    pub epsilon: f64,
    pub prediction: Prediction,
    pub observed: StabilityClass,
    pub mean_ji: f64,
    pub outcome: Outcome,
}

/// High predictions must be observed as High and low predictions as Low;
/// Medium observations count against either.
pub fn validate_prediction(
    verdict: &TemplateVerdict,
    report: &StabilityReport,
) -> Result<ValidationRecord> {
    let cell = report
        .cell(verdict.metric, verdict.epsilon, verdict.k)
        .ok_or_else(|| {
            Error::Mismatch(format!(
                "no simulation result for {} at epsilon {} and k = {}",
                verdict.metric, verdict.epsilon, verdict.k
            ))
        })?;
    let outcome = match (verdict.prediction, cell.class) {
        (Prediction::Indeterminate, _) => Outcome::Abstain,
        (Prediction::HighStable, StabilityClass::High) => Outcome::TruePositive,
        (Prediction::HighStable, _) => Outcome::FalsePositive,
        (Prediction::LowStable, StabilityClass::Low) => Outcome::TrueNegative,
        (Prediction::LowStable, _) => Outcome::FalseNegative,
    };
    Ok(ValidationRecord {
        metric: verdict.metric,
        k: verdict.k,
        epsilon: verdict.epsilon,
        prediction: verdict.prediction,
        observed: cell.class,
        mean_ji: cell.mean_ji,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    pub abstained: usize,
}

impl ConfusionMatrix {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ValidationRecord>) -> Self {
        let mut m = ConfusionMatrix::default();
        for r in records {
            match r.outcome {
                Outcome::TruePositive => m.true_positive += 1,
                Outcome::FalsePositive => m.false_positive += 1,
                Outcome::TrueNegative => m.true_negative += 1,
                Outcome::FalseNegative => m.false_negative += 1,
                Outcome::Abstain => m.abstained += 1,
            }
        }
        m
    }

    /// Share of high predictions observed as High; `None` without any.
    pub fn precision(&self) -> Option<f64> {
        let predicted = self.true_positive + self.false_positive;
        (predicted > 0).then(|| self.true_positive as f64 / predicted as f64)
    }

    /// Share of low predictions observed as Low.
    pub fn negative_predictive_value(&self) -> Option<f64> {
        let predicted = self.true_negative + self.false_negative;
        (predicted > 0).then(|| self.true_negative as f64 / predicted as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;

    /// A 10-clique whose vertex 9 also starts a 30-vertex tail.
    fn clique_with_tail() -> Graph {
        let mut edges = Vec::new();
        for u in 0..10 {
            for v in u + 1..10 {
                edges.push((u, v));
            }
        }
        edges.push((9, 10));
        for v in 10..39 {
            edges.push((v, v + 1));
        }
        Graph::from_edges(40, edges)
    }

    #[test]
    fn prediction_table() {
        use Prediction::*;
        assert_eq!(Prediction::from_conditions(true, true, true), HighStable);
        assert_eq!(Prediction::from_conditions(false, false, false), LowStable);
        assert_eq!(
            Prediction::from_conditions(true, false, true),
            Indeterminate
        );
        assert_eq!(
            Prediction::from_conditions(false, false, true),
            Indeterminate
        );
    }

    #[test]
    fn clique_degree_is_high_stable() {
        let g = clique_with_tail();
        let v = evaluate_template(&g, Metric::Degree, 10, 0.5, &TemplateParams::default()).unwrap();
        assert!(v.cond1_gap, "{:?}", v.certificates);
        assert!(v.cond2_cluster, "{:?}", v.boundary_ks);
        assert_eq!(v.rich_club.density, 1.0);
        assert!(v.cond3_structure, "{:?}", v.rich_club);
        assert_eq!(v.prediction, Prediction::HighStable);
    }

    #[test]
    fn path_betweenness_is_low_structure() {
        let g = path(40);
        let v = evaluate_template(&g, Metric::Betweenness, 10, 1.0, &TemplateParams::default())
            .unwrap();
        assert!(!v.cond3_structure);
        assert!(v.rich_club.density < 0.3);
        assert_ne!(v.prediction, Prediction::HighStable);
    }

    #[test]
    fn verdict_is_deterministic() {
        let g = clique_with_tail();
        let p = TemplateParams::default();
        for metric in Metric::ALL {
            let a = evaluate_template(&g, metric, 6, 1.0, &p).unwrap();
            let b = evaluate_template(&g, metric, 6, 1.0, &p).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn confusion_counts() {
        let rec = |prediction, observed, outcome| ValidationRecord {
            metric: Metric::Degree,
            k: 2,
            epsilon: 1.0,
            prediction,
            observed,
            mean_ji: 0.0,
            outcome,
        };
        let records = [
            rec(
                Prediction::HighStable,
                StabilityClass::High,
                Outcome::TruePositive,
            ),
            rec(
                Prediction::HighStable,
                StabilityClass::Low,
                Outcome::FalsePositive,
            ),
            rec(
                Prediction::Indeterminate,
                StabilityClass::High,
                Outcome::Abstain,
            ),
        ];
        let m = ConfusionMatrix::from_records(&records);
        assert_eq!(m.abstained, 1);
        assert_eq!(m.precision(), Some(0.5));
        assert_eq!(m.negative_predictive_value(), None);
    }
}
