//! Jaccard stability of top-k sets under noise, the High/Medium/Low classes,
//! and the dominant-stability summary across k.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{self, Metric, Ranking};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::perturbation::{perturb, sweep_coordinates, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabilityClass {
    Low,
    Medium,
    High,
}

impl StabilityClass {
    pub const HIGH_MIN: f64 = 0.7;
    pub const MEDIUM_MIN: f64 = 0.4;

    pub fn from_ji(ji: f64) -> Self {
        if ji >= Self::HIGH_MIN {
            StabilityClass::High
        } else if ji >= Self::MEDIUM_MIN {
            StabilityClass::Medium
        } else {
            StabilityClass::Low
        }
    }

    pub fn letter(self) -> char {
        match self {
            StabilityClass::High => 'H',
            StabilityClass::Medium => 'M',
            StabilityClass::Low => 'L',
        }
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityClass::High => "High",
            StabilityClass::Medium => "Medium",
            StabilityClass::Low => "Low",
        })
    }
}

/// `|a ∩ b| / |a ∪ b|`.
pub fn jaccard(a: &BTreeSet<Vertex>, b: &BTreeSet<Vertex>) -> Result<f64> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Err(Error::EmptySets);
    }
    Ok(inter as f64 / union as f64)
}

/// Longest run of equal classes. Equal-length runs resolve to the higher
/// class, then to the earliest run.
pub fn dominant_stability(classes: &[StabilityClass]) -> Option<(usize, StabilityClass)> {
    let mut best: Option<(usize, StabilityClass)> = None;
    let mut i = 0;
    while i < classes.len() {
        let class = classes[i];
        let mut j = i;
        while j < classes.len() && classes[j] == class {
            j += 1;
        }
        let run = (j - i, class);
        best = match best {
            Some(b) if (b.0, b.1) >= run => Some(b),
            _ => Some(run),
        };
        i = j;
    }
    best
}

/// Results for one `(metric, epsilon, k)` coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub metric: Metric,
    pub epsilon: f64,
    pub k: usize,
    pub mean_ji: f64,
    pub class: StabilityClass,
    pub trial_ji: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantRun {
    pub metric: Metric,
    pub epsilon: f64,
    pub length: usize,
    pub class: StabilityClass,
}

impl DominantRun {
    /// Compact label such as `5H`.
    pub fn label(&self) -> String {
        format!("{}{}", self.length, self.class.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub network: String,
    pub cells: Vec<StabilityCell>,
    pub dominant: Vec<DominantRun>,
    /// Perturbed graphs generated to build this report.
    pub trials_run: usize,
}

impl StabilityReport {
    pub fn cell(&self, metric: Metric, epsilon: f64, k: usize) -> Option<&StabilityCell> {
        self.cells
            .iter()
            .find(|c| c.metric == metric && c.epsilon == epsilon && c.k == k)
    }

    /// Mean over noise levels of the per-level mean JI at `k`.
    pub fn mean_across_epsilons(&self, metric: Metric, k: usize) -> Option<f64> {
        let values: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.metric == metric && c.k == k)
            .map(|c| c.mean_ji)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    /// Per-trial rows: `network,metric,epsilon,k,trial,ji`.
    pub fn write_trials_csv<W: Write>(&self, out: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "network,metric,epsilon,k,trial,ji")?;
        }
        for c in &self.cells {
            for (t, ji) in c.trial_ji.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    self.network, c.metric, c.epsilon, c.k, t, ji
                )?;
            }
        }
        Ok(())
    }

    /// JSON summary without per-trial values.
    pub fn summary_json(&self) -> serde_json::Value {
        let cells: Vec<_> = self
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "metric": c.metric,
                    "epsilon": c.epsilon,
                    "k": c.k,
                    "mean_ji": c.mean_ji,
                    "class": c.class,
                })
            })
            .collect();
        let dominant: Vec<_> = self
            .dominant
            .iter()
            .map(|d| {
                serde_json::json!({
                    "metric": d.metric,
                    "epsilon": d.epsilon,
                    "run": d.label(),
                })
            })
            .collect();
        serde_json::json!({ "network": self.network, "cells": cells, "dominant": dominant })
    }
}

/// Top-k stability for one metric. See [`topk_stability_multi`].
pub fn topk_stability(
    g: &Graph,
    metric: Metric,
    spec: &NoiseSpec,
    epsilons: &[f64],
    ks: &[usize],
) -> Result<StabilityReport> {
    topk_stability_multi(g, &[metric], spec, epsilons, ks)
}

/// Runs `spec.trials` perturbations per level in `epsilons` and compares the
/// top-k sets of each metric against the unperturbed graph. Every trial is
/// shared by all metrics. `ks` are evaluated (and dominant runs computed) in
/// ascending order.
pub fn topk_stability_multi(
    g: &Graph,
    metrics: &[Metric],
    spec: &NoiseSpec,
    epsilons: &[f64],
    ks: &[usize],
) -> Result<StabilityReport> {
    if metrics.is_empty() {
        return Err(Error::Usage("no metrics selected".into()));
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("no noise levels given".into()));
    }
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InvalidArgument("no k values given".into()));
    }
    for &k in &ks {
        if k == 0 || k > g.n() {
            return Err(Error::InvalidK {
                k,
                n: g.n(),
                min: 1,
            });
        }
    }
    for &eps in epsilons {
        NoiseSpec {
            epsilon: eps,
            ..*spec
        }
        .validate(g)?;
    }

    let originals: Vec<Vec<BTreeSet<Vertex>>> = metrics
        .iter()
        .map(|&m| top_sets(&centrality::compute(g, m).rank(), &ks))
        .collect::<Result<_>>()?;

    let coords: Vec<(usize, usize)> = sweep_coordinates(epsilons.len(), spec.trials).collect();
    // ji[trial][metric][k]
    let per_trial: Vec<Vec<Vec<f64>>> = coords
        .par_iter()
        .map(|&(ei, t)| -> Result<Vec<Vec<f64>>> {
            let level = NoiseSpec {
                epsilon: epsilons[ei],
                ..*spec
            };
            let trial = perturb(g, &level, t)?;
            metrics
                .iter()
                .zip(&originals)
                .map(|(&m, orig)| {
                    let noisy = top_sets(&centrality::compute(&trial.graph, m).rank(), &ks)?;
                    orig.iter()
                        .zip(&noisy)
                        .map(|(a, b)| jaccard(a, b))
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut dominant = Vec::new();
    for (mi, &metric) in metrics.iter().enumerate() {
        for (ei, &epsilon) in epsilons.iter().enumerate() {
            let mut classes = Vec::with_capacity(ks.len());
            for (ki, &k) in ks.iter().enumerate() {
                let trial_ji: Vec<f64> = (0..spec.trials)
                    .map(|t| per_trial[ei * spec.trials + t][mi][ki])
                    .collect();
                let mean_ji = trial_ji.iter().sum::<f64>() / trial_ji.len() as f64;
                let class = StabilityClass::from_ji(mean_ji);
                classes.push(class);
                cells.push(StabilityCell {
                    metric,
                    epsilon,
                    k,
                    mean_ji,
                    class,
                    trial_ji,
                });
            }
            let (length, class) = dominant_stability(&classes).expect("ks is non-empty");
            dominant.push(DominantRun {
                metric,
                epsilon,
                length,
                class,
            });
        }
    }

    Ok(StabilityReport {
        network: "graph".into(),
        cells,
        dominant,
        trials_run: coords.len(),
    })
}

fn top_sets(r: &Ranking, ks: &[usize]) -> Result<Vec<BTreeSet<Vertex>>> {
    ks.iter().map(|&k| r.top_k(k)).collect()
}
