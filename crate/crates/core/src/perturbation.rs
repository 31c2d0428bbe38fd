//! Edge-addition noise.
//!
//! Every vertex pair that is not already an edge is added independently with
//! probability `epsilon / n`. Trials draw the number of additions from
//! `Binomial(complement_size, epsilon / n)` and then pick that many distinct
//! complement pairs uniformly, which has the same distribution as flipping a
//! coin per pair.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{complement_size, Graph, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, trials: usize, master_seed: u64) -> Self {
        NoiseSpec {
            epsilon,
            trials,
            master_seed,
        }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        check_epsilon(g, self.epsilon)?;
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Addition probability `epsilon / n` for every complement pair.
    pub fn pair_probability(&self, g: &Graph) -> f64 {
        if g.n() == 0 {
            0.0
        } else {
            self.epsilon / g.n() as f64
        }
    }
}

pub fn check_epsilon(g: &Graph, epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 && epsilon <= g.n() as f64 {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon { epsilon, n: g.n() })
    }
}

/// One noisy copy of a graph.
#[derive(Debug, Clone)]
pub struct PerturbedTrial {
    pub graph: Graph,
    /// Added pairs as `(u, v)` with `u < v`, sorted.
    pub added_edges: Vec<(Vertex, Vertex)>,
    pub epsilon: f64,
    pub trial_index: usize,
    pub seed: u64,
}

impl PerturbedTrial {
    /// Number of added edges incident to `v`.
    pub fn additions_to(&self, v: Vertex) -> usize {
        self.added_edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// Writes the added edges (one `u v` line each) using the graph's labels.
    pub fn write_added<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(u, v) in &self.added_edges {
            writeln!(out, "{} {}", self.graph.label(u), self.graph.label(v))?;
        }
        Ok(())
    }

    /// Dump file name `<graph>_eps<epsilon>_t<trial>.added`.
    pub fn dump_name(&self, graph_name: &str) -> String {
        format!(
            "{graph_name}_eps{}_t{}.added",
            self.epsilon, self.trial_index
        )
    }

    pub fn dump(&self, dir: &Path, graph_name: &str) -> Result<()> {
        let path = dir.join(self.dump_name(graph_name));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.write_added(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds the words into one seed, one SplitMix64 round per word.
pub fn mix_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x6A09_E667_F3BC_C909, |acc, &w| {
        splitmix64(acc ^ splitmix64(w))
    })
}

/// Seed of trial `trial_index` at noise level `epsilon`. The level enters by
/// its bit pattern so a level produces the same trials wherever it appears in
/// a sweep.
pub fn trial_seed(master_seed: u64, epsilon: f64, trial_index: usize) -> u64 {
    mix_seed(&[master_seed, epsilon.to_bits(), trial_index as u64])
}

/// Expected number of additions at `v`: `(epsilon / n) * (n - 1 - deg(v))`.
pub fn expected_additions_per_vertex(g: &Graph, v: Vertex, epsilon: f64) -> f64 {
    let n = g.n() as f64;
    epsilon / n * (n - 1.0 - g.degree(v) as f64)
}

pub fn perturb(g: &Graph, spec: &NoiseSpec, trial_index: usize) -> Result<PerturbedTrial> {
    spec.validate(g)?;
    if trial_index >= spec.trials {
        return Err(Error::InvalidArgument(format!(
            "trial index {trial_index} out of range for {} trials",
            spec.trials
        )));
    }
    let seed = trial_seed(spec.master_seed, spec.epsilon, trial_index);
    let added_edges = sample_additions(g, spec.epsilon, seed);
    Ok(PerturbedTrial {
        graph: g.with_added_edges(&added_edges),
        added_edges,
        epsilon: spec.epsilon,
        trial_index,
        seed,
    })
}

static SAMPLES_DRAWN: AtomicU64 = AtomicU64::new(0);

/// Number of [`sample_additions`] calls made so far in this process.
pub fn samples_drawn() -> u64 {
    SAMPLES_DRAWN.load(Ordering::Relaxed)
}

/// Draws the added-edge set for one trial from `seed`.
pub fn sample_additions(g: &Graph, epsilon: f64, seed: u64) -> Vec<(Vertex, Vertex)> {
    SAMPLES_DRAWN.fetch_add(1, Ordering::Relaxed);
    let n = g.n();
    let complement = complement_size(g);
    if complement == 0 || epsilon == 0.0 {
        return Vec::new();
    }
    let p = (epsilon / n as f64).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Binomial::new(complement, p)
        .expect("p lies in [0, 1]")
        .sample(&mut rng);
    if count == 0 {
        return Vec::new();
    }

    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut added = if 2 * (g.m() as u64 + count) <= total_pairs {
        reject_sample(g, count as usize, &mut rng)
    } else {
        enumerate_sample(g, complement, count as usize, &mut rng)
    };
    added.sort_unstable();
    added
}

/// Draws uniform pairs and rejects existing edges and repeats. Used while at
/// least half of all pairs stay acceptable, so each draw succeeds with
/// probability at least 1/2.
fn reject_sample<R: Rng>(g: &Graph, count: usize, rng: &mut R) -> Vec<(Vertex, Vertex)> {
    let n = g.n();
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if g.has_edge(pair.0, pair.1) || !chosen.insert(pair) {
            continue;
        }
        out.push(pair);
    }
    out
}

/// Picks `count` indices out of the enumerated complement. Used for dense
/// graphs or heavy noise where rejection would stall.
fn enumerate_sample<R: Rng>(
    g: &Graph,
    complement: u64,
    count: usize,
    rng: &mut R,
) -> Vec<(Vertex, Vertex)> {
    let n = g.n();
    let mut pairs = Vec::with_capacity(complement as usize);
    for u in 0..n {
        let mut nbrs = g.neighbors(u).iter().peekable();
        for v in u + 1..n {
            while nbrs.next_if(|&&w| w < v).is_some() {}
            if nbrs.peek() == Some(&&v) {
                continue;
            }
            pairs.push((u, v));
        }
    }
    debug_assert_eq!(pairs.len() as u64, complement);
    index::sample(rng, pairs.len(), count)
        .into_iter()
        .map(|i| pairs[i])
        .collect()
}

/// All trials for every level in `epsilons`, level-major. Each item is built
/// independently from its derived seed, so the iterator can be consumed in any
/// order or in parallel via [`sweep_coordinates`].
pub fn sweep<'a>(
    g: &'a Graph,
    epsilons: &'a [f64],
    template: &NoiseSpec,
) -> Result<impl Iterator<Item = Result<PerturbedTrial>> + 'a> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("no noise levels given".into()));
    }
    for &eps in epsilons {
        NoiseSpec {
            epsilon: eps,
            ..*template
        }
        .validate(g)?;
    }
    let template = *template;
    Ok(
        sweep_coordinates(epsilons.len(), template.trials).map(move |(ei, t)| {
            perturb(
                g,
                &NoiseSpec {
                    epsilon: epsilons[ei],
                    ..template
                },
                t,
            )
        }),
    )
}

/// `(level index, trial index)` pairs in sweep order.
pub fn sweep_coordinates(levels: usize, trials: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..levels).flat_map(move |e| (0..trials).map(move |t| (e, t)))
}
