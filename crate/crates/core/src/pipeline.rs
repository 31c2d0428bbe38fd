//! Orchestration behind the command-line verbs.
//!
//! Each run writes one `<network>.report.json` per input plus CSV tables that
//! collect rows from every network:
//!
//! | file | columns |
//! |------|---------|
//! | `stability.csv` | network,metric,epsilon,k,trial,ji |
//! | `fig1_dominant.csv` | network,metric,epsilon,run_length,class,label |
//! | `fig2_ji_vs_k.csv` | network,metric,epsilon,k,mean_ji,class |
//! | `fig3_clusters.csv` | network,metric,rank,vertex,score,cluster_id |
//! | `fig4_pools.csv` | network,metric,k,pool_N,effective_N,avg_ji |
//! | `table2.csv` | network,metric,k,mean_ji,stability_class,density,band |
//! | `verdicts.csv` | network,metric,k,epsilon,cond1,cond2,cond3,prediction |
//! | `confusion.csv` | network,metric,k,prediction,observed_class,epsilon |
//! | `decompose.csv` | network,epsilon,trial,vertex,loss_p,loss_q,gain_r,residual,total_change,delta_bc |
//!
//! Apart from `provenance.timestamp` every byte is a function of the config.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::bounds::{
    bc_decompose_many, closeness_realized_certificate, BcDecomposition, BoundMode, GapCertificate,
};
use crate::centrality::{betweenness_centrality, compute, Metric, Ranking};
use crate::config::{read_manifest, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{graph_stats, load_edge_list, Graph, GraphStats, IngestOptions, Vertex};
use crate::perturbation::{perturb, samples_drawn, NoiseSpec};
use crate::stability::{topk_stability_multi, StabilityClass, StabilityReport};
use crate::structure::{rich_club_stats, RichClubStats, StableClustering};
use crate::template::{
    validate_prediction, ConfusionMatrix, TemplateContext, TemplateVerdict, ValidationRecord,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stats,
    Stability,
    Predict,
    Validate,
    Decompose,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Stats => "stats",
            Mode::Stability => "stability",
            Mode::Predict => "predict",
            Mode::Validate => "validate",
            Mode::Decompose => "decompose",
        }
    }

    fn simulates(self) -> bool {
        matches!(self, Mode::Stability | Mode::Validate)
    }

    fn predicts(self) -> bool {
        matches!(self, Mode::Predict | Mode::Validate)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub graph: Graph,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: &'static str,
    /// Seconds since the Unix epoch, or `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RichClubEntry {
    pub metric: Metric,
    #[serde(flatten)]
    pub stats: RichClubStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub records: Vec<ValidationRecord>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeTrial {
    pub epsilon: f64,
    pub trial: usize,
    pub added_edges: usize,
    pub decompositions: Vec<BcDecomposition>,
    /// Exact betweenness change per decomposed vertex.
    pub delta_bc: Vec<f64>,
    pub certificates: Vec<RealizedCheck>,
}

/// Realized certificate for consecutively ranked vertices, with the outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RealizedCheck {
    pub certificate: GapCertificate,
    /// Betweenness only: residual terms of `v1` and `v2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<(f64, f64)>,
    pub order_preserved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub network: String,
    pub config: RunConfig,
    pub stats: GraphStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<serde_json::Value>,
    pub clusterings: Vec<StableClustering>,
    pub rich_club: Vec<RichClubEntry>,
    pub verdicts: Vec<TemplateVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub decompose: Vec<DecomposeTrial>,
    /// Noise samples drawn while producing this report.
    pub perturbation_trials: u64,
    pub provenance: Provenance,
}

/// Networks named on the command line and in the manifest, in that order.
pub fn load_networks(cfg: &RunConfig) -> Result<Vec<Network>> {
    let opts = IngestOptions {
        lcc_only: cfg.lcc_only,
    };
    let mut out = Vec::new();
    for path in &cfg.input {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "graph".into());
        out.push(Network {
            name,
            graph: load_edge_list(path, &opts)?,
        });
    }
    if let Some(manifest) = &cfg.manifest {
        for entry in read_manifest(manifest)? {
            let graph = load_edge_list(&entry.path, &opts)?;
            let mismatch = |what: &str, want: Option<usize>, got: usize| {
                if let Some(want) = want.filter(|&w| w != got) {
                    eprintln!(
                        "warning: {}: expected {what} = {want}, loaded {got}",
                        entry.name
                    );
                }
            };
            mismatch("n", entry.expected_n, graph.n());
            mismatch("m", entry.expected_m, graph.m());
            out.push(Network {
                name: entry.name,
                graph,
            });
        }
    }
    Ok(out)
}

struct CsvSink {
    file: BufWriter<File>,
}

impl CsvSink {
    fn create(dir: &Path, name: &str, header: &str) -> Result<Self> {
        let path = dir.join(name);
        let mut file = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        writeln!(file, "{header}")?;
        Ok(CsvSink { file })
    }
}

struct Sinks {
    stability: Option<CsvSink>,
    fig1: Option<CsvSink>,
    fig2: Option<CsvSink>,
    fig3: Option<CsvSink>,
    fig4: Option<CsvSink>,
    table2: Option<CsvSink>,
    verdicts: Option<CsvSink>,
    confusion: Option<CsvSink>,
    decompose: Option<CsvSink>,
}

impl Sinks {
    fn open(mode: Mode, dir: &Path) -> Result<Self> {
        let make = |on: bool, name: &str, header: &str| -> Result<Option<CsvSink>> {
            if on {
                CsvSink::create(dir, name, header).map(Some)
            } else {
                Ok(None)
            }
        };
        let sim = mode.simulates();
        let pred = mode.predicts();
        let structure = sim || pred;
        Ok(Sinks {
            stability: make(sim, "stability.csv", "network,metric,epsilon,k,trial,ji")?,
            fig1: make(
                sim,
                "fig1_dominant.csv",
                "network,metric,epsilon,run_length,class,label",
            )?,
            fig2: make(
                sim,
                "fig2_ji_vs_k.csv",
                "network,metric,epsilon,k,mean_ji,class",
            )?,
            fig3: make(
                pred,
                "fig3_clusters.csv",
                "network,metric,rank,vertex,score,cluster_id",
            )?,
            fig4: make(
                structure,
                "fig4_pools.csv",
                "network,metric,k,pool_N,effective_N,avg_ji",
            )?,
            table2: make(
                structure,
                "table2.csv",
                "network,metric,k,mean_ji,stability_class,density,band",
            )?,
            verdicts: make(
                pred,
                "verdicts.csv",
                "network,metric,k,epsilon,cond1,cond2,cond3,prediction",
            )?,
            confusion: make(
                mode == Mode::Validate,
                "confusion.csv",
                "network,metric,k,prediction,observed_class,epsilon",
            )?,
            decompose: make(
                mode == Mode::Decompose,
                "decompose.csv",
                "network,epsilon,trial,vertex,loss_p,loss_q,gain_r,residual,total_change,delta_bc",
            )?,
        })
    }

    fn finish(self) -> Result<()> {
        for sink in [
            self.stability,
            self.fig1,
            self.fig2,
            self.fig3,
            self.fig4,
            self.table2,
            self.verdicts,
            self.confusion,
            self.decompose,
        ]
        .into_iter()
        .flatten()
        {
            sink.file
                .into_inner()
                .map_err(|e| e.into_error())?
                .sync_all()?;
        }
        Ok(())
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// Runs `mode` over every configured network, writing reports into
/// `cfg.out`. Returns the reports in input order.
pub fn run(mode: Mode, cfg: &RunConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    let networks = load_networks(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut sinks = Sinks::open(mode, &cfg.out)?;
    let mut reports = Vec::new();
    for net in &networks {
        let report = run_network(mode, cfg, net, &mut sinks)?;
        let path = cfg.out.join(format!("{}.report.json", net.name));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
        reports.push(report);
    }
    sinks.finish()?;
    Ok(reports)
}

fn run_network(mode: Mode, cfg: &RunConfig, net: &Network, sinks: &mut Sinks) -> Result<RunReport> {
    let g = &net.graph;
    let name = net.name.as_str();
    let drawn_before = samples_drawn();

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: mode.as_str(),
        network: net.name.clone(),
        config: cfg.clone(),
        stats: graph_stats(g),
        stability: None,
        clusterings: Vec::new(),
        rich_club: Vec::new(),
        verdicts: Vec::new(),
        validation: None,
        decompose: Vec::new(),
        perturbation_trials: 0,
        provenance: Provenance {
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
        },
    };

    let mut ks = cfg.k.clone();
    ks.sort_unstable();
    ks.dedup();

    let stability = if mode.simulates() {
        let spec = NoiseSpec::new(cfg.epsilon[0], cfg.trials, cfg.seed);
        let mut sr = topk_stability_multi(g, &cfg.metric, &spec, &cfg.epsilon, &ks)?;
        sr.network = net.name.clone();
        write_stability(sinks, &sr)?;
        report.stability = Some(sr.summary_json());
        Some(sr)
    } else {
        None
    };

    if mode.predicts() {
        let params = cfg.template_params();
        let mut records = Vec::new();
        for &metric in &cfg.metric {
            let ctx = TemplateContext::new(g, metric, &ks, &cfg.epsilon, &params)?;
            write_clusters(sinks, g, name, &ctx.clustering)?;
            for &k in &ks {
                let rc = rich_club_stats(g, &ctx.ranking, k, &cfg.pool, &params.bands)?;
                write_structure(sinks, name, metric, &rc, stability.as_ref())?;
                report.rich_club.push(RichClubEntry { metric, stats: rc });
                for &eps in &cfg.epsilon {
                    let verdict = ctx.evaluate(g, k, eps)?;
                    if let Some(s) = sinks.verdicts.as_mut() {
                        writeln!(
                            s.file,
                            "{name},{metric},{k},{eps},{},{},{},{}",
                            verdict.cond1_gap,
                            verdict.cond2_cluster,
                            verdict.cond3_structure,
                            verdict.prediction.as_str()
                        )?;
                    }
                    if let Some(sr) = &stability {
                        let rec = validate_prediction(&verdict, sr)?;
                        if let Some(s) = sinks.confusion.as_mut() {
                            writeln!(
                                s.file,
                                "{name},{metric},{k},{},{},{eps}",
                                rec.prediction.as_str(),
                                rec.observed.letter()
                            )?;
                        }
                        records.push(rec);
                    }
                    report.verdicts.push(verdict);
                }
            }
            report.clusterings.push(ctx.clustering);
        }
        if stability.is_some() {
            report.validation = Some(Validation {
                confusion: ConfusionMatrix::from_records(&records),
                records,
            });
        }
    } else if mode == Mode::Stability {
        let params = cfg.template_params();
        for &metric in &cfg.metric {
            let ranking = compute(g, metric).rank();
            for &k in ks.iter().filter(|&&k| k >= 2) {
                let rc = rich_club_stats(g, &ranking, k, &cfg.pool, &params.bands)?;
                write_structure(sinks, name, metric, &rc, stability.as_ref())?;
                report.rich_club.push(RichClubEntry { metric, stats: rc });
            }
        }
    }

    if mode == Mode::Decompose {
        report.decompose = decompose(cfg, net, sinks)?;
    }

    report.perturbation_trials = samples_drawn() - drawn_before;
    Ok(report)
}

fn write_stability(sinks: &mut Sinks, sr: &StabilityReport) -> Result<()> {
    if let Some(s) = sinks.stability.as_mut() {
        sr.write_trials_csv(&mut s.file, false)?;
    }
    if let Some(s) = sinks.fig1.as_mut() {
        for d in &sr.dominant {
            writeln!(
                s.file,
                "{},{},{},{},{},{}",
                sr.network,
                d.metric,
                d.epsilon,
                d.length,
                d.class.letter(),
                d.label()
            )?;
        }
    }
    if let Some(s) = sinks.fig2.as_mut() {
        for c in &sr.cells {
            writeln!(
                s.file,
                "{},{},{},{},{},{}",
                sr.network,
                c.metric,
                c.epsilon,
                c.k,
                c.mean_ji,
                c.class.letter()
            )?;
        }
    }
    Ok(())
}

fn write_clusters(sinks: &mut Sinks, g: &Graph, name: &str, sc: &StableClustering) -> Result<()> {
    if let Some(s) = sinks.fig3.as_mut() {
        sc.write_csv(g, &format!("{name},{},", sc.metric), &mut s.file)?;
    }
    Ok(())
}

fn write_structure(
    sinks: &mut Sinks,
    name: &str,
    metric: Metric,
    rc: &RichClubStats,
    stability: Option<&StabilityReport>,
) -> Result<()> {
    if let Some(s) = sinks.fig4.as_mut() {
        for p in &rc.common_neighbor_curve {
            writeln!(
                s.file,
                "{name},{metric},{},{},{},{}",
                rc.k, p.pool, p.effective, p.avg_ji
            )?;
        }
    }
    if let Some(s) = sinks.table2.as_mut() {
        let mean = stability.and_then(|sr| sr.mean_across_epsilons(metric, rc.k));
        let (mean, class) = match mean {
            Some(m) => (
                m.to_string(),
                StabilityClass::from_ji(m).letter().to_string(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            s.file,
            "{name},{metric},{},{mean},{class},{},{:?}",
            rc.k, rc.density, rc.band
        )?;
    }
    Ok(())
}

/// Exact betweenness decompositions of the top `max(k) + 1` vertices for
/// every trial of the grid, with realized certificates for each metric's
/// consecutively ranked pairs.
fn decompose(cfg: &RunConfig, net: &Network, sinks: &mut Sinks) -> Result<Vec<DecomposeTrial>> {
    let g = &net.graph;
    let depth = (cfg.k.iter().copied().max().unwrap_or(1) + 1).min(g.n());
    let before = betweenness_centrality(g);
    let bc_rank = before.rank();
    let top: Vec<Vertex> = bc_rank.order()[..depth].to_vec();
    let rankings: Vec<(Metric, Ranking)> = cfg
        .metric
        .iter()
        .map(|&m| {
            let r = if m == Metric::Betweenness {
                bc_rank.clone()
            } else {
                compute(g, m).rank()
            };
            (m, r)
        })
        .collect();

    let mut out = Vec::new();
    for &eps in &cfg.epsilon {
        let spec = NoiseSpec::new(eps, cfg.trials, cfg.seed);
        for t in 0..cfg.trials {
            let trial = perturb(g, &spec, t)?;
            let parts = bc_decompose_many(g, &trial, &top, cfg.decompose_cap)?;
            let after = betweenness_centrality(&trial.graph);
            let delta: Vec<f64> = top
                .iter()
                .map(|&v| after.scores[v] - before.scores[v])
                .collect();
            if let Some(s) = sinks.decompose.as_mut() {
                for (d, dv) in parts.iter().zip(&delta) {
                    writeln!(
                        s.file,
                        "{},{eps},{t},{},{},{},{},{},{},{dv}",
                        net.name,
                        g.label(d.v),
                        d.loss_p,
                        d.loss_q,
                        d.gain_r,
                        d.residual,
                        d.total_change
                    )?;
                }
            }

            let closeness_after = cfg
                .metric
                .contains(&Metric::Closeness)
                .then(|| compute(&trial.graph, Metric::Closeness));
            let mut certificates = Vec::new();
            for (metric, ranking) in &rankings {
                let order = &ranking.order()[..depth];
                for pair in order.windows(2) {
                    let (v1, v2) = (pair[0], pair[1]);
                    certificates.push(match metric {
                        Metric::Degree => {
                            let gap = (g.degree(v1) - g.degree(v2)) as f64;
                            let bound = trial.additions_to(v2) as f64;
                            RealizedCheck {
                                certificate: GapCertificate::new(
                                    Metric::Degree,
                                    gap,
                                    bound,
                                    BoundMode::Realized,
                                )
                                .for_pair(v1, v2),
                                residuals: None,
                                order_preserved: trial.graph.degree(v1) >= trial.graph.degree(v2),
                            }
                        }
                        Metric::Closeness => {
                            let cert = closeness_realized_certificate(g, &trial, v1, v2)?;
                            let after = closeness_after
                                .as_ref()
                                .expect("computed when closeness is selected");
                            RealizedCheck {
                                certificate: cert,
                                residuals: None,
                                order_preserved: after.scores[v1] >= after.scores[v2],
                            }
                        }
                        Metric::Betweenness => {
                            let pos = |v: Vertex| {
                                top.iter()
                                    .position(|&x| x == v)
                                    .expect("pair within decomposed set")
                            };
                            let (p1, p2) = (&parts[pos(v1)], &parts[pos(v2)]);
                            let gap = before.scores[v1] - before.scores[v2];
                            let bound = p1.loss_p + p1.loss_q + p2.gain_r;
                            RealizedCheck {
                                certificate: GapCertificate::new(
                                    Metric::Betweenness,
                                    gap,
                                    bound,
                                    BoundMode::Realized,
                                )
                                .for_pair(v1, v2),
                                residuals: Some((p1.residual, p2.residual)),
                                order_preserved: after.scores[v1] >= after.scores[v2],
                            }
                        }
                    });
                }
            }
            out.push(DecomposeTrial {
                epsilon: eps,
                trial: t,
                added_edges: trial.added_edges.len(),
                decompositions: parts,
                delta_bc: delta,
                certificates,
            });
        }
    }
    Ok(out)
}

/// Path of the JSON report for `network` under `dir`.
pub fn report_path(dir: &Path, network: &str) -> PathBuf {
    dir.join(format!("{network}.report.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_graph(dir: &Path) -> PathBuf {
        let path = dir.join("toy.txt");
        let mut text = String::new();
        for u in 0..6 {
            for v in u + 1..6 {
                text.push_str(&format!("{u} {v}\n"));
            }
        }
        for v in 5..20 {
            text.push_str(&format!("{v} {}\n", v + 1));
        }
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn predict_draws_no_noise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            input: vec![write_graph(dir.path())],
            out: dir.path().join("out"),
            k: vec![2, 4],
            ..RunConfig::default()
        };
        let reports = run(Mode::Predict, &cfg).unwrap();
        assert_eq!(reports[0].verdicts.len(), 3 * 2 * 5);
        assert!(reports[0].stability.is_none());
        assert!(report_path(&cfg.out, "toy").exists());
        assert!(!cfg.out.join("stability.csv").exists());
    }

    #[test]
    fn decompose_totals_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            input: vec![write_graph(dir.path())],
            out: dir.path().join("out"),
            k: vec![3],
            trials: 2,
            epsilon: vec![1.0, 2.0],
            ..RunConfig::default()
        };
        let reports = run(Mode::Decompose, &cfg).unwrap();
        let trials = &reports[0].decompose;
        assert_eq!(trials.len(), 4);
        for t in trials {
            for (d, delta) in t.decompositions.iter().zip(&t.delta_bc) {
                assert!((d.total_change - delta).abs() < 1e-9);
            }
        }
    }
}
