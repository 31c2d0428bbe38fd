//! Undirected simple graphs, edge-list ingestion and whole-graph statistics.
//!
//! Vertices are dense ids `0..n`. Original labels from the input file are
//! kept alongside so reports can name vertices the way the dataset does.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Immutable undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    m: usize,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph on `n` vertices. Self-loops and repeated edges (in either
    /// direction) are dropped.
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for n = {n}");
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut twice_m = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice_m += list.len();
        }
        Graph {
            adj,
            m: twice_m / 2,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.n());
        self.labels = Some(labels);
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn label(&self, v: Vertex) -> String {
        match &self.labels {
            Some(labels) => labels[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Returns the id of the vertex carrying `label`, falling back to parsing
    /// the label as a numeric id when the graph is unlabeled.
    pub fn find_label(&self, label: &str) -> Option<Vertex> {
        match &self.labels {
            Some(labels) => labels.iter().position(|l| l == label),
            None => label.parse().ok().filter(|&v| v < self.n()),
        }
    }

    /// New graph with `extra` edges added; labels are carried over.
    pub fn with_added_edges(&self, extra: &[(Vertex, Vertex)]) -> Graph {
        let mut g = Graph::from_edges(self.n(), self.edges().chain(extra.iter().copied()));
        g.labels = self.labels.clone();
        g
    }

    pub(crate) fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }
}

/// Ingestion switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Keep only the largest connected component.
    pub lcc_only: bool,
}

/// Reads a whitespace-separated edge list. Lines starting with `#` or `%` are
/// comments; columns after the second are ignored.
pub fn load_edge_list(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let g = parse_edge_list(BufReader::new(file), path)?;
    Ok(if options.lcc_only {
        largest_component(&g)
    } else {
        g
    })
}

pub fn parse_edge_list<R: BufRead>(reader: R, origin: &Path) -> Result<Graph> {
    let mut ids: HashMap<String, Vertex> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();

    let mut intern = |label: &str| -> Vertex {
        if let Some(&id) = ids.get(label) {
            return id;
        }
        let id = labels.len();
        ids.insert(label.to_owned(), id);
        labels.push(label.to_owned());
        id
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message: format!("expected two vertex labels, found {trimmed:?}"),
            });
        };
        let u = intern(a);
        let v = intern(b);
        edges.push((u, v));
    }

    let g = Graph::from_edges(labels.len(), edges);
    if g.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(g.with_labels(labels))
}

/// Writes one `u v` line per edge using the graph's labels.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(out, "{} {}", g.label(u), g.label(v))?;
    }
    Ok(())
}

/// Number of vertex pairs that are not edges: `n(n-1)/2 - m`.
pub fn complement_size(g: &Graph) -> u64 {
    let n = g.n() as u64;
    n * n.saturating_sub(1) / 2 - g.m() as u64
}

/// Component id per vertex, numbered in order of the smallest member.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let mut comp = vec![usize::MAX; g.n()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in 0..g.n() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Induced subgraph on the largest connected component (ties go to the
/// component containing the smaller vertex id).
pub fn largest_component(g: &Graph) -> Graph {
    let comp = connected_components(g);
    let n_comp = comp.iter().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; n_comp];
    for &c in &comp {
        sizes[c] += 1;
    }
    let best = (0..n_comp).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)));
    let Some(best) = best else {
        return g.clone();
    };
    let keep: Vec<Vertex> = (0..g.n()).filter(|&v| comp[v] == best).collect();
    induced_subgraph(g, &keep).expect("component members are valid vertices")
}

/// Subgraph on `vs` (in the given order) containing every parent edge with
/// both endpoints in `vs`.
pub fn induced_subgraph(g: &Graph, vs: &[Vertex]) -> Result<Graph> {
    let mut local = vec![usize::MAX; g.n()];
    for (i, &v) in vs.iter().enumerate() {
        g.check_vertex(v)?;
        if local[v] != usize::MAX {
            return Err(Error::InvalidArgument(format!(
                "vertex {v} listed twice in induced subgraph"
            )));
        }
        local[v] = i;
    }
    let mut edges = Vec::new();
    for (i, &v) in vs.iter().enumerate() {
        for &w in g.neighbors(v) {
            let j = local[w];
            if j != usize::MAX && i < j {
                edges.push((i, j));
            }
        }
    }
    let labels = vs.iter().map(|&v| g.label(v)).collect();
    Ok(Graph::from_edges(vs.len(), edges).with_labels(labels))
}

/// Number of edges among `vs` divided by `|vs|(|vs|-1)/2`.
pub fn density_of(g: &Graph, vs: &[Vertex]) -> f64 {
    let k = vs.len();
    if k < 2 {
        return 0.0;
    }
    let mut inside = vec![false; g.n()];
    for &v in vs {
        inside[v] = true;
    }
    let twice_internal: usize = vs
        .iter()
        .map(|&v| g.neighbors(v).iter().filter(|&&w| inside[w]).count())
        .sum();
    (twice_internal / 2) as f64 / (k * (k - 1) / 2) as f64
}

/// Triangles through each vertex.
pub fn triangle_counts(g: &Graph) -> Vec<usize> {
    let mut tri = vec![0usize; g.n()];
    let mut mark = vec![false; g.n()];
    for u in 0..g.n() {
        for &w in g.neighbors(u) {
            mark[w] = true;
        }
        for &v in g.neighbors(u).iter().filter(|&&v| v > u) {
            for &w in g.neighbors(v).iter().filter(|&&w| w > v) {
                if mark[w] {
                    tri[u] += 1;
                    tri[v] += 1;
                    tri[w] += 1;
                }
            }
        }
        for &w in g.neighbors(u) {
            mark[w] = false;
        }
    }
    tri
}

/// Local clustering coefficient; 0 for vertices of degree < 2.
pub fn local_clustering(g: &Graph) -> Vec<f64> {
    triangle_counts(g)
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            let d = g.degree(v);
            if d < 2 {
                0.0
            } else {
                t as f64 / (d * (d - 1) / 2) as f64
            }
        })
        .collect()
}

/// Continuous power-law MLE of the degree sequence:
/// `1 + n / sum(ln(d_i / d_min))` over positive degrees. `None` when every
/// positive degree is equal (the estimate diverges).
pub fn power_law_alpha(g: &Graph) -> Option<f64> {
    let degrees: Vec<f64> = (0..g.n())
        .map(|v| g.degree(v))
        .filter(|&d| d > 0)
        .map(|d| d as f64)
        .collect();
    let d_min = degrees.iter().copied().fold(f64::INFINITY, f64::min);
    let log_sum: f64 = degrees.iter().map(|&d| (d / d_min).ln()).sum();
    if degrees.is_empty() || log_sum <= 0.0 {
        None
    } else {
        Some(1.0 + degrees.len() as f64 / log_sum)
    }
}

/// Whole-graph descriptors reported next to the stability results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "cc")]
    pub avg_clustering_coefficient: f64,
    #[serde(rename = "alpha")]
    pub degree_slope_alpha: Option<f64>,
    pub n_components: usize,
    pub lcc_size: usize,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let cc = local_clustering(g);
    let avg = if cc.is_empty() {
        0.0
    } else {
        cc.iter().sum::<f64>() / cc.len() as f64
    };
    let comp = connected_components(g);
    let n_components = comp.iter().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; n_components];
    for &c in &comp {
        sizes[c] += 1;
    }
    GraphStats {
        n: g.n(),
        m: g.m(),
        avg_clustering_coefficient: avg,
        degree_slope_alpha: power_law_alpha(g),
        n_components,
        lcc_size: sizes.into_iter().max().unwrap_or(0),
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn parse(text: &str) -> Result<Graph> {
        parse_edge_list(text.as_bytes(), Path::new("inline"))
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = parse("a b\nb c\nb a\n").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(g.label(0), "a");
        assert_eq!(g.label(2), "c");
    }

    #[test]
    fn self_loop_only_is_empty() {
        assert!(matches!(parse("x x\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn comments_and_extra_columns() {
        let g = parse("# snap header\n% pajek\n\n1 2 0.5\n2 3\n").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse("1 2\n# c\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complement_sizes() {
        assert_eq!(complement_size(&complete(3)), 0);
        assert_eq!(complement_size(&path(3)), 1);
        let offsets = (0..62)
            .map(|v| (v, (v + 1) % 62))
            .chain((0..62).map(|v| (v, (v + 2) % 62)))
            .chain((0..35).map(|v| (v, (v + 3) % 62)));
        let sixty_two = Graph::from_edges(62, offsets);
        assert_eq!(sixty_two.m(), 159);
        assert_eq!(complement_size(&sixty_two), 62 * 61 / 2 - 159);
        assert_eq!(complement_size(&sixty_two), 1732);
    }

    #[test]
    fn clustering_coefficients() {
        assert_eq!(graph_stats(&complete(3)).avg_clustering_coefficient, 1.0);
        assert_eq!(graph_stats(&star(5)).avg_clustering_coefficient, 0.0);
        // K4 minus one edge: the two degree-3 vertices sit on 2 of 3 possible triangles.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let cc = local_clustering(&g);
        assert_eq!(cc, vec![2.0 / 3.0, 2.0 / 3.0, 1.0, 1.0]);
    }

    #[test]
    fn alpha_mle() {
        // Star with 5 leaves: degrees 5,1,1,1,1,1 -> 1 + 6 / ln 5.
        let a = power_law_alpha(&star(5)).unwrap();
        assert!((a - (1.0 + 6.0 / 5f64.ln())).abs() < 1e-12);
        assert_eq!(power_law_alpha(&cycle(5)), None);
    }

    #[test]
    fn components() {
        let g = Graph::from_edges(5, [(0, 1), (2, 3), (3, 4)]);
        let s = graph_stats(&g);
        assert_eq!((s.n_components, s.lcc_size), (2, 3));
        let lcc = largest_component(&g);
        assert_eq!((lcc.n(), lcc.m()), (3, 2));
        assert_eq!(lcc.label(0), "2");
    }

    #[test]
    fn induced_subgraph_examples() {
        let k4 = complete(4);
        let tri = induced_subgraph(&k4, &[0, 2, 3]).unwrap();
        assert_eq!((tri.n(), tri.m()), (3, 3));

        let p4 = path(4);
        let ends = induced_subgraph(&p4, &[0, 3]).unwrap();
        assert_eq!((ends.n(), ends.m()), (2, 0));
        let p3 = induced_subgraph(&p4, &[0, 1, 2]).unwrap();
        assert_eq!(p3.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);

        assert!(matches!(
            induced_subgraph(&p4, &[7]),
            Err(Error::UnknownVertex(7))
        ));
    }

    #[test]
    fn density() {
        assert_eq!(density_of(&complete(5), &[0, 1, 2, 3]), 1.0);
        assert_eq!(density_of(&path(4), &[0, 1, 2, 3]), 0.5);
    }
}
