//! Weighted directed IP interaction graph and per-node graph features.
//!
//! Nodes are numbered in order of first appearance in the flow corpus, so
//! every result depends only on the graph structure and flow order, never
//! on the address strings themselves.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::flow::FlowDataset;

#[derive(Debug, Clone, Default)]
pub struct NetworkGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// Out-neighbors per node as `(target, weight)`, sorted by target.
    out_adj: Vec<Vec<(usize, u64)>>,
    /// In-neighbors per node as `(source, weight)`, sorted by source.
    in_adj: Vec<Vec<(usize, u64)>>,
}

impl NetworkGraph {
    /// Builds the graph from a flow corpus: one node per distinct address,
    /// one directed edge per ordered pair, weighted by the flow count.
    pub fn from_dataset(ds: &FlowDataset) -> Self {
        Self::from_edges(
            ds.records
                .iter()
                .map(|r| (r.src_ip.as_str(), r.dst_ip.as_str())),
        )
    }

    /// Builds a graph from a sequence of `(src, dst)` observations.
    pub fn from_edges<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        let mut weights: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let mut intern = |ip: &str, nodes: &mut Vec<String>| -> usize {
            if let Some(&i) = index.get(ip) {
                return i;
            }
            let i = nodes.len();
            nodes.push(ip.to_string());
            index.insert(ip.to_string(), i);
            i
        };
        for (s, d) in pairs {
            let u = intern(s, &mut nodes);
            let v = intern(d, &mut nodes);
            *weights.entry((u, v)).or_insert(0) += 1;
        }
        let n = nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (&(u, v), &w) in &weights {
            out_adj[u].push((v, w));
            in_adj[v].push((u, w));
        }
        for list in &mut in_adj {
            list.sort_unstable();
        }
        let index = nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self {
            nodes,
            index,
            out_adj,
            in_adj,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, ip: &str) -> Option<usize> {
        self.index.get(ip).copied()
    }

    pub fn edge_weight(&self, src: &str, dst: &str) -> Option<u64> {
        let u = self.node_index(src)?;
        let v = self.node_index(dst)?;
        self.out_adj[u]
            .binary_search_by_key(&v, |&(t, _)| t)
            .ok()
            .map(|i| self.out_adj[u][i].1)
    }

    pub fn out_edges(&self, u: usize) -> &[(usize, u64)] {
        &self.out_adj[u]
    }

    pub fn in_edges(&self, v: usize) -> &[(usize, u64)] {
        &self.in_adj[v]
    }

    /// Undirected projection without self-loops: for each node, its distinct
    /// neighbors (sorted) with the summed weight of edges in both directions.
    pub fn undirected_neighbors(&self) -> Vec<Vec<(usize, u64)>> {
        let n = self.node_count();
        let mut acc: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
        for u in 0..n {
            for &(v, w) in &self.out_adj[u] {
                if u != v {
                    *acc[u].entry(v).or_insert(0) += w;
                    *acc[v].entry(u).or_insert(0) += w;
                }
            }
        }
        acc.into_iter().map(|m| m.into_iter().collect()).collect()
    }
}

/// Scores from an iterative algorithm together with its convergence status.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeScores {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `distinct undirected neighbors / (n - 1)`; self-loops do not count.
pub fn degree_centrality(g: &NetworkGraph) -> Vec<f64> {
    let n = g.node_count();
    if n <= 1 {
        return vec![0.0; n];
    }
    let denom = (n - 1) as f64;
    g.undirected_neighbors()
        .iter()
        .map(|nb| nb.len() as f64 / denom)
        .collect()
}

/// Weighted PageRank.
///
/// Mass leaving a node is split proportionally to its out-edge weights.
/// Nodes without out-edges spread their mass uniformly over all nodes.
pub fn pagerank(g: &NetworkGraph, damping: f64, tol: f64, max_iter: usize) -> IterativeScores {
    let n = g.node_count();
    if n == 0 {
        return IterativeScores {
            values: Vec::new(),
            iterations: 0,
            converged: true,
        };
    }
    let nf = n as f64;
    let out_weight: Vec<f64> = (0..n)
        .map(|u| g.out_edges(u).iter().map(|&(_, w)| w as f64).sum())
        .collect();
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let dangling: f64 = (0..n)
            .filter(|&u| out_weight[u] == 0.0)
            .map(|u| rank[u])
            .sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g
                .in_edges(v)
                .iter()
                .map(|&(u, w)| rank[u] * w as f64 / out_weight[u])
                .sum();
            *slot = base + damping * inflow;
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < tol {
            converged = true;
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|r| *r /= total);
    IterativeScores {
        values: rank,
        iterations,
        converged,
    }
}

/// Local clustering coefficient on the undirected, unweighted projection.
pub fn clustering_coefficient(g: &NetworkGraph) -> Vec<f64> {
    let nbrs = g.undirected_neighbors();
    let sets: Vec<Vec<usize>> = nbrs
        .iter()
        .map(|l| l.iter().map(|&(v, _)| v).collect())
        .collect();
    sets.iter()
        .map(|nb| {
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if sets[a].binary_search(&b).is_ok() {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

const BETWEENNESS_CHUNK: usize = 32;

/// Unnormalized shortest-path betweenness on the directed, unweighted graph
/// (Brandes accumulation).
///
/// Sources are processed in parallel in fixed chunks whose partial sums are
/// combined in chunk order, so the result does not depend on scheduling.
pub fn betweenness_centrality(g: &NetworkGraph) -> Vec<f64> {
    let n = g.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BETWEENNESS_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut work = BrandesWork::new(n);
            for &s in chunk {
                work.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

struct BrandesWork {
    stack: Vec<usize>,
    queue: VecDeque<usize>,
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
}

impl BrandesWork {
    fn new(n: usize) -> Self {
        Self {
            stack: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
        }
    }

    fn accumulate(&mut self, g: &NetworkGraph, s: usize, acc: &mut [f64]) {
        self.dist.fill(-1);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        self.preds.iter_mut().for_each(Vec::clear);
        self.stack.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &(w, _) in g.out_edges(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// HITS hub and authority scores on the unweighted directed adjacency.
/// Both vectors are L2-normalized; an edgeless graph yields all zeros.
pub fn hits(g: &NetworkGraph, tol: f64, max_iter: usize) -> (IterativeScores, IterativeScores) {
    let n = g.node_count();
    if g.edge_count() == 0 {
        let zero = IterativeScores {
            values: vec![0.0; n],
            iterations: 0,
            converged: true,
        };
        return (zero.clone(), zero);
    }
    let mut hub = vec![1.0 / (n as f64).sqrt(); n];
    let mut auth = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let normalize = |v: &mut [f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    };
    while iterations < max_iter {
        iterations += 1;
        let new_auth: Vec<f64> = (0..n)
            .map(|v| g.in_edges(v).iter().map(|&(u, _)| hub[u]).sum())
            .collect();
        let mut new_auth = new_auth;
        normalize(&mut new_auth);
        let mut new_hub: Vec<f64> = (0..n)
            .map(|u| g.out_edges(u).iter().map(|&(v, _)| new_auth[v]).sum())
            .collect();
        normalize(&mut new_hub);
        let change = hub
            .iter()
            .zip(&new_hub)
            .chain(auth.iter().zip(&new_auth))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        hub = new_hub;
        auth = new_auth;
        if change < tol {
            converged = true;
            break;
        }
    }
    (
        IterativeScores {
            values: hub,
            iterations,
            converged,
        },
        IterativeScores {
            values: auth,
            iterations,
            converged,
        },
    )
}

/// Community assignment from label propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Communities {
    /// Community id per node; ids are numbered 0.. in order of first
    /// appearance by node index.
    pub labels: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
}

impl Communities {
    pub fn count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// Asynchronous label propagation on the weighted undirected projection.
///
/// Every node starts with its own label. Each sweep visits nodes in a
/// freshly shuffled order and moves each node to the label with the largest
/// summed edge weight among its neighbors, ties going to the smallest label.
/// Stops after a sweep with no change, or after `max_iter` sweeps.
pub fn label_propagation(g: &NetworkGraph, seed: u64, max_iter: usize) -> Communities {
    let n = g.node_count();
    let nbrs = g.undirected_neighbors();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut votes: BTreeMap<usize, u64> = BTreeMap::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_iter {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            if nbrs[v].is_empty() {
                continue;
            }
            votes.clear();
            for &(u, w) in &nbrs[v] {
                *votes.entry(labels[u]).or_insert(0) += w;
            }
            // BTreeMap iterates labels ascending, so the first maximum wins ties.
            let mut best = (usize::MAX, 0u64);
            for (&label, &w) in &votes {
                if w > best.1 {
                    best = (label, w);
                }
            }
            if labels[v] != best.0 {
                labels[v] = best.0;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let mut remap = HashMap::new();
    let labels = labels
        .into_iter()
        .map(|l| {
            let next = remap.len();
            *remap.entry(l).or_insert(next)
        })
        .collect();
    Communities {
        labels,
        sweeps,
        converged,
    }
}

/// Names of the numeric per-node columns, in feature-vector order.
pub const NODE_FEATURE_NAMES: [&str; 10] = [
    "degree_centrality",
    "pagerank",
    "clustering_coefficient",
    "betweenness",
    "in_degree",
    "out_degree",
    "in_weight",
    "out_weight",
    "hub",
    "authority",
];

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeFeatureConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub lpa_seed: u64,
    pub lpa_max_iter: usize,
}

impl Default for NodeFeatureConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 200,
            lpa_seed: 0,
            lpa_max_iter: 100,
        }
    }
}

/// Per-node graph features, one row per node in graph order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeFeatureTable {
    pub nodes: Vec<String>,
    pub degree_centrality: Vec<f64>,
    pub pagerank: Vec<f64>,
    pub clustering_coefficient: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub in_degree: Vec<u64>,
    pub out_degree: Vec<u64>,
    pub in_weight: Vec<u64>,
    pub out_weight: Vec<u64>,
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub community: Vec<usize>,
    /// Names of iterative algorithms that hit their iteration cap.
    pub warnings: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeFeatureTable {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, ip: &str) -> Option<usize> {
        self.index.get(ip).copied()
    }

    /// The ten numeric features of node `i`, ordered as [`NODE_FEATURE_NAMES`].
    pub fn numeric_row(&self, i: usize) -> [f64; 10] {
        [
            self.degree_centrality[i],
            self.pagerank[i],
            self.clustering_coefficient[i],
            self.betweenness[i],
            self.in_degree[i] as f64,
            self.out_degree[i] as f64,
            self.in_weight[i] as f64,
            self.out_weight[i] as f64,
            self.hub[i],
            self.authority[i],
        ]
    }

    /// CSV keyed by node id: `node,<numeric columns>,community`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["node"];
        header.extend(NODE_FEATURE_NAMES);
        header.push("community");
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.nodes[i].clone()];
            row.extend(self.numeric_row(i).iter().map(|v| v.to_string()));
            row.push(self.community[i].to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a table written by [`NodeFeatureTable::write_csv`].
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self, csv::Error> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut t = NodeFeatureTable::default();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, csv::Error> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| bad_field(&rec, i))
            };
            let int = |i: usize| -> Result<u64, csv::Error> {
                rec.get(i)
                    .and_then(|s| s.parse::<u64>().ok())
                    .ok_or_else(|| bad_field(&rec, i))
            };
            t.nodes.push(rec.get(0).unwrap_or_default().to_string());
            t.degree_centrality.push(num(1)?);
            t.pagerank.push(num(2)?);
            t.clustering_coefficient.push(num(3)?);
            t.betweenness.push(num(4)?);
            t.in_degree.push(int(5)?);
            t.out_degree.push(int(6)?);
            t.in_weight.push(int(7)?);
            t.out_weight.push(int(8)?);
            t.hub.push(num(9)?);
            t.authority.push(num(10)?);
            t.community.push(int(11)? as usize);
        }
        t.rebuild_index();
        Ok(t)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .nodes
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
    }
}

fn bad_field(rec: &csv::StringRecord, i: usize) -> csv::Error {
    csv::Error::from(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("bad node table field {i} in {rec:?}"),
    ))
}

/// Runs every per-node algorithm once over `g`.
pub fn compute_node_features(g: &NetworkGraph, cfg: &NodeFeatureConfig) -> NodeFeatureTable {
    let n = g.node_count();
    let mut warnings = Vec::new();
    let pr = pagerank(g, cfg.damping, cfg.tol, cfg.max_iter);
    if !pr.converged {
        warnings.push("pagerank".to_string());
    }
    let (hub, auth) = hits(g, cfg.tol, cfg.max_iter);
    if !hub.converged {
        warnings.push("hits".to_string());
    }
    let comm = label_propagation(g, cfg.lpa_seed, cfg.lpa_max_iter);
    if !comm.converged {
        warnings.push("label_propagation".to_string());
    }
    let weight_sum = |edges: &[(usize, u64)]| edges.iter().map(|&(_, w)| w).sum::<u64>();
    let mut t = NodeFeatureTable {
        nodes: g.nodes().to_vec(),
        degree_centrality: degree_centrality(g),
        pagerank: pr.values,
        clustering_coefficient: clustering_coefficient(g),
        betweenness: betweenness_centrality(g),
        in_degree: (0..n).map(|v| g.in_edges(v).len() as u64).collect(),
        out_degree: (0..n).map(|v| g.out_edges(v).len() as u64).collect(),
        in_weight: (0..n).map(|v| weight_sum(g.in_edges(v))).collect(),
        out_weight: (0..n).map(|v| weight_sum(g.out_edges(v))).collect(),
        hub: hub.values,
        authority: auth.values,
        community: comm.labels,
        warnings,
        index: HashMap::new(),
    };
    t.rebuild_index();
    t
}
