//! Random directed web-graph models.
//!
//! Generators are pure functions of their [`GraphModelConfig`]: the same config
//! (including the seed) always yields the same edge set. Graphs are simple
//! (no multi-edges) and immutable once built.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use thiserror::Error;

use crate::seed;
use crate::stats::{FitError, LinearFit};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph config: {0}")]
    InvalidConfig(String),
    #[error("edge ({src}, {dst}) out of range for n = {n}")]
    EdgeOutOfRange { src: usize, dst: usize, n: usize },
    #[error("self-loop at node {0} not allowed in this graph")]
    SelfLoop(usize),
    #[error("node count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("insufficient data for exponent fit: {0}")]
    InsufficientData(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

/// A simple directed graph on nodes `0..n`.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    allow_self_loops: bool,
}

// Equality is structural: node count and edge set. The self-loop flag is a
// construction-time policy and does not change which graph this is.
impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for DirectedGraph {}

impl DirectedGraph {
    pub fn empty(n: usize, allow_self_loops: bool) -> Self {
        DirectedGraph { n, edges: BTreeSet::new(), allow_self_loops }
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        allow_self_loops: bool,
    ) -> Result<Self, GraphError> {
        let mut g = Self::empty(n, allow_self_loops);
        for (src, dst) in edges {
            g.add_edge(src, dst)?;
        }
        Ok(g)
    }

    /// Insert an edge; returns whether it was new.
    pub fn add_edge(&mut self, src: usize, dst: usize) -> Result<bool, GraphError> {
        if src >= self.n || dst >= self.n {
            return Err(GraphError::EdgeOutOfRange { src, dst, n: self.n });
        }
        if src == dst && !self.allow_self_loops {
            return Err(GraphError::SelfLoop(src));
        }
        Ok(self.edges.insert((src, dst)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allow_self_loops
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    /// Edges in lexicographic `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn out_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((node, 0)..(node + 1, 0)).map(|&(_, dst)| dst)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(src, _) in &self.edges {
            deg[src] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(_, dst) in &self.edges {
            deg[dst] += 1;
        }
        deg
    }

    /// Maximum number of nonzeros in a row of the adjacency matrix.
    pub fn sparsity(&self) -> usize {
        self.out_degrees().into_iter().max().unwrap_or(0)
    }

    /// Adjacency lists indexed by source node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(src, dst) in &self.edges {
            adj[src].push(dst);
        }
        adj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseModel {
    PreferentialAttachment,
    Copying,
}

/// Graph families. The composite variants are built from a base family:
/// `ReverseOf` flips every edge, `Mixed` unions an in-degree-law graph with the
/// reverse of an out-degree-law graph, `Undirected` unions a graph with its own
/// reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphModel {
    PreferentialAttachment,
    Copying,
    Complete,
    ReverseOf(BaseModel),
    Mixed(BaseModel),
    Undirected(BaseModel),
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = |b: &BaseModel| match b {
            BaseModel::PreferentialAttachment => "pa",
            BaseModel::Copying => "copying",
        };
        match self {
            GraphModel::PreferentialAttachment => write!(f, "pa"),
            GraphModel::Copying => write!(f, "copying"),
            GraphModel::Complete => write!(f, "complete"),
            GraphModel::ReverseOf(b) => write!(f, "reverse-{}", base(b)),
            GraphModel::Mixed(b) => write!(f, "mixed-{}", base(b)),
            GraphModel::Undirected(b) => write!(f, "undirected-{}", base(b)),
        }
    }
}

impl FromStr for GraphModel {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use BaseModel::*;
        let model = match s {
            "pa" | "preferential_attachment" => GraphModel::PreferentialAttachment,
            "copying" => GraphModel::Copying,
            "complete" => GraphModel::Complete,
            "reverse-pa" | "reverse_of" => GraphModel::ReverseOf(PreferentialAttachment),
            "reverse-copying" => GraphModel::ReverseOf(Copying),
            "mixed-pa" | "mixed" => GraphModel::Mixed(PreferentialAttachment),
            "mixed-copying" => GraphModel::Mixed(Copying),
            "undirected-pa" | "undirected" => GraphModel::Undirected(PreferentialAttachment),
            "undirected-copying" => GraphModel::Undirected(Copying),
            other => return Err(GraphError::InvalidConfig(format!("unknown model '{other}'"))),
        };
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphModelConfig {
    pub model: GraphModel,
    pub n: usize,
    /// Edges emitted per new vertex (preferential attachment).
    pub m: usize,
    /// Probability of a uniformly random target instead of a copied one.
    pub p_copy: f64,
    /// Out-degree of the copying model's initial ring.
    pub d0: usize,
    pub seed: u64,
    /// Target ratio of the out-law part's max out-degree to the in-law part's
    /// max in-degree (mixed models only).
    pub mix_ratio: f64,
    /// Self-loops in the complete graph.
    pub self_loops: bool,
}

impl Default for GraphModelConfig {
    fn default() -> Self {
        GraphModelConfig {
            model: GraphModel::PreferentialAttachment,
            n: 16,
            m: 2,
            p_copy: 0.5,
            d0: 3,
            seed: 0,
            mix_ratio: 3.0,
            self_loops: true,
        }
    }
}

impl GraphModelConfig {
    pub fn new(model: GraphModel, n: usize) -> Self {
        GraphModelConfig { model, n, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidConfig(msg));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        let base = match self.model {
            GraphModel::Complete => return Ok(()),
            GraphModel::PreferentialAttachment => BaseModel::PreferentialAttachment,
            GraphModel::Copying => BaseModel::Copying,
            GraphModel::ReverseOf(b) | GraphModel::Mixed(b) | GraphModel::Undirected(b) => b,
        };
        if matches!(self.model, GraphModel::Mixed(_)) && !(self.mix_ratio > 0.0) {
            return bad(format!("mix_ratio must be positive, got {}", self.mix_ratio));
        }
        match base {
            BaseModel::PreferentialAttachment => {
                if self.m < 1 || self.n < self.m {
                    return bad(format!("need n >= m >= 1, got n = {}, m = {}", self.n, self.m));
                }
            }
            BaseModel::Copying => {
                if self.d0 < 1 {
                    return bad("d0 must be at least 1".into());
                }
                if self.n < self.d0 + 1 {
                    return bad(format!("need n >= d0 + 1, got n = {}, d0 = {}", self.n, self.d0));
                }
                if !(0.0..1.0).contains(&self.p_copy) {
                    return bad(format!("p_copy must lie in [0, 1), got {}", self.p_copy));
                }
            }
        }
        Ok(())
    }
}

/// Build a graph from any supported model.
pub fn generate(cfg: &GraphModelConfig) -> Result<DirectedGraph, GraphError> {
    cfg.validate()?;
    let base_cfg = |base: BaseModel, seed: u64| GraphModelConfig {
        model: match base {
            BaseModel::PreferentialAttachment => GraphModel::PreferentialAttachment,
            BaseModel::Copying => GraphModel::Copying,
        },
        seed,
        ..cfg.clone()
    };
    match cfg.model {
        GraphModel::PreferentialAttachment => gen_preferential_attachment(cfg),
        GraphModel::Copying => gen_copying(cfg),
        GraphModel::Complete => Ok(complete_graph(cfg.n, cfg.self_loops)),
        GraphModel::ReverseOf(base) => Ok(reverse_graph(&generate(&base_cfg(base, cfg.seed))?)),
        GraphModel::Undirected(base) => {
            let g = generate(&base_cfg(base, cfg.seed))?;
            mix_graphs(&g, &reverse_graph(&g))
        }
        GraphModel::Mixed(base) => {
            let in_law = generate(&base_cfg(base, seed::derive(cfg.seed, 0)))?;
            let mut out_cfg = base_cfg(base, seed::derive(cfg.seed, 1));
            let scaled = |k: usize| (cfg.mix_ratio * k as f64).ceil() as usize;
            match base {
                BaseModel::PreferentialAttachment => out_cfg.m = scaled(cfg.m).clamp(1, cfg.n),
                BaseModel::Copying => out_cfg.d0 = scaled(cfg.d0).clamp(1, cfg.n - 1),
            }
            let out_law = reverse_graph(&generate(&out_cfg)?);
            mix_graphs(&in_law, &out_law)
        }
    }
}

/// Degree-proportional attachment (linearized chord diagram process).
///
/// Vertex `t` emits `m` edges. Before each draw its own outgoing half-edge joins
/// the endpoint pool, so a draw of `t` itself is possible; that draw is redrawn
/// once, and if it repeats the loop stays in the pool but not in the graph.
/// Edges point new -> old, so the power law lands in the in-degrees.
pub fn gen_preferential_attachment(cfg: &GraphModelConfig) -> Result<DirectedGraph, GraphError> {
    if cfg.m < 1 || cfg.n < cfg.m {
        return Err(GraphError::InvalidConfig(format!(
            "need n >= m >= 1, got n = {}, m = {}",
            cfg.n, cfg.m
        )));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut graph = DirectedGraph::empty(cfg.n, false);
    let mut pool: Vec<usize> = Vec::with_capacity(2 * cfg.m * cfg.n);
    for t in 0..cfg.n {
        for _ in 0..cfg.m {
            pool.push(t);
            let mut target = pool[rng.random_range(0..pool.len())];
            if target == t {
                target = pool[rng.random_range(0..pool.len())];
            }
            pool.push(target);
            if target != t {
                graph.add_edge(t, target)?;
            }
        }
    }
    Ok(graph)
}

/// Linear copying model grown from a directed `d0`-regular ring on `d0 + 1` nodes.
pub fn gen_copying(cfg: &GraphModelConfig) -> Result<DirectedGraph, GraphError> {
    if cfg.d0 < 1 || cfg.n < cfg.d0 + 1 || !(0.0..1.0).contains(&cfg.p_copy) {
        return Err(GraphError::InvalidConfig(format!(
            "copying model needs d0 >= 1, n >= d0 + 1, 0 <= p_copy < 1 (got n = {}, d0 = {}, p_copy = {})",
            cfg.n, cfg.d0, cfg.p_copy
        )));
    }
    let mut rng = seed::rng(cfg.seed);
    let ring = cfg.d0 + 1;
    let mut graph = DirectedGraph::empty(cfg.n, false);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); cfg.n];
    for (i, out) in adj.iter_mut().enumerate().take(ring) {
        for k in 1..=cfg.d0 {
            let j = (i + k) % ring;
            graph.add_edge(i, j)?;
            out.push(j);
        }
    }
    for t in ring..cfg.n {
        let copying_vertex = rng.random_range(0..t);
        let mut targets = Vec::with_capacity(adj[copying_vertex].len());
        for &neighbor in &adj[copying_vertex] {
            let target = if rng.random::<f64>() < cfg.p_copy {
                rng.random_range(0..t)
            } else {
                neighbor
            };
            if graph.add_edge(t, target)? {
                targets.push(target);
            }
        }
        adj[t] = targets;
    }
    Ok(graph)
}

pub fn reverse_graph(g: &DirectedGraph) -> DirectedGraph {
    DirectedGraph {
        n: g.n,
        edges: g.edges.iter().map(|&(s, d)| (d, s)).collect(),
        allow_self_loops: g.allow_self_loops,
    }
}

/// Union of edge sets (boolean OR of adjacency matrices).
pub fn mix_graphs(a: &DirectedGraph, b: &DirectedGraph) -> Result<DirectedGraph, GraphError> {
    if a.n != b.n {
        return Err(GraphError::SizeMismatch(a.n, b.n));
    }
    Ok(DirectedGraph {
        n: a.n,
        edges: a.edges.union(&b.edges).copied().collect(),
        allow_self_loops: a.allow_self_loops || b.allow_self_loops,
    })
}

pub fn complete_graph(n: usize, with_self_loops: bool) -> DirectedGraph {
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| with_self_loops || i != j)
        .collect();
    DirectedGraph { n, edges, allow_self_loops: with_self_loops }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// `counts[d]` = number of nodes with degree `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub direction: Direction,
    pub counts: BTreeMap<usize, usize>,
}

impl DegreeHistogram {
    pub fn total_nodes(&self) -> usize {
        self.counts.values().sum()
    }

    /// Pool another histogram of the same direction into this one.
    pub fn merge(&mut self, other: &DegreeHistogram) {
        assert_eq!(self.direction, other.direction, "cannot merge in- and out-degree histograms");
        for (&d, &c) in &other.counts {
            *self.counts.entry(d).or_insert(0) += c;
        }
    }
}

pub fn degree_histogram(g: &DirectedGraph, direction: Direction) -> DegreeHistogram {
    let degrees = match direction {
        Direction::In => g.in_degrees(),
        Direction::Out => g.out_degrees(),
    };
    let mut counts = BTreeMap::new();
    for d in degrees {
        *counts.entry(d).or_insert(0) += 1;
    }
    DegreeHistogram { direction, counts }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    /// Positive for decaying laws: `N(d) ~ d^-exponent`.
    pub exponent: f64,
    pub r_squared: f64,
}

/// Smallest degree included in exponent fits unless the caller says otherwise.
pub const DEFAULT_D_MIN: usize = 4;

/// Least-squares slope of `ln N(d)` against `ln d` over `d >= d_min`, sign-flipped.
pub fn fit_degree_exponent(hist: &DegreeHistogram, d_min: usize) -> Result<ExponentFit, GraphError> {
    let d_min = d_min.max(1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = hist
        .counts
        .iter()
        .filter(|&(&d, &c)| d >= d_min && c > 0)
        .map(|(&d, &c)| ((d as f64).ln(), (c as f64).ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(GraphError::InsufficientData(format!(
            "{} distinct degrees >= {d_min}, need 3",
            xs.len()
        )));
    }
    let fit = LinearFit::fit(&xs, &ys).map_err(|e: FitError| GraphError::InsufficientData(e.to_string()))?;
    Ok(ExponentFit { exponent: -fit.slope, r_squared: fit.r_squared })
}

/// Serialize as the edge-list text format: `n <count>` then one `src dst` per line.
pub fn to_edgelist_string(g: &DirectedGraph) -> String {
    let mut out = format!("n {}\n", g.n);
    for (s, d) in g.edges() {
        out.push_str(&format!("{s} {d}\n"));
    }
    out
}

pub fn parse_edgelist(text: &str) -> Result<DirectedGraph, GraphError> {
    let mut graph: Option<DirectedGraph> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |detail: String| GraphError::Parse { line: line_no, detail };
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(format!("expected two fields, got '{line}'"))),
        };
        match graph.as_mut() {
            None => {
                if a != "n" {
                    return Err(parse_err("expected header 'n <node_count>'".into()));
                }
                let n: usize = b.parse().map_err(|_| parse_err(format!("invalid node count '{b}'")))?;
                if n < 1 {
                    return Err(parse_err("node count must be at least 1".into()));
                }
                graph = Some(DirectedGraph::empty(n, true));
            }
            Some(g) => {
                let src: usize = a.parse().map_err(|_| parse_err(format!("invalid index '{a}'")))?;
                let dst: usize = b.parse().map_err(|_| parse_err(format!("invalid index '{b}'")))?;
                g.add_edge(src, dst).map_err(|e| parse_err(e.to_string()))?;
            }
        }
    }
    graph.ok_or(GraphError::Parse { line: 0, detail: "missing header 'n <node_count>'".into() })
}

pub fn write_edgelist(g: &DirectedGraph, path: &Path) -> Result<(), GraphError> {
    fs::write(path, to_edgelist_string(g))?;
    Ok(())
}

pub fn read_edgelist(path: &Path) -> Result<DirectedGraph, GraphError> {
    parse_edgelist(&fs::read_to_string(path)?)
}
