//! Single-source single-sink flow networks with per-edge capacity,
//! transport cost and interdiction cost.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::poset::{join_ids, ElementId};
use crate::rational::Rational;

/// Default cap on the number of s-t paths materialized at once.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("network has no edges")]
    NoEdges,
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("self-loop at node {0}")]
    SelfLoop(String),
    #[error("source and sink must differ")]
    SourceIsSink,
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: String, value: String },
    #[error("{field} must be nonnegative, got {value}")]
    Negative { field: String, value: String },
    #[error("network has a cycle through node {0}")]
    NotAcyclic(String),
    #[error("node {0} is not on any s-t path")]
    Disconnected(String),
    #[error("more than {cap} s-t paths")]
    PathLimitExceeded { cap: usize },
    #[error("unknown path {0}")]
    UnknownPath(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Smuggler's capacity `c`.
    pub capacity: Rational,
    /// Per-unit transport cost `b`.
    pub transport_cost: Rational,
    /// Interdiction cost `d`.
    pub interdiction_cost: Rational,
}

/// Edge data keyed by node ids, as read from input.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub from: ElementId,
    pub to: ElementId,
    pub capacity: Rational,
    pub transport_cost: Rational,
    pub interdiction_cost: Rational,
}

/// An s-t path as the sequence of edge indices it traverses.
pub type Path = Vec<usize>;

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    nodes: Vec<ElementId>,
    source: usize,
    sink: usize,
    /// Sorted by `(from id, to id)`.
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    topo: Vec<usize>,
    /// Smuggler's unit price.
    p1: Rational,
    /// Interdictor's penalty per unit of interdicted flow.
    p2: Rational,
}

impl FlowNetwork {
    /// Validates and builds a network. Capacities, interdiction costs and
    /// prices must be positive; transport costs must be nonnegative. Every
    /// node and edge must lie on some s-t path.
    pub fn new(
        nodes: Vec<ElementId>,
        source: ElementId,
        sink: ElementId,
        edges: Vec<EdgeSpec>,
        p1: Rational,
        p2: Rational,
    ) -> Result<FlowNetwork, NetworkError> {
        let mut nodes = nodes;
        nodes.sort();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(NetworkError::DuplicateNode(w[0].to_string()));
        }
        let lookup: HashMap<ElementId, usize> = nodes.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let find = |id: &ElementId| lookup.get(id).copied().ok_or_else(|| NetworkError::UnknownNode(id.to_string()));
        let s = find(&source)?;
        let t = find(&sink)?;
        if s == t {
            return Err(NetworkError::SourceIsSink);
        }
        positive("p1", &p1)?;
        positive("p2", &p2)?;
        if edges.is_empty() {
            return Err(NetworkError::NoEdges);
        }

        let mut built = Vec::with_capacity(edges.len());
        for spec in edges {
            let from = find(&spec.from)?;
            let to = find(&spec.to)?;
            let label = format!("({},{})", spec.from, spec.to);
            if from == to {
                return Err(NetworkError::SelfLoop(spec.from.to_string()));
            }
            positive(&format!("c{label}"), &spec.capacity)?;
            positive(&format!("d{label}"), &spec.interdiction_cost)?;
            if spec.transport_cost.is_negative() {
                return Err(NetworkError::Negative {
                    field: format!("b{label}"),
                    value: spec.transport_cost.to_string(),
                });
            }
            built.push(Edge {
                from,
                to,
                capacity: spec.capacity,
                transport_cost: spec.transport_cost,
                interdiction_cost: spec.interdiction_cost,
            });
        }
        built.sort_by_key(|e| (e.from, e.to));
        if let Some(w) = built.windows(2).find(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to)) {
            return Err(NetworkError::DuplicateEdge(format!("({},{})", nodes[w[0].from], nodes[w[0].to])));
        }

        let n = nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in built.iter().enumerate() {
            out_edges[e.from].push(i);
            in_edges[e.to].push(i);
        }

        let mut indegree: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indegree[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            topo.push(v);
            for &e in out_edges[v].iter().rev() {
                let w = built[e].to;
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(w);
                }
            }
        }
        if topo.len() < n {
            let v = (0..n).find(|&v| indegree[v] > 0).expect("cycle member");
            return Err(NetworkError::NotAcyclic(nodes[v].to_string()));
        }

        let reach = |start: usize, adj: &Vec<Vec<usize>>, forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &e in &adj[v] {
                    let w = if forward { built[e].to } else { built[e].from };
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let from_s = reach(s, &out_edges, true);
        let to_t = reach(t, &in_edges, false);
        if let Some(v) = (0..n).find(|&v| !(from_s[v] && to_t[v])) {
            return Err(NetworkError::Disconnected(nodes[v].to_string()));
        }

        Ok(FlowNetwork { nodes, source: s, sink: t, edges: built, out_edges, in_edges, topo, p1, p2 })
    }

    pub fn nodes(&self) -> &[ElementId] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &ElementId {
        &self.nodes[v]
    }

    pub fn node_index(&self, id: &ElementId) -> Option<usize> {
        self.nodes.binary_search(id).ok()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn p1(&self) -> &Rational {
        &self.p1
    }

    pub fn p2(&self) -> &Rational {
        &self.p2
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// `(from,to)` label of an edge.
    pub fn edge_label(&self, e: usize) -> String {
        let edge = &self.edges[e];
        format!("({},{})", self.nodes[edge.from], self.nodes[edge.to])
    }

    pub fn find_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.out_edges[from].iter().copied().find(|&e| self.edges[e].to == to)
    }

    /// Edge whose label is `label`, e.g. `(s,1)`.
    pub fn edge_by_label(&self, label: &str) -> Option<usize> {
        (0..self.edges.len()).find(|&e| self.edge_label(e) == label)
    }

    /// `d / p2`, the per-unit price of interdicting an edge in flow units.
    pub fn scaled_interdiction_cost(&self, e: usize) -> Rational {
        &self.edges[e].interdiction_cost / &self.p2
    }

    /// `b / p1` for an edge.
    pub fn scaled_transport_cost(&self, e: usize) -> Rational {
        &self.edges[e].transport_cost / &self.p1
    }

    /// Base profit per unit of flow on a path: `1 - b_path / p1`.
    pub fn base_profit(&self, path: &[usize]) -> Rational {
        Rational::one() - path.iter().map(|&e| self.scaled_transport_cost(e)).sum::<Rational>()
    }

    pub fn path_transport_cost(&self, path: &[usize]) -> Rational {
        path.iter().map(|&e| &self.edges[e].transport_cost).sum()
    }

    /// All s-t paths, lexicographic in their node sequences.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Path>, NetworkError> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.paths_from(self.source, &mut stack, &mut out, cap)?;
        Ok(out)
    }

    fn paths_from(
        &self,
        v: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Path>,
        cap: usize,
    ) -> Result<(), NetworkError> {
        if v == self.sink {
            if out.len() >= cap {
                return Err(NetworkError::PathLimitExceeded { cap });
            }
            out.push(stack.clone());
            return Ok(());
        }
        for &e in &self.out_edges[v] {
            stack.push(e);
            self.paths_from(self.edges[e].to, stack, out, cap)?;
            stack.pop();
        }
        Ok(())
    }

    pub fn is_path(&self, path: &[usize]) -> bool {
        let Some(&first) = path.first() else {
            return false;
        };
        path.iter().all(|&e| e < self.edges.len())
            && self.edges[first].from == self.source
            && self.edges[*path.last().unwrap()].to == self.sink
            && path.windows(2).all(|w| self.edges[w[0]].to == self.edges[w[1]].from)
    }

    /// Arrow-joined node sequence, e.g. `s->1->t`.
    pub fn path_key(&self, path: &[usize]) -> String {
        let mut nodes = vec![&self.nodes[self.source]];
        nodes.extend(path.iter().map(|&e| &self.nodes[self.edges[e].to]));
        join_ids(nodes.into_iter(), "->")
    }

    pub fn parse_path_key(&self, key: &str) -> Result<Path, NetworkError> {
        let bad = || NetworkError::UnknownPath(key.to_string());
        let ids: Vec<ElementId> = key.split("->").map(ElementId::parse).collect();
        let mut path = Vec::with_capacity(ids.len().saturating_sub(1));
        for w in ids.windows(2) {
            let a = self.node_index(&w[0]).ok_or_else(bad)?;
            let b = self.node_index(&w[1]).ok_or_else(bad)?;
            path.push(self.find_edge(a, b).ok_or_else(bad)?);
        }
        if self.is_path(&path) {
            Ok(path)
        } else {
            Err(bad())
        }
    }

    /// Dash-joined edge labels, e.g. `(s,1)-(1,t)`.
    pub fn edge_set_key(&self, edges: &[usize]) -> String {
        edges.iter().map(|&e| self.edge_label(e)).collect::<Vec<_>>().join("-")
    }

    pub fn parse_edge_set_key(&self, key: &str) -> Option<Vec<usize>> {
        if key.is_empty() {
            return Some(Vec::new());
        }
        let mut set = BTreeSet::new();
        for part in key.split(")-(") {
            let part = part.trim_start_matches('(').trim_end_matches(')');
            set.insert(self.edge_by_label(&format!("({part})"))?);
        }
        Some(set.into_iter().collect())
    }
}

fn positive(field: &str, value: &Rational) -> Result<(), NetworkError> {
    if value.is_positive() {
        Ok(())
    } else {
        Err(NetworkError::NonPositive { field: field.to_string(), value: value.to_string() })
    }
}
