//! Polynomial-time solver for affine chain values `pi_C = alpha - beta(C)`.
//!
//! Chains are never listed. The poset gets an artificial source below every
//! minimal element and sink above every maximal element; maximal chains are
//! then exactly the source-sink paths, and a chain's current slack is the
//! length of its path under node weights `rho + beta` with the sink weighted
//! `beta_t` (starting at `-alpha`). Tight chains become zero-length paths.

use rayon::prelude::*;
use thiserror::Error;

use crate::greedy::{AffineRound, IterationState, QSolution, SolveOptions};
use crate::poset::Poset;
use crate::problem::{ProblemError, SubsetDistribution};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AffineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("some maximal chain has negative slack (minimum {min_delta})")]
    NecessaryConditionViolated { min_delta: Rational },
    #[error("some maximal chain has value {max_pi} above 1")]
    PiAboveOne { max_pi: Rational },
}

/// Cover graph of the poset plus source `s` and sink `t`. Every edge into a
/// node has the same length, so lengths are stored per head node.
#[derive(Debug, Clone)]
pub struct AugmentedCoverGraph {
    n: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    topo: Vec<usize>,
    position: Vec<usize>,
    length_into: Vec<Rational>,
}

impl AugmentedCoverGraph {
    /// All lengths start at zero.
    pub fn new(poset: &Poset) -> Self {
        let n = poset.len();
        let (s, t) = (n, n + 1);
        let mut succ = vec![Vec::new(); n + 2];
        for x in 0..n {
            succ[x] = poset.upper_covers(x).to_vec();
            if succ[x].is_empty() {
                succ[x].push(t);
            }
        }
        succ[s] = poset.minimal_elements();
        let mut pred = vec![Vec::new(); n + 2];
        for (x, ys) in succ.iter().enumerate() {
            for &y in ys {
                pred[y].push(x);
            }
        }
        let mut topo = Vec::with_capacity(n + 2);
        topo.push(s);
        topo.extend_from_slice(poset.topological_order());
        topo.push(t);
        let mut position = vec![0; n + 2];
        for (i, &v) in topo.iter().enumerate() {
            position[v] = i;
        }
        AugmentedCoverGraph { n, succ, pred, topo, position, length_into: vec![Rational::zero(); n + 2] }
    }

    pub fn source(&self) -> usize {
        self.n
    }

    pub fn sink(&self) -> usize {
        self.n + 1
    }

    pub fn node_count(&self) -> usize {
        self.n + 2
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Length of every edge into `v`.
    pub fn length_into(&self, v: usize) -> &Rational {
        &self.length_into[v]
    }

    /// Edges into element `y` get `rho_y + beta_y`; edges into the sink get
    /// `beta_t`.
    pub fn set_lengths(&mut self, rho: &[Rational], beta: &[Rational], beta_t: &Rational) {
        for y in 0..self.n {
            self.length_into[y] = &rho[y] + &beta[y];
        }
        self.length_into[self.n] = Rational::zero();
        self.length_into[self.n + 1] = beta_t.clone();
    }

    /// Shortest distances from `source` to every node; `None` if unreachable.
    pub fn shortest_from(&self, source: usize) -> Vec<Option<Rational>> {
        let mut dist: Vec<Option<Rational>> = vec![None; self.node_count()];
        dist[source] = Some(Rational::zero());
        for &v in &self.topo[self.position[source]..] {
            let Some(dv) = dist[v].clone() else { continue };
            for &w in &self.succ[v] {
                let cand = &dv + &self.length_into[w];
                match &dist[w] {
                    Some(dw) if *dw <= cand => {}
                    _ => dist[w] = Some(cand),
                }
            }
        }
        dist
    }

    /// Lightest source-sink path, with its length.
    pub fn shortest_st_path(&self) -> (Vec<usize>, Rational) {
        let mut dist: Vec<Option<(Rational, usize)>> = vec![None; self.node_count()];
        dist[self.source()] = Some((Rational::zero(), usize::MAX));
        for &v in &self.topo {
            let Some((dv, _)) = dist[v].clone() else { continue };
            for &w in &self.succ[v] {
                let cand = &dv + &self.length_into[w];
                match &dist[w] {
                    Some((dw, _)) if *dw <= cand => {}
                    _ => dist[w] = Some((cand, v)),
                }
            }
        }
        let (len, mut v) = dist[self.sink()].clone().expect("sink reachable");
        let mut path = Vec::new();
        while v != self.source() {
            path.push(v);
            v = dist[v].as_ref().unwrap().1;
        }
        path.reverse();
        (path, len)
    }
}

/// Shortest distances between nodes of an [`AugmentedCoverGraph`]. Rows are
/// present only for the sources they were computed from.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    rows: Vec<Option<Vec<Option<Rational>>>>,
}

impl DistanceMatrix {
    /// `None` when `y` is unreachable from `x` (or the row was not computed).
    pub fn get(&self, x: usize, y: usize) -> Option<&Rational> {
        self.rows[x].as_ref().and_then(|r| r[y].as_ref())
    }

    pub fn has_row(&self, x: usize) -> bool {
        self.rows[x].is_some()
    }
}

/// Distances from every node.
pub fn all_pairs_dag_shortest(graph: &AugmentedCoverGraph) -> DistanceMatrix {
    let sources: Vec<usize> = (0..graph.node_count()).collect();
    shortest_from_sources(graph, &sources)
}

/// Distances from the listed sources only; each row is one relaxation pass
/// in topological order.
pub fn shortest_from_sources(graph: &AugmentedCoverGraph, sources: &[usize]) -> DistanceMatrix {
    let computed: Vec<(usize, Vec<Option<Rational>>)> =
        sources.par_iter().map(|&src| (src, graph.shortest_from(src))).collect();
    let mut rows = vec![None; graph.node_count()];
    for (src, row) in computed {
        rows[src] = Some(row);
    }
    DistanceMatrix { rows }
}

/// Shortest source-to-sink distances that pass through exactly `q` counted
/// nodes, for `q` in `0..=max_hops`.
///
/// Nodes are `0` (source), `1..=k` (counted, in topological order) and
/// `k + 1` (sink). `edges` lists `(from, to, length)` with `from < to`.
/// Entry `q` is `None` when no such path exists.
pub fn constrained_hop_shortest(
    k: usize,
    edges: &[(usize, usize, Rational)],
    max_hops: usize,
) -> Vec<Option<Rational>> {
    let sink = k + 1;
    let mut incoming: Vec<Vec<(usize, &Rational)>> = vec![Vec::new(); k + 2];
    for (a, b, len) in edges {
        debug_assert!(a < b, "edges must respect the node order");
        incoming[*b].push((*a, len));
    }
    // layer[v]: shortest distance to v through exactly q counted nodes,
    // counting v itself when it is counted.
    let mut layer: Vec<Option<Rational>> = vec![None; k + 2];
    layer[0] = Some(Rational::zero());
    let mut result = vec![None; max_hops + 1];
    for q in 0..=max_hops {
        if q > 0 {
            let mut next: Vec<Option<Rational>> = vec![None; k + 2];
            for v in 1..=k {
                for &(u, len) in &incoming[v] {
                    if u == sink {
                        continue;
                    }
                    if let Some(du) = &layer[u] {
                        let cand = du + len;
                        if next[v].as_ref().is_none_or(|cur| cand < *cur) {
                            next[v] = Some(cand);
                        }
                    }
                }
            }
            layer = next;
        }
        let mut best: Option<Rational> = None;
        for &(u, len) in &incoming[sink] {
            if let Some(du) = &layer[u] {
                let cand = du + len;
                if best.as_ref().is_none_or(|cur| cand < *cur) {
                    best = Some(cand);
                }
            }
        }
        result[q] = best;
        if layer.iter().all(Option::is_none) {
            break;
        }
    }
    result
}

/// Length of the longest chain among `nodes` under `less`.
fn height(nodes: &[usize], less: impl Fn(usize, usize) -> bool) -> usize {
    let mut h = vec![1usize; nodes.len()];
    for j in 0..nodes.len() {
        for i in 0..j {
            if less(nodes[i], nodes[j]) {
                h[j] = h[j].max(h[i] + 1);
            }
        }
    }
    h.into_iter().max().unwrap_or(0)
}

/// Solves the minimum-total-weight subset problem for affine chain values.
///
/// Produces exactly the same rounds, subsets and weights as
/// [`crate::greedy::solve_q_general`] on the expanded problem.
pub fn solve_q_affine(
    poset: &Poset,
    rho: &[Rational],
    alpha: &Rational,
    beta: &[Rational],
    opts: &SolveOptions,
) -> Result<QSolution, AffineError> {
    // Reuse the problem constructor for the range and length checks.
    crate::problem::ChainConstraintProblem::affine(poset.clone(), rho.to_vec(), alpha.clone(), beta.to_vec())?;
    let n = poset.len();
    let mut graph = AugmentedCoverGraph::new(poset);
    let (s, t) = (graph.source(), graph.sink());

    let zeros = vec![Rational::zero(); n];
    graph.set_lengths(&zeros, beta, &Rational::zero());
    let (_, lightest_beta) = graph.shortest_st_path();
    let max_pi = alpha - &lightest_beta;
    if max_pi > Rational::one() {
        return Err(AffineError::PiAboveOne { max_pi });
    }

    let mut rho = rho.to_vec();
    let mut beta_t = -alpha;
    let mut sigma = SubsetDistribution::new();
    let mut total = Rational::zero();
    let mut trace = Vec::new();
    let mut k = 0;

    loop {
        let elements: Vec<usize> = (0..n).filter(|&x| rho[x].is_positive()).collect();
        graph.set_lengths(&rho, beta, &beta_t);
        if k == 0 {
            let d_st = graph.shortest_from(s)[t].clone().expect("sink reachable");
            if d_st.is_negative() {
                return Err(AffineError::NecessaryConditionViolated { min_delta: d_st });
            }
        }
        if elements.is_empty() {
            break;
        }
        k += 1;

        let mut sources = elements.clone();
        sources.push(s);
        let m = shortest_from_sources(&graph, &sources);
        let d_st = m.get(s, t).expect("sink reachable").clone();
        let to_t = |x: usize| m.get(x, t).expect("sink reachable from every element");
        let from_s = |x: usize| m.get(s, x).expect("every element reachable from source");

        // Zero-slack comparability among surviving elements.
        let tight_below = |x: usize, y: usize| match m.get(x, y) {
            Some(mxy) if x != y => (from_s(x) + mxy + to_t(y)).is_zero(),
            _ => false,
        };
        let mut selected: Vec<usize> =
            elements.iter().copied().filter(|&y| !elements.iter().any(|&x| tight_below(x, y))).collect();
        selected.sort_by_key(|&x| graph.position[x]);

        // Hop-constrained distances over the order of the poset restricted
        // to the selection.
        let kk = selected.len();
        let mut edges = Vec::new();
        for (i, &x) in selected.iter().enumerate() {
            edges.push((0, i + 1, from_s(x).clone()));
            edges.push((i + 1, kk + 1, to_t(x).clone()));
            for (j, &y) in selected.iter().enumerate().skip(i + 1) {
                if let Some(mxy) = m.get(x, y) {
                    edges.push((i + 1, j + 1, mxy.clone()));
                }
            }
        }
        let max_hops = height(&selected, |x, y| m.get(x, y).is_some());
        let hops = constrained_hop_shortest(kk, &edges, max_hops);

        let mut w = selected.iter().map(|&x| rho[x].clone()).min().expect("selection is nonempty");
        for (q, len) in hops.iter().enumerate().skip(2) {
            if let Some(len) = len {
                let cap = len / &Rational::from(q - 1);
                if cap < w {
                    w = cap;
                }
            }
        }

        if opts.trace {
            trace.push(IterationState {
                k,
                elements: elements.clone(),
                rho: rho.clone(),
                selected: {
                    let mut v = selected.clone();
                    v.sort_unstable();
                    v
                },
                weight: w.clone(),
                chains: None,
                affine: Some(AffineRound { beta_t: beta_t.clone(), distance_st: d_st, hop_lengths: hops }),
            });
        }

        sigma.add(&selected, w.clone());
        total += &w;
        for &x in &selected {
            rho[x] -= &w;
        }
        beta_t += &w;
    }

    Ok(QSolution { sigma, total, iterations: k, trace, chains: Vec::new() })
}
