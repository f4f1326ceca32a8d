//! The flow program behind the interdiction game:
//! maximize `F(f) - T(f)/p1` subject to `f_e <= min(d_e/p2, c_e)` and flow
//! conservation, together with its dual multipliers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::lp::{LinearProgram, LpOutcome, LpSolution, Relation};
use crate::network::{FlowNetwork, NetworkError, Path};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CirculationError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("flow is not conserved at node {0}")]
    NonConserving(String),
    #[error("negative flow on edge {0}")]
    NegativeFlow(String),
    #[error("linear program failed: {0}")]
    Lp(String),
}

/// Flow per edge, indexed like [`FlowNetwork::edges`].
pub type EdgeFlow = Vec<Rational>;

/// Flow per s-t path; paths with zero flow are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathFlow {
    flows: BTreeMap<Path, Rational>,
}

impl PathFlow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: Path, value: Rational) {
        if value.is_zero() {
            return;
        }
        let entry = self.flows.entry(path.clone()).or_insert_with(Rational::zero);
        *entry += value;
        if entry.is_zero() {
            self.flows.remove(&path);
        }
    }

    pub fn get(&self, path: &[usize]) -> Rational {
        self.flows.get(path).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &Rational)> {
        self.flows.iter()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Total flow value `F(f)`.
    pub fn value(&self) -> Rational {
        self.flows.values().sum()
    }

    pub fn edge_flow(&self, network: &FlowNetwork) -> EdgeFlow {
        let mut f = vec![Rational::zero(); network.edge_count()];
        for (p, v) in &self.flows {
            for &e in p {
                f[e] += v;
            }
        }
        f
    }

    /// Transport cost `T(f) = sum_path b_path f_path`.
    pub fn transport_cost(&self, network: &FlowNetwork) -> Rational {
        self.flows.iter().map(|(p, v)| &network.path_transport_cost(p) * v).sum()
    }

    /// Objective of the flow program, `F(f) - T(f)/p1`.
    pub fn program_value(&self, network: &FlowNetwork) -> Rational {
        self.flows.iter().map(|(p, v)| &network.base_profit(p) * v).sum()
    }

    pub fn keyed(&self, network: &FlowNetwork) -> BTreeMap<String, Rational> {
        self.flows.iter().map(|(p, v)| (network.path_key(p), v.clone())).collect()
    }
}

/// Multipliers of the two edge caps; `potentials` are the node prices of
/// the conservation rows (zero at s and t) and are empty for solutions
/// built directly in path form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualSolution {
    /// Multiplier of `f_e <= d_e/p2`.
    pub rho: Vec<Rational>,
    /// Multiplier of `f_e <= c_e`.
    pub mu: Vec<Rational>,
    pub potentials: Vec<Rational>,
}

impl DualSolution {
    /// Dual objective `sum (d/p2) rho + c mu`.
    pub fn value(&self, network: &FlowNetwork) -> Rational {
        (0..network.edge_count())
            .map(|e| &network.scaled_interdiction_cost(e) * &self.rho[e] + &network.edge(e).capacity * &self.mu[e])
            .sum()
    }

    /// `sum_{e in path} (rho_e + mu_e)`.
    pub fn path_price(&self, path: &[usize]) -> Rational {
        path.iter().map(|&e| &self.rho[e] + &self.mu[e]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MccpSolution {
    pub flow: EdgeFlow,
    pub dual: DualSolution,
    pub objective: Rational,
}

fn lp_failure(outcome: &LpOutcome) -> CirculationError {
    CirculationError::Lp(format!("{outcome:?}"))
}

/// Solves the edge form of the flow program with the exact simplex.
pub fn solve_mccp(network: &FlowNetwork) -> Result<MccpSolution, CirculationError> {
    let m = network.edge_count();
    let (s, t) = (network.source(), network.sink());
    let mut lp = LinearProgram::new(m);
    for e in 0..m {
        let into_t = if network.edge(e).to == t { Rational::one() } else { Rational::zero() };
        lp.set_objective(e, into_t - network.scaled_transport_cost(e));
    }
    let interior: Vec<usize> = (0..network.nodes().len()).filter(|&v| v != s && v != t).collect();
    let mut node_row = vec![None; network.nodes().len()];
    for &v in &interior {
        let mut coeffs: Vec<(usize, Rational)> = network.in_edges(v).iter().map(|&e| (e, Rational::one())).collect();
        coeffs.extend(network.out_edges(v).iter().map(|&e| (e, -Rational::one())));
        node_row[v] = Some(lp.add_row(coeffs, Relation::Eq, Rational::zero()));
    }
    let rho_rows: Vec<usize> = (0..m)
        .map(|e| lp.add_row(vec![(e, Rational::one())], Relation::Le, network.scaled_interdiction_cost(e)))
        .collect();
    let mu_rows: Vec<usize> = (0..m)
        .map(|e| lp.add_row(vec![(e, Rational::one())], Relation::Le, network.edge(e).capacity.clone()))
        .collect();
    let outcome = lp.solve();
    let LpOutcome::Optimal(LpSolution { x, duals, objective }) = outcome else {
        return Err(lp_failure(&outcome));
    };
    let potentials = node_row.iter().map(|r| r.map(|i| duals[i].clone()).unwrap_or_default()).collect();
    let dual = DualSolution {
        rho: rho_rows.iter().map(|&i| duals[i].clone()).collect(),
        mu: mu_rows.iter().map(|&i| duals[i].clone()).collect(),
        potentials,
    };
    Ok(MccpSolution { flow: x, dual, objective })
}

/// Splits a conserving edge flow into path flows by repeatedly following
/// the first positive out-edge from s and removing the bottleneck.
pub fn decompose_flow(flow: &[Rational], network: &FlowNetwork) -> Result<PathFlow, CirculationError> {
    let (s, t) = (network.source(), network.sink());
    for (e, f) in flow.iter().enumerate() {
        if f.is_negative() {
            return Err(CirculationError::NegativeFlow(network.edge_label(e)));
        }
    }
    for v in 0..network.nodes().len() {
        if v == s || v == t {
            continue;
        }
        let inflow: Rational = network.in_edges(v).iter().map(|&e| &flow[e]).sum();
        let outflow: Rational = network.out_edges(v).iter().map(|&e| &flow[e]).sum();
        if inflow != outflow {
            return Err(CirculationError::NonConserving(network.node(v).to_string()));
        }
    }
    let mut rest = flow.to_vec();
    let mut out = PathFlow::new();
    // Each pass zeroes at least one edge; acyclicity guarantees every walk
    // along positive edges from s reaches t.
    while let Some(&first) = network.out_edges(s).iter().find(|&&e| rest[e].is_positive()) {
        let mut path = vec![first];
        let mut v = network.edge(first).to;
        while v != t {
            let e = *network
                .out_edges(v)
                .iter()
                .find(|&&e| rest[e].is_positive())
                .ok_or_else(|| CirculationError::NonConserving(network.node(v).to_string()))?;
            path.push(e);
            v = network.edge(e).to;
        }
        let bottleneck = path.iter().map(|&e| rest[e].clone()).min().expect("nonempty path");
        for &e in &path {
            rest[e] -= &bottleneck;
        }
        out.add(path, bottleneck);
    }
    Ok(out)
}

/// Checks complementary slackness between an edge flow and a dual:
/// a positive multiplier forces its cap to bind, and flow on a path is only
/// allowed where the path's dual price equals its base profit.
pub fn complementary_slackness_violations(network: &FlowNetwork, flow: &PathFlow, dual: &DualSolution) -> Vec<String> {
    let mut out = Vec::new();
    let edge_flow = flow.edge_flow(network);
    for e in 0..network.edge_count() {
        if dual.rho[e].is_positive() && edge_flow[e] != network.scaled_interdiction_cost(e) {
            out.push(format!("rho{} > 0 but its cap is slack", network.edge_label(e)));
        }
        if dual.mu[e].is_positive() && edge_flow[e] != network.edge(e).capacity {
            out.push(format!("mu{} > 0 but its cap is slack", network.edge_label(e)));
        }
    }
    for (p, v) in flow.iter() {
        if v.is_positive() && dual.path_price(p) != network.base_profit(p) {
            out.push(format!("path {} carries flow but is not priced at its profit", network.path_key(p)));
        }
    }
    out
}

/// Optimal pair in which every inequality is strict on at least one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrictPair {
    pub paths: Vec<Path>,
    pub flow: PathFlow,
    pub dual: DualSolution,
    pub objective: Rational,
}

/// Builds a strictly complementary optimal pair of the path-form program.
///
/// With the optimum fixed, each primal variable and each primal slack is
/// maximized over the optimal primal face, and each dual variable and dual
/// slack over the optimal dual face; the average of the optimal points
/// found lies in the relative interior of both faces.
pub fn strictly_complementary_pair(network: &FlowNetwork, path_cap: usize) -> Result<StrictPair, CirculationError> {
    let paths = network.enumerate_paths(path_cap)?;
    let base = solve_mccp(network)?;
    let z = base.objective.clone();
    let m = network.edge_count();
    let np = paths.len();
    let profit: Vec<Rational> = paths.iter().map(|p| network.base_profit(p)).collect();
    let mut edge_paths = vec![Vec::new(); m];
    for (i, p) in paths.iter().enumerate() {
        for &e in p {
            edge_paths[e].push(i);
        }
    }

    // Primal face: path flows within both caps with value z.
    let primal_face = |obj: Vec<(usize, Rational)>| {
        let mut lp = LinearProgram::new(np);
        for (j, c) in obj {
            lp.set_objective(j, c);
        }
        for e in 0..m {
            let coeffs: Vec<(usize, Rational)> = edge_paths[e].iter().map(|&i| (i, Rational::one())).collect();
            let cap = network.scaled_interdiction_cost(e).min(network.edge(e).capacity.clone());
            lp.add_row(coeffs, Relation::Le, cap);
        }
        lp.add_row(profit.iter().cloned().enumerate().collect(), Relation::Eq, z.clone());
        lp.solve()
    };
    // Dual face: variables rho_0..m then mu_0..m.
    let dual_face = |obj: Vec<(usize, Rational)>| {
        let mut lp = LinearProgram::new(2 * m);
        for (j, c) in obj {
            lp.set_objective(j, c);
        }
        for (i, p) in paths.iter().enumerate() {
            let coeffs: Vec<(usize, Rational)> =
                p.iter().flat_map(|&e| [(e, Rational::one()), (m + e, Rational::one())]).collect();
            lp.add_row(coeffs, Relation::Ge, profit[i].clone());
        }
        let value: Vec<(usize, Rational)> = (0..m)
            .flat_map(|e| [(e, network.scaled_interdiction_cost(e)), (m + e, network.edge(e).capacity.clone())])
            .collect();
        lp.add_row(value, Relation::Eq, z.clone());
        lp.solve()
    };

    let start_flow = decompose_flow(&base.flow, network)?;
    let mut primal_points: Vec<Vec<Rational>> = vec![paths.iter().map(|p| start_flow.get(p)).collect()];
    let edge_total = |x: &[Rational], e: usize| edge_paths[e].iter().map(|&i| &x[i]).sum::<Rational>();

    // Targets: every path variable, then every edge's cap slacks.
    let primal_targets: Vec<Vec<(usize, Rational)>> = (0..np)
        .map(|i| vec![(i, Rational::one())])
        .chain((0..m).map(|e| edge_paths[e].iter().map(|&i| (i, -Rational::one())).collect()))
        .collect();
    let primal_done = |points: &[Vec<Rational>], target: usize| {
        points.iter().any(|x| {
            if target < np {
                x[target].is_positive()
            } else {
                let e = target - np;
                let cap = network.scaled_interdiction_cost(e).min(network.edge(e).capacity.clone());
                edge_total(x, e) < cap
            }
        })
    };
    let pending: Vec<usize> = (0..primal_targets.len()).filter(|&i| !primal_done(&primal_points, i)).collect();
    let solved: Vec<(usize, LpOutcome)> =
        pending.par_iter().map(|&i| (i, primal_face(primal_targets[i].clone()))).collect();
    for (i, outcome) in solved {
        let sol = outcome.optimal().ok_or_else(|| CirculationError::Lp(format!("primal face target {i}")))?;
        if !primal_points.contains(&sol.x) {
            primal_points.push(sol.x);
        }
    }

    let base_dual: Vec<Rational> = base.dual.rho.iter().chain(&base.dual.mu).cloned().collect();
    let mut dual_points = vec![base_dual];
    let dual_targets: Vec<Vec<(usize, Rational)>> = (0..2 * m)
        .map(|j| vec![(j, Rational::one())])
        .chain(paths.iter().map(|p| p.iter().flat_map(|&e| [(e, Rational::one()), (m + e, Rational::one())]).collect()))
        .collect();
    let dual_done = |points: &[Vec<Rational>], target: usize| {
        points.iter().any(|y| {
            if target < 2 * m {
                y[target].is_positive()
            } else {
                let i = target - 2 * m;
                paths[i].iter().map(|&e| &y[e] + &y[m + e]).sum::<Rational>() > profit[i]
            }
        })
    };
    let pending: Vec<usize> = (0..dual_targets.len()).filter(|&i| !dual_done(&dual_points, i)).collect();
    let solved: Vec<(usize, LpOutcome)> =
        pending.par_iter().map(|&i| (i, dual_face(dual_targets[i].clone()))).collect();
    for (i, outcome) in solved {
        let sol = outcome.optimal().ok_or_else(|| CirculationError::Lp(format!("dual face target {i}")))?;
        if !dual_points.contains(&sol.x) {
            dual_points.push(sol.x);
        }
    }

    let average = |points: &[Vec<Rational>], len: usize| {
        let k = Rational::from(points.len());
        (0..len).map(|j| points.iter().map(|p| &p[j]).sum::<Rational>() / &k).collect::<Vec<Rational>>()
    };
    let x = average(&primal_points, np);
    let y = average(&dual_points, 2 * m);
    let mut flow = PathFlow::new();
    for (i, v) in x.into_iter().enumerate() {
        flow.add(paths[i].clone(), v);
    }
    let dual = DualSolution { rho: y[..m].to_vec(), mu: y[m..].to_vec(), potentials: Vec::new() };
    Ok(StrictPair { paths, flow, dual, objective: z })
}

/// Lists every edge or path where neither side of a complementary pair of
/// inequalities is strict. Empty for a strictly complementary pair.
pub fn strict_complementarity_violations(network: &FlowNetwork, pair: &StrictPair) -> Vec<String> {
    let mut out = Vec::new();
    let f = pair.flow.edge_flow(network);
    for e in 0..network.edge_count() {
        let label = network.edge_label(e);
        if !(pair.dual.rho[e].is_positive() || f[e] < network.scaled_interdiction_cost(e)) {
            out.push(format!("rho{label} = 0 while f{label} sits at d/p2"));
        }
        if !(pair.dual.mu[e].is_positive() || f[e] < network.edge(e).capacity) {
            out.push(format!("mu{label} = 0 while f{label} sits at c"));
        }
    }
    for p in &pair.paths {
        if !(pair.flow.get(p).is_positive() || pair.dual.path_price(p) > network.base_profit(p)) {
            out.push(format!("path {} has no flow and no dual slack", network.path_key(p)));
        }
    }
    out
}
