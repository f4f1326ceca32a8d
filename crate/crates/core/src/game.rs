//! The smuggler/interdictor game on a flow network: payoffs, equilibrium
//! construction from an optimal primal-dual pair of the flow program,
//! verification against brute-force best responses, and the edges and paths
//! that some equilibrium uses.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::affine::{solve_q_affine, AffineError};
use crate::circulation::{
    decompose_flow, solve_mccp, strictly_complementary_pair, CirculationError, DualSolution, PathFlow,
};
use crate::greedy::{lift_to_distribution, SolveError, SolveOptions};
use crate::network::{FlowNetwork, NetworkError, Path};
use crate::oracle::{brute_force_best_responses, OracleError, MAX_ORACLE_EDGES};
use crate::poset::{edge_poset_from_network, ElementId};
use crate::problem::SubsetDistribution;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error(transparent)]
    Circulation(#[from] CirculationError),
    #[error(transparent)]
    Affine(#[from] AffineError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("edge index {0} is out of range")]
    UnknownEdge(usize),
    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payoffs {
    pub u1: Rational,
    pub u2: Rational,
}

/// Routing (expected path flow) and interdiction mix over edge sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    pub routing: PathFlow,
    /// Keys are sorted edge indices; weights sum to 1.
    pub interdiction: SubsetDistribution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumProfile {
    pub profile: StrategyProfile,
    pub dual: DualSolution,
    /// Optimal value of the flow program.
    pub objective: Rational,
    /// Interdiction target `1 - b_path/p1 - mu(path)` of every path carrying flow.
    pub pi_star: BTreeMap<Path, Rational>,
    pub u1: Rational,
    pub u2: Rational,
    pub warnings: Vec<String>,
}

impl EquilibriumProfile {
    pub fn routing(&self) -> &PathFlow {
        &self.profile.routing
    }

    pub fn interdiction(&self) -> &SubsetDistribution {
        &self.profile.interdiction
    }
}

/// Interdiction target of any path under a dual solution.
pub fn pi_star(network: &FlowNetwork, dual: &DualSolution, path: &[usize]) -> Rational {
    network.base_profit(path) - path.iter().map(|&e| &dual.mu[e]).sum::<Rational>()
}

fn check_edges(network: &FlowNetwork, set: &[usize]) -> Result<(), GameError> {
    match set.iter().find(|&&e| e >= network.edge_count()) {
        Some(&e) => Err(GameError::UnknownEdge(e)),
        None => Ok(()),
    }
}

/// Payoffs when the smuggler routes `flow` and the interdictor blocks
/// `interdiction`: every path meeting the blocked set delivers nothing.
pub fn payoffs(network: &FlowNetwork, flow: &PathFlow, interdiction: &[usize]) -> Result<Payoffs, GameError> {
    check_edges(network, interdiction)?;
    for (p, _) in flow.iter() {
        check_edges(network, p)?;
    }
    let total = flow.value();
    let effective: Rational =
        flow.iter().filter(|(p, _)| !p.iter().any(|e| interdiction.contains(e))).map(|(_, v)| v).sum();
    let blocked_cost: Rational = interdiction.iter().map(|&e| &network.edge(e).interdiction_cost).sum();
    Ok(Payoffs {
        u1: network.p1() * &effective - flow.transport_cost(network),
        u2: network.p2() * &(total - &effective) - blocked_cost,
    })
}

/// Payoffs averaged over an interdiction mix.
pub fn expected_payoffs(
    network: &FlowNetwork,
    flow: &PathFlow,
    interdiction: &SubsetDistribution,
) -> Result<Payoffs, GameError> {
    let mut u1 = Rational::zero();
    let mut u2 = Rational::zero();
    for (set, w) in interdiction.iter() {
        let p = payoffs(network, flow, set)?;
        u1 += w * &p.u1;
        u2 += w * &p.u2;
    }
    Ok(Payoffs { u1, u2 })
}

/// Builds a mixed equilibrium: the flow program's optimal flow as routing,
/// and an interdiction mix whose edge marginals equal the multipliers of
/// the `d/p2` caps and whose path hit probabilities reach `pi_star`.
pub fn compute_ne(network: &FlowNetwork) -> Result<EquilibriumProfile, GameError> {
    let warnings: Vec<String> = (0..network.edge_count())
        .filter(|&e| network.edge(e).transport_cost.is_zero())
        .map(|e| {
            format!(
                "edge {} has zero transport cost; the profile is an equilibrium but the conditions used to build it are no longer necessary",
                network.edge_label(e)
            )
        })
        .collect();
    let mccp = solve_mccp(network)?;
    let routing = decompose_flow(&mccp.flow, network)?;
    let dual = mccp.dual;

    let poset = edge_poset_from_network(network);
    let edge_of: Vec<usize> = (0..poset.len())
        .map(|i| match poset.id(i) {
            ElementId::Name(label) => network.edge_by_label(label).expect("edge label"),
            ElementId::Int(_) => unreachable!("edge ids are labels"),
        })
        .collect();
    let rho: Vec<Rational> = edge_of.iter().map(|&e| dual.rho[e].clone()).collect();
    let beta: Vec<Rational> = edge_of.iter().map(|&e| network.scaled_transport_cost(e) + &dual.mu[e]).collect();
    let opts = SolveOptions { trace: false, ..SolveOptions::default() };
    let sol = solve_q_affine(&poset, &rho, &Rational::one(), &beta, &opts)?;
    let lifted = lift_to_distribution(&sol.sigma, &sol.total)?;
    let mut interdiction = SubsetDistribution::new();
    for (set, w) in lifted.iter() {
        let edges: Vec<usize> = set.iter().map(|&i| edge_of[i]).collect();
        interdiction.add(&edges, w.clone());
    }

    let pi_star = routing.iter().map(|(p, _)| (p.clone(), pi_star(network, &dual, p))).collect();
    let u1 =
        network.p1() * &(0..network.edge_count()).map(|e| &network.edge(e).capacity * &dual.mu[e]).sum::<Rational>();
    Ok(EquilibriumProfile {
        profile: StrategyProfile { routing, interdiction },
        dual,
        objective: mccp.objective,
        pi_star,
        u1,
        u2: Rational::zero(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeReport {
    pub is_ne: bool,
    pub p1_value: Rational,
    pub p2_value: Rational,
    pub p1_best: Rational,
    pub p2_best: Rational,
    pub p1_gap: Rational,
    pub p2_gap: Rational,
    /// Smuggler's best response.
    pub p1_witness: PathFlow,
    /// Interdictor's best response (edge indices).
    pub p2_witness: Vec<usize>,
}

/// Validates a profile: nonnegative, capacity-feasible routing and a
/// probability distribution over edge sets.
pub fn check_profile(network: &FlowNetwork, profile: &StrategyProfile) -> Result<(), GameError> {
    for (p, v) in profile.routing.iter() {
        if !network.is_path(p) {
            return Err(GameError::InvalidProfile(format!("{p:?} is not an s-t path")));
        }
        if v.is_negative() {
            return Err(GameError::InvalidProfile(format!("negative flow on {}", network.path_key(p))));
        }
    }
    let f = profile.routing.edge_flow(network);
    for e in 0..network.edge_count() {
        if f[e] > network.edge(e).capacity {
            return Err(GameError::InvalidProfile(format!("edge {} exceeds its capacity", network.edge_label(e))));
        }
    }
    for (set, w) in profile.interdiction.iter() {
        check_edges(network, set)?;
        if w.is_negative() {
            return Err(GameError::InvalidProfile("negative interdiction weight".into()));
        }
    }
    let total = profile.interdiction.total();
    if total != Rational::one() {
        return Err(GameError::InvalidProfile(format!("interdiction weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Compares each player's payoff with the best response to the other.
pub fn verify_ne(network: &FlowNetwork, profile: &StrategyProfile, path_cap: usize) -> Result<NeReport, GameError> {
    check_profile(network, profile)?;
    let value = expected_payoffs(network, &profile.routing, &profile.interdiction)?;
    let best =
        brute_force_best_responses(network, &profile.routing, &profile.interdiction, path_cap, MAX_ORACLE_EDGES)?;
    let p1_gap = &best.p1_best - &value.u1;
    let p2_gap = &best.p2_best - &value.u2;
    Ok(NeReport {
        is_ne: p1_gap.is_zero() && p2_gap.is_zero(),
        p1_value: value.u1,
        p2_value: value.u2,
        p1_best: best.p1_best,
        p2_best: best.p2_best,
        p1_gap,
        p2_gap,
        p1_witness: best.p1_witness,
        p2_witness: best.p2_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumQuantities {
    pub flow_value: Rational,
    pub transport_cost: Rational,
    pub interdiction_cost: Rational,
    pub interdicted_flow: Rational,
    pub effective_flow: Rational,
}

pub fn equilibrium_quantities(eq: &EquilibriumProfile, network: &FlowNetwork) -> EquilibriumQuantities {
    let flow_value = eq.profile.routing.value();
    let interdiction_cost: Rational =
        (0..network.edge_count()).map(|e| &network.edge(e).interdiction_cost * &eq.dual.rho[e]).sum();
    let interdicted_flow: Rational =
        (0..network.edge_count()).map(|e| &network.scaled_interdiction_cost(e) * &eq.dual.rho[e]).sum();
    EquilibriumQuantities {
        transport_cost: eq.profile.routing.transport_cost(network),
        effective_flow: &flow_value - &interdicted_flow,
        flow_value,
        interdiction_cost,
        interdicted_flow,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalComponents {
    /// Paths carrying flow in some equilibrium.
    pub paths: Vec<Path>,
    /// Edges interdicted with positive probability in some equilibrium.
    pub edges: Vec<usize>,
}

pub fn critical_components(network: &FlowNetwork, path_cap: usize) -> Result<CriticalComponents, GameError> {
    let pair = strictly_complementary_pair(network, path_cap)?;
    Ok(CriticalComponents {
        paths: pair.paths.iter().filter(|p| pair.flow.get(p).is_positive()).cloned().collect(),
        edges: (0..network.edge_count()).filter(|&e| pair.dual.rho[e].is_positive()).collect(),
    })
}

/// A pure equilibrium (optimal flow, no interdiction) exists exactly when
/// some optimal dual leaves every `d/p2` multiplier at zero.
pub fn pure_ne_check(network: &FlowNetwork, path_cap: usize) -> Result<Option<StrategyProfile>, GameError> {
    let pair = strictly_complementary_pair(network, path_cap)?;
    if pair.dual.rho.iter().any(Rational::is_positive) {
        return Ok(None);
    }
    let mccp = solve_mccp(network)?;
    let mut interdiction = SubsetDistribution::new();
    interdiction.add(&[], Rational::one());
    Ok(Some(StrategyProfile { routing: decompose_flow(&mccp.flow, network)?, interdiction }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use crate::network::DEFAULT_PATH_CAP;
    use crate::oracle::hit_probability;

    fn label_set(net: &FlowNetwork, labels: &[&str]) -> Vec<usize> {
        let mut v: Vec<usize> = labels.iter().map(|l| net.edge_by_label(l).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn two_route_equilibrium() {
        let net = two_route();
        let eq = compute_ne(&net).unwrap();
        let keyed = eq.routing().keyed(&net);
        assert_eq!(keyed["s->1->t"], q("1"));
        assert_eq!(keyed["s->2->1->t"], q("1"));
        let sigma = eq.interdiction();
        assert_eq!(sigma.len(), 3);
        assert_eq!(sigma.weight(&[]), q("1/5"));
        assert_eq!(sigma.weight(&label_set(&net, &["(s,1)"])), q("1/10"));
        assert_eq!(sigma.weight(&label_set(&net, &["(1,t)"])), q("7/10"));
        assert_eq!(eq.u1, q("0"));
        assert_eq!(eq.u2, q("0"));
        let value = expected_payoffs(&net, eq.routing(), sigma).unwrap();
        assert_eq!(value, Payoffs { u1: q("0"), u2: q("0") });
        assert!(eq.warnings.is_empty());
    }

    #[test]
    fn two_route_equilibrium_conditions() {
        let net = two_route();
        let eq = compute_ne(&net).unwrap();
        for e in 0..net.edge_count() {
            assert_eq!(eq.interdiction().marginal(e), eq.dual.rho[e]);
        }
        for p in net.enumerate_paths(DEFAULT_PATH_CAP).unwrap() {
            let hit = hit_probability(&p, eq.interdiction());
            let target = pi_star(&net, &eq.dual, &p);
            assert!(hit >= target);
            if eq.routing().get(&p).is_positive() {
                assert_eq!(hit, target);
            }
        }
    }

    #[test]
    fn two_route_payoffs_without_interdiction() {
        let net = two_route();
        let eq = compute_ne(&net).unwrap();
        let p = payoffs(&net, eq.routing(), &[]).unwrap();
        assert_eq!(p, Payoffs { u1: q("15"), u2: q("0") });
        let all: Vec<usize> = (0..net.edge_count()).collect();
        let p = payoffs(&net, eq.routing(), &all).unwrap();
        assert_eq!(p, Payoffs { u1: q("-5"), u2: q("2") - q("7") });
        let zero = payoffs(&net, &PathFlow::new(), &all).unwrap();
        assert_eq!(zero, Payoffs { u1: q("0"), u2: q("-7") });
        assert_eq!(payoffs(&net, eq.routing(), &[99]), Err(GameError::UnknownEdge(99)));
    }

    #[test]
    fn two_route_verification() {
        let net = two_route();
        let eq = compute_ne(&net).unwrap();
        let report = verify_ne(&net, &eq.profile, DEFAULT_PATH_CAP).unwrap();
        assert!(report.is_ne, "{report:?}");
        assert_eq!(report.p1_best, q("0"));
        assert_eq!(report.p2_best, q("0"));

        // Move 1/10 of the (1,t) mass to the empty set.
        let mut weaker = eq.profile.clone();
        let one_t = label_set(&net, &["(1,t)"]);
        weaker.interdiction.add(&one_t, q("-1/10"));
        weaker.interdiction.add(&[], q("1/10"));
        let report = verify_ne(&net, &weaker, DEFAULT_PATH_CAP).unwrap();
        assert!(report.p1_gap.is_positive());
        assert!(!report.is_ne);
    }

    #[test]
    fn overloaded_edge_invites_interdiction() {
        let net = two_route();
        let mut routing = PathFlow::new();
        routing.add(net.parse_path_key("s->1->t").unwrap(), q("2"));
        let mut none = SubsetDistribution::new();
        none.add(&[], q("1"));
        let report = verify_ne(&net, &StrategyProfile { routing, interdiction: none }, DEFAULT_PATH_CAP).unwrap();
        assert!(report.p2_gap.is_positive());
    }

    #[test]
    fn two_route_quantities() {
        let net = two_route();
        let eq = compute_ne(&net).unwrap();
        let qn = equilibrium_quantities(&eq, &net);
        assert_eq!(qn.flow_value, q("2"));
        assert_eq!(qn.transport_cost, q("5"));
        assert_eq!(qn.interdiction_cost, q("1.5"));
        assert_eq!(qn.interdicted_flow, q("1.5"));
        assert_eq!(qn.effective_flow, q("0.5"));
        assert_eq!(net.p1() * &qn.effective_flow - &qn.transport_cost, eq.u1);
    }

    #[test]
    fn two_route_critical_edges_and_no_pure_equilibrium() {
        let net = two_route();
        let crit = critical_components(&net, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(crit.edges, label_set(&net, &["(s,1)", "(1,t)"]));
        assert_eq!(crit.paths.len(), 2);
        assert!(pure_ne_check(&net, DEFAULT_PATH_CAP).unwrap().is_none());
    }

    #[test]
    fn expensive_interdiction_gives_pure_equilibrium() {
        // d >= p2 c on every edge.
        let net = FlowNetwork::new(
            ["s", "a", "t"].iter().map(|s| ElementId::parse(s)).collect(),
            "s".into(),
            "t".into(),
            vec![spec("s", "a", "1", "1", "5"), spec("a", "t", "2", "1", "5"), spec("s", "t", "1", "1", "9")],
            q("10"),
            q("2"),
        )
        .unwrap();
        let pure = pure_ne_check(&net, DEFAULT_PATH_CAP).unwrap().expect("pure equilibrium");
        assert_eq!(pure.routing.value(), q("2"));
        let eq = compute_ne(&net).unwrap();
        assert_eq!(eq.interdiction().weight(&[]), q("1"));
        assert!(verify_ne(&net, &pure, DEFAULT_PATH_CAP).unwrap().is_ne);
    }

    #[test]
    fn zero_transport_cost_warns() {
        let net = FlowNetwork::new(
            ["s", "t"].iter().map(|s| ElementId::parse(s)).collect(),
            "s".into(),
            "t".into(),
            vec![spec("s", "t", "1", "0", "1")],
            q("1"),
            q("2"),
        )
        .unwrap();
        let eq = compute_ne(&net).unwrap();
        assert_eq!(eq.warnings.len(), 1);
        assert!(verify_ne(&net, &eq.profile, DEFAULT_PATH_CAP).unwrap().is_ne);
    }
}
