//! Brute-force reference solvers. Exponential, and deliberately independent
//! of the combinatorial solvers they are used to check.

use rayon::prelude::*;
use thiserror::Error;

use crate::circulation::PathFlow;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::network::{FlowNetwork, NetworkError, Path};
use crate::problem::{ChainConstraintProblem, ProblemError, SubsetDistribution};
use crate::rational::Rational;

/// Largest poset the subset LP accepts.
pub const MAX_ORACLE_ELEMENTS: usize = 16;
/// Largest network whose edge subsets are enumerated.
pub const MAX_ORACLE_EDGES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{elements} elements exceed the oracle limit of {limit}")]
    TooLarge { elements: usize, limit: usize },
    #[error("{what} exceeds the enumeration limit of {limit}")]
    EnumerationLimitExceeded { what: String, limit: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("the subset program is infeasible")]
    Infeasible,
    #[error("the program is unbounded")]
    Unbounded,
    #[error("oracle witness failed its independent check: {0}")]
    WitnessRejected(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub optimum: Rational,
    pub witness: SubsetDistribution,
    pub method: String,
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&x| mask >> x & 1 == 1).collect()
}

/// Minimum total weight over all nonempty subsets with exact element
/// marginals `rho` and, per maximal chain, excess hits bounded by the
/// chain's slack. Solved as one dense LP with a column per subset.
pub fn brute_force_q(problem: &ChainConstraintProblem, chain_cap: usize) -> Result<OracleResult, OracleError> {
    let n = problem.poset().len();
    if n > MAX_ORACLE_ELEMENTS {
        return Err(OracleError::TooLarge { elements: n, limit: MAX_ORACLE_ELEMENTS });
    }
    let chains = problem.chains(chain_cap)?;
    let slack: Vec<Rational> = chains.iter().map(|c| problem.delta(&c.0)).collect::<Result<_, _>>()?;
    let chain_masks: Vec<u32> = chains.iter().map(|c| c.0.iter().fold(0u32, |m, &x| m | 1 << x)).collect();
    let cols = (1usize << n) - 1;
    let mask_of = |j: usize| (j + 1) as u32;

    let mut lp = LinearProgram::new(cols);
    for j in 0..cols {
        lp.set_objective(j, -Rational::one());
    }
    for x in 0..n {
        let coeffs = (0..cols).filter(|&j| mask_of(j) >> x & 1 == 1).map(|j| (j, Rational::one())).collect();
        lp.add_row(coeffs, Relation::Eq, problem.rho()[x].clone());
    }
    for (cm, d) in chain_masks.iter().zip(&slack) {
        let coeffs: Vec<(usize, Rational)> = (0..cols)
            .filter_map(|j| {
                let hits = (mask_of(j) & cm).count_ones() as usize;
                (hits >= 2).then(|| (j, Rational::from(hits - 1)))
            })
            .collect();
        lp.add_row(coeffs, Relation::Le, d.clone());
    }
    let sol = match lp.solve() {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(OracleError::Infeasible),
        LpOutcome::Unbounded => return Err(OracleError::Unbounded),
    };
    let mut witness = SubsetDistribution::new();
    for (j, v) in sol.x.iter().enumerate() {
        witness.add(&members(mask_of(j), n), v.clone());
    }

    // Independent re-check of the witness.
    for x in 0..n {
        let marginal: Rational = witness.iter().filter(|(s, _)| s.contains(&x)).map(|(_, w)| w).sum();
        if marginal != problem.rho()[x] {
            return Err(OracleError::WitnessRejected(format!("marginal of element {x} is {marginal}")));
        }
    }
    for (c, d) in chains.iter().zip(&slack) {
        let excess: Rational = witness
            .iter()
            .map(|(s, w)| {
                let hits = s.iter().filter(|x| c.0.contains(x)).count();
                if hits >= 2 {
                    w * &Rational::from(hits - 1)
                } else {
                    Rational::zero()
                }
            })
            .sum();
        if excess > *d {
            return Err(OracleError::WitnessRejected(format!("chain {:?} exceeds its slack", c.0)));
        }
    }
    if witness.iter().any(|(_, w)| w.is_negative()) {
        return Err(OracleError::WitnessRejected("negative weight".into()));
    }
    let optimum = -sol.objective;
    if witness.total() != optimum {
        return Err(OracleError::WitnessRejected("total differs from the optimum".into()));
    }
    Ok(OracleResult { optimum, witness, method: format!("dense exact simplex over {cols} subset variables") })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponses {
    /// Smuggler's best expected payoff against the interdiction mix.
    pub p1_best: Rational,
    pub p1_witness: PathFlow,
    /// Interdictor's best payoff against the expected routing.
    pub p2_best: Rational,
    /// Edge indices of a best interdiction set.
    pub p2_witness: Vec<usize>,
}

/// Probability that a path meets an edge set drawn from `interdiction`.
pub fn hit_probability(path: &[usize], interdiction: &SubsetDistribution) -> Rational {
    interdiction.iter().filter(|(s, _)| path.iter().any(|e| s.binary_search(e).is_ok())).map(|(_, w)| w).sum()
}

/// Best responses by exhaustion: an LP over all path flows within edge
/// capacities for the smuggler, and every edge subset for the interdictor.
pub fn brute_force_best_responses(
    network: &FlowNetwork,
    routing: &PathFlow,
    interdiction: &SubsetDistribution,
    path_cap: usize,
    max_edges: usize,
) -> Result<BestResponses, OracleError> {
    let m = network.edge_count();
    let limit = max_edges.min(MAX_ORACLE_EDGES);
    if m > limit {
        return Err(OracleError::EnumerationLimitExceeded { what: format!("{m} edges"), limit });
    }
    let paths: Vec<Path> = network.enumerate_paths(path_cap)?;

    let mut lp = LinearProgram::new(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let survive = Rational::one() - hit_probability(p, interdiction);
        lp.set_objective(i, network.p1() * &survive - network.path_transport_cost(p));
    }
    for e in 0..m {
        let coeffs: Vec<(usize, Rational)> =
            paths.iter().enumerate().filter(|(_, p)| p.contains(&e)).map(|(i, _)| (i, Rational::one())).collect();
        lp.add_row(coeffs, Relation::Le, network.edge(e).capacity.clone());
    }
    let sol = match lp.solve() {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(OracleError::Infeasible),
        LpOutcome::Unbounded => return Err(OracleError::Unbounded),
    };
    let mut p1_witness = PathFlow::new();
    for (i, v) in sol.x.into_iter().enumerate() {
        p1_witness.add(paths[i].clone(), v);
    }

    let support: Vec<(u32, Rational)> =
        routing.iter().map(|(p, v)| (p.iter().fold(0u32, |acc, &e| acc | 1 << e), v.clone())).collect();
    let costs: Vec<&Rational> = network.edges().iter().map(|e| &e.interdiction_cost).collect();
    let value = |set: u32| {
        let hit: Rational = support.iter().filter(|(pm, _)| pm & set != 0).map(|(_, v)| v).sum();
        let cost: Rational = (0..m).filter(|&e| set >> e & 1 == 1).map(|e| costs[e]).sum();
        network.p2() * &hit - cost
    };
    let (p2_best, best_set) = (0..1u32 << m)
        .into_par_iter()
        .map(|set| (value(set), set))
        .reduce(|| (value(0), 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok(BestResponses {
        p1_best: sol.objective,
        p1_witness,
        p2_best,
        p2_witness: (0..m).filter(|&e| best_set >> e & 1 == 1).collect(),
    })
}
