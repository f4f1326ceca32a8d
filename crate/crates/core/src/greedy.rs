//! Combinatorial solver for the minimum-total-weight subset problem with
//! explicit chain values.
//!
//! Each round takes the minimal elements `S` of the order generated by the
//! tight chains on the elements that still carry weight, gives `S` as much
//! weight as the element budgets and loose-chain slacks allow, and then
//! drops chains whose earliest surviving element was not selected.

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::poset::{MaximalChain, DEFAULT_CHAIN_CAP};
use crate::problem::{ChainConstraintProblem, ConditionReport, ProblemError, SubsetDistribution};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("chain conditions violated")]
    ConditionsViolated(ConditionReport),
    #[error("total weight {0} exceeds 1")]
    TotalExceedsOne(Rational),
    #[error("internal invariant broken: {0}")]
    InvariantBroken(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Record one [`IterationState`] per round.
    pub trace: bool,
    /// Re-derive every slack from scratch each round and compare.
    pub check_invariants: bool,
    pub chain_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { trace: false, check_invariants: cfg!(debug_assertions), chain_cap: DEFAULT_CHAIN_CAP }
    }
}

/// Chain bookkeeping for one round, by index into [`QSolution::chains`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainRound {
    pub surviving: Vec<usize>,
    pub tight: Vec<usize>,
    pub loose: Vec<usize>,
    /// Slack of every chain (surviving or not) at the start of the round.
    pub delta: Vec<Rational>,
    /// Remaining chain value, `pi` minus the weight already placed on
    /// subsets meeting the chain.
    pub pi: Vec<Rational>,
}

/// Shortest-path bookkeeping for one round of the affine solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineRound {
    /// Current length of every edge into the sink.
    pub beta_t: Rational,
    /// Shortest source-sink distance.
    pub distance_st: Rational,
    /// Index `q`: shortest source-sink distance through exactly `q`
    /// selected elements.
    pub hop_lengths: Vec<Option<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationState {
    pub k: usize,
    /// Elements with positive remaining budget.
    pub elements: Vec<usize>,
    /// Remaining budget of every element at the start of the round.
    pub rho: Vec<Rational>,
    pub selected: Vec<usize>,
    pub weight: Rational,
    pub chains: Option<ChainRound>,
    pub affine: Option<AffineRound>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSolution {
    pub sigma: SubsetDistribution,
    pub total: Rational,
    pub iterations: usize,
    pub trace: Vec<IterationState>,
    /// Chain list that trace indices refer to; empty for the affine solver.
    pub chains: Vec<MaximalChain>,
}

pub fn solve_q_general(problem: &ChainConstraintProblem, opts: &SolveOptions) -> Result<QSolution, SolveError> {
    let problem = problem.to_explicit(opts.chain_cap)?;
    let report = problem.verify_conditions()?;
    if !report.ok() {
        return Err(SolveError::ConditionsViolated(report));
    }
    let poset = problem.poset();
    let n = poset.len();
    let chains = problem.chains(opts.chain_cap)?;
    let pi0: Vec<Rational> = chains.iter().map(|c| problem.pi(&c.0)).collect::<Result<_, _>>()?;

    let mut rho = problem.rho().to_vec();
    let mut delta: Vec<Rational> =
        chains.iter().zip(&pi0).map(|(c, p)| c.0.iter().map(|&x| &rho[x]).sum::<Rational>() - p).collect();
    let mut pi = pi0;
    let mut alive = vec![true; chains.len()];
    let mut sigma = SubsetDistribution::new();
    let mut trace = Vec::new();
    let mut total = Rational::zero();
    let mut k = 0;

    loop {
        let elements: Vec<usize> = (0..n).filter(|&x| rho[x].is_positive()).collect();
        if elements.is_empty() {
            break;
        }
        k += 1;
        let mut in_x = FixedBitSet::with_capacity(n);
        elements.iter().for_each(|&x| in_x.insert(x));
        let surviving: Vec<usize> = (0..chains.len()).filter(|&c| alive[c]).collect();
        let (tight, loose): (Vec<usize>, Vec<usize>) = surviving.iter().partition(|&&c| delta[c].is_zero());

        let tight_chains: Vec<MaximalChain> = tight.iter().map(|&c| chains[c].clone()).collect();
        let sub = poset.subposet_from_chains(&elements, &tight_chains);
        let selected: Vec<usize> =
            sub.minimal_elements().into_iter().map(|i| poset.index_of(sub.id(i)).expect("subposet element")).collect();
        let mut in_s = FixedBitSet::with_capacity(n);
        selected.iter().for_each(|&x| in_s.insert(x));
        let hits = |c: usize| chains[c].0.iter().filter(|&&x| in_s.contains(x)).count();

        let mut w = selected.iter().map(|&x| rho[x].clone()).min().expect("minimal elements exist");
        for &c in &loose {
            let h = hits(c);
            if h >= 2 {
                let cap = &delta[c] / &Rational::from(h - 1);
                if cap < w {
                    w = cap;
                }
            }
        }
        if opts.check_invariants {
            if !w.is_positive() {
                return Err(SolveError::InvariantBroken(format!("round {k} weight {w} is not positive")));
            }
            if let Some(&c) = tight.iter().find(|&&c| hits(c) > 1) {
                return Err(SolveError::InvariantBroken(format!(
                    "tight chain {} meets the selection twice",
                    poset.chain_key(&chains[c].0)
                )));
            }
        }
        if opts.trace {
            trace.push(IterationState {
                k,
                elements: elements.clone(),
                rho: rho.clone(),
                selected: selected.clone(),
                weight: w.clone(),
                chains: Some(ChainRound {
                    surviving: surviving.clone(),
                    tight: tight.clone(),
                    loose: loose.clone(),
                    delta: delta.clone(),
                    pi: pi.clone(),
                }),
                affine: None,
            });
        }

        sigma.add(&selected, w.clone());
        total += &w;
        for &x in &selected {
            rho[x] -= &w;
        }
        for c in 0..chains.len() {
            let h = hits(c);
            if h >= 2 {
                delta[c] -= &w * &Rational::from(h - 1);
            }
            if h >= 1 {
                pi[c] -= &w;
            }
        }
        for &c in &surviving {
            let first = chains[c].0.iter().copied().find(|&x| in_x.contains(x));
            alive[c] = first.is_some_and(|x| in_s.contains(x));
        }

        if opts.check_invariants {
            for c in 0..chains.len() {
                let recomputed = chains[c].0.iter().map(|&x| &rho[x]).sum::<Rational>() - &pi[c];
                if recomputed != delta[c] {
                    return Err(SolveError::InvariantBroken(format!(
                        "slack of {} drifted: {} vs {}",
                        poset.chain_key(&chains[c].0),
                        delta[c],
                        recomputed
                    )));
                }
                if alive[c] && delta[c].is_negative() {
                    return Err(SolveError::InvariantBroken(format!(
                        "surviving chain {} has negative slack",
                        poset.chain_key(&chains[c].0)
                    )));
                }
            }
        }
    }

    Ok(QSolution { sigma, total, iterations: k, trace, chains })
}

/// Adds the missing mass `1 - total` on the empty subset.
pub fn lift_to_distribution(sigma: &SubsetDistribution, total: &Rational) -> Result<SubsetDistribution, SolveError> {
    if *total > Rational::one() {
        return Err(SolveError::TotalExceedsOne(total.clone()));
    }
    let mut lifted = sigma.clone();
    lifted.add(&[], Rational::one() - total);
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::fixtures::*;

    fn traced() -> SolveOptions {
        SolveOptions { trace: true, check_invariants: true, ..SolveOptions::default() }
    }

    #[test]
    fn bowtie_rounds() {
        let pr = bowtie();
        let sol = solve_q_general(&pr, &traced()).unwrap();
        let p = pr.poset();
        let rounds: Vec<(Vec<usize>, Rational)> =
            sol.trace.iter().map(|s| (s.selected.clone(), s.weight.clone())).collect();
        let expected = vec![
            (chain_of(p, &[1, 2, 3, 4, 5]), q("0.3")),
            (chain_of(p, &[1, 5]), q("0.1")),
            (chain_of(p, &[3, 5]), q("0.1")),
            (chain_of(p, &[3]), q("0.1")),
            (chain_of(p, &[4, 5]), q("0.2")),
        ];
        assert_eq!(rounds, expected);
        assert_eq!(sol.total, q("4/5"));
        assert_eq!(sol.iterations, 5);
        let lifted = lift_to_distribution(&sol.sigma, &sol.total).unwrap();
        assert_eq!(lifted.weight(&[]), q("1/5"));
        assert_eq!(lifted.total(), q("1"));
    }

    #[test]
    fn zero_budgets_finish_immediately() {
        let p = int_poset(2, &[(1, 2)]);
        let pr = ChainConstraintProblem::explicit(p, vec![q("0"), q("0")], vec![(vec![0, 1], q("-0.5"))], 10).unwrap();
        let sol = solve_q_general(&pr, &traced()).unwrap();
        assert!(sol.sigma.is_empty());
        assert_eq!(sol.total, q("0"));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn single_element() {
        let p = int_poset(1, &[]);
        let pr = ChainConstraintProblem::explicit(p, vec![q("0.5")], vec![(vec![0], q("0.3"))], 10).unwrap();
        let sol = solve_q_general(&pr, &traced()).unwrap();
        assert_eq!(sol.sigma.weight(&[0]), q("0.5"));
        assert_eq!(sol.total, q("0.5"));
    }

    #[test]
    fn rejects_invalid_conditions() {
        assert!(matches!(
            solve_q_general(&broken_swap(), &SolveOptions::default()),
            Err(SolveError::ConditionsViolated(r)) if !r.conservation_ok
        ));
    }

    #[test]
    fn lift_guards_total() {
        let s = SubsetDistribution::new();
        assert_eq!(lift_to_distribution(&s, &q("1")).unwrap().weight(&[]), q("0"));
        assert_eq!(lift_to_distribution(&s, &q("1.2")), Err(SolveError::TotalExceedsOne(q("6/5"))));
    }

    #[test]
    fn bowtie_affine_input_is_expanded() {
        let a = solve_q_general(&bowtie_affine(), &SolveOptions::default()).unwrap();
        let e = solve_q_general(&bowtie(), &SolveOptions::default()).unwrap();
        assert_eq!(a.sigma, e.sigma);
    }
}
