//! Element values, chain values and chain slacks, plus the two conditions
//! that decide whether a subset distribution with those marginals exists.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::poset::{MaximalChain, Poset, PosetError};
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("expected {expected} {what} values, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("rho[{element}] = {value} is outside [0, 1]")]
    RhoOutOfRange { element: String, value: String },
    #[error("pi[{chain}] = {value} exceeds 1")]
    PiAboveOne { chain: String, value: String },
    #[error("no pi value for maximal chain {0}")]
    MissingChainValue(String),
    #[error("pi given twice for chain {0}")]
    DuplicateChainValue(String),
    #[error("{0} is not a maximal chain")]
    UnknownChain(String),
    #[error("recombination {0} of two maximal chains is missing from the chain list")]
    MissingRecombination(String),
}

/// How chain values `pi` are given.
#[derive(Debug, Clone)]
pub enum ChainValues {
    /// One value per maximal chain, chains in lexicographic order.
    Explicit { chains: Vec<MaximalChain>, pi: Vec<Rational>, index: HashMap<Vec<usize>, usize> },
    /// `pi_C = alpha - sum of beta over C`.
    Affine { alpha: Rational, beta: Vec<Rational> },
}

#[derive(Debug, Clone)]
pub struct ChainConstraintProblem {
    poset: Poset,
    rho: Vec<Rational>,
    values: ChainValues,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `pi_C` exceeds the sum of `rho` over `C`.
    NegativeSlack { chain: Vec<usize>, delta: Rational },
    /// Swapping tails of `first` and `second` at `at` yields `third` and
    /// `fourth`, and the two pi-sums differ.
    Conservation {
        first: Vec<usize>,
        second: Vec<usize>,
        third: Vec<usize>,
        fourth: Vec<usize>,
        at: usize,
        original_sum: Rational,
        recombined_sum: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionReport {
    pub necessary_ok: bool,
    pub conservation_ok: bool,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn ok(&self) -> bool {
        self.necessary_ok && self.conservation_ok
    }
}

fn check_rho(poset: &Poset, rho: &[Rational]) -> Result<(), ProblemError> {
    if rho.len() != poset.len() {
        return Err(ProblemError::LengthMismatch { what: "rho", expected: poset.len(), got: rho.len() });
    }
    for (x, r) in rho.iter().enumerate() {
        if r.is_negative() || *r > Rational::one() {
            return Err(ProblemError::RhoOutOfRange { element: poset.id(x).to_string(), value: r.to_string() });
        }
    }
    Ok(())
}

impl ChainConstraintProblem {
    /// Problem with one value per maximal chain. `pi` must name every
    /// maximal chain exactly once.
    pub fn explicit(
        poset: Poset,
        rho: Vec<Rational>,
        pi: Vec<(Vec<usize>, Rational)>,
        chain_cap: usize,
    ) -> Result<Self, ProblemError> {
        check_rho(&poset, &rho)?;
        let chains = poset.maximal_chains(chain_cap)?;
        let index: HashMap<Vec<usize>, usize> = chains.iter().enumerate().map(|(i, c)| (c.0.clone(), i)).collect();
        let mut values: Vec<Option<Rational>> = vec![None; chains.len()];
        for (chain, value) in pi {
            let key = poset.chain_key(&chain);
            let &i = index.get(&chain).ok_or_else(|| ProblemError::UnknownChain(key.clone()))?;
            if value > Rational::one() {
                return Err(ProblemError::PiAboveOne { chain: key, value: value.to_string() });
            }
            if values[i].replace(value).is_some() {
                return Err(ProblemError::DuplicateChainValue(key));
            }
        }
        let pi = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| ProblemError::MissingChainValue(poset.chain_key(&chains[i].0))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ChainConstraintProblem { poset, rho, values: ChainValues::Explicit { chains, pi, index } })
    }

    /// Problem with `pi_C = alpha - sum_{x in C} beta_x`. The bound
    /// `pi_C <= 1` is checked by the solvers, not here.
    pub fn affine(
        poset: Poset,
        rho: Vec<Rational>,
        alpha: Rational,
        beta: Vec<Rational>,
    ) -> Result<Self, ProblemError> {
        check_rho(&poset, &rho)?;
        if beta.len() != poset.len() {
            return Err(ProblemError::LengthMismatch { what: "beta", expected: poset.len(), got: beta.len() });
        }
        Ok(ChainConstraintProblem { poset, rho, values: ChainValues::Affine { alpha, beta } })
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn rho(&self) -> &[Rational] {
        &self.rho
    }

    pub fn values(&self) -> &ChainValues {
        &self.values
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.values, ChainValues::Affine { .. })
    }

    /// Maximal chains; enumerated on demand in affine mode.
    pub fn chains(&self, cap: usize) -> Result<Vec<MaximalChain>, ProblemError> {
        match &self.values {
            ChainValues::Explicit { chains, .. } => Ok(chains.clone()),
            ChainValues::Affine { .. } => Ok(self.poset.maximal_chains(cap)?),
        }
    }

    pub fn pi(&self, chain: &[usize]) -> Result<Rational, ProblemError> {
        match &self.values {
            ChainValues::Explicit { pi, index, .. } => {
                index.get(chain).map(|&i| pi[i].clone()).ok_or_else(|| ProblemError::UnknownChain(self.describe(chain)))
            }
            ChainValues::Affine { alpha, beta } => {
                if !self.poset.is_maximal_chain(chain) {
                    return Err(ProblemError::UnknownChain(self.describe(chain)));
                }
                Ok(alpha - chain.iter().map(|&x| &beta[x]).sum::<Rational>())
            }
        }
    }

    /// Slack `delta_C = sum_{x in C} rho_x - pi_C`.
    pub fn delta(&self, chain: &[usize]) -> Result<Rational, ProblemError> {
        let pi = self.pi(chain)?;
        Ok(chain.iter().map(|&x| &self.rho[x]).sum::<Rational>() - pi)
    }

    fn describe(&self, chain: &[usize]) -> String {
        if chain.iter().all(|&x| x < self.poset.len()) {
            self.poset.chain_key(chain)
        } else {
            format!("{chain:?}")
        }
    }

    /// The same problem with pi listed per chain.
    pub fn to_explicit(&self, cap: usize) -> Result<ChainConstraintProblem, ProblemError> {
        if !self.is_affine() {
            return Ok(self.clone());
        }
        let chains = self.poset.maximal_chains(cap)?;
        let pi = chains.iter().map(|c| Ok((c.0.clone(), self.pi(&c.0)?))).collect::<Result<Vec<_>, ProblemError>>()?;
        ChainConstraintProblem::explicit(self.poset.clone(), self.rho.clone(), pi, cap)
    }

    /// Checks `delta_C >= 0` for every maximal chain and, for explicit
    /// values, that swapping tails at every shared element preserves the
    /// pi-sum. Affine values satisfy the second condition identically, and
    /// their first condition is decided by a shortest-path pass without
    /// listing chains.
    pub fn verify_conditions(&self) -> Result<ConditionReport, ProblemError> {
        match &self.values {
            ChainValues::Affine { alpha, beta } => {
                let (chain, weight) = self.lightest_chain(|x| &self.rho[x] + &beta[x]);
                let delta = weight - alpha;
                let necessary_ok = !delta.is_negative();
                let violations =
                    if necessary_ok { Vec::new() } else { vec![Violation::NegativeSlack { chain, delta }] };
                Ok(ConditionReport { necessary_ok, conservation_ok: true, violations })
            }
            ChainValues::Explicit { chains, pi, index } => {
                let mut violations = Vec::new();
                for c in chains {
                    let delta = self.delta(&c.0)?;
                    if delta.is_negative() {
                        violations.push(Violation::NegativeSlack { chain: c.0.clone(), delta });
                    }
                }
                let necessary_ok = violations.is_empty();
                let before = violations.len();
                self.scan_conservation(chains, pi, index, &mut violations)?;
                let conservation_ok = violations.len() == before;
                Ok(ConditionReport { necessary_ok, conservation_ok, violations })
            }
        }
    }

    fn scan_conservation(
        &self,
        chains: &[MaximalChain],
        pi: &[Rational],
        index: &HashMap<Vec<usize>, usize>,
        out: &mut Vec<Violation>,
    ) -> Result<(), ProblemError> {
        let n = self.poset.len();
        let members: Vec<FixedBitSet> = chains
            .iter()
            .map(|c| {
                let mut b = FixedBitSet::with_capacity(n);
                c.0.iter().for_each(|&x| b.insert(x));
                b
            })
            .collect();
        let mut seen: BTreeSet<[usize; 4]> = BTreeSet::new();
        for i in 0..chains.len() {
            for j in i + 1..chains.len() {
                let (a, b) = (&chains[i].0, &chains[j].0);
                for (pa, &x) in a.iter().enumerate() {
                    if !members[j].contains(x) {
                        continue;
                    }
                    let pb = b.iter().position(|&y| y == x).expect("shared element");
                    let ab: Vec<usize> = a[..=pa].iter().chain(&b[pb + 1..]).copied().collect();
                    if ab == *a || ab == *b {
                        continue;
                    }
                    let ba: Vec<usize> = b[..=pb].iter().chain(&a[pa + 1..]).copied().collect();
                    let lookup = |c: &Vec<usize>| {
                        index.get(c).copied().ok_or_else(|| ProblemError::MissingRecombination(self.poset.chain_key(c)))
                    };
                    let (k, l) = (lookup(&ab)?, lookup(&ba)?);
                    let key = {
                        let p = [i.min(j), i.max(j)];
                        let q = [k.min(l), k.max(l)];
                        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                        [lo[0], lo[1], hi[0], hi[1]]
                    };
                    if !seen.insert(key) {
                        continue;
                    }
                    let original_sum = &pi[i] + &pi[j];
                    let recombined_sum = &pi[k] + &pi[l];
                    if original_sum != recombined_sum {
                        out.push(Violation::Conservation {
                            first: a.clone(),
                            second: b.clone(),
                            third: ab,
                            fourth: ba,
                            at: x,
                            original_sum,
                            recombined_sum,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Maximal chain minimizing the sum of `weight`, with that sum.
    fn lightest_chain<F: Fn(usize) -> Rational>(&self, weight: F) -> (Vec<usize>, Rational) {
        let p = &self.poset;
        let mut best: Vec<Option<(Rational, Option<usize>)>> = vec![None; p.len()];
        for &x in p.topological_order() {
            let below = p
                .lower_covers(x)
                .iter()
                .map(|&y| (best[y].as_ref().expect("topological order").0.clone(), Some(y)))
                .min_by(|a, b| a.0.cmp(&b.0));
            let (base, prev) = below.unwrap_or((Rational::zero(), None));
            best[x] = Some((base + weight(x), prev));
        }
        let end = p
            .maximal_elements()
            .into_iter()
            .min_by(|&a, &b| best[a].as_ref().unwrap().0.cmp(&best[b].as_ref().unwrap().0))
            .expect("nonempty poset");
        let total = best[end].as_ref().unwrap().0.clone();
        let mut chain = vec![end];
        while let Some(prev) = best[*chain.last().unwrap()].as_ref().unwrap().1 {
            chain.push(prev);
        }
        chain.reverse();
        (chain, total)
    }

    /// Problems with `sigma` as a minimum-weight solution: element marginals
    /// must equal `rho` and every chain's excess hits must fit its slack.
    pub fn audit_q_solution(&self, sigma: &SubsetDistribution, cap: usize) -> Result<Vec<String>, ProblemError> {
        let mut out = Vec::new();
        if sigma.iter().any(|(s, _)| s.is_empty()) {
            out.push("weight on the empty subset".to_string());
        }
        self.audit_common(sigma, &mut out);
        for c in self.chains(cap)? {
            let excess = sigma.excess(&c.0);
            let delta = self.delta(&c.0)?;
            if excess > delta {
                out.push(format!("chain {} has excess {excess} above its slack {delta}", self.poset.chain_key(&c.0)));
            }
        }
        Ok(out)
    }

    /// Problems with `dist` as a probability distribution over subsets with
    /// marginals `rho` that meets every chain with probability at least `pi`.
    pub fn audit_distribution(&self, dist: &SubsetDistribution, cap: usize) -> Result<Vec<String>, ProblemError> {
        let mut out = Vec::new();
        let total = dist.total();
        if total != Rational::one() {
            out.push(format!("weights sum to {total}, not 1"));
        }
        self.audit_common(dist, &mut out);
        for c in self.chains(cap)? {
            let cover = dist.coverage(&c.0);
            let pi = self.pi(&c.0)?;
            if cover < pi {
                out.push(format!("chain {} is met with probability {cover} below {pi}", self.poset.chain_key(&c.0)));
            }
        }
        Ok(out)
    }

    fn audit_common(&self, sigma: &SubsetDistribution, out: &mut Vec<String>) {
        for (s, w) in sigma.iter() {
            if s.iter().any(|&x| x >= self.poset.len()) {
                out.push("subset names an unknown element".to_string());
                return;
            }
            if w.is_negative() {
                out.push(format!("negative weight {w} on subset {}", self.poset.chain_key(s)));
            }
        }
        for x in 0..self.poset.len() {
            let m = sigma.marginal(x);
            if m != self.rho[x] {
                out.push(format!("element {} has marginal {m}, expected {}", self.poset.id(x), self.rho[x]));
            }
        }
    }

    /// Largest `pi_C` over all maximal chains. In affine mode this is a
    /// shortest-path computation on `beta`.
    pub fn max_pi(&self) -> (Vec<usize>, Rational) {
        match &self.values {
            ChainValues::Explicit { chains, pi, .. } => {
                let (i, v) = pi.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).unwrap();
                (chains[i].0.clone(), v.clone())
            }
            ChainValues::Affine { alpha, beta } => {
                let (chain, w) = self.lightest_chain(|x| beta[x].clone());
                (chain, alpha - w)
            }
        }
    }
}

/// Nonnegative weights on subsets of elements, keyed by sorted index lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubsetDistribution {
    weights: BTreeMap<Vec<usize>, Rational>,
}

impl SubsetDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `w` to the weight of `subset`. Zero additions leave no entry.
    pub fn add(&mut self, subset: &[usize], w: Rational) {
        if w.is_zero() {
            return;
        }
        let mut key = subset.to_vec();
        key.sort_unstable();
        key.dedup();
        let entry = self.weights.entry(key.clone()).or_insert_with(Rational::zero);
        *entry += w;
        if entry.is_zero() {
            self.weights.remove(&key);
        }
    }

    pub fn weight(&self, subset: &[usize]) -> Rational {
        self.weights.get(subset).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.weights.values().sum()
    }

    /// `sum_{S containing x} w_S`.
    pub fn marginal(&self, x: usize) -> Rational {
        self.weights.iter().filter(|(s, _)| s.binary_search(&x).is_ok()).map(|(_, w)| w).sum()
    }

    /// Weight of subsets meeting `chain`.
    pub fn coverage(&self, chain: &[usize]) -> Rational {
        self.weights.iter().filter(|(s, _)| chain.iter().any(|x| s.binary_search(x).is_ok())).map(|(_, w)| w).sum()
    }

    /// `sum_S w_S * (|S ∩ C| - 1)` over subsets meeting `chain` at least twice.
    pub fn excess(&self, chain: &[usize]) -> Rational {
        self.weights
            .iter()
            .map(|(s, w)| {
                let hits = chain.iter().filter(|x| s.binary_search(x).is_ok()).count();
                if hits >= 2 {
                    w * &Rational::from(hits - 1)
                } else {
                    Rational::zero()
                }
            })
            .sum()
    }

    /// Renders keys with `render`; the empty subset becomes `empty_key`.
    pub fn keyed<F: Fn(&[usize]) -> String>(&self, render: F, empty_key: &str) -> BTreeMap<String, Rational> {
        self.weights
            .iter()
            .map(|(s, w)| (if s.is_empty() { empty_key.to_string() } else { render(s) }, w.clone()))
            .collect()
    }
}
