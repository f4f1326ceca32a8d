//! Random instance generators shared by the integration tests and the
//! acceptance harness. Everything is driven by a seeded `StdRng` so a failing
//! seed reproduces exactly.
#![allow(dead_code, clippy::needless_range_loop)]

use posetgame::network::EdgeSpec;
use posetgame::poset::DEFAULT_CHAIN_CAP;
use posetgame::{ChainConstraintProblem, ElementId, FlowNetwork, Poset, Rational, SubsetDistribution};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Size in `1..=max_n`, skewed towards the top.
pub fn random_size(rng: &mut StdRng, max_n: usize) -> usize {
    rng.gen_range(1..=max_n).max(rng.gen_range(1..=max_n))
}

/// Random poset on `1..=n` with ids shuffled against the order.
pub fn random_poset(rng: &mut StdRng, n: usize) -> Poset {
    let mut labels: Vec<i64> = (1..=n as i64).collect();
    labels.shuffle(rng);
    let density = rng.gen_range(0.15..0.7);
    let mut relations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                relations.push((ElementId::Int(labels[i]), ElementId::Int(labels[j])));
            }
        }
    }
    Poset::build(labels.iter().map(|&l| ElementId::Int(l)), relations).expect("forward relations are acyclic")
}

/// Element budgets in twentieths, some of them zero.
pub fn random_rho(rng: &mut StdRng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| if rng.gen_bool(0.15) { Rational::zero() } else { frac(rng.gen_range(1..=20), 20) }).collect()
}

/// Minimum of `sum w_x` over maximal chains, by dynamic programming over
/// the cover graph.
pub fn min_chain_sum(poset: &Poset, w: &[Rational]) -> Rational {
    let mut best: Vec<Option<Rational>> = vec![None; poset.len()];
    for &x in poset.topological_order() {
        let below = poset.lower_covers(x).iter().map(|&y| best[y].clone().expect("topological")).min();
        best[x] = Some(below.unwrap_or_else(Rational::zero) + &w[x]);
    }
    poset.maximal_elements().into_iter().map(|x| best[x].clone().unwrap()).min().expect("nonempty")
}

/// Explicit chain values `alpha - sum beta_x - sum gamma_e` over elements and
/// cover edges of each chain. Such values are conserved under tail swaps;
/// `alpha` is set so every slack is nonnegative, often zero, and no value
/// exceeds one.
pub fn random_explicit(rng: &mut StdRng, max_n: usize) -> ChainConstraintProblem {
    let n = random_size(rng, max_n);
    let poset = random_poset(rng, n);
    let rho = random_rho(rng, n);
    let beta: Vec<Rational> = (0..n).map(|_| frac(rng.gen_range(0..=4), 20)).collect();
    let gamma: Vec<((usize, usize), Rational)> =
        poset.cover_edges().into_iter().map(|e| (e, frac(rng.gen_range(0..=4), 20))).collect();
    let chains = poset.maximal_chains(DEFAULT_CHAIN_CAP).unwrap();
    let penalty = |c: &[usize]| -> Rational {
        let elems: Rational = c.iter().map(|&x| &beta[x]).sum();
        let edges: Rational = c
            .windows(2)
            .map(|w| gamma.iter().find(|(e, _)| *e == (w[0], w[1])).map(|(_, g)| g.clone()).expect("cover edge"))
            .sum();
        elems + edges
    };
    let slack_floor =
        chains.iter().map(|c| c.0.iter().map(|&x| &rho[x]).sum::<Rational>() + penalty(&c.0)).min().unwrap();
    let mut alpha = slack_floor - &random_slack(rng);
    let lightest = chains.iter().map(|c| penalty(&c.0)).min().unwrap();
    let top = &alpha - &lightest;
    if top > Rational::one() {
        alpha -= top - Rational::one();
    }
    let pi = chains.iter().map(|c| (c.0.clone(), &alpha - &penalty(&c.0))).collect();
    ChainConstraintProblem::explicit(poset, rho, pi, DEFAULT_CHAIN_CAP).expect("generated values are in range")
}

fn random_slack(rng: &mut StdRng) -> Rational {
    if rng.gen_bool(0.5) {
        Rational::zero()
    } else {
        frac(rng.gen_range(1..=10), 20)
    }
}

/// Affine data `(rho, alpha, beta)` on `poset` meeting the slack condition
/// with `pi <= 1`.
pub fn random_affine_data(rng: &mut StdRng, poset: &Poset) -> (Vec<Rational>, Rational, Vec<Rational>) {
    let n = poset.len();
    let rho = random_rho(rng, n);
    let beta: Vec<Rational> = (0..n).map(|_| frac(rng.gen_range(-2..=6), 20)).collect();
    let both: Vec<Rational> = rho.iter().zip(&beta).map(|(r, b)| r + b).collect();
    let mut alpha = min_chain_sum(poset, &both) - &random_slack(rng);
    let top = &alpha - &min_chain_sum(poset, &beta);
    if top > Rational::one() {
        alpha -= top - Rational::one();
    }
    (rho, alpha, beta)
}

pub fn random_affine(rng: &mut StdRng, max_n: usize) -> ChainConstraintProblem {
    let n = random_size(rng, max_n);
    let poset = random_poset(rng, n);
    let (rho, alpha, beta) = random_affine_data(rng, &poset);
    ChainConstraintProblem::affine(poset, rho, alpha, beta).expect("generated values are in range")
}

/// Layered poset: `layers` levels of `width` elements, each element related
/// to a random subset of the next level.
pub fn layered_poset(rng: &mut StdRng, layers: usize, width: usize, density: f64) -> Poset {
    let id = |l: usize, i: usize| ElementId::Int((l * width + i + 1) as i64);
    let mut relations = Vec::new();
    for l in 0..layers - 1 {
        for i in 0..width {
            for j in 0..width {
                if rng.gen_bool(density) {
                    relations.push((id(l, i), id(l + 1, j)));
                }
            }
        }
    }
    Poset::build((0..layers).flat_map(|l| (0..width).map(move |i| id(l, i))), relations).unwrap()
}

fn node(v: usize, last: usize) -> ElementId {
    match v {
        0 => ElementId::Name("s".into()),
        v if v == last => ElementId::Name("t".into()),
        v => ElementId::Int(v as i64),
    }
}

/// Random acyclic network with at most `max_edges` edges, every node on a
/// source-sink path, and positive parameters.
pub fn random_network(rng: &mut StdRng, max_edges: usize) -> FlowNetwork {
    loop {
        let most = if max_edges > 6 { 5 } else { 3 };
        let inner = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=most) };
        let last = inner + 1;
        let density = rng.gen_range(0.1..0.6);
        // A backbone through some inner nodes, then extra forward edges.
        let mut backbone = vec![0];
        backbone.extend((1..last).filter(|_| rng.gen_bool(0.7)));
        if backbone.len() == 1 && last > 1 {
            backbone.push(rng.gen_range(1..last));
        }
        backbone.push(last);
        let mut edges: Vec<(usize, usize)> = backbone.windows(2).map(|w| (w[0], w[1])).collect();
        for u in 0..=last {
            for v in u + 1..=last {
                if !edges.contains(&(u, v)) && rng.gen_bool(density) {
                    edges.push((u, v));
                }
            }
        }
        edges.sort_unstable();
        let mut from_s = vec![false; last + 1];
        from_s[0] = true;
        for u in 0..=last {
            if from_s[u] {
                for &(a, b) in &edges {
                    if a == u {
                        from_s[b] = true;
                    }
                }
            }
        }
        let mut to_t = vec![false; last + 1];
        to_t[last] = true;
        for u in (0..=last).rev() {
            if edges.iter().any(|&(a, b)| a == u && to_t[b]) {
                to_t[u] = true;
            }
        }
        edges.retain(|&(a, b)| from_s[a] && to_t[b]);
        if edges.is_empty() || edges.len() > max_edges {
            continue;
        }
        let mut used: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        used.sort_unstable();
        used.dedup();
        let specs = edges
            .iter()
            .map(|&(a, b)| EdgeSpec {
                from: node(a, last),
                to: node(b, last),
                capacity: frac(rng.gen_range(1..=8), 2),
                transport_cost: frac(rng.gen_range(1..=8), 4),
                interdiction_cost: frac(rng.gen_range(1..=12), 4),
            })
            .collect();
        let p1 = frac(rng.gen_range(2..=12), 1);
        let p2 = frac(rng.gen_range(1..=4), 1);
        return FlowNetwork::new(
            used.iter().map(|&v| node(v, last)).collect(),
            node(0, last),
            node(last, last),
            specs,
            p1,
            p2,
        )
        .expect("generated network is valid");
    }
}

/// Expected value of the greedy optimum.
pub fn closed_form_optimum(problem: &ChainConstraintProblem) -> Rational {
    let rho_max = problem.rho().iter().cloned().max().unwrap_or_default();
    let chains = problem.chains(DEFAULT_CHAIN_CAP).unwrap();
    let pi_max = chains.iter().map(|c| problem.pi(&c.0).unwrap()).max().unwrap_or_default();
    Rational::zero().max(rho_max).max(pi_max)
}

/// Checks marginals and chain excess of `sigma` by hand, without the
/// library's audit helpers. Returns the first problem found.
pub fn feasibility_problem(problem: &ChainConstraintProblem, sigma: &SubsetDistribution) -> Option<String> {
    let n = problem.poset().len();
    let mut marginal = vec![Rational::zero(); n];
    for (s, w) in sigma.iter() {
        if w.is_negative() {
            return Some(format!("negative weight on {s:?}"));
        }
        for &x in s {
            marginal[x] += w;
        }
    }
    for x in 0..n {
        if marginal[x] != problem.rho()[x] {
            return Some(format!("marginal of {x} is {} not {}", marginal[x], problem.rho()[x]));
        }
    }
    for c in problem.chains(DEFAULT_CHAIN_CAP).unwrap() {
        let mut excess = Rational::zero();
        for (s, w) in sigma.iter() {
            let hits = c.0.iter().filter(|x| s.contains(x)).count();
            if hits >= 2 {
                excess += w * &Rational::from(hits - 1);
            }
        }
        let slack = c.0.iter().map(|&x| &problem.rho()[x]).sum::<Rational>() - problem.pi(&c.0).unwrap();
        if excess > slack {
            return Some(format!("chain {:?} excess {excess} above slack {slack}", c.0));
        }
    }
    None
}

/// Audits a path flow and an edge dual of the flow program by hand: both
/// feasible, equal objectives, complementary slackness on every pair of
/// inequalities, and with `strict` also strictness on one side of each.
pub fn audit_flow_pair(
    net: &FlowNetwork,
    paths: &[posetgame::Path],
    flow: &posetgame::circulation::PathFlow,
    rho: &[Rational],
    mu: &[Rational],
    strict: bool,
) -> Vec<String> {
    let mut out = Vec::new();
    let m = net.edge_count();
    let mut f = vec![Rational::zero(); m];
    let mut primal = Rational::zero();
    for (p, v) in flow.iter() {
        if v.is_negative() {
            out.push(format!("negative flow on {p:?}"));
        }
        let cost: Rational = p.iter().map(|&e| &net.edge(e).transport_cost).sum();
        primal += v * &(Rational::one() - &cost / net.p1());
        for &e in p {
            f[e] += v;
        }
    }
    let mut dual = Rational::zero();
    for e in 0..m {
        let edge = net.edge(e);
        let cap_d = &edge.interdiction_cost / net.p2();
        let cap_c = &edge.capacity;
        if f[e] > cap_d || f[e] > *cap_c {
            out.push(format!("edge {e} over a cap"));
        }
        if rho[e].is_negative() || mu[e].is_negative() {
            out.push(format!("negative multiplier on edge {e}"));
        }
        dual += &rho[e] * &cap_d + &mu[e] * cap_c;
        let (slack_d, slack_c) = (f[e] < cap_d, f[e] < *cap_c);
        if rho[e].is_positive() && slack_d || mu[e].is_positive() && slack_c {
            out.push(format!("edge {e} breaks complementary slackness"));
        }
        if strict && !(rho[e].is_positive() || slack_d) {
            out.push(format!("edge {e}: d/p2 cap tight on both sides"));
        }
        if strict && !(mu[e].is_positive() || slack_c) {
            out.push(format!("edge {e}: c cap tight on both sides"));
        }
    }
    for p in paths {
        let price: Rational = p.iter().map(|&e| &rho[e] + &mu[e]).sum();
        let cost: Rational = p.iter().map(|&e| &net.edge(e).transport_cost).sum();
        let profit = Rational::one() - &cost / net.p1();
        let carried = flow.get(p);
        if price < profit {
            out.push(format!("path {p:?} underpriced"));
        }
        if carried.is_positive() && price > profit {
            out.push(format!("path {p:?} carries flow above its price"));
        }
        if strict && !(carried.is_positive() || price > profit) {
            out.push(format!("path {p:?} tight on both sides"));
        }
    }
    if primal != dual {
        out.push(format!("primal {primal} differs from dual {dual}"));
    }
    out
}
