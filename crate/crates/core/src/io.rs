//! JSON input schemas and output rendering shared by the command line tool
//! and the C interface.
//!
//! Rationals are written as exact `"num/den"` strings (integers as `"n"`);
//! inputs accept those strings, integer literals and decimal literals, all
//! read exactly.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::affine::solve_q_affine;
use crate::error::Error;
use crate::game::{CriticalComponents, EquilibriumProfile, EquilibriumQuantities, NeReport, StrategyProfile};
use crate::greedy::{lift_to_distribution, solve_q_general, IterationState, QSolution, SolveOptions};
use crate::network::{EdgeSpec, FlowNetwork};
use crate::oracle::OracleResult;
use crate::poset::{ElementId, Poset};
use crate::problem::{ChainConstraintProblem, ChainValues, ConditionReport, SubsetDistribution, Violation};
use crate::rational::Rational;

/// Key used for the empty subset unless overridden.
pub const EMPTY_KEY: &str = "∅";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetJson {
    pub elements: Vec<ElementId>,
    #[serde(default)]
    pub relations: Vec<(ElementId, ElementId)>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PiJson {
    Explicit(BTreeMap<String, Rational>),
    Affine {
        alpha: Rational,
        #[serde(default)]
        beta: BTreeMap<String, Rational>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemJson {
    pub poset: PosetJson,
    #[serde(default)]
    pub rho: BTreeMap<String, Rational>,
    pub pi: PiJson,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub from: ElementId,
    pub to: ElementId,
    pub c: Rational,
    pub b: Rational,
    pub d: Rational,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkJson {
    /// Defaults to the endpoints of the edges.
    #[serde(default)]
    pub nodes: Option<Vec<ElementId>>,
    pub s: ElementId,
    pub t: ElementId,
    pub edges: Vec<EdgeJson>,
    pub p1: Rational,
    pub p2: Rational,
}

/// Strategy profile as written by `game-solve`; other fields are ignored.
#[derive(Debug, Deserialize)]
pub struct ProfileJson {
    #[serde(default)]
    pub flow: BTreeMap<String, Rational>,
    pub interdiction: BTreeMap<String, Rational>,
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))
}

/// Per-element map keyed by id strings; absent elements get zero.
fn element_values(poset: &Poset, map: &BTreeMap<String, Rational>, what: &str) -> Result<Vec<Rational>, Error> {
    let mut out = vec![Rational::zero(); poset.len()];
    for (k, v) in map {
        let x = poset
            .index_of(&ElementId::parse(k))
            .ok_or_else(|| Error::Input(format!("{what} names unknown element {k}")))?;
        out[x] = v.clone();
    }
    Ok(out)
}

pub fn parse_poset(json: PosetJson) -> Result<Poset, Error> {
    Ok(Poset::build(json.elements, json.relations)?)
}

/// Reads a problem. Missing `rho` and `beta` entries default to zero.
pub fn parse_problem(text: &str, chain_cap: usize) -> Result<ChainConstraintProblem, Error> {
    let json: ProblemJson = from_json(text)?;
    let poset = parse_poset(json.poset)?;
    let rho = element_values(&poset, &json.rho, "rho")?;
    match json.pi {
        PiJson::Explicit(map) => {
            let pi = map
                .into_iter()
                .map(|(k, v)| {
                    let chain = poset.parse_key(&k).ok_or_else(|| Error::Input(format!("unknown chain key {k}")))?;
                    Ok((chain, v))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(ChainConstraintProblem::explicit(poset, rho, pi, chain_cap)?)
        }
        PiJson::Affine { alpha, beta } => {
            let beta = element_values(&poset, &beta, "beta")?;
            Ok(ChainConstraintProblem::affine(poset, rho, alpha, beta)?)
        }
    }
}

pub fn parse_network(text: &str) -> Result<FlowNetwork, Error> {
    let json: NetworkJson = from_json(text)?;
    let nodes = match json.nodes {
        Some(n) => n,
        None => {
            let mut n: Vec<ElementId> = json.edges.iter().flat_map(|e| [e.from.clone(), e.to.clone()]).collect();
            n.sort();
            n.dedup();
            n
        }
    };
    let edges = json
        .edges
        .into_iter()
        .map(|e| EdgeSpec { from: e.from, to: e.to, capacity: e.c, transport_cost: e.b, interdiction_cost: e.d })
        .collect();
    Ok(FlowNetwork::new(nodes, json.s, json.t, edges, json.p1, json.p2)?)
}

fn is_empty_key(k: &str, empty_key: &str) -> bool {
    k.is_empty() || k == EMPTY_KEY || k == empty_key
}

pub fn parse_profile(text: &str, network: &FlowNetwork, empty_key: &str) -> Result<StrategyProfile, Error> {
    let json: ProfileJson = from_json(text)?;
    let mut routing = crate::circulation::PathFlow::new();
    for (k, v) in json.flow {
        routing.add(network.parse_path_key(&k)?, v);
    }
    let mut interdiction = SubsetDistribution::new();
    for (k, v) in json.interdiction {
        let set = if is_empty_key(&k, empty_key) {
            Vec::new()
        } else {
            network.parse_edge_set_key(&k).ok_or_else(|| Error::Input(format!("unknown edge set {k}")))?
        };
        interdiction.add(&set, v);
    }
    Ok(StrategyProfile { routing, interdiction })
}

/// Reads the `sigma` map of a `poset-solve` output.
pub fn parse_solution(
    text: &str,
    problem: &ChainConstraintProblem,
    empty_key: &str,
) -> Result<SubsetDistribution, Error> {
    #[derive(Deserialize)]
    struct SolutionJson {
        sigma: BTreeMap<String, Rational>,
    }
    let json: SolutionJson = from_json(text)?;
    let mut sigma = SubsetDistribution::new();
    for (k, v) in json.sigma {
        let set = if is_empty_key(&k, empty_key) {
            Vec::new()
        } else {
            problem.poset().parse_key(&k).ok_or_else(|| Error::Input(format!("unknown subset {k}")))?
        };
        sigma.add(&set, v);
    }
    Ok(sigma)
}

/// Runs the affine solver for affine values and the general solver
/// otherwise. `require_affine` turns explicit values into an error.
pub fn solve_problem(
    problem: &ChainConstraintProblem,
    opts: &SolveOptions,
    require_affine: bool,
) -> Result<QSolution, Error> {
    match problem.values() {
        ChainValues::Affine { alpha, beta } => Ok(solve_q_affine(problem.poset(), problem.rho(), alpha, beta, opts)?),
        ChainValues::Explicit { .. } if require_affine => {
            Err(Error::Input("the affine solver needs affine chain values".into()))
        }
        ChainValues::Explicit { .. } => Ok(solve_q_general(problem, opts)?),
    }
}

/// How numbers and empty subsets are written.
#[derive(Debug, Clone)]
pub struct Render {
    /// `None` writes exact fractions; `Some(d)` writes decimals with at most
    /// `d` fractional digits.
    pub decimals: Option<usize>,
    pub empty_key: String,
}

impl Default for Render {
    fn default() -> Self {
        Render { decimals: None, empty_key: EMPTY_KEY.to_string() }
    }
}

impl Render {
    pub fn num(&self, r: &Rational) -> Value {
        match self.decimals {
            None => Value::String(r.to_string()),
            Some(d) => Value::String(r.to_decimal_string(d)),
        }
    }

    fn opt(&self, r: &Option<Rational>) -> Value {
        r.as_ref().map_or(Value::Null, |r| self.num(r))
    }

    fn map<K: AsRef<str>>(&self, entries: impl IntoIterator<Item = (K, Rational)>) -> Value {
        Value::Object(entries.into_iter().map(|(k, v)| (k.as_ref().to_string(), self.num(&v))).collect())
    }

    fn subsets(&self, dist: &SubsetDistribution, key: impl Fn(&[usize]) -> String) -> Value {
        self.map(dist.keyed(key, &self.empty_key))
    }
}

fn ids(poset: &Poset, xs: &[usize]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::String(poset.id(x).to_string())).collect())
}

fn trace_json(problem: &ChainConstraintProblem, sol: &QSolution, r: &Render, step: &IterationState) -> Value {
    let p = problem.poset();
    let mut o = Map::new();
    o.insert("k".into(), json!(step.k));
    o.insert("elements".into(), ids(p, &step.elements));
    o.insert("rho".into(), r.map(step.elements.iter().map(|&x| (p.id(x).to_string(), step.rho[x].clone()))));
    o.insert("selected".into(), ids(p, &step.selected));
    o.insert("weight".into(), r.num(&step.weight));
    if let Some(c) = &step.chains {
        let key = |i: usize| p.chain_key(&sol.chains[i].0);
        o.insert("tight".into(), Value::Array(c.tight.iter().map(|&i| Value::String(key(i))).collect()));
        o.insert("loose".into(), Value::Array(c.loose.iter().map(|&i| Value::String(key(i))).collect()));
        o.insert("delta".into(), r.map(c.surviving.iter().map(|&i| (key(i), c.delta[i].clone()))));
        o.insert("pi".into(), r.map(c.surviving.iter().map(|&i| (key(i), c.pi[i].clone()))));
    }
    if let Some(a) = &step.affine {
        o.insert("beta_t".into(), r.num(&a.beta_t));
        o.insert("distance_st".into(), r.num(&a.distance_st));
        let hops: Map<String, Value> =
            a.hop_lengths.iter().enumerate().skip(1).map(|(q, v)| (q.to_string(), r.opt(v))).collect();
        o.insert("hop_lengths".into(), Value::Object(hops));
    }
    Value::Object(o)
}

pub fn solution_json(problem: &ChainConstraintProblem, sol: &QSolution, r: &Render) -> Result<Value, Error> {
    let p = problem.poset();
    let key = |s: &[usize]| p.chain_key(s);
    let mut o = Map::new();
    o.insert("solver".into(), json!(if problem.is_affine() { "affine" } else { "general" }));
    o.insert("sigma".into(), r.subsets(&sol.sigma, key));
    o.insert("total".into(), r.num(&sol.total));
    o.insert("iterations".into(), json!(sol.iterations));
    let lifted = lift_to_distribution(&sol.sigma, &sol.total)?;
    o.insert("distribution".into(), r.subsets(&lifted, key));
    if !sol.trace.is_empty() {
        o.insert("trace".into(), Value::Array(sol.trace.iter().map(|s| trace_json(problem, sol, r, s)).collect()));
    }
    Ok(Value::Object(o))
}

pub fn oracle_json(oracle: &OracleResult, total: &Rational, r: &Render) -> Value {
    json!({
        "optimum": r.num(&oracle.optimum),
        "agrees": oracle.optimum == *total,
        "method": oracle.method,
    })
}

pub fn report_json(problem: &ChainConstraintProblem, report: &ConditionReport, r: &Render) -> Value {
    let p = problem.poset();
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| match v {
            Violation::NegativeSlack { chain, delta } => json!({
                "kind": "negative_slack",
                "chain": p.chain_key(chain),
                "delta": r.num(delta),
            }),
            Violation::Conservation { first, second, third, fourth, at, original_sum, recombined_sum } => json!({
                "kind": "conservation",
                "chains": [p.chain_key(first), p.chain_key(second), p.chain_key(third), p.chain_key(fourth)],
                "at": p.id(*at).to_string(),
                "original_sum": r.num(original_sum),
                "recombined_sum": r.num(recombined_sum),
            }),
        })
        .collect();
    json!({
        "necessary_ok": report.necessary_ok,
        "conservation_ok": report.conservation_ok,
        "violations": violations,
    })
}

fn edge_map(network: &FlowNetwork, values: &[Rational], r: &Render) -> Value {
    r.map(values.iter().enumerate().map(|(e, v)| (network.edge_label(e), v.clone())))
}

pub fn profile_json(network: &FlowNetwork, profile: &StrategyProfile, r: &Render) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("flow".into(), r.map(profile.routing.keyed(network)));
    o.insert("interdiction".into(), r.subsets(&profile.interdiction, |s| network.edge_set_key(s)));
    o
}

pub fn equilibrium_json(network: &FlowNetwork, eq: &EquilibriumProfile, r: &Render) -> Value {
    let mut o = profile_json(network, &eq.profile, r);
    o.insert("edge_flow".into(), edge_map(network, &eq.profile.routing.edge_flow(network), r));
    o.insert("rho".into(), edge_map(network, &eq.dual.rho, r));
    o.insert("mu".into(), edge_map(network, &eq.dual.mu, r));
    o.insert("pi_star".into(), r.map(eq.pi_star.iter().map(|(p, v)| (network.path_key(p), v.clone()))));
    o.insert("objective".into(), r.num(&eq.objective));
    o.insert("u1".into(), r.num(&eq.u1));
    o.insert("u2".into(), r.num(&eq.u2));
    if !eq.warnings.is_empty() {
        o.insert("warnings".into(), json!(eq.warnings));
    }
    Value::Object(o)
}

pub fn ne_report_json(network: &FlowNetwork, report: &NeReport, r: &Render) -> Value {
    json!({
        "is_ne": report.is_ne,
        "p1_value": r.num(&report.p1_value),
        "p2_value": r.num(&report.p2_value),
        "p1_best": r.num(&report.p1_best),
        "p2_best": r.num(&report.p2_best),
        "p1_gap": r.num(&report.p1_gap),
        "p2_gap": r.num(&report.p2_gap),
        "p1_best_response": r.map(report.p1_witness.keyed(network)),
        "p2_best_response": if report.p2_witness.is_empty() {
            r.empty_key.clone()
        } else {
            network.edge_set_key(&report.p2_witness)
        },
    })
}

pub fn quantities_json(q: &EquilibriumQuantities, r: &Render) -> Value {
    json!({
        "flow_value": r.num(&q.flow_value),
        "transport_cost": r.num(&q.transport_cost),
        "interdiction_cost": r.num(&q.interdiction_cost),
        "interdicted_flow": r.num(&q.interdicted_flow),
        "effective_flow": r.num(&q.effective_flow),
    })
}

pub fn critical_json(network: &FlowNetwork, crit: &CriticalComponents) -> Value {
    json!({
        "critical_paths": crit.paths.iter().map(|p| network.path_key(p)).collect::<Vec<_>>(),
        "critical_edges": crit.edges.iter().map(|&e| network.edge_label(e)).collect::<Vec<_>>(),
    })
}

pub fn pure_json(network: &FlowNetwork, pure: &Option<StrategyProfile>, r: &Render) -> Value {
    match pure {
        None => json!({ "exists": false }),
        Some(profile) => {
            let mut o = profile_json(network, profile, r);
            o.insert("exists".into(), json!(true));
            Value::Object(o)
        }
    }
}
