//! Finite posets stored as their cover graph (Hasse diagram).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::network::FlowNetwork;

/// Default cap on the number of maximal chains materialized at once.
pub const DEFAULT_CHAIN_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("poset has no elements")]
    EmptyPoset,
    #[error("order relations contain a cycle through element {0}")]
    CycleDetected(String),
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("duplicate element {0}")]
    DuplicateElement(String),
    #[error("more than {cap} maximal chains")]
    ChainLimitExceeded { cap: usize },
}

/// Element label. Integers order numerically and sort before names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementId {
    Int(i64),
    Name(String),
}

impl ElementId {
    /// Strings holding a canonical integer (`"12"`, not `"012"`) become `Int`,
    /// so `"1"` in a JSON map key and `1` in an element list agree.
    pub fn parse(s: &str) -> Self {
        match s.parse::<i64>() {
            Ok(n) if n.to_string() == s => ElementId::Int(n),
            _ => ElementId::Name(s.to_string()),
        }
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        ElementId::parse(s)
    }
}

impl From<i64> for ElementId {
    fn from(n: i64) -> Self {
        ElementId::Int(n)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Int(n) => write!(f, "{n}"),
            ElementId::Name(s) => f.write_str(s),
        }
    }
}

impl Serialize for ElementId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ElementId::Int(n) => serializer.serialize_i64(*n),
            ElementId::Name(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for ElementId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::String(s) => Ok(ElementId::parse(&s)),
            serde_json::Value::Number(n) => n
                .to_string()
                .parse::<i64>()
                .map(ElementId::Int)
                .map_err(|_| D::Error::custom(format!("element id {n} is not an integer"))),
            other => Err(D::Error::custom(format!("element id must be a string or integer, got {other}"))),
        }
    }
}

/// A maximal chain, as indices into its poset listed bottom to top.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaximalChain(pub Vec<usize>);

impl MaximalChain {
    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.contains(&x)
    }
}

#[derive(Debug, Clone)]
pub struct Poset {
    /// Sorted; an element's index is its rank in this list.
    ids: Vec<ElementId>,
    lookup: HashMap<ElementId, usize>,
    upper_covers: Vec<Vec<usize>>,
    lower_covers: Vec<Vec<usize>>,
    /// Strict up-sets: `above[x]` holds every `y` with `x < y`.
    above: Vec<FixedBitSet>,
    topo: Vec<usize>,
}

impl Poset {
    /// Builds the poset generated by `relations` (pairs `(x, y)` asserting
    /// `x <= y`). Stored covers are the transitive reduction of the closure.
    pub fn build<I, R>(elements: I, relations: R) -> Result<Poset, PosetError>
    where
        I: IntoIterator<Item = ElementId>,
        R: IntoIterator<Item = (ElementId, ElementId)>,
    {
        let mut ids: Vec<ElementId> = elements.into_iter().collect();
        if ids.is_empty() {
            return Err(PosetError::EmptyPoset);
        }
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(PosetError::DuplicateElement(w[0].to_string()));
        }
        let lookup: HashMap<ElementId, usize> = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let n = ids.len();
        let mut succ = vec![Vec::new(); n];
        for (a, b) in relations {
            let x = *lookup.get(&a).ok_or_else(|| PosetError::UnknownElement(a.to_string()))?;
            let y = *lookup.get(&b).ok_or_else(|| PosetError::UnknownElement(b.to_string()))?;
            if x != y {
                succ[x].push(y);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        Self::from_successors(ids, lookup, succ)
    }

    fn from_successors(
        ids: Vec<ElementId>,
        lookup: HashMap<ElementId, usize>,
        succ: Vec<Vec<usize>>,
    ) -> Result<Poset, PosetError> {
        let n = ids.len();
        let mut indegree = vec![0usize; n];
        for s in &succ {
            for &y in s {
                indegree[y] += 1;
            }
        }
        let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&x| indegree[x] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(x)) = heap.pop() {
            topo.push(x);
            for &y in &succ[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    heap.push(Reverse(y));
                }
            }
        }
        if topo.len() < n {
            let witness = (0..n).find(|&x| indegree[x] > 0).expect("cycle member");
            return Err(PosetError::CycleDetected(ids[witness].to_string()));
        }

        let mut above = vec![FixedBitSet::with_capacity(n); n];
        for &x in topo.iter().rev() {
            let mut set = FixedBitSet::with_capacity(n);
            for &y in &succ[x] {
                set.insert(y);
                set.union_with(&above[y]);
            }
            above[x] = set;
        }

        // y is a cover of x iff no other successor of x lies below y.
        let mut upper_covers = vec![Vec::new(); n];
        let mut lower_covers = vec![Vec::new(); n];
        for x in 0..n {
            for &y in &succ[x] {
                let implied = succ[x].iter().any(|&z| z != y && above[z].contains(y));
                if !implied {
                    upper_covers[x].push(y);
                    lower_covers[y].push(x);
                }
            }
        }
        for l in &mut lower_covers {
            l.sort_unstable();
        }
        Ok(Poset { ids, lookup, upper_covers, lower_covers, above, topo })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ElementId] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &ElementId {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &ElementId) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn upper_covers(&self, x: usize) -> &[usize] {
        &self.upper_covers[x]
    }

    pub fn lower_covers(&self, x: usize) -> &[usize] {
        &self.lower_covers[x]
    }

    pub fn cover_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).flat_map(|x| self.upper_covers[x].iter().map(move |&y| (x, y))).collect()
    }

    pub fn cover_edge_count(&self) -> usize {
        self.upper_covers.iter().map(Vec::len).sum()
    }

    /// Strict order `x < y`.
    pub fn less(&self, x: usize, y: usize) -> bool {
        self.above[x].contains(y)
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.less(x, y) || self.less(y, x)
    }

    pub fn is_cover(&self, x: usize, y: usize) -> bool {
        self.upper_covers[x].binary_search(&y).is_ok()
    }

    /// Topological order of the elements, ties broken by smallest index.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.lower_covers[x].is_empty()).collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.upper_covers[x].is_empty()).collect()
    }

    /// All maximal chains in lexicographic order of their id sequences.
    pub fn maximal_chains(&self, cap: usize) -> Result<Vec<MaximalChain>, PosetError> {
        let mut chains = Vec::new();
        let mut stack = Vec::new();
        for m in self.minimal_elements() {
            stack.push(m);
            self.extend_chains(&mut stack, &mut chains, cap)?;
            stack.pop();
        }
        Ok(chains)
    }

    fn extend_chains(&self, stack: &mut Vec<usize>, out: &mut Vec<MaximalChain>, cap: usize) -> Result<(), PosetError> {
        let top = *stack.last().expect("nonempty chain prefix");
        if self.upper_covers[top].is_empty() {
            if out.len() >= cap {
                return Err(PosetError::ChainLimitExceeded { cap });
            }
            out.push(MaximalChain(stack.clone()));
            return Ok(());
        }
        for &y in &self.upper_covers[top] {
            stack.push(y);
            self.extend_chains(stack, out, cap)?;
            stack.pop();
        }
        Ok(())
    }

    /// Number of maximal chains, saturating at `u128::MAX`.
    pub fn count_maximal_chains(&self) -> u128 {
        let mut count = vec![0u128; self.len()];
        for &x in self.topo.iter().rev() {
            count[x] = if self.upper_covers[x].is_empty() {
                1
            } else {
                self.upper_covers[x].iter().fold(0u128, |acc, &y| acc.saturating_add(count[y]))
            };
        }
        self.minimal_elements().iter().fold(0u128, |acc, &m| acc.saturating_add(count[m]))
    }

    /// Whether `chain` is a maximal chain of this poset.
    pub fn is_maximal_chain(&self, chain: &[usize]) -> bool {
        let (Some(&first), Some(&last)) = (chain.first(), chain.last()) else {
            return false;
        };
        chain.iter().all(|&x| x < self.len())
            && self.lower_covers[first].is_empty()
            && self.upper_covers[last].is_empty()
            && chain.windows(2).all(|w| self.is_cover(w[0], w[1]))
    }

    /// The poset on `restricted` ordered by `chains`: `x < y` iff some chain
    /// contains both with `x` before `y`.
    ///
    /// The caller guarantees that `chains` preserves the decomposition of
    /// maximal chains meeting in `restricted`; under that guarantee the order
    /// below is already transitive and the closure taken by `build` adds
    /// nothing.
    pub fn subposet_from_chains(&self, restricted: &[usize], chains: &[MaximalChain]) -> Poset {
        let mut keep = FixedBitSet::with_capacity(self.len());
        for &x in restricted {
            keep.insert(x);
        }
        let ids: Vec<ElementId> = keep.ones().map(|x| self.ids[x].clone()).collect();
        let lookup: HashMap<ElementId, usize> = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let local = |x: usize| lookup[&self.ids[x]];
        let mut succ = vec![Vec::new(); ids.len()];
        for chain in chains {
            let kept: Vec<usize> = chain.0.iter().copied().filter(|&x| keep.contains(x)).collect();
            for w in kept.windows(2) {
                succ[local(w[0])].push(local(w[1]));
            }
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        Self::from_successors(ids, lookup, succ).expect("chains of an acyclic poset induce an acyclic order")
    }

    /// Dash-joined id sequence, e.g. `1-3-4`.
    pub fn chain_key(&self, chain: &[usize]) -> String {
        join_ids(chain.iter().map(|&x| &self.ids[x]), "-")
    }

    /// Resolves a dash-joined key back to element indices. Ids that
    /// themselves contain dashes are matched greedily against known ids.
    pub fn parse_key(&self, key: &str) -> Option<Vec<usize>> {
        if key.is_empty() {
            return Some(Vec::new());
        }
        let mut names: Vec<(String, usize)> = self.ids.iter().enumerate().map(|(i, id)| (id.to_string(), i)).collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.0.len()));
        fn go(rest: &str, names: &[(String, usize)], acc: &mut Vec<usize>) -> bool {
            for (name, i) in names {
                if let Some(tail) = rest.strip_prefix(name.as_str()) {
                    acc.push(*i);
                    if tail.is_empty() {
                        return true;
                    }
                    if let Some(tail) = tail.strip_prefix('-') {
                        if go(tail, names, acc) {
                            return true;
                        }
                    }
                    acc.pop();
                }
            }
            false
        }
        let mut acc = Vec::new();
        go(key, &names, &mut acc).then_some(acc)
    }
}

pub(crate) fn join_ids<'a>(ids: impl Iterator<Item = &'a ElementId>, sep: &str) -> String {
    ids.map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

/// The poset on the network's edges where `u <= v` iff `u = v` or some s-t
/// path traverses `u` and then `v`. Its maximal chains are exactly the s-t
/// paths. `FlowNetwork` is validated (acyclic, every edge on an s-t path) at
/// construction, so this cannot fail.
pub fn edge_poset_from_network(network: &FlowNetwork) -> Poset {
    let ids: Vec<ElementId> = (0..network.edge_count()).map(|e| ElementId::Name(network.edge_label(e))).collect();
    let mut relations = Vec::new();
    for e in 0..network.edge_count() {
        let head = network.edge(e).to;
        for &f in network.out_edges(head) {
            relations.push((ids[e].clone(), ids[f].clone()));
        }
    }
    Poset::build(ids, relations).expect("edges of a DAG form a poset")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<ElementId> {
        v.iter().map(|&x| ElementId::Int(x)).collect()
    }

    fn rel(v: &[(i64, i64)]) -> Vec<(ElementId, ElementId)> {
        v.iter().map(|&(a, b)| (ElementId::Int(a), ElementId::Int(b))).collect()
    }

    fn keys(p: &Poset, chains: &[MaximalChain]) -> Vec<String> {
        chains.iter().map(|c| p.chain_key(&c.0)).collect()
    }

    fn branching() -> Poset {
        Poset::build(ints(&[1, 2, 3, 4, 5, 6]), rel(&[(1, 3), (2, 3), (3, 4), (3, 5), (5, 6)])).unwrap()
    }

    #[test]
    fn branching_chains_and_minimal_elements() {
        let p = branching();
        let chains = p.maximal_chains(DEFAULT_CHAIN_CAP).unwrap();
        assert_eq!(keys(&p, &chains), vec!["1-3-4", "1-3-5-6", "2-3-4", "2-3-5-6"]);
        let mins: Vec<String> = p.minimal_elements().iter().map(|&x| p.id(x).to_string()).collect();
        assert_eq!(mins, vec!["1", "2"]);
        assert_eq!(p.count_maximal_chains(), 4);
    }

    #[test]
    fn broken_swap_chains() {
        let p =
            Poset::build(ints(&[1, 2, 3, 4, 5, 6]), rel(&[(1, 3), (1, 4), (2, 4), (3, 5), (4, 5), (4, 6)])).unwrap();
        let chains = p.maximal_chains(DEFAULT_CHAIN_CAP).unwrap();
        assert_eq!(keys(&p, &chains), vec!["1-3-5", "1-4-5", "1-4-6", "2-4-5", "2-4-6"]);
    }

    #[test]
    fn closure_then_reduction() {
        // 1<2<3 plus the implied 1<3 and a repeated pair.
        let p = Poset::build(ints(&[1, 2, 3]), rel(&[(1, 2), (2, 3), (1, 3), (1, 2)])).unwrap();
        assert_eq!(p.cover_edges(), vec![(0, 1), (1, 2)]);
        assert!(p.less(0, 2));
        assert_eq!(p.minimal_elements(), vec![0]);
    }

    #[test]
    fn singleton_and_antichain() {
        let p = Poset::build(vec![ElementId::from("x")], vec![]).unwrap();
        assert_eq!(keys(&p, &p.maximal_chains(10).unwrap()), vec!["x"]);
        let a = Poset::build(ints(&[1, 2, 3]), vec![]).unwrap();
        assert_eq!(keys(&a, &a.maximal_chains(10).unwrap()), vec!["1", "2", "3"]);
        assert_eq!(a.minimal_elements(), vec![0, 1, 2]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Poset::build(vec![], vec![]).unwrap_err(), PosetError::EmptyPoset);
        assert!(matches!(Poset::build(ints(&[1, 2]), rel(&[(1, 2), (2, 1)])), Err(PosetError::CycleDetected(_))));
        assert_eq!(Poset::build(ints(&[1]), rel(&[(1, 9)])).unwrap_err(), PosetError::UnknownElement("9".into()));
        assert_eq!(Poset::build(ints(&[1, 1]), vec![]).unwrap_err(), PosetError::DuplicateElement("1".into()));
    }

    #[test]
    fn chain_cap_is_enforced() {
        let p = branching();
        assert_eq!(p.maximal_chains(3).unwrap_err(), PosetError::ChainLimitExceeded { cap: 3 });
        assert_eq!(p.maximal_chains(4).unwrap().len(), 4);
    }

    #[test]
    fn subposet_of_branching() {
        let p = branching();
        let idx = |v: i64| p.index_of(&ElementId::Int(v)).unwrap();
        let chains = vec![
            MaximalChain(vec![idx(1), idx(3), idx(5), idx(6)]),
            MaximalChain(vec![idx(2), idx(3), idx(5), idx(6)]),
        ];
        let restricted: Vec<usize> = [1, 2, 3, 4, 6].iter().map(|&v| idx(v)).collect();
        let sub = p.subposet_from_chains(&restricted, &chains);
        let edges: Vec<(String, String)> =
            sub.cover_edges().into_iter().map(|(a, b)| (sub.id(a).to_string(), sub.id(b).to_string())).collect();
        let expect: Vec<(String, String)> =
            [("1", "3"), ("2", "3"), ("3", "6")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(edges, expect);
        let four = sub.index_of(&ElementId::Int(4)).unwrap();
        assert!(sub.upper_covers(four).is_empty() && sub.lower_covers(four).is_empty());
    }

    #[test]
    fn subposet_with_all_chains_is_isomorphic() {
        let p = branching();
        let chains = p.maximal_chains(100).unwrap();
        let all: Vec<usize> = (0..p.len()).collect();
        let sub = p.subposet_from_chains(&all, &chains);
        assert_eq!(sub.cover_edges(), p.cover_edges());
        let single = p.subposet_from_chains(&[p.index_of(&ElementId::Int(4)).unwrap()], &[]);
        assert_eq!(single.len(), 1);
        assert_eq!(single.cover_edge_count(), 0);
    }

    #[test]
    fn keys_round_trip_with_dashed_ids() {
        let p = Poset::build(
            vec![ElementId::from("a-b"), ElementId::from("a"), ElementId::from("b")],
            vec![(ElementId::from("a"), ElementId::from("a-b"))],
        )
        .unwrap();
        let key = "a-a-b";
        let parsed = p.parse_key(key).unwrap();
        assert_eq!(p.chain_key(&parsed), key);
        assert_eq!(parsed.len(), 2);
        assert!(p.parse_key("zzz").is_none());
    }

    #[test]
    fn integer_strings_normalize() {
        assert_eq!(ElementId::parse("12"), ElementId::Int(12));
        assert_eq!(ElementId::parse("012"), ElementId::Name("012".into()));
        let ids: Vec<ElementId> = serde_json::from_str(r#"[3, "3x", "10"]"#).unwrap();
        assert_eq!(ids, vec![ElementId::Int(3), ElementId::Name("3x".into()), ElementId::Int(10)]);
    }
}
