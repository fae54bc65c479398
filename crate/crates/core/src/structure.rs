//! Finite first-order structures with relations and partial functions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::iso::{ExtensionIter, IsoSearch};

/// An element of a finite universe, `0..universe_size`.
pub type Elem = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("`{name}`: element {element} is outside the universe of size {universe}")]
    OutOfRange { name: String, element: Elem, universe: usize },
    #[error("`{name}`: tuple of length {found}, expected arity {expected}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("function `{name}` maps one argument tuple to two values")]
    NotSingleValued { name: String },
    #[error("symbol name `{0}` is used twice")]
    DuplicateName(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("tuples of different lengths ({left} and {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("max_domain {max_domain} exceeds the universe size {universe}")]
    DomainTooLarge { max_domain: usize, universe: usize },
    #[error("partial map is not a partial automorphism: {0}")]
    NotPartialAutomorphism(PartialIsoViolation),
}

/// Why a partial map fails to be a partial automorphism.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum PartialIsoViolation {
    #[error("element {0} is outside the universe")]
    OutOfRange(Elem),
    #[error("elements {0} and {1} have the same image")]
    NotInjective(Elem, Elem),
    #[error("`{symbol}` holds on {tuple:?} but not on its image")]
    Forward { symbol: String, tuple: Vec<Elem> },
    #[error("`{symbol}` holds on {tuple:?} but not on its preimage")]
    Backward { symbol: String, tuple: Vec<Elem> },
}

/// A named relation given by its set of tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<Elem>>,
}

/// A named partial function given by its graph.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PartialFunction {
    pub name: String,
    pub arity: usize,
    pub graph: BTreeMap<Vec<Elem>, Elem>,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize, tuples: impl IntoIterator<Item = Vec<Elem>>) -> Self {
        Relation { name: name.into(), arity, tuples: tuples.into_iter().collect() }
    }
}

impl PartialFunction {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        graph: impl IntoIterator<Item = (Vec<Elem>, Elem)>,
    ) -> Self {
        PartialFunction { name: name.into(), arity, graph: graph.into_iter().collect() }
    }

    /// Builds a unary partial function from `(argument, value)` pairs.
    pub fn unary(name: impl Into<String>, pairs: impl IntoIterator<Item = (Elem, Elem)>) -> Self {
        Self::new(name, 1, pairs.into_iter().map(|(x, y)| (vec![x], y)))
    }
}

/// Relations and function graphs viewed uniformly as relations ("atoms").
///
/// Atom `i < relations.len()` is relation `i`; the rest are function graphs
/// stored as `args ++ [value]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct AtomIndex {
    pub(crate) tuples: Vec<Vec<Vec<Elem>>>,
    /// For every element, the distinct `(atom, tuple index)` pairs it occurs in.
    pub(crate) incidence: Vec<Vec<(usize, usize)>>,
}

/// A finite structure over the universe `0..universe_size`.
///
/// Constructed through [`FiniteStructure::new`], which validates arities,
/// ranges and single-valuedness, and is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "StructureData", into = "StructureData"))]
pub struct FiniteStructure {
    universe_size: usize,
    relations: Vec<Relation>,
    functions: Vec<PartialFunction>,
    atoms: AtomIndex,
}

/// Plain data form of a [`FiniteStructure`], used for (de)serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StructureData {
    pub universe_size: usize,
    pub relations: Vec<Relation>,
    pub functions: Vec<PartialFunction>,
}

impl TryFrom<StructureData> for FiniteStructure {
    type Error = StructureError;

    fn try_from(data: StructureData) -> Result<Self, Self::Error> {
        FiniteStructure::new(data.universe_size, data.relations, data.functions)
    }
}

impl From<FiniteStructure> for StructureData {
    fn from(s: FiniteStructure) -> Self {
        StructureData { universe_size: s.universe_size, relations: s.relations, functions: s.functions }
    }
}

impl FiniteStructure {
    pub fn new(
        universe_size: usize,
        relations: Vec<Relation>,
        functions: Vec<PartialFunction>,
    ) -> Result<Self, StructureError> {
        let mut names = BTreeSet::new();
        for name in relations.iter().map(|r| &r.name).chain(functions.iter().map(|f| &f.name)) {
            if !names.insert(name.clone()) {
                return Err(StructureError::DuplicateName(name.clone()));
            }
        }
        let check = |name: &str, tuple: &[Elem], arity: usize| -> Result<(), StructureError> {
            if tuple.len() != arity {
                return Err(StructureError::ArityMismatch {
                    name: name.to_string(),
                    expected: arity,
                    found: tuple.len(),
                });
            }
            match tuple.iter().find(|&&e| e >= universe_size) {
                Some(&element) => Err(StructureError::OutOfRange {
                    name: name.to_string(),
                    element,
                    universe: universe_size,
                }),
                None => Ok(()),
            }
        };
        for r in &relations {
            for t in &r.tuples {
                check(&r.name, t, r.arity)?;
            }
        }
        for f in &functions {
            for (args, &value) in &f.graph {
                check(&f.name, args, f.arity)?;
                check(&f.name, &[value], 1)?;
            }
        }

        let mut tuples: Vec<Vec<Vec<Elem>>> = Vec::with_capacity(relations.len() + functions.len());
        for r in &relations {
            tuples.push(r.tuples.iter().cloned().collect());
        }
        for f in &functions {
            tuples.push(
                f.graph
                    .iter()
                    .map(|(args, &v)| {
                        let mut t = args.clone();
                        t.push(v);
                        t
                    })
                    .collect(),
            );
        }
        let mut incidence = vec![Vec::new(); universe_size];
        for (atom, ts) in tuples.iter().enumerate() {
            for (idx, t) in ts.iter().enumerate() {
                let mut seen: Vec<Elem> = Vec::with_capacity(t.len());
                for &e in t {
                    if !seen.contains(&e) {
                        seen.push(e);
                        incidence[e].push((atom, idx));
                    }
                }
            }
        }
        Ok(FiniteStructure { universe_size, relations, functions, atoms: AtomIndex { tuples, incidence } })
    }

    /// A structure with no relations or functions (pure equality).
    pub fn pure_set(universe_size: usize) -> Self {
        Self::new(universe_size, Vec::new(), Vec::new()).expect("empty vocabulary is always valid")
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn functions(&self) -> &[PartialFunction] {
        &self.functions
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    /// True when the structure has any relation or function symbol.
    pub fn has_vocabulary(&self) -> bool {
        !self.relations.is_empty() || !self.functions.is_empty()
    }

    pub(crate) fn atoms(&self) -> &AtomIndex {
        &self.atoms
    }

    pub(crate) fn atom_name(&self, atom: usize) -> &str {
        if atom < self.relations.len() {
            &self.relations[atom].name
        } else {
            &self.functions[atom - self.relations.len()].name
        }
    }

    pub(crate) fn atom_holds(&self, atom: usize, tuple: &[Elem]) -> bool {
        if atom < self.relations.len() {
            self.relations[atom].tuples.contains(tuple)
        } else {
            let f = &self.functions[atom - self.relations.len()];
            match tuple.split_last() {
                Some((value, args)) => f.graph.get(args) == Some(value),
                None => false,
            }
        }
    }

    pub(crate) fn check_elements(&self, t: &[Elem]) -> Result<(), StructureError> {
        match t.iter().find(|&&e| e >= self.universe_size) {
            Some(&element) => Err(StructureError::OutOfRange {
                name: String::from("tuple"),
                element,
                universe: self.universe_size,
            }),
            None => Ok(()),
        }
    }

    fn function_selection(&self, names: Option<&[&str]>) -> Result<Vec<usize>, StructureError> {
        match names {
            None => Ok((0..self.functions.len()).collect()),
            Some(names) => names
                .iter()
                .map(|n| self.function_index(n).ok_or_else(|| StructureError::UnknownFunction((*n).to_string())))
                .collect(),
        }
    }

    /// Closure of `seed` under the selected partial functions (all of them
    /// when `fns` is `None`).
    pub fn closure_under(&self, seed: &[Elem], fns: Option<&[&str]>) -> Result<BTreeSet<Elem>, StructureError> {
        self.check_elements(seed)?;
        let fns = self.function_selection(fns)?;
        Ok(self.closure_with(seed, &fns))
    }

    /// Closure of `seed` under all partial functions.
    pub fn closure(&self, seed: &[Elem]) -> BTreeSet<Elem> {
        let all: Vec<usize> = (0..self.functions.len()).collect();
        self.closure_with(seed, &all)
    }

    pub(crate) fn closure_with(&self, seed: &[Elem], fns: &[usize]) -> BTreeSet<Elem> {
        let mut set: BTreeSet<Elem> = seed.iter().copied().collect();
        loop {
            let mut added = Vec::new();
            for &fi in fns {
                for (args, &v) in &self.functions[fi].graph {
                    if !set.contains(&v) && args.iter().all(|a| set.contains(a)) {
                        added.push(v);
                    }
                }
            }
            if added.is_empty() {
                return set;
            }
            set.extend(added);
        }
    }

    /// True when `set` is closed under every function in `fns`.
    pub(crate) fn is_closed(&self, set: &BTreeSet<Elem>, fns: &[usize]) -> bool {
        fns.iter().all(|&fi| {
            self.functions[fi]
                .graph
                .iter()
                .all(|(args, v)| set.contains(v) || !args.iter().all(|a| set.contains(a)))
        })
    }
}

/// Canonical quantifier-free type of a tuple: the generator-marked
/// isomorphism type of its closure under the partial functions.
///
/// Closure elements are labelled in generation order: generators first (by
/// first occurrence in the tuple), then repeatedly the value of the least
/// `(function, argument labels)` application whose value is still
/// unlabelled. The labelling only depends on the isomorphism type, so two
/// tuples of the same structure get equal `QfType`s iff their closures are
/// isomorphic by a map sending generators to generators position-wise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QfType {
    /// Label of each tuple position (the equality pattern).
    pub pattern: Vec<u32>,
    /// Number of elements in the closure.
    pub closure_size: u32,
    /// Per relation, the sorted label tuples inside the closure.
    pub relations: Vec<Vec<Vec<u32>>>,
    /// Per function, the sorted `(argument labels, value label)` entries.
    pub functions: Vec<Vec<(Vec<u32>, u32)>>,
}

pub fn qf_type(s: &FiniteStructure, t: &[Elem]) -> Result<QfType, StructureError> {
    s.check_elements(t)?;
    Ok(qf_type_unchecked(s, t))
}

pub(crate) fn qf_type_unchecked(s: &FiniteStructure, t: &[Elem]) -> QfType {
    let (labels, order) = canonical_labels(s, t);
    let pattern = t.iter().map(|e| labels[e]).collect();
    let relations = s
        .relations
        .iter()
        .map(|r| {
            let mut v: Vec<Vec<u32>> = r
                .tuples
                .iter()
                .filter_map(|tup| tup.iter().map(|e| labels.get(e).copied()).collect::<Option<Vec<u32>>>())
                .collect();
            v.sort();
            v
        })
        .collect();
    let functions = s
        .functions
        .iter()
        .map(|f| {
            let mut v: Vec<(Vec<u32>, u32)> = f
                .graph
                .iter()
                .filter_map(|(args, val)| {
                    let a = args.iter().map(|e| labels.get(e).copied()).collect::<Option<Vec<u32>>>()?;
                    Some((a, labels[val]))
                })
                .collect();
            v.sort();
            v
        })
        .collect();
    QfType { pattern, closure_size: order.len() as u32, relations, functions }
}

/// Generation-order labelling of the closure of `t`.
fn canonical_labels(s: &FiniteStructure, t: &[Elem]) -> (BTreeMap<Elem, u32>, Vec<Elem>) {
    let mut labels: BTreeMap<Elem, u32> = BTreeMap::new();
    let mut order = Vec::new();
    for &e in t {
        if let alloc::collections::btree_map::Entry::Vacant(slot) = labels.entry(e) {
            slot.insert(order.len() as u32);
            order.push(e);
        }
    }
    loop {
        let mut best: Option<(usize, Vec<u32>, Elem)> = None;
        for (fi, f) in s.functions.iter().enumerate() {
            if let Some((bfi, _, _)) = &best {
                if *bfi < fi {
                    break;
                }
            }
            for (args, &v) in &f.graph {
                if labels.contains_key(&v) {
                    continue;
                }
                let Some(key) = args.iter().map(|e| labels.get(e).copied()).collect::<Option<Vec<u32>>>() else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some((bfi, bkey, _)) => (fi, &key) < (*bfi, bkey),
                };
                if better {
                    best = Some((fi, key, v));
                }
            }
        }
        match best {
            Some((_, _, v)) => {
                labels.insert(v, order.len() as u32);
                order.push(v);
            }
            None => return (labels, order),
        }
    }
}

/// An injective partial map on the universe that preserves every relation
/// and every function graph in both directions on its domain and range.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PartialAutomorphism {
    map: BTreeMap<Elem, Elem>,
}

impl PartialAutomorphism {
    /// Validates `map` against `s`.
    pub fn new(s: &FiniteStructure, map: BTreeMap<Elem, Elem>) -> Result<Self, StructureError> {
        check_partial_automorphism(s, &map).map_err(StructureError::NotPartialAutomorphism)?;
        Ok(PartialAutomorphism { map })
    }

    pub(crate) fn from_validated(map: BTreeMap<Elem, Elem>) -> Self {
        PartialAutomorphism { map }
    }

    pub fn identity(domain: impl IntoIterator<Item = Elem>) -> Self {
        PartialAutomorphism { map: domain.into_iter().map(|e| (e, e)).collect() }
    }

    pub fn as_map(&self) -> &BTreeMap<Elem, Elem> {
        &self.map
    }

    pub fn get(&self, x: Elem) -> Option<Elem> {
        self.map.get(&x).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = Elem> + '_ {
        self.map.keys().copied()
    }

    pub fn range(&self) -> BTreeSet<Elem> {
        self.map.values().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Applies the map to a tuple; `None` if some entry is outside the domain.
    pub fn apply(&self, t: &[Elem]) -> Option<Vec<Elem>> {
        t.iter().map(|e| self.get(*e)).collect()
    }

    /// Re-checks the defining property against `s`.
    pub fn validate(&self, s: &FiniteStructure) -> Result<(), PartialIsoViolation> {
        check_partial_automorphism(s, &self.map)
    }
}

/// Checks that `map` is injective and preserves every relation and function
/// graph in both directions.
pub fn check_partial_automorphism(s: &FiniteStructure, map: &BTreeMap<Elem, Elem>) -> Result<(), PartialIsoViolation> {
    let n = s.universe_size();
    let mut inverse: BTreeMap<Elem, Elem> = BTreeMap::new();
    for (&x, &y) in map {
        if x >= n {
            return Err(PartialIsoViolation::OutOfRange(x));
        }
        if y >= n {
            return Err(PartialIsoViolation::OutOfRange(y));
        }
        if let Some(&other) = inverse.get(&y) {
            return Err(PartialIsoViolation::NotInjective(other, x));
        }
        inverse.insert(y, x);
    }
    for (atom, tuples) in s.atoms().tuples.iter().enumerate() {
        for t in tuples {
            if let Some(image) = t.iter().map(|e| map.get(e).copied()).collect::<Option<Vec<_>>>() {
                if !s.atom_holds(atom, &image) {
                    return Err(PartialIsoViolation::Forward { symbol: s.atom_name(atom).to_string(), tuple: t.clone() });
                }
            }
            if let Some(pre) = t.iter().map(|e| inverse.get(e).copied()).collect::<Option<Vec<_>>>() {
                if !s.atom_holds(atom, &pre) {
                    return Err(PartialIsoViolation::Backward { symbol: s.atom_name(atom).to_string(), tuple: t.clone() });
                }
            }
        }
    }
    Ok(())
}

/// Enumerates the partial automorphisms of `s` whose domain has at most
/// `max_domain` elements and is closed under the named functions.
///
/// Domains are visited by size, then lexicographically; for each domain the
/// maps are produced in lexicographic order of their image tuples.
pub fn partial_automorphisms<'a>(
    s: &'a FiniteStructure,
    max_domain: usize,
    closure_fns: &[&str],
) -> Result<PartialAutomorphisms<'a>, StructureError> {
    if max_domain > s.universe_size() {
        return Err(StructureError::DomainTooLarge { max_domain, universe: s.universe_size() });
    }
    let fns = s.function_selection(Some(closure_fns))?;
    Ok(PartialAutomorphisms {
        s,
        fns,
        max_domain,
        domain: Vec::new(),
        started: false,
        current: None,
    })
}

/// Iterator returned by [`partial_automorphisms`].
#[derive(Debug)]
pub struct PartialAutomorphisms<'a> {
    s: &'a FiniteStructure,
    fns: Vec<usize>,
    max_domain: usize,
    domain: Vec<Elem>,
    started: bool,
    current: Option<ExtensionIter<'a>>,
}

impl PartialAutomorphisms<'_> {
    /// Advances `domain` to the next subset in (size, lexicographic) order.
    fn next_domain(&mut self) -> bool {
        let n = self.s.universe_size();
        if !self.started {
            self.started = true;
            return true;
        }
        let k = self.domain.len();
        // next k-combination
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.domain[i] < n - (k - i) {
                self.domain[i] += 1;
                for j in i + 1..k {
                    self.domain[j] = self.domain[j - 1] + 1;
                }
                return true;
            }
        }
        if k < self.max_domain {
            self.domain = (0..k + 1).collect();
            return true;
        }
        false
    }
}

impl Iterator for PartialAutomorphisms<'_> {
    type Item = PartialAutomorphism;

    fn next(&mut self) -> Option<PartialAutomorphism> {
        loop {
            if let Some(it) = self.current.as_mut() {
                if let Some(map) = it.next() {
                    return Some(PartialAutomorphism::from_validated(map));
                }
                self.current = None;
            }
            if !self.next_domain() {
                return None;
            }
            let set: BTreeSet<Elem> = self.domain.iter().copied().collect();
            if self.s.is_closed(&set, &self.fns) {
                let candidates: Vec<Elem> = (0..self.s.universe_size()).collect();
                self.current = Some(ExtensionIter::new(IsoSearch::new(self.s), self.domain.clone(), candidates));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq3x3() -> FiniteStructure {
        let mut e = Vec::new();
        for c in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    e.push(vec![3 * c + i, 3 * c + j]);
                }
            }
        }
        FiniteStructure::new(9, vec![Relation::new("E", 2, e)], vec![]).unwrap()
    }

    fn layered() -> FiniteStructure {
        FiniteStructure::new(
            3,
            vec![Relation::new("P0", 1, [vec![0]]), Relation::new("P1", 1, [vec![1], vec![2]])],
            vec![PartialFunction::unary("F0", [(1, 0), (2, 0)])],
        )
        .unwrap()
    }

    #[test]
    fn qf_type_equal_for_symmetric_generators() {
        let s = layered();
        assert_eq!(qf_type(&s, &[1, 0]).unwrap(), qf_type(&s, &[2, 0]).unwrap());
        // generator 0 is also the closure element F0(1): order of generation is fixed by the tuple
        assert_ne!(qf_type(&s, &[1, 0]).unwrap(), qf_type(&s, &[0, 1]).unwrap());
    }

    #[test]
    fn qf_type_separates_equality_pattern() {
        let s = eq3x3();
        assert_ne!(qf_type(&s, &[1, 1]).unwrap(), qf_type(&s, &[1, 2]).unwrap());
        assert_ne!(qf_type(&s, &[1, 2]).unwrap(), qf_type(&s, &[1, 4]).unwrap());
        assert_eq!(qf_type(&s, &[1, 2]).unwrap(), qf_type(&s, &[4, 5]).unwrap());
    }

    #[test]
    fn empty_tuple_has_unique_type() {
        let s = layered();
        let t = qf_type(&s, &[]).unwrap();
        assert_eq!(t.closure_size, 0);
        assert_eq!(t, qf_type(&s, &[]).unwrap());
        assert!(qf_type(&s, &[3]).is_err());
    }

    #[test]
    fn closure_follows_functions() {
        let s = layered();
        assert_eq!(s.closure(&[2]), [0, 2].into_iter().collect());
        assert_eq!(s.closure_under(&[2], Some(&[])).unwrap(), [2].into_iter().collect());
        assert!(s.closure_under(&[2], Some(&["G"])).is_err());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            FiniteStructure::new(2, vec![Relation::new("R", 2, [vec![0, 2]])], vec![]),
            Err(StructureError::OutOfRange { .. })
        ));
        assert!(matches!(
            FiniteStructure::new(2, vec![Relation::new("R", 2, [vec![0]])], vec![]),
            Err(StructureError::ArityMismatch { .. })
        ));
        assert!(matches!(
            FiniteStructure::new(2, vec![Relation::new("R", 1, [])], vec![PartialFunction::unary("R", [])]),
            Err(StructureError::DuplicateName(_))
        ));
    }

    #[test]
    fn pure_equality_partial_automorphisms() {
        let s = FiniteStructure::pure_set(2);
        let maps: Vec<Vec<(Elem, Elem)>> = partial_automorphisms(&s, 1, &[])
            .unwrap()
            .map(|h| h.as_map().iter().map(|(&a, &b)| (a, b)).collect())
            .collect();
        assert_eq!(maps, vec![vec![], vec![(0, 0)], vec![(0, 1)], vec![(1, 0)], vec![(1, 1)]]);
    }

    #[test]
    fn eq3x3_partial_automorphisms_preserve_e() {
        let s = eq3x3();
        let maps: Vec<PartialAutomorphism> = partial_automorphisms(&s, 2, &[]).unwrap().collect();
        assert!(maps[0].is_empty());
        let good: BTreeMap<Elem, Elem> = [(0, 3), (1, 4)].into_iter().collect();
        let bad: BTreeMap<Elem, Elem> = [(0, 3), (1, 6)].into_iter().collect();
        assert!(maps.iter().any(|h| h.as_map() == &good));
        assert!(!maps.iter().any(|h| h.as_map() == &bad));
        for h in &maps {
            h.validate(&s).unwrap();
        }
    }

    #[test]
    fn closed_domains_only() {
        let s = layered();
        for h in partial_automorphisms(&s, 3, &["F0"]).unwrap() {
            let dom: BTreeSet<Elem> = h.domain().collect();
            assert!(!dom.contains(&1) || dom.contains(&0));
            assert!(!dom.contains(&2) || dom.contains(&0));
        }
        assert!(partial_automorphisms(&s, 4, &[]).is_err());
    }

    #[test]
    fn validation_reports_direction() {
        let s = eq3x3();
        let m: BTreeMap<Elem, Elem> = [(0, 0), (3, 1)].into_iter().collect();
        assert!(matches!(check_partial_automorphism(&s, &m), Err(PartialIsoViolation::Backward { .. })));
        let m: BTreeMap<Elem, Elem> = [(0, 0), (1, 3)].into_iter().collect();
        assert!(matches!(check_partial_automorphism(&s, &m), Err(PartialIsoViolation::Forward { .. })));
        let m: BTreeMap<Elem, Elem> = [(0, 1), (1, 1)].into_iter().collect();
        assert!(matches!(check_partial_automorphism(&s, &m), Err(PartialIsoViolation::NotInjective(0, 1))));
    }
}
