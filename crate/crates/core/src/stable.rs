//! Independence oracles for a small catalog of theories, strongly
//! independent decompositions, and the two representation builders.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::enrichment::{validate_enrichment, Carrier, Enrichment, EnrichmentViolation, UnaryFn};
use crate::representation::{RepresentationError, RepresentationMap};
use crate::structure::{Elem, FiniteStructure, Relation};
use crate::terms::{AlgebraSignature, TermAlgebra, TermError, TermId, DEFAULT_TERM_LIMIT};
use crate::types::{TypeOracle, TypePolicy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StableError {
    #[error("no independence oracle for this model: {0}")]
    CatalogMismatch(String),
    #[error("element {0} is outside the model")]
    OutOfRange(Elem),
    #[error("the set and the base overlap at {0}")]
    Overlap(Elem),
    #[error("element {0} has no finite base inside the earlier layers")]
    NoBase(Elem),
    #[error("the greedy order is not a permutation of the universe")]
    BadOrder,
    #[error("refinement rejected: {0}")]
    BadRefinement(String),
    #[error("the builder needs single-element first two layers")]
    NotSingletonPrefix,
    #[error("the builder needs a decomposition built in omega_stable mode")]
    NotOmegaStable,
    #[error("canonical parameter {param} of {element} is not in an earlier layer")]
    ParamOutsideEarlier { element: Elem, param: Elem },
    #[error("the built enrichment is invalid: {0:?}")]
    InvalidEnrichment(Vec<EnrichmentViolation>),
    #[error(transparent)]
    Terms(#[from] TermError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
}

/// A desk model from the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "tag", content = "params", rename_all = "snake_case"))]
pub enum TheorySpec {
    PureSet { n: usize },
    /// `classes` classes of `size` consecutive elements.
    EqRel { classes: usize, size: usize },
    /// Element `(o * inner + i) * size + k`; `E1` relates equal `o`, `E2`
    /// equal `(o, i)`.
    NestedEqRel { outer: usize, inner: usize, size: usize },
    /// Unstable; no oracle.
    FiniteLinearOrder { n: usize },
}

fn equivalence(name: &str, labels: &[usize]) -> Relation {
    let n = labels.len();
    Relation::new(
        name,
        2,
        (0..n).flat_map(|x| (0..n).filter(move |&y| labels[x] == labels[y]).map(move |y| vec![x, y])),
    )
}

impl TheorySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            TheorySpec::PureSet { .. } => "pure_set",
            TheorySpec::EqRel { .. } => "eq_rel",
            TheorySpec::NestedEqRel { .. } => "nested_eq_rel",
            TheorySpec::FiniteLinearOrder { .. } => "finite_linear_order",
        }
    }

    /// Coarse to fine class labels, with the relation names.
    fn levels(&self) -> Option<Vec<(String, Vec<usize>)>> {
        match *self {
            TheorySpec::PureSet { .. } => Some(Vec::new()),
            TheorySpec::EqRel { classes, size } => {
                Some(vec![(String::from("E"), (0..classes * size).map(|e| e / size).collect())])
            }
            TheorySpec::NestedEqRel { outer, inner, size } => {
                let n = outer * inner * size;
                Some(vec![
                    (String::from("E1"), (0..n).map(|e| e / (inner * size)).collect()),
                    (String::from("E2"), (0..n).map(|e| e / size).collect()),
                ])
            }
            TheorySpec::FiniteLinearOrder { .. } => None,
        }
    }

    pub fn universe_size(&self) -> usize {
        match *self {
            TheorySpec::PureSet { n } | TheorySpec::FiniteLinearOrder { n } => n,
            TheorySpec::EqRel { classes, size } => classes * size,
            TheorySpec::NestedEqRel { outer, inner, size } => outer * inner * size,
        }
    }

    pub fn model(&self) -> FiniteStructure {
        let n = self.universe_size();
        let relations = match self.levels() {
            Some(levels) => levels.iter().map(|(name, labels)| equivalence(name, labels)).collect(),
            None => vec![Relation::new("<", 2, (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j])))],
        };
        FiniteStructure::new(n, relations, vec![]).expect("catalog models are well formed")
    }

    pub fn oracle(&self) -> Result<EquivalenceChainOracle, StableError> {
        match self.levels() {
            Some(levels) => Ok(EquivalenceChainOracle::new(self.universe_size(), levels)),
            None => Err(StableError::CatalogMismatch(format!("{} is not stable", self.tag()))),
        }
    }
}

/// Forking and bases for one model.
///
/// Sets are passed explicitly; `forks(a, A, B)` asks whether `tp(a, A ∪ B)`
/// forks over `B`.
pub trait IndependenceOracle {
    fn universe_size(&self) -> usize;
    fn forks(&self, a: Elem, big: &BTreeSet<Elem>, small: &BTreeSet<Elem>) -> bool;
    /// Number of nonforking extensions of `tp(a, B)` to `A ∪ B`.
    fn nonforking_extensions(&self, a: Elem, big: &BTreeSet<Elem>, small: &BTreeSet<Elem>) -> usize;
    /// Is `tp(a, A ∪ B)` the unique nonforking extension of `tp(a, B)`?
    fn unique_nonforking(&self, a: Elem, big: &BTreeSet<Elem>, small: &BTreeSet<Elem>) -> bool {
        !self.forks(a, big, small) && self.nonforking_extensions(a, big, small) == 1
    }
    /// A finite `B ⊆ A` such that `tp(a, A)` is the unique nonforking
    /// extension of `tp(a, B)`.
    fn base(&self, a: Elem, set: &BTreeSet<Elem>) -> Option<BTreeSet<Elem>>;
    /// Parameters from `earlier` defining the `phi`-class of `a`, if any.
    fn canonical_params(&self, phi: &str, a: Elem, earlier: &BTreeSet<Elem>) -> Option<Vec<Elem>>;
    fn formulas(&self) -> Vec<String>;
}

/// Oracle for a chain of nested equivalence relations with infinitely many
/// infinite classes at every level, equality being the finest level.
///
/// A type over `D` records, level by level, which class meeting `D` the
/// element lies in (or that its class avoids `D`); such types fork exactly
/// when they put the element in a class meeting `A` but not `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceChainOracle {
    n: usize,
    names: Vec<String>,
    /// Class labels per level, coarse to fine, ending with equality.
    labels: Vec<Vec<usize>>,
}

impl EquivalenceChainOracle {
    pub fn new(n: usize, levels: Vec<(String, Vec<usize>)>) -> Self {
        let mut names = Vec::new();
        let mut labels = Vec::new();
        for (name, l) in levels {
            names.push(name);
            labels.push(l);
        }
        labels.push((0..n).collect());
        EquivalenceChainOracle { n, names, labels }
    }

    fn meets(&self, level: usize, a: Elem, d: &BTreeSet<Elem>) -> bool {
        d.iter().any(|&x| self.labels[level][x] == self.labels[level][a])
    }

    /// Abstract types over `D` extending the one given by `a` over `small`,
    /// counted by choosing, level by level, a class meeting `D` or none.
    fn count_extensions(&self, a: Elem, d: &BTreeSet<Elem>, small: &BTreeSet<Elem>, nonforking: bool) -> usize {
        // the class of `a` over `small` at each level, if it meets `small`
        let over_small: Vec<Option<usize>> = (0..self.labels.len())
            .map(|l| if self.meets(l, a, small) { Some(self.labels[l][a]) } else { None })
            .collect();
        self.extend_from(0, None, d, small, &over_small, nonforking)
    }

    fn extend_from(
        &self,
        level: usize,
        parent: Option<Option<usize>>,
        d: &BTreeSet<Elem>,
        small: &BTreeSet<Elem>,
        over_small: &[Option<usize>],
        nonforking: bool,
    ) -> usize {
        if level == self.labels.len() {
            return 1;
        }
        let mut options: Vec<Option<usize>> = vec![None];
        let classes: BTreeSet<usize> = d.iter().map(|&x| self.labels[level][x]).collect();
        options.extend(classes.into_iter().map(Some));
        let mut total = 0;
        for q in options {
            // nesting: a class must lie inside the chosen coarser class
            let nested = match (parent, q) {
                (None, _) | (Some(_), None) => true,
                (Some(None), Some(_)) => false,
                (Some(Some(pc)), Some(c)) => d
                    .iter()
                    .any(|&x| self.labels[level][x] == c && self.labels[level - 1][x] == pc),
            };
            if !nested {
                continue;
            }
            let meets_small = |c: usize| small.iter().any(|&x| self.labels[level][x] == c);
            // restriction to `small` must give the original type
            let restricted = q.filter(|&c| meets_small(c));
            if restricted != over_small[level] {
                continue;
            }
            if nonforking && q.is_some_and(|c| !meets_small(c)) {
                continue;
            }
            total += self.extend_from(level + 1, Some(q), d, small, over_small, nonforking);
        }
        total
    }

    fn level_index(&self, phi: &str) -> Option<usize> {
        self.names.iter().position(|n| n == phi)
    }
}

impl IndependenceOracle for EquivalenceChainOracle {
    fn universe_size(&self) -> usize {
        self.n
    }

    fn forks(&self, a: Elem, big: &BTreeSet<Elem>, small: &BTreeSet<Elem>) -> bool {
        let d: BTreeSet<Elem> = big.union(small).copied().collect();
        (0..self.labels.len()).any(|l| self.meets(l, a, &d) && !self.meets(l, a, small))
    }

    fn nonforking_extensions(&self, a: Elem, big: &BTreeSet<Elem>, small: &BTreeSet<Elem>) -> usize {
        let d: BTreeSet<Elem> = big.union(small).copied().collect();
        self.count_extensions(a, &d, small, true)
    }

    fn base(&self, a: Elem, set: &BTreeSet<Elem>) -> Option<BTreeSet<Elem>> {
        let finest = (0..self.labels.len()).rev().find(|&l| self.meets(l, a, set));
        Some(match finest {
            None => BTreeSet::new(),
            Some(l) => {
                let x = set.iter().copied().find(|&x| self.labels[l][x] == self.labels[l][a])?;
                [x].into_iter().collect()
            }
        })
    }

    fn canonical_params(&self, phi: &str, a: Elem, earlier: &BTreeSet<Elem>) -> Option<Vec<Elem>> {
        let l = self.level_index(phi)?;
        earlier.iter().copied().find(|&x| self.labels[l][x] == self.labels[l][a]).map(|x| vec![x])
    }

    fn formulas(&self) -> Vec<String> {
        self.names.clone()
    }
}

fn check_oracle(o: &dyn IndependenceOracle, m: &FiniteStructure) -> Result<(), StableError> {
    if o.universe_size() != m.universe_size() {
        return Err(StableError::CatalogMismatch(format!(
            "oracle covers {} elements, model has {}",
            o.universe_size(),
            m.universe_size()
        )));
    }
    Ok(())
}

/// Is every `a` in `set` such that `tp(a, over ∪ set∖{a})` is the unique
/// nonforking extension of `tp(a, over)`?
pub fn check_strongly_independent(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    set: &BTreeSet<Elem>,
    over: &BTreeSet<Elem>,
) -> Result<bool, StableError> {
    check_oracle(o, m)?;
    if let Some(&x) = set.iter().chain(over).find(|&&x| x >= m.universe_size()) {
        return Err(StableError::OutOfRange(x));
    }
    if let Some(&x) = set.intersection(over).next() {
        return Err(StableError::Overlap(x));
    }
    Ok(strongly_independent(o, set, over))
}

fn strongly_independent(o: &dyn IndependenceOracle, set: &BTreeSet<Elem>, over: &BTreeSet<Elem>) -> bool {
    set.iter().all(|&a| {
        let mut big: BTreeSet<Elem> = over.clone();
        big.extend(set.iter().copied().filter(|&x| x != a));
        o.unique_nonforking(a, &big, over)
    })
}

/// Is the set indiscernible over the empty set? Checked on one enumeration
/// against a transposition and a full cycle, which generate all reorderings.
pub fn is_indiscernible_set(m: &FiniteStructure, set: &BTreeSet<Elem>) -> bool {
    let t: Vec<Elem> = set.iter().copied().collect();
    if t.len() < 2 {
        return true;
    }
    let mut oracle = TypeOracle::new(m, TypePolicy::Orbit);
    let mut swapped = t.clone();
    swapped.swap(0, 1);
    let mut cycled = t.clone();
    cycled.rotate_left(1);
    oracle.equal_unchecked(&t, &swapped) && oracle.equal_unchecked(&t, &cycled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DecompositionMode {
    /// Every layer, the first included, is strongly independent over the
    /// earlier ones.
    Generic,
    /// The first layer is a maximal indiscernible set over the empty set.
    OmegaStable,
}

/// Base data for one element.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BaseRecord {
    pub layer: usize,
    pub base: Vec<Elem>,
    /// The base as a tuple (sorted).
    pub params: Vec<Elem>,
    /// Orbit type of `a⌢params` over the empty set.
    pub type_id: usize,
    /// Rank among earlier elements with the same `(params, type_id)` and
    /// the same `seed` flag.
    pub copy_index: usize,
    /// In the first layer as built (refinement keeps the flag).
    pub seed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Decomposition {
    pub mode: DecompositionMode,
    /// Disjoint sorted layers covering the universe.
    pub layers: Vec<Vec<Elem>>,
    /// Indexed by element.
    pub records: Vec<BaseRecord>,
    /// A representative tuple for every type id.
    pub type_reps: Vec<Vec<Elem>>,
}

impl Decomposition {
    fn earlier(&self, layer: usize) -> BTreeSet<Elem> {
        self.layers[..layer].iter().flatten().copied().collect()
    }
}

pub fn build_sid(o: &dyn IndependenceOracle, m: &FiniteStructure, mode: DecompositionMode) -> Result<Decomposition, StableError> {
    let order: Vec<Elem> = (0..m.universe_size()).collect();
    build_sid_with_order(o, m, mode, &order)
}

/// Greedy decomposition visiting candidates in `order`: each layer takes
/// every remaining element that keeps the layer's condition.
pub fn build_sid_with_order(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    mode: DecompositionMode,
    order: &[Elem],
) -> Result<Decomposition, StableError> {
    check_oracle(o, m)?;
    let n = m.universe_size();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(StableError::BadOrder);
    }
    let mut remaining: Vec<Elem> = order.to_vec();
    let mut layers: Vec<Vec<Elem>> = Vec::new();
    let mut before: BTreeSet<Elem> = BTreeSet::new();
    while !remaining.is_empty() {
        let mut layer: BTreeSet<Elem> = BTreeSet::new();
        for &a in &remaining {
            let mut candidate = layer.clone();
            candidate.insert(a);
            let ok = if mode == DecompositionMode::OmegaStable && layers.is_empty() {
                is_indiscernible_set(m, &candidate)
            } else {
                strongly_independent(o, &candidate, &before)
            };
            if ok {
                layer = candidate;
            }
        }
        remaining.retain(|x| !layer.contains(x));
        before.extend(layer.iter().copied());
        layers.push(layer.into_iter().collect());
    }
    let (records, type_reps) = base_records(o, m, &layers)?;
    Ok(Decomposition { mode, layers, records, type_reps })
}

fn base_records(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    layers: &[Vec<Elem>],
) -> Result<(Vec<BaseRecord>, Vec<Vec<Elem>>), StableError> {
    let mut oracle = TypeOracle::new(m, TypePolicy::Orbit);
    let mut type_reps: Vec<Vec<Elem>> = Vec::new();
    let mut copies: BTreeMap<(bool, Vec<Elem>, usize), usize> = BTreeMap::new();
    let mut records: Vec<Option<BaseRecord>> = vec![None; m.universe_size()];
    let mut earlier: BTreeSet<Elem> = BTreeSet::new();
    for (layer, elems) in layers.iter().enumerate() {
        for &a in elems {
            let base: Vec<Elem> = o.base(a, &earlier).ok_or(StableError::NoBase(a))?.into_iter().collect();
            if base.iter().any(|x| !earlier.contains(x)) {
                return Err(StableError::NoBase(a));
            }
            let params = base.clone();
            let tuple: Vec<Elem> = core::iter::once(a).chain(params.iter().copied()).collect();
            let type_id = match type_reps
                .iter()
                .position(|rep| rep.len() == tuple.len() && oracle.equal_unchecked(rep, &tuple))
            {
                Some(i) => i,
                None => {
                    type_reps.push(tuple);
                    type_reps.len() - 1
                }
            };
            let counter = // the first layer is counted apart: it never becomes terms
            copies.entry((layer == 0, params.clone(), type_id)).or_insert(0);
            let copy_index = *counter;
            *counter += 1;
            records[a] = Some(BaseRecord { layer, base, params, type_id, copy_index, seed: layer == 0 });
        }
        earlier.extend(elems.iter().copied());
    }
    Ok((records.into_iter().map(|r| r.expect("layers cover the universe")).collect(), type_reps))
}

/// Rechecks a decomposition: coverage, the layer conditions, and the base
/// records. Returns a description of the first defect.
pub fn verify_decomposition(o: &dyn IndependenceOracle, m: &FiniteStructure, d: &Decomposition) -> Result<(), String> {
    check_oracle(o, m).map_err(|e| format!("{e}"))?;
    let mut all: Vec<Elem> = d.layers.iter().flatten().copied().collect();
    all.sort_unstable();
    if all != (0..m.universe_size()).collect::<Vec<_>>() || d.records.len() != m.universe_size() {
        return Err(String::from("layers do not partition the universe"));
    }
    if d.layers.iter().any(|l| l.is_empty()) {
        return Err(String::from("empty layer"));
    }
    let mut oracle = TypeOracle::new(m, TypePolicy::Orbit);
    let mut seen: BTreeSet<(bool, Vec<Elem>, usize, usize)> = BTreeSet::new();
    for (alpha, layer) in d.layers.iter().enumerate() {
        let set: BTreeSet<Elem> = layer.iter().copied().collect();
        let earlier = d.earlier(alpha);
        if alpha == 0 && d.mode == DecompositionMode::OmegaStable {
            if !is_indiscernible_set(m, &set) {
                return Err(String::from("first layer is not indiscernible"));
            }
        } else if !strongly_independent(o, &set, &earlier) {
            return Err(format!("layer {alpha} is not strongly independent over the earlier layers"));
        }
        for &a in layer {
            let r = &d.records[a];
            if r.layer != alpha {
                return Err(format!("record of {a} names layer {}", r.layer));
            }
            if r.base.iter().any(|x| !earlier.contains(x)) {
                return Err(format!("base of {a} leaves the earlier layers"));
            }
            let mut params = r.base.clone();
            params.sort_unstable();
            if params != r.params {
                return Err(format!("parameters of {a} do not enumerate its base"));
            }
            let tuple: Vec<Elem> = core::iter::once(a).chain(r.params.iter().copied()).collect();
            let rep = d.type_reps.get(r.type_id).ok_or_else(|| format!("unknown type id for {a}"))?;
            if rep.len() != tuple.len() || !oracle.equal_unchecked(rep, &tuple) {
                return Err(format!("type id of {a} is wrong"));
            }
            if !seen.insert((r.seed, r.params.clone(), r.type_id, r.copy_index)) {
                return Err(format!("copy index of {a} is shared"));
            }
        }
    }
    Ok(())
}

/// Replaces the layers by `cuts`, which must split each layer into
/// consecutive parts without reordering layers.
pub fn refine_decomposition(d: &Decomposition, cuts: &[Vec<Elem>]) -> Result<Decomposition, StableError> {
    let n = d.records.len();
    let mut seen = vec![false; n];
    let mut last_layer = 0;
    for part in cuts {
        let first = *part.first().ok_or_else(|| StableError::BadRefinement(String::from("empty part")))?;
        if first >= n {
            return Err(StableError::OutOfRange(first));
        }
        let layer = d.records[first].layer;
        for &x in part {
            if x >= n {
                return Err(StableError::OutOfRange(x));
            }
            if d.records[x].layer != layer {
                return Err(StableError::BadRefinement(format!("part containing {first} and {x} spans two layers")));
            }
            if core::mem::replace(&mut seen[x], true) {
                return Err(StableError::BadRefinement(format!("{x} appears twice")));
            }
        }
        if layer < last_layer {
            return Err(StableError::BadRefinement(format!("part containing {first} comes after a later layer")));
        }
        last_layer = layer;
    }
    if let Some(x) = seen.iter().position(|s| !s) {
        return Err(StableError::BadRefinement(format!("{x} is missing")));
    }
    let mut out = d.clone();
    out.layers = cuts
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.sort_unstable();
            p
        })
        .collect();
    for (i, part) in out.layers.iter().enumerate() {
        for &x in part {
            out.records[x].layer = i;
        }
    }
    Ok(out)
}

/// Cuts making the first two layers single elements.
pub fn singleton_prefix_cuts(d: &Decomposition) -> Vec<Vec<Elem>> {
    let mut cuts: Vec<Vec<Elem>> = Vec::new();
    let mut needed = 2;
    for layer in &d.layers {
        let mut rest = layer.as_slice();
        while needed > 0 && !rest.is_empty() {
            cuts.push(vec![rest[0]]);
            rest = &rest[1..];
            needed -= 1;
        }
        if !rest.is_empty() {
            cuts.push(rest.to_vec());
        }
    }
    cuts
}

/// Name of the `j`-th parameter function for `phi`.
pub fn param_fn_name(phi: &str, j: usize) -> String {
    format!("F[{phi},{j}]")
}

/// Name of the `i`-th base enumeration function.
pub fn base_fn_name(i: usize) -> String {
    format!("F*[{i}]")
}

/// The layered representation: the source universe as a pure set, levels
/// given by layers, parameter functions from the oracle's canonical
/// parameters and base functions enumerating each base.
pub fn build_ex1_representation(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    d: &Decomposition,
) -> Result<RepresentationMap, StableError> {
    check_oracle(o, m)?;
    let singleton_prefix = d.layers.first().is_some_and(|l| l.len() == 1)
        && d.layers.get(1).is_none_or(|l| l.len() == 1);
    if !singleton_prefix {
        return Err(StableError::NotSingletonPrefix);
    }
    let n = m.universe_size();
    let levels: Vec<usize> = (0..n).map(|a| d.records[a].layer).collect();
    let mut fns: Vec<UnaryFn> = Vec::new();
    for phi in o.formulas() {
        let mut by_j: BTreeMap<usize, Vec<(Elem, Elem)>> = BTreeMap::new();
        for (a, &level) in levels.iter().enumerate() {
            let earlier = d.earlier(level);
            if let Some(params) = o.canonical_params(&phi, a, &earlier) {
                for (j, &c) in params.iter().enumerate() {
                    if !earlier.contains(&c) {
                        return Err(StableError::ParamOutsideEarlier { element: a, param: c });
                    }
                    by_j.entry(j).or_default().push((a, c));
                }
            }
        }
        for (j, pairs) in by_j {
            fns.push(UnaryFn::new(param_fn_name(&phi, j), pairs));
        }
    }
    let widest = d.records.iter().map(|r| r.base.len()).max().unwrap_or(0);
    for i in 0..widest {
        let pairs = (0..n).filter_map(|a| {
            let b = &d.records[a].params;
            b.get(i).or(b.last()).map(|&c| (a, c))
        });
        fns.push(UnaryFn::new(base_fn_name(i), pairs));
    }
    let target = Enrichment::new(Carrier::Structure(FiniteStructure::pure_set(n)), levels, fns)
        .map_err(RepresentationError::from)?;
    let problems = validate_enrichment(&target);
    if !problems.is_empty() {
        return Err(StableError::InvalidEnrichment(problems));
    }
    Ok(RepresentationMap::new(m.clone(), target, (0..n).collect())?)
}

/// How layer elements pick their function symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SymbolMode {
    /// One symbol per type and copy index.
    CopyIndex,
    /// One symbol per type.
    Literal,
}

/// Symbol used for an element with type id `p` and copy index `k`.
pub fn ex2_symbol_name(mode: SymbolMode, p: usize, k: usize) -> String {
    match mode {
        SymbolMode::CopyIndex => format!("F{p}_{k}"),
        SymbolMode::Literal => format!("F{p}"),
    }
}

/// The term representation: the first layer as built (before any
/// refinement) maps bijectively onto the base of a fresh term algebra, and
/// every other element `a` maps to `F(f(c̄_a))` for the symbol of its type
/// (and copy index).
pub fn build_ex2_representation(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    d: &Decomposition,
    mode: SymbolMode,
) -> Result<RepresentationMap, StableError> {
    build_ex2_with_limit(o, m, d, mode, DEFAULT_TERM_LIMIT)
}

pub fn build_ex2_with_limit(
    o: &dyn IndependenceOracle,
    m: &FiniteStructure,
    d: &Decomposition,
    mode: SymbolMode,
    limit: usize,
) -> Result<RepresentationMap, StableError> {
    check_oracle(o, m)?;
    if d.mode != DecompositionMode::OmegaStable {
        return Err(StableError::NotOmegaStable);
    }
    let first: Vec<Elem> = d.layers.iter().flatten().copied().filter(|&a| d.records[a].seed).collect();
    let sig = AlgebraSignature::new(Vec::new(), first.len(), d.layers.len());
    let mut algebra = TermAlgebra::fragment(sig, FiniteStructure::pure_set(first.len()), limit)?;
    let mut f: Vec<Option<TermId>> = vec![None; m.universe_size()];
    for (i, &a) in first.iter().enumerate() {
        f[a] = Some(algebra.base_term(i)?);
    }
    for layer in &d.layers {
        for &a in layer.iter().filter(|&&a| !d.records[a].seed) {
            let r = &d.records[a];
            let children: Vec<TermId> = r
                .params
                .iter()
                .map(|&c| f[c].ok_or(StableError::NoBase(a)))
                .collect::<Result<_, _>>()?;
            let sym = algebra.add_symbol(&ex2_symbol_name(mode, r.type_id, r.copy_index), children.len())?;
            f[a] = Some(algebra.intern(sym, children)?);
        }
    }
    let map: Vec<Elem> = f.into_iter().map(|t| t.expect("every element is placed").index()).collect();
    let levels: Vec<usize> = (0..algebra.len()).map(|t| algebra.depth(TermId(t as u32)).unwrap_or(0)).collect();
    let target = Enrichment::new(Carrier::Terms(algebra), levels, Vec::new()).map_err(RepresentationError::from)?;
    Ok(RepresentationMap::new(m.clone(), target, map)?)
}

/// A catalog model with its oracle.
pub fn catalog(spec: &TheorySpec) -> Result<(FiniteStructure, Box<dyn IndependenceOracle>), StableError> {
    Ok((spec.model(), Box::new(spec.oracle()?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::{check_representation, CheckerPolicy};

    fn set(xs: &[Elem]) -> BTreeSet<Elem> {
        xs.iter().copied().collect()
    }

    fn eq3x3() -> (FiniteStructure, EquivalenceChainOracle) {
        let spec = TheorySpec::EqRel { classes: 3, size: 3 };
        (spec.model(), spec.oracle().unwrap())
    }

    #[test]
    fn strong_independence_examples() {
        let (m, o) = eq3x3();
        assert!(check_strongly_independent(&o, &m, &set(&[3, 6]), &set(&[0, 1, 2])).unwrap());
        assert!(!check_strongly_independent(&o, &m, &set(&[3, 4]), &set(&[0, 1, 2])).unwrap());
        assert!(check_strongly_independent(&o, &m, &set(&[]), &set(&[5])).unwrap());
        assert_eq!(check_strongly_independent(&o, &m, &set(&[1]), &set(&[1])), Err(StableError::Overlap(1)));
    }

    #[test]
    fn omega_stable_decomposition() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        assert_eq!(d.layers, vec![vec![0, 1, 2], vec![3, 6], vec![4, 5, 7, 8]]);
        assert!(d.records[3].base.is_empty());
        assert_eq!(d.records[4].base, vec![3]);
        assert_eq!((d.records[4].copy_index, d.records[5].copy_index), (0, 1));
        assert_eq!(verify_decomposition(&o, &m, &d), Ok(()));
    }

    #[test]
    fn generic_decomposition() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::Generic).unwrap();
        assert_eq!(d.layers, vec![vec![0, 3, 6], vec![1, 2, 4, 5, 7, 8]]);
        assert_eq!(verify_decomposition(&o, &m, &d), Ok(()));
    }

    #[test]
    fn trivial_catalog_cases() {
        let spec = TheorySpec::PureSet { n: 6 };
        let (m, o) = (spec.model(), spec.oracle().unwrap());
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        assert_eq!(d.layers, vec![(0..6).collect::<Vec<_>>()]);
        assert!(d.records.iter().all(|r| r.base.is_empty()));
        let one = TheorySpec::PureSet { n: 1 };
        let d = build_sid(&one.oracle().unwrap(), &one.model(), DecompositionMode::Generic).unwrap();
        assert_eq!(d.layers, vec![vec![0]]);
        assert!(matches!(
            TheorySpec::FiniteLinearOrder { n: 4 }.oracle(),
            Err(StableError::CatalogMismatch(_))
        ));
    }

    #[test]
    fn refinements() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        assert_eq!(refine_decomposition(&d, &d.layers).unwrap(), d);
        let cuts = vec![vec![0, 1, 2], vec![3, 6], vec![4, 5], vec![7, 8]];
        let r = refine_decomposition(&d, &cuts).unwrap();
        assert_eq!(verify_decomposition(&o, &m, &r), Ok(()));
        let bad = vec![vec![0, 1, 2], vec![7, 8], vec![3, 6], vec![4, 5]];
        assert!(matches!(refine_decomposition(&d, &bad), Err(StableError::BadRefinement(_))));
        let spanning = vec![vec![0, 1, 2, 3], vec![6], vec![4, 5, 7, 8]];
        assert!(refine_decomposition(&d, &spanning).is_err());
    }

    #[test]
    fn ex1_on_eq3x3() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        let d = refine_decomposition(&d, &singleton_prefix_cuts(&d)).unwrap();
        assert_eq!(d.layers[..2], [vec![0], vec![1]]);
        let r = build_ex1_representation(&o, &m, &d).unwrap();
        let fns = r.target().unary_fns();
        let rep = fns.iter().find(|g| g.name == param_fn_name("E", 0)).unwrap();
        assert_eq!(rep.map.get(&4), Some(&3));
        assert_eq!(rep.map.get(&2), Some(&0));
        let star = fns.iter().find(|g| g.name == base_fn_name(0)).unwrap();
        assert_eq!(star.map.get(&4), Some(&3));
        assert!(validate_enrichment(r.target()).is_empty());
        assert!(check_representation(&r, &CheckerPolicy::orbit(3)).unwrap().is_empty());
        let unrefined = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        assert_eq!(build_ex1_representation(&o, &m, &unrefined).unwrap_err(), StableError::NotSingletonPrefix);
    }

    #[test]
    fn ex2_copy_index_terms() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        let r = build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap();
        let a = r.target().carrier().terms().unwrap();
        let show = |x: Elem| a.display(TermId(r.map()[x] as u32));
        let q = d.records[3].type_id;
        let p = d.records[4].type_id;
        assert_eq!(show(3), format!("F{q}_0"));
        assert_eq!(show(6), format!("F{q}_1"));
        assert_eq!(show(4), format!("F{p}_0(F{q}_0)"));
        assert_eq!(show(5), format!("F{p}_1(F{q}_0)"));
        assert!(check_representation(&r, &CheckerPolicy::orbit(3)).unwrap().is_empty());
    }

    #[test]
    fn ex2_literal_collapses_siblings() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
        let r = build_ex2_representation(&o, &m, &d, SymbolMode::Literal).unwrap();
        assert_eq!(r.map()[4], r.map()[5]);
        let rep = check_representation(&r, &CheckerPolicy::orbit(3)).unwrap();
        assert!(rep.contains_pair(&[4, 5], &[4, 4]));
    }

    #[test]
    fn ex2_needs_omega_stable() {
        let (m, o) = eq3x3();
        let d = build_sid(&o, &m, DecompositionMode::Generic).unwrap();
        assert_eq!(
            build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap_err(),
            StableError::NotOmegaStable
        );
    }
}
