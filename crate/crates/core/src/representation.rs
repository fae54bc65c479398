//! The representation property and two ways of checking it.
//!
//! A map `f: M -> I⁺` represents `M` when equal quantifier-free types of
//! images force equal full types of preimages. [`check_representation`]
//! compares tuples directly; [`check_by_partial_automorphisms`] enumerates
//! partial automorphisms of the target on function-closed sets instead.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::enrichment::{Enrichment, EnrichmentError};
use crate::iso::{ExtensionIter, IsoSearch};
use crate::structure::{qf_type_unchecked, Elem, FiniteStructure, QfType, StructureError};
pub use crate::types::TypePolicy as DeltaPolicy;
use crate::types::TypeOracle;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepresentationError {
    #[error("the map has {found} entries for a source of size {expected}")]
    MapLength { expected: usize, found: usize },
    #[error("source element {element} maps to {image}, outside the target of size {size}")]
    ImageOutOfRange { element: Elem, image: Elem, size: usize },
    #[error("the range is not closed: `{function}` leads from the range to {value}")]
    RangeNotClosed { function: alloc::string::String, value: Elem },
    #[error("max_tuple_len must be at least 1")]
    ZeroTupleLength,
    #[error("a depth-0 game cannot separate types in a structure with relations or functions")]
    DegenerateDelta,
    #[error("closures reach {needed} elements but max_domain is {max_domain}; result would be inconclusive")]
    Inconclusive { needed: usize, max_domain: usize },
    #[error(transparent)]
    Enrichment(#[from] EnrichmentError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// A total map from the source universe into an enriched target.
#[derive(Debug, Clone)]
pub struct RepresentationMap {
    source: FiniteStructure,
    target: Enrichment,
    map: Vec<Elem>,
    plus: FiniteStructure,
}

impl RepresentationMap {
    /// Checks that the map is total, in range, and that its range is closed
    /// under every function of the enriched target.
    pub fn new(source: FiniteStructure, target: Enrichment, map: Vec<Elem>) -> Result<Self, RepresentationError> {
        if map.len() != source.universe_size() {
            return Err(RepresentationError::MapLength { expected: source.universe_size(), found: map.len() });
        }
        let size = target.size();
        if let Some((element, &image)) = map.iter().enumerate().find(|(_, &y)| y >= size) {
            return Err(RepresentationError::ImageOutOfRange { element, image, size });
        }
        let plus = target.to_structure()?;
        let range: BTreeSet<Elem> = map.iter().copied().collect();
        for g in plus.functions() {
            for (args, &value) in &g.graph {
                if !range.contains(&value) && args.iter().all(|a| range.contains(a)) {
                    return Err(RepresentationError::RangeNotClosed { function: g.name.clone(), value });
                }
            }
        }
        Ok(RepresentationMap { source, target, map, plus })
    }

    pub fn source(&self) -> &FiniteStructure {
        &self.source
    }

    pub fn target(&self) -> &Enrichment {
        &self.target
    }

    /// The enriched target as one structure.
    pub fn target_structure(&self) -> &FiniteStructure {
        &self.plus
    }

    pub fn map(&self) -> &[Elem] {
        &self.map
    }

    pub fn image(&self, t: &[Elem]) -> Vec<Elem> {
        t.iter().map(|&x| self.map[x]).collect()
    }

    pub fn range(&self) -> BTreeSet<Elem> {
        self.map.iter().copied().collect()
    }
}

/// `Γ` is always quantifier-free on the target; `delta` picks the source
/// side oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CheckerPolicy {
    pub delta: DeltaPolicy,
    pub max_tuple_len: usize,
}

impl CheckerPolicy {
    pub fn orbit(max_tuple_len: usize) -> Self {
        CheckerPolicy { delta: DeltaPolicy::Orbit, max_tuple_len }
    }

    fn validate(&self, source: &FiniteStructure) -> Result<(), RepresentationError> {
        if self.max_tuple_len == 0 {
            return Err(RepresentationError::ZeroTupleLength);
        }
        if self.delta == DeltaPolicy::EfDepth(0) && source.has_vocabulary() {
            return Err(RepresentationError::DegenerateDelta);
        }
        Ok(())
    }
}

/// How the source side tells two tuples apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Separation {
    /// Already the quantifier-free types in the source differ.
    SourceQfDiffers,
    /// No automorphism of the source maps one tuple to the other.
    NoAutomorphism,
    /// The spoiler wins the back-and-forth game in `depth` rounds.
    SpoilerWins { depth: usize },
}

/// A pair of source tuples whose images share a quantifier-free type while
/// their own types differ.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Violation {
    pub left: Vec<Elem>,
    pub right: Vec<Elem>,
    pub left_image: Vec<Elem>,
    pub right_image: Vec<Elem>,
    /// The common quantifier-free type of both images.
    pub image_type: QfType,
    pub separation: Separation,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ViolationReport {
    pub tuples_checked: u64,
    /// Number of tuple pairs whose images share a quantifier-free type.
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Does the report contain the unordered pair `{a, b}`?
    pub fn contains_pair(&self, a: &[Elem], b: &[Elem]) -> bool {
        self.violations
            .iter()
            .any(|v| (v.left == a && v.right == b) || (v.left == b && v.right == a))
    }
}

/// Every tuple over `0..n` of length `1..=max_len`, shortest first, then
/// lexicographically.
pub fn tuples_up_to(n: usize, max_len: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for len in 1..=max_len {
        let mut t = vec![0; len];
        loop {
            out.push(t.clone());
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                t[pos] += 1;
                if t[pos] < n {
                    break;
                }
                t[pos] = 0;
            }
            if t.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    out
}

/// Source tuples grouped by the quantifier-free type of their images.
///
/// Classes are ordered by their first tuple in enumeration order, and each
/// class lists its tuples in enumeration order, so that checking classes in
/// any order and concatenating the results in class order is deterministic.
#[derive(Debug, Clone)]
pub struct CheckPlan {
    pub tuples_checked: u64,
    pub classes: Vec<(QfType, Vec<Vec<Elem>>)>,
}

pub fn plan(r: &RepresentationMap, p: &CheckerPolicy) -> Result<CheckPlan, RepresentationError> {
    p.validate(&r.source)?;
    let tuples = tuples_up_to(r.source.universe_size(), p.max_tuple_len);
    let mut index: BTreeMap<QfType, usize> = BTreeMap::new();
    let mut classes: Vec<(QfType, Vec<Vec<Elem>>)> = Vec::new();
    for t in &tuples {
        let q = qf_type_unchecked(&r.plus, &r.image(t));
        match index.get(&q) {
            Some(&i) => classes[i].1.push(t.clone()),
            None => {
                index.insert(q.clone(), classes.len());
                classes.push((q, vec![t.clone()]));
            }
        }
    }
    Ok(CheckPlan { tuples_checked: tuples.len() as u64, classes })
}

/// Splits one class into type classes and reports each pair of class
/// representatives (the first tuple of each type class).
pub fn check_class(r: &RepresentationMap, oracle: &mut TypeOracle<'_>, qf: &QfType, class: &[Vec<Elem>]) -> Vec<Violation> {
    let mut reps: Vec<&Vec<Elem>> = Vec::new();
    for t in class {
        if !reps.iter().any(|rep| rep.len() == t.len() && oracle.equal_unchecked(rep, t)) {
            reps.push(t);
        }
    }
    let mut out = Vec::new();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            out.push(violation(r, oracle, qf, reps[i], reps[j]));
        }
    }
    out
}

fn violation(r: &RepresentationMap, oracle: &mut TypeOracle<'_>, qf: &QfType, a: &[Elem], b: &[Elem]) -> Violation {
    let separation = if qf_type_unchecked(&r.source, a) != qf_type_unchecked(&r.source, b) {
        Separation::SourceQfDiffers
    } else {
        match oracle.policy() {
            DeltaPolicy::Orbit => Separation::NoAutomorphism,
            DeltaPolicy::EfDepth(d) => {
                Separation::SpoilerWins { depth: oracle.spoiler_depth(a, b, d).unwrap_or(d) }
            }
        }
    };
    Violation {
        left: a.to_vec(),
        right: b.to_vec(),
        left_image: r.image(a),
        right_image: r.image(b),
        image_type: qf.clone(),
        separation,
    }
}

fn pairs_in(class_len: usize) -> u64 {
    let m = class_len as u64;
    m * m.saturating_sub(1) / 2
}

/// Assembles a report from per-class results given in class order.
pub fn merge(plan: &CheckPlan, per_class: Vec<Vec<Violation>>) -> ViolationReport {
    ViolationReport {
        tuples_checked: plan.tuples_checked,
        pairs_checked: plan.classes.iter().map(|(_, c)| pairs_in(c.len())).sum(),
        violations: per_class.into_iter().flatten().collect(),
    }
}

/// Compares every pair of source tuples of length up to `max_tuple_len`
/// whose images have the same quantifier-free type.
pub fn check_representation(r: &RepresentationMap, p: &CheckerPolicy) -> Result<ViolationReport, RepresentationError> {
    let plan = plan(r, p)?;
    let mut oracle = TypeOracle::new(&r.source, p.delta);
    let per_class = plan.classes.iter().map(|(q, c)| check_class(r, &mut oracle, q, c)).collect();
    Ok(merge(&plan, per_class))
}

/// Largest closure of an image tuple of length up to `max_tuple_len`.
pub fn max_closure_size(r: &RepresentationMap, max_tuple_len: usize) -> usize {
    tuples_up_to(r.source.universe_size(), max_tuple_len)
        .iter()
        .map(|t| r.plus.closure(&r.image(t)).len())
        .max()
        .unwrap_or(0)
}

/// The partial-automorphism criterion: for every tuple `ā`, every partial
/// automorphism `h` of the target with domain `U = cl(f(ā))` and a closed
/// range inside `Rang(f)`, and every `b̄` with `f(b̄) = h(f(ā))`, `ā` and `b̄`
/// must have the same type. Pairs are reported once, smaller tuple first.
pub fn check_by_partial_automorphisms(
    r: &RepresentationMap,
    p: &CheckerPolicy,
    max_domain: usize,
) -> Result<ViolationReport, RepresentationError> {
    p.validate(&r.source)?;
    let tuples = tuples_up_to(r.source.universe_size(), p.max_tuple_len);
    let all_fns: Vec<usize> = (0..r.plus.functions().len()).collect();
    let mut groups: BTreeMap<Vec<Elem>, Vec<&Vec<Elem>>> = BTreeMap::new();
    let mut needed = 0;
    for t in &tuples {
        let u: Vec<Elem> = r.plus.closure_with(&r.image(t), &all_fns).into_iter().collect();
        needed = needed.max(u.len());
        groups.entry(u).or_default().push(t);
    }
    if needed > max_domain {
        return Err(RepresentationError::Inconclusive { needed, max_domain });
    }
    let range: Vec<Elem> = r.range().into_iter().collect();
    let mut preimages: BTreeMap<Elem, Vec<Elem>> = BTreeMap::new();
    for (x, &y) in r.map.iter().enumerate() {
        preimages.entry(y).or_default().push(x);
    }
    let mut oracle = TypeOracle::new(&r.source, p.delta);
    let mut checked: BTreeSet<(Vec<Elem>, Vec<Elem>)> = BTreeSet::new();
    let mut bad: BTreeSet<(Vec<Elem>, Vec<Elem>)> = BTreeSet::new();
    for (u, members) in &groups {
        let isos = ExtensionIter::new(IsoSearch::new(&r.plus), u.clone(), range.clone());
        for h in isos {
            let image_set: BTreeSet<Elem> = h.values().copied().collect();
            if !r.plus.is_closed(&image_set, &all_fns) {
                continue;
            }
            for a in members {
                let target: Vec<Elem> = r.image(a).iter().map(|y| h[y]).collect();
                for b in product(&target, &preimages) {
                    let key = if **a <= b { ((*a).clone(), b) } else { (b, (*a).clone()) };
                    if checked.contains(&key) {
                        continue;
                    }
                    if !oracle.equal_unchecked(&key.0, &key.1) {
                        bad.insert(key.clone());
                    }
                    checked.insert(key);
                }
            }
        }
    }
    let violations = bad
        .into_iter()
        .map(|(a, b)| {
            let qf = qf_type_unchecked(&r.plus, &r.image(&a));
            violation(r, &mut oracle, &qf, &a, &b)
        })
        .collect();
    Ok(ViolationReport { tuples_checked: tuples.len() as u64, pairs_checked: checked.len() as u64, violations })
}

/// All source tuples mapping onto `target` position-wise.
fn product(target: &[Elem], preimages: &BTreeMap<Elem, Vec<Elem>>) -> Vec<Vec<Elem>> {
    let mut out: Vec<Vec<Elem>> = vec![Vec::new()];
    for y in target {
        let Some(xs) = preimages.get(y) else {
            return Vec::new();
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                xs.iter().map(move |&x| {
                    let mut t = prefix.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}
