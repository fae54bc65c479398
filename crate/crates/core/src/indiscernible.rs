//! Extracting indiscernibles through a representation: the four-stage sieve,
//! the witness partial automorphism, a brute-force indiscernibility check,
//! and the probe that plays a represented order against the sieve.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::delta::{delta_system, validate_certificate, CertificateDefect, DeltaError, SunflowerCertificate};
use crate::enrichment::Carrier;
use crate::representation::RepresentationMap;
use crate::structure::{qf_type_unchecked, Elem, FiniteStructure, PartialAutomorphism, PartialIsoViolation};
use crate::terms::{Term, TermId};
use crate::types::{TypeOracle, TypePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    Stage0,
    Stage1,
    Stage2,
    Stage3,
}

impl core::fmt::Display for Stage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Stage::Stage0 => "stage0",
            Stage::Stage1 => "stage1",
            Stage::Stage2 => "stage2",
            Stage::Stage3 => "stage3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SieveError {
    #[error("no tuples given")]
    NoTuples,
    #[error("tuple {0} is empty")]
    EmptyTuple(usize),
    #[error("tuple {index} mentions element {element} outside the source")]
    OutOfRange { index: usize, element: Elem },
    #[error("target {0} is below 2")]
    TargetTooSmall(usize),
    #[error("{stage} keeps only {size} tuples, {target} needed")]
    Bottleneck { stage: Stage, size: usize, target: usize },
}

/// A term shape: base leaves are numbered by first occurrence across the
/// whole tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ShapeTerm {
    Var(usize),
    App(usize, Vec<ShapeTerm>),
}

/// Everything the sieve did, in a form that can be rechecked from scratch.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SieveTrace {
    /// The source tuples.
    pub tuples: Vec<Vec<Elem>>,
    /// Images closed under subterms and the target's other functions.
    pub closed: Vec<Vec<Elem>>,
    /// Closed images padded to `xi` by repeating their first entry.
    pub padded: Vec<Vec<Elem>>,
    pub xi: usize,
    /// All groups at each stage; the next stage refines the group at the
    /// matching `chosen` index (the largest, first on ties).
    pub stage0: Vec<Vec<usize>>,
    pub stage1: Vec<Vec<usize>>,
    pub stage2: Vec<Vec<usize>>,
    pub chosen: [usize; 3],
    /// Surviving tuple indices.
    pub stage3: Vec<usize>,
    /// Δ-system over `padded`, with family indices equal to tuple indices.
    pub certificate: SunflowerCertificate<Elem>,
}

impl SieveTrace {
    /// Survivor counts: chosen group sizes at stages 0 to 2, then `|S₃|`.
    pub fn survivor_counts(&self) -> [usize; 4] {
        [
            self.stage0[self.chosen[0]].len(),
            self.stage1[self.chosen[1]].len(),
            self.stage2[self.chosen[2]].len(),
            self.stage3.len(),
        ]
    }
}

/// Number of leading target functions that are subterm projections.
fn projection_count(r: &RepresentationMap) -> usize {
    match r.target().carrier() {
        Carrier::Terms(a) => a.signature().symbols.iter().map(|s| s.arity).sum(),
        Carrier::Structure(_) => 0,
    }
}

/// Closes an image tuple: children of listed terms first, then values of the
/// other functions, repeated until nothing new appears.
pub fn close_image(r: &RepresentationMap, image: &[Elem]) -> Vec<Elem> {
    let plus = r.target_structure();
    let skip = projection_count(r);
    let mut list: Vec<Elem> = image.to_vec();
    let mut seen: BTreeSet<Elem> = list.iter().copied().collect();
    loop {
        let before = list.len();
        if let Carrier::Terms(a) = r.target().carrier() {
            let mut i = 0;
            while i < list.len() {
                for &c in a.children(TermId(list[i] as u32)) {
                    if seen.insert(c.index()) {
                        list.push(c.index());
                    }
                }
                i += 1;
            }
        }
        for g in &plus.functions()[skip..] {
            for (args, &v) in &g.graph {
                if !seen.contains(&v) && args.iter().all(|x| seen.contains(x)) {
                    seen.insert(v);
                    list.push(v);
                }
            }
        }
        if list.len() == before {
            return list;
        }
    }
}

fn shape_vector(r: &RepresentationMap, t: &[Elem]) -> Vec<ShapeTerm> {
    let mut vars: BTreeMap<Elem, usize> = BTreeMap::new();
    t.iter()
        .map(|&x| match r.target().carrier() {
            Carrier::Terms(a) => term_shape(a, TermId(x as u32), &mut vars),
            Carrier::Structure(_) => var(x, &mut vars),
        })
        .collect()
}

fn var(x: Elem, vars: &mut BTreeMap<Elem, usize>) -> ShapeTerm {
    let n = vars.len();
    ShapeTerm::Var(*vars.entry(x).or_insert(n))
}

fn term_shape(a: &crate::terms::TermAlgebra, id: TermId, vars: &mut BTreeMap<Elem, usize>) -> ShapeTerm {
    match &a.terms()[id.index()] {
        Term::Base(_) => var(id.index(), vars),
        Term::App(s, ch) => ShapeTerm::App(*s, ch.iter().map(|c| term_shape(a, *c, vars)).collect()),
    }
}

fn level_pattern(r: &RepresentationMap, t: &[Elem]) -> Vec<usize> {
    t.iter().map(|&x| r.target().level(x)).collect()
}

fn function_pattern(r: &RepresentationMap, t: &[Elem]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (beta, g) in r.target().unary_fns().iter().enumerate() {
        for (z0, x) in t.iter().enumerate() {
            if let Some(y) = g.map.get(x) {
                for (z1, w) in t.iter().enumerate() {
                    if w == y {
                        out.push((beta, z0, z1));
                    }
                }
            }
        }
    }
    out
}

/// Groups `members` by `key`, ordered by first member; returns the groups
/// and the index of the largest (first on ties).
fn refine<K: Ord>(members: &[usize], key: impl Fn(usize) -> K) -> (Vec<Vec<usize>>, usize) {
    let mut index: BTreeMap<K, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &m in members {
        let k = key(m);
        match index.get(&k) {
            Some(&g) => groups[g].push(m),
            None => {
                index.insert(k, groups.len());
                groups.push(vec![m]);
            }
        }
    }
    let mut chosen = 0;
    for (i, g) in groups.iter().enumerate() {
        if g.len() > groups[chosen].len() {
            chosen = i;
        }
    }
    (groups, chosen)
}

/// Runs the sieve and requires at least `target` survivors at every stage.
pub fn sieve(r: &RepresentationMap, tuples: &[Vec<Elem>], target: usize) -> Result<SieveTrace, SieveError> {
    if tuples.is_empty() {
        return Err(SieveError::NoTuples);
    }
    if target < 2 {
        return Err(SieveError::TargetTooSmall(target));
    }
    let n = r.source().universe_size();
    for (index, t) in tuples.iter().enumerate() {
        if t.is_empty() {
            return Err(SieveError::EmptyTuple(index));
        }
        if let Some(&element) = t.iter().find(|&&x| x >= n) {
            return Err(SieveError::OutOfRange { index, element });
        }
    }
    let closed: Vec<Vec<Elem>> = tuples.iter().map(|t| close_image(r, &r.image(t))).collect();
    let xi = closed.iter().map(Vec::len).max().unwrap_or(0);
    let padded: Vec<Vec<Elem>> = closed
        .iter()
        .map(|c| {
            let mut p = c.clone();
            p.resize(xi, c[0]);
            p
        })
        .collect();
    let all: Vec<usize> = (0..tuples.len()).collect();
    let check = |stage, size: usize| {
        if size < target {
            Err(SieveError::Bottleneck { stage, size, target })
        } else {
            Ok(())
        }
    };
    let (stage0, c0) = refine(&all, |i| (tuples[i].len(), shape_vector(r, &closed[i])));
    check(Stage::Stage0, stage0[c0].len())?;
    let (stage1, c1) = refine(&stage0[c0], |i| level_pattern(r, &padded[i]));
    check(Stage::Stage1, stage1[c1].len())?;
    let (stage2, c2) = refine(&stage1[c1], |i| function_pattern(r, &padded[i]));
    check(Stage::Stage2, stage2[c2].len())?;
    let group = &stage2[c2];
    let family: Vec<Vec<Elem>> = group.iter().map(|&i| padded[i].clone()).collect();
    let mut certificate = match delta_system(&family, target) {
        Ok(c) => c,
        Err(DeltaError::NotFound { best, .. } | DeltaError::Inconclusive { best, .. }) => {
            return Err(SieveError::Bottleneck { stage: Stage::Stage3, size: best, target })
        }
        Err(_) => return Err(SieveError::Bottleneck { stage: Stage::Stage3, size: 0, target }),
    };
    certificate.selected = certificate.selected.iter().map(|&k| group[k]).collect();
    Ok(SieveTrace {
        tuples: tuples.to_vec(),
        stage3: certificate.selected.clone(),
        closed,
        padded,
        xi,
        stage0,
        stage1,
        stage2,
        chosen: [c0, c1, c2],
        certificate,
    })
}

/// A failed recheck of a sieve trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceDefect {
    Closure(usize),
    Padding(usize),
    Stage0(usize),
    Stage1(usize),
    Stage2(usize),
    NotRefinement(Stage),
    Certificate(CertificateDefect),
    Survivors,
}

/// Rechecks every trace invariant from the representation and the raw
/// tuples.
pub fn validate_trace(r: &RepresentationMap, trace: &SieveTrace) -> Result<(), TraceDefect> {
    let plus = r.target_structure();
    let all_fns: Vec<usize> = (0..plus.functions().len()).collect();
    for (i, t) in trace.tuples.iter().enumerate() {
        let c = &trace.closed[i];
        let image = r.image(t);
        let set: BTreeSet<Elem> = c.iter().copied().collect();
        if c.len() < image.len() || c[..image.len()] != image[..] || set.len() != c.len() - dup_count(&image) {
            return Err(TraceDefect::Closure(i));
        }
        if !plus.is_closed(&set, &all_fns) || set != plus.closure(&image) {
            return Err(TraceDefect::Closure(i));
        }
        let p = &trace.padded[i];
        if p.len() != trace.xi || p[..c.len()] != c[..] || p[c.len()..].iter().any(|&x| x != c[0]) {
            return Err(TraceDefect::Padding(i));
        }
    }
    let within = |groups: &[Vec<usize>], parent: &[usize], stage| -> Result<(), TraceDefect> {
        let mut flat: Vec<usize> = groups.iter().flatten().copied().collect();
        flat.sort_unstable();
        let mut want = parent.to_vec();
        want.sort_unstable();
        if flat != want {
            return Err(TraceDefect::NotRefinement(stage));
        }
        Ok(())
    };
    let all: Vec<usize> = (0..trace.tuples.len()).collect();
    within(&trace.stage0, &all, Stage::Stage0)?;
    for (g, members) in trace.stage0.iter().enumerate() {
        let key = |i: usize| (trace.tuples[i].len(), shape_vector(r, &trace.closed[i]));
        if members.iter().any(|&i| key(i) != key(members[0])) {
            return Err(TraceDefect::Stage0(g));
        }
    }
    within(&trace.stage1, &trace.stage0[trace.chosen[0]], Stage::Stage1)?;
    for (g, members) in trace.stage1.iter().enumerate() {
        if members.iter().any(|&i| level_pattern(r, &trace.padded[i]) != level_pattern(r, &trace.padded[members[0]])) {
            return Err(TraceDefect::Stage1(g));
        }
    }
    within(&trace.stage2, &trace.stage1[trace.chosen[1]], Stage::Stage2)?;
    for (g, members) in trace.stage2.iter().enumerate() {
        let first = function_pattern(r, &trace.padded[members[0]]);
        if members.iter().any(|&i| function_pattern(r, &trace.padded[i]) != first) {
            return Err(TraceDefect::Stage2(g));
        }
    }
    let group = &trace.stage2[trace.chosen[2]];
    if trace.stage3.iter().any(|i| !group.contains(i)) || trace.stage3 != trace.certificate.selected {
        return Err(TraceDefect::Survivors);
    }
    validate_certificate(&trace.padded, &trace.certificate).map_err(TraceDefect::Certificate)
}

fn dup_count(t: &[Elem]) -> usize {
    let set: BTreeSet<&Elem> = t.iter().collect();
    t.len() - set.len()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("index sequences have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("index {0} is not a survivor of the sieve")]
    NotSurvivor(usize),
    #[error("index {0} is repeated")]
    Repeated(usize),
    #[error("the map is not well defined at {0}")]
    NotWellDefined(Elem),
    #[error("the map is not a partial automorphism: {0}")]
    Invalid(PartialIsoViolation),
}

/// The map sending entry `j` of the closed image of tuple `v[k]` to entry
/// `j` of the closed image of tuple `u[k]`, validated on the enriched
/// target.
pub fn witness_automorphism(
    r: &RepresentationMap,
    trace: &SieveTrace,
    u: &[usize],
    v: &[usize],
) -> Result<PartialAutomorphism, WitnessError> {
    if u.len() != v.len() {
        return Err(WitnessError::LengthMismatch(u.len(), v.len()));
    }
    for seq in [u, v] {
        let mut seen = BTreeSet::new();
        for &i in seq {
            if !trace.stage3.contains(&i) {
                return Err(WitnessError::NotSurvivor(i));
            }
            if !seen.insert(i) {
                return Err(WitnessError::Repeated(i));
            }
        }
    }
    let mut map: BTreeMap<Elem, Elem> = BTreeMap::new();
    for (&uk, &vk) in u.iter().zip(v) {
        for (&x, &y) in trace.padded[vk].iter().zip(&trace.padded[uk]) {
            if let Some(&prev) = map.get(&x) {
                if prev != y {
                    return Err(WitnessError::NotWellDefined(x));
                }
            }
            map.insert(x, y);
        }
    }
    crate::structure::check_partial_automorphism(r.target_structure(), &map).map_err(WitnessError::Invalid)?;
    Ok(PartialAutomorphism::from_validated(map))
}

/// Are all repetition-free sequences of `idx` of each length up to `len`
/// (as concatenated tuples) of one type in `m`?
pub fn verify_indiscernible(m: &FiniteStructure, tuples: &[Vec<Elem>], idx: &[usize], len: usize) -> bool {
    let idx: Vec<usize> = idx.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if idx.iter().any(|&i| i >= tuples.len())
        || idx.iter().any(|&i| tuples[i].iter().any(|&x| x >= m.universe_size()))
    {
        return false;
    }
    let mut oracle = TypeOracle::new(m, TypePolicy::Orbit);
    for k in 1..=len.min(idx.len()) {
        let mut first: Option<Vec<Elem>> = None;
        let mut ok = true;
        each_arrangement(&idx, k, &mut |seq| {
            let t: Vec<Elem> = seq.iter().flat_map(|&i| tuples[i].iter().copied()).collect();
            match &first {
                None => first = Some(t),
                Some(f) => {
                    if f.len() != t.len() || !oracle.equal_unchecked(f, &t) {
                        ok = false;
                    }
                }
            }
            ok
        });
        if !ok {
            return false;
        }
    }
    true
}

/// Calls `visit` on every repetition-free sequence of length `k` from
/// `items`, stopping early when it returns false.
fn each_arrangement(items: &[usize], k: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn go(items: &[usize], k: usize, used: &mut Vec<bool>, seq: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if seq.len() == k {
            return visit(seq);
        }
        for i in 0..items.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            seq.push(items[i]);
            let go_on = go(items, k, used, seq, visit);
            seq.pop();
            used[i] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
    go(items, k, &mut vec![false; items.len()], &mut Vec::new(), visit);
}

/// Survivors of a sieve together with witnesses and a source-side check.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IndiscernibilityCertificate {
    pub selected: Vec<usize>,
    /// For survivors `i < j`, the witness exchanging their closed images.
    pub witnesses: Vec<((usize, usize), PartialAutomorphism)>,
    pub verified_len: usize,
    pub verified: bool,
}

pub fn indiscernibility_certificate(
    r: &RepresentationMap,
    trace: &SieveTrace,
    len: usize,
) -> Result<IndiscernibilityCertificate, WitnessError> {
    let s = &trace.stage3;
    let mut witnesses = Vec::new();
    for (x, &i) in s.iter().enumerate() {
        for &j in &s[x + 1..] {
            witnesses.push(((i, j), witness_automorphism(r, trace, &[i, j], &[j, i])?));
        }
    }
    Ok(IndiscernibilityCertificate {
        selected: s.clone(),
        witnesses,
        verified_len: len,
        verified: verify_indiscernible(r.source(), &trace.tuples, s, len),
    })
}

/// The formula whose order property is probed.
pub enum Phi<'a> {
    /// A source relation of arity `2n` read as `R(x̄, ȳ)`.
    Relation(String),
    Predicate(&'a dyn Fn(&[Elem], &[Elem]) -> bool),
}

impl core::fmt::Debug for Phi<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Phi::Relation(name) => f.debug_tuple("Relation").field(name).finish(),
            Phi::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {arity}, tuples need {needed}")]
    Arity { name: String, arity: usize, needed: usize },
    #[error("chain tuples have different lengths")]
    Ragged,
    #[error("not a chain: phi(a_{i}, a_{j}) is {holds} but should be {expected}")]
    NotAChain { i: usize, j: usize, holds: bool, expected: bool },
    #[error(transparent)]
    Sieve(SieveError),
}

/// Which side of the contradiction gave way.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProbeOutcome {
    /// The images of `left` and `right` share a quantifier-free type but
    /// the tuples themselves do not share a type.
    RepresentationRefuted { i: usize, j: usize, left: Vec<Elem>, right: Vec<Elem>, witness: PartialAutomorphism },
    /// `left` and `right` share a type, yet `phi` orders them differently.
    ChainRefuted { i: usize, j: usize, left: Vec<Elem>, right: Vec<Elem>, witness: PartialAutomorphism },
    Inconclusive { reason: String },
}

/// Looks for a contradiction between a representation and a chain ordered
/// by `phi`: the sieve yields `i < j` and a partial automorphism exchanging
/// the closed images of `ā_i` and `ā_j`, so `ā_i⌢ā_j` and `ā_j⌢ā_i` have
/// images of one quantifier-free type while `phi` separates them.
pub fn instability_probe(r: &RepresentationMap, phi: &Phi<'_>, chain: &[Vec<Elem>]) -> Result<ProbeOutcome, ProbeError> {
    let width = chain.first().map_or(0, Vec::len);
    if chain.iter().any(|t| t.len() != width) {
        return Err(ProbeError::Ragged);
    }
    let holds = |a: &[Elem], b: &[Elem]| -> Result<bool, ProbeError> {
        match phi {
            Phi::Predicate(p) => Ok(p(a, b)),
            Phi::Relation(name) => {
                let rel = r.source().relation(name).ok_or_else(|| ProbeError::UnknownRelation(name.clone()))?;
                if rel.arity != 2 * width {
                    return Err(ProbeError::Arity { name: name.clone(), arity: rel.arity, needed: 2 * width });
                }
                let t: Vec<Elem> = a.iter().chain(b).copied().collect();
                Ok(rel.tuples.contains(&t))
            }
        }
    };
    for (i, a) in chain.iter().enumerate() {
        for (j, b) in chain.iter().enumerate() {
            let h = holds(a, b)?;
            if h != (i < j) {
                return Err(ProbeError::NotAChain { i, j, holds: h, expected: i < j });
            }
        }
    }
    if chain.len() < 2 {
        return Ok(ProbeOutcome::Inconclusive { reason: String::from("the chain has no pair") });
    }
    let trace = match sieve(r, chain, 2) {
        Ok(t) => t,
        Err(e @ SieveError::Bottleneck { .. }) => return Ok(ProbeOutcome::Inconclusive { reason: format!("{e}") }),
        Err(e) => return Err(ProbeError::Sieve(e)),
    };
    let (i, j) = (trace.stage3[0], trace.stage3[1]);
    let witness = match witness_automorphism(r, &trace, &[j, i], &[i, j]) {
        Ok(w) => w,
        Err(e) => return Ok(ProbeOutcome::Inconclusive { reason: format!("{e}") }),
    };
    let left: Vec<Elem> = chain[i].iter().chain(&chain[j]).copied().collect();
    let right: Vec<Elem> = chain[j].iter().chain(&chain[i]).copied().collect();
    debug_assert_eq!(
        qf_type_unchecked(r.target_structure(), &r.image(&left)),
        qf_type_unchecked(r.target_structure(), &r.image(&right))
    );
    let same_type = TypeOracle::new(r.source(), TypePolicy::Orbit).equal_unchecked(&left, &right);
    Ok(if same_type {
        ProbeOutcome::ChainRefuted { i, j, left, right, witness }
    } else {
        ProbeOutcome::RepresentationRefuted { i, j, left, right, witness }
    })
}
