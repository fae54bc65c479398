//! Pigeonhole fibers of regressive maps and sunflower (Δ-system)
//! certificates for families of finite sequences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Families with at most this many candidates per root are searched
/// exhaustively.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeltaError {
    #[error("the family is empty")]
    EmptyFamily,
    #[error("target {0} is below 2")]
    TargetTooSmall(usize),
    #[error("no sunflower of size {target} exists; the largest has {best}")]
    NotFound { best: usize, target: usize },
    #[error("greedy search found at most {best} of the {target} requested; result inconclusive")]
    Inconclusive { best: usize, target: usize },
    #[error("f({at}) = {value} is not below {at}")]
    NotRegressive { at: usize, value: usize },
    #[error("the domain is empty")]
    EmptyDomain,
}

/// Largest fiber of a regressive map on `1..=n`, given as `f[i - 1] = f(i)`.
/// Ties go to the smallest value.
pub fn regressive_fiber(f: &[usize]) -> Result<(usize, BTreeSet<usize>), DeltaError> {
    if f.is_empty() {
        return Err(DeltaError::EmptyDomain);
    }
    let mut fibers: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, &v) in f.iter().enumerate() {
        let at = i + 1;
        if v >= at {
            return Err(DeltaError::NotRegressive { at, value: v });
        }
        fibers.entry(v).or_default().insert(at);
    }
    let mut best: Option<(usize, BTreeSet<usize>)> = None;
    for (v, fiber) in fibers {
        if best.as_ref().is_none_or(|(_, b)| fiber.len() > b.len()) {
            best = Some((v, fiber));
        }
    }
    Ok(best.expect("nonempty domain"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

/// Evidence that the `selected` members of a family form a Δ-system.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SunflowerCertificate<V> {
    /// Family indices, ascending.
    pub selected: Vec<usize>,
    /// The common pairwise intersection, sorted.
    pub root: Vec<V>,
    pub common_length: usize,
    /// Positions where all selected sequences agree.
    pub agree_idx: Vec<usize>,
    /// Position `i` is labelled with the first position holding the same
    /// value; the pattern is shared by all selected sequences.
    pub rep_equiv: Vec<usize>,
    pub mode: SearchMode,
}

impl<V> SunflowerCertificate<V> {
    /// The repetition equivalence as a set of position pairs.
    pub fn rep_equiv_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for i in 0..self.rep_equiv.len() {
            for j in 0..self.rep_equiv.len() {
                if self.rep_equiv[i] == self.rep_equiv[j] {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    /// Classes of the repetition equivalence, each sorted.
    pub fn rep_classes(&self) -> Vec<Vec<usize>> {
        let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.rep_equiv.iter().enumerate() {
            by.entry(l).or_default().push(i);
        }
        by.into_values().collect()
    }
}

/// Equality pattern of a sequence: each position labelled by the first
/// position carrying the same value.
pub fn equality_pattern<V: PartialEq>(t: &[V]) -> Vec<usize> {
    (0..t.len()).map(|i| (0..=i).find(|&j| t[j] == t[i]).unwrap_or(i)).collect()
}

/// Why a certificate does not match its family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateDefect {
    TooFew,
    BadIndex(usize),
    Length(usize),
    Intersection(usize, usize),
    Agreement,
    RootMismatch,
    Pattern(usize),
}

/// Rechecks a certificate directly from the family.
pub fn validate_certificate<V: Ord + Clone>(family: &[Vec<V>], cert: &SunflowerCertificate<V>) -> Result<(), CertificateDefect> {
    if cert.selected.len() < 2 {
        return Err(CertificateDefect::TooFew);
    }
    let mut members = Vec::new();
    for &i in &cert.selected {
        members.push(family.get(i).ok_or(CertificateDefect::BadIndex(i))?);
    }
    for (&i, t) in cert.selected.iter().zip(&members) {
        if t.len() != cert.common_length {
            return Err(CertificateDefect::Length(i));
        }
    }
    let root: BTreeSet<&V> = cert.root.iter().collect();
    let sets: Vec<BTreeSet<&V>> = members.iter().map(|t| t.iter().collect()).collect();
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let common: BTreeSet<&V> = sets[a].intersection(&sets[b]).copied().collect();
            if common != root {
                return Err(CertificateDefect::Intersection(cert.selected[a], cert.selected[b]));
            }
        }
    }
    let agree: Vec<usize> =
        (0..cert.common_length).filter(|&i| members.iter().all(|t| t[i] == members[0][i])).collect();
    if agree != cert.agree_idx {
        return Err(CertificateDefect::Agreement);
    }
    let at_agree: BTreeSet<&V> = agree.iter().map(|&i| &members[0][i]).collect();
    if at_agree != root {
        return Err(CertificateDefect::RootMismatch);
    }
    for (&i, t) in cert.selected.iter().zip(&members) {
        if equality_pattern(t) != cert.rep_equiv {
            return Err(CertificateDefect::Pattern(i));
        }
    }
    Ok(())
}

/// Finds a largest Δ-system among sequences of one length and one equality
/// pattern, returning it when it has at least `target` members.
///
/// Candidate roots are read off the agreement positions of pairs of
/// members. For each candidate the sequences extending it are collected and
/// a largest subfamily with pairwise disjoint petals is chosen: exactly
/// when there are at most [`DEFAULT_EXHAUSTIVE_LIMIT`] of them, greedily
/// otherwise.
pub fn delta_system<V: Ord + Clone>(family: &[Vec<V>], target: usize) -> Result<SunflowerCertificate<V>, DeltaError> {
    delta_system_with_limit(family, target, DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn delta_system_with_limit<V: Ord + Clone>(
    family: &[Vec<V>],
    target: usize,
    exhaustive_limit: usize,
) -> Result<SunflowerCertificate<V>, DeltaError> {
    if family.is_empty() {
        return Err(DeltaError::EmptyFamily);
    }
    if target < 2 {
        return Err(DeltaError::TargetTooSmall(target));
    }
    // pigeonhole on (length, equality pattern)
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for (i, t) in family.iter().enumerate() {
        groups.entry((t.len(), equality_pattern(t))).or_default().push(i);
    }
    let mut best: Option<(Vec<usize>, SearchMode)> = None;
    let mut used_greedy = false;
    for ((len, _), members) in &groups {
        if members.len() < 2 {
            continue;
        }
        let mut candidates: BTreeSet<(Vec<usize>, Vec<V>)> = BTreeSet::new();
        for (x, &s) in members.iter().enumerate() {
            for &t in &members[x + 1..] {
                let u: Vec<usize> = (0..*len).filter(|&i| family[s][i] == family[t][i]).collect();
                let r: Vec<V> = u.iter().map(|&i| family[s][i].clone()).collect();
                candidates.insert((u, r));
            }
        }
        for (u, r) in candidates {
            let sub: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&t| u.iter().zip(&r).all(|(&i, v)| family[t][i] == *v))
                .collect();
            let petals: Vec<BTreeSet<&V>> = sub
                .iter()
                .map(|&t| (0..*len).filter(|i| !u.contains(i)).map(|i| &family[t][i]).collect())
                .collect();
            let (chosen, mode) = disjoint_packing(&petals, exhaustive_limit);
            used_greedy |= mode == SearchMode::Greedy;
            if best.as_ref().is_none_or(|(b, _)| chosen.len() > b.len()) {
                best = Some((chosen.into_iter().map(|k| sub[k]).collect(), mode));
            }
        }
    }
    let (selected, mode) = best.unwrap_or((vec![0], SearchMode::Exhaustive));
    if selected.len() < target {
        let best = selected.len();
        return Err(if used_greedy { DeltaError::Inconclusive { best, target } } else { DeltaError::NotFound { best, target } });
    }
    Ok(certify(family, selected, mode))
}

/// Builds the certificate fields for a selection already known to be a
/// Δ-system with a common length and pattern.
fn certify<V: Ord + Clone>(family: &[Vec<V>], mut selected: Vec<usize>, mode: SearchMode) -> SunflowerCertificate<V> {
    selected.sort_unstable();
    let first = &family[selected[0]];
    let common_length = first.len();
    let agree_idx: Vec<usize> =
        (0..common_length).filter(|&i| selected.iter().all(|&t| family[t][i] == first[i])).collect();
    let root: BTreeSet<V> = agree_idx.iter().map(|&i| first[i].clone()).collect();
    SunflowerCertificate {
        selected,
        root: root.into_iter().collect(),
        common_length,
        agree_idx,
        rep_equiv: equality_pattern(first),
        mode,
    }
}

/// A largest subfamily of pairwise disjoint sets (indices ascending).
fn disjoint_packing<T: Ord>(sets: &[BTreeSet<T>], exhaustive_limit: usize) -> (Vec<usize>, SearchMode) {
    let n = sets.len();
    let conflict = |a: usize, b: usize| sets[a].intersection(&sets[b]).next().is_some();
    if n <= exhaustive_limit && n <= 64 {
        let mut adj = vec![0u64; n];
        for (a, row) in adj.iter_mut().enumerate() {
            for b in 0..n {
                if a != b && conflict(a, b) {
                    *row |= 1 << b;
                }
            }
        }
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut best = 0u64;
        max_independent(&adj, all, 0, &mut best);
        ((0..n).filter(|&i| best >> i & 1 == 1).collect(), SearchMode::Exhaustive)
    } else {
        let mut chosen: Vec<usize> = Vec::new();
        for a in 0..n {
            if chosen.iter().all(|&b| !conflict(a, b)) {
                chosen.push(a);
            }
        }
        (chosen, SearchMode::Greedy)
    }
}

/// Branch and bound for a maximum independent set; keeps the first optimum
/// in the branching order (lowest vertices taken first).
fn max_independent(adj: &[u64], candidates: u64, current: u64, best: &mut u64) {
    if candidates == 0 {
        if current.count_ones() > best.count_ones() {
            *best = current;
        }
        return;
    }
    if current.count_ones() + candidates.count_ones() <= best.count_ones() {
        return;
    }
    let v = candidates.trailing_zeros() as usize;
    let bit = 1u64 << v;
    max_independent(adj, candidates & !bit & !adj[v], current | bit, best);
    max_independent(adj, candidates & !bit, current, best);
}

/// A Δ-system certificate for a family of sets, together with the listing
/// of every member that the certificate refers to: the root first (sorted),
/// then the rest (sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SetSunflower<V> {
    pub certificate: SunflowerCertificate<V>,
    pub listing: Vec<Vec<V>>,
}

/// Δ-system search for a family of finite sets.
///
/// Sets are grouped by size. Candidate roots are pairwise intersections;
/// for each, a largest subfamily with disjoint petals is chosen as in
/// [`delta_system`]. When a greedy choice falls short, the classical
/// constructive argument (a maximal disjoint subfamily, else recurse on the
/// most frequent element) is tried as well, so families above the
/// Erdős–Rado bound `k!(target-1)^k` always succeed.
pub fn delta_system_for_sets<V: Ord + Clone>(family: &[BTreeSet<V>], target: usize) -> Result<SetSunflower<V>, DeltaError> {
    if family.is_empty() {
        return Err(DeltaError::EmptyFamily);
    }
    if target < 2 {
        return Err(DeltaError::TargetTooSmall(target));
    }
    let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in family.iter().enumerate() {
        by_size.entry(s.len()).or_default().push(i);
    }
    let mut best: Option<(Vec<usize>, BTreeSet<V>, SearchMode)> = None;
    let mut used_greedy = false;
    for members in by_size.values() {
        if members.len() < 2 {
            continue;
        }
        let mut roots: BTreeSet<BTreeSet<V>> = BTreeSet::new();
        for (x, &s) in members.iter().enumerate() {
            for &t in &members[x + 1..] {
                roots.insert(family[s].intersection(&family[t]).cloned().collect());
            }
        }
        for root in roots {
            let sub: Vec<usize> = members.iter().copied().filter(|&t| family[t].is_superset(&root)).collect();
            let petals: Vec<BTreeSet<&V>> =
                sub.iter().map(|&t| family[t].iter().filter(|v| !root.contains(*v)).collect()).collect();
            let (chosen, mode) = disjoint_packing(&petals, DEFAULT_EXHAUSTIVE_LIMIT);
            used_greedy |= mode == SearchMode::Greedy;
            if best.as_ref().is_none_or(|(b, _, _)| chosen.len() > b.len()) {
                best = Some((chosen.into_iter().map(|k| sub[k]).collect(), root, mode));
            }
        }
        if used_greedy && best.as_ref().is_none_or(|(b, _, _)| b.len() < target) {
            if let Some((sel, root)) = constructive(family, members.clone(), BTreeSet::new(), target) {
                best = Some((sel, root, SearchMode::Greedy));
            }
        }
    }
    let (selected, root, mode) = best.unwrap_or((vec![0], BTreeSet::new(), SearchMode::Exhaustive));
    if selected.len() < target {
        let best = selected.len();
        return Err(if used_greedy { DeltaError::Inconclusive { best, target } } else { DeltaError::NotFound { best, target } });
    }
    let listing: Vec<Vec<V>> = family
        .iter()
        .map(|s| {
            let mut l: Vec<V> = root.iter().filter(|v| s.contains(*v)).cloned().collect();
            l.extend(s.iter().filter(|v| !root.contains(*v)).cloned());
            l
        })
        .collect();
    let certificate = certify(&listing, selected, mode);
    Ok(SetSunflower { certificate, listing })
}

/// The constructive Erdős–Rado recursion on sets that all contain `core`.
fn constructive<V: Ord + Clone>(
    family: &[BTreeSet<V>],
    members: Vec<usize>,
    core: BTreeSet<V>,
    target: usize,
) -> Option<(Vec<usize>, BTreeSet<V>)> {
    let mut disjoint: Vec<usize> = Vec::new();
    let mut used: BTreeSet<V> = BTreeSet::new();
    for &t in &members {
        let petal: Vec<&V> = family[t].iter().filter(|v| !core.contains(*v)).collect();
        if petal.iter().all(|v| !used.contains(*v)) {
            used.extend(petal.into_iter().cloned());
            disjoint.push(t);
            if disjoint.len() == target {
                return Some((disjoint, core));
            }
        }
    }
    // every member meets `used`; recurse on the most frequent element
    let mut counts: BTreeMap<&V, usize> = BTreeMap::new();
    for &t in &members {
        for v in family[t].iter().filter(|v| used.contains(*v)) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let (y, _) = counts.into_iter().fold(None, |acc: Option<(&V, usize)>, (v, c)| match acc {
        Some((_, bc)) if bc >= c => acc,
        _ => Some((v, c)),
    })?;
    let next: Vec<usize> = members.iter().copied().filter(|&t| family[t].contains(y)).collect();
    let mut core = core;
    core.insert(y.clone());
    if next.len() < target {
        return None;
    }
    constructive(family, next, core, target)
}
