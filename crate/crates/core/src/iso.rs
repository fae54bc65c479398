//! Backtracking search for partial isomorphisms between substructures of one
//! finite structure.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::structure::{Elem, FiniteStructure};

/// Incrementally maintained injective partial map, checked against every
/// atom (relation or function graph) whose tuple becomes fully mapped.
#[derive(Debug, Clone)]
pub(crate) struct IsoSearch<'a> {
    s: &'a FiniteStructure,
    fwd: Vec<Option<Elem>>,
    bwd: Vec<Option<Elem>>,
}

impl<'a> IsoSearch<'a> {
    pub(crate) fn new(s: &'a FiniteStructure) -> Self {
        let n = s.universe_size();
        IsoSearch { s, fwd: vec![None; n], bwd: vec![None; n] }
    }

    pub(crate) fn image(&self, x: Elem) -> Option<Elem> {
        self.fwd[x]
    }

    pub(crate) fn is_used(&self, y: Elem) -> bool {
        self.bwd[y].is_some()
    }

    /// Adds `x -> y` if consistent. Re-adding an existing pair succeeds.
    pub(crate) fn try_assign(&mut self, x: Elem, y: Elem) -> bool {
        match (self.fwd[x], self.bwd[y]) {
            (Some(cur), _) => return cur == y,
            (None, Some(_)) => return false,
            (None, None) => {}
        }
        self.fwd[x] = Some(y);
        self.bwd[y] = Some(x);
        if self.consistent(x, y) {
            true
        } else {
            self.fwd[x] = None;
            self.bwd[y] = None;
            false
        }
    }

    pub(crate) fn unassign(&mut self, x: Elem) {
        if let Some(y) = self.fwd[x].take() {
            self.bwd[y] = None;
        }
    }

    fn consistent(&self, x: Elem, y: Elem) -> bool {
        let atoms = self.s.atoms();
        let mut buf = Vec::new();
        for &(atom, idx) in &atoms.incidence[x] {
            let t = &atoms.tuples[atom][idx];
            buf.clear();
            if t.iter().all(|e| match self.fwd[*e] {
                Some(v) => {
                    buf.push(v);
                    true
                }
                None => false,
            }) && !self.s.atom_holds(atom, &buf)
            {
                return false;
            }
        }
        for &(atom, idx) in &atoms.incidence[y] {
            let t = &atoms.tuples[atom][idx];
            buf.clear();
            if t.iter().all(|e| match self.bwd[*e] {
                Some(v) => {
                    buf.push(v);
                    true
                }
                None => false,
            }) && !self.s.atom_holds(atom, &buf)
            {
                return false;
            }
        }
        true
    }

    pub(crate) fn snapshot(&self, domain: &[Elem]) -> BTreeMap<Elem, Elem> {
        domain.iter().filter_map(|&x| self.fwd[x].map(|y| (x, y))).collect()
    }
}

/// Lazily enumerates every extension of an [`IsoSearch`] state to the
/// elements of `domain`, choosing images from `candidates` (per element, when
/// `per_element` is given). Extensions come out in lexicographic order of the
/// image sequence.
#[derive(Debug)]
pub(crate) struct ExtensionIter<'a> {
    search: IsoSearch<'a>,
    domain: Vec<Elem>,
    candidates: Vec<Elem>,
    per_element: Option<Vec<Vec<Elem>>>,
    /// Base assignments that are part of every output.
    fixed: Vec<Elem>,
    cursor: Vec<usize>,
    done: bool,
}

impl<'a> ExtensionIter<'a> {
    pub(crate) fn new(search: IsoSearch<'a>, domain: Vec<Elem>, candidates: Vec<Elem>) -> Self {
        ExtensionIter { search, domain, candidates, per_element: None, fixed: Vec::new(), cursor: vec![0], done: false }
    }

    /// Uses a separate candidate list for each domain element.
    pub(crate) fn with_candidates(search: IsoSearch<'a>, domain: Vec<Elem>, per_element: Vec<Vec<Elem>>) -> Self {
        ExtensionIter {
            search,
            domain,
            candidates: Vec::new(),
            per_element: Some(per_element),
            fixed: Vec::new(),
            cursor: vec![0],
            done: false,
        }
    }

    pub(crate) fn with_fixed(mut self, fixed: Vec<Elem>) -> Self {
        self.fixed = fixed;
        self
    }

    fn candidates_at(&self, level: usize) -> &[Elem] {
        match &self.per_element {
            Some(lists) => &lists[level],
            None => &self.candidates,
        }
    }

    fn output(&self) -> BTreeMap<Elem, Elem> {
        let mut m = self.search.snapshot(&self.domain);
        for &x in &self.fixed {
            if let Some(y) = self.search.image(x) {
                m.insert(x, y);
            }
        }
        m
    }
}

impl Iterator for ExtensionIter<'_> {
    type Item = BTreeMap<Elem, Elem>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let n = self.domain.len();
        loop {
            let level = self.cursor.len() - 1;
            if level == n {
                let out = self.output();
                self.cursor.pop();
                if n == 0 {
                    self.done = true;
                } else {
                    let x = self.domain[n - 1];
                    self.search.unassign(x);
                }
                return Some(out);
            }
            let x = self.domain[level];
            let mut advanced = false;
            while self.cursor[level] < self.candidates_at(level).len() {
                let y = self.candidates_at(level)[self.cursor[level]];
                self.cursor[level] += 1;
                if self.search.image(x).is_none() && !self.search.is_used(y) && self.search.try_assign(x, y) {
                    self.cursor.push(0);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                self.cursor.pop();
                if self.cursor.is_empty() {
                    self.done = true;
                    return None;
                }
                let prev = self.domain[level - 1];
                self.search.unassign(prev);
            }
        }
    }
}

/// Jointly refined colourings of the universe individualized by `t1` and by
/// `t2`. Returns `None` when the colour histograms diverge, which already
/// proves that no automorphism maps `t1` to `t2`.
pub(crate) fn joint_colors(s: &FiniteStructure, t1: &[Elem], t2: &[Elem]) -> Option<(Vec<u32>, Vec<u32>)> {
    let n = s.universe_size();
    let init = |t: &[Elem]| -> Vec<Vec<usize>> {
        let mut c = vec![Vec::new(); n];
        for (i, &e) in t.iter().enumerate() {
            c[e].push(i);
        }
        c
    };
    let (mut c1, mut c2) = relabel(init(t1), init(t2))?;
    let mut classes = count_classes(&c1);
    loop {
        let sig1 = signatures(s, &c1);
        let sig2 = signatures(s, &c2);
        let (n1, n2) = relabel(sig1, sig2)?;
        let k = count_classes(&n1);
        c1 = n1;
        c2 = n2;
        if k == classes {
            return Some((c1, c2));
        }
        classes = k;
    }
}

type Signature = (u32, Vec<(usize, usize, Vec<u32>)>);

fn signatures(s: &FiniteStructure, colors: &[u32]) -> Vec<Signature> {
    let atoms = s.atoms();
    (0..s.universe_size())
        .map(|x| {
            let mut inc: Vec<(usize, usize, Vec<u32>)> = Vec::new();
            for &(atom, idx) in &atoms.incidence[x] {
                let t = &atoms.tuples[atom][idx];
                let cols: Vec<u32> = t.iter().map(|&e| colors[e]).collect();
                for (pos, &e) in t.iter().enumerate() {
                    if e == x {
                        inc.push((atom, pos, cols.clone()));
                    }
                }
            }
            inc.sort();
            (colors[x], inc)
        })
        .collect()
}

fn relabel<K: Ord + Clone>(a: Vec<K>, b: Vec<K>) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut ha: BTreeMap<K, usize> = BTreeMap::new();
    let mut hb: BTreeMap<K, usize> = BTreeMap::new();
    for k in &a {
        *ha.entry(k.clone()).or_default() += 1;
    }
    for k in &b {
        *hb.entry(k.clone()).or_default() += 1;
    }
    if ha != hb {
        return None;
    }
    let ids: BTreeMap<K, u32> = ha.into_keys().enumerate().map(|(i, k)| (k, i as u32)).collect();
    Some((a.iter().map(|k| ids[k]).collect(), b.iter().map(|k| ids[k]).collect()))
}

fn count_classes(c: &[u32]) -> usize {
    let mut v: Vec<u32> = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Searches for an automorphism of `s` sending `t1` to `t2` position-wise.
pub(crate) fn automorphism_extending(s: &FiniteStructure, t1: &[Elem], t2: &[Elem]) -> Option<BTreeMap<Elem, Elem>> {
    let mut search = IsoSearch::new(s);
    for (&x, &y) in t1.iter().zip(t2) {
        if !search.try_assign(x, y) {
            return None;
        }
    }
    let (c1, c2) = joint_colors(s, t1, t2)?;
    let n = s.universe_size();
    let mut domain: Vec<Elem> = (0..n).filter(|&x| search.image(x).is_none()).collect();
    // smallest colour classes first
    let mut class_size: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in &c1 {
        *class_size.entry(c).or_default() += 1;
    }
    domain.sort_by_key(|&x| (class_size[&c1[x]], x));
    let per_element: Vec<Vec<Elem>> =
        domain.iter().map(|&x| (0..n).filter(|&y| c2[y] == c1[x]).collect()).collect();
    let fixed: Vec<Elem> = t1.to_vec();
    ExtensionIter::with_candidates(search, domain, per_element).with_fixed(fixed).next()
}
