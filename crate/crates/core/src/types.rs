//! Full-type equality on finite structures.
//!
//! Two oracles are offered. [`TypePolicy::Orbit`] is exact: tuples have the
//! same complete type in a finite structure iff an automorphism maps one onto
//! the other. [`TypePolicy::EfDepth`] plays the back-and-forth game for a
//! bounded number of rounds; it can only conflate tuples that the orbit
//! oracle separates, never the converse, and it agrees with the orbit oracle
//! once the depth reaches the universe size.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::iso::{automorphism_extending, IsoSearch};
use crate::structure::{Elem, FiniteStructure, StructureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TypePolicy {
    Orbit,
    EfDepth(usize),
}

/// True iff `t1` and `t2` have the same type under `policy`.
pub fn type_equal(s: &FiniteStructure, t1: &[Elem], t2: &[Elem], policy: TypePolicy) -> Result<bool, StructureError> {
    TypeOracle::new(s, policy).equal(t1, t2)
}

/// Searches for an automorphism of `s` mapping `t1` onto `t2`.
pub fn find_automorphism(s: &FiniteStructure, t1: &[Elem], t2: &[Elem]) -> Result<Option<BTreeMap<Elem, Elem>>, StructureError> {
    check_pair(s, t1, t2)?;
    Ok(automorphism_extending(s, t1, t2))
}

fn check_pair(s: &FiniteStructure, t1: &[Elem], t2: &[Elem]) -> Result<(), StructureError> {
    if t1.len() != t2.len() {
        return Err(StructureError::LengthMismatch { left: t1.len(), right: t2.len() });
    }
    s.check_elements(t1)?;
    s.check_elements(t2)
}

/// A type-equality oracle bound to one structure. Game positions are
/// memoized across queries, so reuse one oracle for many comparisons.
#[derive(Debug, Clone)]
pub struct TypeOracle<'a> {
    s: &'a FiniteStructure,
    policy: TypePolicy,
    memo: BTreeMap<(Vec<(Elem, Elem)>, usize), bool>,
}

impl<'a> TypeOracle<'a> {
    pub fn new(s: &'a FiniteStructure, policy: TypePolicy) -> Self {
        TypeOracle { s, policy, memo: BTreeMap::new() }
    }

    pub fn structure(&self) -> &'a FiniteStructure {
        self.s
    }

    pub fn policy(&self) -> TypePolicy {
        self.policy
    }

    pub fn equal(&mut self, t1: &[Elem], t2: &[Elem]) -> Result<bool, StructureError> {
        check_pair(self.s, t1, t2)?;
        Ok(self.equal_unchecked(t1, t2))
    }

    pub(crate) fn equal_unchecked(&mut self, t1: &[Elem], t2: &[Elem]) -> bool {
        if t1 == t2 {
            return true;
        }
        match self.policy {
            TypePolicy::Orbit => automorphism_extending(self.s, t1, t2).is_some(),
            TypePolicy::EfDepth(d) => {
                let mut pairs: Vec<(Elem, Elem)> = t1.iter().copied().zip(t2.iter().copied()).collect();
                pairs.sort_unstable();
                pairs.dedup();
                self.survives(pairs, d)
            }
        }
    }

    /// Does the duplicator survive `rounds` more rounds from `pairs`?
    fn survives(&mut self, pairs: Vec<(Elem, Elem)>, rounds: usize) -> bool {
        let n = self.s.universe_size();
        let mut search = IsoSearch::new(self.s);
        for &(x, y) in &pairs {
            if !search.try_assign(x, y) {
                return false;
            }
        }
        // after every element is matched, further rounds change nothing
        let rounds = rounds.min(n - pairs.len());
        if rounds == 0 {
            return true;
        }
        let key = (pairs, rounds);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let (pairs, _) = &key;
        let dom: Vec<bool> = (0..n).map(|x| search.image(x).is_some()).collect();
        let rng: Vec<bool> = (0..n).map(|y| search.is_used(y)).collect();
        let extend = |x: Elem, y: Elem| {
            let mut p = pairs.clone();
            let at = p.binary_search(&(x, y)).unwrap_err();
            p.insert(at, (x, y));
            p
        };
        let mut result = true;
        // spoiler plays on the left
        'left: for x in (0..n).filter(|&x| !dom[x]) {
            for y in (0..n).filter(|&y| !rng[y]) {
                if self.survives(extend(x, y), rounds - 1) {
                    continue 'left;
                }
            }
            result = false;
            break;
        }
        if result {
            'right: for y in (0..n).filter(|&y| !rng[y]) {
                for x in (0..n).filter(|&x| !dom[x]) {
                    if self.survives(extend(x, y), rounds - 1) {
                        continue 'right;
                    }
                }
                result = false;
                break;
            }
        }
        self.memo.insert(key, result);
        result
    }

    /// Smallest number of rounds in which the spoiler wins from `(t1, t2)`,
    /// if any up to `max_rounds`.
    pub fn spoiler_depth(&mut self, t1: &[Elem], t2: &[Elem], max_rounds: usize) -> Option<usize> {
        let mut pairs: Vec<(Elem, Elem)> = t1.iter().copied().zip(t2.iter().copied()).collect();
        pairs.sort_unstable();
        pairs.dedup();
        (0..=max_rounds).find(|&d| !self.survives(pairs.clone(), d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Relation;
    use alloc::vec;

    pub(crate) fn eq_classes(classes: usize, size: usize) -> FiniteStructure {
        let mut e = Vec::new();
        for c in 0..classes {
            for i in 0..size {
                for j in 0..size {
                    e.push(vec![size * c + i, size * c + j]);
                }
            }
        }
        FiniteStructure::new(classes * size, vec![Relation::new("E", 2, e)], vec![]).unwrap()
    }

    fn linear_order(n: usize) -> FiniteStructure {
        let lt = (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j]));
        FiniteStructure::new(n, vec![Relation::new("<", 2, lt)], vec![]).unwrap()
    }

    #[test]
    fn class_swapping_automorphism() {
        let s = eq_classes(3, 3);
        assert!(type_equal(&s, &[1, 2], &[4, 5], TypePolicy::Orbit).unwrap());
        assert!(!type_equal(&s, &[1, 2], &[1, 4], TypePolicy::Orbit).unwrap());
        let h = find_automorphism(&s, &[1, 2], &[4, 5]).unwrap().unwrap();
        assert_eq!(h.len(), 9);
        assert_eq!((h[&1], h[&2]), (4, 5));
    }

    #[test]
    fn linear_order_is_rigid() {
        let s = linear_order(6);
        assert!(!type_equal(&s, &[1], &[2], TypePolicy::EfDepth(2)).unwrap());
        assert!(!type_equal(&s, &[1], &[2], TypePolicy::Orbit).unwrap());
        // one round cannot tell 1 from 2: both have elements on either side
        assert!(type_equal(&s, &[1], &[2], TypePolicy::EfDepth(1)).unwrap());
        assert!(type_equal(&s, &[3], &[3], TypePolicy::Orbit).unwrap());
    }

    #[test]
    fn spoiler_depth_matches_games() {
        let s = linear_order(6);
        let mut o = TypeOracle::new(&s, TypePolicy::EfDepth(6));
        assert_eq!(o.spoiler_depth(&[1], &[2], 6), Some(2));
        assert_eq!(o.spoiler_depth(&[0], &[1], 6), Some(1));
        assert_eq!(o.spoiler_depth(&[2], &[2], 6), None);
    }

    #[test]
    fn length_mismatch_rejected() {
        let s = linear_order(3);
        assert!(matches!(
            type_equal(&s, &[0], &[0, 1], TypePolicy::Orbit),
            Err(StructureError::LengthMismatch { left: 1, right: 2 })
        ));
    }
}
