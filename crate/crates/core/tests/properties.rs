//! Randomized properties, each against a brute-force oracle written here.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use repset_core::delta::{delta_system_for_sets, regressive_fiber, validate_certificate};
use repset_core::enrichment::{f_closure, validate_enrichment};
use repset_core::representation::{check_representation, tuples_up_to, CheckerPolicy, Separation};
use repset_core::structure::{qf_type, Relation};
use repset_core::terms::{build_terms, AlgebraSignature, Symbol, Term, TermId};
use repset_core::types::{type_equal, TypeOracle, TypePolicy};
use repset_core::{Carrier, Enrichment, FiniteStructure, RepresentationMap, UnaryFn};

/// A universe of size `n` with one binary relation given row by row.
fn digraph(n: usize, edges: &[bool]) -> FiniteStructure {
    let tuples = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| edges[x * n + y]);
    FiniteStructure::new(n, vec![Relation::new("R", 2, tuples.map(|(x, y)| vec![x, y]))], vec![]).unwrap()
}

fn digraph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<bool>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), proptest::collection::vec(any::<bool>(), n * n)))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..n {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

fn automorphisms(n: usize, edges: &[bool]) -> Vec<Vec<usize>> {
    permutations(n)
        .into_iter()
        .filter(|s| (0..n).all(|x| (0..n).all(|y| edges[x * n + y] == edges[s[x] * n + s[y]])))
        .collect()
}

fn same_orbit(autos: &[Vec<usize>], a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && autos.iter().any(|s| a.iter().zip(b).all(|(&x, &y)| s[x] == y))
}

/// Atomic diagram of a tuple in a digraph.
fn brute_qf(n: usize, edges: &[bool], t: &[usize]) -> Vec<(bool, bool)> {
    t.iter()
        .flat_map(|&x| t.iter().map(move |&y| (x == y, edges[x * n + y])))
        .collect()
}

fn tuple_pair(n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=3usize).prop_flat_map(move |len| {
        (proptest::collection::vec(0..n, len), proptest::collection::vec(0..n, len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn qf_types_match_the_atomic_diagram(((n, edges), seed) in (digraph_strategy(5), any::<u64>())) {
        let s = digraph(n, &edges);
        let mut rng = seed;
        let mut pick = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (rng >> 33) as usize % n };
        let t1: Vec<usize> = (0..3).map(|_| pick()).collect();
        let t2: Vec<usize> = (0..3).map(|_| pick()).collect();
        let same = qf_type(&s, &t1).unwrap() == qf_type(&s, &t2).unwrap();
        prop_assert_eq!(same, brute_qf(n, &edges, &t1) == brute_qf(n, &edges, &t2));
    }

    #[test]
    fn qf_types_are_invariant_under_isomorphism(
        (n, edges, perm, t) in digraph_strategy(5).prop_flat_map(|(n, e)| {
            (Just(n), Just(e), Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), proptest::collection::vec(0..n, 1..=3))
        })
    ) {
        let s = digraph(n, &edges);
        let mut moved = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                moved[perm[x] * n + perm[y]] = edges[x * n + y];
            }
        }
        let s2 = digraph(n, &moved);
        let t2: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
        prop_assert_eq!(qf_type(&s, &t).unwrap(), qf_type(&s2, &t2).unwrap());
    }

    #[test]
    fn orbit_and_game_oracles_agree_with_brute_force(
        (n, edges, (t1, t2)) in digraph_strategy(5).prop_flat_map(|(n, e)| (Just(n), Just(e), tuple_pair(n)))
    ) {
        let s = digraph(n, &edges);
        let autos = automorphisms(n, &edges);
        let orbit = type_equal(&s, &t1, &t2, TypePolicy::Orbit).unwrap();
        prop_assert_eq!(orbit, same_orbit(&autos, &t1, &t2));
        let ef: Vec<bool> = (0..=n).map(|d| type_equal(&s, &t1, &t2, TypePolicy::EfDepth(d)).unwrap()).collect();
        // deeper games separate at least as much, orbit equality survives every depth
        for d in 1..=n {
            prop_assert!(!ef[d] || ef[d - 1]);
        }
        if orbit {
            prop_assert!(ef.iter().all(|&b| b));
        }
        prop_assert_eq!(ef[n], orbit);
        let depth = TypeOracle::new(&s, TypePolicy::EfDepth(n)).spoiler_depth(&t1, &t2, n);
        prop_assert_eq!(depth, ef.iter().position(|&b| !b));
    }

    #[test]
    fn term_count_matches_enumeration(
        arities in proptest::collection::vec(0..=2usize, 0..=3),
        base in 0..=2usize,
        depth in 0..=3usize,
    ) {
        let symbols: Vec<Symbol> = arities.iter().enumerate().map(|(i, &a)| Symbol::new(format!("f{i}"), a)).collect();
        let sig = AlgebraSignature::new(symbols, base, depth);
        // brute force: terms as strings, level by level
        let leaves: BTreeSet<String> = (0..base).map(|i| format!("x{i}"))
            .chain(arities.iter().enumerate().filter(|(_, &a)| a == 0).map(|(i, _)| format!("f{i}()")))
            .collect();
        let mut level = leaves.clone();
        let mut overflow = false;
        for _ in 0..depth {
            let mut next = leaves.clone();
            for (i, &a) in arities.iter().enumerate().filter(|(_, &a)| a > 0) {
                let mut args: Vec<Vec<String>> = vec![vec![]];
                for _ in 0..a {
                    args = args.iter().flat_map(|p| level.iter().map(move |t| { let mut q = p.clone(); q.push(t.clone()); q })).collect();
                }
                for p in args {
                    next.insert(format!("f{i}({})", p.join(",")));
                }
            }
            level = next;
            if level.len() > 20_000 {
                overflow = true;
                break;
            }
        }
        prop_assume!(!overflow);
        let count = repset_core::terms::term_count(&sig).unwrap();
        prop_assert_eq!(count, level.len() as u128);
        prop_assert_eq!(build_terms(sig, 1 << 20).unwrap().len(), level.len());
    }

    #[test]
    fn fibers_match_brute_force(f in (1..=12usize).prop_flat_map(|n| {
        (1..=n).map(|i| (0..i).boxed()).collect::<Vec<_>>()
    })) {
        let (v, fiber) = regressive_fiber(&f).unwrap();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &x in &f {
            *counts.entry(x).or_default() += 1;
        }
        let best = *counts.values().max().unwrap();
        let want = *counts.iter().find(|(_, &c)| c == best).unwrap().0;
        prop_assert_eq!(v, want);
        let expected: BTreeSet<usize> = (1..=f.len()).filter(|&i| f[i - 1] == want).collect();
        prop_assert_eq!(fiber, expected);
    }

    #[test]
    fn large_set_families_contain_sunflowers(
        (k, target, seed) in (1..=3usize, 2..=4usize, any::<u64>())
    ) {
        let factorial = (1..=k).product::<usize>();
        let need = factorial * (target - 1).pow(k as u32) + 1;
        // all k-subsets of a universe large enough, shuffled by the seed
        let mut u = k;
        while binomial(u, k) < need {
            u += 1;
        }
        let mut all: Vec<BTreeSet<usize>> = k_subsets(u, k);
        let mut rng = seed;
        for i in (1..all.len()).rev() {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            all.swap(i, (rng >> 33) as usize % (i + 1));
        }
        all.truncate(need);
        let found = delta_system_for_sets(&all, target).unwrap();
        prop_assert!(found.certificate.selected.len() >= target);
        prop_assert_eq!(validate_certificate(&found.listing, &found.certificate), Ok(()));
        // recheck the sunflower on the sets themselves
        let chosen: Vec<&BTreeSet<usize>> = found.certificate.selected.iter().map(|&i| &all[i]).collect();
        let root: BTreeSet<usize> = found.certificate.root.iter().copied().collect();
        for a in 0..chosen.len() {
            for b in a + 1..chosen.len() {
                prop_assert_eq!(&chosen[a].intersection(chosen[b]).copied().collect::<BTreeSet<_>>(), &root);
            }
        }
    }

    #[test]
    fn f_closure_is_closed_and_bounded(
        (levels, maps, seed) in (1..=8usize).prop_flat_map(|n| (
            proptest::collection::vec(0..=3usize, n),
            proptest::collection::vec(proptest::collection::vec(any::<u16>(), n), 1..=3),
            proptest::collection::vec(any::<bool>(), n),
        ))
    ) {
        let n = levels.len();
        // each function sends x to some strictly lower element, or nowhere
        let fns: Vec<UnaryFn> = maps.iter().enumerate().map(|(i, pick)| {
            let pairs = (0..n).filter_map(|x| {
                let lower: Vec<usize> = (0..n).filter(|&y| levels[y] < levels[x]).collect();
                (!lower.is_empty() && pick[x] % 4 != 0).then(|| (x, lower[pick[x] as usize % lower.len()]))
            });
            UnaryFn::new(format!("F{i}"), pairs)
        }).collect();
        let k = fns.len();
        let e = Enrichment::new(Carrier::Structure(FiniteStructure::pure_set(n)), levels.clone(), fns).unwrap();
        prop_assert!(validate_enrichment(&e).is_empty());
        let s: BTreeSet<usize> = (0..n).filter(|&x| seed[x]).collect();
        let c = f_closure(&e, &s);
        prop_assert!(s.is_subset(&c));
        for g in e.unary_fns() {
            for x in &c {
                if let Some(y) = g.map.get(x) {
                    prop_assert!(c.contains(y));
                }
            }
        }
        prop_assert_eq!(&f_closure(&e, &c), &c);
        let bound: usize = s.iter().map(|&x| (0..=levels[x]).map(|i| k.pow(i as u32)).sum::<usize>()).sum();
        prop_assert!(c.len() <= bound.max(s.len()));
    }

    #[test]
    fn subterm_closure_is_monotone_and_idempotent(
        (picks, extra) in (proptest::collection::vec(any::<u16>(), 0..6), proptest::collection::vec(any::<u16>(), 0..6))
    ) {
        let a = build_terms(AlgebraSignature::new(vec![Symbol::new("f", 1), Symbol::new("g", 2)], 2, 2), 1 << 10).unwrap();
        let ids = |p: &[u16]| p.iter().map(|&i| TermId(u32::from(i) % a.len() as u32)).collect::<Vec<_>>();
        let x = ids(&picks);
        let mut y = x.clone();
        y.extend(ids(&extra));
        let cx = a.subterm_closure(&x).unwrap();
        let cy = a.subterm_closure(&y).unwrap();
        prop_assert!(x.iter().all(|t| cx.contains(t)));
        prop_assert!(cx.is_subset(&cy));
        let again: Vec<TermId> = cx.iter().copied().collect();
        prop_assert_eq!(a.subterm_closure(&again).unwrap(), cx.clone());
        for t in &cx {
            prop_assert!(a.children(*t).iter().all(|c| cx.contains(c)));
        }
    }

    #[test]
    fn partial_maps_extend_homomorphically(g in proptest::collection::vec(0..3usize, 3)) {
        let a = build_terms(AlgebraSignature::new(vec![Symbol::new("f", 1), Symbol::new("g", 2)], 3, 2), 1 << 10).unwrap();
        let m: BTreeMap<TermId, TermId> = (0..3).map(|i| (a.base_term(i).unwrap(), a.base_term(g[i]).unwrap())).collect();
        for id in 0..a.len() {
            let t = TermId(id as u32);
            let image = a.apply_partial_map(&m, t).unwrap();
            prop_assert_eq!(a.depth(image).unwrap(), a.depth(t).unwrap());
            if let Term::App(sym, ch) = a.term(t).unwrap() {
                let mapped: Vec<TermId> = ch.iter().map(|c| a.apply_partial_map(&m, *c).unwrap()).collect();
                prop_assert_eq!(Some(image), a.lookup(&Term::App(*sym, mapped)));
            }
        }
    }

    #[test]
    fn reports_list_exactly_the_separated_representatives(
        (n, edges, map) in digraph_strategy(4).prop_flat_map(|(n, e)| (Just(n), Just(e), proptest::collection::vec(0..n, n)))
    ) {
        let source = digraph(n, &edges);
        let target = Enrichment::trivial(Carrier::Structure(FiniteStructure::pure_set(n)));
        let r = RepresentationMap::new(source.clone(), target, map.clone()).unwrap();
        let report = check_representation(&r, &CheckerPolicy::orbit(2)).unwrap();
        let autos = automorphisms(n, &edges);
        let tuples = tuples_up_to(n, 2);
        prop_assert_eq!(report.tuples_checked, tuples.len() as u64);
        // images in a pure set share a qf type iff they share the equality pattern
        let pattern = |t: &[usize]| {
            let img: Vec<usize> = t.iter().map(|&x| map[x]).collect();
            img.iter().map(|x| img.iter().position(|y| y == x).unwrap()).collect::<Vec<_>>()
        };
        let mut classes: BTreeMap<Vec<usize>, Vec<&Vec<usize>>> = BTreeMap::new();
        for t in &tuples {
            classes.entry(pattern(t)).or_default().push(t);
        }
        let mut expected: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
        for class in classes.values() {
            let mut reps: Vec<&Vec<usize>> = Vec::new();
            for t in class {
                if !reps.iter().any(|r| same_orbit(&autos, r, t)) {
                    reps.push(t);
                }
            }
            for a in 0..reps.len() {
                for b in a + 1..reps.len() {
                    let (x, y) = (reps[a].clone(), reps[b].clone());
                    expected.insert(if x <= y { (x, y) } else { (y, x) });
                }
            }
        }
        let got: BTreeSet<(Vec<usize>, Vec<usize>)> = report.violations.iter().map(|v| {
            let (x, y) = (v.left.clone(), v.right.clone());
            if x <= y { (x, y) } else { (y, x) }
        }).collect();
        prop_assert_eq!(got.len(), report.violations.len());
        prop_assert_eq!(&got, &expected);
        for v in &report.violations {
            prop_assert!(report.contains_pair(&v.right, &v.left));
            prop_assert_eq!(pattern(&v.left), pattern(&v.right));
            prop_assert!(!same_orbit(&autos, &v.left, &v.right));
            let qf_differs = brute_qf(n, &edges, &v.left) != brute_qf(n, &edges, &v.right);
            prop_assert_eq!(v.separation == Separation::SourceQfDiffers, qf_differs);
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn k_subsets(u: usize, k: usize) -> Vec<BTreeSet<usize>> {
    (0u32..1 << u).filter(|m| m.count_ones() as usize == k).map(|m| (0..u).filter(|i| m >> i & 1 == 1).collect()).collect()
}
