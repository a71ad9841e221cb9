use proptest::prelude::*;

use super::*;
use crate::fixtures;
use crate::hom::{is_isomorphic, is_reflective_subinstance};
use crate::io::parse_instance;
use crate::oracle::{brute_implies, brute_member, random_instance, random_pair, sample_member, GenParams};
use crate::semantics::{implies, member};

fn inst(s: &str) -> Instance {
    parse_instance(s).unwrap()
}

fn lim() -> Limits {
    Limits::default()
}

fn brute_lim() -> Limits {
    Limits {
        brute: 200_000,
        ..Limits::default()
    }
}

#[test]
fn redundancy_examples() {
    let a = fixtures::get("RED_AVW");
    let v = Null::closed("V");
    let w = Null::closed("W");
    assert!(is_redundant(&a, &[v.clone(), w.clone()], &lim()).unwrap());
    assert!(is_redundant(&a, &[v], &lim()).unwrap());
    assert!(is_redundant(&a, &[w], &lim()).unwrap());

    let xx = inst("R(!X, !X)");
    assert!(!is_redundant(&xx, &[Null::closed("X")], &lim()).unwrap());
    let witness = inst("R(a, a) R(b, b)");
    let opened = xx.open_up(&[Null::closed("X")]).unwrap();
    assert!(!brute_member(SemanticsId::OcwaStar, &xx, &witness, &lim()).unwrap());
    assert!(brute_member(SemanticsId::OcwaStar, &opened, &witness, &lim()).unwrap());

    assert!(is_redundant(&xx, &[], &lim()).unwrap());
    assert!(is_redundant(&xx, &[Null::closed("Z")], &lim()).is_err());
}

#[test]
fn minimize_examples() {
    let r = annotation_minimize(&fixtures::get("RED_AVW"), &lim()).unwrap();
    assert!(r.minimal);
    assert_eq!(r.opened, vec![Null::closed("V"), Null::closed("W")]);
    assert!(r.instance.closed_nulls().is_empty());
    assert!(equiv(SemanticsId::OcwaStar, &r.instance, &fixtures::get("RED_B"), &lim())
        .unwrap()
        .verdict);

    let xx = inst("R(!X, !X)");
    let r = annotation_minimize(&xx, &lim()).unwrap();
    assert!(r.minimal && r.opened.is_empty());
    assert_eq!(r.instance, xx);

    let plain = fixtures::get("A2");
    let r = annotation_minimize(&plain, &lim()).unwrap();
    assert!(r.minimal && r.opened.is_empty());
    assert_eq!(r.instance, plain);

    let j = r.to_json();
    assert_eq!(j["minimal"], true);
    assert_eq!(j["opened"].as_array().unwrap().len(), 0);
}

#[test]
fn minimize_reports_budget() {
    let tight = Limits {
        subsets: 1,
        ..Limits::default()
    };
    let r = annotation_minimize(&inst("R(!X, !Y) S(!X) T(!Y)"), &tight).unwrap();
    assert!(!r.minimal);
    assert!(matches!(
        ocwa_multicore(&inst("R(!X, !Y) S(!X) T(!Y)"), &tight),
        Err(Error::ResourceLimit { .. })
    ));
}

#[test]
fn ocwa_multicore_examples() {
    let m = ocwa_multicore(&fixtures::get("RED_AVW"), &lim()).unwrap();
    assert!(m.closed_nulls.is_empty());
    assert_eq!(m.members.len(), 1);
    assert!(is_isomorphic(&m.members[0], &inst("R(?x, ?y)")));

    let a2 = fixtures::get("A2");
    let m = ocwa_multicore(&a2, &lim()).unwrap();
    assert_eq!(m.members, multicore(&a2).members);
    assert!(m.closed_nulls.is_empty());

    let a = inst("R(!X, ?y) R(!X, !X)");
    let m = ocwa_multicore(&a, &lim()).unwrap();
    assert_eq!(m.closed_nulls, vec![Null::closed("X")]);
    assert_eq!(m.members.len(), 1);
    assert_eq!(canonicalize_keeping_closed(&m.members[0]), canonicalize_keeping_closed(&a));
    let frozen = inst("R(c, ?y) R(c, c)");
    assert!(is_reflective_subinstance(&frozen, &frozen, true).is_some());
    // R(c, c) is reflective but below R(c, ?y), whose core keeps both atoms
    assert!(is_reflective_subinstance(&inst("R(c, c)"), &frozen, true).is_some());
    assert!(is_reflective_subinstance(&inst("R(c, ?y)"), &frozen, true).is_none());
    assert_eq!(crate::cores::maximal_atoms(&frozen), vec![inst("R(c, ?y)").atoms().iter().next().unwrap().clone()]);
}

#[test]
fn red_variants_share_their_multicore() {
    let names = ["RED_AVW", "RED_AVw", "RED_Avw", "RED_AvW", "RED_B"];
    let base = ocwa_multicore(&fixtures::get("RED_B"), &lim()).unwrap();
    for n in names {
        let m = ocwa_multicore(&fixtures::get(n), &lim()).unwrap();
        assert_eq!(m, base, "{n}");
    }
}

#[test]
fn equiv_via_freezing_examples() {
    let a = annotation_minimize(&fixtures::get("RED_AvW"), &lim()).unwrap().instance;
    assert!(equiv_via_freezing(&fixtures::get("RED_B"), &a, &lim()).unwrap());
    assert!(equiv_via_freezing(&inst("R(!X)"), &inst("R(!Y)"), &lim()).unwrap());

    let closed = inst("R(!X)");
    assert!(annotation_minimize(&closed, &lim()).unwrap().opened.is_empty());
    assert!(!brute_member(SemanticsId::OcwaStar, &closed, &inst("R(a) R(b)"), &lim()).unwrap());
    assert!(!equiv_via_freezing(&closed, &inst("R(?x)"), &lim()).unwrap());

    assert!(matches!(
        equiv_via_freezing(&fixtures::get("RED_AVW"), &a, &lim()),
        Err(Error::NotAnnotationMinimal(_))
    ));
}

#[test]
fn canonical_form_keeps_closed_names() {
    let a = inst("R(!X, ?y) S(?y, a)");
    let b = inst("R(!X, ?z) S(?z, a)");
    assert_eq!(canonicalize_keeping_closed(&a), canonicalize_keeping_closed(&b));
    let c = canonicalize_keeping_closed(&a);
    assert_eq!(c.closed_nulls(), &[Null::closed("X")]);
}

fn params() -> impl Strategy<Value = GenParams> {
    (0u64..1_000_000).prop_map(|s| GenParams {
        max_atoms: 3,
        max_closed_nulls: 2,
        ..GenParams::with_seed(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn redundancy_matches_oracle(p in params()) {
        let a = random_instance(&p);
        let all = a.closed_nulls().to_vec();
        let opened = a.open_up(&all).unwrap();
        let ours = is_redundant(&a, &all, &lim()).unwrap();
        let fwd = brute_implies(SemanticsId::OcwaStar, &a, &opened, &brute_lim());
        let bwd = brute_implies(SemanticsId::OcwaStar, &opened, &a, &brute_lim());
        if let (Ok(f), Ok(b)) = (fwd, bwd) {
            prop_assert_eq!(ours, f && b, "{}", a);
        }
    }

    #[test]
    fn fully_redundant_semantics_is_union_closed(p in params(), k in 1usize..3) {
        let a = random_instance(&p);
        let all = a.closed_nulls().to_vec();
        let mut rng = p.rng();
        let cs: Vec<Symbol> = ["a", "b", "c0"].iter().map(|s| Symbol::from(*s)).collect();
        let i1 = sample_member(&mut rng, &a, &cs, k);
        let i2 = sample_member(&mut rng, &a, &cs, k);
        let union = i1.union(&i2).unwrap();
        let closed = member(SemanticsId::OcwaStar, &a, &union, &lim()).unwrap().verdict;
        if is_redundant(&a, &all, &lim()).unwrap() {
            prop_assert!(closed, "{} not closed under {} + {}", a, i1, i2);
        }
    }

    #[test]
    fn partial_redundancy_is_finitely_witnessed(p in params(), k in 1usize..4) {
        // opening S is harmless iff unions of members with the other closed
        // nulls fixed stay inside Rep(a); here only the sound direction
        let a = random_instance(&p);
        let closed = a.closed_nulls().to_vec();
        prop_assume!(!closed.is_empty());
        let s = vec![closed[0].clone()];
        if is_redundant(&a, &s, &lim()).unwrap() {
            let mut rng = p.rng();
            let cs: Vec<Symbol> = ["a", "b"].iter().map(|s| Symbol::from(*s)).collect();
            let rest: BTreeMap<Null, Term> = closed[1..].iter().map(|y| (y.clone(), Term::constant("a"))).collect();
            let fixed = substitute(&a, &rest).unwrap();
            let mut union = Instance::empty();
            for _ in 0..k {
                union = union.union(&sample_member(&mut rng, &fixed, &cs, 1)).unwrap();
            }
            prop_assert!(member(SemanticsId::OcwaStar, &a, &union, &lim()).unwrap().verdict);
        }
    }

    #[test]
    fn minimization_preserves_semantics(p in params()) {
        let a = random_instance(&p);
        let r = annotation_minimize(&a, &lim()).unwrap();
        prop_assert!(r.minimal);
        prop_assert!(equiv(SemanticsId::OcwaStar, &a, &r.instance, &lim()).unwrap().verdict);
        for n in &r.opened {
            prop_assert!(a.closed_nulls().contains(n));
        }
        for y in r.instance.closed_nulls() {
            prop_assert!(!is_redundant(&r.instance, std::slice::from_ref(y), &lim()).unwrap());
        }
    }

    #[test]
    fn freezing_agrees_with_general_equivalence(p in params()) {
        let (a, b) = random_pair(&p);
        let a = annotation_minimize(&a, &lim()).unwrap().instance;
        let b = annotation_minimize(&b, &lim()).unwrap().instance;
        let general = equiv(SemanticsId::OcwaStar, &a, &b, &lim()).unwrap().verdict;
        prop_assert_eq!(equiv_via_freezing(&a, &b, &lim()).unwrap(), general, "{} / {}", a, b);
        if general {
            prop_assert_eq!(a.closed_nulls().len(), b.closed_nulls().len());
        }
    }

    #[test]
    fn ocwa_multicore_is_invariant(p in params()) {
        let (a, b) = random_pair(&p);
        let ma = ocwa_multicore(&a, &lim()).unwrap();
        let mb = ocwa_multicore(&b, &lim()).unwrap();
        let eq = equiv(SemanticsId::OcwaStar, &a, &b, &lim()).unwrap().verdict;
        if eq {
            prop_assert_eq!(ma.closed_nulls.len(), mb.closed_nulls.len());
            prop_assert!(same_up_to_closed_bijection(&ma, &mb), "{} / {}", a, b);
        }
        let mut union = Instance::empty();
        for m in &ma.members {
            union = crate::model::union_disjoint(&union, m, true).unwrap();
        }
        prop_assert!(implies(SemanticsId::OcwaStar, &a, &union, &lim()).unwrap().verdict);
        prop_assert!(implies(SemanticsId::OcwaStar, &union, &a, &lim()).unwrap().verdict);
    }
}

/// Members agree after renaming closed nulls by one bijection.
fn same_up_to_closed_bijection(a: &OcwaMulticore, b: &OcwaMulticore) -> bool {
    let n = a.closed_nulls.len();
    let mut found = false;
    permutations(n, &mut |p| {
        let rename: BTreeMap<Term, Term> = (0..n)
            .map(|i| (Term::Null(b.closed_nulls[p[i]].clone()), Term::Null(a.closed_nulls[i].clone())))
            .collect();
        let mut renamed: Vec<Instance> = b
            .members
            .iter()
            .map(|m| {
                canonicalize_keeping_closed(
                    &m.map_terms(|t| rename.get(t).cloned().unwrap_or_else(|| t.clone())).unwrap(),
                )
            })
            .collect();
        let mut ours: Vec<Instance> = a.members.iter().map(canonicalize_keeping_closed).collect();
        renamed.sort();
        ours.sort();
        found = renamed == ours;
        !found
    });
    found
}
