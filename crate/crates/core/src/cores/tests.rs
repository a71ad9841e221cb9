use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fixtures;
use crate::hom::{enumerate_homs, is_isomorphic};
use crate::io::parse_instance;
use crate::model::union_disjoint;
use crate::oracle::{random_instance, random_pair, GenParams};

fn inst(s: &str) -> Instance {
    parse_instance(s).unwrap()
}

fn atom(s: &str) -> Atom {
    inst(s).atoms().iter().next().unwrap().clone()
}

fn k1() -> Atom {
    atom("R(?x, ?x, ?u, ?y, ?z)")
}

fn k5() -> Atom {
    atom("R(?v, ?p, ?p, ?r, ?s)")
}

fn renaming(from: &Instance, to: &Instance, pairs: &[(&str, &str)]) -> Hom {
    let map: BTreeMap<Term, Term> = pairs
        .iter()
        .map(|(a, b)| (Term::open(a), Term::open(b)))
        .collect();
    Hom::new(Arc::new(from.clone()), Arc::new(to.clone()), map).unwrap()
}

#[test]
fn core_examples() {
    assert_eq!(core(&fixtures::get("D")), inst("R(?z, ?z, ?z)"));
    let i = inst("R(a, b) R(b, c)");
    assert_eq!(core(&i), i);
    let a2 = fixtures::get("A2");
    let c = core(&a2);
    assert!(is_isomorphic(&core(&c), &c));
    assert_eq!(core(&Instance::empty()), Instance::empty());
}

#[test]
fn core_at_examples() {
    let a2 = fixtures::get("A2");
    let c1 = core_at(&a2, &k1()).unwrap();
    assert_eq!(c1.core, fixtures::get("Ck1"));
    let c5 = core_at(&a2, &k5()).unwrap();
    assert_eq!(c5.core, fixtures::get("Ck5"));

    let i = inst("R(a, b) R(?x, b)");
    let k = atom("R(a, b)");
    let ca = core_at(&i, &k).unwrap();
    assert_eq!(ca.core, core(&i));
    assert!(ca.core.contains(&k));

    assert!(core_at(&i, &atom("R(c, c)")).is_err());
}

#[test]
fn core_at_retraction_pair() {
    let a2 = fixtures::get("A2");
    for k in a2.atoms() {
        let c = core_at(&a2, k).unwrap();
        assert!(c.core.contains(k));
        assert_eq!(Hom::compose(&c.q, &c.m).unwrap().map(), Hom::identity(&c.core).map());
        assert!(c.q.is_strongly_surjective());
        for e in enumerate_homs(&c.core, &c.core, &HomConstraint::hitting(k.clone()), None) {
            assert!(e.is_isomorphism());
        }
    }
}

#[test]
fn atom_preorder_examples() {
    let a2 = fixtures::get("A2");
    let max = maximal_atoms(&a2);
    assert_eq!(max.len(), 2);
    assert!(max.contains(&k1()) && max.contains(&k5()));

    assert_eq!(maximal_atoms(&inst("R(?x, ?y)")), vec![atom("R(?x, ?y)")]);

    let d = fixtures::get("D");
    let pre = atom_preorder(&d);
    let top = pre.index(&atom("R(?z, ?z, ?r)")).unwrap();
    let bottom = pre.index(&atom("R(?z, ?z, ?z)")).unwrap();
    assert!(pre.is_maximal(top));
    assert!(!pre.is_maximal(bottom));
    assert!(pre.reach[top][bottom]);
    assert!(!pre.equivalent(top, bottom));
}

#[test]
fn pcwa_core_examples() {
    assert!(is_pcwa_core(&fixtures::get("D")));
    assert!(!is_pcwa_core(&fixtures::get("C1")));
    assert!(is_pcwa_core(&core(&fixtures::get("A2"))));
    assert!(is_pcwa_core(&fixtures::get("K3")));
}

#[test]
fn multicore_examples() {
    let m = multicore(&fixtures::get("A2"));
    let mut expect = vec![canonicalize(&fixtures::get("Ck1")), canonicalize(&fixtures::get("Ck5"))];
    expect.sort();
    assert_eq!(m.members, expect);

    let c = inst("R(?x, ?y) R(?y, ?x)");
    assert_eq!(multicore(&c).members, vec![canonicalize(&core(&c))]);

    let m = multicore(&inst("R(?x, ?y) R(?v, ?w)"));
    assert_eq!(m.members.len(), 1);
    assert!(is_isomorphic(&m.members[0], &inst("R(?x, ?y)")));

    let j = m.to_json();
    assert_eq!(j["members"].as_array().unwrap().len(), 1);
}

#[test]
fn canrep_examples() {
    let a2 = fixtures::get("A2");
    assert!(is_isomorphic(&canrep(&a2), &a2));
    let c = core(&a2);
    assert!(is_isomorphic(&canrep(&c), &c));
    let a1 = fixtures::get("A1");
    let r = canrep(&a1);
    assert!(is_isomorphic(&canrep(&r), &r));
    assert!(exists_cover(&r, &a1).is_some() && exists_cover(&a1, &r).is_some());
}

#[test]
fn glue_examples() {
    let ck1 = fixtures::get("Ck1");
    let ck5 = fixtures::get("Ck5");
    let v = fixtures::get("V");
    let v_in_ck5 = inst("R(?p, ?p, ?p, ?r, ?p) R(?p, ?p, ?p, ?p, ?p)");
    let iso = renaming(&v, &v_in_ck5, &[("x", "p"), ("y", "r")]);
    let (glued, _) = glue(&ck1, &ck5, &iso).unwrap();
    assert_eq!(glued, fixtures::get("B2"));

    let c = inst("R(?x, ?x, ?x, ?x, ?x)");
    let c5 = inst("R(?p, ?p, ?p, ?p, ?p)");
    let (g, s) = glue(&ck1, &ck5, &renaming(&c, &c5, &[("x", "p")])).unwrap();
    let a2 = fixtures::get("A2");
    assert!(g.len() < a2.len());
    assert!(s.is_strongly_surjective());
    assert!(exists_cover(&g, &a2).is_some() && exists_cover(&a2, &g).is_some());

    let a = fixtures::get("D");
    let copy = inst("R(?z2, ?z2, ?r2) R(?z2, ?z2, ?z2)");
    let (g, _) = glue(&a, &copy, &renaming(&a, &copy, &[("z", "z2"), ("r", "r2")])).unwrap();
    assert!(is_isomorphic(&g, &a));
}

#[test]
fn glue_checks_preconditions() {
    let ck1 = fixtures::get("Ck1");
    let iso = Hom::identity(&ck1);
    assert!(matches!(glue(&ck1, &ck1, &iso), Err(Error::Precondition(_))));
    let v = fixtures::get("V");
    let ck5 = fixtures::get("Ck5");
    let not_iso = Hom::new(
        Arc::new(v.clone()),
        Arc::new(ck5.clone()),
        [(Term::open("x"), Term::open("p")), (Term::open("y"), Term::open("p"))]
            .into_iter()
            .collect(),
    )
    .unwrap();
    assert!(matches!(glue(&ck1, &ck5, &not_iso), Err(Error::Precondition(_))));
}

#[test]
fn subminimal_examples() {
    let limits = Limits::default();
    let a1 = fixtures::get("A1");
    let s = enumerate_subminimal(&a1, &limits).unwrap();
    let b1 = canonicalize(&fixtures::get("B1"));
    let c1 = canonicalize(&fixtures::get("C1"));
    assert!(s.instances.contains(&b1), "{:?}", s.instances);
    assert!(s.instances.contains(&c1));

    let c = inst("R(?x, ?y) R(?y, ?x)");
    let s = enumerate_subminimal(&c, &limits).unwrap();
    assert!(s.complete);
    assert_eq!(s.instances, vec![canonicalize(&c)]);

    assert!(matches!(
        enumerate_subminimal(&inst("R(!X)"), &limits),
        Err(Error::ScopeViolation(_))
    ));
}

#[test]
fn subminimal_reports_caps() {
    let tight = Limits {
        partitions: 3,
        ..Limits::default()
    };
    let s = enumerate_subminimal(&fixtures::get("A1"), &tight).unwrap();
    assert!(!s.complete);
}

#[test]
fn partitions_are_bell_numbers() {
    for (n, bell) in [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15), (5, 52)] {
        let mut count = 0;
        for_each_partition(n, &mut |_| {
            count += 1;
            true
        });
        assert_eq!(count, bell);
    }
}

#[test]
fn multicore_family_validation() {
    for name in ["A1", "A2", "A3"] {
        let m = multicore(&fixtures::get(name));
        assert!(validate_multicore_family(&m.members, None), "{name}");
    }
    let ck1 = fixtures::get("Ck1");
    let copy = union_disjoint(&Instance::empty(), &ck1, false).unwrap();
    let copy = crate::model::canonicalize(&copy);
    assert!(!validate_multicore_family(&[ck1.clone(), copy], None));
    let c = core(&ck1);
    assert!(validate_multicore_family(&[c], None));
}

#[test]
fn maximality_transfers_between_equivalent_instances() {
    let a1 = fixtures::get("A1");
    let b = union_disjoint(&fixtures::get("B1"), &fixtures::get("C1"), false).unwrap();
    check_maximality_transfer(&a1, &b);
    check_maximality_transfer(&b, &a1);
}

/// Every maximal atom of `b` is hit from a maximal atom of `a` by some hom
/// `a → b`, and the cores at both atoms are isomorphic.
fn check_maximality_transfer(a: &Instance, b: &Instance) {
    let max_a = maximal_atoms(a);
    for kb in maximal_atoms(b) {
        let cb = core_at(b, &kb).unwrap().core;
        let ok = max_a.iter().any(|ka| {
            hom_exists(a, b, &HomConstraint::none().map_atom(ka.clone(), kb.clone()))
                && is_isomorphic(&core_at(a, ka).unwrap().core, &cb)
        });
        assert!(ok, "{kb} in {b}");
    }
}

fn params() -> impl Strategy<Value = GenParams> {
    (0u64..1_000_000).prop_map(|s| GenParams {
        max_atoms: 5,
        ..GenParams::with_seed(s).unannotated()
    })
}

/// Instances with the same multicore as `a`.
fn equivalent_variants(a: &Instance) -> Vec<Instance> {
    let mut out = vec![canonicalize(a)];
    out.push(union_disjoint(a, &core(a), false).unwrap());
    for k in a.atoms().iter().take(2) {
        out.push(union_disjoint(a, &core_at(a, k).unwrap().core, false).unwrap());
    }
    out.push(canrep(a));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn core_at_invariants(p in params()) {
        let a = random_instance(&p);
        for k in a.atoms() {
            let c = core_at(&a, k).unwrap();
            prop_assert!(c.core.contains(k));
            prop_assert!(c.core.atoms().is_subset(a.atoms()));
            let round = Hom::compose(&c.q, &c.m).unwrap();
            let id = Hom::identity(&c.core);
            prop_assert_eq!(round.map(), id.map());
            let mut fix_k = HomConstraint::none();
            for n in k.nulls() {
                fix_k = fix_k.pin(Term::Null(n.clone()), Term::Null(n.clone()));
            }
            for e in enumerate_homs(&c.core, &c.core, &fix_k, Some(20)) {
                prop_assert!(e.is_isomorphism());
            }
            if maximal_atoms(&a).contains(k) {
                for e in enumerate_homs(&c.core, &c.core, &HomConstraint::hitting(k.clone()), Some(20)) {
                    prop_assert!(e.is_isomorphism());
                }
            }
        }
    }

    #[test]
    fn preorder_is_transitive_and_equivalent_atoms_share_cores(p in params()) {
        let a = random_instance(&p);
        let pre = atom_preorder(&a);
        let n = pre.atoms.len();
        for i in 0..n {
            prop_assert!(pre.reach[i][i]);
            for j in 0..n {
                for k in 0..n {
                    if pre.reach[i][j] && pre.reach[j][k] {
                        prop_assert!(pre.reach[i][k]);
                    }
                }
                if pre.equivalent(i, j) {
                    let ci = core_at(&a, &pre.atoms[i]).unwrap().core;
                    let cj = core_at(&a, &pre.atoms[j]).unwrap().core;
                    prop_assert!(is_isomorphic(&ci, &cj));
                }
            }
        }
    }

    #[test]
    fn multicore_members_are_pcwa_cores_and_cover(p in params()) {
        let a = random_instance(&p);
        let m = multicore(&a);
        for c in &m.members {
            prop_assert!(is_pcwa_core(c));
        }
        for t in a.atoms() {
            let hit = m.members.iter().any(|c| {
                !enumerate_homs(c, &a, &HomConstraint::hitting(t.clone()), Some(1)).is_empty()
            });
            prop_assert!(hit, "{} not hit", t);
        }
        prop_assert!(validate_multicore_family(&m.members, None));
    }

    #[test]
    fn core_is_least_equivalent(p in params()) {
        let a = random_instance(&p);
        let c = core(&a);
        prop_assert!(hom_exists(&a, &c, &HomConstraint::none()));
        prop_assert!(c.atoms().is_subset(a.atoms()));
        for k in c.atoms() {
            prop_assert!(!hom_exists(&c, &c.restrict(|x| x != k), &HomConstraint::none()));
        }
    }

    #[test]
    fn multicore_decides_equivalence(p in params()) {
        let (a, b) = random_pair(&p);
        let eq = exists_cover(&a, &b).is_some() && exists_cover(&b, &a).is_some();
        prop_assert_eq!(eq, multicore(&a).same_as(&multicore(&b)), "{} / {}", a, b);
        let ma = multicore(&a);
        for v in equivalent_variants(&a) {
            prop_assert!(exists_cover(&v, &a).is_some() && exists_cover(&a, &v).is_some());
            prop_assert!(multicore(&v).same_as(&ma), "{} / {}", a, v);
        }
    }

    #[test]
    fn pcwa_cores_are_reflective_in_equivalents(p in params()) {
        let a = random_instance(&p);
        let c = canonicalize(&core(&a));
        for v in equivalent_variants(&c) {
            if is_pcwa_core(&c) {
                prop_assert!(is_reflective_subinstance(&c, &v, false).is_some(), "{} in {}", c, v);
            }
        }
    }
}
