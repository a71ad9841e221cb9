use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use super::search::Target;
use super::{build_map, find_hom, run_search, Hom, HomConstraint, Mode};
use crate::model::{canonicalize, Atom, Instance, Term};

/// Database isomorphism respecting annotations. Decided by equality of
/// canonical forms, which are exact.
pub fn is_isomorphic(a: &Instance, b: &Instance) -> bool {
    a.len() == b.len() && canonicalize(a) == canonicalize(b)
}

/// An explicit isomorphism from `a` to `b`, if any.
pub fn find_isomorphism(a: &Instance, b: &Instance) -> Option<Hom> {
    if a.len() != b.len() || a.nulls().len() != b.nulls().len() || a.constants() != b.constants() {
        return None;
    }
    let target = Target::new(b);
    let mode = Mode {
        injective_nulls: true,
        ..Mode::default()
    };
    let mut found = None;
    run_search(a, &target, &HomConstraint::none(), mode, &mut |terms, vals| {
        found = Some(build_map(&target, terms, vals));
        false
    });
    found.map(|m| Hom::unchecked(Arc::new(a.clone()), Arc::new(b.clone()), m))
}

/// A witness that `b` is a reflective subinstance of `a`: `m : b → a` and a
/// strongly surjective `q : a → b` with `q ∘ m` the identity.
#[derive(Clone, Debug)]
pub struct Reflection {
    pub m: Hom,
    pub q: Hom,
}

fn strict_retraction(b: &Instance, a: &Instance) -> Option<Hom> {
    if !b.atoms().is_subset(a.atoms()) {
        return None;
    }
    let mut c = HomConstraint::none();
    for n in b.nulls() {
        c.pinned.insert(Term::Null(n.clone()), Term::Null(n));
    }
    find_hom(a, b, &c)
}

/// With `strict`, `b` must literally be a subset of `a`; otherwise some
/// subinstance of `a` isomorphic to `b` must be reflective.
pub fn is_reflective_subinstance(b: &Instance, a: &Instance, strict: bool) -> Option<Reflection> {
    let sa = Arc::new(a.clone());
    let sb = Arc::new(b.clone());
    if strict {
        let q = strict_retraction(b, a)?;
        let m = Hom::unchecked(sb, sa, BTreeMap::new());
        return Some(Reflection { m, q });
    }
    if b.len() > a.len() {
        return None;
    }
    let target = Target::new(a);
    let mode = Mode {
        injective_nulls: true,
        ..Mode::default()
    };
    let mut seen: HashSet<BTreeSet<Atom>> = HashSet::new();
    let mut out = None;
    run_search(b, &target, &HomConstraint::none(), mode, &mut |terms, vals| {
        let map = build_map(&target, terms, vals);
        let e = Hom::unchecked(sb.clone(), sa.clone(), map);
        let sub = e.image();
        if !seen.insert(sub.atoms().clone()) {
            return true;
        }
        let Some(q0) = strict_retraction(&sub, a) else {
            return true;
        };
        let back: BTreeMap<Term, Term> = e.map().iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        let q_map = a
            .adom()
            .into_iter()
            .map(|t| {
                let v = q0.apply(&t);
                let w = back.get(&v).cloned().unwrap_or(v);
                (t, w)
            })
            .collect();
        let q = Hom::unchecked(sa.clone(), sb.clone(), q_map);
        out = Some(Reflection { m: e, q });
        false
    });
    out
}
