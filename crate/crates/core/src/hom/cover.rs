use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Value};

use super::search::Target;
use super::{build_map, run_search, Hom, HomConstraint, Mode};
use crate::error::Result;
use crate::limits::Limits;
use crate::model::{Atom, Instance, Null, Term};

/// A family of homomorphisms into a common target whose images jointly
/// equal it. Empty only when the target is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverWitness {
    pub homs: Vec<Hom>,
}

impl CoverWitness {
    pub fn covers(&self, target: &Instance) -> bool {
        let hit: BTreeSet<Atom> = self.homs.iter().flat_map(|h| h.image().atoms().clone()).collect();
        hit == *target.atoms()
            && self.homs.iter().all(|h| h.target() == target)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.homs.iter().map(Hom::to_json).collect())
    }
}

/// A cover whose members all agree with `sigma` on the closed nulls of the
/// source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RcnWitness {
    pub cover: CoverWitness,
    pub sigma: BTreeMap<Null, Term>,
}

impl RcnWitness {
    pub fn to_json(&self) -> Value {
        let sigma: serde_json::Map<String, Value> = self
            .sigma
            .iter()
            .map(|(k, v)| (Term::Null(k.clone()).to_string(), Value::String(v.to_string())))
            .collect();
        json!({ "homs": self.cover.to_json(), "sigma": sigma })
    }
}

/// One hom per uncovered atom, then greedy removal of homs whose image the
/// others already cover. A single strong surjection is preferred when the
/// greedy family has more than one member.
fn cover_into(
    a: &Instance,
    b: &Instance,
    target: &Target,
    pinned: &BTreeMap<Term, Term>,
) -> Option<Vec<Hom>> {
    let sa = Arc::new(a.clone());
    let sb = Arc::new(b.clone());
    let mut homs: Vec<Hom> = Vec::new();
    let mut hit: BTreeSet<Atom> = BTreeSet::new();
    for k in b.atoms() {
        if hit.contains(k) {
            continue;
        }
        let c = HomConstraint {
            pinned: pinned.clone(),
            must_hit: Some(k.clone()),
            atom_images: BTreeMap::new(),
        };
        let mut found = None;
        run_search(a, target, &c, Mode::default(), &mut |terms, vals| {
            found = Some(build_map(target, terms, vals));
            false
        });
        let h = Hom::unchecked(sa.clone(), sb.clone(), found?);
        hit.extend(h.image().atoms().iter().cloned());
        homs.push(h);
    }
    let images: Vec<BTreeSet<Atom>> = homs.iter().map(|h| h.image().atoms().clone()).collect();
    let mut keep = vec![true; homs.len()];
    for i in 0..homs.len() {
        keep[i] = false;
        let rest: BTreeSet<&Atom> = (0..homs.len())
            .filter(|&j| keep[j])
            .flat_map(|j| images[j].iter())
            .collect();
        if rest.len() != b.len() {
            keep[i] = true;
        }
    }
    let homs: Vec<Hom> = homs
        .into_iter()
        .zip(keep)
        .filter_map(|(h, k)| k.then_some(h))
        .collect();
    if homs.len() > 1 && a.len() >= b.len() {
        let c = HomConstraint {
            pinned: pinned.clone(),
            must_hit: None,
            atom_images: BTreeMap::new(),
        };
        let mode = Mode {
            surjective: true,
            ..Mode::default()
        };
        let mut found = None;
        run_search(a, target, &c, mode, &mut |terms, vals| {
            found = Some(build_map(target, terms, vals));
            false
        });
        if let Some(map) = found {
            return Some(vec![Hom::unchecked(sa, sb, map)]);
        }
    }
    Some(homs)
}

/// A cover of `b` by homomorphisms from `a`, if one exists. The set of all
/// homomorphisms covers iff any family does, so it suffices to find one
/// hom hitting each atom.
pub fn exists_cover(a: &Instance, b: &Instance) -> Option<CoverWitness> {
    let target = Target::new(b);
    cover_into(a, b, &target, &BTreeMap::new()).map(|homs| CoverWitness { homs })
}

/// An RCN-cover of `t` by homomorphisms from `b`: a common assignment of
/// `b`'s closed nulls under which every atom of `t` is still hit.
/// Candidate assignments are the distinct closed-null restrictions of
/// actual homomorphisms.
pub fn exists_rcn_cover(b: &Instance, t: &Instance, limits: &Limits) -> Result<Option<RcnWitness>> {
    if t.is_empty() {
        return Ok(Some(RcnWitness {
            cover: CoverWitness { homs: Vec::new() },
            sigma: BTreeMap::new(),
        }));
    }
    let target = Target::new(t);
    let closed: Vec<Term> = b.closed_nulls().iter().cloned().map(Term::Null).collect();
    if closed.is_empty() {
        return Ok(cover_into(b, t, &target, &BTreeMap::new()).map(|homs| RcnWitness {
            cover: CoverWitness { homs },
            sigma: BTreeMap::new(),
        }));
    }
    let mut tried = 0usize;
    let mut outcome: Result<Option<RcnWitness>> = Ok(None);
    let mode = Mode {
        project: Some(&closed),
        ..Mode::default()
    };
    run_search(b, &target, &HomConstraint::none(), mode, &mut |terms, vals| {
        tried += 1;
        if let Err(e) = Limits::check(tried, limits.sigma, "closed-null assignments") {
            outcome = Err(e);
            return false;
        }
        let pinned = build_map(&target, terms, vals);
        match cover_into(b, t, &target, &pinned) {
            Some(homs) => {
                let sigma = pinned
                    .into_iter()
                    .map(|(k, v)| (k.as_null().expect("closed null").clone(), v))
                    .collect();
                outcome = Ok(Some(RcnWitness {
                    cover: CoverWitness { homs },
                    sigma,
                }));
                false
            }
            None => true,
        }
    });
    outcome
}
