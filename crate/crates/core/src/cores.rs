//! Cores, cores at an atom, the atom preorder, PCWA-cores, multicores,
//! canonical representatives, gluing and sub-minimal enumeration. These
//! work on instances without closed nulls; the annotation module lifts
//! them to OCWA*.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hom::{
    exists_cover, find_hom, hom_exists, is_reflective_subinstance, quotient, Hom, HomConstraint,
};
use crate::limits::Limits;
use crate::model::{canonicalize, union_disjoint, Atom, Instance, Null, Term};

/// Least strict reflective subinstance of `base` containing `atom`, with
/// the inclusion `m` and retraction `q`.
#[derive(Clone, Debug)]
pub struct CoreAt {
    pub base: Instance,
    pub atom: Atom,
    pub core: Instance,
    pub m: Hom,
    pub q: Hom,
}

fn without(a: &Instance, k: &Atom) -> Instance {
    a.restrict(|x| x != k)
}

/// Shrinks `a` by endomorphisms fixing `pinned` until none has a proper
/// image. Returns the result and a retraction of `a` onto it.
fn retract(a: &Instance, pinned: &BTreeSet<Null>) -> (Instance, Hom) {
    let mut c = HomConstraint::none();
    for n in pinned {
        c.pinned.insert(Term::Null(n.clone()), Term::Null(n.clone()));
    }
    let mut cur = a.clone();
    let mut r: BTreeMap<Term, Term> = a.adom().into_iter().map(|t| (t.clone(), t)).collect();
    'outer: loop {
        for k in cur.atoms() {
            let smaller = without(&cur, k);
            if let Some(g) = find_hom(&cur, &smaller, &c) {
                for v in r.values_mut() {
                    *v = g.apply(v);
                }
                cur = g.image();
                continue 'outer;
            }
        }
        break;
    }
    // r restricted to the result is an automorphism; undo it so that the
    // retraction is the identity there
    let on_core: BTreeMap<Term, Term> = cur.adom().into_iter().map(|t| (r[&t].clone(), t)).collect();
    for v in r.values_mut() {
        *v = on_core[v].clone();
    }
    let q = Hom::unchecked(Arc::new(a.clone()), Arc::new(cur.clone()), r);
    (cur, q)
}

/// The core: the least subinstance homomorphically equivalent to `a`.
pub fn core(a: &Instance) -> Instance {
    retract(a, &BTreeSet::new()).0
}

/// Core with the nulls of `k` held fixed.
pub fn core_at(a: &Instance, k: &Atom) -> Result<CoreAt> {
    if !a.contains(k) {
        return Err(Error::Precondition(format!("{k} is not an atom of the instance")));
    }
    let pinned: BTreeSet<Null> = k.nulls().cloned().collect();
    let (core, q) = retract(a, &pinned);
    let m = Hom::unchecked(Arc::new(core.clone()), Arc::new(a.clone()), BTreeMap::new());
    Ok(CoreAt {
        base: a.clone(),
        atom: k.clone(),
        core,
        m,
        q,
    })
}

/// `reach[i][j]` iff some endomorphism sends `atoms[i]` to `atoms[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomPreorder {
    pub atoms: Vec<Atom>,
    pub reach: Vec<Vec<bool>>,
}

impl AtomPreorder {
    pub fn equivalent(&self, i: usize, j: usize) -> bool {
        self.reach[i][j] && self.reach[j][i]
    }

    /// Only atoms equivalent to `atoms[i]` map onto it.
    pub fn is_maximal(&self, i: usize) -> bool {
        (0..self.atoms.len()).all(|j| !self.reach[j][i] || self.reach[i][j])
    }

    pub fn maximal_atoms(&self) -> Vec<Atom> {
        (0..self.atoms.len())
            .filter(|&i| self.is_maximal(i))
            .map(|i| self.atoms[i].clone())
            .collect()
    }

    pub fn index(&self, k: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == k)
    }
}

pub fn atom_preorder(a: &Instance) -> AtomPreorder {
    let atoms: Vec<Atom> = a.atoms().iter().cloned().collect();
    let n = atoms.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i == j
                || atoms[i].relation == atoms[j].relation
                    && hom_exists(
                        a,
                        a,
                        &HomConstraint::none().map_atom(atoms[i].clone(), atoms[j].clone()),
                    );
        }
    }
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                debug_assert!(!(reach[i][j] && reach[j][l]) || reach[i][l], "endomorphisms compose");
            }
        }
    }
    AtomPreorder { atoms, reach }
}

pub fn maximal_atoms(a: &Instance) -> Vec<Atom> {
    atom_preorder(a).maximal_atoms()
}

/// Every endomorphism whose image contains `k` is an isomorphism: no
/// endomorphism missing some other atom hits `k`.
fn pins_isos(a: &Instance, k: &Atom) -> bool {
    a.atoms().iter().filter(|k2| *k2 != k).all(|k2| {
        !hom_exists(a, &without(a, k2), &HomConstraint::hitting(k.clone()))
    })
}

/// Every self-cover contains an isomorphism.
pub fn is_pcwa_core(a: &Instance) -> bool {
    a.is_empty() || a.atoms().iter().any(|k| pins_isos(a, k))
}

/// The multicore: cores at maximal atoms, one per equivalence class, with
/// isomorphic copies and members reflective in others removed. Members are
/// canonicalized and sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multicore {
    pub members: Vec<Instance>,
    /// One maximal atom of the input per member, in member order.
    pub maximal_atoms: Vec<Atom>,
}

impl Multicore {
    /// Same members up to isomorphism.
    pub fn same_as(&self, other: &Multicore) -> bool {
        self.members == other.members
    }

    pub fn to_json(&self) -> Value {
        json!({
            "members": self.members.iter().map(crate::io::instance_json).collect::<Vec<_>>(),
            "maximal_atoms": self.maximal_atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        })
    }
}

pub fn multicore(a: &Instance) -> Multicore {
    let pre = atom_preorder(a);
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..pre.atoms.len() {
        if pre.is_maximal(i) && !reps.iter().any(|&r| pre.equivalent(r, i)) {
            reps.push(i);
        }
    }
    let mut found: Vec<(Instance, CoreAt)> = Vec::new();
    for r in reps {
        let c = core_at(a, &pre.atoms[r]).expect("atom of the instance");
        let canon = canonicalize(&c.core);
        if !found.iter().any(|(f, _)| *f == canon) {
            found.push((canon, c));
        }
    }
    let keep: Vec<bool> = (0..found.len())
        .map(|i| {
            let ci = &found[i].1;
            !(0..found.len()).any(|j| {
                j != i
                    && hom_exists(
                        &found[j].1.core,
                        &ci.core,
                        &HomConstraint::hitting(ci.atom.clone()),
                    )
            })
        })
        .collect();
    let mut kept: Vec<(Instance, Atom)> = found
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((canon, c), _)| (canon, c.atom))
        .collect();
    kept.sort();
    let (members, maximal_atoms) = kept.into_iter().unzip();
    Multicore {
        members,
        maximal_atoms,
    }
}

/// Null-disjoint union of the multicore members.
pub fn canrep(a: &Instance) -> Instance {
    union_members(&multicore(a).members)
}

pub(crate) fn union_members(members: &[Instance]) -> Instance {
    members.iter().fold(Instance::empty(), |acc, m| {
        union_disjoint(&acc, m, false).expect("open nulls cannot clash")
    })
}

/// Quotient of `a ∪ b` identifying each null `x` of `iso`'s source with
/// `iso(x)`. The source and target of `iso` must be strict reflective
/// subinstances of `a` and `b`, which must not share nulls.
pub fn glue(a: &Instance, b: &Instance, iso: &Hom) -> Result<(Instance, Hom)> {
    let a_names: BTreeSet<_> = a.nulls().into_iter().map(|n| n.name).collect();
    if b.nulls().iter().any(|n| a_names.contains(&n.name)) {
        return Err(Error::Precondition("glued instances share nulls".into()));
    }
    if !iso.is_isomorphism() {
        return Err(Error::Precondition("gluing map is not an isomorphism".into()));
    }
    if is_reflective_subinstance(iso.source(), a, true).is_none() {
        return Err(Error::Precondition(
            "gluing map's source is not a strict reflective subinstance of the first instance".into(),
        ));
    }
    if is_reflective_subinstance(iso.target(), b, true).is_none() {
        return Err(Error::Precondition(
            "gluing map's target is not a strict reflective subinstance of the second instance"
                .into(),
        ));
    }
    let both = a.union(b)?;
    let blocks: Vec<Vec<Null>> = iso
        .map()
        .iter()
        .filter_map(|(k, v)| Some(vec![k.as_null()?.clone(), v.as_null()?.clone()]))
        .filter(|blk| blk[0] != blk[1])
        .collect();
    quotient(&both, &blocks, false)
}

/// Result of a capped enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subminimal {
    pub instances: Vec<Instance>,
    /// False if a cap cut the enumeration short.
    pub complete: bool,
}

fn pcwa_equiv(a: &Instance, b: &Instance) -> bool {
    exists_cover(a, b).is_some() && exists_cover(b, a).is_some()
}

/// Calls `f` with each set partition of `0..n` as a block index per
/// element, in restricted-growth order. Stops when `f` returns false.
pub(crate) fn for_each_partition(n: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn go(i: usize, max: usize, rgs: &mut Vec<usize>, n: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if i == n {
            return f(rgs);
        }
        for b in 0..=max {
            rgs.push(b);
            let more = go(i + 1, max.max(b + 1), rgs, n, f);
            rgs.pop();
            if !more {
                return false;
            }
        }
        true
    }
    let mut rgs = Vec::with_capacity(n);
    if n == 0 {
        f(&rgs);
    } else {
        rgs.push(0);
        go(1, 1, &mut rgs, n, f);
    }
}

/// Whether some proper subset of `q`'s atoms is equivalent to `q`. `None`
/// when the subset budget ran out first.
fn has_proper_equivalent_subset(q: &Instance, budget: &mut usize) -> Option<bool> {
    let atoms: Vec<&Atom> = q.atoms().iter().collect();
    let n = atoms.len();
    if n == 0 {
        return Some(false);
    }
    if n >= usize::BITS as usize - 1 {
        return None;
    }
    let mut masks: Vec<u64> = (1..(1u64 << n) - 1).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for m in masks {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let sub = Instance::from_checked(
            (0..n)
                .filter(|i| m >> i & 1 == 1)
                .map(|i| atoms[i].clone())
                .collect(),
        );
        if pcwa_equiv(&sub, q) {
            return Some(true);
        }
    }
    Some(false)
}

/// Equivalent instances with no proper equivalent subinstance, found among
/// the null quotients of the canonical representative.
pub fn enumerate_subminimal(a: &Instance, limits: &Limits) -> Result<Subminimal> {
    if !a.closed_nulls().is_empty() {
        return Err(Error::ScopeViolation("sub-minimal enumeration needs an instance without closed nulls".into()));
    }
    let rep = canrep(a);
    let nulls: Vec<Null> = rep.nulls().into_iter().collect();
    let mut complete = true;
    let mut visited = 0usize;
    let mut candidates: BTreeMap<Instance, Instance> = BTreeMap::new();
    let mut seen: BTreeSet<Instance> = BTreeSet::new();
    for_each_partition(nulls.len(), &mut |rgs| {
        visited += 1;
        if visited > limits.partitions {
            complete = false;
            return false;
        }
        let nblocks = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks: Vec<Vec<Null>> = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(nulls[i].clone());
        }
        let (q, _) = quotient(&rep, &blocks, false).expect("open nulls only");
        let canon = canonicalize(&q);
        if seen.insert(canon.clone()) && pcwa_equiv(&q, a) {
            candidates.insert(canon, q);
        }
        true
    });
    let mut budget = limits.subsets;
    let mut out = Vec::new();
    for (canon, _) in candidates {
        match has_proper_equivalent_subset(&canon, &mut budget) {
            Some(false) => out.push(canon),
            Some(true) => {}
            None => {
                complete = false;
                break;
            }
        }
    }
    Ok(Subminimal {
        instances: out,
        complete,
    })
}

/// Checks that `family` has the shape of a multicore: all members share a
/// core, and each member `C_i` has an atom `k_i` such that the only
/// homomorphisms from members into `C_i` hitting `k_i` are automorphisms of
/// `C_i`. With `selection`, the atoms `k_i` are given.
pub fn validate_multicore_family(family: &[Instance], selection: Option<&[Atom]>) -> bool {
    if let Some(sel) = selection {
        if sel.len() != family.len() {
            return false;
        }
    }
    if let Some(first) = family.first() {
        let c0 = core(first);
        if !family[1..].iter().all(|m| crate::hom::is_isomorphic(&core(m), &c0)) {
            return false;
        }
    }
    let good = |i: usize, k: &Atom| -> bool {
        let ci = &family[i];
        ci.contains(k)
            && pins_isos(ci, k)
            && family
                .iter()
                .enumerate()
                .all(|(j, cj)| j == i || !hom_exists(cj, ci, &HomConstraint::hitting(k.clone())))
    };
    (0..family.len()).all(|i| match selection {
        Some(sel) => good(i, &sel[i]),
        None => family[i].atoms().iter().any(|k| good(i, k)),
    })
}

#[cfg(test)]
mod tests;
