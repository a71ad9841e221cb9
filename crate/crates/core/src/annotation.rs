//! Annotation redundancy, annotation minimization, and the OCWA* multicore
//! obtained by freezing the remaining closed nulls.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::cores::multicore;
use crate::error::{Error, Result};
use crate::hom::exists_cover;
use crate::limits::Limits;
use crate::model::{canonicalize, freeze, substitute, Instance, Null, Symbol, Term};
use crate::semantics::{equiv, SemanticsId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationReport {
    pub instance: Instance,
    /// Closed nulls of the input that were re-annotated open.
    pub opened: Vec<Null>,
    /// False if the subset budget ran out before minimality was confirmed.
    pub minimal: bool,
}

impl AnnotationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "instance": crate::io::instance_json(&self.instance),
            "minimal": self.minimal,
            "opened": self.opened.iter().map(|n| Term::Null(n.clone()).to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Whether re-annotating `s` as open leaves the OCWA* semantics unchanged.
pub fn is_redundant(a: &Instance, s: &[Null], limits: &Limits) -> Result<bool> {
    for n in s {
        if !a.closed_nulls().contains(n) {
            return Err(Error::Precondition(format!(
                "{} is not a closed null of the instance",
                Term::Null(n.clone())
            )));
        }
    }
    let opened = a.open_up(s)?;
    Ok(equiv(SemanticsId::OcwaStar, a, &opened, limits)?.verdict)
}

/// Calls `f` on each `k`-subset of `0..n` in lexicographic order until it
/// returns false.
fn for_each_combination(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            let more = go(i + 1, n, k, cur, f);
            cur.pop();
            if !more {
                return false;
            }
        }
        true
    }
    go(0, n, k, &mut Vec::with_capacity(k), f)
}

/// Repeatedly opens the first redundant subset of closed nulls (by size,
/// then lexicographically) until none is left.
pub fn annotation_minimize(a: &Instance, limits: &Limits) -> Result<AnnotationReport> {
    let mut cur = a.clone();
    let mut opened: Vec<Null> = Vec::new();
    let mut visited = 0usize;
    'restart: loop {
        let closed: Vec<Null> = cur.closed_nulls().to_vec();
        for size in 1..=closed.len() {
            let mut hit: Option<Vec<Null>> = None;
            let mut err: Option<Error> = None;
            let mut out_of_budget = false;
            for_each_combination(closed.len(), size, &mut |ix| {
                visited += 1;
                if visited > limits.subsets {
                    out_of_budget = true;
                    return false;
                }
                let s: Vec<Null> = ix.iter().map(|&i| closed[i].clone()).collect();
                match is_redundant(&cur, &s, limits) {
                    Ok(true) => {
                        hit = Some(s);
                        false
                    }
                    Ok(false) => true,
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            if out_of_budget {
                return Ok(AnnotationReport {
                    instance: cur,
                    opened,
                    minimal: false,
                });
            }
            if let Some(s) = hit {
                cur = cur.open_up(&s)?;
                opened.extend(s);
                continue 'restart;
            }
        }
        return Ok(AnnotationReport {
            instance: cur,
            opened,
            minimal: true,
        });
    }
}

/// Multicore of an annotated instance together with its closed nulls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OcwaMulticore {
    pub members: Vec<Instance>,
    pub closed_nulls: Vec<Null>,
}

impl OcwaMulticore {
    pub fn to_json(&self) -> Value {
        json!({
            "closed_nulls": self.closed_nulls.iter().map(|n| Term::Null(n.clone()).to_string()).collect::<Vec<_>>(),
            "members": self.members.iter().map(crate::io::instance_json).collect::<Vec<_>>(),
        })
    }
}

/// Minimizes annotations, freezes the remaining closed nulls to fresh
/// constants, takes the PCWA multicore and substitutes the nulls back.
pub fn ocwa_multicore(a: &Instance, limits: &Limits) -> Result<OcwaMulticore> {
    let report = annotation_minimize(a, limits)?;
    if !report.minimal {
        return Err(Error::ResourceLimit {
            what: "annotation subsets",
            cap: limits.subsets,
        });
    }
    let m = report.instance;
    let closed = m.closed_nulls().to_vec();
    let (frozen, back) = freeze_closed(&m, &a.symbols());
    let mc = multicore(&frozen);
    let members = mc
        .members
        .iter()
        .map(|e| {
            e.map_terms(|t| match t {
                Term::Const(c) => back.get(c).cloned().map(Term::Null).unwrap_or_else(|| t.clone()),
                other => other.clone(),
            })
            .expect("substituting closed nulls back keeps normal form")
        })
        .collect();
    Ok(OcwaMulticore {
        members,
        closed_nulls: closed,
    })
}

/// Replaces only the closed nulls by fresh constants.
fn freeze_closed(a: &Instance, reserved: &BTreeSet<Symbol>) -> (Instance, BTreeMap<Symbol, Null>) {
    let (_, all) = freeze(a, reserved);
    let binding: BTreeMap<Null, Term> = a
        .closed_nulls()
        .iter()
        .map(|n| (n.clone(), Term::Const(all[n].clone())))
        .collect();
    let frozen = substitute(a, &binding).expect("closed nulls of the instance");
    let back = binding
        .into_iter()
        .map(|(n, t)| (t.symbol().clone(), n))
        .collect();
    (frozen, back)
}

fn permutations(n: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn go(k: usize, p: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if k == p.len() {
            return f(p);
        }
        for i in k..p.len() {
            p.swap(k, i);
            let more = go(k + 1, p, f);
            p.swap(k, i);
            if !more {
                return false;
            }
        }
        true
    }
    let mut p: Vec<usize> = (0..n).collect();
    go(0, &mut p, f);
}

/// OCWA* equivalence of annotation-minimal instances by matching closed
/// nulls: equal numbers of closed nulls, and PCWA-equivalent freezes under
/// some bijection of them.
pub fn equiv_via_freezing(a: &Instance, b: &Instance, limits: &Limits) -> Result<bool> {
    for (name, x) in [("first", a), ("second", b)] {
        let r = annotation_minimize(x, limits)?;
        if !r.opened.is_empty() || !r.minimal {
            return Err(Error::NotAnnotationMinimal(format!(
                "the {name} instance has redundant closed nulls"
            )));
        }
    }
    let xs = a.closed_nulls();
    let ys = b.closed_nulls();
    if xs.len() != ys.len() {
        return Ok(false);
    }
    let mut reserved = a.symbols();
    reserved.extend(b.symbols());
    let (fa, back) = freeze_closed(a, &reserved);
    let consts: Vec<Term> = xs
        .iter()
        .map(|x| {
            let c = back.iter().find(|(_, n)| *n == x).expect("frozen").0;
            Term::Const(c.clone())
        })
        .collect();
    let mut tried = 0usize;
    let mut result: Result<bool> = Ok(false);
    permutations(ys.len(), &mut |p| {
        tried += 1;
        if let Err(e) = Limits::check(tried, limits.bijections, "closed-null bijections") {
            result = Err(e);
            return false;
        }
        let binding: BTreeMap<Null, Term> = p
            .iter()
            .enumerate()
            .map(|(i, &j)| (ys[j].clone(), consts[i].clone()))
            .collect();
        let fb = substitute(b, &binding).expect("closed nulls of the instance");
        if exists_cover(&fa, &fb).is_some() && exists_cover(&fb, &fa).is_some() {
            result = Ok(true);
            return false;
        }
        true
    });
    result
}

/// Canonical form of an annotated multicore member keeping closed-null
/// names: open nulls are renamed, closed nulls and constants are not.
pub fn canonicalize_keeping_closed(a: &Instance) -> Instance {
    let (frozen, back) = freeze_closed(a, &a.symbols());
    canonicalize(&frozen)
        .map_terms(|t| match t {
            Term::Const(c) => back.get(c).cloned().map(Term::Null).unwrap_or_else(|| t.clone()),
            other => other.clone(),
        })
        .expect("substituting closed nulls back keeps normal form")
}

#[cfg(test)]
mod tests;
