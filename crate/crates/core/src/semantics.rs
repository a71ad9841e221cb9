//! Membership, implication and equivalence under the five semantics, and
//! the translations from OCWA^LS inputs into OCWA* instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hom::search::Target;
use crate::hom::{
    self, build_map, exists_cover, exists_rcn_cover, run_search, CoverWitness, Hom,
    HomConstraint, Mode, RcnWitness,
};
use crate::limits::Limits;
use crate::model::{
    make_instance, Ann, Atom, Instance, NameSupply, Null, OccTerm, RawAtom, RawInstance, Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticsId {
    Owa,
    Cwa,
    Pcwa,
    OcwaStar,
    OcwaLs,
}

impl SemanticsId {
    pub const ALL: [SemanticsId; 5] = [
        SemanticsId::Owa,
        SemanticsId::Cwa,
        SemanticsId::Pcwa,
        SemanticsId::OcwaStar,
        SemanticsId::OcwaLs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemanticsId::Owa => "owa",
            SemanticsId::Cwa => "cwa",
            SemanticsId::Pcwa => "pcwa",
            SemanticsId::OcwaStar => "ocwa",
            SemanticsId::OcwaLs => "ocwals",
        }
    }

    /// Whether closed nulls are meaningful under this semantics.
    pub fn accepts_closed(self) -> bool {
        matches!(self, SemanticsId::OcwaStar | SemanticsId::OcwaLs)
    }
}

impl fmt::Display for SemanticsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticsId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SemanticsId::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownName(format!("semantics {s}")))
    }
}

/// Which characterization produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Hom,
    Surjection,
    Cover,
    Rcn,
    RcnV,
    RcnVi,
    Empty,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Hom => "hom",
            Method::Surjection => "surjection",
            Method::Cover => "cover",
            Method::Rcn => "rcn",
            Method::RcnV => "rcn-v",
            Method::RcnVi => "rcn-vi",
            Method::Empty => "empty",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Witness {
    Hom(Hom),
    Cover(CoverWitness),
    Rcn(RcnWitness),
    /// Both directions of an equivalence.
    Both(Box<Witness>, Box<Witness>),
}

impl Witness {
    pub fn to_json(&self) -> Value {
        match self {
            Witness::Hom(h) => h.to_json(),
            Witness::Cover(c) => c.to_json(),
            Witness::Rcn(r) => r.to_json(),
            Witness::Both(a, b) => json!({ "forward": a.to_json(), "backward": b.to_json() }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: bool,
    pub witness: Option<Witness>,
    pub method: Method,
}

impl Decision {
    fn no(method: Method) -> Self {
        Decision {
            verdict: false,
            witness: None,
            method,
        }
    }

    fn from_opt(method: Method, w: Option<Witness>) -> Self {
        Decision {
            verdict: w.is_some(),
            witness: w,
            method,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "method": self.method.tag(),
            "witness": self.witness.as_ref().map_or(Value::Null, Witness::to_json),
        })
    }
}

fn require_open(sem: SemanticsId, a: &Instance) -> Result<()> {
    if !sem.accepts_closed() && !a.closed_nulls().is_empty() {
        return Err(Error::SemanticsInputMismatch {
            semantics: sem.name(),
            reason: format!("instance has closed nulls {}", list_nulls(a.closed_nulls())),
        });
    }
    Ok(())
}

fn list_nulls(ns: &[Null]) -> String {
    ns.iter()
        .map(|n| Term::Null(n.clone()).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn require_complete(sem: SemanticsId, i: &Instance) -> Result<()> {
    if !i.is_complete() {
        return Err(Error::SemanticsInputMismatch {
            semantics: sem.name(),
            reason: "the candidate member contains nulls".into(),
        });
    }
    Ok(())
}

/// Is the complete instance `i` in Rep(`a`)?
pub fn member(sem: SemanticsId, a: &Instance, i: &Instance, limits: &Limits) -> Result<Decision> {
    require_open(sem, a)?;
    require_complete(sem, i)?;
    Ok(match sem {
        SemanticsId::Owa => Decision::from_opt(
            Method::Hom,
            hom::find_hom(a, i, &HomConstraint::none()).map(Witness::Hom),
        ),
        SemanticsId::Cwa => Decision::from_opt(
            Method::Surjection,
            hom::find_strong_surjection(a, i).map(Witness::Hom),
        ),
        SemanticsId::Pcwa => {
            Decision::from_opt(Method::Cover, exists_cover(a, i).map(Witness::Cover))
        }
        SemanticsId::OcwaStar => Decision::from_opt(
            Method::Rcn,
            exists_rcn_cover(a, i, limits)?.map(Witness::Rcn),
        ),
        SemanticsId::OcwaLs => member_ls(&RawInstance::from_instance(a), i, limits)?,
    })
}

/// OCWA^LS membership for an instance with per-occurrence annotations: a
/// homomorphism `h` into `i` such that every tuple of `i` agrees with some
/// `h`-image of an atom on that atom's closed positions.
pub fn member_ls(raw: &RawInstance, i: &Instance, limits: &Limits) -> Result<Decision> {
    require_complete(SemanticsId::OcwaLs, i)?;
    let plain = raw.plain();
    let atoms: Vec<&RawAtom> = raw.atoms().iter().collect();
    let target = Target::new(i);
    let mut count = 0usize;
    let mut outcome: Result<Option<Hom>> = Ok(None);
    let sa = Arc::new(plain.clone());
    let si = Arc::new(i.clone());
    run_search(&plain, &target, &HomConstraint::none(), Mode::default(), &mut |terms, vals| {
        count += 1;
        if let Err(e) = Limits::check(count, limits.homs, "homomorphisms") {
            outcome = Err(e);
            return false;
        }
        let h = Hom::unchecked(sa.clone(), si.clone(), build_map(&target, terms, vals));
        let ok = i.atoms().iter().all(|tuple| {
            atoms.iter().any(|ra| {
                ra.relation == tuple.relation
                    && ra.args.len() == tuple.args.len()
                    && ra.args.iter().zip(&tuple.args).all(|(occ, v)| {
                        occ.ann == Ann::Open || h.apply(&strip(&occ.term)) == *v
                    })
            })
        });
        if ok {
            outcome = Ok(Some(h));
            false
        } else {
            true
        }
    });
    Ok(Decision::from_opt(Method::Hom, outcome?.map(Witness::Hom)))
}

fn strip(t: &Term) -> Term {
    match t {
        Term::Null(n) => Term::Null(Null {
            name: n.name.clone(),
            ann: Ann::Open,
        }),
        c => c.clone(),
    }
}

/// Rep(`a`) ⊆ Rep(`b`).
pub fn implies(sem: SemanticsId, a: &Instance, b: &Instance, limits: &Limits) -> Result<Decision> {
    require_open(sem, a)?;
    require_open(sem, b)?;
    Ok(match sem {
        SemanticsId::Owa => Decision::from_opt(
            Method::Hom,
            hom::find_hom(b, a, &HomConstraint::none()).map(Witness::Hom),
        ),
        SemanticsId::Cwa => Decision::from_opt(
            Method::Surjection,
            hom::find_strong_surjection(b, a).map(Witness::Hom),
        ),
        SemanticsId::Pcwa => {
            Decision::from_opt(Method::Cover, exists_cover(b, a).map(Witness::Cover))
        }
        SemanticsId::OcwaStar => implies_method_vi(a, b, limits)?,
        SemanticsId::OcwaLs => implies_method_vi(&ls_expand(a), &ls_expand(b), limits)?,
    })
}

/// OCWA^LS implication between instances with per-occurrence annotations.
pub fn implies_ls_raw(a: &RawInstance, b: &RawInstance, limits: &Limits) -> Result<Decision> {
    let a = ls_expand(&normalize_ls(a));
    let b = ls_expand(&normalize_ls(b));
    implies_method_vi(&a, &b, limits)
}

/// OCWA* implication via an RCN-cover from `b` onto `a^(|Y|+1)`, where `Y`
/// are the closed nulls of `b`.
pub fn implies_method_v(a: &Instance, b: &Instance, limits: &Limits) -> Result<Decision> {
    let p = hom::power(a, b.closed_nulls().len() + 1, limits)?;
    Ok(Decision::from_opt(
        Method::RcnV,
        exists_rcn_cover(b, &p.instance, limits)?.map(Witness::Rcn),
    ))
}

/// OCWA* implication via an RCN-cover from `b` onto `a²` containing a
/// member that factors through the first injection: for each distinct
/// closed-null restriction `σ` of a homomorphism `b → a`, test whether
/// every atom of `a²` is hit by a homomorphism extending `σ`.
pub fn implies_method_vi(a: &Instance, b: &Instance, limits: &Limits) -> Result<Decision> {
    if a.is_empty() {
        return Ok(Decision {
            verdict: true,
            witness: Some(Witness::Rcn(RcnWitness {
                cover: CoverWitness { homs: Vec::new() },
                sigma: BTreeMap::new(),
            })),
            method: Method::Empty,
        });
    }
    let square = hom::power(a, 2, limits)?;
    let a_index = Target::new(a);
    let sq_index = Target::new(&square.instance);
    let closed: Vec<Term> = b.closed_nulls().iter().cloned().map(Term::Null).collect();
    let sb = Arc::new(b.clone());
    let ssq = Arc::new(square.instance.clone());
    let mut tried = 0usize;
    let mut outcome: Result<Option<RcnWitness>> = Ok(None);
    let mode = Mode {
        project: Some(&closed),
        ..Mode::default()
    };
    run_search(b, &a_index, &HomConstraint::none(), mode, &mut |terms, vals| {
        tried += 1;
        if let Err(e) = Limits::check(tried, limits.sigma, "closed-null assignments") {
            outcome = Err(e);
            return false;
        }
        // copy 1 of the square keeps the names of `a`, so π₁ is the identity on terms
        let sigma = build_map(&a_index, terms, vals);
        let mut homs = Vec::new();
        let mut hit: BTreeSet<Atom> = BTreeSet::new();
        for k in square.instance.atoms() {
            if hit.contains(k) {
                continue;
            }
            let c = HomConstraint {
                pinned: sigma.clone(),
                must_hit: Some(k.clone()),
                atom_images: BTreeMap::new(),
            };
            let mut found = None;
            run_search(b, &sq_index, &c, Mode::default(), &mut |t2, v2| {
                found = Some(build_map(&sq_index, t2, v2));
                false
            });
            match found {
                Some(m) => {
                    let h = Hom::unchecked(sb.clone(), ssq.clone(), m);
                    hit.extend(h.image().atoms().iter().cloned());
                    homs.push(h);
                }
                None => return true,
            }
        }
        outcome = Ok(Some(RcnWitness {
            cover: CoverWitness { homs },
            sigma: sigma
                .into_iter()
                .map(|(k, v)| (k.as_null().expect("closed null").clone(), v))
                .collect(),
        }));
        false
    });
    Ok(match outcome? {
        Some(w) => Decision::from_opt(Method::RcnVi, Some(Witness::Rcn(w))),
        None => Decision::no(Method::RcnVi),
    })
}

/// Rep(`a`) = Rep(`b`).
pub fn equiv(sem: SemanticsId, a: &Instance, b: &Instance, limits: &Limits) -> Result<Decision> {
    let fwd = implies(sem, a, b, limits)?;
    if !fwd.verdict {
        return Ok(Decision::no(fwd.method));
    }
    let bwd = implies(sem, b, a, limits)?;
    if !bwd.verdict {
        return Ok(Decision::no(bwd.method));
    }
    let witness = match (fwd.witness, bwd.witness) {
        (Some(x), Some(y)) => Some(Witness::Both(Box::new(x), Box::new(y))),
        _ => None,
    };
    Ok(Decision {
        verdict: true,
        witness,
        method: fwd.method,
    })
}

fn fresh_open(names: &mut NameSupply) -> Term {
    Term::Null(Null::open(names.fresh("u").as_str()))
}

/// Normal form with the same OCWA^LS semantics. An occurrence is flagged if
/// it is an open occurrence of a constant or of a null that occurs closed
/// elsewhere. Each atom with flagged occurrences is kept with them closed,
/// plus a copy in which they are replaced by fresh open nulls.
pub fn normalize_ls(raw: &RawInstance) -> Instance {
    let mut names = NameSupply::new();
    for a in raw.atoms() {
        names.reserve(&a.relation);
        for o in &a.args {
            names.reserve(o.term.symbol());
        }
    }
    let closed_somewhere: BTreeSet<&str> = raw
        .atoms()
        .iter()
        .flat_map(|a| a.args.iter())
        .filter(|o| o.ann == Ann::Closed && o.term.is_null())
        .map(|o| o.term.symbol().as_str())
        .collect();
    let flagged = |o: &OccTerm| {
        o.ann == Ann::Open
            && match &o.term {
                Term::Const(_) => true,
                Term::Null(n) => closed_somewhere.contains(n.name.as_str()),
            }
    };
    let settle = |t: &Term| match t {
        Term::Null(n) => Term::Null(Null {
            name: n.name.clone(),
            ann: if closed_somewhere.contains(n.name.as_str()) {
                Ann::Closed
            } else {
                Ann::Open
            },
        }),
        c => c.clone(),
    };
    let mut atoms = Vec::new();
    for a in raw.atoms() {
        atoms.push(Atom {
            relation: a.relation.clone(),
            args: a.args.iter().map(|o| settle(&o.term)).collect(),
        });
        if a.args.iter().any(flagged) {
            atoms.push(Atom {
                relation: a.relation.clone(),
                args: a
                    .args
                    .iter()
                    .map(|o| {
                        if flagged(o) {
                            fresh_open(&mut names)
                        } else {
                            settle(&o.term)
                        }
                    })
                    .collect(),
            });
        }
    }
    make_instance(atoms).expect("normalization yields normal form")
}

/// Adds, for each atom, a copy with every open-null occurrence replaced by
/// a distinct fresh open null. The result has the same OCWA^LS semantics
/// as `a`, and its OCWA* semantics coincides with it.
pub fn ls_expand(a: &Instance) -> Instance {
    let mut names = NameSupply::new();
    names.reserve_instance(a);
    let mut atoms: Vec<Atom> = a.atoms().iter().cloned().collect();
    for atom in a.atoms() {
        if atom.nulls().any(|n| !n.is_closed()) {
            atoms.push(atom.map_terms(|t| match t {
                Term::Null(n) if !n.is_closed() => fresh_open(&mut names),
                other => other.clone(),
            }));
        }
    }
    make_instance(atoms).expect("expansion preserves normal form")
}
