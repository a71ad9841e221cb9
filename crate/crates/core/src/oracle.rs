//! Brute-force reference deciders and seeded random generators for
//! property testing. The deciders enumerate every total function from
//! nulls to the target's active domain and share no search code with the
//! engine.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hom::Hom;
use crate::limits::Limits;
use crate::model::{make_instance, Ann, Atom, Instance, Null, RawInstance, Symbol, Term};
use crate::query::{Formula, QTerm, Query};
use crate::semantics::{ls_expand, SemanticsId};

/// Every homomorphism from `a` to `b`, by exhaustive enumeration of
/// null assignments in lexicographic order.
pub fn brute_homs(a: &Instance, b: &Instance, limits: &Limits) -> Result<Vec<Hom>> {
    let nulls: Vec<Null> = a.nulls().into_iter().collect();
    let values: Vec<Term> = b.adom().into_iter().collect();
    let mut total: usize = 1;
    for _ in &nulls {
        total = total.saturating_mul(values.len());
    }
    if nulls.is_empty() {
        total = 1;
    }
    Limits::check(total, limits.brute, "brute-force assignments")?;
    let sa = Arc::new(a.clone());
    let sb = Arc::new(b.clone());
    let mut out = Vec::new();
    if !nulls.is_empty() && values.is_empty() {
        return Ok(out);
    }
    // terms as integers: values of `b` first, then constants of `a` outside it
    let mut ids: BTreeMap<Term, usize> = values.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let null_ix: BTreeMap<&Null, usize> = nulls.iter().enumerate().map(|(i, n)| (n, i)).collect();
    enum Slot {
        Null(usize),
        Fixed(usize),
    }
    let src: Vec<(&Symbol, Vec<Slot>)> = a
        .atoms()
        .iter()
        .map(|atom| {
            let slots = atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Null(n) => Slot::Null(null_ix[n]),
                    c => {
                        let next = ids.len();
                        Slot::Fixed(*ids.entry(c.clone()).or_insert(next))
                    }
                })
                .collect();
            (&atom.relation, slots)
        })
        .collect();
    let dst: BTreeSet<(&Symbol, Vec<usize>)> = b
        .atoms()
        .iter()
        .map(|atom| (&atom.relation, atom.args.iter().map(|t| ids[t]).collect()))
        .collect();
    let mut digits = vec![0usize; nulls.len()];
    loop {
        let ok = src.iter().all(|(rel, slots)| {
            let img: Vec<usize> = slots
                .iter()
                .map(|s| match *s {
                    Slot::Null(i) => digits[i],
                    Slot::Fixed(id) => id,
                })
                .collect();
            dst.contains(&(*rel, img))
        });
        if ok {
            let map: BTreeMap<Term, Term> = nulls
                .iter()
                .zip(&digits)
                .map(|(n, &d)| (Term::Null(n.clone()), values[d].clone()))
                .collect();
            out.push(Hom::unchecked(sa.clone(), sb.clone(), map));
        }
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < values.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn union_of_images<'a>(homs: impl Iterator<Item = &'a Hom>) -> BTreeSet<Atom> {
    homs.flat_map(|h| h.source().atoms().iter().map(move |a| h.apply_atom(a)))
        .collect()
}

/// Some set of homomorphisms agreeing on the closed nulls of `b` jointly
/// hits every atom of `t`.
pub fn brute_rcn(b: &Instance, t: &Instance, limits: &Limits) -> Result<bool> {
    if t.is_empty() {
        return Ok(true);
    }
    let homs = brute_homs(b, t, limits)?;
    let mut groups: BTreeMap<Vec<Term>, BTreeSet<Atom>> = BTreeMap::new();
    for h in &homs {
        let sigma: Vec<Term> = b.closed_nulls().iter().map(|y| h.apply_null(y)).collect();
        groups
            .entry(sigma)
            .or_default()
            .extend(union_of_images(std::iter::once(h)));
    }
    Ok(groups.values().any(|g| g == t.atoms()))
}

/// `n` copies of `a` sharing constants and closed nulls. Copies after the
/// first rename each open null `x` to `x#m`.
pub fn brute_power(a: &Instance, n: usize) -> Instance {
    let mut atoms = BTreeSet::new();
    for m in 1..=n {
        for atom in a.atoms() {
            atoms.insert(atom.map_terms(|t| match t {
                Term::Null(x) if x.ann == Ann::Open && m > 1 => {
                    Term::Null(Null::open(&format!("{}#{m}", x.name)))
                }
                other => other.clone(),
            }));
        }
    }
    make_instance(atoms).expect("copies of a normal instance")
}

fn ls_clauses(raw: &RawInstance, i: &Instance, limits: &Limits) -> Result<bool> {
    let plain = raw.plain();
    for h in brute_homs(&plain, i, limits)? {
        let ok = i.atoms().iter().all(|tuple| {
            raw.atoms().iter().any(|ra| {
                ra.relation == tuple.relation
                    && ra.args.len() == tuple.args.len()
                    && ra.args.iter().zip(&tuple.args).all(|(occ, v)| {
                        if occ.ann == Ann::Open {
                            return true;
                        }
                        let t = match &occ.term {
                            Term::Null(n) => Term::Null(Null::open(n.name.as_str())),
                            c => c.clone(),
                        };
                        h.apply(&t) == *v
                    })
            })
        });
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Ground-truth membership of the complete instance `i` in Rep(`a`).
pub fn brute_member(sem: SemanticsId, a: &Instance, i: &Instance, limits: &Limits) -> Result<bool> {
    if !i.is_complete() {
        return Err(Error::Precondition("member candidates must be complete".into()));
    }
    Ok(match sem {
        SemanticsId::Owa => !brute_homs(a, i, limits)?.is_empty(),
        SemanticsId::Cwa => brute_homs(a, i, limits)?.iter().any(|h| {
            union_of_images(std::iter::once(h)) == *i.atoms()
        }),
        SemanticsId::Pcwa => union_of_images(brute_homs(a, i, limits)?.iter()) == *i.atoms(),
        SemanticsId::OcwaStar => brute_rcn(a, i, limits)?,
        SemanticsId::OcwaLs => ls_clauses(&RawInstance::from_instance(a), i, limits)?,
    })
}

/// Ground-truth implication Rep(`a`) ⊆ Rep(`b`). OCWA* materializes
/// `a^(|Y|+1)` and searches every closed-null assignment; OCWA^LS goes
/// through the linear-size expansion first.
pub fn brute_implies(sem: SemanticsId, a: &Instance, b: &Instance, limits: &Limits) -> Result<bool> {
    Ok(match sem {
        SemanticsId::Owa => !brute_homs(b, a, limits)?.is_empty(),
        SemanticsId::Cwa => brute_homs(b, a, limits)?
            .iter()
            .any(|h| union_of_images(std::iter::once(h)) == *a.atoms()),
        SemanticsId::Pcwa => union_of_images(brute_homs(b, a, limits)?.iter()) == *a.atoms(),
        SemanticsId::OcwaStar => {
            let p = brute_power(a, b.closed_nulls().len() + 1);
            brute_rcn(b, &p, limits)?
        }
        SemanticsId::OcwaLs => {
            return brute_implies(SemanticsId::OcwaStar, &ls_expand(a), &ls_expand(b), limits)
        }
    })
}

/// Bounds for random instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub seed: u64,
    pub max_atoms: usize,
    pub max_arity: usize,
    pub max_relations: usize,
    pub max_open_nulls: usize,
    pub max_closed_nulls: usize,
    pub max_constants: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            max_atoms: 4,
            max_arity: 3,
            max_relations: 2,
            max_open_nulls: 3,
            max_closed_nulls: 2,
            max_constants: 3,
        }
    }
}

impl GenParams {
    pub fn with_seed(seed: u64) -> Self {
        GenParams {
            seed,
            ..Self::default()
        }
    }

    /// No closed nulls.
    pub fn unannotated(mut self) -> Self {
        self.max_closed_nulls = 0;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

const OPEN_NAMES: [&str; 8] = ["x", "y", "z", "w", "u", "v", "s", "t"];
const CLOSED_NAMES: [&str; 6] = ["X", "Y", "Z", "W", "U", "V"];
const CONST_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const REL_NAMES: [&str; 4] = ["R", "S", "T", "P"];

/// Relation names with arities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub relations: Vec<(Symbol, usize)>,
}

impl Schema {
    pub fn random(rng: &mut impl Rng, p: &GenParams) -> Schema {
        let n = rng.gen_range(1..=p.max_relations.clamp(1, REL_NAMES.len()));
        Schema {
            relations: (0..n)
                .map(|i| (Symbol::from(REL_NAMES[i]), rng.gen_range(1..=p.max_arity.max(1))))
                .collect(),
        }
    }
}

fn random_term(rng: &mut impl Rng, p: &GenParams) -> Term {
    let open = p.max_open_nulls.min(OPEN_NAMES.len());
    let closed = p.max_closed_nulls.min(CLOSED_NAMES.len());
    let consts = p.max_constants.min(CONST_NAMES.len());
    let mut kinds = Vec::new();
    if open > 0 {
        kinds.extend([0, 0, 0]);
    }
    if closed > 0 {
        kinds.push(1);
    }
    if consts > 0 {
        kinds.extend([2, 2]);
    }
    match kinds.choose(rng) {
        Some(0) => Term::open(OPEN_NAMES[rng.gen_range(0..open)]),
        Some(1) => Term::closed(CLOSED_NAMES[rng.gen_range(0..closed)]),
        Some(_) => Term::constant(CONST_NAMES[rng.gen_range(0..consts)]),
        None => Term::constant("a"),
    }
}

fn random_atom(rng: &mut impl Rng, schema: &Schema, p: &GenParams) -> Atom {
    let (rel, arity) = schema.relations.choose(rng).expect("non-empty schema").clone();
    Atom {
        relation: rel,
        args: (0..arity).map(|_| random_term(rng, p)).collect(),
    }
}

pub fn random_instance_in(rng: &mut impl Rng, schema: &Schema, p: &GenParams) -> Instance {
    if p.max_atoms == 0 {
        return Instance::empty();
    }
    let n = rng.gen_range(1..=p.max_atoms);
    let open = p.max_open_nulls.min(OPEN_NAMES.len());
    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    for _ in 0..n {
        // variants of earlier atoms make redundancy (non-trivial cores) common
        let atom = if !atoms.is_empty() && open > 0 && rng.gen_bool(0.3) {
            let mut v = atoms.choose(rng).expect("non-empty").clone();
            let at = rng.gen_range(0..v.args.len());
            v.args[at] = Term::open(OPEN_NAMES[rng.gen_range(0..open)]);
            v
        } else {
            random_atom(rng, schema, p)
        };
        atoms.push(atom);
    }
    make_instance(atoms).expect("generated in normal form")
}

/// Deterministic per seed.
pub fn random_instance(p: &GenParams) -> Instance {
    let mut rng = p.rng();
    let schema = Schema::random(&mut rng, p);
    random_instance_in(&mut rng, &schema, p)
}

/// A related pair over a common schema: independent, or the second an
/// image of the first, or the first plus an atom; then maybe swapped.
pub fn random_pair(p: &GenParams) -> (Instance, Instance) {
    let mut rng = p.rng();
    let schema = Schema::random(&mut rng, p);
    let a = random_instance_in(&mut rng, &schema, p);
    let b = match rng.gen_range(0..3) {
        0 => random_instance_in(&mut rng, &schema, p),
        1 => random_image(&mut rng, &a, p),
        _ => {
            let extra = random_atom(&mut rng, &schema, p);
            let mut atoms: Vec<Atom> = a.atoms().iter().cloned().collect();
            atoms.push(extra);
            make_instance(atoms).unwrap_or_else(|_| a.clone())
        }
    };
    if rng.gen_bool(0.5) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Image of `a` under a random map of its open nulls.
pub fn random_image(rng: &mut impl Rng, a: &Instance, p: &GenParams) -> Instance {
    let pool: Vec<Term> = a.adom().into_iter().collect();
    let mut map = BTreeMap::new();
    for x in a.open_nulls() {
        if rng.gen_bool(0.5) {
            let t = if rng.gen_bool(0.7) && !pool.is_empty() {
                pool.choose(rng).expect("non-empty").clone()
            } else {
                random_term(rng, p)
            };
            map.insert(Term::Null(x), t);
        }
    }
    make_instance(
        a.atoms()
            .iter()
            .map(|atom| atom.map_terms(|t| map.get(t).cloned().unwrap_or_else(|| t.clone()))),
    )
    .unwrap_or_else(|_| a.clone())
}

/// A random member of Rep*(`a`): closed nulls get one value each, then
/// `k` independent valuations of the open nulls are united.
pub fn sample_member(rng: &mut impl Rng, a: &Instance, constants: &[Symbol], k: usize) -> Instance {
    let pick = |rng: &mut dyn rand::RngCore| Term::Const(constants[rng.gen_range(0..constants.len())].clone());
    let sigma: BTreeMap<Term, Term> = a
        .closed_nulls()
        .iter()
        .map(|y| (Term::Null(y.clone()), pick(rng)))
        .collect();
    let mut atoms = BTreeSet::new();
    for _ in 0..k.max(1) {
        let mut v = sigma.clone();
        for x in a.open_nulls() {
            v.insert(Term::Null(x), pick(rng));
        }
        for atom in a.atoms() {
            atoms.insert(atom.map_terms(|t| v.get(t).cloned().unwrap_or_else(|| t.clone())));
        }
    }
    make_instance(atoms).expect("complete atoms")
}

/// Shrinks a counterexample pair while `still_fails` holds: first by
/// dropping atoms, then by merging nulls of equal annotation.
pub fn shrink(
    a: &Instance,
    b: &Instance,
    still_fails: &mut dyn FnMut(&Instance, &Instance) -> bool,
) -> (Instance, Instance) {
    let mut cur = (a.clone(), b.clone());
    loop {
        let mut progressed = false;
        for side in 0..2 {
            let inst = if side == 0 { &cur.0 } else { &cur.1 };
            for atom in inst.atoms().clone() {
                let smaller = (if side == 0 { &cur.0 } else { &cur.1 }).restrict(|x| *x != atom);
                let cand = if side == 0 {
                    (smaller, cur.1.clone())
                } else {
                    (cur.0.clone(), smaller)
                };
                if still_fails(&cand.0, &cand.1) {
                    cur = cand;
                    progressed = true;
                }
            }
        }
        for side in 0..2 {
            let inst = if side == 0 { cur.0.clone() } else { cur.1.clone() };
            let nulls: Vec<Null> = inst.nulls().into_iter().collect();
            'pairs: for i in 0..nulls.len() {
                for j in i + 1..nulls.len() {
                    if nulls[i].ann != nulls[j].ann {
                        continue;
                    }
                    let (x, y) = (Term::Null(nulls[i].clone()), Term::Null(nulls[j].clone()));
                    let Ok(merged) = inst.map_terms(|t| if *t == y { x.clone() } else { t.clone() }) else {
                        continue;
                    };
                    let cand = if side == 0 {
                        (merged, cur.1.clone())
                    } else {
                        (cur.0.clone(), merged)
                    };
                    if still_fails(&cand.0, &cand.1) {
                        cur = cand;
                        progressed = true;
                        break 'pairs;
                    }
                }
            }
        }
        if !progressed {
            return cur;
        }
    }
}

struct QueryGen<'a> {
    schema: &'a Schema,
    constants: Vec<Symbol>,
    fresh: usize,
}

impl QueryGen<'_> {
    fn var(&mut self) -> Symbol {
        self.fresh += 1;
        Symbol::from(format!("v{}", self.fresh))
    }

    fn arg(&self, rng: &mut impl Rng, scope: &[Symbol]) -> QTerm {
        if !scope.is_empty() && (self.constants.is_empty() || rng.gen_bool(0.8)) {
            QTerm::Var(scope.choose(rng).expect("non-empty").clone())
        } else {
            QTerm::Const(self.constants.choose(rng).expect("constants").clone())
        }
    }

    fn atom(&mut self, rng: &mut impl Rng, scope: &[Symbol]) -> Formula {
        let (rel, arity) = self.schema.relations.choose(rng).expect("schema").clone();
        Formula::Atom {
            relation: rel,
            args: (0..arity).map(|_| self.arg(rng, scope)).collect(),
        }
    }

    fn formula(&mut self, rng: &mut impl Rng, scope: &[Symbol], depth: usize) -> Formula {
        if scope.is_empty() && self.constants.is_empty() {
            let v = self.var();
            let body = self.formula(rng, &[v.clone()], depth.saturating_sub(1));
            return Formula::Exists(vec![v], Box::new(body));
        }
        let choice = if depth == 0 { 0 } else { rng.gen_range(0..6) };
        match choice {
            0 | 1 => self.atom(rng, scope),
            2 => Formula::And(vec![
                self.formula(rng, scope, depth - 1),
                self.formula(rng, scope, depth - 1),
            ]),
            3 => Formula::Or(vec![
                self.formula(rng, scope, depth - 1),
                self.formula(rng, scope, depth - 1),
            ]),
            4 => {
                let v = self.var();
                let mut inner = scope.to_vec();
                inner.push(v.clone());
                Formula::Exists(vec![v], Box::new(self.formula(rng, &inner, depth - 1)))
            }
            _ => {
                let (relation, arity) = self.schema.relations.choose(rng).expect("schema").clone();
                let eq = rng.gen_bool(0.15);
                let vars: Vec<Symbol> = (0..if eq { 2 } else { arity }).map(|_| self.var()).collect();
                let guard = if eq {
                    Formula::Eq(QTerm::Var(vars[0].clone()), QTerm::Var(vars[1].clone()))
                } else {
                    Formula::Atom {
                        relation,
                        args: vars.iter().cloned().map(QTerm::Var).collect(),
                    }
                };
                let body = if rng.gen_bool(0.3) {
                    let a = QTerm::Var(vars.choose(rng).expect("vars").clone());
                    let b = self.arg(rng, &vars);
                    Formula::Eq(a, b)
                } else {
                    self.formula(rng, &vars, depth - 1)
                };
                Formula::ForallGuard {
                    vars,
                    guard: Box::new(guard),
                    body: Box::new(body),
                }
            }
        }
    }
}

/// A random query of the supported class over `schema`, using the given
/// constants.
pub fn random_query(rng: &mut impl Rng, schema: &Schema, constants: &[Symbol]) -> Query {
    let mut g = QueryGen {
        schema,
        constants: constants.to_vec(),
        fresh: 0,
    };
    let arity = rng.gen_range(0..=2);
    let head: Vec<Symbol> = (0..arity).map(|i| Symbol::from(format!("h{}", i + 1))).collect();
    let depth = rng.gen_range(1..=3);
    let body = g.formula(rng, &head, depth);
    // every head variable is guarded by an atom that uses it, so answers do
    // not depend on the active domain
    let mut parts = vec![body];
    for h in &head {
        let Formula::Atom { relation, mut args } = g.atom(rng, std::slice::from_ref(h)) else {
            unreachable!("atom")
        };
        let at = rng.gen_range(0..args.len());
        args[at] = QTerm::Var(h.clone());
        parts.push(Formula::Atom { relation, args });
    }
    let body = if parts.len() == 1 {
        parts.pop().expect("body")
    } else {
        Formula::And(parts)
    };
    Query {
        name: "Q".into(),
        head,
        body,
    }
}

/// Complete instance over the constants `a, b, c, ...` for membership
/// sweeps: every subset of the given candidate atoms up to `max_atoms`.
pub fn complete_instances(candidates: &[Atom], max_atoms: usize) -> Vec<Instance> {
    let mut out = vec![Instance::empty()];
    let mut frontier: Vec<(usize, Vec<Atom>)> = vec![(0, Vec::new())];
    for _ in 0..max_atoms {
        let mut next = Vec::new();
        for (start, set) in &frontier {
            for (i, c) in candidates.iter().enumerate().skip(*start) {
                let mut s = set.clone();
                s.push(c.clone());
                out.push(make_instance(s.clone()).expect("complete atoms"));
                next.push((i + 1, s));
            }
        }
        frontier = next;
    }
    out
}
