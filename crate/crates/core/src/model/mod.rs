//! Terms, atoms and instances in normal form, plus the raw (occurrence
//! annotated) form accepted by the Libkin–Sirangelo style semantics.

mod canon;
mod names;

pub use canon::canonicalize;
pub use names::NameSupply;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Interned-by-sharing identifier used for relation names, constants and nulls.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Open or closed, for nulls and for single occurrences in raw instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ann {
    Open,
    Closed,
}

/// A labeled null. The annotation is part of its identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Null {
    pub name: Symbol,
    pub ann: Ann,
}

impl Null {
    pub fn open(name: &str) -> Self {
        Null {
            name: Symbol::new(name),
            ann: Ann::Open,
        }
    }

    pub fn closed(name: &str) -> Self {
        Null {
            name: Symbol::new(name),
            ann: Ann::Closed,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.ann == Ann::Closed
    }
}

/// Constants sort before nulls; within a kind, by symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Symbol),
    Null(Null),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(Symbol::new(name))
    }

    pub fn open(name: &str) -> Self {
        Term::Null(Null::open(name))
    }

    pub fn closed(name: &str) -> Self {
        Term::Null(Null::closed(name))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn as_null(&self) -> Option<&Null> {
        match self {
            Term::Null(n) => Some(n),
            Term::Const(_) => None,
        }
    }

    pub fn symbol(&self) -> &Symbol {
        match self {
            Term::Const(s) => s,
            Term::Null(n) => &n.name,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) => write!(f, "{s}"),
            Term::Null(Null {
                name,
                ann: Ann::Open,
            }) => write!(f, "?{name}"),
            Term::Null(Null {
                name,
                ann: Ann::Closed,
            }) => write!(f, "!{name}"),
        }
    }
}

impl From<Null> for Term {
    fn from(n: Null) -> Self {
        Term::Null(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: &str, args: Vec<Term>) -> Self {
        Atom {
            relation: Symbol::new(relation),
            args,
        }
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom {
            relation: self.relation.clone(),
            args: self.args.iter().map(&mut f).collect(),
        }
    }

    pub fn nulls(&self) -> impl Iterator<Item = &Null> {
        self.args.iter().filter_map(Term::as_null)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A finite set of atoms in normal form. `closed_nulls` lists the closed
/// nulls in order of first occurrence under the sorted atom order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Instance {
    atoms: BTreeSet<Atom>,
    closed_nulls: Vec<Null>,
}

/// An instance without nulls. Kept as a plain `Instance`; use
/// [`Instance::is_complete`] to check.
pub type CompleteInstance = Instance;

fn check_arities<'a>(atoms: impl Iterator<Item = (&'a Symbol, usize)>) -> Result<()> {
    let mut arity: HashMap<&Symbol, usize> = HashMap::new();
    for (rel, n) in atoms {
        let expected = *arity.entry(rel).or_insert(n);
        if expected != n {
            return Err(Error::ArityMismatch {
                relation: rel.to_string(),
                expected,
                found: n,
            });
        }
    }
    Ok(())
}

/// Builds a validated, deduplicated instance.
pub fn make_instance(atoms: impl IntoIterator<Item = Atom>) -> Result<Instance> {
    let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
    check_arities(atoms.iter().map(|a| (&a.relation, a.args.len())))?;
    let mut seen: HashMap<&Symbol, Ann> = HashMap::new();
    for atom in &atoms {
        for n in atom.nulls() {
            match seen.insert(&n.name, n.ann) {
                Some(prev) if prev != n.ann => {
                    return Err(Error::NormalFormViolation(format!(
                        "null {} occurs both open and closed",
                        n.name
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(Instance::from_checked(atoms))
}

impl Instance {
    pub fn empty() -> Self {
        Instance::default()
    }

    pub(crate) fn from_checked(atoms: BTreeSet<Atom>) -> Self {
        let mut closed_nulls = Vec::new();
        let mut seen = BTreeSet::new();
        for atom in &atoms {
            for n in atom.nulls() {
                if n.is_closed() && seen.insert(n.clone()) {
                    closed_nulls.push(n.clone());
                }
            }
        }
        Instance {
            atoms,
            closed_nulls,
        }
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn closed_nulls(&self) -> &[Null] {
        &self.closed_nulls
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    /// Active domain.
    pub fn adom(&self) -> BTreeSet<Term> {
        self.atoms
            .iter()
            .flat_map(|a| a.args.iter().cloned())
            .collect()
    }

    pub fn nulls(&self) -> BTreeSet<Null> {
        self.atoms
            .iter()
            .flat_map(|a| a.nulls().cloned())
            .collect()
    }

    /// Nulls in order of first occurrence under the sorted atom order.
    pub fn nulls_in_order(&self) -> Vec<Null> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in &self.atoms {
            for n in a.nulls() {
                if seen.insert(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    pub fn open_nulls(&self) -> BTreeSet<Null> {
        self.nulls().into_iter().filter(|n| !n.is_closed()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        self.atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Null(_) => None,
            })
            .collect()
    }

    /// Every symbol in use, relations included.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            out.insert(a.relation.clone());
            for t in &a.args {
                out.insert(t.symbol().clone());
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.atoms.iter().all(|a| a.nulls().next().is_none())
    }

    pub fn arities(&self) -> BTreeMap<Symbol, usize> {
        self.atoms
            .iter()
            .map(|a| (a.relation.clone(), a.args.len()))
            .collect()
    }

    /// Applies a term map to every atom and re-validates.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Result<Instance> {
        make_instance(self.atoms.iter().map(|a| a.map_terms(&mut f)))
    }

    /// Union as sets of atoms (no renaming).
    pub fn union(&self, other: &Instance) -> Result<Instance> {
        make_instance(self.atoms.iter().chain(other.atoms.iter()).cloned())
    }

    /// The same atoms with the given closed nulls re-annotated open.
    pub fn open_up(&self, which: &[Null]) -> Result<Instance> {
        self.map_terms(|t| match t {
            Term::Null(n) if which.contains(n) => Term::Null(Null {
                name: n.name.clone(),
                ann: Ann::Open,
            }),
            other => other.clone(),
        })
    }

    /// Subinstance on the given atom subset.
    pub fn restrict(&self, keep: impl Fn(&Atom) -> bool) -> Instance {
        Instance::from_checked(self.atoms.iter().filter(|a| keep(a)).cloned().collect())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// A term occurrence with its own annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccTerm {
    pub term: Term,
    pub ann: Ann,
}

impl OccTerm {
    /// Occurrence carrying the term's default annotation (closed for
    /// constants).
    pub fn plain(term: Term) -> Self {
        let ann = match &term {
            Term::Const(_) => Ann::Closed,
            Term::Null(n) => n.ann,
        };
        OccTerm { term, ann }
    }
}

impl fmt::Display for OccTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.ann {
            Ann::Open => "o",
            Ann::Closed => "c",
        };
        write!(f, "{}:{}", self.term, tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawAtom {
    pub relation: Symbol,
    pub args: Vec<OccTerm>,
}

impl RawAtom {
    /// Underlying atom with occurrence annotations dropped. Nulls are
    /// identified by name only, so every null comes back open.
    pub fn plain(&self) -> Atom {
        Atom {
            relation: self.relation.clone(),
            args: self.args.iter().map(|o| strip(&o.term)).collect(),
        }
    }
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

impl fmt::Display for RawAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Instance whose occurrences carry individual annotations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RawInstance {
    atoms: BTreeSet<RawAtom>,
}

impl RawInstance {
    pub fn new(atoms: impl IntoIterator<Item = RawAtom>) -> Result<Self> {
        let atoms: BTreeSet<RawAtom> = atoms.into_iter().collect();
        check_arities(atoms.iter().map(|a| (&a.relation, a.args.len())))?;
        Ok(RawInstance { atoms })
    }

    pub fn atoms(&self) -> &BTreeSet<RawAtom> {
        &self.atoms
    }

    /// The underlying instance with annotations dropped (all nulls open).
    pub fn plain(&self) -> Instance {
        Instance::from_checked(self.atoms.iter().map(RawAtom::plain).collect())
    }

    /// Every occurrence taking the annotation of the instance's own terms.
    pub fn from_instance(a: &Instance) -> Self {
        RawInstance {
            atoms: a
                .atoms()
                .iter()
                .map(|atom| RawAtom {
                    relation: atom.relation.clone(),
                    args: atom.args.iter().cloned().map(OccTerm::plain).collect(),
                })
                .collect(),
        }
    }
}

/// Checks both normal-form clauses and drops occurrence annotations.
pub fn validate_normal(raw: &RawInstance) -> Result<Instance> {
    let mut anns: HashMap<&Symbol, (Ann, &RawAtom)> = HashMap::new();
    for atom in raw.atoms() {
        for occ in &atom.args {
            match &occ.term {
                Term::Const(c) => {
                    if occ.ann == Ann::Open {
                        return Err(Error::NormalFormViolation(format!(
                            "constant {c} annotated open in {atom}"
                        )));
                    }
                }
                Term::Null(n) => {
                    if let Some((prev, at)) = anns.insert(&n.name, (occ.ann, atom)) {
                        if prev != occ.ann {
                            return Err(Error::NormalFormViolation(format!(
                                "null {} annotated inconsistently in {at} and {atom}",
                                n.name
                            )));
                        }
                    }
                }
            }
        }
    }
    make_instance(raw.atoms().iter().map(|a| Atom {
        relation: a.relation.clone(),
        args: a
            .args
            .iter()
            .map(|o| match &o.term {
                Term::Null(n) => Term::Null(Null {
                    name: n.name.clone(),
                    ann: o.ann,
                }),
                c => c.clone(),
            })
            .collect(),
    }))
}

/// Replaces closed nulls according to `binding`.
pub fn substitute(a: &Instance, binding: &BTreeMap<Null, Term>) -> Result<Instance> {
    for n in binding.keys() {
        if !n.is_closed() || !a.closed_nulls().contains(n) {
            return Err(Error::Precondition(format!(
                "{} is not a closed null of the instance",
                Term::Null(n.clone())
            )));
        }
    }
    a.map_terms(|t| match t {
        Term::Null(n) => binding.get(n).cloned().unwrap_or_else(|| t.clone()),
        c => c.clone(),
    })
}

/// A freeze of `a`: every null replaced by a distinct constant that is not
/// in `adom(a)` or `reserved`. Returns the frozen instance and the map from
/// each null to its constant.
pub fn freeze(a: &Instance, reserved: &BTreeSet<Symbol>) -> (Instance, BTreeMap<Null, Symbol>) {
    let mut avoid: BTreeSet<Symbol> = reserved.clone();
    avoid.extend(a.symbols());
    let mut mapping = BTreeMap::new();
    let mut i = 0usize;
    for n in a.nulls_in_order() {
        let c = loop {
            i += 1;
            let cand = Symbol::from(format!("c{i}"));
            if !avoid.contains(&cand) {
                break cand;
            }
        };
        avoid.insert(c.clone());
        mapping.insert(n, c);
    }
    let frozen = a
        .map_terms(|t| match t {
            Term::Null(n) => Term::Const(mapping[n].clone()),
            c => c.clone(),
        })
        .expect("freezing preserves normal form");
    (frozen, mapping)
}

/// Null-disjoint union. With `share_closed` the closed nulls of `b` are
/// identified with equally named closed nulls of `a` and only open nulls are
/// renamed apart.
pub fn union_disjoint(a: &Instance, b: &Instance, share_closed: bool) -> Result<Instance> {
    let mut names = NameSupply::new();
    names.reserve_instance(a);
    names.reserve_instance(b);
    let a_nulls = a.nulls();
    let a_null_names: BTreeSet<Symbol> = a_nulls.iter().map(|n| n.name.clone()).collect();
    let mut renaming: BTreeMap<Null, Null> = BTreeMap::new();
    for n in b.nulls() {
        if share_closed && n.is_closed() {
            continue;
        }
        if a_null_names.contains(&n.name) {
            let fresh = names.fresh(n.name.as_str());
            renaming.insert(
                n.clone(),
                Null {
                    name: fresh,
                    ann: n.ann,
                },
            );
        }
    }
    let b2 = b.map_terms(|t| match t {
        Term::Null(n) => renaming
            .get(n)
            .map(|m| Term::Null(m.clone()))
            .unwrap_or_else(|| t.clone()),
        c => c.clone(),
    })?;
    a.union(&b2)
}

/// Active domain.
pub fn adom(a: &Instance) -> BTreeSet<Term> {
    a.adom()
}
