//! Homomorphisms between instances and the searches built on them.

mod cover;
mod iso;
mod power;
pub(crate) mod search;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{Atom, Instance, Null, Symbol, Term};
use search::{Options, Problem, Target};

pub use cover::{exists_cover, exists_rcn_cover, CoverWitness, RcnWitness};
pub use iso::{find_isomorphism, is_isomorphic, is_reflective_subinstance, Reflection};
pub use power::{collapse, fold, power, quotient, Power};

/// A map from the active domain of `source` to that of `target` sending
/// every source atom to a target atom. Terms absent from `map` are fixed.
/// Database homomorphisms fix every constant; structure homomorphisms may
/// move some.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hom {
    source: Arc<Instance>,
    target: Arc<Instance>,
    map: BTreeMap<Term, Term>,
}

impl Hom {
    /// Checks that `map` sends every atom of `source` into `target`.
    pub fn new(
        source: Arc<Instance>,
        target: Arc<Instance>,
        map: BTreeMap<Term, Term>,
    ) -> Result<Hom> {
        let h = Hom::unchecked(source, target, map);
        for a in h.source.atoms() {
            let img = h.apply_atom(a);
            if !h.target.contains(&img) {
                return Err(Error::Precondition(format!(
                    "{a} maps to {img}, which is not in the target"
                )));
            }
        }
        Ok(h)
    }

    pub(crate) fn unchecked(
        source: Arc<Instance>,
        target: Arc<Instance>,
        mut map: BTreeMap<Term, Term>,
    ) -> Hom {
        for n in source.nulls() {
            let t = Term::Null(n);
            map.entry(t.clone()).or_insert(t);
        }
        map.retain(|k, v| k.is_null() || k != v);
        Hom {
            source,
            target,
            map,
        }
    }

    pub fn identity(a: &Instance) -> Hom {
        let a = Arc::new(a.clone());
        Hom::unchecked(a.clone(), a, BTreeMap::new())
    }

    pub fn source(&self) -> &Instance {
        &self.source
    }

    pub fn target(&self) -> &Instance {
        &self.target
    }

    /// Every null of the source, plus any moved constant, with its image.
    pub fn map(&self) -> &BTreeMap<Term, Term> {
        &self.map
    }

    pub fn apply(&self, t: &Term) -> Term {
        self.map.get(t).cloned().unwrap_or_else(|| t.clone())
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        a.map_terms(|t| self.apply(t))
    }

    pub fn apply_null(&self, n: &Null) -> Term {
        self.apply(&Term::Null(n.clone()))
    }

    pub fn image(&self) -> Instance {
        Instance::from_checked(self.source.atoms().iter().map(|a| self.apply_atom(a)).collect())
    }

    pub fn is_strongly_surjective(&self) -> bool {
        self.source
            .atoms()
            .iter()
            .map(|a| self.apply_atom(a))
            .collect::<BTreeSet<_>>()
            == *self.target.atoms()
    }

    /// True if every constant is fixed.
    pub fn is_database(&self) -> bool {
        self.map.keys().all(|k| k.is_null())
    }

    /// True if the map is a bijection of active domains whose inverse is
    /// again a homomorphism.
    pub fn is_isomorphism(&self) -> bool {
        let dom = self.source.adom();
        let img: BTreeSet<Term> = dom.iter().map(|t| self.apply(t)).collect();
        img.len() == dom.len()
            && img == self.target.adom()
            && self.source.len() == self.target.len()
            && self.is_strongly_surjective()
            && dom.iter().all(|t| match (t, self.apply(t)) {
                (Term::Null(a), Term::Null(b)) => a.ann == b.ann,
                (Term::Null(_), _) | (_, Term::Null(_)) => false,
                _ => true,
            })
    }

    /// `g ∘ f`. The target of `f` must equal the source of `g`.
    pub fn compose(g: &Hom, f: &Hom) -> Result<Hom> {
        if f.target != g.source {
            return Err(Error::Precondition(
                "composition: target of the first map is not the source of the second".into(),
            ));
        }
        let map = f
            .source
            .adom()
            .into_iter()
            .map(|t| {
                let v = g.apply(&f.apply(&t));
                (t, v)
            })
            .collect();
        Ok(Hom::unchecked(f.source.clone(), g.target.clone(), map))
    }

    /// The same map read as a homomorphism into another target.
    pub fn with_target(&self, target: Arc<Instance>) -> Result<Hom> {
        Hom::new(self.source.clone(), target, self.map.clone())
    }

    /// JSON object from each mapped term to its image, keys sorted.
    pub fn to_json(&self) -> Value {
        let m: Map<String, Value> = self
            .map
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        Value::Object(m)
    }
}

impl fmt::Display for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

/// Restrictions on a homomorphism search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HomConstraint {
    /// Source terms with a required image.
    pub pinned: BTreeMap<Term, Term>,
    /// A target atom the image must contain.
    pub must_hit: Option<Atom>,
    /// Source atoms with a required image atom.
    pub atom_images: BTreeMap<Atom, Atom>,
}

impl HomConstraint {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn hitting(atom: Atom) -> Self {
        HomConstraint {
            must_hit: Some(atom),
            ..Self::default()
        }
    }

    pub fn pin(mut self, from: Term, to: Term) -> Self {
        self.pinned.insert(from, to);
        self
    }

    pub fn map_atom(mut self, from: Atom, to: Atom) -> Self {
        self.atom_images.insert(from, to);
        self
    }

    pub fn with_must_hit(mut self, atom: Atom) -> Self {
        self.must_hit = Some(atom);
        self
    }
}

#[derive(Clone, Copy, Default)]
pub(crate) struct Mode<'a> {
    pub fixed: Option<&'a BTreeSet<Symbol>>,
    pub injective_nulls: bool,
    pub surjective: bool,
    pub project: Option<&'a [Term]>,
}

/// Runs a search from `source` into the indexed `target`. `f` receives the
/// searched terms and their images (as target term ids) and returns false to
/// stop. Solutions are reported once each, including under `must_hit`,
/// which is handled by branching on the source atom that lands on it.
pub(crate) fn run_search(
    source: &Instance,
    target: &Target,
    c: &HomConstraint,
    mode: Mode<'_>,
    f: &mut dyn FnMut(&[Term], &[u32]) -> bool,
) {
    let atoms: Vec<&Atom> = source.atoms().iter().collect();
    fn base<'o>(
        c: &'o HomConstraint,
        mode: &Mode<'o>,
        images: Option<&'o BTreeMap<Atom, Atom>>,
    ) -> Options<'o> {
        Options {
            fixed: mode.fixed,
            pinned: Some(&c.pinned),
            atom_images: images,
            injective_nulls: mode.injective_nulls,
            surjective: mode.surjective,
            project: mode.project,
        }
    }
    let report_terms = |p: &Problem<'_>| -> Vec<Term> {
        if mode.project.is_some() {
            p.project_vars.iter().map(|&v| p.vars[v].clone()).collect()
        } else {
            p.vars.clone()
        }
    };
    match &c.must_hit {
        None => {
            let p = Problem::new(&atoms, target, &base(c, &mode, Some(&c.atom_images)));
            let terms = report_terms(&p);
            p.for_each(&mut |vals| f(&terms, vals));
        }
        Some(k) => {
            if target.atom_index(k).is_none() {
                return;
            }
            let mut seen: HashSet<Vec<u32>> = HashSet::new();
            for s in &atoms {
                if s.relation != k.relation || s.args.len() != k.args.len() {
                    continue;
                }
                if c.atom_images.get(*s).is_some_and(|d| d != k) {
                    continue;
                }
                let mut images = c.atom_images.clone();
                images.insert((*s).clone(), k.clone());
                let p = Problem::new(&atoms, target, &base(c, &mode, Some(&images)));
                let terms = report_terms(&p);
                let go_on = p.for_each(&mut |vals| {
                    if seen.insert(vals.to_vec()) {
                        f(&terms, vals)
                    } else {
                        true
                    }
                });
                if !go_on {
                    return;
                }
            }
        }
    }
}

pub(crate) fn build_map(target: &Target, terms: &[Term], vals: &[u32]) -> BTreeMap<Term, Term> {
    terms
        .iter()
        .zip(vals)
        .map(|(t, &v)| (t.clone(), target.terms[v as usize].clone()))
        .collect()
}

fn collect(
    a: &Instance,
    b: &Instance,
    c: &HomConstraint,
    mode: Mode<'_>,
    limit: Option<usize>,
) -> Vec<Hom> {
    if limit == Some(0) {
        return Vec::new();
    }
    let sa = Arc::new(a.clone());
    let sb = Arc::new(b.clone());
    let target = Target::new(b);
    let mut out = Vec::new();
    run_search(a, &target, c, mode, &mut |terms, vals| {
        out.push(Hom::unchecked(
            sa.clone(),
            sb.clone(),
            build_map(&target, terms, vals),
        ));
        limit.map_or(true, |l| out.len() < l)
    });
    out
}

/// Database homomorphisms from `a` to `b` satisfying `c`, in search order,
/// at most `limit` of them.
pub fn enumerate_homs(a: &Instance, b: &Instance, c: &HomConstraint, limit: Option<usize>) -> Vec<Hom> {
    collect(a, b, c, Mode::default(), limit)
}

/// First homomorphism found, if any.
pub fn find_hom(a: &Instance, b: &Instance, c: &HomConstraint) -> Option<Hom> {
    enumerate_homs(a, b, c, Some(1)).pop()
}

pub fn hom_exists(a: &Instance, b: &Instance, c: &HomConstraint) -> bool {
    find_hom(a, b, c).is_some()
}

/// A strongly surjective homomorphism from `a` onto `b`, if one exists.
pub fn find_strong_surjection(a: &Instance, b: &Instance) -> Option<Hom> {
    if a.len() < b.len() {
        return None;
    }
    collect(
        a,
        b,
        &HomConstraint::none(),
        Mode {
            surjective: true,
            ..Mode::default()
        },
        Some(1),
    )
    .pop()
}

/// Structure homomorphisms: like [`enumerate_homs`] but constants outside
/// `fix` may map anywhere.
pub fn structure_homs(a: &Instance, b: &Instance, fix: &BTreeSet<Symbol>) -> Vec<Hom> {
    collect(
        a,
        b,
        &HomConstraint::none(),
        Mode {
            fixed: Some(fix),
            ..Mode::default()
        },
        None,
    )
}

/// Image `h(A)` of a homomorphism.
pub fn image(h: &Hom) -> Instance {
    h.image()
}

pub fn is_strongly_surjective(h: &Hom) -> bool {
    h.is_strongly_surjective()
}

pub fn compose(g: &Hom, f: &Hom) -> Result<Hom> {
    Hom::compose(g, f)
}
