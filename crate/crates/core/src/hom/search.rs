//! Backtracking homomorphism search with generalized arc consistency over
//! atom constraints. Source terms that may move (nulls, and constants outside
//! the fixed set for structure homomorphisms) are variables; their domains
//! are bitsets over the target's active domain.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::model::{Atom, Instance, Symbol, Term};

/// Indexed view of a target instance.
pub(crate) struct Target {
    pub terms: Vec<Term>,
    ids: HashMap<Term, u32>,
    rels: HashMap<Symbol, usize>,
    tuples: Vec<Vec<Box<[u32]>>>,
    atom_of: Vec<Vec<usize>>,
    pub atoms: Vec<Atom>,
}

impl Target {
    pub fn new(inst: &Instance) -> Self {
        let terms: Vec<Term> = inst.adom().into_iter().collect();
        let ids: HashMap<Term, u32> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let mut rels: HashMap<Symbol, usize> = HashMap::new();
        let mut tuples: Vec<Vec<Box<[u32]>>> = Vec::new();
        let mut atom_of: Vec<Vec<usize>> = Vec::new();
        let atoms: Vec<Atom> = inst.atoms().iter().cloned().collect();
        for (ai, a) in atoms.iter().enumerate() {
            let r = *rels.entry(a.relation.clone()).or_insert_with(|| {
                tuples.push(Vec::new());
                atom_of.push(Vec::new());
                tuples.len() - 1
            });
            tuples[r].push(a.args.iter().map(|t| ids[t]).collect());
            atom_of[r].push(ai);
        }
        Target {
            terms,
            ids,
            rels,
            tuples,
            atom_of,
            atoms,
        }
    }

    pub fn id(&self, t: &Term) -> Option<u32> {
        self.ids.get(t).copied()
    }

    pub fn atom_index(&self, a: &Atom) -> Option<usize> {
        let r = *self.rels.get(&a.relation)?;
        let ids: Option<Vec<u32>> = a.args.iter().map(|t| self.id(t)).collect();
        let ids = ids?;
        self.tuples[r]
            .iter()
            .position(|t| **t == *ids)
            .map(|p| self.atom_of[r][p])
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Fixed(u32),
}

struct SrcAtom {
    rel: usize,
    slots: Vec<Slot>,
}

#[derive(Clone)]
struct Dom(Vec<u64>);

impl Dom {
    fn full(n: usize) -> Self {
        let mut w = vec![u64::MAX; n.div_ceil(64)];
        if n % 64 != 0 {
            if let Some(last) = w.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        Dom(w)
    }

    fn empty(n: usize) -> Self {
        Dom(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, v: u32) -> bool {
        self.0[(v / 64) as usize] >> (v % 64) & 1 == 1
    }

    fn insert(&mut self, v: u32) {
        self.0[(v / 64) as usize] |= 1 << (v % 64);
    }

    fn single(n: usize, v: u32) -> Self {
        let mut d = Dom::empty(n);
        d.insert(v);
        d
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    fn intersect(&mut self, other: &Dom) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            let n = *a & *b;
            changed |= n != *a;
            *a = n;
        }
        changed
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(wi as u32 * 64 + b)
            })
        })
    }
}

/// Options for one search.
#[derive(Default)]
pub(crate) struct Options<'a> {
    /// `None`: every constant is fixed (database homomorphism). `Some(s)`:
    /// only constants in `s` are fixed (structure homomorphism).
    pub fixed: Option<&'a BTreeSet<Symbol>>,
    pub pinned: Option<&'a BTreeMap<Term, Term>>,
    pub atom_images: Option<&'a BTreeMap<Atom, Atom>>,
    /// Variables must map injectively to nulls of the same annotation.
    pub injective_nulls: bool,
    /// Image must be the whole target.
    pub surjective: bool,
    /// Enumerate distinct restrictions to these source terms only.
    pub project: Option<&'a [Term]>,
}

pub(crate) struct Problem<'t> {
    t: &'t Target,
    pub vars: Vec<Term>,
    atoms: Vec<SrcAtom>,
    var_atoms: Vec<Vec<usize>>,
    init: Vec<Dom>,
    order: Vec<usize>,
    projecting: bool,
    project_len: usize,
    /// Projected variables in the order the caller listed them.
    pub project_vars: Vec<usize>,
    injective: bool,
    surjective: bool,
    feasible: bool,
}

impl<'t> Problem<'t> {
    pub fn new(source: &[&Atom], t: &'t Target, opts: &Options<'_>) -> Self {
        let n = t.terms.len();
        let movable = |term: &Term| match term {
            Term::Null(_) => true,
            Term::Const(c) => opts.fixed.is_some_and(|f| !f.contains(c)),
        };
        let mut vars: Vec<Term> = Vec::new();
        let mut var_ix: HashMap<Term, usize> = HashMap::new();
        let mut occurrences: Vec<usize> = Vec::new();
        let mut feasible = true;
        let mut atoms = Vec::new();
        for a in source {
            let Some(&rel) = t.rels.get(&a.relation) else {
                feasible = false;
                continue;
            };
            if t.tuples[rel].first().is_some_and(|tp| tp.len() != a.args.len()) {
                feasible = false;
                continue;
            }
            let slots = a
                .args
                .iter()
                .map(|term| {
                    if movable(term) {
                        let ix = *var_ix.entry(term.clone()).or_insert_with(|| {
                            vars.push(term.clone());
                            occurrences.push(0);
                            vars.len() - 1
                        });
                        occurrences[ix] += 1;
                        Slot::Var(ix)
                    } else {
                        match t.id(term) {
                            Some(id) => Slot::Fixed(id),
                            None => {
                                feasible = false;
                                Slot::Fixed(0)
                            }
                        }
                    }
                })
                .collect();
            atoms.push(SrcAtom { rel, slots });
        }
        let mut var_atoms = vec![Vec::new(); vars.len()];
        for (ai, a) in atoms.iter().enumerate() {
            for s in &a.slots {
                if let Slot::Var(v) = s {
                    if var_atoms[*v].last() != Some(&ai) {
                        var_atoms[*v].push(ai);
                    }
                }
            }
        }
        let mut init: Vec<Dom> = vec![Dom::full(n); vars.len()];
        if opts.injective_nulls {
            for (v, term) in vars.iter().enumerate() {
                let mut d = Dom::empty(n);
                if let Term::Null(src) = term {
                    for (i, tt) in t.terms.iter().enumerate() {
                        if matches!(tt, Term::Null(tn) if tn.ann == src.ann) {
                            d.insert(i as u32);
                        }
                    }
                }
                init[v] = d;
            }
        }
        if let Some(pinned) = opts.pinned {
            for (from, to) in pinned {
                match var_ix.get(from) {
                    Some(&v) => match t.id(to) {
                        Some(id) => {
                            let s = Dom::single(n, id);
                            init[v].intersect(&s);
                        }
                        None => feasible = false,
                    },
                    None => {
                        // pinning a non-variable: only consistent if it is a fixed constant mapped to itself
                        if from.is_const() && from != to && !movable(from) {
                            feasible = false;
                        }
                    }
                }
            }
        }
        if let Some(images) = opts.atom_images {
            for (src, dst) in images {
                if src.relation != dst.relation || src.args.len() != dst.args.len() {
                    feasible = false;
                    continue;
                }
                for (st, dt) in src.args.iter().zip(&dst.args) {
                    let Some(did) = t.id(dt) else {
                        feasible = false;
                        continue;
                    };
                    match var_ix.get(st) {
                        Some(&v) => {
                            init[v].intersect(&Dom::single(n, did));
                        }
                        None => {
                            if t.id(st) != Some(did) {
                                feasible = false;
                            }
                        }
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by(|&a, &b| occurrences[b].cmp(&occurrences[a]).then(vars[a].cmp(&vars[b])));
        let mut project_len = 0;
        let mut project_vars = Vec::new();
        if let Some(proj) = opts.project {
            for p in proj {
                if let Some(&v) = var_ix.get(p) {
                    if !project_vars.contains(&v) {
                        project_vars.push(v);
                    }
                }
            }
            let mut front = project_vars.clone();
            front.sort_by_key(|v| order.iter().position(|o| o == v));
            front.dedup();
            project_len = front.len();
            let rest: Vec<usize> = order.iter().copied().filter(|v| !front.contains(v)).collect();
            order = front.into_iter().chain(rest).collect();
        }
        Problem {
            t,
            vars,
            atoms,
            var_atoms,
            init,
            order,
            projecting: opts.project.is_some(),
            project_len,
            project_vars,
            injective: opts.injective_nulls,
            surjective: opts.surjective,
            feasible,
        }
    }

    fn revise(&self, dom: &mut [Dom], queue: impl IntoIterator<Item = usize>) -> bool {
        let n = self.t.terms.len();
        let mut queue: VecDeque<usize> = queue.into_iter().collect();
        let mut queued: Vec<bool> = vec![false; self.atoms.len()];
        for &a in &queue {
            queued[a] = true;
        }
        while let Some(ai) = queue.pop_front() {
            queued[ai] = false;
            let atom = &self.atoms[ai];
            let mut support: Vec<Option<Dom>> = vec![None; atom.slots.len()];
            let mut any = false;
            'tuples: for tuple in &self.t.tuples[atom.rel] {
                let mut bound: [(usize, u32); 16] = [(usize::MAX, 0); 16];
                let mut nb = 0usize;
                let mut spill: Vec<(usize, u32)> = Vec::new();
                for (slot, &val) in atom.slots.iter().zip(tuple.iter()) {
                    match *slot {
                        Slot::Fixed(f) => {
                            if f != val {
                                continue 'tuples;
                            }
                        }
                        Slot::Var(v) => {
                            if !dom[v].contains(val) {
                                continue 'tuples;
                            }
                            let prior = bound[..nb]
                                .iter()
                                .chain(spill.iter())
                                .find(|(w, _)| *w == v)
                                .map(|(_, x)| *x);
                            match prior {
                                Some(x) if x != val => continue 'tuples,
                                Some(_) => {}
                                None => {
                                    if nb < bound.len() {
                                        bound[nb] = (v, val);
                                        nb += 1;
                                    } else {
                                        spill.push((v, val));
                                    }
                                }
                            }
                        }
                    }
                }
                any = true;
                for (pos, (slot, &val)) in atom.slots.iter().zip(tuple.iter()).enumerate() {
                    if let Slot::Var(_) = slot {
                        support[pos].get_or_insert_with(|| Dom::empty(n)).insert(val);
                    }
                }
            }
            if !any {
                return false;
            }
            for (pos, slot) in atom.slots.iter().enumerate() {
                if let Slot::Var(v) = *slot {
                    let s = support[pos].as_ref().expect("supported");
                    if dom[v].intersect(s) {
                        if dom[v].is_empty() {
                            return false;
                        }
                        for &other in &self.var_atoms[v] {
                            if other != ai && !queued[other] {
                                queued[other] = true;
                                queue.push_back(other);
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn root(&self) -> Option<Vec<Dom>> {
        if !self.feasible {
            return None;
        }
        let mut dom = self.init.clone();
        if dom.iter().any(Dom::is_empty) {
            return None;
        }
        if self.revise(&mut dom, 0..self.atoms.len()) {
            Some(dom)
        } else {
            None
        }
    }

    fn value(dom: &Dom) -> u32 {
        dom.iter().next().expect("non-empty domain")
    }

    fn surjection_possible(&self, dom: &[Dom], depth: usize) -> bool {
        let assigned: HashSet<usize> = self.order[..depth].iter().copied().collect();
        let mut hit: HashSet<&(usize, Vec<u32>)> = HashSet::new();
        let mut open = 0usize;
        let mut buf: Vec<(usize, Vec<u32>)> = Vec::new();
        for a in &self.atoms {
            let done = a.slots.iter().all(|s| match s {
                Slot::Fixed(_) => true,
                Slot::Var(v) => assigned.contains(v),
            });
            if done {
                buf.push((
                    a.rel,
                    a.slots
                        .iter()
                        .map(|s| match *s {
                            Slot::Fixed(f) => f,
                            Slot::Var(v) => Self::value(&dom[v]),
                        })
                        .collect(),
                ));
            } else {
                open += 1;
            }
        }
        for b in &buf {
            hit.insert(b);
        }
        hit.len() + open >= self.t.atoms.len()
    }

    fn image_is_whole(&self, dom: &[Dom]) -> bool {
        let mut hit: HashSet<(usize, Vec<u32>)> = HashSet::new();
        for a in &self.atoms {
            hit.insert((
                a.rel,
                a.slots
                    .iter()
                    .map(|s| match *s {
                        Slot::Fixed(f) => f,
                        Slot::Var(v) => Self::value(&dom[v]),
                    })
                    .collect(),
            ));
        }
        hit.len() == self.t.atoms.len()
    }

    /// Calls `f` on each solution (one value per variable, in `vars` order,
    /// or only the projected variables in projection mode). Stops when `f`
    /// returns false. Returns false if stopped early.
    pub fn for_each(&self, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        let Some(dom) = self.root() else {
            return true;
        };
        let mut used = vec![false; self.t.terms.len()];
        self.go(dom, 0, &mut used, f)
    }


    fn go(
        &self,
        dom: Vec<Dom>,
        depth: usize,
        used: &mut [bool],
        f: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        if self.surjective && !self.surjection_possible(&dom, depth) {
            return true;
        }
        if self.projecting && depth == self.project_len {
            let rest_ok = !self.go_rest(dom.clone(), depth, used);
            if rest_ok {
                let out: Vec<u32> = self
                    .project_vars
                    .iter()
                    .map(|&v| Self::value(&dom[v]))
                    .collect();
                return f(&out);
            }
            return true;
        }
        if depth == self.order.len() {
            if self.surjective && !self.image_is_whole(&dom) {
                return true;
            }
            let vals: Vec<u32> = dom.iter().map(Self::value).collect();
            return f(&vals);
        }
        let var = self.order[depth];
        let candidates: Vec<u32> = dom[var].iter().collect();
        for val in candidates {
            if self.injective && used[val as usize] {
                continue;
            }
            let mut next = dom.clone();
            next[var] = Dom::single(self.t.terms.len(), val);
            if !self.revise(&mut next, self.var_atoms[var].iter().copied()) {
                continue;
            }
            if self.injective {
                used[val as usize] = true;
            }
            let cont = self.go(next, depth + 1, used, f);
            if self.injective {
                used[val as usize] = false;
            }
            if !cont {
                return false;
            }
        }
        true
    }

    /// Returns false if a completion from `depth` exists.
    fn go_rest(&self, dom: Vec<Dom>, depth: usize, used: &mut [bool]) -> bool {
        if self.surjective && !self.surjection_possible(&dom, depth) {
            return true;
        }
        if depth == self.order.len() {
            return !(!self.surjective || self.image_is_whole(&dom));
        }
        let var = self.order[depth];
        let candidates: Vec<u32> = dom[var].iter().collect();
        for val in candidates {
            if self.injective && used[val as usize] {
                continue;
            }
            let mut next = dom.clone();
            next[var] = Dom::single(self.t.terms.len(), val);
            if !self.revise(&mut next, self.var_atoms[var].iter().copied()) {
                continue;
            }
            if self.injective {
                used[val as usize] = true;
            }
            let cont = self.go_rest(next, depth + 1, used);
            if self.injective {
                used[val as usize] = false;
            }
            if !cont {
                return false;
            }
        }
        true
    }
}
