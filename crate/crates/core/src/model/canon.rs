//! Canonical null renaming.
//!
//! Nulls are first partitioned by iterated color refinement, then each
//! null-connected component is labeled by a branch-and-bound search for the
//! lexicographically least atom sequence. Components are ordered by their
//! least sequences, so isomorphic instances come out identical.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Ann, Atom, Instance, Null, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ArgSig {
    Const(Symbol),
    Null(u32),
    Me,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Enc {
    Const(Symbol),
    Labeled(u32),
    New { color: u32, local: u32 },
}

type EncAtom = (Symbol, Vec<Enc>);

struct Shape<'a> {
    atoms: Vec<&'a Atom>,
    /// null index per argument, `None` for constants
    slots: Vec<Vec<Option<usize>>>,
    colors: Vec<u32>,
}

fn refine(atoms: &[&Atom], slots: &[Vec<Option<usize>>], nulls: &[Null]) -> Vec<u32> {
    let mut colors: Vec<u32> = nulls.iter().map(|n| u32::from(n.ann == Ann::Closed)).collect();
    let mut classes = colors.iter().collect::<BTreeSet<_>>().len();
    let mut occ: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nulls.len()];
    for (ai, s) in slots.iter().enumerate() {
        for (pos, v) in s.iter().enumerate() {
            if let Some(v) = v {
                occ[*v].push((ai, pos));
            }
        }
    }
    loop {
        let sigs: Vec<(u32, Vec<(Symbol, usize, Vec<ArgSig>)>)> = (0..nulls.len())
            .map(|v| {
                let mut s: Vec<_> = occ[v]
                    .iter()
                    .map(|&(ai, pos)| {
                        let args = atoms[ai]
                            .args
                            .iter()
                            .zip(&slots[ai])
                            .map(|(t, slot)| match slot {
                                Some(w) if *w == v => ArgSig::Me,
                                Some(w) => ArgSig::Null(colors[*w]),
                                None => ArgSig::Const(t.symbol().clone()),
                            })
                            .collect();
                        (atoms[ai].relation.clone(), pos, args)
                    })
                    .collect();
                s.sort();
                (colors[v], s)
            })
            .collect();
        let ranks: BTreeMap<&_, u32> = sigs
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i as u32))
            .collect();
        let next: Vec<u32> = sigs.iter().map(|s| ranks[s]).collect();
        let n = ranks.len();
        colors = next;
        if n == classes {
            return colors;
        }
        classes = n;
    }
}

struct ComponentSearch<'s, 'a> {
    shape: &'s Shape<'a>,
    members: Vec<usize>,
    labels: HashMap<usize, u32>,
    used: Vec<bool>,
    seq: Vec<EncAtom>,
    best: Option<(Vec<EncAtom>, HashMap<usize, u32>)>,
}

impl<'s, 'a> ComponentSearch<'s, 'a> {
    fn encode(&self, ai: usize) -> EncAtom {
        let mut fresh: Vec<usize> = Vec::new();
        let args = self.shape.slots[ai]
            .iter()
            .zip(&self.shape.atoms[ai].args)
            .map(|(slot, t)| match slot {
                None => Enc::Const(t.symbol().clone()),
                Some(v) => match self.labels.get(v) {
                    Some(l) => Enc::Labeled(*l),
                    None => {
                        let local = match fresh.iter().position(|w| w == v) {
                            Some(p) => p,
                            None => {
                                fresh.push(*v);
                                fresh.len() - 1
                            }
                        };
                        Enc::New {
                            color: self.shape.colors[*v],
                            local: local as u32,
                        }
                    }
                },
            })
            .collect();
        (self.shape.atoms[ai].relation.clone(), args)
    }

    fn prefix_cmp(&self) -> Ordering {
        match &self.best {
            None => Ordering::Less,
            Some((best, _)) => self.seq.as_slice().cmp(&best[..self.seq.len()]),
        }
    }

    fn run(&mut self) {
        if self.seq.len() == self.members.len() {
            if self.prefix_cmp() == Ordering::Less {
                self.best = Some((self.seq.clone(), self.labels.clone()));
            }
            return;
        }
        let mut min: Option<EncAtom> = None;
        let mut cands: Vec<usize> = Vec::new();
        for (i, &ai) in self.members.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            let e = self.encode(ai);
            match min.as_ref().map(|m| e.cmp(m)) {
                None | Some(Ordering::Less) => {
                    min = Some(e);
                    cands.clear();
                    cands.push(i);
                }
                Some(Ordering::Equal) => cands.push(i),
                Some(Ordering::Greater) => {}
            }
        }
        self.seq.push(min.expect("unused atom remains"));
        if self.prefix_cmp() != Ordering::Greater {
            for i in cands {
                let ai = self.members[i];
                let mut added = Vec::new();
                let mut next = self.labels.len() as u32;
                for v in self.shape.slots[ai].iter().flatten() {
                    if !self.labels.contains_key(v) {
                        self.labels.insert(*v, next);
                        added.push(*v);
                        next += 1;
                    }
                }
                self.used[i] = true;
                self.run();
                self.used[i] = false;
                for v in added {
                    self.labels.remove(&v);
                }
            }
        }
        self.seq.pop();
    }
}

/// Deterministic renaming of nulls to `n1, n2, ...`; two instances are
/// isomorphic exactly when their canonical forms are equal.
pub fn canonicalize(a: &Instance) -> Instance {
    let nulls: Vec<Null> = a.nulls().into_iter().collect();
    if nulls.is_empty() {
        return a.clone();
    }
    let index: HashMap<&Null, usize> = nulls.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let atoms: Vec<&Atom> = a.atoms().iter().collect();
    let slots: Vec<Vec<Option<usize>>> = atoms
        .iter()
        .map(|at| {
            at.args
                .iter()
                .map(|t| t.as_null().map(|n| index[n]))
                .collect()
        })
        .collect();
    let colors = refine(&atoms, &slots, &nulls);
    let shape = Shape {
        atoms,
        slots,
        colors,
    };

    // union-find over nulls
    let mut parent: Vec<usize> = (0..nulls.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for s in &shape.slots {
        let vs: Vec<usize> = s.iter().flatten().copied().collect();
        for w in vs.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if x != y {
                parent[x] = y;
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut ground = Vec::new();
    for (ai, s) in shape.slots.iter().enumerate() {
        match s.iter().flatten().next() {
            Some(v) => {
                let r = find(&mut parent, *v);
                comps.entry(r).or_default().push(ai);
            }
            None => ground.push((*shape.atoms[ai]).clone()),
        }
    }

    let mut labeled: Vec<(Vec<EncAtom>, HashMap<usize, u32>)> = comps
        .into_values()
        .map(|members| {
            let used = vec![false; members.len()];
            let mut search = ComponentSearch {
                shape: &shape,
                members,
                labels: HashMap::new(),
                used,
                seq: Vec::new(),
                best: None,
            };
            search.run();
            search.best.expect("component has atoms")
        })
        .collect();
    labeled.sort_by(|x, y| x.0.cmp(&y.0));

    let mut rename: HashMap<usize, Term> = HashMap::new();
    let mut offset = 0u32;
    for (_, labels) in &labeled {
        for (&v, &l) in labels {
            rename.insert(
                v,
                Term::Null(Null {
                    name: Symbol::from(format!("n{}", offset + l + 1)),
                    ann: nulls[v].ann,
                }),
            );
        }
        offset += labels.len() as u32;
    }
    let out: BTreeSet<Atom> = shape
        .atoms
        .iter()
        .zip(&shape.slots)
        .map(|(at, s)| Atom {
            relation: at.relation.clone(),
            args: at
                .args
                .iter()
                .zip(s)
                .map(|(t, slot)| match slot {
                    Some(v) => rename[v].clone(),
                    None => t.clone(),
                })
                .collect(),
        })
        .chain(ground)
        .collect();
    Instance::from_checked(out)
}
