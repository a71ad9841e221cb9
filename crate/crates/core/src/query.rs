//! Existential positive queries with Boolean universal guards: AST, class
//! check, evaluation, naive evaluation and certain answers under PCWA.

use std::collections::BTreeSet;
use std::fmt;

use crate::cores::multicore;
use crate::error::{Error, Result};
use crate::model::{Atom, Instance, Symbol, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QTerm {
    Var(Symbol),
    Const(Symbol),
}

impl fmt::Display for QTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QTerm::Var(v) | QTerm::Const(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { relation: Symbol, args: Vec<QTerm> },
    Eq(QTerm, QTerm),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<Symbol>, Box<Formula>),
    /// `∀ vars (guard → body)`.
    ForallGuard {
        vars: Vec<Symbol>,
        guard: Box<Formula>,
        body: Box<Formula>,
    },
}

fn join<T: fmt::Display>(xs: &[T], sep: &str) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { relation, args } => write!(f, "{relation}({})", join(args, ", ")),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::And(xs) => write!(f, "({})", join(xs, " & ")),
            Formula::Or(xs) => write!(f, "({})", join(xs, " | ")),
            Formula::Exists(vs, body) => write!(f, "(exists {} . {body})", join(vs, ", ")),
            Formula::ForallGuard { vars, guard, body } => {
                write!(f, "(forall {} . ({guard} -> {body}))", join(vars, ", "))
            }
        }
    }
}

impl Formula {
    pub fn atom(relation: &str, args: Vec<QTerm>) -> Self {
        Formula::Atom {
            relation: Symbol::from(relation),
            args,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
        let mut term = |t: &QTerm, bound: &Vec<Symbol>| {
            if let QTerm::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|t| term(t, bound)),
            Formula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_free(bound, out)),
            Formula::Exists(vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
            Formula::ForallGuard { vars, guard, body } => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                guard.collect_free(bound, out);
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let QTerm::Const(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    fn visit_terms(&self, f: &mut dyn FnMut(&QTerm)) {
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|t| f(t)),
            Formula::Eq(a, b) => {
                f(a);
                f(b);
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_terms(f)),
            Formula::Exists(_, body) => body.visit_terms(f),
            Formula::ForallGuard { guard, body, .. } => {
                guard.visit_terms(f);
                body.visit_terms(f);
            }
        }
    }

    fn has_guard(&self) -> bool {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => false,
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(Formula::has_guard),
            Formula::Exists(_, b) => b.has_guard(),
            Formula::ForallGuard { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub name: String,
    pub head: Vec<Symbol>,
    pub body: Formula,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query {}({}) := {}", self.name, join(&self.head, ", "), self.body)
    }
}

impl Query {
    /// True if the body uses no universal guards, so the query is monotone.
    pub fn is_existential_positive(&self) -> bool {
        !self.body.has_guard()
    }
}

fn check_node(f: &Formula) -> Result<()> {
    match f {
        Formula::Atom { .. } | Formula::Eq(..) => Ok(()),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().try_for_each(check_node),
        Formula::Exists(_, body) => check_node(body),
        Formula::ForallGuard { vars, guard, body } => {
            match &**guard {
                Formula::Eq(..) => {}
                Formula::Atom { args, .. } => {
                    // a repeated variable or a constant in the guard breaks
                    // preservation under strong surjections
                    let mut seen = BTreeSet::new();
                    if !args.iter().all(|t| matches!(t, QTerm::Var(v) if seen.insert(v))) {
                        return Err(Error::QueryClass(format!(
                            "guard {guard} must list pairwise distinct variables"
                        )));
                    }
                }
                _ => return Err(Error::QueryClass(format!("guard {guard} is not an atom or equality"))),
            }
            let mut free = guard.free_vars();
            if let Some(v) = vars.iter().find(|v| !free.contains(*v)) {
                return Err(Error::QueryClass(format!("variable {v} of {f} does not occur in the guard")));
            }
            free.extend(body.free_vars());
            if let Some(v) = free.iter().find(|v| !vars.contains(v)) {
                return Err(Error::QueryClass(format!(
                    "variable {v} is free in the guarded formula {f} but not bound by its quantifier"
                )));
            }
            check_node(body)
        }
    }
}

/// Checks the grammar of the class and that the head lists exactly the
/// free variables.
pub fn validate_class(q: &Query) -> Result<()> {
    let head: BTreeSet<Symbol> = q.head.iter().cloned().collect();
    if head.len() != q.head.len() {
        return Err(Error::QueryClass(format!("repeated head variable in {}", q.name)));
    }
    let free = q.body.free_vars();
    if free != head {
        return Err(Error::QueryClass(format!(
            "free variables {{{}}} differ from head variables {{{}}}",
            join(&free.into_iter().collect::<Vec<_>>(), ", "),
            join(&q.head, ", ")
        )));
    }
    check_node(&q.body)
}

pub fn is_in_class(q: &Query) -> bool {
    validate_class(q).is_ok()
}

struct Eval<'a> {
    inst: &'a Instance,
    domain: Vec<Term>,
    env: Vec<(Symbol, Term)>,
}

impl Eval<'_> {
    fn value(&self, t: &QTerm) -> Term {
        match t {
            QTerm::Const(c) => Term::Const(c.clone()),
            QTerm::Var(v) => self
                .env
                .iter()
                .rev()
                .find(|(w, _)| w == v)
                .map(|(_, t)| t.clone())
                .expect("validated query binds every variable"),
        }
    }

    fn each_binding(&mut self, vars: &[Symbol], f: &mut dyn FnMut(&mut Self) -> bool) -> bool {
        if vars.is_empty() {
            return f(self);
        }
        for i in 0..self.domain.len() {
            let t = self.domain[i].clone();
            self.env.push((vars[0].clone(), t));
            let more = self.each_binding(&vars[1..], f);
            self.env.pop();
            if !more {
                return false;
            }
        }
        true
    }

    fn holds(&mut self, f: &Formula) -> bool {
        match f {
            Formula::Atom { relation, args } => {
                let atom = Atom {
                    relation: relation.clone(),
                    args: args.iter().map(|t| self.value(t)).collect(),
                };
                self.inst.contains(&atom)
            }
            Formula::Eq(a, b) => self.value(a) == self.value(b),
            Formula::And(xs) => xs.iter().all(|x| self.holds(x)),
            Formula::Or(xs) => xs.iter().any(|x| self.holds(x)),
            Formula::Exists(vs, body) => {
                let mut found = false;
                self.each_binding(vs, &mut |e| {
                    found = e.holds(body);
                    !found
                });
                found
            }
            Formula::ForallGuard { vars, guard, body } => {
                let mut ok = true;
                self.each_binding(vars, &mut |e| {
                    ok = !e.holds(guard) || e.holds(body);
                    ok
                });
                ok
            }
        }
    }
}

/// All head tuples over `adom(a)` and the query's constants that satisfy
/// the body, treating nulls as ordinary values.
fn answers(q: &Query, a: &Instance) -> Result<BTreeSet<Vec<Term>>> {
    validate_class(q)?;
    let mut domain: BTreeSet<Term> = a.adom();
    domain.extend(q.body.constants().into_iter().map(Term::Const));
    let mut ev = Eval {
        inst: a,
        domain: domain.into_iter().collect(),
        env: Vec::new(),
    };
    let mut out = BTreeSet::new();
    let head = q.head.clone();
    let body = q.body.clone();
    ev.each_binding(&head, &mut |e| {
        if e.holds(&body) {
            out.insert(e.env[e.env.len() - head.len()..].iter().map(|(_, t)| t.clone()).collect());
        }
        true
    });
    Ok(out)
}

/// Active-domain evaluation on a complete instance.
pub fn eval(q: &Query, i: &Instance) -> Result<BTreeSet<Vec<Term>>> {
    if !i.is_complete() {
        return Err(Error::Precondition("evaluation needs a complete instance".into()));
    }
    answers(q, i)
}

/// Evaluation with nulls as distinct values, dropping tuples with nulls.
pub fn naive_eval(q: &Query, a: &Instance) -> Result<BTreeSet<Vec<Term>>> {
    if !a.closed_nulls().is_empty() {
        return Err(Error::ScopeViolation(
            "naive evaluation is defined here for instances without closed nulls".into(),
        ));
    }
    let mut out = answers(q, a)?;
    out.retain(|t| t.iter().all(Term::is_const));
    Ok(out)
}

/// Certain answers under PCWA: the intersection of naive evaluation over
/// the multicore members.
pub fn certain_pcwa(q: &Query, a: &Instance) -> Result<BTreeSet<Vec<Term>>> {
    validate_class(q)?;
    if !a.closed_nulls().is_empty() {
        return Err(Error::ScopeViolation(
            "certain answers are computed for instances without closed nulls".into(),
        ));
    }
    let mc = multicore(a);
    let mut members = mc.members.iter();
    let Some(first) = members.next() else {
        return naive_eval(q, &Instance::empty());
    };
    let mut acc = naive_eval(q, first)?;
    for m in members {
        let next = naive_eval(q, m)?;
        acc.retain(|t| next.contains(t));
    }
    Ok(acc)
}
