use std::collections::HashMap;

use super::{DocInstance, Document};
use crate::error::{Error, Result};
use crate::model::{make_instance, Ann, Atom, Null, OccTerm, RawAtom, RawInstance, Symbol, Term};
use crate::query::{Formula, QTerm, Query};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const PUNCT: [&str; 15] = [
    ":=", "->", "?", "!", "(", ")", "{", "}", ",", ":", ";", "|", "&", ".", "=",
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (byte, c) = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if is_ident_char(c) && c != '\'' {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j].1) {
                    j += 1;
                }
                let end = chars.get(j).map_or(line.len(), |x| x.0);
                out.push(Spanned {
                    tok: Tok::Ident(line[byte..end].to_string()),
                    line: li + 1,
                    column,
                });
                i = j;
                continue;
            }
            let rest = &line[byte..];
            match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    out.push(Spanned {
                        tok: Tok::Punct(p),
                        line: li + 1,
                        column,
                    });
                    i += p.chars().count();
                }
                None => {
                    return Err(Error::Parse {
                        line: li + 1,
                        column,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = match self.toks.get(self.pos) {
            Some(s) => (s.line, s.column),
            None => self
                .toks
                .last()
                .map_or((1, 1), |s| (s.line, s.column + 1)),
        };
        Err(Error::Parse {
            line,
            column,
            message: message.into(),
        })
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}'"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn document(&mut self) -> Result<Document> {
        let mut doc = Document::default();
        while self.peek().is_some() {
            let start = self.pos;
            if self.keyword("instance") {
                self.pos += 1;
                let name = self.ident()?;
                let inst = self.instance_body()?;
                if doc.instances.contains_key(&name) || doc.queries.contains_key(&name) {
                    self.pos = start;
                    return self.err(format!("duplicate name {name}"));
                }
                doc.instances.insert(name, inst);
            } else if self.keyword("query") {
                self.pos += 1;
                let q = self.query()?;
                if doc.instances.contains_key(&q.name) || doc.queries.contains_key(&q.name) {
                    self.pos = start;
                    return self.err(format!("duplicate name {}", q.name));
                }
                doc.queries.insert(q.name.clone(), q);
            } else {
                return self.err("expected 'instance' or 'query'");
            }
            self.eat(";");
        }
        Ok(doc)
    }

    fn instance_body(&mut self) -> Result<DocInstance> {
        self.expect("{")?;
        let mut atoms: Vec<RawAtom> = Vec::new();
        let mut annotated = false;
        let mut kinds: HashMap<String, (Ann, usize, usize)> = HashMap::new();
        while !self.is("}") {
            if self.peek().is_none() {
                return self.err("unterminated instance");
            }
            let relation = self.ident()?;
            self.expect("(")?;
            let mut args = Vec::new();
            if !self.is(")") {
                loop {
                    let (line, column) = {
                        let s = &self.toks[self.pos.min(self.toks.len() - 1)];
                        (s.line, s.column)
                    };
                    let (occ, explicit) = self.occ_term()?;
                    annotated |= explicit;
                    if let Term::Null(n) = &occ.term {
                        let name = n.name.to_string();
                        match kinds.get(&name) {
                            Some((k, l, c)) if *k != n.ann => {
                                return Err(Error::Parse {
                                    line,
                                    column,
                                    message: format!(
                                        "null {name} written both open and closed (first at {l}:{c})"
                                    ),
                                })
                            }
                            Some(_) => {}
                            None => {
                                kinds.insert(name, (n.ann, line, column));
                            }
                        }
                    }
                    args.push(occ);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            self.eat(",");
            self.eat(";");
            atoms.push(RawAtom {
                relation: Symbol::from(relation),
                args,
            });
        }
        self.expect("}")?;
        if annotated {
            Ok(DocInstance::Raw(RawInstance::new(atoms)?))
        } else {
            Ok(DocInstance::Normal(make_instance(
                atoms.into_iter().map(|a| Atom {
                    relation: a.relation,
                    args: a.args.into_iter().map(|o| o.term).collect(),
                }),
            )?))
        }
    }

    fn occ_term(&mut self) -> Result<(OccTerm, bool)> {
        let term = if self.eat("?") {
            Term::Null(Null::open(&self.ident()?))
        } else if self.eat("!") {
            Term::Null(Null::closed(&self.ident()?))
        } else {
            Term::Const(Symbol::from(self.ident()?))
        };
        if self.eat(":") {
            let ann = match self.ident()?.as_str() {
                "o" => Ann::Open,
                "c" => Ann::Closed,
                other => {
                    self.pos -= 1;
                    return self.err(format!("annotation must be 'o' or 'c', found {other}"));
                }
            };
            Ok((OccTerm { term, ann }, true))
        } else {
            Ok((OccTerm::plain(term), false))
        }
    }

    fn query(&mut self) -> Result<Query> {
        let name = self.ident()?;
        self.expect("(")?;
        let mut head = Vec::new();
        if !self.is(")") {
            loop {
                head.push(Symbol::from(self.ident()?));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.expect(":=")?;
        let mut scope: Vec<Symbol> = head.clone();
        let body = self.formula(&mut scope)?;
        Ok(Query { name, head, body })
    }

    fn formula(&mut self, scope: &mut Vec<Symbol>) -> Result<Formula> {
        let mut parts = vec![self.conj(scope)?];
        while self.eat("|") {
            parts.push(self.conj(scope)?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Formula::Or(parts)
        })
    }

    fn conj(&mut self, scope: &mut Vec<Symbol>) -> Result<Formula> {
        let mut parts = vec![self.unit(scope)?];
        while self.eat("&") {
            parts.push(self.unit(scope)?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Formula::And(parts)
        })
    }

    fn var_list(&mut self) -> Result<Vec<Symbol>> {
        let mut vs = vec![Symbol::from(self.ident()?)];
        loop {
            self.eat(",");
            match self.peek() {
                Some(Tok::Ident(_)) => vs.push(Symbol::from(self.ident()?)),
                _ => break,
            }
        }
        self.expect(".")?;
        Ok(vs)
    }

    fn qterm(&mut self, scope: &[Symbol]) -> Result<QTerm> {
        let id = Symbol::from(self.ident()?);
        Ok(if scope.contains(&id) {
            QTerm::Var(id)
        } else {
            QTerm::Const(id)
        })
    }

    fn unit(&mut self, scope: &mut Vec<Symbol>) -> Result<Formula> {
        if self.eat("(") {
            let f = self.formula(scope)?;
            self.expect(")")?;
            return Ok(f);
        }
        if self.keyword("exists") && matches!(self.peek_at(1), Some(Tok::Ident(_))) {
            self.pos += 1;
            let vs = self.var_list()?;
            let n = scope.len();
            scope.extend(vs.iter().cloned());
            let body = self.unit(scope);
            scope.truncate(n);
            return Ok(Formula::Exists(vs, Box::new(body?)));
        }
        if self.keyword("forall") && matches!(self.peek_at(1), Some(Tok::Ident(_))) {
            self.pos += 1;
            let vars = self.var_list()?;
            let n = scope.len();
            scope.extend(vars.iter().cloned());
            let inner = (|| {
                self.expect("(")?;
                let guard = self.simple(scope)?;
                self.expect("->")?;
                let body = self.formula(scope)?;
                self.expect(")")?;
                Ok((guard, body))
            })();
            scope.truncate(n);
            let (guard, body) = inner?;
            return Ok(Formula::ForallGuard {
                vars,
                guard: Box::new(guard),
                body: Box::new(body),
            });
        }
        self.simple(scope)
    }

    /// An atom or an equality.
    fn simple(&mut self, scope: &[Symbol]) -> Result<Formula> {
        if matches!(self.peek_at(1), Some(Tok::Punct("("))) {
            let relation = Symbol::from(self.ident()?);
            self.expect("(")?;
            let mut args = Vec::new();
            if !self.is(")") {
                loop {
                    args.push(self.qterm(scope)?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            return Ok(Formula::Atom { relation, args });
        }
        let a = self.qterm(scope)?;
        self.expect("=")?;
        let b = self.qterm(scope)?;
        Ok(Formula::Eq(a, b))
    }
}

/// Parses a document of `instance` and `query` declarations.
pub fn parse_document(text: &str) -> Result<Document> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.document()
}
