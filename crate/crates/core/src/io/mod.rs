//! Text format for instances and queries, and JSON renderings.

mod parse;

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{validate_normal, Instance, RawInstance};
use crate::query::Query;

pub use parse::parse_document;

/// An instance as written: normal form unless some occurrence carried an
/// explicit `:o`/`:c` annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DocInstance {
    Normal(Instance),
    Raw(RawInstance),
}

impl DocInstance {
    pub fn raw(&self) -> RawInstance {
        match self {
            DocInstance::Normal(a) => RawInstance::from_instance(a),
            DocInstance::Raw(r) => r.clone(),
        }
    }

    /// The instance in normal form, if it is one.
    pub fn normal(&self) -> Result<Instance> {
        match self {
            DocInstance::Normal(a) => Ok(a.clone()),
            DocInstance::Raw(r) => validate_normal(r),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub instances: BTreeMap<String, DocInstance>,
    pub queries: BTreeMap<String, Query>,
}

impl Document {
    pub fn entry(&self, name: &str) -> Result<&DocInstance> {
        self.instances
            .get(name)
            .ok_or_else(|| Error::UnknownName(format!("instance {name}")))
    }

    pub fn instance(&self, name: &str) -> Result<Instance> {
        self.entry(name)?.normal()
    }

    pub fn query(&self, name: &str) -> Result<&Query> {
        self.queries
            .get(name)
            .ok_or_else(|| Error::UnknownName(format!("query {name}")))
    }
}

/// Parses a bare list of atoms, e.g. `R(?x, a) S(!Y)`, as a normal-form
/// instance.
pub fn parse_instance(atoms: &str) -> Result<Instance> {
    parse_entry(atoms)?.normal()
}

/// Parses a bare list of atoms keeping occurrence annotations.
pub fn parse_raw_instance(atoms: &str) -> Result<RawInstance> {
    Ok(parse_entry(atoms)?.raw())
}

fn parse_entry(atoms: &str) -> Result<DocInstance> {
    let mut doc = parse_document(&format!("instance it {{\n{atoms}\n}}"))?;
    Ok(doc.instances.remove("it").expect("just parsed"))
}

pub fn serialize_instance(name: &str, a: &Instance) -> String {
    let mut s = format!("instance {name} {{\n");
    for atom in a.atoms() {
        writeln!(s, "  {atom}").expect("writing to a string");
    }
    s.push_str("}\n");
    s
}

pub fn serialize_raw(name: &str, a: &RawInstance) -> String {
    let mut s = format!("instance {name} {{\n");
    for atom in a.atoms() {
        writeln!(s, "  {atom}").expect("writing to a string");
    }
    s.push_str("}\n");
    s
}

pub fn serialize_query(q: &Query) -> String {
    format!("{q}\n")
}

/// All instances and queries of a document, in name order.
pub fn serialize_document(doc: &Document) -> String {
    let mut s = String::new();
    for (name, inst) in &doc.instances {
        match inst {
            DocInstance::Normal(a) => s.push_str(&serialize_instance(name, a)),
            DocInstance::Raw(r) => s.push_str(&serialize_raw(name, r)),
        }
    }
    for q in doc.queries.values() {
        s.push_str(&serialize_query(q));
    }
    s
}

/// An instance as a JSON array of atom literals in sorted order.
pub fn instance_json(a: &Instance) -> Value {
    Value::Array(a.atoms().iter().map(|x| Value::String(x.to_string())).collect())
}

/// Answer tuples as a sorted JSON array of arrays of constants.
pub fn answers_json(ans: &std::collections::BTreeSet<Vec<crate::model::Term>>) -> Value {
    Value::Array(
        ans.iter()
            .map(|t| Value::Array(t.iter().map(|x| Value::String(x.to_string())).collect()))
            .collect(),
    )
}
