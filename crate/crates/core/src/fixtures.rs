//! The worked examples shipped in `fixtures/fixtures.inst`.

use std::sync::OnceLock;

use crate::io::{parse_document, DocInstance, Document};
use crate::model::{Instance, RawInstance};

/// Source text of the fixtures file.
pub const SOURCE: &str = include_str!("../../../fixtures/fixtures.inst");

pub fn document() -> &'static Document {
    static DOC: OnceLock<Document> = OnceLock::new();
    DOC.get_or_init(|| parse_document(SOURCE).expect("fixtures parse"))
}

/// A fixture in normal form. Panics on unknown names.
pub fn get(name: &str) -> Instance {
    document()
        .instance(name)
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// A fixture with its occurrence annotations.
pub fn raw(name: &str) -> RawInstance {
    match document().entry(name) {
        Ok(DocInstance::Raw(r)) => r.clone(),
        Ok(DocInstance::Normal(a)) => RawInstance::from_instance(a),
        Err(e) => panic!("fixture {name}: {e}"),
    }
}

pub fn names() -> impl Iterator<Item = &'static str> {
    document().instances.keys().map(String::as_str)
}
