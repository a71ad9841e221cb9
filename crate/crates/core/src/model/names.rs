use std::collections::{HashMap, HashSet};

use super::{Instance, Symbol};

/// Deterministic source of fresh symbols: `base_1`, `base_2`, ... skipping
/// anything reserved. Each operation that renames apart builds its own
/// supply from the symbols of its inputs, so results depend only on inputs.
#[derive(Debug, Default, Clone)]
pub struct NameSupply {
    used: HashSet<Symbol>,
    next: HashMap<String, usize>,
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reserve(&mut self, s: &Symbol) {
        self.used.insert(s.clone());
    }

    pub fn reserve_instance(&mut self, a: &Instance) {
        for s in a.symbols() {
            self.used.insert(s);
        }
    }

    pub fn fresh(&mut self, base: &str) -> Symbol {
        let base = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
        let base = if base.is_empty() { "u" } else { base };
        let counter = self.next.entry(base.to_string()).or_insert(0);
        loop {
            *counter += 1;
            let cand = Symbol::from(format!("{base}_{counter}"));
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}
