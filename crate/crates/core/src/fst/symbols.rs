use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{FstError, Label, EPSILON};

pub const EPSILON_SYMBOL: &str = "<eps>";

/// Bidirectional symbol ↔ id map. Id 0 is always the epsilon symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    by_id: BTreeMap<Label, String>,
    by_name: HashMap<String, Label>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::with_epsilon(EPSILON_SYMBOL)
    }

    /// Table whose id 0 carries `name` instead of `<eps>`.
    pub fn with_epsilon(name: &str) -> Self {
        let mut t = SymbolTable {
            by_id: BTreeMap::new(),
            by_name: HashMap::new(),
        };
        t.by_id.insert(EPSILON, name.to_string());
        t.by_name.insert(name.to_string(), EPSILON);
        t
    }

    /// Adds `name` with the next free id, or returns its existing id.
    pub fn add(&mut self, name: &str) -> Label {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.next_id();
        self.by_id.insert(id, name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn insert(&mut self, name: &str, id: Label) -> Result<(), FstError> {
        if let Some(prev) = self.by_id.get(&id) {
            if prev != name {
                return Err(FstError::DuplicateSymbol(format!("id {id} ({prev} / {name})")));
            }
        }
        if let Some(&prev) = self.by_name.get(name) {
            if prev != id {
                return Err(FstError::DuplicateSymbol(format!("{name} ({prev} / {id})")));
            }
        }
        self.by_id.insert(id, name.to_string());
        self.by_name.insert(name.to_string(), id);
        Ok(())
    }

    /// Copy keeping only the symbols accepted by `keep` (epsilon always kept).
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> SymbolTable {
        let mut t = SymbolTable {
            by_id: BTreeMap::new(),
            by_name: HashMap::new(),
        };
        for (id, name) in self.iter() {
            if id == EPSILON || keep(name) {
                t.by_id.insert(id, name.to_string());
                t.by_name.insert(name.to_string(), id);
            }
        }
        t
    }

    pub fn find(&self, name: &str) -> Option<Label> {
        self.by_name.get(name).copied()
    }

    pub fn symbol(&self, id: Label) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn contains_id(&self, id: Label) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn next_id(&self) -> Label {
        self.by_id.keys().next_back().map_or(0, |&k| k + 1)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> {
        self.by_id.iter().map(|(&k, v)| (k, v.as_str()))
    }

    /// `symbol id` lines in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, name) in self.iter() {
            let _ = writeln!(out, "{name} {id}");
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, FstError> {
        let mut by_id = BTreeMap::new();
        let mut by_name = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: &str| FstError::Parse {
                line: lineno + 1,
                message: msg.to_string(),
            };
            if fields.len() != 2 {
                return Err(parse_err("expected `symbol id`"));
            }
            let id: Label = fields[1]
                .parse()
                .map_err(|_| parse_err(&format!("invalid id `{}`", fields[1])))?;
            if by_id.insert(id, fields[0].to_string()).is_some() {
                return Err(parse_err(&format!("duplicate id {id}")));
            }
            if by_name.insert(fields[0].to_string(), id).is_some() {
                return Err(parse_err(&format!("duplicate symbol `{}`", fields[0])));
            }
        }
        Ok(SymbolTable { by_id, by_name })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut t = SymbolTable::new();
        t.add("a");
        t.add("b");
        let back = SymbolTable::parse_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.find("b"), Some(2));
    }

    #[test]
    fn duplicate_lines_rejected() {
        let err = SymbolTable::parse_text("<eps> 0\na 1\nb 1\n").unwrap_err();
        assert!(matches!(err, FstError::Parse { line: 3, .. }));
    }
}
