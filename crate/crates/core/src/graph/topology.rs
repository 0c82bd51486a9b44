use crate::fst::{Arc, Fst, Label, SymbolTable, Weight, EPSILON};

use super::GraphError;

pub const BLANK_SYMBOL: &str = "<blank>";

/// Acoustic modeling units in posterior-column order; column 0 is blank.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitInventory {
    names: Vec<String>,
}

impl UnitInventory {
    /// Inventory from non-blank unit names; unit `i` gets column `i + 1`.
    pub fn from_units<S: AsRef<str>>(units: &[S]) -> Result<Self, GraphError> {
        if units.is_empty() {
            return Err(GraphError::Config("unit inventory is empty".into()));
        }
        let mut names = vec![BLANK_SYMBOL.to_string()];
        for u in units {
            let u = u.as_ref();
            if u == BLANK_SYMBOL {
                return Err(GraphError::Config("the blank symbol cannot be a modeling unit".into()));
            }
            if names.iter().any(|n| n == u) {
                return Err(GraphError::Config(format!("duplicate unit `{u}`")));
            }
            names.push(u.to_string());
        }
        Ok(UnitInventory { names })
    }

    /// Parses `unit id` lines. `<blank> 0` is required and ids must be dense.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut entries: Vec<(usize, String, usize)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(GraphError::parse(i + 1, "expected `unit id`"));
            }
            let id: usize = f[1]
                .parse()
                .map_err(|_| GraphError::parse(i + 1, format!("invalid id `{}`", f[1])))?;
            entries.push((id, f[0].to_string(), i + 1));
        }
        entries.sort();
        let mut names = Vec::with_capacity(entries.len());
        for (expect, (id, name, line)) in entries.into_iter().enumerate() {
            if id != expect {
                return Err(GraphError::parse(
                    line,
                    format!("unit ids must be dense from 0, missing id {expect}"),
                ));
            }
            if names.contains(&name) {
                return Err(GraphError::parse(line, format!("duplicate unit `{name}`")));
            }
            names.push(name);
        }
        match names.first() {
            Some(b) if b == BLANK_SYMBOL => {}
            _ => return Err(GraphError::Config("units file must map `<blank>` to id 0".into())),
        }
        if names.len() < 2 {
            return Err(GraphError::Config("unit inventory is empty".into()));
        }
        Ok(UnitInventory { names })
    }

    /// Number of posterior columns, blank included.
    pub fn num_tokens(&self) -> usize {
        self.names.len()
    }

    /// Non-blank unit names, column order.
    pub fn units(&self) -> &[String] {
        &self.names[1..]
    }

    pub fn name(&self, column: usize) -> Option<&str> {
        self.names.get(column).map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn to_text(&self) -> String {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{n} {i}\n"))
            .collect()
    }
}

/// Input table of `T` and `TLG`: `<eps>`, `<blank>`, then units shifted by one.
pub fn token_table(inv: &UnitInventory) -> SymbolTable {
    let mut t = SymbolTable::new();
    for name in &inv.names {
        t.add(name);
    }
    t
}

/// Output table of `T`: unit ids equal posterior columns, 0 is epsilon.
pub fn unit_table(inv: &UnitInventory) -> SymbolTable {
    let mut t = SymbolTable::new();
    for name in inv.units() {
        t.add(name);
    }
    t
}

/// CTC topology mapping frame-level token sequences to collapsed units.
///
/// State 0 is reached after a blank (or at the start); state `k` after
/// emitting unit `k`. Blank moves to state 0 and outputs nothing, repeating
/// `k` in state `k` outputs nothing, and any other unit `j` outputs `j`. All
/// states are final. The machine is input-deterministic and has
/// `O(units²)` arcs.
pub fn build_t(units: &[&str]) -> Result<Fst, GraphError> {
    let inv = UnitInventory::from_units(units)?;
    let n = inv.units().len() as Label;
    let blank: Label = 1;
    let token = |unit: Label| unit + 1;
    let mut t = Fst::new();
    for _ in 0..=n {
        let s = t.add_state();
        t.set_final(s, Weight::ONE);
    }
    t.set_start(0);
    t.add_arc(0, Arc::new(blank, EPSILON, Weight::ONE, 0));
    for k in 1..=n {
        t.add_arc(k, Arc::new(blank, EPSILON, Weight::ONE, 0));
        for j in 1..=n {
            if j == k {
                t.add_arc(k, Arc::new(token(k), EPSILON, Weight::ONE, k));
            } else {
                t.add_arc(k, Arc::new(token(j), j, Weight::ONE, j));
            }
        }
        t.add_arc(0, Arc::new(token(k), k, Weight::ONE, k));
    }
    t.set_input_symbols(Some(token_table(&inv)));
    t.set_output_symbols(Some(unit_table(&inv)));
    t.canonicalize();
    Ok(t)
}
