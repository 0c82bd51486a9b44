use std::collections::{HashMap, HashSet};

use crate::fst::{Arc, Fst, Label, SymbolTable, Weight, EPSILON};

use super::{GraphError, BACKOFF_DISAMBIG};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub word: String,
    pub pron: Vec<String>,
}

/// Word pronunciations over modeling units, in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.pron.is_empty() {
                return Err(GraphError::Config(format!(
                    "entry {} (`{}`) has an empty pronunciation",
                    i + 1,
                    e.word
                )));
            }
            if !seen.insert((&e.word, &e.pron)) {
                return Err(GraphError::Config(format!(
                    "duplicate entry `{} {}`",
                    e.word,
                    e.pron.join(" ")
                )));
            }
        }
        Ok(Lexicon { entries })
    }

    /// Parses `word unit1 unit2 ...` lines.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap().to_string();
            let pron: Vec<String> = fields.map(str::to_string).collect();
            if pron.is_empty() {
                return Err(GraphError::parse(i + 1, format!("word `{word}` has no pronunciation")));
            }
            if !seen.insert((word.clone(), pron.clone())) {
                return Err(GraphError::parse(i + 1, format!("duplicate entry for `{word}`")));
            }
            entries.push(LexiconEntry { word, pron });
        }
        Ok(Lexicon { entries })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Distinct words, first-appearance order.
    pub fn words(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.word.as_str()))
            .map(|e| e.word.as_str())
            .collect()
    }

    /// Distinct units used by pronunciations, first-appearance order.
    pub fn units(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .flat_map(|e| e.pron.iter())
            .filter(|u| seen.insert(u.as_str()))
            .map(String::as_str)
            .collect()
    }

    /// Per-entry disambiguation index (0 = none). A pronunciation that is a
    /// proper prefix of another, or shared by several words, gets `#1`, `#2`, ...
    pub fn disambiguation(&self) -> Vec<usize> {
        let mut count: HashMap<&[String], usize> = HashMap::new();
        let mut prefixes: HashSet<&[String]> = HashSet::new();
        for e in &self.entries {
            *count.entry(&e.pron).or_default() += 1;
            for k in 1..e.pron.len() {
                prefixes.insert(&e.pron[..k]);
            }
        }
        let mut next: HashMap<&[String], usize> = HashMap::new();
        self.entries
            .iter()
            .map(|e| {
                let p: &[String] = &e.pron;
                if count[p] > 1 || prefixes.contains(p) {
                    let n = next.entry(p).or_insert(0);
                    *n += 1;
                    *n
                } else {
                    0
                }
            })
            .collect()
    }
}

/// Lexicon transducer from units to words.
///
/// A single loop state; each pronunciation is a chain leaving and returning
/// to it, with the word on the first arc. Entries needing disambiguation end
/// with their `#n` symbol, and a `#0:#0` self-loop lets the grammar's backoff
/// symbol pass through. `units` and `words` are the base tables (no
/// disambiguation symbols); the returned machine carries extended copies.
pub fn build_l(lex: &Lexicon, units: &SymbolTable, words: &SymbolTable) -> Result<Fst, GraphError> {
    let disambig = lex.disambiguation();
    let max_disambig = disambig.iter().copied().max().unwrap_or(0);
    let mut in_syms = units.clone();
    for n in 0..=max_disambig {
        if in_syms.find(&format!("#{n}")).is_some() {
            return Err(GraphError::Config(format!("unit table already contains `#{n}`")));
        }
        in_syms.add(&format!("#{n}"));
    }
    let mut out_syms = words.clone();
    if out_syms.find(BACKOFF_DISAMBIG).is_some() {
        return Err(GraphError::Config(format!(
            "word table already contains `{BACKOFF_DISAMBIG}`"
        )));
    }
    let word_disambig = out_syms.add(BACKOFF_DISAMBIG);

    let mut l = Fst::new();
    let root = l.add_state();
    l.set_start(root);
    l.set_final(root, Weight::ONE);
    let unit_disambig0 = in_syms.find("#0").unwrap();
    l.add_arc(root, Arc::new(unit_disambig0, word_disambig, Weight::ONE, root));

    for (entry, &d) in lex.entries().iter().zip(&disambig) {
        let word = words
            .find(&entry.word)
            .ok_or_else(|| GraphError::Config(format!("word `{}` missing from the word table", entry.word)))?;
        let mut labels: Vec<Label> = Vec::with_capacity(entry.pron.len() + 1);
        for u in &entry.pron {
            labels.push(units.find(u).filter(|&id| id != EPSILON).ok_or_else(|| {
                GraphError::Config(format!(
                    "unit `{u}` in the pronunciation of `{}` is not a modeling unit",
                    entry.word
                ))
            })?);
        }
        if d > 0 {
            labels.push(in_syms.find(&format!("#{d}")).unwrap());
        }
        let mut src = root;
        for (i, &label) in labels.iter().enumerate() {
            let dst = if i + 1 == labels.len() { root } else { l.add_state() };
            let olabel = if i == 0 { word } else { EPSILON };
            l.add_arc(src, Arc::new(label, olabel, Weight::ONE, dst));
            src = dst;
        }
    }
    l.set_input_symbols(Some(in_syms));
    l.set_output_symbols(Some(out_syms));
    l.canonicalize();
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables(lex: &Lexicon) -> (SymbolTable, SymbolTable) {
        let mut u = SymbolTable::new();
        for x in lex.units() {
            u.add(x);
        }
        let mut w = SymbolTable::new();
        for x in lex.words() {
            w.add(x);
        }
        (u, w)
    }

    #[test]
    fn prefix_and_homophones_get_disambiguated() {
        let lex = Lexicon::parse("a x\nab x y\nb z\nc z\n").unwrap();
        assert_eq!(lex.disambiguation(), vec![1, 0, 1, 2]);
    }

    #[test]
    fn single_entry_maps_units_to_word() {
        let lex = Lexicon::parse("cat c a t\n").unwrap();
        let (u, w) = tables(&lex);
        let l = build_l(&lex, &u, &w).unwrap();
        let cat = w.find("cat").unwrap();
        let input: Vec<Label> = ["c", "a", "t"].iter().map(|s| u.find(s).unwrap()).collect();
        let c = crate::fst::compose(&Fst::linear_acceptor(&input), &l).unwrap();
        let p = crate::fst::shortest_path(&c, 5).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].olabels, vec![cat]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = Lexicon::parse("a x\nb y\nc\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        let err = Lexicon::parse("a x\na x\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
    }

    #[test]
    fn unknown_unit_is_rejected() {
        let lex = Lexicon::parse("a q\n").unwrap();
        let mut u = SymbolTable::new();
        u.add("x");
        let mut w = SymbolTable::new();
        w.add("a");
        assert!(matches!(build_l(&lex, &u, &w), Err(GraphError::Config(_))));
    }
}
