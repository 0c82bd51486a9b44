use std::collections::HashMap;
use std::f64::consts::LN_10;

use crate::fst::{Arc, Fst, StateId, SymbolTable, Weight};

use super::{ArpaModel, GraphError, BACKOFF_DISAMBIG};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Word table for a model alone: `<eps>`, then its words in file order,
/// sentence markers excluded.
pub fn word_table(model: &ArpaModel) -> SymbolTable {
    let mut t = SymbolTable::new();
    for g in model.orders.get(&1).into_iter().flatten() {
        let w = &g.words[0];
        if w != BOS && w != EOS {
            t.add(w);
        }
    }
    t
}

pub fn build_g(model: &ArpaModel) -> Result<Fst, GraphError> {
    build_g_with_words(model, &word_table(model))
}

fn cost(log10: f64) -> Weight {
    Weight::new(-log10 * LN_10)
}

/// Backoff grammar acceptor.
///
/// One state per history (every n-gram below the highest order), word arcs
/// weighted `−ln 10^logprob`, and a `#0` arc from each non-empty history to
/// its longest existing suffix carrying the backoff weight. The start state
/// is the `<s>` history; `</s>` entries become final weights. Only word
/// labels appear on arcs.
pub fn build_g_with_words(model: &ArpaModel, words: &SymbolTable) -> Result<Fst, GraphError> {
    let mut syms = words.clone();
    if syms.find(BACKOFF_DISAMBIG).is_some() {
        return Err(GraphError::Config(format!(
            "word table already contains `{BACKOFF_DISAMBIG}`"
        )));
    }
    let backoff_label = syms.add(BACKOFF_DISAMBIG);
    let mut g = Fst::new();
    g.set_input_symbols(Some(syms.clone()));
    g.set_output_symbols(Some(syms));
    if model.is_empty() {
        return Ok(g);
    }

    let max = model.max_order();
    let mut states: HashMap<&[String], StateId> = HashMap::new();
    let null = g.add_state();
    states.insert(&[], null);
    for gram in model.ngrams() {
        if gram.words.len() < max && gram.words.last().map(String::as_str) != Some(EOS) {
            states.entry(&gram.words).or_insert_with(|| g.add_state());
        }
    }
    let longest_suffix =
        |ws: &[String]| -> StateId { (0..=ws.len()).find_map(|k| states.get(&ws[k..]).copied()).unwrap() };

    for gram in model.ngrams() {
        let n = gram.words.len();
        let history = &gram.words[..n - 1];
        let word = gram.words[n - 1].as_str();
        let Some(&src) = states.get(history) else {
            // history ends in </s> or was never a context; nothing can reach it
            continue;
        };
        match word {
            BOS => {}
            EOS => g.set_final(src, cost(gram.logprob)),
            _ => {
                let label = words
                    .find(word)
                    .ok_or_else(|| GraphError::Config(format!("word `{word}` missing from the word table")))?;
                let dst = if n < max {
                    states[gram.words.as_slice()]
                } else {
                    longest_suffix(&gram.words[1..])
                };
                g.add_arc(src, Arc::new(label, label, cost(gram.logprob), dst));
            }
        }
    }
    for gram in model.ngrams() {
        if let Some(&state) = states.get(gram.words.as_slice()) {
            let dst = longest_suffix(&gram.words[1..]);
            let bo = gram.backoff.unwrap_or(0.0);
            g.add_arc(state, Arc::new(backoff_label, backoff_label, cost(bo), dst));
        }
    }
    let start = states.get(&[BOS.to_string()][..]).copied().unwrap_or(null);
    g.set_start(start);
    g.connect();
    Ok(g)
}
