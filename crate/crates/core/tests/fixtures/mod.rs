//! Small decoding graphs shared by the integration tests.
#![allow(dead_code)]

use ctcgraph_core::decode::PosteriorMatrix;
use ctcgraph_core::fst::{Fst, SymbolTable};
use ctcgraph_core::graph::{
    build_g_with_words, build_l, build_t, build_tlg, parse_arpa, token_table, unit_table, BuildTlgOptions, Lexicon,
    UnitInventory,
};

pub struct Toy {
    pub tlg: Fst,
    pub inv: UnitInventory,
    pub words: SymbolTable,
}

/// Lexicon over units x, y, z for the words of the bigram fixture.
pub const TOY_LEXICON: &str = "a x\nb y z\nc x z\n";

pub fn toy(lexicon: &str, arpa: &str) -> Toy {
    let lex = Lexicon::parse(lexicon).unwrap();
    let mut units = lex.units();
    units.sort();
    let inv = UnitInventory::from_units(&units).unwrap();
    let mut words = SymbolTable::new();
    for w in lex.words() {
        words.add(w);
    }
    let names: Vec<&str> = inv.units().iter().map(String::as_str).collect();
    let l = build_l(&lex, &unit_table(&inv), &words).unwrap();
    let g = build_g_with_words(&parse_arpa(arpa).unwrap(), &words).unwrap();
    let mut tlg = build_tlg(&build_t(&names).unwrap(), &l, &g, BuildTlgOptions::default()).unwrap();
    tlg.set_input_symbols(Some(token_table(&inv)));
    tlg.set_output_symbols(Some(words.clone()));
    Toy { tlg, inv, words }
}

/// Peaked rows: `hot` mass on the given column, the rest spread evenly.
pub fn peaked(cols: &[usize], tokens: usize, hot: f64) -> PosteriorMatrix {
    let rows: Vec<Vec<f64>> = cols
        .iter()
        .map(|&c| {
            let mut r = vec![(1.0 - hot) / (tokens - 1) as f64; tokens];
            r[c] = hot;
            r
        })
        .collect();
    PosteriorMatrix::from_probs(tokens, &rows).unwrap()
}

/// Matrix columns spelling `words` with a blank frame around every unit.
pub fn spell(toy: &Toy, lexicon: &str, words: &[&str]) -> Vec<usize> {
    let lex = Lexicon::parse(lexicon).unwrap();
    let mut cols = vec![0];
    for w in words {
        let e = lex.entries().iter().find(|e| e.word == *w).unwrap();
        for u in &e.pron {
            cols.push(toy.inv.column(u).unwrap());
            cols.push(0);
        }
    }
    cols
}
