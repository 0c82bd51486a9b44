//! Decoding-graph ingredients: the CTC topology `T`, the lexicon `L`, the
//! n-gram grammar `G`, and their assembly into `TLG = T ∘ min(det(L ∘ G))`.
//!
//! Three symbol tables are involved:
//!
//! * tokens: `T`/`TLG` input; `<eps>` is 0, `<blank>` is 1 and acoustic
//!   unit `k` (posterior column `k`) is `k + 1`;
//! * units: `T` output and `L` input; unit `k` keeps id `k`, 0 is epsilon;
//! * words: `L` output and `G` labels.
//!
//! `L` and `G` extend the unit and word tables with `#0`, `#1`, ...
//! disambiguation symbols; [`build_tlg`] maps them to epsilon once `L ∘ G`
//! has been determinized and minimized.

mod arpa;
mod grammar;
mod lexicon;
mod tlg;
mod topology;

pub use arpa::{parse_arpa, parse_arpa_with, ArpaModel, ArpaOptions, NGram};
pub use grammar::{build_g, build_g_with_words, word_table};
pub use lexicon::{build_l, Lexicon, LexiconEntry};
pub use tlg::{build_tlg, remove_disambiguation, BuildTlgOptions};
pub use topology::{build_t, token_table, unit_table, UnitInventory, BLANK_SYMBOL};

use crate::fst::FstError;

pub const BACKOFF_DISAMBIG: &str = "#0";

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("{0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Fst(#[from] FstError),
}

impl GraphError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        GraphError::Parse {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn is_disambig(symbol: &str) -> bool {
    symbol.len() > 1 && symbol.starts_with('#') && symbol[1..].bytes().all(|b| b.is_ascii_digit())
}
