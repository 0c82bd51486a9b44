use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::fst::{Label, StateId, SymbolTable};

/// One arc taken through the decoding graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathStep {
    pub state: StateId,
    /// Index into `graph.arcs(state)`.
    pub arc: usize,
    /// Row of the original posterior matrix consumed by the arc, if any.
    pub frame: Option<usize>,
}

/// Second-pass scores attached by rescoring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescoreScores {
    pub l2r: f64,
    pub r2l: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// Collapsed unit sequence (matrix columns, blank excluded).
    pub units: Vec<Label>,
    /// Output word ids; empty on the LM-free path.
    pub words: Vec<Label>,
    pub score_ctc: f64,
    pub score_context: f64,
    pub score_lm: f64,
    pub rescore: Option<RescoreScores>,
    /// Graph path of a WFST search result, including the final state.
    pub path: Vec<PathStep>,
}

impl Hypothesis {
    pub fn new(units: Vec<Label>, score_ctc: f64) -> Self {
        Hypothesis {
            units,
            words: Vec::new(),
            score_ctc,
            score_context: 0.0,
            score_lm: 0.0,
            rescore: None,
            path: Vec::new(),
        }
    }

    pub fn first_pass_score(&self) -> f64 {
        self.score_ctc + self.score_context + self.score_lm
    }

    pub fn total(&self) -> f64 {
        self.rescore.map_or_else(|| self.first_pass_score(), |r| r.total)
    }

    /// Best first; equal totals fall back to unit then word ids.
    pub(crate) fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .total()
            .total_cmp(&self.total())
            .then_with(|| self.units.cmp(&other.units))
            .then_with(|| self.words.cmp(&other.words))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NBestList {
    pub hyps: Vec<Hypothesis>,
}

impl NBestList {
    pub fn new(mut hyps: Vec<Hypothesis>) -> Self {
        hyps.sort_by(Hypothesis::rank_cmp);
        NBestList { hyps }
    }

    pub fn best(&self) -> Option<&Hypothesis> {
        self.hyps.first()
    }

    pub fn len(&self) -> usize {
        self.hyps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Hypothesis> {
        self.hyps.iter()
    }

    /// `rank total ctc context lm <tab> units <tab> words`, one line per
    /// hypothesis. Ids are printed when a table is missing or lacks a symbol.
    pub fn to_text(&self, units: Option<&SymbolTable>, words: Option<&SymbolTable>) -> String {
        let join = |ids: &[Label], table: Option<&SymbolTable>| {
            ids.iter()
                .map(|&id| {
                    table
                        .and_then(|t| t.symbol(id))
                        .map_or_else(|| id.to_string(), str::to_string)
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        for (rank, h) in self.hyps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {} {} {} {}\t{}\t{}",
                rank + 1,
                fmt_score(h.total()),
                fmt_score(h.score_ctc),
                fmt_score(h.score_context),
                fmt_score(h.score_lm),
                join(&h.units, units),
                join(&h.words, words)
            );
        }
        out
    }
}

fn fmt_score(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-Infinity".into()
    } else {
        // normalize -0 so equal runs print identically
        format!("{:.6}", x + 0.0)
    }
}
