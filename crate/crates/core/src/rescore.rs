//! Second-pass n-best rescoring with left-to-right and right-to-left
//! sequence scorers.

use std::collections::HashMap;

use crate::decode::{NBestList, RescoreScores};
use crate::fst::Label;

#[derive(Debug, thiserror::Error)]
pub enum RescoreError {
    #[error("alpha must be in [0, 1] and ctc_weight non-negative, got alpha {alpha}, ctc_weight {ctc_weight}")]
    Weights { alpha: f64, ctc_weight: f64 },
    #[error("nothing to rescore")]
    EmptyNBest,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scorer failed: {0}")]
    Scorer(String),
}

/// Log-score of a unit sequence. An R2L scorer is handed the reversed
/// sequence.
pub trait SequenceScorer: Sync {
    fn score(&self, units: &[Label]) -> Result<f64, RescoreError>;
}

impl<F> SequenceScorer for F
where
    F: Fn(&[Label]) -> f64 + Sync,
{
    fn score(&self, units: &[Label]) -> Result<f64, RescoreError> {
        Ok(self(units))
    }
}

/// Explicit sequence to score table; unknown sequences score `-inf`.
#[derive(Clone, Debug, Default)]
pub struct TableScorer {
    table: HashMap<Vec<Label>, f64>,
}

impl TableScorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, units: Vec<Label>, score: f64) {
        self.table.insert(units, score);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Parses `score tok1 tok2 ...` lines, resolving tokens with `resolve`.
    pub fn parse(text: &str, resolve: impl Fn(&str) -> Option<Label>) -> Result<Self, RescoreError> {
        let mut t = TableScorer::new();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(first) = fields.next() else { continue };
            let err = |message: String| RescoreError::Parse { line: i + 1, message };
            let score: f64 = first.parse().map_err(|_| err(format!("bad score `{first}`")))?;
            let units = fields
                .map(|tok| resolve(tok).ok_or_else(|| err(format!("unknown token `{tok}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            t.insert(units, score);
        }
        Ok(t)
    }
}

impl SequenceScorer for TableScorer {
    fn score(&self, units: &[Label]) -> Result<f64, RescoreError> {
        Ok(self.table.get(units).copied().unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionWeights {
    /// R2L share of the attention score.
    pub alpha: f64,
    /// Weight of the first-pass score.
    pub ctc_weight: f64,
}

impl FusionWeights {
    pub fn new(alpha: f64, ctc_weight: f64) -> Result<Self, RescoreError> {
        if !(0.0..=1.0).contains(&alpha) || !(ctc_weight.is_finite() && ctc_weight >= 0.0) {
            return Err(RescoreError::Weights { alpha, ctc_weight });
        }
        Ok(FusionWeights { alpha, ctc_weight })
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            alpha: 0.3,
            ctc_weight: 0.5,
        }
    }
}

pub fn reverse_labels(units: &[Label]) -> Vec<Label> {
    units.iter().rev().copied().collect()
}

fn weighted(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x
    }
}

fn run(scorer: &dyn SequenceScorer, units: &[Label], which: &str) -> f64 {
    scorer.score(units).unwrap_or_else(|e| {
        log::warn!("rescore: {which} scorer failed on {units:?}: {e}");
        f64::NEG_INFINITY
    })
}

/// Re-ranks `nbest` by
/// `ctc_weight * first_pass + (1 - alpha) * l2r(y) + alpha * r2l(reverse(y))`.
/// A term with zero weight is dropped, so an unscored sequence only sinks
/// when its scorer actually counts.
pub fn rescore_nbest(
    nbest: &NBestList,
    l2r: &dyn SequenceScorer,
    r2l: &dyn SequenceScorer,
    w: FusionWeights,
) -> Result<NBestList, RescoreError> {
    let w = FusionWeights::new(w.alpha, w.ctc_weight)?;
    if nbest.is_empty() {
        return Err(RescoreError::EmptyNBest);
    }
    let hyps = nbest
        .iter()
        .map(|h| {
            let mut h = h.clone();
            let l = run(l2r, &h.units, "l2r");
            let r = run(r2l, &reverse_labels(&h.units), "r2l");
            let total =
                weighted(w.ctc_weight, h.first_pass_score()) + weighted(1.0 - w.alpha, l) + weighted(w.alpha, r);
            h.rescore = Some(RescoreScores { l2r: l, r2l: r, total });
            h
        })
        .collect();
    Ok(NBestList::new(hyps))
}
