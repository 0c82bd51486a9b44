//! First-pass CTC search: prefix beam search without an LM and Viterbi
//! token passing over a TLG graph with one.

mod nbest;
mod posterior;
mod prefix;
mod wfst;

pub use nbest::{Hypothesis, NBestList, PathStep, RescoreScores};
pub use posterior::{PosteriorMatrix, ROW_TOLERANCE};
pub use prefix::{ctc_prefix_beam_search, CtcPrefixBeamSearch};
pub use wfst::{ctc_wfst_beam_search, CtcWfstDecoder};

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("invalid posterior matrix: {0}")]
    InvalidPosterior(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid decode configuration: {0}")]
    Config(String),
    #[error("token count mismatch: model has {expected}, posteriors have {found}")]
    TokenMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOptions {
    /// Prefix beam width in hypotheses.
    pub beam: usize,
    pub nbest: usize,
    pub acoustic_scale: f64,
    pub lm_scale: f64,
    /// Cost added per output word in WFST search.
    pub word_penalty: f64,
    /// Frames with a larger blank probability are skipped in WFST search.
    pub blank_skip_threshold: f64,
    /// Per-unit biasing boost; 0 disables biasing.
    pub context_score: f64,
    /// R2L share in rescoring.
    pub alpha: f64,
    /// First-pass share in rescoring.
    pub ctc_weight: f64,
    /// WFST pruning beam in cost units.
    pub wfst_beam: f64,
    pub max_active: usize,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            beam: 10,
            nbest: 10,
            acoustic_scale: 1.0,
            lm_scale: 1.0,
            word_penalty: 0.0,
            blank_skip_threshold: 0.98,
            context_score: 0.0,
            alpha: 0.3,
            ctc_weight: 0.5,
            wfst_beam: 16.0,
            max_active: 7000,
        }
    }
}

impl DecodeOptions {
    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |what: &str| Err(DecodeError::Config(what.to_string()));
        if self.nbest == 0 || self.beam < self.nbest {
            return bad("need beam >= nbest >= 1");
        }
        if !(self.acoustic_scale.is_finite() && self.acoustic_scale > 0.0) {
            return bad("acoustic_scale must be positive");
        }
        if !(self.lm_scale.is_finite() && self.lm_scale >= 0.0) {
            return bad("lm_scale must be non-negative");
        }
        if !self.word_penalty.is_finite() {
            return bad("word_penalty must be finite");
        }
        if !(self.blank_skip_threshold > 0.0 && self.blank_skip_threshold <= 1.0) {
            return bad("blank_skip_threshold must be in (0, 1]");
        }
        if !(self.context_score.is_finite() && self.context_score >= 0.0) {
            return bad("context_score must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must be in [0, 1]");
        }
        if !(self.ctc_weight.is_finite() && self.ctc_weight >= 0.0) {
            return bad("ctc_weight must be non-negative");
        }
        if self.wfst_beam.is_nan() || self.wfst_beam <= 0.0 || self.max_active == 0 {
            return bad("wfst_beam and max_active must be positive");
        }
        Ok(())
    }
}
