use std::collections::HashMap;

use super::nbest::{Hypothesis, NBestList};
use super::posterior::PosteriorMatrix;
use super::DecodeError;
use crate::context::{ContextGraph, ContextState};
use crate::fst::Label;

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Clone, Copy, Debug)]
struct PrefixScore {
    /// Log probability of paths ending in blank.
    pb: f64,
    /// Log probability of paths ending in the last unit.
    pnb: f64,
    ctx: ContextState,
    ctx_score: f64,
}

impl PrefixScore {
    fn ctc(&self) -> f64 {
        log_add(self.pb, self.pnb)
    }

    fn score(&self) -> f64 {
        self.ctc() + self.ctx_score
    }
}

/// Streaming CTC prefix beam search. Feeding a matrix in chunks gives the
/// same result as feeding it at once.
pub struct CtcPrefixBeamSearch<'a> {
    beam: usize,
    nbest: usize,
    ctx: Option<&'a ContextGraph>,
    blank_skip: Option<f64>,
    tokens: Option<usize>,
    frames: usize,
    hyps: Vec<(Vec<Label>, PrefixScore)>,
}

impl<'a> CtcPrefixBeamSearch<'a> {
    pub fn new(beam: usize, nbest: usize, ctx: Option<&'a ContextGraph>) -> Result<Self, DecodeError> {
        if nbest == 0 || beam < nbest {
            return Err(DecodeError::Config(format!(
                "need beam >= nbest >= 1, got beam {beam}, nbest {nbest}"
            )));
        }
        let root = PrefixScore {
            pb: 0.0,
            pnb: f64::NEG_INFINITY,
            ctx: ContextState::START,
            ctx_score: 0.0,
        };
        Ok(CtcPrefixBeamSearch {
            beam,
            nbest,
            ctx,
            blank_skip: None,
            tokens: None,
            frames: 0,
            hyps: vec![(Vec::new(), root)],
        })
    }

    /// Skips frames whose blank probability exceeds `threshold`.
    pub fn with_blank_skip(mut self, threshold: Option<f64>) -> Self {
        self.blank_skip = threshold;
        self
    }

    /// Frames that went through the search (skipped frames excluded).
    pub fn frames_decoded(&self) -> usize {
        self.frames
    }

    pub fn advance(&mut self, chunk: &PosteriorMatrix) -> Result<(), DecodeError> {
        match self.tokens {
            Some(n) if n != chunk.tokens() => {
                return Err(DecodeError::TokenMismatch {
                    expected: n,
                    found: chunk.tokens(),
                })
            }
            _ => self.tokens = Some(chunk.tokens()),
        }
        for row in chunk.rows() {
            if self.blank_skip.is_some_and(|th| row[0].exp() > th) {
                continue;
            }
            self.step(row);
            self.frames += 1;
        }
        Ok(())
    }

    fn step(&mut self, row: &[f64]) {
        let mut index: HashMap<Vec<Label>, usize> = HashMap::new();
        let mut next: Vec<(Vec<Label>, PrefixScore)> = Vec::new();
        let ctx = self.ctx;
        let mut slot = |next: &mut Vec<(Vec<Label>, PrefixScore)>,
                        prefix: Vec<Label>,
                        from: &PrefixScore,
                        unit: Option<Label>|
         -> usize {
            if let Some(&i) = index.get(&prefix) {
                return i;
            }
            let (state, delta) = match (ctx, unit) {
                (Some(g), Some(u)) => g.advance(from.ctx, u),
                _ => (from.ctx, 0.0),
            };
            let score = PrefixScore {
                pb: f64::NEG_INFINITY,
                pnb: f64::NEG_INFINITY,
                ctx: state,
                ctx_score: from.ctx_score + delta,
            };
            index.insert(prefix.clone(), next.len());
            next.push((prefix, score));
            next.len() - 1
        };
        for (prefix, s) in &self.hyps {
            let last = prefix.last().copied();
            for (c, &lp) in row.iter().enumerate() {
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let c = c as Label;
                if c == 0 {
                    let i = slot(&mut next, prefix.clone(), s, None);
                    next[i].1.pb = log_add(next[i].1.pb, s.ctc() + lp);
                    continue;
                }
                let mut extended = prefix.clone();
                extended.push(c);
                if last == Some(c) {
                    let i = slot(&mut next, prefix.clone(), s, None);
                    next[i].1.pnb = log_add(next[i].1.pnb, s.pnb + lp);
                    let j = slot(&mut next, extended, s, Some(c));
                    next[j].1.pnb = log_add(next[j].1.pnb, s.pb + lp);
                } else {
                    let j = slot(&mut next, extended, s, Some(c));
                    next[j].1.pnb = log_add(next[j].1.pnb, s.ctc() + lp);
                }
            }
        }
        next.retain(|(_, s)| s.ctc() > f64::NEG_INFINITY);
        next.sort_by(|a, b| b.1.score().total_cmp(&a.1.score()).then_with(|| a.0.cmp(&b.0)));
        next.truncate(self.beam);
        self.hyps = next;
    }

    /// Current n-best, with open partial phrase matches cancelled.
    pub fn finalize(&self) -> NBestList {
        let hyps = self
            .hyps
            .iter()
            .map(|(units, s)| {
                let mut h = Hypothesis::new(units.clone(), s.ctc());
                h.score_context = s.ctx_score + self.ctx.map_or(0.0, |g| g.finalize(s.ctx));
                h
            })
            .collect();
        let mut list = NBestList::new(hyps);
        list.hyps.truncate(self.nbest);
        list
    }
}

/// One-shot prefix beam search over a whole matrix.
pub fn ctc_prefix_beam_search(
    post: &PosteriorMatrix,
    beam: usize,
    nbest: usize,
    ctx: Option<&ContextGraph>,
) -> Result<NBestList, DecodeError> {
    let mut search = CtcPrefixBeamSearch::new(beam, nbest, ctx)?;
    search.advance(post)?;
    Ok(search.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{build_context_graph, BiasingPhrase};

    fn matrix(rows: &[[f64; 3]]) -> PosteriorMatrix {
        PosteriorMatrix::from_probs(3, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_frame_example_matches_hand_marginals() {
        let m = matrix(&[[0.6, 0.3, 0.1], [0.6, 0.3, 0.1]]);
        let out = ctc_prefix_beam_search(&m, 100, 100, None).unwrap();
        // P(a) = 0.6*0.3 + 0.3*0.6 + 0.3*0.3 = 0.45, P(empty) = 0.36
        let best = out.best().unwrap();
        assert_eq!(best.units, vec![1]);
        assert!((best.score_ctc - 0.45f64.ln()).abs() < 1e-12);
        assert_eq!(out.hyps[1].units, Vec::<Label>::new());
        assert!((out.hyps[1].score_ctc - 0.36f64.ln()).abs() < 1e-12);
        let total: f64 = out.iter().map(|h| h.score_ctc.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_blank_gives_empty_hypothesis() {
        let m = PosteriorMatrix::from_log_probs(3, &vec![vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]; 3]).unwrap();
        let out = ctc_prefix_beam_search(&m, 4, 4, None).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out.best().unwrap().units.is_empty());
        assert_eq!(out.best().unwrap().score_ctc, 0.0);
    }

    #[test]
    fn zero_frames() {
        let out = ctc_prefix_beam_search(&PosteriorMatrix::empty(3), 4, 2, None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.best().unwrap().total(), 0.0);
    }

    #[test]
    fn boost_lifts_phrase_over_empty() {
        let m = matrix(&[[0.8, 0.1, 0.1], [0.8, 0.1, 0.1]]);
        let plain = ctc_prefix_beam_search(&m, 10, 10, None).unwrap();
        assert!(plain.best().unwrap().units.is_empty());
        let g = build_context_graph(
            &[BiasingPhrase {
                surface: "a".into(),
                units: vec![1],
            }],
            10.0,
        )
        .unwrap();
        let biased = ctc_prefix_beam_search(&m, 10, 10, Some(&g)).unwrap();
        let best = biased.best().unwrap();
        assert_eq!(best.units, vec![1]);
        // P(a) = 0.8*0.1 + 0.1*0.8 + 0.1*0.1
        assert!((best.score_ctc - 0.17f64.ln()).abs() < 1e-12);
        assert_eq!(best.score_context, 10.0);
    }

    #[test]
    fn config_is_checked() {
        assert!(CtcPrefixBeamSearch::new(1, 2, None).is_err());
        assert!(CtcPrefixBeamSearch::new(1, 0, None).is_err());
    }

    #[test]
    fn chunked_equals_one_shot() {
        let m = matrix(&[
            [0.5, 0.3, 0.2],
            [0.1, 0.6, 0.3],
            [0.4, 0.4, 0.2],
            [0.2, 0.1, 0.7],
            [0.3, 0.3, 0.4],
        ]);
        let whole = ctc_prefix_beam_search(&m, 3, 3, None).unwrap();
        let mut s = CtcPrefixBeamSearch::new(3, 3, None).unwrap();
        for c in m.chunks(2) {
            s.advance(&c).unwrap();
        }
        assert_eq!(s.finalize(), whole);
    }

    #[test]
    fn token_count_must_not_change() {
        let mut s = CtcPrefixBeamSearch::new(3, 3, None).unwrap();
        s.advance(&PosteriorMatrix::empty(3)).unwrap();
        assert!(matches!(
            s.advance(&PosteriorMatrix::empty(4)),
            Err(DecodeError::TokenMismatch { expected: 3, found: 4 })
        ));
    }
}
