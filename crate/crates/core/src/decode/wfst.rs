use std::collections::{HashMap, VecDeque};

use super::nbest::{Hypothesis, NBestList, PathStep};
use super::posterior::PosteriorMatrix;
use super::{DecodeError, DecodeOptions};
use crate::context::{ContextGraph, ContextState};
use crate::fst::{Arc, Fst, Label, StateId};

const NO_TRACE: u32 = u32::MAX;
const CLOSURE_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
struct Token {
    state: StateId,
    ctx: ContextState,
    /// Search cost, lower is better.
    cost: f64,
    acoustic: f64,
    graph: f64,
    context: f64,
    trace: u32,
}

impl Token {
    fn key(&self) -> (StateId, u32) {
        (self.state, self.ctx.node)
    }
}

#[derive(Clone, Copy, Debug)]
struct Trace {
    prev: u32,
    step: PathStep,
    ilabel: Label,
    olabel: Label,
}

/// Frame-synchronous Viterbi token passing over a TLG graph. Graph input
/// labels are acoustic tokens: 0 is epsilon, 1 is blank and `k + 1` is
/// matrix column `k`. Context biasing advances on output labels.
pub struct CtcWfstDecoder<'a> {
    graph: &'a Fst,
    opts: DecodeOptions,
    ctx: Option<&'a ContextGraph>,
    graph_tokens: usize,
    tokens: Vec<Token>,
    arena: Vec<Trace>,
    rows_seen: usize,
    frames_decoded: usize,
}

impl<'a> CtcWfstDecoder<'a> {
    pub fn new(graph: &'a Fst, opts: &DecodeOptions, ctx: Option<&'a ContextGraph>) -> Result<Self, DecodeError> {
        opts.validate()?;
        let start = match graph.start() {
            Some(s) if !graph.is_empty() => s,
            _ => return Err(DecodeError::Config("decoding graph is empty".into())),
        };
        let graph_tokens = match graph.input_symbols() {
            Some(t) => t.len().saturating_sub(1),
            None => graph
                .states()
                .flat_map(|s| graph.arcs(s).iter().map(|a| a.ilabel as usize))
                .max()
                .unwrap_or(0),
        };
        let mut dec = CtcWfstDecoder {
            graph,
            opts: opts.clone(),
            ctx,
            graph_tokens,
            tokens: vec![Token {
                state: start,
                ctx: ContextState::START,
                cost: 0.0,
                acoustic: 0.0,
                graph: 0.0,
                context: 0.0,
                trace: NO_TRACE,
            }],
            arena: Vec::new(),
            rows_seen: 0,
            frames_decoded: 0,
        };
        dec.epsilon_closure();
        Ok(dec)
    }

    /// Frames that went through the search (skipped frames excluded).
    pub fn frames_decoded(&self) -> usize {
        self.frames_decoded
    }

    pub fn num_active(&self) -> usize {
        self.tokens.len()
    }

    pub fn advance(&mut self, chunk: &PosteriorMatrix) -> Result<(), DecodeError> {
        let ok = if self.graph.input_symbols().is_some() {
            chunk.tokens() == self.graph_tokens
        } else {
            chunk.tokens() >= self.graph_tokens
        };
        if !ok {
            return Err(DecodeError::TokenMismatch {
                expected: self.graph_tokens,
                found: chunk.tokens(),
            });
        }
        for row in chunk.rows() {
            let frame = self.rows_seen;
            self.rows_seen += 1;
            if row[0].exp() > self.opts.blank_skip_threshold {
                continue;
            }
            self.step(row, frame);
            self.frames_decoded += 1;
        }
        Ok(())
    }

    fn extend(&mut self, tok: &Token, arc: &Arc, index: usize, frame: Option<usize>, acoustic: f64) -> Token {
        let mut graph = self.opts.lm_scale * arc.weight.value();
        let mut ctx = tok.ctx;
        let mut bonus = 0.0;
        if arc.olabel != 0 {
            graph += self.opts.word_penalty;
            if let Some(g) = self.ctx {
                let (s, d) = g.advance(ctx, arc.olabel);
                ctx = s;
                bonus = d;
            }
        }
        self.arena.push(Trace {
            prev: tok.trace,
            step: PathStep {
                state: tok.state,
                arc: index,
                frame,
            },
            ilabel: arc.ilabel,
            olabel: arc.olabel,
        });
        Token {
            state: arc.nextstate,
            ctx,
            cost: tok.cost + acoustic + graph - bonus,
            acoustic: tok.acoustic + acoustic,
            graph: tok.graph + graph,
            context: tok.context + bonus,
            trace: (self.arena.len() - 1) as u32,
        }
    }

    fn step(&mut self, row: &[f64], frame: usize) {
        let graph = self.graph;
        let mut index: HashMap<(StateId, u32), usize> = HashMap::new();
        let mut next: Vec<Token> = Vec::new();
        let current = std::mem::take(&mut self.tokens);
        for tok in &current {
            for (ai, arc) in graph.arcs(tok.state).iter().enumerate() {
                if arc.ilabel == 0 {
                    continue;
                }
                let lp = row[arc.ilabel as usize - 1];
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let new = self.extend(tok, arc, ai, Some(frame), -self.opts.acoustic_scale * lp);
                relax(&mut index, &mut next, new);
            }
        }
        self.tokens = next;
        self.prune();
        self.epsilon_closure();
    }

    fn epsilon_closure(&mut self) {
        let graph = self.graph;
        let mut index: HashMap<(StateId, u32), usize> =
            self.tokens.iter().enumerate().map(|(i, t)| (t.key(), i)).collect();
        let mut queue: VecDeque<usize> = (0..self.tokens.len()).collect();
        let bound = self.best_cost() + self.opts.wfst_beam;
        let mut steps = 0;
        while let Some(i) = queue.pop_front() {
            steps += 1;
            if steps > CLOSURE_LIMIT {
                log::warn!("decode: epsilon closure did not converge; truncating");
                break;
            }
            let tok = self.tokens[i];
            for (ai, arc) in graph.arcs(tok.state).iter().enumerate() {
                if arc.ilabel != 0 {
                    continue;
                }
                let new = self.extend(&tok, arc, ai, None, 0.0);
                if new.cost > bound {
                    continue;
                }
                if let Some(j) = relax(&mut index, &mut self.tokens, new) {
                    queue.push_back(j);
                }
            }
        }
        self.prune();
    }

    fn best_cost(&self) -> f64 {
        self.tokens.iter().map(|t| t.cost).fold(f64::INFINITY, f64::min)
    }

    fn prune(&mut self) {
        let bound = self.best_cost() + self.opts.wfst_beam;
        self.tokens.retain(|t| t.cost <= bound);
        if self.tokens.len() > self.opts.max_active {
            self.tokens
                .sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.key().cmp(&b.key())));
            self.tokens.truncate(self.opts.max_active);
        }
        self.tokens.sort_by_key(Token::key);
    }

    fn hypothesis(&self, tok: &Token, final_graph: f64, final_bonus: f64) -> Hypothesis {
        let mut traces = Vec::new();
        let mut cur = tok.trace;
        while cur != NO_TRACE {
            let t = &self.arena[cur as usize];
            traces.push(t);
            cur = t.prev;
        }
        traces.reverse();
        let mut units = Vec::new();
        let mut prev = 0;
        for t in traces.iter().filter(|t| t.ilabel != 0) {
            if t.ilabel != prev && t.ilabel > 1 {
                units.push(t.ilabel - 1);
            }
            prev = t.ilabel;
        }
        let mut h = Hypothesis::new(units, -tok.acoustic);
        h.words = traces.iter().filter(|t| t.olabel != 0).map(|t| t.olabel).collect();
        h.score_lm = -(tok.graph + final_graph);
        h.score_context = tok.context + final_bonus;
        h.path = traces.iter().map(|t| t.step).collect();
        h
    }

    /// N-best distinct word sequences among the surviving tokens. Tokens in
    /// final graph states are preferred; without any, all tokens compete.
    pub fn finalize(&self) -> NBestList {
        let finals: Vec<&Token> = self.tokens.iter().filter(|t| self.graph.is_final(t.state)).collect();
        let use_finals = !finals.is_empty();
        if !use_finals {
            log::warn!("decode: no token reached a final state; using all active tokens");
        }
        let mut scored: Vec<(f64, Hypothesis)> = Vec::new();
        for tok in &self.tokens {
            let fw = if use_finals {
                if !self.graph.is_final(tok.state) {
                    continue;
                }
                self.opts.lm_scale * self.graph.final_weight(tok.state).value()
            } else {
                0.0
            };
            let bonus = self.ctx.map_or(0.0, |g| g.finalize(tok.ctx));
            scored.push((tok.cost + fw - bonus, self.hypothesis(tok, fw, bonus)));
        }
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| a.1.words.cmp(&b.1.words))
                .then_with(|| a.1.units.cmp(&b.1.units))
        });
        let mut out: Vec<Hypothesis> = Vec::new();
        for (_, h) in scored {
            if out.len() == self.opts.nbest {
                break;
            }
            if out.iter().all(|o| o.words != h.words) {
                out.push(h);
            }
        }
        NBestList::new(out)
    }
}

/// Inserts or improves the token for `new`'s key; returns its index when it
/// changed.
fn relax(index: &mut HashMap<(StateId, u32), usize>, tokens: &mut Vec<Token>, new: Token) -> Option<usize> {
    match index.get(&new.key()) {
        Some(&i) => {
            if new.cost < tokens[i].cost {
                tokens[i] = new;
                Some(i)
            } else {
                None
            }
        }
        None => {
            index.insert(new.key(), tokens.len());
            tokens.push(new);
            Some(tokens.len() - 1)
        }
    }
}

/// One-shot WFST beam search over a whole matrix.
pub fn ctc_wfst_beam_search(
    post: &PosteriorMatrix,
    graph: &Fst,
    opts: &DecodeOptions,
    ctx: Option<&ContextGraph>,
) -> Result<NBestList, DecodeError> {
    let mut dec = CtcWfstDecoder::new(graph, opts, ctx)?;
    dec.advance(post)?;
    Ok(dec.finalize())
}
