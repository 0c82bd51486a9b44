//! Contextual biasing automaton.
//!
//! Biasing phrases are merged into a trie over biasing units (modeling units
//! without an LM, words with one). Every matched unit earns a boost `b`; an
//! intermediate state owns a failure transition back to the root whose
//! weight cancels the boost collected since the last completed phrase, so a
//! partially matched phrase contributes nothing. A completed phrase keeps
//! its boost. Shared prefixes are matched greedily: on a mismatch the walk
//! fails to the root and retries the current unit once.

use std::collections::BTreeMap;

use crate::fst::{Label, SymbolTable};

#[derive(Debug, thiserror::Error)]
pub enum ContextError {
    #[error("boost must be a finite non-negative number, got {0}")]
    InvalidBoost(f64),
    #[error("no usable biasing phrase")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiasingPhrase {
    pub surface: String,
    pub units: Vec<Label>,
}

/// How a phrase's surface text is split into biasing units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitMode {
    /// Greedy longest match against modeling units (characters, word pieces).
    Modeling,
    /// Whitespace-separated vocabulary words.
    Words,
}

impl BiasingPhrase {
    /// Splits `surface` into ids of `table`; `Err` carries the first
    /// unresolvable piece.
    pub fn tokenize(surface: &str, table: &SymbolTable, mode: UnitMode) -> Result<Self, String> {
        let mut units = Vec::new();
        for token in surface.split_whitespace() {
            match mode {
                UnitMode::Words => units.push(table.find(token).filter(|&id| id != 0).ok_or(token.to_string())?),
                UnitMode::Modeling => {
                    if let Some(id) = table.find(token).filter(|&id| id != 0) {
                        units.push(id);
                        continue;
                    }
                    let chars: Vec<(usize, char)> = token.char_indices().collect();
                    let mut i = 0;
                    while i < chars.len() {
                        let start = chars[i].0;
                        let found = (i + 1..=chars.len()).rev().find_map(|j| {
                            let end = chars.get(j).map_or(token.len(), |c| c.0);
                            table.find(&token[start..end]).filter(|&id| id != 0).map(|id| (j, id))
                        });
                        let (j, id) = found.ok_or_else(|| chars[i].1.to_string())?;
                        units.push(id);
                        i = j;
                    }
                }
            }
        }
        if units.is_empty() {
            return Err(surface.to_string());
        }
        Ok(BiasingPhrase {
            surface: surface.to_string(),
            units,
        })
    }
}

#[derive(Clone, Debug)]
struct Node {
    children: BTreeMap<Label, u32>,
    depth: u32,
    is_final: bool,
    /// Boost collected since the root or the last completed phrase.
    pending: f64,
}

#[derive(Clone, Debug)]
pub struct ContextGraph {
    nodes: Vec<Node>,
    boost: f64,
}

/// Position of one hypothesis in the biasing automaton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContextState {
    pub node: u32,
    pub pending: f64,
}

impl ContextState {
    pub const START: ContextState = ContextState { node: 0, pending: 0.0 };
}

impl Default for ContextState {
    fn default() -> Self {
        Self::START
    }
}

/// Builds the biasing trie. Phrases without units are skipped with a warning.
pub fn build_context_graph(phrases: &[BiasingPhrase], boost: f64) -> Result<ContextGraph, ContextError> {
    if !boost.is_finite() || boost < 0.0 {
        return Err(ContextError::InvalidBoost(boost));
    }
    let mut nodes = vec![Node {
        children: BTreeMap::new(),
        depth: 0,
        is_final: false,
        pending: 0.0,
    }];
    let mut used = 0;
    for phrase in phrases {
        if phrase.units.is_empty() {
            log::warn!("context: skipping empty phrase `{}`", phrase.surface);
            continue;
        }
        used += 1;
        let mut cur = 0usize;
        for &u in &phrase.units {
            cur = match nodes[cur].children.get(&u) {
                Some(&next) => next as usize,
                None => {
                    let parent = &nodes[cur];
                    let node = Node {
                        children: BTreeMap::new(),
                        depth: parent.depth + 1,
                        is_final: false,
                        pending: 0.0,
                    };
                    nodes.push(node);
                    let id = nodes.len() - 1;
                    nodes[cur].children.insert(u, id as u32);
                    id
                }
            };
        }
        nodes[cur].is_final = true;
    }
    if used == 0 {
        return Err(ContextError::Empty);
    }
    // pending boosts top-down; children always have larger ids than parents
    for id in 0..nodes.len() {
        let base = if nodes[id].is_final { 0.0 } else { nodes[id].pending };
        let kids: Vec<u32> = nodes[id].children.values().copied().collect();
        for k in kids {
            nodes[k as usize].pending = base + boost;
        }
    }
    for n in nodes.iter_mut().filter(|n| n.is_final) {
        n.pending = 0.0;
    }
    Ok(ContextGraph { nodes, boost })
}

/// Builds a graph from surface strings, logging and skipping any phrase that
/// cannot be split into units of `table`.
pub fn context_graph_from_lines<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    table: &SymbolTable,
    mode: UnitMode,
    boost: f64,
) -> Result<ContextGraph, ContextError> {
    let mut phrases = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match BiasingPhrase::tokenize(line, table, mode) {
            Ok(p) => phrases.push(p),
            Err(piece) => log::warn!("context: skipping `{line}`: `{piece}` is not a known unit"),
        }
    }
    build_context_graph(&phrases, boost)
}

impl ContextGraph {
    pub fn boost(&self) -> f64 {
        self.boost
    }

    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_final(&self, node: u32) -> bool {
        self.nodes[node as usize].is_final
    }

    pub fn depth(&self, node: u32) -> u32 {
        self.nodes[node as usize].depth
    }

    /// Match arcs `(unit, next node)`; each carries weight `+boost`.
    pub fn arcs(&self, node: u32) -> impl Iterator<Item = (Label, u32)> + '_ {
        self.nodes[node as usize].children.iter().map(|(&u, &n)| (u, n))
    }

    /// Weight of the failure transition, absent on the root and final nodes.
    pub fn failure_weight(&self, node: u32) -> Option<f64> {
        let n = &self.nodes[node as usize];
        (node != 0 && !n.is_final).then(|| -n.pending)
    }

    fn enter(&self, node: u32) -> ContextState {
        let n = &self.nodes[node as usize];
        if n.is_final && n.children.is_empty() {
            ContextState::START
        } else {
            ContextState {
                node,
                pending: n.pending,
            }
        }
    }

    fn child(&self, node: u32, unit: Label) -> Option<u32> {
        self.nodes[node as usize].children.get(&unit).copied()
    }

    /// Consumes one unit. Total over the unit alphabet.
    pub fn advance(&self, state: ContextState, unit: Label) -> (ContextState, f64) {
        if let Some(next) = self.child(state.node, unit) {
            return (self.enter(next), self.boost);
        }
        let mut delta = -state.pending;
        if let Some(next) = self.child(0, unit) {
            delta += self.boost;
            (self.enter(next), delta)
        } else {
            (ContextState::START, delta)
        }
    }

    /// Cancels a partial match left open at the end of an utterance.
    pub fn finalize(&self, state: ContextState) -> f64 {
        -state.pending
    }

    /// Biasing score of a complete unit sequence.
    pub fn score_hypothesis(&self, units: &[Label]) -> f64 {
        let mut state = ContextState::START;
        let mut total = 0.0;
        for &u in units {
            let (s, d) = self.advance(state, u);
            state = s;
            total += d;
        }
        total + self.finalize(state)
    }
}
