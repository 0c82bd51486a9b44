//! Weighted finite-state transducers over the tropical semiring.
//!
//! Just enough algebra to build and search decoding graphs: composition with
//! an epsilon filter, weighted determinization, minimization, trimming and
//! n-shortest paths. Every operation returns a canonical machine: start state
//! 0, states numbered breadth-first, arcs sorted by `(ilabel, olabel,
//! nextstate)`, so serialized output is reproducible byte for byte.

mod compose;
mod determinize;
mod minimize;
mod shortest_path;
mod symbols;
mod text;
mod weight;

use std::collections::VecDeque;

pub use compose::compose;
pub use determinize::{determinize, determinize_with, DeterminizeOptions};
pub use minimize::minimize;
pub use shortest_path::{shortest_path, Path};
pub use symbols::{SymbolTable, EPSILON_SYMBOL};
pub use weight::Weight;

pub type Label = u32;
pub type StateId = u32;

pub const EPSILON: Label = 0;

#[derive(Debug, thiserror::Error)]
pub enum FstError {
    #[error("symbol table mismatch: {0}")]
    SymbolMismatch(String),
    #[error("determinization exceeded its state budget of {budget} states")]
    StateBudget { budget: usize },
    #[error("minimize requires a deterministic input: state {state} has several arcs with input label {ilabel}")]
    NotDeterministic { state: StateId, ilabel: Label },
    #[error("negative-weight cycle reachable from state {0}")]
    NegativeCycle(StateId),
    #[error("epsilon closure did not converge (negative-weight epsilon cycle?)")]
    EpsilonClosure,
    #[error("duplicate symbol {0}")]
    DuplicateSymbol(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid fst: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: Weight,
    pub nextstate: StateId,
}

impl Arc {
    pub fn new(ilabel: Label, olabel: Label, weight: impl Into<Weight>, nextstate: StateId) -> Self {
        Arc {
            ilabel,
            olabel,
            weight: weight.into(),
            nextstate,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct State {
    arcs: Vec<Arc>,
    final_weight: Weight,
}

/// A mutable vector-backed transducer.
#[derive(Clone, Debug, Default)]
pub struct Fst {
    states: Vec<State>,
    start: Option<StateId>,
    isymbols: Option<SymbolTable>,
    osymbols: Option<SymbolTable>,
}

impl Fst {
    pub fn new() -> Self {
        Fst::default()
    }

    /// Acceptor for exactly one label sequence with weight one.
    pub fn linear(ilabels: &[Label], olabels: &[Label]) -> Self {
        let n = ilabels.len().max(olabels.len());
        let mut fst = Fst::new();
        let mut s = fst.add_state();
        fst.set_start(s);
        for i in 0..n {
            let t = fst.add_state();
            let il = ilabels.get(i).copied().unwrap_or(EPSILON);
            let ol = olabels.get(i).copied().unwrap_or(EPSILON);
            fst.add_arc(s, Arc::new(il, ol, Weight::ONE, t));
            s = t;
        }
        fst.set_final(s, Weight::ONE);
        fst
    }

    pub fn linear_acceptor(labels: &[Label]) -> Self {
        Self::linear(labels, labels)
    }

    pub fn add_state(&mut self) -> StateId {
        self.states.push(State {
            arcs: Vec::new(),
            final_weight: Weight::ZERO,
        });
        (self.states.len() - 1) as StateId
    }

    pub fn set_start(&mut self, s: StateId) {
        self.start = Some(s);
    }

    pub fn start(&self) -> Option<StateId> {
        self.start
    }

    pub fn set_final(&mut self, s: StateId, w: impl Into<Weight>) {
        self.states[s as usize].final_weight = w.into();
    }

    pub fn final_weight(&self, s: StateId) -> Weight {
        self.states[s as usize].final_weight
    }

    pub fn is_final(&self, s: StateId) -> bool {
        !self.final_weight(s).is_zero()
    }

    pub fn add_arc(&mut self, s: StateId, arc: Arc) {
        self.states[s as usize].arcs.push(arc);
    }

    pub fn arcs(&self, s: StateId) -> &[Arc] {
        &self.states[s as usize].arcs
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_none() || self.states.is_empty()
    }

    pub fn input_symbols(&self) -> Option<&SymbolTable> {
        self.isymbols.as_ref()
    }

    pub fn output_symbols(&self) -> Option<&SymbolTable> {
        self.osymbols.as_ref()
    }

    pub fn set_input_symbols(&mut self, t: Option<SymbolTable>) {
        self.isymbols = t;
    }

    pub fn set_output_symbols(&mut self, t: Option<SymbolTable>) {
        self.osymbols = t;
    }

    /// True when every state has at most one arc per input label.
    pub fn is_input_deterministic(&self) -> bool {
        self.first_nondeterministic().is_none()
    }

    pub(crate) fn first_nondeterministic(&self) -> Option<(StateId, Label)> {
        for s in self.states() {
            let mut labels: Vec<Label> = self.arcs(s).iter().map(|a| a.ilabel).collect();
            labels.sort_unstable();
            if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
                return Some((s, w[0]));
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.num_states()];
        for root in self.states() {
            if mark[root as usize] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root as usize] = 1;
            while let Some(&mut (s, ref mut i)) = stack.last_mut() {
                if let Some(arc) = self.arcs(s).get(*i) {
                    *i += 1;
                    match mark[arc.nextstate as usize] {
                        1 => return false,
                        0 => {
                            mark[arc.nextstate as usize] = 1;
                            stack.push((arc.nextstate, 0));
                        }
                        _ => {}
                    }
                } else {
                    mark[s as usize] = 2;
                    stack.pop();
                }
            }
        }
        true
    }

    /// Rewrites labels through `f`; used to strip disambiguation symbols.
    pub fn map_labels(&mut self, mut f: impl FnMut(Label, Label) -> (Label, Label)) {
        for st in &mut self.states {
            for arc in &mut st.arcs {
                let (i, o) = f(arc.ilabel, arc.olabel);
                arc.ilabel = i;
                arc.olabel = o;
            }
        }
    }

    /// Checks structural invariants and that labels resolve in attached tables.
    pub fn validate(&self) -> Result<(), FstError> {
        if let Some(s) = self.start {
            if s as usize >= self.states.len() {
                return Err(FstError::Invalid(format!("start state {s} out of range")));
            }
        } else if !self.states.is_empty() {
            return Err(FstError::Invalid("states present but no start state".into()));
        }
        for s in self.states() {
            for arc in self.arcs(s) {
                if arc.nextstate as usize >= self.states.len() {
                    return Err(FstError::Invalid(format!(
                        "arc from {s} targets missing state {}",
                        arc.nextstate
                    )));
                }
                if let Some(t) = &self.isymbols {
                    if !t.contains_id(arc.ilabel) {
                        return Err(FstError::Invalid(format!("input label {} not in table", arc.ilabel)));
                    }
                }
                if let Some(t) = &self.osymbols {
                    if !t.contains_id(arc.olabel) {
                        return Err(FstError::Invalid(format!("output label {} not in table", arc.olabel)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Removes states that are not both reachable from the start and able to
    /// reach a final state, then renumbers canonically.
    pub fn connect(&mut self) {
        let Some(start) = self.start else {
            *self = self.empty_like();
            return;
        };
        let n = self.num_states();
        let mut access = vec![false; n];
        let mut queue = VecDeque::from([start]);
        access[start as usize] = true;
        while let Some(s) = queue.pop_front() {
            for arc in self.arcs(s) {
                if !access[arc.nextstate as usize] {
                    access[arc.nextstate as usize] = true;
                    queue.push_back(arc.nextstate);
                }
            }
        }
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for s in self.states() {
            for arc in self.arcs(s) {
                reverse[arc.nextstate as usize].push(s);
            }
        }
        let mut coaccess = vec![false; n];
        let mut queue: VecDeque<StateId> = self.states().filter(|&s| self.is_final(s)).collect();
        for &s in &queue {
            coaccess[s as usize] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &reverse[s as usize] {
                if !coaccess[p as usize] {
                    coaccess[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
        if !(access[start as usize] && coaccess[start as usize]) {
            *self = self.empty_like();
            return;
        }
        for s in 0..n {
            self.states[s]
                .arcs
                .retain(|a| access[a.nextstate as usize] && coaccess[a.nextstate as usize]);
        }
        self.canonicalize();
    }

    /// Renumbers states breadth-first from the start (dropping unreachable
    /// ones) and sorts every arc list.
    pub fn canonicalize(&mut self) {
        let Some(start) = self.start else {
            *self = self.empty_like();
            return;
        };
        for st in &mut self.states {
            sort_arcs(&mut st.arcs);
            // parallel arcs collapse to the cheapest (tropical sum)
            st.arcs
                .dedup_by(|a, b| a.ilabel == b.ilabel && a.olabel == b.olabel && a.nextstate == b.nextstate);
        }
        let mut order = Vec::with_capacity(self.num_states());
        let mut new_id = vec![u32::MAX; self.num_states()];
        new_id[start as usize] = 0;
        order.push(start);
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for arc in &self.states[s as usize].arcs {
                if new_id[arc.nextstate as usize] == u32::MAX {
                    new_id[arc.nextstate as usize] = order.len() as StateId;
                    order.push(arc.nextstate);
                }
            }
        }
        let mut states = Vec::with_capacity(order.len());
        for &old in &order {
            let mut st = std::mem::take(&mut self.states[old as usize]);
            for arc in &mut st.arcs {
                arc.nextstate = new_id[arc.nextstate as usize];
            }
            sort_arcs(&mut st.arcs);
            states.push(st);
        }
        self.states = states;
        self.start = Some(0);
    }

    pub(crate) fn empty_like(&self) -> Fst {
        Fst {
            states: Vec::new(),
            start: None,
            isymbols: self.isymbols.clone(),
            osymbols: self.osymbols.clone(),
        }
    }
}

pub(crate) fn sort_arcs(arcs: &mut [Arc]) {
    arcs.sort_by(|a, b| {
        (a.ilabel, a.olabel, a.nextstate)
            .cmp(&(b.ilabel, b.olabel, b.nextstate))
            .then(a.weight.value().total_cmp(&b.weight.value()))
    });
}
