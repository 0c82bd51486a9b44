use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Fst, FstError, Label, StateId, Weight, EPSILON};

/// One accepting path; epsilon labels are dropped from both tapes.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub ilabels: Vec<Label>,
    pub olabels: Vec<Label>,
    pub weight: Weight,
    pub states: Vec<StateId>,
}

struct Entry {
    priority: f64,
    ilabels: Vec<Label>,
    olabels: Vec<Label>,
    seq: u64,
    cost: f64,
    // None marks the super-final node
    state: Option<StateId>,
    states: Vec<StateId>,
}

impl Entry {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| self.ilabels.cmp(&other.ilabels))
            .then_with(|| self.olabels.cmp(&other.olabels))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_key(self)
    }
}

/// Shortest distance from every state to a final state (Bellman-Ford, so
/// negative arc weights such as ARPA backoffs above one are fine).
pub(crate) fn distance_to_final(fst: &Fst) -> Result<Vec<f64>, FstError> {
    let n = fst.num_states();
    let mut dist: Vec<f64> = fst.states().map(|s| fst.final_weight(s).value()).collect();
    for round in 0..=n {
        let mut changed = false;
        for s in fst.states() {
            for arc in fst.arcs(s) {
                let cand = arc.weight.value() + dist[arc.nextstate as usize];
                if cand < dist[s as usize] {
                    dist[s as usize] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(dist);
        }
        if round == n {
            break;
        }
    }
    Err(FstError::NegativeCycle(fst.start().unwrap_or(0)))
}

/// The `n` cheapest accepting paths in nondecreasing weight order; equal
/// weights are ordered by input-label sequence.
///
/// Best-first search guided by the exact distance to a final state; each
/// state is expanded at most `n` times.
pub fn shortest_path(fst: &Fst, n: usize) -> Result<Vec<Path>, FstError> {
    let Some(start) = fst.start() else {
        return Ok(Vec::new());
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = distance_to_final(fst)?;
    if h[start as usize].is_infinite() {
        return Ok(Vec::new());
    }
    let mut expanded = vec![0usize; fst.num_states()];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Entry {
        priority: h[start as usize],
        ilabels: Vec::new(),
        olabels: Vec::new(),
        seq,
        cost: 0.0,
        state: Some(start),
        states: vec![start],
    });
    let mut out = Vec::new();
    while let Some(e) = heap.pop() {
        let Some(s) = e.state else {
            out.push(Path {
                ilabels: e.ilabels,
                olabels: e.olabels,
                weight: Weight::new(e.cost),
                states: e.states,
            });
            if out.len() == n {
                break;
            }
            continue;
        };
        expanded[s as usize] += 1;
        if expanded[s as usize] > n {
            continue;
        }
        let fw = fst.final_weight(s);
        if !fw.is_zero() {
            seq += 1;
            let cost = e.cost + fw.value();
            heap.push(Entry {
                priority: cost,
                ilabels: e.ilabels.clone(),
                olabels: e.olabels.clone(),
                seq,
                cost,
                state: None,
                states: e.states.clone(),
            });
        }
        for arc in fst.arcs(s) {
            let hn = h[arc.nextstate as usize];
            if hn.is_infinite() || arc.weight.is_zero() {
                continue;
            }
            let cost = e.cost + arc.weight.value();
            let mut ilabels = e.ilabels.clone();
            if arc.ilabel != EPSILON {
                ilabels.push(arc.ilabel);
            }
            let mut olabels = e.olabels.clone();
            if arc.olabel != EPSILON {
                olabels.push(arc.olabel);
            }
            let mut states = e.states.clone();
            states.push(arc.nextstate);
            seq += 1;
            heap.push(Entry {
                priority: cost + hn,
                ilabels,
                olabels,
                seq,
                cost,
                state: Some(arc.nextstate),
                states,
            });
        }
    }
    Ok(out)
}
