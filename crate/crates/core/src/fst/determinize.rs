use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{Arc, Fst, FstError, Label, StateId, Weight, EPSILON};

#[derive(Clone, Copy, Debug, Default)]
pub struct DeterminizeOptions {
    /// Maximum number of subset states; `None` means ten times the input
    /// state count, never less than 1000.
    pub state_budget: Option<usize>,
}

/// A weighted subset element: input state, delayed output labels and
/// residual weight.
#[derive(Clone, Debug)]
struct Element {
    state: StateId,
    residual: Vec<Label>,
    weight: f64,
}

/// Order used to pick one output per input string: lower weight first, then
/// shorter residual, then lexicographic. It is preserved by appending a common
/// suffix, which keeps the choice consistent as paths are extended.
fn better(a: (f64, &[Label]), b: (f64, &[Label])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (a.1.len(), a.1) < (b.1.len(), b.1),
    }
}

type SubsetKey = Vec<(StateId, Vec<Label>, i64)>;

fn subset_key(subset: &[Element]) -> SubsetKey {
    subset
        .iter()
        .map(|e| (e.state, e.residual.clone(), (e.weight * 1e9).round() as i64))
        .collect()
}

fn merge_into(best: &mut BTreeMap<StateId, Element>, e: Element) -> bool {
    match best.get(&e.state) {
        Some(cur) if !better((e.weight, &e.residual), (cur.weight, &cur.residual)) => false,
        _ => {
            best.insert(e.state, e);
            true
        }
    }
}

/// Follows input-epsilon arcs, keeping the best element per state.
fn epsilon_closure(fst: &Fst, seed: Vec<Element>) -> Result<Vec<Element>, FstError> {
    let mut best = BTreeMap::new();
    let mut queue = VecDeque::new();
    for e in seed {
        let s = e.state;
        if merge_into(&mut best, e) {
            queue.push_back(s);
        }
    }
    let limit = 16 * (fst.num_states() + 1) * (fst.num_arcs() + 1);
    let mut pops = 0usize;
    while let Some(s) = queue.pop_front() {
        pops += 1;
        if pops > limit {
            return Err(FstError::EpsilonClosure);
        }
        let cur = best[&s].clone();
        for arc in fst.arcs(s).iter().filter(|a| a.ilabel == EPSILON) {
            let mut residual = cur.residual.clone();
            if arc.olabel != EPSILON {
                residual.push(arc.olabel);
            }
            let e = Element {
                state: arc.nextstate,
                residual,
                weight: cur.weight + arc.weight.value(),
            };
            if merge_into(&mut best, e) {
                queue.push_back(arc.nextstate);
            }
        }
    }
    Ok(best.into_values().collect())
}

pub fn determinize(fst: &Fst) -> Result<Fst, FstError> {
    determinize_with(fst, DeterminizeOptions::default())
}

/// Weighted subset construction over the tropical semiring.
///
/// The result has at most one arc per `(state, input label)` and no
/// input-epsilon arcs, except for chains that flush pending output labels
/// into a final state. Output labels are delayed until all paths sharing an
/// input prefix agree on them. For functional transducers (and all
/// acceptors) the weighted relation is preserved exactly; otherwise each
/// input string keeps its cheapest output.
pub fn determinize_with(fst: &Fst, opts: DeterminizeOptions) -> Result<Fst, FstError> {
    let mut input = fst.clone();
    input.connect();
    let mut out = input.empty_like();
    let Some(start) = input.start() else {
        return Ok(out);
    };
    let budget = opts.state_budget.unwrap_or_else(|| (10 * input.num_states()).max(1000));

    let mut ids: HashMap<SubsetKey, StateId> = HashMap::new();
    let mut subsets: Vec<Vec<Element>> = Vec::new();
    let mut queue = VecDeque::new();

    let start_subset = epsilon_closure(
        &input,
        vec![Element {
            state: start,
            residual: Vec::new(),
            weight: 0.0,
        }],
    )?;
    ids.insert(subset_key(&start_subset), out.add_state());
    subsets.push(start_subset);
    out.set_start(0);
    queue.push_back(0 as StateId);

    while let Some(id) = queue.pop_front() {
        let subset = subsets[id as usize].clone();

        // final weight, flushing any delayed output through an epsilon chain
        let mut fin: Option<(f64, &[Label])> = None;
        for e in &subset {
            let fw = input.final_weight(e.state);
            if fw.is_zero() {
                continue;
            }
            let cand = (e.weight + fw.value(), e.residual.as_slice());
            if fin.is_none_or(|f| better(cand, f)) {
                fin = Some(cand);
            }
        }
        if let Some((w, residual)) = fin {
            if residual.is_empty() {
                out.set_final(id, w);
            } else {
                let mut prev = id;
                for (i, &label) in residual.iter().enumerate() {
                    let next = out.add_state();
                    let wt = if i == 0 { w } else { 0.0 };
                    out.add_arc(prev, Arc::new(EPSILON, label, wt, next));
                    prev = next;
                }
                out.set_final(prev, Weight::ONE);
            }
        }

        let mut by_label: BTreeMap<Label, Vec<Element>> = BTreeMap::new();
        for e in &subset {
            for arc in input.arcs(e.state).iter().filter(|a| a.ilabel != EPSILON) {
                let mut residual = e.residual.clone();
                if arc.olabel != EPSILON {
                    residual.push(arc.olabel);
                }
                by_label.entry(arc.ilabel).or_default().push(Element {
                    state: arc.nextstate,
                    residual,
                    weight: e.weight + arc.weight.value(),
                });
            }
        }

        for (label, seed) in by_label {
            let mut next = epsilon_closure(&input, seed)?;
            let wmin = next.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min);
            let emit = common_first_label(&next);
            for e in &mut next {
                e.weight -= wmin;
                if emit != EPSILON {
                    e.residual.remove(0);
                }
            }
            let key = subset_key(&next);
            let dest = match ids.get(&key) {
                Some(&d) => d,
                None => {
                    if subsets.len() >= budget {
                        return Err(FstError::StateBudget { budget });
                    }
                    let d = out.add_state();
                    ids.insert(key, d);
                    // subset ids and output state ids diverge once flush chains exist
                    while subsets.len() < d as usize {
                        subsets.push(Vec::new());
                    }
                    subsets.push(next);
                    queue.push_back(d);
                    d
                }
            };
            out.add_arc(id, Arc::new(label, emit, wmin, dest));
        }
    }
    out.canonicalize();
    Ok(out)
}

fn common_first_label(subset: &[Element]) -> Label {
    let Some(first) = subset.first().and_then(|e| e.residual.first()) else {
        return EPSILON;
    };
    if subset.iter().all(|e| e.residual.first() == Some(first)) {
        *first
    } else {
        EPSILON
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::shortest_path;

    #[test]
    fn parallel_paths_keep_the_cheaper_weight() {
        let mut f = Fst::new();
        let s: Vec<_> = (0..3).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 1, 3.0, s[1]));
        f.add_arc(s[0], Arc::new(1, 1, 5.0, s[2]));
        f.set_final(s[1], 0.0);
        f.set_final(s[2], 0.0);
        let d = determinize(&f).unwrap();
        assert!(d.is_input_deterministic());
        let p = shortest_path(&d, 5).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].weight.value(), 3.0);
    }

    #[test]
    fn shared_prefix_pushes_residual_forward() {
        // "ab" weight 1+2, "ac" weight 4+1
        let mut f = Fst::new();
        let s: Vec<_> = (0..5).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 1, 1.0, s[1]));
        f.add_arc(s[0], Arc::new(1, 1, 4.0, s[2]));
        f.add_arc(s[1], Arc::new(2, 2, 2.0, s[3]));
        f.add_arc(s[2], Arc::new(3, 3, 1.0, s[4]));
        f.set_final(s[3], 0.0);
        f.set_final(s[4], 0.0);
        let d = determinize(&f).unwrap();
        assert!(d.is_input_deterministic());
        assert_eq!(d.arcs(0).len(), 1);
        assert_eq!(d.arcs(0)[0].weight.value(), 1.0);
        let p = shortest_path(&d, 5).unwrap();
        let got: Vec<(Vec<u32>, f64)> = p.iter().map(|p| (p.ilabels.clone(), p.weight.value())).collect();
        assert_eq!(got, vec![(vec![1, 2], 3.0), (vec![1, 3], 5.0)]);
    }

    #[test]
    fn delayed_outputs_are_flushed() {
        // x:A y:eps and x:A z:B share the first output; x:C y:eps differs
        let mut f = Fst::new();
        let s: Vec<_> = (0..4).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 10, 0.0, s[1]));
        f.add_arc(s[0], Arc::new(1, 11, 0.0, s[2]));
        f.add_arc(s[1], Arc::new(2, 0, 0.0, s[3]));
        f.add_arc(s[2], Arc::new(3, 0, 0.0, s[3]));
        f.set_final(s[3], 0.0);
        let d = determinize(&f).unwrap();
        let p = shortest_path(&d, 5).unwrap();
        let got: Vec<(Vec<u32>, Vec<u32>)> = p.iter().map(|p| (p.ilabels.clone(), p.olabels.clone())).collect();
        assert_eq!(got, vec![(vec![1, 2], vec![10]), (vec![1, 3], vec![11])]);
    }

    #[test]
    fn budget_is_enforced() {
        let mut f = Fst::new();
        let s: Vec<_> = (0..3).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 1, 0.0, s[1]));
        f.add_arc(s[1], Arc::new(2, 2, 0.0, s[2]));
        f.set_final(s[2], 0.0);
        let err = determinize_with(&f, DeterminizeOptions { state_budget: Some(2) }).unwrap_err();
        assert!(matches!(err, FstError::StateBudget { budget: 2 }));
    }

    #[test]
    fn non_twins_cycle_hits_budget() {
        // classic non-determinizable machine: a* with different per-branch costs
        let mut f = Fst::new();
        let s: Vec<_> = (0..3).map(|_| f.add_state()).collect();
        f.set_start(s[0]);
        f.add_arc(s[0], Arc::new(1, 1, 0.0, s[1]));
        f.add_arc(s[0], Arc::new(1, 1, 0.0, s[2]));
        f.add_arc(s[1], Arc::new(1, 1, 1.0, s[1]));
        f.add_arc(s[2], Arc::new(1, 1, 2.0, s[2]));
        f.add_arc(s[1], Arc::new(2, 2, 0.0, s[1]));
        f.add_arc(s[2], Arc::new(3, 3, 0.0, s[2]));
        f.set_final(s[1], 0.0);
        f.set_final(s[2], 0.0);
        let err = determinize(&f).unwrap_err();
        assert!(matches!(err, FstError::StateBudget { .. }));
    }
}
