use std::collections::BTreeMap;

use super::{Arc, Fst, FstError, Label, StateId};

/// Merges equivalent states of a deterministic machine.
///
/// Labels and weights are treated as one encoded symbol, so two states are
/// equivalent when their final weights match and their outgoing arcs agree on
/// `(ilabel, olabel, weight)` and lead to equivalent states. The input is
/// trimmed first. No weight pushing is done.
pub fn minimize(fst: &Fst) -> Result<Fst, FstError> {
    if let Some((state, ilabel)) = fst.first_nondeterministic() {
        return Err(FstError::NotDeterministic { state, ilabel });
    }
    let mut input = fst.clone();
    input.connect();
    if input.is_empty() {
        return Ok(input);
    }

    let n = input.num_states();
    let mut class: Vec<usize> = relabel(input.states().map(|s| input.final_weight(s).key()));
    let mut count = distinct(&class);
    loop {
        let sigs = input.states().map(|s| {
            let mut arcs: Vec<(Label, Label, u64, usize)> = input
                .arcs(s)
                .iter()
                .map(|a| (a.ilabel, a.olabel, a.weight.key(), class[a.nextstate as usize]))
                .collect();
            arcs.sort_unstable();
            ((class[s as usize] as u64), arcs)
        });
        let next = relabel(sigs);
        let next_count = distinct(&next);
        class = next;
        if next_count == count {
            break;
        }
        count = next_count;
    }

    let mut out = input.empty_like();
    for _ in 0..count {
        out.add_state();
    }
    let mut seen = vec![false; count];
    for s in 0..n {
        let c = class[s];
        if seen[c] {
            continue;
        }
        seen[c] = true;
        out.set_final(c as StateId, input.final_weight(s as StateId));
        for a in input.arcs(s as StateId) {
            out.add_arc(
                c as StateId,
                Arc::new(a.ilabel, a.olabel, a.weight, class[a.nextstate as usize] as StateId),
            );
        }
    }
    out.set_start(class[input.start().unwrap() as usize] as StateId);
    out.canonicalize();
    Ok(out)
}

fn relabel<K: Ord>(sigs: impl Iterator<Item = K>) -> Vec<usize> {
    let sigs: Vec<K> = sigs.collect();
    let mut ids: BTreeMap<&K, usize> = BTreeMap::new();
    for k in &sigs {
        let next = ids.len();
        ids.entry(k).or_insert(next);
    }
    sigs.iter().map(|k| ids[k]).collect()
}

fn distinct(class: &[usize]) -> usize {
    class.iter().copied().max().map_or(0, |m| m + 1)
}
