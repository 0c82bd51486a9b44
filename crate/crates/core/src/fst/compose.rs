use std::collections::{HashMap, VecDeque};

use super::{Arc, Fst, FstError, StateId, EPSILON};

/// Composition state of the epsilon filter.
///
/// `Both`: no pending epsilon move; `Left`: the left machine has just moved
/// alone on an output epsilon; `Right`: the right machine has just moved alone
/// on an input epsilon. Left-alone and right-alone moves never interleave, and
/// a simultaneous epsilon move is only taken from `Both`, so each pair of
/// epsilon paths is counted exactly once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Filter {
    Both,
    Left,
    Right,
}

/// Composes `a` with `b`, matching `a`'s output tape against `b`'s input tape.
///
/// The result is trimmed; an empty result is not an error.
pub fn compose(a: &Fst, b: &Fst) -> Result<Fst, FstError> {
    if let (Some(out), Some(inp)) = (a.output_symbols(), b.input_symbols()) {
        if out != inp {
            return Err(FstError::SymbolMismatch(
                "left output symbols differ from right input symbols".into(),
            ));
        }
    }
    let mut result = Fst::new();
    result.set_input_symbols(a.input_symbols().cloned());
    result.set_output_symbols(b.output_symbols().cloned());
    let (Some(sa), Some(sb)) = (a.start(), b.start()) else {
        return Ok(result);
    };

    // b's arcs grouped by input label for the matching step
    let b_index: Vec<HashMap<u32, Vec<usize>>> = b
        .states()
        .map(|s| {
            let mut m: HashMap<u32, Vec<usize>> = HashMap::new();
            for (i, arc) in b.arcs(s).iter().enumerate() {
                m.entry(arc.ilabel).or_default().push(i);
            }
            m
        })
        .collect();

    let mut ids: HashMap<(StateId, StateId, Filter), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |result: &mut Fst, queue: &mut VecDeque<_>, key: (StateId, StateId, Filter)| {
        *ids.entry(key).or_insert_with(|| {
            let id = result.add_state();
            queue.push_back((key, id));
            id
        })
    };
    let start = intern(&mut result, &mut queue, (sa, sb, Filter::Both));
    result.set_start(start);

    while let Some(((qa, qb, filter), id)) = queue.pop_front() {
        let fw = a.final_weight(qa).times(b.final_weight(qb));
        if !fw.is_zero() {
            result.set_final(id, fw);
        }
        let empty = Vec::new();
        for arc_a in a.arcs(qa) {
            if arc_a.olabel == EPSILON {
                if filter != Filter::Right {
                    let next = intern(&mut result, &mut queue, (arc_a.nextstate, qb, Filter::Left));
                    result.add_arc(id, Arc::new(arc_a.ilabel, EPSILON, arc_a.weight, next));
                }
                if filter == Filter::Both {
                    for &j in b_index[qb as usize].get(&EPSILON).unwrap_or(&empty) {
                        let arc_b = &b.arcs(qb)[j];
                        let next = intern(
                            &mut result,
                            &mut queue,
                            (arc_a.nextstate, arc_b.nextstate, Filter::Both),
                        );
                        result.add_arc(
                            id,
                            Arc::new(arc_a.ilabel, arc_b.olabel, arc_a.weight.times(arc_b.weight), next),
                        );
                    }
                }
            } else {
                for &j in b_index[qb as usize].get(&arc_a.olabel).unwrap_or(&empty) {
                    let arc_b = &b.arcs(qb)[j];
                    let next = intern(
                        &mut result,
                        &mut queue,
                        (arc_a.nextstate, arc_b.nextstate, Filter::Both),
                    );
                    result.add_arc(
                        id,
                        Arc::new(arc_a.ilabel, arc_b.olabel, arc_a.weight.times(arc_b.weight), next),
                    );
                }
            }
        }
        if filter != Filter::Left {
            for &j in b_index[qb as usize].get(&EPSILON).unwrap_or(&empty) {
                let arc_b = &b.arcs(qb)[j];
                let next = intern(&mut result, &mut queue, (qa, arc_b.nextstate, Filter::Right));
                result.add_arc(id, Arc::new(EPSILON, arc_b.olabel, arc_b.weight, next));
            }
        }
    }
    result.connect();
    Ok(result)
}
