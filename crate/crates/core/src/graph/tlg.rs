use crate::fst::{compose, determinize_with, minimize, DeterminizeOptions, Fst, EPSILON};

use super::{is_disambig, GraphError};

#[derive(Clone, Copy, Debug, Default)]
pub struct BuildTlgOptions {
    pub determinize: DeterminizeOptions,
}

/// Maps `#n` symbols on either tape to epsilon and drops them from the
/// attached symbol tables.
pub fn remove_disambiguation(fst: &mut Fst) {
    let isyms = fst.input_symbols().cloned();
    let osyms = fst.output_symbols().cloned();
    let is_d = |t: &Option<crate::fst::SymbolTable>, l| t.as_ref().and_then(|t| t.symbol(l)).is_some_and(is_disambig);
    fst.map_labels(|i, o| {
        (
            if is_d(&isyms, i) { EPSILON } else { i },
            if is_d(&osyms, o) { EPSILON } else { o },
        )
    });
    fst.set_input_symbols(isyms.map(|t| t.filtered(|s| !is_disambig(s))));
    fst.set_output_symbols(osyms.map(|t| t.filtered(|s| !is_disambig(s))));
}

/// `TLG = T ∘ min(det(L ∘ G))`, with disambiguation symbols removed after
/// minimization. The result is trimmed.
pub fn build_tlg(t: &Fst, l: &Fst, g: &Fst, opts: BuildTlgOptions) -> Result<Fst, GraphError> {
    let lg = compose(l, g)?;
    let mut lg = if lg.is_empty() {
        lg
    } else {
        minimize(&determinize_with(&lg, opts.determinize)?)?
    };
    remove_disambiguation(&mut lg);
    Ok(compose(t, &lg)?)
}
