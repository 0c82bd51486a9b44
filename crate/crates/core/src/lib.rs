//! CTC decoding toolkit: WFST decoding-graph construction (T, L, G and
//! TLG), CTC prefix and WFST beam search with contextual biasing and blank
//! frame skipping, and bidirectional n-best rescoring.

pub mod context;
pub mod decode;
pub mod fst;
pub mod graph;
pub mod rescore;
