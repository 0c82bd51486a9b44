//! Text serialization: `src dst ilabel olabel weight` arc lines and
//! `state weight` final lines, states in id order, each state's arcs
//! followed by its final line.

use std::fmt::Write as _;

use super::{Arc, Fst, FstError, StateId, Weight};

impl Fst {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.is_empty() {
            return out;
        }
        // the first line must name the start state
        let start = self.start().unwrap();
        let order = std::iter::once(start).chain(self.states().filter(|&s| s != start));
        for s in order {
            for arc in self.arcs(s) {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {}",
                    s, arc.nextstate, arc.ilabel, arc.olabel, arc.weight
                );
            }
            if self.is_final(s) {
                let _ = writeln!(out, "{} {}", s, self.final_weight(s));
            }
        }
        out
    }

    /// Parses the text format. The start state is the source of the first line.
    pub fn parse_text(text: &str) -> Result<Fst, FstError> {
        let mut fst = Fst::new();
        let ensure = |fst: &mut Fst, s: StateId| {
            while fst.num_states() <= s as usize {
                fst.add_state();
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| FstError::Parse {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let state = |i: usize| -> Result<StateId, FstError> {
                fields[i]
                    .parse()
                    .map_err(|_| err(format!("invalid state id `{}`", fields[i])))
            };
            let weight = |i: usize| -> Result<Weight, FstError> {
                match fields.get(i) {
                    None => Ok(Weight::ONE),
                    Some(&"Infinity") | Some(&"inf") => Ok(Weight::ZERO),
                    Some(f) => f
                        .parse::<f64>()
                        .map(Weight::new)
                        .map_err(|_| err(format!("invalid weight `{f}`"))),
                }
            };
            match fields.len() {
                1 | 2 => {
                    let s = state(0)?;
                    let w = weight(1)?;
                    ensure(&mut fst, s);
                    if fst.start().is_none() {
                        fst.set_start(s);
                    }
                    fst.set_final(s, w);
                }
                4 | 5 => {
                    let src = state(0)?;
                    let dst = state(1)?;
                    let il = fields[2]
                        .parse()
                        .map_err(|_| err(format!("invalid input label `{}`", fields[2])))?;
                    let ol = fields[3]
                        .parse()
                        .map_err(|_| err(format!("invalid output label `{}`", fields[3])))?;
                    let w = weight(4)?;
                    ensure(&mut fst, src.max(dst));
                    if fst.start().is_none() {
                        fst.set_start(src);
                    }
                    fst.add_arc(src, Arc::new(il, ol, w, dst));
                }
                n => return Err(err(format!("expected 1, 2, 4 or 5 fields, found {n}"))),
            }
        }
        Ok(fst)
    }
}
