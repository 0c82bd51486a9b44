use std::collections::{BTreeMap, HashSet};

use super::GraphError;

/// Log-probability given to n-grams synthesized by closure repair.
pub const REPAIR_LOGPROB: f64 = -99.0;

#[derive(Clone, Debug, PartialEq)]
pub struct NGram {
    pub words: Vec<String>,
    /// base-10
    pub logprob: f64,
    /// base-10; absent on the highest order and wherever the file omits it
    pub backoff: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArpaModel {
    pub orders: BTreeMap<usize, Vec<NGram>>,
}

impl ArpaModel {
    pub fn max_order(&self) -> usize {
        self.orders.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.orders.values().all(Vec::is_empty)
    }

    pub fn ngrams(&self) -> impl Iterator<Item = &NGram> {
        self.orders.values().flatten()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ArpaOptions {
    /// Reject n-grams whose prefix or words are missing from lower orders
    /// instead of synthesizing them.
    pub strict: bool,
}

pub fn parse_arpa(text: &str) -> Result<ArpaModel, GraphError> {
    parse_arpa_with(text, ArpaOptions::default())
}

enum Section {
    Preamble,
    Data,
    NGrams(usize),
    End,
}

pub fn parse_arpa_with(text: &str, opts: ArpaOptions) -> Result<ArpaModel, GraphError> {
    let mut section = Section::Preamble;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut model = ArpaModel::default();
    // first line of each n-gram section, for count-mismatch diagnostics
    let mut header_lines: BTreeMap<usize, usize> = BTreeMap::new();
    let mut entry_lines: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "\\data\\" {
            section = Section::Data;
            continue;
        }
        if line == "\\end\\" {
            section = Section::End;
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            let n = rest
                .strip_suffix("-grams:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| GraphError::parse(lineno, format!("unknown section `{line}`")))?;
            if matches!(section, Section::Preamble) {
                return Err(GraphError::parse(lineno, "n-gram section before \\data\\"));
            }
            if !counts.contains_key(&n) {
                return Err(GraphError::parse(
                    lineno,
                    format!("section for order {n} not declared in \\data\\"),
                ));
            }
            header_lines.insert(n, lineno);
            model.orders.entry(n).or_default();
            section = Section::NGrams(n);
            continue;
        }
        match section {
            Section::Preamble | Section::End => {}
            Section::Data => {
                let spec = line
                    .strip_prefix("ngram ")
                    .ok_or_else(|| GraphError::parse(lineno, format!("expected `ngram N=count`, found `{line}`")))?;
                let (n, c) = spec
                    .split_once('=')
                    .ok_or_else(|| GraphError::parse(lineno, "expected `ngram N=count`"))?;
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| GraphError::parse(lineno, "invalid n-gram order"))?;
                let c: usize = c
                    .trim()
                    .parse()
                    .map_err(|_| GraphError::parse(lineno, "invalid n-gram count"))?;
                if n == 0 {
                    return Err(GraphError::parse(lineno, "n-gram order must be positive"));
                }
                counts.insert(n, c);
            }
            Section::NGrams(n) => {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != n + 1 && f.len() != n + 2 {
                    return Err(GraphError::parse(
                        lineno,
                        format!(
                            "expected {} or {} fields for a {n}-gram, found {}",
                            n + 1,
                            n + 2,
                            f.len()
                        ),
                    ));
                }
                let logprob: f64 = f[0]
                    .parse()
                    .map_err(|_| GraphError::parse(lineno, format!("non-numeric log probability `{}`", f[0])))?;
                let backoff = match f.get(n + 1) {
                    Some(b) => Some(
                        b.parse::<f64>()
                            .map_err(|_| GraphError::parse(lineno, format!("non-numeric backoff `{b}`")))?,
                    ),
                    None => None,
                };
                let entries = model.orders.get_mut(&n).unwrap();
                entry_lines.insert((n, entries.len()), lineno);
                entries.push(NGram {
                    words: f[1..=n].iter().map(|s| s.to_string()).collect(),
                    logprob,
                    backoff,
                });
            }
        }
    }

    if counts.is_empty() {
        return Err(GraphError::parse(last_line.max(1), "missing \\data\\ section"));
    }
    if !matches!(section, Section::End) {
        return Err(GraphError::parse(last_line.max(1), "missing \\end\\ marker"));
    }
    for (&n, &c) in &counts {
        let Some(entries) = model.orders.get(&n) else {
            return Err(GraphError::parse(last_line, format!("missing \\{n}-grams: section")));
        };
        if entries.len() != c {
            return Err(GraphError::parse(
                header_lines[&n],
                format!("\\data\\ declares {c} {n}-grams but the section has {}", entries.len()),
            ));
        }
    }

    repair_closure(&mut model, opts.strict, &entry_lines)?;
    Ok(model)
}

/// Ensures every n-gram's history and every word it mentions exist at lower
/// orders, synthesizing missing entries (log-prob −99, backoff 0) unless strict.
fn repair_closure(
    model: &mut ArpaModel,
    strict: bool,
    entry_lines: &BTreeMap<(usize, usize), usize>,
) -> Result<(), GraphError> {
    let max = model.max_order();
    let mut known: HashSet<Vec<String>> = model.ngrams().map(|g| g.words.clone()).collect();
    for n in (2..=max).rev() {
        let mut missing: Vec<Vec<String>> = Vec::new();
        let entries = model.orders.get(&n).cloned().unwrap_or_default();
        for (idx, g) in entries.iter().enumerate() {
            let mut needed = vec![g.words[..n - 1].to_vec()];
            needed.extend(g.words.iter().map(|w| vec![w.clone()]));
            for need in needed {
                if known.contains(&need) {
                    continue;
                }
                if strict {
                    let line = entry_lines.get(&(n, idx)).copied().unwrap_or(0);
                    return Err(GraphError::parse(
                        line,
                        format!(
                            "`{}` refers to missing lower-order entry `{}`",
                            g.words.join(" "),
                            need.join(" ")
                        ),
                    ));
                }
                known.insert(need.clone());
                missing.push(need);
            }
        }
        for m in missing {
            log::warn!("arpa: synthesizing missing entry `{}`", m.join(" "));
            model.orders.entry(m.len()).or_default().push(NGram {
                words: m,
                logprob: REPAIR_LOGPROB,
                backoff: Some(0.0),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIGRAM: &str = "\\data\\\nngram 1=3\n\n\\1-grams:\n-1.0 <s>\n-0.3 a\n-0.3 </s>\n\n\\end\\\n";

    #[test]
    fn unigram_only() {
        let m = parse_arpa(UNIGRAM).unwrap();
        assert_eq!(m.orders.len(), 1);
        assert_eq!(m.orders[&1].len(), 3);
        assert_eq!(m.orders[&1][1].logprob, -0.3);
    }

    #[test]
    fn missing_backoff_on_highest_order_is_fine() {
        let text =
            "\\data\\\nngram 1=2\nngram 2=1\n\\1-grams:\n-0.5 a -0.1\n-0.5 b -0.2\n\\2-grams:\n-0.2 a b\n\\end\\\n";
        let m = parse_arpa(text).unwrap();
        assert_eq!(m.orders[&2][0].backoff, None);
        assert_eq!(m.orders[&1][0].backoff, Some(-0.1));
    }

    #[test]
    fn closure_repair_or_strict_error() {
        let text = "\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-0.5 a\n\\2-grams:\n-0.2 c a\n\\end\\\n";
        let m = parse_arpa(text).unwrap();
        let c = m.orders[&1].iter().find(|g| g.words == ["c"]).unwrap();
        assert_eq!(c.logprob, REPAIR_LOGPROB);
        assert_eq!(c.backoff, Some(0.0));
        let err = parse_arpa_with(text, ArpaOptions { strict: true }).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 7, .. }), "{err}");
    }

    #[test]
    fn count_mismatch_and_bad_numbers() {
        let text = "\\data\\\nngram 1=3\n\\1-grams:\n-0.5 a\n\\end\\\n";
        assert!(matches!(parse_arpa(text), Err(GraphError::Parse { line: 3, .. })));
        let text = "\\data\\\nngram 1=1\n\\1-grams:\nx a\n\\end\\\n";
        assert!(matches!(parse_arpa(text), Err(GraphError::Parse { line: 4, .. })));
        assert!(parse_arpa("\\1-grams:\n-1 a\n").is_err());
        assert!(parse_arpa("\\data\\\nngram 1=1\n\\1-grams:\n-1 a\n").is_err());
    }
}
