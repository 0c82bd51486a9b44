//! Independent reference computations used by the property and acceptance
//! tests. Nothing here calls into the search or graph-building code paths it
//! is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use ctcgraph_core::fst::{Arc, Fst, Label, Weight};
use rand::Rng;

pub type Relation = BTreeMap<(Vec<Label>, Vec<Label>), f64>;

/// Every accepting path of an FST whose paths have at most `max_arcs` arcs,
/// folded into (input, output) → minimum weight.
pub fn relation(fst: &Fst, max_arcs: usize) -> Relation {
    let mut rel = Relation::new();
    let Some(start) = fst.start() else {
        return rel;
    };
    let mut stack = vec![(start, Vec::new(), Vec::new(), 0.0f64, 0usize)];
    while let Some((s, i, o, w, depth)) = stack.pop() {
        let fw = fst.final_weight(s);
        if !fw.is_zero() {
            let total = w + fw.value();
            let e = rel.entry((i.clone(), o.clone())).or_insert(f64::INFINITY);
            if total < *e {
                *e = total;
            }
        }
        if depth == max_arcs {
            continue;
        }
        for arc in fst.arcs(s) {
            let mut i2 = i.clone();
            if arc.ilabel != 0 {
                i2.push(arc.ilabel);
            }
            let mut o2 = o.clone();
            if arc.olabel != 0 {
                o2.push(arc.olabel);
            }
            stack.push((arc.nextstate, i2, o2, w + arc.weight.value(), depth + 1));
        }
    }
    rel
}

pub fn restrict(rel: &Relation, max_in: usize, max_out: usize) -> Relation {
    rel.iter()
        .filter(|((i, o), _)| i.len() <= max_in && o.len() <= max_out)
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

/// Join of two relations on the shared middle tape.
pub fn join(a: &Relation, b: &Relation) -> Relation {
    let mut by_in: HashMap<&Vec<Label>, Vec<(&Vec<Label>, f64)>> = HashMap::new();
    for ((y, z), w) in b {
        by_in.entry(y).or_default().push((z, *w));
    }
    let mut out = Relation::new();
    for ((x, y), w1) in a {
        if let Some(zs) = by_in.get(y) {
            for (z, w2) in zs {
                let e = out.entry((x.clone(), (*z).clone())).or_insert(f64::INFINITY);
                if w1 + w2 < *e {
                    *e = w1 + w2;
                }
            }
        }
    }
    out
}

/// Input string → (weight, output) keeping the cheapest output, ties by
/// length then lexicographic order.
pub fn best_output(rel: &Relation) -> BTreeMap<Vec<Label>, (f64, Vec<Label>)> {
    let mut out: BTreeMap<Vec<Label>, (f64, Vec<Label>)> = BTreeMap::new();
    for ((i, o), &w) in rel {
        let better = match out.get(i) {
            None => true,
            Some((bw, bo)) => w < *bw || (w == *bw && (o.len(), o) < (bo.len(), bo)),
        };
        if better {
            out.insert(i.clone(), (w, o.clone()));
        }
    }
    out
}

pub fn assert_relations_eq(got: &Relation, want: &Relation, tol: f64) -> Result<(), String> {
    if got.len() != want.len() || got.keys().zip(want.keys()).any(|(a, b)| a != b) {
        return Err(format!(
            "key sets differ:\n got  {:?}\n want {:?}",
            got.keys().collect::<Vec<_>>(),
            want.keys().collect::<Vec<_>>()
        ));
    }
    for (k, w) in want {
        let g = got[k];
        if (g - w).abs() > tol {
            return Err(format!("weight for {k:?}: got {g}, want {w}"));
        }
    }
    Ok(())
}

pub struct RandomFst {
    pub max_states: usize,
    pub symbols: u32,
    pub acceptor: bool,
    pub epsilon: bool,
    /// Weights on a 0.25 grid keep sums exact, so tie-breaking is comparable.
    pub grid_weights: bool,
}

impl RandomFst {
    /// Random acyclic machine: arcs only go from lower to higher state ids.
    pub fn sample(&self, rng: &mut impl Rng) -> Fst {
        let n = rng.gen_range(2..=self.max_states);
        let mut f = Fst::new();
        for _ in 0..n {
            f.add_state();
        }
        f.set_start(0);
        for s in 0..n as u32 - 1 {
            let k = rng.gen_range(1..=3);
            for _ in 0..k {
                let t = rng.gen_range(s + 1..n as u32);
                let lo = if self.epsilon { 0 } else { 1 };
                let il = rng.gen_range(lo..=self.symbols);
                let ol = if self.acceptor {
                    il
                } else {
                    rng.gen_range(lo..=self.symbols)
                };
                f.add_arc(s, Arc::new(il, ol, self.weight(rng), t));
            }
        }
        for s in 0..n as u32 {
            if s as usize == n - 1 || rng.gen_bool(0.3) {
                f.set_final(s, self.weight(rng));
            }
        }
        f
    }

    fn weight(&self, rng: &mut impl Rng) -> Weight {
        if self.grid_weights {
            Weight::new(rng.gen_range(0..12) as f64 * 0.25)
        } else {
            Weight::new(rng.gen_range(0.0..3.0))
        }
    }
}

/// Merge repeats, then drop blanks (token 0).
pub fn ctc_collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &t in path {
        if Some(t) != prev && t != 0 {
            out.push(t);
        }
        prev = Some(t);
    }
    out
}

/// Exhaustive CTC marginalization: sums the probability of every frame-level
/// label path per collapsed sequence. `probs` rows are linear probabilities.
pub fn ctc_prefix_probabilities(probs: &[Vec<f64>]) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    let frames = probs.len();
    if frames == 0 {
        out.insert(Vec::new(), 1.0);
        return out;
    }
    let tokens = probs[0].len();
    let total = tokens.pow(frames as u32);
    for code in 0..total {
        let mut c = code;
        let mut path = Vec::with_capacity(frames);
        let mut p = 1.0;
        for row in probs.iter() {
            let t = c % tokens;
            c /= tokens;
            path.push(t);
            p *= row[t];
        }
        *out.entry(ctc_collapse(&path)).or_insert(0.0) += p;
    }
    out
}

/// Minimal ARPA reader plus the textbook backoff recursion, natural-log cost
/// of a whole sentence including `</s>`.
pub struct ArpaOracle {
    prob: HashMap<Vec<String>, f64>,
    backoff: HashMap<Vec<String>, f64>,
    order: usize,
}

impl ArpaOracle {
    pub fn new(text: &str) -> Self {
        let mut prob = HashMap::new();
        let mut backoff = HashMap::new();
        let mut order = 0;
        let mut current = 0;
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('\\') {
                current = rest.split('-').next().and_then(|n| n.parse().ok()).unwrap_or(0);
                order = order.max(current);
                continue;
            }
            if current == 0 || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let lp: f64 = f[0].parse().unwrap();
            let words: Vec<String> = f[1..=current].iter().map(|s| s.to_string()).collect();
            if let Some(bo) = f.get(current + 1) {
                backoff.insert(words.clone(), bo.parse::<f64>().unwrap());
            }
            prob.insert(words, lp);
        }
        ArpaOracle { prob, backoff, order }
    }

    /// log10 P(word | history) via the backoff recursion.
    pub fn log10_prob(&self, history: &[String], word: &str) -> f64 {
        let h = if history.len() >= self.order {
            &history[history.len() + 1 - self.order..]
        } else {
            history
        };
        let mut key: Vec<String> = h.to_vec();
        key.push(word.to_string());
        if let Some(&p) = self.prob.get(&key) {
            return p;
        }
        if h.is_empty() {
            return f64::NEG_INFINITY;
        }
        let bo = self.backoff.get(h).copied().unwrap_or(0.0);
        bo + self.log10_prob(&h[1..], word)
    }

    /// −ln P(w1 .. wn </s> | <s>).
    pub fn sentence_cost(&self, words: &[&str]) -> f64 {
        let mut history = vec!["<s>".to_string()];
        let mut lp = 0.0;
        for w in words.iter().copied().chain(std::iter::once("</s>")) {
            lp += self.log10_prob(&history, w);
            history.push(w.to_string());
        }
        -lp * std::f64::consts::LN_10
    }
}

/// Hand-built bigram model over {a, b, c}. Every explicit bigram is more
/// likely than its backoff estimate, so the cheapest path through a backoff
/// grammar is the backoff recursion itself.
pub const BIGRAM_ARPA: &str = "\\data\\
ngram 1=5
ngram 2=8

\\1-grams:
-99 <s> -0.1
-0.522879 a -0.3
-0.60206 b -0.25
-0.69897 c -0.2
-0.60206 </s>

\\2-grams:
-0.3 <s> a
-0.5 <s> b
-0.2 a b
-0.4 a </s>
-0.35 b a
-0.45 b c
-0.5 c c
-0.25 c </s>

\\end\\
";

/// All sentences over `vocab` with length ≤ `max_len`, shortest first.
pub fn all_sentences<'a>(vocab: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for w in vocab {
                let mut t: Vec<&str> = s.clone();
                t.push(w);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Rows of probabilities on a 1/10 grid, every row summing to one.
pub fn grid_posteriors(rng: &mut impl Rng, frames: usize, tokens: usize) -> Vec<Vec<f64>> {
    (0..frames)
        .map(|_| {
            let w: Vec<u32> = loop {
                let w: Vec<u32> = (0..tokens).map(|_| rng.gen_range(0..=9)).collect();
                if w.iter().any(|&x| x > 0) {
                    break w;
                }
            };
            let sum: u32 = w.iter().sum();
            w.into_iter().map(|x| x as f64 / sum as f64).collect()
        })
        .collect()
}

/// Every sequence whose score is within `tol` of the best, in order.
pub fn near_argmax<K: Clone + Ord>(scores: impl IntoIterator<Item = (K, f64)>, tol: f64) -> (Vec<K>, f64) {
    let all: Vec<(K, f64)> = scores.into_iter().collect();
    let best = all.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let mut keys: Vec<K> = all.into_iter().filter(|x| x.1 >= best - tol).map(|x| x.0).collect();
    keys.sort();
    (keys, best)
}
