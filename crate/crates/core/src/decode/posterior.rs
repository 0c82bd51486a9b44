use std::fmt::Write as _;

use super::DecodeError;

/// Tolerance on `logsumexp(row)` for a row to count as normalized.
pub const ROW_TOLERANCE: f64 = 1e-4;

/// Frame-by-token matrix of natural-log CTC posteriors. Column 0 is blank.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMatrix {
    tokens: usize,
    values: Vec<f64>,
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl PosteriorMatrix {
    /// An empty matrix over `tokens` columns.
    pub fn empty(tokens: usize) -> Self {
        PosteriorMatrix {
            tokens,
            values: Vec::new(),
        }
    }

    pub fn from_log_probs(tokens: usize, rows: &[Vec<f64>]) -> Result<Self, DecodeError> {
        if tokens < 2 {
            return Err(DecodeError::InvalidPosterior(format!(
                "need blank plus at least one unit, got {tokens} tokens"
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * tokens);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != tokens {
                return Err(DecodeError::InvalidPosterior(format!(
                    "frame {t} has {} values, expected {tokens}",
                    row.len()
                )));
            }
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(DecodeError::InvalidPosterior(format!(
                    "frame {t} has a non-finite value"
                )));
            }
            let z = log_sum_exp(row.iter().copied());
            if z.is_nan() || z.abs() > ROW_TOLERANCE {
                return Err(DecodeError::InvalidPosterior(format!(
                    "frame {t} is not normalized (logsumexp {z})"
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(PosteriorMatrix { tokens, values })
    }

    pub fn from_probs(tokens: usize, rows: &[Vec<f64>]) -> Result<Self, DecodeError> {
        let mut logs = Vec::with_capacity(rows.len());
        for (t, row) in rows.iter().enumerate() {
            if row.iter().any(|p| p.is_nan() || *p < 0.0) {
                return Err(DecodeError::InvalidPosterior(format!(
                    "frame {t} has a negative probability"
                )));
            }
            logs.push(row.iter().map(|p| p.ln()).collect());
        }
        Self::from_log_probs(tokens, &logs)
    }

    pub fn frames(&self) -> usize {
        self.values.len() / self.tokens
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.tokens..(t + 1) * self.tokens]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.tokens)
    }

    pub fn blank_prob(&self, t: usize) -> f64 {
        self.row(t)[0].exp()
    }

    /// Frames `start..end` as a new matrix.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        PosteriorMatrix {
            tokens: self.tokens,
            values: self.values[start * self.tokens..end * self.tokens].to_vec(),
        }
    }

    /// Splits into consecutive chunks of at most `size` frames.
    pub fn chunks(&self, size: usize) -> Vec<Self> {
        let size = size.max(1);
        (0..self.frames())
            .step_by(size)
            .map(|s| self.slice(s, (s + size).min(self.frames())))
            .collect()
    }

    /// Drops frames whose blank probability exceeds `threshold`, returning
    /// the kept matrix and the original index of every kept frame.
    pub fn skip_blank_frames(&self, threshold: f64) -> (Self, Vec<usize>) {
        let mut kept = Vec::new();
        let mut values = Vec::new();
        for (t, row) in self.rows().enumerate() {
            if row[0].exp() > threshold {
                continue;
            }
            kept.push(t);
            values.extend_from_slice(row);
        }
        (
            PosteriorMatrix {
                tokens: self.tokens,
                values,
            },
            kept,
        )
    }

    /// Parses `frames tokens prob|logprob` followed by one row per frame.
    pub fn parse_text(text: &str) -> Result<Self, DecodeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, message: String| DecodeError::Parse { line, message };
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(hline, "header must be `frames tokens prob|logprob`".into()));
        }
        let frames: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad frame count `{}`", fields[0])))?;
        let tokens: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad token count `{}`", fields[1])))?;
        let is_prob = match fields[2] {
            "prob" => true,
            "logprob" => false,
            other => return Err(parse_err(hline, format!("unknown domain `{other}`"))),
        };
        let mut rows = Vec::with_capacity(frames);
        for (n, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| parse_err(n, format!("bad number `{v}`"))))
                .collect::<Result<_, _>>()?;
            if row.len() != tokens {
                return Err(parse_err(n, format!("expected {tokens} values, found {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != frames {
            return Err(parse_err(
                hline,
                format!("header declares {frames} frames, found {}", rows.len()),
            ));
        }
        if frames == 0 {
            return Ok(Self::empty(tokens));
        }
        if is_prob {
            Self::from_probs(tokens, &rows)
        } else {
            Self::from_log_probs(tokens, &rows)
        }
    }

    /// Serializes in the `logprob` domain with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} logprob\n", self.frames(), self.tokens);
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(rows: &[&[f64]]) -> PosteriorMatrix {
        PosteriorMatrix::from_probs(rows[0].len(), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn skip_example_rows() {
        let m = probs(&[&[0.99, 0.01], &[0.5, 0.5], &[0.981, 0.019]]);
        let (kept, idx) = m.skip_blank_frames(0.98);
        assert_eq!(idx, vec![1]);
        assert_eq!(kept.frames(), 1);
        assert_eq!(kept.row(0), m.row(1));
        let (all, idx) = m.skip_blank_frames(1.0);
        assert_eq!(all.frames(), 3);
        assert_eq!(idx, vec![0, 1, 2]);
        let (e, idx) = PosteriorMatrix::empty(3).skip_blank_frames(0.98);
        assert!(e.is_empty() && idx.is_empty());
    }

    #[test]
    fn skipping_is_idempotent() {
        let m = probs(&[&[0.99, 0.01], &[0.2, 0.8], &[0.985, 0.015], &[0.7, 0.3]]);
        let (once, _) = m.skip_blank_frames(0.98);
        let (twice, idx) = once.skip_blank_frames(0.98);
        assert_eq!(once, twice);
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn rejects_unnormalized_rows() {
        assert!(PosteriorMatrix::from_probs(2, &[vec![0.5, 0.4]]).is_err());
        assert!(PosteriorMatrix::from_probs(2, &[vec![0.5, 0.50001]]).is_ok());
        assert!(PosteriorMatrix::from_log_probs(2, &[vec![0.0, f64::NEG_INFINITY]]).is_ok());
        assert!(PosteriorMatrix::from_log_probs(2, &[vec![0.0, f64::NAN]]).is_err());
        assert!(PosteriorMatrix::from_probs(3, &[vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = probs(&[&[0.6, 0.3, 0.1], &[0.1, 0.2, 0.7]]);
        let back = PosteriorMatrix::parse_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        let p = PosteriorMatrix::parse_text("1 2 prob\n0.25 0.75\n").unwrap();
        assert!((p.row(0)[1] - 0.75f64.ln()).abs() < 1e-15);
        let e = PosteriorMatrix::parse_text("0 4 logprob\n").unwrap();
        assert_eq!((e.frames(), e.tokens()), (0, 4));
    }

    #[test]
    fn parse_errors_cite_lines() {
        let err = PosteriorMatrix::parse_text("2 2 prob\n0.5 0.5\n0.5 x\n").unwrap_err();
        assert!(matches!(err, DecodeError::Parse { line: 3, .. }));
        let err = PosteriorMatrix::parse_text("1 2 odds\n0.5 0.5\n").unwrap_err();
        assert!(matches!(err, DecodeError::Parse { line: 1, .. }));
        assert!(PosteriorMatrix::parse_text("3 2 prob\n0.5 0.5\n").is_err());
    }

    #[test]
    fn chunks_cover_all_frames() {
        let m = probs(&[&[0.5, 0.5], &[0.2, 0.8], &[0.9, 0.1]]);
        let parts = m.chunks(2);
        assert_eq!(parts.iter().map(|c| c.frames()).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(parts[1].row(0), m.row(2));
    }
}
