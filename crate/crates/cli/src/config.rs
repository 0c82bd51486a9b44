use std::path::Path;

use anyhow::Result;
use clap::Args;
use ctcgraph_core::decode::DecodeOptions;

use crate::{parse_failure, read_text, usage};

/// Decoding flags. Unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct DecodeFlags {
    /// Prefix beam width in hypotheses [default: 10]
    #[arg(long)]
    pub beam: Option<usize>,
    /// Hypotheses kept per utterance, at most the beam [default: 10]
    #[arg(long)]
    pub nbest: Option<usize>,
    /// Multiplier on acoustic log-posteriors in WFST search [default: 1.0]
    #[arg(long)]
    pub acoustic_scale: Option<f64>,
    /// Multiplier on graph (LM) weights in WFST search [default: 1.0]
    #[arg(long)]
    pub lm_scale: Option<f64>,
    /// Cost added per output word in WFST search [default: 0.0]
    #[arg(long)]
    pub word_penalty: Option<f64>,
    /// Frames whose blank probability exceeds this are skipped in WFST search, in (0, 1] [default: 0.98]
    #[arg(long)]
    pub blank_skip_threshold: Option<f64>,
    /// Per-unit biasing boost; 0 turns biasing off [default: 0.0]
    #[arg(long)]
    pub context_score: Option<f64>,
    /// R2L share of the attention score in rescoring, in [0, 1] [default: 0.3]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the first-pass score in rescoring [default: 0.5]
    #[arg(long)]
    pub ctc_weight: Option<f64>,
    /// WFST pruning beam in cost units [default: 16.0]
    #[arg(long)]
    pub wfst_beam: Option<f64>,
    /// Maximum active tokens per frame in WFST search [default: 7000]
    #[arg(long)]
    pub max_active: Option<usize>,
}

fn set(opts: &mut DecodeOptions, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
        v.parse().map_err(|_| format!("bad value `{v}`"))
    }
    match key.replace('-', "_").as_str() {
        "beam" => opts.beam = num(value)?,
        "nbest" => opts.nbest = num(value)?,
        "acoustic_scale" => opts.acoustic_scale = num(value)?,
        "lm_scale" => opts.lm_scale = num(value)?,
        "word_penalty" => opts.word_penalty = num(value)?,
        "blank_skip_threshold" => opts.blank_skip_threshold = num(value)?,
        "context_score" => opts.context_score = num(value)?,
        "alpha" => opts.alpha = num(value)?,
        "ctc_weight" => opts.ctc_weight = num(value)?,
        "wfst_beam" => opts.wfst_beam = num(value)?,
        "max_active" => opts.max_active = num(value)?,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

/// Applies `key = value` lines; `#` starts a comment.
pub fn apply_config(opts: &mut DecodeOptions, text: &str, file: &Path) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_failure(file, i + 1, "expected `key = value`"))?;
        set(opts, k.trim(), v.trim()).map_err(|m| parse_failure(file, i + 1, m))?;
    }
    Ok(())
}

impl DecodeFlags {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self, config: Option<&Path>) -> Result<DecodeOptions> {
        let mut o = DecodeOptions::default();
        if let Some(path) = config {
            apply_config(&mut o, &read_text(path)?, path)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { o.$f = v; })* };
        }
        over!(
            beam,
            nbest,
            acoustic_scale,
            lm_scale,
            word_penalty,
            blank_skip_threshold,
            context_score,
            alpha,
            ctc_weight,
            wfst_beam,
            max_active
        );
        o.validate().map_err(|e| usage(e.to_string()))?;
        Ok(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[derive(clap::Parser)]
    struct Probe {
        #[command(flatten)]
        flags: DecodeFlags,
    }

    #[test]
    fn precedence_is_flags_then_file_then_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("decode.conf");
        std::fs::write(&cfg, "# tuned\nbeam = 20\nlm-scale = 0.5 # inline\nalpha=0.1\n").unwrap();
        let flags = DecodeFlags {
            beam: Some(12),
            ..Default::default()
        };
        let o = flags.resolve(Some(&cfg)).unwrap();
        assert_eq!(o.beam, 12);
        assert_eq!(o.lm_scale, 0.5);
        assert_eq!(o.alpha, 0.1);
        assert_eq!(o.nbest, 10);
    }

    #[test]
    fn bad_config_cites_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c");
        std::fs::write(&cfg, "beam = 3\n\nfoo = 1\n").unwrap();
        let err = DecodeFlags::default().resolve(Some(&cfg)).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
        assert!(err.downcast_ref::<crate::UsageError>().is_some());
    }

    #[test]
    fn help_lists_every_option_with_its_default() {
        let help = Probe::command().render_long_help().to_string();
        let d = DecodeOptions::default();
        let expect = [
            ("--beam", d.beam.to_string()),
            ("--nbest", d.nbest.to_string()),
            ("--acoustic-scale", format!("{:.1}", d.acoustic_scale)),
            ("--lm-scale", format!("{:.1}", d.lm_scale)),
            ("--word-penalty", format!("{:.1}", d.word_penalty)),
            ("--blank-skip-threshold", d.blank_skip_threshold.to_string()),
            ("--context-score", format!("{:.1}", d.context_score)),
            ("--alpha", d.alpha.to_string()),
            ("--ctc-weight", d.ctc_weight.to_string()),
            ("--wfst-beam", format!("{:.1}", d.wfst_beam)),
            ("--max-active", d.max_active.to_string()),
        ];
        for (flag, default) in expect {
            let pos = help.find(flag).unwrap_or_else(|| panic!("{flag} missing"));
            let rest = &help[pos..];
            let end = rest[2..].find("--").map_or(rest.len(), |e| e + 2);
            assert!(
                rest[..end].contains(&format!("[default: {default}]")),
                "{flag}: {}",
                &rest[..end]
            );
        }
    }
}
