use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ctcgraph_core::context::{context_graph_from_lines, ContextError, ContextGraph, UnitMode};
use ctcgraph_core::decode::{
    ctc_prefix_beam_search, ctc_wfst_beam_search, DecodeError, DecodeOptions, Hypothesis, NBestList, PosteriorMatrix,
};
use ctcgraph_core::fst::{Fst, SymbolTable};
use ctcgraph_core::graph::{token_table, unit_table, UnitInventory};
use ctcgraph_core::rescore::{rescore_nbest, FusionWeights, RescoreError, TableScorer};
use rayon::prelude::*;

use crate::config::DecodeFlags;
use crate::graph::{load_fst, load_symbols, load_units};
use crate::{parse_failure, read_text, usage};

#[derive(Args)]
pub struct DecodeArgs {
    /// Posterior files (`frames tokens prob|logprob` header), one utterance each
    #[arg(required = true)]
    pub posteriors: Vec<PathBuf>,
    /// Graph directory from build-graph; selects WFST search
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Unit inventory; defaults to the graph's units.txt
    #[arg(long)]
    pub units: Option<PathBuf>,
    /// Biasing phrases, one per line; applied when --context-score is positive
    #[arg(long)]
    pub context: Option<PathBuf>,
    /// L2R score table (`score unit...` lines); enables rescoring
    #[arg(long, requires = "r2l_table")]
    pub l2r_table: Option<PathBuf>,
    /// R2L score table over reversed unit sequences
    #[arg(long, requires = "l2r_table")]
    pub r2l_table: Option<PathBuf>,
    /// `key = value` file of decoding options
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Utterances decoded in parallel
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write results here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub flags: DecodeFlags,
}

#[derive(Args)]
pub struct RescoreArgs {
    /// N-best file written by `decode`
    pub nbest: PathBuf,
    #[arg(long)]
    pub l2r_table: PathBuf,
    #[arg(long)]
    pub r2l_table: PathBuf,
    /// R2L share of the attention score, in [0, 1] [default: 0.3]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the first-pass score [default: 0.5]
    #[arg(long)]
    pub ctc_weight: Option<f64>,
    /// `key = value` file of options
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

struct Model {
    inv: UnitInventory,
    units: SymbolTable,
    graph: Option<(Fst, SymbolTable)>,
    context: Option<ContextGraph>,
    scorers: Option<(TableScorer, TableScorer)>,
    opts: DecodeOptions,
}

fn utt_key(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_table(path: &Path, units: &SymbolTable) -> Result<TableScorer> {
    TableScorer::parse(&read_text(path)?, |s| units.find(s)).map_err(|e| match e {
        RescoreError::Parse { line, message } => parse_failure(path, line, message),
        other => anyhow::anyhow!("{}: {other}", path.display()),
    })
}

fn load_posteriors(path: &Path) -> Result<PosteriorMatrix> {
    PosteriorMatrix::parse_text(&read_text(path)?).map_err(|e| match e {
        DecodeError::Parse { line, message } => parse_failure(path, line, message),
        other => usage(format!("{}: {other}", path.display())),
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(a: &DecodeArgs) -> Result<Model> {
    let opts = a.flags.resolve(a.config.as_deref())?;
    let units_path = match (&a.units, &a.graph) {
        (Some(u), _) => u.clone(),
        (None, Some(g)) => g.join("units.txt"),
        (None, None) => return Err(usage("either --graph or --units is required")),
    };
    let inv = load_units(&units_path)?;
    let units = unit_table(&inv);
    let graph = match &a.graph {
        Some(dir) => {
            let mut tlg = load_fst(&dir.join("TLG.fst"))?;
            let words = load_symbols(&dir.join("words.txt"))?;
            tlg.set_input_symbols(Some(token_table(&inv)));
            tlg.set_output_symbols(Some(words.clone()));
            Some((tlg, words))
        }
        None => None,
    };
    let context = match &a.context {
        Some(path) if opts.context_score > 0.0 => {
            let text = read_text(path)?;
            let (table, mode) = match &graph {
                Some((_, words)) => (words, UnitMode::Words),
                None => (&units, UnitMode::Modeling),
            };
            match context_graph_from_lines(text.lines(), table, mode, opts.context_score) {
                Ok(g) => Some(g),
                Err(ContextError::Empty) => anyhow::bail!("{}: no usable biasing phrase", path.display()),
                Err(e) => return Err(usage(e.to_string())),
            }
        }
        Some(_) => {
            log::info!("context score is 0; biasing phrases ignored");
            None
        }
        None => None,
    };
    let scorers = match (&a.l2r_table, &a.r2l_table) {
        (Some(l), Some(r)) => Some((load_table(l, &units)?, load_table(r, &units)?)),
        _ => None,
    };
    Ok(Model {
        inv,
        units,
        graph,
        context,
        scorers,
        opts,
    })
}

fn decode_one(m: &Model, path: &Path) -> Result<String> {
    let post = load_posteriors(path)?;
    if post.tokens() != m.inv.num_tokens() {
        anyhow::bail!(
            "{}: posteriors have {} tokens but the unit inventory has {}",
            path.display(),
            post.tokens(),
            m.inv.num_tokens()
        );
    }
    let nbest = match &m.graph {
        Some((tlg, _)) => ctc_wfst_beam_search(&post, tlg, &m.opts, m.context.as_ref()),
        None => ctc_prefix_beam_search(&post, m.opts.beam, m.opts.nbest, m.context.as_ref()),
    }
    .with_context(|| format!("decoding {}", path.display()))?;
    let words = m.graph.as_ref().map(|(_, w)| w);
    let key = utt_key(path);
    let mut out = format!("# {key}\n{}", nbest.to_text(Some(&m.units), words));
    if let Some((l2r, r2l)) = &m.scorers {
        let w = FusionWeights::new(m.opts.alpha, m.opts.ctc_weight)?;
        let rescored = rescore_nbest(&nbest, l2r, r2l, w)?;
        let _ = write!(out, "# {key} rescored\n{}", rescored.to_text(Some(&m.units), words));
    }
    Ok(out)
}

pub fn run(a: DecodeArgs) -> Result<()> {
    if a.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let model = load_model(&a)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let results: Vec<Result<String>> =
        pool.install(|| a.posteriors.par_iter().map(|p| decode_one(&model, p)).collect());
    let mut text = String::new();
    for r in results {
        text.push_str(&r?);
    }
    write_output(a.output.as_deref(), &text)
}

/// Reads `# key` blocks of first-pass n-best lines; rescored blocks are
/// skipped. Unit and word names are interned into the returned tables.
/// Utterance lists plus the unit and word tables interned while parsing.
type ParsedNBest = (Vec<(String, NBestList)>, SymbolTable, SymbolTable);

fn parse_nbest(text: &str, file: &Path) -> Result<ParsedNBest> {
    let mut units = SymbolTable::new();
    let mut words = SymbolTable::new();
    let mut out: Vec<(String, NBestList)> = Vec::new();
    let mut skipping = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix("# ") {
            skipping = header.ends_with(" rescored");
            if !skipping {
                out.push((header.trim().to_string(), NBestList::default()));
            }
            continue;
        }
        if skipping {
            continue;
        }
        let err = |m: &str| parse_failure(file, i + 1, m);
        let Some((_, list)) = out.last_mut() else {
            return Err(err("hypothesis before any `# key` line"));
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err("expected `rank total ctc context lm<TAB>units<TAB>words`"));
        }
        let nums: Vec<f64> = cols[0]
            .split_whitespace()
            .map(|v| match v {
                "-Infinity" => Ok(f64::NEG_INFINITY),
                _ => v.parse::<f64>(),
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("bad score"))?;
        if nums.len() != 5 {
            return Err(err("expected five score fields"));
        }
        let intern = |t: &mut SymbolTable, s: &str| t.find(s).unwrap_or_else(|| t.add(s));
        let mut h = Hypothesis::new(
            cols[1].split_whitespace().map(|s| intern(&mut units, s)).collect(),
            nums[2],
        );
        h.score_context = nums[3];
        h.score_lm = nums[4];
        h.words = cols[2].split_whitespace().map(|s| intern(&mut words, s)).collect();
        list.hyps.push(h);
    }
    Ok((out, units, words))
}

pub fn run_rescore(a: RescoreArgs) -> Result<()> {
    let flags = DecodeFlags {
        alpha: a.alpha,
        ctc_weight: a.ctc_weight,
        ..Default::default()
    };
    let opts = flags.resolve(a.config.as_deref())?;
    let w = FusionWeights::new(opts.alpha, opts.ctc_weight).map_err(|e| usage(e.to_string()))?;
    let (lists, mut units, words) = parse_nbest(&read_text(&a.nbest)?, &a.nbest)?;
    // table tokens never seen in the n-best cannot match anything; intern them anyway
    let intern_all = |units: &mut SymbolTable, path: &Path| -> Result<()> {
        for line in read_text(path)?.lines() {
            for tok in line.split_whitespace().skip(1) {
                if units.find(tok).is_none() {
                    units.add(tok);
                }
            }
        }
        Ok(())
    };
    intern_all(&mut units, &a.l2r_table)?;
    intern_all(&mut units, &a.r2l_table)?;
    let l2r = load_table(&a.l2r_table, &units)?;
    let r2l = load_table(&a.r2l_table, &units)?;
    let mut text = String::new();
    for (key, list) in lists {
        if list.is_empty() {
            let _ = writeln!(text, "# {key} rescored");
            continue;
        }
        let rescored = rescore_nbest(&list, &l2r, &r2l, w)?;
        let _ = write!(
            text,
            "# {key} rescored\n{}",
            rescored.to_text(Some(&units), Some(&words))
        );
    }
    write_output(a.output.as_deref(), &text)
}
