use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ctcgraph_core::fst::{Fst, FstError, SymbolTable};
use ctcgraph_core::graph::{
    build_g_with_words, build_l, build_t, build_tlg, parse_arpa_with, token_table, unit_table, ArpaOptions,
    BuildTlgOptions, GraphError, Lexicon, UnitInventory,
};

use crate::{parse_failure, read_text, usage};

#[derive(Args)]
pub struct BuildGraphArgs {
    /// Unit inventory: `<blank> 0` then one `unit id` line per unit
    #[arg(long)]
    pub units: PathBuf,
    /// Lexicon: `word unit...` per line
    #[arg(long, requires = "arpa")]
    pub lexicon: Option<PathBuf>,
    /// ARPA language model; without it only T is built
    #[arg(long, requires = "lexicon")]
    pub arpa: Option<PathBuf>,
    /// Reject ARPA files with missing lower-order entries instead of repairing them
    #[arg(long)]
    pub strict_arpa: bool,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

pub fn graph_error(file: &Path, e: GraphError) -> anyhow::Error {
    match e {
        GraphError::Parse { line, message } => parse_failure(file, line, message),
        GraphError::Fst(FstError::Parse { line, message }) => parse_failure(file, line, message),
        other => anyhow::anyhow!("{}: {other}", file.display()),
    }
}

pub fn load_units(path: &Path) -> Result<UnitInventory> {
    UnitInventory::parse(&read_text(path)?).map_err(|e| graph_error(path, e))
}

pub fn load_symbols(path: &Path) -> Result<SymbolTable> {
    SymbolTable::parse_text(&read_text(path)?).map_err(|e| match e {
        FstError::Parse { line, message } => parse_failure(path, line, message),
        other => anyhow::anyhow!("{}: {other}", path.display()),
    })
}

pub fn load_fst(path: &Path) -> Result<Fst> {
    Fst::parse_text(&read_text(path)?).map_err(|e| match e {
        FstError::Parse { line, message } => parse_failure(path, line, message),
        other => anyhow::anyhow!("{}: {other}", path.display()),
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn report(name: &str, f: &Fst) {
    println!("{name}: {} states, {} arcs", f.num_states(), f.num_arcs());
}

pub fn run(a: BuildGraphArgs) -> Result<()> {
    let inv = load_units(&a.units)?;
    let names: Vec<&str> = inv.units().iter().map(String::as_str).collect();
    let t = build_t(&names).map_err(|e| graph_error(&a.units, e))?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write(&a.out, "units.txt", &inv.to_text())?;
    write(&a.out, "tokens.txt", &token_table(&inv).to_text())?;
    write(&a.out, "T.fst", &t.to_text())?;
    report("T", &t);
    let (Some(lex_path), Some(arpa_path)) = (&a.lexicon, &a.arpa) else {
        log::info!("no language model given; built T only");
        return Ok(());
    };
    let lex = Lexicon::parse(&read_text(lex_path)?).map_err(|e| graph_error(lex_path, e))?;
    for u in lex.units() {
        if inv.column(u).is_none() {
            return Err(usage(format!(
                "{}: unit `{u}` is not in {}",
                lex_path.display(),
                a.units.display()
            )));
        }
    }
    let model = parse_arpa_with(&read_text(arpa_path)?, ArpaOptions { strict: a.strict_arpa })
        .map_err(|e| graph_error(arpa_path, e))?;
    let mut words = SymbolTable::new();
    for w in lex.words() {
        words.add(w);
    }
    for gram in model.orders.get(&1).into_iter().flatten() {
        let w = gram.words[0].as_str();
        if w != "<s>" && w != "</s>" && words.find(w).is_none() {
            log::warn!("`{w}` is in the language model but not the lexicon");
            words.add(w);
        }
    }
    let l = build_l(&lex, &unit_table(&inv), &words).map_err(|e| graph_error(lex_path, e))?;
    let g = build_g_with_words(&model, &words).map_err(|e| graph_error(arpa_path, e))?;
    let tlg = build_tlg(&t, &l, &g, BuildTlgOptions::default()).map_err(|e| anyhow::anyhow!("building TLG: {e}"))?;
    if tlg.is_empty() {
        log::warn!("TLG is empty: no sentence of the language model is spelled by the lexicon");
    }
    write(&a.out, "words.txt", &words.to_text())?;
    write(&a.out, "L.fst", &l.to_text())?;
    write(
        &a.out,
        "L.isyms.txt",
        &l.input_symbols().map(SymbolTable::to_text).unwrap_or_default(),
    )?;
    write(
        &a.out,
        "L.osyms.txt",
        &l.output_symbols().map(SymbolTable::to_text).unwrap_or_default(),
    )?;
    write(&a.out, "G.fst", &g.to_text())?;
    write(&a.out, "TLG.fst", &tlg.to_text())?;
    report("L", &l);
    report("G", &g);
    report("TLG", &tlg);
    Ok(())
}
