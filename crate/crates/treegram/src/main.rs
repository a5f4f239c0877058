use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use treegram::eval::{cross_validate, emit_report, summary_csv, EvalConfig};
use treegram::formats;
use treegram::grammar::{extract_rules, train, Grammar};
use treegram::index::SubtreeIndex;
use treegram::parser::{parse, ParserConfig};
use treegram::transform::{ambiguate, compress_types, wrap_concepts, AmbiguationConfig};
use treegram::tree::Treebank;

/// Train probabilistic tree grammars from treebanks and parse ambiguous
/// token sequences into ranked parse trees.
#[derive(Parser)]
#[command(name = "treegram", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a grammar from a treebank and write it to a grammar file.
    Train {
        #[arg(long)]
        treebank: PathBuf,
        /// Deepest rule patterns to extract (at least 2).
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse sentences with a trained grammar; prints `rank TAB probability
    /// TAB tree` per parse. Exits 1 if any sentence has no parse.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        /// Space-separated tokens to parse.
        #[arg(long, conflicts_with = "stdin")]
        sentence: Option<String>,
        /// Read one sentence per line from standard input.
        #[arg(long)]
        stdin: bool,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Per-cell beam width; 0 means `max(20, top_k)`.
        #[arg(long, default_value_t = 0)]
        beam_width: usize,
        /// Disable pruning by free-variable type compatibility.
        #[arg(long)]
        no_semantic_filter: bool,
    },
    /// Cross-validate a treebank and write summary/details CSV reports.
    /// Exits 1 if some held-out sentence had no parse.
    Eval {
        #[arg(long)]
        treebank: PathBuf,
        #[arg(long, default_value_t = 100)]
        folds: usize,
        /// Depths to sweep: comma list or inclusive range, e.g. `2,3,4` or `2..7`.
        #[arg(long, default_value = "2..7")]
        depths: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        top_k: usize,
        /// Drop sentences longer than this many tokens.
        #[arg(long)]
        max_sentence_len: Option<usize>,
        /// Worker threads for fold evaluation.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory for summary.csv and details.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a raw term treebank as ambiguous sentences, one per line.
    Ambiguate {
        #[arg(long)]
        treebank: PathBuf,
        /// Ambiguation tables; omitted means empty tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rewrite a treebank: `compress` raw terms into typed trees, or `wrap`
    /// overloaded tokens in concept nonterminals.
    Transform {
        #[arg(long, value_enum)]
        mode: TransformMode,
        #[arg(long)]
        treebank: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-depth rule counts and the tree height histogram of a treebank.
    Stats {
        #[arg(long)]
        treebank: PathBuf,
        /// Depths to report: comma list or inclusive range.
        #[arg(long, default_value = "2..7")]
        depths: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformMode {
    Compress,
    Wrap,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Train {
            treebank,
            max_depth,
            out,
        } => {
            if max_depth < 2 {
                return Err(format!("--max-depth must be at least 2, got {max_depth}"));
            }
            let bank = formats::load_treebank(&treebank).map_err(|e| e.to_string())?;
            let grammar = train(&bank, max_depth).map_err(|e| e.to_string())?;
            formats::save_grammar(&grammar, &out).map_err(|e| e.to_string())?;
            for depth in 2..=max_depth {
                let distinct = grammar.rule_count_at_depth(depth);
                let total: u64 = grammar
                    .rules_at_depth(depth)
                    .map(|r| r.count.unwrap_or(0))
                    .sum();
                println!("depth {depth}: {distinct} rules ({total} occurrences)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Parse {
            grammar,
            sentence,
            stdin,
            top_k,
            beam_width,
            no_semantic_filter,
        } => {
            if sentence.is_none() && !stdin {
                return Err("pass --sentence \"...\" or --stdin".into());
            }
            let grammar = formats::load_grammar(&grammar).map_err(|e| e.to_string())?;
            let index = SubtreeIndex::build(&grammar, 3);
            let config = ParserConfig {
                top_k,
                beam_width: if beam_width == 0 {
                    beam_width_default(top_k)
                } else {
                    beam_width
                },
                semantic_filter: !no_semantic_filter,
                ..ParserConfig::default()
            };
            let stdout = io::stdout();
            let mut out = stdout.lock();
            let mut all_parsed = true;
            if let Some(text) = sentence {
                let parsed = parse_one(&grammar, &index, &config, &text, &mut out)?;
                all_parsed &= parsed;
            } else {
                let mut first = true;
                for line in io::stdin().lock().lines() {
                    let line = line.map_err(|e| e.to_string())?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    if !first {
                        writeln!(out).map_err(|e| e.to_string())?;
                    }
                    first = false;
                    let parsed = parse_one(&grammar, &index, &config, &line, &mut out)?;
                    all_parsed &= parsed;
                }
            }
            Ok(if all_parsed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Eval {
            treebank,
            folds,
            depths,
            seed,
            top_k,
            max_sentence_len,
            jobs,
            out,
        } => {
            let bank = formats::load_treebank(&treebank).map_err(|e| e.to_string())?;
            let config = EvalConfig {
                folds,
                top_k,
                depths: parse_depths(&depths)?,
                seed,
                max_sentence_len,
                jobs,
                ..EvalConfig::default()
            };
            let report = cross_validate(&bank, &config).map_err(|e| e.to_string())?;
            emit_report(&report, &out).map_err(|e| e.to_string())?;
            print!("{}", summary_csv(&report));
            Ok(if report.any_unparsed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Ambiguate {
            treebank,
            config,
            out,
        } => {
            let bank = formats::load_treebank(&treebank).map_err(|e| e.to_string())?;
            let tables = load_tables(config)?;
            let mut text = String::new();
            for (i, tree) in bank.trees().iter().enumerate() {
                let sentence =
                    ambiguate(tree, &tables).map_err(|e| format!("tree {}: {e}", i + 1))?;
                text.push_str(&sentence.join(" "));
                text.push('\n');
            }
            std::fs::write(&out, text).map_err(|e| format!("{}: {e}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform {
            mode,
            treebank,
            config,
            out,
        } => {
            let bank = formats::load_treebank(&treebank).map_err(|e| e.to_string())?;
            let tables = load_tables(config)?;
            let mut trees = Vec::with_capacity(bank.len());
            for (i, tree) in bank.trees().iter().enumerate() {
                let transformed = match mode {
                    TransformMode::Compress => compress_types(tree, &tables)
                        .map_err(|e| format!("tree {}: {e}", i + 1))?,
                    TransformMode::Wrap => wrap_concepts(tree, &tables),
                };
                trees.push(transformed);
            }
            formats::store_treebank(&Treebank::new(trees), &out).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { treebank, depths } => {
            let bank = formats::load_treebank(&treebank).map_err(|e| e.to_string())?;
            for depth in parse_depths(&depths)? {
                let mut distinct = std::collections::BTreeSet::new();
                let mut total = 0usize;
                for tree in bank.trees() {
                    for pattern in extract_rules(tree, depth) {
                        total += 1;
                        distinct.insert(pattern.canonical());
                    }
                }
                println!("depth {depth}: distinct={} total={total}", distinct.len());
            }
            let mut heights: BTreeMap<usize, usize> = BTreeMap::new();
            for tree in bank.trees() {
                *heights.entry(tree.height()).or_insert(0) += 1;
            }
            for (height, count) in heights {
                println!("height {height}: {count}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn beam_width_default(top_k: usize) -> usize {
    top_k.max(20)
}

fn parse_one(
    grammar: &Grammar,
    index: &SubtreeIndex,
    config: &ParserConfig,
    text: &str,
    out: &mut impl Write,
) -> Result<bool, String> {
    let tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
    let results = parse(grammar, index, &tokens, config).map_err(|e| e.to_string())?;
    for (i, r) in results.iter().enumerate() {
        writeln!(out, "{}\t{:.11e}\t{}", i + 1, r.prob(), r.tree)
            .map_err(|e| e.to_string())?;
    }
    Ok(!results.is_empty())
}

fn parse_depths(text: &str) -> Result<Vec<usize>, String> {
    let parse_num = |s: &str| -> Result<usize, String> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad depth {s:?}"))
    };
    let depths: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (parse_num(lo)?, parse_num(hi)?);
        if lo > hi {
            return Err(format!("empty depth range {text:?}"));
        }
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(parse_num)
            .collect::<Result<Vec<_>, _>>()?
    };
    if depths.is_empty() {
        return Err("no depths given".into());
    }
    for &d in &depths {
        if d < 2 {
            return Err(format!("depths must be at least 2, got {d}"));
        }
    }
    Ok(depths)
}

fn load_tables(path: Option<PathBuf>) -> Result<AmbiguationConfig, String> {
    match path {
        Some(p) => formats::load_config(&p).map_err(|e| e.to_string()),
        None => Ok(AmbiguationConfig::default()),
    }
}

// keep the CLI parser honest at compile time
#[test]
fn cli_definition_is_valid() {
    use clap::CommandFactory;
    Cli::command().debug_assert();
}
