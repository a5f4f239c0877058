//! Cross-validation harness and report emission.
//!
//! The corpus is permuted with the seeded generator from `rng`, split into
//! near-equal chunks, and each chunk is parsed with a grammar trained on the
//! complement. Reports aggregate, per rule depth, how many held-out
//! sentences parsed at all, how often the held-out tree itself appeared in
//! the top results, and its average rank when found (found cases only).
//!
//! Folds run in parallel when `jobs > 1`; records are keyed by sentence and
//! reassembled in corpus order, so reports are byte-identical regardless of
//! scheduling. Wall-clock times are kept in the in-memory report for
//! inspection but stay out of the CSV files, which must be reproducible.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use treegram_core::grammar::{train, Grammar, TrainError};
use treegram_core::index::SubtreeIndex;
use treegram_core::parser::{parse, rank_of, ParserConfig, ParserError};
use treegram_core::rng::permutation;
use treegram_core::tree::{ParseTree, Treebank};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub folds: usize,
    pub top_k: usize,
    pub beam_width: usize,
    /// Rule depths to sweep, evaluated in the order given.
    pub depths: Vec<usize>,
    pub seed: u64,
    /// Drop sentences longer than this before splitting, if set.
    pub max_sentence_len: Option<usize>,
    /// Worker threads for fold evaluation.
    pub jobs: usize,
    pub semantic_filter: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 100,
            top_k: 20,
            beam_width: 20,
            depths: (2..=7).collect(),
            seed: 0,
            max_sentence_len: None,
            jobs: 1,
            semantic_filter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRecord {
    /// Index of the tree in the (filtered) input treebank.
    pub sentence: usize,
    pub parsed: bool,
    /// 1-based rank of the held-out tree among the returned parses.
    pub rank: Option<usize>,
    /// Wall time of the parse call; informational only, not serialized.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthReport {
    pub depth: usize,
    pub records: Vec<SentenceRecord>,
}

impl DepthReport {
    pub fn evaluated(&self) -> usize {
        self.records.len()
    }

    pub fn parsed_count(&self) -> usize {
        self.records.iter().filter(|r| r.parsed).count()
    }

    pub fn correct_found_count(&self) -> usize {
        self.records.iter().filter(|r| r.rank.is_some()).count()
    }

    pub fn correct_found_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.correct_found_count() as f64 / self.records.len() as f64
        }
    }

    /// Mean rank over the sentences whose correct tree was found.
    pub fn avg_rank(&self) -> Option<f64> {
        let ranks: Vec<usize> = self.records.iter().filter_map(|r| r.rank).collect();
        if ranks.is_empty() {
            None
        } else {
            Some(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub folds: usize,
    pub depths: Vec<DepthReport>,
}

impl EvalReport {
    pub fn any_unparsed(&self) -> bool {
        self.depths
            .iter()
            .any(|d| d.records.iter().any(|r| !r.parsed))
    }
}

#[derive(Debug)]
pub enum EvalError {
    CorpusTooSmall { corpus: usize, folds: usize },
    TooFewFolds(usize),
    DepthTooSmall(usize),
    MixedRoots,
    Train(TrainError),
    Parser(ParserError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::CorpusTooSmall { corpus, folds } => {
                write!(f, "corpus of {corpus} trees cannot fill {folds} folds")
            }
            EvalError::TooFewFolds(n) => write!(f, "need at least 2 folds, got {n}"),
            EvalError::DepthTooSmall(d) => write!(f, "depths must be at least 2, got {d}"),
            EvalError::MixedRoots => write!(f, "treebank roots disagree; cannot train"),
            EvalError::Train(e) => write!(f, "{e}"),
            EvalError::Parser(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Seeded cross-validation over `treebank` for every depth in the config.
pub fn cross_validate(treebank: &Treebank, config: &EvalConfig) -> Result<EvalReport, EvalError> {
    if config.folds < 2 {
        return Err(EvalError::TooFewFolds(config.folds));
    }
    for &d in &config.depths {
        if d < 2 {
            return Err(EvalError::DepthTooSmall(d));
        }
    }
    if treebank.uniform_start().is_none() {
        return Err(EvalError::MixedRoots);
    }

    let kept: Vec<&ParseTree> = treebank
        .trees()
        .iter()
        .filter(|t| match config.max_sentence_len {
            Some(limit) => t.leaf_count() <= limit,
            None => true,
        })
        .collect();
    let n = kept.len();
    if n < config.folds {
        return Err(EvalError::CorpusTooSmall {
            corpus: n,
            folds: config.folds,
        });
    }

    let order = permutation(config.seed, n);
    let chunks: Vec<&[usize]> = (0..config.folds)
        .map(|c| &order[c * n / config.folds..(c + 1) * n / config.folds])
        .collect();
    // the chunks partition the corpus: every tree in exactly one fold
    let mut seen = vec![false; n];
    for chunk in &chunks {
        for &i in *chunk {
            assert!(!seen[i], "tree {i} assigned to two folds");
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s), "some tree missing from all folds");
    let (min, max) = chunks
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.len()), hi.max(c.len())));
    assert!(max - min <= 1, "chunk sizes must differ by at most one");

    let parser_config = ParserConfig {
        top_k: config.top_k,
        beam_width: config.beam_width.max(config.top_k),
        semantic_filter: config.semantic_filter,
        ..ParserConfig::default()
    };
    if parser_config.top_k > parser_config.beam_width {
        return Err(EvalError::Parser(ParserError::TopKExceedsBeamWidth {
            top_k: parser_config.top_k,
            beam_width: parser_config.beam_width,
        }));
    }

    let mut depth_reports = Vec::with_capacity(config.depths.len());
    for &depth in &config.depths {
        let records = run_depth(&kept, &chunks, depth, &parser_config, config.jobs)?;
        depth_reports.push(DepthReport { depth, records });
    }

    Ok(EvalReport {
        seed: config.seed,
        folds: config.folds,
        depths: depth_reports,
    })
}

type FoldOutcome = Option<Result<Vec<SentenceRecord>, EvalError>>;

fn run_depth(
    kept: &[&ParseTree],
    chunks: &[&[usize]],
    depth: usize,
    parser_config: &ParserConfig,
    jobs: usize,
) -> Result<Vec<SentenceRecord>, EvalError> {
    let results: Mutex<Vec<FoldOutcome>> =
        Mutex::new((0..chunks.len()).map(|_| None).collect());
    let next_fold = AtomicUsize::new(0);
    let workers = jobs.max(1).min(chunks.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let fold = next_fold.fetch_add(1, Ordering::Relaxed);
                if fold >= chunks.len() {
                    break;
                }
                let out = run_fold(kept, chunks, fold, depth, parser_config);
                results.lock().unwrap()[fold] = Some(out);
            });
        }
    });

    let mut records = Vec::with_capacity(kept.len());
    for slot in results.into_inner().unwrap() {
        records.extend(slot.expect("every fold ran")?);
    }
    // corpus order, independent of fold scheduling
    records.sort_by_key(|r| r.sentence);
    Ok(records)
}

fn run_fold(
    kept: &[&ParseTree],
    chunks: &[&[usize]],
    fold: usize,
    depth: usize,
    parser_config: &ParserConfig,
) -> Result<Vec<SentenceRecord>, EvalError> {
    let test: &[usize] = chunks[fold];
    let mut in_test = vec![false; kept.len()];
    for &i in test {
        in_test[i] = true;
    }
    let training: Vec<ParseTree> = kept
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_test[*i])
        .map(|(_, t)| (*t).clone())
        .collect();
    // leakage check: no held-out tree may enter its own training fold
    assert_eq!(training.len() + test.len(), kept.len());

    let grammar: Grammar =
        train(&Treebank::new(training), depth).map_err(EvalError::Train)?;
    let index = SubtreeIndex::build(&grammar, 3);

    let mut records = Vec::with_capacity(test.len());
    for &i in test {
        let tree = kept[i];
        let sentence = tree.yield_tokens();
        let started = Instant::now();
        let results =
            parse(&grammar, &index, &sentence, parser_config).map_err(EvalError::Parser)?;
        let seconds = started.elapsed().as_secs_f64();
        records.push(SentenceRecord {
            sentence: i,
            parsed: !results.is_empty(),
            rank: rank_of(tree, &results),
            seconds,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// report files

/// `summary.csv`: one row per depth with counts, percentage (1 decimal) and
/// average rank (2 decimals, empty when nothing was found).
pub fn summary_csv(report: &EvalReport) -> String {
    let mut out = String::from("depth,parsed,correct_found,correct_found_pct,avg_rank\n");
    for d in &report.depths {
        let pct = 100.0 * d.correct_found_rate();
        let rank = d
            .avg_rank()
            .map(|r| format!("{r:.2}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{pct:.1},{rank}\n",
            d.depth,
            d.parsed_count(),
            d.correct_found_count(),
        ));
    }
    out
}

/// `details.csv`: one row per sentence per depth. `rank` is empty when the
/// held-out tree was not among the results.
pub fn details_csv(report: &EvalReport) -> String {
    let mut out = String::from("depth,sentence,parsed,rank\n");
    for d in &report.depths {
        for r in &d.records {
            let rank = r.rank.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{rank}\n",
                d.depth,
                r.sentence,
                u8::from(r.parsed),
            ));
        }
    }
    out
}

/// Writes `summary.csv` and `details.csv` into `dir`, creating it if needed.
pub fn emit_report(report: &EvalReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.csv"), summary_csv(report))?;
    fs::write(dir.join("details.csv"), details_csv(report))?;
    Ok(())
}
