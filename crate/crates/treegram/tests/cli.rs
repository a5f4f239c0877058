//! End-to-end checks of the `treegram` binary: exit codes, output formats
//! and golden pipeline runs.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

const TRAINING_TREE: &str = "(S (Num (Num (Num 1) * (Num x)) + (Num (Num 2) * (Num x))) .)";

const RAW_REAL_NEGNEG: &str = r#"(Comb (Const "!" (Tyapp "fun" (Tyapp "fun" (Tyapp "real") (Tyapp "bool")) (Tyapp "bool"))) (Abs "A0" (Tyapp "real") (Comb (Comb (Const "=" (Tyapp "fun" (Tyapp "real") (Tyapp "fun" (Tyapp "real") (Tyapp "bool")))) (Comb (Const "real_neg" (Tyapp "fun" (Tyapp "real") (Tyapp "real"))) (Comb (Const "real_neg" (Tyapp "fun" (Tyapp "real") (Tyapp "real"))) (Var "A0" (Tyapp "real"))))) (Var "A0" (Tyapp "real")))))"#;

const TYPED_REAL_NEGNEG: &str = r#"("(Type bool)" ! ("(Type (fun real bool))" (Abs ("(Type real)" (Var A0)) ("(Type bool)" ("(Type real)" real_neg ("(Type real)" real_neg ("(Type real)" (Var A0)))) = ("(Type real)" (Var A0))))))"#;

const WRAPPED_REAL_NEGNEG: &str = r#"("(Type bool)" ! ("(Type (fun real bool))" (Abs ("(Type real)" (Var A0)) ("(Type bool)" ("(Type real)" ($#real_neg --) ("(Type real)" ($#real_neg --) ("(Type real)" (Var A0)))) ($#= =) ("(Type real)" (Var A0))))))"#;

const NEGNEG_CONFIG: &str = "[overload]\nreal_neg --\n= =\n[infix]\n=\n";

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treegram-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn treegram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treegram"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_parse_pipeline_reproduces_the_worked_example() {
    let dir = workdir("pipeline");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();

    // depth 2
    let g2 = dir.join("g2.grammar");
    let out = treegram(&["train", "--treebank", path(&bank), "--max-depth", "2", "--out", path(&g2)]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("depth 2: 6 rules (8 occurrences)"), "{}", stdout(&out));
    let grammar_text = fs::read_to_string(&g2).unwrap();
    assert_eq!(grammar_text.lines().filter(|l| l.starts_with("2\t")).count(), 6);

    let out = treegram(&["parse", "--grammar", path(&g2), "--sentence", "1 * x + 2 * x ."]);
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    let prob_of = |line: &str| line.split('\t').nth(1).unwrap().to_string();
    for line in &lines {
        // all five printed probabilities agree, and match the rule product
        assert_eq!(prob_of(line), prob_of(&lines[0]), "{line}");
        let value: f64 = prob_of(line).parse().unwrap();
        let expected = 16.0 / 823543.0;
        assert!(((value - expected) / expected).abs() < 1e-9);
    }
    // ranks count up and trees are listed in canonical tie-break order
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("{}\t", i + 1)));
    }
    let trees: Vec<&str> = lines.iter().map(|l| l.split('\t').nth(2).unwrap()).collect();
    let mut sorted = trees.clone();
    sorted.sort_unstable();
    assert_eq!(trees, sorted);

    // depth 3 puts the training tree first with probability 1/9
    let g3 = dir.join("g3.grammar");
    let out = treegram(&["train", "--treebank", path(&bank), "--max-depth", "3", "--out", path(&g3)]);
    assert!(stdout(&out).contains("depth 3: 4 rules (4 occurrences)"));
    let out = treegram(&["parse", "--grammar", path(&g3), "--sentence", "1 * x + 2 * x ."]);
    let first = stdout(&out).lines().next().unwrap().to_string();
    let mut fields = first.split('\t');
    assert_eq!(fields.next(), Some("1"));
    let value: f64 = fields.next().unwrap().parse().unwrap();
    assert!(((value - 1.0 / 9.0) * 9.0).abs() < 1e-9);
    assert_eq!(fields.next(), Some(TRAINING_TREE));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn parse_failures_exit_one_with_empty_output() {
    let dir = workdir("noparse");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let g = dir.join("g.grammar");
    assert!(treegram(&["train", "--treebank", path(&bank), "--max-depth", "2", "--out", path(&g)])
        .status
        .success());

    let out = treegram(&["parse", "--grammar", path(&g), "--sentence", "1 * y ."]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).is_empty());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn parse_reads_sentences_from_stdin() {
    let dir = workdir("stdin");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let g = dir.join("g.grammar");
    assert!(treegram(&["train", "--treebank", path(&bank), "--max-depth", "2", "--out", path(&g)])
        .status
        .success());

    let mut child = Command::new(env!("CARGO_BIN_EXE_treegram"))
        .args(["parse", "--grammar", path(&g), "--stdin", "--top-k", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"1 * x .\nx + 2 .\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    assert!(blocks[0].contains("(S (Num (Num 1) * (Num x)) .)"));
    assert!(blocks[1].contains("(S (Num (Num x) + (Num 2)) .)"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn usage_and_file_errors_exit_two() {
    let dir = workdir("errors");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let g = dir.join("g.grammar");

    let out = treegram(&["train", "--treebank", path(&bank), "--max-depth", "1", "--out", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 2"));

    let out = treegram(&["train", "--treebank", "/no/such/file.trees", "--max-depth", "2", "--out", path(&g)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/no/such/file.trees"));

    let out = treegram(&["train", "--treebank", path(&bank), "--frobnicate", "--out", path(&g)]);
    assert_eq!(out.status.code(), Some(2));

    let out = treegram(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // malformed treebank line is reported with its number
    let broken = dir.join("broken.trees");
    fs::write(&broken, "(S x)\n((\n").unwrap();
    let out = treegram(&["stats", "--treebank", path(&broken)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn stats_reports_counts_and_heights() {
    let dir = workdir("stats");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let out = treegram(&["stats", "--treebank", path(&bank), "--depths", "2,3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("depth 2: distinct=6 total=8"), "{text}");
    assert!(text.contains("depth 3: distinct=4 total=4"), "{text}");
    assert!(text.contains("height 5: 1"), "{text}");

    let empty = dir.join("empty.trees");
    fs::write(&empty, "").unwrap();
    let out = treegram(&["stats", "--treebank", path(&empty), "--depths", "2"]);
    assert!(stdout(&out).contains("depth 2: distinct=0 total=0"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn transform_and_ambiguate_golden_chain() {
    let dir = workdir("transform");
    let raw = dir.join("raw.trees");
    fs::write(&raw, format!("{RAW_REAL_NEGNEG}\n")).unwrap();
    let cfg = dir.join("tables.cfg");
    fs::write(&cfg, NEGNEG_CONFIG).unwrap();

    let typed = dir.join("typed.trees");
    let out = treegram(&["transform", "--mode", "compress", "--treebank", path(&raw), "--config", path(&cfg), "--out", path(&typed)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&typed).unwrap(), format!("{TYPED_REAL_NEGNEG}\n"));

    let wrapped = dir.join("wrapped.trees");
    let out = treegram(&["transform", "--mode", "wrap", "--treebank", path(&typed), "--config", path(&cfg), "--out", path(&wrapped)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&wrapped).unwrap(), format!("{WRAPPED_REAL_NEGNEG}\n"));

    // wrapping again changes nothing, byte for byte
    let wrapped_twice = dir.join("wrapped2.trees");
    let out = treegram(&["transform", "--mode", "wrap", "--treebank", path(&wrapped), "--config", path(&cfg), "--out", path(&wrapped_twice)]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(&wrapped).unwrap(),
        fs::read(&wrapped_twice).unwrap()
    );

    let sentences = dir.join("sentences.txt");
    let out = treegram(&["ambiguate", "--treebank", path(&raw), "--config", path(&cfg), "--out", path(&sentences)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&sentences).unwrap(), "! A0 -- -- A0 = A0\n");

    // compress mode rejects trees that are not raw terms
    let not_raw = dir.join("not_raw.trees");
    fs::write(&not_raw, format!("{TRAINING_TREE}\n")).unwrap();
    let out = treegram(&["transform", "--mode", "compress", "--treebank", path(&not_raw), "--config", path(&cfg), "--out", path(&typed)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("tree 1"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn semantic_filter_flag_controls_pruning() {
    let dir = workdir("filter");
    let bank = dir.join("typed.trees");
    fs::write(
        &bank,
        concat!(
            "(\"(Type bool)\" (\"(Type real)\" (Var u)) ($#= =) (\"(Type real)\" (Var u)))\n",
            "(\"(Type bool)\" (\"(Type complex)\" (Var u)) ($#= =) (\"(Type complex)\" (Var u)))\n",
            "(\"(Type bool)\" (\"(Type real)\" (Var u)) ($#lt <) (\"(Type complex)\" (Var u)))\n",
        ),
    )
    .unwrap();
    let g = dir.join("typed.grammar");
    assert!(treegram(&["train", "--treebank", path(&bank), "--max-depth", "2", "--out", path(&g)])
        .status
        .success());

    // `u < u` needs u at two types at once: pruned by default
    let out = treegram(&["parse", "--grammar", path(&g), "--sentence", "u < u"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).is_empty());

    let out = treegram(&["parse", "--grammar", path(&g), "--sentence", "u < u", "--no-semantic-filter"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn beam_narrower_than_top_k_is_rejected() {
    let dir = workdir("beam");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let g = dir.join("g.grammar");
    assert!(treegram(&["train", "--treebank", path(&bank), "--max-depth", "2", "--out", path(&g)])
        .status
        .success());
    let out = treegram(&[
        "parse", "--grammar", path(&g), "--sentence", "1 * x .",
        "--top-k", "30", "--beam-width", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("beam_width"));
    // a large --top-k alone widens the default beam instead of failing
    let out = treegram(&["parse", "--grammar", path(&g), "--sentence", "1 * x .", "--top-k", "30"]);
    assert!(out.status.success());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn eval_defaults_match_the_documented_protocol() {
    let out = treegram(&["eval", "--help"]);
    let text = stdout(&out);
    for expected in [
        "[default: 100]", // folds
        "[default: 2..7]",
        "[default: 20]", // top-k
        "[default: 0]",  // seed
    ] {
        assert!(text.contains(expected), "missing {expected}: {text}");
    }
}

fn eval_corpus() -> String {
    let mut text = String::new();
    let toks = ["a", "b", "c", "d", "e"];
    for i in 0..10 {
        let (x, y) = (toks[i % 5], toks[(i + 2) % 5]);
        let op = if i % 2 == 0 { "*" } else { "+" };
        text.push_str(&format!("(S (Num (Num {x}) {op} (Num {y})) .)\n"));
    }
    text
}

#[test]
fn eval_writes_deterministic_reports() {
    let dir = workdir("eval");
    let bank = dir.join("bank.trees");
    fs::write(&bank, eval_corpus()).unwrap();

    let run = |out_dir: &PathBuf, jobs: &str| {
        let out = treegram(&[
            "eval", "--treebank", path(&bank), "--folds", "5", "--depths", "2,3",
            "--seed", "9", "--jobs", jobs, "--out", path(out_dir),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).starts_with("depth,parsed,correct_found,correct_found_pct,avg_rank"));
    };
    let first = dir.join("run1");
    let second = dir.join("run2");
    run(&first, "1");
    run(&second, "3");
    assert_eq!(
        fs::read(first.join("summary.csv")).unwrap(),
        fs::read(second.join("summary.csv")).unwrap()
    );
    assert_eq!(
        fs::read(first.join("details.csv")).unwrap(),
        fs::read(second.join("details.csv")).unwrap()
    );

    // more folds than trees is a usage error
    let out = treegram(&[
        "eval", "--treebank", path(&bank), "--folds", "50", "--depths", "2",
        "--seed", "9", "--out", path(&dir.join("run3")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("folds"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn eval_flags_unparsed_sentences_in_the_exit_code() {
    let dir = workdir("eval-noparse");
    let bank = dir.join("bank.trees");
    // one tree carries a token nothing else trains, so its fold cannot parse it
    let mut text = eval_corpus();
    text.push_str("(S (Num (Num zz) * (Num zz)) .)\n");
    fs::write(&bank, text).unwrap();
    let out = treegram(&[
        "eval", "--treebank", path(&bank), "--folds", "11", "--depths", "2",
        "--seed", "1", "--out", path(&dir.join("run")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let details = fs::read_to_string(dir.join("run/details.csv")).unwrap();
    assert!(details.lines().any(|l| l.ends_with(",0,")), "{details}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn grammar_files_survive_the_cli_round_trip() {
    let dir = workdir("roundtrip");
    let bank = dir.join("bank.trees");
    fs::write(&bank, format!("{TRAINING_TREE}\n")).unwrap();
    let g = dir.join("g.grammar");
    assert!(treegram(&["train", "--treebank", path(&bank), "--max-depth", "3", "--out", path(&g)])
        .status
        .success());
    let text = fs::read_to_string(&g).unwrap();
    assert!(text.starts_with("# grammar max_depth=3 start=S\n"), "{text}");
    // deterministic rule order: depth, then left-hand side, then pattern
    let data_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let mut sorted = data_lines.clone();
    sorted.sort_by_key(|l| {
        let mut parts = l.split('\t');
        let depth: usize = parts.next().unwrap().parse().unwrap();
        let pattern = l.rsplit('\t').next().unwrap();
        (depth, pattern.to_string())
    });
    // lexicographic pattern text happens to order left-hand sides here too
    assert_eq!(data_lines, sorted);
    let _ = fs::remove_dir_all(&dir);
}
