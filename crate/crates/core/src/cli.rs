//! The `cxnkit` command line.
//!
//! Exit status is 0 on success, 1 when the input is understood but refused
//! (validation errors, malformed data) and 2 for usage and I/O problems.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::compiler::{compile, emit_grew, Pattern};
use crate::conllc::{parse_conllc, validate, CxnDef};
use crate::conllu::{read_conllu_file, serialize_conllu, Sentence};
use crate::coverage::{coverage_report, render_report, FrequencyCounter, ReportFormat};
use crate::lexicon::convert::{read_lexnames, Converter};
use crate::lexicon::{Lexicon, LexiconError, Pos};
use crate::matcher::{annotate, Match, MatchOptions, Matcher, MissingLemmaPolicy};

pub const EXIT_OK: u8 = 0;
pub const EXIT_REFUSED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cxnkit",
    version,
    about = "Construction patterns over CoNLL-U treebanks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check construction files; directories are searched for *.conllc.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Print the Grew query for a construction.
    Compile {
        /// Emit Grew (the only target, accepted for explicitness).
        #[arg(long)]
        grew: bool,
        file: PathBuf,
    },
    /// Find constructs of a construction in treebanks.
    Match(MatchArgs),
    /// Report how many treebank lemmas the lexicon tags with topics.
    Coverage(CoverageArgs),
    /// Convert OMW tab data into the lexicon's sense and relation tables.
    ConvertLexicon(ConvertArgs),
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// Sense table: lemma, pos, synset, topic.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Relation table: synset, relation, synset.
    #[arg(long, requires = "lexicon")]
    relations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SemMissing {
    Pass,
    Fail,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    cxn: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    treebank: Vec<PathBuf>,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Ignore OntoClass and lexical-relation constraints.
    #[arg(long)]
    no_sem: bool,
    /// Outcome of an OntoClass test on a lemma missing from the lexicon.
    #[arg(long, value_enum, default_value = "fail")]
    sem_missing: SemMissing,
    /// Compare identity constraints case-insensitively.
    #[arg(long)]
    identity_case_fold: bool,
    /// Write the treebanks back with Cxn annotations in MISC.
    #[arg(long, value_name = "OUT")]
    annotate: Option<PathBuf>,
    /// Write one TSV row per matched node.
    #[arg(long, value_name = "OUT")]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Tsv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Tsv => ReportFormat::Tsv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct CoverageArgs {
    #[arg(long, num_args = 1..)]
    treebank: Vec<PathBuf>,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Keep lemmas seen strictly more often than this.
    #[arg(long, default_value_t = 5)]
    min_freq: u64,
    #[arg(long, value_delimiter = ',', default_value = "noun,verb")]
    pos: Vec<Pos>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// OMW tab file (synset, lang:lemma, lemma).
    #[arg(long)]
    omw: PathBuf,
    /// Table of synset and lexname.
    #[arg(long, conflicts_with_all = ["lexnames", "wn_data"])]
    synset_topics: Option<PathBuf>,
    /// Princeton lexnames index, used with --wn-data.
    #[arg(long, requires = "wn_data")]
    lexnames: Option<PathBuf>,
    /// Princeton data.noun / data.verb files.
    #[arg(long, num_args = 1.., requires = "lexnames")]
    wn_data: Vec<PathBuf>,
    #[arg(long)]
    out_senses: PathBuf,
    #[arg(long)]
    out_relations: PathBuf,
}

/// A failure carrying its exit status; the message goes to standard error.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn refused(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_REFUSED,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{}", text);
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", text);
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Validate { paths } => cmd_validate(&paths, err),
        Command::Compile { file, .. } => cmd_compile(&file, out, err),
        Command::Match(args) => cmd_match(&args, out, err),
        Command::Coverage(args) => cmd_coverage(&args, out),
        Command::ConvertLexicon(args) => cmd_convert(&args, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "cxnkit: {}", f.message);
            f.code
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {}", path.display(), e)))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {}", path.display(), e)))
}

fn cxn_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries =
                fs::read_dir(p).map_err(|e| Failure::usage(format!("{}: {}", p.display(), e)))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "conllc"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_validate(paths: &[PathBuf], err: &mut dyn Write) -> Outcome {
    let mut code = EXIT_OK;
    for file in cxn_files(paths)? {
        let text = match fs::read_to_string(&file) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "{}: {}", file.display(), e);
                code = EXIT_USAGE;
                continue;
            }
        };
        match parse_conllc(&text) {
            Ok(def) => {
                for d in validate(&def) {
                    let _ = writeln!(err, "{}: {}", file.display(), d);
                    if d.is_error() {
                        code = code.max(EXIT_REFUSED);
                    }
                }
            }
            Err(e) => {
                let _ = writeln!(err, "{}: error: {}", file.display(), e);
                code = code.max(EXIT_REFUSED);
            }
        }
    }
    Ok(code)
}

/// Parses and compiles a construction, printing warnings to `err`.
fn load_pattern(path: &Path, err: &mut dyn Write) -> Result<(CxnDef, Pattern), Failure> {
    let text = read_text(path)?;
    let def = parse_conllc(&text)
        .map_err(|e| Failure::refused(format!("{}: error: {}", path.display(), e)))?;
    for d in validate(&def).iter().filter(|d| !d.is_error()) {
        let _ = writeln!(err, "{}: {}", path.display(), d);
    }
    match compile(&def) {
        Ok(p) => Ok((def, p)),
        Err(e) => {
            for d in &e.diagnostics {
                let _ = writeln!(err, "{}: {}", path.display(), d);
            }
            Err(Failure::refused(format!(
                "{}: construction {} does not validate",
                path.display(),
                e.cxn_id
            )))
        }
    }
}

fn cmd_compile(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (_, pattern) = load_pattern(path, err)?;
    let _ = write!(out, "{}", emit_grew(&pattern));
    Ok(EXIT_OK)
}

fn load_lexicon(args: &LexiconArgs) -> Result<Option<Lexicon>, Failure> {
    let Some(senses) = &args.lexicon else {
        return Ok(None);
    };
    match Lexicon::load(senses, args.relations.as_deref()) {
        Ok(lex) => Ok(Some(lex)),
        Err(e @ LexiconError::Io { .. }) => Err(Failure::usage(e.to_string())),
        Err(e) => Err(Failure::refused(e.to_string())),
    }
}

/// Reads CoNLL-U files in order. Malformed sentences are reported and
/// skipped; unreadable files abort.
fn load_treebanks(
    paths: &[PathBuf],
    err: &mut dyn Write,
) -> Result<Vec<(PathBuf, Vec<Sentence>)>, Failure> {
    let docs: Vec<_> = paths
        .par_iter()
        .map(|p| (p.clone(), read_conllu_file(p)))
        .collect();
    let mut out = Vec::new();
    for (path, doc) in docs {
        let doc = doc.map_err(|e| Failure::usage(e.to_string()))?;
        for e in &doc.errors {
            let _ = writeln!(err, "{}: {} (sentence skipped)", path.display(), e);
        }
        out.push((path, doc.sentences));
    }
    Ok(out)
}

fn sentence_label(path: &Path, index: usize, s: &Sentence) -> String {
    match s.sent_id() {
        Some(id) => id.to_string(),
        None => format!("{}#{}", path.display(), index + 1),
    }
}

fn cmd_match(args: &MatchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (_, pattern) = load_pattern(&args.cxn, err)?;
    let lexicon = match load_lexicon(&args.lexicon)? {
        Some(lex) => lex,
        None if args.no_sem => Lexicon::empty(),
        None => {
            return Err(Failure::usage(
                "--lexicon is required unless --no-sem is given",
            ))
        }
    };
    let options = MatchOptions {
        semantic_filtering: !args.no_sem,
        missing_lemma_policy: match args.sem_missing {
            SemMissing::Pass => MissingLemmaPolicy::Pass,
            SemMissing::Fail => MissingLemmaPolicy::Fail,
        },
        identity_case_fold: args.identity_case_fold,
    };
    let treebanks = load_treebanks(&args.treebank, err)?;
    let matcher = Matcher::new(&pattern, &lexicon, options);

    let mut report = String::from("sent_id\tcxn_id\toccurrence\trow\ttoken\tform\tlemma\n");
    let mut annotated: Vec<Sentence> = Vec::new();
    for (path, sentences) in &treebanks {
        let matches = matcher.match_corpus(sentences);
        let mut by_sentence: Vec<Vec<&Match>> = vec![Vec::new(); sentences.len()];
        for m in &matches {
            by_sentence[m.sentence].push(m);
        }
        for (i, s) in sentences.iter().enumerate() {
            let label = sentence_label(path, i, s);
            let mut current = s.clone();
            for (occ, m) in by_sentence[i].iter().enumerate() {
                let pairs: Vec<String> = assigned(&pattern, s, m)
                    .map(|(row, t)| format!("{}={}", row, t.form))
                    .collect();
                let _ = writeln!(out, "{}\t{}\t{}", label, pattern.cxn_id, pairs.join(" "));
                for (row, t) in assigned(&pattern, s, m) {
                    let _ = writeln!(
                        report,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        label,
                        pattern.cxn_id,
                        occ + 1,
                        row,
                        t.id,
                        t.form,
                        t.lemma
                    );
                }
                if args.annotate.is_some() {
                    current = annotate(&current, &pattern, m, occ + 1)
                        .map_err(|e| Failure::refused(e.to_string()))?;
                }
            }
            if args.annotate.is_some() {
                annotated.push(current);
            }
        }
    }
    if let Some(path) = &args.annotate {
        let text = serialize_conllu(&annotated).map_err(|e| Failure::refused(e.to_string()))?;
        write_file(path, &text)?;
    }
    if let Some(path) = &args.report {
        write_file(path, &report)?;
    }
    Ok(EXIT_OK)
}

fn assigned<'s>(
    p: &'s Pattern,
    s: &'s Sentence,
    m: &'s Match,
) -> impl Iterator<Item = (&'s str, &'s crate::conllu::Token)> + 's {
    m.assignment
        .iter()
        .enumerate()
        .filter_map(move |(node, t)| Some((p.nodes[node].row_id.as_str(), s.token((*t)?)?)))
}

fn cmd_coverage(args: &CoverageArgs, out: &mut dyn Write) -> Outcome {
    if args.treebank.is_empty() {
        return Err(Failure::usage("no treebank given (use --treebank)"));
    }
    let lexicon =
        load_lexicon(&args.lexicon)?.ok_or_else(|| Failure::usage("--lexicon is required"))?;
    let pos_set: BTreeSet<Pos> = args.pos.iter().copied().collect();
    let counters: Vec<Result<FrequencyCounter, Failure>> = args
        .treebank
        .par_iter()
        .map(|p| {
            let doc = read_conllu_file(p).map_err(|e| Failure::usage(e.to_string()))?;
            let mut c = FrequencyCounter::new();
            c.add(&doc.sentences, &pos_set);
            Ok(c)
        })
        .collect();
    let mut counter = FrequencyCounter::new();
    for c in counters {
        counter.merge(c?);
    }
    let report = coverage_report(&counter.entries(args.min_freq), &lexicon, args.min_freq);
    let _ = write!(out, "{}", render_report(&report, args.format.into()));
    Ok(EXIT_OK)
}

fn cmd_convert(args: &ConvertArgs, err: &mut dyn Write) -> Outcome {
    let mut converter = Converter::new();
    let refused = |e: crate::lexicon::convert::ConvertError| Failure::refused(e.to_string());
    match (&args.synset_topics, &args.lexnames) {
        (Some(path), _) => converter
            .add_synset_topics(&read_text(path)?, &path.display().to_string())
            .map_err(refused)?,
        (None, Some(lexnames)) => {
            let names = read_lexnames(&read_text(lexnames)?, &lexnames.display().to_string())
                .map_err(refused)?;
            for data in &args.wn_data {
                converter
                    .add_wordnet_data(&read_text(data)?, &names, &data.display().to_string())
                    .map_err(refused)?;
            }
        }
        (None, None) => {
            return Err(Failure::usage(
                "give --synset-topics or --lexnames with --wn-data",
            ))
        }
    }
    let converted = converter.convert(&read_text(&args.omw)?);
    write_file(&args.out_senses, &converted.senses)?;
    write_file(&args.out_relations, &converted.relations)?;
    let _ = writeln!(
        err,
        "{} senses, {} relations, {} OMW rows skipped",
        converted.sense_rows, converted.relation_rows, converted.skipped
    );
    Ok(EXIT_OK)
}
