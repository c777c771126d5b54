//! How much of a treebank's noun and verb vocabulary the lexicon can tag.
//!
//! Lemmas are counted per part of speech, kept if their frequency is strictly
//! above the threshold, and bucketed by how many distinct topics the lexicon
//! gives them. Form counts are the summed frequencies of the lemmas in a
//! bucket.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::conllu::Sentence;
use crate::lexicon::{normalize_lemma, Lexicon, Pos, Topic};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreqEntry {
    pub lemma: String,
    pub pos: Pos,
    pub freq: u64,
}

/// Maps UPOS onto the counted classes. Proper nouns are left out.
fn counted_pos(upos: &str) -> Option<Pos> {
    match upos {
        "NOUN" => Some(Pos::Noun),
        "VERB" => Some(Pos::Verb),
        _ => None,
    }
}

/// Lemma frequencies, mergeable across files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyCounter {
    counts: HashMap<(String, Pos), u64>,
}

impl FrequencyCounter {
    pub fn new() -> Self {
        FrequencyCounter::default()
    }

    pub fn add(&mut self, sentences: &[Sentence], pos_set: &BTreeSet<Pos>) {
        for t in sentences.iter().flat_map(|s| &s.tokens) {
            let Some(pos) = counted_pos(&t.upos).filter(|p| pos_set.contains(p)) else {
                continue;
            };
            if t.lemma == "_" {
                continue;
            }
            *self
                .counts
                .entry((normalize_lemma(&t.lemma), pos))
                .or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: FrequencyCounter) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_default() += v;
        }
    }

    /// Entries with `freq > min_freq`, most frequent first, ties by lemma.
    pub fn entries(&self, min_freq: u64) -> Vec<FreqEntry> {
        let mut out: Vec<FreqEntry> = self
            .counts
            .iter()
            .filter(|(_, &f)| f > min_freq)
            .map(|((lemma, pos), &freq)| FreqEntry {
                lemma: lemma.clone(),
                pos: *pos,
                freq,
            })
            .collect();
        out.sort_by(|a, b| {
            b.freq
                .cmp(&a.freq)
                .then_with(|| a.lemma.cmp(&b.lemma))
                .then(a.pos.cmp(&b.pos))
        });
        out
    }
}

pub fn frequency_list(docs: &[Sentence], pos_set: &BTreeSet<Pos>, min_freq: u64) -> Vec<FreqEntry> {
    let mut counter = FrequencyCounter::new();
    counter.add(docs, pos_set);
    counter.entries(min_freq)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub lemmas: u64,
    pub forms: u64,
}

impl Counts {
    fn add(&mut self, freq: u64) {
        self.lemmas += 1;
        self.forms += freq;
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        self.lemmas += rhs.lemmas;
        self.forms += rhs.forms;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub threshold: u64,
    /// Lemmas (and their forms) carrying each topic; a lemma counts once per
    /// topic it has.
    pub per_topic: BTreeMap<Topic, Counts>,
    /// Per part of speech: number of distinct topics → lemmas and forms.
    pub by_topic_count: BTreeMap<Pos, BTreeMap<usize, Counts>>,
}

impl CoverageReport {
    pub fn is_empty(&self) -> bool {
        self.by_topic_count.is_empty()
    }

    pub fn max_topic_count(&self) -> Option<usize> {
        self.by_topic_count
            .values()
            .flat_map(|b| b.keys())
            .max()
            .copied()
    }

    pub fn bucket(&self, pos: Pos, k: usize) -> Counts {
        self.by_topic_count
            .get(&pos)
            .and_then(|b| b.get(&k))
            .copied()
            .unwrap_or_default()
    }

    pub fn untagged(&self, pos: Pos) -> Counts {
        self.bucket(pos, 0)
    }

    pub fn total(&self, pos: Pos) -> Counts {
        let mut c = Counts::default();
        for v in self
            .by_topic_count
            .get(&pos)
            .into_iter()
            .flat_map(|b| b.values())
        {
            c += *v;
        }
        c
    }

    /// Bucket `k` summed over parts of speech.
    pub fn bucket_all(&self, k: usize) -> Counts {
        let mut c = Counts::default();
        for pos in self.by_topic_count.keys() {
            c += self.bucket(*pos, k);
        }
        c
    }

    pub fn total_all(&self) -> Counts {
        let mut c = Counts::default();
        for pos in self.by_topic_count.keys() {
            c += self.total(*pos);
        }
        c
    }
}

/// Share of `part` in `whole`, in percent.
pub fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

pub fn coverage_report(freq: &[FreqEntry], lex: &Lexicon, threshold: u64) -> CoverageReport {
    let mut report = CoverageReport {
        threshold,
        ..CoverageReport::default()
    };
    for e in freq {
        let topics = lex.topics_of(&e.lemma, e.pos);
        report
            .by_topic_count
            .entry(e.pos)
            .or_default()
            .entry(topics.len())
            .or_default()
            .add(e.freq);
        for t in topics {
            report.per_topic.entry(t).or_default().add(e.freq);
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Tsv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown report format `{0}` (expected table, tsv or json)")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

pub fn render_report(r: &CoverageReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(r),
        ReportFormat::Tsv => render_tsv(r),
        ReportFormat::Json => render_json(r),
    }
}

const TSV_HEADER: &str = "section\tpos\tkey\tlemmas\tlemma_pct\tforms\tform_pct";

fn render_tsv(r: &CoverageReport) -> String {
    let mut out = format!("# min_freq = {}\n{}\n", r.threshold, TSV_HEADER);
    let max = r.max_topic_count().unwrap_or(0);
    let mut rows: Vec<(String, Counts, Counts)> = Vec::new();
    for pos in r.by_topic_count.keys() {
        for k in 0..=max {
            rows.push((
                format!("bucket\t{}\t{}", pos, k),
                r.bucket(*pos, k),
                r.total(*pos),
            ));
        }
    }
    if !r.is_empty() {
        for k in 0..=max {
            rows.push((
                format!("bucket\ttotal\t{}", k),
                r.bucket_all(k),
                r.total_all(),
            ));
        }
    }
    for (prefix, c, whole) in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.1}\t{}\t{:.1}",
            prefix,
            c.lemmas,
            percent(c.lemmas, whole.lemmas),
            c.forms,
            percent(c.forms, whole.forms)
        );
    }
    for (topic, c) in topics_by_size(r) {
        let whole = r.total(topic.pos());
        let _ = writeln!(
            out,
            "topic\t{}\t{}\t{}\t{:.1}\t{}\t{:.1}",
            topic.pos(),
            topic,
            c.lemmas,
            percent(c.lemmas, whole.lemmas),
            c.forms,
            percent(c.forms, whole.forms)
        );
    }
    out
}

/// Topics grouped by part of speech, most lemmas first.
fn topics_by_size(r: &CoverageReport) -> Vec<(Topic, Counts)> {
    let mut v: Vec<(Topic, Counts)> = r.per_topic.iter().map(|(t, c)| (*t, *c)).collect();
    v.sort_by(|(ta, ca), (tb, cb)| {
        ta.pos()
            .cmp(&tb.pos())
            .then(cb.lemmas.cmp(&ca.lemmas))
            .then(ta.name().cmp(tb.name()))
    });
    v
}

/// Reads back the `bucket` and `topic` rows of a TSV report. Total rows and
/// percentages are derived data and are ignored.
pub fn parse_report_tsv(text: &str) -> Result<CoverageReport, String> {
    let mut r = CoverageReport::default();
    let mut lines = text.lines().enumerate();
    let threshold = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("# min_freq = "))
        .ok_or("missing `# min_freq` line")?;
    r.threshold = threshold
        .parse()
        .map_err(|_| format!("bad threshold `{}`", threshold))?;
    match lines.next() {
        Some((_, TSV_HEADER)) => {}
        _ => return Err("missing header".into()),
    }
    for (i, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        let err = |m: &str| format!("line {}: {}", i + 1, m);
        if f.len() != 7 {
            return Err(err("expected 7 columns"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| err("bad count"));
        let counts = Counts {
            lemmas: num(f[3])?,
            forms: num(f[5])?,
        };
        match (f[0], f[1]) {
            ("bucket", "total") => {}
            ("bucket", pos) => {
                let pos: Pos = pos.parse().map_err(|e: String| err(&e))?;
                let k = f[2].parse::<usize>().map_err(|_| err("bad topic count"))?;
                if counts != Counts::default() {
                    r.by_topic_count.entry(pos).or_default().insert(k, counts);
                } else {
                    r.by_topic_count.entry(pos).or_default();
                }
            }
            ("topic", _) => {
                let topic: Topic = f[2]
                    .parse()
                    .map_err(|e: crate::lexicon::UnknownTopic| err(&e.to_string()))?;
                r.per_topic.insert(topic, counts);
            }
            _ => return Err(err("unknown section")),
        }
    }
    Ok(r)
}

fn render_table(r: &CoverageReport) -> String {
    let max = r.max_topic_count();
    let ks: Vec<usize> = max.map(|m| (0..=m).collect()).unwrap_or_default();
    let mut out = String::new();
    for (title, pick) in [
        (
            "Lemmas by number of topics",
            (|c: Counts| c.lemmas) as fn(Counts) -> u64,
        ),
        ("Forms by number of topics", |c: Counts| c.forms),
    ] {
        let _ = writeln!(out, "{} (frequency > {})", title, r.threshold);
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["POS".to_string()];
        header.extend(ks.iter().map(|k| k.to_string()));
        header.push("Total".into());
        rows.push(header);
        let cell = |part: u64, whole: u64| format!("{} ({:.1}%)", part, percent(part, whole));
        for pos in r.by_topic_count.keys() {
            let whole = pick(r.total(*pos));
            let mut row = vec![pos.to_string()];
            row.extend(ks.iter().map(|&k| cell(pick(r.bucket(*pos, k)), whole)));
            row.push(cell(whole, whole));
            rows.push(row);
        }
        if !r.is_empty() {
            let whole = pick(r.total_all());
            let mut row = vec!["Total".to_string()];
            row.extend(ks.iter().map(|&k| cell(pick(r.bucket_all(k)), whole)));
            row.push(cell(whole, whole));
            rows.push(row);
        }
        out.push_str(&aligned(&rows));
        out.push('\n');
    }
    let _ = writeln!(out, "Lemmas and forms per topic");
    let mut rows = vec![vec![
        "class".to_string(),
        "n. lemmas".into(),
        "n. forms".into(),
    ]];
    for (topic, c) in topics_by_size(r) {
        rows.push(vec![
            topic.to_string(),
            c.lemmas.to_string(),
            c.forms.to_string(),
        ]);
    }
    out.push_str(&aligned(&rows));
    out
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{:<w$}", s, w = widths[i]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Cell {
    count: u64,
    percent: f64,
}

#[derive(Serialize)]
struct JsonReport {
    min_freq: u64,
    lemmas_by_topic_count: BTreeMap<String, BTreeMap<usize, Cell>>,
    forms_by_topic_count: BTreeMap<String, BTreeMap<usize, Cell>>,
    per_topic: BTreeMap<String, Counts>,
}

fn render_json(r: &CoverageReport) -> String {
    let round = |x: f64| (x * 10.0).round() / 10.0;
    let mut lemmas = BTreeMap::new();
    let mut forms = BTreeMap::new();
    let max = r.max_topic_count().unwrap_or(0);
    let mut groups: Vec<(String, Option<Pos>)> = r
        .by_topic_count
        .keys()
        .map(|&pos| (pos.to_string(), Some(pos)))
        .collect();
    if !r.is_empty() {
        groups.push(("total".into(), None));
    }
    for (name, pos) in groups {
        let bucket = |k| pos.map_or_else(|| r.bucket_all(k), |p| r.bucket(p, k));
        let whole = pos.map_or_else(|| r.total_all(), |p| r.total(p));
        let l = lemmas.entry(name.clone()).or_insert_with(BTreeMap::new);
        let f = forms.entry(name).or_insert_with(BTreeMap::new);
        for k in 0..=max {
            let c = bucket(k);
            l.insert(
                k,
                Cell {
                    count: c.lemmas,
                    percent: round(percent(c.lemmas, whole.lemmas)),
                },
            );
            f.insert(
                k,
                Cell {
                    count: c.forms,
                    percent: round(percent(c.forms, whole.forms)),
                },
            );
        }
    }
    let report = JsonReport {
        min_freq: r.threshold,
        lemmas_by_topic_count: lemmas,
        forms_by_topic_count: forms,
        per_topic: r
            .per_topic
            .iter()
            .map(|(t, c)| (t.to_string(), *c))
            .collect(),
    };
    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::Token;

    fn nouns(counts: &[(&str, usize)]) -> Vec<Sentence> {
        counts
            .iter()
            .flat_map(|(lemma, n)| {
                (0..*n).map(move |_| {
                    Sentence::new(vec![Token::new(1, lemma, lemma, "NOUN", 0, "root")])
                })
            })
            .collect()
    }

    fn noun_verb() -> BTreeSet<Pos> {
        [Pos::Noun, Pos::Verb].into()
    }

    #[test]
    fn threshold_is_strict() {
        let docs = nouns(&[("paura", 6), ("schifo", 5)]);
        let list = frequency_list(&docs, &noun_verb(), 5);
        assert_eq!(
            list,
            vec![FreqEntry {
                lemma: "paura".into(),
                pos: Pos::Noun,
                freq: 6
            }]
        );
        assert!(frequency_list(&[], &noun_verb(), 5).is_empty());
    }

    #[test]
    fn pos_filtering_and_order() {
        let s = Sentence::new(vec![
            Token::new(1, "Roma", "Roma", "PROPN", 2, "nsubj"),
            Token::new(2, "dorme", "dormire", "VERB", 0, "root"),
            Token::new(3, "sonno", "Sonno", "NOUN", 2, "obj"),
            Token::new(4, "sonni", "sonno", "NOUN", 2, "obj"),
            Token::new(5, "e", "e", "CCONJ", 2, "cc"),
        ]);
        let list = frequency_list(std::slice::from_ref(&s), &noun_verb(), 0);
        let got: Vec<(&str, Pos, u64)> = list
            .iter()
            .map(|e| (e.lemma.as_str(), e.pos, e.freq))
            .collect();
        assert_eq!(
            got,
            vec![("sonno", Pos::Noun, 2), ("dormire", Pos::Verb, 1)]
        );
        let only_verbs = frequency_list(&[s], &[Pos::Verb].into(), 0);
        assert_eq!(only_verbs.len(), 1);
    }

    #[test]
    fn counter_merge_matches_single_pass() {
        let a = nouns(&[("x", 3), ("y", 1)]);
        let b = nouns(&[("x", 2), ("z", 4)]);
        let mut one = FrequencyCounter::new();
        one.add(&a, &noun_verb());
        let mut two = FrequencyCounter::new();
        two.add(&b, &noun_verb());
        one.merge(two);
        let all: Vec<Sentence> = a.into_iter().chain(b).collect();
        assert_eq!(one.entries(0), frequency_list(&all, &noun_verb(), 0));
    }

    fn fixture() -> CoverageReport {
        let lex = Lexicon::from_tsv(
            "b\tn\tB\tnoun.feeling\nc\tn\tC\tnoun.act\nd\tn\tD1\tnoun.act\nd\tn\tD2\tnoun.state\n",
            "lex",
            None,
        )
        .unwrap();
        let docs = nouns(&[("a", 10), ("b", 6), ("c", 7), ("d", 8)]);
        coverage_report(&frequency_list(&docs, &noun_verb(), 5), &lex, 5)
    }

    #[test]
    fn hand_computed_buckets() {
        let r = fixture();
        assert_eq!(
            r.bucket(Pos::Noun, 0),
            Counts {
                lemmas: 1,
                forms: 10
            }
        );
        assert_eq!(
            r.bucket(Pos::Noun, 1),
            Counts {
                lemmas: 2,
                forms: 13
            }
        );
        assert_eq!(
            r.bucket(Pos::Noun, 2),
            Counts {
                lemmas: 1,
                forms: 8
            }
        );
        assert_eq!(
            r.total(Pos::Noun),
            Counts {
                lemmas: 4,
                forms: 31
            }
        );
        assert_eq!(
            r.per_topic[&"noun.act".parse().unwrap()],
            Counts {
                lemmas: 2,
                forms: 15
            }
        );
        assert_eq!(
            r.per_topic[&"noun.state".parse().unwrap()],
            Counts {
                lemmas: 1,
                forms: 8
            }
        );
        assert_eq!(format!("{:.1}", percent(1, 4)), "25.0");
        assert_eq!(format!("{:.1}", percent(10, 31)), "32.3");
    }

    #[test]
    fn all_untagged() {
        let lex = Lexicon::from_tsv("zzz\tn\tZ\tnoun.act\n", "lex", None).unwrap();
        let docs = nouns(&[("a", 3), ("b", 2)]);
        let r = coverage_report(&frequency_list(&docs, &noun_verb(), 0), &lex, 0);
        assert_eq!(
            percent(r.untagged(Pos::Noun).lemmas, r.total(Pos::Noun).lemmas),
            100.0
        );
        assert_eq!(
            percent(r.untagged(Pos::Noun).forms, r.total(Pos::Noun).forms),
            100.0
        );
    }

    #[test]
    fn tsv_round_trip() {
        let r = fixture();
        let text = render_report(&r, ReportFormat::Tsv);
        assert_eq!(parse_report_tsv(&text).unwrap(), r);
        assert!(text.contains("bucket\tnoun\t0\t1\t25.0\t10\t32.3\n"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = coverage_report(&[], &Lexicon::empty(), 0);
        assert_eq!(
            render_report(&r, ReportFormat::Tsv),
            format!("# min_freq = 0\n{}\n", TSV_HEADER)
        );
        let table = render_report(&r, ReportFormat::Table);
        assert_eq!(
            table,
            "Lemmas by number of topics (frequency > 0)\nPOS  Total\n\nForms by number of topics (frequency > 0)\nPOS  Total\n\nLemmas and forms per topic\nclass  n. lemmas  n. forms\n"
        );
        assert_eq!(
            parse_report_tsv(&render_report(&r, ReportFormat::Tsv)).unwrap(),
            r
        );
    }

    #[test]
    fn json_output() {
        let v: serde_json::Value =
            serde_json::from_str(&render_report(&fixture(), ReportFormat::Json)).unwrap();
        assert_eq!(v["min_freq"], 5);
        assert_eq!(v["lemmas_by_topic_count"]["noun"]["1"]["count"], 2);
        assert_eq!(v["forms_by_topic_count"]["total"]["0"]["percent"], 32.3);
        assert_eq!(v["per_topic"]["noun.act"]["forms"], 15);
    }

    #[test]
    fn format_names() {
        assert_eq!("tsv".parse::<ReportFormat>().unwrap(), ReportFormat::Tsv);
        assert_eq!(
            "xml".parse::<ReportFormat>().unwrap_err().to_string(),
            "unknown report format `xml` (expected table, tsv or json)"
        );
    }
}
