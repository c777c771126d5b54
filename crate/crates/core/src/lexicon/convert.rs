//! Best-effort conversion of OMW tab-format data into the sense/relation TSV
//! pair read by [`Lexicon`](super::Lexicon).
//!
//! Synset topics come either from a two-column `synset<TAB>lexname` table or
//! from Princeton `data.noun`/`data.verb` files plus the `lexnames` index.
//! Relations are only available through the Princeton data files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use super::{Pos, Topic};

#[derive(Debug, Error)]
#[error("{source_name}:{line}: {message}")]
pub struct ConvertError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

/// Pointer symbols carried over from Princeton data files, with the relation
/// names they become.
const POINTERS: [(&str, &str); 11] = [
    ("!", "antonym"),
    ("&", "similar"),
    ("@", "hypernym"),
    ("@i", "instance_hypernym"),
    ("~", "hyponym"),
    ("~i", "instance_hyponym"),
    ("+", "derivation"),
    ("*", "entailment"),
    (">", "cause"),
    ("^", "also"),
    ("$", "verb_group"),
];

#[derive(Debug, Default)]
pub struct Converter {
    topics: BTreeMap<String, Topic>,
    relations: BTreeSet<(String, String, String)>,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Converted {
    pub senses: String,
    pub relations: String,
    pub sense_rows: usize,
    pub relation_rows: usize,
    /// OMW lemma rows dropped because their synset is not a noun/verb or has
    /// no known topic.
    pub skipped: usize,
}

/// Parses a Princeton `lexnames` file (`NN<TAB>pos.name<TAB>syntactic-category`).
pub fn read_lexnames(text: &str, source_name: &str) -> Result<BTreeMap<u32, String>, ConvertError> {
    let mut names = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let (Some(num), Some(name)) = (fields.next(), fields.next()) else {
            continue;
        };
        let num = num.parse::<u32>().map_err(|_| ConvertError {
            source_name: source_name.to_string(),
            line: i + 1,
            message: format!("lexfile number `{}` is not an integer", num),
        })?;
        names.insert(num, name.to_string());
    }
    Ok(names)
}

impl Converter {
    pub fn new() -> Self {
        Converter::default()
    }

    /// Reads `synset<TAB>lexname` rows. Lexnames outside the noun/verb
    /// inventories are ignored.
    pub fn add_synset_topics(&mut self, text: &str, source_name: &str) -> Result<(), ConvertError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((synset, lexname)) = line.split_once('\t') else {
                return Err(ConvertError {
                    source_name: source_name.to_string(),
                    line: i + 1,
                    message: "expected synset<TAB>lexname".into(),
                });
            };
            if let Ok(topic) = lexname.trim().parse::<Topic>() {
                self.topics.insert(synset.trim().to_string(), topic);
            }
        }
        Ok(())
    }

    /// Reads a Princeton `data.*` file: each synset line yields its topic
    /// (through `lexnames`) and its pointers.
    pub fn add_wordnet_data(
        &mut self,
        text: &str,
        lexnames: &BTreeMap<u32, String>,
        source_name: &str,
    ) -> Result<(), ConvertError> {
        for (i, line) in text.lines().enumerate() {
            // license header lines start with two spaces
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let err = |message: String| ConvertError {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let data = line.split('|').next().unwrap_or("");
            let f: Vec<&str> = data.split_whitespace().collect();
            if f.len() < 4 {
                return Err(err("truncated synset line".into()));
            }
            let synset = format!("{}-{}", f[0], f[2]);
            let lexfile = f[1]
                .parse::<u32>()
                .map_err(|_| err(format!("bad lexfile number `{}`", f[1])))?;
            let word_count = usize::from_str_radix(f[3], 16)
                .map_err(|_| err(format!("bad word count `{}`", f[3])))?;
            let ptr_at = 4 + 2 * word_count;
            let ptr_count = f
                .get(ptr_at)
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| err("missing pointer count".into()))?;
            if f.len() < ptr_at + 1 + 4 * ptr_count {
                return Err(err("truncated pointer list".into()));
            }
            if let Some(topic) = lexnames.get(&lexfile).and_then(|n| n.parse::<Topic>().ok()) {
                self.topics.insert(synset.clone(), topic);
            }
            for p in f[ptr_at + 1..ptr_at + 1 + 4 * ptr_count].chunks(4) {
                if let Some((_, name)) = POINTERS.iter().find(|(sym, _)| *sym == p[0]) {
                    let target = format!("{}-{}", p[1], p[2]);
                    self.relations
                        .insert((synset.clone(), name.to_string(), target));
                }
            }
        }
        Ok(())
    }

    /// Converts OMW tab rows (`synset<TAB>lang:lemma<TAB>lemma`) into the TSV
    /// pair. Relations are kept only between synsets that received a lemma.
    pub fn convert(&self, omw_tab: &str) -> Converted {
        let mut senses = BTreeSet::new();
        let mut skipped = 0;
        for line in omw_tab.lines() {
            if line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() < 3 || !(f[1] == "lemma" || f[1].ends_with(":lemma")) {
                continue;
            }
            let (synset, lemma) = (f[0].trim(), f[2].trim());
            let pos = match synset.rsplit_once('-').map(|(_, p)| p) {
                Some("n") => Pos::Noun,
                Some("v") => Pos::Verb,
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            match self.topics.get(synset) {
                Some(topic) if topic.pos() == pos && !lemma.is_empty() => {
                    senses.insert((lemma.to_string(), pos, synset.to_string(), *topic));
                }
                _ => skipped += 1,
            }
        }
        let known: BTreeSet<&str> = senses.iter().map(|(_, _, s, _)| s.as_str()).collect();
        let mut out = Converted {
            skipped,
            ..Converted::default()
        };
        for (lemma, pos, synset, topic) in &senses {
            let _ = writeln!(
                out.senses,
                "{}\t{}\t{}\t{}",
                lemma,
                pos.letter(),
                synset,
                topic
            );
            out.sense_rows += 1;
        }
        for (source, name, target) in &self.relations {
            if known.contains(source.as_str()) && known.contains(target.as_str()) {
                let _ = writeln!(out.relations, "{}\t{}\t{}", source, name, target);
                out.relation_rows += 1;
            }
        }
        out
    }
}
