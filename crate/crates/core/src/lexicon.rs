//! Lemma → synset → topic lookups and typed synset relations.
//!
//! The on-disk contract is a pair of TSV files:
//!
//! ```text
//! senses:    lemma <TAB> n|v <TAB> synset-id <TAB> topic
//! relations: synset-id <TAB> relation-name <TAB> synset-id
//! ```
//!
//! Topics are the WordNet lexicographer-file names, restricted to the noun and
//! verb inventories. `convert` builds the pair from OMW tab files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub mod convert;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
}

impl Pos {
    /// NOUN and PROPN map to nouns, VERB to verbs; nothing else has a topic
    /// inventory.
    pub fn from_upos(upos: &str) -> Option<Pos> {
        match upos {
            "NOUN" | "PROPN" => Some(Pos::Noun),
            "VERB" => Some(Pos::Verb),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" | "noun" => Ok(Pos::Noun),
            "v" | "verb" => Ok(Pos::Verb),
            other => Err(format!(
                "unknown part of speech `{}` (expected n or v)",
                other
            )),
        }
    }
}

const NOUN_TOPICS: [&str; 26] = [
    "Tops",
    "act",
    "animal",
    "artifact",
    "attribute",
    "body",
    "cognition",
    "communication",
    "event",
    "feeling",
    "food",
    "group",
    "location",
    "motive",
    "object",
    "person",
    "phenomenon",
    "plant",
    "possession",
    "process",
    "quantity",
    "relation",
    "shape",
    "state",
    "substance",
    "time",
];

const VERB_TOPICS: [&str; 15] = [
    "body",
    "change",
    "cognition",
    "communication",
    "competition",
    "consumption",
    "contact",
    "creation",
    "emotion",
    "motion",
    "perception",
    "possession",
    "social",
    "stative",
    "weather",
];

/// One of the 26 noun or 15 verb lexicographer-file topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Topic {
    pos: Pos,
    index: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown topic `{0}`")]
pub struct UnknownTopic(pub String);

impl Topic {
    pub fn all() -> impl Iterator<Item = Topic> {
        let nouns = (0..NOUN_TOPICS.len()).map(|i| Topic {
            pos: Pos::Noun,
            index: i as u8,
        });
        let verbs = (0..VERB_TOPICS.len()).map(|i| Topic {
            pos: Pos::Verb,
            index: i as u8,
        });
        nouns.chain(verbs)
    }

    /// Looks up a bare topic name (`feeling`) within one part of speech.
    /// Matching ignores case so `tops` finds `noun.Tops`.
    pub fn with_name(pos: Pos, name: &str) -> Option<Topic> {
        let table: &[&str] = match pos {
            Pos::Noun => &NOUN_TOPICS,
            Pos::Verb => &VERB_TOPICS,
        };
        table
            .iter()
            .position(|t| t.eq_ignore_ascii_case(name))
            .map(|i| Topic {
                pos,
                index: i as u8,
            })
    }

    pub fn pos(self) -> Pos {
        self.pos
    }

    pub fn name(self) -> &'static str {
        match self.pos {
            Pos::Noun => NOUN_TOPICS[self.index as usize],
            Pos::Verb => VERB_TOPICS[self.index as usize],
        }
    }
}

impl FromStr for Topic {
    type Err = UnknownTopic;

    /// Parses a qualified topic such as `noun.feeling`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (class, name) = s
            .split_once('.')
            .ok_or_else(|| UnknownTopic(s.to_string()))?;
        let pos = match class {
            "noun" => Pos::Noun,
            "verb" => Pos::Verb,
            _ => return Err(UnknownTopic(s.to_string())),
        };
        Topic::with_name(pos, name).ok_or_else(|| UnknownTopic(s.to_string()))
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.pos, self.name())
    }
}

impl Serialize for Topic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId(String);

impl SynsetId {
    pub fn new(id: impl Into<String>) -> Self {
        SynsetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Relations stored in both directions at load time.
pub const SYMMETRIC_RELATIONS: [&str; 2] = ["antonym", "similar"];

/// NFC, lowercase, underscores as spaces. Applied to every lemma on both the
/// lexicon and the treebank side.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma
        .nfc()
        .collect::<String>()
        .to_lowercase()
        .replace('_', " ")
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: empty lexicon")]
    Empty { path: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub senses: usize,
    pub synsets: usize,
    pub relations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    senses: BTreeMap<(String, Pos), BTreeSet<SynsetId>>,
    topics: BTreeMap<SynsetId, Topic>,
    relations: BTreeMap<(SynsetId, String), BTreeSet<SynsetId>>,
}

static NO_SYNSETS: BTreeSet<SynsetId> = BTreeSet::new();

impl Lexicon {
    /// An empty lexicon, for runs that do not consult WordNet.
    pub fn empty() -> Self {
        Lexicon::default()
    }

    pub fn load(senses: &Path, relations: Option<&Path>) -> Result<Self, LexiconError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| LexiconError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let sense_text = read(senses)?;
        let relation_text = relations.map(read).transpose()?;
        let relation_name = relations.map(|p| p.display().to_string());
        Lexicon::from_tsv(
            &sense_text,
            &senses.display().to_string(),
            relation_text.as_deref().zip(relation_name.as_deref()),
        )
    }

    /// Builds a lexicon from TSV text; `relations` pairs the text with a name
    /// used in diagnostics.
    pub fn from_tsv(
        senses: &str,
        senses_name: &str,
        relations: Option<(&str, &str)>,
    ) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (line, fields) in tsv_rows(senses) {
            let malformed = |message: String| LexiconError::Malformed {
                path: senses_name.to_string(),
                line,
                message,
            };
            let [lemma, pos, synset, topic] = fields[..] else {
                return Err(malformed(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            if lemma.is_empty() || synset.is_empty() {
                return Err(malformed("empty lemma or synset id".into()));
            }
            let pos: Pos = pos.parse().map_err(malformed)?;
            let topic: Topic = topic
                .parse()
                .map_err(|e: UnknownTopic| malformed(e.to_string()))?;
            if topic.pos() != pos {
                return Err(malformed(format!(
                    "topic {} does not belong to part of speech {}",
                    topic, pos
                )));
            }
            let synset = SynsetId::new(synset);
            match lex.topics.get(&synset) {
                Some(existing) if *existing != topic => {
                    return Err(malformed(format!(
                        "synset {} already has topic {}, cannot also be {}",
                        synset, existing, topic
                    )))
                }
                _ => {
                    lex.topics.insert(synset.clone(), topic);
                }
            }
            lex.senses
                .entry((normalize_lemma(lemma), pos))
                .or_default()
                .insert(synset);
        }
        if lex.senses.is_empty() {
            return Err(LexiconError::Empty {
                path: senses_name.to_string(),
            });
        }
        if let Some((text, name)) = relations {
            for (line, fields) in tsv_rows(text) {
                let malformed = |message: String| LexiconError::Malformed {
                    path: name.to_string(),
                    line,
                    message,
                };
                let [source, relation, target] = fields[..] else {
                    return Err(malformed(format!(
                        "expected 3 tab-separated fields, found {}",
                        fields.len()
                    )));
                };
                if relation.is_empty() {
                    return Err(malformed("empty relation name".into()));
                }
                let source = SynsetId::new(source);
                let target = SynsetId::new(target);
                for s in [&source, &target] {
                    if !lex.topics.contains_key(s) {
                        return Err(malformed(format!("unknown synset {}", s)));
                    }
                }
                lex.add_relation(source, relation, target);
            }
        }
        Ok(lex)
    }

    fn add_relation(&mut self, source: SynsetId, relation: &str, target: SynsetId) {
        if SYMMETRIC_RELATIONS.contains(&relation) {
            self.relations
                .entry((target.clone(), relation.to_string()))
                .or_default()
                .insert(source.clone());
        }
        self.relations
            .entry((source, relation.to_string()))
            .or_default()
            .insert(target);
    }

    pub fn stats(&self) -> LoadStats {
        LoadStats {
            senses: self.senses.values().map(BTreeSet::len).sum(),
            synsets: self.topics.len(),
            relations: self.relations.values().map(BTreeSet::len).sum(),
        }
    }

    pub fn synsets_of(&self, lemma: &str, pos: Pos) -> &BTreeSet<SynsetId> {
        self.senses
            .get(&(normalize_lemma(lemma), pos))
            .unwrap_or(&NO_SYNSETS)
    }

    pub fn topic(&self, synset: &SynsetId) -> Option<Topic> {
        self.topics.get(synset).copied()
    }

    pub fn topics_of(&self, lemma: &str, pos: Pos) -> BTreeSet<Topic> {
        self.synsets_of(lemma, pos)
            .iter()
            .filter_map(|s| self.topic(s))
            .collect()
    }

    pub fn related(&self, synset: &SynsetId, relation: &str) -> &BTreeSet<SynsetId> {
        self.relations
            .get(&(synset.clone(), relation.to_string()))
            .unwrap_or(&NO_SYNSETS)
    }

    /// Any-sense check: some synset of the first lemma points to some synset of
    /// the second via `relation`.
    pub fn has_relation(
        &self,
        lemma1: &str,
        pos1: Pos,
        relation: &str,
        lemma2: &str,
        pos2: Pos,
    ) -> bool {
        let targets = self.synsets_of(lemma2, pos2);
        if targets.is_empty() {
            return false;
        }
        self.synsets_of(lemma1, pos1)
            .iter()
            .any(|s| !self.related(s, relation).is_disjoint(targets))
    }

    /// All (lemma, pos) keys, normalized.
    pub fn lemmas(&self) -> impl Iterator<Item = (&str, Pos)> {
        self.senses.keys().map(|(l, p)| (l.as_str(), *p))
    }
}

/// Non-blank, non-comment lines split on tabs, with 1-based line numbers.
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split('\t').collect()))
}
