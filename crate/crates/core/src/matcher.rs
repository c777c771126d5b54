//! Finding construction instances in parsed sentences.
//!
//! A match assigns each pattern node a distinct syntactic word. Nodes are
//! tried in row order and constraints are checked as soon as both of their
//! endpoints are fixed. Optional nodes are attached whenever they can be: an
//! assignment is only reported if no valid assignment extends it with more
//! optional nodes.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::compiler::{NodeConstraint, Pattern};
use crate::conllc::{Adjacency, Field, Scope};
use crate::conllu::{Sentence, Token};
use crate::lexicon::{Lexicon, Pos, Topic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopicError {
    #[error("unknown topic `{0}`")]
    Unknown(String),
    #[error("no topic inventory for this POS ({0})")]
    NoInventory(String),
    #[error("bare topic `{0}` needs a NOUN, PROPN or VERB slot to be qualified")]
    NeedsUpos(String),
    #[error("topic {topic} does not fit a {upos} slot")]
    PosMismatch { topic: Topic, upos: String },
}

/// Qualifies an OntoClass value: `feeling` on a NOUN slot is `noun.feeling`.
/// Already qualified values are checked against the slot's UPOS.
pub fn normalize_topic(value: &str, upos: Option<&str>) -> Result<Topic, TopicError> {
    let pos = match upos {
        Some(u) => Some(Pos::from_upos(u).ok_or_else(|| TopicError::NoInventory(u.to_string()))?),
        None => None,
    };
    if value.contains('.') {
        let topic: Topic = value
            .parse()
            .map_err(|_| TopicError::Unknown(value.to_string()))?;
        match (pos, upos) {
            (Some(p), Some(u)) if p != topic.pos() => Err(TopicError::PosMismatch {
                topic,
                upos: u.to_string(),
            }),
            _ => Ok(topic),
        }
    } else {
        let pos = pos.ok_or_else(|| TopicError::NeedsUpos(value.to_string()))?;
        Topic::with_name(pos, value)
            .ok_or_else(|| TopicError::Unknown(format!("{}.{}", pos, value)))
    }
}

/// What an OntoClass test does with a lemma the lexicon does not know.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MissingLemmaPolicy {
    #[default]
    Fail,
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    /// Evaluate OntoClass tests and lemma relations. Off, only structural
    /// constraints and plain identities are checked.
    pub semantic_filtering: bool,
    pub missing_lemma_policy: MissingLemmaPolicy,
    pub identity_case_fold: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            semantic_filtering: true,
            missing_lemma_policy: MissingLemmaPolicy::Fail,
            identity_case_fold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Match {
    /// Index of the sentence within its document.
    pub sentence: usize,
    /// Token id per pattern node; `None` for omitted optional nodes.
    pub assignment: Vec<Option<usize>>,
}

impl Match {
    pub fn token(&self, node: usize) -> Option<usize> {
        self.assignment.get(node).copied().flatten()
    }

    pub fn omitted(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_none())
            .map(|(i, _)| i)
    }
}

pub struct Matcher<'a> {
    pattern: &'a Pattern,
    lexicon: &'a Lexicon,
    options: MatchOptions,
}

impl<'a> Matcher<'a> {
    pub fn new(pattern: &'a Pattern, lexicon: &'a Lexicon, options: MatchOptions) -> Self {
        Matcher {
            pattern,
            lexicon,
            options,
        }
    }

    pub fn match_sentence(&self, index: usize, sentence: &Sentence) -> Vec<Match> {
        let p = self.pattern;
        let candidates: Vec<Vec<&Token>> = p
            .nodes
            .iter()
            .map(|n| {
                sentence
                    .tokens
                    .iter()
                    .filter(|t| self.accepts(n, t, sentence))
                    .collect()
            })
            .collect();
        if p.nodes
            .iter()
            .zip(&candidates)
            .any(|(n, c)| n.required && c.is_empty())
        {
            return Vec::new();
        }
        let mut search = Search {
            matcher: self,
            sentence,
            candidates: &candidates,
            assignment: vec![None; p.nodes.len()],
            used: vec![false; sentence.tokens.len() + 1],
            found: Vec::new(),
        };
        search.extend(0, None);
        let required: Vec<bool> = p.nodes.iter().map(|n| n.required).collect();
        let mut found = maximal(search.found, &required);
        found.sort_by_key(|a| (a[p.root], a.clone()));
        found
            .into_iter()
            .map(|assignment| Match {
                sentence: index,
                assignment,
            })
            .collect()
    }

    /// Per-sentence results concatenated in document order.
    pub fn match_corpus(&self, sentences: &[Sentence]) -> Vec<Match> {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, s)| self.match_sentence(i, s))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    fn accepts(&self, n: &NodeConstraint, t: &Token, s: &Sentence) -> bool {
        let eq = |c: &Option<String>, v: &str| c.as_deref().is_none_or(|c| c == v);
        if !(eq(&n.form, &t.form)
            && eq(&n.lemma, &t.lemma)
            && eq(&n.upos, &t.upos)
            && t.feats.contains_all(&n.feats))
        {
            return false;
        }
        for w in &n.without {
            let excluded = match w.scope {
                Scope::Node => field_value(t, &w.field) == Some(w.value.as_str()),
                Scope::Children => s
                    .children(t.id)
                    .any(|c| field_value(c, &w.field) == Some(w.value.as_str())),
            };
            if excluded {
                return false;
            }
        }
        if let (true, Some(topic)) = (self.options.semantic_filtering, n.topic) {
            let pos = n.lexical_pos().unwrap_or(topic.pos());
            if self.lexicon.synsets_of(&t.lemma, pos).is_empty() {
                return self.options.missing_lemma_policy == MissingLemmaPolicy::Pass;
            }
            if !self.lexicon.topics_of(&t.lemma, pos).contains(&topic) {
                return false;
            }
        }
        true
    }

    /// Checks every constraint between node `k` (token `t`) and nodes before
    /// it in row order.
    fn compatible(&self, k: usize, t: &Token, assignment: &[Option<usize>], s: &Sentence) -> bool {
        let p = self.pattern;
        for e in &p.edges {
            let (head, dep) = match (e.head, e.dependent) {
                (h, d) if d == k && h < k => (assignment[h], Some(t.id)),
                (h, d) if h == k && d < k => (Some(t.id), assignment[d]),
                _ => continue,
            };
            let (Some(head), Some(dep)) = (head, dep) else {
                continue;
            };
            let dep = s.token(dep).expect("assigned token");
            if dep.head != head || e.deprel.as_deref().is_some_and(|r| r != dep.deprel) {
                return false;
            }
        }
        for (i, node) in p.nodes.iter().enumerate().take(k + 1) {
            for link in &node.identity {
                let other = match (i, link.target) {
                    (i, j) if i == k && j < k => j,
                    (i, j) if j == k && i < k => i,
                    _ => continue,
                };
                let Some(other_tok) = assignment[other].and_then(|id| s.token(id)) else {
                    continue;
                };
                let (this, target) = if i == k {
                    (t, other_tok)
                } else {
                    (other_tok, t)
                };
                if !self.identity_holds(
                    &p.nodes[i],
                    this,
                    &p.nodes[link.target],
                    target,
                    &link.field,
                    link.relation.as_deref(),
                ) {
                    return false;
                }
            }
        }
        true
    }

    fn identity_holds(
        &self,
        this_node: &NodeConstraint,
        this: &Token,
        target_node: &NodeConstraint,
        target: &Token,
        field: &Field,
        relation: Option<&str>,
    ) -> bool {
        match relation {
            Some(rel) => {
                if !self.options.semantic_filtering {
                    return true;
                }
                let pos_of = |n: &NodeConstraint, t: &Token| {
                    n.lexical_pos().or_else(|| Pos::from_upos(&t.upos))
                };
                match (pos_of(this_node, this), pos_of(target_node, target)) {
                    (Some(p1), Some(p2)) => {
                        self.lexicon
                            .has_relation(&this.lemma, p1, rel, &target.lemma, p2)
                    }
                    _ => false,
                }
            }
            None => match (field_value(this, field), field_value(target, field)) {
                (Some(a), Some(b)) => {
                    let norm = |v: &str| {
                        let v: String = v.nfc().collect();
                        if self.options.identity_case_fold {
                            v.to_lowercase()
                        } else {
                            v
                        }
                    };
                    norm(a) == norm(b)
                }
                _ => false,
            },
        }
    }
}

fn field_value<'t>(t: &'t Token, field: &Field) -> Option<&'t str> {
    match field {
        Field::Form => Some(&t.form),
        Field::Lemma => Some(&t.lemma),
        Field::Upos => Some(&t.upos),
        Field::Deprel => Some(&t.deprel),
        Field::Feat(name) => t.feats.get(name),
    }
}

struct Search<'m, 's> {
    matcher: &'m Matcher<'m>,
    sentence: &'s Sentence,
    candidates: &'s [Vec<&'s Token>],
    assignment: Vec<Option<usize>>,
    used: Vec<bool>,
    found: Vec<Vec<Option<usize>>>,
}

impl Search<'_, '_> {
    /// `last` is the token of the closest earlier assigned node.
    fn extend(&mut self, k: usize, last: Option<usize>) {
        let nodes = &self.matcher.pattern.nodes;
        if k == nodes.len() {
            self.found.push(self.assignment.clone());
            return;
        }
        let node = &nodes[k];
        for t in &self.candidates[k] {
            if self.used[t.id] {
                continue;
            }
            if let Some(prev) = last {
                if t.id <= prev || (node.adjacency == Adjacency::Strict && t.id != prev + 1) {
                    continue;
                }
            }
            if !self
                .matcher
                .compatible(k, t, &self.assignment, self.sentence)
            {
                continue;
            }
            self.used[t.id] = true;
            self.assignment[k] = Some(t.id);
            self.extend(k + 1, Some(t.id));
            self.assignment[k] = None;
            self.used[t.id] = false;
        }
        if !node.required {
            self.extend(k + 1, last);
        }
    }
}

/// Drops assignments that some other assignment extends with more optional
/// nodes.
fn maximal(found: Vec<Vec<Option<usize>>>, required: &[bool]) -> Vec<Vec<Option<usize>>> {
    if required.iter().all(|&r| r) {
        return found;
    }
    let mut extended: HashSet<Vec<Option<usize>>> = HashSet::new();
    for a in &found {
        let optional: Vec<usize> = (0..a.len())
            .filter(|&i| !required[i] && a[i].is_some())
            .collect();
        // each way of dropping some of the attached optional nodes yields an
        // assignment that `a` extends
        for mask in 1..(1u64 << optional.len()) {
            let mut restricted = a.clone();
            for (bit, &i) in optional.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    restricted[i] = None;
                }
            }
            extended.insert(restricted);
        }
    }
    found
        .into_iter()
        .filter(|a| !extended.contains(a))
        .collect()
}

pub fn match_sentence(p: &Pattern, s: &Sentence, lex: &Lexicon, opts: MatchOptions) -> Vec<Match> {
    Matcher::new(p, lex, opts).match_sentence(0, s)
}

pub fn match_corpus(
    p: &Pattern,
    docs: &[Sentence],
    lex: &Lexicon,
    opts: MatchOptions,
) -> Vec<Match> {
    Matcher::new(p, lex, opts).match_corpus(docs)
}

pub const ANNOTATION_KEY: &str = "Cxn";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error("construction {cxn_id} occurrence {occurrence} is already annotated in this sentence")]
    Collision { cxn_id: String, occurrence: usize },
    #[error("match refers to token {0}, which is not in the sentence")]
    MissingToken(usize),
    #[error("construction id `{0}` cannot be written into MISC")]
    BadId(String),
    #[error("occurrence numbers start at 1")]
    ZeroOccurrence,
}

/// One `Cxn=<id>:<occurrence>:<row>` entry read back from MISC.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annotation {
    pub cxn_id: String,
    pub occurrence: usize,
    pub row: String,
    pub token: usize,
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.cxn_id, self.occurrence, self.row)
    }
}

/// Copies `s`, adding a `Cxn` MISC entry to every token assigned by `m`.
/// Existing `Cxn` values are extended with a comma.
pub fn annotate(
    s: &Sentence,
    p: &Pattern,
    m: &Match,
    occurrence: usize,
) -> Result<Sentence, AnnotateError> {
    let cxn_id = &p.cxn_id;
    if cxn_id.is_empty()
        || cxn_id.contains(['|', ',', '=', ':'])
        || cxn_id.contains(char::is_whitespace)
    {
        return Err(AnnotateError::BadId(cxn_id.clone()));
    }
    if occurrence == 0 {
        return Err(AnnotateError::ZeroOccurrence);
    }
    if annotations(s)
        .iter()
        .any(|a| a.cxn_id == *cxn_id && a.occurrence == occurrence)
    {
        return Err(AnnotateError::Collision {
            cxn_id: cxn_id.clone(),
            occurrence,
        });
    }
    let mut out = s.clone();
    for (node, token) in m.assignment.iter().enumerate() {
        let Some(id) = *token else { continue };
        let tok = id
            .checked_sub(1)
            .and_then(|i| out.tokens.get_mut(i))
            .ok_or(AnnotateError::MissingToken(id))?;
        let entry = format!("{}:{}:{}", cxn_id, occurrence, p.nodes[node].row_id);
        let value = match tok.misc.get(ANNOTATION_KEY) {
            Some(existing) if !existing.is_empty() => format!("{},{}", existing, entry),
            _ => entry,
        };
        tok.misc.set(ANNOTATION_KEY, value);
    }
    Ok(out)
}

/// Reads back every `Cxn` entry in a sentence, in token order.
pub fn annotations(s: &Sentence) -> Vec<Annotation> {
    let mut out = Vec::new();
    for t in &s.tokens {
        let Some(value) = t.misc.get(ANNOTATION_KEY) else {
            continue;
        };
        for entry in value.split(',') {
            let mut parts = entry.rsplitn(3, ':');
            let (Some(row), Some(occ), Some(cxn_id)) = (parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            if let Ok(occurrence) = occ.parse() {
                out.push(Annotation {
                    cxn_id: cxn_id.to_string(),
                    occurrence,
                    row: row.to_string(),
                    token: t.id,
                });
            }
        }
    }
    out
}
