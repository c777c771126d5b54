//! Generators and a brute-force reference matcher shared by the integration
//! tests. The reference works from its own row description and re-checks
//! every constraint naively; it never goes through the compiler.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use cxnkit::conllu::{Comment, Features, Misc, OpaqueRow, Sentence, Token};
use cxnkit::lexicon::Lexicon;
use cxnkit::matcher::{MatchOptions, MissingLemmaPolicy};
use proptest::prelude::*;
use unicode_normalization::UnicodeNormalization;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{}: {}", name, e))
}

// ---------------------------------------------------------------------------
// Random lexicon

pub const LEX_LEMMAS: [&str; 3] = ["x", "y", "z"];
pub const NOUN_TOPICS: [&str; 3] = ["noun.feeling", "noun.act", "noun.state"];
pub const VERB_TOPICS: [&str; 2] = ["verb.motion", "verb.body"];
pub const RELATIONS: [&str; 3] = ["antonym", "similar", "hypernym"];

#[derive(Debug, Clone)]
pub struct GenLexicon {
    /// (lemma, pos letter, synset, topic)
    pub senses: Vec<(String, char, String, String)>,
    /// (source synset, relation, target synset)
    pub relations: Vec<(String, String, String)>,
}

impl GenLexicon {
    pub fn senses_tsv(&self) -> String {
        self.senses
            .iter()
            .map(|(l, p, s, t)| format!("{}\t{}\t{}\t{}\n", l, p, s, t))
            .collect()
    }

    pub fn relations_tsv(&self) -> String {
        self.relations
            .iter()
            .map(|(a, r, b)| format!("{}\t{}\t{}\n", a, r, b))
            .collect()
    }

    pub fn build(&self) -> Lexicon {
        Lexicon::from_tsv(
            &self.senses_tsv(),
            "senses",
            Some((&self.relations_tsv(), "relations")),
        )
        .expect("generated lexicon loads")
    }

    fn synsets(&self, lemma: &str, pos: char) -> Vec<&(String, char, String, String)> {
        let lemma = lemma.to_lowercase();
        self.senses
            .iter()
            .filter(|(l, p, _, _)| *l == lemma && *p == pos)
            .collect()
    }

    fn related(&self, lemma1: &str, pos1: char, rel: &str, lemma2: &str, pos2: char) -> bool {
        let symmetric = rel == "antonym" || rel == "similar";
        self.synsets(lemma1, pos1).iter().any(|(_, _, s1, _)| {
            self.synsets(lemma2, pos2).iter().any(|(_, _, s2, _)| {
                self.relations.iter().any(|(a, r, b)| {
                    r == rel && ((a == s1 && b == s2) || (symmetric && a == s2 && b == s1))
                })
            })
        })
    }
}

pub fn lexicon_strategy() -> impl Strategy<Value = GenLexicon> {
    let sense_counts =
        proptest::collection::vec((0usize..3, proptest::collection::vec(0usize..3, 2)), 6);
    (
        sense_counts,
        proptest::collection::vec((0usize..16, 0usize..3, 0usize..16), 0..6),
    )
        .prop_map(|(counts, rels)| {
            let mut senses = vec![(
                "q".to_string(),
                'n',
                "q-n-0".to_string(),
                "noun.act".to_string(),
            )];
            for (slot, (k, topics)) in counts.into_iter().enumerate() {
                let lemma = LEX_LEMMAS[slot / 2];
                let pos = if slot % 2 == 0 { 'n' } else { 'v' };
                for (i, t) in topics.into_iter().take(k).enumerate() {
                    let topic = if pos == 'n' {
                        NOUN_TOPICS[t % 3]
                    } else {
                        VERB_TOPICS[t % 2]
                    };
                    senses.push((
                        lemma.to_string(),
                        pos,
                        format!("{}-{}-{}", lemma, pos, i),
                        topic.to_string(),
                    ));
                }
            }
            let ids: Vec<String> = senses.iter().map(|s| s.2.clone()).collect();
            let relations = rels
                .into_iter()
                .map(|(a, r, b)| {
                    (
                        ids[a % ids.len()].clone(),
                        RELATIONS[r].to_string(),
                        ids[b % ids.len()].clone(),
                    )
                })
                .collect();
            GenLexicon { senses, relations }
        })
}

// ---------------------------------------------------------------------------
// Random sentences for matching

pub const FORMS: [&str; 3] = ["a", "b", "A"];
pub const LEMMAS: [&str; 5] = ["x", "y", "Y", "z", "w"];
pub const UPOS: [&str; 4] = ["NOUN", "VERB", "PROPN", "ADJ"];
pub const DEPRELS: [&str; 4] = ["obj", "nsubj", "det", "amod"];

pub fn match_sentence_strategy() -> impl Strategy<Value = Sentence> {
    (1usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(
            (
                0usize..3,
                0usize..5,
                0usize..4,
                0usize..3,
                0usize..3,
                0..n,
                0usize..4,
            ),
            n,
        )
        .prop_map(|rows| {
            let tokens = rows
                .into_iter()
                .enumerate()
                .map(|(i, (f, l, u, num, gen, h, d))| {
                    let id = i + 1;
                    let head = if h >= id { h + 1 } else { h };
                    let mut feats = Features::new();
                    if num > 0 {
                        feats.insert("Number", if num == 1 { "Sing" } else { "Plur" });
                    }
                    if gen > 0 {
                        feats.insert("Gender", if gen == 1 { "Masc" } else { "Fem" });
                    }
                    let mut t = Token::new(id, FORMS[f], LEMMAS[l], UPOS[u], head, DEPRELS[d]);
                    t.feats = feats;
                    t
                })
                .collect();
            Sentence::new(tokens)
        })
    })
}

// ---------------------------------------------------------------------------
// Random construction rows

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenField {
    Form,
    Lemma,
    Upos,
    Deprel,
    Number,
}

impl GenField {
    fn text(&self) -> &'static str {
        match self {
            GenField::Form => "UD.FORM",
            GenField::Lemma => "LEMMA",
            GenField::Upos => "UPOS",
            GenField::Deprel => "DEPREL",
            GenField::Number => "FEATS:Number",
        }
    }

    fn value<'t>(&self, t: &'t Token) -> Option<&'t str> {
        match self {
            GenField::Form => Some(&t.form),
            GenField::Lemma => Some(&t.lemma),
            GenField::Upos => Some(&t.upos),
            GenField::Deprel => Some(&t.deprel),
            GenField::Number => t.feats.get("Number"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenHead {
    Root,
    Row(usize),
    Free,
}

#[derive(Debug, Clone)]
pub struct GenWithout {
    pub children: bool,
    pub field: GenField,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct GenIdentity {
    pub field: GenField,
    pub relation: Option<String>,
    pub target: usize,
}

#[derive(Debug, Clone)]
pub struct GenRow {
    pub form: Option<String>,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub number: Option<String>,
    pub head: GenHead,
    pub deprel: Option<String>,
    pub required: bool,
    pub without: Vec<GenWithout>,
    pub onto: Option<String>,
    pub aktionsart: bool,
    pub free: bool,
    pub identity: Vec<GenIdentity>,
}

#[derive(Debug, Clone)]
pub struct GenCxn {
    pub rows: Vec<GenRow>,
    pub root: usize,
}

pub const ROW_IDS: [&str; 4] = ["A", "B", "C", "D"];

impl GenCxn {
    /// Single-block CoNLL-C text.
    pub fn render(&self) -> String {
        let mut out = String::from("#cxn-id = gen\n");
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "_".into());
        for (i, r) in self.rows.iter().enumerate() {
            let head = match r.head {
                GenHead::Root => "0".to_string(),
                GenHead::Row(j) => ROW_IDS[j].to_string(),
                GenHead::Free => "_".to_string(),
            };
            let without = if r.without.is_empty() {
                "_".to_string()
            } else {
                r.without
                    .iter()
                    .map(|w| {
                        format!(
                            "{}{}={}",
                            if w.children { "CHILDREN:" } else { "SELF:" },
                            w.field.text(),
                            w.value
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let mut sem = Vec::new();
            if let Some(o) = &r.onto {
                sem.push(format!("OntoClass={}", o));
            }
            if r.aktionsart {
                sem.push("Aktionsart=telic".to_string());
            }
            let sem = if sem.is_empty() {
                "_".to_string()
            } else {
                sem.join("|")
            };
            let identity = if r.identity.is_empty() {
                "_".to_string()
            } else {
                r.identity
                    .iter()
                    .map(|c| match &c.relation {
                        Some(rel) => format!("{}={}:{}", c.field.text(), rel, ROW_IDS[c.target]),
                        None => format!("{}={}", c.field.text(), ROW_IDS[c.target]),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let cells = [
                ROW_IDS[i].to_string(),
                opt(&r.form),
                opt(&r.lemma),
                opt(&r.upos),
                r.number
                    .as_ref()
                    .map(|n| format!("Number={}", n))
                    .unwrap_or_else(|| "_".into()),
                head,
                opt(&r.deprel),
                if r.required { "1" } else { "0" }.to_string(),
                without,
                sem,
                if r.free { "FREE" } else { "_" }.to_string(),
                identity,
            ];
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

type RawRow = (
    (Option<usize>, Option<usize>, Option<usize>, Option<usize>),
    (Option<usize>, Option<usize>, bool),
    (
        Option<(bool, usize, usize)>,
        Option<(bool, usize)>,
        bool,
        bool,
    ),
    Option<(usize, Option<usize>, usize)>,
);

fn raw_row() -> impl Strategy<Value = RawRow> {
    (
        (
            proptest::option::weighted(0.2, 0usize..3),
            proptest::option::weighted(0.3, 0usize..5),
            proptest::option::weighted(0.4, 0usize..4),
            proptest::option::weighted(0.2, 0usize..2),
        ),
        (
            proptest::option::weighted(0.6, 0usize..4),
            proptest::option::weighted(0.5, 0usize..4),
            proptest::bool::weighted(0.8),
        ),
        (
            proptest::option::weighted(0.3, (any::<bool>(), 0usize..5, 0usize..4)),
            proptest::option::weighted(0.35, (any::<bool>(), 0usize..3)),
            proptest::bool::weighted(0.1),
            any::<bool>(),
        ),
        proptest::option::weighted(
            0.35,
            (
                0usize..4,
                proptest::option::weighted(0.5, 0usize..3),
                0usize..3,
            ),
        ),
    )
}

pub fn cxn_strategy() -> impl Strategy<Value = GenCxn> {
    (1usize..=4)
        .prop_flat_map(|n| (proptest::collection::vec(raw_row(), n), 0..n))
        .prop_map(|(raw, root)| build_cxn(raw, root))
}

fn build_cxn(raw: Vec<RawRow>, root: usize) -> GenCxn {
    let n = raw.len();
    let required: Vec<bool> = raw
        .iter()
        .enumerate()
        .map(|(i, r)| i == root || r.1 .2)
        .collect();
    let mut attached = vec![root];
    let mut rows = Vec::with_capacity(n);
    for (
        i,
        ((form, lemma, upos, number), (head, deprel, _), (without, onto, akt, free), identity),
    ) in raw.into_iter().enumerate()
    {
        let upos = upos.map(|u| UPOS[u].to_string());
        let head = if i == root {
            GenHead::Root
        } else {
            let candidates: Vec<usize> = attached
                .iter()
                .copied()
                .filter(|&j| !required[i] || required[j])
                .collect();
            match head {
                Some(c) if !candidates.is_empty() => {
                    attached.push(i);
                    GenHead::Row(candidates[c % candidates.len()])
                }
                _ => GenHead::Free,
            }
        };
        let deprel = match head {
            GenHead::Free => None,
            _ => deprel.map(|d| DEPRELS[d].to_string()),
        };
        let without = without
            .map(|(children, f, v)| {
                let field = if children {
                    [GenField::Deprel, GenField::Upos, GenField::Lemma][f % 3].clone()
                } else {
                    [
                        GenField::Deprel,
                        GenField::Upos,
                        GenField::Lemma,
                        GenField::Form,
                        GenField::Number,
                    ][f]
                        .clone()
                };
                let value = match field {
                    GenField::Deprel => DEPRELS[v],
                    GenField::Upos => UPOS[v],
                    GenField::Lemma => LEMMAS[v],
                    GenField::Form => FORMS[v % 3],
                    GenField::Number => ["Sing", "Plur"][v % 2],
                };
                vec![GenWithout {
                    children,
                    field,
                    value: value.to_string(),
                }]
            })
            .unwrap_or_default();
        let onto = onto.and_then(|(bare, t)| match upos.as_deref() {
            Some("NOUN") | Some("PROPN") => {
                let topic = NOUN_TOPICS[t];
                Some(if bare {
                    topic.trim_start_matches("noun.").to_string()
                } else {
                    topic.to_string()
                })
            }
            Some("VERB") => {
                let topic = VERB_TOPICS[t % 2];
                Some(if bare {
                    topic.trim_start_matches("verb.").to_string()
                } else {
                    topic.to_string()
                })
            }
            Some(_) => None,
            None => Some(
                if bare {
                    NOUN_TOPICS[t]
                } else {
                    VERB_TOPICS[t % 2]
                }
                .to_string(),
            ),
        });
        let identity = match identity {
            Some((f, rel, t)) if n > 1 => {
                let target = (i + 1 + t % (n - 1)) % n;
                vec![match rel {
                    Some(r) => GenIdentity {
                        field: GenField::Lemma,
                        relation: Some(RELATIONS[r].to_string()),
                        target,
                    },
                    None => GenIdentity {
                        field: [
                            GenField::Form,
                            GenField::Lemma,
                            GenField::Number,
                            GenField::Form,
                        ][f]
                            .clone(),
                        relation: None,
                        target,
                    },
                }]
            }
            _ => Vec::new(),
        };
        rows.push(GenRow {
            form: form.map(|f| FORMS[f].to_string()),
            lemma: lemma.map(|l| LEMMAS[l].to_string()),
            upos,
            number: number.map(|v| ["Sing", "Plur"][v].to_string()),
            head,
            deprel,
            required: required[i],
            without,
            onto,
            aktionsart: akt,
            free,
            identity,
        });
    }
    GenCxn { rows, root }
}

pub fn options_strategy() -> impl Strategy<Value = MatchOptions> {
    (proptest::bool::weighted(0.75), any::<bool>(), any::<bool>()).prop_map(|(sem, pass, fold)| {
        MatchOptions {
            semantic_filtering: sem,
            missing_lemma_policy: if pass {
                MissingLemmaPolicy::Pass
            } else {
                MissingLemmaPolicy::Fail
            },
            identity_case_fold: fold,
        }
    })
}

// ---------------------------------------------------------------------------
// Reference matcher

fn pos_letter(upos: &str) -> Option<char> {
    match upos {
        "NOUN" | "PROPN" => Some('n'),
        "VERB" => Some('v'),
        _ => None,
    }
}

fn qualified_topic(row: &GenRow) -> Option<String> {
    let onto = row.onto.as_ref()?;
    if onto.contains('.') {
        return Some(onto.clone());
    }
    let prefix = match pos_letter(row.upos.as_deref()?)? {
        'n' => "noun",
        _ => "verb",
    };
    Some(format!("{}.{}", prefix, onto))
}

/// Part of speech a row declares, directly or through its topic.
fn row_pos(row: &GenRow) -> Option<char> {
    row.upos
        .as_deref()
        .and_then(pos_letter)
        .or_else(|| qualified_topic(row).map(|t| t.chars().next().unwrap()))
}

fn unary_ok(row: &GenRow, t: &Token, s: &Sentence, lex: &GenLexicon, opts: &MatchOptions) -> bool {
    if row.form.as_ref().is_some_and(|f| *f != t.form) {
        return false;
    }
    if row.lemma.as_ref().is_some_and(|l| *l != t.lemma) {
        return false;
    }
    // a fixed lemma makes the declared UPOS a lookup hint only
    if row.lemma.is_none() && row.upos.as_ref().is_some_and(|u| *u != t.upos) {
        return false;
    }
    if row
        .number
        .as_deref()
        .is_some_and(|n| t.feats.get("Number") != Some(n))
    {
        return false;
    }
    for w in &row.without {
        let hit = if w.children {
            s.tokens
                .iter()
                .any(|c| c.head == t.id && w.field.value(c) == Some(w.value.as_str()))
        } else {
            w.field.value(t) == Some(w.value.as_str())
        };
        if hit {
            return false;
        }
    }
    if opts.semantic_filtering {
        if let Some(topic) = qualified_topic(row) {
            let pos = row_pos(row).unwrap();
            let senses = lex.synsets(&t.lemma, pos);
            if senses.is_empty() {
                return opts.missing_lemma_policy == MissingLemmaPolicy::Pass;
            }
            if !senses.iter().any(|(_, _, _, tp)| *tp == topic) {
                return false;
            }
        }
    }
    true
}

fn valid(
    cxn: &GenCxn,
    a: &[Option<usize>],
    s: &Sentence,
    lex: &GenLexicon,
    opts: &MatchOptions,
) -> bool {
    let tok = |i: usize| a[i].map(|id| &s.tokens[id - 1]);
    for (i, row) in cxn.rows.iter().enumerate() {
        if row.required && a[i].is_none() {
            return false;
        }
        if let Some(t) = tok(i) {
            if !unary_ok(row, t, s, lex, opts) {
                return false;
            }
        }
        if let GenHead::Row(j) = row.head {
            if let (Some(dep), Some(head)) = (tok(i), tok(j)) {
                if dep.head != head.id || row.deprel.as_ref().is_some_and(|d| *d != dep.deprel) {
                    return false;
                }
            }
        }
        for c in &row.identity {
            let (Some(this), Some(other)) = (tok(i), tok(c.target)) else {
                continue;
            };
            let ok = match &c.relation {
                Some(_) if !opts.semantic_filtering => true,
                Some(rel) => {
                    let p1 = row_pos(row).or_else(|| pos_letter(&this.upos));
                    let p2 = row_pos(&cxn.rows[c.target]).or_else(|| pos_letter(&other.upos));
                    match (p1, p2) {
                        (Some(p1), Some(p2)) => lex.related(&this.lemma, p1, rel, &other.lemma, p2),
                        _ => false,
                    }
                }
                None => match (c.field.value(this), c.field.value(other)) {
                    (Some(x), Some(y)) => {
                        let norm = |v: &str| {
                            let v: String = v.nfc().collect();
                            if opts.identity_case_fold {
                                v.to_lowercase()
                            } else {
                                v
                            }
                        };
                        norm(x) == norm(y)
                    }
                    _ => false,
                },
            };
            if !ok {
                return false;
            }
        }
    }
    let assigned: Vec<usize> = (0..a.len()).filter(|&i| a[i].is_some()).collect();
    for w in assigned.windows(2) {
        let (before, after) = (a[w[0]].unwrap(), a[w[1]].unwrap());
        if after <= before || (!cxn.rows[w[1]].free && after != before + 1) {
            return false;
        }
    }
    true
}

/// Every valid injective partial assignment that no other valid assignment
/// extends, ordered by root token and then assignment.
pub fn oracle(
    cxn: &GenCxn,
    s: &Sentence,
    lex: &GenLexicon,
    opts: &MatchOptions,
) -> Vec<Vec<Option<usize>>> {
    let n = cxn.rows.len();
    let mut all: Vec<Vec<Option<usize>>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for a in &all {
            let mut b = a.clone();
            b.push(None);
            next.push(b);
            for id in 1..=s.tokens.len() {
                if !a.contains(&Some(id)) {
                    let mut b = a.clone();
                    b.push(Some(id));
                    next.push(b);
                }
            }
        }
        all = next;
    }
    let valid: Vec<Vec<Option<usize>>> = all
        .into_iter()
        .filter(|a| valid(cxn, a, s, lex, opts))
        .collect();
    let extends = |b: &Vec<Option<usize>>, a: &Vec<Option<usize>>| {
        b != a && a.iter().zip(b).all(|(x, y)| x.is_none() || x == y)
    };
    let mut out: Vec<Vec<Option<usize>>> = valid
        .iter()
        .filter(|a| !valid.iter().any(|b| extends(b, a)))
        .cloned()
        .collect();
    out.sort_by_key(|a| (a[cxn.root], a.clone()));
    out
}

// ---------------------------------------------------------------------------
// Random CoNLL-U documents for round trips

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z]{1,6}",
        "[a-zà-ü'_.,-]{1,5}",
        Just("_".to_string()),
        Just("l'".to_string()),
        Just("città".to_string()),
    ]
}

fn token_strategy(n: usize) -> impl Strategy<Value = Vec<Token>> {
    let token = (
        (
            word(),
            word(),
            "[A-Z]{3,5}",
            proptest::option::of("[A-Za-z]{1,4}"),
        ),
        proptest::collection::btree_map("[A-Z][a-z]{1,5}", "[A-Za-z0-9]{1,4}", 0..3),
        (
            0..n,
            "[a-z]{2,5}(:[a-z]{2,4})?",
            proptest::option::of("[0-9]:[a-z]{2,4}"),
        ),
        proptest::collection::vec(
            (
                "[A-Za-z]{1,6}",
                proptest::option::of("[A-Za-z0-9:,=.]{0,6}"),
            ),
            0..3,
        ),
    );
    proptest::collection::vec(token, n).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(
                |(i, ((form, lemma, upos, xpos), feats, (h, deprel, deps), misc))| {
                    let id = i + 1;
                    let head = if h >= id { h + 1 } else { h };
                    let misc_text: Vec<String> = misc
                        .into_iter()
                        .map(|(k, v)| match v {
                            Some(v) => format!("{}={}", k, v),
                            None => k,
                        })
                        .collect();
                    Token {
                        id,
                        form,
                        lemma,
                        upos,
                        xpos,
                        feats: feats.into_iter().collect(),
                        head,
                        deprel,
                        deps,
                        misc: Misc::parse(&misc_text.join("|")),
                    }
                },
            )
            .collect()
    })
}

pub fn conllu_sentence_strategy() -> impl Strategy<Value = Sentence> {
    (1usize..=10).prop_flat_map(|n| {
        (
            token_strategy(n),
            proptest::collection::vec(
                (
                    "[a-z_]{1,8}",
                    proptest::option::of("[a-z0-9][a-z0-9 ]{0,10}[a-z0-9]"),
                ),
                0..3,
            ),
            proptest::collection::btree_set(0..=n, 0..3),
        )
            .prop_map(move |(tokens, comments, positions)| {
                let comments = comments
                    .into_iter()
                    .map(|(key, value)| Comment { key, value })
                    .collect();
                let opaque = positions
                    .into_iter()
                    .map(|p| OpaqueRow {
                        position: p,
                        line: if p < n {
                            format!("{}-{}\tdel\t_\t_\t_\t_\t_\t_\t_\t_", p + 1, p + 2)
                        } else {
                            format!("{}.1\tx\tx\tNOUN\t_\t_\t_\t_\t{}:dep\t_", p, p.max(1))
                        },
                    })
                    .collect();
                Sentence {
                    comments,
                    tokens,
                    opaque,
                }
            })
    })
}

/// Sorted, deduplicated topic names of a generated lexicon entry, as the
/// coverage tests count them.
pub fn topic_set(lex: &GenLexicon, lemma: &str, pos: char) -> BTreeSet<String> {
    lex.synsets(lemma, pos)
        .into_iter()
        .map(|(_, _, _, t)| t.clone())
        .collect()
}
