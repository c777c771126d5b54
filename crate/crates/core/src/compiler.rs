//! Compiles a [`CxnDef`] into a [`Pattern`] and writes Grew query text for it.
//!
//! The pattern is the only input to both the Grew writer and the matcher, so
//! the two always agree on what a definition means. Constraints Grew cannot
//! state (topics, lemma relations, identities, optional slots) are listed in a
//! trailing `% unexpressed:` comment.

use std::fmt::Write;

use thiserror::Error;

use crate::conllc::{
    self, Adjacency, CxnDef, Diagnostic, Field, HeadRef, Scope, WithoutConstraint,
};
use crate::conllu::Features;
use crate::lexicon::{Pos, Topic};
use crate::matcher::normalize_topic;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdentityLink {
    pub field: Field,
    pub relation: Option<String>,
    /// Node index of the other slot.
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeConstraint {
    pub row_id: String,
    pub form: Option<String>,
    pub lemma: Option<String>,
    /// Only set for rows without a fixed lemma: a lemma already pins the
    /// word, and its declared UPOS is kept as [`pos_hint`](Self::pos_hint).
    pub upos: Option<String>,
    /// Part of speech declared on the row, whether or not it constrains.
    pub pos_hint: Option<Pos>,
    pub feats: Features,
    pub required: bool,
    /// How this node attaches to the previous assigned node in row order.
    pub adjacency: Adjacency,
    pub topic: Option<Topic>,
    pub aktionsart: Option<String>,
    pub without: Vec<WithoutConstraint>,
    pub identity: Vec<IdentityLink>,
}

impl NodeConstraint {
    /// Part of speech used for lexicon lookups: from the declared UPOS,
    /// otherwise from the topic.
    pub fn lexical_pos(&self) -> Option<Pos> {
        self.pos_hint.or_else(|| self.topic.map(Topic::pos))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub head: usize,
    pub dependent: usize,
    pub deprel: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderLink {
    pub before: usize,
    pub after: usize,
    pub adjacency: Adjacency,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub cxn_id: String,
    pub nodes: Vec<NodeConstraint>,
    pub edges: Vec<Edge>,
    /// Links between consecutive required nodes.
    pub order: Vec<OrderLink>,
    pub root: usize,
}

impl Pattern {
    pub fn node_name(index: usize) -> String {
        format!("X{}", index + 1)
    }

    /// The edge whose dependent is `node`, if any.
    pub fn incoming(&self, node: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.dependent == node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("construction {cxn_id} does not validate: {}", diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
pub struct CompileError {
    pub cxn_id: String,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn compile(def: &CxnDef) -> Result<Pattern, CompileError> {
    let errors: Vec<Diagnostic> = conllc::validate(def)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(CompileError {
            cxn_id: def.cxn_id.clone(),
            diagnostics: errors,
        });
    }
    // validated: every reference resolves and the root exists
    let index = |id: &str| def.row_index(id).expect("validated reference");
    let nodes = def
        .rows
        .iter()
        .map(|r| NodeConstraint {
            row_id: r.id.clone(),
            form: r.ud_form.clone(),
            lemma: r.lemma.clone(),
            upos: if r.lemma.is_some() {
                None
            } else {
                r.upos.clone()
            },
            pos_hint: r.upos.as_deref().and_then(Pos::from_upos),
            feats: r.feats.clone(),
            required: r.required,
            adjacency: r.adjacency,
            topic: r
                .sem_feats
                .onto_class
                .as_deref()
                .map(|v| normalize_topic(v, r.upos.as_deref()).expect("validated topic")),
            aktionsart: r.sem_feats.aktionsart.clone(),
            without: r.without.clone(),
            identity: r
                .identity
                .iter()
                .map(|c| IdentityLink {
                    field: c.field.clone(),
                    relation: c.relation.clone(),
                    target: index(&c.target),
                })
                .collect(),
        })
        .collect();
    let edges = def
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match &r.head {
            HeadRef::Row(h) => Some(Edge {
                head: index(h),
                dependent: i,
                deprel: r.deprel.clone(),
            }),
            _ => None,
        })
        .collect();
    let required: Vec<usize> = (0..def.rows.len())
        .filter(|&i| def.rows[i].required)
        .collect();
    let order = required
        .windows(2)
        .map(|w| OrderLink {
            before: w[0],
            after: w[1],
            adjacency: def.rows[w[1]].adjacency,
        })
        .collect();
    Ok(Pattern {
        cxn_id: def.cxn_id.clone(),
        nodes,
        edges,
        order,
        root: def.internal_root().expect("validated root"),
    })
}

fn quoted(value: &str) -> String {
    format!("'{}'", value.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn bare(value: &str) -> String {
    if !value.is_empty() && value.chars().all(|c| c.is_alphanumeric() || c == '_') {
        value.to_string()
    } else {
        quoted(value)
    }
}

fn feature_test(field: &Field, value: &str) -> String {
    match field {
        Field::Form => format!("form={}", quoted(value)),
        Field::Lemma => format!("lemma={}", quoted(value)),
        Field::Upos => format!("upos={}", bare(value)),
        Field::Feat(name) => format!("{}={}", name, bare(value)),
        Field::Deprel => unreachable!("deprel is an edge label"),
    }
}

/// Grew query text for a compiled pattern.
pub fn emit_grew(p: &Pattern) -> String {
    let name = Pattern::node_name;
    let mut clauses = Vec::new();
    for (i, n) in p.nodes.iter().enumerate() {
        let mut attrs = Vec::new();
        if let Some(f) = &n.form {
            attrs.push(feature_test(&Field::Form, f));
        }
        if let Some(l) = &n.lemma {
            attrs.push(feature_test(&Field::Lemma, l));
        }
        if let Some(u) = &n.upos {
            attrs.push(feature_test(&Field::Upos, u));
        }
        for (k, v) in n.feats.iter() {
            attrs.push(feature_test(&Field::Feat(k.to_string()), v));
        }
        clauses.push(format!("{} [{}]", name(i), attrs.join(", ")));
    }
    for link in &p.order {
        let op = match link.adjacency {
            Adjacency::Strict => "<",
            Adjacency::Free => "<<",
        };
        clauses.push(format!("{} {} {}", name(link.before), op, name(link.after)));
    }
    let mut edges: Vec<&Edge> = p.edges.iter().collect();
    edges.sort_by_key(|e| e.dependent);
    for e in edges {
        clauses.push(match &e.deprel {
            Some(rel) => format!("{} -[{}]-> {}", name(e.head), rel, name(e.dependent)),
            None => format!("{} -> {}", name(e.head), name(e.dependent)),
        });
    }

    let mut out = String::new();
    let _ = write!(out, "pattern {{{}}}", clauses.join(";\n        "));

    let mut fresh = p.nodes.len();
    for (i, n) in p.nodes.iter().enumerate() {
        for w in &n.without {
            let body = match (w.scope, &w.field) {
                (Scope::Children, Field::Deprel) => {
                    fresh += 1;
                    format!("{} -[{}]-> X{}", name(i), w.value, fresh)
                }
                (Scope::Children, field) => {
                    fresh += 1;
                    format!(
                        "{} -> X{}; X{} [{}]",
                        name(i),
                        fresh,
                        fresh,
                        feature_test(field, &w.value)
                    )
                }
                (Scope::Node, Field::Deprel) => {
                    fresh += 1;
                    format!("X{} -[{}]-> {}", fresh, w.value, name(i))
                }
                (Scope::Node, field) => format!("{} [{}]", name(i), feature_test(field, &w.value)),
            };
            let _ = write!(out, "\nwithout {{{}}}", body);
        }
    }

    let mut unexpressed = Vec::new();
    for (i, n) in p.nodes.iter().enumerate() {
        if let Some(t) = n.topic {
            unexpressed.push(format!("{} OntoClass={}", name(i), t));
        }
        if let Some(a) = &n.aktionsart {
            unexpressed.push(format!("{} Aktionsart={}", name(i), a));
        }
        for c in &n.identity {
            let rel = c
                .relation
                .as_ref()
                .map(|r| format!("{}:", r))
                .unwrap_or_default();
            unexpressed.push(format!("{} {}={}{}", name(i), c.field, rel, name(c.target)));
        }
        if !n.required {
            unexpressed.push(format!("{} REQUIRED=0", name(i)));
        }
    }
    if !unexpressed.is_empty() {
        let _ = write!(out, "\n% unexpressed: {}", unexpressed.join(", "));
    }
    out.push('\n');
    out
}
