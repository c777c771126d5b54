//! CoNLL-C construction definitions.
//!
//! A definition is a handful of `#key = value` metadata lines followed by one
//! row per construction slot with twelve columns:
//!
//! ```text
//! ID UD.FORM LEMMA UPOS FEATS HEAD DEPREL REQUIRED WITHOUT SEM.FEATS ADJACENCY IDENTITY
//! ```
//!
//! Files may also give columns 1-7 and 8-12 as two separate blocks, matched
//! up by row order. [`render`] always writes the single-block layout.
//!
//! `HEAD=0` marks the construction-internal head; it says nothing about the
//! sentence root. `HEAD=_` leaves the slot's attachment open.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::conllu::Features;
use crate::matcher::normalize_topic;

pub const COLUMNS: [&str; 12] = [
    "ID",
    "UD.FORM",
    "LEMMA",
    "UPOS",
    "FEATS",
    "HEAD",
    "DEPREL",
    "REQUIRED",
    "WITHOUT",
    "SEM.FEATS",
    "ADJACENCY",
    "IDENTITY",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HeadRef {
    /// `0`: the construction-internal head.
    Root,
    Row(String),
    Unconstrained,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Adjacency {
    /// Immediately follows the previous slot (the default, written `_`).
    #[default]
    Strict,
    /// Follows the previous slot, intervening words allowed.
    Free,
}

/// A token field that WITHOUT and IDENTITY constraints can address.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Field {
    Form,
    Lemma,
    Upos,
    Deprel,
    Feat(String),
}

impl Field {
    fn parse(s: &str) -> Option<Field> {
        match s {
            "UD.FORM" => Some(Field::Form),
            "LEMMA" => Some(Field::Lemma),
            "UPOS" => Some(Field::Upos),
            "DEPREL" => Some(Field::Deprel),
            _ => s
                .strip_prefix("FEATS:")
                .filter(|name| !name.is_empty())
                .map(|name| Field::Feat(name.to_string())),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Form => f.write_str("UD.FORM"),
            Field::Lemma => f.write_str("LEMMA"),
            Field::Upos => f.write_str("UPOS"),
            Field::Deprel => f.write_str("DEPREL"),
            Field::Feat(name) => write!(f, "FEATS:{}", name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// The slot's own token.
    Node,
    /// Any dependent of the slot's token.
    Children,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WithoutConstraint {
    pub scope: Scope,
    pub field: Field,
    pub value: String,
}

impl WithoutConstraint {
    fn parse(s: &str) -> Result<Self, String> {
        let (scope, rest) = if let Some(rest) = s.strip_prefix("CHILDREN:") {
            (Scope::Children, rest)
        } else if let Some(rest) = s.strip_prefix("SELF:") {
            (Scope::Node, rest)
        } else {
            (Scope::Node, s)
        };
        let (field, value) = rest
            .split_once('=')
            .ok_or_else(|| format!("`{}` is not of the form [SCOPE:]FIELD=VALUE", s))?;
        let field =
            Field::parse(field).ok_or_else(|| format!("unknown field `{}` in `{}`", field, s))?;
        if value.is_empty() {
            return Err(format!("empty value in `{}`", s));
        }
        let c = WithoutConstraint {
            scope,
            field,
            value: value.to_string(),
        };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<(), String> {
        if self.scope == Scope::Children
            && !matches!(self.field, Field::Deprel | Field::Upos | Field::Lemma)
        {
            return Err(format!(
                "CHILDREN scope supports DEPREL, UPOS and LEMMA, not {}",
                self.field
            ));
        }
        Ok(())
    }
}

impl fmt::Display for WithoutConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scope == Scope::Children {
            f.write_str("CHILDREN:")?;
        }
        write!(f, "{}={}", self.field, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdentityConstraint {
    pub field: Field,
    /// A WordNet relation between the two lemmas; `None` means equal values.
    pub relation: Option<String>,
    pub target: String,
}

impl IdentityConstraint {
    fn parse(s: &str) -> Result<Self, String> {
        let (field, rhs) = s
            .split_once('=')
            .ok_or_else(|| format!("`{}` is not of the form FIELD=[relation:]ROW", s))?;
        let field = match Field::parse(field) {
            Some(f @ (Field::Form | Field::Lemma | Field::Feat(_))) => f,
            _ => return Err(format!("IDENTITY cannot compare field `{}`", field)),
        };
        let (relation, target) = match rhs.split_once(':') {
            Some((rel, target)) => (Some(rel.to_string()), target),
            None => (None, rhs),
        };
        if target.is_empty() || relation.as_deref() == Some("") {
            return Err(format!("incomplete identity constraint `{}`", s));
        }
        Ok(IdentityConstraint {
            field,
            relation,
            target: target.to_string(),
        })
    }
}

impl fmt::Display for IdentityConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=", self.field)?;
        if let Some(rel) = &self.relation {
            write!(f, "{}:", rel)?;
        }
        f.write_str(&self.target)
    }
}

/// The SEM.FEATS column. Aktionsart is kept but never evaluated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SemFeats {
    pub onto_class: Option<String>,
    pub aktionsart: Option<String>,
}

impl SemFeats {
    fn parse(s: &str) -> Result<Self, String> {
        let mut sem = SemFeats::default();
        if s == "_" {
            return Ok(sem);
        }
        for item in s.split('|') {
            let (key, value) = item
                .split_once('=')
                .filter(|(_, v)| !v.is_empty())
                .ok_or_else(|| format!("`{}` is not of the form Key=Value", item))?;
            let slot = match key {
                "OntoClass" => &mut sem.onto_class,
                "Aktionsart" => &mut sem.aktionsart,
                _ => {
                    return Err(format!(
                        "unknown semantic feature `{}` (expected OntoClass or Aktionsart)",
                        key
                    ))
                }
            };
            if slot.replace(value.to_string()).is_some() {
                return Err(format!("duplicate semantic feature `{}`", key));
            }
        }
        Ok(sem)
    }

    pub fn is_empty(&self) -> bool {
        self.onto_class.is_none() && self.aktionsart.is_none()
    }
}

impl fmt::Display for SemFeats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = [
            ("OntoClass", &self.onto_class),
            ("Aktionsart", &self.aktionsart),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| format!("{}={}", k, v)))
        .collect();
        if items.is_empty() {
            f.write_str("_")
        } else {
            f.write_str(&items.join("|"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CxnRow {
    pub id: String,
    pub ud_form: Option<String>,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub feats: Features,
    pub head: HeadRef,
    pub deprel: Option<String>,
    pub required: bool,
    pub without: Vec<WithoutConstraint>,
    pub sem_feats: SemFeats,
    pub adjacency: Adjacency,
    pub identity: Vec<IdentityConstraint>,
}

impl CxnRow {
    /// A required row with every column unconstrained.
    pub fn new(id: impl Into<String>) -> Self {
        CxnRow {
            id: id.into(),
            ud_form: None,
            lemma: None,
            upos: None,
            feats: Features::new(),
            head: HeadRef::Unconstrained,
            deprel: None,
            required: true,
            without: Vec::new(),
            sem_feats: SemFeats::default(),
            adjacency: Adjacency::Strict,
            identity: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CxnDef {
    pub cxn_id: String,
    pub name: String,
    pub function: String,
    /// Metadata lines other than cxn-id, cxn and function, in file order.
    pub extra: Vec<(String, String)>,
    pub rows: Vec<CxnRow>,
}

impl CxnDef {
    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.id == id)
    }

    /// The `HEAD=0` row or, when no row has a constrained head, the first row.
    pub fn internal_root(&self) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.head == HeadRef::Root)
            .or_else(|| {
                self.rows
                    .iter()
                    .all(|r| r.head == HeadRef::Unconstrained)
                    .then_some(0)
                    .filter(|_| !self.rows.is_empty())
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub row: Option<String>,
    pub column: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn error(row: Option<&str>, column: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            row: row.map(str::to_string),
            column,
            message: message.into(),
        }
    }

    fn warning(row: Option<&str>, column: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(row, column, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.row {
            Some(row) => write!(
                f,
                "{}: row {}, {}: {}",
                level, row, self.column, self.message
            ),
            None => write!(f, "{}: {}: {}", level, self.column, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}{}, {column}: {message}", row.as_ref().map(|r| format!(", row {}", r)).unwrap_or_default())]
pub struct ConllcError {
    pub line: usize,
    pub row: Option<String>,
    pub column: &'static str,
    pub message: String,
}

pub fn parse_conllc(input: &str) -> Result<CxnDef, ConllcError> {
    let mut def = CxnDef::default();
    let mut cxn_id = None;
    let mut full: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut left: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut right: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut last_line = 0;

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            match key {
                "cxn-id" => cxn_id = Some(value),
                "cxn" => def.name = value,
                "function" => def.function = value,
                _ => def.extra.push((key.to_string(), value)),
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] == "ID" || fields[0] == "REQUIRED" {
            continue;
        }
        match fields.len() {
            12 => full.push((line_no, fields)),
            7 => left.push((line_no, fields)),
            5 => right.push((line_no, fields)),
            n => {
                return Err(ConllcError {
                    line: line_no,
                    row: None,
                    column: "ID",
                    message: format!(
                        "expected 12 columns (or 7 + 5 in split layout), found {}",
                        n
                    ),
                })
            }
        }
    }

    let whole = |message: String| ConllcError {
        line: last_line.max(1),
        row: None,
        column: "ID",
        message,
    };
    if !full.is_empty() && !(left.is_empty() && right.is_empty()) {
        return Err(whole("mixes 12-column rows with split-layout rows".into()));
    }
    if left.len() != right.len() {
        return Err(whole(format!(
            "split layout has {} rows in the first block but {} in the second",
            left.len(),
            right.len()
        )));
    }
    let rows: Vec<(usize, Vec<&str>)> = if full.is_empty() {
        left.into_iter()
            .zip(right)
            .map(|((line, mut a), (_, b))| {
                a.extend(b);
                (line, a)
            })
            .collect()
    } else {
        full
    };
    if rows.is_empty() {
        return Err(whole("no construction rows".into()));
    }
    def.cxn_id = cxn_id
        .filter(|id| !id.is_empty())
        .ok_or_else(|| ConllcError {
            line: 1,
            row: None,
            column: "#cxn-id",
            message: "missing `#cxn-id` metadata".into(),
        })?;

    let mut lines = HashMap::new();
    for (line, fields) in rows {
        let row = parse_row(&fields).map_err(|(column, message)| ConllcError {
            line,
            row: Some(fields[0].to_string()),
            column,
            message,
        })?;
        if lines.insert(row.id.clone(), line).is_some() {
            return Err(ConllcError {
                line,
                row: Some(row.id.clone()),
                column: "ID",
                message: format!("duplicate row id `{}`", row.id),
            });
        }
        def.rows.push(row);
    }

    if let Some(d) = structural_diagnostics(&def).into_iter().next() {
        let line = d
            .row
            .as_ref()
            .and_then(|r| lines.get(r))
            .copied()
            .unwrap_or(1);
        return Err(ConllcError {
            line,
            row: d.row,
            column: d.column,
            message: d.message,
        });
    }
    Ok(def)
}

fn parse_row(f: &[&str]) -> Result<CxnRow, (&'static str, String)> {
    let opt = |s: &str| (s != "_").then(|| s.to_string());
    let mut row = CxnRow::new(f[0]);
    row.ud_form = opt(f[1]);
    row.lemma = opt(f[2]);
    row.upos = opt(f[3]);
    row.feats = Features::parse(f[4]).map_err(|m| ("FEATS", m))?;
    row.head = match f[5] {
        "_" => HeadRef::Unconstrained,
        "0" => HeadRef::Root,
        id => HeadRef::Row(id.to_string()),
    };
    row.deprel = opt(f[6]);
    row.required = match f[7] {
        "1" | "_" => true,
        "0" => false,
        other => return Err(("REQUIRED", format!("expected 1, 0 or _, found `{}`", other))),
    };
    if f[8] != "_" {
        row.without = f[8]
            .split(',')
            .map(WithoutConstraint::parse)
            .collect::<Result<_, _>>()
            .map_err(|m| ("WITHOUT", m))?;
    }
    row.sem_feats = SemFeats::parse(f[9]).map_err(|m| ("SEM.FEATS", m))?;
    row.adjacency = match f[10] {
        "_" => Adjacency::Strict,
        s if s.eq_ignore_ascii_case("STRICT") => Adjacency::Strict,
        s if s.eq_ignore_ascii_case("FREE") => Adjacency::Free,
        other => {
            return Err((
                "ADJACENCY",
                format!("expected _, STRICT or FREE, found `{}`", other),
            ))
        }
    };
    if f[11] != "_" {
        row.identity = f[11]
            .split(',')
            .map(IdentityConstraint::parse)
            .collect::<Result<_, _>>()
            .map_err(|m| ("IDENTITY", m))?;
    }
    Ok(row)
}

/// Reference, uniqueness and tree-shape checks. These make a definition
/// unparseable.
fn structural_diagnostics(def: &CxnDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if def.rows.is_empty() {
        out.push(Diagnostic::error(None, "ID", "no construction rows"));
        return out;
    }
    let mut seen = HashSet::new();
    for row in &def.rows {
        let id = Some(row.id.as_str());
        if row.id.is_empty()
            || row.id == "_"
            || row.id == "0"
            || row.id == "ID"
            || row.id.contains(char::is_whitespace)
        {
            out.push(Diagnostic::error(
                id,
                "ID",
                format!("`{}` is not a usable row id", row.id),
            ));
        }
        if !seen.insert(row.id.as_str()) {
            out.push(Diagnostic::error(
                id,
                "ID",
                format!("duplicate row id `{}`", row.id),
            ));
        }
    }
    let index: HashMap<&str, usize> = def
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();

    for row in &def.rows {
        let id = Some(row.id.as_str());
        if let HeadRef::Row(h) = &row.head {
            match index.get(h.as_str()) {
                None => out.push(Diagnostic::error(
                    id,
                    "HEAD",
                    format!("head `{}` does not name a row", h),
                )),
                Some(&hi) if def.rows[hi].id == row.id => {
                    out.push(Diagnostic::error(id, "HEAD", "row is its own head"))
                }
                Some(&hi) if row.required && !def.rows[hi].required => out.push(Diagnostic::error(
                    id,
                    "HEAD",
                    format!("required row is headed by optional row `{}`", h),
                )),
                _ => {}
            }
        }
        if row.head == HeadRef::Root && !row.required {
            out.push(Diagnostic::error(
                id,
                "REQUIRED",
                "the internal head row cannot be optional",
            ));
        }
        if row.head == HeadRef::Unconstrained && row.deprel.is_some() {
            out.push(Diagnostic::error(
                id,
                "DEPREL",
                "DEPREL is constrained but HEAD is not",
            ));
        }
        for w in &row.without {
            if let Err(m) = w.check() {
                out.push(Diagnostic::error(id, "WITHOUT", m));
            }
        }
        for c in &row.identity {
            if !index.contains_key(c.target.as_str()) {
                out.push(Diagnostic::error(
                    id,
                    "IDENTITY",
                    format!("target `{}` does not name a row", c.target),
                ));
            } else if c.target == row.id {
                out.push(Diagnostic::error(
                    id,
                    "IDENTITY",
                    "row cannot be identical to itself",
                ));
            }
            if c.relation.is_some() && c.field != Field::Lemma {
                out.push(Diagnostic::error(
                    id,
                    "IDENTITY",
                    "WordNet relations apply to LEMMA only",
                ));
            }
            if matches!(c.field, Field::Upos | Field::Deprel) {
                out.push(Diagnostic::error(
                    id,
                    "IDENTITY",
                    format!("IDENTITY cannot compare {}", c.field),
                ));
            }
        }
    }

    let roots: Vec<&CxnRow> = def
        .rows
        .iter()
        .filter(|r| r.head == HeadRef::Root)
        .collect();
    let any_edge = def.rows.iter().any(|r| matches!(r.head, HeadRef::Row(_)));
    if roots.len() > 1 {
        out.push(Diagnostic::error(
            Some(&roots[1].id),
            "HEAD",
            format!(
                "more than one internal head (HEAD=0): {}",
                roots
                    .iter()
                    .map(|r| r.id.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ));
    } else if roots.is_empty() && any_edge {
        out.push(Diagnostic::error(
            None,
            "HEAD",
            "no internal head row (HEAD=0)",
        ));
    }

    // every head chain must end at the internal head or an unconstrained head
    for (start, row) in def.rows.iter().enumerate() {
        let mut cur = start;
        let mut steps = 0;
        while let HeadRef::Row(h) = &def.rows[cur].head {
            let Some(&next) = index.get(h.as_str()) else {
                break;
            };
            cur = next;
            steps += 1;
            if steps > def.rows.len() {
                out.push(Diagnostic::error(
                    Some(&row.id),
                    "HEAD",
                    "HEAD references form a cycle",
                ));
                break;
            }
        }
        if steps <= def.rows.len()
            && def.rows[cur].head == HeadRef::Unconstrained
            && any_edge
            && cur != start
        {
            out.push(Diagnostic::error(
                Some(&row.id),
                "HEAD",
                format!(
                    "head chain ends at row `{}`, which is not the internal head",
                    def.rows[cur].id
                ),
            ));
        }
    }
    out
}

/// All problems with a definition, errors first within each row, rows in
/// definition order. An empty list means the definition can be compiled.
pub fn validate(def: &CxnDef) -> Vec<Diagnostic> {
    let mut out = structural_diagnostics(def);
    for row in &def.rows {
        let id = Some(row.id.as_str());
        if let Some(value) = &row.sem_feats.onto_class {
            if let Err(e) = normalize_topic(value, row.upos.as_deref()) {
                out.push(Diagnostic::error(id, "SEM.FEATS", e.to_string()));
            }
        }
        if let Some(a) = &row.sem_feats.aktionsart {
            out.push(Diagnostic::warning(
                id,
                "SEM.FEATS",
                format!("Aktionsart parsed but not evaluated (Aktionsart={})", a),
            ));
        }
        for c in &row.identity {
            if let Some(target) = def.rows.iter().find(|r| r.id == c.target) {
                if !target.required {
                    out.push(Diagnostic::warning(
                        id,
                        "IDENTITY",
                        format!("refers to optional row `{}`; the constraint is skipped when that row is absent", target.id),
                    ));
                }
            }
        }
    }
    let order: HashMap<Option<&str>, usize> = def
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (Some(r.id.as_str()), i + 1))
        .collect();
    out.sort_by_key(|d| {
        (
            order.get(&d.row.as_deref()).copied().unwrap_or(0),
            d.severity,
        )
    });
    out.dedup();
    out
}

/// Canonical single-block text for a definition.
pub fn render(def: &CxnDef) -> String {
    let mut out = format!(
        "#cxn-id = {}\n#cxn = {}\n#function = {}\n",
        def.cxn_id, def.name, def.function
    );
    for (k, v) in &def.extra {
        out.push_str(&format!("#{} = {}\n", k, v));
    }
    out.push('\n');
    out.push_str(&COLUMNS.join("\t"));
    out.push('\n');
    let or_underscore = |v: &Option<String>| v.clone().unwrap_or_else(|| "_".into());
    let joined = |items: Vec<String>| {
        if items.is_empty() {
            "_".to_string()
        } else {
            items.join(",")
        }
    };
    for r in &def.rows {
        let cells = [
            r.id.clone(),
            or_underscore(&r.ud_form),
            or_underscore(&r.lemma),
            or_underscore(&r.upos),
            r.feats.to_string(),
            match &r.head {
                HeadRef::Root => "0".into(),
                HeadRef::Row(h) => h.clone(),
                HeadRef::Unconstrained => "_".into(),
            },
            or_underscore(&r.deprel),
            if r.required { "1" } else { "0" }.into(),
            joined(r.without.iter().map(|w| w.to_string()).collect()),
            r.sem_feats.to_string(),
            match r.adjacency {
                Adjacency::Strict => "_".into(),
                Adjacency::Free => "FREE".into(),
            },
            joined(r.identity.iter().map(|c| c.to_string()).collect()),
        ];
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
