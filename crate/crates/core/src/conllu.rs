//! CoNLL-U reading and writing.
//!
//! Sentences keep their comment lines, their syntactic words and, as opaque
//! rows, any multiword-token ranges (`1-2`) and empty nodes (`1.1`). Only the
//! syntactic words take part in matching.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

/// Morphological features, kept in canonical CoNLL-U order (case-insensitive
/// by key).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn new() -> Self {
        Features(Vec::new())
    }

    /// Parses `Key=Value|Key=Value`; `_` and the empty string give no features.
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut feats = Features::new();
        if s == "_" || s.is_empty() {
            return Ok(feats);
        }
        for item in s.split('|') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("feature `{}` is not of the form Key=Value", item))?;
            if key.is_empty() || value.is_empty() {
                return Err(format!("feature `{}` has an empty key or value", item));
            }
            if feats.insert(key, value).is_some() {
                return Err(format!("duplicate feature `{}`", key));
            }
        }
        Ok(feats)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Inserts a feature, returning the previous value for the key.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Option<String> {
        let key = key.into();
        let value = value.into();
        if let Some(slot) = self.0.iter_mut().find(|(k, _)| *k == key) {
            return Some(std::mem::replace(&mut slot.1, value));
        }
        let pos = self
            .0
            .iter()
            .position(|(k, _)| canonical_key(k) > canonical_key(&key))
            .unwrap_or(self.0.len());
        self.0.insert(pos, (key, value));
        None
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let pos = self.0.iter().position(|(k, _)| k == key)?;
        Some(self.0.remove(pos).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if every feature of `required` is present here with the same value.
    pub fn contains_all(&self, required: &Features) -> bool {
        required.iter().all(|(k, v)| self.get(k) == Some(v))
    }
}

fn canonical_key(key: &str) -> (String, &str) {
    (key.to_lowercase(), key)
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", k, v)?;
        }
        Ok(())
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Features {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut feats = Features::new();
        for (k, v) in iter {
            feats.insert(k, v);
        }
        feats
    }
}

/// The MISC column: `Key=Value` items (or bare flags) in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Misc(Vec<(String, Option<String>)>);

impl Misc {
    pub fn new() -> Self {
        Misc(Vec::new())
    }

    pub fn parse(s: &str) -> Self {
        if s == "_" || s.is_empty() {
            return Misc::new();
        }
        Misc(
            s.split('|')
                .map(|item| match item.split_once('=') {
                    Some((k, v)) => (k.to_string(), Some(v.to_string())),
                    None => (item.to_string(), None),
                })
                .collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    /// Sets `key` to `value`, replacing an existing item in place or appending.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = Some(value.into());
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&str>)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_deref()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Misc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            match v {
                Some(v) => write!(f, "{}={}", k, v)?,
                None => f.write_str(k)?,
            }
        }
        Ok(())
    }
}

/// A syntactic word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: Option<String>,
    pub feats: Features,
    /// 0 for the sentence root.
    pub head: usize,
    pub deprel: String,
    pub deps: Option<String>,
    pub misc: Misc,
}

impl Token {
    pub fn new(id: usize, form: &str, lemma: &str, upos: &str, head: usize, deprel: &str) -> Self {
        Token {
            id,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            xpos: None,
            feats: Features::new(),
            head,
            deprel: deprel.to_string(),
            deps: None,
            misc: Misc::new(),
        }
    }

    pub fn with_feats(mut self, feats: &str) -> Self {
        self.feats = Features::parse(feats).expect("valid feature string");
        self
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            self.xpos.as_deref().unwrap_or("_"),
            self.feats,
            self.head,
            self.deprel,
            self.deps.as_deref().unwrap_or("_"),
            self.misc
        )
    }
}

/// A comment line. `# key = value` splits into both parts; anything else is
/// kept whole as the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comment {
    pub key: String,
    pub value: Option<String>,
}

impl Comment {
    fn parse(line: &str) -> Self {
        let body = line.trim_start_matches('#').trim();
        match body.split_once('=') {
            Some((k, v)) => Comment {
                key: k.trim().to_string(),
                value: Some(v.trim().to_string()),
            },
            None => Comment {
                key: body.to_string(),
                value: None,
            },
        }
    }
}

impl fmt::Display for Comment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.value, self.key.is_empty()) {
            (Some(v), _) => write!(f, "# {} = {}", self.key, v),
            (None, true) => f.write_str("#"),
            (None, false) => write!(f, "# {}", self.key),
        }
    }
}

/// A multiword-token range or empty node, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpaqueRow {
    /// Number of syntactic words that precede this row.
    pub position: usize,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub comments: Vec<Comment>,
    pub tokens: Vec<Token>,
    pub opaque: Vec<OpaqueRow>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            comments: Vec::new(),
            tokens,
            opaque: Vec::new(),
        }
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find(|c| c.key == key)
            .and_then(|c| c.value.as_deref())
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.metadata("sent_id")
    }

    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == id)
    }

    /// Checks the structural invariants serialization relies on.
    pub fn check(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(format!(
                    "token ids must be 1..{}; found {} at position {}",
                    n,
                    t.id,
                    i + 1
                ));
            }
            if t.head > n {
                return Err(format!("token {} has dangling head {}", t.id, t.head));
            }
            if t.head == t.id {
                return Err(format!("token {} is its own head", t.id));
            }
            for (name, value) in [
                ("FORM", t.form.as_str()),
                ("LEMMA", t.lemma.as_str()),
                ("UPOS", t.upos.as_str()),
                ("DEPREL", t.deprel.as_str()),
            ] {
                check_field(t.id, name, value)?;
            }
            for (name, value) in [("XPOS", &t.xpos), ("DEPS", &t.deps)] {
                if let Some(v) = value {
                    check_field(t.id, name, v)?;
                }
            }
            for (k, v) in t.feats.iter() {
                if [k, v]
                    .iter()
                    .any(|s| s.is_empty() || s.contains(['|', '=', '\t', '\n']))
                {
                    return Err(format!(
                        "token {} has an unserializable feature {}={}",
                        t.id, k, v
                    ));
                }
            }
            for (k, v) in t.misc.iter() {
                if k.is_empty()
                    || k.contains(['|', '=', '\t', '\n'])
                    || v.is_some_and(|v| v.contains(['|', '\t', '\n']))
                {
                    return Err(format!(
                        "token {} has an unserializable MISC item `{}`",
                        t.id, k
                    ));
                }
            }
        }
        for row in &self.opaque {
            if row.position > n {
                return Err(format!(
                    "opaque row `{}` placed after the last token",
                    row.line
                ));
            }
            if row.line.contains('\n') || row.line.split('\t').count() != 10 {
                return Err(format!("opaque row `{}` is not a 10-column line", row.line));
            }
        }
        Ok(())
    }
}

fn check_field(id: usize, name: &str, value: &str) -> Result<(), String> {
    if value.is_empty() || value.contains(['\t', '\n', '\r']) {
        Err(format!(
            "token {} has an unserializable {} `{}`",
            id, name, value
        ))
    } else {
        Ok(())
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.comments {
            writeln!(f, "{}", c)?;
        }
        let mut opaque = self.opaque.iter().peekable();
        for (i, t) in self.tokens.iter().enumerate() {
            while let Some(row) = opaque.next_if(|r| r.position <= i) {
                writeln!(f, "{}", row.line)?;
            }
            writeln!(f, "{}", t)?;
        }
        for row in opaque {
            writeln!(f, "{}", row.line)?;
        }
        Ok(())
    }
}

/// A structural problem with one line; the enclosing sentence is skipped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line} (byte {offset}): {message}")]
pub struct LineError {
    pub line: usize,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 at byte {offset}")]
    Encoding { path: String, offset: usize },
}

#[derive(Debug, Error)]
#[error("sentence {index}: {message}")]
pub struct SerializeError {
    pub index: usize,
    pub message: String,
}

/// Sentences that parsed cleanly, plus the errors that caused others to be
/// skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDocument {
    pub sentences: Vec<Sentence>,
    pub errors: Vec<LineError>,
}

pub fn parse_conllu(input: &str) -> ParsedDocument {
    let mut doc = ParsedDocument::default();
    let mut block = SentenceBuilder::default();
    let mut offset = 0;
    for (idx, raw) in input.split_inclusive('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            block.finish(&mut doc);
        } else {
            block.push(line, line_no, offset);
        }
        offset += raw.len();
    }
    block.finish(&mut doc);
    doc
}

pub fn parse_conllu_reader<R: Read>(
    mut reader: R,
    name: &str,
) -> Result<ParsedDocument, ConlluError> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|source| ConlluError::Io {
            path: name.to_string(),
            source,
        })?;
    let text = String::from_utf8(bytes).map_err(|e| ConlluError::Encoding {
        path: name.to_string(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(parse_conllu(&text))
}

pub fn read_conllu_file(path: &Path) -> Result<ParsedDocument, ConlluError> {
    let file = fs::File::open(path).map_err(|source| ConlluError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_conllu_reader(file, &path.display().to_string())
}

pub fn serialize_conllu(sentences: &[Sentence]) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (index, s) in sentences.iter().enumerate() {
        s.check()
            .map_err(|message| SerializeError { index, message })?;
        out.push_str(&s.to_string());
        out.push('\n');
    }
    Ok(out)
}

#[derive(Default)]
struct SentenceBuilder {
    sentence: Sentence,
    errors: Vec<LineError>,
    // (line, offset) of each token, for sentence-level diagnostics
    token_lines: Vec<(usize, usize)>,
    first_line: Option<(usize, usize)>,
}

impl SentenceBuilder {
    fn push(&mut self, line: &str, line_no: usize, offset: usize) {
        self.first_line.get_or_insert((line_no, offset));
        if line.starts_with('#') {
            self.sentence.comments.push(Comment::parse(line));
            return;
        }
        let err = |message: String| LineError {
            line: line_no,
            offset,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            self.errors.push(err(format!(
                "expected 10 tab-separated fields, found {}",
                fields.len()
            )));
            return;
        }
        if fields.iter().any(|f| f.is_empty()) {
            self.errors.push(err("empty field".into()));
            return;
        }
        let id = fields[0];
        if let Some((a, b)) = id.split_once('-') {
            match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(a), Ok(b)) if a >= 1 && a <= b => self.sentence.opaque.push(OpaqueRow {
                    position: self.sentence.tokens.len(),
                    line: line.to_string(),
                }),
                _ => self
                    .errors
                    .push(err(format!("malformed multiword range `{}`", id))),
            }
            return;
        }
        if let Some((a, b)) = id.split_once('.') {
            match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(_), Ok(_)) => self.sentence.opaque.push(OpaqueRow {
                    position: self.sentence.tokens.len(),
                    line: line.to_string(),
                }),
                _ => self
                    .errors
                    .push(err(format!("malformed empty node id `{}`", id))),
            }
            return;
        }
        let id = match id.parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                self.errors
                    .push(err(format!("token id `{}` is not a positive integer", id)));
                return;
            }
        };
        let head = match fields[6].parse::<usize>() {
            Ok(h) => h,
            Err(_) => {
                self.errors.push(err(format!(
                    "head `{}` is not a non-negative integer",
                    fields[6]
                )));
                return;
            }
        };
        let feats = match Features::parse(fields[5]) {
            Ok(f) => f,
            Err(m) => {
                self.errors.push(err(m));
                return;
            }
        };
        let optional = |s: &str| (s != "_").then(|| s.to_string());
        self.sentence.tokens.push(Token {
            id,
            form: fields[1].to_string(),
            lemma: fields[2].to_string(),
            upos: fields[3].to_string(),
            xpos: optional(fields[4]),
            feats,
            head,
            deprel: fields[7].to_string(),
            deps: optional(fields[8]),
            misc: Misc::parse(fields[9]),
        });
        self.token_lines.push((line_no, offset));
    }

    fn finish(&mut self, doc: &mut ParsedDocument) {
        let builder = std::mem::take(self);
        let Some(first) = builder.first_line else {
            return;
        };
        let mut errors = builder.errors;
        let sentence = builder.sentence;
        if errors.is_empty() {
            let n = sentence.tokens.len();
            if n == 0 {
                errors.push(LineError {
                    line: first.0,
                    offset: first.1,
                    message: "comment block without tokens".into(),
                });
            }
            for (i, t) in sentence.tokens.iter().enumerate() {
                let (line, offset) = builder.token_lines[i];
                let err = |message: String| LineError {
                    line,
                    offset,
                    message,
                };
                if t.id != i + 1 {
                    errors.push(err(format!("expected token id {}, found {}", i + 1, t.id)));
                } else if t.head > n {
                    errors.push(err(format!(
                        "head {} does not refer to a token (sentence has {})",
                        t.head, n
                    )));
                } else if t.head == t.id {
                    errors.push(err(format!("token {} is its own head", t.id)));
                }
            }
        }
        if errors.is_empty() {
            doc.sentences.push(sentence);
        } else {
            doc.errors.extend(errors);
        }
    }
}
