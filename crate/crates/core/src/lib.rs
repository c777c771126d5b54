//! Construction-grammar patterns over dependency treebanks.
//!
//! Constructions are written in CoNLL-C ([`conllc`]), compiled to patterns
//! ([`compiler`]) that can be printed as Grew queries or run directly against
//! CoNLL-U sentences ([`conllu`], [`matcher`]). Semantic slot constraints use
//! WordNet topics from a [`lexicon`]; [`coverage`] measures how much of a
//! treebank's vocabulary that lexicon tags.

pub mod cli;
pub mod compiler;
pub mod conllc;
pub mod conllu;
pub mod coverage;
pub mod lexicon;
pub mod matcher;

pub use compiler::{compile, emit_grew, Pattern};
pub use conllc::{parse_conllc, validate, CxnDef};
pub use conllu::{parse_conllu, serialize_conllu, Sentence, Token};
pub use lexicon::{Lexicon, Pos, Topic};
pub use matcher::{match_corpus, match_sentence, Match, MatchOptions};
