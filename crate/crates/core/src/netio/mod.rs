//! The network text format, evidence files and DOT export.

mod lexer;
mod parser;
mod writer;

pub use lexer::{tokenize, Span, Tok, Token};
pub use parser::{
    load_network, parse_evidence, parse_network, EvidenceDecl, LoadedNetwork, NetworkDocument,
    NodeDecl, ParseError, ParseErrorKind, RowDecl, Spanned, TableDecl,
};
pub use writer::{export_dot, write_network};
