//! AQL: `FIND <columns> FROM <table> [WHERE <utterance>]` blocks chained
//! with `JOIN`, aggregates, `?` schema access, and `SAVE`/`OUTPUT`/`DELETE`.
//!
//! Extensions beyond the core grammar: an optional `ON` clause after `JOIN`
//! (`ON a = b, ...` or `ON ENTITY a = b` for normalized-name equality),
//! `OUTPUT t TO '<path>'`, and double-quoted identifiers for column names
//! that collide with keywords (`"from"`).

mod ast;
mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use lexer::{is_keyword, tokenize, Token, TokenKind};
pub use parser::{parse, parse_script};
pub use render::{ident as render_ident, render, render_script};
