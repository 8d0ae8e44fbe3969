//! Recursive-descent parser over the token stream.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};

/// Parse exactly one statement (a trailing `;` is allowed).
pub fn parse(text: &str) -> Result<Statement> {
    let mut stmts = parse_script(text)?;
    match stmts.len() {
        1 => Ok(stmts.remove(0)),
        0 => Err(Error::Parse {
            offset: 0,
            message: "empty statement".into(),
        }),
        _ => Err(Error::Parse {
            offset: 0,
            message: format!("expected one statement, found {}", stmts.len()),
        }),
    }
}

/// Parse a `;`-separated script. Empty statements are skipped.
pub fn parse_script(text: &str) -> Result<Vec<Statement>> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let mut out = Vec::new();
    loop {
        while p.eat(&TokenKind::Semicolon) {}
        if p.at_end() {
            break;
        }
        out.push(p.statement()?);
        if !p.at_end() && !p.eat(&TokenKind::Semicolon) {
            return Err(p.error("expected `;` or end of input after statement"));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_nth(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind, message: &str) -> Result<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.error(message))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(TokenKind::Ident(s)) | Some(TokenKind::QuotedIdent(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn statement(&mut self) -> Result<Statement> {
        match self.peek() {
            Some(TokenKind::SchemaIntro) => {
                self.pos += 1;
                match self.peek() {
                    Some(TokenKind::Ident(_)) | Some(TokenKind::QuotedIdent(_)) => {
                        let name = self.identifier("name")?;
                        Ok(Statement::Schema(if name.contains('.') {
                            SchemaQuery::OneTable(name)
                        } else {
                            SchemaQuery::OneSource(name)
                        }))
                    }
                    _ => Ok(Statement::Schema(SchemaQuery::AllSources)),
                }
            }
            Some(TokenKind::Find) => Ok(Statement::Find(self.find_query()?)),
            Some(TokenKind::Save) => {
                self.pos += 1;
                self.expect(&TokenKind::LParen, "expected `(` after SAVE")?;
                let query = self.find_query()?;
                self.expect(&TokenKind::RParen, "expected `)` to close SAVE query")?;
                self.expect(&TokenKind::As, "expected AS after SAVE (...)")?;
                let name_offset = self.offset();
                let name = self.identifier("table name after AS")?;
                if query.blocks().any(|b| b.source == name) {
                    return Err(Error::Parse {
                        offset: name_offset,
                        message: format!("SAVE target `{name}` is also a FROM table of its query"),
                    });
                }
                Ok(Statement::Save { query, name })
            }
            Some(TokenKind::Output) => {
                self.pos += 1;
                let table = self.identifier("table name after OUTPUT")?;
                let destination = match self.peek() {
                    Some(TokenKind::Ident(w)) if w.eq_ignore_ascii_case("to") => {
                        self.pos += 1;
                        match self.peek() {
                            Some(TokenKind::Str(s)) => {
                                let s = s.clone();
                                self.pos += 1;
                                Some(s)
                            }
                            _ => return Err(self.error("expected quoted path after TO")),
                        }
                    }
                    _ => None,
                };
                Ok(Statement::Output { table, destination })
            }
            Some(TokenKind::Delete) => {
                self.pos += 1;
                let table = self.identifier("table name after DELETE")?;
                Ok(Statement::Delete { table })
            }
            Some(_) => Err(self.error("expected FIND, SAVE, OUTPUT, DELETE or `?`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn find_query(&mut self) -> Result<FindQuery> {
        let head = self.block()?;
        let mut joins = Vec::new();
        while self.eat(&TokenKind::Join) {
            let condition = if self.eat(&TokenKind::On) {
                self.join_condition()?
            } else {
                JoinCondition::NaturalByName
            };
            if self.peek() != Some(&TokenKind::Find) {
                return Err(self.error("expected FIND after JOIN"));
            }
            joins.push(JoinClause {
                condition,
                block: self.block()?,
            });
        }
        Ok(FindQuery { head, joins })
    }

    fn join_condition(&mut self) -> Result<JoinCondition> {
        let entity = matches!(self.peek(), Some(TokenKind::Ident(w)) if w.eq_ignore_ascii_case("entity"))
            && matches!(
                self.peek_nth(1),
                Some(TokenKind::Ident(_)) | Some(TokenKind::QuotedIdent(_))
            );
        if entity {
            self.pos += 1;
            let (left, right) = self.column_pair()?;
            return Ok(JoinCondition::EntityName { left, right });
        }
        let mut pairs = vec![self.column_pair()?];
        while self.eat(&TokenKind::Comma) {
            pairs.push(self.column_pair()?);
        }
        Ok(JoinCondition::Explicit(pairs))
    }

    fn column_pair(&mut self) -> Result<(String, String)> {
        let left = self.identifier("left join column")?;
        self.expect(&TokenKind::Eq, "expected `=` in join condition")?;
        let right = self.identifier("right join column")?;
        Ok((left, right))
    }

    fn block(&mut self) -> Result<FindBlock> {
        self.expect(&TokenKind::Find, "expected FIND")?;
        let mut projections = Vec::new();
        if !matches!(self.peek(), Some(TokenKind::From) | None) {
            projections.push(self.projection()?);
            while self.eat(&TokenKind::Comma) {
                projections.push(self.projection()?);
            }
        }
        if projections.is_empty() {
            return Err(self.error("empty projection list"));
        }
        self.expect(&TokenKind::From, "missing FROM clause")?;
        let source = self.identifier("table name after FROM")?;
        let predicate = if self.eat(&TokenKind::Where) {
            let offset = self.offset();
            match self.peek() {
                Some(TokenKind::Utterance(u)) if !u.trim().is_empty() => {
                    let u = u.clone();
                    self.pos += 1;
                    Some(u)
                }
                _ => {
                    return Err(Error::Parse {
                        offset,
                        message: "empty WHERE utterance".into(),
                    })
                }
            }
        } else {
            None
        };
        Ok(FindBlock {
            projections,
            source,
            predicate,
        })
    }

    fn projection(&mut self) -> Result<Projection> {
        if self.eat(&TokenKind::Star) {
            return Ok(Projection::Star);
        }
        if let (Some(TokenKind::Ident(name)), Some(TokenKind::LParen)) = (self.peek(), self.peek_nth(1)) {
            let Some(function) = AggregateFunction::from_keyword(name) else {
                return Err(self.error(format!(
                    "unknown aggregate `{name}` (expected COUNT, SUM, AVG, MIN or MAX)"
                )));
            };
            self.pos += 2;
            let star = self.offset();
            let column = if self.eat(&TokenKind::Star) {
                if function != AggregateFunction::Count {
                    return Err(Error::Parse {
                        offset: star,
                        message: format!("{function}(*) is not allowed"),
                    });
                }
                None
            } else {
                Some(self.identifier("column inside aggregate")?)
            };
            self.expect(&TokenKind::RParen, "expected `)` after aggregate column")?;
            return Ok(Projection::Aggregate { function, column });
        }
        Ok(Projection::Column(self.identifier("column name")?))
    }
}
