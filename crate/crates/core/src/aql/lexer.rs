//! Tokenizer. The WHERE payload is captured whole as one raw utterance token.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Find,
    From,
    Where,
    Join,
    On,
    Save,
    As,
    Output,
    Delete,
    /// `?` schema introspection
    SchemaIntro,
    Ident(String),
    QuotedIdent(String),
    Str(String),
    Utterance(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Star,
    Semicolon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

pub const KEYWORDS: &[&str] = &[
    "FIND", "FROM", "WHERE", "JOIN", "ON", "SAVE", "AS", "OUTPUT", "DELETE",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word.to_ascii_uppercase().as_str() {
        "FIND" => TokenKind::Find,
        "FROM" => TokenKind::From,
        "WHERE" => TokenKind::Where,
        "JOIN" => TokenKind::Join,
        "ON" => TokenKind::On,
        "SAVE" => TokenKind::Save,
        "AS" => TokenKind::As,
        "OUTPUT" => TokenKind::Output,
        "DELETE" => TokenKind::Delete,
        _ => return None,
    })
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    Lexer { text, pos: 0 }.run()
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, byte: usize) -> Option<char> {
        self.text.get(byte..).and_then(|s| s.chars().next())
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn run(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let start = self.pos;
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if self.text[self.pos..].starts_with("--") {
                self.skip_line();
                continue;
            }
            let kind = match c {
                '?' => {
                    self.bump();
                    TokenKind::SchemaIntro
                }
                '(' | ')' | ',' | '=' | '*' | ';' => {
                    self.bump();
                    match c {
                        '(' => TokenKind::LParen,
                        ')' => TokenKind::RParen,
                        ',' => TokenKind::Comma,
                        '=' => TokenKind::Eq,
                        '*' => TokenKind::Star,
                        _ => TokenKind::Semicolon,
                    }
                }
                '\'' => TokenKind::Str(self.quoted('\'')?),
                '"' => TokenKind::QuotedIdent(self.quoted('"')?),
                c if is_ident_start(c) => {
                    while self.peek().is_some_and(is_ident_char) {
                        self.bump();
                    }
                    let word = &self.text[start..self.pos];
                    match keyword(word) {
                        Some(TokenKind::Where) => {
                            out.push(Token {
                                kind: TokenKind::Where,
                                offset: start,
                            });
                            let (offset, utterance) = self.utterance()?;
                            out.push(Token {
                                kind: TokenKind::Utterance(utterance),
                                offset,
                            });
                            continue;
                        }
                        Some(k) => k,
                        None => TokenKind::Ident(word.to_string()),
                    }
                }
                other => {
                    return Err(Error::Lex {
                        offset: start,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            out.push(Token {
                kind,
                offset: start,
            });
        }
        Ok(out)
    }

    /// Quoted literal or identifier; `''` / `""` escape the delimiter.
    fn quoted(&mut self, delim: char) -> Result<String> {
        let open = self.pos;
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(Error::Lex {
                        offset: open,
                        message: "unterminated quoted literal".into(),
                    })
                }
                Some(c) if c == delim => {
                    if self.peek() == Some(delim) {
                        self.bump();
                        s.push(delim);
                    } else {
                        return Ok(s);
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    /// Raw text up to `JOIN`, `;`, an unbalanced `)`, or end of input.
    /// Quoted spans are skipped over; `--` comments are dropped.
    fn utterance(&mut self) -> Result<(usize, String)> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let begin = self.pos;
        let mut text = String::new();
        let mut depth = 0usize;
        let mut prev: Option<char> = None;
        while let Some(c) = self.peek() {
            let at_word_start = !prev.is_some_and(char::is_alphanumeric);
            match c {
                ';' => break,
                ')' if depth == 0 => break,
                '(' => depth += 1,
                ')' => depth -= 1,
                '-' if self.text[self.pos..].starts_with("--") => {
                    self.skip_line();
                    text.push('\n');
                    prev = Some('\n');
                    continue;
                }
                '"' => {
                    let span = self.literal_span('"', false)?;
                    text.push_str(span);
                    prev = Some('"');
                    continue;
                }
                '\'' if at_word_start => {
                    let span = self.literal_span('\'', true)?;
                    text.push_str(span);
                    prev = Some('\'');
                    continue;
                }
                c if at_word_start && c.is_ascii_alphabetic() => {
                    let end = self.text[self.pos..]
                        .find(|ch: char| !ch.is_alphanumeric())
                        .map_or(self.text.len(), |e| self.pos + e);
                    let word = &self.text[self.pos..end];
                    if word.eq_ignore_ascii_case("join") {
                        break;
                    }
                    text.push_str(word);
                    self.pos = end;
                    prev = word.chars().last();
                    continue;
                }
                _ => {}
            }
            text.push(c);
            prev = Some(c);
            self.bump();
        }
        Ok((begin, text.trim().to_string()))
    }

    /// Consume a quoted span inside an utterance and return it verbatim,
    /// quotes included. A single quote only closes when not followed by a
    /// letter or digit, so apostrophes inside the literal survive.
    fn literal_span(&mut self, delim: char, word_boundary_close: bool) -> Result<&'a str> {
        let open = self.pos;
        self.bump();
        loop {
            match self.bump() {
                None => {
                    return Err(Error::Lex {
                        offset: open,
                        message: "unterminated quoted literal".into(),
                    })
                }
                Some(c) if c == delim => {
                    let next = self.peek_at(self.pos);
                    if !word_boundary_close || !next.is_some_and(char::is_alphanumeric) {
                        return Ok(&self.text[open..self.pos]);
                    }
                }
                Some(_) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn schema_intro_is_a_single_token() {
        assert_eq!(kinds("?"), vec![TokenKind::SchemaIntro]);
    }

    #[test]
    fn where_payload_is_one_utterance() {
        assert_eq!(
            kinds("FIND full_name FROM faculty WHERE the person is a professor in the research lab"),
            vec![
                TokenKind::Find,
                TokenKind::Ident("full_name".into()),
                TokenKind::From,
                TokenKind::Ident("faculty".into()),
                TokenKind::Where,
                TokenKind::Utterance("the person is a professor in the research lab".into()),
            ]
        );
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(
            kinds("find a from t"),
            vec![
                TokenKind::Find,
                TokenKind::Ident("a".into()),
                TokenKind::From,
                TokenKind::Ident("t".into()),
            ]
        );
    }

    #[test]
    fn unterminated_quote_reports_opening_offset() {
        let err = tokenize("FIND a FROM t WHERE \"unclosed").unwrap_err();
        assert_eq!(err.offset(), Some(20));
        let err = tokenize("FIND a FROM t WHERE about 'Turing").unwrap_err();
        assert_eq!(err.offset(), Some(26));
        assert!(tokenize("OUTPUT t TO 'x").is_err());
    }

    #[test]
    fn utterance_stops_at_join_and_keeps_other_keywords() {
        let toks = kinds("FIND a FROM t WHERE mail from bob on monday as usual JOIN FIND b FROM u");
        assert_eq!(
            toks[5],
            TokenKind::Utterance("mail from bob on monday as usual".into())
        );
        assert_eq!(toks[6], TokenKind::Join);
    }

    #[test]
    fn apostrophes_and_quoted_join_do_not_end_the_utterance() {
        let toks = kinds("FIND a FROM t WHERE the person's lab is 'join us' now; DELETE x");
        assert_eq!(
            toks[5],
            TokenKind::Utterance("the person's lab is 'join us' now".into())
        );
        assert_eq!(toks[6], TokenKind::Semicolon);
    }

    #[test]
    fn utterance_inside_save_stops_at_closing_paren() {
        let toks = kinds("SAVE (FIND a FROM t WHERE x (aside) y) AS z");
        assert_eq!(toks[7], TokenKind::Utterance("x (aside) y".into()));
        assert_eq!(toks[8], TokenKind::RParen);
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(
            kinds("-- header\nFIND a -- trailing\nFROM t"),
            vec![
                TokenKind::Find,
                TokenKind::Ident("a".into()),
                TokenKind::From,
                TokenKind::Ident("t".into()),
            ]
        );
    }
}
