use crate::error::{Error, Result};
use crate::predicate::{CmpOp, PredExpr};
use crate::text::{contains_phrase, is_stopword, normalize_column_name, tokenize};
use crate::value::{SemanticType, Value};

use super::{
    ColumnBinding, Dialect, NativePredicate, TranslationTrace, Translator, TranslatorColumn,
    TranslatorIdentity,
};

/// Rule-based translator: quoted literals, column comparisons, AND/OR
/// splitting, then a per-dialect fallback for whatever is left.
#[derive(Debug, Default, Clone, Copy)]
pub struct PatternTranslator;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Word(String),
    Lit(String),
}

impl Piece {
    fn key(&self) -> Option<String> {
        match self {
            Piece::Word(w) => Some(w.to_lowercase()),
            Piece::Lit(_) => None,
        }
    }

    fn raw(&self) -> &str {
        match self {
            Piece::Word(w) | Piece::Lit(w) => w,
        }
    }
}

const OPERATORS: &[(&[&str], CmpOp)] = &[
    (&["is", "greater", "than"], CmpOp::Gt),
    (&["is", "less", "than"], CmpOp::Lt),
    (&["is", "after"], CmpOp::Gt),
    (&["is", "before"], CmpOp::Lt),
    (&["greater", "than"], CmpOp::Gt),
    (&["less", "than"], CmpOp::Lt),
    (&["equals"], CmpOp::Eq),
    (&["is"], CmpOp::Eq),
    (&["="], CmpOp::Eq),
    (&[">"], CmpOp::Gt),
    (&["<"], CmpOp::Lt),
    (&["after"], CmpOp::Gt),
    (&["before"], CmpOp::Lt),
];

fn untranslatable(utterance: &str, reason: impl Into<String>) -> Error {
    Error::Untranslatable {
        utterance: utterance.to_string(),
        reason: reason.into(),
    }
}

fn split_pieces(utterance: &str) -> Result<Vec<Piece>> {
    let chars: Vec<char> = utterance.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Piece>| {
        let w = cur.trim_end_matches([',', ';', '?', '!', ':']);
        if !w.is_empty() {
            out.push(Piece::Word(w.to_string()));
        }
        cur.clear();
    };
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut cur, &mut out);
        } else if (c == '\'' || c == '"') && cur.is_empty() {
            let mut j = i + 1;
            let mut lit = String::new();
            loop {
                let Some(&d) = chars.get(j) else {
                    return Err(untranslatable(utterance, "unterminated quoted literal"));
                };
                let closes = d == c
                    && (c == '"' || !chars.get(j + 1).is_some_and(|n| n.is_alphanumeric()));
                if closes {
                    break;
                }
                lit.push(d);
                j += 1;
            }
            out.push(Piece::Lit(lit));
            i = j;
        } else if matches!(c, '=' | '<' | '>') {
            flush(&mut cur, &mut out);
            out.push(Piece::Word(c.to_string()));
        } else {
            cur.push(c);
        }
        i += 1;
    }
    flush(&mut cur, &mut out);
    Ok(out)
}

fn split_on<'a>(pieces: &'a [Piece], word: &str) -> Vec<&'a [Piece]> {
    pieces
        .split(|p| p.key().as_deref() == Some(word))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Maximal runs of non-stopword terms; stopwords, operators, and literals break runs.
fn content_runs(pieces: &[Piece]) -> Vec<Vec<String>> {
    let mut runs = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    for p in pieces {
        match p {
            Piece::Lit(_) => runs.push(std::mem::take(&mut cur)),
            Piece::Word(w) => {
                for t in tokenize(w) {
                    if is_stopword(&t) {
                        runs.push(std::mem::take(&mut cur));
                    } else {
                        cur.push(t);
                    }
                }
            }
        }
    }
    runs.push(cur);
    runs.retain(|r| !r.is_empty());
    runs
}

struct Comparison {
    prefix: usize,
    node: PredExpr,
    description: String,
}

fn match_comparison(pieces: &[Piece], columns: &[TranslatorColumn]) -> Option<Comparison> {
    let mut ordered: Vec<(&TranslatorColumn, Vec<String>)> = columns
        .iter()
        .map(|c| {
            let key = normalize_column_name(&c.name);
            (c, key.split(' ').map(str::to_string).collect())
        })
        .collect();
    ordered.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.name.cmp(&b.0.name)));
    let keys: Vec<Option<String>> = pieces.iter().map(Piece::key).collect();
    for start in 0..pieces.len() {
        for (col, toks) in &ordered {
            let end = start + toks.len();
            if end > pieces.len()
                || !toks.iter().zip(&keys[start..end]).all(|(t, k)| k.as_deref() == Some(t))
            {
                continue;
            }
            for (words, op) in OPERATORS {
                let op_end = end + words.len();
                if op_end >= pieces.len()
                    || !words
                        .iter()
                        .zip(&keys[end..op_end])
                        .all(|(w, k)| k.as_deref() == Some(*w))
                {
                    continue;
                }
                let rest = &pieces[op_end..];
                let raw = match rest {
                    [Piece::Lit(s)] => s.clone(),
                    _ => rest.iter().map(Piece::raw).collect::<Vec<_>>().join(" "),
                };
                let Some(value) = Value::parse_as(raw.trim(), col.ty) else {
                    continue;
                };
                if value.is_null() {
                    continue;
                }
                return Some(Comparison {
                    prefix: start,
                    description: format!("comparison {} {op} '{value}'", col.name),
                    node: PredExpr::Compare {
                        column: col.name.clone(),
                        op: *op,
                        value,
                    },
                });
            }
        }
    }
    None
}

fn text_columns(columns: &[TranslatorColumn]) -> Vec<&TranslatorColumn> {
    columns.iter().filter(|c| c.ty == SemanticType::Text).collect()
}

impl PatternTranslator {
    fn literal_node(
        &self,
        lit: &str,
        columns: &[TranslatorColumn],
        dialect: Dialect,
        utterance: &str,
        trace: &mut TranslationTrace,
    ) -> Result<Option<PredExpr>> {
        let terms = tokenize(lit);
        if terms.is_empty() {
            return Ok(None);
        }
        if dialect.is_keyword_like() {
            trace.patterns.push(format!("quoted literal '{lit}' -> keyword query"));
            return Ok(Some(PredExpr::Keyword {
                terms,
                columns: Vec::new(),
            }));
        }
        let text = text_columns(columns);
        if text.is_empty() {
            return Err(untranslatable(utterance, "quoted literal but no text columns"));
        }
        trace
            .patterns
            .push(format!("quoted literal '{lit}' -> contains over text columns"));
        Ok(Some(PredExpr::or(
            text.iter()
                .map(|c| PredExpr::Contains {
                    column: c.name.clone(),
                    phrase: lit.to_string(),
                })
                .collect(),
        )))
    }

    fn fallback(
        &self,
        runs: Vec<Vec<String>>,
        columns: &[TranslatorColumn],
        dialect: Dialect,
        utterance: &str,
        trace: &mut TranslationTrace,
    ) -> Result<Vec<PredExpr>> {
        let pool: Vec<String> = runs.iter().flatten().cloned().collect();
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        if dialect.is_keyword_like() {
            trace.fallback = Some(format!("keyword conjunction ({})", pool.join(" ")));
            return Ok(vec![PredExpr::Keyword {
                terms: pool,
                columns: Vec::new(),
            }]);
        }
        let text = text_columns(columns);
        if text.is_empty() {
            return Err(untranslatable(
                utterance,
                "no translatable content and no text columns",
            ));
        }
        let vocab: Vec<(&TranslatorColumn, Vec<Vec<String>>)> = text
            .iter()
            .filter(|c| !c.vocabulary.is_empty())
            .map(|c| (*c, c.vocabulary.iter().map(|v| tokenize(v)).collect()))
            .collect();
        let mut nodes = Vec::new();
        let mut unbound = Vec::new();
        for run in &runs {
            let mut i = 0;
            while i < run.len() {
                let hit = (1..=run.len() - i).rev().find_map(|len| {
                    let gram = &run[i..i + len];
                    let cols: Vec<String> = vocab
                        .iter()
                        .filter(|(_, entries)| entries.iter().any(|e| contains_phrase(e, gram)))
                        .map(|(c, _)| c.name.clone())
                        .collect();
                    (!cols.is_empty()).then(|| (len, gram.join(" "), cols))
                });
                match hit {
                    Some((len, phrase, cols)) => {
                        nodes.push(PredExpr::or(
                            cols.iter()
                                .map(|c| PredExpr::Contains {
                                    column: c.clone(),
                                    phrase: phrase.clone(),
                                })
                                .collect(),
                        ));
                        trace.bindings.push(ColumnBinding {
                            phrase,
                            columns: cols,
                        });
                        i += len;
                    }
                    None => {
                        unbound.push(run[i].clone());
                        i += 1;
                    }
                }
            }
        }
        if nodes.is_empty() {
            trace.fallback = Some(format!(
                "contains-any over text columns ({})",
                pool.join(" ")
            ));
            return Ok(vec![PredExpr::or(
                text.iter()
                    .map(|c| PredExpr::Keyword {
                        terms: pool.clone(),
                        columns: vec![c.name.clone()],
                    })
                    .collect(),
            )]);
        }
        trace.fallback = Some("vocabulary binding".into());
        trace.residual.extend(unbound);
        Ok(nodes)
    }
}

impl Translator for PatternTranslator {
    fn identity(&self) -> TranslatorIdentity {
        TranslatorIdentity::Deterministic
    }

    fn translate(
        &self,
        utterance: &str,
        columns: &[TranslatorColumn],
        dialect: Dialect,
    ) -> Result<NativePredicate> {
        let utterance = utterance.trim();
        if utterance.is_empty() {
            return Err(untranslatable(utterance, "empty utterance"));
        }
        let mut trace = TranslationTrace::new(utterance, dialect, self.identity());
        let pieces = split_pieces(utterance)?;
        trace.literals = pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Lit(s) => Some(s.clone()),
                _ => None,
            })
            .collect();

        let branches = split_on(&pieces, "or");
        trace.or_branches = branches.len();
        trace.and_clauses = 0;
        let mut out = Vec::new();
        for branch in branches {
            let clauses = split_on(branch, "and");
            trace.and_clauses += clauses.len();
            let mut nodes = Vec::new();
            let mut leftover = Vec::new();
            for clause in clauses {
                if let Some(cmp) = match_comparison(clause, columns) {
                    trace.patterns.push(cmp.description);
                    for run in content_runs(&clause[..cmp.prefix]) {
                        trace.residual.extend(run);
                    }
                    nodes.push(cmp.node);
                } else if clause.iter().any(|p| matches!(p, Piece::Lit(_))) {
                    for p in clause {
                        match p {
                            Piece::Lit(s) => {
                                if let Some(n) =
                                    self.literal_node(s, columns, dialect, utterance, &mut trace)?
                                {
                                    nodes.push(n);
                                }
                            }
                            Piece::Word(_) => {
                                for run in content_runs(std::slice::from_ref(p)) {
                                    trace.residual.extend(run);
                                }
                            }
                        }
                    }
                } else {
                    leftover.extend(content_runs(clause));
                }
            }
            nodes.extend(self.fallback(leftover, columns, dialect, utterance, &mut trace)?);
            if nodes.is_empty() {
                return Err(untranslatable(utterance, "no translatable content"));
            }
            out.push(PredExpr::and(nodes));
        }
        if out.is_empty() {
            return Err(untranslatable(utterance, "no translatable content"));
        }
        Ok(NativePredicate {
            dialect,
            body: PredExpr::or(out),
            trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::explain_translation;

    fn col(name: &str, ty: SemanticType, vocab: &[&str]) -> TranslatorColumn {
        TranslatorColumn {
            name: name.into(),
            ty,
            vocabulary: vocab.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn faculty() -> Vec<TranslatorColumn> {
        vec![
            col("full_name", SemanticType::Text, &[]),
            col(
                "title",
                SemanticType::Text,
                &["Professor", "Associate Professor", "Assistant Professor"],
            ),
            col("lab", SemanticType::Text, &["Research Lab", "Teaching Lab"]),
            col("hired", SemanticType::Date, &[]),
        ]
    }

    fn kw(terms: &[&str]) -> PredExpr {
        PredExpr::Keyword {
            terms: terms.iter().map(|s| s.to_string()).collect(),
            columns: vec![],
        }
    }

    #[test]
    fn award_utterance_becomes_keyword_disjunction() {
        let p = PatternTranslator
            .translate(
                "people associated with 'Turing Award' or 'Nobel Prize'",
                &[col("title", SemanticType::Text, &[]), col("text", SemanticType::Text, &[])],
                Dialect::KeywordQuery,
            )
            .unwrap();
        assert_eq!(p.body, PredExpr::Or(vec![kw(&["turing", "award"]), kw(&["nobel", "prize"])]));
        let report = explain_translation(&p);
        assert!(report.contains("quoted literals: 2"), "{report}");
        assert!(report.contains("split: OR into 2 branches"), "{report}");
        assert_eq!(p.trace.residual, ["people", "associated"]);
    }

    #[test]
    fn explicit_address_comparison() {
        let cols = vec![
            col("from", SemanticType::Text, &[]),
            col("subject", SemanticType::Text, &[]),
        ];
        let p = PatternTranslator
            .translate("from = alice@example.org", &cols, Dialect::MailFilter)
            .unwrap();
        assert_eq!(
            p.body,
            PredExpr::Compare {
                column: "from".into(),
                op: CmpOp::Eq,
                value: Value::Text("alice@example.org".into())
            }
        );
        assert_eq!(p.native_text(), "from:alice@example.org");
    }

    #[test]
    fn professor_utterance_binds_title_and_lab() {
        let p = PatternTranslator
            .translate(
                "the person is a professor in the research lab",
                &faculty(),
                Dialect::BooleanExpression,
            )
            .unwrap();
        assert_eq!(
            p.body,
            PredExpr::And(vec![
                PredExpr::Contains { column: "title".into(), phrase: "professor".into() },
                PredExpr::Contains { column: "lab".into(), phrase: "research lab".into() },
            ])
        );
        assert_eq!(p.trace.residual, ["person"]);
    }

    #[test]
    fn date_range_conjunction() {
        let p = PatternTranslator
            .translate(
                "hired after 2020-01-31 and hired before 2021-01-01",
                &faculty(),
                Dialect::BooleanExpression,
            )
            .unwrap();
        let PredExpr::And(parts) = &p.body else { panic!("{:?}", p.body) };
        assert_eq!(parts.len(), 2);
        assert!(matches!(parts[0], PredExpr::Compare { op: CmpOp::Gt, .. }));
        assert!(matches!(parts[1], PredExpr::Compare { op: CmpOp::Lt, .. }));
    }

    #[test]
    fn underscore_and_space_are_equivalent_in_column_names() {
        let p = PatternTranslator
            .translate("full name is Ada Lovelace", &faculty(), Dialect::BooleanExpression)
            .unwrap();
        assert_eq!(
            p.body,
            PredExpr::Compare {
                column: "full_name".into(),
                op: CmpOp::Eq,
                value: Value::Text("Ada Lovelace".into())
            }
        );
    }

    #[test]
    fn pure_fallback_is_a_keyword_conjunction() {
        let p = PatternTranslator
            .translate("benchmark results", &faculty(), Dialect::KeywordQuery)
            .unwrap();
        assert_eq!(p.body, kw(&["benchmark", "results"]));
        assert!(explain_translation(&p).contains("fallback: keyword conjunction"));
    }

    #[test]
    fn unbound_boolean_fallback_is_contains_any() {
        let p = PatternTranslator
            .translate("quantum things", &faculty(), Dialect::BooleanExpression)
            .unwrap();
        let PredExpr::Or(parts) = &p.body else { panic!("{:?}", p.body) };
        assert_eq!(parts.len(), 3);
    }

    #[test]
    fn errors_are_surfaced() {
        let numeric = vec![col("n", SemanticType::Integer, &[])];
        assert!(matches!(
            PatternTranslator.translate("  ", &numeric, Dialect::BooleanExpression),
            Err(Error::Untranslatable { .. })
        ));
        assert!(matches!(
            PatternTranslator.translate("big ones", &numeric, Dialect::BooleanExpression),
            Err(Error::Untranslatable { .. })
        ));
        assert!(PatternTranslator
            .translate("n greater than 3", &numeric, Dialect::BooleanExpression)
            .is_ok());
        assert!(PatternTranslator
            .translate("the of a", &faculty(), Dialect::KeywordQuery)
            .is_err());
    }

    #[test]
    fn apostrophes_inside_literals_survive() {
        let p = PatternTranslator
            .translate("'Turing's legacy'", &faculty(), Dialect::KeywordQuery)
            .unwrap();
        assert_eq!(p.trace.literals, ["Turing's legacy"]);
    }

    #[test]
    fn deterministic_translation_is_free() {
        let p = PatternTranslator
            .translate("title is Professor", &faculty(), Dialect::BooleanExpression)
            .unwrap();
        assert_eq!((p.trace.token_usage.input, p.trace.token_usage.output), (0, 0));
        assert_eq!(p.trace.provider_cost, 0.0);
    }
}
