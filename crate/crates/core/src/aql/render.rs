//! Canonical rendering: uppercase keywords, one clause per line, utterances verbatim.

use super::ast::*;
use super::lexer::is_keyword;

pub fn render(stmt: &Statement) -> String {
    match stmt {
        Statement::Find(q) => render_query(q),
        Statement::Schema(SchemaQuery::AllSources) => "?".to_string(),
        Statement::Schema(SchemaQuery::OneSource(n)) | Statement::Schema(SchemaQuery::OneTable(n)) => {
            format!("? {}", ident(n))
        }
        Statement::Save { query, name } => {
            format!("SAVE (\n{}\n) AS {}", render_query(query), ident(name))
        }
        Statement::Output { table, destination } => match destination {
            Some(path) => format!("OUTPUT {} TO '{}'", ident(table), path.replace('\'', "''")),
            None => format!("OUTPUT {}", ident(table)),
        },
        Statement::Delete { table } => format!("DELETE {}", ident(table)),
    }
}

/// Statements separated by `;` lines; parses back with `parse_script`.
pub fn render_script(stmts: &[Statement]) -> String {
    stmts.iter().map(|s| format!("{};\n", render(s))).collect()
}

fn render_query(q: &FindQuery) -> String {
    let mut out = render_block(&q.head);
    for j in &q.joins {
        out.push_str("\nJOIN");
        match &j.condition {
            JoinCondition::NaturalByName => {}
            JoinCondition::Explicit(pairs) => {
                let parts: Vec<String> = pairs
                    .iter()
                    .map(|(l, r)| format!("{} = {}", ident(l), ident(r)))
                    .collect();
                out.push_str(&format!(" ON {}", parts.join(", ")));
            }
            JoinCondition::EntityName { left, right } => {
                out.push_str(&format!(" ON ENTITY {} = {}", ident(left), ident(right)));
            }
        }
        out.push('\n');
        out.push_str(&render_block(&j.block));
    }
    out
}

fn render_block(b: &FindBlock) -> String {
    let projections: Vec<String> = b.projections.iter().map(render_projection).collect();
    let mut out = format!("FIND {}\nFROM {}", projections.join(", "), ident(&b.source));
    if let Some(u) = &b.predicate {
        out.push_str("\nWHERE ");
        out.push_str(u);
    }
    out
}

fn render_projection(p: &Projection) -> String {
    match p {
        Projection::Star => "*".into(),
        Projection::Column(c) => ident(c),
        Projection::Aggregate { function, column } => format!(
            "{}({})",
            function.keyword(),
            column.as_deref().map_or_else(|| "*".to_string(), ident)
        ),
    }
}

/// Bare when lexable as an identifier, double-quoted otherwise.
pub fn ident(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !is_keyword(name)
        && !name.eq_ignore_ascii_case("entity")
        && !name.eq_ignore_ascii_case("to");
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn all_sources_renders_as_question_mark() {
        assert_eq!(render(&Statement::Schema(SchemaQuery::AllSources)), "?");
    }

    #[test]
    fn aggregate_find_is_one_clause_per_line() {
        let stmt = parse("find count(name) from buildings where has a Wikipedia page").unwrap();
        assert_eq!(
            render(&stmt),
            "FIND COUNT(name)\nFROM buildings\nWHERE has a Wikipedia page"
        );
    }

    #[test]
    fn keyword_named_columns_are_quoted() {
        let stmt = parse("FIND \"from\", subject FROM EMAIL.Message").unwrap();
        let text = render(&stmt);
        assert_eq!(text, "FIND \"from\", subject\nFROM EMAIL.Message");
        assert_eq!(parse(&text).unwrap(), stmt);
    }

    #[test]
    fn save_and_output_round_trip() {
        for src in [
            "SAVE (FIND a FROM t WHERE x (y)) AS z",
            "OUTPUT z TO 'it''s.ndjson'",
            "FIND a FROM t JOIN ON ENTITY a = b FIND b FROM u WHERE c is 'd' JOIN ON a = c FIND c FROM v",
        ] {
            let stmt = parse(src).unwrap();
            assert_eq!(parse(&render(&stmt)).unwrap(), stmt, "{src}");
        }
    }
}
