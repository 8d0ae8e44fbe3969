//! Native text for each dialect. Provenance records this string.

use crate::predicate::{CmpOp, PredExpr};
use crate::value::Value;

use super::Dialect;

pub fn render_native(body: &PredExpr, dialect: Dialect) -> String {
    match dialect {
        Dialect::BooleanExpression => boolean(body),
        Dialect::KeywordQuery => keyword(body),
        Dialect::MailFilter => mail(body),
        Dialect::FactLookup => format!("LOOKUP {}", boolean(body)),
    }
}

fn sql_literal(v: &Value) -> String {
    match v {
        Value::Integer(_) | Value::Real(_) | Value::Boolean(_) => v.to_string(),
        other => format!("'{}'", other.to_string().replace('\'', "''")),
    }
}

fn join(parts: &[PredExpr], sep: &str, f: fn(&PredExpr) -> String) -> String {
    let inner: Vec<String> = parts
        .iter()
        .map(|p| match p {
            PredExpr::And(_) | PredExpr::Or(_) => format!("({})", f(p)),
            _ => f(p),
        })
        .collect();
    inner.join(sep)
}

fn boolean(p: &PredExpr) -> String {
    match p {
        PredExpr::Compare { column, op, value } => format!("{column} {op} {}", sql_literal(value)),
        PredExpr::Contains { column, phrase } => {
            format!("{column} LIKE '%{}%'", phrase.replace('\'', "''"))
        }
        PredExpr::Keyword { terms, columns } => {
            let cols = if columns.is_empty() { "*".to_string() } else { columns.join(", ") };
            format!("MATCH({cols}) AGAINST ('{}')", terms.join(" ").replace('\'', "''"))
        }
        PredExpr::And(xs) => join(xs, " AND ", boolean),
        PredExpr::Or(xs) => join(xs, " OR ", boolean),
    }
}

fn keyword(p: &PredExpr) -> String {
    match p {
        PredExpr::Compare { column, op, value } => {
            let op = match op {
                CmpOp::Eq => "",
                CmpOp::Gt => ">",
                CmpOp::Lt => "<",
            };
            format!("{column}:{op}\"{value}\"")
        }
        PredExpr::Contains { column, phrase } => format!("{column}:\"{phrase}\""),
        PredExpr::Keyword { terms, columns } => {
            let t: Vec<String> = terms.iter().map(|t| format!("+{t}")).collect();
            if columns.is_empty() {
                t.join(" ")
            } else {
                format!("{}:({})", columns.join("|"), t.join(" "))
            }
        }
        PredExpr::And(xs) => join(xs, " AND ", keyword),
        PredExpr::Or(xs) => join(xs, " OR ", keyword),
    }
}

fn mail(p: &PredExpr) -> String {
    match p {
        PredExpr::Compare { column, op, value } => match (op, value) {
            (CmpOp::Gt, Value::Date(d)) => format!("{column}-after:{}", d.format("%Y/%m/%d")),
            (CmpOp::Lt, Value::Date(d)) => format!("{column}-before:{}", d.format("%Y/%m/%d")),
            (CmpOp::Eq, v) => format!("{column}:{v}"),
            (op, v) => format!("{column}{op}{v}"),
        },
        PredExpr::Contains { column, phrase } => format!("{column}:\"{phrase}\""),
        PredExpr::Keyword { terms, columns } => {
            let body = format!("\"{}\"", terms.join(" "));
            if columns.is_empty() {
                body
            } else {
                format!("{{{}}}:{body}", columns.join(" "))
            }
        }
        PredExpr::And(xs) => join(xs, " ", mail),
        PredExpr::Or(xs) => format!("{{{}}}", join(xs, " ", mail)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mail_filter_renders_address_equality() {
        let p = PredExpr::Compare {
            column: "from".into(),
            op: CmpOp::Eq,
            value: Value::Text("alice@example.org".into()),
        };
        assert_eq!(render_native(&p, Dialect::MailFilter), "from:alice@example.org");
        assert_eq!(render_native(&p, Dialect::BooleanExpression), "from = 'alice@example.org'");
    }

    #[test]
    fn keyword_or_renders_both_branches() {
        let kw = |t: &[&str]| PredExpr::Keyword {
            terms: t.iter().map(|s| s.to_string()).collect(),
            columns: vec![],
        };
        let p = PredExpr::Or(vec![kw(&["turing", "award"]), kw(&["nobel", "prize"])]);
        assert_eq!(
            render_native(&p, Dialect::KeywordQuery),
            "+turing +award OR +nobel +prize"
        );
    }
}
