//! Per-source access rules: `access.json` is a list of
//! `{"principal": <glob>, "table": <glob>, "decision": "allow" | "deny"}`.

use std::path::Path;

use glob::{MatchOptions, Pattern};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Allow,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRule {
    pub principal: String,
    pub table: String,
    pub decision: Decision,
}

#[derive(Debug, Clone)]
struct Compiled {
    principal: Pattern,
    table: Pattern,
    decision: Decision,
}

/// `None` means no rule file: everything is allowed. With rules, the first
/// match wins and unmatched requests are denied.
#[derive(Debug, Clone, Default)]
pub struct AccessRules {
    rules: Option<Vec<Compiled>>,
}

const OPTIONS: MatchOptions = MatchOptions {
    case_sensitive: false,
    require_literal_separator: false,
    require_literal_leading_dot: false,
};

impl AccessRules {
    pub fn allow_all() -> Self {
        AccessRules { rules: None }
    }

    pub fn from_rules(rules: &[AccessRule]) -> Result<Self> {
        let pattern = |p: &str| {
            Pattern::new(p).map_err(|e| Error::Catalog(format!("bad access pattern `{p}`: {e}")))
        };
        let compiled = rules
            .iter()
            .map(|r| {
                Ok(Compiled {
                    principal: pattern(&r.principal)?,
                    table: pattern(&r.table)?,
                    decision: r.decision,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AccessRules {
            rules: Some(compiled),
        })
    }

    /// Reads `dir/access.json` if present.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("access.json");
        if !path.exists() {
            return Ok(Self::allow_all());
        }
        let text = std::fs::read_to_string(&path)?;
        let rules: Vec<AccessRule> = serde_json::from_str(&text).map_err(|e| Error::Fixture {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_rules(&rules)
    }

    pub fn decide(&self, principal: &str, table: &str) -> Decision {
        let Some(rules) = &self.rules else {
            return Decision::Allow;
        };
        rules
            .iter()
            .find(|r| {
                r.principal.matches_with(principal, OPTIONS) && r.table.matches_with(table, OPTIONS)
            })
            .map_or(Decision::Deny, |r| r.decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(p: &str, t: &str, d: Decision) -> AccessRule {
        AccessRule {
            principal: p.into(),
            table: t.into(),
            decision: d,
        }
    }

    #[test]
    fn no_rule_file_allows() {
        assert_eq!(AccessRules::allow_all().decide("guest", "EMAIL.Message"), Decision::Allow);
    }

    #[test]
    fn deny_pattern_matches_source_prefix() {
        let r = AccessRules::from_rules(&[
            rule("guest", "Email.*", Decision::Deny),
            rule("*", "*", Decision::Allow),
        ])
        .unwrap();
        assert_eq!(r.decide("guest", "EMAIL.Message"), Decision::Deny);
        assert_eq!(r.decide("alice", "EMAIL.Message"), Decision::Allow);
    }

    #[test]
    fn first_match_wins_and_default_is_deny() {
        let r = AccessRules::from_rules(&[
            rule("*", "DW.*", Decision::Allow),
            rule("*", "DW.*", Decision::Deny),
        ])
        .unwrap();
        assert_eq!(r.decide("anyone", "DW.faculty"), Decision::Allow);
        assert_eq!(r.decide("anyone", "WIKI.Page"), Decision::Deny);
    }
}
