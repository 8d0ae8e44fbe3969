//! Tokenization and string normalization shared by wrappers, the translator,
//! and the reference predicate evaluator.

/// Lowercased alphanumeric terms. `@`, `.`, `-` inside a term are separators.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// True when `needle` occurs as a contiguous run inside `haystack`.
pub fn contains_phrase(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() {
        return true;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Case-fold and collapse whitespace. Used for text equality comparisons.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

const HONORIFICS: &[&str] = &[
    "dr", "prof", "professor", "mr", "mrs", "ms", "mx", "sir", "dame", "lord", "lady",
];
const SUFFIXES: &[&str] = &["jr", "sr", "phd", "md"];

/// Normalized person/entity name: case-folded, punctuation dropped,
/// whitespace collapsed, leading honorifics and trailing suffixes removed.
pub fn normalize_entity(s: &str) -> String {
    let mut words: Vec<String> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric() || *c == '-' || *c == '\'')
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect();
    while words.len() > 1 && HONORIFICS.contains(&words[0].as_str()) {
        words.remove(0);
    }
    while words.len() > 1 && SUFFIXES.contains(&words[words.len() - 1].as_str()) {
        words.pop();
    }
    words.join(" ")
}

/// Lowercase, treat `_` as space, collapse whitespace. Column-name matching key.
pub fn normalize_column_name(s: &str) -> String {
    normalize_text(&s.replace('_', " "))
}

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "any", "are", "as", "at", "be", "been", "by", "each", "for", "from",
    "has", "have", "in", "into", "is", "it", "its", "of", "on", "or", "that", "the", "their",
    "them", "there", "these", "this", "those", "to", "was", "were", "which", "who", "whose",
    "with", "and", "whether", "what", "where", "when", "do", "does", "did", "i", "me", "my",
    "we", "our", "they", "he", "she", "his", "her",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}
