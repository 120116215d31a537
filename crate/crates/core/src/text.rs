//! Feature-string normalization and tokenization shared by the catalog,
//! the text encoder and the lexicon matcher.

/// Unicode default case fold of the trimmed string.
pub fn normalize_feature(s: &str) -> String {
    caseless::default_case_fold_str(s.trim())
}

/// Case-folded whitespace tokens.
pub fn tokens(s: &str) -> Vec<String> {
    normalize_feature(s)
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}
