/// Lowercases, drops punctuation and collapses whitespace, so that
/// "J. R. R. Tolkien" and "j r r tolkien" compare equal.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Word tokens of a label or n-gram, normalized.
pub fn words(s: &str) -> Vec<String> {
    normalize(s)
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` over characters of the
/// normalized strings. Two empty strings are identical.
pub fn ratio(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&normalize(a), &normalize(b))
}

/// The complement of [`ratio`], in `[0, 1]`.
pub fn distance(a: &str, b: &str) -> f64 {
    1.0 - ratio(a, b)
}
