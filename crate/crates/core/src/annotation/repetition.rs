use std::collections::HashMap;

/// True when some token of at least two characters occurs twice or more
/// after case folding. Tokens are maximal alphanumeric runs, so punctuation
/// and surrounding whitespace never affect the result.
pub fn check_lexical_repetition(text: &str) -> bool {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for token in tokens(text) {
        let c = counts.entry(token).or_default();
        *c += 1;
        if *c >= 2 {
            return true;
        }
    }
    false
}

/// The repeated tokens, sorted; used for rejection messages.
pub fn repeated_tokens(text: &str) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for token in tokens(text) {
        *counts.entry(token).or_default() += 1;
    }
    let mut out: Vec<String> = counts.into_iter().filter(|(_, c)| *c >= 2).map(|(t, _)| t).collect();
    out.sort();
    out
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
}
