//! Removal of unmatched quotation marks from model answers.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// `"` or `'`: opens or closes depending on the stack.
    Symmetric,
    /// Only opens.
    Open,
    /// Closes a matching opener, otherwise opens.
    CloseOrOpen,
    /// Only closes.
    Close,
}

fn kind(c: char) -> Option<Kind> {
    match c {
        '"' | '\'' => Some(Kind::Symmetric),
        '„' | '‚' | '«' | '‹' => Some(Kind::Open),
        '“' | '‘' => Some(Kind::CloseOrOpen),
        '”' | '’' | '»' | '›' => Some(Kind::Close),
        _ => None,
    }
}

fn closes(opener: char, closer: char) -> bool {
    matches!(
        (opener, closer),
        ('"', '"')
            | ('\'', '\'')
            | ('„', '“')
            | ('„', '”')
            | ('“', '”')
            | ('‚', '‘')
            | ('‚', '’')
            | ('‘', '’')
            | ('«', '»')
            | ('‹', '›')
    )
}

fn is_apostrophe(chars: &[char], i: usize) -> bool {
    if !matches!(chars[i], '\'' | '’') {
        return false;
    }
    // Neighbours are looked up past other quote marks so that removing those
    // cannot turn a quote into an apostrophe on a second pass.
    let not_quote = |c: &&char| kind(**c).is_none();
    let before = chars[..i].iter().rev().find(not_quote);
    let after = chars[i + 1..].iter().find(not_quote);
    before.is_some_and(|c| c.is_alphabetic()) && after.is_some_and(|c| c.is_alphabetic())
}

/// Drops quotation marks that have no partner. Paired quotes and apostrophes
/// inside words are kept.
pub fn postprocess_answer(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<usize> = Vec::new();
    let mut drop = vec![false; chars.len()];
    for (i, &c) in chars.iter().enumerate() {
        let Some(k) = kind(c) else { continue };
        if is_apostrophe(&chars, i) {
            continue;
        }
        let partner = stack.iter().rposition(|&j| closes(chars[j], c));
        match (k, partner) {
            (Kind::Open, _) => stack.push(i),
            (_, Some(p)) => {
                for j in stack.drain(p..).skip(1) {
                    drop[j] = true;
                }
            }
            (Kind::Close, None) => drop[i] = true,
            (Kind::Symmetric | Kind::CloseOrOpen, None) => stack.push(i),
        }
    }
    for j in stack {
        drop[j] = true;
    }
    chars
        .iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(c, _)| c)
        .collect()
}
