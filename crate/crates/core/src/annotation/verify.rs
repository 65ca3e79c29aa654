use serde::{Deserialize, Serialize};

use crate::external::ExternalError;

pub const MIN_TEXT_CHARS: usize = 10;
pub const MAX_TEXT_CHARS: usize = 1000;

/// Identifies the language of a text as an ISO 639-1 code.
pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> Option<String>;
}

pub trait GrammarChecker: Send + Sync {
    /// `Ok(true)` when the checker finds no problems.
    fn check(&self, text: &str) -> Result<bool, ExternalError>;
}

pub trait GibberishJudge: Send + Sync {
    fn is_gibberish(&self, text: &str) -> Result<bool, ExternalError>;
}

/// Prompt sent to an LLM-backed gibberish judge. Only an answer starting with
/// "yes" counts as gibberish.
pub const GIBBERISH_PROMPT: &str = "Is the following text gibberish, i.e. not meaningful natural language? \
Answer with exactly one word: yes or no.\n\nText:\n";

pub fn judge_answer_is_yes(answer: &str) -> bool {
    let a = answer.trim().trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    a == "yes" || a.starts_with("yes") || a == "ja"
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Accept,
    Warn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub language_ok: bool,
    pub length_ok: bool,
    pub grammar_ok: bool,
    /// Set only when a basic check failed and the judge answered.
    pub gibberish_flag: Option<bool>,
    pub overall: Overall,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn basic_checks_pass(&self) -> bool {
        self.language_ok && self.length_ok && self.grammar_ok
    }
}

pub fn length_ok(text: &str) -> bool {
    (MIN_TEXT_CHARS..=MAX_TEXT_CHARS).contains(&text.chars().count())
}

/// Language, length and grammar checks; the judge is consulted only when one
/// of them fails. An unreachable judge yields `Warn` so a human reviews it.
pub fn verify_text(
    text: &str,
    detector: &dyn LanguageDetector,
    grammar: &dyn GrammarChecker,
    judge: &dyn GibberishJudge,
) -> VerificationReport {
    let language_ok = !text.trim().is_empty() && detector.detect(text).as_deref() == Some("de");
    let length_ok = length_ok(text);
    let (grammar_ok, grammar_note) = match grammar.check(text) {
        Ok(ok) => (ok, None),
        Err(e) => (false, Some(format!("grammar checker unavailable: {e}"))),
    };
    let mut report = VerificationReport {
        language_ok,
        length_ok,
        grammar_ok,
        gibberish_flag: None,
        overall: Overall::Accept,
        note: grammar_note,
    };
    if report.basic_checks_pass() {
        return report;
    }
    match judge.is_gibberish(text) {
        Ok(flag) => {
            report.gibberish_flag = Some(flag);
            if flag {
                report.overall = Overall::Warn;
            }
        }
        Err(e) => {
            report.overall = Overall::Warn;
            report.note = Some(format!("gibberish judge unavailable: {e}"));
        }
    }
    report
}

/// Deterministic stand-ins for the external checkers.
pub mod stubs {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;

    /// Classifies by counting frequent German versus English function words.
    #[derive(Clone, Debug, Default)]
    pub struct StopwordDetector;

    const GERMAN: &[&str] = &[
        "der", "die", "das", "und", "ist", "nicht", "ein", "eine", "ich", "du", "er", "sie", "es", "wir", "ihr",
        "mit", "zu", "den", "dem", "des", "im", "auf", "für", "von", "mich", "mein", "sich", "was", "wer", "wie",
        "auch", "nach", "um", "am", "kam", "sah", "ist", "sind", "war", "aber", "oder", "so", "schon", "nur",
    ];
    const ENGLISH: &[&str] = &[
        "the", "and", "is", "not", "a", "an", "i", "you", "he", "she", "it", "we", "they", "with", "to", "of",
        "in", "on", "for", "my", "what", "who", "how", "was", "are", "but", "or", "so", "only", "this", "that",
    ];

    impl LanguageDetector for StopwordDetector {
        fn detect(&self, text: &str) -> Option<String> {
            let mut de = 0;
            let mut en = 0;
            for w in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
                let w = w.to_lowercase();
                if w.chars().any(|c| "äöüß".contains(c)) {
                    de += 1;
                }
                if GERMAN.contains(&w.as_str()) {
                    de += 1;
                }
                if ENGLISH.contains(&w.as_str()) {
                    en += 1;
                }
            }
            match (de, en) {
                (0, 0) => None,
                (d, e) if d >= e => Some("de".into()),
                _ => Some("en".into()),
            }
        }
    }

    #[derive(Clone, Debug)]
    pub struct FixedLanguage(pub Option<&'static str>);

    impl LanguageDetector for FixedLanguage {
        fn detect(&self, _text: &str) -> Option<String> {
            self.0.map(str::to_string)
        }
    }

    #[derive(Clone, Debug)]
    pub struct FixedGrammar(pub bool);

    impl GrammarChecker for FixedGrammar {
        fn check(&self, _text: &str) -> Result<bool, ExternalError> {
            Ok(self.0)
        }
    }

    /// Judge with a fixed verdict that counts how often it was asked.
    #[derive(Debug)]
    pub struct CountingJudge {
        verdict: Result<bool, ExternalError>,
        calls: AtomicUsize,
    }

    impl CountingJudge {
        pub fn new(verdict: bool) -> Self {
            CountingJudge {
                verdict: Ok(verdict),
                calls: AtomicUsize::new(0),
            }
        }

        pub fn failing() -> Self {
            CountingJudge {
                verdict: Err(ExternalError::Timeout),
                calls: AtomicUsize::new(0),
            }
        }

        pub fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl GibberishJudge for CountingJudge {
        fn is_gibberish(&self, _text: &str) -> Result<bool, ExternalError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.verdict.clone()
        }
    }

    /// Flags texts without any vowel-bearing word of three letters or more.
    #[derive(Clone, Debug, Default)]
    pub struct HeuristicJudge;

    impl GibberishJudge for HeuristicJudge {
        fn is_gibberish(&self, text: &str) -> Result<bool, ExternalError> {
            let words = text
                .split_whitespace()
                .filter(|w| w.chars().count() >= 3 && w.chars().any(|c| "aeiouäöüAEIOUÄÖÜ".contains(c)))
                .count();
            Ok(words == 0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::stubs::*;
    use super::*;

    fn german() -> FixedLanguage {
        FixedLanguage(Some("de"))
    }

    #[test]
    fn length_boundaries() {
        assert!(!length_ok(&"a".repeat(9)));
        assert!(length_ok(&"a".repeat(10)));
        assert!(length_ok(&"a".repeat(1000)));
        assert!(!length_ok(&"a".repeat(1001)));
        // Characters, not bytes.
        assert!(length_ok(&"ä".repeat(10)));
        assert!(!length_ok(&"ä".repeat(9)));
    }

    #[test]
    fn nine_chars_consults_judge() {
        let judge = CountingJudge::new(false);
        let r = verify_text("Ich kam, ", &german(), &FixedGrammar(true), &judge);
        assert!(!r.length_ok);
        assert_eq!(judge.calls(), 1);
        assert_eq!(r.gibberish_flag, Some(false));
        assert_eq!(r.overall, Overall::Accept);
    }

    #[test]
    fn empty_text_fails_language_and_length() {
        let judge = CountingJudge::new(true);
        let r = verify_text("", &StopwordDetector, &FixedGrammar(true), &judge);
        assert!(!r.language_ok);
        assert!(!r.length_ok);
        assert_eq!(r.gibberish_flag, Some(true));
        assert_eq!(r.overall, Overall::Warn);
    }

    #[test]
    fn well_formed_sentence_skips_judge() {
        let text = "Das Wasser rauscht, das Wasser schwoll am Ufer.";
        assert_eq!(text.chars().count(), 47);
        let judge = CountingJudge::new(true);
        let r = verify_text(text, &StopwordDetector, &FixedGrammar(true), &judge);
        assert!(r.basic_checks_pass());
        assert_eq!(judge.calls(), 0);
        assert_eq!(r.gibberish_flag, None);
        assert_eq!(r.overall, Overall::Accept);
    }

    #[test]
    fn judge_outage_fails_open_to_warn() {
        let judge = CountingJudge::failing();
        let r = verify_text("The water rises again.", &StopwordDetector, &FixedGrammar(true), &judge);
        assert!(!r.language_ok);
        assert_eq!(r.gibberish_flag, None);
        assert_eq!(r.overall, Overall::Warn);
        assert!(r.note.unwrap().contains("unavailable"));
    }

    #[test]
    fn judge_answers() {
        assert!(judge_answer_is_yes("Yes."));
        assert!(judge_answer_is_yes(" yes"));
        assert!(!judge_answer_is_yes("No"));
        assert!(!judge_answer_is_yes("maybe yes"));
    }

    #[test]
    fn stopword_detector() {
        assert_eq!(StopwordDetector.detect("Das ist nicht gut").as_deref(), Some("de"));
        assert_eq!(StopwordDetector.detect("This is not good").as_deref(), Some("en"));
        assert_eq!(StopwordDetector.detect("xq zv"), None);
    }
}
