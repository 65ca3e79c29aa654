//! Example submission, verification and the annotation store.

pub mod model;
pub mod repetition;
#[cfg(feature = "sqlite")]
pub mod store;
pub mod verify;

pub use model::{AnnotationRecord, ExampleRecord, ExportLine, FlagOutcome, FlagUpdate, NewExample};
pub use repetition::{check_lexical_repetition, repeated_tokens};
#[cfg(feature = "sqlite")]
pub use store::{AnnotationError, AnnotationStore, RepetitionRule};
pub use verify::{
    length_ok, verify_text, GibberishJudge, GrammarChecker, LanguageDetector, Overall, VerificationReport,
};
