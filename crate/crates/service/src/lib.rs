//! HTTP service and tooling around the rhetorical-figure core library.

pub mod adapters;
pub mod api;
pub mod config;
pub mod error;
pub mod eval_judge;
pub mod jsonl;
pub mod state;

pub use api::router;
pub use config::ServiceConfig;
pub use state::{AppState, Services};
