//! WebAssembly bindings for the static demo page in `www/`. Every export
//! takes and returns JSON strings; failures come back as `{"error": ...}`.

pub mod demo;

use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub fn catalogue() -> String {
    demo::catalogue()
}

#[wasm_bindgen]
pub fn search_figures(selection: &str) -> String {
    demo::search(selection)
}

#[wasm_bindgen]
pub fn explore_retrieval(request: &str) -> String {
    demo::explore(request)
}

#[wasm_bindgen]
pub fn check_text(text: &str) -> String {
    demo::check_text(text)
}
