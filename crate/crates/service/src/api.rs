//! HTTP routes. IRIs travel as prefixed names; `/meta/prefixes` lists the
//! prefixes in use.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::{FromRequest, FromRequestParts, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Duration, Utc};
use figura_core::annotation::{
    verify_text, AnnotationError, AnnotationRecord, ExampleRecord, FlagOutcome, FlagUpdate, NewExample,
    VerificationReport,
};
use figura_core::ontology::figures::label_of;
use figura_core::ontology::{
    all_figures, figure_info, find_figure, property_vocabulary, search_figures, Choice, Dimension, FigureInfo, Iri,
    PropertySelection,
};
use figura_core::rag::RagError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::jsonl::now;
use crate::state::AppState;

type Shared = Arc<AppState>;

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Json<T>(pub T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
pub struct Path<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct Query<T>(pub T);

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/meta/prefixes", get(prefixes))
        .route("/examples", post(submit_example))
        .route("/examples/random", get(random_example))
        .route("/examples/{id}", get(get_example))
        .route("/fyf/search", post(search))
        .route("/fyf/annotate", post(annotate))
        .route("/chat", post(chat))
        .route("/figures", get(list_figures))
        .route("/figures/{name}", get(get_figure))
        .route("/vocabulary/{dimension}", get(vocabulary))
        .route("/admin/flags", post(admin_flags))
        .route("/admin/export", get(admin_export))
        .route("/admin/review", get(admin_review))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), log_request))
        .with_state(state)
}

async fn log_request(State(state): State<Shared>, req: Request, next: Next) -> Response {
    let started = Instant::now();
    let method = req.method().to_string();
    let path = req.uri().path().to_string();
    let res = next.run(req).await;
    let status = res.status().as_u16();
    tracing::info!(%method, %path, status, "request");
    if let Some(log) = &state.request_log {
        log.write(&json!({
            "ts": now(),
            "method": method,
            "path": path,
            "status": status,
            "duration_ms": started.elapsed().as_millis() as u64,
        }));
    }
    res
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "Diese Seite gibt es nicht.")
}

/// Runs blocking work (SQLite, outbound HTTP) off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

// ---------------------------------------------------------------- payloads

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FigureSummary {
    pub figure: String,
    pub label: String,
    pub parents: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DefinitionOut {
    pub id: String,
    pub text: String,
    pub author: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExampleOut {
    pub id: String,
    pub text: String,
    pub author: Option<String>,
    pub source: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FigureDetail {
    pub figure: String,
    pub label: String,
    pub parents: Vec<String>,
    pub definitions: Vec<DefinitionOut>,
    pub examples: Vec<ExampleOut>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AnnotationOut {
    pub id: i64,
    pub example_id: i64,
    pub figure: String,
    pub is_verified: bool,
    pub created_at: DateTime<Utc>,
}

impl AppState {
    fn compact(&self, iri: &Iri) -> String {
        self.ontology.prefixes().compact(iri)
    }

    fn detail(&self, info: FigureInfo) -> FigureDetail {
        FigureDetail {
            figure: self.compact(&info.iri),
            label: info.label,
            parents: info.parents.iter().map(|p| self.compact(p)).collect(),
            definitions: info
                .definitions
                .into_iter()
                .map(|d| DefinitionOut {
                    id: self.compact(&d.id),
                    text: d.text.lexical,
                    author: d.author.map(|a| a.lexical),
                })
                .collect(),
            examples: info
                .examples
                .into_iter()
                .map(|e| ExampleOut {
                    id: self.compact(&e.id),
                    text: e.text.lexical,
                    author: e.author.map(|a| a.lexical),
                    source: e.source.map(|s| s.lexical),
                })
                .collect(),
        }
    }

    fn annotation_out(&self, a: AnnotationRecord) -> AnnotationOut {
        AnnotationOut {
            id: a.id,
            example_id: a.example_id,
            figure: self.compact(&a.figure_iri),
            is_verified: a.is_verified,
            created_at: a.created_at,
        }
    }
}

fn store_error(e: AnnotationError) -> ApiError {
    match e {
        AnnotationError::MissingProvenance => missing_provenance(),
        AnnotationError::ConfirmationRequired(report) => ApiError::new(
            StatusCode::PRECONDITION_REQUIRED,
            "confirmation_required",
            "Der Text hat die automatische Prüfung nicht bestanden. Bitte bestätige, dass du ihn trotzdem speichern möchtest.",
        )
        .with_details(json!({ "verification": report })),
        AnnotationError::NoEligibleExample => ApiError::new(
            StatusCode::NOT_FOUND,
            "no_example",
            "Es ist kein Beispiel zum Annotieren verfügbar.",
        ),
        AnnotationError::UnknownExample(id) => {
            ApiError::new(StatusCode::NOT_FOUND, "unknown_example", format!("Das Beispiel {id} gibt es nicht."))
        }
        AnnotationError::UnknownFigure(iri) => unknown_figure(iri.local_name()),
        AnnotationError::NoFigures => ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_figures",
            "Bitte wähle mindestens eine Figur aus.",
        ),
        AnnotationError::RepetitionCheckFailed { figures } => ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "repetition_required",
            "Für die gewählten Wiederholungsfiguren muss sich mindestens ein Wort in gleicher Form wiederholen. Im Text wiederholt sich kein Wort.",
        )
        .with_details(json!({ "figures": figures.iter().map(|f| f.local_name()).collect::<Vec<_>>() })),
        AnnotationError::DuplicateAnnotation { example_id, figure } => ApiError::new(
            StatusCode::CONFLICT,
            "duplicate_annotation",
            format!("Das Beispiel ist bereits mit der Figur {} annotiert.", figure.local_name()),
        )
        .with_details(json!({ "example_id": example_id, "figure": figure.local_name() })),
        AnnotationError::UnknownAnnotation(id) => {
            ApiError::new(StatusCode::NOT_FOUND, "unknown_annotation", format!("annotation {id} does not exist"))
        }
        other => ApiError::internal(other),
    }
}

fn missing_provenance() -> ApiError {
    ApiError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        "missing_provenance",
        "Bitte gib mindestens einen Autor oder eine Quelle an.",
    )
}

fn unknown_figure(name: &str) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        "unknown_figure",
        format!("Die rhetorische Figur „{name}“ ist nicht bekannt."),
    )
    .with_details(json!({ "figure": name }))
}

// ---------------------------------------------------------------- meta

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub ontology_figures: usize,
    pub index_built: bool,
}

async fn health(State(s): State<Shared>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        ontology_figures: all_figures(&s.ontology).len(),
        index_built: s.index().is_some(),
    })
}

async fn prefixes(State(s): State<Shared>) -> Json<BTreeMap<String, String>> {
    Json(
        s.ontology
            .prefixes()
            .iter()
            .map(|(p, ns)| (p.to_string(), ns.to_string()))
            .collect(),
    )
}

// ---------------------------------------------------------------- examples

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub text: String,
    #[serde(default)]
    pub context: Option<String>,
    #[serde(default)]
    pub author: Option<String>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub confirm: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitResponse {
    #[serde(flatten)]
    pub example: ExampleRecord,
    pub verification: VerificationReport,
}

async fn submit_example(
    State(s): State<Shared>,
    Json(req): Json<SubmitRequest>,
) -> Result<(StatusCode, Json<SubmitResponse>), ApiError> {
    let new = NewExample {
        text: req.text,
        context: req.context,
        author: req.author,
        source: req.source,
    };
    if !new.has_provenance() {
        return Err(missing_provenance());
    }
    let confirm = req.confirm;
    let res = blocking(move || {
        let sv = &s.services;
        let report = verify_text(&new.text, sv.detector.as_ref(), sv.grammar.as_ref(), sv.gibberish.as_ref());
        s.store
            .submit_example(&new, &report, confirm)
            .map(|example| SubmitResponse {
                example,
                verification: report,
            })
    })
    .await?;
    res.map(|r| (StatusCode::CREATED, Json(r))).map_err(store_error)
}

async fn random_example(State(s): State<Shared>) -> Result<Json<ExampleRecord>, ApiError> {
    blocking(move || s.store.random_example()).await?.map(Json).map_err(store_error)
}

async fn get_example(State(s): State<Shared>, Path(id): Path<i64>) -> Result<Json<ExampleRecord>, ApiError> {
    blocking(move || s.store.example(id)).await?.map(Json).map_err(store_error)
}

// ---------------------------------------------------------------- find your figure

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub operation: Option<String>,
    #[serde(default)]
    pub affected_element: Option<String>,
    #[serde(default)]
    pub operational_form: Option<String>,
    #[serde(default)]
    pub position: Option<String>,
    #[serde(default)]
    pub area: Option<String>,
}

impl SearchRequest {
    fn get(&self, dim: Dimension) -> Option<&str> {
        match dim {
            Dimension::Operation => self.operation.as_deref(),
            Dimension::AffectedElement => self.affected_element.as_deref(),
            Dimension::OperationalForm => self.operational_form.as_deref(),
            Dimension::Position => self.position.as_deref(),
            Dimension::Area => self.area.as_deref(),
        }
    }
}

/// Accepts a prefixed name, full IRI, local name or label of a vocabulary value.
fn resolve_value(s: &AppState, dim: Dimension, value: &str) -> Option<Iri> {
    let vocab = property_vocabulary(&s.ontology, dim);
    let value = value.trim();
    if let Some(iri) = s.ontology.prefixes().resolve(value) {
        if vocab.contains(&iri) {
            return Some(iri);
        }
    }
    let lower = value.to_lowercase();
    vocab
        .into_iter()
        .find(|v| v.local_name().to_lowercase() == lower || label_of(&s.ontology, v).to_lowercase() == lower)
}

async fn search(State(s): State<Shared>, Json(req): Json<SearchRequest>) -> Result<Json<Vec<FigureDetail>>, ApiError> {
    let mut sel = PropertySelection::default();
    for dim in Dimension::ALL {
        if let Some(value) = req.get(dim) {
            let iri = resolve_value(&s, dim, value).ok_or_else(|| {
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "unknown_property_value",
                    format!("„{value}“ ist kein bekannter Wert für diese Eigenschaft."),
                )
                .with_details(json!({ "dimension": dim.as_str(), "value": value }))
            })?;
            sel.set(dim, Choice::Value(iri));
        }
    }
    let hits = search_figures(&s.ontology, &sel);
    let out = hits
        .into_iter()
        .map(|f| figure_info(&s.ontology, &f.iri).map(|i| s.detail(i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ApiError::internal)?;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateRequest {
    pub example_id: i64,
    pub figures: Vec<String>,
}

async fn annotate(
    State(s): State<Shared>,
    Json(req): Json<AnnotateRequest>,
) -> Result<(StatusCode, Json<Vec<AnnotationOut>>), ApiError> {
    let figures = req
        .figures
        .iter()
        .map(|name| {
            find_figure(&s.ontology, name).ok_or_else(|| {
                let mut e = unknown_figure(name);
                e.status = StatusCode::UNPROCESSABLE_ENTITY;
                e
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let state = s.clone();
    let res = blocking(move || state.store.annotate(req.example_id, &figures, &state.ontology, &state.rule)).await?;
    let records = res.map_err(store_error)?;
    Ok((
        StatusCode::CREATED,
        Json(records.into_iter().map(|a| s.annotation_out(a)).collect()),
    ))
}

// ---------------------------------------------------------------- chat

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequestBody {
    pub question: String,
    #[serde(default)]
    pub example_id: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChatResponse {
    pub answer: String,
    pub contexts: Vec<String>,
    pub rerank_fallback: bool,
}

async fn chat(State(s): State<Shared>, Json(req): Json<ChatRequestBody>) -> Result<Json<ChatResponse>, ApiError> {
    if req.question.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "empty_question",
            "Bitte gib eine Frage ein.",
        ));
    }
    let index = s.index().ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "index_not_ready",
            "Der Suchindex wird noch aufgebaut. Bitte versuche es gleich noch einmal.",
        )
    })?;
    let res = blocking(move || {
        let question = match req.example_id {
            Some(id) => {
                let ex = s.store.example(id)?;
                format!("Beispiel: „{}“\n{}", ex.text, req.question.trim())
            }
            None => req.question.trim().to_string(),
        };
        let sv = &s.services;
        Ok::<_, AnnotationError>(index.answer(&question, sv.embedder.as_ref(), sv.reranker.as_ref(), sv.llm.as_ref()))
    })
    .await?
    .map_err(store_error)?;
    match res {
        Ok(a) => Ok(Json(ChatResponse {
            answer: a.text,
            contexts: a.contexts.texts,
            rerank_fallback: a.contexts.rerank_fallback,
        })),
        Err(RagError::Llm { source, contexts }) => Err(ApiError::new(
            StatusCode::BAD_GATEWAY,
            "llm_unavailable",
            "Das Sprachmodell ist gerade nicht erreichbar. Die gefundenen Textstellen stehen unten.",
        )
        .with_details(json!({ "contexts": contexts, "reason": source.to_string() }))),
        Err(e @ RagError::Index(_)) => Err(ApiError::new(
            StatusCode::BAD_GATEWAY,
            "retrieval_unavailable",
            "Die Suche in der Wissensbasis ist gerade nicht möglich.",
        )
        .with_details(json!({ "reason": e.to_string() }))),
        Err(e) => Err(ApiError::internal(e)),
    }
}

// ---------------------------------------------------------------- figures

async fn list_figures(State(s): State<Shared>) -> Json<Vec<FigureSummary>> {
    let mut out: Vec<FigureSummary> = all_figures(&s.ontology)
        .into_iter()
        .map(|f| FigureSummary {
            figure: s.compact(&f.iri),
            label: f.label,
            parents: f.parents.iter().map(|p| s.compact(p)).collect(),
        })
        .collect();
    out.sort_by(|a, b| a.label.to_lowercase().cmp(&b.label.to_lowercase()).then(a.figure.cmp(&b.figure)));
    Json(out)
}

async fn get_figure(State(s): State<Shared>, Path(name): Path<String>) -> Result<Json<FigureDetail>, ApiError> {
    let iri = find_figure(&s.ontology, &name).ok_or_else(|| unknown_figure(&name))?;
    let info = figure_info(&s.ontology, &iri).map_err(ApiError::internal)?;
    Ok(Json(s.detail(info)))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VocabularyEntry {
    pub value: String,
    pub label: String,
}

async fn vocabulary(
    State(s): State<Shared>,
    Path(dimension): Path<String>,
) -> Result<Json<Vec<VocabularyEntry>>, ApiError> {
    let dim: Dimension = dimension.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_dimension",
            format!("Die Eigenschaft „{dimension}“ gibt es nicht."),
        )
        .with_details(json!({ "known": Dimension::ALL.iter().map(|d| d.as_str()).collect::<Vec<_>>() }))
    })?;
    Ok(Json(
        property_vocabulary(&s.ontology, dim)
            .iter()
            .map(|v| VocabularyEntry {
                value: s.compact(v),
                label: label_of(&s.ontology, v),
            })
            .collect(),
    ))
}

// ---------------------------------------------------------------- admin

fn authorize(s: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match (&s.admin_token, given) {
        (Some(expected), Some(given)) if expected == given => Ok(()),
        _ => Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "admin token missing or invalid")),
    }
}

async fn admin_flags(
    State(s): State<Shared>,
    headers: HeaderMap,
    Json(update): Json<FlagUpdate>,
) -> Result<Json<serde_json::Value>, ApiError> {
    authorize(&s, &headers)?;
    if update.example_id.is_none() && update.annotation_id.is_none() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_request",
            "example_id or annotation_id is required",
        ));
    }
    let state = s.clone();
    let FlagOutcome { example, annotation } = blocking(move || state.store.set_flags(&update))
        .await?
        .map_err(|e| match e {
            AnnotationError::UnknownExample(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_example", format!("example {id} does not exist"))
            }
            other => store_error(other),
        })?;
    Ok(Json(json!({
        "example": example,
        "annotation": annotation.map(|a| s.annotation_out(a)),
    })))
}

async fn admin_export(State(s): State<Shared>, headers: HeaderMap) -> Result<Response, ApiError> {
    authorize(&s, &headers)?;
    let body = blocking(move || {
        let mut buf = Vec::new();
        s.store.export_jsonl(&mut buf).map(|_| buf)
    })
    .await?
    .map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

#[derive(Debug, Deserialize)]
pub struct ReviewQuery {
    pub since: Option<DateTime<Utc>>,
}

/// Submissions of the last day (or since `since`) not yet marked harmful.
async fn admin_review(
    State(s): State<Shared>,
    headers: HeaderMap,
    Query(q): Query<ReviewQuery>,
) -> Result<Json<Vec<ExampleRecord>>, ApiError> {
    authorize(&s, &headers)?;
    let since = q.since.unwrap_or_else(|| Utc::now() - Duration::days(1));
    blocking(move || s.store.review_queue(since))
        .await?
        .map(Json)
        .map_err(ApiError::internal)
}
