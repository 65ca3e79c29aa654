#![allow(dead_code)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::routing::post;
use axum::Router;
use figura_service::{router, AppState, ServiceConfig, Services};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const TOKEN: &str = "s3cret";

pub fn config(extra: &[(&str, &str)]) -> ServiceConfig {
    let mut vars: HashMap<String, String> = HashMap::new();
    vars.insert("FIGURA_DB".into(), ":memory:".into());
    vars.insert("FIGURA_ADMIN_TOKEN".into(), TOKEN.into());
    vars.insert("FIGURA_SEED".into(), "7".into());
    for (k, v) in extra {
        vars.insert(k.to_string(), v.to_string());
    }
    ServiceConfig::from_vars(&vars).unwrap()
}

pub fn state_with(services: Services, extra: &[(&str, &str)]) -> Arc<AppState> {
    Arc::new(AppState::new(&config(extra), services).unwrap())
}

/// In-memory state on offline doubles, index built.
pub fn ready_state() -> Arc<AppState> {
    let s = state_with(Services::stubs(), &[]);
    s.build_index(None).unwrap();
    s
}

pub struct Client {
    pub app: Router,
}

impl Client {
    pub fn new(state: Arc<AppState>) -> Self {
        Client { app: router(state) }
    }

    pub async fn send(&self, method: &str, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send("GET", uri, None, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send("POST", uri, Some(body), None).await
    }

    pub async fn submit(&self, text: &str) -> i64 {
        let (status, v) = self
            .post("/examples", json!({ "text": text, "author": "Test", "confirm": true }))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["id"].as_i64().unwrap()
    }
}

pub fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

/// An OpenAI-style chat endpoint on its own thread that records every
/// request body.
pub struct StubServer {
    pub addr: SocketAddr,
    pub bodies: Arc<Mutex<Vec<Value>>>,
}

impl StubServer {
    pub fn start(reply: &'static str) -> Self {
        Self::with_responder(move |_| reply.to_string())
    }

    pub fn with_responder(respond: impl Fn(&Value) -> String + Clone + Send + Sync + 'static) -> Self {
        let bodies: Arc<Mutex<Vec<Value>>> = Arc::default();
        let seen = bodies.clone();
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let app = Router::new().route(
                    "/v1/chat/completions",
                    post(move |axum::Json(body): axum::Json<Value>| {
                        let seen = seen.clone();
                        let respond = respond.clone();
                        async move {
                            let reply = respond(&body);
                            seen.lock().unwrap().push(body);
                            axum::Json(json!({
                                "choices": [{ "message": { "role": "assistant", "content": reply } }]
                            }))
                        }
                    }),
                );
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        StubServer {
            addr: rx.recv().unwrap(),
            bodies,
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.bodies.lock().unwrap().clone()
    }
}
