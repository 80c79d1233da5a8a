//! HTTP surface: `POST /question` answers one question, `GET /health`
//! reports liveness. Errors come back as `{"error": ...}`.

use std::io::Write;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgqa_core::pipeline::Engine;
use serde::Deserialize;
use serde_json::json;

use crate::{AnswerResponse, CliError};

#[derive(Deserialize)]
struct QuestionRequest {
    question: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn question(State(engine): State<Arc<Engine>>, body: Result<Json<QuestionRequest>, JsonRejection>) -> Response {
    let req = match body {
        Ok(Json(req)) => req,
        Err(rejection) => return error(rejection.status(), rejection.body_text()),
    };
    if req.question.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "question is empty");
    }
    // The engine blocks on remote endpoints, so keep it off the async workers.
    match tokio::task::spawn_blocking(move || engine.answer_question(&req.question)).await {
        Ok(outcome) => Json(AnswerResponse::from(&outcome)).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/question", post(question))
        .with_state(engine)
}

/// Binds `host:port` and serves until the process is stopped. The bound
/// address is printed first so callers can pass port 0.
pub fn run(engine: Engine, host: &str, port: u16) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    // Held here so the engine, and any blocking HTTP client inside it, is
    // dropped outside the runtime.
    let engine = Arc::new(engine);
    let app = router(Arc::clone(&engine));
    let result = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Server(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        axum::serve(listener, app)
            .await
            .map_err(|e| CliError::Server(e.to_string()))
    });
    drop(runtime);
    drop(engine);
    result
}
