//! HTTP front end for the task board.

use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::board::{BoardError, TaskBoard};
use super::verdict::{Answer, Verdict, VerdictLog};
use super::ValidationError;
use crate::repository::CountryCode;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct ValidationService {
    board: Mutex<TaskBoard>,
    log: VerdictLog,
    clock: Clock,
}

impl ValidationService {
    /// Replays `log` into `board` so a restarted service keeps its state.
    pub fn open(mut board: TaskBoard, log: VerdictLog) -> Result<Self, ValidationError> {
        board.replay(log.read_all()?);
        Ok(ValidationService {
            board: Mutex::new(board),
            log,
            clock: Arc::new(Utc::now),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/api/tasks/next", get(next_task))
            .route("/api/verdicts", post(submit))
            .route("/api/progress", get(progress))
            .with_state(Arc::new(self))
    }
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: String,
    country: String,
}

/// Task payload shown to an annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: String,
    pub question: String,
    pub category: String,
    pub item: String,
    pub answered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictSubmission {
    pub task_id: String,
    pub annotator_id: String,
    pub answer: Answer,
    #[serde(default)]
    pub justification: Option<String>,
}

fn error(status: StatusCode, code: &str, message: String, field: Option<&str>) -> Response {
    let mut body = json!({"error": code, "message": message});
    if let Some(f) = field {
        body["field"] = json!(f);
    }
    (status, Json(body)).into_response()
}

fn board_error(e: BoardError) -> Response {
    let msg = e.to_string();
    match e {
        BoardError::UnknownAnnotator(_) => error(StatusCode::FORBIDDEN, "unknown_annotator", msg, None),
        BoardError::WrongCountry { .. } => error(StatusCode::FORBIDDEN, "wrong_country", msg, None),
        BoardError::NotLeased(_) => error(StatusCode::FORBIDDEN, "not_leased", msg, None),
        BoardError::UnknownTask(_) => error(StatusCode::NOT_FOUND, "unknown_task", msg, None),
        BoardError::Duplicate { .. } => error(StatusCode::CONFLICT, "duplicate_verdict", msg, None),
        BoardError::TaskComplete(_) => error(StatusCode::CONFLICT, "task_complete", msg, None),
        BoardError::Field(f) => error(StatusCode::UNPROCESSABLE_ENTITY, "invalid_field", f.message, Some(f.field)),
    }
}

async fn next_task(State(svc): State<Arc<ValidationService>>, Query(q): Query<NextQuery>) -> Response {
    let Ok(country) = CountryCode::new(&q.country) else {
        return error(StatusCode::BAD_REQUEST, "invalid_country", format!("bad country code {:?}", q.country), Some("country"));
    };
    let now = (svc.clock)();
    let mut board = svc.board.lock().expect("board lock");
    match board.lease(&q.annotator, &country, now) {
        Ok(Some(task)) => {
            let (answered, total) = board.annotator_progress(&q.annotator).unwrap_or((0, 0));
            let view = TaskView {
                task_id: task.task_id,
                question: task.question,
                category: task.category,
                item: task.item,
                answered,
                total,
            };
            (StatusCode::OK, Json(view)).into_response()
        }
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => board_error(e),
    }
}

async fn submit(State(svc): State<Arc<ValidationService>>, Json(body): Json<VerdictSubmission>) -> Response {
    let verdict = Verdict {
        task_id: body.task_id,
        annotator_id: body.annotator_id,
        answer: body.answer,
        justification: body.justification.filter(|j| !j.trim().is_empty()),
        submitted_at: (svc.clock)(),
    };
    let mut board = svc.board.lock().expect("board lock");
    if let Err(e) = board.check_submission(&verdict) {
        return board_error(e);
    }
    if let Err(e) = svc.log.append(&verdict) {
        log::error!("verdict log write failed: {e}");
        return error(StatusCode::INTERNAL_SERVER_ERROR, "log_write", e.to_string(), None);
    }
    let task_id = verdict.task_id.clone();
    let receipt = board.commit(verdict);
    let body = json!({
        "task_id": task_id,
        "count": receipt.count,
        "required": receipt.required,
        "complete": receipt.complete,
    });
    (StatusCode::CREATED, Json(body)).into_response()
}

async fn progress(State(svc): State<Arc<ValidationService>>) -> Response {
    let board = svc.board.lock().expect("board lock");
    Json(json!({"partitions": board.progress()})).into_response()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::ConceptId;
    use crate::validation::{render_question, AnnotatorRegistry, AnnotationTask, TaskState};
    use axum::body::Body;
    use axum::http::{header, Request};
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    fn task(id: &str) -> AnnotationTask {
        AnnotationTask {
            task_id: id.into(),
            artifact_id: id.into(),
            country: CountryCode::new("GH").unwrap(),
            concept: ConceptId::Cuisine,
            category: "cuisine".into(),
            item: "kenkey".into(),
            question: render_question("kenkey", "cuisine"),
            required_verdicts: 3,
            state: TaskState::Open,
        }
    }

    fn service(dir: &std::path::Path) -> Router {
        let registry = AnnotatorRegistry {
            annotators: [("ann-1".to_string(), CountryCode::new("GH").unwrap())].into(),
        };
        let board = TaskBoard::new(vec![task("t-1")], registry, chrono::Duration::minutes(30));
        ValidationService::open(board, VerdictLog::new(dir.join("verdicts.jsonl")))
            .unwrap()
            .with_clock(Arc::new(|| DateTime::from_timestamp(1_000, 0).unwrap()))
            .router()
    }

    async fn call(app: &Router, req: Request<Body>) -> (StatusCode, serde_json::Value) {
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null);
        (status, value)
    }

    fn get(uri: &str) -> Request<Body> {
        Request::get(uri).body(Body::empty()).unwrap()
    }

    fn post(body: serde_json::Value) -> Request<Body> {
        Request::post("/api/verdicts")
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .unwrap()
    }

    #[tokio::test]
    async fn lease_submit_flow() {
        let dir = tempfile::tempdir().unwrap();
        let app = service(dir.path());
        let (s, v) = call(&app, get("/api/tasks/next?annotator=ann-1&country=GH")).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["question"], "In the culture of your country, is kenkey a part of cuisine?");
        assert_eq!(v["total"], 1);

        let (s, v) = call(&app, post(json!({"task_id": "t-1", "annotator_id": "ann-1", "answer": "unsure", "justification": ""}))).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(v["field"], "justification");

        let (s, v) = call(&app, post(json!({"task_id": "t-1", "annotator_id": "ann-1", "answer": "yes"}))).await;
        assert_eq!(s, StatusCode::CREATED);
        assert_eq!(v["count"], 1);

        let (s, _) = call(&app, post(json!({"task_id": "t-1", "annotator_id": "ann-1", "answer": "no"}))).await;
        assert_eq!(s, StatusCode::CONFLICT);

        let (s, _) = call(&app, get("/api/tasks/next?annotator=ann-1&country=GH")).await;
        assert_eq!(s, StatusCode::NO_CONTENT);

        let (s, v) = call(&app, get("/api/progress")).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["partitions"][0]["verdicts"], 1);

        let log = VerdictLog::new(dir.path().join("verdicts.jsonl")).read_all().unwrap();
        assert_eq!(log.len(), 1);
    }

    #[tokio::test]
    async fn rejects_unknown_annotator() {
        let dir = tempfile::tempdir().unwrap();
        let app = service(dir.path());
        let (s, v) = call(&app, get("/api/tasks/next?annotator=ghost&country=GH")).await;
        assert_eq!(s, StatusCode::FORBIDDEN);
        assert_eq!(v["error"], "unknown_annotator");
        let (s, _) = call(&app, get("/api/tasks/next?annotator=ann-1")).await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
    }

    #[tokio::test]
    async fn restart_replays_log() {
        let dir = tempfile::tempdir().unwrap();
        let app = service(dir.path());
        call(&app, get("/api/tasks/next?annotator=ann-1&country=GH")).await;
        call(&app, post(json!({"task_id": "t-1", "annotator_id": "ann-1", "answer": "yes"}))).await;
        let app2 = service(dir.path());
        let (s, _) = call(&app2, post(json!({"task_id": "t-1", "annotator_id": "ann-1", "answer": "yes"}))).await;
        assert_eq!(s, StatusCode::CONFLICT);
    }
}
