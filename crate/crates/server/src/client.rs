//! Blocking HTTP client implementing the driver's [`SchedulerClient`].

use std::thread;
use std::time::Duration;

use cws_core::driver::SchedulerClient;
use cws_core::model::{AbstractVertex, Edge, ExecutionSummary, TaskRequest, TaskStatus};
use cws_core::strategy::StrategyName;
use cws_core::{Error, ExecutionId, Grant, Result, TaskId, VertexId};
use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::Method;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::error::ErrorBody;

pub const POLL_INTERVAL: Duration = Duration::from_millis(50);

pub struct HttpClient {
    http: Client,
    base: String,
    poll_interval: Duration,
}

impl HttpClient {
    /// `endpoint` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(endpoint: &str) -> Result<Self> {
        let http = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::SchedulerUnreachable(e.to_string()))?;
        Ok(Self {
            http,
            base: format!("{}/v1", endpoint.trim_end_matches('/')),
            poll_interval: POLL_INTERVAL,
        })
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    fn url(&self, execution: &ExecutionId, rest: &str) -> String {
        format!("{}/{execution}{rest}", self.base)
    }

    fn send(&self, req: RequestBuilder) -> Result<Response> {
        req.send().map_err(|e| Error::SchedulerUnreachable(e.to_string()))
    }

    fn call<B: Serialize + ?Sized>(&self, method: Method, url: &str, body: Option<&B>) -> Result<Response> {
        let mut req = self.http.request(method, url);
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = self.send(req)?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let body: ErrorBody = resp.json().unwrap_or_else(|_| ErrorBody {
            code: format!("HTTP_{}", status.as_u16()),
            message: status.to_string(),
        });
        Err(Error::Api {
            code: body.code,
            message: body.message,
        })
    }

    fn json<T: DeserializeOwned>(resp: Response) -> Result<T> {
        resp.json().map_err(|e| Error::SchedulerUnreachable(format!("bad response body: {e}")))
    }
}

/// Turns the error codes the driver reacts to back into typed errors.
fn typed(err: Error, execution: &ExecutionId, task: Option<&TaskId>) -> Error {
    let Error::Api { code, .. } = &err else {
        return err;
    };
    match (code.as_str(), task) {
        ("UNKNOWN_EXECUTION", _) => Error::UnknownExecution(execution.to_string()),
        ("DUPLICATE_EXECUTION", _) => Error::DuplicateExecution(execution.clone()),
        ("BATCH_ALREADY_OPEN", _) => Error::BatchAlreadyOpen,
        ("NO_BATCH_OPEN", _) => Error::NoBatchOpen,
        ("UNKNOWN_TASK", Some(t)) => Error::UnknownTask(t.clone()),
        ("DUPLICATE_TASK", Some(t)) => Error::DuplicateTask(t.clone()),
        _ => err,
    }
}

impl SchedulerClient for HttpClient {
    fn register(&mut self, execution: &ExecutionId, strategy: StrategyName, seed: u64) -> Result<()> {
        let body = json!({ "strategy": strategy, "seed": seed });
        self.call(Method::POST, &self.url(execution, ""), Some(&body))
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn delete_execution(&mut self, execution: &ExecutionId) -> Result<ExecutionSummary> {
        let resp = self
            .call::<()>(Method::DELETE, &self.url(execution, ""), None)
            .map_err(|e| typed(e, execution, None))?;
        Self::json(resp)
    }

    fn add_vertices(&mut self, execution: &ExecutionId, vertices: &[AbstractVertex]) -> Result<()> {
        self.call(Method::POST, &self.url(execution, "/DAG/vertices"), Some(vertices))
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn remove_vertices(&mut self, execution: &ExecutionId, ids: &[VertexId]) -> Result<()> {
        self.call(Method::DELETE, &self.url(execution, "/DAG/vertices"), Some(ids))
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn add_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()> {
        self.call(Method::POST, &self.url(execution, "/DAG/edges"), Some(edges))
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn remove_edges(&mut self, execution: &ExecutionId, edges: &[Edge]) -> Result<()> {
        self.call(Method::DELETE, &self.url(execution, "/DAG/edges"), Some(edges))
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn start_batch(&mut self, execution: &ExecutionId) -> Result<()> {
        self.call::<()>(Method::PUT, &self.url(execution, "/startBatch"), None)
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn end_batch(&mut self, execution: &ExecutionId) -> Result<()> {
        self.call::<()>(Method::PUT, &self.url(execution, "/endBatch"), None)
            .map(drop)
            .map_err(|e| typed(e, execution, None))
    }

    fn submit_task(&mut self, execution: &ExecutionId, task: &TaskId, request: &TaskRequest) -> Result<Grant> {
        let resp = self
            .call(Method::POST, &self.url(execution, &format!("/task/{task}")), Some(request))
            .map_err(|e| typed(e, execution, Some(task)))?;
        Self::json(resp)
    }

    fn task_state(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<TaskStatus> {
        let resp = self
            .call::<()>(Method::GET, &self.url(execution, &format!("/task/{task}")), None)
            .map_err(|e| typed(e, execution, Some(task)))?;
        Self::json(resp)
    }

    fn withdraw_task(&mut self, execution: &ExecutionId, task: &TaskId) -> Result<()> {
        match self.call::<()>(Method::DELETE, &self.url(execution, &format!("/task/{task}")), None) {
            Ok(_) => Ok(()),
            Err(Error::Api { code, .. }) if code == "TASK_NOT_WITHDRAWABLE" => {
                let state = self.task_state(execution, task)?.state;
                Err(Error::TaskNotWithdrawable {
                    task: task.clone(),
                    state,
                })
            }
            Err(e) => Err(typed(e, execution, Some(task))),
        }
    }

    fn wait_for_progress(&mut self) -> Result<()> {
        thread::sleep(self.poll_interval);
        Ok(())
    }
}
