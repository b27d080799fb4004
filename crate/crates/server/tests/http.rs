use cws_core::clock::ScaledWallClock;
use cws_core::driver::{run_trace, DriverConfig};
use cws_core::model::TaskState;
use cws_core::sim::ClusterConfig;
use cws_core::trace;
use cws_core::{ExecutionId, Millicores, Scheduler};
use cws_server::{AppState, BackgroundServer, HttpClient, TimeSource};
use reqwest::blocking::Client;
use reqwest::Method;
use serde_json::{json, Value};

const MIB: u64 = 1 << 20;

fn manual_server(nodes: usize) -> BackgroundServer {
    let cluster = ClusterConfig::uniform(nodes, Millicores::from_cores(1), 512 * MIB);
    let state = AppState::new(Scheduler::new(&cluster).unwrap(), TimeSource::Manual);
    BackgroundServer::start(state, "127.0.0.1:0").unwrap()
}

struct Api {
    http: Client,
    base: String,
}

impl Api {
    fn new(server: &BackgroundServer) -> Self {
        Self {
            http: Client::new(),
            base: server.endpoint(),
        }
    }

    fn call(&self, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().unwrap();
        let status = resp.status().as_u16();
        let text = resp.text().unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::Null))
    }
}

fn task_body(abstract_id: &str) -> Value {
    json!({ "abstractId": abstract_id, "cpus": 1, "memoryBytes": 512 * MIB, "runtimeEstimateMs": 1000, "inputFiles": [] })
}

#[test]
fn registration_and_versioning() {
    let server = manual_server(1);
    let api = Api::new(&server);
    let reg = json!({ "strategy": "rank_min-round_robin" });
    assert_eq!(
        api.call(Method::POST, "/v1/run-1", Some(reg.clone())),
        (200, json!({ "execution": "run-1", "strategy": "rank_min-round_robin" }))
    );
    let (status, body) = api.call(Method::POST, "/v1/run-1", Some(reg.clone()));
    assert_eq!((status, body["code"].as_str()), (409, Some("DUPLICATE_EXECUTION")));
    let (status, body) = api.call(Method::POST, "/v2/run-2", Some(reg));
    assert_eq!((status, body["code"].as_str()), (404, Some("UNKNOWN_VERSION")));
    let (status, body) = api.call(Method::POST, "/v1/run-2", Some(json!({ "strategy": "heft" })));
    assert_eq!((status, body["code"].as_str()), (400, Some("UNKNOWN_STRATEGY")));
    let (status, body) = api.call(Method::POST, "/v1/run-2", Some(json!("nope")));
    assert_eq!((status, body["code"].as_str()), (400, Some("INVALID_BODY")));
    let extra = json!({ "strategy": "fifo-fair", "workflow": "rnaseq", "user": { "name": "x" } });
    assert_eq!(api.call(Method::POST, "/v1/run-3", Some(extra)).0, 200);
    let (status, body) = api.call(Method::GET, "/v1/openapi.json", None);
    assert_eq!(status, 200);
    assert_eq!(body["paths"].as_object().unwrap().len(), 6);
}

#[test]
fn unknown_execution_is_uniformly_404() {
    let server = manual_server(1);
    let api = Api::new(&server);
    let calls = [
        (Method::DELETE, "/v1/ghost", None),
        (Method::POST, "/v1/ghost/DAG/vertices", Some(json!([]))),
        (Method::DELETE, "/v1/ghost/DAG/vertices", Some(json!([]))),
        (Method::POST, "/v1/ghost/DAG/edges", Some(json!([]))),
        (Method::DELETE, "/v1/ghost/DAG/edges", Some(json!([]))),
        (Method::PUT, "/v1/ghost/startBatch", None),
        (Method::PUT, "/v1/ghost/endBatch", None),
        (Method::POST, "/v1/ghost/task/t1", Some(task_body("A"))),
        (Method::GET, "/v1/ghost/task/t1", None),
        (Method::DELETE, "/v1/ghost/task/t1", None),
    ];
    for (method, path, body) in calls {
        let (status, resp) = api.call(method.clone(), path, body);
        assert_eq!((status, resp["code"].as_str()), (404, Some("UNKNOWN_EXECUTION")), "{method} {path}");
        assert!(resp["message"].is_string());
    }
}

#[test]
fn mutations_are_visible_to_the_next_read() {
    let server = manual_server(1);
    let api = Api::new(&server);
    api.call(Method::POST, "/v1/e", Some(json!({ "strategy": "fifo-fair" })));
    let (s, b) = api.call(Method::POST, "/v1/e/DAG/vertices", Some(json!([{ "id": "A" }, { "id": "B" }])));
    assert_eq!((s, b), (200, json!({ "added": 2 })));
    let (s, b) = api.call(Method::POST, "/v1/e/DAG/vertices", Some(json!([{ "id": "A" }])));
    assert_eq!((s, b), (200, json!({ "added": 0 })));
    let (s, b) = api.call(Method::POST, "/v1/e/DAG/edges", Some(json!([{ "from": "A", "to": "B" }])));
    assert_eq!((s, b), (200, json!({ "added": 1 })));
    let (s, b) = api.call(Method::POST, "/v1/e/DAG/edges", Some(json!([{ "from": "B", "to": "A" }])));
    assert_eq!((s, b["code"].as_str()), (409, Some("WOULD_CREATE_CYCLE")));
    let (s, b) = api.call(Method::DELETE, "/v1/e/DAG/edges", Some(json!([{ "from": "B", "to": "A" }])));
    assert_eq!((s, b), (200, json!({ "removed": 0 })));

    let (s, b) = api.call(Method::POST, "/v1/e/task/t1", Some(task_body("A")));
    assert_eq!((s, b), (200, json!({ "cpus": 1.0, "memoryBytes": 512 * MIB, "runtimeMs": 1000 })));
    let (_, b) = api.call(Method::GET, "/v1/e/task/t1", None);
    assert_eq!(b, json!({ "state": "RUNNING", "node": "node1", "submittedAt": 0, "startedAt": 0 }));
    let (s, b) = api.call(Method::POST, "/v1/e/task/t1", Some(task_body("A")));
    assert_eq!((s, b["code"].as_str()), (409, Some("DUPLICATE_TASK")));
    let (s, b) = api.call(Method::POST, "/v1/e/task/t9", Some(task_body("Z")));
    assert_eq!((s, b["code"].as_str()), (400, Some("UNKNOWN_ABSTRACT_VERTEX")));
    let (s, b) = api.call(Method::DELETE, "/v1/e/DAG/vertices", Some(json!(["A"])));
    assert_eq!((s, b["code"].as_str()), (409, Some("VERTEX_IN_USE")));
    let (s, b) = api.call(Method::DELETE, "/v1/e/task/t1", None);
    assert_eq!((s, b["code"].as_str()), (409, Some("TASK_NOT_WITHDRAWABLE")));

    api.call(Method::PUT, "/v1/e/startBatch", None);
    let (s, b) = api.call(Method::PUT, "/v1/e/startBatch", None);
    assert_eq!((s, b["code"].as_str()), (409, Some("BATCH_ALREADY_OPEN")));
    api.call(Method::POST, "/v1/e/task/t2", Some(task_body("B")));
    let (_, b) = api.call(Method::GET, "/v1/e/task/t2", None);
    assert_eq!(b["state"], "SUBMITTED");
    let (s, b) = api.call(Method::DELETE, "/v1/e/task/t2", None);
    assert_eq!((s, &b["state"]), (200, &json!("WITHDRAWN")));
    api.call(Method::PUT, "/v1/e/endBatch", None);
    let (s, b) = api.call(Method::PUT, "/v1/e/endBatch", None);
    assert_eq!((s, b["code"].as_str()), (409, Some("NO_BATCH_OPEN")));
    let (s, b) = api.call(Method::GET, "/v1/e/task/t7", None);
    assert_eq!((s, b["code"].as_str()), (404, Some("UNKNOWN_TASK")));

    server.state().advance_to(1000);
    let (_, b) = api.call(Method::GET, "/v1/e/task/t1", None);
    assert_eq!(b["state"], "FINISHED");
    assert_eq!(b["finishedAt"], 1000);
    let (s, b) = api.call(Method::DELETE, "/v1/e", None);
    assert_eq!((s, b), (200, json!({ "execution": "e", "finished": 1, "failed": 0, "withdrawn": 1 })));
    let (s, _) = api.call(Method::GET, "/v1/e/task/t1", None);
    assert_eq!(s, 404);
}

#[test]
fn driver_runs_over_http() {
    let cluster = ClusterConfig::uniform(2, Millicores::from_cores(1), 512 * MIB);
    let state = AppState::new(
        Scheduler::new(&cluster).unwrap(),
        TimeSource::Wall(ScaledWallClock::new(20.0)),
    );
    let server = BackgroundServer::start(state, "127.0.0.1:0").unwrap();
    let mut client = HttpClient::new(&server.endpoint()).unwrap();
    let config = DriverConfig::new(ExecutionId::parse("http-run").unwrap(), "rank_fifo-round_robin".parse().unwrap());
    let result = run_trace(&trace::critical_path_example(1000), &mut client, &config).unwrap();
    assert_eq!(result.count(TaskState::Finished), 6);
    assert!(result.makespan_ms >= 4000, "{}", result.makespan_ms);
    assert_eq!(result.summary.finished, 6);
    server.stop().unwrap();
}
