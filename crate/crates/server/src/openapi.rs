//! Machine-readable description of the API, served at `/v1/openapi.json`.

use serde_json::{json, Value};

fn op(summary: &str, body: Option<Value>, ok: Value, errors: &[(&str, &str)]) -> Value {
    let mut responses = serde_json::Map::new();
    responses.insert(
        "200".into(),
        json!({ "description": "OK", "content": { "application/json": { "schema": ok } } }),
    );
    for (status, codes) in errors {
        responses.insert(
            (*status).into(),
            json!({
                "description": codes,
                "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } }
            }),
        );
    }
    let mut out = json!({ "summary": summary, "responses": responses });
    if let Some(schema) = body {
        out["requestBody"] = json!({
            "required": true,
            "content": { "application/json": { "schema": schema } }
        });
    }
    out
}

fn schema(name: &str) -> Value {
    json!({ "$ref": format!("#/components/schemas/{name}") })
}

fn list_of(item: Value) -> Value {
    json!({ "type": "array", "items": item })
}

fn count(field: &str) -> Value {
    json!({ "type": "object", "properties": { field: { "type": "integer" } } })
}

pub fn document() -> Value {
    let exec_params = json!([
        { "name": "version", "in": "path", "required": true, "schema": { "type": "string", "enum": ["v1"] } },
        { "name": "execution", "in": "path", "required": true,
          "schema": { "type": "string", "pattern": "^[A-Za-z0-9_-]{1,128}$" } }
    ]);
    let mut task_params = exec_params.clone();
    task_params
        .as_array_mut()
        .expect("literal array")
        .push(json!({ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } }));
    let unknown = ("404", "UNKNOWN_VERSION, UNKNOWN_EXECUTION");

    json!({
        "openapi": "3.0.3",
        "info": {
            "title": "Workflow-aware scheduler",
            "version": "1",
            "description": "Lets a workflow management system register executions, describe the abstract workflow graph, and submit physical tasks in batches."
        },
        "paths": {
            "/{version}/{execution}": {
                "parameters": exec_params,
                "post": op(
                    "Register an execution with a scheduling strategy",
                    Some(schema("Register")),
                    json!({ "type": "object", "properties": {
                        "execution": { "type": "string" }, "strategy": { "type": "string" } } }),
                    &[("400", "UNKNOWN_STRATEGY, INVALID_EXECUTION_ID, INVALID_BODY"),
                      ("404", "UNKNOWN_VERSION"), ("409", "DUPLICATE_EXECUTION")],
                ),
                "delete": op(
                    "Delete an execution; unplaced tasks are withdrawn, running tasks fail",
                    None,
                    schema("DeletionSummary"),
                    &[unknown],
                ),
            },
            "/{version}/{execution}/DAG/vertices": {
                "parameters": exec_params,
                "post": op("Add abstract vertices (idempotent)", Some(list_of(schema("Vertex"))), count("added"),
                    &[unknown, ("400", "INVALID_BODY")]),
                "delete": op("Remove abstract vertices and their edges", Some(list_of(json!({ "type": "string" }))),
                    count("removed"), &[unknown, ("409", "VERTEX_IN_USE")]),
            },
            "/{version}/{execution}/DAG/edges": {
                "parameters": exec_params,
                "post": op("Add abstract edges", Some(list_of(schema("Edge"))), count("added"),
                    &[unknown, ("400", "UNKNOWN_VERTEX, INVALID_BODY"), ("409", "WOULD_CREATE_CYCLE")]),
                "delete": op("Remove abstract edges (absent edges are ignored)", Some(list_of(schema("Edge"))),
                    count("removed"), &[unknown]),
            },
            "/{version}/{execution}/startBatch": {
                "parameters": exec_params,
                "put": op("Open a batch; submitted tasks are held until it ends", None,
                    json!({ "type": "object" }), &[unknown, ("409", "BATCH_ALREADY_OPEN")]),
            },
            "/{version}/{execution}/endBatch": {
                "parameters": exec_params,
                "put": op("Close the batch and schedule its tasks together", None,
                    json!({ "type": "object" }), &[unknown, ("409", "NO_BATCH_OPEN")]),
            },
            "/{version}/{execution}/task/{id}": {
                "parameters": task_params,
                "post": op("Submit a physical task", Some(schema("TaskRequest")), schema("Grant"),
                    &[unknown, ("400", "UNKNOWN_ABSTRACT_VERTEX, INVALID_TASK, INVALID_BODY"),
                      ("409", "DUPLICATE_TASK")]),
                "get": op("Query a task's state", None, schema("TaskStatus"),
                    &[("404", "UNKNOWN_VERSION, UNKNOWN_EXECUTION, UNKNOWN_TASK")]),
                "delete": op("Withdraw a task that has not been placed", None, schema("TaskStatus"),
                    &[("404", "UNKNOWN_VERSION, UNKNOWN_EXECUTION, UNKNOWN_TASK"),
                      ("409", "TASK_NOT_WITHDRAWABLE")]),
            },
        },
        "components": { "schemas": {
            "Error": { "type": "object", "required": ["code", "message"], "properties": {
                "code": { "type": "string" }, "message": { "type": "string" } } },
            "Register": { "type": "object", "required": ["strategy"], "properties": {
                "strategy": { "type": "string", "example": "rank_min-round_robin" },
                "seed": { "type": "integer", "minimum": 0 } } },
            "DeletionSummary": { "type": "object", "properties": {
                "execution": { "type": "string" }, "finished": { "type": "integer" },
                "failed": { "type": "integer" }, "withdrawn": { "type": "integer" } } },
            "Vertex": { "type": "object", "required": ["id"], "properties": {
                "id": { "type": "string" }, "label": { "type": "string" } } },
            "Edge": { "type": "object", "required": ["from", "to"], "properties": {
                "from": { "type": "string" }, "to": { "type": "string" } } },
            "FileSpec": { "type": "object", "required": ["path"], "properties": {
                "path": { "type": "string" }, "sizeBytes": { "type": "integer", "minimum": 0 } } },
            "TaskRequest": { "type": "object", "required": ["abstractId", "cpus", "memoryBytes"], "properties": {
                "abstractId": { "type": "string" },
                "cpus": { "type": "number", "exclusiveMinimum": 0, "description": "cores; millicore resolution" },
                "memoryBytes": { "type": "integer", "minimum": 1 },
                "runtimeEstimateMs": { "type": "integer", "minimum": 0 },
                "inputFiles": list_of(schema("FileSpec")),
                "outputFiles": list_of(schema("FileSpec")) } },
            "Grant": { "type": "object", "properties": {
                "cpus": { "type": "number" }, "memoryBytes": { "type": "integer" },
                "runtimeMs": { "type": "integer", "nullable": true } } },
            "TaskStatus": { "type": "object", "required": ["state", "submittedAt"], "properties": {
                "state": { "type": "string",
                    "enum": ["SUBMITTED", "QUEUED", "SCHEDULED", "RUNNING", "FINISHED", "FAILED", "WITHDRAWN"] },
                "node": { "type": "string" },
                "submittedAt": { "type": "integer" },
                "startedAt": { "type": "integer" },
                "finishedAt": { "type": "integer" } } },
        } },
    })
}
