use serde_json::{json, Map, Value};

fn op(summary: &str, params: &[(&str, &str, bool)], body: Option<&str>, ok: (&str, &str)) -> Value {
    let mut o = Map::new();
    o.insert("summary".into(), json!(summary));
    if !params.is_empty() {
        let ps: Vec<Value> = params
            .iter()
            .map(|(name, loc, required)| {
                json!({ "name": name, "in": loc, "required": required, "schema": { "type": "string" } })
            })
            .collect();
        o.insert("parameters".into(), Value::Array(ps));
    }
    if let Some(media) = body {
        o.insert(
            "requestBody".into(),
            json!({ "required": true, "content": { media: { "schema": { "type": "object" } } } }),
        );
    }
    let (code, media) = ok;
    o.insert(
        "responses".into(),
        json!({
            code: { "description": "success", "content": { media: {} } },
            "400": { "$ref": "#/components/responses/Error" },
            "404": { "$ref": "#/components/responses/Error" },
            "409": { "$ref": "#/components/responses/Error" },
            "422": { "$ref": "#/components/responses/Error" }
        }),
    );
    Value::Object(o)
}

const JSON: &str = "application/json";
const SID: (&str, &str, bool) = ("id", "path", true);

/// OpenAPI 3 description of the routes in [`crate::router`].
pub fn spec() -> Value {
    json!({
        "openapi": "3.0.3",
        "info": { "title": "forge", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/datasets": { "post": op("Upload a CSV (text/csv, or JSON {csv, dims})", &[], Some("text/csv"), ("201", JSON)) },
            "/datasets/{id}": { "get": op("Validated dataset", &[SID], None, ("200", JSON)) },
            "/datasets/{id}/estimate-w": { "get": op("Nearest-neighbour estimate of w", &[SID], None, ("200", JSON)) },
            "/sessions": {
                "post": op("Create a session {dataset}", &[], Some(JSON), ("201", JSON)),
                "get": op("Session ids", &[], None, ("200", JSON))
            },
            "/sessions/{id}": { "get": op("Full session state", &[SID], None, ("200", JSON)) },
            "/sessions/{id}/plan": { "get": op("Derived r, m and loop sizes", &[SID, ("alpha", "query", true), ("beta", "query", true), ("w", "query", false)], None, ("200", JSON)) },
            "/sessions/{id}/runs": {
                "post": op("Start a clustering run {w, alpha, beta, seed}", &[SID], Some(JSON), ("202", JSON)),
                "get": op("All runs", &[SID], None, ("200", JSON))
            },
            "/sessions/{id}/runs/{run}": { "get": op("Run status and result", &[SID, ("run", "path", true)], None, ("200", JSON)) },
            "/sessions/{id}/clusters": { "get": op("Completed runs, as printed by forge cluster", &[SID], None, ("200", JSON)) },
            "/sessions/{id}/similarity": {
                "post": op("Compute similarity and dendrogram {linkage}", &[SID], Some(JSON), ("200", JSON)),
                "get": op("Similarity matrix (format=csv for CSV)", &[SID, ("format", "query", false)], None, ("200", JSON))
            },
            "/sessions/{id}/dendrogram": { "get": op("Current dendrogram", &[SID], None, ("200", JSON)) },
            "/sessions/{id}/cut": { "post": op("Cut the dendrogram {height}", &[SID], Some(JSON), ("200", JSON)) },
            "/sessions/{id}/protos": {
                "post": op("Merge a set into a proto-persona {set, vetoed_dims, name}", &[SID], Some(JSON), ("201", JSON)),
                "get": op("Saved proto-personas", &[SID], None, ("200", JSON))
            },
            "/sessions/{id}/radar": { "get": op("Radar data for clusters or proto-personas", &[SID, ("a", "query", true), ("b", "query", false)], None, ("200", JSON)) },
            "/sessions/{id}/cooccurrence": { "get": op("Co-occurrence table (format=csv for CSV)", &[SID, ("exclude", "query", false), ("format", "query", false)], None, ("200", JSON)) },
            "/sessions/{id}/ca": { "get": op("Correspondence analysis of the co-occurrence table", &[SID, ("exclude", "query", false)], None, ("200", JSON)) },
            "/sessions/{id}/mca": { "get": op("MCA of the binned data with eta-squared", &[SID, ("bins", "query", false), ("overrides", "query", false), ("axes", "query", false)], None, ("200", JSON)) },
            "/sessions/{id}/report": { "get": op("Persona report", &[SID], None, ("200", "text/markdown")) },
            "/sessions/{id}/audit": { "get": op("Audit log", &[SID], None, ("200", JSON)) }
        },
        "components": {
            "responses": {
                "Error": {
                    "description": "error",
                    "content": { JSON: { "schema": {
                        "type": "object",
                        "properties": { "error": { "type": "object", "properties": {
                            "status": { "type": "integer" },
                            "message": { "type": "string" }
                        } } }
                    } } }
                }
            }
        }
    })
}
