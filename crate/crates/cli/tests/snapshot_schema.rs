//! The exported snapshot conforms to `docs/public-snapshot.schema.json`.
//!
//! The checker covers the keywords the schema uses, except `pattern`.

mod common;

use common::*;
use serde_json::{json, Value};

fn resolve<'a>(root: &'a Value, schema: &'a Value) -> &'a Value {
    match schema.get("$ref").and_then(Value::as_str) {
        Some(r) => resolve(root, root.pointer(r.trim_start_matches('#')).unwrap_or_else(|| panic!("dangling {r}"))),
        None => schema,
    }
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        other => panic!("unsupported type {other}"),
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    let s = resolve(root, schema);
    if let Some(options) = s.get("anyOf").and_then(Value::as_array) {
        if !options.iter().any(|o| check(root, o, v, at).is_ok()) {
            return Err(format!("{at}: matches no alternative"));
        }
    }
    match s.get("type") {
        Some(Value::String(t)) if !type_matches(t, v) => return Err(format!("{at}: expected {t}")),
        Some(Value::Array(ts)) if !ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)) => {
            return Err(format!("{at}: expected one of {ts:?}"))
        }
        _ => {}
    }
    if let Some(c) = s.get("const") {
        if c != v {
            return Err(format!("{at}: expected {c}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            return Err(format!("{at}: {v} not in {e:?}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            return Err(format!("{at}: below minimum"));
        }
        if s.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            return Err(format!("{at}: above maximum"));
        }
    }
    if let Some(obj) = v.as_object() {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(r.as_str().unwrap()) {
                return Err(format!("{at}: missing {r}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, child) in obj {
            let path = format!("{at}.{k}");
            match (props.and_then(|p| p.get(k)), s.get("additionalProperties")) {
                (Some(p), _) => check(root, p, child, &path)?,
                (None, Some(Value::Bool(false))) => return Err(format!("{path}: not allowed")),
                (None, Some(extra @ Value::Object(_))) => check(root, extra, child, &path)?,
                _ => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, child) in arr.iter().enumerate() {
            check(root, items, child, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn schema() -> Value {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/public-snapshot.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixture_export_conforms() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    assert!(ingest_toyconf(&store).status.success());
    // a second, label-free edition exercises null indices and unknown labels
    let blank = dir.path().join("blank.csv");
    std::fs::write(
        &blank,
        "conference,year,role,name,affiliation,affiliation2,gender,business,country\n\
         blank,2020,organizer,Xavier Quux,Nowhere,Elsewhere,,,\n",
    )
    .unwrap();
    let registry = fixture("registry.csv");
    let out = run(
        &store,
        Some(KEY),
        &[
            "ingest",
            "--conference",
            "blank",
            "--year",
            "2020",
            "--venue",
            "virtual",
            "--annotations",
            blank.to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let out_file = dir.path().join("snapshot.json");
    assert!(run(&store, Some(KEY), &["export", "--out", out_file.to_str().unwrap()]).status.success());
    let snapshot: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let schema = schema();
    check(&schema, &schema, &snapshot, "$").unwrap();
    assert!(snapshot["conferences"][0]["editions"][0]["report"]["cdi"].is_null());
}

#[test]
fn checker_rejects_drift() {
    let schema = schema();
    let empty = json!({"format": "divmeter-public-snapshot", "version": 1, "conferences": []});
    check(&schema, &schema, &empty, "$").unwrap();
    for bad in [
        json!({"format": "divmeter-public-snapshot", "version": 2, "conferences": []}),
        json!({"format": "divmeter-public-snapshot", "version": 1, "conferences": [], "names": []}),
        json!({"format": "divmeter-public-snapshot", "version": 1}),
    ] {
        assert!(check(&schema, &schema, &bad, "$").is_err(), "{bad}");
    }
}
