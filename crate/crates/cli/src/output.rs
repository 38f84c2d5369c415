//! Plain-text tables for terminal output.

use std::fmt::Write;

use divmeter_core::EditionId;
use serde_json::Value;

const ROLES: [&str; 3] = ["keynote", "organizer", "author"];
const FACETS: [&str; 3] = ["gender", "business", "geography"];

fn index(v: &Value) -> String {
    v.as_f64().map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub fn report_table(id: &EditionId, revision: u32, report: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{id} (revision {revision})");
    for (label, key) in [("GDI", "gdi"), ("BDI", "bdi"), ("GeoDI", "geodi"), ("CDI", "cdi")] {
        let _ = writeln!(out, "  {label:<6} {}", index(&report[key]));
    }
    let _ = writeln!(out, "\n{:<10} {:>14} {:>14} {:>14}", "role", "gender", "business", "geography");
    for role in ROLES {
        let cells: Vec<String> = FACETS
            .iter()
            .map(|f| {
                let v = index(&report["per_role"][role][*f]["value"]);
                match report["coverage"][role][*f].as_f64() {
                    Some(c) if v != "n/a" => format!("{v} ({:.0}%)", c * 100.0),
                    _ => v,
                }
            })
            .collect();
        let _ = writeln!(out, "{role:<10} {:>14} {:>14} {:>14}", cells[0], cells[1], cells[2]);
    }
    let missing: Vec<&str> =
        report["missing_roles"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    if !missing.is_empty() {
        let _ = writeln!(out, "\nno data for: {}", missing.join(", "));
    }
    out
}

pub fn ingest_table(contribution: &Value) -> String {
    let report = &contribution["ingest_report"];
    let mut out = String::new();
    let _ = writeln!(
        out,
        "stored {} revision {} ({} participations)",
        contribution["edition_id"].as_str().unwrap_or("?"),
        contribution["revision"],
        report["participations"]
    );
    let _ = writeln!(
        out,
        "\ncoverage (known/total)\n{:<10} {:>14} {:>14} {:>14}",
        "role", "gender", "business", "geography"
    );
    for role in ROLES {
        let row = &report["coverage"][role];
        if row.is_null() {
            continue;
        }
        let cells: Vec<String> = FACETS.iter().map(|f| format!("{}/{}", row[*f]["known"], row[*f]["total"])).collect();
        let _ = writeln!(out, "{role:<10} {:>14} {:>14} {:>14}", cells[0], cells[1], cells[2]);
    }
    if let Some(matches) = report["affiliation_matches"].as_object() {
        let parts: Vec<String> = matches.iter().map(|(k, v)| format!("{k} {v}")).collect();
        let _ = writeln!(out, "\naffiliation matches: {}", parts.join(", "));
    }
    let skipped = report["skipped"].as_array().map(Vec::as_slice).unwrap_or_default();
    if !skipped.is_empty() {
        let _ = writeln!(out, "\nskipped {}:", skipped.len());
        for s in skipped {
            let mut at = s["source"].as_str().unwrap_or("?").to_string();
            if let Some(line) = s["line"].as_u64() {
                let _ = write!(at, " line {line}");
            }
            if let Some(key) = s["key"].as_str() {
                let _ = write!(at, " [{key}]");
            }
            let _ = writeln!(out, "  {at}: {}", s["reason"].as_str().unwrap_or(""));
        }
    }
    let failures = report["provider_failures"].as_array().map_or(0, Vec::len);
    if failures > 0 {
        let _ = writeln!(out, "\ngender provider failed for {failures} people; their gender stays unknown");
    }
    out
}
