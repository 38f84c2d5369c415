//! Scans public JSON for vault names, exact or case-folded substrings.

use aho_corasick::AhoCorasick;
use serde_json::Value;

pub struct LeakScanner {
    matcher: Option<AhoCorasick>,
}

impl LeakScanner {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let patterns: Vec<String> =
            names.into_iter().map(|n| n.trim().to_lowercase()).filter(|n| !n.is_empty()).collect();
        let matcher = (!patterns.is_empty()).then(|| AhoCorasick::new(&patterns).expect("plain literal patterns"));
        Self { matcher }
    }

    pub fn contains_name(&self, text: &str) -> bool {
        self.matcher.as_ref().is_some_and(|m| m.is_match(&text.to_lowercase()))
    }

    /// Path of the first string (or object key) carrying a name, e.g.
    /// `conferences.toyconf.editions.2021[0].edition.participations[3].affiliation_raw`.
    pub fn find(&self, value: &Value) -> Option<String> {
        self.matcher.as_ref()?;
        let mut path = String::new();
        self.walk(value, &mut path)
    }

    fn walk(&self, value: &Value, path: &mut String) -> Option<String> {
        match value {
            Value::String(s) => self.contains_name(s).then(|| path.clone()),
            Value::Array(items) => items.iter().enumerate().find_map(|(i, v)| {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                let hit = self.walk(v, path);
                path.truncate(len);
                hit
            }),
            Value::Object(map) => map.iter().find_map(|(k, v)| {
                let len = path.len();
                if !path.is_empty() {
                    path.push('.');
                }
                path.push_str(k);
                let hit = if self.contains_name(k) { Some(path.clone()) } else { self.walk(v, path) };
                path.truncate(len);
                hit
            }),
            _ => None,
        }
    }
}
