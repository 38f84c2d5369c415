//! Gender inference from names.
//!
//! Providers answer with a category and a confidence. Answers below the
//! configured threshold, and provider failures, abstain: the label stays
//! unknown rather than risk misgendering someone.

use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use divmeter_core::model::Category;
use divmeter_core::{normalize_name, CountryCode, Gender, GenderLabel, Label};
use serde::Deserialize;

use crate::csvio::{read_table, Row};
use crate::error::IngestError;

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const LEXICON_HEADER: [&str; 3] = ["given_name", "category", "confidence"];
pub const PROVIDER_KEY_ENV: &str = "DIVMETER_PROVIDER_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderAnswer {
    pub gender: Gender,
    pub confidence: f64,
    /// The answer as the provider phrased it, kept in the vault for audit.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned an unusable answer: {0}")]
    BadResponse(String),
}

pub trait GenderProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Must be deterministic for identical inputs within a run.
    fn lookup(
        &self,
        given_name: &str,
        full_name: &str,
        country_hint: Option<CountryCode>,
    ) -> Result<ProviderAnswer, ProviderError>;
}

/// The given name used for lookups: the first token, unless it is an initial.
pub fn given_name(full_name: &str) -> Option<&str> {
    let first = full_name.split_whitespace().next()?;
    let letters = first.trim_end_matches('.').chars().count();
    if letters <= 1 || first.ends_with('.') && letters <= 2 {
        None
    } else {
        Some(first)
    }
}

/// Offline provider backed by a `given_name,category,confidence` table.
#[derive(Debug, Clone, Default)]
pub struct LexiconProvider {
    entries: HashMap<String, (Gender, f64)>,
}

impl LexiconProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, given_name: &str, gender: Gender, confidence: f64) {
        self.entries.insert(normalize_name(given_name), (gender, confidence.clamp(0.0, 1.0)));
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self, IngestError> {
        let table = read_table(input, "lexicon", &LEXICON_HEADER)?;
        let mut lexicon = Self::new();
        for row in &table.rows {
            let invalid = |reason: String| IngestError::InvalidTable { file: "lexicon", line: row.line, reason };
            let cells = row.cells.as_ref().map_err(|e| invalid(e.clone()))?;
            let name = Row::cell(cells, 0);
            if name.is_empty() {
                return Err(invalid("given name is empty".into()));
            }
            let gender: Gender = Row::cell(cells, 1)
                .parse()
                .map_err(|_| invalid(format!("unknown category `{}`", Row::cell(cells, 1))))?;
            let confidence: f64 = Row::cell(cells, 2)
                .parse()
                .ok()
                .filter(|c: &f64| (0.0..=1.0).contains(c))
                .ok_or_else(|| invalid("confidence must be a number in [0, 1]".into()))?;
            let key = normalize_name(name);
            if lexicon.entries.contains_key(&key) {
                return Err(invalid("duplicate given name".into()));
            }
            lexicon.entries.insert(key, (gender, confidence));
        }
        Ok(lexicon)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl GenderProvider for LexiconProvider {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn lookup(
        &self,
        given_name: &str,
        _full_name: &str,
        _hint: Option<CountryCode>,
    ) -> Result<ProviderAnswer, ProviderError> {
        Ok(match self.entries.get(&normalize_name(given_name)) {
            Some(&(gender, confidence)) => ProviderAnswer {
                gender,
                confidence,
                raw: format!("lexicon:{}:{confidence}", gender.category_id().unwrap_or("unknown")),
            },
            None => ProviderAnswer { gender: Gender::Unknown, confidence: 0.0, raw: "lexicon:miss".into() },
        })
    }
}

type CacheKey = (String, Option<CountryCode>);

/// Client for a remote name-to-gender service.
///
/// Issues `GET <base_url>?name=<given>&country=<alpha-2>` and expects
/// `{"category": "...", "confidence": 0.0-1.0}`. The API key, when set, is
/// sent as an `X-Api-Key` header. Answers are memoized so a run asks at
/// most once per (name, country), and calls are spaced by `min_interval`.
pub struct HttpGenderProvider {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    min_interval: Duration,
    last_call: Mutex<Option<Instant>>,
    cache: Mutex<HashMap<CacheKey, Result<ProviderAnswer, ProviderError>>>,
}

#[derive(Deserialize)]
struct WireAnswer {
    category: String,
    confidence: f64,
}

impl HttpGenderProvider {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self {
            base_url: base_url.into(),
            api_key,
            agent,
            min_interval: Duration::from_millis(100),
            last_call: Mutex::new(None),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Reads the API key from `DIVMETER_PROVIDER_KEY`; 5 s timeout.
    pub fn from_env(base_url: impl Into<String>) -> Self {
        let key = std::env::var(PROVIDER_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(base_url, key, Duration::from_secs(5))
    }

    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    fn throttle(&self) {
        let mut last = self.last_call.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn fetch(&self, given_name: &str, country: Option<CountryCode>) -> Result<ProviderAnswer, ProviderError> {
        self.throttle();
        let mut req = self.agent.get(&self.base_url).query("name", given_name);
        if let Some(c) = country {
            req = req.query("country", c.as_str());
        }
        if let Some(key) = &self.api_key {
            req = req.header("X-Api-Key", key);
        }
        let mut resp = req.call().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = resp.status();
        let body = resp.body_mut().read_to_string().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Unavailable(format!("HTTP {}", status.as_u16())));
        }
        let wire: WireAnswer = serde_json::from_str(&body).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        if !(0.0..=1.0).contains(&wire.confidence) {
            return Err(ProviderError::BadResponse("confidence outside [0, 1]".into()));
        }
        let gender = wire
            .category
            .parse::<Gender>()
            .map_err(|_| ProviderError::BadResponse(format!("unknown category `{}`", wire.category)))?;
        Ok(ProviderAnswer { gender, confidence: wire.confidence, raw: body })
    }
}

impl GenderProvider for HttpGenderProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn lookup(
        &self,
        given_name: &str,
        _full_name: &str,
        country_hint: Option<CountryCode>,
    ) -> Result<ProviderAnswer, ProviderError> {
        let key = (normalize_name(given_name), country_hint);
        if let Some(hit) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return hit.clone();
        }
        let answer = self.fetch(given_name, country_hint);
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, answer.clone());
        answer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub label: GenderLabel,
    /// The provider's verbatim answer, if one was obtained.
    pub raw: Option<String>,
    pub failure: Option<ProviderError>,
}

/// Asks `provider` about `full_name` and keeps the answer only if its
/// confidence reaches `threshold`. Failures and low-confidence answers
/// abstain with an unknown label.
pub fn infer_gender(
    full_name: &str,
    provider: &dyn GenderProvider,
    threshold: f64,
    country_hint: Option<CountryCode>,
) -> Inference {
    let Some(given) = given_name(full_name) else {
        return Inference { label: Label::unknown(), raw: None, failure: None };
    };
    match provider.lookup(given, full_name, country_hint) {
        Ok(answer) => {
            let label = if answer.gender != Gender::Unknown && answer.confidence >= threshold {
                Label::inferred(answer.gender, answer.confidence)
            } else {
                Label::unknown()
            };
            Inference { label, raw: Some(answer.raw), failure: None }
        }
        Err(e) => {
            log::warn!("gender provider `{}` failed: {e}", provider.name());
            Inference { label: Label::unknown(), raw: None, failure: Some(e) }
        }
    }
}
