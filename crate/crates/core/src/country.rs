//! ISO 3166-1 alpha-2 country codes and free-text country name lookup.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An assigned ISO 3166-1 alpha-2 code, stored upper-case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not an assigned ISO 3166-1 alpha-2 code")]
pub struct InvalidCountryCode(pub String);

impl CountryCode {
    /// Parses a code case-insensitively, rejecting anything not currently assigned.
    pub fn parse(s: &str) -> Result<Self, InvalidCountryCode> {
        let t = s.trim();
        let upper = t.to_ascii_uppercase();
        if upper.len() != 2 || !upper.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(InvalidCountryCode(s.to_string()));
        }
        isocountry::CountryCode::for_alpha2(&upper).map_err(|_| InvalidCountryCode(s.to_string()))?;
        let b = upper.as_bytes();
        Ok(CountryCode([b[0], b[1]]))
    }

    pub fn as_str(&self) -> &str {
        // Constructed only from validated ASCII.
        std::str::from_utf8(&self.0).expect("ascii country code")
    }

    /// The ISO short name, e.g. "United States of America".
    pub fn name(&self) -> &'static str {
        isocountry::CountryCode::for_alpha2(self.as_str()).map(|c| c.name()).unwrap_or("")
    }

    /// Resolves a free-text country name ("France", "USA", "The Netherlands").
    pub fn from_name(name: &str) -> Option<Self> {
        let key = normalize_country_name(name);
        if key.is_empty() {
            return None;
        }
        name_index().get(key.as_str()).copied()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = InvalidCountryCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for CountryCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CountryCode::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Lower-cases, maps punctuation to spaces and collapses whitespace.
pub fn normalize_country_name(s: &str) -> String {
    let mapped: String =
        s.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect::<String>().to_lowercase();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

// Common English spellings that differ from the ISO short names.
const ALIASES: &[(&str, &str)] = &[
    ("usa", "US"),
    ("u s a", "US"),
    ("us", "US"),
    ("united states", "US"),
    ("america", "US"),
    ("uk", "GB"),
    ("u k", "GB"),
    ("united kingdom", "GB"),
    ("great britain", "GB"),
    ("england", "GB"),
    ("scotland", "GB"),
    ("wales", "GB"),
    ("russia", "RU"),
    ("south korea", "KR"),
    ("korea", "KR"),
    ("republic of korea", "KR"),
    ("north korea", "KP"),
    ("iran", "IR"),
    ("vietnam", "VN"),
    ("viet nam", "VN"),
    ("taiwan", "TW"),
    ("czech republic", "CZ"),
    ("czechia", "CZ"),
    ("bolivia", "BO"),
    ("venezuela", "VE"),
    ("tanzania", "TZ"),
    ("syria", "SY"),
    ("laos", "LA"),
    ("moldova", "MD"),
    ("the netherlands", "NL"),
    ("netherlands", "NL"),
    ("holland", "NL"),
    ("hong kong", "HK"),
    ("macau", "MO"),
    ("macao", "MO"),
    ("prc", "CN"),
    ("p r china", "CN"),
    ("uae", "AE"),
    ("turkey", "TR"),
    ("ivory coast", "CI"),
    ("brunei", "BN"),
    ("palestine", "PS"),
    ("micronesia", "FM"),
    ("vatican", "VA"),
    ("congo", "CG"),
    ("dr congo", "CD"),
    ("democratic republic of the congo", "CD"),
    ("cape verde", "CV"),
    ("swaziland", "SZ"),
    ("macedonia", "MK"),
    ("north macedonia", "MK"),
];

fn name_index() -> &'static HashMap<String, CountryCode> {
    static INDEX: OnceLock<HashMap<String, CountryCode>> = OnceLock::new();
    INDEX.get_or_init(|| {
        let mut map = HashMap::new();
        for c in isocountry::CountryCode::iter() {
            let Ok(code) = CountryCode::parse(c.alpha2()) else {
                continue;
            };
            map.insert(normalize_country_name(c.name()), code);
            // "Korea (Republic of)" style names also index by their head.
            if let Some((head, _)) = c.name().split_once(['(', ',']) {
                map.entry(normalize_country_name(head)).or_insert(code);
            }
        }
        for (alias, code) in ALIASES {
            map.insert((*alias).to_string(), CountryCode::parse(code).expect("alias table"));
        }
        map
    })
}
