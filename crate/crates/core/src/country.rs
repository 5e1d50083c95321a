use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Country code as used by the source-country data (GDELT uses FIPS-style
/// two-letter codes, e.g. `UK`, `GM`, `UP`). Cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Country(Arc<str>);

impl Country {
    /// Trims and upper-cases `code`; returns `None` when nothing is left or
    /// the code contains characters that would break delimited output.
    pub fn parse(code: &str) -> Option<Self> {
        let code = code.trim();
        if code.is_empty() || !code.chars().all(|c| c.is_ascii_alphanumeric()) {
            return None;
        }
        Some(Country(code.to_ascii_uppercase().into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Country {
    /// Panics on an invalid code; meant for literals and tests.
    fn from(code: &str) -> Self {
        Country::parse(code).unwrap_or_else(|| panic!("invalid country code {code:?}"))
    }
}
