//! ODBC-style connect strings: `KEY=value` pairs separated by `;`.

use std::fmt;

use indexmap::IndexMap;

use super::FormatError;

/// Keys are stored uppercased; values verbatim. A repeated key keeps its
/// first position and takes the last value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConnectParams {
    entries: IndexMap<String, String>,
}

impl ConnectParams {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&key.to_ascii_uppercase()).map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.trim().to_ascii_uppercase(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// DATABASE if given, else the data source name.
    pub fn database(&self) -> Option<&str> {
        self.get("DATABASE").or_else(|| self.get("DSN"))
    }
}

impl fmt::Display for ConnectParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn parse_connect_string(s: &str) -> Result<ConnectParams, FormatError> {
    let mut params = ConnectParams::default();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| FormatError::MissingEquals(part.to_string()))?;
        params.insert(key, value);
    }
    Ok(params)
}
