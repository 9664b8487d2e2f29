//! Flat `key = value` text, one pair per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Parse(format!("line {line}: field '{key}': {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| Error::Parse(format!("missing required field '{key}'")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| Error::Parse(format!("line {line}: field '{key}': {e}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Errors on any key outside `known`, naming it.
    pub fn deny_unknown(&self, known: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "line {line}: unknown field '{key}' (known fields: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_fields() {
        let kv = KeyValues::parse("# grid\nreps = 10\nlens=200, 500 # two sizes\n\nname = x").unwrap();
        assert_eq!(kv.require::<usize>("reps").unwrap(), 10);
        assert_eq!(kv.list::<usize>("lens").unwrap().unwrap(), vec![200, 500]);
        assert_eq!(kv.get_or("alpha", 0.05).unwrap(), 0.05);
        let err = kv.require::<f64>("name").unwrap_err().to_string();
        assert!(err.contains("'name'"), "{err}");
        assert!(kv.deny_unknown(&["reps", "lens"]).unwrap_err().to_string().contains("'name'"));
        assert!(KeyValues::parse("novalue").is_err());
        assert!(KeyValues::parse("a=1\na=2").is_err());
    }
}
