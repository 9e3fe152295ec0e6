//! Proposal and decision values.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An opaque, totally ordered token, or the reserved bottom element `⊥`.
///
/// Bottom cannot be produced from user text: [`Value::token`] always yields a
/// non-bottom value, even for the string `"⊥"`. On the wire bottom is JSON
/// `null` and every token is a JSON string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Value(Option<Arc<str>>);

impl Value {
    pub fn bottom() -> Self {
        Value(None)
    }

    pub fn token(s: impl AsRef<str>) -> Self {
        Value(Some(Arc::from(s.as_ref())))
    }

    pub fn is_bottom(&self) -> bool {
        self.0.is_none()
    }

    /// The token text, or `None` for bottom.
    pub fn as_str(&self) -> Option<&str> {
        self.0.as_deref()
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::token(s)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::token(s)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("⊥"),
            Some(s) => write!(f, "{s:?}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("⊥"),
            Some(s) => f.write_str(s),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_str().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Option::<String>::deserialize(deserializer)?.map_or_else(Value::bottom, Value::token))
    }
}

/// Parses a comma separated list of tokens, e.g. `a,b,c`.
pub fn parse_list(s: &str) -> Vec<Value> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Value::token)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_is_not_a_token() {
        assert!(Value::bottom().is_bottom());
        assert!(!Value::token("⊥").is_bottom());
        assert_ne!(Value::token(""), Value::bottom());
    }

    #[test]
    fn json_shape() {
        let vs = vec![Value::bottom(), Value::token("a")];
        let s = serde_json::to_string(&vs).unwrap();
        assert_eq!(s, r#"[null,"a"]"#);
        let back: Vec<Value> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vs);
    }

    #[test]
    fn parse_list_trims() {
        assert_eq!(parse_list(" a, b ,c"), vec!["a".into(), "b".into(), "c".into()] as Vec<Value>);
        assert!(parse_list("").is_empty());
    }
}
