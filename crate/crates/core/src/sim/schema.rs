use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::hash::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldType {
    #[serde(rename = "string")]
    String,
    #[serde(rename = "integer")]
    Integer,
    #[serde(rename = "boolean")]
    Boolean,
    #[serde(rename = "name-list")]
    NameList,
}

impl FieldType {
    pub fn admits(self, v: &Value) -> bool {
        match self {
            FieldType::String => v.is_string(),
            FieldType::Integer => v.is_i64() || v.is_u64(),
            FieldType::Boolean => v.is_boolean(),
            FieldType::NameList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: FieldType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaContract {
    pub id: String,
    pub fields: Vec<FieldSpec>,
}

pub type Payload = BTreeMap<String, Value>;

pub const UNKNOWN_STATE: &str = "unknown-state-v1";
pub const UNCERTAINTY: &str = "uncertainty-v1";
pub const SCOPE_VIOLATION: &str = "scope-violation-v1";

fn contract(id: &str, fields: &[(&str, FieldType)]) -> SchemaContract {
    SchemaContract {
        id: id.to_string(),
        fields: fields.iter().map(|(n, t)| FieldSpec { name: n.to_string(), ty: *t }).collect(),
    }
}

/// Contracts every scenario gets for the built-in triggers.
pub fn builtin_schemas() -> Vec<SchemaContract> {
    use FieldType::*;
    vec![
        contract(UNKNOWN_STATE, &[("event", String), ("scope", String)]),
        contract(UNCERTAINTY, &[("action", String), ("confidence_pct", Integer), ("event", String)]),
        contract(SCOPE_VIOLATION, &[("action", String), ("agent", String), ("refs", NameList)]),
    ]
}

impl SchemaContract {
    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn duplicate_field(&self) -> Option<&str> {
        let mut seen = BTreeSet::new();
        self.fields.iter().map(|f| f.name.as_str()).find(|n| !seen.insert(*n))
    }

    /// First offending field: extra payload keys (in key order), then
    /// missing or mistyped contract fields (in contract order).
    pub fn check(&self, payload: &Payload) -> Result<(), String> {
        if let Some(extra) = payload.keys().find(|k| self.field(k).is_none()) {
            return Err(extra.clone());
        }
        for f in &self.fields {
            match payload.get(&f.name) {
                Some(v) if f.ty.admits(v) => {}
                _ => return Err(f.name.clone()),
            }
        }
        Ok(())
    }
}

/// SHA-256 of the payload's canonical JSON (keys sorted).
pub fn payload_hash(p: &Payload) -> String {
    sha256_hex(serde_json::to_string(p).expect("payload serializes").as_bytes())
}
