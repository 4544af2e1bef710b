//! Synchronous simulation of leaf, delegated and central agents sharing one
//! bigraph: local rule execution inside spatial scopes, escalation under
//! schema contracts and capability tokens, and a hash-chained audit log.

mod audit;
mod engine;
mod scenario;
mod schema;
mod token;

#[cfg(test)]
mod tests;

use thiserror::Error;

pub use audit::{append_audit, audit_jsonl, parse_audit_jsonl, record_hash, verify_chain, AuditRecord, GENESIS};
pub use engine::{
    escalation_payload, evaluate_triggers, run_round, run_sim, validate_escalation, EscalationIntent, EscalationMessage,
    EventKind, IntentKind, Observed, Rejection, SimEvent, SimState, SimTrace,
};
pub use scenario::{
    build_scenario, load_scenario, static_schema_check, AgentSpec, Delta, EventsFile, Insertion, PolicyManifest, Scenario,
    ScriptEntry, SensorEvent, Tamper, Tier,
};
pub use schema::{builtin_schemas, payload_hash, FieldSpec, FieldType, Payload, SchemaContract, SCOPE_VIOLATION, UNCERTAINTY, UNKNOWN_STATE};
pub use token::CapabilityToken;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{location}: {message}")]
    Validation { location: String, message: String },
    #[error("rule `{rule}` escalates field `{field}` outside its schema")]
    StaticSchemaViolation { rule: String, field: String },
}
