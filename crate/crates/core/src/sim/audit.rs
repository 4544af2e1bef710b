use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;

pub const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub agent: String,
    pub payload_hash: String,
    pub prev_hash: String,
    pub record_hash: String,
    pub round: u64,
    pub seq: u64,
}

/// Fields joined with the ASCII unit separator, then SHA-256.
pub fn record_hash(seq: u64, agent: &str, payload_hash: &str, prev_hash: &str) -> String {
    sha256_hex(format!("{seq}\u{1f}{agent}\u{1f}{payload_hash}\u{1f}{prev_hash}").as_bytes())
}

pub fn append_audit(log: &mut Vec<AuditRecord>, round: u64, agent: &str, payload_hash: &str) -> AuditRecord {
    let seq = log.len() as u64;
    let prev_hash = log.last().map_or_else(|| GENESIS.to_string(), |r| r.record_hash.clone());
    let rec = AuditRecord {
        agent: agent.to_string(),
        payload_hash: payload_hash.to_string(),
        record_hash: record_hash(seq, agent, payload_hash, &prev_hash),
        prev_hash,
        round,
        seq,
    };
    log.push(rec.clone());
    rec
}

pub fn verify_chain(log: &[AuditRecord]) -> bool {
    let mut prev = GENESIS.to_string();
    for (i, r) in log.iter().enumerate() {
        if r.seq != i as u64 || r.prev_hash != prev || r.record_hash != record_hash(r.seq, &r.agent, &r.payload_hash, &r.prev_hash) {
            return false;
        }
        prev = r.record_hash.clone();
    }
    true
}

pub fn audit_jsonl(log: &[AuditRecord]) -> String {
    log.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

pub fn parse_audit_jsonl(text: &str) -> Result<Vec<AuditRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
