use super::*;
use crate::bigraph::iso_eq;
use serde_json::json;

fn fixture(name: &str) -> Scenario {
    load_scenario(format!("{}/tests/fixtures/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn text(name: &str, file: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/scenarios/{name}/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn rebuild(name: &str, replace: &str, with: &str) -> Result<Scenario, SimError> {
    let t = |f: &str| {
        let s = text(name, f);
        if f == replace { with.to_string() } else { s }
    };
    build_scenario(&t("model.big"), &t("scan.json"), &t("agents.json"), &t("schemas.json"), &t("events.json"), &t("secret.hex"))
}

fn fired(trace: &SimTrace) -> Vec<(u64, String)> {
    trace
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::RuleFired { rule, .. } => Some((e.round, rule.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn meeting_room_loads() {
    let s = fixture("meeting-room");
    let tiers: Vec<Tier> = s.agents.iter().map(|a| a.tier).collect();
    assert_eq!(tiers, vec![Tier::Leaf, Tier::Delegated, Tier::Central]);
    assert_eq!(s.central().unwrap().scope.to_string(), "building-1");
    assert_eq!(s.agent("leaf-room-a").unwrap().rules, vec!["shutdown_nodes"]);
    let st = SimState::new(s.clone());
    assert_eq!(st.tokens.len(), 3);
    assert!(st.tokens.values().all(|t| t.verify(&s.secret)));
}

#[test]
fn meeting_room_shuts_down_when_empty() {
    let trace = run_sim(&fixture("meeting-room"));
    // alice enters in round 1 and leaves in round 3
    assert_eq!(fired(&trace), vec![(3, "shutdown_nodes".to_string())]);
    assert_eq!(trace.round_hashes.len(), 6);
    assert_ne!(trace.round_hashes[1], trace.round_hashes[2]);
    assert!(trace.events_of(3).all(|e| !matches!(e, EventKind::Sent { .. })));
    let decisions = trace.events_of(3).filter(|e| matches!(e, EventKind::Decision { executed: true, .. })).count();
    assert_eq!(decisions, 1);
    // building, floor, room, the node the rule left behind and the leak
    assert_eq!(trace.final_state.node_count(), 5);

    // the leak is unknown to the leaf; the floor is unsure what to do
    let sent: Vec<(u64, &str, &str, &str)> =
        trace.messages.iter().map(|m| (m.round, m.from.as_str(), m.to.as_str(), m.schema_id.as_str())).collect();
    assert_eq!(sent, vec![(4, "leaf-room-a", "floor-1", UNKNOWN_STATE), (5, "floor-1", "central", UNCERTAINTY)]);
    assert_eq!(trace.audit.len(), 2);
    assert!(verify_chain(&trace.audit));
    assert!(trace.events_of(6).any(|e| matches!(e, EventKind::Acknowledged { .. })));
}

#[test]
fn two_users_escalate_identifiers_once() {
    let trace = run_sim(&fixture("two-users"));
    assert_eq!(trace.messages.len(), 1);
    let m = &trace.messages[0];
    assert_eq!((m.from.as_str(), m.to.as_str(), m.round), ("leaf-room-a", "floor-1", 1));
    assert_eq!(m.schema_id, "presence-v1");
    assert_eq!(serde_json::to_value(&m.payload).unwrap(), json!({"users": ["alice", "bob"]}));
    assert_eq!(trace.audit.len(), 1);
    assert_eq!(trace.audit[0].payload_hash, m.payload_hash);
    let r2: Vec<&EventKind> = trace.events_of(2).collect();
    assert!(r2.iter().any(|e| matches!(e, EventKind::Delivered { to, .. } if to == "floor-1")));
    assert!(r2.iter().any(|e| matches!(e, EventKind::Decision { agent, executed: true, .. } if agent == "floor-1")));
    let meeting = trace.final_state.nodes().find(|n| n.control == "Meeting").unwrap();
    assert_eq!(meeting.label.as_deref(), Some("status"));
}

#[test]
fn tampered_payload_rejected_state_unchanged() {
    let clean = run_sim(&fixture("two-users"));
    let mut s = fixture("two-users");
    s.config.tamper.push(Tamper { round: 1, agent: "leaf-room-a".into(), field: "location_history".into(), value: json!(["room-a"]) });
    let trace = run_sim(&s);
    let rejected: Vec<&Rejection> = trace
        .events
        .iter()
        .filter_map(|e| if let EventKind::Rejected { reason, .. } = &e.kind { Some(reason) } else { None })
        .collect();
    assert_eq!(rejected, vec![&Rejection::SchemaMismatch("location_history".into())]);
    assert!(!trace.events.iter().any(|e| matches!(e.kind, EventKind::Delivered { .. })));
    assert_eq!(trace.round_hashes, clean.round_hashes);
    assert_eq!(trace.audit.len(), trace.messages.len());
}

#[test]
fn cross_department_triggers() {
    let trace = run_sim(&fixture("cross-department"));
    let sent: Vec<(u64, String, String, String)> = trace.messages.iter().map(|m| (m.round, m.from.clone(), m.to.clone(), m.schema_id.clone())).collect();
    assert_eq!(
        sent,
        vec![
            (1, "leaf-room-a".into(), "dept-1".into(), UNKNOWN_STATE.into()),
            (1, "leaf-room-a".into(), "dept-1".into(), UNCERTAINTY.into()),
            (2, "dept-1".into(), "central".into(), SCOPE_VIOLATION.into()),
        ]
    );
    assert_eq!(
        serde_json::to_value(&trace.messages[0].payload).unwrap(),
        json!({"event": "strange-noise", "scope": "room-a.floor-1.building-1"})
    );
    assert_eq!(trace.messages[1].payload["confidence_pct"], json!(30));
    assert_eq!(trace.messages[2].payload["refs"], json!(["door.room-x.floor-2.building-1"]));
    assert!(trace.events_of(3).any(|e| matches!(e, EventKind::Acknowledged { agent, .. } if agent == "central")));
    // nothing was unlocked anywhere
    assert_eq!(trace.final_state.nodes().filter(|n| n.control == "OpenDoor").count(), 0);
    assert!(verify_chain(&trace.audit));
}

#[test]
fn confident_decision_raises_nothing() {
    let s = fixture("cross-department");
    let mut dept = s.agent("dept-1").unwrap().clone();
    dept.script = vec![ScriptEntry { on: "tick".into(), action: "ack".into(), confidence: 0.9, refs: vec![] }];
    dept.threshold = 0.5;
    let seen = [Observed { name: "tick".into(), scope: "floor-1.building-1".into(), control: None }];
    let (intents, act) = evaluate_triggers(&dept, &[], &seen, &[]);
    assert!(intents.is_empty());
    assert_eq!(act, vec![(0, "tick".to_string())]);

    let leaf = s.agent("leaf-room-a").unwrap();
    let seen = [Observed { name: "hum".into(), scope: "room-a.floor-1.building-1".into(), control: Some("Noise".into()) }];
    let (intents, _) = evaluate_triggers(leaf, &[], &seen, &[]);
    assert_eq!(intents.len(), 1);
    assert_eq!(intents[0].kind, IntentKind::UnknownState);
    assert_eq!(intents[0].payload.keys().collect::<Vec<_>>(), vec!["event", "scope"]);
}

fn sample_message(st: &SimState) -> EscalationMessage {
    let payload = Payload::from([("users".to_string(), json!(["alice"]))]);
    EscalationMessage {
        from: "leaf-room-a".into(),
        to: "floor-1".into(),
        from_tier: Tier::Leaf,
        to_tier: Tier::Delegated,
        round: 1,
        schema_id: "presence-v1".into(),
        payload_hash: payload_hash(&payload),
        payload,
        token: st.tokens["leaf-room-a"].clone(),
    }
}

#[test]
fn validation_order() {
    let s = fixture("two-users");
    let st = SimState::new(s.clone());
    let ok = sample_message(&st);
    let check = |m: &EscalationMessage, round| validate_escalation(m, &s.schemas, &s.secret, round);
    assert_eq!(check(&ok, 1), Ok(()));

    let mut m = ok.clone();
    m.token = CapabilityToken::mint("leaf-room-a", "room-a.floor-1.building-1", &["presence-v1".into()], 0, 3, b"wrong");
    assert_eq!(check(&m, 1), Err(Rejection::BadSignature));
    let mut m = ok.clone();
    m.from = "floor-1".into();
    assert_eq!(check(&m, 1), Err(Rejection::BadSignature));
    assert_eq!(check(&ok, 4), Err(Rejection::Expired));
    let mut m = ok.clone();
    m.schema_id = "occupancy-v1".into();
    assert_eq!(check(&m, 1), Err(Rejection::SchemaNotPermitted));
    let mut m = ok.clone();
    m.to_tier = Tier::Leaf;
    assert_eq!(check(&m, 1), Err(Rejection::TierViolation));
    let mut m = ok.clone();
    m.payload.insert("location_history".into(), json!([]));
    assert_eq!(check(&m, 1), Err(Rejection::SchemaMismatch("location_history".into())));
    let mut m = ok.clone();
    m.payload_hash = payload_hash(&Payload::new());
    assert_eq!(check(&m, 1), Err(Rejection::HashMismatch));
    // an earlier failure masks a later one
    let mut m = ok;
    m.to_tier = Tier::Leaf;
    m.payload_hash.clear();
    assert_eq!(check(&m, 99), Err(Rejection::Expired));
}

#[test]
fn overridden_secret_is_rejected() {
    let mut s = fixture("two-users");
    s.agents.iter_mut().find(|a| a.id == "leaf-room-a").unwrap().secret_override = Some(b"not the secret".to_vec());
    let trace = run_sim(&s);
    assert!(trace.events.iter().any(|e| matches!(&e.kind, EventKind::Rejected { reason: Rejection::BadSignature, .. })));
}

#[test]
fn load_errors() {
    assert!(matches!(rebuild("two-users", "agents.json", r#"{"agents": []}"#), Err(SimError::Validation { .. })));
    let audio = text("two-users", "model.big").replace("users=labels(Person)", "users=labels(Person), raw_audio=count(Person)");
    assert_eq!(
        rebuild("two-users", "model.big", &audio).unwrap_err(),
        SimError::StaticSchemaViolation { rule: "meeting_starts".into(), field: "raw_audio".into() }
    );
    let wrong_type = text("two-users", "model.big").replace("users=labels(Person)", "users=count(Person)");
    assert!(matches!(rebuild("two-users", "model.big", &wrong_type), Err(SimError::StaticSchemaViolation { .. })));
    let bad_scope = text("two-users", "agents.json").replace("room-a.floor-1", "room-z.floor-1");
    match rebuild("two-users", "agents.json", &bad_scope) {
        Err(SimError::Validation { location, .. }) => assert_eq!(location, "agents.json: agents[0].scope"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(rebuild("two-users", "secret.hex", "xyz"), Err(SimError::Validation { .. })));
    let missing = load_scenario("/nonexistent/bundle");
    assert!(matches!(missing, Err(SimError::Io { .. })));
}

#[test]
fn leaves_may_not_enclose_agents() {
    let agents = r#"{"agents": [
        {"id": "a", "tier": "leaf", "scope": "floor-1.building-1", "manifest": {}},
        {"id": "b", "tier": "delegated", "scope": "room-a.floor-1.building-1", "manifest": {}}]}"#;
    assert!(matches!(rebuild("two-users", "agents.json", agents), Err(SimError::Validation { .. })));
}

#[test]
fn deterministic_and_zero_rounds() {
    let s = fixture("cross-department");
    assert_eq!(run_sim(&s).to_jsonl(), run_sim(&s).to_jsonl());
    let mut z = s.clone();
    z.config.max_rounds = 0;
    let t = run_sim(&z);
    assert!(t.events.is_empty() && t.round_hashes.is_empty());
    assert_eq!(t.final_hash, t.initial_hash);
    assert_eq!(t.to_jsonl().lines().count(), 2);
}

#[test]
fn quiet_round_changes_nothing() {
    let mut s = fixture("two-users");
    s.config.events.clear();
    let mut st = SimState::new(s);
    let before = st.bigraph.clone();
    let events = run_round(&mut st);
    assert!(st.messages.is_empty());
    assert!(iso_eq(&before, &st.bigraph));
    assert_eq!(events.len(), 1);
}

#[test]
fn works_offline_without_central() {
    for name in ["meeting-room", "two-users"] {
        let s = fixture(name);
        let with = run_sim(&s);
        let without = run_sim(&s.without_agent("central"));
        assert_eq!(with.round_hashes, without.round_hashes, "{name}");
    }
}

#[test]
fn jsonl_shape() {
    let t = run_sim(&fixture("two-users"));
    let lines: Vec<serde_json::Value> = t.to_jsonl().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["event"], "start");
    assert_eq!(lines[0]["seed"], 11);
    assert_eq!(lines.last().unwrap()["event"], "end");
    assert_eq!(lines.last().unwrap()["audit_ok"], true);
    assert!(lines[1..lines.len() - 1].iter().all(|l| l["round"].is_u64()));
    assert_eq!(parse_audit_jsonl(&t.audit_jsonl()).unwrap(), t.audit);
}
