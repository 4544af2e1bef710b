use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use super::audit::{append_audit, verify_chain, AuditRecord};
use super::scenario::{port_link, AgentSpec, Delta, Scenario, SensorEvent, Tier};
use super::schema::{payload_hash, Payload, SchemaContract, SCOPE_VIOLATION, UNCERTAINTY, UNKNOWN_STATE};
use super::token::CapabilityToken;
use crate::bigraph::{Bigraph, NodeId, Place};
use crate::matching::{find_occurrences, Occurrence};
use crate::rewrite::{apply, step, BrsSpec, ReactionRule, Selector};
use crate::spatial::{extract_scope, normalize_label, reattach, resolve, SpatialName};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscalationMessage {
    pub from: String,
    pub to: String,
    pub from_tier: Tier,
    pub to_tier: Tier,
    pub round: u64,
    pub schema_id: String,
    pub payload: Payload,
    pub token: CapabilityToken,
    pub payload_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "field")]
pub enum Rejection {
    /// Signature does not verify, or the token belongs to another agent.
    BadSignature,
    Expired,
    SchemaNotPermitted,
    TierViolation,
    SchemaMismatch(String),
    HashMismatch,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::BadSignature => f.write_str("bad signature"),
            Rejection::Expired => f.write_str("token expired"),
            Rejection::SchemaNotPermitted => f.write_str("schema not permitted by token"),
            Rejection::TierViolation => f.write_str("recipient tier is not higher than sender tier"),
            Rejection::SchemaMismatch(field) => write!(f, "payload does not fit schema at field `{field}`"),
            Rejection::HashMismatch => f.write_str("payload hash mismatch"),
        }
    }
}

pub fn validate_escalation(
    msg: &EscalationMessage,
    contracts: &BTreeMap<String, SchemaContract>,
    secret: &[u8],
    round: u64,
) -> Result<(), Rejection> {
    if !msg.token.verify(secret) || msg.token.agent != msg.from {
        return Err(Rejection::BadSignature);
    }
    if round > msg.token.expiry {
        return Err(Rejection::Expired);
    }
    if !msg.token.schemas.contains(&msg.schema_id) {
        return Err(Rejection::SchemaNotPermitted);
    }
    if msg.to_tier <= msg.from_tier {
        return Err(Rejection::TierViolation);
    }
    let contract = contracts.get(&msg.schema_id).ok_or_else(|| Rejection::SchemaMismatch(msg.schema_id.clone()))?;
    contract.check(&msg.payload).map_err(Rejection::SchemaMismatch)?;
    if payload_hash(&msg.payload) != msg.payload_hash {
        return Err(Rejection::HashMismatch);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    Rule(String),
    UnknownState,
    Uncertainty,
    ScopeViolation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EscalationIntent {
    pub kind: IntentKind,
    pub schema_id: String,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Delivered { from: String, to: String, schema: String },
    Rejected { from: String, to: String, schema: String, reason: Rejection },
    Acknowledged { agent: String, from: String, schema: String },
    Sensor { name: String, scope: String, agent: Option<String>, applied: bool, detail: Option<String> },
    RuleFired { agent: String, rule: String, occurrence: String },
    LocalBound { agent: String, steps: usize },
    Decision { agent: String, on: String, action: String, confidence: f64, executed: bool },
    ActionFailed { agent: String, action: String, reason: String },
    Sent { seq: u64, from: String, to: String, schema: String, kind: IntentKind, payload: Payload, payload_hash: String },
    Undeliverable { from: String, schema: String, kind: IntentKind },
    ScopeBreach { agent: String, node: NodeId },
    AgentError { agent: String, message: String },
    RoundEnd { hash: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimEvent {
    pub round: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// An event as seen by the agent it was routed to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observed {
    pub name: String,
    pub scope: String,
    /// Control the delta introduced or removed; `None` for rule deltas.
    pub control: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub scenario: Scenario,
    pub bigraph: Bigraph,
    pub round: u64,
    pub tokens: BTreeMap<String, CapabilityToken>,
    /// Sent last round, delivered at the start of the next.
    pub outbox: Vec<EscalationMessage>,
    pub messages: Vec<EscalationMessage>,
    pub audit: Vec<AuditRecord>,
}

impl SimState {
    pub fn new(scenario: Scenario) -> Self {
        let expiry = scenario.config.max_rounds;
        let tokens = scenario
            .agents
            .iter()
            .map(|a| {
                let schemas: Vec<String> = a.manifest.schemas.iter().cloned().collect();
                let key = a.secret_override.as_deref().unwrap_or(&scenario.secret);
                let t = CapabilityToken::mint(&a.id, &a.manifest.scope.to_string(), &schemas, 0, a.token_expiry.unwrap_or(expiry), key);
                (a.id.clone(), t)
            })
            .collect();
        SimState {
            bigraph: scenario.initial.clone(),
            scenario,
            round: 0,
            tokens,
            outbox: Vec::new(),
            messages: Vec::new(),
            audit: Vec::new(),
        }
    }
}

fn rule_controls(rule: &ReactionRule) -> impl Iterator<Item = &str> {
    rule.redex.nodes().chain(rule.reactum.nodes()).map(|n| n.control.as_str())
}

/// Payload of a fired rule's escalation clause, read off the agent state
/// the rule matched in.
pub fn escalation_payload(rule: &ReactionRule, state: &Bigraph, occ: &Occurrence) -> Option<(String, Payload)> {
    let clause = rule.escalation.as_ref()?;
    let matched: Vec<&crate::bigraph::Node> = occ.key().iter().filter_map(|n| state.node(*n)).collect();
    let mut payload = Payload::new();
    for (field, sel) in &clause.fields {
        let v = match sel {
            Selector::Labels(c) => {
                Value::from(matched.iter().filter(|n| &n.control == c).filter_map(|n| n.label.clone()).collect::<Vec<_>>())
            }
            Selector::Count(c) => Value::from(matched.iter().filter(|n| &n.control == c).count()),
            Selector::RuleName => Value::from(rule.name.clone()),
        };
        payload.insert(field.clone(), v);
    }
    Some((clause.schema_id.clone(), payload))
}

/// Triggers (b), (c) and (d). Rule-driven intents (a) are produced while
/// the agent runs its rules. Returns intents plus the decisions to carry
/// out, as (script entry index, event).
pub fn evaluate_triggers(
    agent: &AgentSpec,
    rules: &[&ReactionRule],
    sensed: &[Observed],
    inbox: &[String],
) -> (Vec<EscalationIntent>, Vec<(usize, String)>) {
    let mut intents = Vec::new();
    let known: BTreeSet<&str> = rules.iter().flat_map(|r| rule_controls(r)).collect();
    for ev in sensed {
        let recognized = match &ev.control {
            None => true,
            Some(c) => known.contains(c.as_str()),
        } || agent.script.iter().any(|s| s.matches(&ev.name));
        if !recognized {
            let payload = Payload::from([("event".to_string(), json!(ev.name)), ("scope".to_string(), json!(ev.scope))]);
            intents.push(EscalationIntent { kind: IntentKind::UnknownState, schema_id: UNKNOWN_STATE.into(), payload });
        }
    }
    let incoming: Vec<&String> = sensed.iter().map(|e| &e.name).chain(inbox).collect();
    let mut act = Vec::new();
    for (i, entry) in agent.script.iter().enumerate() {
        for ev in incoming.iter().filter(|e| entry.matches(e)) {
            let outside: Vec<&String> = entry
                .refs
                .iter()
                .filter(|r| r.parse::<SpatialName>().map_or(true, |n| !n.within(&agent.manifest.scope)))
                .collect();
            if !outside.is_empty() {
                let payload = Payload::from([
                    ("action".to_string(), json!(entry.action)),
                    ("agent".to_string(), json!(agent.id)),
                    ("refs".to_string(), json!(outside)),
                ]);
                intents.push(EscalationIntent { kind: IntentKind::ScopeViolation, schema_id: SCOPE_VIOLATION.into(), payload });
            } else if entry.confidence < agent.threshold {
                let payload = Payload::from([
                    ("action".to_string(), json!(entry.action)),
                    ("confidence_pct".to_string(), json!((entry.confidence * 100.0).round() as i64)),
                    ("event".to_string(), json!(ev)),
                ]);
                intents.push(EscalationIntent { kind: IntentKind::Uncertainty, schema_id: UNCERTAINTY.into(), payload });
            } else {
                act.push((i, ev.to_string()));
            }
        }
    }
    (intents, act)
}

fn recipient<'a>(scenario: &'a Scenario, from: &AgentSpec, kind: &IntentKind) -> Option<&'a AgentSpec> {
    if *kind == IntentKind::ScopeViolation {
        return scenario.central();
    }
    scenario
        .agents
        .iter()
        .filter(|b| b.tier > from.tier && from.scope.within(&b.scope))
        .min_by_key(|b| (b.tier, std::cmp::Reverse(b.scope.segments().len()), b.id.clone()))
}

/// The agent governing the smallest region that contains `scope`.
fn route_event<'a>(scenario: &'a Scenario, scope: &SpatialName) -> Option<&'a AgentSpec> {
    scenario
        .agents
        .iter()
        .filter(|a| scope.within(&a.scope))
        .min_by_key(|a| (std::cmp::Reverse(a.scope.segments().len()), a.tier, a.id.clone()))
}

/// Apply `rule` at its first occurrence inside the named place.
fn apply_in_scope(b: &Bigraph, scope: &SpatialName, rule: &ReactionRule) -> Result<Option<Bigraph>, String> {
    let node = resolve(b, scope).map_err(|e| e.to_string())?;
    let mut view = extract_scope(b, node).map_err(|e| e.to_string())?;
    let Some(occ) = find_occurrences(&view.view, &rule.redex).map_err(|e| e.to_string())?.into_iter().next() else {
        return Ok(None);
    };
    view.view = apply(&view.view, rule, &occ).map_err(|e| e.to_string())?;
    reattach(b, &view).map(Some).map_err(|e| e.to_string())
}

fn apply_delta(b: &Bigraph, scenario: &Scenario, ev: &SensorEvent) -> Result<(Option<Bigraph>, Option<String>), String> {
    let scope: SpatialName = ev.scope.parse().map_err(|e: crate::spatial::SpatialError| e.to_string())?;
    match &ev.delta {
        Delta::Rule(r) => {
            let rule = scenario.program.rule(r).ok_or_else(|| format!("unknown rule `{r}`"))?;
            Ok((apply_in_scope(b, &scope, rule)?, None))
        }
        Delta::Insert(ins) => {
            let parent_name = match &ins.into {
                Some(p) => p.parse().map_err(|e: crate::spatial::SpatialError| e.to_string())?,
                None => scope,
            };
            let parent = resolve(b, &parent_name).map_err(|e| e.to_string())?;
            let label = ins.label.as_deref().map(normalize_label);
            if let Some(l) = &label {
                if b.node_children(Place::Node(parent)).any(|c| b.node(c).and_then(|n| n.label.as_ref()) == Some(l)) {
                    return Err(format!("`{l}` already exists under `{parent_name}`"));
                }
            }
            let ports = ins
                .links
                .iter()
                .map(|l| port_link(b, l).ok_or_else(|| format!("no such port `{l}`")))
                .collect::<Result<Vec<_>, _>>()?;
            let mut e = b.edit();
            e.add_node(Place::Node(parent), &ins.control, label.as_deref(), ports).map_err(|e| e.to_string())?;
            Ok((Some(e.build().map_err(|e| e.to_string())?), Some(ins.control.clone())))
        }
        Delta::Remove(name) => {
            let target = resolve(b, &name.parse().map_err(|e: crate::spatial::SpatialError| e.to_string())?).map_err(|e| e.to_string())?;
            let control = b.node(target).map(|n| n.control.clone());
            let mut e = b.edit();
            e.remove_subtree(target);
            Ok((Some(e.build().map_err(|e| e.to_string())?), control))
        }
    }
}

/// One synchronous round: deliver, sense, then let every agent act.
pub fn run_round(state: &mut SimState) -> Vec<SimEvent> {
    state.round += 1;
    let round = state.round;
    let mut events = Vec::new();
    let push = |events: &mut Vec<SimEvent>, kind| events.push(SimEvent { round, kind });

    // (1) delivery
    let mut inbox: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for msg in std::mem::take(&mut state.outbox) {
        let (from, to, schema) = (msg.from.clone(), msg.to.clone(), msg.schema_id.clone());
        match validate_escalation(&msg, &state.scenario.schemas, &state.scenario.secret, round) {
            Ok(()) => {
                inbox.entry(to.clone()).or_default().push(format!("escalation:{schema}"));
                push(&mut events, EventKind::Delivered { from: from.clone(), to: to.clone(), schema: schema.clone() });
                if msg.to_tier == Tier::Central {
                    push(&mut events, EventKind::Acknowledged { agent: to, from, schema });
                }
            }
            Err(reason) => push(&mut events, EventKind::Rejected { from, to, schema, reason }),
        }
    }

    // (2) sensor events
    let mut sensed: BTreeMap<String, Vec<Observed>> = BTreeMap::new();
    let todays: Vec<SensorEvent> = state.scenario.config.events.iter().filter(|e| e.round == round).cloned().collect();
    for ev in todays {
        let agent = ev.scope.parse().ok().and_then(|s| route_event(&state.scenario, &s)).map(|a| a.id.clone());
        let (applied, detail, control) = match apply_delta(&state.bigraph, &state.scenario, &ev) {
            Ok((Some(next), control)) => {
                state.bigraph = next;
                (true, None, control)
            }
            Ok((None, _)) => (false, Some("no occurrence".to_string()), None),
            Err(e) => (false, Some(e), None),
        };
        if let (Some(a), true) = (&agent, applied) {
            sensed.entry(a.clone()).or_default().push(Observed { name: ev.name.clone(), scope: ev.scope.clone(), control });
        }
        push(&mut events, EventKind::Sensor { name: ev.name, scope: ev.scope, agent, applied, detail });
    }

    // (3) agents in (tier, id) order
    let agents = state.scenario.agents.clone();
    for agent in &agents {
        let intents = run_agent(state, agent, &sensed, &inbox, &mut events);
        for intent in intents {
            send(state, agent, intent, &mut events);
        }
    }
    debug_assert!(verify_chain(&state.audit));
    push(&mut events, EventKind::RoundEnd { hash: state.bigraph.canonical_hash() });
    events
}

fn run_agent(
    state: &mut SimState,
    agent: &AgentSpec,
    sensed: &BTreeMap<String, Vec<Observed>>,
    inbox: &BTreeMap<String, Vec<String>>,
    events: &mut Vec<SimEvent>,
) -> Vec<EscalationIntent> {
    let round = state.round;
    let id = agent.id.clone();
    let mut intents = Vec::new();
    let err = |events: &mut Vec<SimEvent>, message: String| {
        events.push(SimEvent { round, kind: EventKind::AgentError { agent: id.clone(), message } })
    };
    let rules: Vec<&ReactionRule> = agent.rules.iter().filter_map(|r| state.scenario.program.rule(r)).collect();

    let scope_node = match resolve(&state.bigraph, &agent.scope) {
        Ok(n) => n,
        Err(e) => {
            err(events, e.to_string());
            return intents;
        }
    };
    let mut view = match extract_scope(&state.bigraph, scope_node) {
        Ok(v) => v,
        Err(e) => {
            err(events, e.to_string());
            return intents;
        }
    };
    if let Ok(m) = resolve(&state.bigraph, &agent.manifest.scope) {
        let mut allowed: BTreeSet<NodeId> = state.bigraph.descendants(m).into_iter().collect();
        allowed.insert(m);
        if let Some(n) = view.view.node_ids().find(|n| !allowed.contains(n)) {
            events.push(SimEvent { round, kind: EventKind::ScopeBreach { agent: id.clone(), node: n } });
        }
    }

    if !rules.is_empty() {
        let spec = BrsSpec::single_class(view.view.clone(), rules.iter().map(|r| (*r).clone()).collect());
        let mut local = view.view.clone();
        let mut steps = 0;
        loop {
            match step(&local, &spec) {
                Ok(None) => break,
                Ok(Some(_)) if steps == state.scenario.config.max_local_steps => {
                    events.push(SimEvent { round, kind: EventKind::LocalBound { agent: id.clone(), steps } });
                    break;
                }
                Ok(Some(r)) => {
                    let rule = &spec.rules[r.rule];
                    events.push(SimEvent {
                        round,
                        kind: EventKind::RuleFired { agent: id.clone(), rule: rule.name.clone(), occurrence: r.occurrence.summary() },
                    });
                    if let Some((schema_id, payload)) = escalation_payload(rule, &local, &r.occurrence) {
                        intents.push(EscalationIntent { kind: IntentKind::Rule(rule.name.clone()), schema_id, payload });
                    }
                    local = r.state;
                    steps += 1;
                }
                Err(e) => {
                    err(events, e.to_string());
                    break;
                }
            }
        }
        if steps > 0 {
            view.view = local;
            match reattach(&state.bigraph, &view) {
                Ok(b) => state.bigraph = b,
                Err(e) => err(events, e.to_string()),
            }
        }
    }

    let no_events = Vec::new();
    let seen = sensed.get(&agent.id).unwrap_or(&no_events);
    let no_mail = Vec::new();
    let mail = inbox.get(&agent.id).unwrap_or(&no_mail);
    let (more, act) = evaluate_triggers(agent, &rules, seen, mail);
    intents.extend(more);
    for (i, ev) in act {
        let entry = &agent.script[i];
        let mut executed = true;
        if let Some(r) = entry.action.strip_prefix("rule:") {
            executed = false;
            let reason = if !agent.manifest.privileges.contains(&entry.action) {
                Some("privilege not granted".to_string())
            } else {
                let rule = state.scenario.program.rule(r).expect("checked at load");
                match apply_in_scope(&state.bigraph, &agent.scope, rule) {
                    Ok(Some(b)) => {
                        state.bigraph = b;
                        executed = true;
                        None
                    }
                    Ok(None) => Some("no occurrence".to_string()),
                    Err(e) => Some(e),
                }
            };
            if let Some(reason) = reason {
                events.push(SimEvent { round, kind: EventKind::ActionFailed { agent: id.clone(), action: entry.action.clone(), reason } });
            }
        }
        events.push(SimEvent {
            round,
            kind: EventKind::Decision { agent: id.clone(), on: ev, action: entry.action.clone(), confidence: entry.confidence, executed },
        });
    }
    intents
}

fn send(state: &mut SimState, from: &AgentSpec, intent: EscalationIntent, events: &mut Vec<SimEvent>) {
    let round = state.round;
    let Some(to) = recipient(&state.scenario, from, &intent.kind) else {
        events.push(SimEvent {
            round,
            kind: EventKind::Undeliverable { from: from.id.clone(), schema: intent.schema_id, kind: intent.kind },
        });
        return;
    };
    let mut payload = intent.payload;
    for t in state.scenario.config.tamper.iter().filter(|t| t.round == round && t.agent == from.id) {
        payload.insert(t.field.clone(), t.value.clone());
    }
    let hash = payload_hash(&payload);
    let rec = append_audit(&mut state.audit, round, &from.id, &hash);
    let msg = EscalationMessage {
        from: from.id.clone(),
        to: to.id.clone(),
        from_tier: from.tier,
        to_tier: to.tier,
        round,
        schema_id: intent.schema_id,
        payload,
        token: state.tokens[&from.id].clone(),
        payload_hash: hash,
    };
    events.push(SimEvent {
        round,
        kind: EventKind::Sent {
            seq: rec.seq,
            from: msg.from.clone(),
            to: msg.to.clone(),
            schema: msg.schema_id.clone(),
            kind: intent.kind,
            payload: msg.payload.clone(),
            payload_hash: msg.payload_hash.clone(),
        },
    });
    state.messages.push(msg.clone());
    state.outbox.push(msg);
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub seed: u64,
    pub agents: Vec<String>,
    pub initial_hash: String,
    /// Bigraph hash after each round.
    pub round_hashes: Vec<String>,
    pub events: Vec<SimEvent>,
    pub messages: Vec<EscalationMessage>,
    pub audit: Vec<AuditRecord>,
    pub final_hash: String,
    pub final_state: Bigraph,
}

#[derive(Serialize)]
struct StartLine<'a> {
    event: &'static str,
    agents: &'a [String],
    hash: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct EndLine<'a> {
    event: &'static str,
    audit_ok: bool,
    final_hash: &'a str,
    messages: usize,
    rounds: usize,
}

impl SimTrace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let start = StartLine { event: "start", agents: &self.agents, hash: &self.initial_hash, seed: self.seed };
        out += &(serde_json::to_string(&start).expect("serializes") + "\n");
        for e in &self.events {
            out += &(serde_json::to_string(e).expect("serializes") + "\n");
        }
        let end = EndLine {
            event: "end",
            audit_ok: verify_chain(&self.audit),
            final_hash: &self.final_hash,
            messages: self.messages.len(),
            rounds: self.round_hashes.len(),
        };
        out += &(serde_json::to_string(&end).expect("serializes") + "\n");
        out
    }

    pub fn audit_jsonl(&self) -> String {
        super::audit::audit_jsonl(&self.audit)
    }

    pub fn events_of(&self, round: u64) -> impl Iterator<Item = &EventKind> {
        self.events.iter().filter(move |e| e.round == round).map(|e| &e.kind)
    }
}

pub fn run_sim(scenario: &Scenario) -> SimTrace {
    let mut state = SimState::new(scenario.clone());
    let initial_hash = state.bigraph.canonical_hash();
    let mut events = Vec::new();
    let mut round_hashes = Vec::new();
    for _ in 0..scenario.config.max_rounds {
        events.extend(run_round(&mut state));
        round_hashes.push(state.bigraph.canonical_hash());
    }
    SimTrace {
        seed: scenario.config.seed,
        agents: scenario.agents.iter().map(|a| a.id.clone()).collect(),
        initial_hash,
        round_hashes,
        events,
        messages: state.messages,
        audit: state.audit,
        final_hash: state.bigraph.canonical_hash(),
        final_state: state.bigraph,
    }
}
