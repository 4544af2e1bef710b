use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{builtin_schemas, FieldType, SchemaContract};
use super::SimError;
use crate::bigraph::{Bigraph, LinkTarget, Signature};
use crate::dsl::{compile, Program};
use crate::rewrite::{ReactionRule, Selector};
use crate::spatial::{ingest_scan, resolve, spatial_name, ScanDocument, SpatialName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Leaf,
    Delegated,
    Central,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Leaf => "leaf",
            Tier::Delegated => "delegated",
            Tier::Central => "central",
        })
    }
}

/// Stand-in for model reasoning: when `on` matches an incoming event,
/// propose `action` with the given confidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub on: String,
    pub action: String,
    pub confidence: f64,
    #[serde(default)]
    pub refs: Vec<String>,
}

impl ScriptEntry {
    pub fn matches(&self, event: &str) -> bool {
        self.on == "*" || self.on == event
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyManifest {
    pub agent: String,
    pub scope: SpatialName,
    pub schemas: BTreeSet<String>,
    pub privileges: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentSpec {
    pub id: String,
    pub tier: Tier,
    pub scope: SpatialName,
    pub manifest: PolicyManifest,
    pub rules: Vec<String>,
    pub script: Vec<ScriptEntry>,
    pub threshold: f64,
    pub token_expiry: Option<u64>,
    /// Key used to sign this agent's token instead of the scenario secret.
    pub secret_override: Option<Vec<u8>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    scope: Option<String>,
    #[serde(default)]
    schemas: Vec<String>,
    #[serde(default)]
    privileges: BTreeSet<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    id: String,
    tier: Tier,
    #[serde(default)]
    scope: Option<String>,
    manifest: ManifestFile,
    #[serde(default)]
    rules: Vec<String>,
    #[serde(default)]
    script: Vec<ScriptEntry>,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default)]
    token_expiry: Option<u64>,
    #[serde(default)]
    secret_override: Option<String>,
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Deserialize)]
struct AgentsFile {
    agents: Vec<AgentFile>,
}

#[derive(Deserialize)]
struct SchemasFile {
    #[serde(default)]
    schemas: Vec<SchemaContract>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta {
    /// Apply the named rule at its first occurrence inside the event scope.
    Rule(String),
    Insert(Insertion),
    /// Delete the named node and everything below it.
    Remove(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Insertion {
    pub control: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Parent place; the event scope when absent.
    #[serde(default)]
    pub into: Option<String>,
    /// One entry per port: `name` joins port 0 of that node, `name#k` port k.
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub round: u64,
    pub scope: String,
    pub name: String,
    #[serde(flatten)]
    pub delta: Delta,
}

/// A sender that slips an extra field into its payloads for one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tamper {
    pub round: u64,
    pub agent: String,
    pub field: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsFile {
    pub max_rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_local_steps")]
    pub max_local_steps: usize,
    #[serde(default)]
    pub events: Vec<SensorEvent>,
    #[serde(default)]
    pub tamper: Vec<Tamper>,
}

fn default_local_steps() -> usize {
    64
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub program: Program,
    pub scan: ScanDocument,
    pub initial: Bigraph,
    /// Sorted by (tier, id).
    pub agents: Vec<AgentSpec>,
    pub schemas: BTreeMap<String, SchemaContract>,
    pub secret: Vec<u8>,
    pub config: EventsFile,
}

impl Scenario {
    pub fn agent(&self, id: &str) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn central(&self) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.tier == Tier::Central)
    }

    /// Same scenario with one agent removed.
    pub fn without_agent(&self, id: &str) -> Scenario {
        let mut s = self.clone();
        s.agents.retain(|a| a.id != id);
        s
    }
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Validation { location: location.into(), message: message.into() }
}

fn read(dir: &Path, file: &str) -> Result<String, SimError> {
    let path = dir.join(file);
    std::fs::read_to_string(&path).map_err(|e| SimError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn json<T: for<'de> Deserialize<'de>>(file: &str, text: &str) -> Result<T, SimError> {
    serde_json::from_str(text).map_err(|e| invalid(file, e.to_string()))
}

/// Read and cross-check a scenario bundle directory.
pub fn load_scenario(dir: impl AsRef<Path>) -> Result<Scenario, SimError> {
    let dir = dir.as_ref();
    let files = ["model.big", "scan.json", "agents.json", "schemas.json", "events.json", "secret.hex"];
    let mut texts = BTreeMap::new();
    for f in files {
        texts.insert(f, read(dir, f)?);
    }
    build_scenario(
        &texts["model.big"],
        &texts["scan.json"],
        &texts["agents.json"],
        &texts["schemas.json"],
        &texts["events.json"],
        &texts["secret.hex"],
    )
}

fn merged_signature(scan: &ScanDocument, program: &Program) -> Result<Signature, SimError> {
    let mut sig = scan.signature().map_err(|e| invalid("scan.json", e.to_string()))?;
    for c in program.signature.iter() {
        match sig.get(&c.name) {
            Some(k) if k == c => {}
            Some(_) => return Err(invalid("model.big", format!("control `{}` disagrees with the scan document", c.name))),
            None => sig.insert(c.clone()).map_err(|e| invalid("model.big", e.to_string()))?,
        }
    }
    Ok(sig)
}

fn decode_secret(location: &str, text: &str) -> Result<Vec<u8>, SimError> {
    let bytes = hex::decode(text.trim()).map_err(|e| invalid(location, e.to_string()))?;
    if bytes.is_empty() {
        return Err(invalid(location, "secret is empty"));
    }
    Ok(bytes)
}

fn name_in(b: &Bigraph, location: &str, text: &str) -> Result<SpatialName, SimError> {
    let name: SpatialName = text.parse().map_err(|e: crate::spatial::SpatialError| invalid(location, e.to_string()))?;
    resolve(b, &name).map_err(|e| invalid(location, e.to_string()))?;
    Ok(name)
}

/// `name` or `name#k`: a node and one of its ports.
pub fn parse_port_ref(text: &str) -> (&str, usize) {
    match text.rsplit_once('#') {
        Some((n, k)) => (n, k.parse().unwrap_or(usize::MAX)),
        None => (text, 0),
    }
}

pub fn port_link(b: &Bigraph, text: &str) -> Option<LinkTarget> {
    let (name, port) = parse_port_ref(text);
    let id = resolve(b, &name.parse().ok()?).ok()?;
    b.node(id)?.ports.get(port).cloned()
}

/// Every escalation clause emits exactly the fields of its schema, with
/// matching types.
pub fn static_schema_check(rules: &[ReactionRule], schemas: &BTreeMap<String, SchemaContract>) -> Result<(), SimError> {
    for rule in rules {
        let Some(clause) = &rule.escalation else { continue };
        let contract = schemas
            .get(&clause.schema_id)
            .ok_or_else(|| invalid(format!("model.big: rule {}", rule.name), format!("unknown schema `{}`", clause.schema_id)))?;
        let violation = |field: &str| SimError::StaticSchemaViolation { rule: rule.name.clone(), field: field.to_string() };
        for (field, sel) in &clause.fields {
            let want = match sel {
                Selector::Labels(_) => FieldType::NameList,
                Selector::Count(_) => FieldType::Integer,
                Selector::RuleName => FieldType::String,
            };
            match contract.field(field) {
                Some(f) if f.ty == want => {}
                _ => return Err(violation(field)),
            }
        }
        if let Some(missing) = contract.fields.iter().find(|f| !clause.fields.iter().any(|(n, _)| n == &f.name)) {
            return Err(violation(&missing.name));
        }
    }
    Ok(())
}

pub fn build_scenario(
    model: &str,
    scan: &str,
    agents: &str,
    schemas: &str,
    events: &str,
    secret: &str,
) -> Result<Scenario, SimError> {
    let program = compile(model).map_err(|e| invalid("model.big", e.to_string()))?;
    let scan = ScanDocument::from_json(scan).map_err(|e| invalid("scan.json", e.to_string()))?;
    let sig = merged_signature(&scan, &program)?;
    let initial = ingest_scan(&scan, &sig).map_err(|e| invalid("scan.json", e.to_string()))?;
    let secret = decode_secret("secret.hex", secret)?;

    let mut table: BTreeMap<String, SchemaContract> = builtin_schemas().into_iter().map(|s| (s.id.clone(), s)).collect();
    for (i, s) in json::<SchemasFile>("schemas.json", schemas)?.schemas.into_iter().enumerate() {
        let loc = format!("schemas.json: schemas[{i}]");
        if let Some(d) = s.duplicate_field() {
            return Err(invalid(loc, format!("field `{d}` declared twice")));
        }
        if table.contains_key(&s.id) {
            return Err(invalid(loc, format!("schema `{}` defined more than once", s.id)));
        }
        table.insert(s.id.clone(), s);
    }
    static_schema_check(&program.rules, &table)?;

    let files = json::<AgentsFile>("agents.json", agents)?.agents;
    if files.is_empty() {
        return Err(invalid("agents.json: agents", "no agents"));
    }
    let top = initial
        .node_children(crate::bigraph::Place::Root(0))
        .next()
        .and_then(|n| spatial_name(&initial, n).ok())
        .ok_or_else(|| invalid("scan.json", "scan has no labelled root"))?;
    let mut specs: Vec<AgentSpec> = Vec::new();
    for (i, a) in files.into_iter().enumerate() {
        let loc = |f: &str| format!("agents.json: agents[{i}].{f}");
        if specs.iter().any(|s| s.id == a.id) {
            return Err(invalid(loc("id"), format!("duplicate agent id `{}`", a.id)));
        }
        if a.tier == Tier::Central && specs.iter().any(|s| s.tier == Tier::Central) {
            return Err(invalid(loc("tier"), "more than one central agent"));
        }
        let scope = match (&a.scope, a.tier) {
            (Some(s), _) => name_in(&initial, &loc("scope"), s)?,
            (None, Tier::Central) => top.clone(),
            (None, _) => return Err(invalid(loc("scope"), "missing scope")),
        };
        let node = resolve(&initial, &scope).expect("resolved above");
        if initial.control_of(node).is_some_and(|c| c.atomic) {
            return Err(invalid(loc("scope"), format!("`{scope}` is atomic")));
        }
        let manifest_scope = match &a.manifest.scope {
            Some(s) => name_in(&initial, &loc("manifest.scope"), s)?,
            None => scope.clone(),
        };
        if !scope.within(&manifest_scope) {
            return Err(invalid(loc("scope"), format!("`{scope}` lies outside manifest scope `{manifest_scope}`")));
        }
        for s in &a.manifest.schemas {
            if !table.contains_key(s) {
                return Err(invalid(loc("manifest.schemas"), format!("unknown schema `{s}`")));
            }
        }
        for r in &a.rules {
            if program.rule(r).is_none() {
                return Err(invalid(loc("rules"), format!("unknown rule `{r}`")));
            }
        }
        for p in &a.manifest.privileges {
            if let Some(r) = p.strip_prefix("rule:") {
                if program.rule(r).is_none() {
                    return Err(invalid(loc("manifest.privileges"), format!("unknown rule `{r}`")));
                }
            }
        }
        if !(0.0..=1.0).contains(&a.threshold) {
            return Err(invalid(loc("threshold"), "must lie in [0, 1]"));
        }
        for (j, e) in a.script.iter().enumerate() {
            let sloc = loc(&format!("script[{j}]"));
            if !(0.0..=1.0).contains(&e.confidence) {
                return Err(invalid(sloc, "confidence must lie in [0, 1]"));
            }
            if let Some(r) = e.action.strip_prefix("rule:") {
                if program.rule(r).is_none() {
                    return Err(invalid(sloc, format!("unknown rule `{r}`")));
                }
            }
            for r in &e.refs {
                name_in(&initial, &sloc, r)?;
            }
        }
        let secret_override = a.secret_override.as_deref().map(|s| decode_secret(&loc("secret_override"), s)).transpose()?;
        specs.push(AgentSpec {
            manifest: PolicyManifest {
                agent: a.id.clone(),
                scope: manifest_scope,
                schemas: a.manifest.schemas.into_iter().collect(),
                privileges: a.manifest.privileges,
            },
            id: a.id,
            tier: a.tier,
            scope,
            rules: a.rules,
            script: a.script,
            threshold: a.threshold,
            token_expiry: a.token_expiry,
            secret_override,
        });
    }
    // a lower tier never governs a region enclosing a higher tier's; leaves enclose no one
    for a in &specs {
        for b in &specs {
            if a.id == b.id {
                continue;
            }
            let strictly_inside = b.scope.within(&a.scope) && b.scope != a.scope;
            if strictly_inside && (a.tier < b.tier || a.tier == Tier::Leaf) {
                return Err(invalid(
                    format!("agents.json: agent {}", a.id),
                    format!("scope `{}` encloses the scope of `{}`", a.scope, b.id),
                ));
            }
        }
    }
    specs.sort_by(|a, b| (a.tier, &a.id).cmp(&(b.tier, &b.id)));

    let config: EventsFile = json("events.json", events)?;
    for (i, e) in config.events.iter().enumerate() {
        let loc = format!("events.json: events[{i}]");
        if e.round == 0 {
            return Err(invalid(loc, "rounds are numbered from 1"));
        }
        name_in(&initial, &loc, &e.scope)?;
        match &e.delta {
            Delta::Rule(r) if program.rule(r).is_none() => return Err(invalid(loc, format!("unknown rule `{r}`"))),
            Delta::Insert(ins) => {
                let ctrl = sig.get(&ins.control).ok_or_else(|| invalid(&loc, format!("unknown control `{}`", ins.control)))?;
                if ctrl.arity != ins.links.len() {
                    return Err(invalid(loc, format!("control `{}` has arity {} but {} links were given", ctrl.name, ctrl.arity, ins.links.len())));
                }
                if let Some(p) = &ins.into {
                    name_in(&initial, &loc, p)?;
                }
            }
            _ => {}
        }
    }
    for (i, t) in config.tamper.iter().enumerate() {
        if !specs.iter().any(|a| a.id == t.agent) {
            return Err(invalid(format!("events.json: tamper[{i}]"), format!("unknown agent `{}`", t.agent)));
        }
    }

    Ok(Scenario { program, scan, initial, agents: specs, schemas: table, secret, config })
}
