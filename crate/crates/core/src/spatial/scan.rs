use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{valid_segment, SpatialError};
use crate::bigraph::{Bigraph, BigraphBuilder, Control, EdgeId, LinkTarget, Place, Signature};

/// Category → control used when a document does not override it.
pub const DEFAULT_CATEGORIES: &[(&str, &str)] =
    &[("building", "Building"), ("floor", "Floor"), ("room", "Room"), ("zone", "Zone")];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlDecl {
    pub name: String,
    #[serde(default)]
    pub arity: usize,
    #[serde(default)]
    pub atomic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Device {
    pub label: String,
    pub control: String,
    /// Link-group ids; devices naming the same group share an edge.
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub label: String,
    pub category: String,
    /// Overrides the category's control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(default)]
    pub devices: Vec<Device>,
    #[serde(default)]
    pub children: Vec<ScanEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanDocument {
    /// Extra or overriding category → control mappings.
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
    /// Controls declared by the document itself (device kinds, custom places).
    #[serde(default)]
    pub controls: Vec<ControlDecl>,
    pub root: ScanEntry,
}

impl ScanDocument {
    pub fn from_json(text: &str) -> Result<Self, SpatialError> {
        serde_json::from_str(text).map_err(|e| SpatialError::Json(e.to_string()))
    }

    fn category_controls(&self) -> BTreeMap<String, String> {
        let mut map: BTreeMap<String, String> =
            DEFAULT_CATEGORIES.iter().map(|(c, k)| (c.to_string(), k.to_string())).collect();
        map.extend(self.categories.clone());
        map
    }

    /// The default place controls plus the document's own declarations.
    pub fn signature(&self) -> Result<Signature, SpatialError> {
        let mut sig = Signature::new();
        for (_, ctrl) in DEFAULT_CATEGORIES {
            sig.insert(Control::new(*ctrl, 0, false))?;
        }
        for c in &self.controls {
            if sig.get(&c.name).is_some_and(|k| k.arity == c.arity && k.atomic == c.atomic) {
                continue;
            }
            sig.insert(Control::new(c.name.clone(), c.arity, c.atomic))?;
        }
        Ok(sig)
    }
}

/// Lowercase, whitespace runs become `-`.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join("-").to_lowercase()
}

struct Ingest<'a> {
    categories: BTreeMap<String, String>,
    b: BigraphBuilder,
    groups: BTreeMap<String, EdgeId>,
    sig: &'a Signature,
}

impl Ingest<'_> {
    fn control(&self, name: &str) -> Result<(), SpatialError> {
        if self.sig.contains(name) {
            Ok(())
        } else {
            Err(SpatialError::UnknownControl(name.to_string()))
        }
    }

    fn label(raw: &str, seen: &mut BTreeSet<String>) -> Result<String, SpatialError> {
        let label = normalize_label(raw);
        if !valid_segment(&label) {
            return Err(SpatialError::InvalidLabel(raw.to_string()));
        }
        if !seen.insert(label.clone()) {
            return Err(SpatialError::DuplicateSiblingLabel(label));
        }
        Ok(label)
    }

    fn entry(&mut self, e: &ScanEntry, parent: Place, seen: &mut BTreeSet<String>) -> Result<(), SpatialError> {
        let label = Self::label(&e.label, seen)?;
        let control = match &e.control {
            Some(c) => c.clone(),
            None => self
                .categories
                .get(&e.category)
                .cloned()
                .ok_or_else(|| SpatialError::UnknownCategory(e.category.clone()))?,
        };
        self.control(&control)?;
        let id = self.b.add_node(parent, &control, Some(&label), vec![])?;
        let mut inner = BTreeSet::new();
        for d in &e.devices {
            let dlabel = Self::label(&d.label, &mut inner)?;
            self.control(&d.control)?;
            let arity = self.sig.get(&d.control).map_or(0, |c| c.arity);
            if arity != d.links.len() {
                return Err(SpatialError::ArityMismatch {
                    device: dlabel,
                    control: d.control.clone(),
                    arity,
                    links: d.links.len(),
                });
            }
            let mut ports = Vec::new();
            for g in &d.links {
                let edge = match self.groups.get(g) {
                    Some(e) => *e,
                    None => {
                        let e = self.b.add_edge();
                        self.groups.insert(g.clone(), e);
                        e
                    }
                };
                ports.push(LinkTarget::Edge(edge));
            }
            self.b.add_node(Place::Node(id), &d.control, Some(&dlabel), ports)?;
        }
        for c in &e.children {
            self.entry(c, Place::Node(id), &mut inner)?;
        }
        Ok(())
    }
}

/// One labelled place node per entry and one device node per device, in
/// document order, under a single root.
pub fn ingest_scan(doc: &ScanDocument, sig: &Signature) -> Result<Bigraph, SpatialError> {
    let mut ing = Ingest { categories: doc.category_controls(), b: BigraphBuilder::new(sig.clone()), groups: BTreeMap::new(), sig };
    let root = ing.b.add_root();
    ing.entry(&doc.root, Place::Root(root), &mut BTreeSet::new())?;
    Ok(ing.b.build()?)
}
