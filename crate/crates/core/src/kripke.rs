//! Finite pointed Kripke models: construction, validation, tree certification,
//! canonical forms and the JSON model-file format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

/// Opaque identifier of a world. Identity carries no meaning beyond equality;
/// models are compared up to isomorphism.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldId(String);

impl WorldId {
    pub fn new(id: impl Into<String>) -> Self {
        WorldId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for WorldId {
    fn from(s: &str) -> Self {
        WorldId(s.to_string())
    }
}

impl From<String> for WorldId {
    fn from(s: String) -> Self {
        WorldId(s)
    }
}

/// Ordered list of distinct proposition names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    props: Vec<String>,
}

/// Errors raised while building or decoding models.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model file is not valid JSON: {0}")]
    Json(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid proposition name {0:?}")]
    BadPropName(String),
    #[error("duplicate proposition {0:?}")]
    DuplicateProp(String),
    #[error("too many propositions ({0}); at most 64 are supported")]
    TooManyProps(usize),
    #[error("duplicate world {0:?}")]
    DuplicateWorld(String),
    #[error("empty world id")]
    EmptyWorldId,
    #[error("model has no worlds")]
    NoWorlds,
    #[error("unknown world {0:?} referenced by {1}")]
    UnknownWorld(String, &'static str),
    #[error("unknown proposition {0:?} in valuation")]
    UnknownProp(String),
    #[error("duplicate edge ({0:?}, {1:?})")]
    DuplicateEdge(String, String),
    #[error("not tree-shaped: {0}")]
    NotTree(String),
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Signature {
    pub fn new(props: Vec<String>) -> Result<Self, ModelError> {
        if props.len() > 64 {
            return Err(ModelError::TooManyProps(props.len()));
        }
        let mut seen = BTreeSet::new();
        for p in &props {
            if !is_identifier(p) {
                return Err(ModelError::BadPropName(p.clone()));
            }
            if !seen.insert(p.clone()) {
                return Err(ModelError::DuplicateProp(p.clone()));
            }
        }
        Ok(Signature { props })
    }

    /// Convenience constructor for `p1 .. pn`.
    pub fn numbered(n: usize) -> Self {
        Signature::new((1..=n).map(|i| format!("p{i}")).collect()).unwrap()
    }

    pub fn empty() -> Self {
        Signature { props: Vec::new() }
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn index_of(&self, prop: &str) -> Option<usize> {
        self.props.iter().position(|p| p == prop)
    }

    pub fn contains(&self, prop: &str) -> bool {
        self.index_of(prop).is_some()
    }
}

/// A finite Kripke model with a distinguished world.
///
/// Immutable after construction; every operation in this crate is a pure
/// function over such values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedModel {
    signature: Signature,
    worlds: Vec<WorldId>,
    edges: BTreeSet<(WorldId, WorldId)>,
    valuation: BTreeMap<String, BTreeSet<WorldId>>,
    point: WorldId,
    // Derived, kept for fast traversal.
    successors: BTreeMap<WorldId, Vec<WorldId>>,
    labels: BTreeMap<WorldId, u64>,
}

impl PointedModel {
    pub fn new(
        signature: Signature,
        worlds: Vec<WorldId>,
        edges: Vec<(WorldId, WorldId)>,
        valuation: BTreeMap<String, BTreeSet<WorldId>>,
        point: WorldId,
    ) -> Result<Self, ModelError> {
        if worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let mut world_set = BTreeSet::new();
        for w in &worlds {
            if w.as_str().is_empty() {
                return Err(ModelError::EmptyWorldId);
            }
            if !world_set.insert(w.clone()) {
                return Err(ModelError::DuplicateWorld(w.as_str().to_string()));
            }
        }
        // The world list is a set; keep it sorted so equal models compare
        // equal whatever order a document listed them in.
        let mut worlds = worlds;
        worlds.sort();
        if !world_set.contains(&point) {
            return Err(ModelError::UnknownWorld(
                point.as_str().to_string(),
                "point",
            ));
        }
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            for end in [&a, &b] {
                if !world_set.contains(end) {
                    return Err(ModelError::UnknownWorld(end.as_str().to_string(), "edge"));
                }
            }
            if !edge_set.insert((a.clone(), b.clone())) {
                return Err(ModelError::DuplicateEdge(
                    a.as_str().to_string(),
                    b.as_str().to_string(),
                ));
            }
        }
        for (prop, set) in &valuation {
            if !signature.contains(prop) {
                return Err(ModelError::UnknownProp(prop.clone()));
            }
            for w in set {
                if !world_set.contains(w) {
                    return Err(ModelError::UnknownWorld(
                        w.as_str().to_string(),
                        "valuation",
                    ));
                }
            }
        }

        let mut successors: BTreeMap<WorldId, Vec<WorldId>> =
            worlds.iter().map(|w| (w.clone(), Vec::new())).collect();
        for (a, b) in &edge_set {
            successors.get_mut(a).unwrap().push(b.clone());
        }
        let mut labels = BTreeMap::new();
        for w in &worlds {
            let mut bits = 0u64;
            for (i, p) in signature.props().iter().enumerate() {
                if valuation.get(p).is_some_and(|s| s.contains(w)) {
                    bits |= 1 << i;
                }
            }
            labels.insert(w.clone(), bits);
        }

        Ok(PointedModel {
            signature,
            worlds,
            edges: edge_set,
            valuation,
            point,
            successors,
            labels,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn edges(&self) -> &BTreeSet<(WorldId, WorldId)> {
        &self.edges
    }

    pub fn has_edge(&self, a: &WorldId, b: &WorldId) -> bool {
        self.edges.contains(&(a.clone(), b.clone()))
    }

    pub fn valuation(&self) -> &BTreeMap<String, BTreeSet<WorldId>> {
        &self.valuation
    }

    pub fn point(&self) -> &WorldId {
        &self.point
    }

    pub fn successors(&self, w: &WorldId) -> &[WorldId] {
        self.successors.get(w).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Valuation of one world as a bitmask in signature order.
    pub fn label_bits(&self, w: &WorldId) -> u64 {
        *self.labels.get(w).expect("world of this model")
    }

    pub fn satisfies_prop(&self, w: &WorldId, prop: &str) -> bool {
        self.valuation.get(prop).is_some_and(|s| s.contains(w))
    }

    /// The same model with a different distinguished world.
    pub fn repoint(&self, w: &WorldId) -> Result<Self, ModelError> {
        if !self.successors.contains_key(w) {
            return Err(ModelError::UnknownWorld(w.as_str().to_string(), "repoint"));
        }
        let mut m = self.clone();
        m.point = w.clone();
        Ok(m)
    }

    /// Shortest directed distance from the point to every world;
    /// unreachable worlds are absent from the map.
    pub fn distances_from_point(&self) -> BTreeMap<WorldId, usize> {
        let mut dist = BTreeMap::new();
        dist.insert(self.point.clone(), 0usize);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(self.point.clone());
        while let Some(w) = queue.pop_front() {
            let d = dist[&w];
            for s in self.successors(&w) {
                if !dist.contains_key(s) {
                    dist.insert(s.clone(), d + 1);
                    queue.push_back(s.clone());
                }
            }
        }
        dist
    }
}

/// A pointed model certified tree-shaped: a unique directed path leads from
/// the root to every world.
#[derive(Clone, Debug)]
pub struct TreeModel {
    base: PointedModel,
    parent: BTreeMap<WorldId, WorldId>,
    depth: BTreeMap<WorldId, usize>,
    height: usize,
}

impl TreeModel {
    pub fn base(&self) -> &PointedModel {
        &self.base
    }

    pub fn into_base(self) -> PointedModel {
        self.base
    }

    pub fn root(&self) -> &WorldId {
        self.base.point()
    }

    pub fn parent(&self, w: &WorldId) -> Option<&WorldId> {
        self.parent.get(w)
    }

    pub fn parent_map(&self) -> &BTreeMap<WorldId, WorldId> {
        &self.parent
    }

    pub fn children(&self, w: &WorldId) -> &[WorldId] {
        self.base.successors(w)
    }

    pub fn depth(&self, w: &WorldId) -> usize {
        self.depth[w]
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn world_count(&self) -> usize {
        self.base.world_count()
    }

    /// Height of the subtree rooted at `w`.
    pub fn subtree_height(&self, w: &WorldId) -> usize {
        self.children(w)
            .iter()
            .map(|c| self.subtree_height(c) + 1)
            .max()
            .unwrap_or(0)
    }

    /// The subtree rooted at `w` as a standalone tree model.
    pub fn subtree(&self, w: &WorldId) -> TreeModel {
        let mut keep = Vec::new();
        let mut stack = vec![w.clone()];
        while let Some(v) = stack.pop() {
            keep.push(v.clone());
            for c in self.children(&v) {
                stack.push(c.clone());
            }
        }
        let keep_set: BTreeSet<_> = keep.iter().cloned().collect();
        let edges = self
            .base
            .edges()
            .iter()
            .filter(|(a, b)| keep_set.contains(a) && keep_set.contains(b))
            .cloned()
            .collect();
        let valuation = self
            .base
            .valuation()
            .iter()
            .map(|(p, s)| {
                (
                    p.clone(),
                    s.iter()
                        .filter(|w| keep_set.contains(*w))
                        .cloned()
                        .collect(),
                )
            })
            .collect();
        let base = PointedModel::new(
            self.base.signature().clone(),
            keep,
            edges,
            valuation,
            w.clone(),
        )
        .expect("subtree of a valid tree is valid");
        as_tree(&base).expect("subtree of a tree is a tree")
    }
}

/// Certify that a pointed model is tree-shaped with the point as root.
pub fn as_tree(m: &PointedModel) -> Result<TreeModel, ModelError> {
    let mut indeg: BTreeMap<&WorldId, usize> = m.worlds().iter().map(|w| (w, 0usize)).collect();
    for (_, b) in m.edges() {
        *indeg.get_mut(b).unwrap() += 1;
    }
    if indeg[m.point()] != 0 {
        return Err(ModelError::NotTree(format!(
            "point {:?} has an incoming edge",
            m.point().as_str()
        )));
    }
    for w in m.worlds() {
        if w != m.point() && indeg[w] != 1 {
            return Err(ModelError::NotTree(format!(
                "world {:?} has in-degree {}",
                w.as_str(),
                indeg[w]
            )));
        }
    }
    // In-degrees are right; reachability from the point now forces a unique
    // path to every world.
    let mut parent = BTreeMap::new();
    let mut depth = BTreeMap::new();
    depth.insert(m.point().clone(), 0usize);
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(m.point().clone());
    let mut height = 0;
    while let Some(w) = queue.pop_front() {
        let d = depth[&w];
        height = height.max(d);
        for s in m.successors(&w) {
            if depth.contains_key(s) {
                return Err(ModelError::NotTree(format!(
                    "world {:?} reachable twice",
                    s.as_str()
                )));
            }
            parent.insert(s.clone(), w.clone());
            depth.insert(s.clone(), d + 1);
            queue.push_back(s.clone());
        }
    }
    if depth.len() != m.world_count() {
        let missing = m.worlds().iter().find(|w| !depth.contains_key(*w)).unwrap();
        return Err(ModelError::NotTree(format!(
            "world {:?} unreachable from the point",
            missing.as_str()
        )));
    }
    Ok(TreeModel {
        base: m.clone(),
        parent,
        depth,
        height,
    })
}

/// Canonical code of a tree: equal strings exactly for isomorphic pointed
/// trees. Bottom-up AHU coding; a node's code is its valuation bitmask
/// followed by the sorted codes of its children. Keys ordered
/// lexicographically serve as the fixed linear order on trees used
/// throughout minimisation, pruning and synthesis.
pub fn canonical_key(t: &TreeModel) -> String {
    fn code(t: &TreeModel, w: &WorldId) -> String {
        let mut child_codes: Vec<String> = t.children(w).iter().map(|c| code(t, c)).collect();
        child_codes.sort();
        let mut s = String::from("(");
        s.push_str(&format!("{:x}", t.base().label_bits(w)));
        for c in child_codes {
            s.push_str(&c);
        }
        s.push(')');
        s
    }
    code(t, t.root())
}

// ---------------------------------------------------------------------------
// JSON model-file format.
// ---------------------------------------------------------------------------

fn field<'a>(obj: &'a Map<String, Value>, key: &'static str) -> Result<&'a Value, ModelError> {
    obj.get(key)
        .ok_or_else(|| ModelError::Schema(format!("missing key {key:?}")))
}

fn string_array(v: &Value, what: &str) -> Result<Vec<String>, ModelError> {
    let arr = v
        .as_array()
        .ok_or_else(|| ModelError::Schema(format!("{what} must be an array")))?;
    arr.iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| ModelError::Schema(format!("{what} entries must be strings")))
        })
        .collect()
}

/// Decode a model file. Unknown keys are rejected; every referenced world
/// must be declared.
pub fn load_model(text: &str) -> Result<PointedModel, ModelError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ModelError::Schema("top level must be an object".into()))?;
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "signature" | "worlds" | "edges" | "valuation" | "point"
        ) {
            return Err(ModelError::Schema(format!("unknown key {key:?}")));
        }
    }
    let signature = Signature::new(string_array(field(obj, "signature")?, "signature")?)?;
    let worlds: Vec<WorldId> = string_array(field(obj, "worlds")?, "worlds")?
        .into_iter()
        .map(WorldId::from)
        .collect();
    let edges_val = field(obj, "edges")?
        .as_array()
        .ok_or_else(|| ModelError::Schema("edges must be an array".into()))?;
    let mut edges = Vec::new();
    for e in edges_val {
        let pair = string_array(e, "edge")?;
        if pair.len() != 2 {
            return Err(ModelError::Schema("each edge must be a pair".into()));
        }
        edges.push((
            WorldId::from(pair[0].clone()),
            WorldId::from(pair[1].clone()),
        ));
    }
    let val_obj = field(obj, "valuation")?
        .as_object()
        .ok_or_else(|| ModelError::Schema("valuation must be an object".into()))?;
    let mut valuation = BTreeMap::new();
    for (prop, ws) in val_obj {
        let set: BTreeSet<WorldId> = string_array(ws, "valuation entry")?
            .into_iter()
            .map(WorldId::from)
            .collect();
        valuation.insert(prop.clone(), set);
    }
    let point = WorldId::from(
        field(obj, "point")?
            .as_str()
            .ok_or_else(|| ModelError::Schema("point must be a string".into()))?,
    );
    PointedModel::new(signature, worlds, edges, valuation, point)
}

/// Canonical JSON encoding: object keys, worlds, edges and valuation sets all
/// sorted. `load_model(dump_model(m))` is `m` with identical ids, and a second
/// dump is byte-identical.
pub fn dump_model(m: &PointedModel) -> String {
    serde_json::to_string(&model_to_value(m)).expect("serializable")
}

/// The model document as a JSON value (sorted keys via `serde_json`'s BTree map).
pub fn model_to_value(m: &PointedModel) -> Value {
    let mut obj = Map::new();
    obj.insert(
        "signature".into(),
        Value::Array(
            m.signature()
                .props()
                .iter()
                .map(|p| Value::String(p.clone()))
                .collect(),
        ),
    );
    let mut worlds: Vec<&WorldId> = m.worlds().iter().collect();
    worlds.sort();
    obj.insert(
        "worlds".into(),
        Value::Array(
            worlds
                .iter()
                .map(|w| Value::String(w.as_str().to_string()))
                .collect(),
        ),
    );
    obj.insert(
        "edges".into(),
        Value::Array(
            m.edges()
                .iter()
                .map(|(a, b)| {
                    Value::Array(vec![
                        Value::String(a.as_str().to_string()),
                        Value::String(b.as_str().to_string()),
                    ])
                })
                .collect(),
        ),
    );
    let mut val_obj = Map::new();
    for p in m.signature().props() {
        let set = m.valuation().get(p).cloned().unwrap_or_default();
        val_obj.insert(
            p.clone(),
            Value::Array(
                set.iter()
                    .map(|w| Value::String(w.as_str().to_string()))
                    .collect(),
            ),
        );
    }
    obj.insert("valuation".into(), Value::Object(val_obj));
    obj.insert(
        "point".into(),
        Value::String(m.point().as_str().to_string()),
    );
    Value::Object(obj)
}
