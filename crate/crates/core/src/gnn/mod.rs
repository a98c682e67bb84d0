//! Aggregate-combine networks over exact rationals: evaluation with full
//! layer traces, the multiset order behind monotonicity, a syntactic
//! positive-weight certificate, graph/Kripke conversion and JSON formats.
//!
//! A layer updates every node label to
//! `ReLU(b + x·A + agg({neighbour labels})·C)`, optionally clamped above by a
//! per-layer bound; aggregation of an empty neighbourhood is the zero vector.
//! All arithmetic is exact, so evaluations are bit-reproducible.

mod compile;

pub use compile::{compile_formula_to_gnn, compile_formula_with_signature};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::kripke::{PointedModel, Signature, WorldId};

pub type Rational = BigRational;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("graph or network file is not valid JSON: {0}")]
    Json(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("accessibility is not symmetric: edge ({0:?}, {1:?}) has no converse")]
    AsymmetricRelation(String, String),
    #[error("self-loop at {0:?} is not allowed in a simple graph")]
    SelfLoop(String),
    #[error("formula is outside the supported fragment: {0}")]
    FragmentViolation(String),
}

/// Opaque identifier of a graph node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// Finite undirected simple graph with binary feature vectors of a fixed
/// dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureGraph {
    dim: usize,
    nodes: Vec<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
    features: BTreeMap<NodeId, Vec<bool>>,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

impl FeatureGraph {
    pub fn new(
        dim: usize,
        nodes: Vec<NodeId>,
        edges: Vec<(NodeId, NodeId)>,
        features: BTreeMap<NodeId, Vec<bool>>,
    ) -> Result<Self, GnnError> {
        let node_set: BTreeSet<NodeId> = nodes.iter().cloned().collect();
        if node_set.len() != nodes.len() {
            return Err(GnnError::Schema("duplicate node id".into()));
        }
        if nodes.is_empty() {
            return Err(GnnError::Schema("graph has no nodes".into()));
        }
        let mut normalized = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GnnError::SelfLoop(a.as_str().to_string()));
            }
            for end in [&a, &b] {
                if !node_set.contains(end) {
                    return Err(GnnError::UnknownNode(end.as_str().to_string()));
                }
            }
            let pair = if a <= b { (a, b) } else { (b, a) };
            if !normalized.insert(pair.clone()) {
                return Err(GnnError::Schema(format!(
                    "duplicate edge ({:?}, {:?})",
                    pair.0.as_str(),
                    pair.1.as_str()
                )));
            }
        }
        for n in &nodes {
            let Some(vec) = features.get(n) else {
                return Err(GnnError::Schema(format!(
                    "missing feature vector for {:?}",
                    n.as_str()
                )));
            };
            if vec.len() != dim {
                return Err(GnnError::DimensionMismatch(format!(
                    "feature vector of {:?} has length {}, expected {dim}",
                    n.as_str(),
                    vec.len()
                )));
            }
        }
        if features.len() != nodes.len() {
            return Err(GnnError::Schema("feature for unknown node".into()));
        }
        // The node list is a set; keep it sorted so equal graphs compare
        // equal whatever order a document listed them in.
        let mut nodes = nodes;
        nodes.sort();
        let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> =
            nodes.iter().map(|n| (n.clone(), Vec::new())).collect();
        for (a, b) in &normalized {
            adjacency.get_mut(a).unwrap().push(b.clone());
            adjacency.get_mut(b).unwrap().push(a.clone());
        }
        for list in adjacency.values_mut() {
            list.sort();
        }
        Ok(FeatureGraph {
            dim,
            nodes,
            edges: normalized,
            features,
            adjacency,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn features(&self, n: &NodeId) -> &[bool] {
        &self.features[n]
    }

    pub fn neighbours(&self, n: &NodeId) -> &[NodeId] {
        self.adjacency.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.adjacency.contains_key(n)
    }
}

/// Neighbourhood aggregation function of a layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Sum,
    Max,
    /// Per coordinate, the sum of the `k` largest values across the multiset
    /// (all of them when fewer than `k` are present).
    MaxKSum(usize),
    Mean,
}

impl Aggregation {
    pub fn is_monotone(&self) -> bool {
        !matches!(self, Aggregation::Mean)
    }

    fn apply(&self, vectors: &[&Vec<Rational>], dim: usize) -> Vec<Rational> {
        if vectors.is_empty() {
            return vec![Rational::zero(); dim];
        }
        match self {
            Aggregation::Sum => {
                let mut out = vec![Rational::zero(); dim];
                for v in vectors {
                    for (o, x) in out.iter_mut().zip(v.iter()) {
                        *o += x;
                    }
                }
                out
            }
            Aggregation::Max => (0..dim)
                .map(|i| {
                    vectors
                        .iter()
                        .map(|v| v[i].clone())
                        .max()
                        .expect("non-empty")
                })
                .collect(),
            Aggregation::MaxKSum(k) => (0..dim)
                .map(|i| {
                    let mut column: Vec<Rational> = vectors.iter().map(|v| v[i].clone()).collect();
                    column.sort();
                    column.reverse();
                    column
                        .into_iter()
                        .take(*k)
                        .fold(Rational::zero(), |acc, x| acc + x)
                })
                .collect(),
            Aggregation::Mean => {
                let count = BigRational::from_integer(BigInt::from(vectors.len()));
                let mut out = vec![Rational::zero(); dim];
                for v in vectors {
                    for (o, x) in out.iter_mut().zip(v.iter()) {
                        *o += x;
                    }
                }
                out.into_iter().map(|x| x / count.clone()).collect()
            }
        }
    }
}

/// One aggregate-combine layer: `ReLU(b + x·A + agg(neighbours)·C)`, with an
/// optional upper clamp applied after the ReLU. `a` and `c` are
/// `in_dim x out_dim`, row per input coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnnLayer {
    pub agg: Aggregation,
    pub a: Vec<Vec<Rational>>,
    pub c: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub clip: Option<Rational>,
}

impl GnnLayer {
    pub fn in_dim(&self) -> usize {
        self.a.len()
    }

    pub fn out_dim(&self) -> usize {
        self.b.len()
    }
}

/// Threshold classifier: accept when every coordinate reaches `threshold`
/// (strictly, when `strict` is set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classifier {
    pub threshold: Rational,
    pub strict: bool,
}

impl Classifier {
    pub fn accepts(&self, vector: &[Rational]) -> bool {
        vector.iter().all(|x| {
            if self.strict {
                *x > self.threshold
            } else {
                *x >= self.threshold
            }
        })
    }
}

/// A sequence of aggregate-combine layers with a threshold classifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnnModel {
    input_dim: usize,
    layers: Vec<GnnLayer>,
    classifier: Classifier,
}

impl GnnModel {
    pub fn new(
        input_dim: usize,
        layers: Vec<GnnLayer>,
        classifier: Classifier,
    ) -> Result<Self, GnnError> {
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.a.len() != dim || layer.c.len() != dim {
                return Err(GnnError::DimensionMismatch(format!(
                    "layer {i} expects input dimension {}, got {dim}",
                    layer.a.len()
                )));
            }
            let out = layer.out_dim();
            for (name, matrix) in [('A', &layer.a), ('C', &layer.c)] {
                for row in matrix.iter() {
                    if row.len() != out {
                        return Err(GnnError::DimensionMismatch(format!(
                            "layer {i} matrix {name} row length {} differs from output dimension {out}",
                            row.len()
                        )));
                    }
                }
            }
            if let Aggregation::MaxKSum(k) = layer.agg {
                if k == 0 {
                    return Err(GnnError::Schema(
                        "max-k-sum aggregation needs k >= 1".into(),
                    ));
                }
            }
            dim = out;
        }
        Ok(GnnModel {
            input_dim,
            layers,
            classifier,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[GnnLayer] {
        &self.layers
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map(GnnLayer::out_dim)
            .unwrap_or(self.input_dim)
    }
}

/// Node vectors after every layer; entry 0 holds the input features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerTrace {
    pub per_layer: Vec<BTreeMap<NodeId, Vec<Rational>>>,
}

impl LayerTrace {
    pub fn final_vector(&self, node: &NodeId) -> &[Rational] {
        &self.per_layer.last().expect("at least the input layer")[node]
    }
}

fn relu(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

/// Run the network on a pointed graph. Returns the classifier verdict at the
/// distinguished node together with the full trace.
pub fn evaluate_gnn(
    n: &GnnModel,
    g: &FeatureGraph,
    node: &NodeId,
) -> Result<(bool, LayerTrace), GnnError> {
    if g.dim() != n.input_dim() {
        return Err(GnnError::DimensionMismatch(format!(
            "graph dimension {} but network expects {}",
            g.dim(),
            n.input_dim()
        )));
    }
    if !g.contains(node) {
        return Err(GnnError::UnknownNode(node.as_str().to_string()));
    }
    let mut current: BTreeMap<NodeId, Vec<Rational>> = g
        .nodes()
        .iter()
        .map(|v| {
            (
                v.clone(),
                g.features(v)
                    .iter()
                    .map(|b| {
                        if *b {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    let mut trace = vec![current.clone()];
    for layer in n.layers() {
        let in_dim = layer.in_dim();
        let out_dim = layer.out_dim();
        let mut next: BTreeMap<NodeId, Vec<Rational>> = BTreeMap::new();
        for v in g.nodes() {
            let own = &current[v];
            let neighbour_vectors: Vec<&Vec<Rational>> =
                g.neighbours(v).iter().map(|u| &current[u]).collect();
            let aggregated = layer.agg.apply(&neighbour_vectors, in_dim);
            let mut out = Vec::with_capacity(out_dim);
            for j in 0..out_dim {
                let mut acc = layer.b[j].clone();
                for i in 0..in_dim {
                    if !own[i].is_zero() {
                        acc += &own[i] * &layer.a[i][j];
                    }
                    if !aggregated[i].is_zero() {
                        acc += &aggregated[i] * &layer.c[i][j];
                    }
                }
                let mut y = relu(acc);
                if let Some(bound) = &layer.clip {
                    if y > *bound {
                        y = bound.clone();
                    }
                }
                out.push(y);
            }
            next.insert(v.clone(), out);
        }
        trace.push(next.clone());
        current = next;
    }
    let verdict = n.classifier().accepts(&current[node]);
    Ok((verdict, LayerTrace { per_layer: trace }))
}

/// Multiset order on equal-dimension rational vectors: `m1 <= m2` when some
/// injection maps every element to one that dominates it coordinatewise.
/// Decided by maximum bipartite matching over the dominance relation.
pub fn multiset_leq(m1: &[Vec<Rational>], m2: &[Vec<Rational>]) -> Result<bool, GnnError> {
    let dim = m1.first().or_else(|| m2.first()).map(Vec::len).unwrap_or(0);
    if m1.iter().chain(m2.iter()).any(|v| v.len() != dim) {
        return Err(GnnError::DimensionMismatch(
            "multiset elements must share one dimension".into(),
        ));
    }
    if m1.len() > m2.len() {
        return Ok(false);
    }
    let adj: Vec<Vec<usize>> = m1
        .iter()
        .map(|x| {
            m2.iter()
                .enumerate()
                .filter(|(_, y)| x.iter().zip(y.iter()).all(|(a, b)| a <= b))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none() || augment(owner[j].unwrap(), adj, owner, seen) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; m2.len()];
    for i in 0..m1.len() {
        let mut seen = vec![false; m2.len()];
        if !augment(i, &adj, &mut owner, &mut seen) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Reasons a network fails the positive-weight certificate.
#[derive(Clone, Debug)]
pub enum CertificateIssue {
    NegativeWeight {
        layer: usize,
        matrix: char,
        row: usize,
        col: usize,
        value: Rational,
    },
    MeanAggregation {
        layer: usize,
    },
}

impl fmt::Display for CertificateIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateIssue::NegativeWeight {
                layer,
                matrix,
                row,
                col,
                value,
            } => write!(
                f,
                "layer {layer}: matrix {matrix} entry ({row}, {col}) is negative ({})",
                rational_to_string(value)
            ),
            CertificateIssue::MeanAggregation { layer } => write!(
                f,
                "layer {layer}: MEAN aggregation is not monotone in the multiset order: \
                 {{1}} <= {{1, 0}} but MEAN({{1}}) = 1 > 1/2 = MEAN({{1, 0}})"
            ),
        }
    }
}

/// Syntactic monotonicity certificate.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub certified: bool,
    pub issues: Vec<CertificateIssue>,
}

/// Check that every layer has entrywise non-negative weight matrices and a
/// monotone aggregation (SUM, MAX or max-k-sum). This is a sufficient
/// syntactic condition for monotonicity, not a complete semantic test.
pub fn positive_weight_certificate(n: &GnnModel) -> Certificate {
    let mut issues = Vec::new();
    for (idx, layer) in n.layers().iter().enumerate() {
        if !layer.agg.is_monotone() {
            issues.push(CertificateIssue::MeanAggregation { layer: idx });
        }
        for (name, matrix) in [('A', &layer.a), ('C', &layer.c)] {
            for (r, row) in matrix.iter().enumerate() {
                for (c, value) in row.iter().enumerate() {
                    if value.is_negative() {
                        issues.push(CertificateIssue::NegativeWeight {
                            layer: idx,
                            matrix: name,
                            row: r,
                            col: c,
                            value: value.clone(),
                        });
                    }
                }
            }
        }
    }
    Certificate {
        certified: issues.is_empty(),
        issues,
    }
}

// ---------------------------------------------------------------------------
// Graph / Kripke conversions.
// ---------------------------------------------------------------------------

/// View a pointed graph as a pointed Kripke model over `p1..pd`: every
/// undirected edge induces accessibility in both directions, feature bit `i`
/// decides proposition `p(i+1)`.
pub fn graph_to_kripke(g: &FeatureGraph, node: &NodeId) -> Result<PointedModel, GnnError> {
    if !g.contains(node) {
        return Err(GnnError::UnknownNode(node.as_str().to_string()));
    }
    let signature = Signature::numbered(g.dim());
    let worlds: Vec<WorldId> = g.nodes().iter().map(|n| WorldId::new(n.as_str())).collect();
    let mut edges = Vec::new();
    for (a, b) in g.edges() {
        edges.push((WorldId::new(a.as_str()), WorldId::new(b.as_str())));
        edges.push((WorldId::new(b.as_str()), WorldId::new(a.as_str())));
    }
    let mut valuation: BTreeMap<String, BTreeSet<WorldId>> = BTreeMap::new();
    for n in g.nodes() {
        for (i, bit) in g.features(n).iter().enumerate() {
            if *bit {
                valuation
                    .entry(signature.props()[i].clone())
                    .or_default()
                    .insert(WorldId::new(n.as_str()));
            }
        }
    }
    PointedModel::new(
        signature,
        worlds,
        edges,
        valuation,
        WorldId::new(node.as_str()),
    )
    .map_err(|e| GnnError::Schema(e.to_string()))
}

/// Inverse of [`graph_to_kripke`]: requires a symmetric, irreflexive
/// accessibility relation.
pub fn kripke_to_graph(m: &PointedModel) -> Result<(FeatureGraph, NodeId), GnnError> {
    for (a, b) in m.edges() {
        if a == b {
            return Err(GnnError::SelfLoop(a.as_str().to_string()));
        }
        if !m.has_edge(b, a) {
            return Err(GnnError::AsymmetricRelation(
                a.as_str().to_string(),
                b.as_str().to_string(),
            ));
        }
    }
    let dim = m.signature().len();
    let nodes: Vec<NodeId> = m.worlds().iter().map(|w| NodeId::new(w.as_str())).collect();
    let mut edges = Vec::new();
    for (a, b) in m.edges() {
        if a < b {
            edges.push((NodeId::new(a.as_str()), NodeId::new(b.as_str())));
        }
    }
    let features: BTreeMap<NodeId, Vec<bool>> = m
        .worlds()
        .iter()
        .map(|w| {
            let bits = m.label_bits(w);
            (
                NodeId::new(w.as_str()),
                (0..dim).map(|i| bits & (1 << i) != 0).collect(),
            )
        })
        .collect();
    let graph = FeatureGraph::new(dim, nodes, edges, features)?;
    Ok((graph, NodeId::new(m.point().as_str())))
}

// ---------------------------------------------------------------------------
// JSON formats.
// ---------------------------------------------------------------------------

pub fn parse_rational(text: &str) -> Result<Rational, GnnError> {
    let parse_int = |s: &str| {
        s.trim()
            .parse::<BigInt>()
            .map_err(|_| GnnError::Schema(format!("bad rational {text:?}")))
    };
    match text.split_once('/') {
        Some((num, den)) => {
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(GnnError::Schema(format!("zero denominator in {text:?}")));
            }
            Ok(Rational::new(parse_int(num)?, den))
        }
        None => Ok(Rational::from_integer(parse_int(text)?)),
    }
}

pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rational_from_value(v: &Value) -> Result<Rational, GnnError> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(|i| Rational::from_integer(BigInt::from(i)))
            .ok_or_else(|| {
                GnnError::Schema(format!(
                    "number {n} is not an integer; use a \"p/q\" string for fractions"
                ))
            }),
        Value::String(s) => parse_rational(s),
        _ => Err(GnnError::Schema("expected a rational".into())),
    }
}

fn matrix_from_value(v: &Value, what: &str) -> Result<Vec<Vec<Rational>>, GnnError> {
    let rows = v
        .as_array()
        .ok_or_else(|| GnnError::Schema(format!("{what} must be an array of rows")))?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| GnnError::Schema(format!("{what} rows must be arrays")))?
                .iter()
                .map(rational_from_value)
                .collect()
        })
        .collect()
}

fn agg_from_value(v: &Value) -> Result<Aggregation, GnnError> {
    match v {
        Value::String(s) => match s.as_str() {
            "SUM" => Ok(Aggregation::Sum),
            "MAX" => Ok(Aggregation::Max),
            "MEAN" => Ok(Aggregation::Mean),
            other => Err(GnnError::Schema(format!("unknown aggregation {other:?}"))),
        },
        Value::Object(obj) => {
            if obj.len() == 1 {
                if let Some(k) = obj.get("MAXKSUM") {
                    let k = k.as_u64().ok_or_else(|| {
                        GnnError::Schema("MAXKSUM parameter must be an integer".into())
                    })?;
                    if k == 0 {
                        return Err(GnnError::Schema("MAXKSUM needs k >= 1".into()));
                    }
                    return Ok(Aggregation::MaxKSum(k as usize));
                }
            }
            Err(GnnError::Schema("unknown aggregation object".into()))
        }
        _ => Err(GnnError::Schema("aggregation must be a string".into())),
    }
}

fn agg_to_value(agg: &Aggregation) -> Value {
    match agg {
        Aggregation::Sum => Value::String("SUM".into()),
        Aggregation::Max => Value::String("MAX".into()),
        Aggregation::Mean => Value::String("MEAN".into()),
        Aggregation::MaxKSum(k) => {
            let mut obj = Map::new();
            obj.insert("MAXKSUM".into(), Value::Number((*k as u64).into()));
            Value::Object(obj)
        }
    }
}

/// Decode a network file. Rationals are integers or `"p/q"` strings; the
/// optional per-layer `"clip"` bounds activations from above.
pub fn load_gnn(text: &str) -> Result<GnnModel, GnnError> {
    let value: Value = serde_json::from_str(text).map_err(|e| GnnError::Json(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| GnnError::Schema("top level must be an object".into()))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "input_dim" | "layers" | "classifier") {
            return Err(GnnError::Schema(format!("unknown key {key:?}")));
        }
    }
    let input_dim = obj
        .get("input_dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| GnnError::Schema("input_dim must be an integer".into()))?
        as usize;
    let layers_val = obj
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| GnnError::Schema("layers must be an array".into()))?;
    let mut layers = Vec::new();
    for layer in layers_val {
        let lobj = layer
            .as_object()
            .ok_or_else(|| GnnError::Schema("each layer must be an object".into()))?;
        for key in lobj.keys() {
            if !matches!(key.as_str(), "agg" | "A" | "C" | "b" | "clip") {
                return Err(GnnError::Schema(format!("unknown layer key {key:?}")));
            }
        }
        let get = |k: &str| {
            lobj.get(k)
                .ok_or_else(|| GnnError::Schema(format!("layer missing key {k:?}")))
        };
        let b = get("b")?
            .as_array()
            .ok_or_else(|| GnnError::Schema("b must be an array".into()))?
            .iter()
            .map(rational_from_value)
            .collect::<Result<Vec<_>, _>>()?;
        layers.push(GnnLayer {
            agg: agg_from_value(get("agg")?)?,
            a: matrix_from_value(get("A")?, "A")?,
            c: matrix_from_value(get("C")?, "C")?,
            b,
            clip: lobj.get("clip").map(rational_from_value).transpose()?,
        });
    }
    let cobj = obj
        .get("classifier")
        .and_then(Value::as_object)
        .ok_or_else(|| GnnError::Schema("classifier must be an object".into()))?;
    for key in cobj.keys() {
        if !matches!(key.as_str(), "threshold" | "strict") {
            return Err(GnnError::Schema(format!("unknown classifier key {key:?}")));
        }
    }
    let classifier = Classifier {
        threshold: rational_from_value(
            cobj.get("threshold")
                .ok_or_else(|| GnnError::Schema("classifier missing threshold".into()))?,
        )?,
        strict: cobj
            .get("strict")
            .and_then(Value::as_bool)
            .ok_or_else(|| GnnError::Schema("classifier strict must be a bool".into()))?,
    };
    GnnModel::new(input_dim, layers, classifier)
}

pub fn gnn_to_value(n: &GnnModel) -> Value {
    let mut obj = Map::new();
    obj.insert(
        "input_dim".into(),
        Value::Number((n.input_dim() as u64).into()),
    );
    let layers: Vec<Value> = n
        .layers()
        .iter()
        .map(|layer| {
            let mut lobj = Map::new();
            lobj.insert("agg".into(), agg_to_value(&layer.agg));
            let matrix = |m: &Vec<Vec<Rational>>| {
                Value::Array(
                    m.iter()
                        .map(|row| {
                            Value::Array(
                                row.iter()
                                    .map(|x| Value::String(rational_to_string(x)))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            };
            lobj.insert("A".into(), matrix(&layer.a));
            lobj.insert("C".into(), matrix(&layer.c));
            lobj.insert(
                "b".into(),
                Value::Array(
                    layer
                        .b
                        .iter()
                        .map(|x| Value::String(rational_to_string(x)))
                        .collect(),
                ),
            );
            if let Some(clip) = &layer.clip {
                lobj.insert("clip".into(), Value::String(rational_to_string(clip)));
            }
            Value::Object(lobj)
        })
        .collect();
    obj.insert("layers".into(), Value::Array(layers));
    let mut cobj = Map::new();
    cobj.insert(
        "threshold".into(),
        Value::String(rational_to_string(&n.classifier().threshold)),
    );
    cobj.insert("strict".into(), Value::Bool(n.classifier().strict));
    obj.insert("classifier".into(), Value::Object(cobj));
    Value::Object(obj)
}

pub fn dump_gnn(n: &GnnModel) -> String {
    serde_json::to_string(&gnn_to_value(n)).expect("serializable")
}

/// Decode a graph file: `{"dim":..,"nodes":[..],"edges":[[a,b],..],"features":{node:[0/1,..]}}`.
pub fn load_graph(text: &str) -> Result<FeatureGraph, GnnError> {
    let value: Value = serde_json::from_str(text).map_err(|e| GnnError::Json(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| GnnError::Schema("top level must be an object".into()))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "dim" | "nodes" | "edges" | "features") {
            return Err(GnnError::Schema(format!("unknown key {key:?}")));
        }
    }
    let dim = obj
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| GnnError::Schema("dim must be an integer".into()))? as usize;
    let nodes: Vec<NodeId> = obj
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| GnnError::Schema("nodes must be an array".into()))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(NodeId::from)
                .ok_or_else(|| GnnError::Schema("node ids must be strings".into()))
        })
        .collect::<Result<_, _>>()?;
    let mut edges = Vec::new();
    for e in obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| GnnError::Schema("edges must be an array".into()))?
    {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| GnnError::Schema("each edge must be a pair".into()))?;
        let mut ids = pair.iter().map(|v| {
            v.as_str()
                .map(NodeId::from)
                .ok_or_else(|| GnnError::Schema("edge endpoints must be strings".into()))
        });
        edges.push((ids.next().unwrap()?, ids.next().unwrap()?));
    }
    let mut features = BTreeMap::new();
    for (node, bits) in obj
        .get("features")
        .and_then(Value::as_object)
        .ok_or_else(|| GnnError::Schema("features must be an object".into()))?
    {
        let vec = bits
            .as_array()
            .ok_or_else(|| GnnError::Schema("feature vectors must be arrays".into()))?
            .iter()
            .map(|v| match v.as_u64() {
                Some(0) => Ok(false),
                Some(1) => Ok(true),
                _ => Err(GnnError::Schema("feature entries must be 0 or 1".into())),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        features.insert(NodeId::new(node.clone()), vec);
    }
    FeatureGraph::new(dim, nodes, edges, features)
}

pub fn graph_to_value(g: &FeatureGraph) -> Value {
    let mut obj = Map::new();
    obj.insert("dim".into(), Value::Number((g.dim() as u64).into()));
    let mut nodes: Vec<&NodeId> = g.nodes().iter().collect();
    nodes.sort();
    obj.insert(
        "nodes".into(),
        Value::Array(
            nodes
                .iter()
                .map(|n| Value::String(n.as_str().to_string()))
                .collect(),
        ),
    );
    obj.insert(
        "edges".into(),
        Value::Array(
            g.edges()
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
    let mut fobj = Map::new();
    for n in nodes {
        fobj.insert(
            n.as_str().to_string(),
            Value::Array(
                g.features(n)
                    .iter()
                    .map(|b| Value::Number(u64::from(*b).into()))
                    .collect(),
            ),
        );
    }
    obj.insert("features".into(), Value::Object(fobj));
    Value::Object(obj)
}

pub fn dump_graph(g: &FeatureGraph) -> String {
    serde_json::to_string(&graph_to_value(g)).expect("serializable")
}
