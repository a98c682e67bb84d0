//! Minimal-model extraction under a morphism preorder, defining-formula
//! synthesis, the unbounded-height antichain fixtures, exhaustive small-model
//! enumeration up to isomorphism, and a brute-force preservation falsifier.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::charform::{char_exists_gml, char_exists_pos_gml, char_exists_pos_ml, prune};
use crate::formula::{check, Formula};
use crate::gnn::{evaluate_gnn, kripke_to_graph, GnnModel};
use crate::kripke::{as_tree, canonical_key, PointedModel, Signature, TreeModel, WorldId};
use crate::morphisms::{find_morphism, tree_preorder, MorphismKind, Witness};
use crate::unravelling::unravel;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("kind {0:?} is not supported here; use Embedding, InjectiveHom or Hom")]
    UnsupportedKind(MorphismKind),
    #[error("generators must share one signature")]
    MixedSignatures,
    #[error("the plain-modal route applies to Embedding synthesis only")]
    MlRouteNeedsEmbedding,
    #[error("enumeration needs a bound: give max_worlds, or max_height for trees")]
    Unbounded,
    #[error("enumeration space too large: {0}")]
    TooLarge(String),
    #[error("class is not evaluable on this model: {0}")]
    ClassEvaluation(String),
}

fn ensure_searchable(kind: MorphismKind) -> Result<(), SynthesisError> {
    if kind == MorphismKind::Iso {
        return Err(SynthesisError::UnsupportedKind(kind));
    }
    Ok(())
}

/// One representative per isomorphism class of the minimal elements of
/// `trees` under the chosen relation. The output is an antichain whose upward
/// closure covers every input tree; mutually comparable minimal classes
/// (possible for plain homomorphisms) are collapsed to the representative of
/// least canonical key. Sorted by canonical key.
pub fn minimal_models(
    trees: &[TreeModel],
    kind: MorphismKind,
) -> Result<Vec<TreeModel>, SynthesisError> {
    ensure_searchable(kind)?;
    if let Some(first) = trees.first() {
        if trees
            .iter()
            .any(|t| t.base().signature() != first.base().signature())
        {
            return Err(SynthesisError::MixedSignatures);
        }
    }
    // Deduplicate isomorphism classes by canonical key.
    let mut classes: BTreeMap<String, &TreeModel> = BTreeMap::new();
    for t in trees {
        classes.entry(canonical_key(t)).or_insert(t);
    }
    let reps: Vec<&TreeModel> = classes.values().copied().collect();
    let n = reps.len();
    let mut below = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            below[i][j] = i == j || tree_preorder(kind, reps[i], reps[j]).unwrap();
        }
    }
    let minimal: Vec<usize> = (0..n)
        .filter(|&j| (0..n).all(|i| !below[i][j] || below[j][i]))
        .collect();
    // Collapse mutually comparable minimal classes; representatives are in
    // key order already, so the first of each group has the least key.
    let mut kept: Vec<usize> = Vec::new();
    for &j in &minimal {
        if !kept.iter().any(|&i| below[i][j] && below[j][i]) {
            kept.push(j);
        }
    }
    Ok(kept.into_iter().map(|i| reps[i].clone()).collect())
}

/// A finitely presented class: the models above some generator's bounded
/// unravelling under the chosen relation.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub generators: Vec<PointedModel>,
    pub kind: MorphismKind,
    pub l: usize,
}

impl GeneratorSet {
    pub fn new(
        generators: Vec<PointedModel>,
        kind: MorphismKind,
        l: usize,
    ) -> Result<Self, SynthesisError> {
        ensure_searchable(kind)?;
        if let Some(first) = generators.first() {
            if generators
                .iter()
                .any(|m| m.signature() != first.signature())
            {
                return Err(SynthesisError::MixedSignatures);
            }
        }
        Ok(GeneratorSet {
            generators,
            kind,
            l,
        })
    }
}

/// Synthesise a defining formula for the class generated by `g`: unravel the
/// generators to depth `L`, keep the minimal trees, and return the
/// disjunction of their characteristic formulas in the fragment matching the
/// relation. The result holds in exactly the models whose `L`-unravelling
/// lies above some generator's `L`-unravelling.
///
/// With `ml_route` set (Embedding only), minimal trees are pruned first and
/// their per-class formulas are taken, so every grade collapses to one and
/// the output is plain-modal with negation on atoms only. That output is
/// implied by the graded synthesis; the two coincide whenever the generated
/// class is itself plain-modal-definable.
pub fn synthesize(g: &GeneratorSet, ml_route: bool) -> Result<Formula, SynthesisError> {
    ensure_searchable(g.kind)?;
    if ml_route && g.kind != MorphismKind::Embedding {
        return Err(SynthesisError::MlRouteNeedsEmbedding);
    }
    if g.generators.is_empty() {
        return Ok(Formula::False);
    }
    let unravelled: Vec<TreeModel> = g.generators.iter().map(|m| unravel(m, g.l)).collect();
    let min = minimal_models(&unravelled, g.kind)?;
    if ml_route {
        let mut pruned: BTreeMap<String, TreeModel> = BTreeMap::new();
        for t in &min {
            let p = prune(t);
            pruned.entry(canonical_key(&p)).or_insert(p);
        }
        let disjuncts: Vec<Formula> = pruned
            .values()
            .map(|t| crate::charform::char_gml_per_class(t.base(), g.l))
            .collect();
        return Ok(Formula::disj(disjuncts));
    }
    let disjuncts: Vec<Formula> = min
        .iter()
        .map(|t| match g.kind {
            MorphismKind::Embedding => char_exists_gml(t.base(), g.l),
            MorphismKind::InjectiveHom => char_exists_pos_gml(t.base(), g.l),
            MorphismKind::Hom => char_exists_pos_ml(t.base(), g.l),
            MorphismKind::Iso => unreachable!(),
        })
        .collect();
    Ok(Formula::disj(disjuncts))
}

/// The `n`-th member of the unbounded-height antichain family: a spine
/// `v1 -> ... -> v(n+2)` with an extra child `u` under `v1` and `w` under
/// `v(n+1)`. Unlabelled for the injective-homomorphism family; the
/// homomorphism family alternates `p1`/`p2` along the spine and marks `u`,
/// `w` with `p3`, `p4`.
pub fn antichain_family(kind: MorphismKind, n: usize) -> Result<TreeModel, SynthesisError> {
    if !matches!(kind, MorphismKind::InjectiveHom | MorphismKind::Hom) {
        return Err(SynthesisError::UnsupportedKind(kind));
    }
    assert!(n >= 1, "antichain members are indexed from 1");
    let spine: Vec<WorldId> = (1..=n + 2).map(|i| WorldId::new(format!("v{i}"))).collect();
    let u = WorldId::new("u");
    let w = WorldId::new("w");
    let mut worlds = spine.clone();
    worlds.push(u.clone());
    worlds.push(w.clone());
    let mut edges: Vec<(WorldId, WorldId)> = (0..=n)
        .map(|i| (spine[i].clone(), spine[i + 1].clone()))
        .collect();
    edges.push((spine[0].clone(), u.clone()));
    edges.push((spine[n].clone(), w.clone()));

    let (signature, valuation) = match kind {
        MorphismKind::InjectiveHom => (Signature::empty(), BTreeMap::new()),
        MorphismKind::Hom => {
            let sig = Signature::numbered(4);
            let mut val: BTreeMap<String, BTreeSet<WorldId>> = BTreeMap::new();
            for (i, world) in spine.iter().enumerate() {
                let index = i + 1;
                let prop = if index % 2 == 0 { "p1" } else { "p2" };
                val.entry(prop.to_string())
                    .or_default()
                    .insert(world.clone());
            }
            val.entry("p3".into()).or_default().insert(u.clone());
            val.entry("p4".into()).or_default().insert(w.clone());
            (sig, val)
        }
        _ => unreachable!(),
    };
    let point = spine[0].clone();
    let base = PointedModel::new(signature, worlds, edges, valuation, point)
        .expect("antichain member is a valid model");
    Ok(as_tree(&base).expect("antichain member is a tree"))
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration up to isomorphism.
// ---------------------------------------------------------------------------

/// Bounds for [`enumerate_models`]. General enumeration needs `max_worlds`;
/// tree enumeration accepts `max_height`/`max_branching` instead (missing
/// tree bounds are derived from the ones given).
#[derive(Clone, Debug)]
pub struct EnumerationSpec {
    pub signature: Signature,
    pub max_worlds: Option<usize>,
    pub tree_only: bool,
    pub max_height: Option<usize>,
    pub max_branching: Option<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    // All permutations of 1..n fixing index 0.
    let mut perms = vec![vec![0usize]];
    for next in 1..n {
        let mut grown = Vec::new();
        for p in &perms {
            for slot in 0..=p.len() - 1 {
                let mut q = p.clone();
                q.insert(slot + 1, next);
                grown.push(q);
            }
        }
        perms = grown;
    }
    // Turn "position lists" into index maps.
    perms
        .into_iter()
        .map(|positions| {
            let mut map = vec![0usize; n];
            for (slot, world) in positions.iter().enumerate() {
                map[*world] = slot;
            }
            map
        })
        .collect()
}

struct GeneralEnumerator {
    signature: Signature,
    max_worlds: usize,
    n: usize,
    mask: u64,
    limit: u64,
    perm_tables: Vec<Vec<u32>>,
}

impl GeneralEnumerator {
    fn bits(&self) -> u32 {
        (self.n * self.signature.len() + self.n * self.n) as u32
    }

    fn rebuild_for(&mut self, n: usize) {
        self.n = n;
        let bits = self.bits();
        self.mask = 0;
        self.limit = 1u64 << bits;
        let p = self.signature.len();
        self.perm_tables = permutations(n)
            .into_iter()
            .filter(|perm| perm.iter().enumerate().any(|(i, v)| i != *v))
            .map(|perm| {
                let mut table = vec![0u32; bits as usize];
                for v in 0..n {
                    for prop in 0..p {
                        table[v * p + prop] = (perm[v] * p + prop) as u32;
                    }
                }
                let off = n * p;
                for a in 0..n {
                    for b in 0..n {
                        table[off + a * n + b] = (off + perm[a] * n + perm[b]) as u32;
                    }
                }
                table
            })
            .collect();
    }

    fn is_canonical(&self, mask: u64) -> bool {
        for table in &self.perm_tables {
            let mut out = 0u64;
            let mut rest = mask;
            while rest != 0 {
                let bit = rest.trailing_zeros();
                out |= 1u64 << table[bit as usize];
                rest &= rest - 1;
            }
            if out < mask {
                return false;
            }
        }
        true
    }

    fn build(&self, mask: u64) -> PointedModel {
        let n = self.n;
        let p = self.signature.len();
        let worlds: Vec<WorldId> = (0..n).map(|i| WorldId::new(format!("w{i}"))).collect();
        let mut valuation: BTreeMap<String, BTreeSet<WorldId>> = BTreeMap::new();
        for (v, world) in worlds.iter().enumerate() {
            for prop in 0..p {
                if mask & (1 << (v * p + prop)) != 0 {
                    valuation
                        .entry(self.signature.props()[prop].clone())
                        .or_default()
                        .insert(world.clone());
                }
            }
        }
        let off = n * p;
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if mask & (1 << (off + a * n + b)) != 0 {
                    edges.push((worlds[a].clone(), worlds[b].clone()));
                }
            }
        }
        PointedModel::new(
            self.signature.clone(),
            worlds.clone(),
            edges,
            valuation,
            worlds[0].clone(),
        )
        .expect("decoded model is valid")
    }
}

impl Iterator for GeneralEnumerator {
    type Item = PointedModel;

    fn next(&mut self) -> Option<PointedModel> {
        loop {
            if self.mask >= self.limit {
                if self.n >= self.max_worlds {
                    return None;
                }
                self.rebuild_for(self.n + 1);
                continue;
            }
            let mask = self.mask;
            self.mask += 1;
            if self.is_canonical(mask) {
                return Some(self.build(mask));
            }
        }
    }
}

#[derive(Clone)]
struct TreeShape {
    label: u64,
    children: Vec<TreeShape>,
    size: usize,
}

fn tree_shapes(
    label_count: u64,
    height: usize,
    branching: usize,
    max_size: usize,
) -> Vec<TreeShape> {
    if max_size == 0 {
        return Vec::new();
    }
    let universe = if height == 0 {
        Vec::new()
    } else {
        tree_shapes(label_count, height - 1, branching, max_size - 1)
    };
    let mut out = Vec::new();
    for label in 0..label_count {
        // Multisets of children as non-decreasing index sequences, bounded by
        // branching degree and remaining size budget.
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, Vec::new(), 1)];
        while let Some((from, chosen, size)) = stack.pop() {
            out.push(TreeShape {
                label,
                children: chosen.iter().map(|i| universe[*i].clone()).collect(),
                size,
            });
            if chosen.len() == branching {
                continue;
            }
            #[allow(clippy::needless_range_loop)]
            for i in from..universe.len() {
                let grown = size + universe[i].size;
                if grown > max_size {
                    continue;
                }
                let mut next = chosen.clone();
                next.push(i);
                stack.push((i, next, grown));
            }
        }
    }
    out.sort_by_key(|t| (t.size, shape_key(t)));
    out
}

fn shape_key(t: &TreeShape) -> String {
    let mut childs: Vec<String> = t.children.iter().map(shape_key).collect();
    childs.sort();
    format!("({:x}{})", t.label, childs.concat())
}

fn shape_to_model(shape: &TreeShape, signature: &Signature) -> PointedModel {
    let mut worlds = Vec::new();
    let mut edges = Vec::new();
    let mut valuation: BTreeMap<String, BTreeSet<WorldId>> = BTreeMap::new();
    let mut queue: std::collections::VecDeque<(&TreeShape, Option<WorldId>)> =
        std::collections::VecDeque::new();
    queue.push_back((shape, None));
    let mut counter = 0usize;
    while let Some((node, parent)) = queue.pop_front() {
        let id = WorldId::new(format!("n{counter}"));
        counter += 1;
        worlds.push(id.clone());
        if let Some(p) = parent {
            edges.push((p, id.clone()));
        }
        for (i, prop) in signature.props().iter().enumerate() {
            if node.label & (1 << i) != 0 {
                valuation
                    .entry(prop.clone())
                    .or_default()
                    .insert(id.clone());
            }
        }
        for c in &node.children {
            queue.push_back((c, Some(id.clone())));
        }
    }
    let point = worlds[0].clone();
    PointedModel::new(signature.clone(), worlds, edges, valuation, point)
        .expect("tree shape decodes to a valid model")
}

/// One representative per isomorphism class of the pointed models matching
/// the bounds, in a fixed deterministic order. General enumeration walks all
/// valuation/edge assignments and keeps exactly the orbit minima; trees are
/// generated canonically (sorted child multisets), so no deduplication pass
/// is needed. Cost grows as `2^(n^2 + n*props)` for general models, so keep
/// `max_worlds` at desk scale (4 worlds over 1 or 2 propositions is the
/// practical ceiling).
pub fn enumerate_models(
    spec: &EnumerationSpec,
) -> Result<Box<dyn Iterator<Item = PointedModel>>, SynthesisError> {
    if spec.tree_only {
        let height = match (spec.max_height, spec.max_worlds) {
            (Some(h), _) => h,
            (None, Some(w)) => w.saturating_sub(1),
            (None, None) => return Err(SynthesisError::Unbounded),
        };
        let branching = match (spec.max_branching, spec.max_worlds) {
            (Some(b), _) => b,
            (None, Some(w)) => w.saturating_sub(1).max(1),
            (None, None) if height == 0 => 0,
            (None, None) => return Err(SynthesisError::Unbounded),
        };
        // World budget: the explicit cap or the geometric bound sum b^i.
        let implied = {
            let mut total = 1usize;
            let mut level = 1usize;
            for _ in 0..height {
                level = level.saturating_mul(branching.max(1));
                total = total.saturating_add(level);
            }
            total
        };
        let max_size = spec.max_worlds.unwrap_or(usize::MAX).min(implied);
        if max_size > 40 {
            return Err(SynthesisError::TooLarge(format!(
                "tree enumeration up to {max_size} worlds"
            )));
        }
        let label_count = 1u64 << spec.signature.len();
        let shapes = tree_shapes(label_count, height, branching, max_size);
        let signature = spec.signature.clone();
        Ok(Box::new(
            shapes
                .into_iter()
                .map(move |s| shape_to_model(&s, &signature)),
        ))
    } else {
        let max_worlds = spec.max_worlds.ok_or(SynthesisError::Unbounded)?;
        let bits = max_worlds * spec.signature.len() + max_worlds * max_worlds;
        if bits > 26 {
            return Err(SynthesisError::TooLarge(format!(
                "{max_worlds} worlds over {} propositions need {bits} bits per structure",
                spec.signature.len()
            )));
        }
        let mut e = GeneralEnumerator {
            signature: spec.signature.clone(),
            max_worlds,
            n: 1,
            mask: 0,
            limit: 0,
            perm_tables: Vec::new(),
        };
        e.rebuild_for(1);
        Ok(Box::new(e))
    }
}

// ---------------------------------------------------------------------------
// Brute-force preservation testing.
// ---------------------------------------------------------------------------

/// A class of pointed models presented by a formula or by a network over
/// graphs.
#[derive(Clone, Debug)]
pub enum PreservationClass {
    Formula(Formula),
    Gnn(GnnModel),
}

/// A failure of preservation: `lhs` is in the class, the witness maps it into
/// `rhs` under the tested relation, yet `rhs` is outside the class.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub lhs: PointedModel,
    pub rhs: PointedModel,
    pub witness: Witness,
}

fn class_signature(class: &PreservationClass) -> Signature {
    match class {
        PreservationClass::Formula(f) => {
            Signature::new(f.props().into_iter().collect()).expect("prop names are identifiers")
        }
        PreservationClass::Gnn(n) => Signature::numbered(n.input_dim()),
    }
}

fn class_accepts(class: &PreservationClass, m: &PointedModel) -> Result<bool, SynthesisError> {
    match class {
        PreservationClass::Formula(f) => {
            check(f, m).map_err(|e| SynthesisError::ClassEvaluation(e.to_string()))
        }
        PreservationClass::Gnn(n) => {
            let (graph, node) =
                kripke_to_graph(m).map_err(|e| SynthesisError::ClassEvaluation(e.to_string()))?;
            evaluate_gnn(n, &graph, &node)
                .map(|(verdict, _)| verdict)
                .map_err(|e| SynthesisError::ClassEvaluation(e.to_string()))
        }
    }
}

/// Search all pointed models up to `bound` worlds (up to isomorphism, over
/// the class's signature) for a pair violating preservation under `kind`.
/// Formula classes range over arbitrary models, network classes over the
/// symmetric irreflexive ones (graphs). Deterministic: the first failing pair
/// in enumeration order is returned. Quadratic in the number of enumerated
/// structures; keep `bound` at 4 worlds and 1-2 propositions or below.
pub fn check_preservation(
    class: &PreservationClass,
    kind: MorphismKind,
    bound: usize,
) -> Result<Option<Counterexample>, SynthesisError> {
    ensure_searchable(kind)?;
    let signature = class_signature(class);
    let spec = EnumerationSpec {
        signature,
        max_worlds: Some(bound),
        tree_only: false,
        max_height: None,
        max_branching: None,
    };
    let graph_like = matches!(class, PreservationClass::Gnn(_));
    let mut models = Vec::new();
    let mut accepted = Vec::new();
    for m in enumerate_models(&spec)? {
        if graph_like && !is_graph_like(&m) {
            continue;
        }
        let verdict = class_accepts(class, &m)?;
        models.push(m);
        accepted.push(verdict);
    }
    for (i, lhs) in models.iter().enumerate() {
        if !accepted[i] {
            continue;
        }
        for (j, rhs) in models.iter().enumerate() {
            if accepted[j] {
                continue;
            }
            if !kind.labels_compatible(lhs.label_bits(lhs.point()), rhs.label_bits(rhs.point())) {
                continue;
            }
            if kind.requires_injectivity() && lhs.world_count() > rhs.world_count() {
                continue;
            }
            if let Some(witness) = find_morphism(kind, lhs, rhs).unwrap() {
                return Ok(Some(Counterexample {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    witness,
                }));
            }
        }
    }
    Ok(None)
}

fn is_graph_like(m: &PointedModel) -> bool {
    m.edges()
        .iter()
        .all(|(a, b)| a != b && m.edges().contains(&(b.clone(), a.clone())))
}
