//! Structure-preserving maps between pointed models: decision and witness
//! search for isomorphism, embedding, injective homomorphism and
//! homomorphism, with a polynomial fast path for trees.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kripke::{PointedModel, TreeModel, WorldId};

/// The four semantic relations, ordered from strongest to weakest:
/// every isomorphism is an embedding, every embedding an injective
/// homomorphism, every injective homomorphism a homomorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MorphismKind {
    Iso,
    Embedding,
    InjectiveHom,
    Hom,
}

impl MorphismKind {
    pub fn requires_injectivity(self) -> bool {
        !matches!(self, MorphismKind::Hom)
    }

    /// Exact label equality for isomorphisms and embeddings, forward
    /// containment for the homomorphism kinds.
    pub fn labels_compatible(self, src_bits: u64, dst_bits: u64) -> bool {
        match self {
            MorphismKind::Iso | MorphismKind::Embedding => src_bits == dst_bits,
            MorphismKind::InjectiveHom | MorphismKind::Hom => src_bits & !dst_bits == 0,
        }
    }

    /// Kinds weaker than or equal to `self`.
    pub fn weaker_kinds(self) -> &'static [MorphismKind] {
        match self {
            MorphismKind::Iso => &[
                MorphismKind::Iso,
                MorphismKind::Embedding,
                MorphismKind::InjectiveHom,
                MorphismKind::Hom,
            ],
            MorphismKind::Embedding => &[
                MorphismKind::Embedding,
                MorphismKind::InjectiveHom,
                MorphismKind::Hom,
            ],
            MorphismKind::InjectiveHom => &[MorphismKind::InjectiveHom, MorphismKind::Hom],
            MorphismKind::Hom => &[MorphismKind::Hom],
        }
    }
}

/// A world-to-world map certifying a morphism; always maps point to point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub mapping: BTreeMap<WorldId, WorldId>,
}

#[derive(Debug, Error)]
pub enum MorphismError {
    #[error("signature mismatch between source and target")]
    SignatureMismatch,
}

struct Search<'a> {
    kind: MorphismKind,
    src: &'a PointedModel,
    dst: &'a PointedModel,
    src_worlds: Vec<WorldId>,
    dst_worlds: Vec<WorldId>,
    dst_idx: BTreeMap<WorldId, usize>,
    src_adj: Vec<Vec<bool>>,
    dst_adj: Vec<Vec<bool>>,
    src_out: Vec<usize>,
    src_in: Vec<usize>,
    dst_out: Vec<usize>,
    dst_in: Vec<usize>,
    assignment: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl<'a> Search<'a> {
    fn new(kind: MorphismKind, src: &'a PointedModel, dst: &'a PointedModel) -> Self {
        // Assign reachable worlds first, breadth-first from the point, so
        // edge constraints prune early; unreachable worlds follow in sorted
        // order.
        let mut order: Vec<WorldId> = Vec::new();
        let dist = src.distances_from_point();
        let mut reachable: Vec<(&usize, &WorldId)> = dist.iter().map(|(w, d)| (d, w)).collect();
        reachable.sort();
        for (_, w) in reachable {
            order.push(w.clone());
        }
        for w in src.worlds() {
            if !dist.contains_key(w) {
                order.push(w.clone());
            }
        }

        let dst_worlds: Vec<WorldId> = dst.worlds().to_vec();
        let src_idx: BTreeMap<WorldId, usize> = order
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let dst_idx: BTreeMap<WorldId, usize> = dst_worlds
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let n = order.len();
        let m = dst_worlds.len();
        let mut src_adj = vec![vec![false; n]; n];
        let mut src_out = vec![0usize; n];
        let mut src_in = vec![0usize; n];
        for (a, b) in src.edges() {
            let (i, j) = (src_idx[a], src_idx[b]);
            src_adj[i][j] = true;
            src_out[i] += 1;
            src_in[j] += 1;
        }
        let mut dst_adj = vec![vec![false; m]; m];
        let mut dst_out = vec![0usize; m];
        let mut dst_in = vec![0usize; m];
        for (a, b) in dst.edges() {
            let (i, j) = (dst_idx[a], dst_idx[b]);
            dst_adj[i][j] = true;
            dst_out[i] += 1;
            dst_in[j] += 1;
        }
        Search {
            kind,
            src,
            dst,
            src_worlds: order,
            dst_worlds,
            dst_idx,
            src_adj,
            dst_adj,
            src_out,
            src_in,
            dst_out,
            dst_in,
            assignment: vec![None; n],
            used: vec![false; m],
        }
    }

    fn candidate_ok(&self, i: usize, v: usize) -> bool {
        let kind = self.kind;
        if !kind.labels_compatible(
            self.src.label_bits(&self.src_worlds[i]),
            self.dst.label_bits(&self.dst_worlds[v]),
        ) {
            return false;
        }
        if kind.requires_injectivity() && self.used[v] {
            return false;
        }
        match kind {
            MorphismKind::Iso => {
                if self.src_out[i] != self.dst_out[v] || self.src_in[i] != self.dst_in[v] {
                    return false;
                }
            }
            MorphismKind::Embedding | MorphismKind::InjectiveHom => {
                // Successors and predecessors map injectively.
                if self.src_out[i] > self.dst_out[v] || self.src_in[i] > self.dst_in[v] {
                    return false;
                }
            }
            MorphismKind::Hom => {}
        }
        // Edge conditions against the candidate itself (self-loops) and all
        // already assigned worlds.
        let self_loop_ok = match kind {
            MorphismKind::Iso | MorphismKind::Embedding => self.src_adj[i][i] == self.dst_adj[v][v],
            MorphismKind::InjectiveHom | MorphismKind::Hom => {
                !self.src_adj[i][i] || self.dst_adj[v][v]
            }
        };
        if !self_loop_ok {
            return false;
        }
        for (j, assigned) in self.assignment.iter().enumerate() {
            let Some(u) = assigned else { continue };
            for (x, y, fx, fy) in [(i, j, v, *u), (j, i, *u, v)] {
                let src_edge = self.src_adj[x][y];
                let dst_edge = self.dst_adj[fx][fy];
                let ok = match kind {
                    MorphismKind::Iso | MorphismKind::Embedding => src_edge == dst_edge,
                    MorphismKind::InjectiveHom | MorphismKind::Hom => !src_edge || dst_edge,
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, i: usize) -> bool {
        if i == self.src_worlds.len() {
            return true;
        }
        // The point must map to the point.
        let candidates: Vec<usize> = if self.src_worlds[i] == *self.src.point() {
            vec![self.dst_idx[self.dst.point()]]
        } else {
            (0..self.dst_worlds.len()).collect()
        };
        for v in candidates {
            if self.candidate_ok(i, v) {
                self.assignment[i] = Some(v);
                self.used[v] = true;
                if self.run(i + 1) {
                    return true;
                }
                self.assignment[i] = None;
                self.used[v] = false;
            }
        }
        false
    }
}

/// Complete backtracking search for a morphism of the requested kind; the
/// returned witness is verified before being handed out. Deterministic: the
/// first witness in the fixed search order is returned.
pub fn find_morphism(
    kind: MorphismKind,
    src: &PointedModel,
    dst: &PointedModel,
) -> Result<Option<Witness>, MorphismError> {
    if src.signature() != dst.signature() {
        return Err(MorphismError::SignatureMismatch);
    }
    if kind == MorphismKind::Iso && src.world_count() != dst.world_count() {
        return Ok(None);
    }
    if kind.requires_injectivity() && src.world_count() > dst.world_count() {
        return Ok(None);
    }
    let mut search = Search::new(kind, src, dst);
    if !search.run(0) {
        return Ok(None);
    }
    let mapping: BTreeMap<WorldId, WorldId> = search
        .assignment
        .iter()
        .enumerate()
        .map(|(i, v)| {
            (
                search.src_worlds[i].clone(),
                search.dst_worlds[v.expect("complete assignment")].clone(),
            )
        })
        .collect();
    let witness = Witness { mapping };
    debug_assert!(verify_witness(kind, src, dst, &witness));
    Ok(Some(witness))
}

/// Independent condition checker: does `witness` really certify a morphism
/// of the given kind?
pub fn verify_witness(
    kind: MorphismKind,
    src: &PointedModel,
    dst: &PointedModel,
    witness: &Witness,
) -> bool {
    let map = &witness.mapping;
    if src.signature() != dst.signature() {
        return false;
    }
    // Total on source worlds, into target worlds, point to point.
    if map.len() != src.world_count() {
        return false;
    }
    let dst_set: std::collections::BTreeSet<&WorldId> = dst.worlds().iter().collect();
    if !src.worlds().iter().all(|w| map.contains_key(w)) {
        return false;
    }
    if !map.values().all(|v| dst_set.contains(v)) {
        return false;
    }
    if map[src.point()] != *dst.point() {
        return false;
    }
    if kind.requires_injectivity() {
        let image: std::collections::BTreeSet<&WorldId> = map.values().collect();
        if image.len() != map.len() {
            return false;
        }
    }
    if kind == MorphismKind::Iso && map.len() != dst.world_count() {
        return false;
    }
    for w in src.worlds() {
        if !kind.labels_compatible(src.label_bits(w), dst.label_bits(&map[w])) {
            return false;
        }
    }
    for u in src.worlds() {
        for z in src.worlds() {
            let src_edge = src.has_edge(u, z);
            let dst_edge = dst.has_edge(&map[u], &map[z]);
            let ok = match kind {
                MorphismKind::Iso | MorphismKind::Embedding => src_edge == dst_edge,
                MorphismKind::InjectiveHom | MorphismKind::Hom => !src_edge || dst_edge,
            };
            if !ok {
                return false;
            }
        }
    }
    if kind == MorphismKind::Iso {
        // Bijectivity plus the iff condition above already force the inverse
        // direction, but check edge counts for good measure.
        if src.edges().len() != dst.edges().len() {
            return false;
        }
    }
    true
}

/// Maximum bipartite matching by augmenting paths. `adj[i]` lists the right
/// vertices compatible with left vertex `i`.
fn max_bipartite_matching(adj: &[Vec<usize>], right_size: usize) -> usize {
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
    let mut owner: Vec<Option<usize>> = vec![None; right_size];
    let mut matched = 0;
    for i in 0..adj.len() {
        let mut seen = vec![false; right_size];
        if augment(i, adj, &mut owner, &mut seen) {
            matched += 1;
        }
    }
    matched
}

/// Decision procedure for the non-isomorphism kinds restricted to trees:
/// roots must be label-compatible, then for the injective kinds the children
/// of `a` must match injectively into children of `b` (maximum bipartite
/// matching over recursive comparability), while a homomorphism only needs
/// some compatible child for each child. Agrees with `find_morphism` and is
/// polynomial; memoisation is per call.
pub fn tree_preorder(
    kind: MorphismKind,
    a: &TreeModel,
    b: &TreeModel,
) -> Result<bool, MorphismError> {
    assert!(
        kind != MorphismKind::Iso,
        "tree_preorder is defined for the non-isomorphism kinds"
    );
    if a.base().signature() != b.base().signature() {
        return Err(MorphismError::SignatureMismatch);
    }

    struct Ctx<'t> {
        kind: MorphismKind,
        a: &'t TreeModel,
        b: &'t TreeModel,
        memo: BTreeMap<(WorldId, WorldId), bool>,
    }

    fn rel(ctx: &mut Ctx, x: &WorldId, y: &WorldId) -> bool {
        if let Some(v) = ctx.memo.get(&(x.clone(), y.clone())) {
            return *v;
        }
        let result = (|| {
            if !ctx
                .kind
                .labels_compatible(ctx.a.base().label_bits(x), ctx.b.base().label_bits(y))
            {
                return false;
            }
            let xs: Vec<WorldId> = ctx.a.children(x).to_vec();
            let ys: Vec<WorldId> = ctx.b.children(y).to_vec();
            match ctx.kind {
                MorphismKind::Hom => xs.iter().all(|cx| ys.iter().any(|cy| rel(ctx, cx, cy))),
                MorphismKind::Embedding | MorphismKind::InjectiveHom => {
                    if xs.len() > ys.len() {
                        return false;
                    }
                    let adj: Vec<Vec<usize>> = xs
                        .iter()
                        .map(|cx| {
                            ys.iter()
                                .enumerate()
                                .filter(|(_, cy)| rel(ctx, cx, cy))
                                .map(|(j, _)| j)
                                .collect()
                        })
                        .collect();
                    max_bipartite_matching(&adj, ys.len()) == xs.len()
                }
                MorphismKind::Iso => unreachable!(),
            }
        })();
        ctx.memo.insert((x.clone(), y.clone()), result);
        result
    }

    let mut ctx = Ctx {
        kind,
        a,
        b,
        memo: BTreeMap::new(),
    };
    let (ra, rb) = (a.root().clone(), b.root().clone());
    Ok(rel(&mut ctx, &ra, &rb))
}
