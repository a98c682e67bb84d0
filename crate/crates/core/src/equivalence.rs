//! Depth-bounded logical equivalence by type refinement, and L-bisimulation
//! with an explicit relation witness.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kripke::{PointedModel, WorldId};

/// Which logic the types track: graded types record the exact multiset of
/// successor types, plain modal types only the set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    Gml,
    Ml,
}

/// Assignment of canonical type ids at a fixed depth. Two worlds share an id
/// exactly when they satisfy the same formulas of the chosen logic up to that
/// depth. Ids are canonical strings, so they are stable across runs and
/// comparable across models.
#[derive(Clone, Debug)]
pub struct TypePartition {
    pub depth: usize,
    pub logic: Logic,
    pub assignment: BTreeMap<WorldId, String>,
}

impl TypePartition {
    /// Worlds grouped by type id.
    pub fn classes(&self) -> BTreeMap<String, Vec<WorldId>> {
        let mut out: BTreeMap<String, Vec<WorldId>> = BTreeMap::new();
        for (w, t) in &self.assignment {
            out.entry(t.clone()).or_default().push(w.clone());
        }
        out
    }

    pub fn type_of(&self, w: &WorldId) -> &str {
        &self.assignment[w]
    }

    pub fn same_type(&self, a: &WorldId, b: &WorldId) -> bool {
        self.assignment[a] == self.assignment[b]
    }
}

/// Depth-0 types are valuation profiles; each further level records, for
/// every world, its profile together with the multiset (graded) or set
/// (plain) of successor types one level down.
pub fn refine_types(m: &PointedModel, depth: usize, logic: Logic) -> TypePartition {
    let mut current: BTreeMap<WorldId, String> = m
        .worlds()
        .iter()
        .map(|w| (w.clone(), format!("v{:x}", m.label_bits(w))))
        .collect();
    for _ in 0..depth {
        let mut next = BTreeMap::new();
        for w in m.worlds() {
            let mut child_types: Vec<&str> = m
                .successors(w)
                .iter()
                .map(|s| current[s].as_str())
                .collect();
            child_types.sort();
            if logic == Logic::Ml {
                child_types.dedup();
            }
            let mut id = format!("(v{:x}|", m.label_bits(w));
            for (i, t) in child_types.iter().enumerate() {
                if i > 0 {
                    id.push(',');
                }
                id.push_str(t);
            }
            id.push(')');
            next.insert(w.clone(), id);
        }
        current = next;
    }
    TypePartition {
        depth,
        logic,
        assignment: current,
    }
}

#[derive(Debug, Error)]
pub enum EquivalenceError {
    #[error("signature mismatch between the two models")]
    SignatureMismatch,
}

/// Certificate of depth-bounded bisimilarity: `strata[k]` relates the pairs
/// that match labels and can mirror each other's moves for `k` rounds, so
/// `strata[k+1]` is a subset of `strata[k]` and the two points sit in the
/// deepest stratum.
///
/// A single flat relation conditioned on point distance cannot certify this:
/// a world of the left model may occur both near the point and at the depth
/// horizon of the right one, with different remaining obligations at each
/// occurrence. The strata keep those roles apart.
#[derive(Clone, Debug)]
pub struct BisimulationWitness {
    pub strata: Vec<BTreeSet<(WorldId, WorldId)>>,
}

impl BisimulationWitness {
    /// The deepest stratum: pairs that are bisimilar for the full depth.
    pub fn relation(&self) -> &BTreeSet<(WorldId, WorldId)> {
        self.strata.last().expect("at least stratum zero")
    }
}

/// Decide whether `a` and `b` are L-bisimilar, returning the greatest-fixpoint
/// strata as a witness. Each stratum is the largest relation valid at its
/// depth, so the output is deterministic.
pub fn l_bisimilar(
    a: &PointedModel,
    b: &PointedModel,
    l: usize,
) -> Result<Option<BisimulationWitness>, EquivalenceError> {
    if a.signature() != b.signature() {
        return Err(EquivalenceError::SignatureMismatch);
    }
    // Work on small index matrices; world ids are only materialised at the
    // end for the witness.
    let wa = a.worlds();
    let wb = b.worlds();
    let index_a: BTreeMap<&WorldId, usize> = wa.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let index_b: BTreeMap<&WorldId, usize> = wb.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let succ_a: Vec<Vec<usize>> = wa
        .iter()
        .map(|w| a.successors(w).iter().map(|s| index_a[s]).collect())
        .collect();
    let succ_b: Vec<Vec<usize>> = wb
        .iter()
        .map(|w| b.successors(w).iter().map(|s| index_b[s]).collect())
        .collect();
    let (na, nb) = (wa.len(), wb.len());
    let mut z0 = vec![false; na * nb];
    for i in 0..na {
        for j in 0..nb {
            z0[i * nb + j] = a.label_bits(&wa[i]) == b.label_bits(&wb[j]);
        }
    }
    let mut raw = vec![z0];
    for k in 0..l {
        let prev = &raw[k];
        let mut next = vec![false; na * nb];
        for i in 0..na {
            for j in 0..nb {
                if !raw[0][i * nb + j] {
                    continue;
                }
                let forth = succ_a[i]
                    .iter()
                    .all(|z| succ_b[j].iter().any(|z2| prev[z * nb + z2]));
                let back = succ_b[j]
                    .iter()
                    .all(|z2| succ_a[i].iter().any(|z| prev[z * nb + z2]));
                next[i * nb + j] = forth && back;
            }
        }
        raw.push(next);
    }
    let pi = index_a[a.point()];
    let pj = index_b[b.point()];
    if !raw[l][pi * nb + pj] {
        return Ok(None);
    }
    let strata = raw
        .into_iter()
        .map(|flat| {
            let mut rel = BTreeSet::new();
            for i in 0..na {
                for j in 0..nb {
                    if flat[i * nb + j] {
                        rel.insert((wa[i].clone(), wb[j].clone()));
                    }
                }
            }
            rel
        })
        .collect();
    Ok(Some(BisimulationWitness { strata }))
}

/// [`l_bisimilar`] without the witness; cheaper inside exhaustive loops.
pub fn are_l_bisimilar(
    a: &PointedModel,
    b: &PointedModel,
    l: usize,
) -> Result<bool, EquivalenceError> {
    if a.signature() != b.signature() {
        return Err(EquivalenceError::SignatureMismatch);
    }
    let wa = a.worlds();
    let wb = b.worlds();
    let index_a: BTreeMap<&WorldId, usize> = wa.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let index_b: BTreeMap<&WorldId, usize> = wb.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let succ_a: Vec<Vec<usize>> = wa
        .iter()
        .map(|w| a.successors(w).iter().map(|s| index_a[s]).collect())
        .collect();
    let succ_b: Vec<Vec<usize>> = wb
        .iter()
        .map(|w| b.successors(w).iter().map(|s| index_b[s]).collect())
        .collect();
    let (na, nb) = (wa.len(), wb.len());
    let mut base = vec![false; na * nb];
    for i in 0..na {
        for j in 0..nb {
            base[i * nb + j] = a.label_bits(&wa[i]) == b.label_bits(&wb[j]);
        }
    }
    let mut prev = base.clone();
    for _ in 0..l {
        let mut next = vec![false; na * nb];
        for i in 0..na {
            for j in 0..nb {
                if !base[i * nb + j] {
                    continue;
                }
                let forth = succ_a[i]
                    .iter()
                    .all(|z| succ_b[j].iter().any(|z2| prev[z * nb + z2]));
                let back = succ_b[j]
                    .iter()
                    .all(|z2| succ_a[i].iter().any(|z| prev[z * nb + z2]));
                next[i * nb + j] = forth && back;
            }
        }
        prev = next;
    }
    let pi = index_a[a.point()];
    let pj = index_b[b.point()];
    Ok(prev[pi * nb + pj])
}

/// Direct verification of a strata chain; the independent side of witness
/// tests.
pub fn verify_bisimulation(
    a: &PointedModel,
    b: &PointedModel,
    l: usize,
    witness: &BisimulationWitness,
) -> bool {
    let strata = &witness.strata;
    if strata.len() != l + 1 {
        return false;
    }
    if !strata[l].contains(&(a.point().clone(), b.point().clone())) {
        return false;
    }
    for rel in strata {
        if !rel.iter().all(|(u, v)| a.label_bits(u) == b.label_bits(v)) {
            return false;
        }
    }
    for k in 0..l {
        for (u, v) in &strata[k + 1] {
            if !strata[k].contains(&(u.clone(), v.clone())) {
                return false;
            }
            let forth = a.successors(u).iter().all(|z| {
                b.successors(v)
                    .iter()
                    .any(|z2| strata[k].contains(&(z.clone(), z2.clone())))
            });
            let back = b.successors(v).iter().all(|z2| {
                a.successors(u)
                    .iter()
                    .any(|z| strata[k].contains(&(z.clone(), z2.clone())))
            });
            if !forth || !back {
                return false;
            }
        }
    }
    true
}
