//! Characteristic formulas of pointed models and the pruning operation on
//! trees.
//!
//! The graded construction recurses on depth: the depth-0 formula is the
//! conjunction of satisfied propositions and negated unsatisfied ones, and at
//! depth `l+1` the point's successors are partitioned into graded-equivalence
//! classes at depth `l`. Counting one diamond per class is not enough for the
//! morphism-encoding contract: one successor of the target can witness two
//! different classes at once (`<>true & <>p` is satisfied by a single
//! `p`-successor), so satisfaction would not yield the injective matching the
//! contract promises. The construction therefore emits a cumulative counting
//! diamond for every subset of classes — Hall's matching condition stated in
//! formulas. Subsets whose classes carry pairwise distinct valuations are
//! omitted in the negation-carrying variant: their witness sets are disjoint,
//! so the subset count follows from the per-class counts.
//!
//! The positive variant drops negated literals (keeping all subset
//! conjuncts: positive base formulas overlap), and the plain-modal variant
//! collapses every grade to one, where per-class diamonds alone are exact
//! because homomorphisms may merge witnesses.

use crate::equivalence::{refine_types, Logic};
use crate::formula::Formula;
use crate::kripke::{as_tree, canonical_key, PointedModel, TreeModel, WorldId};
use crate::unravelling::unravel;

/// Which characteristic construction to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharVariant {
    /// Negation on atoms allowed, counting diamonds kept.
    ExistsGml,
    /// Negative literals removed.
    ExistsPosGml,
    /// Negative literals removed and every grade collapsed to one.
    ExistsPosMl,
}

fn base_formula(m: &PointedModel, w: &WorldId, keep_negative: bool) -> Formula {
    let mut parts = Vec::new();
    for p in m.signature().props() {
        if m.satisfies_prop(w, p) {
            parts.push(Formula::prop(p.clone()));
        }
    }
    if keep_negative {
        for p in m.signature().props() {
            if !m.satisfies_prop(w, p) {
                parts.push(Formula::not(Formula::prop(p.clone())));
            }
        }
    }
    Formula::conj(parts)
}

fn char_at(m: &PointedModel, w: &WorldId, l: usize, variant: CharVariant) -> Formula {
    let keep_negative = variant == CharVariant::ExistsGml;
    let base = base_formula(m, w, keep_negative);
    if l == 0 {
        return base;
    }
    let types = refine_types(m, l - 1, Logic::Gml);
    // Group the successors by graded type at depth l-1. Each class gets a
    // representative with least canonical key of its (l-1)-unravelling, and
    // classes are ordered by that key, which makes the formula a
    // deterministic function of the isomorphism type.
    let mut classes: std::collections::BTreeMap<&str, Vec<&WorldId>> =
        std::collections::BTreeMap::new();
    for s in m.successors(w) {
        classes.entry(types.type_of(s)).or_default().push(s);
    }
    let mut keyed: Vec<(String, usize, &WorldId)> = classes
        .values()
        .map(|members| {
            let (key, rep) = members
                .iter()
                .map(|s| {
                    let sub = m.repoint(s).expect("successor world");
                    (canonical_key(&unravel(&sub, l - 1)), *s)
                })
                .min()
                .expect("class is non-empty");
            (key, members.len(), rep)
        })
        .collect();
    keyed.sort();

    let rep_formulas: Vec<Formula> = keyed
        .iter()
        .map(|(_, _, rep)| char_at(m, rep, l - 1, variant))
        .collect();

    let mut parts = vec![base];
    let class_count = keyed.len();
    match variant {
        CharVariant::ExistsPosMl => {
            // Homomorphisms may merge witnesses; one diamond per class is
            // exact and nothing more is expressible without counting.
            for f in rep_formulas {
                parts.push(Formula::diamond(1, f));
            }
        }
        CharVariant::ExistsGml | CharVariant::ExistsPosGml => {
            // Hall's condition over subsets of classes, one cumulative
            // counting diamond each; conjuncts ordered by subset size then
            // class order.
            let mut masks: Vec<u32> = (1..(1u32 << class_count)).collect();
            masks.sort_by_key(|m| (m.count_ones(), *m));
            for mask in masks {
                let members: Vec<usize> =
                    (0..class_count).filter(|i| mask & (1 << i) != 0).collect();
                if members.len() >= 2 && variant == CharVariant::ExistsGml {
                    // With negated literals present, classes of distinct
                    // valuation have disjoint witness sets, so any subset
                    // that splits by valuation is implied by its per-block
                    // conjuncts.
                    let vals: std::collections::BTreeSet<u64> =
                        members.iter().map(|i| m.label_bits(keyed[*i].2)).collect();
                    if vals.len() > 1 {
                        continue;
                    }
                }
                let grade: usize = members.iter().map(|i| keyed[*i].1).sum();
                let body =
                    Formula::disj(members.iter().map(|i| rep_formulas[*i].clone()).collect());
                parts.push(Formula::diamond(grade as u32, body));
            }
        }
    }
    Formula::conj(parts)
}

/// Characteristic formula with negated atoms: satisfaction at another model
/// coincides with an embedding between the respective `l`-unravellings.
pub fn char_exists_gml(m: &PointedModel, l: usize) -> Formula {
    char_at(m, m.point(), l, CharVariant::ExistsGml)
}

/// Negation-free characteristic formula: satisfaction coincides with an
/// injective homomorphism between `l`-unravellings.
pub fn char_exists_pos_gml(m: &PointedModel, l: usize) -> Formula {
    char_at(m, m.point(), l, CharVariant::ExistsPosGml)
}

/// Negation-free, grade-one characteristic formula: satisfaction coincides
/// with a homomorphism between `l`-unravellings.
pub fn char_exists_pos_ml(m: &PointedModel, l: usize) -> Formula {
    char_at(m, m.point(), l, CharVariant::ExistsPosMl)
}

/// Per-class construction without the subset conjuncts: one diamond per
/// successor class, graded by class size. On models whose sibling classes are
/// all singletons (prunings), every grade is one, so the result is a
/// plain-modal formula with negation on atoms only. Satisfaction is implied
/// by an embedding of `l`-unravellings but does not imply one in general;
/// the synthesis route that needs plain-modal output uses this deliberately
/// weaker form.
pub fn char_gml_per_class(m: &PointedModel, l: usize) -> Formula {
    fn build(m: &PointedModel, w: &WorldId, l: usize) -> Formula {
        let base = base_formula(m, w, true);
        if l == 0 {
            return base;
        }
        let types = refine_types(m, l - 1, Logic::Gml);
        let mut classes: std::collections::BTreeMap<&str, Vec<&WorldId>> =
            std::collections::BTreeMap::new();
        for s in m.successors(w) {
            classes.entry(types.type_of(s)).or_default().push(s);
        }
        let mut keyed: Vec<(String, usize, &WorldId)> = classes
            .values()
            .map(|members| {
                let (key, rep) = members
                    .iter()
                    .map(|s| {
                        let sub = m.repoint(s).expect("successor world");
                        (canonical_key(&unravel(&sub, l - 1)), *s)
                    })
                    .min()
                    .expect("class is non-empty");
                (key, members.len(), rep)
            })
            .collect();
        keyed.sort();
        let mut parts = vec![base];
        for (_, size, rep) in keyed {
            parts.push(Formula::diamond(size as u32, build(m, rep, l - 1)));
        }
        Formula::conj(parts)
    }
    build(m, m.point(), l)
}

/// Tie-breaking order used when pruning deletes equivalent siblings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PruneOrder {
    /// Keep the subtree least in canonical-key order.
    #[default]
    CanonicalAsc,
    /// Keep the greatest instead; the result is isomorphic either way.
    CanonicalDesc,
}

/// Staged deletion of equivalent sibling subtrees. At stage `k`, among
/// sibling subtrees of height exactly `k` that are plain-modally equivalent
/// at depth `k`, only the representative preferred by `order` survives.
/// Stages run for `k = 0..=height`.
pub fn prune_ordered(t: &TreeModel, order: PruneOrder) -> TreeModel {
    let mut current = t.clone();
    for k in 0..=t.height() {
        let mut deleted: std::collections::BTreeSet<WorldId> = std::collections::BTreeSet::new();
        for parent in current.base().worlds() {
            // Children whose subtree height is exactly k, grouped by
            // ML-equivalence at depth k of their subtrees.
            let mut groups: std::collections::BTreeMap<String, Vec<(String, WorldId)>> =
                std::collections::BTreeMap::new();
            for child in current.children(parent) {
                let sub = current.subtree(child);
                if sub.height() != k {
                    continue;
                }
                let ml_type = refine_types(sub.base(), k, Logic::Ml)
                    .type_of(sub.root())
                    .to_string();
                groups
                    .entry(ml_type)
                    .or_default()
                    .push((canonical_key(&sub), child.clone()));
            }
            for mut members in groups.into_values() {
                members.sort();
                if order == PruneOrder::CanonicalDesc {
                    members.reverse();
                }
                for (_, child) in members.into_iter().skip(1) {
                    deleted.insert(child);
                }
            }
        }
        if deleted.is_empty() {
            continue;
        }
        current = remove_subtrees(&current, &deleted);
    }
    current
}

/// Pruning with the canonical ascending order.
pub fn prune(t: &TreeModel) -> TreeModel {
    prune_ordered(t, PruneOrder::CanonicalAsc)
}

fn remove_subtrees(t: &TreeModel, roots: &std::collections::BTreeSet<WorldId>) -> TreeModel {
    let mut removed = std::collections::BTreeSet::new();
    let mut stack: Vec<WorldId> = roots.iter().cloned().collect();
    while let Some(w) = stack.pop() {
        if removed.insert(w.clone()) {
            for c in t.children(&w) {
                stack.push(c.clone());
            }
        }
    }
    let worlds: Vec<WorldId> = t
        .base()
        .worlds()
        .iter()
        .filter(|w| !removed.contains(*w))
        .cloned()
        .collect();
    let edges: Vec<(WorldId, WorldId)> = t
        .base()
        .edges()
        .iter()
        .filter(|(a, b)| !removed.contains(a) && !removed.contains(b))
        .cloned()
        .collect();
    let valuation = t
        .base()
        .valuation()
        .iter()
        .map(|(p, s)| {
            (
                p.clone(),
                s.iter()
                    .filter(|w| !removed.contains(*w))
                    .cloned()
                    .collect(),
            )
        })
        .collect();
    let base = PointedModel::new(
        t.base().signature().clone(),
        worlds,
        edges,
        valuation,
        t.root().clone(),
    )
    .expect("pruned model is valid");
    as_tree(&base).expect("pruning a tree keeps it a tree")
}
