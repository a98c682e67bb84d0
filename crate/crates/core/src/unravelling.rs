//! Bounded unravelling: the tree of all accessibility paths of length at most
//! `L` from the point, labelled by path endpoints.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kripke::{as_tree, PointedModel, TreeModel, WorldId};

#[derive(Debug, Error)]
pub enum UnravelError {
    #[error("depth {0} exceeds tree height {1}")]
    DepthOutOfRange(usize, usize),
}

/// Path worlds are named by joining the source ids with `/`. Separator and
/// escape characters inside source ids are escaped so that distinct paths
/// always get distinct names, whatever the input ids look like.
fn escape_segment(id: &str) -> String {
    if id.contains('\\') || id.contains('/') {
        id.replace('\\', "\\\\").replace('/', "\\/")
    } else {
        id.to_string()
    }
}

/// The `L`-unravelling of a pointed model. Worlds are the directed paths of
/// length at most `L` starting at the point; each path is connected to its
/// one-step extensions and carries the valuation of its last element.
pub fn unravel(m: &PointedModel, l: usize) -> TreeModel {
    struct PathNode {
        id: WorldId,
        last: WorldId,
    }

    let mut worlds: Vec<WorldId> = Vec::new();
    let mut edges: Vec<(WorldId, WorldId)> = Vec::new();
    let mut frontier = vec![PathNode {
        id: WorldId::new(escape_segment(m.point().as_str())),
        last: m.point().clone(),
    }];
    worlds.push(frontier[0].id.clone());
    let mut valuation: BTreeMap<String, std::collections::BTreeSet<WorldId>> = BTreeMap::new();
    let mut record_label = |id: &WorldId, last: &WorldId| {
        for prop in m.signature().props() {
            if m.satisfies_prop(last, prop) {
                valuation
                    .entry(prop.clone())
                    .or_default()
                    .insert(id.clone());
            }
        }
    };
    record_label(&frontier[0].id, &frontier[0].last);

    for _ in 0..l {
        let mut next = Vec::new();
        for node in &frontier {
            for succ in m.successors(&node.last) {
                let id = WorldId::new(format!(
                    "{}/{}",
                    node.id.as_str(),
                    escape_segment(succ.as_str())
                ));
                worlds.push(id.clone());
                edges.push((node.id.clone(), id.clone()));
                record_label(&id, succ);
                next.push(PathNode {
                    id,
                    last: succ.clone(),
                });
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let point = worlds[0].clone();
    let base = PointedModel::new(m.signature().clone(), worlds, edges, valuation, point)
        .expect("unravelling is a valid model");
    as_tree(&base).expect("unravelling is tree-shaped")
}

/// Number of worlds at exactly distance `d` from the root.
pub fn world_count_at_depth(t: &TreeModel, d: usize) -> Result<usize, UnravelError> {
    if d > t.height() {
        return Err(UnravelError::DepthOutOfRange(d, t.height()));
    }
    Ok(t.base().worlds().iter().filter(|w| t.depth(w) == d).count())
}
