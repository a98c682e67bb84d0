//! Shared inputs for the benchmark suite.

use kripkit_core::*;

pub const REFERENCE_MODEL: &str = r#"{"signature":["p1","p2"],"worlds":["w","v2","v3","v4"],"edges":[["w","v2"],["w","v3"],["v3","w"],["w","v4"]],"valuation":{"p1":["v2","v4"],"p2":["v3"]},"point":"w"}"#;

pub fn reference_model() -> PointedModel {
    load_model(REFERENCE_MODEL).unwrap()
}

pub fn tree_suite() -> Vec<TreeModel> {
    let spec = EnumerationSpec {
        signature: Signature::numbered(1),
        max_worlds: None,
        tree_only: true,
        max_height: Some(2),
        max_branching: Some(2),
    };
    enumerate_models(&spec)
        .unwrap()
        .map(|m| as_tree(&m).unwrap())
        .collect()
}
