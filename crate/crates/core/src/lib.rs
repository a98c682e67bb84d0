//! Toolkit for finite pointed Kripke models and graded modal logic:
//! bounded unravelling, bisimulation and type refinement, morphism search,
//! characteristic formulas, pruning, minimal-model synthesis of defining
//! formulas, and monotone aggregate-combine networks over exact rationals
//! with a formula compiler.
//!
//! Everything operates on immutable values through pure functions; all
//! outputs are deterministic functions of their inputs.

pub mod charform;
pub mod equivalence;
pub mod formula;
pub mod gnn;
pub mod kripke;
pub mod morphisms;
pub mod synthesis;
pub mod unravelling;

pub use charform::{
    char_exists_gml, char_exists_pos_gml, char_exists_pos_ml, char_gml_per_class, prune,
    prune_ordered, CharVariant, PruneOrder,
};
pub use equivalence::{
    are_l_bisimilar, l_bisimilar, refine_types, BisimulationWitness, Logic, TypePartition,
};
pub use formula::{
    check, classify, depth, enumerate_formulas, parse_formula, Formula, FormulaEnumeration,
    FormulaError, FragmentReport,
};
pub use gnn::{
    compile_formula_to_gnn, compile_formula_with_signature, dump_gnn, dump_graph, evaluate_gnn,
    graph_to_kripke, kripke_to_graph, load_gnn, load_graph, multiset_leq,
    positive_weight_certificate, Aggregation, Classifier, FeatureGraph, GnnError, GnnLayer,
    GnnModel, LayerTrace, NodeId, Rational,
};
pub use kripke::{
    as_tree, canonical_key, dump_model, load_model, ModelError, PointedModel, Signature, TreeModel,
    WorldId,
};
pub use morphisms::{
    find_morphism, tree_preorder, verify_witness, MorphismError, MorphismKind, Witness,
};
pub use synthesis::{
    antichain_family, check_preservation, enumerate_models, minimal_models, synthesize,
    Counterexample, EnumerationSpec, GeneratorSet, PreservationClass, SynthesisError,
};
pub use unravelling::{unravel, world_count_at_depth, UnravelError};
