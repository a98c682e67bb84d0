//! Command-line front end: every library operation behind one executable,
//! with JSON on stdout.
//!
//! Results are emitted as a single JSON object with sorted keys, so a command
//! run twice on the same inputs produces byte-identical output. Boolean query
//! results are data, not exit codes: exit 0 covers both verdicts, 2 is a
//! usage error, 3 a bad input.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use kripkit_core::gnn;
use kripkit_core::*;

#[derive(Parser)]
#[command(
    name = "kripkit",
    about = "Finite Kripke models, graded modal logic and monotone graph networks",
    version
)]
struct Cli {
    /// Seed reserved for randomized suites; the shipped commands are
    /// deterministic and ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Iso,
    Embed,
    Injhom,
    Hom,
}

impl KindArg {
    fn to_kind(self) -> MorphismKind {
        match self {
            KindArg::Iso => MorphismKind::Iso,
            KindArg::Embed => MorphismKind::Embedding,
            KindArg::Injhom => MorphismKind::InjectiveHom,
            KindArg::Hom => MorphismKind::Hom,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SearchKindArg {
    Embed,
    Injhom,
    Hom,
}

impl SearchKindArg {
    fn to_kind(self) -> MorphismKind {
        match self {
            SearchKindArg::Embed => MorphismKind::Embedding,
            SearchKindArg::Injhom => MorphismKind::InjectiveHom,
            SearchKindArg::Hom => MorphismKind::Hom,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyKindArg {
    Injhom,
    Hom,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FragmentArg {
    /// Existential graded: negation on atoms, counting diamonds.
    Egml,
    /// Existential positive graded: no negation.
    Epgml,
    /// Existential positive plain-modal: no negation, grade-one diamonds.
    Epml,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at the distinguished world of a model.
    Check { formula: String, model: PathBuf },
    /// Compute the bounded unravelling of a model.
    Unravel {
        #[arg(short = 'L')]
        depth: usize,
        model: PathBuf,
    },
    /// Characteristic formula of a model at a given depth.
    Charform {
        #[arg(long, value_enum)]
        fragment: FragmentArg,
        #[arg(short = 'L')]
        depth: usize,
        model: PathBuf,
    },
    /// Prune a tree-shaped model.
    Prune { model: PathBuf },
    /// Decide a morphism between two models and print a witness.
    Relate {
        #[arg(long, value_enum)]
        kind: KindArg,
        a: PathBuf,
        b: PathBuf,
    },
    /// Minimal elements of a set of tree-shaped models.
    Minimal {
        #[arg(long, value_enum)]
        kind: SearchKindArg,
        #[arg(required = true)]
        models: Vec<PathBuf>,
    },
    /// Synthesise a defining formula from generator models.
    Synth {
        #[arg(long, value_enum)]
        kind: SearchKindArg,
        #[arg(short = 'L')]
        depth: usize,
        /// Prune minimal trees and emit a plain-modal formula (Embedding only).
        #[arg(long)]
        ml: bool,
        generators: Vec<PathBuf>,
    },
    /// The n-th member of the incomparable-family fixture.
    Antichain {
        #[arg(long, value_enum)]
        kind: FamilyKindArg,
        #[arg(short = 'n')]
        index: usize,
    },
    /// Run a network on a pointed graph.
    GnnEval {
        gnn: PathBuf,
        graph: PathBuf,
        node: String,
    },
    /// Compile a negation-free graded formula into a certified network.
    GnnCompile {
        /// Use MAX aggregation (requires every grade to be one).
        #[arg(long)]
        max: bool,
        /// Ambient propositions ("p,q" or a count); defaults to the
        /// formula's own propositions in sorted order.
        #[arg(long)]
        props: Option<String>,
        formula: String,
    },
    /// Brute-force search for a preservation counterexample.
    Testpres {
        #[arg(long, value_enum)]
        kind: SearchKindArg,
        #[arg(long)]
        bound: usize,
        #[arg(long, conflicts_with = "gnn", required_unless_present = "gnn")]
        formula: Option<String>,
        #[arg(long)]
        gnn: Option<PathBuf>,
    },
    /// Enumerate models up to isomorphism.
    Enumerate {
        /// Proposition names ("p,q") or a count ("2" gives p1, p2).
        #[arg(long)]
        props: String,
        #[arg(long)]
        max_worlds: Option<usize>,
        #[arg(long)]
        tree_only: bool,
        #[arg(long)]
        max_height: Option<usize>,
        #[arg(long)]
        max_branching: Option<usize>,
    },
}

struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn read_model(path: &PathBuf) -> Result<PointedModel, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    load_model(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn read_tree(path: &PathBuf) -> Result<TreeModel, CliError> {
    let m = read_model(path)?;
    as_tree(&m).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn witness_value(w: &Witness) -> Value {
    let mut obj = Map::new();
    for (src, dst) in &w.mapping {
        obj.insert(
            src.as_str().to_string(),
            Value::String(dst.as_str().to_string()),
        );
    }
    Value::Object(obj)
}

fn trace_value(trace: &LayerTrace) -> Value {
    Value::Array(
        trace
            .per_layer
            .iter()
            .map(|layer| {
                let mut obj = Map::new();
                for (node, vector) in layer {
                    obj.insert(
                        node.as_str().to_string(),
                        Value::Array(
                            vector
                                .iter()
                                .map(|x| Value::String(gnn::rational_to_string(x)))
                                .collect(),
                        ),
                    );
                }
                Value::Object(obj)
            })
            .collect(),
    )
}

fn parse_props(text: &str) -> Result<Signature, CliError> {
    if let Ok(count) = text.trim().parse::<usize>() {
        return Ok(Signature::numbered(count));
    }
    let names: Vec<String> = text
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    Signature::new(names).map_err(CliError::from)
}

fn run(command: Command) -> Result<Value, CliError> {
    match command {
        Command::Check { formula, model } => {
            let f = parse_formula(&formula)?;
            let m = read_model(&model)?;
            Ok(json!({ "result": check(&f, &m)? }))
        }
        Command::Unravel { depth, model } => {
            let m = read_model(&model)?;
            let t = unravel(&m, depth);
            Ok(json!({ "result": kripke::model_to_value(t.base()) }))
        }
        Command::Charform {
            fragment,
            depth,
            model,
        } => {
            let m = read_model(&model)?;
            let f = match fragment {
                FragmentArg::Egml => char_exists_gml(&m, depth),
                FragmentArg::Epgml => char_exists_pos_gml(&m, depth),
                FragmentArg::Epml => char_exists_pos_ml(&m, depth),
            };
            Ok(json!({ "result": f.to_string() }))
        }
        Command::Prune { model } => {
            let t = read_tree(&model)?;
            Ok(json!({ "result": kripke::model_to_value(prune(&t).base()) }))
        }
        Command::Relate { kind, a, b } => {
            let (ma, mb) = (read_model(&a)?, read_model(&b)?);
            let witness = find_morphism(kind.to_kind(), &ma, &mb)?;
            Ok(json!({
                "result": witness.is_some(),
                "witness": witness.map(|w| witness_value(&w)).unwrap_or(Value::Null),
            }))
        }
        Command::Minimal { kind, models } => {
            let trees: Vec<TreeModel> = models.iter().map(read_tree).collect::<Result<_, _>>()?;
            let min = minimal_models(&trees, kind.to_kind())?;
            Ok(json!({
                "result": min
                    .iter()
                    .map(|t| kripke::model_to_value(t.base()))
                    .collect::<Vec<_>>(),
            }))
        }
        Command::Synth {
            kind,
            depth,
            ml,
            generators,
        } => {
            let models: Vec<PointedModel> = generators
                .iter()
                .map(read_model)
                .collect::<Result<_, _>>()?;
            let set = GeneratorSet::new(models, kind.to_kind(), depth)?;
            Ok(json!({ "result": synthesize(&set, ml)?.to_string() }))
        }
        Command::Antichain { kind, index } => {
            if index == 0 {
                return Err(CliError("the family is indexed from 1".into()));
            }
            let kind = match kind {
                FamilyKindArg::Injhom => MorphismKind::InjectiveHom,
                FamilyKindArg::Hom => MorphismKind::Hom,
            };
            let t = antichain_family(kind, index)?;
            Ok(json!({ "result": kripke::model_to_value(t.base()) }))
        }
        Command::GnnEval {
            gnn: net,
            graph,
            node,
        } => {
            let net_text = std::fs::read_to_string(&net)
                .map_err(|e| CliError(format!("{}: {e}", net.display())))?;
            let n = gnn::load_gnn(&net_text)?;
            let graph_text = std::fs::read_to_string(&graph)
                .map_err(|e| CliError(format!("{}: {e}", graph.display())))?;
            let g = gnn::load_graph(&graph_text)?;
            let (verdict, trace) = evaluate_gnn(&n, &g, &NodeId::new(node))?;
            Ok(json!({ "result": verdict, "trace": trace_value(&trace) }))
        }
        Command::GnnCompile {
            max,
            props,
            formula,
        } => {
            let f = parse_formula(&formula)?;
            let net = match props {
                Some(text) => compile_formula_with_signature(&f, &parse_props(&text)?, max)?,
                None => compile_formula_to_gnn(&f, max)?,
            };
            Ok(json!({ "result": gnn::gnn_to_value(&net) }))
        }
        Command::Testpres {
            kind,
            bound,
            formula,
            gnn: gnn_path,
        } => {
            let class = match (formula, gnn_path) {
                (Some(f), None) => PreservationClass::Formula(parse_formula(&f)?),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                    PreservationClass::Gnn(gnn::load_gnn(&text)?)
                }
                _ => return Err(CliError("give exactly one of --formula, --gnn".into())),
            };
            let found = check_preservation(&class, kind.to_kind(), bound)?;
            Ok(json!({
                "result": found
                    .map(|cx| {
                        json!({
                            "lhs": kripke::model_to_value(&cx.lhs),
                            "rhs": kripke::model_to_value(&cx.rhs),
                            "witness": witness_value(&cx.witness),
                        })
                    })
                    .unwrap_or(Value::Null),
            }))
        }
        Command::Enumerate {
            props,
            max_worlds,
            tree_only,
            max_height,
            max_branching,
        } => {
            let spec = EnumerationSpec {
                signature: parse_props(&props)?,
                max_worlds,
                tree_only,
                max_height,
                max_branching,
            };
            let models: Vec<Value> = enumerate_models(&spec)?
                .map(|m| kripke::model_to_value(&m))
                .collect();
            Ok(json!({ "result": models }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.seed;
    match run(cli.command) {
        Ok(value) => {
            println!("{}", serde_json::to_string(&value).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
