//! Compile negation-free graded formulas into certified positive-weight
//! networks.
//!
//! One network coordinate per distinct subformula. On binary inputs every
//! defined coordinate is exactly 0 or 1 after the layer that computes it:
//! conjunction is `ReLU(x + y - 1)`, disjunction `ReLU(x + y)` clamped at
//! one, and a grade-k diamond sums the child coordinate over the
//! neighbourhood and tests it against `k` via `ReLU(sum - (k - 1))`, again
//! clamped. A final projection layer isolates the root coordinate, so the
//! all-coordinates threshold rule reads a single value against `>= 1`.
//!
//! The plain-modal variant (`use_max`) swaps SUM for MAX aggregation; it
//! requires every grade to be one.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::formula::{classify, Formula};
use crate::kripke::Signature;

use super::{Aggregation, Classifier, GnnError, GnnLayer, GnnModel, Rational};

struct Table {
    subformulas: Vec<Formula>,
    index: HashMap<Formula, usize>,
    stage: Vec<usize>,
}

impl Table {
    fn collect(f: &Formula) -> Table {
        let mut t = Table {
            subformulas: Vec::new(),
            index: HashMap::new(),
            stage: Vec::new(),
        };
        t.visit(f);
        t
    }

    fn visit(&mut self, f: &Formula) -> usize {
        if let Some(i) = self.index.get(f) {
            return *i;
        }
        let stage = match f {
            Formula::True | Formula::False | Formula::Prop(_) => 1,
            Formula::And(x, y) | Formula::Or(x, y) => {
                let ix = self.visit(x);
                let iy = self.visit(y);
                1 + self.stage[ix].max(self.stage[iy])
            }
            Formula::Diamond(_, x) => {
                let ix = self.visit(x);
                1 + self.stage[ix]
            }
            Formula::Not(_) => unreachable!("checked positive before compiling"),
        };
        let i = self.subformulas.len();
        self.subformulas.push(f.clone());
        self.index.insert(f.clone(), i);
        self.stage.push(stage);
        i
    }
}

fn zeros(rows: usize, cols: usize) -> Vec<Vec<Rational>> {
    vec![vec![Rational::zero(); cols]; rows]
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Build the network for a negation-free graded formula against an explicit
/// signature: feature `i` stands for the `i`-th proposition, so the network
/// runs on graphs of dimension `signature.len()` (at least one).
pub fn compile_formula_with_signature(
    f: &Formula,
    signature: &Signature,
    use_max: bool,
) -> Result<GnnModel, GnnError> {
    let report = classify(f);
    if !report.in_exists_pos_gml {
        return Err(GnnError::FragmentViolation(
            "the compiler accepts negation-free graded formulas only".into(),
        ));
    }
    if use_max && !report.in_exists_pos_ml {
        return Err(GnnError::FragmentViolation(
            "MAX-aggregation compilation needs every grade to be one".into(),
        ));
    }
    for p in f.props() {
        if !signature.contains(&p) {
            return Err(GnnError::Schema(format!(
                "formula proposition {p:?} is not in the signature"
            )));
        }
    }

    let props: Vec<String> = signature.props().to_vec();
    let input_dim = props.len().max(1);
    let prop_index: HashMap<&str, usize> = props
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();

    let table = Table::collect(f);
    let width = table.subformulas.len();
    let total_stages = table.stage.iter().copied().max().unwrap_or(1);
    let agg = if use_max {
        Aggregation::Max
    } else {
        Aggregation::Sum
    };

    let mut layers = Vec::new();
    for stage in 1..=total_stages {
        let in_dim = if stage == 1 { input_dim } else { width };
        let mut a = zeros(in_dim, width);
        let mut c = zeros(in_dim, width);
        let mut b = vec![Rational::zero(); width];
        for (s, formula) in table.subformulas.iter().enumerate() {
            if table.stage[s] < stage {
                // Already computed: carry the 0/1 value forward.
                a[s][s] = Rational::one();
                continue;
            }
            if table.stage[s] > stage {
                continue;
            }
            match formula {
                Formula::True => b[s] = Rational::one(),
                Formula::False => {}
                Formula::Prop(p) => {
                    a[prop_index[p.as_str()]][s] = Rational::one();
                }
                Formula::And(x, y) => {
                    a[table.index[x]][s] += Rational::one();
                    a[table.index[y]][s] += Rational::one();
                    b[s] = int(-1);
                }
                Formula::Or(x, y) => {
                    a[table.index[x]][s] += Rational::one();
                    a[table.index[y]][s] += Rational::one();
                }
                Formula::Diamond(k, x) => {
                    c[table.index[x]][s] = Rational::one();
                    b[s] = int(1 - i64::from(*k));
                }
                Formula::Not(_) => unreachable!(),
            }
        }
        layers.push(GnnLayer {
            agg: agg.clone(),
            a,
            c,
            b,
            clip: Some(Rational::one()),
        });
    }

    // Projection onto the root coordinate.
    let root = table.index[f];
    let mut a = zeros(width, 1);
    a[root][0] = Rational::one();
    layers.push(GnnLayer {
        agg,
        a,
        c: zeros(width, 1),
        b: vec![Rational::zero()],
        clip: None,
    });

    GnnModel::new(
        input_dim,
        layers,
        Classifier {
            threshold: Rational::one(),
            strict: false,
        },
    )
}

/// [`compile_formula_with_signature`] against the formula's own
/// propositions in sorted name order.
pub fn compile_formula_to_gnn(f: &Formula, use_max: bool) -> Result<GnnModel, GnnError> {
    let signature = Signature::new(f.props().into_iter().collect())
        .map_err(|e| GnnError::Schema(e.to_string()))?;
    compile_formula_with_signature(f, &signature, use_max)
}
