//! Graded modal formulas: AST, concrete syntax, depth, fragment
//! classification and the satisfaction checker.
//!
//! Concrete grammar (precedence: unary > `&` > `|`, both left-associative):
//!
//! ```text
//! formula := disj ; disj := conj ("|" conj)* ; conj := unary ("&" unary)* ;
//! unary   := "~" unary | "<" INT ">" unary | "<>" unary | atom ;
//! atom    := IDENT | "true" | "false" | "(" formula ")" ;      INT >= 1
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kripke::PointedModel;

/// Formula of graded modal logic. `Diamond(k, f)` holds when at least `k`
/// distinct successors satisfy `f`; `Diamond(1, _)` prints as `<>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Diamond(u32, Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn diamond(grade: u32, f: Formula) -> Self {
        assert!(grade >= 1, "diamond grade must be at least 1");
        Formula::Diamond(grade, Box::new(f))
    }

    /// Right-fold a conjunct list, dropping `True` units; empty becomes `True`.
    pub fn conj(parts: Vec<Formula>) -> Self {
        let parts: Vec<Formula> = parts.into_iter().filter(|f| *f != Formula::True).collect();
        match parts.len() {
            0 => Formula::True,
            _ => {
                let mut it = parts.into_iter().rev();
                let mut acc = it.next().unwrap();
                for f in it {
                    acc = Formula::and(f, acc);
                }
                acc
            }
        }
    }

    /// Right-fold a disjunct list; empty becomes `False`.
    pub fn disj(parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            _ => {
                let mut it = parts.into_iter().rev();
                let mut acc = it.next().unwrap();
                for f in it {
                    acc = Formula::or(f, acc);
                }
                acc
            }
        }
    }

    /// Proposition names occurring in the formula, sorted.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn walk(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Prop(p) => {
                    out.insert(p.clone());
                }
                Formula::Not(c) | Formula::Diamond(_, c) => walk(c, out),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Formula::True | Formula::False => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

/// Maximum nesting of graded modal operators.
pub fn depth(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => 0,
        Formula::Not(c) => depth(c),
        Formula::And(a, b) | Formula::Or(a, b) => depth(a).max(depth(b)),
        Formula::Diamond(_, c) => 1 + depth(c),
    }
}

/// Fragment membership flags plus modal depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FragmentReport {
    pub in_ml: bool,
    pub in_exists_gml: bool,
    pub in_exists_pos_gml: bool,
    pub in_exists_ml: bool,
    pub in_exists_pos_ml: bool,
    pub depth: usize,
}

/// Structural fragment classification. Negation anywhere is fine for plain
/// modal logic; the existential fragments allow it only on propositions, the
/// positive fragments not at all; any grade above one leaves the `ML`
/// fragments.
pub fn classify(f: &Formula) -> FragmentReport {
    fn scan(f: &Formula, graded: &mut bool, neg_on_prop: &mut bool, neg_other: &mut bool) {
        match f {
            Formula::True | Formula::False | Formula::Prop(_) => {}
            Formula::Not(c) => {
                if matches!(**c, Formula::Prop(_)) {
                    *neg_on_prop = true;
                } else {
                    *neg_other = true;
                }
                scan(c, graded, neg_on_prop, neg_other);
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                scan(a, graded, neg_on_prop, neg_other);
                scan(b, graded, neg_on_prop, neg_other);
            }
            Formula::Diamond(k, c) => {
                if *k > 1 {
                    *graded = true;
                }
                scan(c, graded, neg_on_prop, neg_other);
            }
        }
    }
    let (mut graded, mut neg_on_prop, mut neg_other) = (false, false, false);
    scan(f, &mut graded, &mut neg_on_prop, &mut neg_other);
    let negation_free = !neg_on_prop && !neg_other;
    let exists = !neg_other;
    FragmentReport {
        in_ml: !graded,
        in_exists_gml: exists,
        in_exists_pos_gml: negation_free,
        in_exists_ml: exists && !graded,
        in_exists_pos_ml: negation_free && !graded,
        depth: depth(f),
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn needs_parens_under_unary(f: &Formula) -> bool {
    matches!(f, Formula::And(..) | Formula::Or(..))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(p) => f.write_str(p),
            Formula::Not(c) => {
                if needs_parens_under_unary(c) {
                    write!(f, "~({c})")
                } else {
                    write!(f, "~{c}")
                }
            }
            Formula::Diamond(k, c) => {
                if *k == 1 {
                    f.write_str("<>")?;
                } else {
                    write!(f, "<{k}>")?;
                }
                if needs_parens_under_unary(c) {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Formula::And(a, b) => {
                let print_side = |f: &mut fmt::Formatter<'_>, s: &Formula| match s {
                    Formula::Or(..) => write!(f, "({s})"),
                    _ => write!(f, "{s}"),
                };
                print_side(f, a)?;
                f.write_str(" & ")?;
                print_side(f, b)
            }
            Formula::Or(a, b) => {
                write!(f, "{a} | {b}")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Errors from the formula front end and checker.
#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition {0:?}")]
    UnknownProp(String),
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_formula(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.parse_conj()?;
        while self.eat(b'|') {
            let rhs = self.parse_conj()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_conj(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.parse_unary()?;
        while self.eat(b'&') {
            let rhs = self.parse_unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(b'~') => {
                self.pos += 1;
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(b'<') => {
                self.pos += 1;
                if self.bytes.get(self.pos) == Some(&b'>') {
                    self.pos += 1;
                    return Ok(Formula::diamond(1, self.parse_unary()?));
                }
                let start = self.pos;
                while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    self.pos += 1;
                }
                if self.pos == start {
                    return self.error("expected grade after '<'");
                }
                let grade: u64 =
                    self.src[start..self.pos]
                        .parse()
                        .map_err(|_| FormulaError::Syntax {
                            pos: start,
                            msg: "grade out of range".into(),
                        })?;
                if grade < 1 || grade > u32::MAX as u64 {
                    return Err(FormulaError::Syntax {
                        pos: start,
                        msg: "grade must be at least 1".into(),
                    });
                }
                if self.bytes.get(self.pos) != Some(&b'>') {
                    return self.error("expected '>' after grade");
                }
                self.pos += 1;
                Ok(Formula::diamond(grade as u32, self.parse_unary()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.parse_formula()?;
                if !self.eat(b')') {
                    return self.error("expected ')'");
                }
                Ok(f)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                let word = &self.src[start..self.pos];
                Ok(match word {
                    "true" => Formula::True,
                    "false" => Formula::False,
                    _ => Formula::prop(word),
                })
            }
            Some(_) => self.error("expected a formula"),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parse the concrete syntax described in the module docs.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser::new(text);
    let f = p.parse_formula()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.error("trailing input");
    }
    Ok(f)
}

/// Bounds for [`enumerate_formulas`].
#[derive(Clone, Debug)]
pub struct FormulaEnumeration {
    /// Atom pool; `~p` atoms are included when `with_negated_atoms` is set.
    pub props: Vec<String>,
    pub with_negated_atoms: bool,
    pub with_constants: bool,
    pub max_depth: usize,
    pub max_grade: u32,
    /// Number of AST nodes, counting each atom, connective and diamond.
    pub max_size: usize,
}

/// Every formula over the given atoms built from `&`, `|` and graded
/// diamonds within the size, depth and grade bounds, in a fixed
/// deterministic order. Purely structural: no semantic deduplication.
/// Oracle infrastructure for the exhaustive suites; sizes beyond ~7 explode.
pub fn enumerate_formulas(spec: &FormulaEnumeration) -> Vec<Formula> {
    let mut atoms: Vec<Formula> = Vec::new();
    for p in &spec.props {
        atoms.push(Formula::prop(p.clone()));
        if spec.with_negated_atoms {
            atoms.push(Formula::not(Formula::prop(p.clone())));
        }
    }
    if spec.with_constants {
        atoms.push(Formula::True);
        atoms.push(Formula::False);
    }
    // by_size[s] holds all formulas of exactly s nodes, each with its depth.
    let mut by_size: Vec<Vec<(Formula, usize)>> = vec![Vec::new(); spec.max_size + 1];
    for a in atoms {
        let size = if matches!(a, Formula::Not(_)) { 2 } else { 1 };
        if size <= spec.max_size {
            by_size[size].push((a, 0));
        }
    }
    for size in 2..=spec.max_size {
        let mut grown: Vec<(Formula, usize)> = Vec::new();
        // Diamonds over strictly smaller formulas.
        for (f, d) in &by_size[size - 1] {
            if *d < spec.max_depth {
                for grade in 1..=spec.max_grade {
                    grown.push((Formula::diamond(grade, f.clone()), d + 1));
                }
            }
        }
        // Binary connectives splitting the remaining size budget.
        for left_size in 1..size - 1 {
            let right_size = size - 1 - left_size;
            for (l, dl) in &by_size[left_size] {
                for (r, dr) in &by_size[right_size] {
                    let d = (*dl).max(*dr);
                    grown.push((Formula::and(l.clone(), r.clone()), d));
                    grown.push((Formula::or(l.clone(), r.clone()), d));
                }
            }
        }
        by_size[size].extend(grown);
    }
    by_size.into_iter().flatten().map(|(f, _)| f).collect()
}

// ---------------------------------------------------------------------------
// Satisfaction
// ---------------------------------------------------------------------------

/// Truth of `f` at the distinguished world of `m`, by the inductive
/// semantics; `Diamond(k, g)` asks for at least `k` distinct successors
/// satisfying `g`. Evaluates every subformula over every world once.
pub fn check(f: &Formula, m: &PointedModel) -> Result<bool, FormulaError> {
    for p in f.props() {
        if !m.signature().contains(&p) {
            return Err(FormulaError::UnknownProp(p));
        }
    }
    let worlds = m.worlds();
    let index: std::collections::BTreeMap<_, _> =
        worlds.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let succ: Vec<Vec<usize>> = worlds
        .iter()
        .map(|w| m.successors(w).iter().map(|s| index[s]).collect())
        .collect();

    fn eval(f: &Formula, m: &PointedModel, succ: &[Vec<usize>]) -> Vec<bool> {
        let n = succ.len();
        match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Prop(p) => m.worlds().iter().map(|w| m.satisfies_prop(w, p)).collect(),
            Formula::Not(c) => eval(c, m, succ).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => {
                let va = eval(a, m, succ);
                let vb = eval(b, m, succ);
                va.into_iter().zip(vb).map(|(x, y)| x && y).collect()
            }
            Formula::Or(a, b) => {
                let va = eval(a, m, succ);
                let vb = eval(b, m, succ);
                va.into_iter().zip(vb).map(|(x, y)| x || y).collect()
            }
            Formula::Diamond(k, c) => {
                let vc = eval(c, m, succ);
                (0..n)
                    .map(|w| succ[w].iter().filter(|s| vc[**s]).count() >= *k as usize)
                    .collect()
            }
        }
    }

    let table = eval(f, m, &succ);
    Ok(table[index[m.point()]])
}
