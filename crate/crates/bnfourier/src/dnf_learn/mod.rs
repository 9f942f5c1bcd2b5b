//! DNF and decision-tree targets, membership-query adapters, and the two
//! learners built on heavy-coefficient search.

mod learners;

pub use learners::{
    choose_d, enumerated_l1_table, estimate_error, exact_error, exact_error_under, learn_disjoint_dnf, learn_dnf,
    plan_disjoint, plan_dnf, ptf_construct, truncation_check, L1Form, LearnParams, LearnReport, Plan, PtfConfig,
    PtfReport, PtfStep, TruncationCheck,
};

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bn_model::{bit, Assignment, BayesNet, Rng};
use crate::conjunction_spectrum::Conjunction;
use crate::error::{Error, Result};
use crate::fourier_basis::{eval_sparse, ExactCube, Range, SparseSpectrum};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DnfFormula {
    pub terms: Vec<Conjunction>,
    pub disjoint: bool,
}

impl DnfFormula {
    pub fn new(terms: Vec<Conjunction>) -> Self {
        DnfFormula { terms, disjoint: false }
    }

    /// Marks the formula disjoint after checking that no point satisfies two
    /// terms: syntactically when every pair has a clashing literal, by
    /// enumeration over n variables otherwise.
    pub fn disjoint(terms: Vec<Conjunction>, n: usize) -> Result<Self> {
        let f = DnfFormula { terms, disjoint: true };
        if f.syntactically_disjoint() {
            return Ok(f);
        }
        if n > 24 {
            return Err(Error::Capacity {
                what: "disjointness check n".into(),
                value: n as f64,
                limit: 24.0,
            });
        }
        for x in 0..1u64 << n {
            if f.terms.iter().filter(|t| t.eval(x)).count() > 1 {
                return Err(Error::Contract(format!("terms overlap at x = {x:#b}")));
            }
        }
        Ok(f)
    }

    pub fn syntactically_disjoint(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, a)| self.terms[i + 1..].iter().all(|b| a.contradicts(b)))
    }

    pub fn s(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, x: Assignment) -> bool {
        self.terms.iter().any(|t| t.eval(x))
    }

    pub fn max_term_len(&self) -> usize {
        self.terms.iter().map(|t| t.d()).max().unwrap_or(0)
    }

    /// Drops terms with more than d literals.
    pub fn truncate(&self, d: usize) -> DnfFormula {
        DnfFormula {
            terms: self.terms.iter().copied().filter(|t| t.d() <= d).collect(),
            disjoint: self.disjoint,
        }
    }

    /// One term per line as 1-based signed literals; `true` is the empty
    /// term. A leading `# disjoint` line carries the flag.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.disjoint {
            out.push_str("# disjoint\n");
        }
        for t in &self.terms {
            let lits = t.to_signed();
            if lits.is_empty() {
                out.push_str("true\n");
            } else {
                let parts: Vec<String> = lits
                    .iter()
                    .map(|l| if *l > 0 { format!("+{l}") } else { l.to_string() })
                    .collect();
                let _ = writeln!(out, "{}", parts.join(" "));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut f = DnfFormula::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if c.trim() == "disjoint" {
                    f.disjoint = true;
                }
                continue;
            }
            if line == "true" {
                f.terms.push(Conjunction::empty());
                continue;
            }
            let lits = line
                .split_whitespace()
                .map(|tok| tok.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Shape(format!("line {}: {e}", i + 1)))?;
            f.terms.push(Conjunction::from_signed(&lits)?);
        }
        if f.disjoint && !f.syntactically_disjoint() {
            let n = f.terms.iter().filter_map(|t| t.max_var()).max().map_or(0, |m| m + 1);
            return DnfFormula::disjoint(f.terms, n);
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTree {
    Leaf(bool),
    Node {
        var: usize,
        lo: Box<DecisionTree>,
        hi: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn eval(&self, x: Assignment) -> bool {
        match self {
            DecisionTree::Leaf(b) => *b,
            DecisionTree::Node { var, lo, hi } => {
                if bit(x, *var) == 1 {
                    hi.eval(x)
                } else {
                    lo.eval(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    /// No variable tested twice on a root-to-leaf path.
    pub fn is_valid(&self) -> bool {
        fn go(t: &DecisionTree, seen: u64) -> bool {
            match t {
                DecisionTree::Leaf(_) => true,
                DecisionTree::Node { var, lo, hi } => {
                    seen >> var & 1 == 0 && go(lo, seen | 1 << var) && go(hi, seen | 1 << var)
                }
            }
        }
        go(self, 0)
    }

    /// Paths to 1-leaves, which are disjoint by construction.
    pub fn to_dnf(&self) -> DnfFormula {
        fn go(t: &DecisionTree, path: Conjunction, out: &mut Vec<Conjunction>) {
            match t {
                DecisionTree::Leaf(true) => out.push(path),
                DecisionTree::Leaf(false) => {}
                DecisionTree::Node { var, lo, hi } => {
                    let mut l = path;
                    l.t0.insert(*var);
                    go(lo, l, out);
                    let mut h = path;
                    h.t1.insert(*var);
                    go(hi, h, out);
                }
            }
        }
        let mut terms = Vec::new();
        go(self, Conjunction::empty(), &mut terms);
        DnfFormula { terms, disjoint: true }
    }

    /// Complete tree of the given depth over n variables with random tests
    /// and labels. Sibling leaves with equal labels are allowed.
    pub fn random(n: usize, depth: usize, rng: &mut Rng) -> Self {
        fn go(n: usize, depth: usize, used: u64, rng: &mut Rng) -> DecisionTree {
            if depth == 0 {
                return DecisionTree::Leaf(rng.gen());
            }
            let free: Vec<usize> = (0..n).filter(|v| used >> v & 1 == 0).collect();
            if free.is_empty() {
                return DecisionTree::Leaf(rng.gen());
            }
            let var = free[rng.gen_range(0..free.len())];
            DecisionTree::Node {
                var,
                lo: Box::new(go(n, depth - 1, used | 1 << var, rng)),
                hi: Box::new(go(n, depth - 1, used | 1 << var, rng)),
            }
        }
        go(n, depth, 0, rng)
    }
}

/// Anything that can be queried pointwise as a Boolean function.
pub trait BoolTarget: Sync {
    fn eval_bool(&self, x: Assignment) -> bool;
}

impl BoolTarget for DnfFormula {
    fn eval_bool(&self, x: Assignment) -> bool {
        self.eval(x)
    }
}

impl BoolTarget for DecisionTree {
    fn eval_bool(&self, x: Assignment) -> bool {
        self.eval(x)
    }
}

impl BoolTarget for Conjunction {
    fn eval_bool(&self, x: Assignment) -> bool {
        self.eval(x)
    }
}

/// Pointwise oracle in the requested range (false ↦ 0 or -1, true ↦ 1).
pub fn mq_adapter<'a, T: BoolTarget + ?Sized>(f: &'a T, range: Range) -> impl Fn(Assignment) -> f64 + Sync + 'a {
    move |x| range.encode(f.eval_bool(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clamp {
    None,
    /// z ↦ sign(z)·min(1, |z|)
    P1,
}

/// sign(h) for a sparse h, with sign(0) = -1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignHypothesis {
    pub spectrum: SparseSpectrum,
    pub clamp: Clamp,
}

pub fn p1(z: f64) -> f64 {
    z.clamp(-1.0, 1.0)
}

impl SignHypothesis {
    pub fn value(&self, net: &BayesNet, x: Assignment) -> f64 {
        let v = eval_sparse(&self.spectrum, net, x);
        match self.clamp {
            Clamp::None => v,
            Clamp::P1 => p1(v),
        }
    }

    pub fn predict(&self, net: &BayesNet, x: Assignment) -> f64 {
        if self.value(net, x) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Values over the whole cube, faster than pointwise evaluation.
    pub fn table(&self, cube: &ExactCube) -> Vec<f64> {
        let v = cube.eval_table(&self.spectrum);
        match self.clamp {
            Clamp::None => v,
            Clamp::P1 => v.into_iter().map(p1).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hypothesis serializes")
    }
}
