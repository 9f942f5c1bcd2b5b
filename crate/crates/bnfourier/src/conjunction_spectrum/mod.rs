//! Fourier coefficients and spectral norms of conjunctions.

mod bounds;
mod certificates;
mod chain;

pub use bounds::{l1_bounds, Bound, BoundInputs, BoundSet};
pub use certificates::{
    chain_factor, gstar_composite, gstar_factorization_check, lower_bound_certificates, unbounded_chain_l1_lower,
    unbounded_chain_net, CertificateRow, GStarCheck, UNBOUNDED_C, UNBOUNDED_MU1,
};
pub use chain::{chain_coefficient, chain_path, chain_spectral_norm_exact, chain_sum_coefficients, RecursiveTerms};

use serde::{Deserialize, Serialize};

use crate::bn_model::{sigma_of, Assignment, BayesNet};
use crate::error::{Error, Result};
use crate::fourier_basis::{ExactCube, IndexSet};

/// ⋀_{i∈T₁} x_i ⋀_{j∈T₀} ¬x_j
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conjunction {
    pub t1: IndexSet,
    pub t0: IndexSet,
}

impl Conjunction {
    pub fn new(t1: IndexSet, t0: IndexSet) -> Result<Self> {
        if !t1.intersect(t0).is_empty() {
            return Err(Error::Contract(format!(
                "variables {} appear both positive and negated",
                t1.intersect(t0)
            )));
        }
        Ok(Conjunction { t1, t0 })
    }

    /// Always true.
    pub fn empty() -> Self {
        Conjunction::default()
    }

    pub fn literal(v: usize, positive: bool) -> Self {
        if positive {
            Conjunction {
                t1: IndexSet::singleton(v),
                t0: IndexSet::EMPTY,
            }
        } else {
            Conjunction {
                t1: IndexSet::EMPTY,
                t0: IndexSet::singleton(v),
            }
        }
    }

    /// From 1-based signed literals, e.g. `[3, -7]` is x_2 ∧ ¬x_6.
    pub fn from_signed(lits: &[i64]) -> Result<Self> {
        let mut t1 = IndexSet::EMPTY;
        let mut t0 = IndexSet::EMPTY;
        for &l in lits {
            if l == 0 || l.unsigned_abs() > 64 {
                return Err(Error::Shape(format!("literal {l} out of range")));
            }
            let v = (l.unsigned_abs() - 1) as usize;
            if l > 0 {
                t1.insert(v);
            } else {
                t0.insert(v);
            }
        }
        Conjunction::new(t1, t0)
    }

    pub fn to_signed(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self
            .vars()
            .iter()
            .map(|v| {
                if self.t1.contains(v) {
                    v as i64 + 1
                } else {
                    -(v as i64 + 1)
                }
            })
            .collect();
        out.sort_by_key(|l| l.abs());
        out
    }

    pub fn vars(&self) -> IndexSet {
        self.t1.union(self.t0)
    }

    pub fn d(&self) -> usize {
        self.vars().len()
    }

    #[inline]
    pub fn eval(&self, x: Assignment) -> bool {
        x & self.t1.0 == self.t1.0 && x & self.t0.0 == 0
    }

    /// Two conjunctions can never both hold.
    pub fn contradicts(&self, o: &Conjunction) -> bool {
        !self.t1.intersect(o.t0).is_empty() || !self.t0.intersect(o.t1).is_empty()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.vars().max_index()
    }
}

/// ∏_{T₁}(μ_i+σ_i) ∏_{T₀}((1-μ_j)+σ_j): the exact L1 of a conjunction under
/// a product distribution.
pub fn product_spectral_norm(mus: &[f64], f: &Conjunction) -> Result<f64> {
    if let Some(m) = f.max_var() {
        if m >= mus.len() {
            return Err(Error::Shape(format!(
                "conjunction uses variable {m} but n = {}",
                mus.len()
            )));
        }
    }
    let pos: f64 = f.t1.iter().map(|i| mus[i] + sigma_of(mus[i])).product();
    let neg: f64 = f.t0.iter().map(|j| 1.0 - mus[j] + sigma_of(mus[j])).product();
    Ok(pos * neg)
}

/// Exact E_D[f] for a conjunction, by enumeration.
pub fn conjunction_expectation(cube: &ExactCube, f: &Conjunction) -> f64 {
    cube.probs()
        .iter()
        .enumerate()
        .filter(|(x, _)| f.eval(*x as u64))
        .map(|(_, p)| p)
        .sum()
}

pub fn conjunction_table(cube: &ExactCube, f: &Conjunction) -> Vec<f64> {
    cube.table(&|x| f.eval(x) as u64 as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JuntaReport {
    pub k: usize,
    pub d: usize,
    pub nonzero: usize,
    pub count_bound: f64,
    pub l1: f64,
    pub l1_bound: f64,
    /// nonzero coefficients on sets reaching outside C ∪ J
    pub outside: usize,
}

impl JuntaReport {
    pub fn pass(&self) -> bool {
        self.outside == 0 && (self.nonzero as f64) <= self.count_bound && self.l1 <= self.l1_bound + 1e-12
    }
}

/// Enumerated sparsity and L1 of a conjunction under a net whose variables
/// outside `junta` only have parents inside it.
pub fn kjunta_check(net: &BayesNet, junta: IndexSet, f: &Conjunction, tol: f64) -> Result<JuntaReport> {
    for v in 0..net.n() {
        if !junta.contains(v) && net.parents(v).iter().any(|&p| !junta.contains(p)) {
            return Err(Error::Contract(format!("variable {v} has a parent outside the junta")));
        }
    }
    let cube = ExactCube::new(net)?;
    let spec = cube.spectrum_dense(&conjunction_table(&cube, f));
    let allowed = f.vars().union(junta);
    let (k, d) = (junta.len(), f.d());
    let mut nonzero = 0;
    let mut outside = 0;
    let mut l1 = 0.0;
    for (s, &c) in spec.iter().enumerate() {
        if c.abs() <= tol {
            continue;
        }
        nonzero += 1;
        l1 += c.abs();
        if !IndexSet(s as u64).is_subset(allowed) {
            outside += 1;
        }
    }
    Ok(JuntaReport {
        k,
        d,
        nonzero,
        count_bound: 2f64.powi((k + d) as i32),
        l1,
        l1_bound: 2f64.powf((k + d) as f64 / 2.0),
        outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{make_product, random, seeded};

    #[test]
    fn conjunction_basics() {
        let f = Conjunction::from_signed(&[1, -2]).unwrap();
        assert!(f.eval(0b01) && !f.eval(0b11) && !f.eval(0b00));
        assert_eq!(f.to_signed(), vec![1, -2]);
        assert!(Conjunction::from_signed(&[3, -3]).is_err());
        assert!(Conjunction::empty().eval(12345));
        let g = Conjunction::from_signed(&[2]).unwrap();
        assert!(f.contradicts(&g));
    }

    #[test]
    fn product_norm_examples() {
        let f = Conjunction::literal(0, true);
        assert!((product_spectral_norm(&[0.9], &f).unwrap() - 1.2).abs() < 1e-15);
        let g = Conjunction::from_signed(&[1, -2, 3]).unwrap();
        assert!((product_spectral_norm(&[0.5; 3], &g).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_norm_matches_enumeration() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let net = random::product(6, 0.05, &mut rng);
            let mus: Vec<f64> = (0..6).map(|v| net.cpt(v)[0]).collect();
            let f = Conjunction::from_signed(&[1, -3, 6]).unwrap();
            let cube = ExactCube::new(&make_product(&mus).unwrap()).unwrap();
            let l1: f64 = cube
                .spectrum_dense(&conjunction_table(&cube, &f))
                .iter()
                .map(|c| c.abs())
                .sum();
            let closed = product_spectral_norm(&mus, &f).unwrap();
            assert!((l1 - closed).abs() < 1e-10);
            assert!(closed <= 1.21f64.powi(3));
        }
    }

    #[test]
    fn junta_sparsity() {
        let mut rng = seeded(9);
        for k in 0..=3 {
            let net = random::kjunta(8, k, 0.1, &mut rng);
            let junta = IndexSet((1u64 << k) - 1);
            let f = Conjunction::from_signed(&[5, -8]).unwrap();
            let r = kjunta_check(&net, junta, &f, 1e-12).unwrap();
            assert!(r.pass(), "{r:?}");
        }
    }
}
