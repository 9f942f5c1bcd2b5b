//! Closed forms for conjunctions under chain distributions.
//!
//! Positions along the chain are 1-based; position 0 is a virtual root
//! whose value does not matter, which is the same as saying the real root
//! has μ(0) = μ(1) and so D = 0.

use super::Conjunction;
use crate::bn_model::{sigma_of, BayesNet, Structure};
use crate::error::{contract, Result};
use crate::fourier_basis::IndexSet;

/// Variables along the chain, root first.
pub fn chain_path(net: &BayesNet) -> Result<Vec<usize>> {
    match net.structure() {
        Structure::Chain => {}
        Structure::Product if net.n() == 1 => {}
        s => return contract(format!("closed form needs a chain, got {}", s.as_str())),
    }
    let root = (0..net.n())
        .find(|&v| net.parents(v).is_empty())
        .expect("chain has a root");
    let mut path = vec![root];
    while let Some(&c) = net.children(*path.last().unwrap()).first() {
        path.push(c);
    }
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Free,
    /// in S, not in T
    Phi,
    Pos,
    Neg,
    PosPhi,
    NegPhi,
}

/// Per-position values A_i(0), A_i(1), D_i for one (chain, f, S) query,
/// with the derived products D' and hierarchical sums A'.
#[derive(Clone, Debug)]
pub struct RecursiveTerms {
    pub a0: Vec<f64>,
    pub a1: Vec<f64>,
    pub d: Vec<f64>,
    // μ rows per position, used for the free nodes inside A'
    mu0: Vec<f64>,
    dmu: Vec<f64>,
}

fn rows(net: &BayesNet, v: usize) -> (f64, f64) {
    let c = net.cpt(v);
    if c.len() == 1 {
        (c[0], c[0])
    } else {
        (c[0], c[1])
    }
}

fn a_values(kind: Kind, m0: f64, m1: f64) -> (f64, f64) {
    let (s0, s1) = (sigma_of(m0), sigma_of(m1));
    match kind {
        Kind::Free | Kind::Pos => (m0, m1),
        Kind::Neg => (1.0 - m0, 1.0 - m1),
        Kind::Phi | Kind::PosPhi => (s0, s1),
        Kind::NegPhi => (-s0, -s1),
    }
}

impl RecursiveTerms {
    fn build(net: &BayesNet, path: &[usize], kinds: &[Kind]) -> Self {
        let n = path.len();
        let mut t = RecursiveTerms {
            a0: vec![0.0; n + 1],
            a1: vec![0.0; n + 1],
            d: vec![0.0; n + 1],
            mu0: vec![0.0; n + 1],
            dmu: vec![0.0; n + 1],
        };
        for (i, &v) in path.iter().enumerate() {
            let (m0, m1) = rows(net, v);
            let (a0, a1) = a_values(kinds[i], m0, m1);
            t.a0[i + 1] = a0;
            t.a1[i + 1] = a1;
            t.d[i + 1] = a1 - a0;
            t.mu0[i + 1] = m0;
            t.dmu[i + 1] = m1 - m0;
        }
        t
    }

    /// Terms for f and S given as variable sets.
    pub fn new(net: &BayesNet, f: &Conjunction, s: IndexSet) -> Result<Self> {
        let path = chain_path(net)?;
        let kinds: Vec<Kind> = path.iter().map(|&v| kind_of(f, s, v)).collect();
        Ok(Self::build(net, &path, &kinds))
    }

    /// ∏_{ℓ=r}^{a} D_ℓ, 1 when r > a.
    pub fn dprime(&self, r: usize, a: usize) -> f64 {
        (r..=a).map(|l| self.d[l]).product()
    }

    /// Σ_{ℓ=r}^{a} D'_{ℓ+1,a} A_ℓ(0). Nodes r..a-1 are read as free
    /// whatever their kind, which is how the segment formula uses them.
    pub fn aprime0(&self, r: usize, a: usize) -> f64 {
        self.aprime(r, a, false)
    }

    /// A'(0) + D'_{r,a}
    pub fn aprime1(&self, r: usize, a: usize) -> f64 {
        self.aprime(r, a, true)
    }

    pub fn aprime(&self, r: usize, a: usize, y: bool) -> f64 {
        let mut acc = self.a0[a];
        let mut slope = self.d[a];
        for l in (r..a).rev() {
            acc += self.mu0[l] * slope;
            slope *= self.dmu[l];
        }
        if y {
            acc + slope
        } else {
            acc
        }
    }
}

fn kind_of(f: &Conjunction, s: IndexSet, v: usize) -> Kind {
    match (s.contains(v), f.t1.contains(v), f.t0.contains(v)) {
        (false, false, false) => Kind::Free,
        (true, false, false) => Kind::Phi,
        (false, true, _) => Kind::Pos,
        (false, _, true) => Kind::Neg,
        (true, true, _) => Kind::PosPhi,
        (true, _, true) => Kind::NegPhi,
    }
}

/// f̂_S by the segment product. Zero when S reaches past the last literal.
pub fn chain_coefficient(net: &BayesNet, f: &Conjunction, s: IndexSet) -> Result<f64> {
    let path = chain_path(net)?;
    let pos_of = positions(net, &path);
    let tpos: Vec<usize> = sorted_positions(&pos_of, f.vars());
    let spos: Vec<usize> = sorted_positions(&pos_of, s);
    let last_t = tpos.last().copied().unwrap_or(0);
    if spos.last().is_some_and(|&m| m > last_t) {
        return Ok(0.0);
    }
    if tpos.is_empty() {
        return Ok(1.0);
    }
    let kinds: Vec<Kind> = path.iter().map(|&v| kind_of(f, s, v)).collect();
    let terms = RecursiveTerms::build(net, &path, &kinds);
    let mut prev = 0usize;
    let mut y = false;
    let mut out = 1.0;
    for &t in &tpos {
        let h = spos.iter().copied().find(|&p| p > prev && p < t).unwrap_or(t);
        out *= terms.dprime(h + 1, t) * terms.aprime(prev + 1, h, y);
        y = f.t1.contains(path[t - 1]);
        prev = t;
    }
    Ok(out)
}

fn positions(net: &BayesNet, path: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; net.n()];
    for (i, &v) in path.iter().enumerate() {
        pos[v] = i + 1;
    }
    pos
}

fn sorted_positions(pos_of: &[usize], s: IndexSet) -> Vec<usize> {
    let mut p: Vec<usize> = s.iter().map(|v| pos_of[v]).collect();
    p.sort_unstable();
    p
}

/// Σ_S |f̂_S| as a product over segments.
///
/// Within the segment (t_{i-1}, t_i] the sets split by h_i: either S misses
/// the open interval (then t_i ∈ S or not), or h_i = k is its first element,
/// after which each later interior node contributes |Dμ| or |Dσ|
/// independently. Sign cancellation never enters because each choice of S
/// yields one product, so the sum of absolute values factorizes.
pub fn chain_spectral_norm_exact(net: &BayesNet, f: &Conjunction) -> Result<f64> {
    let path = chain_path(net)?;
    let pos_of = positions(net, &path);
    let tpos = sorted_positions(&pos_of, f.vars());
    // two term tables: every interior node free, or every interior node in S
    let base: Vec<Kind> = path.iter().map(|&v| kind_of(f, IndexSet::EMPTY, v)).collect();
    let with_s: Vec<Kind> = path.iter().map(|&v| kind_of(f, IndexSet(u64::MAX), v)).collect();
    let free = RecursiveTerms::build(net, &path, &base);
    let phi = RecursiveTerms::build(net, &path, &with_s);

    let mut prev = 0usize;
    let mut y = false;
    let mut total = 1.0;
    for &t in &tpos {
        let r = prev + 1;
        // |Dμ|+|Dσ| over (k, t], cumulative from the right
        let mut seg = free.aprime(r, t, y).abs() + phi.aprime(r, t, y).abs();
        let mut tail = free.d[t].abs() + phi.d[t].abs();
        for k in (r..t).rev() {
            seg += phi.aprime(r, k, y).abs() * tail;
            tail *= free.d[k].abs() + phi.d[k].abs();
        }
        total *= seg;
        y = f.t1.contains(path[t - 1]);
        prev = t;
    }
    Ok(total)
}

/// Σ_S f̂_S (signed) for f = the last variable of the chain:
/// Σ_k (μ_{k,0}+σ_{k,0}) ∏_{ℓ>k} (D_{ℓ,μ}+D_{ℓ,σ}).
pub fn chain_sum_coefficients(net: &BayesNet, f: &Conjunction) -> Result<f64> {
    let path = chain_path(net)?;
    let last = *path.last().unwrap();
    if *f != Conjunction::literal(last, true) {
        return contract("chain_sum_coefficients needs f = the last variable of the chain");
    }
    let mut total = 0.0;
    let mut carry = 1.0;
    for &v in path.iter().rev() {
        let (m0, m1) = rows(net, v);
        total += (m0 + sigma_of(m0)) * carry;
        carry *= (m1 - m0) + (sigma_of(m1) - sigma_of(m0));
    }
    Ok(total)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bn_model::{make_chain, make_homogeneous_chain, random, seeded};
    use crate::conjunction_spectrum::conjunction_table;
    use crate::fourier_basis::ExactCube;
    use rand::Rng;

    /// Backward 2-vector recursion; independent of the segment bookkeeping.
    pub(crate) fn transfer(net: &BayesNet, f: &Conjunction, s: IndexSet) -> f64 {
        let path = chain_path(net).unwrap();
        let mut w = (1.0, 1.0);
        for &v in path.iter().rev() {
            let (m0, m1) = rows(net, v);
            let e = |m: f64| -> (f64, f64) {
                let sg = sigma_of(m);
                match kind_of(f, s, v) {
                    Kind::Free => (1.0 - m, m),
                    Kind::Pos => (0.0, m),
                    Kind::Neg => (1.0 - m, 0.0),
                    Kind::Phi => (-sg, sg),
                    Kind::PosPhi => (0.0, sg),
                    Kind::NegPhi => (-sg, 0.0),
                }
            };
            let (a, b) = (e(m0), e(m1));
            w = (a.0 * w.0 + a.1 * w.1, b.0 * w.0 + b.1 * w.1);
        }
        w.0
    }

    pub(crate) fn random_conj(n: usize, d: usize, rng: &mut impl Rng) -> Conjunction {
        let mut vars: Vec<usize> = (0..n).collect();
        let mut t1 = IndexSet::EMPTY;
        let mut t0 = IndexSet::EMPTY;
        for _ in 0..d.min(n) {
            let v = vars.swap_remove(rng.gen_range(0..vars.len()));
            if rng.gen::<bool>() {
                t1.insert(v);
            } else {
                t0.insert(v);
            }
        }
        Conjunction { t1, t0 }
    }

    #[test]
    fn recursive_terms_invariants() {
        let net = random::chain(6, 0.1, 0.3, &mut seeded(1));
        let f = Conjunction::from_signed(&[2, -5]).unwrap();
        let t = RecursiveTerms::new(&net, &f, IndexSet::from_indices([3])).unwrap();
        // ranges whose interior holds no literal and no element of S
        for (r, a) in [(1, 1), (1, 2), (3, 4), (5, 5), (6, 6)] {
            assert!((t.aprime1(r, a) - t.aprime0(r, a) - t.dprime(r, a)).abs() < 1e-15);
        }
        for r in 1..=6 {
            assert_eq!(t.dprime(r, r - 1), 1.0);
        }
        assert_eq!(t.d[1], 0.0);
    }

    #[test]
    fn closed_form_matches_transfer_and_enumeration() {
        let mut rng = seeded(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=7);
            let net = random::chain(n, 0.05, 0.45, &mut rng);
            let d = rng.gen_range(0..=4);
            let f = random_conj(n, d, &mut rng);
            let cube = ExactCube::new(&net).unwrap();
            let spec = cube.spectrum_dense(&conjunction_table(&cube, &f));
            for s in 0..1u64 << n {
                let c = chain_coefficient(&net, &f, IndexSet(s)).unwrap();
                assert!((c - spec[s as usize]).abs() < 1e-9, "n={n} f={f:?} s={s}");
                assert!((c - transfer(&net, &f, IndexSet(s))).abs() < 1e-12);
            }
            let l1: f64 = spec.iter().map(|c| c.abs()).sum();
            assert!((chain_spectral_norm_exact(&net, &f).unwrap() - l1).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rule_is_exact() {
        let net = random::chain(6, 0.1, 0.3, &mut seeded(2));
        let f = Conjunction::from_signed(&[2, -4]).unwrap();
        assert_eq!(
            chain_coefficient(&net, &f, IndexSet::from_indices([0, 5])).unwrap(),
            0.0
        );
    }

    #[test]
    fn literal_under_equal_rows() {
        let net = make_chain(0.3, &[(0.6, 0.6), (0.8, 0.8)]).unwrap();
        let f = Conjunction::literal(2, true);
        assert!((chain_coefficient(&net, &f, IndexSet::EMPTY).unwrap() - 0.8).abs() < 1e-15);
        let single = make_chain(0.9, &[]).unwrap();
        let g = Conjunction::literal(0, true);
        assert!((chain_spectral_norm_exact(&single, &g).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(chain_spectral_norm_exact(&net, &Conjunction::empty()).unwrap(), 1.0);
    }

    #[test]
    fn sum_of_coefficients() {
        let prod = make_chain(0.2, &[(0.7, 0.7), (0.9, 0.9)]).unwrap();
        let f = Conjunction::literal(2, true);
        assert!((chain_sum_coefficients(&prod, &f).unwrap() - 1.2).abs() < 1e-12);

        let net = make_homogeneous_chain(10, 0.07, 0.56).unwrap();
        let dm = 0.49 + sigma_of(0.56) - sigma_of(0.07);
        assert!((dm - 0.731).abs() < 5e-4);

        let mut rng = seeded(4);
        let net2 = random::chain(10, 0.05, 0.45, &mut rng);
        let f2 = Conjunction::literal(9, true);
        let cube = ExactCube::new(&net2).unwrap();
        let total: f64 = cube.spectrum_dense(&conjunction_table(&cube, &f2)).iter().sum();
        assert!((chain_sum_coefficients(&net2, &f2).unwrap() - total).abs() < 1e-9);
        assert!(chain_sum_coefficients(&net, &Conjunction::literal(3, true)).is_err());
    }

    #[test]
    fn non_chain_rejected() {
        let net = random::dag(5, 2, 0.1, &mut seeded(0));
        let f = Conjunction::literal(0, true);
        assert!(chain_coefficient(&net, &f, IndexSet::EMPTY).is_err());
    }
}
