//! The basis φ_S(x) = ∏_{v∈S} (x_v - μ_{v,pa}) / σ_{v,pa} and exact spectra by
//! enumeration over the cube.

mod approx;
mod sets;

pub use approx::{sparse_square_approx, ApproxReport};
pub use sets::{IndexSet, SparseSpectrum, DROP_TOL};

use crate::bn_model::{bit, Assignment, BayesNet};
use crate::error::{Error, Result};

/// Default enumeration limit for exact operations.
pub const ENUM_LIMIT: usize = 20;
/// Hard limit for dense spectra.
pub const SPECTRUM_LIMIT: usize = 24;

/// Declared range of a Boolean target. Nothing converts between these
/// implicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Range {
    ZeroOne,
    PlusMinus,
}

impl Range {
    pub fn encode(&self, b: bool) -> f64 {
        match (self, b) {
            (_, true) => 1.0,
            (Range::ZeroOne, false) => 0.0,
            (Range::PlusMinus, false) => -1.0,
        }
    }
}

#[inline]
pub fn phi_v(net: &BayesNet, v: usize, x: Assignment) -> f64 {
    let m = net.mu(v, x);
    (bit(x, v) as f64 - m) / (m * (1.0 - m)).sqrt()
}

pub fn basis_eval(net: &BayesNet, s: IndexSet, x: Assignment) -> f64 {
    s.iter().map(|v| phi_v(net, v, x)).product()
}

/// Σ_S c_S φ_S(x)
pub fn eval_sparse(poly: &SparseSpectrum, net: &BayesNet, x: Assignment) -> f64 {
    poly.iter().map(|(s, c)| c * basis_eval(net, s, x)).sum()
}

fn check_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::Capacity {
            what: "enumeration size n".into(),
            value: n as f64,
            limit: limit as f64,
        })
    } else {
        Ok(())
    }
}

/// Precomputed probabilities and per-variable basis values over the whole
/// cube. Everything exact goes through here.
#[derive(Clone, Debug)]
pub struct ExactCube {
    n: usize,
    probs: Vec<f64>,
    // phi[x * n + v] = φ_v(x)
    phi: Vec<f64>,
    // (φ_v at x_v = 0, φ_v at x_v = 1) for every node and cpt row
    phi_rows: Vec<Vec<(f64, f64)>>,
    net: BayesNet,
}

impl ExactCube {
    pub fn new(net: &BayesNet) -> Result<Self> {
        Self::with_limit(net, ENUM_LIMIT)
    }

    pub fn with_limit(net: &BayesNet, limit: usize) -> Result<Self> {
        Self::under(net, net, limit)
    }

    /// Probabilities from `dist`, basis functions from `basis`. Only useful
    /// for diagnosing a basis that does not match its distribution.
    pub fn under(dist: &BayesNet, basis: &BayesNet, limit: usize) -> Result<Self> {
        let n = dist.n();
        if basis.n() != n {
            return Err(Error::Shape("distribution and basis nets differ in n".into()));
        }
        check_limit(n, limit.min(SPECTRUM_LIMIT))?;
        let size = 1usize << n;
        let mut probs = Vec::with_capacity(size);
        let mut phi = Vec::with_capacity(size * n);
        for x in 0..size as u64 {
            probs.push(dist.joint_prob(x));
            for v in 0..n {
                phi.push(phi_v(basis, v, x));
            }
        }
        let phi_rows = (0..n)
            .map(|v| {
                basis
                    .cpt(v)
                    .iter()
                    .map(|&m| {
                        let s = (m * (1.0 - m)).sqrt();
                        (-m / s, (1.0 - m) / s)
                    })
                    .collect()
            })
            .collect();
        Ok(ExactCube {
            n,
            probs,
            phi,
            phi_rows,
            net: basis.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn size(&self) -> usize {
        self.probs.len()
    }
    pub fn net(&self) -> &BayesNet {
        &self.net
    }
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
    #[inline]
    pub fn phi(&self, x: Assignment, v: usize) -> f64 {
        self.phi[x as usize * self.n + v]
    }

    #[inline]
    pub fn basis(&self, s: IndexSet, x: Assignment) -> f64 {
        let row = &self.phi[x as usize * self.n..(x as usize + 1) * self.n];
        s.iter().map(|v| row[v]).product()
    }

    /// Truth table of `f` over the cube.
    pub fn table(&self, f: &dyn Fn(Assignment) -> f64) -> Vec<f64> {
        (0..self.size() as u64).map(f).collect()
    }

    pub fn expect(&self, fx: &[f64]) -> f64 {
        self.probs.iter().zip(fx).map(|(p, v)| p * v).sum()
    }

    pub fn coefficient(&self, fx: &[f64], s: IndexSet) -> f64 {
        (0..self.size())
            .map(|x| self.probs[x] * fx[x] * self.basis(s, x as u64))
            .sum()
    }

    /// All 2^n coefficients, indexed by mask.
    ///
    /// Sums out one variable at a time in reverse topological order. When
    /// variable v is summed out its parents are still cube coordinates, so
    /// φ_v can be read off the index; the children's factors were folded in
    /// earlier and stay indexed by x_v. Cost O(n 2^n).
    pub fn spectrum_dense(&self, fx: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = self.probs.iter().zip(fx).map(|(p, v)| p * v).collect();
        let order = self.net.order().to_vec();
        for &v in order.iter().rev() {
            let vb = 1usize << v;
            let parents = self.net.parents(v);
            let rows = &self.phi_rows[v];
            for i0 in 0..a.len() {
                if i0 & vb != 0 {
                    continue;
                }
                let i1 = i0 | vb;
                let mut r = 0usize;
                for (k, &p) in parents.iter().enumerate() {
                    r |= ((i0 >> p) & 1) << k;
                }
                let (p0, p1) = rows[r];
                let (a0, a1) = (a[i0], a[i1]);
                a[i0] = a0 + a1;
                a[i1] = a0 * p0 + a1 * p1;
            }
        }
        a
    }

    pub fn spectrum(&self, fx: &[f64]) -> SparseSpectrum {
        SparseSpectrum::from_dense(self.n, &self.spectrum_dense(fx))
    }

    /// Values of a sparse polynomial at every point of the cube.
    pub fn eval_table(&self, poly: &SparseSpectrum) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for (s, c) in poly.iter() {
            for (x, o) in out.iter_mut().enumerate() {
                *o += c * self.basis(s, x as u64);
            }
        }
        out
    }

    /// E[(f - g)^2] for two tables.
    pub fn sq_dist(&self, fx: &[f64], gx: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(fx.iter().zip(gx))
            .map(|(p, (a, b))| p * (a - b) * (a - b))
            .sum()
    }
}

pub fn exact_coefficient(net: &BayesNet, f: &dyn Fn(Assignment) -> f64, s: IndexSet) -> Result<f64> {
    let cube = ExactCube::new(net)?;
    Ok(cube.coefficient(&cube.table(f), s))
}

pub fn full_spectrum(net: &BayesNet, f: &dyn Fn(Assignment) -> f64) -> Result<SparseSpectrum> {
    let cube = ExactCube::with_limit(net, SPECTRUM_LIMIT)?;
    Ok(cube.spectrum(&cube.table(f)))
}

/// max over |S|,|T| <= cap of |E[φ_S φ_T] - [S = T]|.
///
/// Each Gram row is the spectrum of φ_T, so a row costs one transform.
pub fn orthonormality_residual_cube(cube: &ExactCube, cap: Option<usize>) -> f64 {
    let n = cube.n();
    let cap = cap.unwrap_or(n);
    let mut worst = 0.0f64;
    let mut row = vec![0.0; cube.size()];
    for t in 0..cube.size() as u64 {
        if t.count_ones() as usize > cap {
            continue;
        }
        for (x, r) in row.iter_mut().enumerate() {
            *r = cube.basis(IndexSet(t), x as u64);
        }
        let g = cube.spectrum_dense(&row);
        for (s, &e) in g.iter().enumerate() {
            if (s as u64).count_ones() as usize > cap {
                continue;
            }
            let target = if s as u64 == t { 1.0 } else { 0.0 };
            let d = (e - target).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

pub fn orthonormality_residual(net: &BayesNet, cap: Option<usize>) -> Result<f64> {
    Ok(orthonormality_residual_cube(&ExactCube::new(net)?, cap))
}

/// |Σ f̂_S² - E[f²]|
pub fn parseval_gap(cube: &ExactCube, fx: &[f64]) -> f64 {
    let lhs: f64 = cube.spectrum_dense(fx).iter().map(|c| c * c).sum();
    let sq: Vec<f64> = fx.iter().map(|v| v * v).collect();
    (lhs - cube.expect(&sq)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{make_chain, make_product, random, seeded};
    use rand::Rng;

    fn brute_coef(cube: &ExactCube, fx: &[f64], s: IndexSet) -> f64 {
        cube.coefficient(fx, s)
    }

    #[test]
    fn uniform_basis_is_pm_one() {
        let net = make_product(&[0.5; 3]).unwrap();
        for x in 0..8u64 {
            for v in 0..3 {
                let p = basis_eval(&net, IndexSet::singleton(v), x);
                assert_eq!(p, 2.0 * bit(x, v) as f64 - 1.0);
            }
            assert_eq!(basis_eval(&net, IndexSet::EMPTY, x), 1.0);
        }
    }

    #[test]
    fn biased_basis_values() {
        let net = make_product(&[0.9]).unwrap();
        assert!((basis_eval(&net, IndexSet::singleton(0), 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((basis_eval(&net, IndexSet::singleton(0), 0) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function_spectrum() {
        let net = random::dag(5, 2, 0.1, &mut seeded(1));
        let sp = full_spectrum(&net, &|_| 1.0).unwrap();
        assert_eq!(sp.len(), 1);
        assert!((sp.get(IndexSet::EMPTY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_bit_uniform() {
        let net = make_product(&[0.5]).unwrap();
        let sp = full_spectrum(&net, &|x| bit(x, 0) as f64).unwrap();
        assert!((sp.get(IndexSet::EMPTY) - 0.5).abs() < 1e-15);
        assert!((sp.get(IndexSet::singleton(0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chain_literal_coefficient_is_expected_sigma() {
        let net = make_chain(0.3, &[(0.2, 0.7), (0.6, 0.1)]).unwrap();
        let cube = ExactCube::new(&net).unwrap();
        let fx = cube.table(&|x| bit(x, 2) as f64);
        let c = cube.coefficient(&fx, IndexSet::singleton(2));
        let es: f64 = (0..8u64).map(|x| net.joint_prob(x) * net.sigma(2, x)).sum();
        assert!((c - es).abs() < 1e-12);
    }

    #[test]
    fn fast_transform_matches_direct_sum() {
        let mut rng = seeded(7);
        for n in 1..=7 {
            let net = random::dag(n, 3, 0.05, &mut rng);
            let cube = ExactCube::new(&net).unwrap();
            let fx: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dense = cube.spectrum_dense(&fx);
            for s in 0..1u64 << n {
                let b = brute_coef(&cube, &fx, IndexSet(s));
                assert!((dense[s as usize] - b).abs() < 1e-12, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn reconstruction_and_parseval() {
        let mut rng = seeded(8);
        let net = random::dag(6, 3, 0.1, &mut rng);
        let cube = ExactCube::new(&net).unwrap();
        let fx: Vec<f64> = (0..64).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect();
        let sp = cube.spectrum(&fx);
        let back = cube.eval_table(&sp);
        for x in 0..64 {
            assert!((back[x] - fx[x]).abs() < 1e-9);
            assert!((eval_sparse(&sp, &net, x as u64) - fx[x]).abs() < 1e-9);
        }
        assert!(parseval_gap(&cube, &fx) < 1e-10);
    }

    #[test]
    fn uniform_matches_classical_transform() {
        // classical: f̂(S) = E[f χ_S], χ_S = ∏ (-1)^{x_v}; ours uses 2x-1 = -(−1)^x
        let net = make_product(&[0.5; 4]).unwrap();
        let mut rng = seeded(2);
        let fx: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cube = ExactCube::new(&net).unwrap();
        let ours = cube.spectrum_dense(&fx);
        for s in 0..16u64 {
            let classical: f64 = (0..16u64)
                .map(|x| {
                    let par = (x & s).count_ones() % 2;
                    fx[x as usize] * if par == 0 { 1.0 } else { -1.0 } / 16.0
                })
                .sum();
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            assert!((ours[s as usize] - sign * classical).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormality_holds_and_breaks() {
        let p = make_product(&[0.2, 0.6, 0.9]).unwrap();
        assert!(orthonormality_residual(&p, None).unwrap() <= 1e-12);
        let net = random::dag(8, 3, 0.05, &mut seeded(5));
        assert!(orthonormality_residual(&net, None).unwrap() <= 1e-10);

        let base = make_chain(0.5, &[(0.3, 0.8)]).unwrap();
        let broken = base.with_cpt_entry_unchecked(0, 0, 0.8);
        let cube = ExactCube::under(&base, &broken, ENUM_LIMIT).unwrap();
        assert!(orthonormality_residual_cube(&cube, None) > 1e-3);
    }

    #[test]
    fn limits_enforced() {
        let net = make_product(&[0.5; 21]).unwrap();
        assert!(matches!(
            exact_coefficient(&net, &|_| 1.0, IndexSet::EMPTY),
            Err(Error::Capacity { .. })
        ));
    }
}
