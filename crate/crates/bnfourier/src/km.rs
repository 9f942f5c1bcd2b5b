//! Heavy-coefficient search over the BN basis.
//!
//! Sets are grown from the end of the topological order: a pattern α fixes
//! which of the last k order positions belong to S, and the remaining
//! positions form a prefix u that can be sampled forward. For every α,
//!
//!   g_α(u) = E_{Y|u}[f(uY) φ_α(uY)],   E_U[g_α(U)²] = Σ_β f̂²_{βα},
//!
//! and E[g_α²] is estimated as the mean of Z₃ = f(uY₁)f(uY₂)φ_α(uY₁)φ_α(uY₂)
//! over prefixes u with two independent completions each.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bn_model::{Assignment, BayesNet, Rng};
use crate::error::{Error, Result};
use crate::fourier_basis::{ExactCube, IndexSet, SparseSpectrum, ENUM_LIMIT};

pub use crate::fourier_basis::eval_sparse;

/// Membership-query oracle. Values must lie in [-1, 1].
pub type Oracle<'a> = dyn Fn(Assignment) -> f64 + Sync + 'a;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmParams {
    pub theta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl KmParams {
    pub fn new(theta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = KmParams { theta, gamma, delta };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v <= 1.0;
        if !ok(self.theta) || !ok(self.gamma) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Contract(format!(
                "KM parameters out of range: theta = {}, gamma = {}, delta = {}",
                self.theta, self.gamma, self.delta
            )));
        }
        Ok(())
    }

    /// Largest possible output list, 4/θ².
    pub fn max_sets(&self) -> f64 {
        4.0 / (self.theta * self.theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorBudget {
    /// samples per G_α estimate
    pub m1: u64,
    /// samples per coefficient estimate
    pub m2: u64,
    pub delta_prime: f64,
}

/// Default ceiling on any single sample count.
pub const DEFAULT_MAX_SAMPLES: u64 = 1_000_000_000;

fn to_count(what: &str, v: f64, limit: u64) -> Result<u64> {
    if !v.is_finite() || v > limit as f64 {
        return Err(Error::Capacity {
            what: what.into(),
            value: v,
            limit: limit as f64,
        });
    }
    Ok(v as u64)
}

/// Chebyshev budgets with δ split uniformly over the worst-case
/// 4n/θ² + 4/θ² estimates.
pub fn sample_budget(params: &KmParams, n: usize) -> Result<EstimatorBudget> {
    sample_budget_capped(params, n, u64::MAX)
}

pub fn sample_budget_capped(params: &KmParams, n: usize, max_samples: u64) -> Result<EstimatorBudget> {
    params.check()?;
    let t2 = params.theta * params.theta;
    let estimates = 4.0 * n as f64 / t2 + 4.0 / t2;
    let delta_prime = params.delta / estimates;
    let m1 = (20.0 / (delta_prime * t2 * t2)).ceil();
    let m2 = (1.0 / (delta_prime * params.gamma * params.gamma)).ceil();
    Ok(EstimatorBudget {
        m1: to_count("m1", m1, max_samples)?,
        m2: to_count("m2", m2, max_samples)?,
        delta_prime,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KmMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KmConfig {
    pub mode: KmMode,
    /// Replace the Chebyshev (m1, m2) by explicit counts.
    pub budget_override: Option<(u64, u64)>,
    pub max_samples: u64,
    pub enum_limit: usize,
}

impl KmConfig {
    pub fn exact() -> Self {
        KmConfig {
            mode: KmMode::Exact,
            budget_override: None,
            max_samples: DEFAULT_MAX_SAMPLES,
            enum_limit: ENUM_LIMIT,
        }
    }
    pub fn sampled() -> Self {
        KmConfig {
            mode: KmMode::Sampled,
            ..KmConfig::exact()
        }
    }
    pub fn with_budget(mut self, m1: u64, m2: u64) -> Self {
        self.budget_override = Some((m1, m2));
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KmStats {
    pub g_evals: u64,
    pub coef_estimates: u64,
    pub queries: u64,
    pub max_depth: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KmOutput {
    pub sets: Vec<IndexSet>,
    pub coeffs: SparseSpectrum,
    pub mode: KmMode,
    pub params: KmParams,
    pub budget: Option<EstimatorBudget>,
    pub stats: KmStats,
}

impl KmOutput {
    /// All estimates, including ones that round to zero and so are missing
    /// from `coeffs`.
    pub fn estimate(&self, s: IndexSet) -> Option<f64> {
        self.sets.contains(&s).then(|| self.coeffs.get(s))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("km output serializes")
    }
}

/// Pattern over the last k order positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alpha {
    pub k: usize,
    pub set: IndexSet,
}

impl Alpha {
    pub fn root() -> Self {
        Alpha {
            k: 0,
            set: IndexSet::EMPTY,
        }
    }

    /// Prepends the variable at order position n-k-1.
    pub fn extend(&self, net: &BayesNet, b: bool) -> Self {
        let n = net.n();
        assert!(self.k < n, "alpha already covers every position");
        let v = net.order()[n - self.k - 1];
        let mut set = self.set;
        if b {
            set.insert(v);
        }
        Alpha { k: self.k + 1, set }
    }

    /// Mask of the conditioned prefix.
    pub fn prefix(&self, net: &BayesNet) -> u64 {
        net.prefix_mask(net.n() - self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GEstimate {
    pub mean: f64,
    /// empirical variance of Z₃
    pub var: f64,
    pub samples: u64,
}

#[inline]
fn phi_set(net: &BayesNet, s: IndexSet, x: Assignment) -> f64 {
    crate::fourier_basis::basis_eval(net, s, x)
}

/// Mean of Z₃ over m1 prefixes.
pub fn estimate_g_alpha_sq(net: &BayesNet, f: &Oracle, alpha: Alpha, m1: u64, rng: &mut Rng) -> GEstimate {
    let n = net.n();
    let split = n - alpha.k;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..m1 {
        let mut u: Assignment = 0;
        net.fill_positions(&mut u, 0, split, rng);
        let mut y1 = u;
        net.fill_positions(&mut y1, split, n, rng);
        let mut y2 = u;
        net.fill_positions(&mut y2, split, n, rng);
        let z = f(y1) * f(y2) * phi_set(net, alpha.set, y1) * phi_set(net, alpha.set, y2);
        sum += z;
        sum_sq += z * z;
    }
    let m = m1.max(1) as f64;
    let mean = sum / m;
    let var = if m1 > 1 {
        (sum_sq - m * mean * mean) / (m - 1.0)
    } else {
        0.0
    };
    GEstimate { mean, var, samples: m1 }
}

/// E_U[g_α(U)²] computed from its definition by enumeration.
pub fn exact_g_alpha_sq(cube: &ExactCube, fx: &[f64], alpha: Alpha) -> f64 {
    let net = cube.net();
    let prefix = alpha.prefix(net);
    // bucket by the prefix bits: h(u) = P(u) g_α(u), p(u) = P(u)
    let mut h = std::collections::HashMap::<u64, (f64, f64)>::new();
    for (x, (&p, &fv)) in cube.probs().iter().zip(fx).enumerate() {
        let e = h.entry(x as u64 & prefix).or_insert((0.0, 0.0));
        e.0 += p * fv * cube.basis(alpha.set, x as u64);
        e.1 += p;
    }
    let mut keys: Vec<_> = h.into_iter().collect();
    keys.sort_by_key(|(k, _)| *k);
    keys.iter().map(|(_, (hv, pv))| hv * hv / pv).sum()
}

fn estimate_coefficient(net: &BayesNet, f: &Oracle, s: IndexSet, m2: u64, rng: &mut Rng) -> f64 {
    let mut sum = 0.0;
    for _ in 0..m2 {
        let x = net.sample_one(rng);
        sum += f(x) * phi_set(net, s, x);
    }
    sum / m2.max(1) as f64
}

/// Exact spectrum plus, for every depth k, the squared mass summed over the
/// unconditioned prefix, so each exact G_α is a lookup.
pub struct ExactLevels {
    spec: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

impl ExactLevels {
    pub fn new(cube: &ExactCube, fx: &[f64]) -> Self {
        let net = cube.net();
        let n = net.n();
        let spec = cube.spectrum_dense(fx);
        let mut levels = vec![Vec::new(); n + 1];
        levels[n] = spec.iter().map(|c| c * c).collect();
        for k in (0..n).rev() {
            // sum out the variable at order position n-k-1
            let vb = 1usize << net.order()[n - k - 1];
            let mut next = levels[k + 1].clone();
            for i in 0..next.len() {
                if i & vb == 0 {
                    next[i] += next[i | vb];
                    next[i | vb] = 0.0;
                }
            }
            levels[k] = next;
        }
        ExactLevels { spec, levels }
    }

    pub fn g(&self, alpha: Alpha) -> f64 {
        self.levels[alpha.k][alpha.set.0 as usize]
    }

    pub fn coefficient(&self, s: IndexSet) -> f64 {
        self.spec[s.0 as usize]
    }
}

struct Search<'a> {
    net: &'a BayesNet,
    f: &'a Oracle<'a>,
    theta2: f64,
    mode: KmMode,
    budget: Option<EstimatorBudget>,
    exact: Option<ExactLevels>,
    stats: KmStats,
    found: Vec<(IndexSet, f64)>,
}

impl Search<'_> {
    fn g(&mut self, alpha: Alpha, rng: &mut Rng) -> f64 {
        self.stats.g_evals += 1;
        match self.mode {
            KmMode::Exact => self.exact.as_ref().unwrap().g(alpha),
            KmMode::Sampled => {
                let m1 = self.budget.unwrap().m1;
                self.stats.queries += 2 * m1;
                estimate_g_alpha_sq(self.net, self.f, alpha, m1, rng).mean
            }
        }
    }

    fn gate(&self) -> f64 {
        match self.mode {
            KmMode::Exact => self.theta2,
            KmMode::Sampled => self.theta2 / 2.0,
        }
    }

    fn coef(&mut self, alpha: Alpha, rng: &mut Rng) {
        let g = self.g(alpha, rng);
        if g < self.gate() {
            return;
        }
        self.stats.max_depth = self.stats.max_depth.max(alpha.k);
        if alpha.k == self.net.n() {
            self.stats.coef_estimates += 1;
            let c = match self.mode {
                KmMode::Exact => self.exact.as_ref().unwrap().coefficient(alpha.set),
                KmMode::Sampled => {
                    let m2 = self.budget.unwrap().m2;
                    self.stats.queries += m2;
                    estimate_coefficient(self.net, self.f, alpha.set, m2, rng)
                }
            };
            self.found.push((alpha.set, c));
            return;
        }
        self.coef(alpha.extend(self.net, false), rng);
        self.coef(alpha.extend(self.net, true), rng);
    }
}

pub fn km_run(net: &BayesNet, f: &Oracle, params: &KmParams, cfg: &KmConfig, rng: &mut Rng) -> Result<KmOutput> {
    if cfg.mode == KmMode::Exact {
        let cube = ExactCube::with_limit(net, cfg.enum_limit)?;
        let fx = cube.table(f);
        return Ok(km_exact_table(&cube, &fx, params));
    }
    run(net, f, params, cfg, None, rng)
}

/// Exact-mode search on a precomputed truth table.
pub fn km_exact_table(cube: &ExactCube, fx: &[f64], params: &KmParams) -> KmOutput {
    let levels = ExactLevels::new(cube, fx);
    let never = |_: Assignment| -> f64 { unreachable!("exact mode reads the table") };
    let mut out = run(
        cube.net(),
        &never,
        params,
        &KmConfig::exact(),
        Some(levels),
        &mut crate::bn_model::seeded(0),
    )
    .expect("exact mode has no budget to overflow");
    out.stats.queries = fx.len() as u64;
    out
}

fn run(
    net: &BayesNet,
    f: &Oracle,
    params: &KmParams,
    cfg: &KmConfig,
    exact: Option<ExactLevels>,
    rng: &mut Rng,
) -> Result<KmOutput> {
    params.check()?;
    let start = Instant::now();
    let n = net.n();
    let budget = match cfg.mode {
        KmMode::Exact => None,
        KmMode::Sampled => {
            let mut b = sample_budget_capped(params, n, u64::MAX).or_else(|e| {
                if cfg.budget_override.is_some() {
                    Ok(placeholder(params, n))
                } else {
                    Err(e)
                }
            })?;
            if let Some((m1, m2)) = cfg.budget_override {
                b.m1 = m1;
                b.m2 = m2;
            }
            to_count("m1", b.m1 as f64, cfg.max_samples)?;
            to_count("m2", b.m2 as f64, cfg.max_samples)?;
            Some(b)
        }
    };
    let mut search = Search {
        net,
        f,
        theta2: params.theta * params.theta,
        mode: cfg.mode,
        budget,
        exact,
        stats: KmStats::default(),
        found: Vec::new(),
    };
    search.coef(Alpha::root(), rng);
    let mut found = search.found;
    found.sort_by_key(|(s, _)| s.0);
    let mut coeffs = SparseSpectrum::new(n);
    for &(s, c) in &found {
        coeffs.set(s, c);
    }
    let mut stats = search.stats;
    stats.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    Ok(KmOutput {
        sets: found.into_iter().map(|(s, _)| s).collect(),
        coeffs,
        mode: cfg.mode,
        params: *params,
        budget,
        stats,
    })
}

// only reached when the Chebyshev counts overflow but explicit counts were given
fn placeholder(params: &KmParams, n: usize) -> EstimatorBudget {
    let t2 = params.theta * params.theta;
    EstimatorBudget {
        m1: 0,
        m2: 0,
        delta_prime: params.delta / (4.0 * n as f64 / t2 + 4.0 / t2),
    }
}

/// f = Σ bᵢ φ_{Sᵢ} / M with M = max_x |Σ bᵢ φ_{Sᵢ}(x)|, so |f| ≤ 1. Returns
/// the spectrum of f (exactly the scaled weights, by orthonormality).
pub fn planted_spectrum(cube: &ExactCube, terms: &[(IndexSet, f64)]) -> SparseSpectrum {
    let mut raw = SparseSpectrum::new(cube.n());
    for &(s, b) in terms {
        raw.add(s, b);
    }
    let vals = cube.eval_table(&raw);
    let m = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut out = SparseSpectrum::new(cube.n());
    for (s, c) in raw.iter() {
        out.set(s, c / m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{bit, make_product, random, seeded};
    use rand::Rng as _;

    #[test]
    fn budget_arithmetic() {
        let b = sample_budget(&KmParams::new(0.5, 0.5, 0.5).unwrap(), 4).unwrap();
        assert!((b.delta_prime - 1.0 / 160.0).abs() < 1e-18);
        assert_eq!(b.m1, 51200);
        assert_eq!(b.m2, 640);
        let half = sample_budget(&KmParams::new(0.5, 0.5, 0.25).unwrap(), 4).unwrap();
        assert_eq!(half.m1, 2 * b.m1);
        assert_eq!(half.m2, 2 * b.m2);
        let tiny = KmParams::new(1e-5, 1e-5, 0.01).unwrap();
        assert!(matches!(sample_budget(&tiny, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn exact_g_matches_spectrum_sums() {
        let mut rng = seeded(3);
        let net = random::dag(7, 3, 0.1, &mut rng);
        let cube = ExactCube::new(&net).unwrap();
        let fx: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = cube.spectrum_dense(&fx);
        let levels = ExactLevels::new(&cube, &fx);
        // walk a few α patterns down the order
        let mut alpha = Alpha::root();
        for k in 0..=7 {
            let prefix = alpha.prefix(&net);
            let suffix = !prefix & 127;
            let want: f64 = spec
                .iter()
                .enumerate()
                .filter(|(s, _)| (*s as u64) & suffix == alpha.set.0)
                .map(|(_, c)| c * c)
                .sum();
            assert!((exact_g_alpha_sq(&cube, &fx, alpha) - want).abs() < 1e-10, "k={k}");
            assert!((levels.g(alpha) - want).abs() < 1e-10, "k={k}");
            if k < 7 {
                alpha = alpha.extend(&net, k % 2 == 0);
            }
        }
    }

    #[test]
    fn parity_under_uniform() {
        let net = make_product(&[0.5; 6]).unwrap();
        let s0 = IndexSet::from_indices([1, 3, 4]);
        let f = move |x: u64| -> f64 { s0.iter().map(|v| 2.0 * bit(x, v) as f64 - 1.0).product() };
        let p = KmParams::new(0.5, 0.1, 0.1).unwrap();
        let out = km_run(&net, &f, &p, &KmConfig::exact(), &mut seeded(0)).unwrap();
        assert_eq!(out.sets, vec![s0]);
        assert!((out.coeffs.get(s0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_is_deterministic() {
        let net = random::tree(5, 0.2, 0.2, &mut seeded(1));
        let f = |x: u64| if bit(x, 2) == 1 { 1.0 } else { -1.0 };
        let p = KmParams::new(0.5, 0.2, 0.2).unwrap();
        let cfg = KmConfig::sampled().with_budget(2000, 1000);
        let a = km_run(&net, &f, &p, &cfg, &mut seeded(9)).unwrap();
        let b = km_run(&net, &f, &p, &cfg, &mut seeded(9)).unwrap();
        assert_eq!(a.sets, b.sets);
        assert_eq!(a.coeffs, b.coeffs);
        assert_eq!(a.stats.queries, 2 * 2000 * a.stats.g_evals + 1000 * a.sets.len() as u64);
    }

    #[test]
    fn planted_scaling_bounds_range() {
        let net = random::tree(6, 0.4, 0.1, &mut seeded(2));
        let cube = ExactCube::new(&net).unwrap();
        let sp = planted_spectrum(
            &cube,
            &[(IndexSet::from_indices([0, 2]), 1.0), (IndexSet::singleton(5), -1.0)],
        );
        let vals = cube.eval_table(&sp);
        let m = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((m - 1.0).abs() < 1e-12);
    }
}
