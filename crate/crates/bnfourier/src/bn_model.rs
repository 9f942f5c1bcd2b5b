//! Bayesian networks over binary variables.
//!
//! Assignments are packed into a `u64`: bit `v` holds `X_v`. Variables are
//! 0-based everywhere. A cpt row for node `v` is indexed by the parent
//! assignment read as an integer, where `parents[v][k]` contributes bit `k`
//! (the first listed parent is the least significant bit).

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

pub type Assignment = u64;
pub type Rng = ChaCha8Rng;

/// Hard cap on variable count (assignments are packed in a u64).
pub const MAX_VARS: usize = 64;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream `idx` derived from a master seed. Used to hand each
/// parallel worker (or each repetition) its own generator.
pub fn stream(seed: u64, idx: u64) -> Rng {
    let mut r = Rng::seed_from_u64(seed);
    r.set_stream(idx.wrapping_add(1));
    r
}

#[inline]
pub fn bit(x: Assignment, v: usize) -> u64 {
    (x >> v) & 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Product,
    Chain,
    Tree,
    Forest,
    General,
}

impl Structure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Structure::Product => "product",
            Structure::Chain => "chain",
            Structure::Tree => "tree",
            Structure::Forest => "forest",
            Structure::General => "general",
        }
    }

    /// Every node has at most one parent.
    pub fn is_forest_like(&self) -> bool {
        !matches!(self, Structure::General)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub c_star: f64,
    pub alpha_mu: f64,
    pub alpha_sigma: f64,
    pub structure: Structure,
}

impl BoundednessReport {
    /// The single α used by the tree/forest bound: both the mean and the
    /// standard deviation differences must stay below it.
    pub fn alpha(&self) -> f64 {
        self.alpha_mu.max(self.alpha_sigma)
    }
}

/// On-disk form. `parents` and `cpt` are exactly the in-memory tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub parents: Vec<Vec<usize>>,
    pub cpt: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "NetFile", try_from = "NetFile")]
pub struct BayesNet {
    n: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cpt: Vec<Vec<f64>>,
    order: Vec<usize>,
    pos: Vec<usize>,
    name: Option<String>,
}

impl From<BayesNet> for NetFile {
    fn from(net: BayesNet) -> Self {
        net.to_file()
    }
}

impl TryFrom<NetFile> for BayesNet {
    type Error = Error;
    fn try_from(f: NetFile) -> Result<Self> {
        BayesNet::from_file(f)
    }
}

/// Partial assignment over a prefix of the topological order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prefix {
    pub known: u64,
    pub bits: Assignment,
}

impl BayesNet {
    /// Builds and checks a net. Rejects cycles, bad shapes, and any cpt entry
    /// outside the open interval (0,1).
    pub fn new(parents: Vec<Vec<usize>>, cpt: Vec<Vec<f64>>) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::Shape("a net needs at least one variable".into()));
        }
        if n > MAX_VARS {
            return Err(Error::Capacity {
                what: "variables".into(),
                value: n as f64,
                limit: MAX_VARS as f64,
            });
        }
        if cpt.len() != n {
            return Err(Error::Shape(format!("{} parent lists but {} cpts", n, cpt.len())));
        }
        let mut children = vec![Vec::new(); n];
        for (v, ps) in parents.iter().enumerate() {
            if ps.len() > 20 {
                return Err(Error::Shape(format!("node {v} has {} parents", ps.len())));
            }
            for (k, &p) in ps.iter().enumerate() {
                if p >= n || p == v {
                    return Err(Error::Shape(format!("node {v}: bad parent {p}")));
                }
                if ps[..k].contains(&p) {
                    return Err(Error::Shape(format!("node {v}: parent {p} listed twice")));
                }
                children[p].push(v);
            }
            if cpt[v].len() != 1usize << ps.len() {
                return Err(Error::Shape(format!(
                    "node {v}: {} cpt rows, expected {}",
                    cpt[v].len(),
                    1usize << ps.len()
                )));
            }
        }
        check_probs(&cpt)?;
        let order = topo_order(&parents, &children).ok_or_else(|| Error::Shape("parent graph has a cycle".into()))?;
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        Ok(BayesNet {
            n,
            parents,
            children,
            cpt,
            order,
            pos,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Replaces one cpt entry without any checks. Only meant for negative
    /// tests that need a deliberately broken net.
    pub fn with_cpt_entry_unchecked(&self, v: usize, row: usize, p: f64) -> Self {
        let mut out = self.clone();
        out.cpt[v][row] = p;
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpt[v]
    }
    pub fn order(&self) -> &[usize] {
        &self.order
    }
    /// Position of `v` in the topological order.
    pub fn position(&self, v: usize) -> usize {
        self.pos[v]
    }

    #[inline]
    pub fn row(&self, v: usize, x: Assignment) -> usize {
        let mut r = 0usize;
        for (k, &p) in self.parents[v].iter().enumerate() {
            r |= (bit(x, p) as usize) << k;
        }
        r
    }

    /// μ_{v, x_pa(v)}
    #[inline]
    pub fn mu(&self, v: usize, x: Assignment) -> f64 {
        self.cpt[v][self.row(v, x)]
    }

    /// σ_{v, x_pa(v)} = sqrt(μ(1-μ))
    #[inline]
    pub fn sigma(&self, v: usize, x: Assignment) -> f64 {
        sigma_of(self.mu(v, x))
    }

    pub fn validate(&self) -> Result<BoundednessReport> {
        check_probs(&self.cpt)?;
        let mut c_star = 0.5f64;
        let mut alpha_mu = 0.0f64;
        let mut alpha_sigma = 0.0f64;
        for rows in &self.cpt {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut slo, mut shi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in rows {
                c_star = c_star.min(p.min(1.0 - p));
                lo = lo.min(p);
                hi = hi.max(p);
                let s = sigma_of(p);
                slo = slo.min(s);
                shi = shi.max(s);
            }
            alpha_mu = alpha_mu.max(hi - lo);
            alpha_sigma = alpha_sigma.max(shi - slo);
        }
        Ok(BoundednessReport {
            c_star,
            alpha_mu,
            alpha_sigma,
            structure: self.structure(),
        })
    }

    pub fn structure(&self) -> Structure {
        if self.parents.iter().all(|p| p.is_empty()) {
            return Structure::Product;
        }
        if self.parents.iter().any(|p| p.len() > 1) {
            return Structure::General;
        }
        let roots = self.parents.iter().filter(|p| p.is_empty()).count();
        if roots > 1 {
            return Structure::Forest;
        }
        if self.children.iter().all(|c| c.len() <= 1) {
            Structure::Chain
        } else {
            Structure::Tree
        }
    }

    pub fn joint_prob(&self, x: Assignment) -> f64 {
        let mut p = 1.0;
        for v in 0..self.n {
            let m = self.mu(v, x);
            p *= if bit(x, v) == 1 { m } else { 1.0 - m };
        }
        p
    }

    /// Draws the variables at order positions `from..to`, reading parents
    /// from `x` (already-drawn positions) and writing into it.
    #[inline]
    pub fn fill_positions(&self, x: &mut Assignment, from: usize, to: usize, rng: &mut Rng) {
        for &v in &self.order[from..to] {
            let m = self.mu(v, *x);
            if rng.gen::<f64>() < m {
                *x |= 1 << v;
            } else {
                *x &= !(1u64 << v);
            }
        }
    }

    pub fn sample_one(&self, rng: &mut Rng) -> Assignment {
        let mut x = 0;
        self.fill_positions(&mut x, 0, self.n, rng);
        x
    }

    pub fn ancestral_sample(&self, rng: &mut Rng, count: usize) -> Vec<Assignment> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    /// Mask of the variables at the first `k` order positions.
    pub fn prefix_mask(&self, k: usize) -> u64 {
        self.order[..k].iter().fold(0u64, |m, &v| m | (1 << v))
    }

    /// Completes a prefix assignment by forward sampling the remaining
    /// variables. No inference: `u` has to cover a prefix of `order`.
    pub fn sample_suffix(&self, u: Prefix, rng: &mut Rng, count: usize) -> Result<Vec<Assignment>> {
        let k = u.known.count_ones() as usize;
        if k > self.n || self.prefix_mask(k) != u.known {
            return contract("partial assignment does not cover a prefix of the topological order");
        }
        if u.bits & !u.known != 0 {
            return contract("partial assignment sets bits outside its known mask");
        }
        Ok((0..count)
            .map(|_| {
                let mut x = u.bits;
                self.fill_positions(&mut x, k, self.n, rng);
                x
            })
            .collect())
    }

    pub fn to_file(&self) -> NetFile {
        NetFile {
            n: self.n,
            name: self.name.clone(),
            parents: self.parents.clone(),
            cpt: self.cpt.clone(),
            provenance: None,
        }
    }

    pub fn from_file(f: NetFile) -> Result<Self> {
        if f.parents.len() != f.n {
            return Err(Error::Shape(format!(
                "n = {} but {} parent lists",
                f.n,
                f.parents.len()
            )));
        }
        let mut net = BayesNet::new(f.parents, f.cpt)?;
        net.name = f.name;
        Ok(net)
    }

    /// Canonical serialization (pretty JSON, fixed field order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("net serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        BayesNet::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        BayesNet::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[inline]
pub fn sigma_of(mu: f64) -> f64 {
    (mu * (1.0 - mu)).sqrt()
}

fn check_probs(cpt: &[Vec<f64>]) -> Result<()> {
    for (v, rows) in cpt.iter().enumerate() {
        for (r, &p) in rows.iter().enumerate() {
            // strict: 0 and 1 would give σ = 0
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Validation {
                    node: v,
                    row: r,
                    msg: format!("probability {p} outside (0,1)"),
                });
            }
        }
    }
    Ok(())
}

fn topo_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn check_open(what: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("{what} = {p} outside (0,1)")))
    }
}

pub fn make_product(mus: &[f64]) -> Result<BayesNet> {
    if mus.is_empty() {
        return Err(Error::Shape("product net needs n >= 1".into()));
    }
    for &m in mus {
        check_open("mu", m)?;
    }
    BayesNet::new(vec![Vec::new(); mus.len()], mus.iter().map(|&m| vec![m]).collect())
}

/// Chain X_0 -> X_1 -> ... with root marginal `root` and one `(μ_{i,0}, μ_{i,1})`
/// row pair per non-root node. The net has `rows.len() + 1` variables.
pub fn make_chain(root: f64, rows: &[(f64, f64)]) -> Result<BayesNet> {
    check_open("root mu", root)?;
    let mut parents = vec![Vec::new()];
    let mut cpt = vec![vec![root]];
    for (i, &(m0, m1)) in rows.iter().enumerate() {
        check_open("mu0", m0)?;
        check_open("mu1", m1)?;
        parents.push(vec![i]);
        cpt.push(vec![m0, m1]);
    }
    BayesNet::new(parents, cpt)
}

/// Chain of `n` nodes sharing one cpt, root marginal `mu0`.
pub fn make_homogeneous_chain(n: usize, mu0: f64, mu1: f64) -> Result<BayesNet> {
    if n == 0 {
        return Err(Error::Shape("chain needs n >= 1".into()));
    }
    make_chain(mu0, &vec![(mu0, mu1); n - 1])
}

/// Tree/forest from a parent vector (`None` = root), with root marginals and
/// per-node `(μ_0, μ_1)` rows for non-roots.
pub fn make_forest(parent: &[Option<usize>], rows: &[(f64, f64)]) -> Result<BayesNet> {
    if parent.len() != rows.len() {
        return Err(Error::Shape("parent and rows lengths differ".into()));
    }
    let parents = parent.iter().map(|p| p.map(|q| vec![q]).unwrap_or_default()).collect();
    let cpt = parent
        .iter()
        .zip(rows)
        .map(|(p, &(m0, m1))| if p.is_some() { vec![m0, m1] } else { vec![m0] })
        .collect();
    BayesNet::new(parents, cpt)
}

/// Parameters of the lower-bound anti-tree.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GStarParams {
    /// number of leaves X_1..X_n (branching count)
    pub n: usize,
    /// chain length; X_k is the last node of chain k
    pub m: usize,
    pub alpha: f64,
    pub d: f64,
    /// root marginal of each Y chain and the chain rows
    pub mu0: f64,
    pub mu1: f64,
}

impl Default for GStarParams {
    fn default() -> Self {
        GStarParams {
            n: 2,
            m: 23,
            alpha: 0.01,
            d: 0.49,
            mu0: 0.07,
            mu1: 0.56,
        }
    }
}

/// Variable layout: chain k occupies `k*m .. k*m+m` (its last node is X_k),
/// then the internal anti-tree nodes V_{n-1}, ..., V_1 (V_1, the sink, is
/// the last variable). V_j has parents V_{2j}, V_{2j+1} in heap numbering,
/// where heap index `n-1+k` (1-based k) is X_k.
pub fn make_gstar(p: GStarParams) -> Result<BayesNet> {
    let GStarParams {
        n,
        m,
        alpha,
        d,
        mu0,
        mu1,
    } = p;
    if n < 2 || m < 1 {
        return Err(Error::Contract(
            "G* needs n >= 2 leaves and chains of length m >= 1".into(),
        ));
    }
    check_open("alpha", alpha)?;
    check_open("alpha + D", alpha + d)?;
    check_open("mu0", mu0)?;
    check_open("mu1", mu1)?;
    if d < 0.0 {
        return Err(Error::Contract("D must be nonnegative".into()));
    }
    let total = n * (m + 1) - 1;
    let mut parents = vec![Vec::new(); total];
    let mut cpt = vec![Vec::new(); total];
    for k in 0..n {
        let base = k * m;
        cpt[base] = vec![mu0];
        for i in 1..m {
            parents[base + i] = vec![base + i - 1];
            cpt[base + i] = vec![mu0, mu1];
        }
    }
    let heap_var = |h: usize| -> usize {
        if h >= n {
            (h - n) * m + m - 1
        } else {
            n * m + (n - 1 - h)
        }
    };
    for j in 1..n {
        let v = heap_var(j);
        parents[v] = vec![heap_var(2 * j), heap_var(2 * j + 1)];
        // rows 00, 10, 01, 11: equal parents push the mean up by D
        cpt[v] = vec![alpha + d, alpha, alpha, alpha + d];
    }
    Ok(BayesNet::new(parents, cpt)?.with_name(format!("gstar_n{n}_m{m}")))
}

/// Index of V_j (1-based internal anti-tree node) in a net built by `make_gstar`.
pub fn gstar_v(p: &GStarParams, j: usize) -> usize {
    p.n * p.m + (p.n - 1 - j)
}

/// Index of chain node Y_{k,i} (both 1-based) in a net built by `make_gstar`.
pub fn gstar_y(p: &GStarParams, k: usize, i: usize) -> usize {
    (k - 1) * p.m + (i - 1)
}

pub mod random {
    //! Random nets for tests and experiments.
    use super::*;

    fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * rng.gen::<f64>()
    }

    pub fn product(n: usize, c: f64, rng: &mut Rng) -> BayesNet {
        let mus: Vec<f64> = (0..n).map(|_| uniform(rng, c, 1.0 - c)).collect();
        make_product(&mus).expect("valid product")
    }

    /// Child row pair within `alpha` of each other in both μ and σ.
    pub fn bounded_rows(c: f64, alpha: f64, rng: &mut Rng) -> (f64, f64) {
        loop {
            let m0 = uniform(rng, c, 1.0 - c);
            let m1 = (m0 + uniform(rng, -alpha, alpha)).clamp(c, 1.0 - c);
            if (sigma_of(m0) - sigma_of(m1)).abs() <= alpha {
                return (m0, m1);
            }
        }
    }

    /// Chain with c-bounded, α-difference-bounded rows.
    pub fn chain(n: usize, c: f64, alpha: f64, rng: &mut Rng) -> BayesNet {
        let root = uniform(rng, c, 1.0 - c);
        let rows: Vec<_> = (1..n).map(|_| bounded_rows(c, alpha, rng)).collect();
        make_chain(root, &rows).expect("valid chain")
    }

    /// Random tree (parent of i drawn from 0..i), α-difference-bounded.
    pub fn tree(n: usize, c: f64, alpha: f64, rng: &mut Rng) -> BayesNet {
        let parent: Vec<Option<usize>> = (0..n)
            .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
            .collect();
        with_parents(&parent, c, alpha, rng)
    }

    /// Random forest: each non-first node is a root with probability `p_root`.
    pub fn forest(n: usize, c: f64, alpha: f64, p_root: f64, rng: &mut Rng) -> BayesNet {
        let parent: Vec<Option<usize>> = (0..n)
            .map(|i| {
                if i == 0 || rng.gen::<f64>() < p_root {
                    None
                } else {
                    Some(rng.gen_range(0..i))
                }
            })
            .collect();
        with_parents(&parent, c, alpha, rng)
    }

    fn with_parents(parent: &[Option<usize>], c: f64, alpha: f64, rng: &mut Rng) -> BayesNet {
        let rows: Vec<_> = parent
            .iter()
            .map(|p| match p {
                None => (uniform(rng, c, 1.0 - c), 0.0),
                Some(_) => bounded_rows(c, alpha, rng),
            })
            .collect();
        make_forest(parent, &rows).expect("valid forest")
    }

    /// Random DAG: node i picks up to `max_parents` parents among 0..i.
    pub fn dag(n: usize, max_parents: usize, c: f64, rng: &mut Rng) -> BayesNet {
        let mut parents = Vec::with_capacity(n);
        let mut cpt = Vec::with_capacity(n);
        for i in 0..n {
            let k = rng.gen_range(0..=max_parents.min(i));
            let mut pool: Vec<usize> = (0..i).collect();
            let mut ps = Vec::with_capacity(k);
            for _ in 0..k {
                let j = rng.gen_range(0..pool.len());
                ps.push(pool.swap_remove(j));
            }
            cpt.push((0..1usize << k).map(|_| uniform(rng, c, 1.0 - c)).collect());
            parents.push(ps);
        }
        BayesNet::new(parents, cpt).expect("valid dag")
    }

    /// Generalized k-junta: variables 0..k form a random DAG; every other
    /// variable has parents drawn from the junta only.
    pub fn kjunta(n: usize, k: usize, c: f64, rng: &mut Rng) -> BayesNet {
        let mut parents = Vec::with_capacity(n);
        let mut cpt = Vec::with_capacity(n);
        for i in 0..n {
            let pool_len = i.min(k);
            let cnt = if pool_len == 0 {
                0
            } else {
                rng.gen_range(0..=pool_len.min(3))
            };
            let mut pool: Vec<usize> = (0..pool_len).collect();
            let mut ps = Vec::new();
            for _ in 0..cnt {
                let j = rng.gen_range(0..pool.len());
                ps.push(pool.swap_remove(j));
            }
            cpt.push((0..1usize << ps.len()).map(|_| uniform(rng, c, 1.0 - c)).collect());
            parents.push(ps);
        }
        BayesNet::new(parents, cpt).expect("valid junta net")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_product_report() {
        let net = make_product(&[0.5; 4]).unwrap();
        let r = net.validate().unwrap();
        assert_eq!(r.c_star, 0.5);
        assert_eq!(r.alpha_mu, 0.0);
        assert_eq!(r.alpha_sigma, 0.0);
        assert_eq!(r.structure, Structure::Product);
    }

    #[test]
    fn chain_report() {
        let net = make_homogeneous_chain(5, 0.07, 0.56).unwrap();
        let r = net.validate().unwrap();
        assert!((r.alpha_mu - 0.49).abs() < 1e-15);
        assert_eq!(r.structure, Structure::Chain);
        assert!((r.c_star - 0.07).abs() < 1e-15);
    }

    #[test]
    fn gstar_shape_and_report() {
        let p = GStarParams::default();
        let net = make_gstar(p).unwrap();
        assert_eq!(net.n(), 47);
        let r = net.validate().unwrap();
        assert_eq!(r.structure, Structure::General);
        assert!((r.c_star - 0.01).abs() < 1e-15);
        assert!((r.alpha_mu - 0.49).abs() < 1e-15);
        // sink is last in the order and has no children
        let sink = gstar_v(&p, 1);
        assert_eq!(sink, 46);
        assert!(net.children(sink).is_empty());
        assert_eq!(net.parents(sink).len(), 2);
        assert_eq!(net.parents(gstar_y(&p, 2, 23)), &[gstar_y(&p, 2, 22)]);
    }

    #[test]
    fn gstar_three_leaves_wiring() {
        let p = GStarParams {
            n: 3,
            m: 2,
            ..Default::default()
        };
        let net = make_gstar(p).unwrap();
        assert_eq!(net.n(), 8);
        // V_1 <- V_2, V_3 (= X_1 in heap numbering); V_2 <- X_2, X_3
        let v1 = gstar_v(&p, 1);
        let v2 = gstar_v(&p, 2);
        assert_eq!(net.parents(v1), &[v2, gstar_y(&p, 1, 2)]);
        assert_eq!(net.parents(v2), &[gstar_y(&p, 2, 2), gstar_y(&p, 3, 2)]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_product(&[]).is_err());
        assert!(make_product(&[1.0]).is_err());
        assert!(make_chain(0.5, &[(0.0, 0.5)]).is_err());
        let err = BayesNet::new(vec![vec![], vec![0]], vec![vec![0.5], vec![0.2, 1.0]]).unwrap_err();
        match err {
            Error::Validation { node, row, .. } => assert_eq!((node, row), (1, 1)),
            e => panic!("unexpected {e}"),
        }
        assert!(BayesNet::new(vec![vec![1], vec![0]], vec![vec![0.5; 2], vec![0.5; 2]]).is_err());
    }

    #[test]
    fn joint_prob_examples() {
        let u = make_product(&[0.5; 3]).unwrap();
        for x in 0..8 {
            assert_eq!(u.joint_prob(x), 0.125);
        }
        let c = make_chain(0.5, &[(0.3, 0.7)]).unwrap();
        assert!((c.joint_prob(0) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn normalization_random_dags() {
        let mut rng = seeded(3);
        for n in 1..=12 {
            let net = random::dag(n, 3, 0.05, &mut rng);
            let s: f64 = (0..1u64 << n).map(|x| net.joint_prob(x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let net = random::tree(6, 0.1, 0.3, &mut seeded(1));
        let a = net.ancestral_sample(&mut seeded(9), 2);
        let b = net.ancestral_sample(&mut seeded(9), 2);
        assert_eq!(a, b);
        assert_ne!(stream(9, 0).gen::<u64>(), stream(9, 1).gen::<u64>());
    }

    #[test]
    fn product_marginals_converge() {
        let net = make_product(&[0.9; 3]).unwrap();
        let xs = net.ancestral_sample(&mut seeded(11), 100_000);
        for v in 0..3 {
            let m = xs.iter().filter(|&&x| bit(x, v) == 1).count() as f64 / 1e5;
            assert!((m - 0.9).abs() < 0.01);
        }
    }

    #[test]
    fn chain_conditional_converges() {
        let net = make_chain(0.5, &[(0.2, 0.7)]).unwrap();
        let xs = net.ancestral_sample(&mut seeded(12), 100_000);
        let ones: Vec<_> = xs.iter().filter(|&&x| bit(x, 0) == 1).collect();
        let p = ones.iter().filter(|&&&x| bit(x, 1) == 1).count() as f64 / ones.len() as f64;
        assert!((p - 0.7).abs() < 0.02);
    }

    #[test]
    fn suffix_sampling() {
        let net = make_chain(0.5, &[(0.2, 0.7), (0.4, 0.6)]).unwrap();
        let full = Prefix {
            known: 0b111,
            bits: 0b101,
        };
        assert_eq!(net.sample_suffix(full, &mut seeded(0), 3).unwrap(), vec![0b101; 3]);
        let empty = Prefix { known: 0, bits: 0 };
        let a = net.sample_suffix(empty, &mut seeded(5), 50).unwrap();
        let b = net.ancestral_sample(&mut seeded(5), 50);
        assert_eq!(a, b);
        let u = Prefix { known: 0b1, bits: 0b1 };
        let xs = net.sample_suffix(u, &mut seeded(6), 100_000).unwrap();
        let p = xs.iter().filter(|&&x| bit(x, 1) == 1).count() as f64 / 1e5;
        assert!((p - 0.7).abs() < 0.02);
        assert!(net
            .sample_suffix(Prefix { known: 0b10, bits: 0 }, &mut seeded(0), 1)
            .is_err());
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let net = random::dag(7, 3, 0.1, &mut seeded(4)).with_name("r");
        let s = net.to_json();
        let back = BayesNet::from_json(&s).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn structure_classes() {
        let mut rng = seeded(2);
        assert_eq!(random::tree(1, 0.1, 0.2, &mut rng).structure(), Structure::Product);
        let t = make_forest(&[None, Some(0), Some(0)], &[(0.5, 0.0), (0.3, 0.4), (0.3, 0.4)]).unwrap();
        assert_eq!(t.structure(), Structure::Tree);
        let f = make_forest(&[None, Some(0), None], &[(0.5, 0.0), (0.3, 0.4), (0.3, 0.0)]).unwrap();
        assert_eq!(f.structure(), Structure::Forest);
        assert_eq!(make_chain(0.5, &[(0.5, 0.5)]).unwrap().structure(), Structure::Chain);
    }
}
