//! Learning tree-structured distributions from samples.

mod chow_liu;
pub mod edmonds;
pub mod info;

pub use chow_liu::{
    chow_liu_baseline, chow_liu_diff_restricted, lp_chow_liu, lp_edge_cost, lp_edge_cost_grid, lp_fit, root_fit,
    Active, EdgeFit, LearnedTree,
};
pub use edmonds::{brute_force_arborescence, edmonds_arborescence, Arborescence, Edge, Optimize};

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bn_model::{Assignment, BayesNet};
use crate::error::{Error, Result};
use crate::fourier_basis::ExactCube;
use info::{entropy, mutual_information};

/// 2×2 joint counts for every ordered pair. `counts[i*n+j][2a+b]` counts
/// X_i = a, X_j = b; the diagonal holds the single-variable counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseStats {
    pub n: usize,
    /// sample count (1 for exact statistics, whose counts are probabilities)
    pub m: f64,
    pub counts: Vec<[f64; 4]>,
    /// built from a known distribution; no smoothing is applied
    pub exact: bool,
}

const SHARD: usize = 4096;

fn count_into(n: usize, xs: &[Assignment], w: Option<&[f64]>, out: &mut [[f64; 4]]) {
    for (k, &x) in xs.iter().enumerate() {
        let wt = w.map_or(1.0, |w| w[k]);
        for i in 0..n {
            let a = (x >> i & 1) as usize;
            for j in 0..n {
                let b = (x >> j & 1) as usize;
                out[i * n + j][2 * a + b] += wt;
            }
        }
    }
}

impl PairwiseStats {
    /// Counts shards in parallel and merges them in shard order, so the
    /// result does not depend on the thread count.
    pub fn from_samples(n: usize, samples: &[Assignment]) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::Shape(format!("n = {n} out of range")));
        }
        if samples.is_empty() {
            return Err(Error::Contract("need at least one sample".into()));
        }
        let parts: Vec<Vec<[f64; 4]>> = samples
            .par_chunks(SHARD)
            .map(|chunk| {
                let mut c = vec![[0.0; 4]; n * n];
                count_into(n, chunk, None, &mut c);
                c
            })
            .collect();
        let mut counts = vec![[0.0; 4]; n * n];
        for p in parts {
            for (a, b) in counts.iter_mut().zip(p) {
                for k in 0..4 {
                    a[k] += b[k];
                }
            }
        }
        Ok(PairwiseStats {
            n,
            m: samples.len() as f64,
            counts,
            exact: false,
        })
    }

    /// Exact pairwise marginals of a full joint table indexed by assignment.
    pub fn from_joint(n: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 1usize << n {
            return Err(Error::Shape(format!(
                "joint table has {} entries, expected 2^{n}",
                probs.len()
            )));
        }
        let xs: Vec<Assignment> = (0..probs.len() as u64).collect();
        let mut counts = vec![[0.0; 4]; n * n];
        count_into(n, &xs, Some(probs), &mut counts);
        Ok(PairwiseStats {
            n,
            m: 1.0,
            counts,
            exact: true,
        })
    }

    pub fn from_net(net: &BayesNet) -> Result<Self> {
        let cube = ExactCube::new(net)?;
        Self::from_joint(net.n(), cube.probs())
    }

    pub fn count(&self, i: usize, j: usize) -> &[f64; 4] {
        &self.counts[i * self.n + j]
    }

    /// Empirical P(X_i = a, X_j = b) as `[2a+b]`.
    pub fn joint(&self, i: usize, j: usize) -> [f64; 4] {
        self.count(i, j).map(|c| c / self.m)
    }

    /// Empirical P(X_i = 1).
    pub fn marginal(&self, i: usize) -> f64 {
        self.count(i, i)[3] / self.m
    }

    pub fn mi(&self, i: usize, j: usize) -> f64 {
        mutual_information(&self.joint(i, j))
    }

    /// [P(X_j=0), P(X_j=1)]
    pub fn parent_dist(&self, j: usize) -> [f64; 2] {
        let p = self.marginal(j);
        [1.0 - p, p]
    }

    /// Empirical P(X_i=1 | X_j=b) for b = 0, 1; NaN where X_j = b never occurs.
    pub fn cond(&self, i: usize, j: usize) -> [f64; 2] {
        let c = self.count(i, j);
        [c[2] / (c[0] + c[2]), c[3] / (c[1] + c[3])]
    }

    /// (k+1)/(m_b+2) per cell; the raw conditional for exact statistics.
    pub fn smoothed_cond(&self, i: usize, j: usize) -> [f64; 2] {
        if self.exact {
            return self.cond(i, j);
        }
        let c = self.count(i, j);
        [(c[2] + 1.0) / (c[0] + c[2] + 2.0), (c[3] + 1.0) / (c[1] + c[3] + 2.0)]
    }

    pub fn smoothed_marginal(&self, i: usize) -> f64 {
        if self.exact {
            return self.marginal(i);
        }
        (self.count(i, i)[3] + 1.0) / (self.m + 2.0)
    }

    /// Transposed tables agree and every pair reproduces the marginals.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let a = self.count(i, j);
                let b = self.count(j, i);
                let ok_t = (a[0] - b[0]).abs() <= tol
                    && (a[1] - b[2]).abs() <= tol
                    && (a[2] - b[1]).abs() <= tol
                    && (a[3] - b[3]).abs() <= tol;
                let ok_m = (a[2] + a[3] - self.count(i, i)[3]).abs() <= tol;
                ok_t && ok_m
            })
        })
    }
}

/// Reads 0/1 rows; a first row with any other token is taken as a header.
pub fn read_samples_csv(r: impl Read) -> Result<(usize, Vec<Assignment>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut n = None;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bits: Option<Vec<bool>> = rec
            .iter()
            .map(|t| match t {
                "0" => Some(false),
                "1" => Some(true),
                _ => None,
            })
            .collect();
        let Some(bits) = bits else {
            if line == 0 {
                continue;
            }
            return Err(Error::Shape(format!("row {}: expected 0/1 values", line + 1)));
        };
        match n {
            None => {
                if bits.is_empty() || bits.len() > 64 {
                    return Err(Error::Shape(format!("{} columns; need 1..=64", bits.len())));
                }
                n = Some(bits.len());
            }
            Some(k) if k != bits.len() => {
                return Err(Error::Shape(format!(
                    "row {}: {} columns, expected {k}",
                    line + 1,
                    bits.len()
                )));
            }
            _ => {}
        }
        out.push(bits.iter().enumerate().fold(0u64, |x, (v, &b)| x | (b as u64) << v));
    }
    let n = n.ok_or_else(|| Error::Shape("no sample rows".into()))?;
    Ok((n, out))
}

pub fn write_samples_csv(n: usize, xs: &[Assignment], w: impl std::io::Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((0..n).map(|v| format!("x{v}")))?;
    for &x in xs {
        wtr.write_record((0..n).map(|v| if x >> v & 1 == 1 { "1" } else { "0" }))?;
    }
    wtr.flush()?;
    Ok(())
}

/// J_P = Σ H(P_i) - H(P), which does not depend on any tree.
pub fn j_p(n: usize, probs: &[f64]) -> Result<f64> {
    let st = PairwiseStats::from_joint(n, probs)?;
    let hs: f64 = (0..n).map(|i| info::binary_entropy(st.marginal(i))).sum();
    Ok(hs - entropy(probs))
}

/// Σ over tree edges of I(X_child; X_parent).
pub fn tree_weight(stats: &PairwiseStats, parent: &[Option<usize>]) -> f64 {
    parent
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|j| stats.mi(i, j)))
        .sum()
}

/// The projection of exact statistics onto a tree: same pairwise
/// conditionals along the edges.
pub fn tree_projection(stats: &PairwiseStats, parent: &[Option<usize>]) -> Result<BayesNet> {
    let parents = parent.iter().map(|p| p.map(|q| vec![q]).unwrap_or_default()).collect();
    let cpt = parent
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Some(j) => stats.cond(i, *j).to_vec(),
            None => vec![stats.marginal(i)],
        })
        .collect();
    BayesNet::new(parents, cpt)
}

/// KL(P‖Q) for a joint table P and a net Q, by enumeration.
pub fn kl_table_net(probs: &[f64], q: &BayesNet) -> f64 {
    let mut s = 0.0;
    for (x, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            let qx = q.joint_prob(x as u64);
            if qx <= 0.0 {
                return f64::INFINITY;
            }
            s += p * (p / qx).ln();
        }
    }
    s.max(0.0)
}

pub fn kl_net_net(p: &BayesNet, q: &BayesNet) -> Result<f64> {
    let cube = ExactCube::new(p)?;
    Ok(kl_table_net(cube.probs(), q))
}
