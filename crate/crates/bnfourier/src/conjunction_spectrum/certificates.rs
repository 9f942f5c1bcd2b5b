//! Executable lower-bound constructions.

use serde::{Deserialize, Serialize};

use super::{chain_coefficient, chain_spectral_norm_exact, conjunction_table, Conjunction};
use crate::bn_model::{gstar_v, make_chain, make_gstar, make_homogeneous_chain, sigma_of, BayesNet, GStarParams};
use crate::constants::{CHAIN_NONEMPTY_L1, GSTAR_BASE, UNBOUNDED_CHAIN_STEP};
use crate::error::Result;
use crate::fourier_basis::{ExactCube, IndexSet};

pub const UNBOUNDED_C: f64 = 0.00001;
/// 0.5 + α + c with α = 0.353
pub const UNBOUNDED_MU1: f64 = 0.85301;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub construction: String,
    pub n: usize,
    pub computed: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CertificateRow {
    fn new(construction: &str, n: usize, computed: f64, threshold: f64) -> Self {
        CertificateRow {
            construction: construction.into(),
            n,
            computed,
            threshold,
            pass: computed >= threshold,
        }
    }
}

fn dsum(m0: f64, m1: f64) -> (f64, f64) {
    (m1 - m0, sigma_of(m1) - sigma_of(m0))
}

/// Chain of n+2 nodes with root marginal c and rows (c, 0.85301).
pub fn unbounded_chain_net(n: usize) -> Result<BayesNet> {
    make_chain(UNBOUNDED_C, &vec![(UNBOUNDED_C, UNBOUNDED_MU1); n + 1])
}

/// σ₀·D_μ·(D_μ+D_σ)ⁿ: the coefficients of the last variable over sets that
/// contain the root and not the last variable.
pub fn unbounded_chain_l1_lower(n: usize) -> f64 {
    let (dm, ds) = dsum(UNBOUNDED_C, UNBOUNDED_MU1);
    sigma_of(UNBOUNDED_C) * dm * (dm + ds).powi(n as i32)
}

/// Σ_{S≠∅} |f̂_S| for f = last variable of the homogeneous chain of length m.
pub fn chain_factor(m: usize, mu0: f64, mu1: f64) -> Result<f64> {
    let net = make_homogeneous_chain(m, mu0, mu1)?;
    let f = Conjunction::literal(m - 1, true);
    Ok(chain_spectral_norm_exact(&net, &f)? - chain_coefficient(&net, &f, IndexSet::EMPTY)?.abs())
}

/// (2D)^{n-1} · chain_factor^n
pub fn gstar_composite(p: &GStarParams) -> Result<f64> {
    Ok((2.0 * p.d).powi(p.n as i32 - 1) * chain_factor(p.m, p.mu0, p.mu1)?.powi(p.n as i32))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GStarCheck {
    pub n: usize,
    pub m: usize,
    pub vars: usize,
    pub enumerated: f64,
    pub closed_form: f64,
    pub residual: f64,
}

/// Enumerates Σ |f̂_S| for f = V_1 over sets S that meet every Y chain and
/// avoid every V node, and compares with the factorized closed form.
pub fn gstar_factorization_check(p: &GStarParams) -> Result<GStarCheck> {
    let net = make_gstar(*p)?;
    let cube = ExactCube::new(&net)?;
    let sink = gstar_v(p, 1);
    let spec = cube.spectrum_dense(&conjunction_table(&cube, &Conjunction::literal(sink, true)));
    let chain_mask = |k: usize| ((1u64 << p.m) - 1) << (k * p.m);
    let v_mask = !((1u64 << (p.n * p.m)) - 1);
    let enumerated: f64 = spec
        .iter()
        .enumerate()
        .filter(|(s, _)| {
            let s = *s as u64;
            s & v_mask == 0 && (0..p.n).all(|k| s & chain_mask(k) != 0)
        })
        .map(|(_, c)| c.abs())
        .sum();
    let closed_form = gstar_composite(p)?;
    Ok(GStarCheck {
        n: p.n,
        m: p.m,
        vars: net.n(),
        enumerated,
        closed_form,
        residual: (enumerated - closed_form).abs(),
    })
}

/// The three certificate rows; `gstar_n` sets the branching count of the
/// composite row.
pub fn lower_bound_certificates(gstar_n: usize) -> Result<Vec<CertificateRow>> {
    let (dm, ds) = dsum(UNBOUNDED_C, UNBOUNDED_MU1);
    let p = GStarParams::default();
    let chain23 = chain_factor(p.m, p.mu0, p.mu1)?;
    let gp = GStarParams { n: gstar_n, ..p };
    Ok(vec![
        CertificateRow::new("unbounded_chain_dmu_plus_dsigma", 1, dm + ds, UNBOUNDED_CHAIN_STEP),
        CertificateRow::new("bounded_chain_nonempty_l1", p.m, chain23, CHAIN_NONEMPTY_L1),
        CertificateRow::new(
            "gstar_composite",
            gstar_n,
            gstar_composite(&gp)?,
            GSTAR_BASE.powi(gstar_n as i32),
        ),
    ])
}
