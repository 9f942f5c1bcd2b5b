//! Square-error diagnostics: truncating an L1-bounded approximation to a
//! sparse one, then approximating f by its own large coefficients.

use serde::{Deserialize, Serialize};

use super::{ExactCube, IndexSet, Range, SparseSpectrum};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxReport {
    pub epsilon: f64,
    /// ‖ĥ‖₁ of the supplied approximation
    pub l1: f64,
    /// E[(f-h)^2]; the chain below assumes this is ≤ ε/4
    pub err_h: f64,
    pub premise_h: bool,
    /// g = large coefficients of h
    pub g_support: usize,
    pub g_l1: f64,
    pub err_g: f64,
    pub sparsity_bound: f64,
    /// T actually used for the second stage
    pub t: f64,
    pub threshold: f64,
    pub gamma: f64,
    pub s_size: usize,
    pub s_star_size: usize,
    pub err_h1: f64,
    pub err_h2: f64,
    pub err_h3: f64,
    /// P(f != sign(h3)); only for ±1 targets
    pub sign_err_h3: Option<f64>,
    pub checks: Vec<(String, bool)>,
}

impl ApproxReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Runs both truncation stages on an explicit instance.
///
/// `h` is any approximation of `f` (typically its truncated spectrum). The
/// first stage keeps the terms of h with |ĥ_S| ≥ ε/(4 L1), giving g with
/// sparsity at most T = 4 L1²/ε. The second stage (with `t` overriding T)
/// takes 𝒮 = {S : |f̂_S| ≥ sqrt(ε/T)}, perturbs every coefficient by the
/// worst-case γ = ε²/(4T), and extends 𝒮 by the next largest coefficients up
/// to 4T/ε sets.
///
/// Each bound is only checked when its premise holds on the instance, so a
/// failing check is a real counterexample.
pub fn sparse_square_approx(
    cube: &ExactCube,
    fx: &[f64],
    range: Range,
    h: &SparseSpectrum,
    epsilon: f64,
    t: Option<f64>,
) -> ApproxReport {
    let l1 = h.l1();
    let err_h = cube.sq_dist(fx, &cube.eval_table(h));
    let premise_h = err_h <= epsilon / 4.0 + 1e-12;

    let mut g = h.clone();
    let cut = epsilon / (4.0 * l1);
    g.retain(|_, c| c.abs() >= cut);
    let err_g = cube.sq_dist(fx, &cube.eval_table(&g));
    let sparsity_bound = 4.0 * l1 * l1 / epsilon;

    let t = t.unwrap_or(sparsity_bound).max(1.0);
    let threshold = (epsilon / t).sqrt();
    let gamma = epsilon * epsilon / (4.0 * t);

    let fhat = cube.spectrum_dense(fx);
    let mut by_size: Vec<(usize, f64)> = fhat.iter().copied().enumerate().collect();
    by_size.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));

    let n = cube.n();
    let mut h1 = SparseSpectrum::new(n);
    let mut h2 = SparseSpectrum::new(n);
    let mut h3 = SparseSpectrum::new(n);
    // push each estimate away from zero-error by exactly γ
    let perturb = |c: f64| if c >= 0.0 { c + gamma } else { c - gamma };
    let s_star_cap = (4.0 * t / epsilon).floor() as usize;
    let mut s_size = 0;
    let mut s_star_size = 0;
    for &(m, c) in &by_size {
        let s = IndexSet(m as u64);
        if c.abs() >= threshold {
            s_size += 1;
            h1.set(s, c);
            h2.set(s, perturb(c));
        }
        if c.abs() >= threshold || s_star_size < s_star_cap {
            s_star_size += 1;
            h3.set(s, perturb(c));
        }
    }
    // |𝒮| ≤ T/ε is guaranteed by Parseval only for bounded f; if 𝒮 alone
    // exceeds the cap we still keep it, and the check below flags it.
    let err_h1 = cube.sq_dist(fx, &cube.eval_table(&h1));
    let err_h2 = cube.sq_dist(fx, &cube.eval_table(&h2));
    let h3x = cube.eval_table(&h3);
    let err_h3 = cube.sq_dist(fx, &h3x);
    let sign_err_h3 = match range {
        Range::PlusMinus => Some(
            cube.probs()
                .iter()
                .zip(fx.iter().zip(&h3x))
                .filter(|(_, (f, hv))| {
                    let s = if **hv > 0.0 { 1.0 } else { -1.0 };
                    s != **f
                })
                .map(|(p, _)| p)
                .sum(),
        ),
        Range::ZeroOne => None,
    };

    let tol = 1e-12;
    // E[(f-g)^2] ≤ ε with T-sparse g is the premise of the second stage
    let premise_g = err_g <= epsilon + tol && (g.len() as f64) <= t + tol;
    let mut checks = vec![
        ("g_l1_le_l1".to_string(), g.l1() <= l1 + tol),
        (
            "g_sparsity_le_4l1sq_over_eps".to_string(),
            g.len() as f64 <= sparsity_bound + tol,
        ),
        ("err_g_le_eps".to_string(), !premise_h || err_g <= epsilon + tol),
        (
            "err_h1_le_2eps".to_string(),
            !premise_g || err_h1 <= 2.0 * epsilon + tol,
        ),
        (
            "err_h2_le_3eps".to_string(),
            !premise_g || err_h2 <= 3.0 * epsilon + tol,
        ),
        (
            "err_h3_le_3eps".to_string(),
            !premise_g || err_h3 <= 3.0 * epsilon + tol,
        ),
        (
            "s_star_le_4t_over_eps".to_string(),
            s_star_size as f64 <= 4.0 * t / epsilon + tol,
        ),
    ];
    if let Some(se) = sign_err_h3 {
        checks.push(("sign_err_le_sq_err".to_string(), se <= err_h3 + tol));
    }

    ApproxReport {
        epsilon,
        l1,
        err_h,
        premise_h,
        g_support: g.len(),
        g_l1: g.l1(),
        err_g,
        sparsity_bound,
        t,
        threshold,
        gamma,
        s_size,
        s_star_size,
        err_h1,
        err_h2,
        err_h3,
        sign_err_h3,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{bit, make_product};

    #[test]
    fn sparse_target_is_recovered_exactly() {
        let net = make_product(&[0.5, 0.3, 0.7]).unwrap();
        let cube = ExactCube::new(&net).unwrap();
        // x0 AND x1 under a product net has 4 nonzero coefficients
        let fx = cube.table(&|x| (bit(x, 0) & bit(x, 1)) as f64);
        let sp = cube.spectrum(&fx);
        assert_eq!(sp.len(), 4);
        let r = sparse_square_approx(&cube, &fx, Range::ZeroOne, &sp, 0.01, Some(4.0));
        assert!(r.err_h1 < 1e-20, "{}", r.err_h1);
        assert!(r.all_pass(), "{:?}", r.checks);
    }

    #[test]
    fn truncated_h_sparsity() {
        let net = make_product(&[0.5; 4]).unwrap();
        let cube = ExactCube::new(&net).unwrap();
        let fx = cube.table(&|x| if x.count_ones() >= 2 { 1.0 } else { -1.0 });
        let sp = cube.spectrum(&fx);
        let r = sparse_square_approx(&cube, &fx, Range::PlusMinus, &sp, 0.2, None);
        assert!(r.g_support as f64 <= r.sparsity_bound);
        assert!(r.all_pass(), "{:?}", r.checks);
    }
}
