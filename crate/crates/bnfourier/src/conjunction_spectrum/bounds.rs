use serde::{Deserialize, Serialize};

use crate::bn_model::BoundednessReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub c: f64,
    pub d_mu: f64,
    pub d_sigma: f64,
    pub alpha: f64,
    /// junta size, if the net is a k-junta distribution
    pub k: Option<usize>,
}

impl From<&BoundednessReport> for BoundInputs {
    fn from(r: &BoundednessReport) -> Self {
        BoundInputs {
            c: r.c_star,
            d_mu: r.alpha_mu,
            d_sigma: r.alpha_sigma,
            alpha: r.alpha(),
            k: None,
        }
    }
}

/// A bound together with whether its premise holds. `value` is None when
/// it does not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub name: String,
    pub premise: String,
    pub applicable: bool,
    pub value: Option<f64>,
}

impl Bound {
    fn new(name: &str, premise: &str, ok: bool, v: impl FnOnce() -> f64) -> Self {
        Bound {
            name: name.into(),
            premise: premise.into(),
            applicable: ok,
            value: ok.then(v),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundSet {
    pub d: usize,
    pub chain: Bound,
    pub chain_refined: Bound,
    pub tree: Bound,
    pub kjunta: Bound,
    /// c^d ≤ E[f] ≤ (1-c)^d for a d-literal conjunction
    pub expectation: (f64, f64),
}

pub fn l1_bounds(inp: &BoundInputs, d: usize) -> BoundSet {
    let di = d as i32;
    let s = inp.d_mu + inp.d_sigma;
    let chain_ok = s < 1.0;
    BoundSet {
        d,
        chain: Bound::new("chain", "D_sigma + D_mu < 1", chain_ok, || {
            ((2.0 - s) * (1.0 - inp.c) / (1.0 - s)).powi(di)
        }),
        chain_refined: Bound::new("chain_refined", "D_sigma + D_mu < 1", chain_ok, || {
            ((1.5 - s) / (1.0 - s)).powi(di)
        }),
        tree: Bound::new("tree", "2 alpha < 1", 2.0 * inp.alpha < 1.0, || {
            ((2.0 - 2.0 * inp.alpha) / (1.0 - 2.0 * inp.alpha)).powi(2 * di)
        }),
        kjunta: Bound::new("kjunta", "k-junta distribution", inp.k.is_some(), || {
            2f64.powf((inp.k.unwrap_or(0) + d) as f64 / 2.0)
        }),
        expectation: (inp.c.powi(di), (1.0 - inp.c).powi(di)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutions() {
        let b = l1_bounds(
            &BoundInputs {
                c: 0.1,
                ..Default::default()
            },
            3,
        );
        assert!((b.chain.value.unwrap() - (2.0f64 * 0.9).powi(3)).abs() < 1e-12);
        assert!((b.tree.value.unwrap() - 64.0).abs() < 1e-12);
        assert!(!b.kjunta.applicable && b.kjunta.value.is_none());
        let j = l1_bounds(
            &BoundInputs {
                k: Some(0),
                ..Default::default()
            },
            4,
        );
        assert_eq!(j.kjunta.value, Some(4.0));
    }

    #[test]
    fn inapplicable_gives_no_number() {
        let b = l1_bounds(
            &BoundInputs {
                c: 0.01,
                d_mu: 0.6,
                d_sigma: 0.5,
                alpha: 0.6,
                k: None,
            },
            2,
        );
        assert!(b.chain.value.is_none() && b.chain_refined.value.is_none() && b.tree.value.is_none());
    }
}
