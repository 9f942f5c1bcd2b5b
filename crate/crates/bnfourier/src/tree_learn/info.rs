//! Information measures on small discrete distributions.
//!
//! Natural log everywhere; `*_bits` helpers convert at the interface.

use std::f64::consts::LN_2;

pub fn to_bits(nats: f64) -> f64 {
    nats / LN_2
}

fn xlnx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// H(p) in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// KL(p‖q) in nats; `f64::INFINITY` when q(x) = 0 < p(x).
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        s += a * (a / b).ln();
    }
    s.max(0.0)
}

/// KL(Bernoulli(p) ‖ Bernoulli(q))
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    kl_divergence(&[p, 1.0 - p], &[q, 1.0 - q])
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// I(X;Y) in nats for a 2×2 joint indexed `[2a + b]` = P(X=a, Y=b).
pub fn mutual_information(joint: &[f64; 4]) -> f64 {
    let px = [joint[0] + joint[1], joint[2] + joint[3]];
    let py = [joint[0] + joint[2], joint[1] + joint[3]];
    let mut s = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[2 * a + b];
            if p > 0.0 {
                s += p * (p / (px[a] * py[b])).ln();
            }
        }
    }
    s.max(0.0)
}

pub fn mutual_information_bits(joint: &[f64; 4]) -> f64 {
    to_bits(mutual_information(joint))
}

/// sqrt(KL/2), the Pinsker bound on total variation.
pub fn pinsker_bound(kl: f64) -> f64 {
    (0.5 * kl).sqrt()
}
