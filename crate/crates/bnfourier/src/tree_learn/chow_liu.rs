use serde::{Deserialize, Serialize};
use serde_json::json;

use super::edmonds::{edmonds_arborescence, Edge, Optimize};
use super::info::kl_bernoulli;
use super::PairwiseStats;
use crate::bn_model::{sigma_of, BayesNet, BoundednessReport, NetFile};
use crate::constants::TOL_BISECT;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnedTree {
    pub algorithm: String,
    /// parent of each node; None for roots
    pub parent: Vec<Option<usize>>,
    /// weight (or cost) of the edge chosen into each node, root edges included
    pub node_weights: Vec<f64>,
    pub total: f64,
    pub net: BayesNet,
    pub report: BoundednessReport,
}

impl LearnedTree {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|j| (j, i)))
            .collect()
    }

    /// Undirected skeleton as sorted (min, max) pairs.
    pub fn skeleton(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        e.sort();
        e
    }

    /// Net file with a provenance block.
    pub fn to_file(&self, m: f64, seed: Option<u64>, c: Option<f64>, alpha: Option<f64>) -> NetFile {
        let mut f = self.net.to_file();
        f.provenance = Some(json!({
            "algorithm": self.algorithm,
            "m": m,
            "seed": seed,
            "c": c,
            "alpha": alpha,
        }));
        f
    }
}

fn assemble(
    algorithm: &str,
    parent: Vec<Option<usize>>,
    node_weights: Vec<f64>,
    cpt: Vec<Vec<f64>>,
) -> Result<LearnedTree> {
    let parents = parent.iter().map(|p| p.map(|q| vec![q]).unwrap_or_default()).collect();
    let net = BayesNet::new(parents, cpt)?;
    let report = net.validate()?;
    Ok(LearnedTree {
        algorithm: algorithm.into(),
        total: node_weights.iter().sum(),
        parent,
        node_weights,
        net,
        report,
    })
}

fn smoothed_cpt(stats: &PairwiseStats, parent: &[Option<usize>]) -> Vec<Vec<f64>> {
    parent
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Some(j) => stats.smoothed_cond(i, *j).to_vec(),
            None => vec![stats.smoothed_marginal(i)],
        })
        .collect()
}

/// Maximum spanning tree on empirical mutual information, oriented away
/// from node 0, with Laplace-smoothed cpts.
pub fn chow_liu_baseline(stats: &PairwiseStats) -> Result<LearnedTree> {
    let n = stats.n;
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (stats.mi(i, j), i, j))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut y = x;
        while uf[y] != r {
            let nx = uf[y];
            uf[y] = r;
            y = nx;
        }
        r
    }
    let mut adj = vec![Vec::new(); n];
    for &(w, i, j) in &pairs {
        let (a, b) = (find(&mut uf, i), find(&mut uf, j));
        if a != b {
            uf[a] = b;
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    let mut parent = vec![None; n];
    let mut node_weights = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, w) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                node_weights[v] = w;
                queue.push_back(v);
            }
        }
    }
    assemble(
        "chow_liu_baseline",
        parent.clone(),
        node_weights,
        smoothed_cpt(stats, &parent),
    )
}

/// Directed Chow-Liu restricted to edges whose smoothed conditional is
/// c/2-bounded and (0.5-c/2)-difference bounded (checked per direction).
/// Edges failing the check get weight 0 and zero-weight edges are dropped,
/// so the output may be a forest.
pub fn chow_liu_diff_restricted(stats: &PairwiseStats, c: f64) -> Result<LearnedTree> {
    if !(c > 0.0 && c < 0.5) {
        return Err(Error::Contract(format!("c = {c} outside (0, 0.5)")));
    }
    let n = stats.n;
    let bound = 0.5 - c / 2.0;
    let ok = |q: [f64; 2]| {
        q.iter().all(|&x| x >= c / 2.0 && x <= 1.0 - c / 2.0)
            && (q[1] - q[0]).abs() <= bound
            && (sigma_of(q[1]) - sigma_of(q[0])).abs() <= bound
    };
    let mut edges = Vec::with_capacity(n * n);
    for i in 0..n {
        edges.push(Edge { from: n, to: i, w: 0.0 });
        for j in 0..n {
            if i != j {
                let w = if ok(stats.smoothed_cond(i, j)) {
                    stats.mi(i, j)
                } else {
                    0.0
                };
                edges.push(Edge { from: j, to: i, w });
            }
        }
    }
    let arb = edmonds_arborescence(n + 1, n, &edges, Optimize::Max)?;
    let mut parent = vec![None; n];
    let mut node_weights = vec![0.0; n];
    for i in 0..n {
        if let Some(j) = arb.parent[i] {
            if j < n {
                let w = edges.iter().find(|e| e.from == j && e.to == i).unwrap().w;
                if w > 0.0 {
                    parent[i] = Some(j);
                    node_weights[i] = w;
                }
            }
        }
    }
    assemble(
        "chow_liu_diff_restricted",
        parent.clone(),
        node_weights,
        smoothed_cpt(stats, &parent),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Active {
    pub lower: bool,
    pub upper: bool,
    pub diff: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    /// Q(X_i = 1 | X_j = 0), Q(X_i = 1 | X_j = 1)
    pub q0: f64,
    pub q1: f64,
    /// Σ_b P_j(b) KL(P_{i|j=b} ‖ Q_{i|j=b}) - I
    pub cost: f64,
    pub kl_part: f64,
    pub active: Active,
}

fn check_box(c: f64, alpha: f64) -> Result<()> {
    if !(c > 0.0 && c < 0.5) || !(alpha >= 0.0 && alpha <= 1.0 - 2.0 * c + 1e-12) {
        return Err(Error::Contract(format!(
            "need 0 < c < 0.5 and 0 <= alpha <= 1-2c; got c = {c}, alpha = {alpha}"
        )));
    }
    Ok(())
}

// a parent value that never occurs leaves its row free; copy the other row
fn usable(pj: [f64; 2], p: [f64; 2]) -> [f64; 2] {
    match (pj[0] > 0.0, pj[1] > 0.0) {
        (false, _) => [p[1], p[1]],
        (_, false) => [p[0], p[0]],
        _ => p,
    }
}

fn objective(pj: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    pj[0] * kl_bernoulli(p[0], q[0]) + pj[1] * kl_bernoulli(p[1], q[1])
}

/// Minimizes Σ_b P_j(b) KL(p_b ‖ q_b) over c ≤ q_b ≤ 1-c, |q0-q1| ≤ α.
///
/// The objective is separable and convex. Clamp the unconstrained optimum
/// to the box; if the difference constraint is still violated the optimum
/// lies on the line q1 = q0 ± α, found by bisection on the derivative.
pub fn lp_fit(pj: [f64; 2], p: [f64; 2], mi: f64, c: f64, alpha: f64) -> Result<EdgeFit> {
    check_box(c, alpha)?;
    let p = usable(pj, p);
    let mut q = p.map(|x| x.clamp(c, 1.0 - c));
    let mut active = Active {
        lower: q.iter().zip(&p).any(|(a, b)| a != b && *a == c),
        upper: q.iter().zip(&p).any(|(a, b)| a != b && *a == 1.0 - c),
        diff: false,
    };
    if (q[1] - q[0]).abs() > alpha {
        active.diff = true;
        let s = (q[1] - q[0]).signum();
        let d = |t: f64| {
            let u = t + s * alpha;
            pj[0] * (t - p[0]) / (t * (1.0 - t)) + pj[1] * (u - p[1]) / (u * (1.0 - u))
        };
        let mut lo = c.max(c - s * alpha);
        let mut hi = (1.0 - c).min(1.0 - c - s * alpha);
        let t = if d(lo) >= 0.0 {
            lo
        } else if d(hi) <= 0.0 {
            hi
        } else {
            while hi - lo > TOL_BISECT {
                let mid = 0.5 * (lo + hi);
                if d(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        q = [t, t + s * alpha];
        active.lower = q.iter().any(|&x| x <= c + TOL_BISECT);
        active.upper = q.iter().any(|&x| x >= 1.0 - c - TOL_BISECT);
    }
    let kl_part = objective(pj, p, q);
    Ok(EdgeFit {
        q0: q[0],
        q1: q[1],
        cost: kl_part - mi,
        kl_part,
        active,
    })
}

/// l_P(i, j): cost of making j the parent of i.
pub fn lp_edge_cost(stats: &PairwiseStats, i: usize, j: usize, c: f64, alpha: f64) -> Result<EdgeFit> {
    lp_fit(stats.parent_dist(j), stats.cond(i, j), stats.mi(i, j), c, alpha)
}

/// Grid oracle for `lp_fit`: q0 runs over c, c+step, ..., 1-c plus the
/// polytope vertices; for each q0 the best q1 is the clamp of p1 into the
/// feasible interval (the q1 part is convex with minimizer p1).
pub fn lp_edge_cost_grid(pj: [f64; 2], p: [f64; 2], mi: f64, c: f64, alpha: f64, step: f64) -> Result<f64> {
    check_box(c, alpha)?;
    let p = usable(pj, p);
    let steps = ((1.0 - 2.0 * c) / step).floor() as usize;
    let mut best = f64::INFINITY;
    let mut eval = |q0: f64| {
        let lo = c.max(q0 - alpha);
        let hi = (1.0 - c).min(q0 + alpha);
        let q1 = p[1].clamp(lo, hi);
        best = best.min(objective(pj, p, [q0, q1]));
    };
    for k in 0..=steps {
        eval(c + k as f64 * step);
    }
    for v in [1.0 - c, c + alpha, 1.0 - c - alpha] {
        eval(v.clamp(c, 1.0 - c));
    }
    Ok(best - mi)
}

/// min over c ≤ q ≤ 1-c of KL(Bernoulli(p) ‖ Bernoulli(q)).
pub fn root_fit(p: f64, c: f64) -> (f64, f64) {
    let q = p.clamp(c, 1.0 - c);
    (q, kl_bernoulli(p, q))
}

/// Minimum arborescence over l_P edge costs plus root costs KL(P_i ‖ q_i)
/// from a virtual root. Nodes attached to the virtual root become roots.
pub fn lp_chow_liu(stats: &PairwiseStats, c: f64, alpha: f64) -> Result<LearnedTree> {
    check_box(c, alpha)?;
    let n = stats.n;
    let mut edges = Vec::with_capacity(n * n);
    let mut fits = vec![None; n * n];
    for i in 0..n {
        edges.push(Edge {
            from: n,
            to: i,
            w: root_fit(stats.marginal(i), c).1,
        });
        for j in 0..n {
            if i != j {
                let f = lp_edge_cost(stats, i, j, c, alpha)?;
                fits[i * n + j] = Some(f);
                edges.push(Edge {
                    from: j,
                    to: i,
                    w: f.cost,
                });
            }
        }
    }
    let arb = edmonds_arborescence(n + 1, n, &edges, Optimize::Min)?;
    let mut parent = vec![None; n];
    let mut node_weights = vec![0.0; n];
    let mut cpt = Vec::with_capacity(n);
    for i in 0..n {
        match arb.parent[i] {
            Some(j) if j < n => {
                let f = fits[i * n + j].unwrap();
                parent[i] = Some(j);
                node_weights[i] = f.cost;
                cpt.push(vec![f.q0, f.q1]);
            }
            _ => {
                let (q, cost) = root_fit(stats.marginal(i), c);
                node_weights[i] = cost;
                cpt.push(vec![q]);
            }
        }
    }
    assemble("lp_chow_liu", parent, node_weights, cpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{make_chain, random, seeded};
    use crate::fourier_basis::ExactCube;
    use crate::tree_learn::{j_p, kl_net_net, kl_table_net};
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn feasible_fit_is_unconstrained() {
        let f = lp_fit([0.4, 0.6], [0.3, 0.5], 0.02, 0.1, 0.5).unwrap();
        assert_eq!((f.q0, f.q1), (0.3, 0.5));
        assert_eq!(f.kl_part, 0.0);
        assert!((f.cost + 0.02).abs() < 1e-15);
        assert_eq!(f.active, Active::default());
    }

    #[test]
    fn vacuous_alpha_matches_box() {
        let c = 0.1;
        let f = lp_fit([0.5, 0.5], [0.01, 0.97], 0.0, c, 1.0 - 2.0 * c).unwrap();
        assert!((f.q0 - 0.1).abs() < 1e-15 && (f.q1 - 0.9).abs() < 1e-15);
        assert!(!f.active.diff);
    }

    #[test]
    fn bad_box_rejected() {
        assert!(lp_fit([0.5, 0.5], [0.5, 0.5], 0.0, 0.5, 0.0).is_err());
        assert!(lp_fit([0.5, 0.5], [0.5, 0.5], 0.0, 0.2, -0.1).is_err());
        assert!(lp_fit([0.5, 0.5], [0.5, 0.5], 0.0, 0.2, 0.7).is_err());
    }

    #[test]
    fn matches_grid_oracle() {
        let mut rng = seeded(23);
        for _ in 0..200 {
            let c = rng.gen_range(0.05..0.4);
            let alpha = rng.gen_range(0.0..1.0 - 2.0 * c);
            let pj0: f64 = rng.gen_range(0.05..0.95);
            let p = [rng.gen::<f64>(), rng.gen::<f64>()];
            let f = lp_fit([pj0, 1.0 - pj0], p, 0.0, c, alpha).unwrap();
            let g = lp_edge_cost_grid([pj0, 1.0 - pj0], p, 0.0, c, alpha, 1e-4).unwrap();
            assert!(f.cost <= g + 1e-12 && g - f.cost <= 1e-6, "{f:?} vs {g}");
            assert!(f.q0 >= c - 1e-12 && f.q1 <= 1.0 - c + 1e-12 && (f.q0 - f.q1).abs() <= alpha + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cost_monotone(pj0 in 0.05f64..0.95, p0 in 0.0f64..1.0, p1 in 0.0f64..1.0, c in 0.05f64..0.3, a in 0.0f64..0.3) {
            let pj = [pj0, 1.0 - pj0];
            let a_hi = (a + 0.1).min(1.0 - 2.0 * c);
            let f = lp_fit(pj, [p0, p1], 0.0, c, a.min(a_hi)).unwrap();
            let g = lp_fit(pj, [p0, p1], 0.0, c, a_hi).unwrap();
            prop_assert!(g.cost <= f.cost + 1e-9);
            let c2 = c / 2.0;
            let h = lp_fit(pj, [p0, p1], 0.0, c2, a.min(a_hi)).unwrap();
            prop_assert!(h.cost <= f.cost + 1e-9);
        }
    }

    #[test]
    fn baseline_recovers_chain() {
        let mut rng = seeded(31);
        let net = make_chain(0.5, &[(0.2, 0.8), (0.25, 0.75), (0.2, 0.85), (0.3, 0.8), (0.15, 0.75)]).unwrap();
        let xs = net.ancestral_sample(&mut rng, 100_000);
        let st = PairwiseStats::from_samples(6, &xs).unwrap();
        let t = chow_liu_baseline(&st).unwrap();
        assert_eq!(t.skeleton(), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let _ = rng.gen::<u8>();
    }

    #[test]
    fn independent_coins() {
        let mut rng = seeded(32);
        let net = crate::bn_model::make_product(&[0.5, 0.5]).unwrap();
        let xs = net.ancestral_sample(&mut rng, 200_000);
        let st = PairwiseStats::from_samples(2, &xs).unwrap();
        let t = chow_liu_baseline(&st).unwrap();
        assert!(t.total < 1e-3);
        assert!(kl_net_net(&net, &t.net).unwrap() <= 0.01);
        let single = PairwiseStats::from_samples(1, &[1, 1, 0]).unwrap();
        let t1 = chow_liu_baseline(&single).unwrap();
        assert!((t1.net.cpt(0)[0] - 3.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn adversarial_pair_filtered() {
        // X1 copies X0 with prob .9: smoothed difference ≈ 0.8 > 0.5 - c/2
        let mut xs = Vec::new();
        for k in 0..1000u64 {
            let a = k % 2;
            let b = if k % 10 == 0 { 1 - a } else { a };
            xs.push(a | b << 1);
        }
        let st = PairwiseStats::from_samples(2, &xs).unwrap();
        let t = chow_liu_diff_restricted(&st, 0.2).unwrap();
        assert_eq!(t.parent, vec![None, None]);
        assert!(t.report.alpha() <= 0.5 - 0.1);
    }

    #[test]
    fn diff_restricted_realizable() {
        let mut rng = seeded(33);
        let c = 0.1;
        let net = random::tree(6, c, 0.5 - c, &mut rng);
        let xs = net.ancestral_sample(&mut rng, 20_000);
        let st = PairwiseStats::from_samples(6, &xs).unwrap();
        let t = chow_liu_diff_restricted(&st, c).unwrap();
        assert!(t.report.alpha_mu <= 0.5 - c / 2.0 && t.report.alpha_sigma <= 0.5 - c / 2.0);
        let kl_d = kl_net_net(&net, &t.net).unwrap();
        assert!(kl_d <= 0.05, "{kl_d}");
        let lp = lp_chow_liu(&st, c, 1.0 - 2.0 * c).unwrap();
        let kl_lp = kl_net_net(&net, &lp.net).unwrap();
        assert!(kl_lp <= kl_d + 0.05, "{kl_lp} vs {kl_d}");
    }

    #[test]
    fn lp_output_is_bounded() {
        let mut rng = seeded(34);
        let net = random::dag(5, 2, 0.02, &mut rng);
        let st = PairwiseStats::from_net(&net).unwrap();
        let (c, alpha) = (0.1, 0.2);
        let t = lp_chow_liu(&st, c, alpha).unwrap();
        assert!(t.report.c_star >= c - 1e-12 && t.report.alpha_mu <= alpha + 1e-9);
    }

    #[test]
    fn decomposition_identity() {
        // KL(P‖Q_T) = J_P + Σ node costs, for exact P and the lp fit
        let mut rng = seeded(35);
        for n in 2..=6 {
            let net = random::dag(n, 2, 0.05, &mut rng);
            let cube = ExactCube::new(&net).unwrap();
            let st = PairwiseStats::from_net(&net).unwrap();
            let t = lp_chow_liu(&st, 0.1, 0.3).unwrap();
            let kl = kl_table_net(cube.probs(), &t.net);
            let jp = j_p(n, cube.probs()).unwrap();
            assert!((kl - (jp + t.total)).abs() < 1e-9, "n={n}: {kl} vs {}", jp + t.total);
        }
    }
}
