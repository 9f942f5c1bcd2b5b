use bnfourier::bn_model::{random, seeded, sigma_of, BayesNet};
use bnfourier::dnf_learn::{DecisionTree, DnfFormula};
use bnfourier::fourier_basis::{basis_eval, ExactCube, IndexSet};
use bnfourier::km::{km_exact_table, KmParams};
use bnfourier::tree_learn::{lp_fit, PairwiseStats};
use proptest::prelude::*;
use rand::Rng as _;

fn dag(seed: u64, n: usize) -> BayesNet {
    random::dag(n, 3, 0.05, &mut seeded(seed))
}

fn random_table(seed: u64, size: usize) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Relabels variable v as perm[v], keeping cpt rows aligned with parent order.
fn relabel(net: &BayesNet, perm: &[usize]) -> BayesNet {
    let n = net.n();
    let mut parents = vec![Vec::new(); n];
    let mut cpt = vec![Vec::new(); n];
    for v in 0..n {
        parents[perm[v]] = net.parents(v).iter().map(|&p| perm[p]).collect();
        cpt[perm[v]] = net.cpt(v).to_vec();
    }
    BayesNet::new(parents, cpt).unwrap()
}

fn permute_x(x: u64, perm: &[usize]) -> u64 {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (v, &p)| acc | (((x >> v) & 1) << p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plancherel(seed in any::<u64>(), n in 1usize..=7) {
        let net = dag(seed, n);
        let cube = ExactCube::new(&net).unwrap();
        let f = random_table(seed ^ 1, cube.size());
        let g = random_table(seed ^ 2, cube.size());
        let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        let lhs = cube.expect(&fg);
        let rhs: f64 = cube.spectrum_dense(&f).iter().zip(cube.spectrum_dense(&g)).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn basis_magnitude_bound(seed in any::<u64>(), n in 1usize..=7, s in any::<u64>(), x in any::<u64>()) {
        let net = dag(seed, n);
        let mask = (1u64 << n) - 1;
        let s = IndexSet(s & mask);
        let c = net.validate().unwrap().c_star;
        let bound = (1.0 / sigma_of(c)).powi(s.len() as i32);
        prop_assert!(basis_eval(&net, s, x & mask).abs() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn l1_is_permutation_covariant(seed in any::<u64>(), n in 2usize..=6) {
        let net = dag(seed, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        perm.rotate_left((seed % n as u64) as usize);
        let moved = relabel(&net, &perm);
        let f = random_table(seed ^ 3, 1 << n);
        let a = ExactCube::new(&net).unwrap();
        let b = ExactCube::new(&moved).unwrap();
        // the same function, with inputs relabelled
        let mut g = vec![0.0; 1 << n];
        for x in 0..1u64 << n {
            g[permute_x(x, &perm) as usize] = f[x as usize];
        }
        let la: f64 = a.spectrum_dense(&f).iter().map(|c| c.abs()).sum();
        let lb: f64 = b.spectrum_dense(&g).iter().map(|c| c.abs()).sum();
        prop_assert!((la - lb).abs() <= 1e-9);
    }

    #[test]
    fn km_exact_returns_heavy_sets(seed in any::<u64>(), n in 1usize..=7, theta in 0.05f64..0.8) {
        let net = dag(seed, n);
        let cube = ExactCube::new(&net).unwrap();
        let f = random_table(seed ^ 4, cube.size());
        let spec = cube.spectrum_dense(&f);
        let out = km_exact_table(&cube, &f, &KmParams::new(theta, theta, 0.1).unwrap());
        let want: Vec<u64> = (0..spec.len() as u64).filter(|&s| spec[s as usize].abs() >= theta).collect();
        let mut got: Vec<u64> = out.sets.iter().map(|s| s.0).collect();
        got.sort_unstable();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn dnf_text_round_trip(seed in any::<u64>(), n in 1usize..=12, depth in 0usize..=4) {
        let t = DecisionTree::random(n, depth, &mut seeded(seed));
        let f = t.to_dnf();
        let back = DnfFormula::parse(&f.to_text()).unwrap();
        for x in 0..1u64 << n {
            prop_assert_eq!(back.eval(x), t.eval(x));
        }
    }

    #[test]
    fn net_json_round_trip(seed in any::<u64>(), n in 1usize..=10) {
        let net = dag(seed, n);
        let back = BayesNet::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), net.to_json());
    }

    #[test]
    fn lp_cost_monotone_in_alpha(pj0 in 0.05f64..0.95, p0 in 0.0f64..1.0, p1 in 0.0f64..1.0, c in 0.05f64..0.3) {
        let pj = [pj0, 1.0 - pj0];
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let alpha = (1.0 - 2.0 * c) * k as f64 / 10.0;
            let cost = lp_fit(pj, [p0, p1], 0.0, c, alpha).unwrap().cost;
            prop_assert!(cost <= last + 1e-12);
            last = cost;
        }
    }

    #[test]
    fn sample_stats_match_exact_marginals(seed in any::<u64>()) {
        let net = random::tree(5, 0.2, 0.3, &mut seeded(seed));
        let xs = net.ancestral_sample(&mut seeded(seed ^ 5), 20_000);
        let est = PairwiseStats::from_samples(5, &xs).unwrap();
        let ex = PairwiseStats::from_net(&net).unwrap();
        for i in 0..5 {
            prop_assert!((est.marginal(i) - ex.marginal(i)).abs() < 0.03);
        }
    }
}
