use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{p1, Clamp, DnfFormula, SignHypothesis};
use crate::bn_model::{Assignment, BayesNet, Rng};
use crate::conjunction_spectrum::{conjunction_table, l1_bounds, BoundInputs, Conjunction};
use crate::constants::{PRODUCT_L1_BASE, PTF_LINF_FACTOR};
use crate::error::{Error, Result};
use crate::fourier_basis::{eval_sparse, ExactCube, IndexSet, SparseSpectrum};
use crate::km::{km_exact_table, km_run, EstimatorBudget, KmConfig, KmMode, KmParams, KmStats, Oracle};

/// Which bound L₁(d) on the spectral norm of a d-literal conjunction is in
/// force for the target distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Form {
    /// 1.21^d
    Product,
    /// ((2-s)(1-c)/(1-s))^d with s = D_μ + D_σ < 1
    Chain(BoundInputs),
    /// ((2-2α)/(1-2α))^{2d}, 2α < 1
    Tree { alpha: f64 },
    /// 2^{(k+d)/2}
    KJunta { k: usize },
    /// table[d] = max enumerated L₁ over d-literal conjunctions on one net;
    /// looked up at min(d, len-1)
    Enumerated(Vec<f64>),
}

impl L1Form {
    pub fn l1(&self, d: usize) -> Result<f64> {
        let inp = match self {
            L1Form::Product => return Ok(PRODUCT_L1_BASE.powi(d as i32)),
            L1Form::Enumerated(t) => {
                return t
                    .get(d.min(t.len().saturating_sub(1)))
                    .copied()
                    .ok_or_else(|| Error::Contract("empty L1 table".into()))
            }
            L1Form::Chain(inp) => *inp,
            L1Form::Tree { alpha } => BoundInputs {
                alpha: *alpha,
                ..Default::default()
            },
            L1Form::KJunta { k } => BoundInputs {
                k: Some(*k),
                ..Default::default()
            },
        };
        let set = l1_bounds(&inp, d);
        let b = match self {
            L1Form::Chain(_) => set.chain,
            L1Form::Tree { .. } => set.tree,
            _ => set.kjunta,
        };
        b.value
            .ok_or_else(|| Error::Contract(format!("{} bound does not apply: needs {}", b.name, b.premise)))
    }
}

/// Largest enumerated L₁ among conjunctions with exactly k literals, for
/// k = 0..=dmax, made nondecreasing in k. Cost 3^n spectra; desk scale only.
pub fn enumerated_l1_table(net: &BayesNet, dmax: usize) -> Result<Vec<f64>> {
    let cube = ExactCube::new(net)?;
    let n = net.n();
    let dmax = dmax.min(n);
    let masks: Vec<u64> = (0..1u64 << n).filter(|m| m.count_ones() as usize <= dmax).collect();
    let per_mask: Vec<(usize, f64)> = masks
        .par_iter()
        .map(|&m| {
            let vars = IndexSet(m);
            let k = vars.len();
            let mut best = 0.0f64;
            for signs in 0..1u64 << k {
                let mut t1 = IndexSet::EMPTY;
                for (i, v) in vars.iter().enumerate() {
                    if signs >> i & 1 == 1 {
                        t1.insert(v);
                    }
                }
                let f = Conjunction {
                    t1,
                    t0: IndexSet(m & !t1.0),
                };
                let l1: f64 = cube
                    .spectrum_dense(&conjunction_table(&cube, &f))
                    .iter()
                    .map(|c| c.abs())
                    .sum();
                best = best.max(l1);
            }
            (k, best)
        })
        .collect();
    let mut table = vec![0.0f64; dmax + 1];
    for (k, v) in per_mask {
        table[k] = table[k].max(v);
    }
    for k in 1..table.len() {
        table[k] = table[k].max(table[k - 1]);
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    pub epsilon: f64,
    pub delta: f64,
    /// number of terms
    pub s: usize,
    /// boundedness of the net
    pub c: f64,
    pub l1_form: L1Form,
}

impl LearnParams {
    pub fn check(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.epsilon) || !unit(self.delta) || !(self.c > 0.0 && self.c <= 0.5) {
            return Err(Error::Contract(format!(
                "need epsilon, delta in (0,1) and c in (0, 0.5]; got {}, {}, {}",
                self.epsilon, self.delta, self.c
            )));
        }
        Ok(())
    }
}

/// ⌈log_{1-c}(ε/4s)⌉, floored at 0.
pub fn choose_d(epsilon: f64, s: usize, c: f64) -> usize {
    let r = epsilon / (4.0 * s as f64);
    if r >= 1.0 {
        return 0;
    }
    (r.ln() / (1.0 - c).ln()).ceil().max(0.0) as usize
}

/// Derived quantities of a learning run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub epsilon_prime: f64,
    pub d: usize,
    /// min(d, n): no term has more than n literals
    pub d_eff: usize,
    pub l1_d: f64,
    pub l1: f64,
    pub theta: f64,
    pub gamma: f64,
}

/// θ = ε/2L₁ and γ = ε³/16L₁² with L₁ = s·L₁(d).
pub fn plan_disjoint(p: &LearnParams, n: usize) -> Result<Plan> {
    p.check()?;
    let d = choose_d(p.epsilon, p.s.max(1), p.c);
    let d_eff = d.min(n);
    let l1_d = p.l1_form.l1(d_eff)?;
    let l1 = p.s.max(1) as f64 * l1_d;
    Ok(Plan {
        epsilon_prime: p.epsilon,
        d,
        d_eff,
        l1_d,
        l1,
        theta: p.epsilon / (2.0 * l1),
        gamma: p.epsilon.powi(3) / (16.0 * l1 * l1),
    })
}

/// ε' = ε/6, d from ε'/4s, L₁ = 2sL₁(d)+1 and γ* = ε'/L₁ (θ = γ = γ*).
pub fn plan_dnf(p: &LearnParams, n: usize) -> Result<Plan> {
    p.check()?;
    let ep = p.epsilon / 6.0;
    let d = choose_d(ep, p.s.max(1), p.c);
    let d_eff = d.min(n);
    let l1_d = p.l1_form.l1(d_eff)?;
    let l1 = 2.0 * p.s.max(1) as f64 * l1_d + 1.0;
    let g = ep / l1;
    Ok(Plan {
        epsilon_prime: ep,
        d,
        d_eff,
        l1_d,
        l1,
        theta: g,
        gamma: g,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PtfConfig {
    pub km: KmConfig,
    /// Phase-2 update cap; None means ⌈4/γ*²⌉.
    pub cap: Option<u64>,
    /// How many of the last updates to keep for failure reports.
    pub trace_len: usize,
}

impl PtfConfig {
    pub fn exact() -> Self {
        PtfConfig {
            km: KmConfig::exact(),
            cap: None,
            trace_len: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtfStep {
    pub set: IndexSet,
    pub f_est: f64,
    pub g_est: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtfReport {
    pub gamma_star: f64,
    pub phase1_sets: usize,
    pub updates: u64,
    pub cap: u64,
    pub support: usize,
    pub support_bound: f64,
    /// enumerated ‖f̂-ĝ‖_∞ (exact mode only)
    pub linf: Option<f64>,
    pub linf_bound: f64,
    pub km_stats: KmStats,
}

impl PtfReport {
    /// None in sampled mode. A false value is a finding, not an error.
    pub fn linf_ok(&self) -> Option<bool> {
        self.linf.map(|l| l <= self.linf_bound + 1e-12)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnReport {
    pub hypothesis: SignHypothesis,
    pub plan: Plan,
    pub km_stats: KmStats,
    pub budget: Option<EstimatorBudget>,
    pub ptf: Option<PtfReport>,
}

fn add_stats(a: &mut KmStats, b: &KmStats) {
    a.g_evals += b.g_evals;
    a.coef_estimates += b.coef_estimates;
    a.queries += b.queries;
    a.max_depth = a.max_depth.max(b.max_depth);
    a.wall_ms = match (a.wall_ms, b.wall_ms) {
        (Some(x), Some(y)) => Some(x + y),
        (x, y) => x.or(y),
    };
}

fn constant(n: usize, v: f64) -> SparseSpectrum {
    let mut s = SparseSpectrum::new(n);
    s.set(IndexSet::EMPTY, v);
    s
}

/// Disjoint DNF learner. `f` is ±1-valued; KM runs on the 0/1 version
/// (f+1)/2 and the hypothesis is sign(2h-1).
pub fn learn_disjoint_dnf(
    net: &BayesNet,
    f: &Oracle,
    params: &LearnParams,
    cfg: &KmConfig,
    rng: &mut Rng,
) -> Result<LearnReport> {
    let plan = plan_disjoint(params, net.n())?;
    if params.s == 0 {
        return Ok(LearnReport {
            hypothesis: SignHypothesis {
                spectrum: constant(net.n(), -1.0),
                clamp: Clamp::None,
            },
            plan,
            km_stats: KmStats::default(),
            budget: None,
            ptf: None,
        });
    }
    let kp = KmParams::new(plan.theta, plan.gamma, params.delta)?;
    let f01 = |x: Assignment| (f(x) + 1.0) / 2.0;
    let out = km_run(net, &f01, &kp, cfg, rng)?;
    let mut h = SparseSpectrum::new(net.n());
    for (s, c) in out.coeffs.iter() {
        h.set(s, 2.0 * c);
    }
    h.add(IndexSet::EMPTY, -1.0);
    Ok(LearnReport {
        hypothesis: SignHypothesis {
            spectrum: h,
            clamp: Clamp::None,
        },
        plan,
        km_stats: out.stats,
        budget: out.budget,
        ptf: None,
    })
}

/// General DNF learner: PTF construction at γ* = ε'/(2sL₁(d)+1).
pub fn learn_dnf(
    net: &BayesNet,
    f: &Oracle,
    params: &LearnParams,
    cfg: &PtfConfig,
    rng: &mut Rng,
) -> Result<LearnReport> {
    let plan = plan_dnf(params, net.n())?;
    if params.s == 0 {
        return Ok(LearnReport {
            hypothesis: SignHypothesis {
                spectrum: SparseSpectrum::new(net.n()),
                clamp: Clamp::P1,
            },
            plan,
            km_stats: KmStats::default(),
            budget: None,
            ptf: None,
        });
    }
    let (hypothesis, rep) = ptf_construct(net, f, plan.gamma, params.delta, cfg, rng)?;
    Ok(LearnReport {
        hypothesis,
        plan,
        km_stats: rep.km_stats.clone(),
        budget: None,
        ptf: Some(rep),
    })
}

/// Builds g = P₁[g'] whose heavy coefficients track those of f.
///
/// Phase 1 finds f̃ with KM at θ = γ = γ*. Phase 2 repeatedly runs KM on g
/// at γ*/2, takes the set with the largest |f̃_S - g̃_S| above 3γ*/2 (absent
/// entries count as 0) and moves g'_S by γ* toward f̃_S.
pub fn ptf_construct(
    net: &BayesNet,
    f: &Oracle,
    gamma_star: f64,
    delta: f64,
    cfg: &PtfConfig,
    rng: &mut Rng,
) -> Result<(SignHypothesis, PtfReport)> {
    let n = net.n();
    let p_full = KmParams::new(gamma_star, gamma_star, delta)?;
    let p_half = KmParams::new(gamma_star / 2.0, gamma_star / 2.0, delta)?;
    let cap = match cfg.cap {
        Some(c) => c,
        None => {
            let c = (4.0 / (gamma_star * gamma_star)).ceil();
            if !c.is_finite() || c > u64::MAX as f64 {
                return Err(Error::Capacity {
                    what: "ptf iteration cap".into(),
                    value: c,
                    limit: u64::MAX as f64,
                });
            }
            c as u64
        }
    };
    let mut stats = KmStats::default();
    let exact = cfg.km.mode == KmMode::Exact;
    let cube = if exact {
        Some(ExactCube::with_limit(net, cfg.km.enum_limit)?)
    } else {
        None
    };
    let fx = cube.as_ref().map(|c| c.table(f));

    let f_est = match (&cube, &fx) {
        (Some(c), Some(fx)) => km_exact_table(c, fx, &p_full),
        _ => km_run(net, f, &p_full, &cfg.km, rng)?,
    };
    add_stats(&mut stats, &f_est.stats);
    let f_tilde = f_est.coeffs;

    let mut g_prime = SparseSpectrum::new(n);
    // exact mode keeps g' as a table too
    let mut gpx = vec![0.0; cube.as_ref().map_or(0, |c| c.size())];
    let mut trace: Vec<PtfStep> = Vec::new();
    let mut updates = 0u64;
    let threshold = 1.5 * gamma_star;
    loop {
        let g_tilde = match &cube {
            Some(c) => {
                let gx: Vec<f64> = gpx.iter().map(|&v| p1(v)).collect();
                km_exact_table(c, &gx, &p_half)
            }
            None => {
                let gp = &g_prime;
                let g = move |x: Assignment| p1(eval_sparse(gp, net, x));
                km_run(net, &g, &p_half, &cfg.km, rng)?
            }
        };
        add_stats(&mut stats, &g_tilde.stats);
        let g_tilde = g_tilde.coeffs;

        let mut worst: Option<(f64, PtfStep)> = None;
        let mut sets: Vec<IndexSet> = f_tilde.sets().into_iter().chain(g_tilde.sets()).collect();
        sets.sort_by_key(|s| s.0);
        sets.dedup();
        for s in sets {
            let (a, b) = (f_tilde.get(s), g_tilde.get(s));
            let gap = (a - b).abs();
            if gap > threshold && worst.as_ref().is_none_or(|(w, _)| gap > *w) {
                worst = Some((
                    gap,
                    PtfStep {
                        set: s,
                        f_est: a,
                        g_est: b,
                    },
                ));
            }
        }
        let Some((_, step)) = worst else { break };
        if updates >= cap {
            let tail = trace.len().saturating_sub(cfg.trace_len);
            let lines: Vec<String> = trace[tail..]
                .iter()
                .chain(std::iter::once(&step))
                .map(|t| format!("{} f~={:.6} g~={:.6}", t.set, t.f_est, t.g_est))
                .collect();
            return Err(Error::IterationCap {
                cap,
                iterations: updates,
                trace: lines.join("; "),
            });
        }
        let c = if step.f_est > step.g_est {
            gamma_star
        } else {
            -gamma_star
        };
        g_prime.add(step.set, c);
        if let Some(cb) = &cube {
            for (x, v) in gpx.iter_mut().enumerate() {
                *v += c * cb.basis(step.set, x as u64);
            }
        }
        trace.push(step);
        if trace.len() > 4 * cfg.trace_len.max(1) {
            trace.drain(..trace.len() - cfg.trace_len);
        }
        updates += 1;
    }

    let support_bound = 1.0 / (2.0 * gamma_star * gamma_star);
    if g_prime.len() as f64 > support_bound {
        return Err(Error::Contract(format!(
            "PTF support {} exceeds 1/(2 gamma*^2) = {support_bound}",
            g_prime.len()
        )));
    }
    let linf = match (&cube, &fx) {
        (Some(c), Some(fx)) => {
            let gx: Vec<f64> = gpx.iter().map(|&v| p1(v)).collect();
            let fs = c.spectrum_dense(fx);
            let gs = c.spectrum_dense(&gx);
            Some(fs.iter().zip(&gs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        }
        _ => None,
    };
    let report = PtfReport {
        gamma_star,
        phase1_sets: f_tilde.len(),
        updates,
        cap,
        support: g_prime.len(),
        support_bound,
        linf,
        linf_bound: PTF_LINF_FACTOR * gamma_star,
        km_stats: stats,
    };
    Ok((
        SignHypothesis {
            spectrum: g_prime,
            clamp: Clamp::P1,
        },
        report,
    ))
}

/// P(h ≠ f) under `dist`, with h evaluated in the basis of `basis`.
pub fn exact_error_under(dist: &BayesNet, basis: &BayesNet, f: &Oracle, h: &SignHypothesis) -> Result<f64> {
    let cube = ExactCube::new(basis)?;
    let hx = h.table(&cube);
    let mut err = 0.0;
    for (x, hv) in hx.iter().enumerate() {
        let x = x as u64;
        if (f(x) > 0.0) != (*hv > 0.0) {
            err += dist.joint_prob(x);
        }
    }
    Ok(err)
}

/// Exact disagreement mass P_D(sign h ≠ f).
pub fn exact_error(net: &BayesNet, f: &Oracle, h: &SignHypothesis) -> Result<f64> {
    exact_error_under(net, net, f, h)
}

/// Disagreement frequency over `samples` draws from `dist`.
pub fn estimate_error(
    dist: &BayesNet,
    basis: &BayesNet,
    f: &Oracle,
    h: &SignHypothesis,
    samples: usize,
    rng: &mut Rng,
) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let xs = dist.ancestral_sample(rng, samples);
    let bad = xs
        .iter()
        .filter(|&&x| (f(x) > 0.0) != (h.predict(basis, x) > 0.0))
        .count();
    bad as f64 / samples as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub d: usize,
    pub dropped: usize,
    /// E[(f-h)²] with h the formula without its long terms
    pub gap: f64,
    /// s(1-c)^d
    pub bound: f64,
}

impl TruncationCheck {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound + 1e-12
    }
}

/// Drops terms longer than d = ⌈log_{1-c}(ε/4s)⌉ and measures the square
/// loss of doing so by enumeration.
pub fn truncation_check(net: &BayesNet, f: &DnfFormula, epsilon: f64, c: f64) -> Result<TruncationCheck> {
    let cube = ExactCube::new(net)?;
    let s = f.s().max(1);
    let d = choose_d(epsilon, s, c);
    let h = f.truncate(d);
    let fx = cube.table(&|x| f.eval(x) as u64 as f64);
    let hx = cube.table(&|x| h.eval(x) as u64 as f64);
    Ok(TruncationCheck {
        d,
        dropped: f.s() - h.s(),
        gap: cube.sq_dist(&fx, &hx),
        bound: s as f64 * (1.0 - c).powi(d as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn_model::{make_product, random, seeded};
    use crate::conjunction_spectrum::conjunction_expectation;
    use crate::dnf_learn::{mq_adapter, DecisionTree};
    use crate::fourier_basis::Range;
    use crate::km::sample_budget;

    fn params(eps: f64, s: usize, c: f64, form: L1Form) -> LearnParams {
        LearnParams {
            epsilon: eps,
            delta: 0.1,
            s,
            c,
            l1_form: form,
        }
    }

    #[test]
    fn parameter_flows() {
        assert_eq!(choose_d(0.1, 2, 0.25), 16);
        let p = plan_disjoint(&params(0.1, 2, 0.25, L1Form::Product), 64).unwrap();
        assert_eq!(p.d, 16);
        let l1 = 2.0 * 1.21f64.powi(16);
        assert!((p.l1 - l1).abs() < 1e-12);
        assert!((p.theta - 0.1 / (2.0 * l1)).abs() < 1e-15);
        assert!((p.gamma - 1e-3 / (16.0 * l1 * l1)).abs() < 1e-18);

        let q = plan_dnf(&params(0.3, 1, 0.25, L1Form::Product), 64).unwrap();
        assert!((q.epsilon_prime - 0.05).abs() < 1e-15);
        assert_eq!(q.d, 16);
        let l1 = 2.0 * 1.21f64.powi(16) + 1.0;
        assert!((q.gamma - 0.05 / l1).abs() < 1e-15);
        assert_eq!(plan_dnf(&params(0.3, 1, 0.25, L1Form::Product), 10).unwrap().d_eff, 10);
    }

    #[test]
    fn l1_forms() {
        assert!((L1Form::KJunta { k: 2 }.l1(2).unwrap() - 4.0).abs() < 1e-12);
        assert!(L1Form::Tree { alpha: 0.6 }.l1(1).is_err());
        assert_eq!(L1Form::Enumerated(vec![1.0, 2.0]).l1(5).unwrap(), 2.0);
    }

    #[test]
    fn enumerated_table_on_product() {
        let mus = [0.9, 0.3, 0.5, 0.7];
        let net = make_product(&mus).unwrap();
        let t = enumerated_l1_table(&net, 4).unwrap();
        // single literal ¬x with μ = 0.9 has norm 0.1 + 0.3 = 0.4, x has 1.2
        assert!((t[1] - 1.2).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn budgets_monotone_in_epsilon() {
        let mut last = 0;
        for eps in [0.5, 0.3, 0.2, 0.1, 0.05] {
            let p = plan_disjoint(&params(eps, 1, 0.45, L1Form::Product), 8).unwrap();
            let b = sample_budget(&KmParams::new(p.theta, p.theta.min(1.0), 0.1).unwrap(), 8).unwrap();
            assert!(b.m1 >= last);
            last = b.m1;
        }
    }

    #[test]
    fn disjoint_learner_exact() {
        let mut rng = seeded(11);
        let net = make_product(&[0.5; 10]).unwrap();
        let tree = DecisionTree::random(10, 3, &mut rng);
        let dnf = tree.to_dnf();
        let f = mq_adapter(&dnf, Range::PlusMinus);
        let p = params(0.1, dnf.s(), 0.5, L1Form::Product);
        let r = learn_disjoint_dnf(&net, &f, &p, &KmConfig::exact(), &mut rng).unwrap();
        assert!(exact_error(&net, &f, &r.hypothesis).unwrap() <= 0.1);
    }

    #[test]
    fn empty_target() {
        let net = make_product(&[0.5; 4]).unwrap();
        let empty = DnfFormula::default();
        let f = mq_adapter(&empty, Range::PlusMinus);
        let p = params(0.1, 0, 0.5, L1Form::Product);
        let mut rng = seeded(0);
        let a = learn_disjoint_dnf(&net, &f, &p, &KmConfig::exact(), &mut rng).unwrap();
        assert_eq!(exact_error(&net, &f, &a.hypothesis).unwrap(), 0.0);
        let b = learn_dnf(&net, &f, &p, &PtfConfig::exact(), &mut rng).unwrap();
        assert_eq!(b.hypothesis.predict(&net, 3), -1.0);
        assert_eq!(exact_error(&net, &f, &b.hypothesis).unwrap(), 0.0);
    }

    #[test]
    fn ptf_two_term_uniform() {
        let net = make_product(&[0.5; 8]).unwrap();
        let dnf = DnfFormula::new(vec![
            Conjunction::from_signed(&[1, 2]).unwrap(),
            Conjunction::from_signed(&[-3, 4, 5]).unwrap(),
        ]);
        let f = mq_adapter(&dnf, Range::PlusMinus);
        let (h, rep) = ptf_construct(&net, &f, 0.05, 0.1, &PtfConfig::exact(), &mut seeded(1)).unwrap();
        assert!(rep.linf.unwrap() <= 0.25, "{rep:?}");
        assert!(rep.support as f64 <= rep.support_bound);
        let cube = ExactCube::new(&net).unwrap();
        assert!(h.table(&cube).iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn ptf_cap_fails_loudly() {
        let net = make_product(&[0.5; 4]).unwrap();
        let f = |x: u64| if x & 1 == 1 { 1.0 } else { -1.0 };
        let cfg = PtfConfig {
            cap: Some(3),
            ..PtfConfig::exact()
        };
        match ptf_construct(&net, &f, 0.05, 0.1, &cfg, &mut seeded(0)) {
            Err(Error::IterationCap { cap: 3, trace, .. }) => assert!(trace.contains("f~=")),
            other => panic!("expected cap failure, got {other:?}"),
        }
    }

    #[test]
    fn learn_dnf_on_tree_net() {
        let mut rng = seeded(5);
        let net = random::tree(8, 0.2, 0.1, &mut rng);
        let dnf = DnfFormula::new(vec![
            Conjunction::from_signed(&[2, -5]).unwrap(),
            Conjunction::from_signed(&[7]).unwrap(),
        ]);
        let f = mq_adapter(&dnf, Range::PlusMinus);
        let table = enumerated_l1_table(&net, 8).unwrap();
        let p = params(0.1, 2, 0.2, L1Form::Enumerated(table));
        let r = learn_dnf(&net, &f, &p, &PtfConfig::exact(), &mut rng).unwrap();
        assert!(exact_error(&net, &f, &r.hypothesis).unwrap() <= 0.1);
        assert_eq!(r.ptf.unwrap().linf_ok(), Some(true));
    }

    #[test]
    fn error_measures() {
        let net = make_product(&[0.3, 0.6, 0.5]).unwrap();
        let f = |_: u64| -1.0;
        let plus = SignHypothesis {
            spectrum: constant(3, 1.0),
            clamp: Clamp::None,
        };
        let minus = SignHypothesis {
            spectrum: constant(3, -1.0),
            clamp: Clamp::None,
        };
        assert!((exact_error(&net, &f, &plus).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(exact_error(&net, &f, &minus).unwrap(), 0.0);

        let g = |x: u64| if x & 0b11 == 0b01 { 1.0 } else { -1.0 };
        let cube = ExactCube::new(&net).unwrap();
        let gx = cube.table(&g);
        let h = SignHypothesis {
            spectrum: cube.spectrum(&gx),
            clamp: Clamp::None,
        };
        assert!(exact_error(&net, &g, &h).unwrap() < 1e-12);
        let half = SignHypothesis {
            spectrum: SparseSpectrum::new(3),
            clamp: Clamp::None,
        };
        let mut rng = seeded(8);
        let est = estimate_error(&net, &net, &g, &half, 100_000, &mut rng);
        assert!((est - exact_error(&net, &g, &half).unwrap()).abs() < 0.01);
    }

    #[test]
    fn disjoint_expectation_adds() {
        let mut rng = seeded(2);
        let net = random::tree(7, 0.1, 0.3, &mut rng);
        let cube = ExactCube::new(&net).unwrap();
        for _ in 0..10 {
            let dnf = DecisionTree::random(7, 3, &mut rng).to_dnf();
            let lhs = cube.expect(&cube.table(&|x| dnf.eval(x) as u64 as f64));
            let rhs: f64 = dnf.terms.iter().map(|t| conjunction_expectation(&cube, t)).sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_bound_holds() {
        let mut rng = seeded(6);
        let net = random::product(10, 0.25, &mut rng);
        let c = net.validate().unwrap().c_star;
        let dnf = DnfFormula::new(vec![
            Conjunction::from_signed(&[1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap(),
            Conjunction::from_signed(&[-1, 3]).unwrap(),
        ]);
        let r = truncation_check(&net, &dnf, 0.5, c).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(r.bound <= 0.5 / 4.0 + 1e-12);
    }
}
