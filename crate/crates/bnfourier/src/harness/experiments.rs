use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig, NetSpec, TargetSpec};
#[cfg(test)]
use super::record::{all_pass, Value};
use super::record::{digest, ResultRecord};
use crate::bn_model::{
    make_gstar, make_homogeneous_chain, make_product, random, stream, BayesNet, GStarParams, Rng, Structure,
};
use crate::conjunction_spectrum::{
    chain_coefficient, chain_spectral_norm_exact, conjunction_table, gstar_factorization_check, l1_bounds,
    lower_bound_certificates, product_spectral_norm, unbounded_chain_net, BoundInputs, Conjunction,
};
use crate::constants::*;
use crate::dnf_learn::{
    enumerated_l1_table, estimate_error, exact_error_under, learn_disjoint_dnf, learn_dnf, mq_adapter, DecisionTree,
    DnfFormula, L1Form, LearnParams, LearnReport, PtfConfig,
};
use crate::error::{Error, Result};
use crate::fourier_basis::{
    eval_sparse, orthonormality_residual_cube, sparse_square_approx, ExactCube, IndexSet, Range, SparseSpectrum,
    ENUM_LIMIT,
};
use crate::km::{km_exact_table, km_run, planted_spectrum, KmConfig, KmOutput, KmParams};
use crate::tree_learn::{
    brute_force_arborescence, chow_liu_baseline, chow_liu_diff_restricted, edmonds_arborescence, j_p, kl_net_net,
    kl_table_net, lp_chow_liu, lp_edge_cost_grid, lp_fit, read_samples_csv, tree_projection, tree_weight, Edge,
    LearnedTree, Optimize, PairwiseStats,
};

/// Builds the configured net; random kinds consume `rng`.
pub fn build_net(spec: &NetSpec, gstar_n: usize, rng: &mut Rng) -> Result<BayesNet> {
    let (n, c, a) = (spec.n, spec.c, spec.alpha);
    Ok(match spec.kind.as_str() {
        "uniform" => make_product(&vec![0.5; n])?,
        "product" => random::product(n, c, rng),
        "chain" => random::chain(n, c, a, rng),
        "tree" => random::tree(n, c, a, rng),
        "forest" => random::forest(n, c, a, 0.3, rng),
        "dag" => random::dag(n, spec.max_parents, c, rng),
        "kjunta" => random::kjunta(n, spec.k, c, rng),
        "homogeneous_chain" => make_homogeneous_chain(n, spec.mu0, spec.mu1)?,
        "unbounded_chain" => unbounded_chain_net(n.saturating_sub(2))?,
        "gstar" => make_gstar(GStarParams {
            n: gstar_n,
            m: spec.m,
            ..Default::default()
        })?,
        "file" => {
            let p = spec.path.as_ref().ok_or_else(|| Error::Config {
                path: "net.path".into(),
                msg: "required".into(),
            })?;
            BayesNet::load(p)?
        }
        other => {
            return Err(Error::Config {
                path: "net.kind".into(),
                msg: format!("unknown kind {other:?}"),
            })
        }
    })
}

pub enum Target {
    Dnf(DnfFormula),
    Tree(DecisionTree),
    Parity(IndexSet),
    /// normalized planted spectrum, in the basis of the run's net
    Planted(SparseSpectrum),
}

impl Target {
    pub fn dnf(&self) -> Option<DnfFormula> {
        match self {
            Target::Dnf(f) => Some(f.clone()),
            Target::Tree(t) => Some(t.to_dnf()),
            _ => None,
        }
    }

    pub fn oracle<'a>(&'a self, net: &'a BayesNet, range: Range) -> Box<dyn Fn(u64) -> f64 + Sync + 'a> {
        match self {
            Target::Dnf(f) => Box::new(mq_adapter(f, range)),
            Target::Tree(t) => Box::new(mq_adapter(t, range)),
            Target::Parity(s) => {
                let m = s.0;
                Box::new(move |x| range.encode((x & m).count_ones() % 2 == 1))
            }
            Target::Planted(p) => Box::new(move |x| eval_sparse(p, net, x)),
        }
    }
}

pub fn random_dnf(n: usize, terms: usize, width: usize, rng: &mut Rng) -> DnfFormula {
    let vars: Vec<usize> = (0..n).collect();
    let ts = (0..terms)
        .map(|_| {
            let mut t = Conjunction::empty();
            for &v in vars.choose_multiple(rng, width.min(n)) {
                if rng.gen::<bool>() {
                    t.t1.insert(v);
                } else {
                    t.t0.insert(v);
                }
            }
            t
        })
        .collect();
    DnfFormula::new(ts)
}

pub fn build_target(spec: &TargetSpec, net: &BayesNet, rng: &mut Rng) -> Result<Target> {
    let n = net.n();
    let bad = |msg: String| Error::Config {
        path: "target".into(),
        msg,
    };
    Ok(match spec.kind.as_str() {
        "conjunction" => Target::Dnf(DnfFormula::new(vec![Conjunction::from_signed(&spec.literals)?])),
        "dnf" => {
            let text = match (&spec.path, &spec.text) {
                (Some(p), _) => std::fs::read_to_string(p)?,
                (None, Some(t)) => t.clone(),
                _ => return Err(bad("dnf needs target.path or target.text".into())),
            };
            Target::Dnf(DnfFormula::parse(&text)?)
        }
        "random_tree" => Target::Tree(DecisionTree::random(n, spec.depth, rng)),
        "random_dnf" => Target::Dnf(random_dnf(n, spec.terms, spec.width, rng)),
        "parity" => Target::Parity(IndexSet::from_indices(spec.vars.iter().copied())),
        "planted" => {
            let cube = ExactCube::new(net)?;
            let terms: Vec<(IndexSet, f64)> = spec
                .planted
                .iter()
                .map(|(v, w)| (IndexSet::from_indices(v.iter().copied()), *w))
                .collect();
            Target::Planted(planted_spectrum(&cube, &terms))
        }
        other => return Err(bad(format!("unknown kind {other:?}"))),
    })
}

fn range_of(spec: &TargetSpec) -> Range {
    if spec.range == "zero_one" {
        Range::ZeroOne
    } else {
        Range::PlusMinus
    }
}

/// Bound in force for learning over `net`: the product bound for product
/// nets, otherwise the enumerated table when the net is small enough, else
/// the structural bound.
pub fn l1_form_for(net: &BayesNet, choice: &str) -> Result<L1Form> {
    let rep = net.validate()?;
    let auto = choice == "auto";
    if choice == "product" || (auto && rep.structure == Structure::Product) {
        return Ok(L1Form::Product);
    }
    if choice == "enumerated" || (auto && net.n() <= 12) {
        return Ok(L1Form::Enumerated(enumerated_l1_table(net, net.n())?));
    }
    if choice == "chain" || (auto && rep.structure == Structure::Chain) {
        return Ok(L1Form::Chain(BoundInputs::from(&rep)));
    }
    Ok(L1Form::Tree { alpha: rep.alpha() })
}

fn km_config(cfg: &ExperimentConfig) -> KmConfig {
    let mut k = if cfg.km.mode == "sampled" {
        KmConfig::sampled()
    } else {
        KmConfig::exact()
    };
    if let (Some(m1), Some(m2)) = (cfg.km.m1, cfg.km.m2) {
        k = k.with_budget(m1, m2);
    }
    k
}

fn per_seed<T: Send>(seeds: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..seeds).into_par_iter().map(f).collect()
}

fn summary(exp: &str, dig: &str, label: &str, rows: &[ResultRecord], need: f64) -> ResultRecord {
    let ok = rows.iter().filter(|r| r.pass == Some(true)).count();
    let frac = ok as f64 / rows.len().max(1) as f64;
    ResultRecord::new(exp, format!("summary{label}"), dig)
        .metric("runs", rows.len())
        .metric("passed", ok)
        .metric("fraction", frac)
        .metric("required", need)
        .with_pass(frac >= need)
}

/// Outcome of checking one KM output against the exact spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    /// sets with |f̂| ≥ θ that were not returned
    pub missing: usize,
    /// returned sets with |f̂| < θ/2
    pub spurious: usize,
    pub max_coef_err: f64,
    pub within_list_bound: bool,
}

impl Bracket {
    pub fn ok(&self, gamma: Option<f64>) -> bool {
        self.missing == 0
            && self.spurious == 0
            && self.within_list_bound
            && gamma.is_none_or(|g| self.max_coef_err <= g)
    }
}

pub fn km_bracket(out: &KmOutput, exact: &[f64], theta: f64) -> Bracket {
    let returned: std::collections::HashSet<u64> = out.sets.iter().map(|s| s.0).collect();
    let missing = exact
        .iter()
        .enumerate()
        .filter(|(s, c)| c.abs() >= theta && !returned.contains(&(*s as u64)))
        .count();
    let spurious = out
        .sets
        .iter()
        .filter(|s| exact[s.0 as usize].abs() < theta / 2.0)
        .count();
    let max_coef_err = out
        .coeffs
        .iter()
        .map(|(s, c)| (c - exact[s.0 as usize]).abs())
        .fold(0.0, f64::max);
    Bracket {
        missing,
        spurious,
        max_coef_err,
        within_list_bound: out.sets.len() as f64 <= out.params.max_sets(),
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    seed: u64,
    dig: String,
}

/// Runs the configured experiment. `jobs` threads share the per-seed work;
/// records come back in seed order regardless.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let exp = cfg.experiment.ok_or_else(|| Error::Config {
        path: "experiment".into(),
        msg: "missing".into(),
    })?;
    if cfg.needs_seed() && cfg.seed.is_none() {
        return Err(Error::Config {
            path: "seed".into(),
            msg: format!("{} needs --seed", exp.as_str()),
        });
    }
    let ctx = Ctx {
        cfg,
        seed: cfg.seed.unwrap_or(MASTER_SEED),
        dig: digest(serde_json::to_string(cfg)?.as_bytes()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    pool.install(|| match exp {
        Experiment::Spectrum => spectrum(&ctx),
        Experiment::Km => km(&ctx),
        Experiment::LearnDnf => learn_dnf_exp(&ctx),
        Experiment::LearnTree => learn_tree(&ctx),
        Experiment::EndToEnd => end_to_end(&ctx),
        Experiment::LowerBounds => lower_bounds(&ctx),
        Experiment::OracleCheck => oracle_check(&ctx),
    })
}

fn timed(start: Instant, mut r: ResultRecord) -> ResultRecord {
    r.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    r
}

fn spectrum(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let start = Instant::now();
    let cfg = ctx.cfg;
    let mut rng = stream(ctx.seed, 0);
    let net = build_net(&cfg.net, cfg.gstar_n, &mut rng)?;
    let target = build_target(&cfg.target, &net, &mut rng)?;
    let cube = ExactCube::new(&net)?;
    let fx = cube.table(&*target.oracle(&net, range_of(&cfg.target)));
    let dense = cube.spectrum_dense(&fx);
    let l1: f64 = dense.iter().map(|c| c.abs()).sum();
    let l2: f64 = dense.iter().map(|c| c * c).sum();
    let ef2 = cube.expect(&fx.iter().map(|v| v * v).collect::<Vec<_>>());
    let ortho = orthonormality_residual_cube(&cube, Some(2));
    let rep = net.validate()?;
    let mut r = ResultRecord::new("spectrum", "0", &ctx.dig)
        .metric("n", net.n())
        .metric("structure", rep.structure.as_str())
        .metric("nonzero", dense.iter().filter(|c| c.abs() > 1e-14).count())
        .metric("l1", l1)
        .metric("l2_sq", l2)
        .metric("e_f2", ef2)
        .metric("parseval_gap", (l2 - ef2).abs())
        .metric("ortho_residual_deg2", ortho);
    let mut pass = (l2 - ef2).abs() <= TOL_PARSEVAL && ortho <= TOL_ORTHO;
    if let (Target::Dnf(f), true) = (&target, cfg.target.kind == "conjunction") {
        let conj = f.terms[0];
        // the enumerated norm of the 0/1 conjunction
        let l1c: f64 = cube
            .spectrum_dense(&conjunction_table(&cube, &conj))
            .iter()
            .map(|c| c.abs())
            .sum();
        r.push("conj_l1", l1c);
        match rep.structure {
            Structure::Chain => {
                let cf = chain_spectral_norm_exact(&net, &conj)?;
                r.push("chain_closed_form_residual", (cf - l1c).abs());
                pass &= (cf - l1c).abs() <= TOL_CLOSED_FORM;
            }
            Structure::Product => {
                let mus: Vec<f64> = (0..net.n()).map(|v| net.cpt(v)[0]).collect();
                let pn = product_spectral_norm(&mus, &conj)?;
                r.push("product_norm_residual", (pn - l1c).abs());
                pass &= (pn - l1c).abs() <= TOL_PRODUCT_NORM && l1c <= PRODUCT_L1_BASE.powi(conj.d() as i32) + 1e-12;
            }
            _ => {}
        }
        let b = l1_bounds(&BoundInputs::from(&rep), conj.d());
        let mut checks = vec![];
        if rep.structure == Structure::Chain {
            checks.push(b.chain);
        }
        if rep.structure.is_forest_like() {
            checks.push(b.tree);
        }
        for bound in checks {
            if let Some(v) = bound.value {
                r.push(&format!("bound_{}", bound.name), v);
                pass &= l1c <= v + 1e-12;
            }
        }
    }
    if let Some(p) = &cfg.spectrum_out {
        std::fs::write(p, SparseSpectrum::from_dense(net.n(), &dense).to_json())?;
    }
    Ok(vec![timed(start, r.with_pass(pass))])
}

fn km(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let cfg = ctx.cfg;
    let mut rng = stream(ctx.seed, 0);
    let net = build_net(&cfg.net, cfg.gstar_n, &mut rng)?;
    let target = build_target(&cfg.target, &net, &mut rng)?;
    let f = target.oracle(&net, range_of(&cfg.target));
    let params = KmParams::new(cfg.km.theta, cfg.km.gamma, cfg.km.delta)?;
    let kc = km_config(cfg);
    let exact = if net.n() <= ENUM_LIMIT {
        let cube = ExactCube::new(&net)?;
        Some(cube.spectrum_dense(&cube.table(&*f)))
    } else {
        None
    };
    let sampled = cfg.km.mode == "sampled";
    let rows = per_seed(cfg.seeds, |i| {
        let start = Instant::now();
        let mut r = stream(ctx.seed, i + 1);
        let out = km_run(&net, &*f, &params, &kc, &mut r)?;
        let mut rec = ResultRecord::new("km", format!("seed{i}"), &ctx.dig)
            .metric("mode", cfg.km.mode.as_str())
            .metric("sets", out.sets.len())
            .metric("max_sets", params.max_sets())
            .metric("g_evals", out.stats.g_evals)
            .metric("queries", out.stats.queries);
        if let Some(b) = out.budget {
            rec.push("m1", b.m1);
            rec.push("m2", b.m2);
        }
        if let Some(ex) = &exact {
            let br = km_bracket(&out, ex, params.theta);
            rec.push("missing_heavy", br.missing);
            rec.push("spurious", br.spurious);
            rec.push("max_coef_err", br.max_coef_err);
            rec = rec.with_pass(br.ok(sampled.then_some(params.gamma)));
        } else {
            rec = rec.with_pass(out.sets.len() as f64 <= params.max_sets());
        }
        Ok(timed(start, rec))
    })?;
    let need = if sampled { SUCCESS_FRACTION } else { 1.0 };
    let s = summary("km", &ctx.dig, "", &rows, need);
    Ok(rows.into_iter().chain(std::iter::once(s)).collect())
}

fn learner_params(cfg: &ExperimentConfig, net: &BayesNet, s: usize) -> Result<LearnParams> {
    Ok(LearnParams {
        epsilon: cfg.learn.epsilon,
        delta: cfg.learn.delta,
        s,
        c: net.validate()?.c_star,
        l1_form: l1_form_for(net, &cfg.learn.l1_form)?,
    })
}

fn run_learner(
    cfg: &ExperimentConfig,
    net: &BayesNet,
    f: &(dyn Fn(u64) -> f64 + Sync),
    p: &LearnParams,
    rng: &mut Rng,
) -> Result<LearnReport> {
    if cfg.learn.learner == "ptf" {
        learn_dnf(
            net,
            f,
            p,
            &PtfConfig {
                km: km_config(cfg),
                ..PtfConfig::exact()
            },
            rng,
        )
    } else {
        learn_disjoint_dnf(net, f, p, &km_config(cfg), rng)
    }
}

fn learn_metrics(rec: &mut ResultRecord, rep: &LearnReport) {
    let pl = &rep.plan;
    rec.push("d", pl.d);
    rec.push("d_eff", pl.d_eff);
    rec.push("l1", pl.l1);
    rec.push("theta", pl.theta);
    rec.push("gamma", pl.gamma);
    rec.push("support", rep.hypothesis.spectrum.len());
    rec.push("queries", rep.km_stats.queries);
    if let Some(p) = &rep.ptf {
        rec.push("ptf_updates", p.updates);
        rec.push("ptf_support_bound", p.support_bound);
        if let Some(l) = p.linf {
            rec.push("ptf_linf", l);
            rec.push("ptf_linf_bound", p.linf_bound);
            rec.push("ptf_linf_ok", l <= p.linf_bound + 1e-12);
        }
    }
}

fn error_of(
    dist: &BayesNet,
    basis: &BayesNet,
    f: &(dyn Fn(u64) -> f64 + Sync),
    rep: &LearnReport,
    rng: &mut Rng,
) -> Result<(f64, &'static str)> {
    if dist.n() <= ENUM_LIMIT {
        Ok((exact_error_under(dist, basis, f, &rep.hypothesis)?, "exact"))
    } else {
        Ok((estimate_error(dist, basis, f, &rep.hypothesis, 100_000, rng), "sampled"))
    }
}

fn learn_dnf_exp(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let cfg = ctx.cfg;
    let rows = per_seed(cfg.seeds, |i| {
        let start = Instant::now();
        let mut rng = stream(ctx.seed, i);
        let net = build_net(&cfg.net, cfg.gstar_n, &mut rng)?;
        let target = build_target(&cfg.target, &net, &mut rng)?;
        let dnf = target.dnf().ok_or_else(|| Error::Config {
            path: "target.kind".into(),
            msg: "learn-dnf needs a DNF or decision-tree target".into(),
        })?;
        let f = mq_adapter(&dnf, Range::PlusMinus);
        let p = learner_params(cfg, &net, dnf.s())?;
        let rep = run_learner(cfg, &net, &f, &p, &mut rng)?;
        let (err, how) = error_of(&net, &net, &f, &rep, &mut rng)?;
        let mut rec = ResultRecord::new("learn-dnf", format!("seed{i}"), &ctx.dig)
            .metric("learner", cfg.learn.learner.as_str())
            .metric("s", dnf.s())
            .metric("epsilon", cfg.learn.epsilon);
        learn_metrics(&mut rec, &rep);
        rec.push("error", err);
        rec.push("error_kind", how);
        let support_ok = rep
            .ptf
            .as_ref()
            .is_none_or(|p| p.support as f64 <= p.support_bound && p.linf_ok() != Some(false));
        Ok(timed(start, rec.with_pass(err <= cfg.learn.epsilon && support_ok)))
    })?;
    let s = summary(
        "learn-dnf",
        &ctx.dig,
        "",
        &rows,
        if cfg.km.mode == "sampled" {
            SUCCESS_FRACTION
        } else {
            1.0
        },
    );
    Ok(rows.into_iter().chain(std::iter::once(s)).collect())
}

fn algorithms(name: &str) -> Vec<&'static str> {
    match name {
        "all" => vec!["baseline", "diff", "lp"],
        "baseline" => vec!["baseline"],
        "lp" => vec!["lp"],
        _ => vec!["diff"],
    }
}

fn fit_tree(alg: &str, st: &PairwiseStats, c: f64, alpha: f64) -> Result<LearnedTree> {
    match alg {
        "baseline" => chow_liu_baseline(st),
        "lp" => lp_chow_liu(st, c, alpha.min(1.0 - 2.0 * c)),
        _ => chow_liu_diff_restricted(st, c),
    }
}

/// Whether the learned net meets the guarantee of its algorithm.
fn tree_bounded(alg: &str, t: &LearnedTree, c: f64, alpha: f64) -> bool {
    match alg {
        "diff" => t.report.alpha_mu <= 0.5 - c / 2.0 + 1e-12 && t.report.alpha_sigma <= 0.5 - c / 2.0 + 1e-12,
        "lp" => t.report.c_star >= c - 1e-12 && t.report.alpha_mu <= alpha.min(1.0 - 2.0 * c) + 1e-9,
        _ => true,
    }
}

fn learn_tree(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let cfg = ctx.cfg;
    let tc = &cfg.tree;
    if let Some(path) = &tc.samples_csv {
        let start = Instant::now();
        let (n, xs) = read_samples_csv(std::fs::File::open(path)?)?;
        let st = PairwiseStats::from_samples(n, &xs)?;
        let mut out = Vec::new();
        for alg in algorithms(&tc.algorithm) {
            let t = fit_tree(alg, &st, tc.c, tc.alpha)?;
            if let Some(p) = &tc.net_out {
                let f = t.to_file(xs.len() as f64, cfg.seed, Some(tc.c), Some(tc.alpha));
                std::fs::write(p, serde_json::to_string_pretty(&f)? + "\n")?;
            }
            let rec = ResultRecord::new("learn-tree", alg, &ctx.dig)
                .metric("n", n)
                .metric("m", xs.len())
                .metric("edges", t.edges().len())
                .metric("total", t.total)
                .metric("c_star", t.report.c_star)
                .metric("alpha_mu", t.report.alpha_mu)
                .metric("alpha_sigma", t.report.alpha_sigma)
                .with_pass(tree_bounded(alg, &t, tc.c, tc.alpha));
            out.push(timed(start, rec));
        }
        return Ok(out);
    }
    let algs = algorithms(&tc.algorithm);
    let rows: Vec<Vec<ResultRecord>> = per_seed(cfg.seeds, |i| {
        let start = Instant::now();
        let mut rng = stream(ctx.seed, i);
        let hidden = build_net(&cfg.net, cfg.gstar_n, &mut rng)?;
        let xs = hidden.ancestral_sample(&mut rng, tc.m);
        let st = PairwiseStats::from_samples(hidden.n(), &xs)?;
        let mut recs = Vec::new();
        for alg in &algs {
            let t = fit_tree(alg, &st, tc.c, tc.alpha)?;
            if i == 0 {
                if let Some(p) = &tc.net_out {
                    let f = t.to_file(tc.m as f64, Some(ctx.seed), Some(tc.c), Some(tc.alpha));
                    std::fs::write(p, serde_json::to_string_pretty(&f)? + "\n")?;
                }
            }
            let kl = kl_net_net(&hidden, &t.net)?;
            let bounded = tree_bounded(alg, &t, tc.c, tc.alpha);
            let rec = ResultRecord::new("learn-tree", format!("{alg}/seed{i}"), &ctx.dig)
                .metric("algorithm", *alg)
                .metric("m", tc.m)
                .metric("edges", t.edges().len())
                .metric("kl", kl)
                .metric("kl_threshold", tc.kl_threshold)
                .metric("alpha_mu", t.report.alpha_mu)
                .metric("alpha_sigma", t.report.alpha_sigma)
                .metric("bounded", bounded)
                .with_pass(kl <= tc.kl_threshold && bounded);
            recs.push(timed(start, rec));
        }
        Ok(recs)
    })?;
    let mut out: Vec<ResultRecord> = Vec::new();
    let mut sums = Vec::new();
    for (k, alg) in algs.iter().enumerate() {
        let mine: Vec<ResultRecord> = rows.iter().map(|r| r[k].clone()).collect();
        sums.push(summary(
            "learn-tree",
            &ctx.dig,
            &format!("/{alg}"),
            &mine,
            SUCCESS_FRACTION,
        ));
    }
    for r in rows {
        out.extend(r);
    }
    out.extend(sums);
    Ok(out)
}

fn end_to_end(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let cfg = ctx.cfg;
    let tc = &cfg.tree;
    let rows = per_seed(cfg.seeds, |i| {
        let start = Instant::now();
        let mut rng = stream(ctx.seed, i);
        let hidden = build_net(&cfg.net, cfg.gstar_n, &mut rng)?;
        let target = build_target(&cfg.target, &hidden, &mut rng)?;
        let dnf = target.dnf().ok_or_else(|| Error::Config {
            path: "target.kind".into(),
            msg: "end-to-end needs a DNF or decision-tree target".into(),
        })?;
        let xs = hidden.ancestral_sample(&mut rng, tc.m);
        let st = PairwiseStats::from_samples(hidden.n(), &xs)?;
        let tree = chow_liu_diff_restricted(&st, tc.c)?;
        let learned = &tree.net;
        let f = mq_adapter(&dnf, Range::PlusMinus);
        let p = learner_params(cfg, learned, dnf.s())?;
        let rep = run_learner(cfg, learned, &f, &p, &mut rng)?;
        let (err, how) = error_of(&hidden, learned, &f, &rep, &mut rng)?;
        let mut rec = ResultRecord::new("end-to-end", format!("seed{i}"), &ctx.dig)
            .metric("learner", cfg.learn.learner.as_str())
            .metric("m", tc.m)
            .metric("tree_kl", kl_net_net(&hidden, learned)?)
            .metric("s", dnf.s());
        learn_metrics(&mut rec, &rep);
        rec.push("error", err);
        rec.push("error_kind", how);
        rec.push("threshold", 2.0 * cfg.learn.epsilon);
        Ok(timed(start, rec.with_pass(err <= 2.0 * cfg.learn.epsilon)))
    })?;
    let s = summary("end-to-end", &ctx.dig, "", &rows, SUCCESS_FRACTION);
    Ok(rows.into_iter().chain(std::iter::once(s)).collect())
}

fn lower_bounds(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let start = Instant::now();
    let mut out: Vec<ResultRecord> = lower_bound_certificates(ctx.cfg.gstar_n)?
        .into_iter()
        .map(|row| {
            ResultRecord::new("lower-bounds", row.construction.clone(), &ctx.dig)
                .metric("n", row.n)
                .metric("computed", row.computed)
                .metric("threshold", row.threshold)
                .with_pass(row.pass)
        })
        .collect();
    let g = gstar_factorization_check(&GStarParams {
        n: 2,
        m: 2,
        ..Default::default()
    })?;
    out.push(
        ResultRecord::new("lower-bounds", "gstar_factorization", &ctx.dig)
            .metric("n", g.n)
            .metric("computed", g.residual)
            .metric("threshold", TOL_CLOSED_FORM)
            .with_pass(g.residual <= TOL_CLOSED_FORM),
    );
    Ok(out.into_iter().map(|r| timed(start, r)).collect())
}

fn residual_row(ctx: &Ctx, name: &str, instances: usize, worst: f64, tol: f64) -> ResultRecord {
    ResultRecord::new("oracle-check", name, &ctx.dig)
        .metric("instances", instances)
        .metric("max_residual", worst)
        .metric("tolerance", tol)
        .with_pass(worst <= tol)
}

fn random_conjunction(n: usize, dmax: usize, rng: &mut Rng) -> Conjunction {
    let d = rng.gen_range(1..=dmax.min(n));
    let vars: Vec<usize> = (0..n).collect();
    let mut t = Conjunction::empty();
    for &v in vars.choose_multiple(rng, d) {
        if rng.gen::<bool>() {
            t.t1.insert(v);
        } else {
            t.t0.insert(v);
        }
    }
    t
}

/// Re-runs every closed-form-versus-enumeration equivalence on fresh
/// random instances and reports the largest residuals.
fn oracle_check(ctx: &Ctx) -> Result<Vec<ResultRecord>> {
    let mut rng = stream(ctx.seed, 0);
    let mut out = Vec::new();

    let t = Instant::now();
    let (mut ortho, mut pars) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let net = random::dag(n, 3, 0.05, &mut rng);
        let cube = ExactCube::new(&net)?;
        ortho = ortho.max(orthonormality_residual_cube(&cube, None));
        let fx: Vec<f64> = (0..cube.size())
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        pars = pars.max(crate::fourier_basis::parseval_gap(&cube, &fx));
    }
    out.push(timed(t, residual_row(ctx, "orthonormality", 20, ortho, TOL_ORTHO)));
    out.push(timed(t, residual_row(ctx, "parseval", 20, pars, TOL_PARSEVAL)));

    let t = Instant::now();
    let (mut coef, mut norm, mut zero_rule) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let net = random::chain(n, 0.05, 0.9, &mut rng);
        let f = random_conjunction(n, 4, &mut rng);
        let cube = ExactCube::new(&net)?;
        let spec = cube.spectrum_dense(&conjunction_table(&cube, &f));
        let last = f.vars().iter().map(|v| net.position(v)).max().unwrap_or(0);
        for (s, &e) in spec.iter().enumerate() {
            let cf = chain_coefficient(&net, &f, IndexSet(s as u64))?;
            coef = coef.max((cf - e).abs());
            if IndexSet(s as u64).iter().any(|v| net.position(v) > last) {
                zero_rule = zero_rule.max(cf.abs());
            }
        }
        let l1: f64 = spec.iter().map(|c| c.abs()).sum();
        norm = norm.max((chain_spectral_norm_exact(&net, &f)? - l1).abs());
    }
    out.push(timed(
        t,
        residual_row(ctx, "chain_coefficient", 20, coef, TOL_CLOSED_FORM),
    ));
    out.push(timed(t, residual_row(ctx, "chain_zero_rule", 20, zero_rule, 0.0)));
    out.push(timed(
        t,
        residual_row(ctx, "chain_exact_norm", 20, norm, TOL_CLOSED_FORM),
    ));

    let t = Instant::now();
    let mut prod = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=8);
        let net = random::product(n, 0.02, &mut rng);
        let mus: Vec<f64> = (0..n).map(|v| net.cpt(v)[0]).collect();
        let f = random_conjunction(n, 4, &mut rng);
        let cube = ExactCube::new(&net)?;
        let l1: f64 = cube
            .spectrum_dense(&conjunction_table(&cube, &f))
            .iter()
            .map(|c| c.abs())
            .sum();
        prod = prod.max((product_spectral_norm(&mus, &f)? - l1).abs());
    }
    out.push(timed(t, residual_row(ctx, "product_norm", 20, prod, TOL_PRODUCT_NORM)));

    let t = Instant::now();
    let g = gstar_factorization_check(&GStarParams {
        n: 2,
        m: 2,
        ..Default::default()
    })?;
    out.push(timed(
        t,
        residual_row(ctx, "gstar_factorization", 1, g.residual, TOL_CLOSED_FORM),
    ));

    let t = Instant::now();
    let mut km_mismatch = 0usize;
    for _ in 0..10 {
        let n = rng.gen_range(2..=8);
        let net = random::dag(n, 2, 0.1, &mut rng);
        let cube = ExactCube::new(&net)?;
        let fx: Vec<f64> = (0..cube.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = cube.spectrum_dense(&fx);
        let theta = 0.1;
        let outk = km_exact_table(&cube, &fx, &KmParams::new(theta, theta, 0.1)?);
        let want: Vec<u64> = (0..spec.len() as u64)
            .filter(|&s| spec[s as usize].abs() >= theta)
            .collect();
        let got: Vec<u64> = outk.sets.iter().map(|s| s.0).collect();
        km_mismatch += (want != got) as usize;
    }
    out.push(timed(
        t,
        residual_row(ctx, "km_exact_heavy_sets", 10, km_mismatch as f64, 0.0),
    ));

    let t = Instant::now();
    let mut lp = 0.0f64;
    for _ in 0..100 {
        let c = rng.gen_range(0.05..0.4);
        let alpha = rng.gen_range(0.0..1.0 - 2.0 * c);
        let pj0: f64 = rng.gen_range(0.05..0.95);
        let p = [rng.gen::<f64>(), rng.gen::<f64>()];
        let fit = lp_fit([pj0, 1.0 - pj0], p, 0.0, c, alpha)?;
        let grid = lp_edge_cost_grid([pj0, 1.0 - pj0], p, 0.0, c, alpha, EDGE_GRID_STEP)?;
        lp = lp.max((fit.cost - grid).abs());
    }
    out.push(timed(t, residual_row(ctx, "lp_edge_cost_grid", 100, lp, TOL_EDGE_GRID)));

    let t = Instant::now();
    let mut ed = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 1..n {
                if a != b {
                    edges.push(Edge {
                        from: a,
                        to: b,
                        w: rng.gen_range(-3.0..3.0),
                    });
                }
            }
        }
        for mode in [Optimize::Max, Optimize::Min] {
            let a = edmonds_arborescence(n, 0, &edges, mode)?;
            let b = brute_force_arborescence(n, 0, &edges, mode).unwrap_or(f64::NAN);
            ed = ed.max((a.weight - b).abs());
        }
    }
    out.push(timed(t, residual_row(ctx, "edmonds_brute_force", 50, ed, 1e-9)));

    let t = Instant::now();
    let mut tw = 0.0f64;
    for _ in 0..10 {
        let n = rng.gen_range(2..=6);
        let net = random::dag(n, 2, 0.1, &mut rng);
        let cube = ExactCube::new(&net)?;
        let st = PairwiseStats::from_net(&net)?;
        let parent: Vec<Option<usize>> = (0..n)
            .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
            .collect();
        let proj = tree_projection(&st, &parent)?;
        let kl = kl_table_net(cube.probs(), &proj);
        tw = tw.max((kl - (j_p(n, cube.probs())? - tree_weight(&st, &parent))).abs());
    }
    out.push(timed(t, residual_row(ctx, "tree_weight_identity", 10, tw, 1e-10)));

    let t = Instant::now();
    let mut approx_fail = 0usize;
    for _ in 0..5 {
        let net = random::tree(6, 0.1, 0.3, &mut rng);
        let cube = ExactCube::new(&net)?;
        let dnf = DecisionTree::random(6, 2, &mut rng).to_dnf();
        let fx = cube.table(&mq_adapter(&dnf, Range::PlusMinus));
        let h = cube.spectrum(&fx);
        let rep = sparse_square_approx(&cube, &fx, Range::PlusMinus, &h, 0.2, None);
        approx_fail += (!rep.all_pass()) as usize;
    }
    out.push(timed(
        t,
        residual_row(ctx, "square_approx_chain", 5, approx_fail as f64, 0.0),
    ));
    Ok(out)
}

/// Learned tree plus its exact KL, for callers that want both.
pub fn tree_kl(hidden: &BayesNet, st: &PairwiseStats, alg: &str, c: f64, alpha: f64) -> Result<(LearnedTree, f64)> {
    let t = fit_tree(alg, st, c, alpha)?;
    let kl = kl_net_net(hidden, &t.net)?;
    Ok((t, kl))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn unknown_kinds_are_config_errors() {
        let c = cfg(r#"{"experiment": "spectrum", "net": {"kind": "hypercube"}}"#);
        assert!(matches!(run(&c, 1), Err(Error::Config { path, .. }) if path == "net.kind"));
        let c = cfg(r#"{"experiment": "spectrum", "target": {"kind": "majority"}}"#);
        assert!(matches!(run(&c, 1), Err(Error::Config { path, .. }) if path == "target.kind"));
    }

    #[test]
    fn exact_km_brackets_planted_spectrum() {
        let c = cfg(r#"{"experiment": "km", "net": {"kind": "homogeneous_chain", "n": 6},
                        "target": {"kind": "planted", "planted": [[[0], 1.0], [[2, 4], 0.5], [[5], 0.05]]}}"#);
        let recs = run(&c, 1).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].get("missing_heavy"), Some(&Value::I(0)));
        assert!(all_pass(&recs));
    }

    #[test]
    fn records_do_not_depend_on_jobs() {
        let c = cfg(
            r#"{"experiment": "learn-tree", "seed": 5, "seeds": 4, "net": {"kind": "tree", "n": 5},
                        "tree": {"m": 2000, "algorithm": "all"}}"#,
        );
        let strip = |mut v: Vec<ResultRecord>| {
            v.iter_mut().for_each(|r| r.wall_ms = None);
            v
        };
        assert_eq!(strip(run(&c, 1).unwrap()), strip(run(&c, 3).unwrap()));
    }

    #[test]
    fn bracket_counts() {
        let out = KmOutput {
            sets: vec![IndexSet(1), IndexSet(2)],
            coeffs: SparseSpectrum::from_dense(2, &[0.0, 0.5, 0.01, 0.0]),
            mode: crate::km::KmMode::Exact,
            params: KmParams::new(0.25, 0.1, 0.1).unwrap(),
            budget: None,
            stats: Default::default(),
        };
        let b = km_bracket(&out, &[0.0, 0.5, 0.01, 0.3], 0.25);
        assert_eq!((b.missing, b.spurious), (1, 1));
        assert!(!b.ok(None));
    }
}
