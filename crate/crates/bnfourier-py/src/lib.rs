//! Python bindings. Truth tables are lists indexed by the assignment
//! bitmask (bit v = value of variable v).

use ::bnfourier as core;
use core::bn_model::{self, random, seeded};
use core::conjunction_spectrum::{self as cs, Conjunction};
use core::dnf_learn::{self as dl, DnfFormula, LearnParams, PtfConfig};
use core::fourier_basis::ExactCube;
use core::harness::{self, ExperimentConfig};
use core::km::{self, KmConfig, KmParams};
use core::tree_learn::{self as tl, PairwiseStats};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        core::Error::IterationCap { .. } | core::Error::Capacity { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// A Bayesian network over binary variables.
#[pyclass(name = "BayesNet", module = "bnfourier")]
struct PyNet {
    inner: core::BayesNet,
}

#[pymethods]
impl PyNet {
    /// parents[v] lists the parents of v; cpt[v][row] = P(X_v = 1 | parents),
    /// where bit k of `row` is the value of parents[v][k].
    #[new]
    fn new(parents: Vec<Vec<usize>>, cpt: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyNet {
            inner: core::BayesNet::new(parents, cpt).py()?,
        })
    }

    #[staticmethod]
    fn product(mus: Vec<f64>) -> PyResult<Self> {
        Ok(PyNet {
            inner: bn_model::make_product(&mus).py()?,
        })
    }

    /// rows[i] = (P(X_{i+1}=1 | X_i=0), P(X_{i+1}=1 | X_i=1))
    #[staticmethod]
    fn chain(root: f64, rows: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PyNet {
            inner: bn_model::make_chain(root, &rows).py()?,
        })
    }

    /// Seeded random net: kind is product, chain, tree, forest, dag or kjunta.
    #[staticmethod]
    #[pyo3(signature = (kind, n, seed, c=0.1, alpha=0.1, k=2))]
    fn random(kind: &str, n: usize, seed: u64, c: f64, alpha: f64, k: usize) -> PyResult<Self> {
        let rng = &mut seeded(seed);
        let inner = match kind {
            "product" => random::product(n, c, rng),
            "chain" => random::chain(n, c, alpha, rng),
            "tree" => random::tree(n, c, alpha, rng),
            "forest" => random::forest(n, c, alpha, 0.3, rng),
            "dag" => random::dag(n, k, c, rng),
            "kjunta" => random::kjunta(n, k, c, rng),
            _ => return Err(PyValueError::new_err(format!("unknown kind {kind:?}"))),
        };
        Ok(PyNet { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyNet {
            inner: core::BayesNet::from_json(s).py()?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn parents(&self, v: usize) -> Vec<usize> {
        self.inner.parents(v).to_vec()
    }

    fn cpt(&self, v: usize) -> Vec<f64> {
        self.inner.cpt(v).to_vec()
    }

    fn joint_prob(&self, x: u64) -> f64 {
        self.inner.joint_prob(x)
    }

    /// c_star, alpha_mu, alpha_sigma and structure.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.validate().py()?;
        let d = PyDict::new(py);
        d.set_item("c_star", r.c_star)?;
        d.set_item("alpha_mu", r.alpha_mu)?;
        d.set_item("alpha_sigma", r.alpha_sigma)?;
        d.set_item("structure", r.structure.as_str())?;
        Ok(d)
    }

    fn sample(&self, count: usize, seed: u64) -> Vec<u64> {
        self.inner.ancestral_sample(&mut seeded(seed), count)
    }

    fn __repr__(&self) -> String {
        format!(
            "BayesNet(n={}, structure={})",
            self.inner.n(),
            self.inner.structure().as_str()
        )
    }
}

fn cube(net: &PyNet) -> PyResult<ExactCube> {
    ExactCube::new(&net.inner).py()
}

fn check_table(c: &ExactCube, fx: &[f64]) -> PyResult<()> {
    if fx.len() != c.size() {
        return Err(PyValueError::new_err(format!(
            "table has {} entries, expected {}",
            fx.len(),
            c.size()
        )));
    }
    Ok(())
}

/// Full spectrum of a truth table, as {set mask: coefficient} (nonzero only).
#[pyfunction]
fn spectrum(net: &PyNet, table: Vec<f64>) -> PyResult<Vec<(u64, f64)>> {
    let c = cube(net)?;
    check_table(&c, &table)?;
    Ok(c.spectrum(&table).iter().map(|(s, v)| (s.0, v)).collect())
}

#[pyfunction]
#[pyo3(signature = (net, max_size=None))]
fn orthonormality_residual(net: &PyNet, max_size: Option<usize>) -> PyResult<f64> {
    core::fourier_basis::orthonormality_residual(&net.inner, max_size).py()
}

/// L1 norm of the 0/1 conjunction given by 1-based signed literals.
#[pyfunction]
fn conjunction_l1(net: &PyNet, literals: Vec<i64>) -> PyResult<f64> {
    let f = Conjunction::from_signed(&literals).py()?;
    let c = cube(net)?;
    Ok(c.spectrum_dense(&cs::conjunction_table(&c, &f))
        .iter()
        .map(|v| v.abs())
        .sum())
}

#[pyfunction]
fn chain_spectral_norm(net: &PyNet, literals: Vec<i64>) -> PyResult<f64> {
    cs::chain_spectral_norm_exact(&net.inner, &Conjunction::from_signed(&literals).py()?).py()
}

#[pyfunction]
fn product_spectral_norm(mus: Vec<f64>, literals: Vec<i64>) -> PyResult<f64> {
    cs::product_spectral_norm(&mus, &Conjunction::from_signed(&literals).py()?).py()
}

/// construction, n, computed, threshold, pass
type CertRow = (String, usize, f64, f64, bool);

#[pyfunction]
#[pyo3(signature = (gstar_n=3))]
fn lower_bound_certificates(gstar_n: usize) -> PyResult<Vec<CertRow>> {
    Ok(cs::lower_bound_certificates(gstar_n)
        .py()?
        .into_iter()
        .map(|r| (r.construction, r.n, r.computed, r.threshold, r.pass))
        .collect())
}

/// Heavy-coefficient search on a truth table; returns [(mask, estimate)].
#[pyfunction]
#[pyo3(signature = (net, table, theta, gamma, delta=0.05, mode="exact", seed=0, m1=None, m2=None))]
#[allow(clippy::too_many_arguments)]
fn km_search(
    net: &PyNet,
    table: Vec<f64>,
    theta: f64,
    gamma: f64,
    delta: f64,
    mode: &str,
    seed: u64,
    m1: Option<u64>,
    m2: Option<u64>,
) -> PyResult<Vec<(u64, f64)>> {
    if table.len() != 1usize << net.inner.n().min(63) {
        return Err(PyValueError::new_err("table must have 2^n entries"));
    }
    let p = KmParams::new(theta, gamma, delta).py()?;
    let mut cfg = match mode {
        "exact" => KmConfig::exact(),
        "sampled" => KmConfig::sampled(),
        _ => return Err(PyValueError::new_err("mode is exact or sampled")),
    };
    if let (Some(a), Some(b)) = (m1, m2) {
        cfg = cfg.with_budget(a, b);
    }
    let f = |x: u64| table[x as usize];
    let out = km::km_run(&net.inner, &f, &p, &cfg, &mut seeded(seed)).py()?;
    Ok(out.sets.iter().map(|s| (s.0, out.coeffs.get(*s))).collect())
}

/// A DNF formula in the text format (one term per line, 1-based signed literals).
#[pyclass(name = "Dnf", module = "bnfourier")]
struct PyDnf {
    inner: DnfFormula,
}

#[pymethods]
impl PyDnf {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyDnf {
            inner: DnfFormula::parse(text).py()?,
        })
    }

    #[staticmethod]
    fn random_tree(n: usize, depth: usize, seed: u64) -> Self {
        PyDnf {
            inner: dl::DecisionTree::random(n, depth, &mut seeded(seed)).to_dnf(),
        }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __call__(&self, x: u64) -> bool {
        self.inner.eval(x)
    }

    #[getter]
    fn s(&self) -> usize {
        self.inner.s()
    }
}

/// Learns `dnf` under `net` with membership queries and returns
/// {"error", "support", "d", "l1", "hypothesis"}.
#[pyfunction]
#[pyo3(signature = (net, dnf, epsilon=0.1, delta=0.1, learner="ptf", seed=0))]
fn learn_dnf<'py>(
    py: Python<'py>,
    net: &PyNet,
    dnf: &PyDnf,
    epsilon: f64,
    delta: f64,
    learner: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let f = dl::mq_adapter(&dnf.inner, core::fourier_basis::Range::PlusMinus);
    let form = harness::experiments::l1_form_for(&net.inner, "auto").py()?;
    let params = LearnParams {
        epsilon,
        delta,
        s: dnf.inner.s(),
        c: net.inner.validate().py()?.c_star,
        l1_form: form,
    };
    let rng = &mut seeded(seed);
    let rep = match learner {
        "ptf" => dl::learn_dnf(&net.inner, &f, &params, &PtfConfig::exact(), rng),
        "disjoint" => dl::learn_disjoint_dnf(&net.inner, &f, &params, &KmConfig::exact(), rng),
        _ => return Err(PyValueError::new_err("learner is ptf or disjoint")),
    }
    .py()?;
    let d = PyDict::new(py);
    d.set_item("error", dl::exact_error(&net.inner, &f, &rep.hypothesis).py()?)?;
    d.set_item("support", rep.hypothesis.spectrum.len())?;
    d.set_item("d", rep.plan.d)?;
    d.set_item("l1", rep.plan.l1)?;
    d.set_item("hypothesis", rep.hypothesis.to_json())?;
    Ok(d)
}

/// Learns a tree-structured net from 0/1 samples (bitmasks).
/// algorithm: baseline | diff | lp.
#[pyfunction]
#[pyo3(signature = (n, samples, algorithm="diff", c=0.1, alpha=0.8))]
fn learn_tree(n: usize, samples: Vec<u64>, algorithm: &str, c: f64, alpha: f64) -> PyResult<PyNet> {
    let st = PairwiseStats::from_samples(n, &samples).py()?;
    let t = match algorithm {
        "baseline" => tl::chow_liu_baseline(&st),
        "diff" => tl::chow_liu_diff_restricted(&st, c),
        "lp" => tl::lp_chow_liu(&st, c, alpha),
        _ => return Err(PyValueError::new_err("algorithm is baseline, diff or lp")),
    }
    .py()?;
    Ok(PyNet { inner: t.net })
}

/// KL(p ‖ q) in nats, by enumeration.
#[pyfunction]
fn kl(p: &PyNet, q: &PyNet) -> PyResult<f64> {
    tl::kl_net_net(&p.inner, &q.inner).py()
}

/// Runs a harness experiment from a JSON config; returns the records as
/// JSON text (the same document the CLI writes with --format json).
#[pyfunction]
#[pyo3(signature = (config_json, jobs=1))]
fn run_experiment(config_json: &str, jobs: usize) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).py()?;
    let recs = harness::run(&cfg, jobs).py()?;
    harness::render(&recs, harness::Format::Json, false).py()
}

#[pymodule]
#[pyo3(name = "bnfourier")]
fn bnfourier_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNet>()?;
    m.add_class::<PyDnf>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(orthonormality_residual, m)?)?;
    m.add_function(wrap_pyfunction!(conjunction_l1, m)?)?;
    m.add_function(wrap_pyfunction!(chain_spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(product_spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_certificates, m)?)?;
    m.add_function(wrap_pyfunction!(km_search, m)?)?;
    m.add_function(wrap_pyfunction!(learn_dnf, m)?)?;
    m.add_function(wrap_pyfunction!(learn_tree, m)?)?;
    m.add_function(wrap_pyfunction!(kl, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping_is_total() {
        let e = err(core::Error::Shape("x".into()));
        Python::initialize();
        Python::attach(|py| assert!(e.is_instance_of::<PyValueError>(py)));
    }

    #[test]
    fn dnf_wrapper() {
        let d = PyDnf::parse("1 -2\n3\n").unwrap();
        assert_eq!(d.s(), 2);
        assert!(d.__call__(0b001));
        assert!(!d.__call__(0b011));
    }
}
