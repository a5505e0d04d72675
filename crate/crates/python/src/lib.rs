//! Python bindings. Instances, exact solving, peeling, decimation, the
//! closed-form constants and the experiment commands.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use xorsat_core::decimation::{self, InternalVector, OrderingVector, TreeMarginal, UnitClause};
use xorsat_core::experiments::{self, ExperimentConfig, RuleKind};
use xorsat_core::rng::{self, Purpose};
use xorsat_core::{gf2, instance, peeling, theory, Assignment};

fn err(e: xorsat_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn assignment(bits: Vec<u8>) -> Assignment {
    Assignment::from_bits(bits.into_iter().map(|b| b != 0).collect())
}

fn bits(a: &Assignment) -> Vec<u8> {
    a.bits().iter().map(|&b| b as u8).collect()
}

#[pyclass(name = "Instance", module = "xorsat_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance(xorsat_core::Instance);

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(PyInstance).map_err(err)
    }

    /// Uniform instance with `m = round(r n)` clauses.
    #[staticmethod]
    #[pyo3(signature = (k, n, r, seed=1))]
    fn random(k: usize, n: usize, r: f64, seed: u64) -> PyResult<Self> {
        instance::sample_with_density(k, n, r, seed).map(PyInstance).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    fn clauses(&self) -> Vec<(Vec<usize>, u8)> {
        self.0.clauses().iter().map(|c| (c.vars().to_vec(), c.rhs() as u8)).collect()
    }

    /// `(satisfied, violated_count)`.
    fn evaluate(&self, bits: Vec<u8>) -> PyResult<(bool, usize)> {
        self.0.evaluate(&assignment(bits)).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, k={}, m={})", self.0.n(), self.0.k(), self.0.m())
    }
}

#[pyfunction]
fn hamming(a: Vec<u8>, b: Vec<u8>) -> PyResult<usize> {
    instance::hamming(&assignment(a), &assignment(b)).map_err(err)
}

/// Gaussian elimination summary. `solution` is a uniform random solution or `None`.
#[pyfunction]
#[pyo3(signature = (inst, seed=1))]
fn solve<'py>(py: Python<'py>, inst: &PyInstance, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let res = gf2::eliminate(&inst.0);
    let d = PyDict::new(py);
    d.set_item("satisfiable", res.is_consistent())?;
    d.set_item("rank", res.rank())?;
    d.set_item("nullity", res.nullity())?;
    d.set_item("log2_count", res.solution_count_log2())?;
    let sol = if res.is_consistent() {
        let a = res.sample_solution(&mut rng::stream(seed, Purpose::Solution)).map_err(err)?;
        Some(bits(&a))
    } else {
        None
    };
    d.set_item("solution", sol)?;
    Ok(d)
}

/// Exact marginal of `v` over the solution set as a reduced fraction.
#[pyfunction]
fn marginal(inst: &PyInstance, v: usize) -> PyResult<Option<(u64, u64)>> {
    let m = gf2::exact_marginal(&inst.0, v).map_err(err)?;
    Ok(m.is_defined().then(|| m.reduced()))
}

#[pyfunction]
fn peel<'py>(py: Python<'py>, inst: &PyInstance) -> PyResult<Bound<'py, PyDict>> {
    let cr = peeling::peel(&inst.0);
    let stats = cr.stats(inst.0.n());
    let d = PyDict::new(py);
    d.set_item("kept", cr.kept.clone())?;
    d.set_item("core_clauses", cr.core_clauses.clone())?;
    d.set_item("core_var_fraction", stats.core_var_fraction)?;
    d.set_item("core_clause_fraction", stats.core_clause_fraction)?;
    d.set_item("core", PyInstance(cr.core))?;
    Ok(d)
}

/// Decimation with `Z` and `U` drawn from `seed`, as the CLI does.
#[pyfunction]
#[pyo3(signature = (inst, rule="uc", radius=4, seed=1))]
fn decimate<'py>(
    py: Python<'py>,
    inst: &PyInstance,
    rule: &str,
    radius: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let n = inst.0.n();
    let z = OrderingVector::random(n, &mut rng::stream(seed, Purpose::Ordering));
    let u = InternalVector::random(n, &mut rng::stream(seed, Purpose::InternalV));
    let kind: RuleKind = rule.parse().map_err(err)?;
    let trace = match kind {
        RuleKind::Uc => decimation::run_decimation(&inst.0, &UnitClause, &z, &u),
        RuleKind::Marginal => decimation::run_decimation(&inst.0, &TreeMarginal { radius }, &z, &u),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("assignment", bits(&trace.output))?;
    d.set_item("satisfied", inst.0.is_satisfied_by(&trace.output))?;
    d.set_item("free_fraction", trace.free_fraction())?;
    d.set_item("fallbacks", trace.fallbacks())?;
    d.set_item("violated_on_removal", trace.violated_on_removal)?;
    Ok(d)
}

#[pyfunction]
fn thresholds<'py>(py: Python<'py>, k: usize) -> PyResult<Bound<'py, PyDict>> {
    let t = theory::ThresholdReport::compute(k);
    let d = PyDict::new(py);
    d.set_item("k", t.k)?;
    d.set_item("r_core", t.r_core)?;
    d.set_item("r_1", t.r_1)?;
    d.set_item("alpha_1", t.alpha_1)?;
    d.set_item("r_sat_est", t.r_sat_est)?;
    Ok(d)
}

#[pyfunction]
fn solve_q(k: usize, r: f64) -> f64 {
    theory::solve_q(k, r)
}

#[pyfunction]
fn r_core(k: usize) -> f64 {
    theory::r_core(k)
}

#[pyfunction]
fn v_core(k: usize, r: f64) -> f64 {
    theory::v_core(k, r)
}

#[pyfunction]
fn mu_u(k: usize) -> f64 {
    theory::mu_u(k)
}

#[pyfunction]
fn w1(k: usize, r: f64) -> f64 {
    theory::w1(k, r)
}

#[pyfunction]
#[pyo3(signature = (k, r, radius=4))]
fn w_e(k: usize, r: f64, radius: usize) -> f64 {
    theory::w_e(k, r, radius)
}

/// Runs an experiment command and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (command, k=vec![3], r=vec![0.9], n=vec![10000], trials=20, rule="uc", radius=4, seed=1))]
#[allow(clippy::too_many_arguments)]
fn experiment(
    py: Python<'_>,
    command: &str,
    k: Vec<usize>,
    r: Vec<f64>,
    n: Vec<usize>,
    trials: usize,
    rule: &str,
    radius: usize,
    seed: u64,
) -> PyResult<String> {
    let cfg = ExperimentConfig {
        seed,
        k,
        r,
        n,
        trials,
        rule: rule.parse().map_err(err)?,
        radius,
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(err)?;
    let f = match command {
        "theory" => experiments::cmd_theory,
        "core-stats" => experiments::cmd_core_stats,
        "freeness" => experiments::cmd_freeness,
        "walk" => experiments::cmd_walk,
        "ogp-scan" => experiments::cmd_ogp_scan,
        "success" => experiments::cmd_success,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let report = py.detach(|| f(&cfg)).map_err(err)?;
    Ok(report.to_json())
}

#[pymodule]
fn xorsat_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(hamming, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(marginal, m)?)?;
    m.add_function(wrap_pyfunction!(peel, m)?)?;
    m.add_function(wrap_pyfunction!(decimate, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(solve_q, m)?)?;
    m.add_function(wrap_pyfunction!(r_core, m)?)?;
    m.add_function(wrap_pyfunction!(v_core, m)?)?;
    m.add_function(wrap_pyfunction!(mu_u, m)?)?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(w_e, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    Ok(())
}
