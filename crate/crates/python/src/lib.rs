//! Python bindings: varieties, homomorphisms, slopes, partners, audits and the
//! regression suite. Integers cross the boundary exactly as Python `int`s.

use std::sync::Arc;

use fmpartners::io::{parse_rat, parse_variety, variety_to_json};
use fmpartners::lattice_core::{Int, IntMat};
use fmpartners::partners::{enumerate_partners, find_isomorphism, ppav_rank1_check, DEFAULT_SEARCH_BOUND};
use fmpartners::product_audit::{audit_equivalence, projection_iso, search_n as lib_search_n, AuditOptions, ProductClass};
use fmpartners::slopes::{a_mu as lib_a_mu, pi1_invariants_of, Slope};
use fmpartners::varieties::{FiniteSubgroup, Homomorphism as LibHom, NsClass, TorusVariety};
use fmpartners::{corpus, regress, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvariantViolation(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<Int>>) -> PyResult<IntMat> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(IntMat::from_rows(rows))
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).expect("json");
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, skip_from_py_object, name = "Variety", module = "fmpartners_py")]
#[derive(Clone)]
pub struct PyVariety {
    inner: Arc<TorusVariety>,
}

impl PyVariety {
    fn wrap(v: TorusVariety) -> Self {
        PyVariety { inner: Arc::new(v) }
    }
}

#[pymethods]
impl PyVariety {
    /// Parses the JSON variety format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_variety(text).map(Self::wrap).map_err(err)
    }

    #[staticmethod]
    fn e_i() -> Self {
        Self::wrap(corpus::e_i())
    }

    #[staticmethod]
    fn e_omega() -> Self {
        Self::wrap(corpus::e_omega())
    }

    #[staticmethod]
    fn e_i_x_e_i() -> Self {
        Self::wrap(corpus::e_i_x_e_i())
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn g(&self) -> usize {
        self.inner.g()
    }

    #[getter]
    fn ns_rank(&self) -> usize {
        self.inner.ns_rank()
    }

    #[getter]
    fn ns_basis(&self) -> Vec<Vec<Vec<Int>>> {
        self.inner.ns_basis().iter().map(IntMat::to_rows).collect()
    }

    /// Failures found by validation; empty when the variety is valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().failures.iter().map(ToString::to_string).collect()
    }

    fn is_valid(&self) -> bool {
        self.inner.validate().is_valid()
    }

    fn dual(&self) -> Self {
        PyVariety { inner: self.inner.dual() }
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&variety_to_json(&self.inner)).expect("json")
    }

    /// Elementary divisors of `K(L)` for `L = Σ cᵢEᵢ`.
    fn kernel_divisors(&self, coeffs: Vec<Int>) -> PyResult<Vec<Int>> {
        let c = NsClass::from_coefficients(self.inner.clone(), &coeffs).map_err(err)?;
        Ok(c.kernel_group().map_err(err)?.divisors().to_vec())
    }

    fn identity(&self) -> PyHomomorphism {
        PyHomomorphism { inner: self.inner.identity() }
    }

    fn __eq__(&self, other: &PyVariety) -> bool {
        *self.inner == *other.inner
    }

    fn __repr__(&self) -> String {
        format!("Variety(name={:?}, g={}, ns_rank={})", self.inner.name(), self.inner.g(), self.inner.ns_rank())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Homomorphism", module = "fmpartners_py")]
#[derive(Clone)]
pub struct PyHomomorphism {
    inner: LibHom,
}

#[pymethods]
impl PyHomomorphism {
    #[new]
    fn new(source: &PyVariety, target: &PyVariety, m: Vec<Vec<Int>>) -> PyResult<Self> {
        let inner = LibHom::new(source.inner.clone(), target.inner.clone(), matrix(m)?).map_err(err)?;
        Ok(PyHomomorphism { inner })
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Int>> {
        self.inner.matrix().to_rows()
    }

    #[getter]
    fn source(&self) -> PyVariety {
        PyVariety { inner: self.inner.source().clone() }
    }

    #[getter]
    fn target(&self) -> PyVariety {
        PyVariety { inner: self.inner.target().clone() }
    }

    fn is_isogeny(&self) -> bool {
        self.inner.is_isogeny()
    }

    fn degree(&self) -> PyResult<Int> {
        self.inner.degree().map_err(err)
    }

    fn kernel_divisors(&self) -> PyResult<Vec<Int>> {
        Ok(self.inner.kernel().map_err(err)?.structure().divisors().to_vec())
    }

    fn dual(&self) -> Self {
        PyHomomorphism { inner: self.inner.dual_hom() }
    }

    fn is_isomorphism(&self) -> bool {
        self.inner.is_isomorphism_certificate()
    }

    fn __repr__(&self) -> String {
        format!("Homomorphism({} -> {}, {:?})", self.inner.source().name(), self.inner.target().name(), self.inner.matrix().to_rows())
    }
}

/// `A_μ` for `μ = Σ cᵢEᵢ / l`: the abstract variety and the invariants of `π₁`.
#[pyfunction]
fn a_mu<'py>(py: Python<'py>, variety: &PyVariety, coeffs: Vec<Int>, l: Int) -> PyResult<(PyVariety, Bound<'py, PyAny>)> {
    let slope = Slope::from_coefficients(variety.inner.clone(), &coeffs, &l).map_err(err)?;
    let amu = lib_a_mu(&slope).map_err(err)?;
    let inv = pi1_invariants_of(&amu).map_err(err)?;
    let info = serde_json::json!({
        "slope": slope.literal(),
        "deg_pi1": inv.deg_pi1.to_string(),
        "rank": inv.rank.to_string(),
        "sigma": inv.sigma.structure(),
    });
    Ok((PyVariety { inner: amu.variety.clone() }, json_to_py(py, &info)?))
}

#[pyfunction]
#[pyo3(signature = (source, target, bound = DEFAULT_SEARCH_BOUND))]
fn isomorphism(py: Python<'_>, source: &PyVariety, target: &PyVariety, bound: i64) -> Option<PyHomomorphism> {
    let (s, t) = (source.inner.clone(), target.inner.clone());
    py.detach(|| find_isomorphism(&s, &t, bound)).map(|inner| PyHomomorphism { inner })
}

/// `(slope literal, partner, isomorphic to the dual)` for each slope modulo NS within the bounds.
#[pyfunction]
#[pyo3(signature = (variety, coeff_bound = 1, denom_bound = 3, search_bound = DEFAULT_SEARCH_BOUND))]
fn partners(
    py: Python<'_>,
    variety: &PyVariety,
    coeff_bound: i64,
    denom_bound: i64,
    search_bound: i64,
) -> PyResult<Vec<(String, PyVariety, bool)>> {
    let v = variety.inner.clone();
    let entries = py.detach(|| enumerate_partners(&v, coeff_bound, denom_bound, search_bound)).map_err(err)?;
    Ok(entries
        .into_iter()
        .map(|e| (e.slope.literal(), PyVariety { inner: e.partner.partner.clone() }, e.dual_isomorphism.is_some()))
        .collect())
}

#[pyfunction]
fn ppav_check(variety: &PyVariety, n: Int, l: Int) -> PyResult<bool> {
    Ok(ppav_rank1_check(&variety.inner, &n, &l).map_err(err)?.passed)
}

/// The audit report of the slope `m/l` on `A × B` as a dict; when every check
/// passes it also carries the matrices of `p`, `q` and `η`.
#[pyfunction]
#[pyo3(signature = (a, b, m, l, brute_force = true))]
fn audit<'py>(py: Python<'py>, a: &PyVariety, b: &PyVariety, m: Vec<Vec<Int>>, l: Int, brute_force: bool) -> PyResult<Bound<'py, PyAny>> {
    let pc = ProductClass::from_parts(&a.inner, &b.inner, matrix(m)?).map_err(err)?;
    let report = audit_equivalence(&pc, &l, &AuditOptions { brute_force }).map_err(err)?;
    let mut value = serde_json::to_value(&report).expect("json");
    if report.all_pass {
        let iso = projection_iso(&pc, &l, DEFAULT_SEARCH_BOUND).map_err(err)?;
        value["eta"] = serde_json::json!(iso.eta.matrix().to_rows().iter().map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>()).collect::<Vec<_>>());
        value["essential_certificate"] = serde_json::json!(iso.essential_certificate.is_some());
    }
    json_to_py(py, &value)
}

/// Coefficients of `N` with `K(N) ∩ A_l` equal to the subgroup generated by
/// `generators` (points given as rational strings), or `None` at this bound.
#[pyfunction]
#[pyo3(signature = (variety, l, generators, bound = 3))]
fn search_n(variety: &PyVariety, l: Int, generators: Vec<Vec<String>>, bound: i64) -> PyResult<Option<Vec<Int>>> {
    let points = generators
        .iter()
        .map(|p| p.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let target = FiniteSubgroup::generated_by(variety.inner.clone(), &points).map_err(err)?;
    Ok(lib_search_n(&variety.inner, &l, &target, bound).map_err(err)?.map(|n| n.coefficients))
}

/// The regression suite as a dict.
#[pyfunction]
fn run_regress<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(regress::run_all);
    json_to_py(py, &serde_json::to_value(&report).expect("json"))
}

#[pymodule]
fn fmpartners_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVariety>()?;
    m.add_class::<PyHomomorphism>()?;
    m.add_function(wrap_pyfunction!(a_mu, m)?)?;
    m.add_function(wrap_pyfunction!(isomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(partners, m)?)?;
    m.add_function(wrap_pyfunction!(ppav_check, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(search_n, m)?)?;
    m.add_function(wrap_pyfunction!(run_regress, m)?)?;
    Ok(())
}
