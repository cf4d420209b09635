//! Python bindings for the AoI toolkit. Exposes the parameter/result types,
//! the closed-form policy evaluations, the distribution kernels, the slot
//! simulator with its renewal oracles, and the free-parameter searches as the
//! `aoi_py` extension module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use aoi_core::model::DEFAULT_TAIL_TOL;
use aoi_core::{analytic, dist, search, sim};

fn err(e: aoi_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_policy(name: &str) -> PyResult<aoi_core::Policy> {
    name.parse().map_err(err)
}

/// Channel and source parameters: arrival rate p, erasure rate delta, update
/// length k. The derived best-effort per-symbol success rate is q = p(1-delta).
#[pyclass(name = "SystemParams", frozen, skip_from_py_object)]
struct PySystemParams {
    inner: aoi_core::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    fn new(p: f64, delta: f64, k: u32) -> PyResult<Self> {
        Ok(Self {
            inner: aoi_core::SystemParams::new(p, delta, k).map_err(err)?,
        })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemParams(p={}, delta={}, k={})",
            self.inner.p(),
            self.inner.delta(),
            self.inner.k()
        )
    }
}

/// Average AoI with its renewal-reward constituents.
#[pyclass(name = "AoiBreakdown", frozen, skip_from_py_object)]
struct PyAoiBreakdown {
    inner: aoi_core::AoiBreakdown,
}

#[pymethods]
impl PyAoiBreakdown {
    #[getter]
    fn mean_q(&self) -> f64 {
        self.inner.mean_q
    }

    #[getter]
    fn mean_t(&self) -> f64 {
        self.inner.mean_t
    }

    #[getter]
    fn aoi(&self) -> f64 {
        self.inner.aoi
    }

    fn __repr__(&self) -> String {
        format!(
            "AoiBreakdown(aoi={}, mean_q={}, mean_t={})",
            self.inner.aoi, self.inner.mean_q, self.inner.mean_t
        )
    }
}

impl From<aoi_core::AoiBreakdown> for PyAoiBreakdown {
    fn from(inner: aoi_core::AoiBreakdown) -> Self {
        Self { inner }
    }
}

/// Finite-support pmf over consecutive integers starting at `offset`, with
/// truncated probability recorded in `tail_mass`.
#[pyclass(name = "DiscretePmf", frozen, skip_from_py_object)]
struct PyDiscretePmf {
    inner: aoi_core::DiscretePmf,
}

#[pymethods]
impl PyDiscretePmf {
    #[getter]
    fn offset(&self) -> i64 {
        self.inner.offset()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses().to_vec()
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.inner.tail_mass()
    }

    fn mass_at(&self, value: i64) -> f64 {
        self.inner.mass_at(value)
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn second_moment(&self) -> f64 {
        self.inner.second_moment()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn __len__(&self) -> usize {
        self.inner.masses().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "DiscretePmf(offset={}, support={}, tail_mass={:e})",
            self.inner.offset(),
            self.inner.masses().len(),
            self.inner.tail_mass()
        )
    }
}

/// Slot-simulation output.
#[pyclass(name = "SimStats", frozen)]
struct PySimStats {
    inner: sim::SimStats,
}

#[pymethods]
impl PySimStats {
    #[getter]
    fn total_area(&self) -> f64 {
        self.inner.total_area
    }

    #[getter]
    fn total_slots(&self) -> u64 {
        self.inner.total_slots
    }

    #[getter]
    fn deliveries(&self) -> u64 {
        self.inner.deliveries
    }

    #[getter]
    fn empirical_aoi(&self) -> f64 {
        self.inner.empirical_aoi()
    }

    #[getter]
    fn q_samples(&self) -> Option<Vec<f64>> {
        self.inner.q_samples.clone()
    }

    #[getter]
    fn t_samples(&self) -> Option<Vec<u64>> {
        self.inner.t_samples.clone()
    }

    fn aoi_standard_error(&self) -> Option<f64> {
        self.inner.aoi_standard_error()
    }

    fn __repr__(&self) -> String {
        format!(
            "SimStats(aoi={}, slots={}, deliveries={})",
            self.inner.empirical_aoi(),
            self.inner.total_slots,
            self.inner.deliveries
        )
    }
}

/// Renewal-oracle estimate with delta-method standard errors.
#[pyclass(name = "OracleEstimate", frozen)]
struct PyOracleEstimate {
    inner: sim::OracleEstimate,
}

#[pymethods]
impl PyOracleEstimate {
    #[getter]
    fn mean_q(&self) -> f64 {
        self.inner.mean_q
    }

    #[getter]
    fn mean_t(&self) -> f64 {
        self.inner.mean_t
    }

    #[getter]
    fn aoi(&self) -> f64 {
        self.inner.aoi
    }

    #[getter]
    fn se_mean_q(&self) -> f64 {
        self.inner.se_q
    }

    #[getter]
    fn se_mean_t(&self) -> f64 {
        self.inner.se_t
    }

    #[getter]
    fn se_aoi(&self) -> f64 {
        self.inner.se_aoi
    }

    #[getter]
    fn renewals(&self) -> u64 {
        self.inner.renewals
    }

    fn __repr__(&self) -> String {
        format!(
            "OracleEstimate(aoi={} +- {}, renewals={})",
            self.inner.aoi, self.inner.se_aoi, self.inner.renewals
        )
    }
}

// ---------------------------------------------------------------------------
// Distribution kernels
// ---------------------------------------------------------------------------

#[pyfunction]
fn binomial_pmf(trials: u64, s: f64, x: u64) -> PyResult<f64> {
    dist::binomial_pmf(trials, s, x).map_err(err)
}

#[pyfunction]
fn negbin_pmf(r: u32, s: f64, w: u64) -> PyResult<f64> {
    dist::negbin_pmf(r, s, w).map_err(err)
}

#[pyfunction]
fn success_prob_eps(k: u32, n: u32, s: f64) -> PyResult<f64> {
    dist::success_prob_eps(k, n, s).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, p, tail_tol=DEFAULT_TAIL_TOL))]
fn save_duration_pmf(n: u32, p: f64, tail_tol: f64) -> PyResult<PyDiscretePmf> {
    Ok(PyDiscretePmf {
        inner: dist::save_duration_pmf(n, p, tail_tol).map_err(err)?,
    })
}

#[pyfunction]
fn decode_slot_pmf(k: u32, n: u32, s: f64) -> PyResult<PyDiscretePmf> {
    Ok(PyDiscretePmf {
        inner: dist::decode_slot_pmf(k, n, s).map_err(err)?,
    })
}

/// First and second moments of a geometric random sum, as a (mean,
/// second_moment) pair.
#[pyfunction]
fn random_sum_moments(z_mean: f64, z_second: f64, eps: f64) -> PyResult<(f64, f64)> {
    let m = dist::random_sum_moments(z_mean, z_second, eps).map_err(err)?;
    Ok((m.mean, m.second_moment))
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

#[pyfunction]
#[pyo3(signature = (params, n, tail_tol=DEFAULT_TAIL_TOL))]
fn aoi_mds_st(params: &PySystemParams, n: u32, tail_tol: f64) -> PyResult<PyAoiBreakdown> {
    analytic::aoi_mds_st(&params.inner, n, tail_tol)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn aoi_mds_be(params: &PySystemParams, n: u32) -> PyResult<PyAoiBreakdown> {
    analytic::aoi_mds_be(&params.inner, n)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn aoi_rc_be(params: &PySystemParams) -> PyResult<PyAoiBreakdown> {
    analytic::aoi_rc_be(&params.inner)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, m, tail_tol=DEFAULT_TAIL_TOL))]
fn aoi_rc_st(params: &PySystemParams, m: u32, tail_tol: f64) -> PyResult<PyAoiBreakdown> {
    analytic::aoi_rc_st(&params.inner, m, tail_tol)
        .map(Into::into)
        .map_err(err)
}

/// Documented constant gap (1-q)/(2q) between the rateless best-effort closed
/// form and the zero-saving save-and-transmit expression.
#[pyfunction]
fn rc_be_st_gap(params: &PySystemParams) -> f64 {
    analytic::rc_be_st_gap(&params.inner)
}

#[pyfunction]
#[pyo3(signature = (m, p, tail_tol=DEFAULT_TAIL_TOL))]
fn total_harvest_pmf(m: u32, p: f64, tail_tol: f64) -> PyResult<PyDiscretePmf> {
    Ok(PyDiscretePmf {
        inner: analytic::total_harvest_pmf(m, p, tail_tol).map_err(err)?,
    })
}

/// Closed-form (mean, variance, second_moment) of the total harvested energy.
#[pyfunction]
fn harvest_moments(m: u32, p: f64) -> PyResult<(f64, f64, f64)> {
    analytic::harvest_moments(m, p).map_err(err)
}

/// Conditional moments of the best-effort remainder given a no-outage phase
/// of y slots, as (z_mean, z_second, yz_mean).
#[pyfunction]
fn rc_st_conditional_moments(params: &PySystemParams, y: u32) -> (f64, f64, f64) {
    let c = analytic::rc_st_conditional_moments(&params.inner, y);
    (c.z_mean_given_y, c.z_second_given_y, c.yz_mean_given_y)
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[pyfunction]
#[pyo3(signature = (params, policy, horizon, seed, n=None, m=None, battery_mode="analysis-faithful"))]
fn simulate_policy(
    params: &PySystemParams,
    policy: &str,
    horizon: u64,
    seed: u64,
    n: Option<u32>,
    m: Option<u32>,
    battery_mode: &str,
) -> PyResult<PySimStats> {
    let cfg = aoi_core::PolicyConfig {
        policy: parse_policy(policy)?,
        n,
        m,
        battery_mode: battery_mode.parse().map_err(err)?,
    };
    Ok(PySimStats {
        inner: sim::simulate_policy(&params.inner, &cfg, horizon, seed).map_err(err)?,
    })
}

#[pyfunction]
fn renewal_oracle_mds_st(
    params: &PySystemParams,
    n: u32,
    renewals: u64,
    seed: u64,
) -> PyResult<PyOracleEstimate> {
    Ok(PyOracleEstimate {
        inner: sim::renewal_oracle_mds_st(&params.inner, n, renewals, seed).map_err(err)?,
    })
}

#[pyfunction]
fn renewal_oracle_rc_st(
    params: &PySystemParams,
    m: u32,
    renewals: u64,
    seed: u64,
) -> PyResult<PyOracleEstimate> {
    Ok(PyOracleEstimate {
        inner: sim::renewal_oracle_rc_st(&params.inner, m, renewals, seed).map_err(err)?,
    })
}

/// Sample mean and standard error.
#[pyfunction]
fn estimate_ci(samples: Vec<f64>) -> PyResult<(f64, f64)> {
    sim::estimate_ci(&samples).map_err(err)
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

#[pyfunction]
#[pyo3(signature = (params, policy, n_max=None))]
fn best_n(
    params: &PySystemParams,
    policy: &str,
    n_max: Option<u32>,
) -> PyResult<(u32, PyAoiBreakdown, bool)> {
    let bound = n_max.unwrap_or_else(|| search::default_n_max(&params.inner));
    let opt = search::best_n(&params.inner, parse_policy(policy)?, bound).map_err(err)?;
    Ok((opt.value, opt.breakdown.into(), opt.at_bound))
}

#[pyfunction]
#[pyo3(signature = (params, m_max=None))]
fn best_m(params: &PySystemParams, m_max: Option<u32>) -> PyResult<(u32, PyAoiBreakdown, bool)> {
    let bound = m_max.unwrap_or_else(|| search::default_m_max(&params.inner));
    let opt = search::best_m(&params.inner, bound).map_err(err)?;
    Ok((opt.value, opt.breakdown.into(), opt.at_bound))
}

/// Optimized AoI for each policy over a parameter grid; returns one dict per
/// row ordered by (p, delta, k, policy).
#[pyfunction]
#[pyo3(signature = (ps, deltas, ks, policies=None))]
fn sweep(
    py: Python<'_>,
    ps: Vec<f64>,
    deltas: Vec<f64>,
    ks: Vec<u32>,
    policies: Option<Vec<String>>,
) -> PyResult<Vec<Py<PyAny>>> {
    let policies = match policies {
        Some(names) => names
            .iter()
            .map(|s| parse_policy(s))
            .collect::<PyResult<Vec<_>>>()?,
        None => aoi_core::Policy::ALL.to_vec(),
    };
    let grid = search::SweepGrid { ps, deltas, ks };
    let rows = search::sweep(&grid, &policies, DEFAULT_TAIL_TOL).map_err(err)?;
    rows.into_iter()
        .map(|row| {
            let dict = pyo3::types::PyDict::new(py);
            dict.set_item("p", row.params.p())?;
            dict.set_item("delta", row.params.delta())?;
            dict.set_item("k", row.params.k())?;
            dict.set_item("policy", row.policy.as_str())?;
            dict.set_item("free_param", row.free_param)?;
            dict.set_item("aoi", row.aoi)?;
            dict.set_item("mean_q", row.mean_q)?;
            dict.set_item("mean_t", row.mean_t)?;
            dict.set_item("at_bound", row.at_bound)?;
            dict.set_item("note", row.note)?;
            Ok(dict.into_any().unbind())
        })
        .collect()
}

#[pymodule]
fn aoi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyAoiBreakdown>()?;
    m.add_class::<PyDiscretePmf>()?;
    m.add_class::<PySimStats>()?;
    m.add_class::<PyOracleEstimate>()?;
    m.add_function(wrap_pyfunction!(binomial_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(negbin_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(success_prob_eps, m)?)?;
    m.add_function(wrap_pyfunction!(save_duration_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(decode_slot_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(random_sum_moments, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_mds_st, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_mds_be, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_rc_be, m)?)?;
    m.add_function(wrap_pyfunction!(aoi_rc_st, m)?)?;
    m.add_function(wrap_pyfunction!(rc_be_st_gap, m)?)?;
    m.add_function(wrap_pyfunction!(total_harvest_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(harvest_moments, m)?)?;
    m.add_function(wrap_pyfunction!(rc_st_conditional_moments, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_policy, m)?)?;
    m.add_function(wrap_pyfunction!(renewal_oracle_mds_st, m)?)?;
    m.add_function(wrap_pyfunction!(renewal_oracle_rc_st, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ci, m)?)?;
    m.add_function(wrap_pyfunction!(best_n, m)?)?;
    m.add_function(wrap_pyfunction!(best_m, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
