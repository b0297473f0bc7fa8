//! Python bindings for `geoground-core`.
//!
//! Vectors cross the boundary as lists of floats. Every vector argument that
//! stands for an embedding is projected onto the unit sphere first, so callers
//! may pass raw model outputs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

use geoground_core as core;
use geoground_core::data::DetectionRecord;
use geoground_core::eval::Statistic;
use geoground_core::synthetic::{ScenarioConfig, ScenarioKind, VmfParams};
use geoground_core::UnitEmbedding;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn unit(v: &[f64]) -> PyResult<UnitEmbedding> {
    core::normalize(v).map_err(err)
}

fn units(vs: &[Vec<f64>]) -> PyResult<Vec<UnitEmbedding>> {
    vs.iter().map(|v| unit(v)).collect()
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Calibrated unit mean displacement direction.
#[pyclass(module = "geoground", name = "GroundingDirection", frozen)]
struct PyGroundingDirection {
    inner: core::GroundingDirection,
}

#[pymethods]
impl PyGroundingDirection {
    #[getter]
    fn mu_hat(&self) -> Vec<f64> {
        self.inner.mu_hat.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn n_reference(&self) -> usize {
        self.inner.n_reference
    }

    #[getter]
    fn resultant_length(&self) -> f64 {
        self.inner.resultant_length
    }

    #[getter]
    fn source_tag(&self) -> String {
        self.inner.source_tag.clone()
    }

    /// Global Gamma of the pair (q, r) against this direction.
    fn gamma(&self, q: Vec<f64>, r: Vec<f64>) -> PyResult<f64> {
        let s = core::gamma(&unit(&q)?, &unit(&r)?, &self.inner).map_err(err)?;
        Ok(s.value)
    }

    /// Cosine between this direction and `other`.
    fn cosine(&self, other: &PyGroundingDirection) -> PyResult<f64> {
        core::direction::direction_similarity(&self.inner, &other.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = core::GroundingDirection::from_json(text).map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "GroundingDirection(dim={}, n_reference={}, resultant_length={:.6}, source_tag={:?})",
            self.inner.dim, self.inner.n_reference, self.inner.resultant_length, self.inner.source_tag
        )
    }
}

/// Exact-kNN index over grounded reference pairs.
#[pyclass(module = "geoground", name = "ReferenceIndex", frozen)]
struct PyReferenceIndex {
    inner: core::ReferenceIndex,
}

#[pymethods]
impl PyReferenceIndex {
    #[new]
    fn new(ids: Vec<String>, queries: Vec<Vec<f64>>, responses: Vec<Vec<f64>>) -> PyResult<Self> {
        if ids.len() != queries.len() || ids.len() != responses.len() {
            return Err(PyValueError::new_err(format!(
                "ids, queries and responses differ in length: {}, {}, {}",
                ids.len(),
                queries.len(),
                responses.len()
            )));
        }
        let qs = units(&queries)?;
        let rs = units(&responses)?;
        let entries = ids
            .iter()
            .zip(qs.iter().zip(&rs))
            .map(|(id, (q, r))| (id.as_str(), q, r));
        let inner = core::ReferenceIndex::build(entries).map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// The `k` nearest reference queries as `(id, angle)` pairs, nearest first.
    #[pyo3(signature = (q, k, exclude = None))]
    fn nearest(&self, q: Vec<f64>, k: usize, exclude: Option<&str>) -> PyResult<Vec<(String, f64)>> {
        let neighbors = self.inner.nearest(&unit(&q)?, k, exclude).map_err(err)?;
        let ids = self.inner.record_ids();
        Ok(neighbors.iter().map(|nb| (ids[nb.position].clone(), nb.theta)).collect())
    }

    #[pyo3(signature = (q, k = core::DEFAULT_K))]
    fn local_direction(&self, q: Vec<f64>, k: usize) -> PyResult<PyGroundingDirection> {
        let inner = core::direction::local_direction(&unit(&q)?, &self.inner, k).map_err(err)?;
        Ok(PyGroundingDirection { inner })
    }

    /// Local Gamma; `exclude` leaves one reference record out of the neighborhood.
    #[pyo3(signature = (q, r, k = core::DEFAULT_K, exclude = None))]
    fn gamma_local(&self, q: Vec<f64>, r: Vec<f64>, k: usize, exclude: Option<&str>) -> PyResult<f64> {
        let s = self
            .inner
            .gamma_local_excluding(&unit(&q)?, &unit(&r)?, k, exclude)
            .map_err(err)?;
        Ok(s.value)
    }

    #[pyo3(signature = (exclude = None, tag = "index"))]
    fn global_direction(&self, exclude: Option<&str>, tag: &str) -> PyResult<PyGroundingDirection> {
        let inner = self.inner.global_direction(exclude, tag).map_err(err)?;
        Ok(PyGroundingDirection { inner })
    }
}

/// Projects `v` onto the unit sphere.
#[pyfunction]
fn normalize(v: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(unit(&v)?.into_vec())
}

/// Geodesic angle between two embeddings, in radians.
#[pyfunction]
fn angular_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    Ok(core::angular_distance(&unit(&a)?, &unit(&b)?).map_err(err)?.radians())
}

/// theta(r, q) / theta(r, c).
#[pyfunction]
fn sgi(q: Vec<f64>, c: Vec<f64>, r: Vec<f64>) -> PyResult<f64> {
    Ok(core::sgi(&unit(&q)?, &unit(&c)?, &unit(&r)?).map_err(err)?.ratio)
}

/// `(lower, upper)` admitted for SGI given theta(q, c) and theta(r, c).
#[pyfunction]
fn sgi_bounds(theta_qc: f64, theta_rc: f64) -> PyResult<(f64, f64)> {
    let b = core::sgi_bounds(core::AngularDistance::new(theta_qc), core::AngularDistance::new(theta_rc))
        .map_err(err)?;
    Ok((b.lower, b.upper))
}

/// `(lower_slack, upper_slack)` of the spherical triangle inequality.
#[pyfunction]
fn triangle_residuals(q: Vec<f64>, c: Vec<f64>, r: Vec<f64>) -> PyResult<(f64, f64)> {
    core::triangle_residuals(&unit(&q)?, &unit(&c)?, &unit(&r)?).map_err(err)
}

/// Unit displacement from q to r.
#[pyfunction]
fn displacement(q: Vec<f64>, r: Vec<f64>) -> PyResult<Vec<f64>> {
    let d = core::displacement(&unit(&q)?, &unit(&r)?).map_err(err)?;
    Ok(d.direction().to_vec())
}

/// Global direction from paired grounded queries and responses.
#[pyfunction]
#[pyo3(signature = (queries, responses, tag = "calibration"))]
fn calibrate(queries: Vec<Vec<f64>>, responses: Vec<Vec<f64>>, tag: &str) -> PyResult<PyGroundingDirection> {
    if queries.len() != responses.len() {
        return Err(PyValueError::new_err(format!(
            "{} queries but {} responses",
            queries.len(),
            responses.len()
        )));
    }
    let pairs: Vec<_> = units(&queries)?.into_iter().zip(units(&responses)?).collect();
    let cal = core::calibrate_global(&pairs, tag).map_err(err)?;
    Ok(PyGroundingDirection { inner: cal.direction })
}

#[pyfunction]
fn auroc(positives: Vec<f64>, negatives: Vec<f64>) -> PyResult<f64> {
    core::eval::auroc(&positives, &negatives).map_err(err)
}

#[pyfunction]
fn cohens_d(group_a: Vec<f64>, group_b: Vec<f64>) -> PyResult<f64> {
    core::eval::cohens_d(&group_a, &group_b).map_err(err)
}

/// Stratified percentile bootstrap; returns `(low, high, degenerate_resamples)`.
#[pyfunction]
#[pyo3(signature = (positives, negatives, statistic = "auroc", resamples = 1000, confidence = 0.95, seed = 0))]
fn bootstrap_ci(
    positives: Vec<f64>,
    negatives: Vec<f64>,
    statistic: &str,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> PyResult<(f64, f64, usize)> {
    let statistic = match statistic {
        "auroc" => Statistic::Auroc,
        "cohens_d" => Statistic::CohensD,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown statistic {other:?}; expected \"auroc\" or \"cohens_d\""
            )))
        }
    };
    let ci = core::eval::bootstrap_ci_scores(&positives, &negatives, statistic, resamples, confidence, seed)
        .map_err(err)?;
    Ok((ci.low, ci.high, ci.degenerate))
}

/// `n` von Mises-Fisher samples around `mean`.
#[pyfunction]
#[pyo3(signature = (mean, kappa, n, seed = 0))]
fn sample_vmf(mean: Vec<f64>, kappa: f64, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let params = VmfParams {
        mean_direction: unit(&mean)?,
        kappa,
        n,
        seed,
    };
    let samples = core::synthetic::sample_vmf(&params).map_err(err)?;
    Ok(samples.into_iter().map(UnitEmbedding::into_vec).collect())
}

/// Synthetic labelled records plus the planted truth, both as plain dicts.
#[pyfunction]
#[pyo3(signature = (
    scenario, dim, n_grounded, n_halluc, kappa = 50.0,
    separation = std::f64::consts::FRAC_PI_3, n_domains = None, seed = 0,
))]
#[allow(clippy::too_many_arguments)]
fn generate_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    dim: usize,
    n_grounded: usize,
    n_halluc: usize,
    kappa: f64,
    separation: f64,
    n_domains: Option<usize>,
    seed: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let kind = match scenario {
        "type1" => ScenarioKind::Type1,
        "type2" => ScenarioKind::Type2,
        "type3" => ScenarioKind::Type3,
        "multidomain" => ScenarioKind::Multidomain,
        other => return Err(PyValueError::new_err(format!("unknown scenario {other:?}"))),
    };
    let mut cfg = ScenarioConfig::new(kind, dim, n_grounded, n_halluc);
    cfg.kappa_cluster = kappa;
    cfg.separation = separation;
    if n_domains.is_some() {
        cfg.n_domains = n_domains;
    }
    cfg.seed = seed;
    let g = py.detach(|| core::synthetic::generate_scenario(&cfg)).map_err(err)?;
    let records = serde_json::to_string(&g.records).expect("records serialize");
    let truth = serde_json::to_string(&g.truth).expect("truth serializes");
    Ok((json_to_py(py, &records)?, json_to_py(py, &truth)?))
}

/// Reads a JSONL or JSON-array dataset into a list of dicts.
#[pyfunction]
fn load_records<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    let records: Vec<DetectionRecord> =
        core::data::load_dataset(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &serde_json::to_string(&records).expect("records serialize"))
}

#[pymodule]
fn geoground(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroundingDirection>()?;
    m.add_class::<PyReferenceIndex>()?;
    m.add("DEFAULT_K", core::DEFAULT_K)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(angular_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sgi, m)?)?;
    m.add_function(wrap_pyfunction!(sgi_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(displacement, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(cohens_d, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_ci, m)?)?;
    m.add_function(wrap_pyfunction!(sample_vmf, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(load_records, m)?)?;
    Ok(())
}
