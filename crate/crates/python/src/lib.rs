//! Python module `persona_forge`: datasets, the subspace search, merging
//! and the comparison analyses.
//!
//! Structured results (plans, perceptual maps, radar data) come back as
//! plain dicts and lists.

use forge_core::correspondence::{self as corr};
use forge_core::dataset::{bin_to_categories, read_dimension_catalog, BinCount, BinPolicy};
use forge_core::doc::{self, DocOptions, DocParams, DEFAULT_TRIAL_CAP};
use forge_core::persona::{self, Linkage, RadarSource, SimilarityMatrix};
use forge_core::{ForgeError, SubspaceCluster, VasDataSet};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

fn err(e: ForgeError) -> PyErr {
    match e {
        ForgeError::UnknownId { .. } => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    pythonize(py, v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Subjects x dimensions of VAS ratings in [0, 1]; `None` marks a gap.
#[pyclass(name = "Dataset", module = "persona_forge")]
pub struct PyDataset {
    inner: VasDataSet,
}

#[pymethods]
impl PyDataset {
    /// Parses CSV text: a subject column then one column per dimension.
    /// `dims` is an optional label catalog (id,label,left,right).
    #[staticmethod]
    #[pyo3(signature = (text, dims=None))]
    fn from_csv(text: &str, dims: Option<&str>) -> PyResult<Self> {
        let mut inner = forge_core::ingest_csv(text.as_bytes()).map_err(err)?;
        if let Some(d) = dims {
            inner = inner.with_dimension_metadata(&read_dimension_catalog(d.as_bytes()).map_err(err)?);
        }
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDataset { inner: VasDataSet::from_json(text).map_err(err)? })
    }

    /// Synthetic interview-like ratings.
    #[staticmethod]
    #[pyo3(signature = (seed, subjects=20, dims=47))]
    fn synthetic(seed: u64, subjects: usize, dims: usize) -> PyResult<Self> {
        Ok(PyDataset { inner: forge_core::synth::interview_like(seed, subjects, dims).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv_string().map_err(err)
    }

    #[getter]
    fn subjects(&self) -> Vec<String> {
        self.inner.subjects().iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn dimensions(&self) -> Vec<String> {
        self.inner.dimensions().iter().map(|d| d.id.clone()).collect()
    }

    #[getter]
    fn missing(&self) -> usize {
        self.inner.missing_count()
    }

    fn value(&self, subject: &str, dim: &str) -> PyResult<Option<f64>> {
        let i = self.inner.require_subject(subject).map_err(err)?;
        let k = self
            .inner
            .dimension_index(dim)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown dimension {dim:?}")))?;
        Ok(self.inner.value(i, k))
    }

    /// Nearest-neighbour estimate of w: `{"raw": ..., "suggested": ...}`.
    fn estimate_w<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &doc::estimate_w(&self.inner).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.n_subjects()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} subjects, {} dimensions, {} missing)",
            self.inner.n_subjects(),
            self.inner.n_dims(),
            self.inner.missing_count()
        )
    }
}

#[pyclass(name = "Cluster", module = "persona_forge")]
pub struct PyCluster {
    inner: SubspaceCluster,
}

#[pymethods]
impl PyCluster {
    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn members(&self) -> Vec<String> {
        self.inner.members.clone()
    }

    #[getter]
    fn subspace(&self) -> Vec<String> {
        self.inner.subspace.clone()
    }

    #[getter]
    fn quality(&self) -> f64 {
        self.inner.quality
    }

    fn means(&self) -> Vec<(String, f64)> {
        self.inner.means.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    fn mean(&self, dim: &str) -> Option<f64> {
        self.inner.mean(dim)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCluster { inner: from_json(text)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Cluster({}, {} members, {} dims)",
            self.inner.id,
            self.inner.size(),
            self.inner.dimensionality()
        )
    }
}

#[pyclass(name = "ProtoPersona", module = "persona_forge")]
pub struct PyProto {
    inner: persona::ProtoPersona,
}

#[pymethods]
impl PyProto {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[setter]
    fn set_name(&mut self, name: String) {
        self.inner.name = name;
    }

    #[getter]
    fn sources(&self) -> Vec<String> {
        self.inner.sources.clone()
    }

    #[getter]
    fn members(&self) -> Vec<String> {
        self.inner.members.clone()
    }

    #[getter]
    fn description(&self) -> String {
        self.inner.description.clone()
    }

    /// Merged dimensions as dicts: dim, mean, std_dev, support, conflicting.
    fn dims<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.dims)
    }

    fn conflicting(&self) -> Vec<String> {
        self.inner.conflicting().into_iter().map(String::from).collect()
    }

    fn veto(&mut self, dims: Vec<String>) -> PyResult<()> {
        self.inner.veto(&dims).map_err(err)
    }

    /// Fills in and returns the templated description.
    fn describe(&mut self, data: &PyDataset) -> PyResult<String> {
        self.inner.description = persona::describe(&self.inner, data.inner.dimensions()).map_err(err)?;
        Ok(self.inner.description.clone())
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("ProtoPersona({}, {} dims)", self.inner.name, self.inner.dims.len())
    }
}

#[pyclass(name = "Dendrogram", module = "persona_forge")]
pub struct PyDendrogram {
    inner: persona::Dendrogram,
}

#[pymethods]
impl PyDendrogram {
    #[getter]
    fn leaves(&self) -> Vec<String> {
        self.inner.leaves.clone()
    }

    /// Merges as (left node, right node, height, size).
    fn merges(&self) -> Vec<(usize, usize, f64, usize)> {
        self.inner.merges.iter().map(|m| (m.left, m.right, m.height, m.size)).collect()
    }

    /// Leaf-id sets after joining every merge at or below `height`.
    fn cut(&self, height: f64) -> PyResult<Vec<Vec<String>>> {
        persona::cut_dendrogram(&self.inner, height).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }
}

fn unwrap_clusters(clusters: &[PyRef<'_, PyCluster>]) -> Vec<SubspaceCluster> {
    clusters.iter().map(|c| c.inner.clone()).collect()
}

/// Derived search sizes for a data shape: r, m (inner trials), outer
/// iterations, min cluster size and warnings. Raises on r < 1 or m over cap.
#[pyfunction]
#[pyo3(signature = (num_dims, num_subjects, alpha, beta, trial_cap=DEFAULT_TRIAL_CAP))]
fn plan<'py>(
    py: Python<'py>,
    num_dims: usize,
    num_subjects: usize,
    alpha: f64,
    beta: f64,
    trial_cap: u64,
) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct View {
        r: usize,
        m: u64,
        outer: u64,
        min_size: usize,
        warnings: Vec<String>,
    }
    let p = DocParams::new(1.0, alpha, beta, 0)
        .plan(num_dims, num_subjects, trial_cap)
        .map_err(err)?;
    to_py(py, &View { r: p.r, m: p.inner, outer: p.outer, min_size: p.min_size, warnings: p.warnings })
}

#[pyfunction]
fn discrimination_set_size(num_dims: usize, beta: f64) -> usize {
    doc::discrimination_set_size(num_dims, beta)
}

/// Full-coverage search: one cluster around every subject, duplicates removed.
/// With `target`, only that subject's best cluster.
#[pyfunction]
#[pyo3(signature = (data, w, alpha, beta, seed, target=None, parallel=true, trial_cap=DEFAULT_TRIAL_CAP))]
#[allow(clippy::too_many_arguments)]
fn cluster(
    py: Python<'_>,
    data: &PyDataset,
    w: f64,
    alpha: f64,
    beta: f64,
    seed: u64,
    target: Option<String>,
    parallel: bool,
    trial_cap: u64,
) -> PyResult<Vec<PyCluster>> {
    let options = DocOptions { trial_cap, parallel };
    let params = DocParams::new(w, alpha, beta, seed);
    let data = &data.inner;
    let found = py
        .detach(|| match target {
            Some(t) => forge_core::doc_for_target(data, &params.with_target(t), &options).map(|c| vec![c]),
            None => forge_core::doc_full_coverage(data, &params, &options).map(|r| r.clusters),
        })
        .map_err(err)?;
    Ok(found.into_iter().map(|inner| PyCluster { inner }).collect())
}

#[pyfunction]
fn similarity(a: PyRef<'_, PyCluster>, b: PyRef<'_, PyCluster>) -> f64 {
    persona::similarity(&a.inner, &b.inner)
}

/// `(ids, matrix)` of pairwise similarities.
#[pyfunction]
fn similarity_matrix(clusters: Vec<PyRef<'_, PyCluster>>) -> (Vec<String>, Vec<Vec<f64>>) {
    let m = SimilarityMatrix::compute(&unwrap_clusters(&clusters));
    (m.ids, m.entries)
}

#[pyfunction]
#[pyo3(signature = (clusters, linkage="average"))]
fn dendrogram(clusters: Vec<PyRef<'_, PyCluster>>, linkage: &str) -> PyResult<PyDendrogram> {
    let linkage: Linkage = linkage.parse().map_err(err)?;
    let m = SimilarityMatrix::compute(&unwrap_clusters(&clusters));
    Ok(PyDendrogram { inner: persona::build_dendrogram(&m, linkage).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (clusters, conflict_sd=persona::DEFAULT_CONFLICT_SD))]
fn merge(clusters: Vec<PyRef<'_, PyCluster>>, conflict_sd: f64) -> PyResult<PyProto> {
    Ok(PyProto { inner: persona::merge_clusters(&unwrap_clusters(&clusters), conflict_sd).map_err(err)? })
}

/// Markdown report over the given proto-personas.
#[pyfunction]
fn report(protos: Vec<PyRef<'_, PyProto>>, data: &PyDataset) -> PyResult<String> {
    let protos: Vec<persona::ProtoPersona> = protos.iter().map(|p| p.inner.clone()).collect();
    persona::markdown_report(&protos, data.inner.dimensions()).map_err(err)
}

/// Radar data for clusters and/or proto-personas.
#[pyfunction]
#[pyo3(signature = (series, data=None))]
fn radar<'py>(py: Python<'py>, series: Vec<Bound<'py, PyAny>>, data: Option<&PyDataset>) -> PyResult<Bound<'py, PyAny>> {
    let mut clusters = Vec::new();
    let mut protos = Vec::new();
    let mut order = Vec::new();
    for s in &series {
        if let Ok(c) = s.cast::<PyCluster>() {
            order.push((true, clusters.len()));
            clusters.push(c.borrow().inner.clone());
        } else {
            let p = s.cast::<PyProto>()?;
            order.push((false, protos.len()));
            protos.push(p.borrow().inner.clone());
        }
    }
    let sources: Vec<&dyn RadarSource> = order
        .iter()
        .map(|&(is_cluster, i)| if is_cluster { &clusters[i] as &dyn RadarSource } else { &protos[i] as &dyn RadarSource })
        .collect();
    to_py(py, &persona::radar_data(&sources, data.map(|d| d.inner.dimensions())))
}

/// `(subjects, counts)`: how often each pair of subjects shares a cluster.
#[pyfunction]
#[pyo3(signature = (clusters, exclude=Vec::new()))]
fn cooccurrence(clusters: Vec<PyRef<'_, PyCluster>>, exclude: Vec<String>) -> PyResult<(Vec<String>, Vec<Vec<u64>>)> {
    let t = corr::cooccurrence(&unwrap_clusters(&clusters), &exclude, None).map_err(err)?;
    Ok((t.subjects, t.counts))
}

/// Correspondence analysis of a labelled table, as a dict.
#[pyfunction]
fn correspondence_analysis<'py>(
    py: Python<'py>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    table: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &corr::correspondence_analysis(&row_ids, &col_ids, &table).map_err(err)?)
}

/// MCA of the binned data (`bins` is "2", "3" or "auto") with eta-squared
/// per variable on the first `axes` axes.
#[pyfunction]
#[pyo3(signature = (data, bins="auto", axes=2))]
fn mca<'py>(py: Python<'py>, data: &PyDataset, bins: &str, axes: usize) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct View {
        mca: corr::McaResult,
        eta_squared: corr::EtaSquared,
    }
    let count: BinCount = bins.parse().map_err(err)?;
    let table = bin_to_categories(&data.inner, &BinPolicy::uniform(count)).map_err(err)?;
    let result = corr::mca(&table).map_err(err)?;
    let eta = corr::variable_axis_correlation(&table, &result.map, axes).map_err(err)?;
    to_py(py, &View { mca: result, eta_squared: eta })
}

#[pymodule]
fn persona_forge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCluster>()?;
    m.add_class::<PyProto>()?;
    m.add_class::<PyDendrogram>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(discrimination_set_size, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dendrogram, m)?)?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(radar, m)?)?;
    m.add_function(wrap_pyfunction!(cooccurrence, m)?)?;
    m.add_function(wrap_pyfunction!(correspondence_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(mca, m)?)?;
    Ok(())
}
