//! Python bindings. Structured results come back as plain dicts and lists,
//! built from the same JSON the command line prints.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use thicklam::flatsurf::expansion::{build_slit_family, unit_grid, ExpansionParams};
use thicklam::flatsurf::{find_vertical_saddle, sheared_square_family, verify_expansion, SlitConfig};
use thicklam::hypgraph::{
    hyperbolicity_estimate, seeded_slopes, seeded_words, Backend as CoreBackend, FareyGraph, TreeGraph,
};
use thicklam::manifest::Certificate;
use thicklam::markov::graph::sample_classes;
use thicklam::markov::{
    build_graphs, matching_report, sample_limit, subshift_encode, MarkovConfig, MarkovFixture, MarkovGraphs,
};
use thicklam::modular::Slope;
use thicklam::numeric::parse_q;
use thicklam::traintrack::torus::{euclid_digits, split_sequence as core_split};
use thicklam::Error;

create_exception!(thicklam_py, ThicklamError, PyException);
create_exception!(thicklam_py, IntegrityError, ThicklamError);

fn err(e: Error) -> PyErr {
    match e {
        Error::Integrity(_) => IntegrityError::new_err(e.to_string()),
        _ => ThicklamError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A hyperbolic graph backend: `"farey"`, `"tree"`, or any backend document
/// via `Backend.from_json`.
#[pyclass(module = "thicklam_py")]
struct Backend(CoreBackend);

#[pymethods]
impl Backend {
    #[new]
    #[pyo3(signature = (kind = "farey", basepoint = None))]
    fn new(kind: &str, basepoint: Option<&str>) -> PyResult<Self> {
        let b = match kind {
            "farey" => CoreBackend::Farey(FareyGraph { basepoint: basepoint.unwrap_or("1/0").parse().map_err(err)? }),
            "tree" => CoreBackend::Tree(TreeGraph { basepoint: basepoint.unwrap_or("").parse().map_err(err)? }),
            k => return Err(ThicklamError::new_err(format!("unknown backend kind {k}"))),
        };
        Ok(Backend(b))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreBackend::from_json(text).map(Backend).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0.to_doc()).map_err(|e| err(e.into()))
    }

    /// Distance as `(lower, upper)`; the bounds agree on exact backends.
    fn distance(&self, a: &str, b: &str) -> PyResult<(u64, Option<u64>)> {
        let d = self.0.distance(a, b).map_err(err)?;
        Ok((d.lo, d.hi))
    }

    fn geodesic(&self, a: &str, b: &str) -> PyResult<Vec<String>> {
        self.0.geodesic(a, b).map_err(err)
    }

    /// Gromov product at the basepoint.
    fn product(&self, a: &str, b: &str) -> PyResult<f64> {
        self.0.product(a, b).map(|h| h.to_f64()).map_err(err)
    }

    /// Four-point constant over a seeded sample of vertices.
    #[pyo3(signature = (sample = 40, seed = 7))]
    fn hyperbolicity<'py>(&self, py: Python<'py>, sample: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let est = match &self.0 {
            CoreBackend::Farey(g) => hyperbolicity_estimate(g, &seeded_slopes(sample, 12, seed)),
            CoreBackend::Tree(g) => hyperbolicity_estimate(g, &seeded_words(sample, 8, seed)),
            CoreBackend::Interval { .. } => return Err(err(Error::Indeterminate)),
        };
        to_py(py, &est)
    }

    fn __repr__(&self) -> String {
        let doc = self.0.to_doc();
        format!("Backend(kind={:?}, basepoint={:?})", doc.kind, doc.basepoint)
    }
}

/// Full splits of the torus track toward a slope, with the Euclidean
/// quotients for comparison.
#[pyfunction]
fn split_sequence<'py>(py: Python<'py>, slope: &str) -> PyResult<Bound<'py, PyAny>> {
    let s: Slope = slope.parse().map_err(err)?;
    let seq = core_split(&s, 100_000);
    let euclid: Vec<String> = euclid_digits(s.p(), s.q()).iter().map(|d| d.to_string()).collect();
    to_py(py, &serde_json::json!({ "word": seq.word(), "model": seq.model, "digits": seq.digits(), "euclid": euclid }))
}

/// A generated Markov fixture together with its graphs.
#[pyclass(module = "thicklam_py")]
struct MarkovSession {
    fx: MarkovFixture,
    gr: MarkovGraphs,
}

#[pymethods]
impl MarkovSession {
    #[new]
    #[pyo3(signature = (points = 20, seed = 7))]
    fn new(points: usize, seed: u64) -> PyResult<Self> {
        let config = MarkovConfig { connection_points: points, seed, ..MarkovConfig::default() };
        let fx = MarkovFixture::generate(&config).map_err(err)?;
        let gr = build_graphs(&fx).map_err(err)?;
        Ok(MarkovSession { fx, gr })
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.gr.stats())
    }

    #[pyo3(signature = (count = 100, seed = 7))]
    fn matching<'py>(&self, py: Python<'py>, count: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &matching_report(&self.fx, &self.gr, &sample_classes(count, 12, seed)))
    }

    /// A seeded random walk read as a certified boundary point.
    #[pyo3(signature = (length = 40, start = 0, b = "10", seed = 7))]
    fn sample<'py>(&self, py: Python<'py>, length: usize, start: usize, b: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let cfg = self.fx.certificate_config(parse_q(b).map_err(err)?);
        to_py(py, &sample_limit(&self.gr, start, length, seed, &cfg).map_err(err)?)
    }

    fn encode<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &subshift_encode(&self.fx, &self.gr).map_err(err)?)
    }
}

/// Runs the expansion harness on the slit family.
#[pyfunction]
#[pyo3(signature = (samples = 33, t_max = "8", sheets = 2))]
fn verify_slit_expansion<'py>(py: Python<'py>, samples: usize, t_max: &str, sheets: usize) -> PyResult<Bound<'py, PyAny>> {
    let config = SlitConfig { s_samples: samples, t_max: parse_q(t_max).map_err(err)?, sheets, ..SlitConfig::default() };
    let path = build_slit_family(&config).map_err(err)?;
    to_py(py, &verify_expansion(&path, &ExpansionParams::default()).map_err(err)?)
}

/// Locates a vertical saddle connection in the sheared square family.
#[pyfunction]
#[pyo3(signature = (plant = "1/2", rate = "1/2", samples = 33, l = "2"))]
fn find_vertical<'py>(py: Python<'py>, plant: &str, rate: &str, samples: usize, l: &str) -> PyResult<Bound<'py, PyAny>> {
    let family = sheared_square_family(&parse_q(plant).map_err(err)?, &parse_q(rate).map_err(err)?);
    let found = find_vertical_saddle(&family, &unit_grid(samples), &parse_q(l).map_err(err)?).map_err(err)?;
    to_py(py, &found)
}

/// Checks a certificate file's hashes and re-verifies its payload.
#[pyfunction]
fn replay<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let c = Certificate::from_json(text).map_err(err)?;
    to_py(py, &c.replay().map_err(err)?)
}

#[pymodule]
fn thicklam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ThicklamError", m.py().get_type::<ThicklamError>())?;
    m.add("IntegrityError", m.py().get_type::<IntegrityError>())?;
    m.add_class::<Backend>()?;
    m.add_class::<MarkovSession>()?;
    m.add_function(wrap_pyfunction!(split_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(verify_slit_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(find_vertical, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
