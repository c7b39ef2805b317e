//! Python bindings: the likelihood tree, both classifier backends, the
//! synthetic session generator and the dual-backend harness.
//!
//! Samples cross the boundary as `(x, y, z)` triples of raw 12-bit
//! integers; labels as lowercase class-name strings.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use pact_core::features::{extract_features, LagHistory};
use pact_core::ingest::{decode_sample, RawSample, SampleWindow};
use pact_core::pipeline::{
    run_dual, Classifier as CoreClassifier, ClassifierConfig, FixedClassifier,
};
use pact_core::synth::{gen_session, ActivityProfile, SessionScript};
use pact_core::tree::{
    deserialize_tree, serialize_tree, train_tree, training_accuracy, ActivityClass,
    LikelihoodTree, TrainingSet, CLASS_COUNT,
};
use pact_core::features::FeatureVector as CoreFeatures;

/// Raw 12-bit sample triple as it crosses the Python boundary.
type RawTriple = (i16, i16, i16);
/// One feature row: (power, rhythmicity, freq_stability, dominant_lag).
type FeatureRow = (f64, f64, f64, Option<u8>);

fn parse_class(label: &str) -> PyResult<ActivityClass> {
    label.parse().map_err(PyValueError::new_err)
}

fn raw_from_triple((x, y, z): RawTriple) -> RawSample {
    RawSample::new(x, y, z)
}

fn config_from(alpha: f64, theta: f64) -> PyResult<ClassifierConfig> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(PyValueError::new_err(format!("alpha {alpha} outside [0, 1)")));
    }
    if theta <= 0.0 || theta >= 1.0 {
        return Err(PyValueError::new_err(format!("theta {theta} outside (0, 1)")));
    }
    Ok(ClassifierConfig::uniform(alpha, theta))
}

/// A trained likelihood tree.
#[pyclass(name = "Tree")]
struct PyTree {
    inner: Arc<LikelihoodTree>,
}

#[pymethods]
impl PyTree {
    /// Train from explicit feature vectors and labels.
    #[staticmethod]
    #[pyo3(signature = (features, labels, max_depth=7, min_leaf=8))]
    fn train(
        features: Vec<(f64, f64, f64)>,
        labels: Vec<String>,
        max_depth: usize,
        min_leaf: usize,
    ) -> PyResult<Self> {
        if features.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut set = TrainingSet::new();
        for ((power, rhythmicity, stability), label) in features.iter().zip(&labels) {
            set.push(CoreFeatures::new(*power, *rhythmicity, *stability), parse_class(label)?);
        }
        let tree = train_tree(&set, max_depth, min_leaf)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: Arc::new(tree) })
    }

    /// Train directly from a raw sample stream with per-sample labels,
    /// running the streaming feature extractor first. The first
    /// `skip_ramp` samples are excluded from the set; returns the tree
    /// and its training accuracy.
    #[staticmethod]
    #[pyo3(signature = (samples, labels, max_depth=7, min_leaf=8, skip_ramp=64))]
    fn train_on_stream(
        samples: Vec<RawTriple>,
        labels: Vec<String>,
        max_depth: usize,
        min_leaf: usize,
        skip_ramp: usize,
    ) -> PyResult<(Self, f64)> {
        if samples.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        let mut window = SampleWindow::new();
        let mut history = LagHistory::new();
        let mut set = TrainingSet::new();
        for (i, (triple, label)) in samples.iter().zip(&labels).enumerate() {
            let sample = decode_sample(raw_from_triple(*triple), i as u64)
                .map_err(|e| PyValueError::new_err(e.to_string()))?;
            window.push(&sample);
            let f = extract_features(&window, &mut history);
            if i >= skip_ramp {
                set.push(f, parse_class(label)?);
            }
        }
        let tree = train_tree(&set, max_depth, min_leaf)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let accuracy = training_accuracy(&tree, &set);
        Ok((Self { inner: Arc::new(tree) }, accuracy))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::from_bytes(&bytes)
    }

    #[staticmethod]
    fn from_bytes(bytes: &[u8]) -> PyResult<Self> {
        let tree = deserialize_tree(bytes).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: Arc::new(tree) })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, serialize_tree(&self.inner))
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &serialize_tree(&self.inner))
    }

    /// Leaf likelihoods for a feature triple, ordered rest/walk/run/bike/other.
    fn eval(&self, power: f64, rhythmicity: f64, freq_stability: f64) -> PyResult<[f64; CLASS_COUNT]> {
        self.inner
            .eval(&CoreFeatures::new(power, rhythmicity, freq_stability))
            .map(|v| v.0)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!("Tree(nodes={}, depth={})", self.inner.node_count(), self.inner.depth())
    }
}

enum Backend {
    Float(Box<CoreClassifier>),
    Fixed(Box<FixedClassifier>),
}

/// A streaming classifier over one sample stream.
#[pyclass(name = "Classifier")]
struct PyClassifier {
    inner: Backend,
}

#[pymethods]
impl PyClassifier {
    #[new]
    #[pyo3(signature = (tree, backend="float", alpha=0.98, theta=0.5))]
    fn new(tree: &PyTree, backend: &str, alpha: f64, theta: f64) -> PyResult<Self> {
        let config = config_from(alpha, theta)?;
        let inner = match backend {
            "float" => Backend::Float(Box::new(CoreClassifier::new(Arc::clone(&tree.inner), config))),
            "fixed" => Backend::Fixed(Box::new(FixedClassifier::new(Arc::clone(&tree.inner), config))),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown backend `{other}` (expected float or fixed)"
                )))
            }
        };
        Ok(Self { inner })
    }

    /// Feed one raw sample; returns `(label, confidence)`.
    fn step(&mut self, x: i16, y: i16, z: i16) -> PyResult<(String, f64)> {
        let raw = RawSample::new(x, y, z);
        let decision = match &mut self.inner {
            Backend::Float(c) => c.step(raw).map(|o| o.decision),
            Backend::Fixed(c) => c.step(raw).map(|o| o.decision),
        }
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((decision.label.name().to_string(), decision.confidence))
    }

    /// Feed a whole stream; returns one `(label, confidence)` per sample.
    fn run(&mut self, samples: Vec<RawTriple>) -> PyResult<Vec<(String, f64)>> {
        samples.into_iter().map(|(x, y, z)| self.step(x, y, z)).collect()
    }

    /// Current per-class a-posteriori probabilities.
    #[getter]
    fn probs(&self) -> [f64; CLASS_COUNT] {
        match &self.inner {
            Backend::Float(c) => *c.probs(),
            Backend::Fixed(c) => c.probs_q().map(|q| f64::from(q) / 32768.0),
        }
    }

    fn reset(&mut self) {
        match &mut self.inner {
            Backend::Float(c) => c.reset(),
            Backend::Fixed(c) => c.reset(),
        }
    }
}

/// Render a scripted session: `segments` is a list of
/// `(activity, seconds)` pairs. Returns `(samples, labels)`.
#[pyfunction]
fn generate_session(
    segments: Vec<(String, f64)>,
    seed: u64,
) -> PyResult<(Vec<RawTriple>, Vec<String>)> {
    let mut script = SessionScript::new(seed);
    for (label, seconds) in segments {
        if seconds <= 0.0 {
            return Err(PyValueError::new_err(format!("non-positive duration {seconds}")));
        }
        script.push(ActivityProfile::default_for(parse_class(&label)?), seconds);
    }
    let stream = gen_session(&script);
    let samples = stream.samples.iter().map(|r| (r.x_raw, r.y_raw, r.z_raw)).collect();
    let labels = stream.labels.iter().map(|l| l.name().to_string()).collect();
    Ok((samples, labels))
}

/// Streaming features for a raw stream: one
/// `(power, rhythmicity, freq_stability, dominant_lag)` row per sample.
#[pyfunction]
fn stream_features(samples: Vec<RawTriple>) -> PyResult<Vec<FeatureRow>> {
    let mut window = SampleWindow::new();
    let mut history = LagHistory::new();
    let mut rows = Vec::with_capacity(samples.len());
    for (i, triple) in samples.iter().enumerate() {
        let sample = decode_sample(raw_from_triple(*triple), i as u64)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        window.push(&sample);
        let f = extract_features(&window, &mut history);
        rows.push((f.power, f.rhythmicity, f.freq_stability, f.dominant_lag));
    }
    Ok(rows)
}

/// Run both backends over one stream; returns a dict with `agreement`,
/// `max_prob_div` and `first_divergence`.
#[pyfunction]
#[pyo3(signature = (tree, samples, alpha=0.98, theta=0.5))]
fn dual_report(
    py: Python<'_>,
    tree: &PyTree,
    samples: Vec<RawTriple>,
    alpha: f64,
    theta: f64,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let config = config_from(alpha, theta)?;
    let raw: Vec<RawSample> = samples.into_iter().map(raw_from_triple).collect();
    let report =
        run_dual(&tree.inner, &config, &raw).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("agreement", report.agreement)?;
    dict.set_item("max_prob_div", report.max_prob_div)?;
    dict.set_item("first_divergence", report.first_divergence)?;
    Ok(dict.unbind())
}

#[pymodule]
fn pact_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(generate_session, m)?)?;
    m.add_function(wrap_pyfunction!(stream_features, m)?)?;
    m.add_function(wrap_pyfunction!(dual_report, m)?)?;
    m.add("CLASS_NAMES", ActivityClass::ALL.map(|c| c.name()))?;
    m.add("SAMPLE_RATE_HZ", pact_core::ingest::SAMPLE_RATE_HZ)?;
    Ok(())
}
