//! The composed per-sample pipeline for both numeric backends, the dual
//! equivalence harness, and the canonical state snapshot.
//!
//! One classifier owns one stream's state; every accepted sample yields
//! exactly one decision, and feeding a stream sample-by-sample is
//! bit-identical to processing it in one call.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::features::{extract_features, FeatureVector, LagHistory, HISTORY_LEN};
use crate::fixedpoint::{autocorr_q, freq_stability_q, power_q, FixedSmoother, FixedWindow, Q1_15};
use crate::ingest::{decode_sample, AccelSample, DecodeError, RawSample, SampleWindow, WINDOW_LEN};
use crate::smoother::{Decision, SmootherState, DEFAULT_ALPHA, DEFAULT_THRESHOLD};
use crate::tree::{LikelihoodTree, TreeError, CLASS_COUNT};

/// Numeric backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Float,
    Fixed,
    Dual,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "float" => Ok(Backend::Float),
            "fixed" => Ok(Backend::Fixed),
            "dual" => Ok(Backend::Dual),
            other => Err(format!("unknown backend `{other}` (expected float, fixed or dual)")),
        }
    }
}

/// Filter coefficients and threshold, quantized to Q1.15 at construction
/// so both backends run from identical constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierConfig {
    alpha_q: [i16; CLASS_COUNT],
    theta_q: i16,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self::new([DEFAULT_ALPHA; CLASS_COUNT], DEFAULT_THRESHOLD)
    }
}

impl ClassifierConfig {
    /// Panics when any alpha leaves [0, 1) or theta leaves (0, 1).
    pub fn new(alpha: [f64; CLASS_COUNT], theta: f64) -> Self {
        for a in alpha {
            assert!((0.0..1.0).contains(&a), "alpha {a} outside [0, 1)");
        }
        assert!(theta > 0.0 && theta < 1.0, "theta {theta} outside (0, 1)");
        Self {
            alpha_q: alpha.map(|a| Q1_15::from_f64(a).0),
            theta_q: Q1_15::from_f64(theta).0,
        }
    }

    /// Uniform alpha across classes.
    pub fn uniform(alpha: f64, theta: f64) -> Self {
        Self::new([alpha; CLASS_COUNT], theta)
    }

    pub fn alpha_q(&self) -> &[i16; CLASS_COUNT] {
        &self.alpha_q
    }

    pub fn theta_q(&self) -> i16 {
        self.theta_q
    }

    pub fn alpha(&self) -> [f64; CLASS_COUNT] {
        self.alpha_q.map(|q| Q1_15(q).to_f64())
    }

    pub fn theta(&self) -> f64 {
        Q1_15(self.theta_q).to_f64()
    }
}

/// Step failures: a corrupt raw word or a malformed tree.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Everything one step produced, for decision CSVs and feature dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub sample_index: u64,
    pub features: FeatureVector,
    pub probs: [f64; CLASS_COUNT],
    pub decision: Decision,
}

/// Floating-point reference pipeline.
#[derive(Debug, Clone)]
pub struct Classifier {
    tree: Arc<LikelihoodTree>,
    config: ClassifierConfig,
    window: SampleWindow,
    history: LagHistory,
    smoother: SmootherState,
    next_index: u64,
}

impl Classifier {
    pub fn new(tree: Arc<LikelihoodTree>, config: ClassifierConfig) -> Self {
        let smoother = SmootherState::new(config.alpha(), config.theta());
        Self {
            tree,
            config,
            window: SampleWindow::new(),
            history: LagHistory::new(),
            smoother,
            next_index: 0,
        }
    }

    pub fn tree(&self) -> &Arc<LikelihoodTree> {
        &self.tree
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn probs(&self) -> &[f64; CLASS_COUNT] {
        self.smoother.probs()
    }

    /// Drop all stream state, keeping the tree and configuration.
    pub fn reset(&mut self) {
        self.window = SampleWindow::new();
        self.history = LagHistory::new();
        self.smoother = SmootherState::new(self.config.alpha(), self.config.theta());
        self.next_index = 0;
    }

    /// Decode, window, featurize, evaluate, smooth, decide.
    pub fn step(&mut self, raw: RawSample) -> Result<StepOutput, PipelineError> {
        let sample = decode_sample(raw, self.next_index)?;
        self.step_decoded(&sample)
    }

    /// As [`step`](Self::step) for already-decoded samples (CSV input).
    /// The caller's sample_index is ignored in favor of the stream count.
    pub fn step_decoded(&mut self, sample: &AccelSample) -> Result<StepOutput, PipelineError> {
        let sample_index = self.next_index;
        self.next_index += 1;
        self.window.push(sample);
        let features = extract_features(&self.window, &mut self.history);
        let likelihoods = self.tree.eval(&features)?;
        self.smoother.ar_update(&likelihoods);
        Ok(StepOutput {
            sample_index,
            features,
            probs: *self.smoother.probs(),
            decision: self.smoother.decide(),
        })
    }

    /// Process a whole stream; identical to stepping sample-by-sample.
    pub fn run(&mut self, samples: &[RawSample]) -> Result<Vec<StepOutput>, PipelineError> {
        samples.iter().map(|raw| self.step(*raw)).collect()
    }

    /// Canonical state snapshot (the `PACS` layout documented on the
    /// module's `snapshot_state` helper).
    pub fn serialize_state(&self) -> Vec<u8> {
        let mut magnitudes = [0.0; WINDOW_LEN];
        let fill = self.window.copy_ordered(&mut magnitudes);
        let mut mags_q = [0i32; WINDOW_LEN];
        for i in 0..fill {
            // Window magnitudes live on the Q16.16 grid, so this is exact.
            mags_q[i] = (magnitudes[i] * 65536.0).round() as i32;
        }
        snapshot_state(
            0,
            self.next_index,
            fill,
            &mags_q,
            (self.window.sum() * 65536.0).round() as i64,
            (self.window.sum_sq() * 65536.0 * 65536.0).round() as i64,
            &self.history,
            self.smoother.probs().map(|p| Q1_15::from_f64(p).0),
            self.config.alpha_q,
            self.config.theta_q,
        )
    }
}

/// Integer-only pipeline sharing the tree constants with [`Classifier`].
#[derive(Debug, Clone)]
pub struct FixedClassifier {
    tree: Arc<LikelihoodTree>,
    config: ClassifierConfig,
    window: FixedWindow,
    history: LagHistory,
    smoother: FixedSmoother,
    next_index: u64,
}

/// One fixed-backend step. Probabilities are Q1.15.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedStepOutput {
    pub sample_index: u64,
    /// (power, rhythmicity, freq_stability) in Q16.16.
    pub features_q: [i32; 3],
    pub dominant_lag: Option<u8>,
    pub probs_q: [i16; CLASS_COUNT],
    pub decision: Decision,
}

impl FixedClassifier {
    pub fn new(tree: Arc<LikelihoodTree>, config: ClassifierConfig) -> Self {
        let smoother = FixedSmoother::new(config.alpha_q, config.theta_q);
        Self {
            tree,
            config,
            window: FixedWindow::new(),
            history: LagHistory::new(),
            smoother,
            next_index: 0,
        }
    }

    pub fn reset(&mut self) {
        self.window = FixedWindow::new();
        self.history = LagHistory::new();
        self.smoother = FixedSmoother::new(self.config.alpha_q, self.config.theta_q);
        self.next_index = 0;
    }

    pub fn probs_q(&self) -> &[i16; CLASS_COUNT] {
        self.smoother.probs()
    }

    pub fn step(&mut self, raw: RawSample) -> Result<FixedStepOutput, PipelineError> {
        // Validation shares the decode path; the fixed window consumes the
        // raw words directly.
        decode_sample(raw, self.next_index)?;
        let sample_index = self.next_index;
        self.next_index += 1;
        self.window.push_raw(&raw);
        let power = power_q(&self.window);
        let (rhythmicity, dominant_lag) = autocorr_q(&self.window);
        let freq_stability = freq_stability_q(&mut self.history, dominant_lag);
        let features_q = [power, rhythmicity, freq_stability];
        let likelihoods = self.tree.eval_fixed(&features_q)?;
        self.smoother.ar_update(likelihoods);
        Ok(FixedStepOutput {
            sample_index,
            features_q,
            dominant_lag,
            probs_q: *self.smoother.probs(),
            decision: self.smoother.decide(),
        })
    }

    pub fn run(&mut self, samples: &[RawSample]) -> Result<Vec<FixedStepOutput>, PipelineError> {
        samples.iter().map(|raw| self.step(*raw)).collect()
    }

    pub fn serialize_state(&self) -> Vec<u8> {
        let mut mags_q = [0i32; WINDOW_LEN];
        let fill = self.window.copy_ordered(&mut mags_q);
        snapshot_state(
            1,
            self.next_index,
            fill,
            &mags_q,
            self.window.sum(),
            self.window.sum_sq(),
            &self.history,
            *self.smoother.probs(),
            self.config.alpha_q,
            self.config.theta_q,
        )
    }
}

/// Canonical classifier-state serialization, the unit of the RAM budget:
///
/// ```text
/// magic "PACS" 4 B | version u16 = 1 | backend u8 (0 float, 1 fixed) | 0 u8
/// sample_index u64
/// window: fill u8, 64 × i32 magnitudes (Q16.16, oldest first),
///         sum i64 (Q16.16), sum_sq i64 (Q32.32)
/// history: len u8, 8 × u8 lags (0xFF = none, oldest first)
/// smoother: 5 × i16 probs (Q1.15), 5 × i16 alpha, i16 theta
/// crc-32 over all preceding bytes, 4 B
/// ```
#[allow(clippy::too_many_arguments)]
fn snapshot_state(
    backend: u8,
    sample_index: u64,
    fill: usize,
    mags_q: &[i32; WINDOW_LEN],
    sum: i64,
    sum_sq: i64,
    history: &LagHistory,
    probs_q: [i16; CLASS_COUNT],
    alpha_q: [i16; CLASS_COUNT],
    theta_q: i16,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(352);
    out.extend_from_slice(b"PACS");
    out.extend_from_slice(&1u16.to_le_bytes());
    out.push(backend);
    out.push(0);
    out.extend_from_slice(&sample_index.to_le_bytes());
    out.push(fill as u8);
    for m in mags_q {
        out.extend_from_slice(&m.to_le_bytes());
    }
    out.extend_from_slice(&sum.to_le_bytes());
    out.extend_from_slice(&sum_sq.to_le_bytes());
    out.push(history.len() as u8);
    let mut lags = [0xFFu8; HISTORY_LEN];
    for (slot, lag) in lags.iter_mut().zip(history.entries()) {
        *slot = lag.unwrap_or(0xFF);
    }
    out.extend_from_slice(&lags);
    for p in probs_q {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for a in alpha_q {
        out.extend_from_slice(&a.to_le_bytes());
    }
    out.extend_from_slice(&theta_q.to_le_bytes());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Agreement summary of one dual run, emitted as single-line JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// Fraction of samples where both backends emitted the same label.
    pub agreement: f64,
    /// Max over samples and classes of |p_float − p_fixed|.
    pub max_prob_div: f64,
    /// First sample index with differing labels, if any.
    pub first_divergence: Option<u64>,
}

impl EquivalenceReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Run both backends over one stream and report their agreement.
pub fn run_dual(
    tree: &Arc<LikelihoodTree>,
    config: &ClassifierConfig,
    samples: &[RawSample],
) -> Result<EquivalenceReport, PipelineError> {
    let mut float = Classifier::new(Arc::clone(tree), config.clone());
    let mut fixed = FixedClassifier::new(Arc::clone(tree), config.clone());
    let mut agree = 0usize;
    let mut max_prob_div = 0.0f64;
    let mut first_divergence = None;
    for (i, raw) in samples.iter().enumerate() {
        let f = float.step(*raw)?;
        let q = fixed.step(*raw)?;
        if f.decision.label == q.decision.label {
            agree += 1;
        } else if first_divergence.is_none() {
            first_divergence = Some(i as u64);
        }
        for c in 0..CLASS_COUNT {
            let div = (f.probs[c] - Q1_15(q.probs_q[c]).to_f64()).abs();
            max_prob_div = max_prob_div.max(div);
        }
    }
    let agreement = if samples.is_empty() { 1.0 } else { agree as f64 / samples.len() as f64 };
    Ok(EquivalenceReport { agreement, max_prob_div, first_divergence })
}
