//! Streaming physical-activity classification for wrist accelerometry.
//!
//! The engine consumes raw 12-bit three-axis acceleration samples at 25 Hz
//! and emits one activity decision per sample. The pipeline has four stages:
//!
//! 1. windowed features over the acceleration magnitude: signal power,
//!    rhythmicity, frequency stability ([`features`]),
//! 2. a depth-bounded binary likelihood tree ([`tree`]),
//! 3. a per-class first-order autoregressive filter bank and a
//!    thresholded argmax with an `Other` fallback ([`smoother`]).
//!
//! Two numeric backends share the same tree constants: a straightforward
//! `f64` reference and an integer-only backend ([`fixedpoint`]) sized for
//! FPU-less targets. [`pipeline::run_dual`] runs both on one stream and
//! reports their agreement.
//!
//! [`synth`] generates deterministic labeled test streams, [`metrics`] and
//! [`mod@bench`] cover evaluation and the per-sample latency/memory budgets.

pub mod bench;
pub mod features;
pub mod fixedpoint;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod smoother;
pub mod synth;
pub mod tree;

pub use ingest::{AccelSample, RawSample, SampleWindow, SAMPLE_RATE_HZ, WINDOW_LEN};
pub use pipeline::{Classifier, ClassifierConfig, EquivalenceReport, FixedClassifier};
pub use smoother::{Decision, SmootherState};
pub use tree::{ActivityClass, FeatureId, LikelihoodTree, LikelihoodVector};
