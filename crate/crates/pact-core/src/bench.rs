//! Per-sample latency and memory budget harness.
//!
//! Replicates the cyclic methodology: a one-minute mixed-activity stream
//! is fed through one persistent classifier for a number of cycles; each
//! cycle is wall-clock timed and divided by its sample count, giving a
//! distribution of per-sample step times across cycles. Timing fields
//! vary run to run; the byte-size fields are deterministic.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::pipeline::{Backend, Classifier, ClassifierConfig, FixedClassifier, PipelineError};
use crate::synth::{bench_mix_script, gen_session};
use crate::tree::{serialize_tree, LikelihoodTree};

/// Measured step-time statistics and serialized footprints.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub backend: String,
    pub cycles: u32,
    pub samples_per_cycle: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p99_ns: f64,
    pub samples_per_sec: f64,
    pub state_bytes: usize,
    pub tree_bytes: usize,
}

impl BenchReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Run the cyclic benchmark. `minutes` scales the stream length; the
/// activity mix stays at 58/12.5/4.2/25.3 percent.
pub fn run_bench(
    tree: &Arc<LikelihoodTree>,
    config: &ClassifierConfig,
    backend: Backend,
    minutes: f64,
    cycles: u32,
    seed: u64,
) -> Result<BenchReport, PipelineError> {
    assert!(minutes > 0.0 && cycles > 0);
    let mut script = bench_mix_script(seed);
    let mut stream = gen_session(&script).samples;
    let per_minute = stream.len();
    while (stream.len() as f64) < minutes * per_minute as f64 {
        script.seed = script.seed.wrapping_add(1);
        stream.extend(gen_session(&script).samples);
    }
    stream.truncate((minutes * per_minute as f64).round() as usize);

    enum Runner {
        Float(Box<Classifier>),
        Fixed(Box<FixedClassifier>),
    }
    let mut runner = match backend {
        Backend::Float | Backend::Dual => {
            Runner::Float(Box::new(Classifier::new(Arc::clone(tree), config.clone())))
        }
        Backend::Fixed => {
            Runner::Fixed(Box::new(FixedClassifier::new(Arc::clone(tree), config.clone())))
        }
    };

    // One untimed warm-up pass.
    let mut cycle = |stream: &[_]| -> Result<(), PipelineError> {
        match &mut runner {
            Runner::Float(c) => {
                for raw in stream {
                    std::hint::black_box(c.step(*raw)?);
                }
            }
            Runner::Fixed(c) => {
                for raw in stream {
                    std::hint::black_box(c.step(*raw)?);
                }
            }
        }
        Ok(())
    };
    cycle(&stream)?;

    let mut per_sample_ns = Vec::with_capacity(cycles as usize);
    for _ in 0..cycles {
        let start = Instant::now();
        cycle(&stream)?;
        per_sample_ns.push(start.elapsed().as_nanos() as f64 / stream.len() as f64);
    }
    per_sample_ns.sort_by(f64::total_cmp);
    let mean_ns = per_sample_ns.iter().sum::<f64>() / per_sample_ns.len() as f64;
    let median_ns = per_sample_ns[per_sample_ns.len() / 2];
    let p99_idx = ((per_sample_ns.len() as f64 * 0.99).ceil() as usize).clamp(1, per_sample_ns.len()) - 1;
    let p99_ns = per_sample_ns[p99_idx];

    let state_bytes = match &runner {
        Runner::Float(c) => c.serialize_state().len(),
        Runner::Fixed(c) => c.serialize_state().len(),
    };
    Ok(BenchReport {
        backend: match backend {
            Backend::Float | Backend::Dual => "float".into(),
            Backend::Fixed => "fixed".into(),
        },
        cycles,
        samples_per_cycle: stream.len(),
        mean_ns,
        median_ns,
        p99_ns,
        samples_per_sec: 1e9 / mean_ns,
        state_bytes,
        tree_bytes: serialize_tree(tree).len(),
    })
}
