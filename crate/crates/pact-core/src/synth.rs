//! Deterministic synthetic accelerometer streams for training, evaluation
//! and the dual-backend harness.
//!
//! The profiles are deliberate caricatures: controllable oracles for
//! pipeline properties, not biomechanics. Everything is pure in
//! `(script, seed)`: randomness comes from [`SplitMix64`] and the Gaussian
//! variates from an Irwin–Hall 12-sum, so no transcendental function other
//! than the waveform's `sin` touches the stream.
//!
//! Waveform model per profile, at 25 Hz with gravity on the z axis:
//!
//! ```text
//! az = 1 + 0.6·A·sin φ + h·A·sin 2φ + σ·n₁      (vertical bounce)
//! ax = 0.4·A·cos φ + σ·n₂                        (arm swing)
//! ay = σ·n₃
//! ```
//!
//! where the phase advances `2π·f/25` scaled by a per-cycle period factor
//! `max(0.5, 1 + jitter·n)`. Components clip to ±8 g and quantize to the
//! 12-bit lattice.

use crate::features::{extract_features, LagHistory};
use crate::ingest::{decode_sample, RawSample, SampleWindow, RAW_MAX, RAW_MIN, SAMPLE_RATE_HZ};
use crate::tree::{ActivityClass, TrainingSet};

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then two xor-multiply mixes
/// (0xBF58476D1CE4E5B9, 0x94D049BB133111EB). Trivially portable, which
/// keeps generated corpora reproducible outside this crate.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Approximate standard normal: Irwin–Hall sum of 12 uniforms minus 6.
    /// Transcendental-free, so streams replay bit-for-bit.
    pub fn next_gauss(&mut self) -> f64 {
        (0..12).map(|_| self.next_f64()).sum::<f64>() - 6.0
    }
}

/// Generator parameters for one activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProfile {
    pub label: ActivityClass,
    /// Fundamental movement frequency in Hz, within [0, 4].
    pub base_freq: f64,
    /// Oscillation amplitude in g.
    pub amplitude: f64,
    /// Per-axis Gaussian noise σ in g.
    pub noise_std: f64,
    /// Second-harmonic fraction of the amplitude.
    pub harmonic_ratio: f64,
    /// Relative std of the cycle-to-cycle period.
    pub freq_jitter: f64,
}

impl ActivityProfile {
    pub fn new(
        label: ActivityClass,
        base_freq: f64,
        amplitude: f64,
        noise_std: f64,
        harmonic_ratio: f64,
        freq_jitter: f64,
    ) -> Self {
        assert!((0.0..=4.0).contains(&base_freq), "base_freq {base_freq} outside [0, 4] Hz");
        assert!(amplitude >= 0.0 && noise_std >= 0.0);
        Self { label, base_freq, amplitude, noise_std, harmonic_ratio, freq_jitter }
    }

    /// Still wrist: gravity plus sensor noise.
    pub fn rest() -> Self {
        Self::new(ActivityClass::Rest, 0.0, 0.0, 0.01, 0.0, 0.0)
    }

    /// Moderate rhythmic gait around 1.6 Hz (≈ 4 cycles per window).
    pub fn walk() -> Self {
        Self::new(ActivityClass::Walk, 1.6, 0.5, 0.05, 0.3, 0.02)
    }

    /// Strong rhythmic gait at 2.5 Hz (10 samples per stride).
    pub fn run() -> Self {
        Self::new(ActivityClass::Run, 2.5, 1.5, 0.08, 0.4, 0.02)
    }

    /// Road vibration: moderate power with no coherent cadence.
    pub fn bike() -> Self {
        Self::new(ActivityClass::Bike, 0.0, 0.0, 0.25, 0.0, 0.0)
    }

    /// Weak, heavily jittered movement standing in for everything else.
    pub fn other() -> Self {
        Self::new(ActivityClass::Other, 0.7, 0.15, 0.1, 0.2, 0.15)
    }

    pub fn default_for(label: ActivityClass) -> Self {
        match label {
            ActivityClass::Rest => Self::rest(),
            ActivityClass::Walk => Self::walk(),
            ActivityClass::Run => Self::run(),
            ActivityClass::Bike => Self::bike(),
            ActivityClass::Other => Self::other(),
        }
    }
}

/// An ordered list of activity segments plus the stream seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionScript {
    pub seed: u64,
    segments: Vec<(ActivityProfile, f64)>,
}

impl SessionScript {
    pub fn new(seed: u64) -> Self {
        Self { seed, segments: Vec::new() }
    }

    pub fn push(&mut self, profile: ActivityProfile, seconds: f64) -> &mut Self {
        assert!(seconds > 0.0);
        self.segments.push((profile, seconds));
        self
    }

    pub fn segments(&self) -> &[(ActivityProfile, f64)] {
        &self.segments
    }

    pub fn total_samples(&self) -> usize {
        self.segments
            .iter()
            .map(|(_, s)| (s * f64::from(SAMPLE_RATE_HZ)).round() as usize)
            .sum()
    }
}

/// A generated raw stream with per-sample ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub samples: Vec<RawSample>,
    pub labels: Vec<ActivityClass>,
}

fn clip_to_lattice(g: f64) -> i16 {
    ((g * 256.0).round() as i64).clamp(i64::from(RAW_MIN), i64::from(RAW_MAX)) as i16
}

/// Render a script to a 25 Hz labeled raw stream. Pure in (script, seed).
pub fn gen_session(script: &SessionScript) -> LabeledStream {
    let mut rng = SplitMix64::new(script.seed);
    let total = script.total_samples();
    let mut samples = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let two_pi = 2.0 * std::f64::consts::PI;

    for (profile, seconds) in &script.segments {
        let n = (seconds * f64::from(SAMPLE_RATE_HZ)).round() as usize;
        let mut phase = two_pi * rng.next_f64();
        let mut cycle_scale = 1.0f64;
        for _ in 0..n {
            let (ax, ay, az);
            if profile.base_freq > 0.0 {
                phase += two_pi * profile.base_freq / (f64::from(SAMPLE_RATE_HZ) * cycle_scale);
                if phase >= two_pi {
                    phase -= two_pi;
                    cycle_scale = (1.0 + profile.freq_jitter * rng.next_gauss()).max(0.5);
                }
                let a = profile.amplitude;
                az = 1.0
                    + 0.6 * a * phase.sin()
                    + profile.harmonic_ratio * a * (2.0 * phase).sin()
                    + profile.noise_std * rng.next_gauss();
                ax = 0.4 * a * phase.cos() + profile.noise_std * rng.next_gauss();
                ay = profile.noise_std * rng.next_gauss();
            } else {
                az = 1.0 + profile.noise_std * rng.next_gauss();
                ax = profile.noise_std * rng.next_gauss();
                ay = profile.noise_std * rng.next_gauss();
            }
            samples.push(RawSample::new(clip_to_lattice(ax), clip_to_lattice(ay), clip_to_lattice(az)));
            labels.push(profile.label);
        }
    }
    LabeledStream { samples, labels }
}

/// Run the streaming feature extractor over labeled streams, skipping the
/// first `skip` samples of each stream where the window still mixes the
/// cold-start transient into the features.
pub fn extract_training_set(streams: &[LabeledStream], skip: usize) -> TrainingSet {
    let mut set = TrainingSet::new();
    for stream in streams {
        let mut window = SampleWindow::new();
        let mut history = LagHistory::new();
        for (i, (raw, label)) in stream.samples.iter().zip(&stream.labels).enumerate() {
            let sample = decode_sample(*raw, i as u64).expect("generated samples are in range");
            window.push(&sample);
            let features = extract_features(&window, &mut history);
            if i >= skip {
                set.push(features, *label);
            }
        }
    }
    set
}

/// Label mix of the training corpus. The target percentages sum to
/// 100.1, so they are scaled by 1/1.001 before sizing.
const TRAIN_FRACTIONS: [(ActivityClass, f64); 5] = [
    (ActivityClass::Rest, 0.291),
    (ActivityClass::Walk, 0.30),
    (ActivityClass::Run, 0.175),
    (ActivityClass::Bike, 0.23),
    (ActivityClass::Other, 0.005),
];

/// Feature rows in the default training corpus.
const TRAIN_TOTAL: usize = 24_000;
/// Cold-start rows dropped per training segment.
const TRAIN_SKIP: usize = crate::ingest::WINDOW_LEN;
/// Held-out stream length per trained class, in seconds.
const HELD_OUT_SECONDS: f64 = 200.0;

/// A seeded training corpus and a disjoint-seed evaluation corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub training: TrainingSet,
    pub training_streams: Vec<LabeledStream>,
    pub held_out: Vec<LabeledStream>,
}

/// Per-class profile variants used by the training corpus, covering a
/// spread of cadences and intensities.
fn training_variants(label: ActivityClass) -> Vec<ActivityProfile> {
    match label {
        ActivityClass::Rest => vec![
            ActivityProfile::new(label, 0.0, 0.0, 0.008, 0.0, 0.0),
            ActivityProfile::new(label, 0.0, 0.0, 0.015, 0.0, 0.0),
        ],
        ActivityClass::Walk => vec![
            ActivityProfile::new(label, 1.5, 0.4, 0.05, 0.25, 0.02),
            ActivityProfile::new(label, 1.6, 0.5, 0.05, 0.3, 0.02),
            ActivityProfile::new(label, 1.7, 0.6, 0.06, 0.3, 0.02),
        ],
        ActivityClass::Run => vec![
            ActivityProfile::new(label, 2.3, 1.2, 0.08, 0.4, 0.02),
            ActivityProfile::new(label, 2.5, 1.5, 0.08, 0.4, 0.02),
            ActivityProfile::new(label, 2.9, 1.8, 0.1, 0.35, 0.02),
        ],
        ActivityClass::Bike => vec![
            ActivityProfile::new(label, 0.0, 0.0, 0.2, 0.0, 0.0),
            ActivityProfile::new(label, 0.0, 0.0, 0.3, 0.0, 0.0),
        ],
        ActivityClass::Other => vec![ActivityProfile::other()],
    }
}

/// Build the standard corpus: training streams sized so the extracted
/// feature rows match the target label mix within ±1%, plus held-out
/// evaluation streams generated from a derived, disjoint seed.
pub fn default_corpus(seed: u64) -> Corpus {
    let mut training_streams = Vec::new();
    for (label, fraction) in TRAIN_FRACTIONS {
        let target = (fraction / 1.001 * TRAIN_TOTAL as f64).round() as usize;
        let variants = training_variants(label);
        let per_segment = target / variants.len();
        let mut remainder = target - per_segment * variants.len();
        for (k, profile) in variants.into_iter().enumerate() {
            let rows = per_segment + usize::from(remainder > 0);
            remainder = remainder.saturating_sub(1);
            let samples = rows + TRAIN_SKIP;
            let mut script = SessionScript::new(seed ^ (label.index() as u64) << 8 ^ k as u64);
            script.push(profile, samples as f64 / f64::from(SAMPLE_RATE_HZ));
            training_streams.push(gen_session(&script));
        }
    }
    let training = extract_training_set(&training_streams, TRAIN_SKIP);

    let eval_seed = seed.wrapping_add(0x517C_C1B7_2722_0A95);
    let mut held_out = Vec::new();
    for label in ActivityClass::TRAINED {
        let mut script = SessionScript::new(eval_seed ^ (label.index() as u64) << 16);
        script.push(ActivityProfile::default_for(label), HELD_OUT_SECONDS);
        held_out.push(gen_session(&script));
    }
    let mut script = SessionScript::new(eval_seed ^ 0xFFFF);
    script.push(ActivityProfile::other(), 20.0);
    held_out.push(gen_session(&script));

    Corpus { training, training_streams, held_out }
}

/// The benchmark stream: one minute mixing rest, walk, run and other at
/// 58 / 12.5 / 4.2 / 25.3 percent (sample counts 870/188/63/379).
pub fn bench_mix_script(seed: u64) -> SessionScript {
    let mut script = SessionScript::new(seed);
    let rate = f64::from(SAMPLE_RATE_HZ);
    script
        .push(ActivityProfile::rest(), 870.0 / rate)
        .push(ActivityProfile::walk(), 188.0 / rate)
        .push(ActivityProfile::run(), 63.0 / rate)
        .push(ActivityProfile::other(), 379.0 / rate);
    script
}
