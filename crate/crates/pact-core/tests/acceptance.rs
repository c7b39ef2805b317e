//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see
//! them). Thresholds are pinned here, not configurable.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use pact_core::bench::run_bench;
use pact_core::features::FeatureVector;
use pact_core::ingest::{read_labels_csv, read_samples_bin, read_samples_csv};
use pact_core::metrics::ConfusionMatrix;
use pact_core::pipeline::{run_dual, Backend, Classifier, ClassifierConfig, FixedClassifier};
use pact_core::smoother::SmootherState;
use pact_core::synth::{default_corpus, gen_session, ActivityProfile, SessionScript, SplitMix64};
use pact_core::tree::{
    best_split, deserialize_tree, gini_impurity, serialize_tree, train_tree, ActivityClass,
    FeatureId, LikelihoodTree, TrainingSet, TreeNode, CLASS_COUNT,
};

const CORPUS_SEED: u64 = 42;

fn pass(criterion: u32, detail: &str) {
    println!("acceptance {criterion}: PASS - {detail}");
}

/// The default-corpus tree, trained once and shared by the criteria that
/// only consume it. Criterion 1 trains its own copy so the timed span
/// covers training.
fn default_tree() -> Arc<LikelihoodTree> {
    static TREE: OnceLock<Arc<LikelihoodTree>> = OnceLock::new();
    TREE.get_or_init(|| {
        let corpus = default_corpus(CORPUS_SEED);
        Arc::new(train_tree(&corpus.training, 7, 8).expect("corpus is non-empty"))
    })
    .clone()
}

fn evaluate_streams(
    tree: &Arc<LikelihoodTree>,
    streams: &[pact_core::synth::LabeledStream],
) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::new();
    for stream in streams {
        let mut classifier = Classifier::new(Arc::clone(tree), ClassifierConfig::default());
        for (raw, label) in stream.samples.iter().zip(&stream.labels) {
            let out = classifier.step(*raw).expect("generated samples decode");
            matrix.record(label.name(), out.decision.label);
        }
    }
    matrix
}

/// Criterion 1: the proprietary-data confusion matrix is replaced by the
/// seeded synthetic corpus; train + held-out eval must clear the class
/// accuracy floors inside 60 s.
#[test]
fn criterion_1_heldout_accuracy() {
    let start = Instant::now();
    let corpus = default_corpus(CORPUS_SEED);
    let tree = Arc::new(train_tree(&corpus.training, 7, 8).unwrap());
    let matrix = evaluate_streams(&tree, &corpus.held_out);
    let elapsed = start.elapsed();

    let acc = |c: ActivityClass| matrix.accuracy(c).expect("held-out covers every class");
    let (rest, walk, run, bike) = (
        acc(ActivityClass::Rest),
        acc(ActivityClass::Walk),
        acc(ActivityClass::Run),
        acc(ActivityClass::Bike),
    );
    assert!(rest >= 0.95, "rest accuracy {rest}");
    assert!(walk >= 0.95, "walk accuracy {walk}");
    assert!(run >= 0.95, "run accuracy {run}");
    assert!(bike >= 0.70, "bike accuracy {bike}");
    assert!(elapsed.as_secs_f64() < 60.0, "train+eval took {elapsed:?}");
    pass(
        1,
        &format!(
            "held-out accuracy rest {:.1}% walk {:.1}% run {:.1}% bike {:.1}% in {:.1} s",
            100.0 * rest,
            100.0 * walk,
            100.0 * run,
            100.0 * bike,
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 2: for constant input the float filter follows
/// |pₙ − L| = αⁿ|p₀ − L| to 1e−12 for n ≤ 200.
#[test]
fn criterion_2_ar_exponential_law() {
    let mut rng = SplitMix64::new(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let alpha = rng.next_f64() * 0.999;
        let target = rng.next_f64();
        let p0 = rng.next_f64();
        let mut s = SmootherState::new([alpha; CLASS_COUNT], 0.5);
        s.set_probs([p0; CLASS_COUNT]);
        let input = pact_core::tree::LikelihoodVector([target; CLASS_COUNT]);
        for n in 1..=200u32 {
            s.ar_update(&input);
            let predicted = (target - p0).abs() * alpha.powi(n as i32);
            let got = (s.probs()[0] - target).abs();
            let err = (got - predicted).abs();
            worst = worst.max(err);
            assert!(err < 1e-12, "alpha {alpha} n {n}: error {err:e}");
        }
    }
    pass(2, &format!("exponential ramp law held to 1e-12 (worst {worst:.2e})"));
}

/// Criterion 3: per-sample feeding and whole-file processing are
/// bit-identical on ten random sessions.
#[test]
fn criterion_3_streaming_equals_batch() {
    let tree = default_tree();
    let profiles = [
        ActivityProfile::rest(),
        ActivityProfile::walk(),
        ActivityProfile::run(),
        ActivityProfile::bike(),
        ActivityProfile::other(),
    ];
    let mut rng = SplitMix64::new(3);
    for session in 0..10 {
        let mut script = SessionScript::new(100 + session);
        for _ in 0..3 {
            let profile = profiles[(rng.next_u64() % 5) as usize];
            script.push(profile, 20.0 + rng.next_f64() * 20.0);
        }
        let stream = gen_session(&script);
        let mut batch = Classifier::new(Arc::clone(&tree), ClassifierConfig::default());
        let whole = batch.run(&stream.samples).unwrap();
        let mut streaming = Classifier::new(Arc::clone(&tree), ClassifierConfig::default());
        for (i, raw) in stream.samples.iter().enumerate() {
            let out = streaming.step(*raw).unwrap();
            assert_eq!(out, whole[i], "session {session} sample {i}");
        }
    }
    pass(3, "10 sessions replayed bit-identically sample-by-sample vs batch");
}

/// Criterion 4: fixed vs float on a 10-minute four-activity session.
#[test]
fn criterion_4_backend_equivalence() {
    let tree = default_tree();
    let mut script = SessionScript::new(4242);
    script
        .push(ActivityProfile::rest(), 150.0)
        .push(ActivityProfile::walk(), 150.0)
        .push(ActivityProfile::run(), 150.0)
        .push(ActivityProfile::bike(), 150.0);
    let stream = gen_session(&script);
    assert_eq!(stream.samples.len(), 15_000);
    let report = run_dual(&tree, &ClassifierConfig::default(), &stream.samples).unwrap();
    assert!(report.agreement >= 0.99, "label agreement {}", report.agreement);
    let budget = f64::powi(2.0, -7);
    assert!(report.max_prob_div <= budget, "probability divergence {}", report.max_prob_div);
    pass(
        4,
        &format!(
            "agreement {:.4}, max probability divergence {:.2e} (budget {budget:.2e})",
            report.agreement, report.max_prob_div
        ),
    );
}

/// Criterion 5: canonical state ≤ 2048 bytes, default tree file ≤ 8 KiB.
#[test]
fn criterion_5_memory_budget() {
    let tree = default_tree();
    let stream = gen_session(&pact_core::synth::bench_mix_script(5));
    let mut float = Classifier::new(Arc::clone(&tree), ClassifierConfig::default());
    let mut fixed = FixedClassifier::new(Arc::clone(&tree), ClassifierConfig::default());
    float.run(&stream.samples).unwrap();
    fixed.run(&stream.samples).unwrap();
    let float_state = float.serialize_state().len();
    let fixed_state = fixed.serialize_state().len();
    let tree_bytes = serialize_tree(&tree).len();
    assert!(float_state <= 2048, "float state {float_state} bytes");
    assert!(fixed_state <= 2048, "fixed state {fixed_state} bytes");
    assert!(tree_bytes <= 8 * 1024, "tree file {tree_bytes} bytes");
    pass(
        5,
        &format!("state {float_state} B (float) / {fixed_state} B (fixed), tree file {tree_bytes} B"),
    );
}

/// Criterion 6: cyclic 1-minute × 1000 bench; the 10 µs workstation
/// target is asserted with a 5× safety margin for loaded CI machines.
#[test]
fn criterion_6_throughput_proxy() {
    let tree = default_tree();
    let report = run_bench(&tree, &ClassifierConfig::default(), Backend::Float, 1.0, 1000, 6).unwrap();
    assert_eq!(report.samples_per_cycle, 1500);
    let median_us = report.median_ns / 1000.0;
    assert!(median_us <= 50.0, "median step {median_us:.2} µs exceeds the 5× margin");
    pass(
        6,
        &format!(
            "median step {median_us:.2} µs (target 10 µs, asserted ≤ 50 µs), {:.0} samples/s",
            report.samples_per_sec
        ),
    );
}

/// Exhaustive split oracle: direct partitioning and exact rational gain
/// comparison, independent of the production sweep.
fn oracle_best_split(set: &TrainingSet) -> Option<(FeatureId, f64)> {
    let samples = set.samples();
    let n = samples.len() as u128;
    let mut parent = [0u128; CLASS_COUNT];
    for s in samples {
        parent[s.label.index()] += 1;
    }
    let parent_num = n * n - parent.iter().map(|c| c * c).sum::<u128>();

    let mut best: Option<(u128, u128, FeatureId, f64)> = None;
    for feature in FeatureId::ALL {
        let mut values: Vec<f64> = samples.iter().map(|s| s.features.value(feature)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (((pair[0] + pair[1]) * 0.5 * 65536.0 + 0.5).floor()) / 65536.0;
            if !(pair[0] < t && t <= pair[1]) {
                continue;
            }
            let mut left = [0u128; CLASS_COUNT];
            let mut right = [0u128; CLASS_COUNT];
            for s in samples {
                if s.features.value(feature) < t {
                    left[s.label.index()] += 1;
                } else {
                    right[s.label.index()] += 1;
                }
            }
            let nl: u128 = left.iter().sum();
            let nr: u128 = right.iter().sum();
            if nl == 0 || nr == 0 {
                continue;
            }
            let sl: u128 = left.iter().map(|c| c * c).sum();
            let sr: u128 = right.iter().map(|c| c * c).sum();
            let w_num = (nl * nl - sl) * nr + (nr * nr - sr) * nl;
            let w_den = nl * nr;
            if w_num * n >= parent_num * w_den {
                continue;
            }
            if best.is_none_or(|(bn, bd, _, _)| w_num * bd < bn * w_den) {
                best = Some((w_num, w_den, feature, t));
            }
        }
    }
    best.map(|(_, _, feature, t)| (feature, t))
}

/// Criterion 7: trainer correctness against the oracle plus structural
/// invariants of trained trees.
#[test]
fn criterion_7_trainer_correctness() {
    let mut rng = SplitMix64::new(7);
    for case in 0..1000 {
        let n = 2 + (rng.next_u64() % 11) as usize;
        let set: TrainingSet = (0..n)
            .map(|_| {
                let f = FeatureVector::new(rng.next_f64() * 2.0, rng.next_f64(), rng.next_f64());
                let label = ActivityClass::from_index((rng.next_u64() % 5) as u8).unwrap();
                (f, label)
            })
            .collect();
        let got = best_split(&set).map(|s| (s.feature, s.threshold));
        assert_eq!(got, oracle_best_split(&set), "case {case}");
    }

    for case in 0..20 {
        let n = 50 + (rng.next_u64() % 450) as usize;
        let set: TrainingSet = (0..n)
            .map(|_| {
                let label = ActivityClass::from_index((rng.next_u64() % 5) as u8).unwrap();
                let base = label.index() as f64 * 0.3;
                let f = FeatureVector::new(
                    base + rng.next_f64() * 0.4,
                    rng.next_f64(),
                    rng.next_f64(),
                );
                (f, label)
            })
            .collect();
        let tree = train_tree(&set, 7, 8).unwrap();
        assert!(tree.depth() <= 7, "case {case}: depth {}", tree.depth());
        for node in tree.nodes() {
            if let TreeNode::Leaf { likelihoods_q } = node {
                let sum: f64 = likelihoods_q.iter().map(|&q| f64::from(q) / 32768.0).sum();
                assert!((sum - 1.0).abs() < 1e-9, "leaf sum {sum}");
            }
        }
        assert_splits_improve(&tree, &set);
    }
    pass(7, "1000 split oracles matched; 20 trained trees satisfy depth/gain/normalization");
}

/// Re-derive every internal node's subset and check its gain is positive.
fn assert_splits_improve(tree: &LikelihoodTree, set: &TrainingSet) {
    fn recurse(tree: &LikelihoodTree, idx: usize, subset: Vec<usize>, set: &TrainingSet) {
        if let TreeNode::Internal { feature, threshold_q, left, right, .. } = &tree.nodes()[idx] {
            let t = f64::from(*threshold_q) / 65536.0;
            let (ls, rs): (Vec<usize>, Vec<usize>) = subset
                .iter()
                .partition(|&&i| set.samples()[i].features.value(*feature) < t);
            let counts = |idxs: &[usize]| {
                let mut c = [0u64; CLASS_COUNT];
                for &i in idxs {
                    c[set.samples()[i].label.index()] += 1;
                }
                c
            };
            let n = subset.len() as f64;
            let gain = gini_impurity(&counts(&subset)).unwrap()
                - ls.len() as f64 / n * gini_impurity(&counts(&ls)).unwrap()
                - rs.len() as f64 / n * gini_impurity(&counts(&rs)).unwrap();
            assert!(gain > 0.0, "split with non-positive gain {gain}");
            recurse(tree, usize::from(*left), ls, set);
            recurse(tree, usize::from(*right), rs, set);
        }
    }
    recurse(tree, usize::from(tree.root()), (0..set.len()).collect(), set);
}

/// Criterion 8: Gini unit values, exact.
#[test]
fn criterion_8_gini_unit_values() {
    assert_eq!(gini_impurity(&[10, 0, 0, 0, 0]).unwrap(), 0.0);
    assert_eq!(gini_impurity(&[5, 5, 0, 0, 0]).unwrap(), 0.5);
    assert_eq!(gini_impurity(&[2, 2, 2, 2, 2]).unwrap(), 0.8);
    pass(8, "gini(10,0,0,0,0)=0, gini(5,5,0,0,0)=0.5, gini(2,2,2,2,2)=0.8 exactly");
}

/// Criterion 9: file-format parsers survive 10⁵ random byte strings with
/// structured errors, never panics.
#[test]
fn criterion_9_parser_robustness() {
    let mut rng = SplitMix64::new(9);
    let tree = default_tree();
    let valid_tree = serialize_tree(&tree);

    let mut random_bytes = |max_len: usize| -> Vec<u8> {
        let len = (rng.next_u64() % max_len as u64) as usize;
        (0..len).map(|_| rng.next_u64() as u8).collect()
    };

    for _ in 0..25_000 {
        let bytes = random_bytes(64);
        let _ = deserialize_tree(&bytes);
        let _ = read_samples_bin(&bytes[..]);
    }
    for _ in 0..25_000 {
        let bytes = random_bytes(128);
        let _ = read_samples_csv(&bytes[..]);
        let _ = read_labels_csv(&bytes[..]);
    }
    // Structured corruption: valid tree bytes with random mutations must
    // yield errors, not panics or silently different trees.
    for _ in 0..25_000 {
        let mut bytes = valid_tree.clone();
        let flips = 1 + rng.next_u64() % 4;
        for _ in 0..flips {
            let pos = (rng.next_u64() % bytes.len() as u64) as usize;
            bytes[pos] ^= (rng.next_u64() % 255 + 1) as u8;
        }
        if bytes != valid_tree {
            assert!(deserialize_tree(&bytes).is_err());
        }
    }
    // Random truncations of a valid stream.
    for _ in 0..25_000 {
        let len = (rng.next_u64() % valid_tree.len() as u64) as usize;
        assert!(deserialize_tree(&valid_tree[..len]).is_err());
    }
    pass(9, "100k adversarial inputs across tree/CSV/binary parsers: structured errors only");
}

/// A long single-activity stream settles on its class and stays there.
#[test]
fn run_cadence_stream_settles_on_run() {
    let tree = default_tree();
    let mut script = SessionScript::new(777);
    script.push(ActivityProfile::run(), 120.0);
    let stream = gen_session(&script);
    let mut classifier = Classifier::new(tree, ClassifierConfig::default());
    let outputs = classifier.run(&stream.samples).unwrap();
    for out in &outputs[150..] {
        assert_eq!(out.decision.label, ActivityClass::Run, "sample {}", out.sample_index);
    }
}

/// Rest → walk → run staircase: every transition lands within 3 s of the
/// ground-truth boundary.
#[test]
fn staircase_transitions_within_three_seconds() {
    let tree = default_tree();
    let mut script = SessionScript::new(778);
    script
        .push(ActivityProfile::rest(), 60.0)
        .push(ActivityProfile::walk(), 60.0)
        .push(ActivityProfile::run(), 60.0);
    let stream = gen_session(&script);
    let mut classifier = Classifier::new(tree, ClassifierConfig::default());
    let outputs = classifier.run(&stream.samples).unwrap();
    let tolerance = 75; // 3 s at 25 Hz
    let segments = [
        (0usize, 1500usize, ActivityClass::Rest),
        (1500, 3000, ActivityClass::Walk),
        (3000, 4500, ActivityClass::Run),
    ];
    for (start, end, expected) in segments {
        for out in &outputs[start + tolerance..end] {
            assert_eq!(
                out.decision.label,
                expected,
                "sample {} should be {expected} within 3 s of the boundary",
                out.sample_index
            );
        }
    }
}
