//! Greedy recursive Gini-split training.
//!
//! Candidate thresholds are the midpoints between consecutive distinct
//! sorted feature values, snapped to the Q16.16 grid that the tree file
//! carries, so training-time partitions and inference-time routing agree
//! bit for bit. Split selection compares weighted child impurities as
//! exact integer rationals; floating point never decides a near-tie, which
//! keeps training deterministic and independent of sample order.

use super::{
    gini_impurity, quantize_likelihoods, ActivityClass, FeatureId, LikelihoodTree, TreeError,
    TreeNode, CLASS_COUNT, MAX_DEPTH,
};
use crate::features::FeatureVector;

/// Default depth bound.
pub const DEFAULT_MAX_DEPTH: usize = MAX_DEPTH;
/// Default node-size gate: nodes smaller than twice this are not split.
pub const DEFAULT_MIN_LEAF: usize = 8;

/// One labeled feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub features: FeatureVector,
    pub label: ActivityClass,
}

/// A labeled collection of feature vectors.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    samples: Vec<TrainingSample>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, features: FeatureVector, label: ActivityClass) {
        self.samples.push(TrainingSample { features, label });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn class_counts(&self) -> [u64; CLASS_COUNT] {
        let mut counts = [0u64; CLASS_COUNT];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }
}

impl FromIterator<(FeatureVector, ActivityClass)> for TrainingSet {
    fn from_iter<T: IntoIterator<Item = (FeatureVector, ActivityClass)>>(iter: T) -> Self {
        Self {
            samples: iter
                .into_iter()
                .map(|(features, label)| TrainingSample { features, label })
                .collect(),
        }
    }
}

/// The winning split of [`best_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: FeatureId,
    /// Threshold on the Q16.16 grid, in feature units.
    pub threshold: f64,
    /// Gini impurity decrease, strictly positive.
    pub gain: f64,
}

/// Exact weighted-child-impurity score: `W = nl·G(left) + nr·G(right)`
/// held as the integer rational `num/den`. Lower is better; the
/// candidate maximizing the Gini gain minimizes `W`.
#[derive(Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(left: &[u64; CLASS_COUNT], right: &[u64; CLASS_COUNT]) -> Self {
        fn side(counts: &[u64; CLASS_COUNT]) -> (u128, u128) {
            let n: u128 = counts.iter().map(|&c| c as u128).sum();
            let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
            (n * n - sum_sq, n)
        }
        let (lnum, ln) = side(left);
        let (rnum, rn) = side(right);
        // (ln² − SL)/ln + (rn² − SR)/rn over the common denominator ln·rn.
        Self { num: lnum * rn + rnum * ln, den: ln * rn }
    }

    fn better_than(&self, other: &SplitScore) -> bool {
        self.num * other.den < other.num * self.den
    }

    /// ΔG > 0 ⇔ W/n < G(parent).
    fn improves_on_parent(&self, parent: &[u64; CLASS_COUNT]) -> bool {
        let n: u128 = parent.iter().map(|&c| c as u128).sum();
        let sum_sq: u128 = parent.iter().map(|&c| (c as u128) * (c as u128)).sum();
        self.num * n < (n * n - sum_sq) * self.den
    }
}

/// Snap a candidate midpoint to the Q16.16 grid.
fn snap_threshold(a: f64, b: f64) -> i64 {
    ((a + b) * 0.5 * 65536.0 + 0.5).floor() as i64
}

fn counts_of(samples: &[TrainingSample], indices: &[u32]) -> [u64; CLASS_COUNT] {
    let mut counts = [0u64; CLASS_COUNT];
    for &i in indices {
        counts[samples[i as usize].label.index()] += 1;
    }
    counts
}

fn best_split_indices(samples: &[TrainingSample], indices: &[u32]) -> Option<SplitCandidate> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let parent = counts_of(samples, indices);
    let mut best: Option<(SplitScore, FeatureId, i64)> = None;

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for feature in FeatureId::ALL {
        sorted.clear();
        sorted.extend(
            indices
                .iter()
                .map(|&i| (samples[i as usize].features.value(feature), samples[i as usize].label.index())),
        );
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u64; CLASS_COUNT];
        for k in 1..n {
            left[sorted[k - 1].1] += 1;
            let (a, b) = (sorted[k - 1].0, sorted[k].0);
            if a == b {
                continue;
            }
            let t_q = snap_threshold(a, b);
            // The snapped threshold must still separate a from b, so that
            // `value < threshold` partitions exactly as the prefix does.
            if !(a * 65536.0 < t_q as f64 && t_q as f64 <= b * 65536.0) {
                continue;
            }
            if t_q < i64::from(i32::MIN) || t_q > i64::from(i32::MAX) {
                continue;
            }
            let mut right = parent;
            for (r, l) in right.iter_mut().zip(&left) {
                *r -= l;
            }
            let score = SplitScore::new(&left, &right);
            if !score.improves_on_parent(&parent) {
                continue;
            }
            // Strict improvement keeps the earliest (feature, threshold)
            // on exact ties.
            if best.is_none_or(|(b_score, _, _)| score.better_than(&b_score)) {
                best = Some((score, feature, t_q));
            }
        }
    }

    best.map(|(_, feature, t_q)| {
        let threshold = t_q as f64 / 65536.0;
        let mut left = [0u64; CLASS_COUNT];
        for &i in indices {
            if samples[i as usize].features.value(feature) < threshold {
                left[samples[i as usize].label.index()] += 1;
            }
        }
        let mut right = parent;
        for (r, l) in right.iter_mut().zip(&left) {
            *r -= l;
        }
        let nl = left.iter().sum::<u64>() as f64;
        let nr = right.iter().sum::<u64>() as f64;
        let nt = nl + nr;
        let gain = gini_impurity(&parent).expect("parent has samples")
            - nl / nt * gini_impurity(&left).expect("left side is non-empty")
            - nr / nt * gini_impurity(&right).expect("right side is non-empty");
        SplitCandidate { feature, threshold, gain }
    })
}

/// Best Gini split over all features and candidate midpoints, or `None`
/// when no split improves impurity. Ties break toward the lower feature
/// id, then the lower threshold.
pub fn best_split(set: &TrainingSet) -> Option<SplitCandidate> {
    let indices: Vec<u32> = (0..set.len() as u32).collect();
    best_split_indices(set.samples(), &indices)
}

fn laplace_q15(counts: &[u64; CLASS_COUNT]) -> [u16; CLASS_COUNT] {
    let n = counts.iter().sum::<u64>() as f64;
    let probs = counts.map(|c| (c as f64 + 1.0) / (n + CLASS_COUNT as f64));
    quantize_likelihoods(&probs)
}

/// Train a likelihood tree by greedy recursive splitting.
///
/// Nodes split while `depth < max_depth`, the node holds at least
/// `2·min_leaf` samples, and some split strictly decreases impurity.
/// Leaves carry Laplace-smoothed class frequencies, internal nodes the
/// smoothed mix of their subtree. `max_depth` is capped at [`MAX_DEPTH`].
pub fn train_tree(set: &TrainingSet, max_depth: usize, min_leaf: usize) -> Result<LikelihoodTree, TreeError> {
    if set.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    let max_depth = max_depth.min(MAX_DEPTH);

    fn build(
        samples: &[TrainingSample],
        indices: Vec<u32>,
        depth: usize,
        max_depth: usize,
        min_leaf: usize,
        nodes: &mut Vec<TreeNode>,
    ) -> u16 {
        let counts = counts_of(samples, &indices);
        let likelihoods_q = laplace_q15(&counts);
        let split = if depth < max_depth && indices.len() >= 2 * min_leaf {
            best_split_indices(samples, &indices)
        } else {
            None
        };
        match split {
            None => {
                nodes.push(TreeNode::Leaf { likelihoods_q });
            }
            Some(SplitCandidate { feature, threshold, .. }) => {
                let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices
                    .into_iter()
                    .partition(|&i| samples[i as usize].features.value(feature) < threshold);
                let left = build(samples, left_idx, depth + 1, max_depth, min_leaf, nodes);
                let right = build(samples, right_idx, depth + 1, max_depth, min_leaf, nodes);
                nodes.push(TreeNode::Internal {
                    feature,
                    threshold_q: (threshold * 65536.0).round() as i32,
                    left,
                    right,
                    class_mix_q: likelihoods_q,
                });
            }
        }
        (nodes.len() - 1) as u16
    }

    let mut nodes = Vec::new();
    let indices: Vec<u32> = (0..set.len() as u32).collect();
    let root = build(set.samples(), indices, 0, max_depth, min_leaf, &mut nodes);
    LikelihoodTree::from_nodes(nodes, root)
}

/// Fraction of training samples whose leaf argmax matches their label.
pub fn training_accuracy(tree: &LikelihoodTree, set: &TrainingSet) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let correct = set
        .samples()
        .iter()
        .filter(|s| tree.predict(&s.features) == Ok(s.label))
        .count();
    correct as f64 / set.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;
    use crate::tree::serialize_tree;

    fn fv(power: f64, rhythmicity: f64, stability: f64) -> FeatureVector {
        FeatureVector::new(power, rhythmicity, stability)
    }

    fn set_of(points: &[(f64, f64, ActivityClass)]) -> TrainingSet {
        points
            .iter()
            .map(|&(p, r, label)| (fv(p, r, 0.0), label))
            .collect()
    }

    #[test]
    fn perfectly_separated_classes_split_at_the_midpoint() {
        let set = set_of(&[
            (0.1, 0.0, ActivityClass::Rest),
            (0.1, 0.0, ActivityClass::Rest),
            (0.9, 0.0, ActivityClass::Walk),
            (0.9, 0.0, ActivityClass::Walk),
        ]);
        let split = best_split(&set).unwrap();
        assert_eq!(split.feature, FeatureId::Power);
        assert_eq!(split.threshold, 0.5);
        assert_eq!(split.gain, 0.5);
    }

    #[test]
    fn identical_features_have_no_split() {
        let set = set_of(&[
            (0.4, 0.4, ActivityClass::Rest),
            (0.4, 0.4, ActivityClass::Walk),
            (0.4, 0.4, ActivityClass::Run),
        ]);
        assert!(best_split(&set).is_none());
    }

    #[test]
    fn pure_node_has_no_improving_split() {
        let set = set_of(&[
            (0.1, 0.0, ActivityClass::Walk),
            (0.5, 0.0, ActivityClass::Walk),
            (0.9, 0.0, ActivityClass::Walk),
        ]);
        assert!(best_split(&set).is_none());
    }

    /// Exhaustive scan with direct partitioning and exact rational gain
    /// comparison, written independently of the sweep in `best_split`.
    fn oracle_best_split(set: &TrainingSet) -> Option<(FeatureId, f64)> {
        #[derive(Clone, Copy)]
        struct Frac {
            num: u128,
            den: u128,
        }
        fn weighted_impurity(samples: &[TrainingSample], feature: FeatureId, t: f64) -> Option<Frac> {
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
                return None;
            }
            let sl: u128 = left.iter().map(|c| c * c).sum();
            let sr: u128 = right.iter().map(|c| c * c).sum();
            Some(Frac { num: (nl * nl - sl) * nr + (nr * nr - sr) * nl, den: nl * nr })
        }

        let samples = set.samples();
        let n = samples.len() as u128;
        let mut parent = [0u128; CLASS_COUNT];
        for s in samples {
            parent[s.label.index()] += 1;
        }
        let parent_num = n * n - parent.iter().map(|c| c * c).sum::<u128>();

        let mut best: Option<(Frac, FeatureId, f64)> = None;
        for feature in FeatureId::ALL {
            let mut values: Vec<f64> = samples.iter().map(|s| s.features.value(feature)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for pair in values.windows(2) {
                let t_q = super::snap_threshold(pair[0], pair[1]);
                let t = t_q as f64 / 65536.0;
                if !(pair[0] < t && t <= pair[1]) {
                    continue;
                }
                let Some(w) = weighted_impurity(samples, feature, t) else { continue };
                // ΔG > 0 ⇔ w/n < parent_num/n².
                if w.num * n >= parent_num * w.den {
                    continue;
                }
                if best.is_none_or(|(b, _, _)| w.num * b.den < b.num * w.den) {
                    best = Some((w, feature, t));
                }
            }
        }
        best.map(|(_, feature, t)| (feature, t))
    }

    #[test]
    fn best_split_matches_exhaustive_oracle() {
        let mut rng = SplitMix64::new(101);
        for _ in 0..500 {
            let n = 2 + (rng.next_u64() % 11) as usize;
            let set: TrainingSet = (0..n)
                .map(|_| {
                    let f = fv(rng.next_f64() * 4.0, rng.next_f64(), rng.next_f64());
                    let label = ActivityClass::from_index((rng.next_u64() % 5) as u8).unwrap();
                    (f, label)
                })
                .collect();
            let got = best_split(&set).map(|s| (s.feature, s.threshold));
            assert_eq!(got, oracle_best_split(&set));
        }
    }

    #[test]
    fn pure_set_trains_to_a_single_laplace_leaf() {
        let set: TrainingSet = (0..20)
            .map(|i| (fv(i as f64 * 0.01, 0.0, 0.0), ActivityClass::Run))
            .collect();
        let tree = train_tree(&set, 7, 8).unwrap();
        assert_eq!(tree.node_count(), 1);
        let v = tree.eval(&fv(0.0, 0.0, 0.0)).unwrap();
        // (n+1)/(n+5) = 21/25, quantized.
        assert!((v.0[ActivityClass::Run.index()] - 0.84).abs() < 1e-4);
    }

    #[test]
    fn separable_set_trains_to_depth_one() {
        let set = set_of(
            &std::iter::repeat_n((0.1, 0.0, ActivityClass::Rest), 10)
                .chain(std::iter::repeat_n((0.9, 0.0, ActivityClass::Walk), 10))
                .collect::<Vec<_>>(),
        );
        let tree = train_tree(&set, 7, 8).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(training_accuracy(&tree, &set), 1.0);
    }

    #[test]
    fn xor_layout_needs_two_levels() {
        // Four clusters in an XOR arrangement. The cluster weights are
        // unbalanced: a perfectly balanced XOR has zero first-split gain
        // and greedy training cannot enter it at all.
        let clusters = [
            (0.1, 0.1, ActivityClass::Rest, 10),
            (0.9, 0.9, ActivityClass::Rest, 14),
            (0.1, 0.9, ActivityClass::Walk, 14),
            (0.9, 0.1, ActivityClass::Walk, 10),
        ];
        let set: TrainingSet = clusters
            .iter()
            .flat_map(|&(p, r, label, count)| std::iter::repeat_n((fv(p, r, 0.0), label), count))
            .collect();
        let tree = train_tree(&set, 7, 8).unwrap();
        assert_eq!(tree.depth(), 2);
        assert_eq!(training_accuracy(&tree, &set), 1.0);
    }

    #[test]
    fn training_is_order_independent() {
        let mut rng = SplitMix64::new(55);
        let mut points: Vec<(FeatureVector, ActivityClass)> = (0..200)
            .map(|_| {
                let f = fv(rng.next_f64(), rng.next_f64(), rng.next_f64());
                (f, ActivityClass::from_index((rng.next_u64() % 5) as u8).unwrap())
            })
            .collect();
        let tree_a = train_tree(&points.iter().copied().collect(), 7, 8).unwrap();
        // Deterministic shuffle.
        for i in (1..points.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            points.swap(i, j);
        }
        let tree_b = train_tree(&points.iter().copied().collect(), 7, 8).unwrap();
        assert_eq!(serialize_tree(&tree_a), serialize_tree(&tree_b));
    }

    #[test]
    fn depth_stays_bounded_on_noisy_data() {
        let mut rng = SplitMix64::new(77);
        let set: TrainingSet = (0..2000)
            .map(|_| {
                let f = fv(rng.next_f64(), rng.next_f64(), rng.next_f64());
                (f, ActivityClass::from_index((rng.next_u64() % 5) as u8).unwrap())
            })
            .collect();
        let tree = train_tree(&set, 20, 1).unwrap();
        assert!(tree.depth() <= MAX_DEPTH);
        let tree = train_tree(&set, 3, 8).unwrap();
        assert!(tree.depth() <= 3);
    }

    #[test]
    fn small_nodes_are_not_split() {
        let set = set_of(&[
            (0.1, 0.0, ActivityClass::Rest),
            (0.2, 0.0, ActivityClass::Walk),
            (0.8, 0.0, ActivityClass::Rest),
            (0.9, 0.0, ActivityClass::Walk),
        ]);
        let tree = train_tree(&set, 7, 8).unwrap();
        assert_eq!(tree.node_count(), 1, "4 samples < 2·min_leaf must stay a leaf");
    }

    #[test]
    fn tree_accuracy_dominates_best_single_split() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..20 {
            let n = 20 + (rng.next_u64() % 180) as usize;
            let set: TrainingSet = (0..n)
                .map(|_| {
                    let f = fv(rng.next_f64(), rng.next_f64(), rng.next_f64());
                    (f, ActivityClass::from_index((rng.next_u64() % 4) as u8).unwrap())
                })
                .collect();
            let full = train_tree(&set, 7, 8).unwrap();
            let stump = train_tree(&set, 1, 8).unwrap();
            assert!(training_accuracy(&full, &set) >= training_accuracy(&stump, &set));
        }
    }

    #[test]
    fn empty_set_is_rejected() {
        assert_eq!(train_tree(&TrainingSet::new(), 7, 8).unwrap_err(), TreeError::EmptyTrainingSet);
    }

    #[test]
    fn every_split_decreases_impurity_down_the_tree() {
        let mut rng = SplitMix64::new(123);
        let set: TrainingSet = (0..500)
            .map(|_| {
                let label = ActivityClass::from_index((rng.next_u64() % 4) as u8).unwrap();
                let base = label.index() as f64 * 0.2;
                let f = fv(base + 0.1 * rng.next_f64(), rng.next_f64(), rng.next_f64());
                (f, label)
            })
            .collect();
        let tree = train_tree(&set, 7, 8).unwrap();

        // Re-derive each internal node's sample subset and check ΔG > 0.
        fn check(
            tree: &LikelihoodTree,
            idx: usize,
            samples: Vec<TrainingSample>,
        ) {
            if let TreeNode::Internal { feature, threshold_q, left, right, .. } = &tree.nodes()[idx] {
                let t = f64::from(*threshold_q) / 65536.0;
                let (ls, rs): (Vec<_>, Vec<_>) =
                    samples.iter().partition(|s| s.features.value(*feature) < t);
                let count = |xs: &[&TrainingSample]| {
                    let mut c = [0u64; CLASS_COUNT];
                    xs.iter().for_each(|s| c[s.label.index()] += 1);
                    c
                };
                let (cp, cl, cr) = (
                    count(&samples.iter().collect::<Vec<_>>()),
                    count(&ls.to_vec()),
                    count(&rs.to_vec()),
                );
                let n = samples.len() as f64;
                let gain = gini_impurity(&cp).unwrap()
                    - ls.len() as f64 / n * gini_impurity(&cl).unwrap()
                    - rs.len() as f64 / n * gini_impurity(&cr).unwrap();
                assert!(gain > 0.0, "accepted split must strictly improve impurity");
                check(tree, usize::from(*left), ls.into_iter().copied().collect());
                check(tree, usize::from(*right), rs.into_iter().copied().collect());
            }
        }
        check(&tree, usize::from(tree.root()), set.samples().to_vec());
    }
}
