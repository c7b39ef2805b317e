//! Depth-bounded binary likelihood tree: inference, Gini-split training,
//! and the versioned on-disk format.
//!
//! Nodes store their constants in the serialized precision (Q16.16
//! thresholds, Q1.15 likelihoods); the float backend dequantizes exactly,
//! so both backends route against identical values and a save/load cycle
//! never changes inference behavior.

mod format;
mod train;

pub use format::{deserialize_tree, serialize_tree, FormatError, FLAG_Q15_LIKELIHOODS, FORMAT_VERSION, MAGIC};
pub use train::{
    best_split, train_tree, training_accuracy, SplitCandidate, TrainingSample, TrainingSet,
    DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::FeatureVector;

/// Number of activity classes.
pub const CLASS_COUNT: usize = 5;
/// Maximum tree depth, root at depth 0.
pub const MAX_DEPTH: usize = 7;
/// Maximum node count (a full depth-7 tree).
pub const MAX_NODES: usize = 255;
/// Q1.15 representation of probability one.
pub(crate) const Q15_ONE: i32 = 1 << 15;

/// The five output classes. The numeric order is load-bearing: ties in
/// argmax decisions break toward the lower value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ActivityClass {
    Rest = 0,
    Walk = 1,
    Run = 2,
    Bike = 3,
    Other = 4,
}

impl ActivityClass {
    pub const ALL: [ActivityClass; CLASS_COUNT] = [
        ActivityClass::Rest,
        ActivityClass::Walk,
        ActivityClass::Run,
        ActivityClass::Bike,
        ActivityClass::Other,
    ];

    /// The classes the tree is trained to detect; `Other` is produced only
    /// by the decision threshold.
    pub const TRAINED: [ActivityClass; 4] = [
        ActivityClass::Rest,
        ActivityClass::Walk,
        ActivityClass::Run,
        ActivityClass::Bike,
    ];

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(usize::from(index)).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityClass::Rest => "rest",
            ActivityClass::Walk => "walk",
            ActivityClass::Run => "run",
            ActivityClass::Bike => "bike",
            ActivityClass::Other => "other",
        }
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown activity class `{s}`"))
    }
}

/// The three tree predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FeatureId {
    Power = 0,
    Rhythmicity = 1,
    FreqStability = 2,
}

impl FeatureId {
    pub const ALL: [FeatureId; 3] = [FeatureId::Power, FeatureId::Rhythmicity, FeatureId::FreqStability];

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(usize::from(index)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Power => "power",
            FeatureId::Rhythmicity => "rhythmicity",
            FeatureId::FreqStability => "freq_stability",
        }
    }
}

/// Five class likelihoods in float form, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodVector(pub [f64; CLASS_COUNT]);

impl LikelihoodVector {
    pub fn from_q15(q: &[u16; CLASS_COUNT]) -> Self {
        Self(q.map(|v| f64::from(v) / f64::from(Q15_ONE as u16)))
    }

    /// Argmax over all five classes, ties toward the lower index.
    pub fn argmax(&self) -> ActivityClass {
        let mut best = 0;
        for i in 1..CLASS_COUNT {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        ActivityClass::from_index(best as u8).unwrap()
    }
}

/// Quantize a probability vector to Q1.15 with the integer sum pinned to
/// exactly one, distributing rounding drift over the largest components.
pub(crate) fn quantize_likelihoods(probs: &[f64; CLASS_COUNT]) -> [u16; CLASS_COUNT] {
    let mut q = [0i32; CLASS_COUNT];
    for (slot, &p) in q.iter_mut().zip(probs) {
        *slot = ((p * f64::from(Q15_ONE) + 0.5).floor() as i32).clamp(0, Q15_ONE - 1);
    }
    let mut diff = Q15_ONE - q.iter().sum::<i32>();
    while diff != 0 {
        let step = diff.signum();
        // Largest adjustable component, ties toward the lower index.
        let idx = (0..CLASS_COUNT)
            .filter(|&i| if step > 0 { q[i] < Q15_ONE - 1 } else { q[i] > 0 })
            .max_by_key(|&i| q[i])
            .expect("likelihood fix-up always has an adjustable component");
        q[idx] += step;
        diff -= step;
    }
    q.map(|v| v as u16)
}

/// Structural and training failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("class counts are all zero")]
    EmptyCounts,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("malformed tree: {0}")]
    Malformed(&'static str),
}

/// One node of the likelihood tree. Internal nodes keep the class mix of
/// their subtree so the serialized form can support early exit later;
/// inference reads leaves only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Internal {
        feature: FeatureId,
        /// Q16.16 split threshold in feature units.
        threshold_q: i32,
        left: u16,
        right: u16,
        class_mix_q: [u16; CLASS_COUNT],
    },
    Leaf {
        likelihoods_q: [u16; CLASS_COUNT],
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Float view of the node's threshold (exact dequantization).
    pub fn threshold(&self) -> Option<f64> {
        match self {
            TreeNode::Internal { threshold_q, .. } => Some(f64::from(*threshold_q) / 65536.0),
            TreeNode::Leaf { .. } => None,
        }
    }
}

/// A validated likelihood tree over a contiguous node array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LikelihoodTree {
    nodes: Vec<TreeNode>,
    root: u16,
}

impl LikelihoodTree {
    /// Validate and adopt a node array: bounds-checked child indices, a
    /// single acyclic tree reaching every node, depth ≤ [`MAX_DEPTH`], and
    /// likelihood sums within one Q1.15 quantum of one.
    pub fn from_nodes(nodes: Vec<TreeNode>, root: u16) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Malformed("empty node array"));
        }
        if nodes.len() > MAX_NODES {
            return Err(TreeError::Malformed("node count exceeds 255"));
        }
        if usize::from(root) >= nodes.len() {
            return Err(TreeError::Malformed("root index out of range"));
        }
        for node in &nodes {
            let q = match node {
                TreeNode::Internal { class_mix_q, .. } => class_mix_q,
                TreeNode::Leaf { likelihoods_q } => likelihoods_q,
            };
            let sum: i64 = q.iter().map(|&v| i64::from(v)).sum();
            if (sum - i64::from(Q15_ONE)).abs() > 1 {
                return Err(TreeError::Malformed("likelihoods do not sum to one"));
            }
        }
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![(usize::from(root), 0usize)];
        while let Some((idx, depth)) = stack.pop() {
            if depth > MAX_DEPTH {
                return Err(TreeError::Malformed("depth exceeds 7"));
            }
            if visited[idx] {
                return Err(TreeError::Malformed("node reached twice (shared child or cycle)"));
            }
            visited[idx] = true;
            if let TreeNode::Internal { left, right, .. } = &nodes[idx] {
                for child in [*left, *right] {
                    if usize::from(child) >= nodes.len() {
                        return Err(TreeError::Malformed("child index out of range"));
                    }
                    stack.push((usize::from(child), depth + 1));
                }
            }
        }
        if !visited.iter().all(|&v| v) {
            return Err(TreeError::Malformed("unreachable nodes in array"));
        }
        Ok(Self { nodes, root })
    }

    /// Single-leaf tree with the given Q1.15 likelihoods.
    pub fn leaf(likelihoods_q: [u16; CLASS_COUNT]) -> Result<Self, TreeError> {
        Self::from_nodes(vec![TreeNode::Leaf { likelihoods_q }], 0)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> u16 {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn depth_below(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + depth_below(nodes, usize::from(*left)).max(depth_below(nodes, usize::from(*right)))
                }
            }
        }
        depth_below(&self.nodes, usize::from(self.root))
    }

    /// Walk to a leaf, routing left when `go_left(feature, threshold_q)`.
    /// Bounds and hop count are checked so a hand-built malformed tree
    /// yields an error instead of looping or panicking.
    fn walk(&self, mut go_left: impl FnMut(FeatureId, i32) -> bool) -> Result<&[u16; CLASS_COUNT], TreeError> {
        let mut idx = usize::from(self.root);
        for _ in 0..=MAX_DEPTH {
            match self.nodes.get(idx).ok_or(TreeError::Malformed("node index out of range"))? {
                TreeNode::Leaf { likelihoods_q } => return Ok(likelihoods_q),
                TreeNode::Internal { feature, threshold_q, left, right, .. } => {
                    idx = usize::from(if go_left(*feature, *threshold_q) { *left } else { *right });
                }
            }
        }
        Err(TreeError::Malformed("walk exceeded maximum depth"))
    }

    /// Route a feature vector to its leaf likelihoods (float view).
    pub fn eval(&self, features: &FeatureVector) -> Result<LikelihoodVector, TreeError> {
        self.eval_q15(features).map(LikelihoodVector::from_q15)
    }

    /// As [`eval`](Self::eval) but returning the leaf's raw Q1.15 vector.
    pub fn eval_q15(&self, features: &FeatureVector) -> Result<&[u16; CLASS_COUNT], TreeError> {
        self.walk(|feature, threshold_q| features.value(feature) < f64::from(threshold_q) / 65536.0)
    }

    /// Integer-backend routing: features given in Q16.16.
    pub fn eval_fixed(&self, features_q: &[i32; 3]) -> Result<&[u16; CLASS_COUNT], TreeError> {
        self.walk(|feature, threshold_q| features_q[feature as usize] < threshold_q)
    }

    /// Class with the highest leaf likelihood for the given features.
    pub fn predict(&self, features: &FeatureVector) -> Result<ActivityClass, TreeError> {
        self.eval(features).map(|v| v.argmax())
    }
}

/// Gini diversity index of a class-count vector: `1 − Σ (c/total)²`.
///
/// Evaluated as `(total² − Σc²) / total²` so the division is the only
/// inexact step; the unit values 0, 0.5 and 0.8 come out exact.
pub fn gini_impurity(class_counts: &[u64; CLASS_COUNT]) -> Result<f64, TreeError> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(TreeError::EmptyCounts);
    }
    let total_sq = (total as u128) * (total as u128);
    let sum_sq: u128 = class_counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    Ok(((total_sq - sum_sq) as f64) / (total_sq as f64))
}
