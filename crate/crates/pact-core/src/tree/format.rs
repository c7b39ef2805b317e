//! The `PACT` tree file: a small versioned little-endian format with a
//! trailing CRC-32, sized for flash storage.
//!
//! ```text
//! magic    4 B   "PACT"
//! version  2 B   u16, currently 1
//! flags    2 B   u16, bit 0 set: likelihoods stored as Q1.15
//! count    2 B   u16 node count (≤ 255)
//! root     2 B   u16 root index
//! nodes    20 B each:
//!   kind       u8   0 internal, 1 leaf
//!   feature    u8   predictor id (0 for leaves)
//!   threshold  i32  Q16.16 split value (0 for leaves)
//!   left       u16  child index (0 for leaves)
//!   right      u16  child index (0 for leaves)
//!   likelihood 5×u16 Q1.15; leaf output, or the subtree mix on internals
//! crc      4 B   CRC-32 (IEEE) over every preceding byte
//! ```
//!
//! Decoding is strict: unused leaf fields must be zero so that
//! serialize ∘ deserialize is the identity on bytes.

use thiserror::Error;

use super::{FeatureId, LikelihoodTree, TreeError, TreeNode, CLASS_COUNT};

pub const MAGIC: [u8; 4] = *b"PACT";
pub const FORMAT_VERSION: u16 = 1;
/// Flag bit 0: likelihood fields hold Q1.15 values.
pub const FLAG_Q15_LIKELIHOODS: u16 = 1;

const HEADER_LEN: usize = 12;
const RECORD_LEN: usize = 20;
const CRC_LEN: usize = 4;

const KIND_INTERNAL: u8 = 0;
const KIND_LEAF: u8 = 1;

/// Decoding failures, one variant per way a stream can be bad.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("stream too short: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported flags {0:#06x}")]
    UnsupportedFlags(u16),
    #[error("node {index}: unknown kind {kind}")]
    BadNodeKind { index: usize, kind: u8 },
    #[error("node {index}: unknown feature id {feature}")]
    BadFeatureId { index: usize, feature: u8 },
    #[error("node {index}: leaf with non-zero routing fields")]
    NonCanonicalLeaf { index: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("{0} trailing bytes after checksum")]
    TrailingBytes(usize),
    #[error(transparent)]
    Structure(#[from] TreeError),
}

/// Encode a tree into the `PACT` byte format.
pub fn serialize_tree(tree: &LikelihoodTree) -> Vec<u8> {
    let nodes = tree.nodes();
    let mut out = Vec::with_capacity(HEADER_LEN + nodes.len() * RECORD_LEN + CRC_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&FLAG_Q15_LIKELIHOODS.to_le_bytes());
    out.extend_from_slice(&(nodes.len() as u16).to_le_bytes());
    out.extend_from_slice(&tree.root().to_le_bytes());
    for node in nodes {
        match node {
            TreeNode::Internal { feature, threshold_q, left, right, class_mix_q } => {
                out.push(KIND_INTERNAL);
                out.push(*feature as u8);
                out.extend_from_slice(&threshold_q.to_le_bytes());
                out.extend_from_slice(&left.to_le_bytes());
                out.extend_from_slice(&right.to_le_bytes());
                for q in class_mix_q {
                    out.extend_from_slice(&q.to_le_bytes());
                }
            }
            TreeNode::Leaf { likelihoods_q } => {
                out.push(KIND_LEAF);
                out.push(0);
                out.extend_from_slice(&0i32.to_le_bytes());
                out.extend_from_slice(&0u16.to_le_bytes());
                out.extend_from_slice(&0u16.to_le_bytes());
                for q in likelihoods_q {
                    out.extend_from_slice(&q.to_le_bytes());
                }
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

/// Decode and fully validate a `PACT` byte stream.
pub fn deserialize_tree(bytes: &[u8]) -> Result<LikelihoodTree, FormatError> {
    let need = |expected: usize| -> Result<(), FormatError> {
        if bytes.len() < expected {
            Err(FormatError::Truncated { expected, actual: bytes.len() })
        } else {
            Ok(())
        }
    };
    need(HEADER_LEN + CRC_LEN)?;
    let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = read_u16(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let flags = read_u16(bytes, 6);
    if flags != FLAG_Q15_LIKELIHOODS {
        return Err(FormatError::UnsupportedFlags(flags));
    }
    let node_count = usize::from(read_u16(bytes, 8));
    let root = read_u16(bytes, 10);
    let total = HEADER_LEN + node_count * RECORD_LEN + CRC_LEN;
    need(total)?;
    if bytes.len() > total {
        return Err(FormatError::TrailingBytes(bytes.len() - total));
    }

    let stored = u32::from_le_bytes(bytes[total - CRC_LEN..].try_into().expect("length checked"));
    let computed = crc32fast::hash(&bytes[..total - CRC_LEN]);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }

    let mut nodes = Vec::with_capacity(node_count);
    for index in 0..node_count {
        let rec = &bytes[HEADER_LEN + index * RECORD_LEN..HEADER_LEN + (index + 1) * RECORD_LEN];
        let kind = rec[0];
        let feature = rec[1];
        let threshold_q = i32::from_le_bytes(rec[2..6].try_into().expect("fixed record layout"));
        let left = u16::from_le_bytes([rec[6], rec[7]]);
        let right = u16::from_le_bytes([rec[8], rec[9]]);
        let mut likelihoods_q = [0u16; CLASS_COUNT];
        for (k, slot) in likelihoods_q.iter_mut().enumerate() {
            *slot = u16::from_le_bytes([rec[10 + 2 * k], rec[11 + 2 * k]]);
        }
        match kind {
            KIND_INTERNAL => {
                let feature = FeatureId::from_index(feature)
                    .ok_or(FormatError::BadFeatureId { index, feature })?;
                nodes.push(TreeNode::Internal {
                    feature,
                    threshold_q,
                    left,
                    right,
                    class_mix_q: likelihoods_q,
                });
            }
            KIND_LEAF => {
                if feature != 0 || threshold_q != 0 || left != 0 || right != 0 {
                    return Err(FormatError::NonCanonicalLeaf { index });
                }
                nodes.push(TreeNode::Leaf { likelihoods_q });
            }
            kind => return Err(FormatError::BadNodeKind { index, kind }),
        }
    }

    Ok(LikelihoodTree::from_nodes(nodes, root)?)
}
