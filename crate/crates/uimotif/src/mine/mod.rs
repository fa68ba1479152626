//! Motif discovery: repeated subtrees found by bottom-up structural hashing,
//! near-duplicates merged by anti-unification under a normalized
//! edit-distance threshold, and a non-overlapping instance set selected by
//! greedy packing.

mod candidates;
mod canon;
mod merge;
mod pack;

pub use candidates::{collect_candidates, collect_candidates_with_stats};
pub use canon::{canonicalize, CanonicalForm};
pub use merge::merge_near_duplicates;
pub use pack::{covered_nodes, extract_props, optimal_covered_nodes, pack_instances};

use thiserror::Error;

use crate::model::{Blueprint, NodeId, UiTree};

pub(crate) use canon::CandNode;

#[derive(Debug, Clone, PartialEq)]
pub struct MinerConfig {
    /// Normalized tree-edit-distance merge threshold; candidates merge when
    /// `ntd <= eta`.
    pub eta: f64,
    /// Minimum skeleton node count for a motif.
    pub min_size: usize,
    /// Minimum accepted instance count for a template.
    pub min_support: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            eta: 0.15,
            min_size: 2,
            min_support: 2,
        }
    }
}

/// Instrumentation for the linear-time contract on candidate collection.
#[derive(Debug, Clone, Copy)]
pub struct MineStats {
    /// Node visits during hashing and bucket confirmation.
    pub nodes_visited: u64,
    pub tree_size: usize,
}

#[derive(Debug, Error)]
pub enum MineError {
    #[error("node {0} does not exist in the tree")]
    UnknownNode(NodeId),
    #[error("occurrence {node} does not match the skeleton: {reason}")]
    StructuralMismatch { node: NodeId, reason: String },
}

/// Deterministic candidate order: `(size * support)` descending, canonical
/// string ascending.
pub(crate) fn sort_candidates(cands: &mut [MotifCandidate]) {
    cands.sort_by(|a, b| {
        let sa = a.size * a.occurrences.len();
        let sb = b.size * b.occurrences.len();
        sb.cmp(&sa)
            .then_with(|| a.canonical.canonical_string.cmp(&b.canonical.canonical_string))
    });
}

/// A repeated subtree structure: canonical form, matching subtree roots in
/// document order, and skeleton node count.
#[derive(Debug, Clone)]
pub struct MotifCandidate {
    pub canonical: CanonicalForm,
    pub occurrences: Vec<NodeId>,
    pub size: usize,
    pub(crate) skeleton: CandNode,
    /// Preorder position per occurrence, kept so merging can union lists in
    /// document order without re-walking the tree.
    pub(crate) occ_pre: Vec<usize>,
}

/// Full mining pass: collect, merge, pack.
pub fn mine(tree: &UiTree, cfg: &MinerConfig) -> Result<Blueprint, MineError> {
    mine_with_stats(tree, cfg).map(|(bp, _)| bp)
}

pub fn mine_with_stats(
    tree: &UiTree,
    cfg: &MinerConfig,
) -> Result<(Blueprint, MineStats), MineError> {
    let (cands, stats) = collect_candidates_with_stats(tree, cfg);
    let merged = merge_near_duplicates(cands, cfg);
    let bp = pack_instances(&merged, tree, cfg)?;
    Ok((bp, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn disjoint_candidates_are_both_packed() {
        let tree = demo::two_disjoint_motifs();
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(bp.templates.len(), 2);
        bp.validate().unwrap();
    }

    #[test]
    fn inner_motif_starves_overlapping_outer_one() {
        // outer rows-of-cards: support 3, size 16 -> score 48
        // inner cards: support 12, size 5 -> score 60; inner packs first and
        // claims every node the outer occurrences need
        let tree = demo::starved_outer_fixture();
        let cands = collect_candidates(&tree, &MinerConfig::default());
        let outer = cands.iter().find(|c| c.size == 16).expect("outer candidate");
        let inner = cands.iter().find(|c| c.size == 5).expect("inner candidate");
        assert_eq!(outer.occurrences.len(), 3);
        assert_eq!(inner.occurrences.len(), 12);

        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(bp.templates.len(), 1);
        assert_eq!(bp.templates[0].support, 12);
        assert_eq!(bp.templates[0].skeleton.size(), 5);
    }

    #[test]
    fn three_consecutive_siblings_form_a_loop_group() {
        let tree = demo::repeated_cards(3);
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(bp.loop_groups.len(), 1);
        assert_eq!(bp.loop_groups[0].members.len(), 3);
        bp.validate().unwrap();
    }

    #[test]
    fn interleaved_instances_do_not_loop() {
        let tree = demo::interleaved_cards();
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(bp.instances.len(), 4);
        assert!(bp.loop_groups.is_empty(), "{:?}", bp.loop_groups);
    }

    #[test]
    fn constant_payloads_stay_constant() {
        // every card carries the same "Buy now" text; only media varies
        let tree = demo::cards_with_constant_text(3);
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(bp.templates.len(), 1);
        let t = &bp.templates[0];
        assert_eq!(t.props.len(), 1, "props: {:?}", t.props);
        assert!(t.props[0].name.starts_with("media_"));
    }

    #[test]
    fn mining_is_deterministic() {
        let tree = demo::demo_document();
        let a = mine(&tree, &MinerConfig::default()).unwrap();
        let b = mine(&tree, &MinerConfig::default()).unwrap();
        assert_eq!(
            crate::model::serialize_blueprint(&a),
            crate::model::serialize_blueprint(&b)
        );
    }

    #[test]
    fn expansion_reproduces_the_tree() {
        let tree = demo::demo_document();
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        let expanded = bp.expanded_tree().unwrap();
        assert_eq!(
            crate::metrics::tree_edit_distance_with(
                &expanded,
                &bp.tree,
                crate::metrics::LabelMode::Strict
            ),
            0
        );
    }
}
