//! Candidate collection: one bottom-up hashing pass, bucketing by hash,
//! canonical confirmation within buckets.

use std::collections::HashMap;

use crate::model::{NodeId, UiTree};

use super::canon::{hash_all, CandNode};
use super::{MinerConfig, MineStats, MotifCandidate};

/// Structural equality of two subtrees at the payload-type level, counting
/// every visited node pair toward the shared visit budget.
fn confirm_equal(tree: &UiTree, a: NodeId, b: NodeId, visits: &mut u64) -> bool {
    *visits += 1;
    let na = tree.node(a);
    let nb = tree.node(b);
    if na.kind != nb.kind
        || na.payload.tag() != nb.payload.tag()
        || na.children.len() != nb.children.len()
    {
        return false;
    }
    na.children
        .iter()
        .zip(nb.children.iter())
        .all(|(ca, cb)| confirm_equal(tree, *ca, *cb, visits))
}

pub fn collect_candidates(tree: &UiTree, cfg: &MinerConfig) -> Vec<MotifCandidate> {
    collect_candidates_with_stats(tree, cfg).0
}

/// Bucket subtree roots by canonical hash and emit one candidate per
/// confirmed group with enough support and size. Candidates come out sorted
/// by `(size * support)` descending, ties broken by canonical string.
pub fn collect_candidates_with_stats(
    tree: &UiTree,
    cfg: &MinerConfig,
) -> (Vec<MotifCandidate>, MineStats) {
    let mut visits: u64 = 0;
    let (hashes, sizes) = hash_all(tree, &mut visits);

    let min_support = cfg.min_support.max(2);
    let min_size = cfg.min_size.max(2);

    // bucket in document order so occurrence lists come out ordered
    let mut buckets: HashMap<u128, Vec<NodeId>> = HashMap::new();
    for id in tree.preorder() {
        if sizes[id] >= min_size {
            buckets.entry(hashes[id]).or_default().push(*id);
        }
    }

    let mut candidates = Vec::new();
    for (_, members) in buckets {
        if members.len() < min_support {
            continue;
        }
        // hash equality is necessary but never sufficient: split the bucket
        // into canonically equal groups
        let mut groups: Vec<Vec<NodeId>> = Vec::new();
        for m in members {
            let mut placed = false;
            for g in groups.iter_mut() {
                if confirm_equal(tree, g[0], m, &mut visits) {
                    g.push(m);
                    placed = true;
                    break;
                }
            }
            if !placed {
                groups.push(vec![m]);
            }
        }
        for g in groups {
            if g.len() < min_support {
                continue;
            }
            let skeleton = CandNode::from_tree(tree, g[0]);
            let size = skeleton.size();
            let occ_pre: Vec<usize> = g.iter().map(|id| tree.preorder_index(*id)).collect();
            candidates.push(MotifCandidate {
                canonical: skeleton.canonical(),
                occurrences: g,
                size,
                skeleton,
                occ_pre,
            });
        }
    }

    super::sort_candidates(&mut candidates);
    (candidates, MineStats {
        nodes_visited: visits,
        tree_size: tree.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn no_repeats_means_no_candidates() {
        let tree = demo::tree_of(&[
            (0, "frame", "", &[1, 2]),
            (1, "text", "a", &[]),
            (2, "media", "m", &[]),
        ]);
        let cands = collect_candidates(&tree, &MinerConfig::default());
        assert!(cands.is_empty());
    }

    #[test]
    fn four_identical_cards_one_candidate() {
        let tree = demo::repeated_cards(4);
        let cands = collect_candidates(&tree, &MinerConfig::default());
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].occurrences.len(), 4);
        assert_eq!(cands[0].size, 4);
    }

    #[test]
    fn nested_repetition_yields_both_candidates() {
        // repeated rows each containing repeated tiles: both motifs present
        // before packing
        let tree = demo::nested_motif_fixture();
        let cands = collect_candidates(&tree, &MinerConfig::default());
        let sizes: Vec<usize> = cands.iter().map(|c| c.size).collect();
        assert!(sizes.contains(&7), "outer row candidate missing: {sizes:?}");
        assert!(sizes.contains(&3), "inner card candidate missing: {sizes:?}");
    }

    #[test]
    fn visit_counter_is_linear() {
        let tree = demo::repeated_cards(50);
        let (_, stats) = collect_candidates_with_stats(&tree, &MinerConfig::default());
        assert!(
            stats.nodes_visited <= 3 * stats.tree_size as u64,
            "{} visits for {} nodes",
            stats.nodes_visited,
            stats.tree_size
        );
    }
}
