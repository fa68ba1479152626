//! Near-duplicate merging: candidate pairs within a 30% size gate are merged
//! by anti-unification when their normalized tree edit distance is at most
//! the configured threshold.

use std::collections::HashMap;

use crate::metrics::{tree_distance, LabelInterner, PlainTree};
use crate::model::PayloadTag;

use super::canon::{CandNode, CandPayload};
use super::{MinerConfig, MotifCandidate};

/// Candidate pairs are only compared when their skeleton sizes differ by at
/// most 30% of the larger one.
const SIZE_GATE: f64 = 0.30;

fn size_compatible(a: usize, b: usize) -> bool {
    let max = a.max(b) as f64;
    let min = a.min(b) as f64;
    (max - min) / max <= SIZE_GATE
}

fn flatten(skel: &CandNode, interner: &mut LabelInterner<String>) -> PlainTree {
    PlainTree::build(
        skel,
        |n: &CandNode| n.children.iter().collect(),
        |n: &CandNode| {
            let key = match n.payload {
                CandPayload::Value(t) => format!("{}|{}", n.kind, t.as_str()),
                CandPayload::Slot(t) => format!("{}|slot:{}", n.kind, t.as_str()),
            };
            interner.intern(key)
        },
    )
}

/// Normalized tree edit distance between two candidate skeletons:
/// `TED / max(size_a, size_b)` with unit costs over canonical labels.
pub(crate) fn normalized_distance(a: &CandNode, b: &CandNode) -> f64 {
    let mut interner = LabelInterner::new();
    let pa = flatten(a, &mut interner);
    let pb = flatten(b, &mut interner);
    let ted = tree_distance(&pa, &pb);
    ted as f64 / a.size().max(b.size()) as f64
}

/// Most specific common generalization of two skeletons.
///
/// Kinds must agree at every aligned position. A payload-type mismatch at an
/// aligned site becomes a typed slot when one side is the absent payload
/// (`none`); incompatible concrete types reject the pair. Children of equal
/// arity align positionally and every position must generalize; unequal
/// arities align by longest common compatible subsequence and unmatched
/// children are dropped, leaving the common structure.
pub(crate) fn anti_unify(a: &CandNode, b: &CandNode) -> Option<CandNode> {
    if a.kind != b.kind {
        return None;
    }
    let payload = match (a.payload, b.payload) {
        (CandPayload::Value(x), CandPayload::Value(y)) if x == y => CandPayload::Value(x),
        (CandPayload::Value(PayloadTag::None), CandPayload::Value(y)) => CandPayload::Slot(y),
        (CandPayload::Value(x), CandPayload::Value(PayloadTag::None)) => CandPayload::Slot(x),
        (CandPayload::Slot(x), CandPayload::Slot(y)) if x == y => CandPayload::Slot(x),
        (CandPayload::Slot(x), CandPayload::Value(y)) if x == y || y == PayloadTag::None => {
            CandPayload::Slot(x)
        }
        (CandPayload::Value(y), CandPayload::Slot(x)) if x == y || y == PayloadTag::None => {
            CandPayload::Slot(x)
        }
        _ => return None,
    };
    let children = if a.children.len() == b.children.len() {
        let mut out = Vec::with_capacity(a.children.len());
        for (ca, cb) in a.children.iter().zip(b.children.iter()) {
            out.push(anti_unify(ca, cb)?);
        }
        out
    } else {
        align_subsequence(&a.children, &b.children)
    };
    Some(CandNode {
        kind: a.kind,
        payload,
        children,
    })
}

/// Longest common subsequence over children where a match means the pair
/// anti-unifies; returns the generalized aligned children in order.
fn align_subsequence(a: &[CandNode], b: &[CandNode]) -> Vec<CandNode> {
    let n = a.len();
    let m = b.len();
    let mut memo: HashMap<(usize, usize), Option<CandNode>> = HashMap::new();
    let mut compat = |i: usize, j: usize, memo: &mut HashMap<(usize, usize), Option<CandNode>>| {
        memo.entry((i, j))
            .or_insert_with(|| anti_unify(&a[i], &b[j]))
            .is_some()
    };
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let skip = lcs[i + 1][j].max(lcs[i][j + 1]);
            let take = if compat(i, j, &mut memo) {
                lcs[i + 1][j + 1] + 1
            } else {
                0
            };
            lcs[i][j] = skip.max(take);
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if compat(i, j, &mut memo) && lcs[i + 1][j + 1] + 1 == lcs[i][j] {
            out.push(memo[&(i, j)].clone().unwrap());
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn merge_pair(a: &MotifCandidate, b: &MotifCandidate, merged_skel: CandNode) -> MotifCandidate {
    let mut pairs: Vec<(usize, crate::model::NodeId)> = a
        .occ_pre
        .iter()
        .copied()
        .zip(a.occurrences.iter().copied())
        .chain(b.occ_pre.iter().copied().zip(b.occurrences.iter().copied()))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let size = merged_skel.size();
    MotifCandidate {
        canonical: merged_skel.canonical(),
        occurrences: pairs.iter().map(|(_, id)| *id).collect(),
        occ_pre: pairs.iter().map(|(p, _)| *p).collect(),
        size,
        skeleton: merged_skel,
    }
}

/// One merging pass over the deterministic candidate order, repeated to a
/// fixpoint. Merging unions occurrence lists; whether a given occurrence
/// still matches the generalized skeleton is decided later, during packing.
pub fn merge_near_duplicates(
    mut cands: Vec<MotifCandidate>,
    cfg: &MinerConfig,
) -> Vec<MotifCandidate> {
    let min_size = cfg.min_size.max(2);
    loop {
        super::sort_candidates(&mut cands);
        let mut merged_any = false;
        let mut i = 0;
        while i < cands.len() {
            let mut j = i + 1;
            while j < cands.len() {
                let (ci, cj) = (&cands[i], &cands[j]);
                if size_compatible(ci.size, cj.size)
                    && normalized_distance(&ci.skeleton, &cj.skeleton) <= cfg.eta
                {
                    if let Some(au) = anti_unify(&ci.skeleton, &cj.skeleton) {
                        if au.size() >= min_size {
                            let merged = merge_pair(ci, cj, au);
                            cands[i] = merged;
                            cands.remove(j);
                            merged_any = true;
                            continue;
                        }
                    }
                }
                j += 1;
            }
            i += 1;
        }
        if !merged_any {
            return cands;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::mine::collect_candidates;

    #[test]
    fn eta_zero_keeps_candidates_apart() {
        let tree = demo::card_variants_fixture();
        let cands = collect_candidates(&tree, &MinerConfig::default());
        assert_eq!(cands.len(), 2);
        let merged = merge_near_duplicates(cands, &MinerConfig { eta: 0.0, ..Default::default() });
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn card_variants_merge_exactly_above_one_sixth() {
        // sizes 5 and 6, TED 1 => ntd = 1/6
        let tree = demo::card_variants_fixture();
        let cands = collect_candidates(&tree, &MinerConfig::default());
        assert_eq!(cands.len(), 2);
        let d = normalized_distance(&cands[0].skeleton, &cands[1].skeleton);
        assert!((d - 1.0 / 6.0).abs() < 1e-12, "ntd = {d}");

        let at = |eta: f64| {
            merge_near_duplicates(
                collect_candidates(&tree, &MinerConfig::default()),
                &MinerConfig { eta, ..Default::default() },
            )
            .len()
        };
        assert_eq!(at(0.10), 2);
        assert_eq!(at(0.20), 1);
    }

    #[test]
    fn size_gate_blocks_distant_sizes() {
        // (10 - 4) / 10 = 0.6 > 0.3: never compared even at eta = 1 - eps
        assert!(!size_compatible(4, 10));
        assert!(size_compatible(5, 6));
        assert!(size_compatible(7, 10));
    }

    #[test]
    fn merged_skeleton_keeps_common_structure() {
        let tree = demo::card_variants_fixture();
        let cands = collect_candidates(&tree, &MinerConfig::default());
        let merged = merge_near_duplicates(cands, &MinerConfig { eta: 0.2, ..Default::default() });
        assert_eq!(merged.len(), 1);
        // the 6-node variant has one extra trailing link; common structure is
        // the 5-node card, occurrences are unioned
        assert_eq!(merged[0].size, 5);
        assert_eq!(merged[0].occurrences.len(), 4);
    }
}
