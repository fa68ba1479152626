//! Ordered tree edit distance with unit insert/delete/relabel costs
//! (Zhang & Shasha). Node labels default to `(kind, payload type)`; strict
//! mode also compares payload values.

use std::collections::HashMap;

use crate::model::{NodeId, UiTree};

/// Which node attributes participate in the label comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// `(kind, payload type)` — content edits do not count as structure edits.
    #[default]
    Structural,
    /// `(kind, payload type, payload value)`.
    Strict,
}

/// A tree flattened into left-to-right postorder with interned labels; the
/// input shape for the distance kernel.
pub struct PlainTree {
    labels: Vec<u32>,
    /// leftmost leaf descendant, per postorder index
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl PlainTree {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Flatten an arbitrary tree. `children` yields child handles in sibling
    /// order; `label` must return equal ids exactly for equal labels.
    pub fn build<T: Copy>(
        root: T,
        children: impl Fn(T) -> Vec<T>,
        mut label: impl FnMut(T) -> u32,
    ) -> PlainTree {
        let mut labels = Vec::new();
        let mut lld = Vec::new();
        // iterative postorder; a subtree entered when `mark` labels were
        // emitted occupies postorder positions mark..=idx, and position mark
        // is its leftmost leaf.
        enum Frame<T> {
            Enter(T),
            Exit(T, usize),
        }
        let mut stack = vec![Frame::Enter(root)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(n) => {
                    let mark = labels.len();
                    stack.push(Frame::Exit(n, mark));
                    let kids = children(n);
                    for c in kids.into_iter().rev() {
                        stack.push(Frame::Enter(c));
                    }
                }
                Frame::Exit(n, mark) => {
                    labels.push(label(n));
                    lld.push(mark);
                }
            }
        }
        // keyroots: nodes with no left sibling sharing the same lld, i.e. the
        // highest node for each leftmost-leaf value
        let n = labels.len();
        let mut highest: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            highest.insert(lld[i], i);
        }
        let mut keyroots: Vec<usize> = highest.values().copied().collect();
        keyroots.sort_unstable();
        PlainTree {
            labels,
            lld,
            keyroots,
        }
    }
}

/// Core Zhang-Shasha dynamic program over two flattened trees.
pub fn tree_distance(a: &PlainTree, b: &PlainTree) -> usize {
    let n = a.len();
    let m = b.len();
    if n == 0 {
        return m;
    }
    if m == 0 {
        return n;
    }
    let mut td = vec![vec![0usize; m]; n];
    // forest distance scratch, 1-based with a zero row/column
    let mut fd = vec![vec![0usize; m + 1]; n + 1];
    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let li = a.lld[i];
            let lj = b.lld[j];
            // fd row for postorder position p is p - li + 1; row 0 is the
            // empty forest boundary
            fd[0][0] = 0;
            for p in li..=i {
                fd[p - li + 1][0] = fd[p - li][0] + 1;
            }
            for q in lj..=j {
                fd[0][q - lj + 1] = fd[0][q - lj] + 1;
            }
            for p in li..=i {
                for q in lj..=j {
                    let rp = p - li + 1;
                    let rq = q - lj + 1;
                    let del = fd[rp - 1][rq] + 1;
                    let ins = fd[rp][rq - 1] + 1;
                    if a.lld[p] == li && b.lld[q] == lj {
                        let relabel = if a.labels[p] == b.labels[q] { 0 } else { 1 };
                        let sub = fd[rp - 1][rq - 1] + relabel;
                        let best = del.min(ins).min(sub);
                        fd[rp][rq] = best;
                        td[p][q] = best;
                    } else {
                        // distance between the closed subtrees at p, q was
                        // already computed by an earlier keyroot pair
                        let sub = fd[a.lld[p] - li][b.lld[q] - lj] + td[p][q];
                        fd[rp][rq] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// Intern arbitrary hashable labels into dense u32 ids shared by both trees.
pub struct LabelInterner<K> {
    map: HashMap<K, u32>,
}

impl<K: std::hash::Hash + Eq> LabelInterner<K> {
    pub fn new() -> Self {
        LabelInterner {
            map: HashMap::new(),
        }
    }

    pub fn intern(&mut self, key: K) -> u32 {
        let next = self.map.len() as u32;
        *self.map.entry(key).or_insert(next)
    }
}

impl<K: std::hash::Hash + Eq> Default for LabelInterner<K> {
    fn default() -> Self {
        Self::new()
    }
}

fn flatten_ui(tree: &UiTree, mode: LabelMode, interner: &mut LabelInterner<String>) -> PlainTree {
    PlainTree::build(
        tree.root(),
        |id: NodeId| tree.node(id).children.clone(),
        |id: NodeId| {
            let n = tree.node(id);
            let key = match mode {
                LabelMode::Structural => format!("{}|{}", n.kind, n.payload.tag().as_str()),
                LabelMode::Strict => format!(
                    "{}|{}|{}",
                    n.kind,
                    n.payload.tag().as_str(),
                    n.payload.value().unwrap_or("")
                ),
            };
            interner.intern(key)
        },
    )
}

/// Exact ordered tree edit distance between two UI trees.
pub fn tree_edit_distance(a: &UiTree, b: &UiTree) -> usize {
    tree_edit_distance_with(a, b, LabelMode::Structural)
}

pub fn tree_edit_distance_with(a: &UiTree, b: &UiTree, mode: LabelMode) -> usize {
    let mut interner = LabelInterner::new();
    let pa = flatten_ui(a, mode, &mut interner);
    let pb = flatten_ui(b, mode, &mut interner);
    tree_distance(&pa, &pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeKind, Payload, UiNode};

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
    fn identical_trees_have_distance_zero() {
        let t = tree_of(&[
            (0, NodeKind::Frame, "", &[1, 2]),
            (1, NodeKind::Text, "a", &[]),
            (2, NodeKind::Media, "m.png", &[]),
        ]);
        assert_eq!(tree_edit_distance(&t, &t), 0);
    }

    #[test]
    fn single_leaf_deletion_costs_one() {
        let a = tree_of(&[
            (0, NodeKind::Frame, "", &[1]),
            (1, NodeKind::Tile, "", &[2, 3, 4]),
            (2, NodeKind::Media, "m", &[]),
            (3, NodeKind::Text, "t", &[]),
            (4, NodeKind::Link, "u", &[]),
        ]);
        let b = tree_of(&[
            (0, NodeKind::Frame, "", &[1]),
            (1, NodeKind::Tile, "", &[2, 3]),
            (2, NodeKind::Media, "m", &[]),
            (3, NodeKind::Text, "t", &[]),
        ]);
        assert_eq!(tree_edit_distance(&a, &b), 1);
        assert_eq!(tree_edit_distance(&b, &a), 1);
    }

    #[test]
    fn payload_value_changes_only_count_in_strict_mode() {
        let a = tree_of(&[(0, NodeKind::Frame, "", &[1]), (1, NodeKind::Text, "x", &[])]);
        let b = tree_of(&[(0, NodeKind::Frame, "", &[1]), (1, NodeKind::Text, "y", &[])]);
        assert_eq!(tree_edit_distance(&a, &b), 0);
        assert_eq!(tree_edit_distance_with(&a, &b, LabelMode::Strict), 1);
    }

    #[test]
    fn sibling_order_matters() {
        let a = tree_of(&[
            (0, NodeKind::Tile, "", &[1, 2]),
            (1, NodeKind::Media, "m", &[]),
            (2, NodeKind::Text, "t", &[]),
        ]);
        let b = tree_of(&[
            (0, NodeKind::Tile, "", &[1, 2]),
            (1, NodeKind::Text, "t", &[]),
            (2, NodeKind::Media, "m", &[]),
        ]);
        assert!(tree_edit_distance(&a, &b) > 0);
    }
}
