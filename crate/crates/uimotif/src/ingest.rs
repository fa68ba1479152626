//! Tree reconstruction from a flat list of typed, payload-annotated boxes.
//!
//! Recursive axis-projection grouping (XY-cut): at each level the box set is
//! split at whitespace gaps in the y-projection (producing a `stack`), else in
//! the x-projection (producing a `row`), alternating as the recursion
//! descends. Multi-box groups that cannot be split on either axis become a
//! `tile` holding the boxes in reading order.

use thiserror::Error;

use crate::model::{BBox, NodeId, NodeKind, Payload, UiNode, UiTree};

/// One detected box: a leaf-capable kind, a required bounding box, and a
/// payload. Container kinds `frame`/`stack`/`row` are inferred by grouping and
/// not accepted as input; `tile` is allowed as an atomic input block.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxItem {
    pub kind: NodeKind,
    pub bbox: BBox,
    pub payload: Payload,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("box list is empty")]
    EmptyInput,
    #[error("gap threshold {0} outside (0, 0.5]")]
    InvalidThreshold(f64),
    #[error("need at least 2 boxes to infer a gap threshold")]
    TooFewItems,
    #[error("box item kind {0} is inferred by grouping and not accepted as input")]
    ContainerInput(NodeKind),
    #[error("box item of kind {kind} has incompatible payload")]
    PayloadMismatch { kind: NodeKind },
    #[error(transparent)]
    Blueprint(#[from] crate::model::BlueprintError),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    Y,
    X,
}

impl Axis {
    fn other(self) -> Axis {
        match self {
            Axis::Y => Axis::X,
            Axis::X => Axis::Y,
        }
    }

    fn interval(self, b: &BBox) -> (f64, f64) {
        match self {
            Axis::Y => (b.y0, b.y1),
            Axis::X => (b.x0, b.x1),
        }
    }

    fn container(self) -> NodeKind {
        match self {
            Axis::Y => NodeKind::Stack,
            Axis::X => NodeKind::Row,
        }
    }
}

/// Reading-order comparator: top-to-bottom then left-to-right, with y rounded
/// to 3 decimals so float noise cannot flip near-ties.
fn reading_order(a: &BBox, b: &BBox) -> std::cmp::Ordering {
    let ka = ((a.y0 * 1000.0).round() as i64, a.x0);
    let kb = ((b.y0 * 1000.0).round() as i64, b.x0);
    ka.0.cmp(&kb.0).then(ka.1.partial_cmp(&kb.1).unwrap())
}

/// Whitespace gaps between merged projection intervals on one axis, in axis
/// order. Only strictly positive gaps count.
fn projection_gaps(items: &[&BoxItem], axis: Axis) -> Vec<f64> {
    let mut intervals: Vec<(f64, f64)> = items.iter().map(|b| axis.interval(&b.bbox)).collect();
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut gaps = Vec::new();
    let mut reach = intervals[0].1;
    for (lo, hi) in intervals.iter().skip(1) {
        if *lo > reach {
            gaps.push(lo - reach);
        }
        reach = reach.max(*hi);
    }
    gaps
}

/// Split a box set at every projection gap wider than the threshold. Returns
/// one group when no qualifying gap exists.
fn split_on(items: &[&BoxItem], axis: Axis, threshold: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|a, b| {
        let (la, _) = axis.interval(&items[*a].bbox);
        let (lb, _) = axis.interval(&items[*b].bbox);
        la.partial_cmp(&lb).unwrap().then(a.cmp(b))
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut reach = f64::NEG_INFINITY;
    for idx in order {
        let (lo, hi) = axis.interval(&items[idx].bbox);
        if !current.is_empty() && lo - reach > threshold {
            groups.push(std::mem::take(&mut current));
            reach = f64::NEG_INFINITY;
        }
        current.push(idx);
        reach = reach.max(hi);
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups
}

struct Builder {
    nodes: Vec<UiNode>,
}

impl Builder {
    fn push(&mut self, kind: NodeKind, bbox: Option<BBox>, payload: Payload) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(UiNode {
            id,
            kind,
            bbox,
            payload,
            children: vec![],
        });
        id
    }

    fn build(
        &mut self,
        items: &[&BoxItem],
        threshold: f64,
        prefer: Axis,
    ) -> NodeId {
        if items.len() == 1 {
            let b = items[0];
            return self.push(b.kind, Some(b.bbox), b.payload.clone());
        }
        for axis in [prefer, prefer.other()] {
            let groups = split_on(items, axis, threshold);
            if groups.len() > 1 {
                let bbox = union_of(items);
                let id = self.push(axis.container(), Some(bbox), Payload::None);
                let mut children = Vec::with_capacity(groups.len());
                for g in &groups {
                    let sub: Vec<&BoxItem> = g.iter().map(|i| items[*i]).collect();
                    children.push(self.build(&sub, threshold, axis.other()));
                }
                self.nodes[id.0 as usize].children = children;
                return id;
            }
        }
        // unsplittable on both axes: tile in reading order
        let bbox = union_of(items);
        let id = self.push(NodeKind::Tile, Some(bbox), Payload::None);
        let mut ordered: Vec<&BoxItem> = items.to_vec();
        ordered.sort_by(|a, b| reading_order(&a.bbox, &b.bbox));
        let children: Vec<NodeId> = ordered
            .iter()
            .map(|b| self.push(b.kind, Some(b.bbox), b.payload.clone()))
            .collect();
        self.nodes[id.0 as usize].children = children;
        id
    }
}

fn union_of(items: &[&BoxItem]) -> BBox {
    items
        .iter()
        .skip(1)
        .fold(items[0].bbox, |acc, b| acc.union(&b.bbox))
}

fn validate_items(items: &[BoxItem]) -> Result<(), IngestError> {
    for item in items {
        if matches!(item.kind, NodeKind::Frame | NodeKind::Stack | NodeKind::Row) {
            return Err(IngestError::ContainerInput(item.kind));
        }
        if !item.payload.compatible_with(item.kind) {
            return Err(IngestError::PayloadMismatch { kind: item.kind });
        }
        if !item.bbox.is_valid() {
            return Err(crate::model::BlueprintError::InvalidBox {
                coords: [item.bbox.x0, item.bbox.y0, item.bbox.x1, item.bbox.y1],
            }
            .into());
        }
    }
    Ok(())
}

/// Group boxes into a [`UiTree`] rooted at a `frame`. Grouping depends only on
/// geometry, so the output is invariant under input permutation; every input
/// box appears exactly once as a leaf.
pub fn group_boxes(items: &[BoxItem], gap_threshold: f64) -> Result<UiTree, IngestError> {
    if items.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    if !(gap_threshold > 0.0 && gap_threshold <= 0.5) {
        return Err(IngestError::InvalidThreshold(gap_threshold));
    }
    validate_items(items)?;
    let mut sorted: Vec<&BoxItem> = items.iter().collect();
    // permutation invariance: fix a geometric order before grouping
    sorted.sort_by(|a, b| {
        reading_order(&a.bbox, &b.bbox)
            .then(a.bbox.x1.partial_cmp(&b.bbox.x1).unwrap())
            .then(a.bbox.y1.partial_cmp(&b.bbox.y1).unwrap())
            .then(a.kind.cmp(&b.kind))
            .then(a.payload.cmp(&b.payload))
    });
    let mut builder = Builder { nodes: Vec::new() };
    let root = builder.push(NodeKind::Frame, Some(union_of(&sorted)), Payload::None);
    let child = builder.build(&sorted, gap_threshold, Axis::Y);
    builder.nodes[root.0 as usize].children = vec![child];
    Ok(UiTree::new(root, builder.nodes)?)
}

/// Default gap threshold: the median of all positive top-level projection
/// gaps across both axes, clamped to `[0.01, 0.2]`.
pub fn infer_gap_threshold(items: &[BoxItem]) -> Result<f64, IngestError> {
    if items.len() < 2 {
        return Err(IngestError::TooFewItems);
    }
    validate_items(items)?;
    let refs: Vec<&BoxItem> = items.iter().collect();
    let mut gaps = projection_gaps(&refs, Axis::Y);
    gaps.extend(projection_gaps(&refs, Axis::X));
    if gaps.is_empty() {
        return Ok(0.01);
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if gaps.len() % 2 == 1 {
        gaps[gaps.len() / 2]
    } else {
        (gaps[gaps.len() / 2 - 1] + gaps[gaps.len() / 2]) / 2.0
    };
    Ok(median.clamp(0.01, 0.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_box(x0: f64, y0: f64, x1: f64, y1: f64, s: &str) -> BoxItem {
        BoxItem {
            kind: NodeKind::Text,
            bbox: BBox::new(x0, y0, x1, y1).unwrap(),
            payload: Payload::Text(s.into()),
        }
    }

    fn media_box(x0: f64, y0: f64, x1: f64, y1: f64, s: &str) -> BoxItem {
        BoxItem {
            kind: NodeKind::Media,
            bbox: BBox::new(x0, y0, x1, y1).unwrap(),
            payload: Payload::ImageSrc(s.into()),
        }
    }

    #[test]
    fn singleton_becomes_frame_with_one_child() {
        let items = vec![text_box(0.1, 0.1, 0.9, 0.2, "hello")];
        let tree = group_boxes(&items, 0.1).unwrap();
        assert_eq!(tree.len(), 2);
        let root = tree.node(tree.root());
        assert_eq!(root.kind, NodeKind::Frame);
        assert_eq!(root.children.len(), 1);
        let leaf = tree.node(root.children[0]);
        assert_eq!(leaf.kind, NodeKind::Text);
        assert_eq!(leaf.payload, Payload::Text("hello".into()));
    }

    #[test]
    fn y_gap_forces_horizontal_split_into_stack() {
        // gap 0.4 > threshold 0.1
        let items = vec![
            text_box(0.0, 0.5, 1.0, 0.6, "below"),
            text_box(0.0, 0.0, 1.0, 0.1, "above"),
        ];
        let tree = group_boxes(&items, 0.1).unwrap();
        let root = tree.node(tree.root());
        let stack = tree.node(root.children[0]);
        assert_eq!(stack.kind, NodeKind::Stack);
        let kids: Vec<_> = stack.children.iter().map(|c| tree.node(*c)).collect();
        assert_eq!(kids[0].payload, Payload::Text("above".into()));
        assert_eq!(kids[1].payload, Payload::Text("below".into()));
    }

    #[test]
    fn x_gaps_produce_row_of_three() {
        let items = vec![
            media_box(0.0, 0.0, 0.2, 0.3, "a.png"),
            media_box(0.35, 0.0, 0.55, 0.3, "b.png"),
            media_box(0.70, 0.0, 0.90, 0.3, "c.png"),
        ];
        let tree = group_boxes(&items, 0.1).unwrap();
        let root = tree.node(tree.root());
        assert_eq!(root.kind, NodeKind::Frame);
        let row = tree.node(root.children[0]);
        assert_eq!(row.kind, NodeKind::Row);
        assert_eq!(row.children.len(), 3);
        let srcs: Vec<_> = row
            .children
            .iter()
            .map(|c| tree.node(*c).payload.clone())
            .collect();
        assert_eq!(
            srcs,
            vec![
                Payload::ImageSrc("a.png".into()),
                Payload::ImageSrc("b.png".into()),
                Payload::ImageSrc("c.png".into())
            ]
        );
    }

    #[test]
    fn overlapping_boxes_group_under_tile() {
        let items = vec![
            text_box(0.0, 0.0, 0.6, 0.5, "a"),
            media_box(0.3, 0.2, 0.9, 0.8, "x.png"),
        ];
        let tree = group_boxes(&items, 0.1).unwrap();
        let root = tree.node(tree.root());
        let tile = tree.node(root.children[0]);
        assert_eq!(tile.kind, NodeKind::Tile);
        assert_eq!(tile.children.len(), 2);
    }

    #[test]
    fn threshold_clamps_to_upper_bound() {
        let items = vec![
            text_box(0.0, 0.0, 1.0, 0.1, "a"),
            text_box(0.0, 0.4, 1.0, 0.6, "b"),
        ];
        // single y-gap of 0.3, x overlaps fully
        assert_eq!(infer_gap_threshold(&items).unwrap(), 0.2);
    }

    #[test]
    fn threshold_median_of_odd_gap_set() {
        // y-gaps 0.02 and 0.06, x-gap 0.04 -> median 0.04
        let items = vec![
            text_box(0.00, 0.00, 0.30, 0.10, "a"),
            text_box(0.34, 0.12, 0.64, 0.22, "b"),
            text_box(0.68, 0.28, 0.98, 0.38, "c"),
        ];
        let got = infer_gap_threshold(&items).unwrap();
        assert!((got - 0.04).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn threshold_floor_when_everything_touches() {
        let items = vec![
            text_box(0.0, 0.0, 0.5, 0.5, "a"),
            text_box(0.0, 0.5, 0.5, 1.0, "b"),
            text_box(0.5, 0.0, 1.0, 1.0, "c"),
        ];
        assert_eq!(infer_gap_threshold(&items).unwrap(), 0.01);
    }

    #[test]
    fn rejects_container_input_and_bad_threshold() {
        let bad = vec![BoxItem {
            kind: NodeKind::Frame,
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            payload: Payload::None,
        }];
        assert!(matches!(
            group_boxes(&bad, 0.1),
            Err(IngestError::ContainerInput(NodeKind::Frame))
        ));
        let ok = vec![text_box(0.0, 0.0, 1.0, 0.1, "a")];
        assert!(matches!(
            group_boxes(&ok, 0.0),
            Err(IngestError::InvalidThreshold(_))
        ));
        assert!(matches!(
            group_boxes(&ok, 0.7),
            Err(IngestError::InvalidThreshold(_))
        ));
        assert!(matches!(group_boxes(&[], 0.1), Err(IngestError::EmptyInput)));
    }

    #[test]
    fn permutation_invariance() {
        let items = vec![
            text_box(0.0, 0.0, 0.4, 0.1, "a"),
            media_box(0.6, 0.0, 0.9, 0.1, "b.png"),
            text_box(0.0, 0.5, 0.9, 0.6, "c"),
        ];
        let t1 = group_boxes(&items, 0.1).unwrap();
        let mut rev = items.clone();
        rev.reverse();
        let t2 = group_boxes(&rev, 0.1).unwrap();
        assert_eq!(t1, t2);
    }
}
