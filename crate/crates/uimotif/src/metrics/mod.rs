//! Structural evaluation: tree edit distance, modularity rates, and the HTML
//! round-trip check.

mod html;
mod scan;
mod ted;

pub use html::parse_html_bundle;
pub use scan::{loop_preservation_accuracy, prop_coverage};
pub use ted::{tree_distance, tree_edit_distance, tree_edit_distance_with, LabelInterner, LabelMode, PlainTree};

use serde::Serialize;
use thiserror::Error;

use crate::emit::{dispatch, render, CodeBundle, Framework};
use crate::model::Blueprint;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("bundle is not parsable as this emitter's HTML dialect: {0}")]
    UnparsableBundle(String),
    #[error("no mapping for tag <{0}> in the emitted dialect")]
    UnknownTagMapping(String),
    #[error(transparent)]
    Blueprint(#[from] crate::model::BlueprintError),
    #[error(transparent)]
    Emit(#[from] crate::emit::EmitError),
}

/// Desk-computable evaluation of one blueprint/bundle pair.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Edit distance between the loop-expanded blueprint and its stored tree;
    /// zero whenever instance expansion is exact.
    pub ted: usize,
    /// Component reuse rate in `[0, 1]`.
    pub crr: f64,
    /// Loop preservation accuracy in `[0, 1]`.
    pub lpa: f64,
    /// Prop coverage in `[0, 1]`, measured by independent bundle scan.
    pub pc: f64,
    /// File count of the bundle.
    pub afc: usize,
    /// Edit distance after emitting HTML and parsing it back.
    pub roundtrip_ted: usize,
}

/// Fraction of tree nodes saved by instantiating templates beyond their first
/// occurrence: `sum((support - 1) * skeleton_size) / |V|`, clamped to `[0,1]`.
pub fn component_reuse_rate(bp: &Blueprint) -> f64 {
    let total = bp.tree.len() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let saved: usize = bp
        .templates
        .iter()
        .map(|t| (t.support.saturating_sub(1) as usize) * t.skeleton.size())
        .sum();
    (saved as f64 / total).clamp(0.0, 1.0)
}

/// Full evaluation. The round trip always goes through HTML regardless of the
/// bundle's framework; `strict` switches the edit-distance labels to compare
/// payload values as well.
pub fn evaluate(
    bp: &Blueprint,
    bundle: &CodeBundle,
    strict: bool,
) -> Result<EvalReport, MetricsError> {
    let mode = if strict {
        LabelMode::Strict
    } else {
        LabelMode::Structural
    };
    let expanded = bp.expanded_tree()?;
    let ted = tree_edit_distance_with(&expanded, &bp.tree, mode);
    let html_bundle = if bundle.framework == Framework::Html {
        bundle.clone()
    } else {
        let events = dispatch(bp, Framework::Html);
        render(bp, &events, Framework::Html)?
    };
    let parsed = parse_html_bundle(&html_bundle)?;
    let roundtrip_ted = tree_edit_distance_with(&parsed, &expanded, mode);
    Ok(EvalReport {
        ted,
        crr: component_reuse_rate(bp),
        lpa: loop_preservation_accuracy(bp, bundle),
        pc: prop_coverage(bp, bundle),
        afc: bundle.files.len(),
        roundtrip_ted,
    })
}

/// Corpus-level aggregate; per-document results are averaged in filename
/// order so the aggregate is independent of worker count.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateReport {
    pub documents: usize,
    pub failures: usize,
    pub mean_crr: f64,
    pub mean_lpa: f64,
    pub mean_pc: f64,
    pub mean_afc: f64,
    pub mean_roundtrip_ted: f64,
}

pub fn aggregate(reports: &[EvalReport], failures: usize) -> AggregateReport {
    let n = reports.len().max(1) as f64;
    AggregateReport {
        documents: reports.len(),
        failures,
        mean_crr: reports.iter().map(|r| r.crr).sum::<f64>() / n,
        mean_lpa: reports.iter().map(|r| r.lpa).sum::<f64>() / n,
        mean_pc: reports.iter().map(|r| r.pc).sum::<f64>() / n,
        mean_afc: reports.iter().map(|r| r.afc as f64).sum::<f64>() / n,
        mean_roundtrip_ted: reports.iter().map(|r| r.roundtrip_ted as f64).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, NodeKind, Payload, PropSpec, PropType, SkeletonNode, SkeletonPayload, Template, UiNode, UiTree};

    #[test]
    fn crr_zero_without_templates() {
        let tree = UiTree::new(
            NodeId(0),
            vec![UiNode {
                id: NodeId(0),
                kind: NodeKind::Frame,
                bbox: None,
                payload: Payload::None,
                children: vec![],
            }],
        )
        .unwrap();
        assert_eq!(component_reuse_rate(&Blueprint::from_tree(tree)), 0.0);
    }

    #[test]
    fn crr_matches_hand_arithmetic() {
        // one template, skeleton size 5, support 4, |V| = 30 -> (3*5)/30 = 0.5
        let mut nodes = vec![UiNode {
            id: NodeId(0),
            kind: NodeKind::Frame,
            bbox: None,
            payload: Payload::None,
            children: (1..30).map(NodeId).collect(),
        }];
        for i in 1..30u32 {
            nodes.push(UiNode {
                id: NodeId(i),
                kind: NodeKind::Text,
                bbox: None,
                payload: Payload::Text(format!("t{i}")),
                children: vec![],
            });
        }
        let tree = UiTree::new(NodeId(0), nodes).unwrap();
        let skeleton = SkeletonNode {
            kind: NodeKind::Tile,
            payload: SkeletonPayload::Const(Payload::None),
            children: (0..4)
                .map(|i| SkeletonNode {
                    kind: NodeKind::Text,
                    payload: SkeletonPayload::Slot(format!("text_{i}")),
                    children: vec![],
                })
                .collect(),
        };
        let template = Template {
            template_id: "Tile_00000000".into(),
            skeleton,
            props: (0..4)
                .map(|i| PropSpec {
                    name: format!("text_{i}"),
                    prop_type: PropType::TextVal,
                    sinks: PropType::TextVal.allowed_sinks(),
                })
                .collect(),
            support: 4,
        };
        // formula check only; this blueprint is deliberately not validated
        let bp = Blueprint {
            tree,
            templates: vec![template],
            instances: Default::default(),
            loop_groups: vec![],
        };
        assert!((component_reuse_rate(&bp) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn crr_zero_when_support_is_one() {
        // a template used once saves nothing: support - 1 = 0
        let tree = UiTree::new(
            NodeId(0),
            vec![UiNode {
                id: NodeId(0),
                kind: NodeKind::Frame,
                bbox: None,
                payload: Payload::None,
                children: vec![],
            }],
        )
        .unwrap();
        let template = Template {
            template_id: "Frame_00000000".into(),
            skeleton: SkeletonNode {
                kind: NodeKind::Frame,
                payload: SkeletonPayload::Const(Payload::None),
                children: vec![],
            },
            props: vec![],
            support: 1,
        };
        let bp = Blueprint {
            tree,
            templates: vec![template],
            instances: Default::default(),
            loop_groups: vec![],
        };
        assert_eq!(component_reuse_rate(&bp), 0.0);
    }
}
