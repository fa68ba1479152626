//! Greedy non-overlap packing of candidate occurrences into template
//! instances, prop extraction, and loop-group detection.

use std::collections::{BTreeMap, HashMap, HashSet};

use sha2::{Digest, Sha256};

use crate::model::{
    Blueprint, Instance, LoopGroup, NodeId, Payload, PayloadTag, PropSpec, PropType, SkeletonNode,
    SkeletonPayload, Template, UiTree,
};

use super::canon::{CandNode, CandPayload};
use super::{MineError, MinerConfig, MotifCandidate};

/// Whether the concrete subtree at `node` instantiates the candidate
/// skeleton: kinds and arities agree everywhere, payload types agree at value
/// sites, and slot sites hold either the slot's type or no payload.
pub(crate) fn matches_skeleton(tree: &UiTree, node: NodeId, skel: &CandNode) -> bool {
    let n = tree.node(node);
    if n.kind != skel.kind || n.children.len() != skel.children.len() {
        return false;
    }
    let tag = n.payload.tag();
    let payload_ok = match skel.payload {
        CandPayload::Value(t) => tag == t,
        CandPayload::Slot(t) => tag == t || tag == PayloadTag::None,
    };
    payload_ok
        && n.children
            .iter()
            .zip(skel.children.iter())
            .all(|(c, s)| matches_skeleton(tree, *c, s))
}

struct Site {
    kind: crate::model::NodeKind,
    tag: PayloadTag,
    forced: bool, // anti-unification slots always become props
}

fn collect_sites(skel: &CandNode, out: &mut Vec<Site>) {
    match skel.payload {
        CandPayload::Value(t) if t != PayloadTag::None => out.push(Site {
            kind: skel.kind,
            tag: t,
            forced: false,
        }),
        CandPayload::Slot(t) => out.push(Site {
            kind: skel.kind,
            tag: t,
            forced: true,
        }),
        CandPayload::Value(_) => {}
    }
    for c in &skel.children {
        collect_sites(c, out);
    }
}

/// Payloads at every site of one occurrence, in depth-first site order.
fn collect_site_values(
    tree: &UiTree,
    node: NodeId,
    skel: &CandNode,
    out: &mut Vec<Payload>,
) -> Result<(), MineError> {
    let n = tree.node(node);
    if n.kind != skel.kind || n.children.len() != skel.children.len() {
        return Err(MineError::StructuralMismatch {
            node,
            reason: "occurrence diverges from skeleton".into(),
        });
    }
    match skel.payload {
        CandPayload::Value(t) if t != PayloadTag::None => out.push(n.payload.clone()),
        CandPayload::Slot(_) => out.push(n.payload.clone()),
        CandPayload::Value(_) => {}
    }
    for (c, s) in n.children.iter().zip(skel.children.iter()) {
        collect_site_values(tree, *c, s, out)?;
    }
    Ok(())
}

fn prop_type_for(tag: PayloadTag) -> PropType {
    match tag {
        PayloadTag::Text => PropType::TextVal,
        PayloadTag::Url => PropType::UrlVal,
        PayloadTag::Image => PropType::ImageVal,
        PayloadTag::Placeholder => PropType::PlaceholderVal,
        PayloadTag::None => unreachable!("sites never carry the absent payload type"),
    }
}

/// Rebuild the final skeleton, materializing each site as either a constant
/// or a slot reference. `decisions` holds `Some(prop_name)` per site in
/// depth-first order.
fn build_skeleton(
    skel: &CandNode,
    decisions: &[Option<String>],
    shared_values: &[Payload],
    cursor: &mut usize,
) -> SkeletonNode {
    let payload = match skel.payload {
        CandPayload::Value(PayloadTag::None) => SkeletonPayload::Const(Payload::None),
        _ => {
            let i = *cursor;
            *cursor += 1;
            match &decisions[i] {
                Some(name) => SkeletonPayload::Slot(name.clone()),
                None => SkeletonPayload::Const(shared_values[i].clone()),
            }
        }
    };
    SkeletonNode {
        kind: skel.kind,
        payload,
        children: skel
            .children
            .iter()
            .map(|c| build_skeleton(c, decisions, shared_values, cursor))
            .collect(),
    }
}

/// Turn a candidate plus its accepted occurrences into a typed template and
/// one total binding per occurrence. Payload sites whose value is identical
/// across all occurrences stay constant; the rest become props named
/// `{kind}_{index}` in depth-first order.
pub fn extract_props(
    tree: &UiTree,
    candidate: &MotifCandidate,
    occurrences: &[NodeId],
) -> Result<(Template, Vec<BTreeMap<String, Payload>>), MineError> {
    extract_props_from_skeleton(tree, &candidate.skeleton, occurrences)
}

fn extract_props_from_skeleton(
    tree: &UiTree,
    skeleton: &CandNode,
    occurrences: &[NodeId],
) -> Result<(Template, Vec<BTreeMap<String, Payload>>), MineError> {
    let mut sites = Vec::new();
    collect_sites(skeleton, &mut sites);

    let mut per_occurrence: Vec<Vec<Payload>> = Vec::with_capacity(occurrences.len());
    for occ in occurrences {
        let mut values = Vec::with_capacity(sites.len());
        collect_site_values(tree, *occ, skeleton, &mut values)?;
        per_occurrence.push(values);
    }

    let mut decisions: Vec<Option<String>> = Vec::with_capacity(sites.len());
    let mut shared_values: Vec<Payload> = Vec::with_capacity(sites.len());
    let mut props: Vec<PropSpec> = Vec::new();
    for (i, site) in sites.iter().enumerate() {
        let first = &per_occurrence[0][i];
        let varies = per_occurrence.iter().any(|vals| &vals[i] != first);
        if site.forced || varies {
            let name = format!("{}_{}", site.kind, props.len());
            let prop_type = prop_type_for(site.tag);
            props.push(PropSpec {
                name: name.clone(),
                sinks: prop_type.allowed_sinks(),
                prop_type,
            });
            decisions.push(Some(name));
            shared_values.push(Payload::None);
        } else {
            decisions.push(None);
            shared_values.push(first.clone());
        }
    }

    let mut cursor = 0;
    let final_skeleton = build_skeleton(skeleton, &decisions, &shared_values, &mut cursor);

    let bindings: Vec<BTreeMap<String, Payload>> = per_occurrence
        .iter()
        .map(|vals| {
            decisions
                .iter()
                .zip(vals.iter())
                .filter_map(|(d, v)| d.as_ref().map(|name| (name.clone(), v.clone())))
                .collect()
        })
        .collect();

    let template = Template {
        template_id: String::new(), // assigned after hashing the final skeleton
        skeleton: final_skeleton,
        props,
        support: occurrences.len() as u32,
    };
    Ok((template, bindings))
}

/// Hash of the final template skeleton including constant values and slot
/// names; the template id derives from it.
fn template_hash(skel: &SkeletonNode) -> u128 {
    fn feed(h: &mut Sha256, s: &SkeletonNode) {
        h.update([0u8]);
        h.update(s.kind.as_str().as_bytes());
        match &s.payload {
            SkeletonPayload::Const(p) => {
                h.update([1u8, payload_disc(p)]);
                if let Some(v) = p.value() {
                    h.update((v.len() as u32).to_le_bytes());
                    h.update(v.as_bytes());
                }
            }
            SkeletonPayload::Slot(name) => {
                h.update([2u8]);
                h.update((name.len() as u32).to_le_bytes());
                h.update(name.as_bytes());
            }
        }
        h.update((s.children.len() as u32).to_le_bytes());
        for c in &s.children {
            feed(h, c);
        }
    }
    fn payload_disc(p: &Payload) -> u8 {
        match p {
            Payload::Text(_) => 0,
            Payload::Url(_) => 1,
            Payload::ImageSrc(_) => 2,
            Payload::Placeholder(_) => 3,
            Payload::None => 4,
        }
    }
    let mut h = Sha256::new();
    h.update(b"uimotif.template.1");
    feed(&mut h, skel);
    let digest = h.finalize();
    u128::from_le_bytes(digest[..16].try_into().unwrap())
}

fn capitalize(kind: crate::model::NodeKind) -> String {
    let s = kind.as_str();
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    if let Some(c) = chars.next() {
        out.extend(c.to_uppercase());
    }
    out.extend(chars);
    out
}

/// `<Kind>_<hex prefix of the skeleton hash>`; the prefix starts at 8 hex
/// digits and widens only if two distinct templates collide.
fn assign_template_ids(templates: &mut [Template]) {
    let hashes: Vec<String> = templates
        .iter()
        .map(|t| format!("{:032x}", template_hash(&t.skeleton)))
        .collect();
    let mut width = 8;
    loop {
        let ids: Vec<String> = templates
            .iter()
            .zip(&hashes)
            .map(|(t, h)| format!("{}_{}", capitalize(t.skeleton.kind), &h[..width]))
            .collect();
        let unique: HashSet<&String> = ids.iter().collect();
        if unique.len() == ids.len() || width >= 32 {
            for (t, id) in templates.iter_mut().zip(ids) {
                t.template_id = id;
            }
            return;
        }
        width = (width * 2).min(32);
    }
}

/// Greedy packing: iterate candidates by `(size * support)` descending and
/// accept each occurrence whose subtree is unclaimed and still matches the
/// (possibly generalized) skeleton. Templates whose accepted support falls
/// below the minimum are dropped after the sweep.
pub fn pack_instances(
    cands: &[MotifCandidate],
    tree: &UiTree,
    cfg: &MinerConfig,
) -> Result<Blueprint, MineError> {
    let min_support = cfg.min_support.max(2);
    let mut order: Vec<&MotifCandidate> = cands.iter().collect();
    order.sort_by(|a, b| {
        let sa = a.size * a.occurrences.len();
        let sb = b.size * b.occurrences.len();
        sb.cmp(&sa)
            .then_with(|| a.canonical.canonical_string.cmp(&b.canonical.canonical_string))
    });

    let mut claimed: HashSet<NodeId> = HashSet::new();
    let mut accepted_per_candidate: Vec<(usize, Vec<NodeId>)> = Vec::new();
    for (idx, cand) in order.iter().enumerate() {
        let mut accepted = Vec::new();
        for occ in &cand.occurrences {
            if !matches_skeleton(tree, *occ, &cand.skeleton) {
                continue;
            }
            let nodes = tree.subtree_nodes(*occ);
            if nodes.iter().any(|n| claimed.contains(n)) {
                continue;
            }
            claimed.extend(nodes);
            accepted.push(*occ);
        }
        accepted_per_candidate.push((idx, accepted));
    }

    let mut templates: Vec<Template> = Vec::new();
    let mut instance_sets: Vec<Vec<(NodeId, BTreeMap<String, Payload>)>> = Vec::new();
    for (idx, accepted) in accepted_per_candidate {
        if accepted.len() < min_support {
            continue;
        }
        let cand = order[idx];
        let (template, bindings) = extract_props_from_skeleton(tree, &cand.skeleton, &accepted)?;
        instance_sets.push(accepted.into_iter().zip(bindings).collect());
        templates.push(template);
    }
    assign_template_ids(&mut templates);

    let mut instances: BTreeMap<NodeId, Instance> = BTreeMap::new();
    for (template, set) in templates.iter().zip(&instance_sets) {
        for (node, binding) in set {
            instances.insert(
                *node,
                Instance {
                    template_id: template.template_id.clone(),
                    binding: binding.clone(),
                },
            );
        }
    }

    // loop groups: maximal runs of >= 2 consecutive sibling instances of one
    // template, scanned in document order
    let mut loop_groups: Vec<LoopGroup> = Vec::new();
    for parent in tree.preorder() {
        let children = &tree.node(*parent).children;
        let mut run: Vec<NodeId> = Vec::new();
        let mut run_template: Option<&str> = None;
        let flush = |run: &mut Vec<NodeId>, run_template: &mut Option<&str>, groups: &mut Vec<LoopGroup>| {
            if run.len() >= 2 {
                groups.push(LoopGroup {
                    parent: *parent,
                    template_id: run_template.unwrap().to_string(),
                    members: std::mem::take(run),
                });
            } else {
                run.clear();
            }
            *run_template = None;
        };
        for child in children {
            match instances.get(child) {
                Some(inst) => {
                    if run_template == Some(inst.template_id.as_str()) {
                        run.push(*child);
                    } else {
                        flush(&mut run, &mut run_template, &mut loop_groups);
                        run.push(*child);
                        run_template = Some(inst.template_id.as_str());
                    }
                }
                None => flush(&mut run, &mut run_template, &mut loop_groups),
            }
        }
        flush(&mut run, &mut run_template, &mut loop_groups);
    }

    // templates sorted by id for canonical serialization
    templates.sort_by(|a, b| a.template_id.cmp(&b.template_id));

    let bp = Blueprint {
        tree: tree.clone(),
        templates,
        instances,
        loop_groups,
    };
    debug_assert!(bp.validate().is_ok(), "packed blueprint must validate");
    Ok(bp)
}

/// Exhaustive packing oracle for small trees: the maximum number of nodes
/// coverable by any non-overlapping subset of occurrences whose per-template
/// count stays at or above the support minimum. Exponential; test use only.
pub fn optimal_covered_nodes(cands: &[MotifCandidate], tree: &UiTree, cfg: &MinerConfig) -> usize {
    let min_support = cfg.min_support.max(2);
    // flatten occurrences as (candidate index, node set)
    let mut occs: Vec<(usize, HashSet<NodeId>, usize)> = Vec::new();
    for (ci, cand) in cands.iter().enumerate() {
        for occ in &cand.occurrences {
            if !matches_skeleton(tree, *occ, &cand.skeleton) {
                continue;
            }
            let nodes: HashSet<NodeId> = tree.subtree_nodes(*occ).into_iter().collect();
            let size = nodes.len();
            occs.push((ci, nodes, size));
        }
    }
    let n = occs.len();
    assert!(n <= 24, "oracle is exponential; fixture too large ({n} occurrences)");
    let mut best = 0usize;
    'subset: for mask in 0u32..(1 << n) {
        let mut used: HashSet<NodeId> = HashSet::new();
        let mut covered = 0usize;
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for (i, (ci, nodes, size)) in occs.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            if nodes.iter().any(|id| used.contains(id)) {
                continue 'subset;
            }
            used.extend(nodes.iter().copied());
            covered += size;
            *counts.entry(*ci).or_insert(0) += 1;
        }
        if counts.values().all(|c| *c >= min_support) {
            best = best.max(covered);
        }
    }
    best
}

/// Nodes covered by the greedy packing of a blueprint.
pub fn covered_nodes(bp: &Blueprint) -> usize {
    bp.instances
        .keys()
        .map(|id| bp.tree.subtree_size(*id))
        .sum()
}
