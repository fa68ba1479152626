//! Independent bundle scanners for loop preservation and prop coverage.
//! These re-derive everything from the blueprint and the rendered text;
//! they never consult the emitter's ledger, so they cross-validate it.

use std::collections::BTreeMap;

use crate::emit::{CodeBundle, Framework};
use crate::model::{Blueprint, NodeId, Payload, SkeletonNode, SkeletonPayload, UiTree};

use super::html::parse_html_bundle;

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut rest = haystack;
    while let Some(pos) = rest.find(needle) {
        count += 1;
        rest = &rest[pos + needle.len()..];
    }
    count
}

/// The scanner's own spelling of the emitted dialect; kept separate from the
/// renderer so the check stays engine-independent.
fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn ts_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn items_ref(group_index: usize) -> String {
    format!("items_{group_index}")
}

/// Child-index path from the root to a node.
fn path_to(tree: &UiTree, node: NodeId) -> Vec<usize> {
    let mut path = Vec::new();
    let mut current = node;
    while let Some(parent) = tree.parent(current) {
        let idx = tree
            .node(parent)
            .children
            .iter()
            .position(|c| *c == current)
            .expect("child lists are consistent");
        path.push(idx);
        current = parent;
    }
    path.reverse();
    path
}

fn navigate(tree: &UiTree, path: &[usize]) -> Option<NodeId> {
    let mut current = tree.root();
    for idx in path {
        current = *tree.node(current).children.get(*idx)?;
    }
    Some(current)
}

/// Structural skeleton match against a parsed tree; constant payloads must
/// match exactly, slot sites by payload type (or absent payload).
fn skeleton_matches(parsed: &UiTree, node: NodeId, skel: &SkeletonNode) -> bool {
    let n = parsed.node(node);
    if n.kind != skel.kind || n.children.len() != skel.children.len() {
        return false;
    }
    let payload_ok = match &skel.payload {
        SkeletonPayload::Const(p) => n.payload == *p,
        SkeletonPayload::Slot(_) => true,
    };
    payload_ok
        && n.children
            .iter()
            .zip(skel.children.iter())
            .all(|(c, s)| skeleton_matches(parsed, *c, s))
}

/// Payloads found at each slot site of a parsed instance subtree.
fn slot_values(
    parsed: &UiTree,
    node: NodeId,
    skel: &SkeletonNode,
    out: &mut BTreeMap<String, Payload>,
) -> bool {
    let n = parsed.node(node);
    if n.kind != skel.kind || n.children.len() != skel.children.len() {
        return false;
    }
    if let SkeletonPayload::Slot(name) = &skel.payload {
        out.insert(name.clone(), n.payload.clone());
    }
    n.children
        .iter()
        .zip(skel.children.iter())
        .all(|(c, s)| slot_values(parsed, *c, s, out))
}

/// Fraction of loop groups realized as exactly one loop construct (HTML: an
/// exact inline replication). A blueprint without loop groups scores 1.0 by
/// convention so corpus averages stay well-defined.
pub fn loop_preservation_accuracy(bp: &Blueprint, bundle: &CodeBundle) -> f64 {
    if bp.loop_groups.is_empty() {
        return 1.0;
    }
    let text = bundle.concatenated_text();
    let preserved = bp
        .loop_groups
        .iter()
        .enumerate()
        .filter(|(gi, group)| match bundle.framework {
            Framework::React => {
                count_occurrences(&text, &format!("{}.map(", items_ref(*gi))) == 1
            }
            Framework::Vue => {
                count_occurrences(&text, &format!("v-for=\"(it, i) in {}\"", items_ref(*gi))) == 1
            }
            Framework::Angular => {
                count_occurrences(&text, &format!("*ngFor=\"let it of {}\"", items_ref(*gi))) == 1
            }
            Framework::Html => html_group_replicated(bp, bundle, group),
        })
        .count();
    preserved as f64 / bp.loop_groups.len() as f64
}

/// HTML fallback check: the parsed parent holds exactly as many children as
/// the blueprint's, and every member position carries a skeleton match.
fn html_group_replicated(
    bp: &Blueprint,
    bundle: &CodeBundle,
    group: &crate::model::LoopGroup,
) -> bool {
    let Ok(parsed) = parse_html_bundle(bundle) else {
        return false;
    };
    let Some(template) = bp.template(&group.template_id) else {
        return false;
    };
    let Some(parsed_parent) = navigate(&parsed, &path_to(&bp.tree, group.parent)) else {
        return false;
    };
    let bp_children = &bp.tree.node(group.parent).children;
    let parsed_children = &parsed.node(parsed_parent).children;
    if bp_children.len() != parsed_children.len() {
        return false;
    }
    group.members.iter().all(|member| {
        let pos = bp_children.iter().position(|c| c == member).unwrap_or(usize::MAX);
        match parsed_children.get(pos) {
            Some(child) => skeleton_matches(&parsed, *child, &template.skeleton),
            None => false,
        }
    })
}

/// Fraction of `(instance, prop)` pairs whose binding appears exactly once in
/// the bundle text, measured by scanning the rendered sources.
pub fn prop_coverage(bp: &Blueprint, bundle: &CodeBundle) -> f64 {
    let mut total = 0usize;
    let mut covered = 0usize;

    let parsed = if bundle.framework == Framework::Html {
        parse_html_bundle(bundle).ok()
    } else {
        None
    };
    let loop_members = bp.loop_member_ids();
    let text = bundle.concatenated_text();

    // standalone bindings aggregate by (prop, rendered form); each pair is
    // covered when the form appears exactly as often as it is expected
    let mut standalone_expect: BTreeMap<String, usize> = BTreeMap::new();
    for (id, inst) in &bp.instances {
        if bundle.framework == Framework::Html || loop_members.contains(id) {
            continue;
        }
        for (prop, value) in &inst.binding {
            *standalone_expect
                .entry(standalone_form(bundle.framework, prop, value))
                .or_default() += 1;
        }
    }

    for (id, inst) in &bp.instances {
        let Some(template) = bp.template(&inst.template_id) else {
            total += inst.binding.len();
            continue;
        };
        match bundle.framework {
            Framework::Html => {
                let values = parsed.as_ref().and_then(|p| {
                    let node = navigate(p, &path_to(&bp.tree, *id))?;
                    let mut out = BTreeMap::new();
                    slot_values(p, node, &template.skeleton, &mut out).then_some(out)
                });
                for (prop, value) in &inst.binding {
                    total += 1;
                    if let Some(values) = &values {
                        if values.get(prop) == Some(value) {
                            covered += 1;
                        }
                    }
                }
            }
            _ if loop_members.contains(id) => {
                // the member's record line inside its group's items literal
                let (gi, mi) = bp
                    .loop_groups
                    .iter()
                    .enumerate()
                    .find_map(|(gi, g)| {
                        g.members.iter().position(|m| m == id).map(|mi| (gi, mi))
                    })
                    .expect("loop members belong to a group");
                let record = items_record(&text, bundle.framework, gi, mi);
                for (prop, value) in &inst.binding {
                    total += 1;
                    if let Some(record) = &record {
                        let field = match value {
                            Payload::None => format!("{prop}: null"),
                            v => format!("{prop}: {}", ts_string(v.value().unwrap_or_default())),
                        };
                        if count_occurrences(record, &format!("{prop}:")) == 1
                            && record.contains(&field)
                        {
                            covered += 1;
                        }
                    }
                }
            }
            _ => {
                for (prop, value) in &inst.binding {
                    total += 1;
                    let form = standalone_form(bundle.framework, prop, value);
                    let expected = standalone_expect.get(&form).copied().unwrap_or(0);
                    if expected > 0 && count_occurrences(&text, &form) == expected {
                        covered += 1;
                    }
                }
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    }
}

/// Rendered attribute form of one standalone binding.
fn standalone_form(mu: Framework, prop: &str, value: &Payload) -> String {
    match (mu, value) {
        (Framework::React, Payload::None) => format!(" {prop}={{null}}"),
        (Framework::Vue, Payload::None) => format!(" :{prop}=\"null\""),
        (Framework::Angular, Payload::None) => format!(" [{prop}]=\"null\""),
        (_, v) => format!(" {prop}=\"{}\"", escape_attr(v.value().unwrap_or_default())),
    }
}

/// The `mi`-th record line of loop group `gi`'s items literal.
fn items_record(text: &str, mu: Framework, gi: usize, mi: usize) -> Option<String> {
    let header = match mu {
        Framework::React | Framework::Vue => format!("const {} = [", items_ref(gi)),
        Framework::Angular => format!("{} = [", items_ref(gi)),
        Framework::Html => return None,
    };
    let start = text.find(&header)? + header.len();
    let body = &text[start..];
    let end = body.find("];")?;
    let records: Vec<&str> = body[..end]
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with('{'))
        .collect();
    records.get(mi).map(|s| s.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::emit::emit_bundle;
    use crate::mine::{mine, MinerConfig};

    fn mined() -> Blueprint {
        mine(&demo::demo_document(), &MinerConfig::default()).unwrap()
    }

    #[test]
    fn emitted_bundles_have_full_coverage_and_loops() {
        let bp = mined();
        assert!(!bp.loop_groups.is_empty());
        for mu in Framework::ALL {
            let bundle = emit_bundle(&bp, mu).unwrap();
            assert_eq!(prop_coverage(&bp, &bundle), 1.0, "{mu}");
            assert_eq!(loop_preservation_accuracy(&bp, &bundle), 1.0, "{mu}");
        }
    }

    #[test]
    fn zero_loop_blueprint_scores_one_by_convention() {
        let tree = demo::tree_of(&[(0, "frame", "", &[1]), (1, "text", "x", &[])]);
        let bp = Blueprint::from_tree(tree);
        let bundle = emit_bundle(&bp, Framework::React).unwrap();
        assert_eq!(loop_preservation_accuracy(&bp, &bundle), 1.0);
        assert_eq!(prop_coverage(&bp, &bundle), 1.0);
    }

    #[test]
    fn deleting_a_binding_lowers_coverage_proportionally() {
        let bp = mine(&demo::repeated_cards(3), &MinerConfig::default()).unwrap();
        let mut bundle = emit_bundle(&bp, Framework::React).unwrap();
        let total: usize = bp.instances.values().map(|i| i.binding.len()).sum();
        // delete one media field from the first items record
        let media_value = bp
            .instances
            .values()
            .flat_map(|i| i.binding.iter())
            .find_map(|(k, v)| {
                (k.starts_with("media_")).then(|| ts_string(v.value().unwrap()))
            })
            .unwrap();
        let entry = &mut bundle.files.last_mut().unwrap().1;
        let needle = format!("media_0: {media_value}, ");
        assert!(entry.contains(&needle), "fixture drifted: {entry}");
        *entry = entry.replacen(&needle, "", 1);
        let pc = prop_coverage(&bp, &bundle);
        let expected = (total - 1) as f64 / total as f64;
        assert!((pc - expected).abs() < 1e-9, "pc {pc} expected {expected}");
    }

    #[test]
    fn unrolling_a_loop_lowers_lpa() {
        let tree = demo::starved_outer_fixture();
        let bp = mine(&tree, &MinerConfig::default()).unwrap();
        let groups = bp.loop_groups.len();
        assert!(groups >= 2);
        let mut bundle = emit_bundle(&bp, Framework::React).unwrap();
        let entry = &mut bundle.files.last_mut().unwrap().1;
        // break exactly one loop construct
        *entry = entry.replacen("items_0.map(", "items_0__broken.map(", 1);
        let lpa = loop_preservation_accuracy(&bp, &bundle);
        let expected = (groups - 1) as f64 / groups as f64;
        assert!((lpa - expected).abs() < 1e-9, "lpa {lpa} expected {expected}");
    }
}
