//! The deterministic dispatcher: one shared walk of the blueprint produces
//! both the reference event stream and the constraint engine's expectations,
//! so the two can never drift apart.

use std::collections::HashMap;

use crate::model::{
    Blueprint, NodeId, NodeKind, Payload, PropSpec, Sink, SkeletonNode, SkeletonPayload, Template,
};

use super::{items_ref_name, EmissionEvent, Framework, InstanceLayout};

/// A planned emission: either an exact expected event or one prop binding of
/// a specific instance (bindings of one site may arrive in any order).
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PlanItem {
    Event(EmissionEvent),
    Bind {
        instance: NodeId,
        template_id: String,
        prop: String,
        sink: Sink,
        value: Payload,
    },
}

/// Component file paths per framework. Angular components are two files.
pub(crate) fn component_paths(mu: Framework, template_id: &str) -> Vec<String> {
    match mu {
        Framework::Html => vec![],
        Framework::React => vec![format!("components/{template_id}.tsx")],
        Framework::Vue => vec![format!("components/{template_id}.vue")],
        Framework::Angular => {
            let lower = template_id.to_lowercase();
            vec![
                format!("components/{lower}.component.html"),
                format!("components/{lower}.component.ts"),
            ]
        }
    }
}

pub(crate) fn entry_paths(mu: Framework) -> Vec<String> {
    match mu {
        Framework::Html => vec!["index.html".into()],
        Framework::React => vec!["App.tsx".into()],
        Framework::Vue => vec!["App.vue".into()],
        Framework::Angular => vec!["app.component.html".into(), "app.component.ts".into()],
    }
}

pub(crate) fn angular_selector(template_id: &str) -> String {
    template_id.to_lowercase().replace('_', "-")
}

/// Tag and optional class for a node kind. Text renders as `span` inside
/// payload-bearing parents (link captions) and `p` elsewhere.
pub(crate) fn tag_for(kind: NodeKind, parent: Option<NodeKind>) -> (&'static str, Option<&'static str>) {
    match kind {
        NodeKind::Frame => ("div", Some("frame")),
        NodeKind::Stack => ("div", Some("stack")),
        NodeKind::Row => ("div", Some("row")),
        NodeKind::Tile => ("div", Some("tile")),
        NodeKind::Text => match parent {
            Some(NodeKind::Link) | Some(NodeKind::Control) => ("span", None),
            _ => ("p", None),
        },
        NodeKind::Media => ("img", None),
        NodeKind::Control => ("input", None),
        NodeKind::Link => ("a", None),
    }
}

fn class_attr_name(mu: Framework) -> &'static str {
    match mu {
        Framework::React => "className",
        _ => "class",
    }
}

/// Kind of the skeleton node that carries each slot, needed to pick the
/// canonical sink (url props flow to `src` on media, `href` elsewhere).
pub(crate) fn slot_site_kinds(template: &Template) -> HashMap<String, NodeKind> {
    let mut out = HashMap::new();
    template.skeleton.for_each(&mut |n| {
        if let SkeletonPayload::Slot(name) = &n.payload {
            out.insert(name.clone(), n.kind);
        }
    });
    out
}

pub(crate) fn canonical_sink(prop: &PropSpec, site_kind: NodeKind) -> Sink {
    prop.prop_type.canonical_sink(site_kind)
}

struct Walker<'a> {
    bp: &'a Blueprint,
    mu: Framework,
    layout: InstanceLayout,
    plan: Vec<PlanItem>,
}

impl<'a> Walker<'a> {
    fn event(&mut self, e: EmissionEvent) {
        self.plan.push(PlanItem::Event(e));
    }

    fn instance_binds(&mut self, instance: NodeId, template: &Template) {
        let sites = slot_site_kinds(template);
        let binding = &self.bp.instances[&instance].binding;
        for prop in &template.props {
            let site_kind = sites.get(&prop.name).copied().unwrap_or(NodeKind::Text);
            self.plan.push(PlanItem::Bind {
                instance,
                template_id: template.template_id.clone(),
                prop: prop.name.clone(),
                sink: canonical_sink(prop, site_kind),
                value: binding[&prop.name].clone(),
            });
        }
    }

    /// Concrete payload of a plain node, as markup events.
    fn payload_events(&mut self, kind: NodeKind, payload: &Payload) {
        match payload {
            Payload::Text(v) => self.event(EmissionEvent::TextContent(v.clone())),
            Payload::Url(v) => self.event(EmissionEvent::Attr {
                name: "href".into(),
                value: v.clone(),
            }),
            Payload::ImageSrc(v) => self.event(EmissionEvent::Attr {
                name: "src".into(),
                value: v.clone(),
            }),
            Payload::Placeholder(v) => self.event(EmissionEvent::Attr {
                name: "placeholder".into(),
                value: v.clone(),
            }),
            Payload::None => {
                let _ = kind;
            }
        }
    }

    fn open_with_class(&mut self, kind: NodeKind, parent: Option<NodeKind>) -> &'static str {
        let (tag, class) = tag_for(kind, parent);
        self.event(EmissionEvent::OpenTag(tag.into()));
        if let Some(c) = class {
            self.event(EmissionEvent::Attr {
                name: class_attr_name(self.mu).into(),
                value: c.into(),
            });
        }
        tag
    }

    /// Page-tree walk for component frameworks: instances become component
    /// references or loop constructs, everything else is plain markup.
    fn walk_page(&mut self, node: NodeId, parent: Option<NodeKind>) {
        if self.bp.instances.contains_key(&node) {
            if let Some(gi) = self.layout.loop_of_first.get(&node).copied() {
                let group = &self.bp.loop_groups[gi];
                let template = self
                    .bp
                    .template(&group.template_id)
                    .expect("validated blueprint");
                self.event(EmissionEvent::LoopStart {
                    template_id: group.template_id.clone(),
                    items_ref: items_ref_name(gi),
                });
                for member in group.members.clone() {
                    self.instance_binds(member, template);
                }
                self.event(EmissionEvent::LoopEnd);
                return;
            }
            if self.layout.loop_members.contains(&node) {
                return; // emitted by its group's first member
            }
            let template_id = self.bp.instances[&node].template_id.clone();
            let template = self.bp.template(&template_id).expect("validated blueprint");
            self.event(EmissionEvent::OpenTag(template_id.clone()));
            self.instance_binds(node, template);
            self.event(EmissionEvent::CloseTag(template_id));
            return;
        }
        let n = self.bp.tree.node(node);
        let tag = self.open_with_class(n.kind, parent);
        self.payload_events(n.kind, &n.payload.clone());
        for child in n.children.clone() {
            self.walk_page(child, Some(n.kind));
        }
        self.event(EmissionEvent::CloseTag(tag.into()));
    }

    /// HTML page walk: the replicate fallback. Instance subtrees expand
    /// inline with a binding event at every slot site; loop groups replicate
    /// one inline expansion per member with no loop events.
    fn walk_html(&mut self, node: NodeId, parent: Option<NodeKind>) {
        if let Some(inst) = self.bp.instances.get(&node) {
            let template = self
                .bp
                .template(&inst.template_id)
                .expect("validated blueprint");
            let skeleton = template.skeleton.clone();
            let template_id = template.template_id.clone();
            let sites = slot_site_kinds(template);
            let props: HashMap<String, &PropSpec> =
                template.props.iter().map(|p| (p.name.clone(), p)).collect();
            let sinks: HashMap<String, Sink> = props
                .iter()
                .map(|(name, p)| {
                    let kind = sites.get(name).copied().unwrap_or(NodeKind::Text);
                    (name.clone(), canonical_sink(p, kind))
                })
                .collect();
            self.walk_instance_html(node, &skeleton, &template_id, node, &sinks, parent);
            return;
        }
        let n = self.bp.tree.node(node);
        let tag = self.open_with_class(n.kind, parent);
        self.payload_events(n.kind, &n.payload.clone());
        for child in n.children.clone() {
            self.walk_html(child, Some(n.kind));
        }
        self.event(EmissionEvent::CloseTag(tag.into()));
    }

    fn walk_instance_html(
        &mut self,
        node: NodeId,
        skel: &SkeletonNode,
        template_id: &str,
        instance_root: NodeId,
        sinks: &HashMap<String, Sink>,
        parent: Option<NodeKind>,
    ) {
        let tag = self.open_with_class(skel.kind, parent);
        match &skel.payload {
            SkeletonPayload::Const(p) => {
                let p = p.clone();
                self.payload_events(skel.kind, &p);
            }
            SkeletonPayload::Slot(name) => {
                let value = self.bp.instances[&instance_root].binding[name].clone();
                self.plan.push(PlanItem::Bind {
                    instance: instance_root,
                    template_id: template_id.to_string(),
                    prop: name.clone(),
                    sink: sinks[name],
                    value,
                });
            }
        }
        let children = self.bp.tree.node(node).children.clone();
        for (child, skel_child) in children.iter().zip(skel.children.iter()) {
            self.walk_instance_html(*child, skel_child, template_id, instance_root, sinks, Some(skel.kind));
        }
        self.event(EmissionEvent::CloseTag(tag.into()));
    }

    /// Component skeleton markup: constant payloads are concrete, slot sites
    /// reference props with the framework's binding syntax.
    fn walk_component(&mut self, skel: &SkeletonNode, parent: Option<NodeKind>) {
        let tag = self.open_with_class(skel.kind, parent);
        match &skel.payload {
            SkeletonPayload::Const(p) => {
                let p = p.clone();
                self.payload_events(skel.kind, &p);
            }
            SkeletonPayload::Slot(name) => {
                let attr_name = match skel.kind {
                    NodeKind::Media => "src",
                    NodeKind::Link => "href",
                    NodeKind::Control => "placeholder",
                    _ => "",
                };
                match (self.mu, skel.kind) {
                    (Framework::React, NodeKind::Text) => {
                        self.event(EmissionEvent::TextContent(format!("{{{name}}}")));
                    }
                    (Framework::React, _) => self.event(EmissionEvent::Attr {
                        name: attr_name.into(),
                        value: format!("{{{name}}}"),
                    }),
                    (Framework::Vue, NodeKind::Text) | (Framework::Angular, NodeKind::Text) => {
                        self.event(EmissionEvent::TextContent(format!("{{{{ {name} }}}}")));
                    }
                    (Framework::Vue, _) => self.event(EmissionEvent::Attr {
                        name: format!(":{attr_name}"),
                        value: name.clone(),
                    }),
                    (Framework::Angular, _) => self.event(EmissionEvent::Attr {
                        name: format!("[{attr_name}]"),
                        value: name.clone(),
                    }),
                    (Framework::Html, _) => unreachable!("HTML has no component files"),
                }
            }
        }
        for child in skel.children.clone() {
            self.walk_component(&child, Some(skel.kind));
        }
        self.event(EmissionEvent::CloseTag(tag.into()));
    }
}

/// The full expected plan for one blueprint and framework.
pub(crate) fn build_plan(bp: &Blueprint, mu: Framework) -> Vec<PlanItem> {
    let mut w = Walker {
        bp,
        mu,
        layout: InstanceLayout::of(bp),
        plan: Vec::new(),
    };
    match mu {
        Framework::Html => {
            w.event(EmissionEvent::FileStart("index.html".into()));
            w.walk_html(bp.tree.root(), None);
            w.event(EmissionEvent::FileEnd);
        }
        Framework::React | Framework::Vue | Framework::Angular => {
            for template in &bp.templates {
                let paths = component_paths(mu, &template.template_id);
                w.event(EmissionEvent::FileStart(paths[0].clone()));
                w.walk_component(&template.skeleton.clone(), None);
                w.event(EmissionEvent::FileEnd);
                for extra in &paths[1..] {
                    // companion files (Angular class) carry no markup events
                    w.event(EmissionEvent::FileStart(extra.clone()));
                    w.event(EmissionEvent::FileEnd);
                }
            }
            let entries = entry_paths(mu);
            w.event(EmissionEvent::FileStart(entries[0].clone()));
            w.walk_page(bp.tree.root(), None);
            w.event(EmissionEvent::FileEnd);
            for extra in &entries[1..] {
                w.event(EmissionEvent::FileStart(extra.clone()));
                w.event(EmissionEvent::FileEnd);
            }
        }
    }
    w.plan
}

/// Reference event stream of the dispatcher: the plan flattened, with each
/// planned binding realized as a `BindProp` event.
pub fn dispatch(bp: &Blueprint, mu: Framework) -> Vec<EmissionEvent> {
    build_plan(bp, mu)
        .into_iter()
        .map(|item| match item {
            PlanItem::Event(e) => e,
            PlanItem::Bind {
                template_id,
                prop,
                sink,
                value,
                ..
            } => EmissionEvent::BindProp {
                template_id,
                prop,
                sink,
                value,
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::mine::{mine, MinerConfig};

    fn mined_cards() -> Blueprint {
        mine(&demo::repeated_cards(3), &MinerConfig::default()).unwrap()
    }

    #[test]
    fn react_loop_emits_one_loop_with_three_records() {
        let bp = mined_cards();
        let events = dispatch(&bp, Framework::React);
        let loops: Vec<_> = events
            .iter()
            .filter(|e| matches!(e, EmissionEvent::LoopStart { .. }))
            .collect();
        assert_eq!(loops.len(), 1);
        let binds = events
            .iter()
            .filter(|e| matches!(e, EmissionEvent::BindProp { .. }))
            .count();
        let props = bp.templates[0].props.len();
        assert_eq!(binds, 3 * props);
    }

    #[test]
    fn html_replicates_instead_of_looping() {
        let bp = mined_cards();
        let events = dispatch(&bp, Framework::Html);
        assert!(events
            .iter()
            .all(|e| !matches!(e, EmissionEvent::LoopStart { .. } | EmissionEvent::LoopEnd)));
        // three replicated tiles
        let tiles = events
            .iter()
            .filter(|e| matches!(e, EmissionEvent::Attr { name, value } if name == "class" && value == "tile"))
            .count();
        assert_eq!(tiles, 3);
    }

    #[test]
    fn zero_template_blueprint_is_entry_only() {
        let tree = demo::tree_of(&[(0, "frame", "", &[1]), (1, "text", "hi", &[])]);
        let bp = Blueprint::from_tree(tree);
        let events = dispatch(&bp, Framework::Vue);
        let files: Vec<_> = events
            .iter()
            .filter_map(|e| match e {
                EmissionEvent::FileStart(p) => Some(p.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(files, vec!["App.vue".to_string()]);
    }
}
