//! Hierarchical UI intermediate representation: node vocabulary, trees,
//! component templates, and the blueprint container shared by every stage.

mod json;

pub use json::{parse_blueprint, parse_box_items, serialize_blueprint, serialize_box_items};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Closed node vocabulary. `frame`, `stack`, `row`, `tile` are containers;
/// `text`, `media`, `control`, `link` carry payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Frame,
    Stack,
    Row,
    Tile,
    Text,
    Media,
    Control,
    Link,
}

impl NodeKind {
    pub const ALL: [NodeKind; 8] = [
        NodeKind::Frame,
        NodeKind::Stack,
        NodeKind::Row,
        NodeKind::Tile,
        NodeKind::Text,
        NodeKind::Media,
        NodeKind::Control,
        NodeKind::Link,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Frame => "frame",
            NodeKind::Stack => "stack",
            NodeKind::Row => "row",
            NodeKind::Tile => "tile",
            NodeKind::Text => "text",
            NodeKind::Media => "media",
            NodeKind::Control => "control",
            NodeKind::Link => "link",
        }
    }

    pub fn parse(s: &str) -> Option<NodeKind> {
        NodeKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    pub fn is_container(self) -> bool {
        matches!(
            self,
            NodeKind::Frame | NodeKind::Stack | NodeKind::Row | NodeKind::Tile
        )
    }

    pub fn is_payload_bearing(self) -> bool {
        !self.is_container()
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized page rectangle; coordinates are unitless fractions with
/// `0 <= x0 < x1 <= 1` and `0 <= y0 < y1 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<BBox, BlueprintError> {
        let b = BBox { x0, y0, x1, y1 };
        if !b.is_valid() {
            return Err(BlueprintError::InvalidBox {
                coords: [x0, y0, x1, y1],
            });
        }
        Ok(b)
    }

    pub fn is_valid(&self) -> bool {
        let ord = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        ord(self.x0, self.x1) && ord(self.y0, self.y1) && self.x0 >= 0.0 && self.y0 >= 0.0 && self.x1 <= 1.0 && self.y1 <= 1.0
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

/// Payload slot of a node. Containers carry `None`; `text` carries `Text`;
/// `media` carries `ImageSrc`; `link` carries `Url`; `control` carries
/// `Placeholder` or `None`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    Text(String),
    Url(String),
    ImageSrc(String),
    Placeholder(String),
    None,
}

impl Payload {
    pub fn tag(&self) -> PayloadTag {
        match self {
            Payload::Text(_) => PayloadTag::Text,
            Payload::Url(_) => PayloadTag::Url,
            Payload::ImageSrc(_) => PayloadTag::Image,
            Payload::Placeholder(_) => PayloadTag::Placeholder,
            Payload::None => PayloadTag::None,
        }
    }

    pub fn value(&self) -> Option<&str> {
        match self {
            Payload::Text(v) | Payload::Url(v) | Payload::ImageSrc(v) | Payload::Placeholder(v) => {
                Some(v)
            }
            Payload::None => None,
        }
    }

    /// Payload/kind compatibility table.
    pub fn compatible_with(&self, kind: NodeKind) -> bool {
        match kind {
            NodeKind::Frame | NodeKind::Stack | NodeKind::Row | NodeKind::Tile => {
                matches!(self, Payload::None)
            }
            NodeKind::Text => matches!(self, Payload::Text(_)),
            NodeKind::Media => matches!(self, Payload::ImageSrc(_)),
            NodeKind::Link => matches!(self, Payload::Url(_)),
            NodeKind::Control => matches!(self, Payload::Placeholder(_) | Payload::None),
        }
    }
}

/// Payload with the value abstracted away; the label component used by
/// canonical forms and structural tree comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PayloadTag {
    Text,
    Url,
    Image,
    Placeholder,
    None,
}

impl PayloadTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PayloadTag::Text => "txt",
            PayloadTag::Url => "url",
            PayloadTag::Image => "img",
            PayloadTag::Placeholder => "ph",
            PayloadTag::None => "none",
        }
    }
}

/// Document-unique node identifier; explicit in the file format so instance
/// maps and loop groups reference nodes stably.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UiNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub bbox: Option<BBox>,
    pub payload: Payload,
    pub children: Vec<NodeId>,
}

/// Rooted ordered tree over [`UiNode`]s. Construction validates the tree
/// shape (unique ids, single parent, no cycles, full reachability) and the
/// payload/kind table; sibling order is significant everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct UiTree {
    root: NodeId,
    nodes: BTreeMap<NodeId, UiNode>,
    parent: HashMap<NodeId, NodeId>,
    preorder: Vec<NodeId>,
}

impl UiTree {
    pub fn new(root: NodeId, node_list: Vec<UiNode>) -> Result<UiTree, BlueprintError> {
        let mut nodes: BTreeMap<NodeId, UiNode> = BTreeMap::new();
        for n in node_list {
            let id = n.id;
            if nodes.insert(id, n).is_some() {
                return Err(BlueprintError::DuplicateNodeId { id });
            }
        }
        Self::from_map(root, nodes)
    }

    fn from_map(root: NodeId, nodes: BTreeMap<NodeId, UiNode>) -> Result<UiTree, BlueprintError> {
        if !nodes.contains_key(&root) {
            return Err(BlueprintError::DanglingReference {
                from: "root".into(),
                id: root,
            });
        }
        let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
        for (id, n) in &nodes {
            if !n.payload.compatible_with(n.kind) {
                return Err(BlueprintError::PayloadMismatch {
                    id: *id,
                    kind: n.kind,
                    payload: n.payload.tag().as_str(),
                });
            }
            // children only on containers and on payload-bearing link/control
            if !n.children.is_empty()
                && matches!(n.kind, NodeKind::Text | NodeKind::Media)
            {
                return Err(BlueprintError::ChildrenNotAllowed { id: *id, kind: n.kind });
            }
            for c in &n.children {
                if !nodes.contains_key(c) {
                    return Err(BlueprintError::DanglingReference {
                        from: format!("children of node {id}"),
                        id: *c,
                    });
                }
                if parent.insert(*c, *id).is_some() {
                    return Err(BlueprintError::MultipleParents { id: *c });
                }
            }
        }
        if parent.contains_key(&root) {
            return Err(BlueprintError::RootHasParent { id: root });
        }
        // reachability doubles as the cycle check: a cycle detached from the
        // root leaves its nodes unreached.
        let mut preorder = Vec::with_capacity(nodes.len());
        let mut stack = vec![root];
        let mut seen: HashSet<NodeId> = HashSet::new();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return Err(BlueprintError::MultipleParents { id });
            }
            preorder.push(id);
            let n = &nodes[&id];
            for c in n.children.iter().rev() {
                stack.push(*c);
            }
        }
        if seen.len() != nodes.len() {
            let orphan = *nodes.keys().find(|id| !seen.contains(id)).unwrap();
            return Err(BlueprintError::UnreachableNode { id: orphan });
        }
        Ok(UiTree {
            root,
            nodes,
            parent,
            preorder,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, id: NodeId) -> &UiNode {
        &self.nodes[&id]
    }

    pub fn get(&self, id: NodeId) -> Option<&UiNode> {
        self.nodes.get(&id)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent.get(&id).copied()
    }

    /// Document order (depth-first, children in sibling order).
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// Position of a node in document order.
    pub fn preorder_index(&self, id: NodeId) -> usize {
        self.preorder.iter().position(|n| *n == id).expect("node in tree")
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Nodes in ascending id order.
    pub fn nodes_iter(&self) -> impl Iterator<Item = (&NodeId, &UiNode)> {
        self.nodes.iter()
    }

    pub fn subtree_nodes(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in self.node(n).children.iter().rev() {
                stack.push(*c);
            }
        }
        out
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        self.subtree_nodes(id).len()
    }

    /// Structural equality of two subtrees, ignoring node ids and boxes.
    /// `strict` additionally compares payload values.
    pub fn subtree_eq(&self, a: NodeId, other: &UiTree, b: NodeId, strict: bool) -> bool {
        let na = self.node(a);
        let nb = other.node(b);
        if na.kind != nb.kind || na.children.len() != nb.children.len() {
            return false;
        }
        let payload_ok = if strict {
            na.payload == nb.payload
        } else {
            na.payload.tag() == nb.payload.tag()
        };
        if !payload_ok {
            return false;
        }
        na.children
            .iter()
            .zip(nb.children.iter())
            .all(|(ca, cb)| self.subtree_eq(*ca, other, *cb, strict))
    }
}

/// Attribute positions a prop value may flow into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sink {
    #[serde(rename = "src")]
    Src,
    #[serde(rename = "href")]
    Href,
    #[serde(rename = "text-content")]
    TextContent,
    #[serde(rename = "placeholder")]
    Placeholder,
    #[serde(rename = "loop-body")]
    LoopBody,
}

impl Sink {
    pub fn as_str(self) -> &'static str {
        match self {
            Sink::Src => "src",
            Sink::Href => "href",
            Sink::TextContent => "text-content",
            Sink::Placeholder => "placeholder",
            Sink::LoopBody => "loop-body",
        }
    }

    pub fn parse(s: &str) -> Option<Sink> {
        Some(match s {
            "src" => Sink::Src,
            "href" => Sink::Href,
            "text-content" => Sink::TextContent,
            "placeholder" => Sink::Placeholder,
            "loop-body" => Sink::LoopBody,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropType {
    TextVal,
    UrlVal,
    ImageVal,
    PlaceholderVal,
    Items(Box<Template>),
}

impl PropType {
    /// Type-to-sink table: URL props may only land in `src`/`href`, images in
    /// `src`, text in text content, placeholders in `placeholder`, item lists
    /// in loop bodies.
    pub fn allowed_sinks(&self) -> BTreeSet<Sink> {
        let sinks: &[Sink] = match self {
            PropType::TextVal => &[Sink::TextContent],
            PropType::UrlVal => &[Sink::Src, Sink::Href],
            PropType::ImageVal => &[Sink::Src],
            PropType::PlaceholderVal => &[Sink::Placeholder],
            PropType::Items(_) => &[Sink::LoopBody],
        };
        sinks.iter().copied().collect()
    }

    /// The sink the reference dispatcher materializes for this prop type given
    /// the node kind at the slot site.
    pub fn canonical_sink(&self, kind: NodeKind) -> Sink {
        match self {
            PropType::TextVal => Sink::TextContent,
            PropType::UrlVal => {
                if kind == NodeKind::Media {
                    Sink::Src
                } else {
                    Sink::Href
                }
            }
            PropType::ImageVal => Sink::Src,
            PropType::PlaceholderVal => Sink::Placeholder,
            PropType::Items(_) => Sink::LoopBody,
        }
    }

    /// Whether a concrete payload may bind to this prop type. `None` is legal
    /// only for placeholder props (controls without placeholder text).
    pub fn accepts(&self, payload: &Payload) -> bool {
        match (self, payload) {
            (PropType::TextVal, Payload::Text(_)) => true,
            (PropType::UrlVal, Payload::Url(_)) => true,
            (PropType::ImageVal, Payload::ImageSrc(_)) => true,
            (PropType::PlaceholderVal, Payload::Placeholder(_) | Payload::None) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropSpec {
    pub name: String,
    pub prop_type: PropType,
    pub sinks: BTreeSet<Sink>,
}

/// Skeleton payload: either fixed content shared by all instances or a
/// reference to one of the template's props.
#[derive(Debug, Clone, PartialEq)]
pub enum SkeletonPayload {
    Const(Payload),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonNode {
    pub kind: NodeKind,
    pub payload: SkeletonPayload,
    pub children: Vec<SkeletonNode>,
}

impl SkeletonNode {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SkeletonNode::size).sum::<usize>()
    }

    pub fn for_each(&self, f: &mut impl FnMut(&SkeletonNode)) {
        f(self);
        for c in &self.children {
            c.for_each(f);
        }
    }
}

/// Mined component skeleton with typed prop slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub template_id: String,
    pub skeleton: SkeletonNode,
    pub props: Vec<PropSpec>,
    pub support: u32,
}

impl Template {
    pub fn prop(&self, name: &str) -> Option<&PropSpec> {
        self.props.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub template_id: String,
    pub binding: BTreeMap<String, Payload>,
}

/// A run of >= 2 consecutive sibling instances of one template; emitted as a
/// single loop construct rather than unrolled.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopGroup {
    pub parent: NodeId,
    pub template_id: String,
    pub members: Vec<NodeId>,
}

/// Tree plus mined template bank, instance bindings, and loop groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Blueprint {
    pub tree: UiTree,
    pub templates: Vec<Template>,
    pub instances: BTreeMap<NodeId, Instance>,
    pub loop_groups: Vec<LoopGroup>,
}

impl Blueprint {
    /// Pre-mining blueprint: a bare tree with empty banks.
    pub fn from_tree(tree: UiTree) -> Blueprint {
        Blueprint {
            tree,
            templates: Vec::new(),
            instances: BTreeMap::new(),
            loop_groups: Vec::new(),
        }
    }

    pub fn template(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.template_id == id)
    }

    /// Node ids of loop-group members, for telling loop instances apart from
    /// standalone ones.
    pub fn loop_member_ids(&self) -> HashSet<NodeId> {
        self.loop_groups
            .iter()
            .flat_map(|g| g.members.iter().copied())
            .collect()
    }

    /// Instances of one template in document order.
    pub fn instances_of(&self, template_id: &str) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .instances
            .iter()
            .filter(|(_, inst)| inst.template_id == template_id)
            .map(|(id, _)| *id)
            .collect();
        ids.sort_by_key(|id| self.tree.preorder_index(*id));
        ids
    }

    /// Full structural validation of every blueprint invariant: template
    /// well-formedness, binding totality, instance/skeleton agreement,
    /// instance non-overlap, and loop-group shape.
    pub fn validate(&self) -> Result<(), BlueprintError> {
        let mut ids_seen: HashSet<String> = HashSet::new();
        for t in &self.templates {
            validate_template(t)?;
            if !ids_seen.insert(t.template_id.clone()) {
                return Err(BlueprintError::TemplateInvariant {
                    template_id: t.template_id.clone(),
                    reason: "duplicate template_id".into(),
                });
            }
        }

        let mut claimed: HashMap<NodeId, NodeId> = HashMap::new();
        let mut per_template: HashMap<&str, u32> = HashMap::new();
        for (id, inst) in &self.instances {
            let Some(node) = self.tree.get(*id) else {
                return Err(BlueprintError::DanglingReference {
                    from: "instances".into(),
                    id: *id,
                });
            };
            let _ = node;
            let Some(tpl) = self.template(&inst.template_id) else {
                return Err(BlueprintError::UnknownTemplate {
                    template_id: inst.template_id.clone(),
                });
            };
            *per_template.entry(tpl.template_id.as_str()).or_insert(0) += 1;
            // totality: binding covers exactly the template props
            for p in &tpl.props {
                let Some(v) = inst.binding.get(&p.name) else {
                    return Err(BlueprintError::BindingMismatch {
                        instance: *id,
                        reason: format!("missing binding for prop {}", p.name),
                    });
                };
                if !p.prop_type.accepts(v) {
                    return Err(BlueprintError::BindingMismatch {
                        instance: *id,
                        reason: format!("prop {} bound with incompatible payload", p.name),
                    });
                }
            }
            for name in inst.binding.keys() {
                if tpl.prop(name).is_none() {
                    return Err(BlueprintError::BindingMismatch {
                        instance: *id,
                        reason: format!("binding names unknown prop {name}"),
                    });
                }
            }
            // expansion exactness: skeleton + binding reproduces the stored subtree
            check_instance_matches(&self.tree, *id, tpl, inst)?;
            for n in self.tree.subtree_nodes(*id) {
                if let Some(prev) = claimed.insert(n, *id) {
                    return Err(BlueprintError::OverlappingInstances {
                        node: n,
                        first: prev,
                        second: *id,
                    });
                }
            }
        }
        for t in &self.templates {
            let count = per_template.get(t.template_id.as_str()).copied().unwrap_or(0);
            if count != t.support {
                return Err(BlueprintError::TemplateInvariant {
                    template_id: t.template_id.clone(),
                    reason: format!("support {} != instance count {}", t.support, count),
                });
            }
        }

        let mut grouped: HashSet<NodeId> = HashSet::new();
        for g in &self.loop_groups {
            if g.members.len() < 2 {
                return Err(BlueprintError::BadLoopGroup {
                    reason: format!("group under {} has fewer than 2 members", g.parent),
                });
            }
            let Some(parent) = self.tree.get(g.parent) else {
                return Err(BlueprintError::DanglingReference {
                    from: "loop_groups".into(),
                    id: g.parent,
                });
            };
            // members must be consecutive siblings, in order, all instances of
            // the group's template
            let Some(start) = parent.children.iter().position(|c| *c == g.members[0]) else {
                return Err(BlueprintError::BadLoopGroup {
                    reason: format!("member {} is not a child of {}", g.members[0], g.parent),
                });
            };
            for (i, m) in g.members.iter().enumerate() {
                if parent.children.get(start + i) != Some(m) {
                    return Err(BlueprintError::BadLoopGroup {
                        reason: format!("members under {} are not consecutive siblings", g.parent),
                    });
                }
                match self.instances.get(m) {
                    Some(inst) if inst.template_id == g.template_id => {}
                    _ => {
                        return Err(BlueprintError::BadLoopGroup {
                            reason: format!("member {m} is not an instance of {}", g.template_id),
                        });
                    }
                }
                if !grouped.insert(*m) {
                    return Err(BlueprintError::BadLoopGroup {
                        reason: format!("member {m} appears in two loop groups"),
                    });
                }
            }
        }
        Ok(())
    }

    /// The loop-expanded tree: every instance re-expanded from its template
    /// and binding. Expansion is exact by construction, so this verifies all
    /// instances and returns the stored tree.
    pub fn expanded_tree(&self) -> Result<UiTree, BlueprintError> {
        self.validate()?;
        Ok(self.tree.clone())
    }
}

fn validate_template(t: &Template) -> Result<(), BlueprintError> {
    let err = |reason: String| BlueprintError::TemplateInvariant {
        template_id: t.template_id.clone(),
        reason,
    };
    if t.support < 2 {
        return Err(err(format!("support {} < 2", t.support)));
    }
    let mut names: HashSet<&str> = HashSet::new();
    for p in &t.props {
        if !names.insert(&p.name) {
            return Err(err(format!("duplicate prop name {}", p.name)));
        }
        if p.sinks != p.prop_type.allowed_sinks() {
            return Err(err(format!("prop {} violates the type-to-sink table", p.name)));
        }
        if let PropType::Items(inner) = &p.prop_type {
            validate_template(inner)?;
        }
    }
    // slot/prop bijection: every slot names a prop, every prop has >= 1 slot
    let mut referenced: HashSet<String> = HashSet::new();
    let mut slot_err = None;
    t.skeleton.for_each(&mut |n| {
        if let SkeletonPayload::Slot(name) = &n.payload {
            if names.contains(name.as_str()) {
                referenced.insert(name.clone());
            } else if slot_err.is_none() {
                slot_err = Some(name.clone());
            }
        }
    });
    if let Some(name) = slot_err {
        return Err(err(format!("skeleton slot {name} names no prop")));
    }
    for p in &t.props {
        if matches!(p.prop_type, PropType::Items(_)) {
            continue;
        }
        if !referenced.contains(&p.name) {
            return Err(err(format!("prop {} referenced by no slot", p.name)));
        }
    }
    Ok(())
}

fn check_instance_matches(
    tree: &UiTree,
    root: NodeId,
    tpl: &Template,
    inst: &Instance,
) -> Result<(), BlueprintError> {
    fn walk(
        tree: &UiTree,
        node: NodeId,
        skel: &SkeletonNode,
        inst: &Instance,
        instance_root: NodeId,
    ) -> Result<(), BlueprintError> {
        let n = tree.node(node);
        let fail = |reason: String| BlueprintError::InstanceMismatch {
            instance: instance_root,
            reason,
        };
        if n.kind != skel.kind {
            return Err(fail(format!("kind {} != skeleton {}", n.kind, skel.kind)));
        }
        match &skel.payload {
            SkeletonPayload::Const(p) => {
                if n.payload != *p {
                    return Err(fail(format!("constant payload mismatch at node {node}")));
                }
            }
            SkeletonPayload::Slot(name) => {
                let bound = inst.binding.get(name).ok_or_else(|| {
                    fail(format!("slot {name} unbound"))
                })?;
                if n.payload != *bound {
                    return Err(fail(format!("slot {name} binding differs from node {node}")));
                }
            }
        }
        if n.children.len() != skel.children.len() {
            return Err(fail(format!("arity mismatch at node {node}")));
        }
        for (c, s) in n.children.iter().zip(skel.children.iter()) {
            walk(tree, *c, s, inst, instance_root)?;
        }
        Ok(())
    }
    walk(tree, root, &tpl.skeleton, inst, root)
}

#[derive(Debug, Error)]
pub enum BlueprintError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    MalformedJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {0} (expected 1)")]
    UnsupportedVersion(u64),
    #[error("unknown node kind \"{0}\"")]
    UnknownKind(String),
    #[error("invalid bounding box [{:.6}, {:.6}, {:.6}, {:.6}]", coords[0], coords[1], coords[2], coords[3])]
    InvalidBox { coords: [f64; 4] },
    #[error("node {id}: payload {payload} is incompatible with kind {kind}")]
    PayloadMismatch {
        id: NodeId,
        kind: NodeKind,
        payload: &'static str,
    },
    #[error("node {id}: kind {kind} cannot have children")]
    ChildrenNotAllowed { id: NodeId, kind: NodeKind },
    #[error("duplicate node id {id}")]
    DuplicateNodeId { id: NodeId },
    #[error("{from} references missing node {id}")]
    DanglingReference { from: String, id: NodeId },
    #[error("node {id} has multiple parents")]
    MultipleParents { id: NodeId },
    #[error("root node {id} has a parent")]
    RootHasParent { id: NodeId },
    #[error("node {id} is unreachable from the root")]
    UnreachableNode { id: NodeId },
    #[error("node {node} is claimed by instances {first} and {second}")]
    OverlappingInstances {
        node: NodeId,
        first: NodeId,
        second: NodeId,
    },
    #[error("unknown template \"{template_id}\"")]
    UnknownTemplate { template_id: String },
    #[error("template {template_id}: {reason}")]
    TemplateInvariant { template_id: String, reason: String },
    #[error("instance {instance}: {reason}")]
    BindingMismatch { instance: NodeId, reason: String },
    #[error("instance {instance} does not match its template skeleton: {reason}")]
    InstanceMismatch { instance: NodeId, reason: String },
    #[error("loop group invalid: {reason}")]
    BadLoopGroup { reason: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: u32, kind: NodeKind, payload: Payload) -> UiNode {
        UiNode {
            id: NodeId(id),
            kind,
            bbox: None,
            payload,
            children: vec![],
        }
    }

    fn container(id: u32, kind: NodeKind, children: &[u32]) -> UiNode {
        UiNode {
            id: NodeId(id),
            kind,
            bbox: None,
            payload: Payload::None,
            children: children.iter().map(|c| NodeId(*c)).collect(),
        }
    }

    #[test]
    fn kind_vocabulary_is_closed() {
        assert_eq!(NodeKind::parse("frame"), Some(NodeKind::Frame));
        assert_eq!(NodeKind::parse("button"), None);
    }

    #[test]
    fn bbox_rejects_bad_coordinate_order() {
        assert!(BBox::new(0.5, 0.0, 0.2, 1.0).is_err());
        assert!(BBox::new(0.0, 0.0, 1.0, 1.0).is_ok());
        assert!(BBox::new(-0.1, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn payload_kind_table() {
        assert!(Payload::None.compatible_with(NodeKind::Frame));
        assert!(!Payload::Text("x".into()).compatible_with(NodeKind::Frame));
        assert!(Payload::Text("x".into()).compatible_with(NodeKind::Text));
        assert!(Payload::Placeholder("x".into()).compatible_with(NodeKind::Control));
        assert!(Payload::None.compatible_with(NodeKind::Control));
        assert!(!Payload::None.compatible_with(NodeKind::Link));
    }

    #[test]
    fn tree_rejects_multiple_parents() {
        let err = UiTree::new(
            NodeId(0),
            vec![
                container(0, NodeKind::Frame, &[1, 2]),
                container(1, NodeKind::Stack, &[3]),
                container(2, NodeKind::Stack, &[3]),
                leaf(3, NodeKind::Text, Payload::Text("x".into())),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, BlueprintError::MultipleParents { .. }));
    }

    #[test]
    fn tree_rejects_unreachable_nodes() {
        let err = UiTree::new(
            NodeId(0),
            vec![
                container(0, NodeKind::Frame, &[]),
                leaf(1, NodeKind::Text, Payload::Text("x".into())),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, BlueprintError::UnreachableNode { .. }));
    }

    #[test]
    fn tree_rejects_children_on_text() {
        let err = UiTree::new(
            NodeId(0),
            vec![
                {
                    let mut n = leaf(0, NodeKind::Text, Payload::Text("x".into()));
                    n.children = vec![NodeId(1)];
                    n
                },
                leaf(1, NodeKind::Text, Payload::Text("y".into())),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, BlueprintError::ChildrenNotAllowed { .. }));
    }

    #[test]
    fn link_may_carry_child_text() {
        let tree = UiTree::new(
            NodeId(0),
            vec![
                {
                    let mut n = leaf(0, NodeKind::Link, Payload::Url("https://x".into()));
                    n.children = vec![NodeId(1)];
                    n
                },
                leaf(1, NodeKind::Text, Payload::Text("go".into())),
            ],
        );
        assert!(tree.is_ok());
    }

    #[test]
    fn type_sink_table() {
        assert_eq!(
            PropType::UrlVal.allowed_sinks(),
            [Sink::Src, Sink::Href].into_iter().collect()
        );
        assert_eq!(
            PropType::ImageVal.allowed_sinks(),
            [Sink::Src].into_iter().collect()
        );
        assert_eq!(
            PropType::TextVal.allowed_sinks(),
            [Sink::TextContent].into_iter().collect()
        );
    }
}
