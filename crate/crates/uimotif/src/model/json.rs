//! Canonical on-disk JSON format for blueprints and box lists.
//!
//! Parsing accepts any JSON formatting; serialization is canonical so equal
//! blueprints always produce byte-identical documents: object keys sorted,
//! node records sorted by id, coordinates printed with exactly six decimal
//! digits, sibling order preserved verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use super::{
    BBox, Blueprint, BlueprintError, Instance, LoopGroup, NodeId, NodeKind, Payload, PropSpec,
    PropType, SkeletonNode, SkeletonPayload, Template, UiNode, UiTree,
};
use crate::ingest::BoxItem;

pub const FORMAT_VERSION: u64 = 1;

// ── wire types ──────────────────────────────────────────────────────────

#[derive(Deserialize)]
struct WireDoc {
    version: u64,
    root: u32,
    nodes: Vec<WireNode>,
    #[serde(default)]
    templates: Vec<WireTemplate>,
    #[serde(default)]
    instances: BTreeMap<String, WireInstance>,
    #[serde(default)]
    loop_groups: Vec<WireLoopGroup>,
}

#[derive(Deserialize)]
struct WireNode {
    id: u32,
    kind: String,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
    #[serde(default)]
    payload: Option<WirePayload>,
    #[serde(default)]
    children: Vec<u32>,
}

#[derive(Deserialize)]
struct WirePayload {
    #[serde(rename = "type")]
    ty: String,
    #[serde(default)]
    value: Option<String>,
}

#[derive(Deserialize)]
struct WireTemplate {
    template_id: String,
    skeleton: WireSkeleton,
    #[serde(default)]
    props: Vec<WireProp>,
    support: u32,
}

#[derive(Deserialize)]
struct WireSkeleton {
    kind: String,
    #[serde(default)]
    payload: Option<WirePayload>,
    #[serde(default)]
    slot: Option<String>,
    #[serde(default)]
    children: Vec<WireSkeleton>,
}

#[derive(Deserialize)]
struct WireProp {
    name: String,
    prop_type: WirePropType,
    sinks: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WirePropType {
    Simple(String),
    Items { items: Box<WireTemplate> },
}

#[derive(Deserialize)]
struct WireInstance {
    template_id: String,
    #[serde(default)]
    binding: BTreeMap<String, WirePayload>,
}

#[derive(Deserialize)]
struct WireLoopGroup {
    parent: u32,
    template_id: String,
    members: Vec<u32>,
}

#[derive(Deserialize)]
struct WireBoxItem {
    kind: String,
    bbox: [f64; 4],
    #[serde(default)]
    payload: Option<WirePayload>,
}

// ── parsing ─────────────────────────────────────────────────────────────

fn json_err(e: &serde_json::Error) -> BlueprintError {
    BlueprintError::MalformedJson {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn parse_kind(s: &str) -> Result<NodeKind, BlueprintError> {
    NodeKind::parse(s).ok_or_else(|| BlueprintError::UnknownKind(s.to_string()))
}

fn parse_payload(w: Option<&WirePayload>) -> Result<Payload, BlueprintError> {
    let Some(w) = w else { return Ok(Payload::None) };
    let need_value = || {
        w.value.clone().ok_or(BlueprintError::MalformedJson {
            line: 0,
            column: 0,
            message: format!("payload of type \"{}\" requires a value", w.ty),
        })
    };
    Ok(match w.ty.as_str() {
        "text" => Payload::Text(need_value()?),
        "url" => Payload::Url(need_value()?),
        "image" => Payload::ImageSrc(need_value()?),
        "placeholder" => Payload::Placeholder(need_value()?),
        "none" => Payload::None,
        other => {
            return Err(BlueprintError::MalformedJson {
                line: 0,
                column: 0,
                message: format!("unknown payload type \"{other}\""),
            })
        }
    })
}

fn parse_bbox(raw: &[f64; 4]) -> Result<BBox, BlueprintError> {
    BBox::new(raw[0], raw[1], raw[2], raw[3])
}

fn parse_node(w: &WireNode) -> Result<UiNode, BlueprintError> {
    Ok(UiNode {
        id: NodeId(w.id),
        kind: parse_kind(&w.kind)?,
        bbox: w.bbox.as_ref().map(parse_bbox).transpose()?,
        payload: parse_payload(w.payload.as_ref())?,
        children: w.children.iter().map(|c| NodeId(*c)).collect(),
    })
}

fn parse_skeleton(w: &WireSkeleton) -> Result<SkeletonNode, BlueprintError> {
    let payload = match (&w.payload, &w.slot) {
        (Some(_), Some(_)) => {
            return Err(BlueprintError::MalformedJson {
                line: 0,
                column: 0,
                message: "skeleton node has both payload and slot".into(),
            })
        }
        (Some(p), None) => SkeletonPayload::Const(parse_payload(Some(p))?),
        (None, Some(s)) => SkeletonPayload::Slot(s.clone()),
        (None, None) => SkeletonPayload::Const(Payload::None),
    };
    Ok(SkeletonNode {
        kind: parse_kind(&w.kind)?,
        payload,
        children: w
            .children
            .iter()
            .map(parse_skeleton)
            .collect::<Result<_, _>>()?,
    })
}

fn parse_template(w: &WireTemplate) -> Result<Template, BlueprintError> {
    let props = w
        .props
        .iter()
        .map(|p| {
            let prop_type = match &p.prop_type {
                WirePropType::Simple(s) => match s.as_str() {
                    "text" => PropType::TextVal,
                    "url" => PropType::UrlVal,
                    "image" => PropType::ImageVal,
                    "placeholder" => PropType::PlaceholderVal,
                    other => {
                        return Err(BlueprintError::MalformedJson {
                            line: 0,
                            column: 0,
                            message: format!("unknown prop type \"{other}\""),
                        })
                    }
                },
                WirePropType::Items { items } => PropType::Items(Box::new(parse_template(items)?)),
            };
            let sinks = p
                .sinks
                .iter()
                .map(|s| {
                    super::Sink::parse(s).ok_or(BlueprintError::MalformedJson {
                        line: 0,
                        column: 0,
                        message: format!("unknown sink \"{s}\""),
                    })
                })
                .collect::<Result<_, _>>()?;
            Ok(PropSpec {
                name: p.name.clone(),
                prop_type,
                sinks,
            })
        })
        .collect::<Result<Vec<_>, BlueprintError>>()?;
    Ok(Template {
        template_id: w.template_id.clone(),
        skeleton: parse_skeleton(&w.skeleton)?,
        props,
        support: w.support,
    })
}

/// Parse and fully validate a blueprint document.
pub fn parse_blueprint(bytes: &[u8]) -> Result<Blueprint, BlueprintError> {
    let doc: WireDoc = serde_json::from_slice(bytes).map_err(|e| json_err(&e))?;
    if doc.version != FORMAT_VERSION {
        return Err(BlueprintError::UnsupportedVersion(doc.version));
    }
    let nodes = doc
        .nodes
        .iter()
        .map(parse_node)
        .collect::<Result<Vec<_>, _>>()?;
    let tree = UiTree::new(NodeId(doc.root), nodes)?;

    let templates = doc
        .templates
        .iter()
        .map(parse_template)
        .collect::<Result<Vec<_>, _>>()?;

    let mut instances = BTreeMap::new();
    for (key, w) in &doc.instances {
        let id: u32 = key.parse().map_err(|_| BlueprintError::MalformedJson {
            line: 0,
            column: 0,
            message: format!("instance key \"{key}\" is not a node id"),
        })?;
        let binding = w
            .binding
            .iter()
            .map(|(name, p)| Ok((name.clone(), parse_payload(Some(p))?)))
            .collect::<Result<BTreeMap<_, _>, BlueprintError>>()?;
        instances.insert(
            NodeId(id),
            Instance {
                template_id: w.template_id.clone(),
                binding,
            },
        );
    }

    let loop_groups = doc
        .loop_groups
        .iter()
        .map(|g| LoopGroup {
            parent: NodeId(g.parent),
            template_id: g.template_id.clone(),
            members: g.members.iter().map(|m| NodeId(*m)).collect(),
        })
        .collect();

    let bp = Blueprint {
        tree,
        templates,
        instances,
        loop_groups,
    };
    bp.validate()?;
    Ok(bp)
}

/// Parse a flat box list (the ingest input format): a JSON array of
/// `{kind, bbox, payload?}` records.
pub fn parse_box_items(bytes: &[u8]) -> Result<Vec<BoxItem>, BlueprintError> {
    let raw: Vec<WireBoxItem> = serde_json::from_slice(bytes).map_err(|e| json_err(&e))?;
    raw.iter()
        .map(|w| {
            Ok(BoxItem {
                kind: parse_kind(&w.kind)?,
                bbox: parse_bbox(&w.bbox)?,
                payload: parse_payload(w.payload.as_ref())?,
            })
        })
        .collect()
}

// ── canonical writer ────────────────────────────────────────────────────

struct Writer {
    out: String,
    indent: usize,
}

impl Writer {
    fn new() -> Writer {
        Writer {
            out: String::new(),
            indent: 0,
        }
    }

    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push(' ');
        }
    }

    fn string(&mut self, s: &str) {
        self.out.push('"');
        for ch in s.chars() {
            match ch {
                '"' => self.out.push_str("\\\""),
                '\\' => self.out.push_str("\\\\"),
                '\n' => self.out.push_str("\\n"),
                '\r' => self.out.push_str("\\r"),
                '\t' => self.out.push_str("\\t"),
                c if (c as u32) < 0x20 => {
                    let _ = write!(self.out, "\\u{:04x}", c as u32);
                }
                c => self.out.push(c),
            }
        }
        self.out.push('"');
    }

    fn coord(&mut self, v: f64) {
        let _ = write!(self.out, "{v:.6}");
    }
}

fn write_payload(w: &mut Writer, p: &Payload) {
    let (ty, value) = match p {
        Payload::Text(v) => ("text", Some(v)),
        Payload::Url(v) => ("url", Some(v)),
        Payload::ImageSrc(v) => ("image", Some(v)),
        Payload::Placeholder(v) => ("placeholder", Some(v)),
        Payload::None => ("none", None),
    };
    w.out.push_str("{\"type\": ");
    w.string(ty);
    if let Some(v) = value {
        w.out.push_str(", \"value\": ");
        w.string(v);
    }
    w.out.push('}');
}

fn write_node(w: &mut Writer, n: &UiNode) {
    w.line_start();
    w.out.push('{');
    if let Some(b) = &n.bbox {
        w.out.push_str("\"bbox\": [");
        w.coord(b.x0);
        w.out.push_str(", ");
        w.coord(b.y0);
        w.out.push_str(", ");
        w.coord(b.x1);
        w.out.push_str(", ");
        w.coord(b.y1);
        w.out.push_str("], ");
    }
    w.out.push_str("\"children\": [");
    for (i, c) in n.children.iter().enumerate() {
        if i > 0 {
            w.out.push_str(", ");
        }
        let _ = write!(w.out, "{}", c.0);
    }
    let _ = write!(w.out, "], \"id\": {}, \"kind\": ", n.id.0);
    w.string(n.kind.as_str());
    if n.payload != Payload::None {
        w.out.push_str(", \"payload\": ");
        write_payload(w, &n.payload);
    }
    w.out.push('}');
}

fn write_skeleton(w: &mut Writer, s: &SkeletonNode) {
    w.out.push('{');
    w.out.push_str("\"children\": [");
    for (i, c) in s.children.iter().enumerate() {
        if i > 0 {
            w.out.push_str(", ");
        }
        write_skeleton(w, c);
    }
    w.out.push_str("], \"kind\": ");
    w.string(s.kind.as_str());
    match &s.payload {
        SkeletonPayload::Const(Payload::None) => {}
        SkeletonPayload::Const(p) => {
            w.out.push_str(", \"payload\": ");
            write_payload(w, p);
        }
        SkeletonPayload::Slot(name) => {
            w.out.push_str(", \"slot\": ");
            w.string(name);
        }
    }
    w.out.push('}');
}

fn write_template(w: &mut Writer, t: &Template) {
    w.line_start();
    w.out.push_str("{\"props\": [");
    for (i, p) in t.props.iter().enumerate() {
        if i > 0 {
            w.out.push_str(", ");
        }
        w.out.push_str("{\"name\": ");
        w.string(&p.name);
        w.out.push_str(", \"prop_type\": ");
        match &p.prop_type {
            PropType::TextVal => w.string("text"),
            PropType::UrlVal => w.string("url"),
            PropType::ImageVal => w.string("image"),
            PropType::PlaceholderVal => w.string("placeholder"),
            PropType::Items(inner) => {
                w.out.push_str("{\"items\": ");
                write_template(w, inner);
                w.out.push('}');
            }
        }
        w.out.push_str(", \"sinks\": [");
        for (j, s) in p.sinks.iter().enumerate() {
            if j > 0 {
                w.out.push_str(", ");
            }
            w.string(s.as_str());
        }
        w.out.push_str("]}");
    }
    w.out.push_str("], \"skeleton\": ");
    write_skeleton(w, &t.skeleton);
    let _ = write!(w.out, ", \"support\": {}, \"template_id\": ", t.support);
    w.string(&t.template_id);
    w.out.push('}');
}

/// Canonical serialization; `parse_blueprint(serialize_blueprint(b))` is
/// structurally equal to `b`, and equal blueprints serialize byte-identically.
pub fn serialize_blueprint(bp: &Blueprint) -> String {
    let mut w = Writer::new();
    w.out.push_str("{\n  \"instances\": {");
    let mut first = true;
    for (id, inst) in &bp.instances {
        if !first {
            w.out.push(',');
        }
        first = false;
        w.out.push_str("\n    ");
        w.string(&id.0.to_string());
        w.out.push_str(": {\"binding\": {");
        for (i, (name, p)) in inst.binding.iter().enumerate() {
            if i > 0 {
                w.out.push_str(", ");
            }
            w.string(name);
            w.out.push_str(": ");
            write_payload(&mut w, p);
        }
        w.out.push_str("}, \"template_id\": ");
        w.string(&inst.template_id);
        w.out.push('}');
    }
    if !bp.instances.is_empty() {
        w.out.push_str("\n  ");
    }
    w.out.push_str("},\n  \"loop_groups\": [");
    for (i, g) in bp.loop_groups.iter().enumerate() {
        if i > 0 {
            w.out.push(',');
        }
        w.out.push_str("\n    {\"members\": [");
        for (j, m) in g.members.iter().enumerate() {
            if j > 0 {
                w.out.push_str(", ");
            }
            let _ = write!(w.out, "{}", m.0);
        }
        let _ = write!(w.out, "], \"parent\": {}, \"template_id\": ", g.parent.0);
        w.string(&g.template_id);
        w.out.push('}');
    }
    if !bp.loop_groups.is_empty() {
        w.out.push_str("\n  ");
    }
    w.out.push_str("],\n  \"nodes\": [\n");
    w.indent = 4;
    let mut first = true;
    for (_, n) in bp.tree.nodes_iter() {
        if !first {
            w.out.push_str(",\n");
        }
        first = false;
        write_node(&mut w, n);
    }
    w.indent = 0;
    let _ = write!(w.out, "\n  ],\n  \"root\": {},\n  \"templates\": [", bp.tree.root().0);
    for (i, t) in bp.templates.iter().enumerate() {
        if i > 0 {
            w.out.push(',');
        }
        w.out.push('\n');
        w.indent = 4;
        write_template(&mut w, t);
        w.indent = 0;
    }
    if !bp.templates.is_empty() {
        w.out.push_str("\n  ");
    }
    let _ = write!(w.out, "],\n  \"version\": {FORMAT_VERSION}\n}}\n");
    w.out
}

/// Canonical serialization of a box list (ingest input format).
pub fn serialize_box_items(items: &[BoxItem]) -> String {
    let mut w = Writer::new();
    w.out.push_str("[\n");
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            w.out.push_str(",\n");
        }
        w.out.push_str("  {\"bbox\": [");
        w.coord(item.bbox.x0);
        w.out.push_str(", ");
        w.coord(item.bbox.y0);
        w.out.push_str(", ");
        w.coord(item.bbox.x1);
        w.out.push_str(", ");
        w.coord(item.bbox.y1);
        w.out.push_str("], \"kind\": ");
        w.string(item.kind.as_str());
        if item.payload != Payload::None {
            w.out.push_str(", \"payload\": ");
            write_payload(&mut w, &item.payload);
        }
        w.out.push('}');
    }
    w.out.push_str("\n]\n");
    w.out
}
