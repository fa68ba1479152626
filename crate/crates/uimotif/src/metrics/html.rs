//! Parser for the emitter's own HTML dialect, inverting the dispatcher's
//! tag/class mapping back into a tree: `div.frame|stack|row|tile` for
//! containers, `p`/`span` for text, `img`, `input`, and `a` for the payload
//! kinds. Foreign tags have no mapping and are rejected.

use crate::emit::CodeBundle;
use crate::model::{NodeId, NodeKind, Payload, UiNode, UiTree};

use super::MetricsError;

struct RawElement {
    tag: String,
    attrs: Vec<(String, String)>,
    children: Vec<RawNode>,
}

enum RawNode {
    Element(RawElement),
    Text(String),
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let known = [
            ("&amp;", '&'),
            ("&lt;", '<'),
            ("&gt;", '>'),
            ("&quot;", '"'),
            ("&#123;", '{'),
            ("&#125;", '}'),
        ];
        let mut matched = false;
        for (entity, ch) in known {
            if rest.starts_with(entity) {
                out.push(ch);
                rest = &rest[entity.len()..];
                matched = true;
                break;
            }
        }
        if !matched {
            out.push('&');
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    out
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> MetricsError {
        MetricsError::UnparsableBundle(format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn parse_name(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.input.len()
            && (self.input[self.pos].is_ascii_alphanumeric()
                || self.input[self.pos] == b'-'
                || self.input[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.input[start..self.pos]).into_owned()
    }

    /// One element starting at `<`; returns the element and whether it was
    /// self-closing.
    fn parse_element(&mut self) -> Result<RawElement, MetricsError> {
        if self.input.get(self.pos) != Some(&b'<') {
            return Err(self.err("expected '<'"));
        }
        self.pos += 1;
        let tag = self.parse_name();
        if tag.is_empty() {
            return Err(self.err("empty tag name"));
        }
        let mut attrs = Vec::new();
        loop {
            self.skip_ws();
            match self.input.get(self.pos) {
                Some(b'/') => {
                    // self-closing
                    self.pos += 1;
                    if self.input.get(self.pos) != Some(&b'>') {
                        return Err(self.err("expected '>' after '/'"));
                    }
                    self.pos += 1;
                    return Ok(RawElement {
                        tag,
                        attrs,
                        children: vec![],
                    });
                }
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    let name = self.parse_name();
                    if name.is_empty() {
                        return Err(self.err("expected attribute name"));
                    }
                    if self.input.get(self.pos) != Some(&b'=')
                        || self.input.get(self.pos + 1) != Some(&b'"')
                    {
                        return Err(self.err("expected =\" after attribute name"));
                    }
                    self.pos += 2;
                    let start = self.pos;
                    while self.pos < self.input.len() && self.input[self.pos] != b'"' {
                        self.pos += 1;
                    }
                    if self.pos == self.input.len() {
                        return Err(self.err("unterminated attribute value"));
                    }
                    let raw = String::from_utf8_lossy(&self.input[start..self.pos]).into_owned();
                    self.pos += 1;
                    attrs.push((name, unescape(&raw)));
                }
                None => return Err(self.err("unterminated tag")),
            }
        }
        // children / text until the matching close tag
        let mut children = Vec::new();
        loop {
            let text_start = self.pos;
            while self.pos < self.input.len() && self.input[self.pos] != b'<' {
                self.pos += 1;
            }
            if self.pos > text_start {
                let raw = String::from_utf8_lossy(&self.input[text_start..self.pos]).into_owned();
                // indentation/newlines between child tags are formatting, not
                // content; inline payload text never contains newlines
                if !raw.trim().is_empty() {
                    children.push(RawNode::Text(unescape(&raw)));
                }
            }
            if self.pos >= self.input.len() {
                return Err(self.err(&format!("missing </{tag}>")));
            }
            if self.input.get(self.pos + 1) == Some(&b'/') {
                self.pos += 2;
                let close = self.parse_name();
                if close != tag {
                    return Err(self.err(&format!("</{close}> closes <{tag}>")));
                }
                if self.input.get(self.pos) != Some(&b'>') {
                    return Err(self.err("expected '>' in close tag"));
                }
                self.pos += 1;
                return Ok(RawElement {
                    tag,
                    attrs,
                    children,
                });
            }
            children.push(RawNode::Element(self.parse_element()?));
        }
    }
}

fn attr<'e>(el: &'e RawElement, name: &str) -> Option<&'e str> {
    el.attrs
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v.as_str())
}

fn map_element(
    el: &RawElement,
    nodes: &mut Vec<UiNode>,
) -> Result<NodeId, MetricsError> {
    let kind = match el.tag.as_str() {
        "div" => match attr(el, "class") {
            Some("frame") => NodeKind::Frame,
            Some("stack") => NodeKind::Stack,
            Some("row") => NodeKind::Row,
            Some("tile") => NodeKind::Tile,
            other => {
                return Err(MetricsError::UnknownTagMapping(format!(
                    "div.{}",
                    other.unwrap_or("<no class>")
                )))
            }
        },
        "p" | "span" => NodeKind::Text,
        "img" => NodeKind::Media,
        "input" => NodeKind::Control,
        "a" => NodeKind::Link,
        other => return Err(MetricsError::UnknownTagMapping(other.to_string())),
    };
    let payload = match kind {
        NodeKind::Text => {
            let mut text = String::new();
            for c in &el.children {
                if let RawNode::Text(t) = c {
                    text.push_str(t);
                }
            }
            Payload::Text(text)
        }
        NodeKind::Media => Payload::ImageSrc(
            attr(el, "src")
                .ok_or_else(|| MetricsError::UnparsableBundle("img without src".into()))?
                .to_string(),
        ),
        NodeKind::Control => match attr(el, "placeholder") {
            Some(v) => Payload::Placeholder(v.to_string()),
            None => Payload::None,
        },
        NodeKind::Link => Payload::Url(
            attr(el, "href")
                .ok_or_else(|| MetricsError::UnparsableBundle("a without href".into()))?
                .to_string(),
        ),
        _ => Payload::None,
    };
    let id = NodeId(nodes.len() as u32);
    nodes.push(UiNode {
        id,
        kind,
        bbox: None,
        payload,
        children: vec![],
    });
    let mut child_ids = Vec::new();
    for c in &el.children {
        match c {
            RawNode::Element(child) => child_ids.push(map_element(child, nodes)?),
            RawNode::Text(_) => {
                if kind != NodeKind::Text {
                    return Err(MetricsError::UnparsableBundle(format!(
                        "loose text under <{}>",
                        el.tag
                    )));
                }
            }
        }
    }
    nodes[id.0 as usize].children = child_ids;
    Ok(id)
}

/// Parse an emitted HTML bundle back into a tree. Only this emitter's dialect
/// is supported; anything else is foreign HTML.
pub fn parse_html_bundle(bundle: &CodeBundle) -> Result<UiTree, MetricsError> {
    if bundle.framework != crate::emit::Framework::Html {
        return Err(MetricsError::UnparsableBundle(format!(
            "bundle framework is {}, not html",
            bundle.framework
        )));
    }
    let content = bundle
        .file("index.html")
        .ok_or_else(|| MetricsError::UnparsableBundle("no index.html in bundle".into()))?;
    let body = content.strip_prefix("<!doctype html>\n").unwrap_or(content);
    let mut parser = Parser {
        input: body.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let root = parser.parse_element()?;
    parser.skip_ws();
    if parser.pos != parser.input.len() {
        return Err(MetricsError::UnparsableBundle(
            "trailing content after the root element".into(),
        ));
    }
    let mut nodes = Vec::new();
    let root_id = map_element(&root, &mut nodes)?;
    Ok(UiTree::new(root_id, nodes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::emit::{emit_bundle, CodeBundle, Framework};
    use crate::metrics::tree_edit_distance_with;
    use crate::mine::{mine, MinerConfig};
    use crate::model::Blueprint;

    #[test]
    fn emit_then_parse_is_exact() {
        let bp = mine(&demo::demo_document(), &MinerConfig::default()).unwrap();
        let bundle = emit_bundle(&bp, Framework::Html).unwrap();
        let parsed = parse_html_bundle(&bundle).unwrap();
        let expanded = bp.expanded_tree().unwrap();
        assert_eq!(
            tree_edit_distance_with(&parsed, &expanded, crate::metrics::LabelMode::Strict),
            0
        );
    }

    #[test]
    fn single_img_round_trips_src() {
        let tree = demo::tree_of(&[(0, "frame", "", &[1]), (1, "media", "x&y.png", &[])]);
        let bundle = emit_bundle(&Blueprint::from_tree(tree), Framework::Html).unwrap();
        let parsed = parse_html_bundle(&bundle).unwrap();
        let media = parsed
            .nodes_iter()
            .find(|(_, n)| n.kind == NodeKind::Media)
            .unwrap()
            .1;
        assert_eq!(media.payload, Payload::ImageSrc("x&y.png".into()));
    }

    #[test]
    fn foreign_tags_have_no_mapping() {
        let bundle = CodeBundle {
            framework: Framework::Html,
            files: vec![(
                "index.html".into(),
                "<table><tr><td>x</td></tr></table>".into(),
            )],
        };
        assert!(matches!(
            parse_html_bundle(&bundle),
            Err(MetricsError::UnknownTagMapping(_))
        ));
    }

    #[test]
    fn unclassed_div_is_rejected() {
        let bundle = CodeBundle {
            framework: Framework::Html,
            files: vec![("index.html".into(), "<div><p>x</p></div>".into())],
        };
        assert!(matches!(
            parse_html_bundle(&bundle),
            Err(MetricsError::UnknownTagMapping(_))
        ));
    }
}
