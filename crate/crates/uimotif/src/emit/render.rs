//! Pretty-printed realization of a validated event stream. The engine's
//! masks force any accepted stream into output equivalence with the reference
//! stream, so rendering replays the events for validation and then prints the
//! canonical text: 2-space indent, loop directives first then attributes
//! alphabetical, components alphabetical with the entry file last.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Blueprint, NodeId, NodeKind, Payload, SkeletonNode, SkeletonPayload, Template,
};

use super::plan::{angular_selector, component_paths, entry_paths, tag_for};
use super::{
    items_ref_name, CodeBundle, ConstraintState, EmissionEvent, EmitError, Framework,
    InstanceLayout,
};

const VOID_TAGS: [&str; 2] = ["img", "input"];

fn escape_text(s: &str, brace_sensitive: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '{' if brace_sensitive => out.push_str("&#123;"),
            '}' if brace_sensitive => out.push_str("&#125;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
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

struct Markup {
    out: String,
    indent: usize,
    brace_sensitive: bool,
}

impl Markup {
    fn new(indent: usize, brace_sensitive: bool) -> Markup {
        Markup {
            out: String::new(),
            indent,
            brace_sensitive,
        }
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push(' ');
        }
        self.out.push_str(s);
        self.out.push('\n');
    }
}

/// An attribute: `Plain` values are escaped and quoted, `Expr` values print
/// verbatim in the framework's binding syntax.
enum AttrVal {
    Plain(String),
    Expr(String),
}

struct Tag {
    name: String,
    /// (position class, name, value); position 0 sorts before everything and
    /// holds loop/key directives.
    attrs: Vec<(u8, String, AttrVal)>,
}

impl Tag {
    fn new(name: &str) -> Tag {
        Tag {
            name: name.to_string(),
            attrs: Vec::new(),
        }
    }

    fn plain(mut self, name: &str, value: &str) -> Tag {
        self.attrs.push((1, name.to_string(), AttrVal::Plain(value.to_string())));
        self
    }

    fn expr(mut self, name: &str, value: &str) -> Tag {
        self.attrs.push((1, name.to_string(), AttrVal::Expr(value.to_string())));
        self
    }

    fn directive(mut self, name: &str, value: &str) -> Tag {
        self.attrs.push((0, name.to_string(), AttrVal::Expr(value.to_string())));
        self
    }

    fn render(&self, mu: Framework) -> String {
        let mut attrs = String::new();
        let mut sorted: Vec<&(u8, String, AttrVal)> = self.attrs.iter().collect();
        sorted.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (_, name, value) in sorted {
            attrs.push(' ');
            match value {
                AttrVal::Plain(v) => {
                    attrs.push_str(name);
                    attrs.push_str("=\"");
                    attrs.push_str(&escape_attr(v));
                    attrs.push('"');
                }
                AttrVal::Expr(v) => match mu {
                    Framework::React => {
                        attrs.push_str(name);
                        attrs.push('=');
                        attrs.push_str(v); // already `{...}`
                    }
                    _ => {
                        attrs.push_str(name);
                        attrs.push_str("=\"");
                        attrs.push_str(v);
                        attrs.push('"');
                    }
                },
            }
        }
        format!("{}{}", self.name, attrs)
    }
}

struct MarkupWriter<'a> {
    bp: &'a Blueprint,
    mu: Framework,
    layout: InstanceLayout,
    nullable: BTreeMap<String, BTreeSet<String>>,
}

impl<'a> MarkupWriter<'a> {
    fn new(bp: &'a Blueprint, mu: Framework) -> MarkupWriter<'a> {
        let mut nullable: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for inst in bp.instances.values() {
            for (name, value) in &inst.binding {
                if *value == Payload::None {
                    nullable
                        .entry(inst.template_id.clone())
                        .or_default()
                        .insert(name.clone());
                }
            }
        }
        MarkupWriter {
            bp,
            mu,
            layout: InstanceLayout::of(bp),
            nullable,
        }
    }

    fn class_attr(&self) -> &'static str {
        if self.mu == Framework::React {
            "className"
        } else {
            "class"
        }
    }

    fn emit_element(&self, m: &mut Markup, tag: Tag, text: Option<String>, children: impl FnOnce(&Self, &mut Markup)) {
        self.emit_element_counted(m, tag, text, 1, children)
    }

    /// `child_probe` = 0 means leaf; the closure only runs when > 0.
    fn emit_element_counted(
        &self,
        m: &mut Markup,
        tag: Tag,
        text: Option<String>,
        child_probe: usize,
        children: impl FnOnce(&Self, &mut Markup),
    ) {
        let rendered = tag.render(self.mu);
        if VOID_TAGS.contains(&tag.name.as_str()) {
            m.line(&format!("<{rendered} />"));
            return;
        }
        if child_probe == 0 {
            match text {
                Some(t) if !t.is_empty() => m.line(&format!("<{rendered}>{t}</{}>", tag.name)),
                _ => m.line(&format!("<{rendered}></{}>", tag.name)),
            }
            return;
        }
        m.line(&format!("<{rendered}>"));
        m.indent += 2;
        if let Some(t) = text {
            if !t.is_empty() {
                m.line(&t);
            }
        }
        children(self, m);
        m.indent -= 2;
        m.line(&format!("</{}>", tag.name));
    }

    /// Concrete node markup (no instance handling); used for plain page
    /// regions and inside HTML instance expansion.
    fn plain_node(&self, m: &mut Markup, node: NodeId, parent: Option<NodeKind>) {
        let n = self.bp.tree.node(node);
        let (tag_name, class) = tag_for(n.kind, parent);
        let mut tag = Tag::new(tag_name);
        if let Some(c) = class {
            tag = tag.plain(self.class_attr(), c);
        }
        let mut text = None;
        match &n.payload {
            Payload::Text(v) => text = Some(escape_text(v, m.brace_sensitive)),
            Payload::Url(v) => tag = tag.plain("href", v),
            Payload::ImageSrc(v) => tag = tag.plain("src", v),
            Payload::Placeholder(v) => tag = tag.plain("placeholder", v),
            Payload::None => {}
        }
        let kind = n.kind;
        let children = n.children.clone();
        self.emit_element_counted(m, tag, text, children.len(), |w, m| {
            for c in &children {
                w.page_node(m, *c, Some(kind));
            }
        });
    }

    /// Page walk for component frameworks.
    fn page_node(&self, m: &mut Markup, node: NodeId, parent: Option<NodeKind>) {
        if self.mu == Framework::Html {
            return self.html_node(m, node, parent);
        }
        if let Some(inst) = self.bp.instances.get(&node) {
            if let Some(gi) = self.layout.loop_of_first.get(&node).copied() {
                return self.loop_block(m, gi);
            }
            if self.layout.loop_members.contains(&node) {
                return;
            }
            let template = self.bp.template(&inst.template_id).expect("validated");
            return self.standalone_ref(m, template, inst);
        }
        self.plain_node(m, node, parent);
    }

    /// HTML page walk: instances expand inline.
    fn html_node(&self, m: &mut Markup, node: NodeId, parent: Option<NodeKind>) {
        if let Some(inst) = self.bp.instances.get(&node) {
            let template = self.bp.template(&inst.template_id).expect("validated");
            return self.html_instance(m, node, &template.skeleton, &inst.binding, parent);
        }
        self.plain_node(m, node, parent);
    }

    fn html_instance(
        &self,
        m: &mut Markup,
        node: NodeId,
        skel: &SkeletonNode,
        binding: &BTreeMap<String, Payload>,
        parent: Option<NodeKind>,
    ) {
        let (tag_name, class) = tag_for(skel.kind, parent);
        let mut tag = Tag::new(tag_name);
        if let Some(c) = class {
            tag = tag.plain("class", c);
        }
        let payload = match &skel.payload {
            SkeletonPayload::Const(p) => p.clone(),
            SkeletonPayload::Slot(name) => binding[name].clone(),
        };
        let mut text = None;
        match &payload {
            Payload::Text(v) => text = Some(escape_text(v, false)),
            Payload::Url(v) => tag = tag.plain("href", v),
            Payload::ImageSrc(v) => tag = tag.plain("src", v),
            Payload::Placeholder(v) => tag = tag.plain("placeholder", v),
            Payload::None => {}
        }
        let node_children = self.bp.tree.node(node).children.clone();
        let kind = skel.kind;
        self.emit_element_counted(m, tag, text, node_children.len(), |w, m| {
            for (child, skel_child) in node_children.iter().zip(skel.children.iter()) {
                w.html_instance(m, *child, skel_child, binding, Some(kind));
            }
        });
    }

    fn loop_block(&self, m: &mut Markup, group_index: usize) {
        let group = &self.bp.loop_groups[group_index];
        let template = self.bp.template(&group.template_id).expect("validated");
        let items = items_ref_name(group_index);
        match self.mu {
            Framework::React => {
                m.line(&format!("{{{items}.map((it, i) => ("));
                m.indent += 2;
                let mut tag = Tag::new(&template.template_id).directive("key", "{i}");
                for p in &template.props {
                    tag = tag.expr(&p.name, &format!("{{it.{}}}", p.name));
                }
                m.line(&format!("<{} />", tag.render(self.mu)));
                m.indent -= 2;
                m.line("))}");
            }
            Framework::Vue => {
                let mut tag = Tag::new(&template.template_id)
                    .directive("v-for", &format!("(it, i) in {items}"))
                    .directive(":key", "i");
                for p in &template.props {
                    tag = tag.expr(&format!(":{}", p.name), &format!("it.{}", p.name));
                }
                m.line(&format!("<{} />", tag.render(self.mu)));
            }
            Framework::Angular => {
                let selector = angular_selector(&template.template_id);
                let mut tag = Tag::new(&selector)
                    .directive("*ngFor", &format!("let it of {items}"));
                for p in &template.props {
                    tag = tag.expr(&format!("[{}]", p.name), &format!("it.{}", p.name));
                }
                m.line(&format!("<{}></{}>", tag.render(self.mu), selector));
            }
            Framework::Html => unreachable!("HTML replicates loops inline"),
        }
    }

    fn standalone_ref(&self, m: &mut Markup, template: &Template, inst: &crate::model::Instance) {
        match self.mu {
            Framework::React => {
                let mut tag = Tag::new(&template.template_id);
                for p in &template.props {
                    tag = match &inst.binding[&p.name] {
                        Payload::None => tag.expr(&p.name, "{null}"),
                        v => tag.plain(&p.name, v.value().unwrap_or_default()),
                    };
                }
                m.line(&format!("<{} />", tag.render(self.mu)));
            }
            Framework::Vue => {
                let mut tag = Tag::new(&template.template_id);
                for p in &template.props {
                    tag = match &inst.binding[&p.name] {
                        Payload::None => tag.expr(&format!(":{}", p.name), "null"),
                        v => tag.plain(&p.name, v.value().unwrap_or_default()),
                    };
                }
                m.line(&format!("<{} />", tag.render(self.mu)));
            }
            Framework::Angular => {
                let selector = angular_selector(&template.template_id);
                let mut tag = Tag::new(&selector);
                for p in &template.props {
                    tag = match &inst.binding[&p.name] {
                        Payload::None => tag.expr(&format!("[{}]", p.name), "null"),
                        v => tag.plain(&p.name, v.value().unwrap_or_default()),
                    };
                }
                m.line(&format!("<{}></{}>", tag.render(self.mu), selector));
            }
            Framework::Html => unreachable!(),
        }
    }

    /// Component skeleton markup with prop references at slot sites.
    fn component_node(&self, m: &mut Markup, skel: &SkeletonNode, parent: Option<NodeKind>) {
        let (tag_name, class) = tag_for(skel.kind, parent);
        let mut tag = Tag::new(tag_name);
        if let Some(c) = class {
            tag = tag.plain(self.class_attr(), c);
        }
        let mut text = None;
        match &skel.payload {
            SkeletonPayload::Const(p) => match p {
                Payload::Text(v) => text = Some(escape_text(v, m.brace_sensitive)),
                Payload::Url(v) => tag = tag.plain("href", v),
                Payload::ImageSrc(v) => tag = tag.plain("src", v),
                Payload::Placeholder(v) => tag = tag.plain("placeholder", v),
                Payload::None => {}
            },
            SkeletonPayload::Slot(name) => {
                let attr = match skel.kind {
                    NodeKind::Media => "src",
                    NodeKind::Link => "href",
                    NodeKind::Control => "placeholder",
                    _ => "",
                };
                match (self.mu, skel.kind) {
                    (Framework::React, NodeKind::Text) => text = Some(format!("{{{name}}}")),
                    (Framework::React, _) => tag = tag.expr(attr, &format!("{{{name}}}")),
                    (Framework::Vue, NodeKind::Text) | (Framework::Angular, NodeKind::Text) => {
                        text = Some(format!("{{{{ {name} }}}}"));
                    }
                    (Framework::Vue, _) => tag = tag.expr(&format!(":{attr}"), name),
                    (Framework::Angular, _) => tag = tag.expr(&format!("[{attr}]"), name),
                    (Framework::Html, _) => unreachable!(),
                }
            }
        }
        let kind = skel.kind;
        self.emit_element_counted(m, tag, text, skel.children.len(), |w, m| {
            for c in &skel.children {
                w.component_node(m, c, Some(kind));
            }
        });
    }
}

fn prop_decl_type(nullable: bool) -> &'static str {
    if nullable {
        "string | null"
    } else {
        "string"
    }
}

fn items_literal(out: &mut String, indent: &str, bp: &Blueprint, group_index: usize) {
    let group = &bp.loop_groups[group_index];
    for member in &group.members {
        let binding = &bp.instances[member].binding;
        let fields: Vec<String> = binding
            .iter()
            .map(|(k, v)| match v {
                Payload::None => format!("{k}: null"),
                v => format!("{k}: {}", ts_string(v.value().unwrap_or_default())),
            })
            .collect();
        if fields.is_empty() {
            out.push_str(&format!("{indent}{{}},\n"));
        } else {
            out.push_str(&format!("{indent}{{ {} }},\n", fields.join(", ")));
        }
    }
}

fn react_component(w: &MarkupWriter, t: &Template) -> String {
    let name = &t.template_id;
    let nullable = w.nullable.get(name).cloned().unwrap_or_default();
    let mut out = String::new();
    if !t.props.is_empty() {
        out.push_str(&format!("interface {name}Props {{\n"));
        let mut names: Vec<&String> = t.props.iter().map(|p| &p.name).collect();
        names.sort();
        for p in names {
            out.push_str(&format!("  {p}: {};\n", prop_decl_type(nullable.contains(p))));
        }
        out.push_str("}\n\n");
        out.push_str(&format!("export function {name}(props: {name}Props) {{\n"));
        let mut names: Vec<&String> = t.props.iter().map(|p| &p.name).collect();
        names.sort();
        out.push_str(&format!(
            "  const {{ {} }} = props;\n",
            names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    } else {
        out.push_str(&format!("export function {name}() {{\n"));
    }
    out.push_str("  return (\n");
    let mut m = Markup::new(4, true);
    w.component_node(&mut m, &t.skeleton, None);
    out.push_str(&m.out);
    out.push_str("  );\n}\n");
    out
}

fn react_entry(bp: &Blueprint, w: &MarkupWriter) -> String {
    let mut out = String::new();
    for t in &bp.templates {
        out.push_str(&format!(
            "import {{ {0} }} from './components/{0}';\n",
            t.template_id
        ));
    }
    if !bp.templates.is_empty() {
        out.push('\n');
    }
    for gi in 0..bp.loop_groups.len() {
        out.push_str(&format!("const {} = [\n", items_ref_name(gi)));
        items_literal(&mut out, "  ", bp, gi);
        out.push_str("];\n\n");
    }
    out.push_str("export default function App() {\n  return (\n");
    let mut m = Markup::new(4, true);
    w.page_node(&mut m, bp.tree.root(), None);
    out.push_str(&m.out);
    out.push_str("  );\n}\n");
    out
}

fn vue_component(w: &MarkupWriter, t: &Template) -> String {
    let nullable = w.nullable.get(&t.template_id).cloned().unwrap_or_default();
    let mut out = String::new();
    out.push_str("<template>\n");
    let mut m = Markup::new(2, true);
    w.component_node(&mut m, &t.skeleton, None);
    out.push_str(&m.out);
    out.push_str("</template>\n\n<script setup lang=\"ts\">\n");
    if !t.props.is_empty() {
        out.push_str("defineProps<{\n");
        let mut names: Vec<&String> = t.props.iter().map(|p| &p.name).collect();
        names.sort();
        for p in names {
            out.push_str(&format!("  {p}: {};\n", prop_decl_type(nullable.contains(p))));
        }
        out.push_str("}>();\n");
    }
    out.push_str("</script>\n");
    out
}

fn vue_entry(bp: &Blueprint, w: &MarkupWriter) -> String {
    let mut out = String::new();
    out.push_str("<template>\n");
    let mut m = Markup::new(2, true);
    w.page_node(&mut m, bp.tree.root(), None);
    out.push_str(&m.out);
    out.push_str("</template>\n\n<script setup lang=\"ts\">\n");
    for t in &bp.templates {
        out.push_str(&format!(
            "import {0} from './components/{0}.vue';\n",
            t.template_id
        ));
    }
    if !bp.templates.is_empty() && !bp.loop_groups.is_empty() {
        out.push('\n');
    }
    for gi in 0..bp.loop_groups.len() {
        out.push_str(&format!("const {} = [\n", items_ref_name(gi)));
        items_literal(&mut out, "  ", bp, gi);
        out.push_str("];\n");
        if gi + 1 < bp.loop_groups.len() {
            out.push('\n');
        }
    }
    out.push_str("</script>\n");
    out
}

fn angular_component_ts(w: &MarkupWriter, t: &Template) -> String {
    let nullable = w.nullable.get(&t.template_id).cloned().unwrap_or_default();
    let lower = t.template_id.to_lowercase();
    let mut out = String::new();
    out.push_str("import { Component, Input } from '@angular/core';\n\n");
    out.push_str("@Component({\n");
    out.push_str(&format!("  selector: '{}',\n", angular_selector(&t.template_id)));
    out.push_str(&format!("  templateUrl: './{lower}.component.html',\n"));
    out.push_str("})\n");
    if t.props.is_empty() {
        out.push_str(&format!("export class {}Component {{}}\n", t.template_id));
    } else {
        out.push_str(&format!("export class {}Component {{\n", t.template_id));
        let mut names: Vec<&String> = t.props.iter().map(|p| &p.name).collect();
        names.sort();
        for p in names {
            if nullable.contains(p) {
                out.push_str(&format!("  @Input() {p}: string | null = null;\n"));
            } else {
                out.push_str(&format!("  @Input() {p}!: string;\n"));
            }
        }
        out.push_str("}\n");
    }
    out
}

fn angular_entry_ts(bp: &Blueprint) -> String {
    let mut out = String::new();
    out.push_str("import { Component } from '@angular/core';\n\n");
    out.push_str("@Component({\n  selector: 'app-root',\n  templateUrl: './app.component.html',\n})\n");
    if bp.loop_groups.is_empty() {
        out.push_str("export class AppComponent {}\n");
    } else {
        out.push_str("export class AppComponent {\n");
        for gi in 0..bp.loop_groups.len() {
            out.push_str(&format!("  {} = [\n", items_ref_name(gi)));
            items_literal(&mut out, "    ", bp, gi);
            out.push_str("  ];\n");
        }
        out.push_str("}\n");
    }
    out
}

/// Render a validated event stream. The stream must replay admissibly from a
/// fresh state and end complete; a stream with any unbound prop is rejected
/// as incomplete rather than rendered partially.
pub fn render(
    bp: &Blueprint,
    events: &[EmissionEvent],
    mu: Framework,
) -> Result<CodeBundle, EmitError> {
    let mut state = ConstraintState::new(bp, mu);
    for e in events {
        state.step(e)?;
    }
    if !state.is_complete() {
        return Err(EmitError::IncompleteStream(format!(
            "{} of {} props bound",
            state.bound_count(),
            state.ledger_size()
        )));
    }

    let w = MarkupWriter::new(bp, mu);
    let mut files: Vec<(String, String)> = Vec::new();
    match mu {
        Framework::Html => {
            let mut m = Markup::new(0, false);
            m.out.push_str("<!doctype html>\n");
            w.page_node(&mut m, bp.tree.root(), None);
            files.push(("index.html".into(), m.out));
        }
        Framework::React => {
            for t in &bp.templates {
                files.push((
                    component_paths(mu, &t.template_id)[0].clone(),
                    react_component(&w, t),
                ));
            }
            files.push((entry_paths(mu)[0].clone(), react_entry(bp, &w)));
        }
        Framework::Vue => {
            for t in &bp.templates {
                files.push((
                    component_paths(mu, &t.template_id)[0].clone(),
                    vue_component(&w, t),
                ));
            }
            files.push((entry_paths(mu)[0].clone(), vue_entry(bp, &w)));
        }
        Framework::Angular => {
            for t in &bp.templates {
                let paths = component_paths(mu, &t.template_id);
                let mut m = Markup::new(0, true);
                w.component_node(&mut m, &t.skeleton, None);
                files.push((paths[0].clone(), m.out));
                files.push((paths[1].clone(), angular_component_ts(&w, t)));
            }
            let entries = entry_paths(mu);
            let mut m = Markup::new(0, true);
            w.page_node(&mut m, bp.tree.root(), None);
            files.push((entries[0].clone(), m.out));
            files.push((entries[1].clone(), angular_entry_ts(bp)));
        }
    }
    Ok(CodeBundle {
        framework: mu,
        files,
    })
}
