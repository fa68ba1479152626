//! Engine-independent audits of rendered bundle text: tag balance via a
//! pushdown scan of the markup regions, and a regex-level check that no
//! URL-typed value lands in an attribute outside `src`/`href` or a URL-typed
//! prop position.

use std::collections::HashSet;

use regex::Regex;

use crate::model::{Blueprint, Payload, PropType, SkeletonPayload};

use super::{CodeBundle, Framework};

/// Markup region of one rendered file; script/class sections carry string
/// literals that may legally contain angle brackets and are excluded.
fn markup_region<'a>(mu: Framework, path: &str, content: &'a str) -> Option<&'a str> {
    match mu {
        Framework::Html => Some(content.strip_prefix("<!doctype html>\n").unwrap_or(content)),
        Framework::React => {
            let start = content.find("return (\n")? + "return (\n".len();
            let end = content.rfind("  );")?;
            Some(&content[start..end])
        }
        Framework::Vue => {
            let start = content.find("<template>\n")? + "<template>\n".len();
            let end = content.rfind("</template>")?;
            Some(&content[start..end])
        }
        Framework::Angular => {
            if path.ends_with(".html") {
                Some(content)
            } else {
                None
            }
        }
    }
}

/// Pushdown check that every open tag in every markup region is closed in
/// order. Self-closing tags pop nothing.
pub fn audit_tag_balance(bundle: &CodeBundle) -> Result<(), String> {
    for (path, content) in &bundle.files {
        let Some(region) = markup_region(bundle.framework, path, content) else {
            continue;
        };
        let mut stack: Vec<String> = Vec::new();
        let bytes = region.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] != b'<' {
                i += 1;
                continue;
            }
            let closing = bytes.get(i + 1) == Some(&b'/');
            let name_start = if closing { i + 2 } else { i + 1 };
            let mut j = name_start;
            while j < bytes.len()
                && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'-')
            {
                j += 1;
            }
            if j == name_start {
                i += 1; // `<` inside an expression, not a tag
                continue;
            }
            let name = &region[name_start..j];
            // advance to the tag end, skipping quoted attribute values
            let mut in_quote = false;
            let mut self_closing = false;
            while j < bytes.len() {
                match bytes[j] {
                    b'"' => in_quote = !in_quote,
                    b'>' if !in_quote => {
                        self_closing = j >= 1 && bytes[j - 1] == b'/';
                        break;
                    }
                    _ => {}
                }
                j += 1;
            }
            if j == bytes.len() {
                return Err(format!("{path}: unterminated tag <{name}"));
            }
            if closing {
                match stack.pop() {
                    Some(top) if top == name => {}
                    Some(top) => {
                        return Err(format!("{path}: </{name}> closes <{top}>"));
                    }
                    None => return Err(format!("{path}: </{name}> with empty stack")),
                }
            } else if !self_closing {
                stack.push(name.to_string());
            }
            i = j + 1;
        }
        if !stack.is_empty() {
            return Err(format!("{path}: unclosed tags {stack:?}"));
        }
    }
    Ok(())
}

fn unescape_attr(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&#123;", "{")
        .replace("&#125;", "}")
        .replace("&amp;", "&")
}

fn unescape_ts(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Every attribute or record field carrying a URL- or image-typed value must
/// be `src`, `href`, or a prop position of URL/image type.
pub fn audit_type_sinks(bp: &Blueprint, bundle: &CodeBundle) -> Result<(), String> {
    let mut url_props: HashSet<String> = HashSet::new();
    for t in &bp.templates {
        for p in &t.props {
            if matches!(p.prop_type, PropType::UrlVal | PropType::ImageVal) {
                url_props.insert(p.name.clone());
            }
        }
    }
    let mut url_values: HashSet<String> = HashSet::new();
    for inst in bp.instances.values() {
        for (name, value) in &inst.binding {
            if url_props.contains(name) {
                if let Some(v) = value.value() {
                    url_values.insert(v.to_string());
                }
            }
        }
    }
    for (_, node) in bp.tree.nodes_iter() {
        if let Payload::Url(v) | Payload::ImageSrc(v) = &node.payload {
            url_values.insert(v.clone());
        }
    }
    for t in &bp.templates {
        t.skeleton.for_each(&mut |n| {
            if let SkeletonPayload::Const(Payload::Url(v) | Payload::ImageSrc(v)) = &n.payload {
                url_values.insert(v.clone());
            }
        });
    }
    if url_values.is_empty() {
        return Ok(());
    }

    let attr_re = Regex::new(r#"([A-Za-z_\[\]:][\w\[\]:-]*)="([^"]*)""#).unwrap();
    let field_re = Regex::new(r"([A-Za-z_]\w*): '((?:[^'\\]|\\.)*)'").unwrap();
    let allowed_attr = |name: &str| {
        let stripped = name
            .trim_start_matches(':')
            .trim_start_matches('[')
            .trim_end_matches(']');
        stripped == "src" || stripped == "href" || url_props.contains(stripped)
    };
    for (path, content) in &bundle.files {
        for cap in attr_re.captures_iter(content) {
            let name = &cap[1];
            let value = unescape_attr(&cap[2]);
            if url_values.contains(&value) && !allowed_attr(name) {
                return Err(format!(
                    "{path}: url value {value:?} placed in attribute {name:?}"
                ));
            }
        }
        for cap in field_re.captures_iter(content) {
            let name = &cap[1];
            let value = unescape_ts(&cap[2]);
            if url_values.contains(&value) && !url_props.contains(name) {
                return Err(format!(
                    "{path}: url value {value:?} placed in record field {name:?}"
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::emit::propose::emit_bundle;
    use crate::mine::{mine, MinerConfig};

    #[test]
    fn emitted_bundles_pass_both_audits() {
        let bp = mine(&demo::demo_document(), &MinerConfig::default()).unwrap();
        for mu in Framework::ALL {
            let bundle = emit_bundle(&bp, mu).unwrap();
            audit_tag_balance(&bundle).unwrap_or_else(|e| panic!("{mu}: {e}"));
            audit_type_sinks(&bp, &bundle).unwrap_or_else(|e| panic!("{mu}: {e}"));
        }
    }

    #[test]
    fn corrupted_markup_fails_the_balance_audit() {
        let bp = mine(&demo::repeated_cards(2), &MinerConfig::default()).unwrap();
        let mut bundle = emit_bundle(&bp, Framework::Html).unwrap();
        bundle.files[0].1 = bundle.files[0].1.replacen("</div>", "</span>", 1);
        assert!(audit_tag_balance(&bundle).is_err());
    }

    #[test]
    fn url_value_in_wrong_attribute_fails_the_sink_audit() {
        let bp = mine(&demo::repeated_cards(2), &MinerConfig::default()).unwrap();
        let mut bundle = emit_bundle(&bp, Framework::Html).unwrap();
        let url = bp
            .instances
            .values()
            .flat_map(|i| i.binding.values())
            .find_map(|p| match p {
                Payload::Url(v) => Some(v.clone()),
                _ => None,
            })
            .expect("cards bind urls");
        let poisoned = bundle.files[0]
            .1
            .replacen("class=\"frame\"", &format!("class=\"{url}\""), 1);
        bundle.files[0].1 = poisoned;
        assert!(audit_type_sinks(&bp, &bundle).is_err());
    }
}
