//! PNML place/transition nets restricted to elementary systems.
//!
//! Places and transitions are identified by their `id` attribute. Arc
//! inscriptions and initial markings above one token are rejected, as are
//! documents with more than one net or page.

use std::fmt::Write as _;

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::petri::{Marking, PetriNet};

fn line_of(doc: &Document<'_>, node: Node<'_, '_>) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn parse_error(doc: &Document<'_>, node: Node<'_, '_>, message: impl Into<String>) -> Error {
    Error::ParseError {
        line: line_of(doc, node),
        message: message.into(),
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

/// Text of `<tag><text>…</text></tag>` below `node`.
fn labelled_text<'a>(node: Node<'a, '_>, tag: &str) -> Option<&'a str> {
    child(node, tag)
        .and_then(|n| child(n, "text"))
        .and_then(|t| t.text())
        .map(str::trim)
}

fn required_attr<'a>(doc: &Document<'_>, node: Node<'a, '_>, attr: &str) -> Result<&'a str> {
    node.attribute(attr).ok_or_else(|| {
        parse_error(
            doc,
            node,
            format!("<{}> without `{attr}`", node.tag_name().name()),
        )
    })
}

fn token_count(doc: &Document<'_>, node: Node<'_, '_>, text: &str, what: &str) -> Result<u64> {
    text.parse()
        .map_err(|_| parse_error(doc, node, format!("{what} `{text}` is not a token count")))
}

/// Parses a PNML document into a net and its initial marking.
pub fn parse_pnml(text: &str) -> Result<(PetriNet, Marking)> {
    let doc = Document::parse(text).map_err(|e| Error::ParseError {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let nets: Vec<Node> = if root.has_tag_name("net") {
        vec![root]
    } else {
        root.children().filter(|c| c.has_tag_name("net")).collect()
    };
    let net = match nets.as_slice() {
        [net] => *net,
        [] => return Err(parse_error(&doc, root, "no <net> element")),
        [_, second, ..] => {
            return Err(Error::UnsupportedFeature(format!(
                "more than one <net> (second at line {})",
                line_of(&doc, *second)
            )))
        }
    };
    let pages: Vec<Node> = net.children().filter(|c| c.has_tag_name("page")).collect();
    let body = match pages.as_slice() {
        [] => net,
        [page] => *page,
        [_, second, ..] => {
            return Err(Error::UnsupportedFeature(format!(
                "more than one <page> (second at line {})",
                line_of(&doc, *second)
            )))
        }
    };

    let mut builder = PetriNet::builder();
    let mut places = Vec::new();
    let mut marked = Vec::new();
    let mut transitions: Vec<(String, Vec<String>, Vec<String>)> = Vec::new();
    for node in body.children().filter(|c| c.has_tag_name("place")) {
        let id = required_attr(&doc, node, "id")?;
        if let Some(tokens) = labelled_text(node, "initialMarking") {
            match token_count(&doc, node, tokens, "initial marking")? {
                0 => {}
                1 => marked.push(id.to_string()),
                n => {
                    return Err(Error::UnsupportedFeature(format!(
                        "place `{id}` starts with {n} tokens (line {})",
                        line_of(&doc, node)
                    )))
                }
            }
        }
        places.push(id.to_string());
        builder = builder.place(id);
    }
    if places.is_empty() {
        return Err(parse_error(&doc, net, "net has no places"));
    }
    for node in body.children().filter(|c| c.has_tag_name("transition")) {
        let id = required_attr(&doc, node, "id")?;
        transitions.push((id.to_string(), Vec::new(), Vec::new()));
    }
    for node in body.children().filter(|c| c.has_tag_name("arc")) {
        let source = required_attr(&doc, node, "source")?;
        let target = required_attr(&doc, node, "target")?;
        if let Some(weight) = labelled_text(node, "inscription") {
            let w = token_count(&doc, node, weight, "arc weight")?;
            if w != 1 {
                return Err(Error::UnsupportedFeature(format!(
                    "arc `{source}` → `{target}` has weight {w} (line {})",
                    line_of(&doc, node)
                )));
            }
        }
        let is_place = |x: &str| places.iter().any(|p| p == x);
        let slot = |x: &str| transitions.iter().position(|(t, _, _)| t == x);
        match (
            is_place(source),
            slot(target),
            slot(source),
            is_place(target),
        ) {
            (true, Some(t), _, _) => transitions[t].1.push(source.to_string()),
            (_, _, Some(t), true) => transitions[t].2.push(target.to_string()),
            _ => {
                return Err(parse_error(
                    &doc,
                    node,
                    format!("arc `{source}` → `{target}` must join a place and a transition"),
                ))
            }
        }
    }
    for (t, pre, post) in transitions {
        builder = builder.transition(t, pre, post);
    }
    let net = builder.build()?;
    let initial = net.marking(&marked)?;
    Ok((net, initial))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes a net and initial marking as PNML; [`parse_pnml`] reads it back
/// unchanged.
pub fn write_pnml(net: &PetriNet, initial: &Marking, id: &str) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    let _ = writeln!(
        out,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">",
        escape(id)
    );
    out.push_str("    <page id=\"page0\">\n");
    for p in net.places() {
        let name = escape(net.place_name(p));
        if initial.contains(p) {
            let _ = writeln!(
                out,
                "      <place id=\"{name}\"><initialMarking><text>1</text></initialMarking></place>"
            );
        } else {
            let _ = writeln!(out, "      <place id=\"{name}\"/>");
        }
    }
    for t in net.transitions() {
        let _ = writeln!(
            out,
            "      <transition id=\"{}\"/>",
            escape(net.transition_name(t))
        );
    }
    let mut arc = 0;
    for t in net.transitions() {
        let tn = escape(net.transition_name(t));
        for &p in net.pre(t) {
            arc += 1;
            let _ = writeln!(
                out,
                "      <arc id=\"a{arc}\" source=\"{}\" target=\"{tn}\"/>",
                escape(net.place_name(p))
            );
        }
        for &p in net.post(t) {
            arc += 1;
            let _ = writeln!(
                out,
                "      <arc id=\"a{arc}\" source=\"{tn}\" target=\"{}\"/>",
                escape(net.place_name(p))
            );
        }
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}
