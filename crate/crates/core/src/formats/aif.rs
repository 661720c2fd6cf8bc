//! AIF: the XML interchange form of a set of annotation graphs.
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <AGSet id="S">
//!  <AG id="g1">
//!   <Anchor id="a1" offset="1.500000" unit="sec"/>
//!   <Annotation id="e1" type="segment" start="a1" end="a2">
//!    <Feature name="text">hi</Feature>
//!   </Annotation>
//!  </AG>
//! </AGSet>
//! ```
//!
//! The writer output is canonical: one space of indent per depth, anchors
//! before annotations, both in graph order. Parsing canonical output and
//! writing it again yields the same bytes.

use std::collections::HashSet;
use std::fmt::Write;

use super::FormatError;
use crate::graph::{Anchor, Annotation, AnnotationGraph, FeatureMap, GraphError, ANCHOR_UNIT};
use crate::time::TimeOffset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgSet {
    pub id: String,
    pub graphs: Vec<AnnotationGraph>,
}

impl AgSet {
    pub fn new(id: impl Into<String>, graphs: Vec<AnnotationGraph>) -> Self {
        AgSet { id: id.into(), graphs }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}

fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}

fn attrs(out: &mut String, pairs: &[(&str, &str)]) {
    for (k, v) in pairs {
        let _ = write!(out, " {k}=\"");
        escape_attr(v, out);
        out.push('"');
    }
}

pub fn emit_aif(set: &AgSet) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<AGSet");
    attrs(&mut out, &[("id", &set.id)]);
    if set.graphs.is_empty() {
        out.push_str("/>\n");
        return out;
    }
    out.push_str(">\n");
    for g in &set.graphs {
        out.push_str(" <AG");
        attrs(&mut out, &[("id", &g.id)]);
        if g.is_empty() {
            out.push_str("/>\n");
            continue;
        }
        out.push_str(">\n");
        for a in g.anchors() {
            out.push_str("  <Anchor");
            match a.offset {
                Some(t) => attrs(&mut out, &[("id", &a.id), ("offset", &t.to_string()), ("unit", ANCHOR_UNIT)]),
                None => attrs(&mut out, &[("id", &a.id), ("unit", ANCHOR_UNIT)]),
            }
            out.push_str("/>\n");
        }
        for e in g.annotations() {
            out.push_str("  <Annotation");
            attrs(&mut out, &[("id", &e.id), ("type", &e.kind), ("start", &e.start), ("end", &e.end)]);
            if e.features.is_empty() {
                out.push_str("/>\n");
                continue;
            }
            out.push_str(">\n");
            for (name, value) in e.features.iter() {
                out.push_str("   <Feature");
                attrs(&mut out, &[("name", name)]);
                out.push('>');
                escape_text(value, &mut out);
                out.push_str("</Feature>\n");
            }
            out.push_str("  </Annotation>\n");
        }
        out.push_str(" </AG>\n");
    }
    out.push_str("</AGSet>\n");
    out
}

fn violation(element: &str, reason: impl Into<String>) -> FormatError {
    FormatError::SchemaViolation { element: element.to_string(), reason: reason.into() }
}

fn check_attrs(node: roxmltree::Node<'_, '_>, allowed: &[&str]) -> Result<(), FormatError> {
    let name = node.tag_name().name();
    for a in node.attributes() {
        if a.namespace().is_some() || !allowed.contains(&a.name()) {
            return Err(violation(name, format!("unexpected attribute {:?}", a.name())));
        }
    }
    Ok(())
}

fn required<'a>(node: roxmltree::Node<'a, '_>, attr: &str) -> Result<&'a str, FormatError> {
    node.attribute(attr)
        .ok_or_else(|| violation(node.tag_name().name(), format!("missing attribute {attr:?}")))
}

/// Element children, rejecting stray non-whitespace text.
fn elements<'a, 'i>(node: roxmltree::Node<'a, 'i>) -> Result<Vec<roxmltree::Node<'a, 'i>>, FormatError> {
    let mut out = Vec::new();
    for c in node.children() {
        if c.is_element() {
            out.push(c);
        } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
            return Err(violation(node.tag_name().name(), "unexpected text content"));
        }
    }
    Ok(out)
}

fn expect_name(node: roxmltree::Node<'_, '_>, name: &str) -> Result<(), FormatError> {
    if node.tag_name().name() != name || node.tag_name().namespace().is_some() {
        return Err(violation(node.tag_name().name(), format!("expected <{name}>")));
    }
    Ok(())
}

fn graph_error(e: GraphError) -> FormatError {
    match e {
        GraphError::DuplicateId(id) => FormatError::DuplicateId(id),
        other => violation("AG", other.to_string()),
    }
}

fn read_graph(ag: roxmltree::Node<'_, '_>) -> Result<AnnotationGraph, FormatError> {
    check_attrs(ag, &["id"])?;
    let mut graph = AnnotationGraph::new(required(ag, "id")?);
    for child in elements(ag)? {
        match child.tag_name().name() {
            "Anchor" => {
                check_attrs(child, &["id", "offset", "unit"])?;
                let id = required(child, "id")?;
                if let Some(unit) = child.attribute("unit") {
                    if unit != ANCHOR_UNIT {
                        return Err(violation("Anchor", format!("unit must be {ANCHOR_UNIT:?}")));
                    }
                }
                let offset = match child.attribute("offset") {
                    Some(s) => Some(TimeOffset::parse(s).map_err(|e| violation("Anchor", e.to_string()))?),
                    None => None,
                };
                if !elements(child)?.is_empty() {
                    return Err(violation("Anchor", "must be empty"));
                }
                graph
                    .insert_anchor_unchecked(Anchor { id: id.to_string(), offset })
                    .map_err(graph_error)?;
            }
            "Annotation" => {
                check_attrs(child, &["id", "type", "start", "end"])?;
                let mut features = FeatureMap::new();
                for f in elements(child)? {
                    expect_name(f, "Feature")?;
                    check_attrs(f, &["name"])?;
                    if f.children().any(|c| c.is_element()) {
                        return Err(violation("Feature", "must hold text only"));
                    }
                    let value: String = f.children().filter_map(|c| c.text()).collect();
                    let name = required(f, "name")?;
                    if features.get(name).is_some() {
                        return Err(violation("Feature", format!("duplicate feature {name:?}")));
                    }
                    features.insert(name, value).map_err(|e| violation("Feature", e.to_string()))?;
                }
                graph
                    .insert_annotation_unchecked(Annotation {
                        id: required(child, "id")?.to_string(),
                        kind: required(child, "type")?.to_string(),
                        start: required(child, "start")?.to_string(),
                        end: required(child, "end")?.to_string(),
                        features,
                    })
                    .map_err(graph_error)?;
            }
            other => return Err(violation(other, "unexpected element inside <AG>")),
        }
    }
    Ok(graph)
}

fn read_set(xml: &str) -> Result<AgSet, FormatError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| FormatError::MalformedXml {
        line: e.pos().row,
        reason: e.to_string(),
    })?;
    let root = doc.root_element();
    expect_name(root, "AGSet")?;
    check_attrs(root, &["id"])?;
    let mut set = AgSet::new(required(root, "id")?, Vec::new());
    let mut seen = HashSet::new();
    for ag in elements(root)? {
        expect_name(ag, "AG")?;
        let graph = read_graph(ag)?;
        if !seen.insert(graph.id.clone()) {
            return Err(FormatError::DuplicateId(graph.id));
        }
        set.graphs.push(graph);
    }
    Ok(set)
}

/// Parses AIF and requires every graph to satisfy the graph invariants.
pub fn parse_aif(xml: &str) -> Result<AgSet, FormatError> {
    let set = read_set(xml)?;
    for g in &set.graphs {
        if let Some(v) = g.validate().violations.first() {
            let element = if v.code == crate::graph::ViolationCode::BadAnchorId { "Anchor" } else { "Annotation" };
            return Err(violation(element, format!("graph {}: {v}", g.id)));
        }
    }
    Ok(set)
}

/// Parses AIF structure only; referential and ordering problems are left
/// for [`AnnotationGraph::validate`] to report.
pub fn parse_aif_lenient(xml: &str) -> Result<AgSet, FormatError> {
    read_set(xml)
}
