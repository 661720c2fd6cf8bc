//! LCF transcripts: `<start> <end> <speaker>: <text>` per line, `#` lines
//! are comments. Exactly one space after the colon separates speaker from
//! text; anything beyond it belongs to the text.

use super::FormatError;
use crate::graph::{AnnotationGraph, FeatureMap};
use crate::time::TimeOffset;

/// Annotation type of transcript segments.
pub const LCF_KIND: &str = "segment";

fn token(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start_matches([' ', '\t']);
    if s.is_empty() {
        return None;
    }
    let end = s.find([' ', '\t']).unwrap_or(s.len());
    Some((&s[..end], &s[end..]))
}

fn parse_line(line: &str) -> Option<(TimeOffset, TimeOffset, &str, &str)> {
    let (start, rest) = token(line)?;
    let (end, rest) = token(rest)?;
    let (speaker, rest) = token(rest)?;
    let speaker = speaker.strip_suffix(':').filter(|s| !s.is_empty())?;
    let start = TimeOffset::parse(start).ok()?;
    let end = TimeOffset::parse(end).ok()?;
    if start > end {
        return None;
    }
    let text = rest.strip_prefix(' ').unwrap_or(rest);
    Some((start, end, speaker, text))
}

pub fn parse_lcf(text: &str) -> Result<AnnotationGraph, FormatError> {
    let mut graph = AnnotationGraph::new("g1");
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (start, end, speaker, body) = parse_line(line).ok_or(FormatError::BadLine { line: i + 1 })?;
        let features = FeatureMap::from_pairs([("speaker", speaker), ("text", body)]).expect("fixed names");
        let a = graph.add_anchor(Some(start));
        let b = graph.add_anchor(Some(end));
        graph.add_annotation(LCF_KIND, &a, &b, features).expect("ordered times on fresh anchors");
    }
    Ok(graph)
}

/// Writes every `segment` annotation in graph order. A missing `text`
/// feature is written as empty.
pub fn emit_lcf(graph: &AnnotationGraph) -> Result<String, FormatError> {
    let mut out = String::new();
    for ann in graph.annotations().filter(|a| a.kind == LCF_KIND) {
        let (Some(start), Some(end)) = (graph.offset_of(&ann.start), graph.offset_of(&ann.end)) else {
            return Err(FormatError::Unrepresentable(format!("{} is not timed", ann.id)));
        };
        let speaker = ann.features.get("speaker").unwrap_or("");
        if speaker.is_empty() || speaker.contains(char::is_whitespace) {
            return Err(FormatError::Unrepresentable(format!("{} has speaker {speaker:?}", ann.id)));
        }
        let text = ann.features.get("text").unwrap_or("");
        if text.contains(['\n', '\r']) {
            return Err(FormatError::Unrepresentable(format!("{} has a line break in its text", ann.id)));
        }
        out.push_str(&format!("{start} {end} {speaker}:"));
        if !text.is_empty() {
            out.push(' ');
            out.push_str(text);
        }
        out.push('\n');
    }
    Ok(out)
}
