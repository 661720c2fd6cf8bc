//! The annotation graph: anchors optionally pinned to signal time, joined
//! by typed annotations that carry ordered feature maps.
//!
//! Graphs built through [`AnnotationGraph::add_anchor`] and
//! [`AnnotationGraph::add_annotation`] always satisfy the graph invariants.
//! Deserializers go through the `insert_*_unchecked` entry points instead,
//! and [`AnnotationGraph::validate`] reports whatever they let through.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;
use thiserror::Error;

use crate::time::TimeOffset;

/// Unit label carried by every anchor.
pub const ANCHOR_UNIT: &str = "sec";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown anchor {0}")]
    UnknownAnchor(String),
    #[error("unknown annotation {0}")]
    UnknownAnnotation(String),
    #[error("arc {start} -> {end} would close a cycle")]
    CycleWouldForm { start: String, end: String },
    #[error("start time {start} is after end time {end}")]
    ReversedTimes { start: TimeOffset, end: TimeOffset },
    #[error("query range start {0} is after end {1}")]
    BadRange(TimeOffset, TimeOffset),
    #[error("feature names must be non-empty")]
    EmptyFeatureName,
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("malformed id {0:?}")]
    BadId(String),
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::UnknownAnchor(_) => "UnknownAnchor",
            GraphError::UnknownAnnotation(_) => "UnknownAnnotation",
            GraphError::CycleWouldForm { .. } => "CycleWouldForm",
            GraphError::ReversedTimes { .. } => "ReversedTimes",
            GraphError::BadRange(..) => "BadRange",
            GraphError::EmptyFeatureName => "EmptyFeatureName",
            GraphError::DuplicateId(_) => "DuplicateId",
            GraphError::BadId(_) => "BadId",
        }
    }
}

/// Parses the numeric part of an `a<n>` / `e<n>` identifier.
pub fn id_number(id: &str, prefix: char) -> Option<u64> {
    let rest = id.strip_prefix(prefix)?;
    if rest.is_empty() || rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok().filter(|&n| n > 0)
}

/// Orders ids by numeric suffix where possible so that `e2 < e10`.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    let key = |s: &str| {
        let digits = s.trim_start_matches(|c: char| !c.is_ascii_digit());
        (s.len() - digits.len(), digits.parse::<u64>().ok())
    };
    match (key(a), key(b)) {
        ((pa, Some(na)), (pb, Some(nb))) if a[..pa] == b[..pb] => na.cmp(&nb).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub id: String,
    pub offset: Option<TimeOffset>,
}

/// Insertion-ordered feature name → value map. Names are never empty.
/// Two maps are equal only if their entries also agree in order.
#[derive(Debug, Clone, Default)]
pub struct FeatureMap {
    entries: IndexMap<String, String>,
}

impl PartialEq for FeatureMap {
    fn eq(&self, other: &Self) -> bool {
        self.entries.iter().eq(other.entries.iter())
    }
}

impl Eq for FeatureMap {}

impl FeatureMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from pairs; later duplicates overwrite earlier values.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut map = FeatureMap::new();
        for (k, v) in pairs {
            map.insert(k, v)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) -> Result<Option<String>, GraphError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GraphError::EmptyFeatureName);
        }
        Ok(self.entries.insert(name, value.into()))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.get(name).map(String::as_str)
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        self.entries.shift_remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub id: String,
    pub kind: String,
    pub start: String,
    pub end: String,
    pub features: FeatureMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationCode {
    UnknownAnchor,
    ReversedTimes,
    Cycle,
    BadAnchorId,
    BadAnnotationId,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub ids: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.ids.join(" "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A single-timeline annotation graph.
///
/// Anchor and annotation ids live in separate `a<n>` / `e<n>` namespaces
/// with per-graph counters that only ever move forward, so ids are never
/// handed out twice during a graph's lifetime.
///
/// Equality compares the id and the anchors and annotations in order; the
/// id counters are not part of a graph's value.
#[derive(Debug, Clone)]
pub struct AnnotationGraph {
    pub id: String,
    anchors: IndexMap<String, Anchor>,
    annotations: IndexMap<String, Annotation>,
    next_anchor: u64,
    next_annotation: u64,
}

impl PartialEq for AnnotationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.anchors.values().eq(other.anchors.values())
            && self.annotations.values().eq(other.annotations.values())
    }
}

impl Eq for AnnotationGraph {}

impl Default for AnnotationGraph {
    fn default() -> Self {
        AnnotationGraph::new("g1")
    }
}

impl AnnotationGraph {
    pub fn new(id: impl Into<String>) -> Self {
        AnnotationGraph {
            id: id.into(),
            anchors: IndexMap::new(),
            annotations: IndexMap::new(),
            next_anchor: 1,
            next_annotation: 1,
        }
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Anchor> {
        self.anchors.values()
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values()
    }

    pub fn anchor(&self, id: &str) -> Option<&Anchor> {
        self.anchors.get(id)
    }

    pub fn annotation(&self, id: &str) -> Option<&Annotation> {
        self.annotations.get(id)
    }

    pub fn annotation_mut(&mut self, id: &str) -> Option<&mut Annotation> {
        self.annotations.get_mut(id)
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty() && self.annotations.is_empty()
    }

    pub fn offset_of(&self, anchor: &str) -> Option<TimeOffset> {
        self.anchors.get(anchor).and_then(|a| a.offset)
    }

    pub fn add_anchor(&mut self, offset: Option<TimeOffset>) -> String {
        let id = format!("a{}", self.next_anchor);
        self.next_anchor += 1;
        self.anchors.insert(id.clone(), Anchor { id: id.clone(), offset });
        id
    }

    pub fn add_annotation(
        &mut self,
        kind: impl Into<String>,
        start: &str,
        end: &str,
        features: FeatureMap,
    ) -> Result<String, GraphError> {
        let id = format!("e{}", self.next_annotation);
        self.check_arc(start, end)?;
        self.next_annotation += 1;
        self.annotations.insert(
            id.clone(),
            Annotation {
                id: id.clone(),
                kind: kind.into(),
                start: start.to_string(),
                end: end.to_string(),
                features,
            },
        );
        Ok(id)
    }

    /// Inserts an annotation under a caller-chosen `e<n>` id, enforcing the
    /// same checks as [`add_annotation`](Self::add_annotation).
    pub fn add_annotation_with_id(
        &mut self,
        id: &str,
        kind: impl Into<String>,
        start: &str,
        end: &str,
        features: FeatureMap,
    ) -> Result<(), GraphError> {
        let n = id_number(id, 'e').ok_or_else(|| GraphError::BadId(id.to_string()))?;
        if self.annotations.contains_key(id) {
            return Err(GraphError::DuplicateId(id.to_string()));
        }
        self.check_arc(start, end)?;
        self.next_annotation = self.next_annotation.max(n + 1);
        self.annotations.insert(
            id.to_string(),
            Annotation {
                id: id.to_string(),
                kind: kind.into(),
                start: start.to_string(),
                end: end.to_string(),
                features,
            },
        );
        Ok(())
    }

    fn check_arc(&self, start: &str, end: &str) -> Result<(), GraphError> {
        let s = self.anchors.get(start).ok_or_else(|| GraphError::UnknownAnchor(start.to_string()))?;
        let e = self.anchors.get(end).ok_or_else(|| GraphError::UnknownAnchor(end.to_string()))?;
        if let (Some(so), Some(eo)) = (s.offset, e.offset) {
            if so > eo {
                return Err(GraphError::ReversedTimes { start: so, end: eo });
            }
        }
        if start != end && self.reaches(end, start) {
            return Err(GraphError::CycleWouldForm {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(())
    }

    /// Whether `to` is reachable from `from` along annotation arcs.
    fn reaches(&self, from: &str, to: &str) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![from];
        while let Some(a) = stack.pop() {
            if a == to {
                return true;
            }
            if !seen.insert(a) {
                continue;
            }
            stack.extend(self.annotations.values().filter(|e| e.start == a).map(|e| e.end.as_str()));
        }
        false
    }

    /// Removes an annotation and any anchors it leaves unreferenced.
    pub fn delete_annotation(&mut self, id: &str) -> Result<Annotation, GraphError> {
        let removed = self
            .annotations
            .shift_remove(id)
            .ok_or_else(|| GraphError::UnknownAnnotation(id.to_string()))?;
        for anchor in [&removed.start, &removed.end] {
            let used = self.annotations.values().any(|e| &e.start == anchor || &e.end == anchor);
            if !used {
                self.anchors.shift_remove(anchor.as_str());
            }
        }
        Ok(removed)
    }

    /// Re-times both endpoints of an annotation at once. Every annotation
    /// touching either anchor must stay forward-ordered, otherwise nothing
    /// changes.
    pub fn set_annotation_times(
        &mut self,
        id: &str,
        start: Option<TimeOffset>,
        end: Option<TimeOffset>,
    ) -> Result<(), GraphError> {
        let ann = self
            .annotations
            .get(id)
            .ok_or_else(|| GraphError::UnknownAnnotation(id.to_string()))?;
        let (sa, ea) = (ann.start.clone(), ann.end.clone());
        let saved = (self.offset_of(&sa), self.offset_of(&ea));
        self.anchors[sa.as_str()].offset = start;
        self.anchors[ea.as_str()].offset = end;
        let bad = self
            .annotations
            .values()
            .filter(|e| e.start == sa || e.end == sa || e.start == ea || e.end == ea)
            .find_map(|e| match (self.offset_of(&e.start), self.offset_of(&e.end)) {
                (Some(s), Some(t)) if s > t => Some(GraphError::ReversedTimes { start: s, end: t }),
                _ => None,
            });
        if let Some(err) = bad {
            self.anchors[sa.as_str()].offset = saved.0;
            self.anchors[ea.as_str()].offset = saved.1;
            return Err(err);
        }
        Ok(())
    }

    /// Annotations whose closed time interval meets `[t0, t1]`, ordered by
    /// (start, end, id). Annotations with an unanchored endpoint never match.
    pub fn annotations_in_range(
        &self,
        t0: TimeOffset,
        t1: TimeOffset,
        kind: Option<&str>,
    ) -> Result<Vec<String>, GraphError> {
        if t0 > t1 {
            return Err(GraphError::BadRange(t0, t1));
        }
        let mut hits: Vec<(TimeOffset, TimeOffset, &str)> = self
            .annotations
            .values()
            .filter(|e| kind.is_none_or(|k| e.kind == k))
            .filter_map(|e| Some((self.offset_of(&e.start)?, self.offset_of(&e.end)?, e.id.as_str())))
            .filter(|&(s, t, _)| s <= t1 && t >= t0)
            .collect();
        hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| compare_ids(a.2, b.2)));
        Ok(hits.into_iter().map(|(_, _, id)| id.to_string()).collect())
    }

    /// Inserts an anchor as-is. Only fails on a duplicate id.
    pub fn insert_anchor_unchecked(&mut self, anchor: Anchor) -> Result<(), GraphError> {
        if self.anchors.contains_key(&anchor.id) {
            return Err(GraphError::DuplicateId(anchor.id));
        }
        if let Some(n) = id_number(&anchor.id, 'a') {
            self.next_anchor = self.next_anchor.max(n + 1);
        }
        self.anchors.insert(anchor.id.clone(), anchor);
        Ok(())
    }

    /// Inserts an annotation as-is. Only fails on a duplicate id.
    pub fn insert_annotation_unchecked(&mut self, annotation: Annotation) -> Result<(), GraphError> {
        if self.annotations.contains_key(&annotation.id) {
            return Err(GraphError::DuplicateId(annotation.id));
        }
        if let Some(n) = id_number(&annotation.id, 'e') {
            self.next_annotation = self.next_annotation.max(n + 1);
        }
        self.annotations.insert(annotation.id.clone(), annotation);
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for a in self.anchors.values() {
            if id_number(&a.id, 'a').is_none() {
                violations.push(Violation { code: ViolationCode::BadAnchorId, ids: vec![a.id.clone()] });
            }
        }
        for e in self.annotations.values() {
            if id_number(&e.id, 'e').is_none() {
                violations.push(Violation { code: ViolationCode::BadAnnotationId, ids: vec![e.id.clone()] });
            }
            let mut missing = false;
            for end in [&e.start, &e.end] {
                if !self.anchors.contains_key(end) {
                    missing = true;
                    violations.push(Violation {
                        code: ViolationCode::UnknownAnchor,
                        ids: vec![e.id.clone(), end.clone()],
                    });
                }
            }
            if !missing {
                if let (Some(s), Some(t)) = (self.offset_of(&e.start), self.offset_of(&e.end)) {
                    if s > t {
                        violations.push(Violation { code: ViolationCode::ReversedTimes, ids: vec![e.id.clone()] });
                    }
                }
            }
        }
        violations.extend(self.cycles());
        ValidationReport { violations }
    }

    /// One violation per strongly connected set of distinct anchors.
    fn cycles(&self) -> Vec<Violation> {
        let mut g: DiGraphMap<&str, ()> = DiGraphMap::new();
        for e in self.annotations.values() {
            if e.start != e.end {
                g.add_edge(e.start.as_str(), e.end.as_str(), ());
            }
        }
        let mut out: Vec<Violation> = petgraph::algo::tarjan_scc(&g)
            .into_iter()
            .filter(|scc| scc.len() > 1)
            .map(|scc| {
                let mut ids: Vec<String> = scc.into_iter().map(str::to_string).collect();
                ids.sort_by(|a, b| compare_ids(a, b));
                Violation { code: ViolationCode::Cycle, ids }
            })
            .collect();
        out.sort_by(|a, b| compare_ids(&a.ids[0], &b.ids[0]));
        out
    }

    /// Rebuilds the annotation order by `order`; ids not listed keep their
    /// relative order after the listed ones.
    pub fn reorder_annotations(&mut self, order: &[String]) {
        let mut rest = std::mem::take(&mut self.annotations);
        let mut out = IndexMap::with_capacity(rest.len());
        for id in order {
            if let Some(a) = rest.shift_remove(id) {
                out.insert(id.clone(), a);
            }
        }
        out.extend(rest);
        self.annotations = out;
    }
}
