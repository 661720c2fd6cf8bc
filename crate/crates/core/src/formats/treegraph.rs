//! Trees as annotation graphs.
//!
//! The `n` terminals of a tree define `n + 1` untimed anchors. Every node
//! becomes an annotation whose type is its kind (`syn`, `pos`, `wrd`) and
//! whose span is the anchor range of its yield. Features are `label`, an
//! optional `trace`, and for `syn`/`pos` a `depth` that orders nodes with
//! identical spans. Annotation ids are `e<node id>`, so node ids survive a
//! round trip.

use std::collections::HashMap;

use super::FormatError;
use crate::graph::{id_number, AnnotationGraph, FeatureMap};
use crate::tree::{NodeId, NodeKind, Tree};

pub fn tree_to_graph(tree: &Tree) -> AnnotationGraph {
    let mut graph = AnnotationGraph::new("g1");
    let n = tree.terminals().len();
    let anchors: Vec<String> = (0..=n).map(|_| graph.add_anchor(None)).collect();
    let spans = tree.spans();
    for (id, depth) in tree.preorder_with_depth() {
        let node = tree.node(id).expect("preorder node");
        let (s, e) = spans[&id].expect("every node covers a terminal");
        let mut features = FeatureMap::new();
        features.insert("label", node.label.as_str()).expect("non-empty name");
        if let Some(t) = node.trace {
            features.insert("trace", t.to_string()).expect("non-empty name");
        }
        if node.kind != NodeKind::Wrd {
            features.insert("depth", depth.to_string()).expect("non-empty name");
        }
        graph
            .add_annotation_with_id(&format!("e{}", id.0), node.kind.as_str(), &anchors[s], &anchors[e + 1], features)
            .expect("spans of a valid tree are forward arcs");
    }
    graph
}

struct Item {
    id: NodeId,
    kind: NodeKind,
    label: String,
    trace: Option<u32>,
    start: usize,
    end: usize,
    depth: Option<usize>,
}

fn bad(reason: impl Into<String>) -> FormatError {
    FormatError::NotATreeEncoding(reason.into())
}

pub fn graph_to_tree(graph: &AnnotationGraph) -> Result<Tree, FormatError> {
    // Recover anchor order from the chain of word annotations.
    let words: Vec<_> = graph.annotations().filter(|a| a.kind == "wrd").collect();
    if words.is_empty() {
        return Err(bad("no wrd annotations"));
    }
    let mut next: HashMap<&str, &str> = HashMap::new();
    for w in &words {
        if next.insert(w.start.as_str(), w.end.as_str()).is_some() {
            return Err(bad(format!("two words start at {}", w.start)));
        }
    }
    let ends: std::collections::HashSet<&str> = words.iter().map(|w| w.end.as_str()).collect();
    let firsts: Vec<&str> = words.iter().map(|w| w.start.as_str()).filter(|s| !ends.contains(s)).collect();
    let [first] = firsts.as_slice() else {
        return Err(bad("words do not form a single chain"));
    };
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut cur = *first;
    index.insert(cur, 0);
    while let Some(&nxt) = next.get(cur) {
        if index.contains_key(nxt) {
            return Err(bad("word chain loops"));
        }
        index.insert(nxt, index.len());
        cur = nxt;
    }
    if index.len() != words.len() + 1 {
        return Err(bad("words do not form a single chain"));
    }

    let mut items = Vec::new();
    for a in graph.annotations() {
        let kind = match a.kind.as_str() {
            "syn" => NodeKind::Syn,
            "pos" => NodeKind::Pos,
            "wrd" => NodeKind::Wrd,
            other => return Err(bad(format!("unexpected annotation type {other:?}"))),
        };
        let id = id_number(&a.id, 'e').ok_or_else(|| bad(format!("bad id {}", a.id)))?;
        let (Some(&start), Some(&end)) = (index.get(a.start.as_str()), index.get(a.end.as_str())) else {
            return Err(bad(format!("{} is anchored off the word chain", a.id)));
        };
        if start >= end {
            return Err(bad(format!("{} has an empty span", a.id)));
        }
        let label = a.features.get("label").ok_or_else(|| bad(format!("{} has no label", a.id)))?;
        let trace = match a.features.get("trace") {
            Some(t) => Some(t.parse().map_err(|_| bad(format!("{} has a bad trace", a.id)))?),
            None => None,
        };
        let depth = match a.features.get("depth") {
            Some(d) => Some(d.parse().map_err(|_| bad(format!("{} has a bad depth", a.id)))?),
            None => None,
        };
        items.push(Item { id: NodeId(id), kind, label: label.to_string(), trace, start, end, depth });
    }

    // Outer spans first; among equal spans, shallower first, words last.
    items.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.end.cmp(&a.end))
            .then((a.kind == NodeKind::Wrd).cmp(&(b.kind == NodeKind::Wrd)))
            .then(a.depth.cmp(&b.depth))
    });
    for pair in items.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.start == b.start && a.end == b.end && a.kind != NodeKind::Wrd && b.kind != NodeKind::Wrd {
            match (a.depth, b.depth) {
                (Some(x), Some(y)) if x != y => {}
                _ => return Err(bad(format!("span tie between {} and {} without distinct depth", a.id, b.id))),
            }
        }
    }

    let root = &items[0];
    if root.kind != NodeKind::Syn || root.start != 0 || root.end != words.len() {
        return Err(bad("missing root: first node must be a syn spanning all words"));
    }
    let mut tree = Tree::with_root(root.id, root.label.clone(), root.trace);
    let mut stack: Vec<(NodeId, usize, NodeKind)> = vec![(root.id, root.end, root.kind)];
    for item in &items[1..] {
        while let Some(&(_, end, _)) = stack.last() {
            if item.start >= end {
                stack.pop();
            } else {
                break;
            }
        }
        let Some(&(parent, end, kind)) = stack.last() else {
            return Err(bad(format!("{} lies outside the root", item.id)));
        };
        if item.end > end {
            return Err(bad(format!("{} crosses its enclosing span", item.id)));
        }
        if kind == NodeKind::Wrd {
            return Err(bad(format!("{} sits under a word", item.id)));
        }
        tree.attach(parent, item.id, item.kind, item.label.clone(), item.trace)
            .map_err(|e| bad(e.to_string()))?;
        stack.push((item.id, item.end, item.kind));
    }
    tree.check_invariants().map_err(bad)?;
    Ok(tree)
}
