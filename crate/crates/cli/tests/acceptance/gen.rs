//! Random instance generators shared by the acceptance checks.

use agkit_core::formats::AgSet;
use agkit_core::{AnnotationGraph, FeatureMap, NodeId, NodeKind, TimeOffset, Tree};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

const SYN: &[&str] = &["NP", "VP", "PP", "S", "ADJP", "SBAR"];
const POS: &[&str] = &["DT", "NN", "VB", "IN", "JJ", "PRP"];

/// A random tree over `n` distinct words. No `syn` node sits directly over
/// a word, so the brackets read back unambiguously.
pub fn tree(r: &mut TestRng, n: usize) -> Tree {
    let mut t = Tree::with_root(NodeId(1), *SYN.choose(r).unwrap(), None);
    let mut next_word = 0;
    fill(r, &mut t, NodeId(1), n, &mut next_word);
    t
}

fn fill(r: &mut TestRng, t: &mut Tree, parent: NodeId, n: usize, w: &mut usize) {
    let mut left = n;
    while left > 0 {
        let chunk = if left == n && n > 1 && r.random_bool(0.5) { r.random_range(1..n) } else { r.random_range(1..=left) };
        if chunk == 1 && r.random_bool(0.7) {
            let pos = t.push(parent, NodeKind::Pos, *POS.choose(r).unwrap(), None).unwrap();
            t.push(pos, NodeKind::Wrd, format!("w{w}"), None).unwrap();
            *w += 1;
        } else {
            let syn = t.push(parent, NodeKind::Syn, *SYN.choose(r).unwrap(), None).unwrap();
            fill(r, t, syn, chunk, w);
        }
        left -= chunk;
    }
}

/// Adds up to `pairs` coreferences between random non-word nodes.
pub fn add_corefs(r: &mut TestRng, t: &mut Tree, pairs: usize) {
    let nodes: Vec<NodeId> =
        t.preorder().into_iter().filter(|&id| t.node(id).unwrap().kind != NodeKind::Wrd).collect();
    if nodes.len() < 2 {
        return;
    }
    for _ in 0..pairs {
        let a = *nodes.choose(r).unwrap();
        let b = *nodes.choose(r).unwrap();
        if a != b {
            t.coref(&[a, b]).unwrap();
        }
    }
}

const FEATURE_TEXT: &[&str] =
    &["", "plain", "two words", "a<b", "x & y", "\"quoted\"", "it's", "tab\there", "line\nbreak", "ünï", "  pad  ", "]]>"];

pub fn feature_text(r: &mut TestRng) -> String {
    let mut s = String::new();
    for _ in 0..r.random_range(1..=2) {
        s.push_str(FEATURE_TEXT.choose(r).unwrap());
    }
    s
}

/// A valid random graph: anchors carry increasing offsets (or none) and
/// every annotation runs forward in anchor order, so no cycle can form.
pub fn graph(r: &mut TestRng, id: &str, max_annotations: usize) -> AnnotationGraph {
    let mut g = AnnotationGraph::new(id);
    let n_anchors = r.random_range(1..=12);
    let mut t = 0u64;
    let mut anchors = Vec::new();
    for _ in 0..n_anchors {
        t += r.random_range(0..3_000_000);
        let offset = r.random_bool(0.8).then(|| TimeOffset::from_micros(t));
        anchors.push(g.add_anchor(offset));
    }
    for _ in 0..r.random_range(1..=max_annotations) {
        let i = r.random_range(0..anchors.len());
        let j = r.random_range(i..anchors.len());
        let mut f = FeatureMap::new();
        for k in 0..r.random_range(0..4) {
            f.insert(format!("f{k}"), feature_text(r)).unwrap();
        }
        let kind = *["segment", "WD", "syn", "row"].choose(r).unwrap();
        g.add_annotation(kind, &anchors[i], &anchors[j], f).unwrap();
    }
    // deletions leave gaps in the id sequence and collect orphan anchors
    let ids: Vec<String> = g.annotations().map(|a| a.id.clone()).collect();
    for id in ids {
        if g.annotation_count() > 1 && r.random_bool(0.1) {
            g.delete_annotation(&id).unwrap();
        }
    }
    g
}

pub fn agset(r: &mut TestRng) -> AgSet {
    let graphs = (0..r.random_range(1..=3)).map(|i| graph(r, &format!("g{}", i + 1), 50)).collect();
    AgSet::new(format!("set{}", r.random_range(0..100)), graphs)
}

/// Single-spaced words over a small alphabet; may be empty.
pub fn words(r: &mut TestRng, max: usize) -> String {
    let n = r.random_range(0..=max);
    (0..n)
        .map(|_| {
            let len = r.random_range(1..=5);
            (0..len).map(|_| *['a', 'e', 'k', 'o', 't', 'u', 'é'].choose(r).unwrap()).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Whitespace-free letters; may be empty.
pub fn letters(r: &mut TestRng, max: usize, upper: bool) -> String {
    let n = r.random_range(0..=max);
    (0..n)
        .map(|_| {
            let c = *['a', 'b', 'd', 'k', 'o', 's', 'u', 'ş'].choose(r).unwrap();
            if upper { c.to_uppercase().next().unwrap() } else { c }
        })
        .collect()
}
