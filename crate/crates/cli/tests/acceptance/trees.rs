use std::collections::BTreeMap;
use std::time::Instant;

use agkit_core::formats::{emit_treebank, parse_treebank};
use agkit_core::tree::Side;
use agkit_core::{NodeId, NodeKind, Tree, TreeError};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen;

const CORPUS: &str = include_str!("../data/trees.mrg");

/// Words of a bracket string, found without the real parser: a word is
/// an atom directly followed by `)` whose predecessor is also an atom. A
/// `-<n>` index on a `*` token is trace notation, not part of the word.
fn bracket_words(src: &str) -> Vec<String> {
    let spaced = src.replace('(', " ( ").replace(')', " ) ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let atom = |t: &str| t != "(" && t != ")";
    (1..toks.len().saturating_sub(1))
        .filter(|&i| atom(toks[i]) && atom(toks[i - 1]) && toks[i + 1] == ")")
        .map(|i| match toks[i].rsplit_once('-') {
            Some((w, n)) if w.starts_with('*') && !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => w.to_string(),
            _ => toks[i].to_string(),
        })
        .collect()
}

pub fn treebank_round_trip() -> Result<String, String> {
    let started = Instant::now();
    let lines: Vec<&str> = CORPUS.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != 50 {
        return Err(format!("corpus holds {} trees", lines.len()));
    }
    let mut traced = 0;
    for (i, line) in lines.iter().enumerate() {
        let first = parse_treebank(line).map_err(|e| format!("tree {}: {e}", i + 1))?;
        let [tree] = first.as_slice() else { return Err(format!("tree {}: not a single tree", i + 1)) };
        let words = tree.terminal_yield();
        if !(3..=20).contains(&words.len()) {
            return Err(format!("tree {} has {} terminals", i + 1, words.len()));
        }
        if words != bracket_words(line) {
            return Err(format!("tree {}: yield {words:?} differs from the bracket words", i + 1));
        }
        if tree.preorder().iter().any(|&n| tree.node(n).unwrap().trace.is_some()) {
            traced += 1;
        }
        let emitted = emit_treebank(tree);
        let second = parse_treebank(&emitted).map_err(|e| format!("tree {} re-read: {e}", i + 1))?;
        if second.len() != 1 || second[0].shape() != tree.shape() {
            return Err(format!("tree {}: structure changed through {emitted}", i + 1));
        }
        let squashed: String = line.split_whitespace().collect::<Vec<_>>().join(" ").replace(" )", ")");
        if emitted != squashed {
            return Err(format!("tree {}: emitted {emitted} from {squashed}", i + 1));
        }
    }
    let took = started.elapsed();
    if traced < 5 {
        return Err(format!("only {traced} trees carry traces"));
    }
    if took.as_secs_f64() >= 1.0 {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("50 trees, {traced} with traces, {:.1} ms", took.as_secs_f64() * 1e3))
}

/// Independent structural checks: kind arity rules and contiguous spans
/// recomputed from scratch.
fn check_tree(t: &Tree) -> Result<(), String> {
    let mut next = 0usize;
    fn walk(t: &Tree, id: NodeId, next: &mut usize, spans: &mut BTreeMap<NodeId, Vec<usize>>) -> Result<Vec<usize>, String> {
        let n = t.node(id).map_err(|e| e.to_string())?;
        let covered = match n.kind {
            NodeKind::Wrd => {
                if !n.children.is_empty() {
                    return Err(format!("wrd {id} has children"));
                }
                *next += 1;
                vec![*next - 1]
            }
            NodeKind::Pos => {
                let only_wrd = n.children.len() == 1 && t.node(n.children[0]).unwrap().kind == NodeKind::Wrd;
                if !only_wrd {
                    return Err(format!("pos {id} does not hold exactly one wrd"));
                }
                walk(t, n.children[0], next, spans)?
            }
            NodeKind::Syn => {
                if n.children.is_empty() {
                    return Err(format!("syn {id} is empty"));
                }
                let mut all = Vec::new();
                for &c in &n.children {
                    if t.node(c).unwrap().parent != Some(id) {
                        return Err(format!("{c} has a stale parent link"));
                    }
                    all.extend(walk(t, c, next, spans)?);
                }
                all
            }
        };
        spans.insert(id, covered.clone());
        Ok(covered)
    }
    let mut spans = BTreeMap::new();
    walk(t, t.root(), &mut next, &mut spans)?;
    if spans.len() != t.len() {
        return Err("unreachable nodes".into());
    }
    for (id, covered) in &spans {
        if covered.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(format!("node {id} is not projective"));
        }
    }
    Ok(())
}

fn wrd_ids(t: &Tree) -> Vec<NodeId> {
    t.preorder().into_iter().filter(|&id| t.node(id).unwrap().kind == NodeKind::Wrd).collect()
}

pub fn tree_edit_invariants() -> Result<String, String> {
    let mut r = gen::rng(11);
    let ops = ["insert_internal_node", "delete_node", "move_node", "adjoin", "add_syn_wrd", "change_label", "coref"];
    let mut accepted: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rejected = 0usize;
    let mut steps = 0usize;
    for seq in 0..1000 {
        let n = r.random_range(1..=10);
        let mut t = gen::tree(&mut r, n);
        for _ in 0..r.random_range(1..=30) {
            steps += 1;
            let before = emit_treebank(&t);
            let before_yield = t.terminal_yield();
            let before_wrds = wrd_ids(&t);
            let nodes = t.preorder();
            let pick = |r: &mut gen::TestRng| *nodes.choose(r).unwrap();
            // half the two-node selections are siblings so edits get through
            let pair = |r: &mut gen::TestRng| {
                let a = pick(r);
                let sib = t.node(a).unwrap().parent.map(|p| t.node(p).unwrap().children.clone());
                match sib {
                    Some(s) if r.random_bool(0.5) => (a, *s.choose(r).unwrap()),
                    _ => (a, pick(r)),
                }
            };
            let op = *ops.choose(&mut r).unwrap();
            let mut expected_yield = Some(before_yield.clone());
            let res: Result<(), TreeError> = match op {
                "insert_internal_node" => {
                    let (a, b) = pair(&mut r);
                    let sel = if r.random_bool(0.3) || a == b { vec![a] } else { vec![a, b] };
                    t.insert_internal_node(&sel, "X").map(drop)
                }
                "delete_node" => {
                    let a = pick(&mut r);
                    let node = t.node(a).unwrap().clone();
                    if node.kind == NodeKind::Pos {
                        let w = node.children[0];
                        let i = before_wrds.iter().position(|&x| x == w).unwrap();
                        let mut y = before_yield.clone();
                        y.remove(i);
                        expected_yield = Some(y);
                    }
                    t.delete_node(a)
                }
                "move_node" => {
                    let (a, b) = pair(&mut r);
                    let target = pick(&mut r);
                    let sel = if r.random_bool(0.3) && a != b { vec![a, b, target] } else { vec![a, target] };
                    t.move_node(&sel)
                }
                "adjoin" => {
                    let (a, b) = (pick(&mut r), pick(&mut r));
                    t.adjoin(&[a, b]).map(drop)
                }
                "add_syn_wrd" => {
                    let a = pick(&mut r);
                    let side = if r.random_bool(0.5) { Side::Before } else { Side::After };
                    let under = wrd_ids(&t).iter().filter(|&&w| t.is_within(w, a)).count();
                    let first = wrd_ids(&t).iter().position(|&w| t.is_within(w, a)).unwrap_or(0);
                    let at = if side == Side::Before { first } else { first + under };
                    let mut y = before_yield.clone();
                    y.insert(at.min(y.len()), "*T*".to_string());
                    expected_yield = Some(y);
                    t.add_syn_wrd(a, side, "NP", "*T*").map(drop)
                }
                "change_label" => {
                    let a = pick(&mut r);
                    if t.node(a).unwrap().kind == NodeKind::Wrd {
                        let i = before_wrds.iter().position(|&x| x == a).unwrap();
                        let mut y = before_yield.clone();
                        y[i] = "changed".to_string();
                        expected_yield = Some(y);
                        t.change_label(a, "changed")
                    } else {
                        t.change_label(a, "Y")
                    }
                }
                "coref" => {
                    let (a, b) = (pick(&mut r), pick(&mut r));
                    t.coref(&[a, b]).map(drop)
                }
                _ => unreachable!(),
            };
            match res {
                Ok(()) => {
                    *accepted.entry(op).or_default() += 1;
                    check_tree(&t).map_err(|e| format!("sequence {seq}, {op}: {e} in {}", emit_treebank(&t)))?;
                    if Some(t.terminal_yield()) != expected_yield {
                        return Err(format!("sequence {seq}, {op}: yield changed from {before}"));
                    }
                }
                Err(e) => {
                    rejected += 1;
                    if emit_treebank(&t) != before {
                        return Err(format!("sequence {seq}, rejected {op} ({e}) still changed {before}"));
                    }
                }
            }
        }
    }
    if let Some(op) = ops.iter().find(|op| !accepted.contains_key(*op)) {
        return Err(format!("{op} never committed"));
    }
    Ok(format!("1000 sequences, {steps} ops, {} committed, {rejected} rejected", steps - rejected))
}

/// Plain mirror of a tree for the move oracle.
#[derive(Clone, PartialEq, Debug)]
struct Mirror {
    root: NodeId,
    kids: BTreeMap<NodeId, Vec<NodeId>>,
    parent: BTreeMap<NodeId, Option<NodeId>>,
    kind: BTreeMap<NodeId, NodeKind>,
}

impl Mirror {
    fn of(t: &Tree) -> Self {
        let mut m = Mirror { root: t.root(), kids: BTreeMap::new(), parent: BTreeMap::new(), kind: BTreeMap::new() };
        for id in t.preorder() {
            let n = t.node(id).unwrap();
            m.kids.insert(id, n.children.clone());
            m.parent.insert(id, n.parent);
            m.kind.insert(id, n.kind);
        }
        m
    }

    fn words(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if self.kind[&n] == NodeKind::Wrd {
                out.push(n);
            }
            stack.extend(self.kids[&n].iter().rev());
        }
        out
    }

    fn within(&self, mut n: NodeId, anc: NodeId) -> bool {
        loop {
            if n == anc {
                return true;
            }
            match self.parent[&n] {
                Some(p) => n = p,
                None => return false,
            }
        }
    }

    /// Tries every slot in `target`; returns the unique yield-keeping
    /// result, or `None` when the move must be refused.
    fn try_move(&self, run: &[NodeId], target: NodeId) -> Option<Mirror> {
        let first = run[0];
        let p = self.parent[&first]?;
        if run.iter().any(|&a| self.within(target, a)) || self.kind[&target] != NodeKind::Syn {
            return None;
        }
        let goal = self.words();
        let mut base = self.clone();
        base.kids.get_mut(&p).unwrap().retain(|c| !run.contains(c));
        if base.kids[&p].is_empty() && p != target {
            return None;
        }
        let mut found = Vec::new();
        for slot in 0..=base.kids[&target].len() {
            let mut m = base.clone();
            let list = m.kids.get_mut(&target).unwrap();
            for (k, &a) in run.iter().enumerate() {
                list.insert(slot + k, a);
            }
            for &a in run {
                m.parent.insert(a, Some(target));
            }
            if m.words() == goal {
                found.push(m);
            }
        }
        assert!(found.len() <= 1, "two yield-keeping slots");
        found.pop()
    }
}

pub fn move_node_oracle() -> Result<String, String> {
    let mut r = gen::rng(23);
    let (mut trees, mut decisions, mut accepts) = (0, 0, 0);
    while trees < 250 {
        let n = r.random_range(1..=8);
        let t = gen::tree(&mut r, n);
        trees += 1;
        let m = Mirror::of(&t);
        let nodes = t.preorder();
        let mut selections: Vec<(Vec<NodeId>, Vec<NodeId>, NodeId)> = Vec::new();
        for &a in &nodes {
            for &b in &nodes {
                if a != b {
                    selections.push((vec![a, b], vec![a], b));
                }
            }
        }
        for &p in &nodes {
            let kids = &m.kids[&p];
            for i in 0..kids.len() {
                for j in i + 1..kids.len() {
                    for &b in &nodes {
                        if b != kids[i] && b != kids[j] {
                            selections.push((vec![kids[i], kids[j], b], kids[i..=j].to_vec(), b));
                        }
                    }
                }
            }
        }
        for (sel, run, target) in selections {
            decisions += 1;
            let mut engine = t.clone();
            let got = engine.move_node(&sel);
            let want = m.try_move(&run, target);
            match (got, want) {
                (Ok(()), Some(w)) => {
                    accepts += 1;
                    if Mirror::of(&engine) != w {
                        return Err(format!("move {sel:?} in {}: placement differs", emit_treebank(&t)));
                    }
                }
                (Err(_), None) => {}
                (got, want) => {
                    return Err(format!(
                        "move {sel:?} in {}: engine {:?}, oracle {}",
                        emit_treebank(&t),
                        got,
                        if want.is_some() { "accepts" } else { "rejects" }
                    ))
                }
            }
        }
    }
    Ok(format!("{trees} trees, {decisions} selections agree ({accepts} accepted)"))
}
