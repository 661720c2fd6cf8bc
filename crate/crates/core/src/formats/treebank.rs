//! Penn Treebank style bracketed trees.
//!
//! A list whose only content after the label is one atom is a `pos` node
//! over a `wrd`; any other list is a `syn` node. Coreference indices are
//! written as a `-<n>` suffix on labels and on `*`-initial trace tokens,
//! e.g. `(NP-SBJ-1 (-NONE- *T*-1))`.

use super::FormatError;
use crate::tree::{NodeId, NodeKind, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok::Atom(s, &text[s..i]));
            }
            match c {
                '(' => out.push(Tok::Open(i)),
                ')' => out.push(Tok::Close(i)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok::Atom(s, &text[s..]));
    }
    out
}

enum Item<'a> {
    Atom(usize, &'a str),
    List(List<'a>),
}

struct List<'a> {
    open: usize,
    items: Vec<Item<'a>>,
}

impl Item<'_> {
    fn pos(&self) -> usize {
        match self {
            Item::Atom(p, _) => *p,
            Item::List(l) => l.open,
        }
    }
}

struct Reader<'a> {
    toks: Vec<Tok<'a>>,
    at: usize,
    len: usize,
}

impl<'a> Reader<'a> {
    fn list(&mut self, open: usize) -> Result<List<'a>, FormatError> {
        let mut items = Vec::new();
        loop {
            let tok = self.toks.get(self.at).copied();
            self.at += 1;
            match tok {
                None => return Err(FormatError::UnbalancedParens { pos: self.len }),
                Some(Tok::Close(_)) => return Ok(List { open, items }),
                Some(Tok::Open(p)) => items.push(Item::List(self.list(p)?)),
                Some(Tok::Atom(p, s)) => items.push(Item::Atom(p, s)),
            }
        }
    }
}

/// Splits a canonical `-<n>` suffix (n ≥ 1, no leading zero) off `s`.
fn split_trace(s: &str) -> (&str, Option<u32>) {
    if let Some(dash) = s.rfind('-') {
        let (head, digits) = (&s[..dash], &s[dash + 1..]);
        if !head.is_empty() && !digits.is_empty() && !digits.starts_with('0') && digits.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = digits.parse() {
                return (head, Some(n));
            }
        }
    }
    (s, None)
}

fn split_word(s: &str) -> (&str, Option<u32>) {
    if s.starts_with('*') {
        split_trace(s)
    } else {
        (s, None)
    }
}

fn label_of<'a>(list: &List<'a>) -> Result<&'a str, FormatError> {
    match list.items.first() {
        None => Err(FormatError::EmptyNode { pos: list.open }),
        Some(Item::List(l)) => Err(FormatError::BadToken { pos: l.open }),
        Some(Item::Atom(_, s)) => Ok(s),
    }
}

fn is_preterminal(list: &List<'_>) -> bool {
    list.items.len() == 2 && matches!(list.items[1], Item::Atom(..))
}

fn build(tree: &mut Tree, parent: NodeId, list: &List<'_>) -> Result<(), FormatError> {
    let (label, trace) = split_trace(label_of(list)?);
    if list.items.len() == 1 {
        return Err(FormatError::EmptyNode { pos: list.open });
    }
    let kind = if is_preterminal(list) { NodeKind::Pos } else { NodeKind::Syn };
    let id = tree.push(parent, kind, label, trace).expect("parent exists");
    add_children(tree, id, &list.items[1..])
}

fn add_children(tree: &mut Tree, id: NodeId, items: &[Item<'_>]) -> Result<(), FormatError> {
    for item in items {
        match item {
            Item::Atom(_, s) => {
                let (word, trace) = split_word(s);
                tree.push(id, NodeKind::Wrd, word, trace).expect("parent exists");
            }
            Item::List(l) => build(tree, id, l)?,
        }
    }
    Ok(())
}

fn root_tree(list: &List<'_>) -> Result<Tree, FormatError> {
    let list = match list.items.as_slice() {
        [] => return Err(FormatError::EmptyNode { pos: list.open }),
        [Item::List(inner)] => inner,
        [Item::List(_), second, ..] => return Err(FormatError::BadToken { pos: second.pos() }),
        _ => list,
    };
    let (label, trace) = split_trace(label_of(list)?);
    if list.items.len() == 1 {
        return Err(FormatError::EmptyNode { pos: list.open });
    }
    let mut tree = Tree::with_root(NodeId(1), label, trace);
    let root = tree.root();
    add_children(&mut tree, root, &list.items[1..])?;
    Ok(tree)
}

/// Reads every top-level bracketed tree in `text`.
pub fn parse_treebank(text: &str) -> Result<Vec<Tree>, FormatError> {
    let mut reader = Reader { toks: tokenize(text), at: 0, len: text.len() };
    let mut trees = Vec::new();
    while let Some(tok) = reader.toks.get(reader.at).copied() {
        reader.at += 1;
        match tok {
            Tok::Open(p) => {
                let list = reader.list(p)?;
                trees.push(root_tree(&list)?);
            }
            Tok::Close(p) => return Err(FormatError::UnbalancedParens { pos: p }),
            Tok::Atom(p, _) => return Err(FormatError::BadToken { pos: p }),
        }
    }
    Ok(trees)
}

fn with_trace(label: &str, trace: Option<u32>) -> String {
    match trace {
        Some(t) => format!("{label}-{t}"),
        None => label.to_string(),
    }
}

/// Writes one tree on a single line.
pub fn emit_treebank(tree: &Tree) -> String {
    fn go(tree: &Tree, id: NodeId, out: &mut String) {
        let node = tree.node(id).expect("reachable node");
        if node.kind == NodeKind::Wrd {
            out.push_str(&with_trace(&node.label, node.trace));
            return;
        }
        out.push('(');
        out.push_str(&with_trace(&node.label, node.trace));
        for &c in &node.children {
            out.push(' ');
            go(tree, c, out);
        }
        out.push(')');
    }
    let mut out = String::new();
    go(tree, tree.root(), &mut out);
    out
}
