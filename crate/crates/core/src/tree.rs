//! Syntactic trees made of `syn`, `pos` and `wrd` nodes, with the editing
//! operations of a treebank annotation tool.
//!
//! Every committed edit keeps these invariants:
//!
//! * `wrd` nodes are leaves; a `pos` node has exactly one child, a `wrd`;
//! * every `syn` node has at least one child;
//! * the edit does not reorder the terminal string.
//!
//! Edits run on a scratch copy and are swapped in only on success, so a
//! rejected edit leaves the tree exactly as it was.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Syn,
    Pos,
    Wrd,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Syn => "syn",
            NodeKind::Pos => "pos",
            NodeKind::Wrd => "wrd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// The category label, or the token text for `wrd` nodes.
    pub label: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub trace: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("no node {0}")]
    UnknownNode(NodeId),
    #[error("bad selection: {0}")]
    BadSelection(String),
    #[error("selected nodes do not share a parent")]
    NotSameParent,
    #[error("operation not allowed on the root")]
    RootSelected,
    #[error("an internal node would be left without leaves")]
    WouldEmptyParent,
    #[error("wrd nodes are deleted through their parent")]
    WrdNotDeletable,
    #[error("the root cannot be deleted")]
    RootNotDeletable,
    #[error("no placement keeps the word order")]
    WordOrderChange,
    #[error("target lies inside the moved material")]
    CyclicMove,
    #[error("node {0} cannot take this edit")]
    InvalidTarget(NodeId),
    #[error("label must be non-empty")]
    EmptyLabel,
    #[error("label {0:?} contains whitespace or parentheses")]
    BadLabel(String),
    #[error("both selections are the same node")]
    SameNode,
    #[error("no tokens given")]
    EmptyInput,
}

impl TreeError {
    pub fn code(&self) -> &'static str {
        match self {
            TreeError::UnknownNode(_) => "UnknownNode",
            TreeError::BadSelection(_) => "BadSelection",
            TreeError::NotSameParent => "NotSameParent",
            TreeError::RootSelected => "RootSelected",
            TreeError::WouldEmptyParent => "WouldEmptyParent",
            TreeError::WrdNotDeletable => "WrdNotDeletable",
            TreeError::RootNotDeletable => "RootNotDeletable",
            TreeError::WordOrderChange => "WordOrderChange",
            TreeError::CyclicMove => "CyclicMove",
            TreeError::InvalidTarget(_) => "InvalidTarget",
            TreeError::EmptyLabel => "EmptyLabel",
            TreeError::BadLabel(_) => "BadLabel",
            TreeError::SameNode => "SameNode",
            TreeError::EmptyInput => "EmptyInput",
        }
    }
}

/// An ordered highlight of one to three distinct, existing nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection(Vec<NodeId>);

impl Selection {
    pub fn new(tree: &Tree, ids: &[NodeId]) -> Result<Self, TreeError> {
        if ids.is_empty() || ids.len() > 3 {
            return Err(TreeError::BadSelection(format!("{} nodes selected", ids.len())));
        }
        for (i, id) in ids.iter().enumerate() {
            tree.node(*id)?;
            if ids[..i].contains(id) {
                return Err(TreeError::BadSelection(format!("node {id} selected twice")));
            }
        }
        Ok(Selection(ids.to_vec()))
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.0
    }

    fn expect(&self, counts: &[usize]) -> Result<(), TreeError> {
        if counts.contains(&self.0.len()) {
            Ok(())
        } else {
            Err(TreeError::BadSelection(format!("{} nodes selected", self.0.len())))
        }
    }
}

/// Structural view of a tree without node ids, used for equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub kind: NodeKind,
    pub label: String,
    pub trace: Option<u32>,
    pub children: Vec<Shape>,
}

#[derive(Debug, Clone)]
pub struct Tree {
    root: NodeId,
    nodes: BTreeMap<NodeId, TreeNode>,
    next_id: u64,
    next_trace: u32,
}

/// Trees compare by structure: kinds, labels, traces and child order.
/// Node ids do not participate.
impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

impl Eq for Tree {}

pub(crate) fn check_label(label: &str) -> Result<(), TreeError> {
    if label.is_empty() {
        return Err(TreeError::EmptyLabel);
    }
    if label.chars().any(|c| c.is_whitespace() || c == '(' || c == ')') {
        return Err(TreeError::BadLabel(label.to_string()));
    }
    Ok(())
}

impl Tree {
    /// A tree holding only a `syn` root under the given id.
    pub fn with_root(id: NodeId, label: impl Into<String>, trace: Option<u32>) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            id,
            TreeNode { kind: NodeKind::Syn, label: label.into(), children: Vec::new(), parent: None, trace },
        );
        Tree { root: id, nodes, next_id: id.0 + 1, next_trace: trace.map_or(1, |t| t + 1) }
    }

    /// Appends a child under `parent` with a caller-chosen id. Used by
    /// readers; does not check kind rules, see [`Tree::check_invariants`].
    pub fn attach(
        &mut self,
        parent: NodeId,
        id: NodeId,
        kind: NodeKind,
        label: impl Into<String>,
        trace: Option<u32>,
    ) -> Result<(), TreeError> {
        if self.nodes.contains_key(&id) {
            return Err(TreeError::BadSelection(format!("node {id} already exists")));
        }
        self.node(parent)?;
        self.nodes.insert(id, TreeNode { kind, label: label.into(), children: Vec::new(), parent: Some(parent), trace });
        self.node_mut(parent).children.push(id);
        self.next_id = self.next_id.max(id.0 + 1);
        if let Some(t) = trace {
            self.next_trace = self.next_trace.max(t + 1);
        }
        Ok(())
    }

    /// Appends a child with the next free id.
    pub fn push(&mut self, parent: NodeId, kind: NodeKind, label: impl Into<String>, trace: Option<u32>) -> Result<NodeId, TreeError> {
        let id = NodeId(self.next_id);
        self.attach(parent, id, kind, label, trace)?;
        Ok(id)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode, TreeError> {
        self.nodes.get(&id).ok_or(TreeError::UnknownNode(id))
    }

    fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        self.nodes.get_mut(&id).expect("node id checked by caller")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn next_trace(&self) -> u32 {
        self.next_trace
    }

    /// Node ids in pre-order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[&id].children.iter().rev());
        }
        out
    }

    /// `(node, depth)` pairs in pre-order, root at depth 0.
    pub fn preorder_with_depth(&self) -> Vec<(NodeId, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, 0)];
        while let Some((id, d)) = stack.pop() {
            out.push((id, d));
            stack.extend(self.nodes[&id].children.iter().rev().map(|&c| (c, d + 1)));
        }
        out
    }

    /// `wrd` nodes in surface order.
    pub fn terminals(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|id| self.nodes[id].kind == NodeKind::Wrd).collect()
    }

    pub fn terminal_yield(&self) -> Vec<String> {
        self.terminals().into_iter().map(|id| self.nodes[&id].label.clone()).collect()
    }

    /// Inclusive terminal index range under each node; `None` for nodes
    /// without terminals.
    pub fn spans(&self) -> BTreeMap<NodeId, Option<(usize, usize)>> {
        fn walk(t: &Tree, id: NodeId, next: &mut usize, out: &mut BTreeMap<NodeId, Option<(usize, usize)>>) -> Option<(usize, usize)> {
            let node = &t.nodes[&id];
            let span = if node.kind == NodeKind::Wrd {
                let i = *next;
                *next += 1;
                Some((i, i))
            } else {
                let mut span: Option<(usize, usize)> = None;
                for &c in &node.children {
                    if let Some((s, e)) = walk(t, c, next, out) {
                        span = Some(span.map_or((s, e), |(s0, _)| (s0, e)));
                    }
                }
                span
            };
            out.insert(id, span);
            span
        }
        let mut out = BTreeMap::new();
        walk(self, self.root, &mut 0, &mut out);
        out
    }

    pub fn shape(&self) -> Shape {
        fn build(t: &Tree, id: NodeId) -> Shape {
            let n = &t.nodes[&id];
            Shape {
                kind: n.kind,
                label: n.label.clone(),
                trace: n.trace,
                children: n.children.iter().map(|&c| build(t, c)).collect(),
            }
        }
        build(self, self.root)
    }

    pub fn parent(&self, id: NodeId) -> Result<Option<NodeId>, TreeError> {
        Ok(self.node(id)?.parent)
    }

    fn position(&self, id: NodeId) -> Option<usize> {
        let parent = self.nodes[&id].parent?;
        self.nodes[&parent].children.iter().position(|&c| c == id)
    }

    /// True when `node` is `ancestor` or lies beneath it.
    pub fn is_within(&self, node: NodeId, ancestor: NodeId) -> bool {
        let mut cur = Some(node);
        while let Some(id) = cur {
            if id == ancestor {
                return true;
            }
            cur = self.nodes.get(&id).and_then(|n| n.parent);
        }
        false
    }

    /// Checks every structural invariant; the error names the first
    /// broken rule.
    pub fn check_invariants(&self) -> Result<(), String> {
        let root = self.nodes.get(&self.root).ok_or("missing root")?;
        if root.kind != NodeKind::Syn || root.parent.is_some() {
            return Err("root must be a parentless syn node".into());
        }
        let order = self.preorder();
        if order.len() != self.nodes.len() {
            return Err("unreachable or shared nodes".into());
        }
        for &id in &order {
            let n = &self.nodes[&id];
            for &c in &n.children {
                if self.nodes.get(&c).and_then(|cn| cn.parent) != Some(id) {
                    return Err(format!("child {c} of {id} has wrong parent link"));
                }
            }
            match n.kind {
                NodeKind::Wrd if !n.children.is_empty() => return Err(format!("wrd {id} has children")),
                NodeKind::Wrd if n.parent.is_none() => return Err(format!("wrd {id} has no parent")),
                NodeKind::Pos => {
                    if n.children.len() != 1 || self.nodes[&n.children[0]].kind != NodeKind::Wrd {
                        return Err(format!("pos {id} must have exactly one wrd child"));
                    }
                }
                NodeKind::Syn if n.children.is_empty() => return Err(format!("syn {id} has no children")),
                _ => {}
            }
            if n.kind != NodeKind::Wrd && n.label.is_empty() {
                return Err(format!("node {id} has an empty label"));
            }
        }
        Ok(())
    }

    fn commit(&mut self, work: Tree) {
        *self = work;
    }

    fn new_node(&mut self, kind: NodeKind, label: &str, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(id, TreeNode { kind, label: label.to_string(), children: Vec::new(), parent, trace: None });
        id
    }

    /// Puts `new` where `old` sits (or makes it the root) and `old`
    /// becomes its only child.
    fn wrap(&mut self, old: NodeId, new: NodeId) {
        match self.nodes[&old].parent {
            Some(p) => {
                let pos = self.position(old).expect("child listed in parent");
                self.node_mut(p).children[pos] = new;
                self.node_mut(new).parent = Some(p);
            }
            None => {
                self.root = new;
                self.node_mut(new).parent = None;
            }
        }
        self.node_mut(new).children = vec![old];
        self.node_mut(old).parent = Some(new);
    }

    /// Contiguous sibling run spanning the two nodes, in tree order.
    fn sibling_run(&self, a: NodeId, b: NodeId) -> Result<(NodeId, usize, usize), TreeError> {
        let pa = self.nodes[&a].parent;
        let pb = self.nodes[&b].parent;
        match (pa, pb) {
            (Some(p), Some(q)) if p == q => {
                let i = self.position(a).expect("listed");
                let j = self.position(b).expect("listed");
                Ok((p, i.min(j), i.max(j)))
            }
            _ => Err(TreeError::NotSameParent),
        }
    }

    /// Moves a contiguous sibling run under `target` at the only slot that
    /// keeps the terminal order.
    fn relocate(&mut self, parent: NodeId, lo: usize, hi: usize, target: NodeId) -> Result<(), TreeError> {
        let run: Vec<NodeId> = self.nodes[&parent].children[lo..=hi].to_vec();
        if run.iter().any(|&r| self.is_within(target, r)) {
            return Err(TreeError::CyclicMove);
        }
        if self.nodes[&target].kind != NodeKind::Syn {
            return Err(TreeError::InvalidTarget(target));
        }
        let terminals_before_run = {
            let first_wrd = self.subtree_terminals(run[0]);
            let all = self.terminals();
            match first_wrd.first() {
                Some(w) => all.iter().position(|t| t == w).expect("terminal present"),
                None => return Err(TreeError::WordOrderChange),
            }
        };
        self.node_mut(parent).children.drain(lo..=hi);
        if self.nodes[&parent].children.is_empty() && parent != target {
            return Err(TreeError::WouldEmptyParent);
        }
        let mut count = self.terminals_before(target);
        let children = self.nodes[&target].children.clone();
        let mut slot = None;
        for (k, &c) in children.iter().enumerate() {
            if count == terminals_before_run {
                slot = Some(k);
                break;
            }
            count += self.subtree_terminals(c).len();
        }
        if slot.is_none() && count == terminals_before_run {
            slot = Some(children.len());
        }
        let slot = slot.ok_or(TreeError::WordOrderChange)?;
        let target_node = self.node_mut(target);
        target_node.children.splice(slot..slot, run.iter().copied());
        for &r in &run {
            self.node_mut(r).parent = Some(target);
        }
        Ok(())
    }

    fn subtree_terminals(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[&n];
            if node.kind == NodeKind::Wrd {
                out.push(n);
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Number of terminals that come before `id` in surface order.
    fn terminals_before(&self, id: NodeId) -> usize {
        let mut count = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[&cur].parent {
            let pos = self.position(cur).expect("listed");
            count += self.nodes[&p].children[..pos].iter().map(|&c| self.subtree_terminals(c).len()).sum::<usize>();
            cur = p;
        }
        count
    }

    /// Adds a `syn` node above one node, or above the contiguous run of
    /// siblings from the first through the second selected node.
    pub fn insert_internal_node(&mut self, sel: &[NodeId], label: &str) -> Result<NodeId, TreeError> {
        let sel = Selection::new(self, sel)?;
        sel.expect(&[1, 2])?;
        check_label(label)?;
        let mut work = self.clone();
        let new = match *sel.ids() {
            [only] => {
                let parent = work.nodes[&only].parent.ok_or(TreeError::RootSelected)?;
                if work.nodes[&parent].kind == NodeKind::Pos {
                    return Err(TreeError::InvalidTarget(only));
                }
                let new = work.new_node(NodeKind::Syn, label, None);
                work.wrap(only, new);
                new
            }
            [a, b] => {
                let (parent, lo, hi) = work.sibling_run(a, b)?;
                let new = work.new_node(NodeKind::Syn, label, Some(parent));
                let run: Vec<NodeId> = work.node_mut(parent).children.splice(lo..=hi, [new]).collect();
                for &r in &run {
                    work.node_mut(r).parent = Some(new);
                }
                work.node_mut(new).children = run;
                new
            }
            _ => unreachable!(),
        };
        self.commit(work);
        Ok(new)
    }

    /// Deletes a `pos` node together with its word, or removes a `syn`
    /// node and splices its children into its place.
    pub fn delete_node(&mut self, id: NodeId) -> Result<(), TreeError> {
        let node = self.node(id)?;
        let parent = match (node.kind, node.parent) {
            (NodeKind::Wrd, _) => return Err(TreeError::WrdNotDeletable),
            (_, None) => return Err(TreeError::RootNotDeletable),
            (_, Some(p)) => p,
        };
        let mut work = self.clone();
        let pos = work.position(id).expect("listed");
        match node.kind {
            NodeKind::Pos => {
                work.node_mut(parent).children.remove(pos);
                if work.nodes[&parent].children.is_empty() {
                    return Err(TreeError::WouldEmptyParent);
                }
                for c in work.nodes[&id].children.clone() {
                    work.nodes.remove(&c);
                }
                work.nodes.remove(&id);
            }
            NodeKind::Syn => {
                let children = work.nodes.remove(&id).expect("exists").children;
                for &c in &children {
                    work.node_mut(c).parent = Some(parent);
                }
                work.node_mut(parent).children.splice(pos..=pos, children);
            }
            NodeKind::Wrd => unreachable!(),
        }
        self.commit(work);
        Ok(())
    }

    /// With two nodes `[a, b]`, moves `a` under `b`; with three
    /// `[a1, a2, b]`, moves the sibling run `a1..a2` under `b`. The slot
    /// inside `b` is the one that keeps the terminal order.
    pub fn move_node(&mut self, sel: &[NodeId]) -> Result<(), TreeError> {
        let sel = Selection::new(self, sel)?;
        sel.expect(&[2, 3])?;
        let mut work = self.clone();
        match *sel.ids() {
            [a, b] => {
                let parent = work.nodes[&a].parent.ok_or(TreeError::CyclicMove)?;
                let i = work.position(a).expect("listed");
                work.relocate(parent, i, i, b)?;
            }
            [a1, a2, b] => {
                let (parent, lo, hi) = work.sibling_run(a1, a2)?;
                work.relocate(parent, lo, hi, b)?;
            }
            _ => unreachable!(),
        }
        self.commit(work);
        Ok(())
    }

    /// Wraps `b` in a childless copy of itself, then moves `a` under the
    /// copy. Returns the copy's id.
    pub fn adjoin(&mut self, sel: &[NodeId]) -> Result<NodeId, TreeError> {
        let sel = Selection::new(self, sel)?;
        sel.expect(&[2])?;
        let (a, b) = (sel.ids()[0], sel.ids()[1]);
        if self.is_within(b, a) {
            return Err(TreeError::CyclicMove);
        }
        if let Some(p) = self.nodes[&b].parent {
            if self.nodes[&p].kind == NodeKind::Pos {
                return Err(TreeError::InvalidTarget(b));
            }
        }
        let mut work = self.clone();
        let label = work.nodes[&b].label.clone();
        let clone = work.new_node(NodeKind::Syn, &label, None);
        work.wrap(b, clone);
        let parent = work.nodes[&a].parent.ok_or(TreeError::CyclicMove)?;
        let i = work.position(a).expect("listed");
        work.relocate(parent, i, i, clone)?;
        self.commit(work);
        Ok(clone)
    }

    /// Inserts a `syn` node holding a single word (a trace by default)
    /// right before or after `id`. Returns the new `syn` node.
    pub fn add_syn_wrd(&mut self, id: NodeId, side: Side, syn_label: &str, wrd_text: &str) -> Result<NodeId, TreeError> {
        let parent = self.node(id)?.parent.ok_or(TreeError::RootSelected)?;
        if self.nodes[&parent].kind == NodeKind::Pos {
            return Err(TreeError::InvalidTarget(id));
        }
        check_label(syn_label)?;
        check_label(wrd_text)?;
        let mut work = self.clone();
        let pos = work.position(id).expect("listed");
        let syn = work.new_node(NodeKind::Syn, syn_label, Some(parent));
        let wrd = work.new_node(NodeKind::Wrd, wrd_text, Some(syn));
        work.node_mut(syn).children.push(wrd);
        let at = match side {
            Side::Before => pos,
            Side::After => pos + 1,
        };
        work.node_mut(parent).children.insert(at, syn);
        self.commit(work);
        Ok(syn)
    }

    pub fn change_label(&mut self, id: NodeId, label: &str) -> Result<(), TreeError> {
        self.node(id)?;
        check_label(label)?;
        self.node_mut(id).label = label.to_string();
        Ok(())
    }

    /// Gives both nodes the same trace index and returns it.
    pub fn coref(&mut self, sel: &[NodeId]) -> Result<u32, TreeError> {
        if let [a, b] = *sel {
            if a == b {
                return Err(TreeError::SameNode);
            }
        }
        let sel = Selection::new(self, sel)?;
        sel.expect(&[2])?;
        let (a, b) = (sel.ids()[0], sel.ids()[1]);
        let index = match (self.nodes[&a].trace, self.nodes[&b].trace) {
            (Some(t), None) | (None, Some(t)) => t,
            (Some(t), Some(u)) if t == u => t,
            _ => {
                let t = self.next_trace;
                self.next_trace += 1;
                t
            }
        };
        self.node_mut(a).trace = Some(index);
        self.node_mut(b).trace = Some(index);
        Ok(index)
    }

    /// A flat tree: one `pos`/`wrd` pair per token under a `syn` root.
    pub fn build_default(tokens: &[impl AsRef<str>], root_label: &str, pos_label: &str) -> Result<Tree, TreeError> {
        if tokens.is_empty() {
            return Err(TreeError::EmptyInput);
        }
        check_label(root_label)?;
        check_label(pos_label)?;
        let mut tree = Tree::with_root(NodeId(1), root_label, None);
        let root = tree.root;
        for tok in tokens {
            check_label(tok.as_ref())?;
            let pos = tree.push(root, NodeKind::Pos, pos_label, None)?;
            tree.push(pos, NodeKind::Wrd, tok.as_ref(), None)?;
        }
        Ok(tree)
    }
}
