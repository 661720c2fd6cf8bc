//! Typed documents over AIF payloads, and the edit commands that drive
//! them. A command names an operation of the document's kind plus JSON
//! arguments; applying it decodes the payload, runs the operation and
//! re-emits canonical AIF.
//!
//! Selections travel in the arguments because a payload holds no cursor:
//! tree nodes, table rows, segments and interlinear cells are addressed by
//! their annotation ids (`"e5"`). Times may be given as strings (`"1.5"`)
//! or numbers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::formats::{emit_aif, graph_to_tree, parse_aif, parse_treebank, tree_to_graph, AgSet, FormatError};
use crate::formats::{ColumnSpec, TableConfig};
use crate::graph::{id_number, AnnotationGraph};
use crate::interlinear::{IlDoc, IlError, IlId, TypeConfig};
use crate::segment_edit::{SegmentDoc, SegmentError};
use crate::table_edit::{TableDoc, TableError};
use crate::time::{Region, TimeOffset};
use crate::tree::{NodeId, Side, Tree, TreeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Table,
    Segments,
    Interlinear,
    Tree,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Table => "table",
            DocKind::Segments => "segments",
            DocKind::Interlinear => "interlinear",
            DocKind::Tree => "tree",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "table" => DocKind::Table,
            "segments" => DocKind::Segments,
            "interlinear" => DocKind::Interlinear,
            "tree" => DocKind::Tree,
            other => return Err(format!("unknown document kind {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCommand {
    pub op: String,
    #[serde(default)]
    pub args: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_revision: Option<u64>,
}

impl EditCommand {
    pub fn new(op: &str, args: Value) -> Self {
        EditCommand { op: op.to_string(), args, base_revision: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Interlinear(#[from] IlError),
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("unknown operation {op:?} for {kind} documents")]
    UnknownOp { kind: DocKind, op: String },
    #[error(transparent)]
    Payload(#[from] FormatError),
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::Tree(e) => e.code(),
            EditError::Table(e) => e.code(),
            EditError::Segment(e) => e.code(),
            EditError::Interlinear(e) => e.code(),
            EditError::BadArgs(_) => "BadArgs",
            EditError::UnknownOp { .. } => "UnknownOp",
            EditError::Payload(e) => e.code(),
        }
    }
}

/// A decoded document of any kind.
#[derive(Debug, Clone)]
pub enum Document {
    Table(TableDoc),
    Segments(SegmentDoc),
    Interlinear(IlDoc),
    Tree(Vec<Tree>),
}

impl Document {
    pub fn empty(kind: DocKind) -> Self {
        match kind {
            DocKind::Table => Document::Table(TableDoc::new(TableConfig::default())),
            DocKind::Segments => Document::Segments(SegmentDoc::new(1)),
            DocKind::Interlinear => Document::Interlinear(IlDoc::new(TypeConfig::default())),
            DocKind::Tree => Document::Tree(Vec::new()),
        }
    }

    pub fn kind(&self) -> DocKind {
        match self {
            Document::Table(_) => DocKind::Table,
            Document::Segments(_) => DocKind::Segments,
            Document::Interlinear(_) => DocKind::Interlinear,
            Document::Tree(_) => DocKind::Tree,
        }
    }

    pub fn from_graphs(kind: DocKind, graphs: &[AnnotationGraph]) -> Result<Self, FormatError> {
        let single = |graphs: &[AnnotationGraph]| match graphs {
            [g] => Ok(g.clone()),
            _ => Err(FormatError::BadDocument { kind: kind.as_str(), reason: format!("{} graphs, expected 1", graphs.len()) }),
        };
        Ok(match kind {
            DocKind::Table => Document::Table(TableDoc::from_graph(single(graphs)?, &TableConfig::default())?),
            DocKind::Segments => Document::Segments(SegmentDoc::from_graphs(graphs)?),
            DocKind::Interlinear => Document::Interlinear(IlDoc::from_graph(&single(graphs)?)?),
            DocKind::Tree => Document::Tree(graphs.iter().map(graph_to_tree).collect::<Result<_, _>>()?),
        })
    }

    pub fn to_graphs(&self) -> Vec<AnnotationGraph> {
        match self {
            Document::Table(d) => vec![d.graph().clone()],
            Document::Segments(d) => d.to_graphs(),
            Document::Interlinear(d) => vec![d.to_graph()],
            Document::Tree(trees) => trees
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut g = tree_to_graph(t);
                    g.id = format!("t{}", i + 1);
                    g
                })
                .collect(),
        }
    }

    /// Parses a payload as a document of `kind`, also returning the set id.
    pub fn decode(kind: DocKind, payload: &str) -> Result<(String, Self), FormatError> {
        let set = parse_aif(payload)?;
        let doc = Document::from_graphs(kind, &set.graphs)?;
        Ok((set.id, doc))
    }

    pub fn encode(&self, set_id: &str) -> String {
        emit_aif(&AgSet::new(set_id, self.to_graphs()))
    }

    /// Runs one command. Returns the operation's result (new ids and the
    /// like) as JSON.
    pub fn apply(&mut self, cmd: &EditCommand) -> Result<Value, EditError> {
        let args = Args::new(&cmd.args)?;
        let kind = self.kind();
        let unknown = || EditError::UnknownOp { kind, op: cmd.op.clone() };
        match self {
            Document::Tree(trees) => apply_tree(trees, &cmd.op, &args).ok_or_else(unknown)?,
            Document::Table(doc) => apply_table(doc, &cmd.op, &args).ok_or_else(unknown)?,
            Document::Segments(doc) => apply_segments(doc, &cmd.op, &args).ok_or_else(unknown)?,
            Document::Interlinear(doc) => apply_interlinear(doc, &cmd.op, &args).ok_or_else(unknown)?,
        }
    }
}

/// Guesses the document kind from the annotation types in a set. A set
/// without annotations reads as an empty tree document.
pub fn infer_kind(set: &AgSet) -> Option<DocKind> {
    let mut kinds = set.graphs.iter().flat_map(|g| g.annotations()).map(|a| match a.kind.as_str() {
        crate::table_edit::CONFIG_KIND | crate::formats::ROW_KIND => Some(DocKind::Table),
        crate::formats::LCF_KIND | crate::segment_edit::PENDING_KIND => Some(DocKind::Segments),
        crate::interlinear::CONFIG_KIND | crate::interlinear::UNIT_KIND => Some(DocKind::Interlinear),
        "syn" | "pos" | "wrd" => Some(DocKind::Tree),
        _ => None,
    });
    let first = kinds.next().unwrap_or(Some(DocKind::Tree))?;
    kinds.all(|k| k == Some(first) || (first == DocKind::Interlinear && k.is_none())).then_some(first)
}

/// Canonical payload of an empty document.
pub fn empty_payload(kind: DocKind, set_id: &str) -> String {
    Document::empty(kind).encode(set_id)
}

/// Decodes `payload`, applies `cmd` and re-encodes. On error nothing
/// changes.
pub fn apply_command(kind: DocKind, payload: &str, cmd: &EditCommand) -> Result<(String, Value), EditError> {
    let (set_id, mut doc) = Document::decode(kind, payload)?;
    let result = doc.apply(cmd)?;
    Ok((doc.encode(&set_id), result))
}

fn bad(m: impl Into<String>) -> EditError {
    EditError::BadArgs(m.into())
}

struct Args<'a> {
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Args<'a> {
    fn new(v: &'a Value) -> Result<Self, EditError> {
        match v {
            Value::Null => Ok(Args { map: None }),
            Value::Object(m) => Ok(Args { map: Some(m) }),
            _ => Err(bad("args must be an object")),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn req(&self, key: &str) -> Result<&'a Value, EditError> {
        self.get(key).ok_or_else(|| bad(format!("missing argument {key:?}")))
    }

    fn str(&self, key: &str) -> Result<&'a str, EditError> {
        self.req(key)?.as_str().ok_or_else(|| bad(format!("{key:?} must be a string")))
    }

    fn str_or(&self, key: &str, default: &'a str) -> Result<&'a str, EditError> {
        if self.has(key) { self.str(key) } else { Ok(default) }
    }

    fn usize(&self, key: &str) -> Result<usize, EditError> {
        let v = self.req(key)?;
        v.as_u64().map(|n| n as usize).ok_or_else(|| bad(format!("{key:?} must be a non-negative integer")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, EditError> {
        if self.has(key) { self.usize(key) } else { Ok(default) }
    }

    fn time(&self, key: &str) -> Result<TimeOffset, EditError> {
        time_value(self.req(key)?).map_err(|e| bad(format!("{key:?}: {e}")))
    }

    fn opt_time(&self, key: &str) -> Result<Option<TimeOffset>, EditError> {
        if self.has(key) { self.time(key).map(Some) } else { Ok(None) }
    }

    fn id(&self, key: &str) -> Result<u64, EditError> {
        id_value(self.req(key)?).ok_or_else(|| bad(format!("{key:?} must be an id like \"e5\"")))
    }

    fn ids(&self, key: &str) -> Result<Vec<u64>, EditError> {
        let arr = self.req(key)?.as_array().ok_or_else(|| bad(format!("{key:?} must be a list")))?;
        arr.iter().map(|v| id_value(v).ok_or_else(|| bad(format!("{key:?} holds a bad id")))).collect()
    }

    fn strings(&self, key: &str) -> Result<Vec<String>, EditError> {
        match self.req(key)? {
            Value::String(s) => Ok(s.split_whitespace().map(str::to_string).collect()),
            Value::Array(a) => a
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad(format!("{key:?} must hold strings"))))
                .collect(),
            _ => Err(bad(format!("{key:?} must be a string or list of strings"))),
        }
    }
}

fn time_value(v: &Value) -> Result<TimeOffset, String> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err("expected a time".into()),
    };
    TimeOffset::parse(&text).map_err(|e| e.to_string())
}

fn id_value(v: &Value) -> Option<u64> {
    match v {
        Value::String(s) => id_number(s, 'e').or_else(|| s.parse().ok()),
        Value::Number(n) => n.as_u64(),
        _ => None,
    }
}

fn eid(id: impl fmt::Display) -> String {
    format!("e{id}")
}

fn apply_tree(trees: &mut Vec<Tree>, op: &str, a: &Args) -> Option<Result<Value, EditError>> {
    if op == "build_default_tree" || op == "add_tree" {
        let res = (|| {
            let tree = if op == "add_tree" {
                let mut parsed = parse_treebank(a.str("brackets")?)?;
                if parsed.len() != 1 {
                    return Err(bad("brackets must hold exactly one tree"));
                }
                parsed.remove(0)
            } else {
                Tree::build_default(&a.strings("tokens")?, a.str_or("root_label", "S")?, a.str_or("pos_label", "XX")?)?
            };
            trees.push(tree);
            Ok(json!({ "tree": trees.len() - 1 }))
        })();
        return Some(res);
    }
    let run = |trees: &mut Vec<Tree>| -> Result<Value, EditError> {
        let i = a.usize_or("tree", 0)?;
        let tree = trees.get_mut(i).ok_or_else(|| bad(format!("no tree {i}")))?;
        let nodes = || -> Result<Vec<NodeId>, EditError> {
            if a.has("nodes") {
                Ok(a.ids("nodes")?.into_iter().map(NodeId).collect())
            } else {
                Ok(vec![NodeId(a.id("node")?)])
            }
        };
        let node = || -> Result<NodeId, EditError> {
            match nodes()?.as_slice() {
                [n] => Ok(*n),
                other => Err(TreeError::BadSelection(format!("{} nodes selected", other.len())).into()),
            }
        };
        Ok(match op {
            "insert_internal_node" => json!({ "node": eid(tree.insert_internal_node(&nodes()?, a.str("label")?)?) }),
            "delete_node" => {
                tree.delete_node(node()?)?;
                Value::Null
            }
            "move_node" => {
                tree.move_node(&nodes()?)?;
                Value::Null
            }
            "adjoin" => json!({ "node": eid(tree.adjoin(&nodes()?)?) }),
            "add_syn_wrd" => {
                let side = match a.str_or("side", "after")? {
                    "before" => Side::Before,
                    "after" => Side::After,
                    s => return Err(bad(format!("side must be before or after, not {s:?}"))),
                };
                let id = tree.add_syn_wrd(node()?, side, a.str("label")?, a.str_or("text", "*T*")?)?;
                json!({ "node": eid(id) })
            }
            "change_label" => {
                tree.change_label(node()?, a.str("label")?)?;
                Value::Null
            }
            "coref" => json!({ "trace": tree.coref(&nodes()?)? }),
            _ => unreachable!("filtered below"),
        })
    };
    const OPS: &[&str] =
        &["insert_internal_node", "delete_node", "move_node", "adjoin", "add_syn_wrd", "change_label", "coref"];
    OPS.contains(&op).then(|| run(trees))
}

fn table_config_arg(a: &Args) -> Result<TableConfig, EditError> {
    let cols = a.req("columns")?.as_array().ok_or_else(|| bad("columns must be a list"))?;
    let mut columns = Vec::new();
    for c in cols {
        columns.push(match c {
            Value::String(name) => ColumnSpec::new(name.as_str(), 20),
            Value::Object(o) => {
                let name = o.get("name").and_then(Value::as_str).ok_or_else(|| bad("column needs a name"))?;
                let width = o.get("width").and_then(Value::as_u64).unwrap_or(20);
                ColumnSpec::new(name, u32::try_from(width).map_err(|_| bad("width too large"))?)
            }
            _ => return Err(bad("columns hold names or {name, width} objects")),
        });
    }
    let mut delim = a.str_or("delimiter", ",")?.chars();
    let (Some(delimiter), None) = (delim.next(), delim.next()) else {
        return Err(bad("delimiter must be one character"));
    };
    let has_header = match a.get("header") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| bad("header must be a boolean"))?,
    };
    Ok(TableConfig::new(delimiter, columns, has_header)?)
}

fn apply_table(doc: &mut TableDoc, op: &str, a: &Args) -> Option<Result<Value, EditError>> {
    let run = |doc: &mut TableDoc| -> Result<Value, EditError> {
        if a.has("region") {
            let r = a.req("region")?.as_array().ok_or_else(|| bad("region must be [start, end]"))?;
            let [s, e] = r.as_slice() else { return Err(bad("region must be [start, end]")) };
            let (s, e) = (time_value(s).map_err(bad)?, time_value(e).map_err(bad)?);
            doc.set_region(Some(Region::new(s, e).map_err(|_| bad("region runs backwards"))?));
        }
        if a.has("row") {
            let row = eid(a.id("row")?);
            doc.select(&row, a.usize_or("column", 0)?, a.usize_or("offset", 0)?)?;
        }
        Ok(match op {
            "configure" => {
                let config = table_config_arg(a)?;
                let graph = doc.graph().clone();
                let mut fresh = TableDoc::new(config.clone());
                for row in doc.row_order() {
                    let (s, e) = doc.row_times(row).expect("listed row");
                    fresh.set_region(match (s, e) {
                        (Some(s), Some(e)) => Some(Region::new(s, e).expect("stored rows are ordered")),
                        _ => None,
                    });
                    let id = fresh.insert_row();
                    for c in &config.columns {
                        let text = graph.annotation(row).and_then(|r| r.features.get(&c.name)).unwrap_or("");
                        fresh.set_cell(&id, &c.name, text)?;
                    }
                }
                *doc = fresh;
                Value::Null
            }
            "insert_row" => json!({ "row": doc.insert_row() }),
            "delete_row" => {
                doc.delete_row()?;
                Value::Null
            }
            "update_row_times" => {
                doc.update_row_times()?;
                Value::Null
            }
            "sort_rows" => {
                doc.sort_rows(a.str("key")?)?;
                Value::Null
            }
            "set_cell" => {
                let row = eid(a.id("row")?);
                doc.set_cell(&row, a.str("column_name")?, a.str("text")?)?;
                Value::Null
            }
            "find" => {
                if a.has("filter_feature") {
                    doc.set_view_filter(a.str("filter_feature")?, a.str_or("filter_value", "")?)?;
                }
                match doc.find(a.str("query")?)? {
                    Some(m) => json!({ "row": m.row, "column": m.column, "span": [m.span.0, m.span.1] }),
                    None => Value::Null,
                }
            }
            _ => unreachable!("filtered below"),
        })
    };
    const OPS: &[&str] = &["configure", "insert_row", "delete_row", "update_row_times", "sort_rows", "set_cell", "find"];
    OPS.contains(&op).then(|| run(doc))
}

fn apply_segments(doc: &mut SegmentDoc, op: &str, a: &Args) -> Option<Result<Value, EditError>> {
    if op == "add_channel" {
        return Some(Ok(json!({ "channel": doc.add_channel() })));
    }
    let run = |doc: &mut SegmentDoc| -> Result<Value, EditError> {
        let ch = doc.channel_mut(a.usize_or("channel", 0)?)?;
        if a.has("segment") {
            ch.select(&eid(a.id("segment")?))?;
        }
        Ok(match op {
            "create_segment" => json!({ "segment": ch.create_segment(a.time("start")?, a.time("end")?)? }),
            "press_anchor" => json!({ "segment": ch.press_anchor(a.time("t")?) }),
            "stop_playback" => {
                ch.stop_playback();
                Value::Null
            }
            "delete_segment" => {
                ch.delete_segment()?;
                Value::Null
            }
            "change_boundaries" => {
                ch.change_boundaries(a.time("start")?, a.time("end")?)?;
                Value::Null
            }
            "split_segment" => {
                let (l, r) = ch.split_segment(a.usize("offset")?, a.time("t")?)?;
                json!({ "left": l, "right": r })
            }
            "join_with_previous" => json!({ "segment": ch.join_with_previous()? }),
            "squeeze" => {
                ch.squeeze()?;
                Value::Null
            }
            "set_text" => {
                ch.set_text(a.str("text")?)?;
                Value::Null
            }
            "set_speaker" => {
                ch.set_speaker(a.str("speaker")?)?;
                Value::Null
            }
            _ => unreachable!("filtered below"),
        })
    };
    const OPS: &[&str] = &[
        "create_segment",
        "press_anchor",
        "stop_playback",
        "delete_segment",
        "change_boundaries",
        "split_segment",
        "join_with_previous",
        "squeeze",
        "set_text",
        "set_speaker",
    ];
    OPS.contains(&op).then(|| run(doc))
}

fn apply_interlinear(doc: &mut IlDoc, op: &str, a: &Args) -> Option<Result<Value, EditError>> {
    let run = |doc: &mut IlDoc| -> Result<Value, EditError> {
        for key in ["unit", "cell"] {
            if a.has(key) {
                doc.select(IlId(a.id(key)?))?;
            }
        }
        Ok(match op {
            "add_unit" => json!({ "unit": doc.add_unit(a.str_or("translation", "")?).to_string() }),
            "set_translation" => {
                doc.set_translation(IlId(a.id("unit")?), a.str("text")?)?;
                Value::Null
            }
            "insert_cell_after" => json!({ "cell": doc.insert_cell_after()?.to_string() }),
            "insert_first_child" => json!({ "cell": doc.insert_first_child(a.str("type")?)?.to_string() }),
            "delete_cell" => {
                doc.delete_cell()?;
                Value::Null
            }
            "split_cell" => {
                let (l, r) = doc.split_cell(a.usize("offset")?, a.opt_time("t")?)?;
                json!({ "left": l.to_string(), "right": r.to_string() })
            }
            "join_cell" => json!({ "cell": doc.join_cell()?.to_string() }),
            "align_cell" => {
                doc.align_cell(a.time("start")?, a.time("end")?)?;
                Value::Null
            }
            "set_text" => {
                doc.set_text(a.str("type")?, a.str("text")?)?;
                Value::Null
            }
            _ => unreachable!("filtered below"),
        })
    };
    const OPS: &[&str] = &[
        "add_unit",
        "set_translation",
        "insert_cell_after",
        "insert_first_child",
        "delete_cell",
        "split_cell",
        "join_cell",
        "align_cell",
        "set_text",
    ];
    OPS.contains(&op).then(|| run(doc))
}
