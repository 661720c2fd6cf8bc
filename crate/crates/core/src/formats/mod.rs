//! Readers and writers for every on-disk representation: bracketed
//! treebank text, AIF XML, delimited tables, LCF transcripts and ODBC
//! connect strings, plus the tree ⇄ annotation-graph encoding.

mod aif;
mod connect;
mod lcf;
mod table;
mod treebank;
mod treegraph;

use thiserror::Error;

pub use aif::{emit_aif, parse_aif, parse_aif_lenient, AgSet};
pub use connect::{parse_connect_string, ConnectParams};
pub use lcf::{emit_lcf, parse_lcf, LCF_KIND};
pub use table::{emit_table, emit_table_rows, parse_table, ColumnSpec, TableConfig, ROW_KIND};
pub use treebank::{emit_treebank, parse_treebank};
pub use treegraph::{graph_to_tree, tree_to_graph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unbalanced parentheses at byte {pos}")]
    UnbalancedParens { pos: usize },
    #[error("empty node at byte {pos}")]
    EmptyNode { pos: usize },
    #[error("unexpected token at byte {pos}")]
    BadToken { pos: usize },
    #[error("malformed XML at line {line}: {reason}")]
    MalformedXml { line: u32, reason: String },
    #[error("<{element}>: {reason}")]
    SchemaViolation { element: String, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("bad time in row {row}")]
    BadTime { row: usize },
    #[error("row {row} does not match the column configuration")]
    ColumnCountMismatch { row: usize },
    #[error("line {line} is not `<start> <end> <speaker>: <text>`")]
    BadLine { line: usize },
    #[error("connect string part {0:?} has no '='")]
    MissingEquals(String),
    #[error("not a tree encoding: {0}")]
    NotATreeEncoding(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("cannot represent: {0}")]
    Unrepresentable(String),
    #[error("not a {kind} document: {reason}")]
    BadDocument { kind: &'static str, reason: String },
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::UnbalancedParens { .. } => "UnbalancedParens",
            FormatError::EmptyNode { .. } => "EmptyNode",
            FormatError::BadToken { .. } => "BadToken",
            FormatError::MalformedXml { .. } => "MalformedXml",
            FormatError::SchemaViolation { .. } => "SchemaViolation",
            FormatError::DuplicateId(_) => "DuplicateId",
            FormatError::BadTime { .. } => "BadTime",
            FormatError::ColumnCountMismatch { .. } => "ColumnCountMismatch",
            FormatError::BadLine { .. } => "BadLine",
            FormatError::MissingEquals(_) => "MissingEquals",
            FormatError::NotATreeEncoding(_) => "NotATreeEncoding",
            FormatError::BadConfig(_) => "BadConfig",
            FormatError::Unrepresentable(_) => "Unrepresentable",
            FormatError::BadDocument { .. } => "BadDocument",
        }
    }
}
