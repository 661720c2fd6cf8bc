pub mod document;
pub mod formats;
pub mod graph;
pub mod interlinear;
pub mod segment_edit;
pub mod store;
pub mod table_edit;
pub mod time;
pub mod tree;

pub use document::{apply_command, empty_payload, infer_kind, DocKind, Document, EditCommand, EditError};
pub use formats::{AgSet, FormatError};
pub use graph::{Anchor, Annotation, AnnotationGraph, FeatureMap, GraphError, ValidationReport, Violation};
pub use store::{DocSummary, DocumentRecord, EditOutcome, Store, StoreError};
pub use time::{Region, TimeOffset};
pub use tree::{NodeId, NodeKind, Tree, TreeError};
