//! File-backed document registry. Each document lives in `<id>.aif`
//! (canonical payload) beside `<id>.meta` (`kind=` and `revision=` lines).
//! Edits to one document are serialized by a per-document lock; reads of
//! different documents never contend.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::document::{apply_command, empty_payload, DocKind, Document, EditCommand, EditError};
use crate::formats::FormatError;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt or missing meta for {0}")]
    CorruptMeta(String),
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("document {0} already exists")]
    AlreadyExists(String),
    #[error("bad document id {0:?}")]
    BadId(String),
    #[error("stale base revision {given}, current is {current}")]
    RevisionConflict { given: u64, current: u64 },
    #[error("invalid payload: {0}")]
    InvalidPayload(#[from] FormatError),
    #[error(transparent)]
    Edit(#[from] EditError),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io(_) => "IoFailure",
            StoreError::CorruptMeta(_) => "CorruptMeta",
            StoreError::UnknownDocument(_) => "UnknownDocument",
            StoreError::AlreadyExists(_) => "AlreadyExists",
            StoreError::BadId(_) => "BadId",
            StoreError::RevisionConflict { .. } => "RevisionConflict",
            StoreError::InvalidPayload(e) => e.code(),
            StoreError::Edit(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocSummary {
    pub doc_id: String,
    pub kind: DocKind,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub kind: DocKind,
    pub revision: u64,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditOutcome {
    pub revision: u64,
    pub result: Value,
}

type Slot = Arc<Mutex<Result<DocumentRecord, String>>>;

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    docs: RwLock<BTreeMap<String, Slot>>,
}

pub fn valid_doc_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn parse_meta(text: &str) -> Option<(DocKind, u64)> {
    let mut kind = None;
    let mut revision = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=')?;
        match k.trim() {
            "kind" => kind = Some(v.trim().parse().ok()?),
            "revision" => revision = Some(v.trim().parse().ok()?),
            _ => return None,
        }
    }
    Some((kind?, revision?))
}

fn write_atomic(dir: &Path, dest: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dest).map_err(|e| e.error)?;
    Ok(())
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`. Documents whose
    /// meta file is missing or unreadable are remembered and reported as
    /// `CorruptMeta` when loaded.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut docs = BTreeMap::new();
        for entry in fs::read_dir(&root)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("aif") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).filter(|s| valid_doc_id(s)) else {
                continue;
            };
            let payload = fs::read_to_string(&path)?;
            let slot = match fs::read_to_string(root.join(format!("{id}.meta"))) {
                Ok(meta) => match parse_meta(&meta) {
                    Some((kind, revision)) => {
                        Ok(DocumentRecord { doc_id: id.to_string(), kind, revision, payload })
                    }
                    None => Err(id.to_string()),
                },
                Err(e) if e.kind() == io::ErrorKind::NotFound => Err(id.to_string()),
                Err(e) => return Err(e.into()),
            };
            docs.insert(id.to_string(), Arc::new(Mutex::new(slot)));
        }
        Ok(Store { root, docs: RwLock::new(docs) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn slot(&self, id: &str) -> Result<Slot, StoreError> {
        self.docs.read().expect("registry lock").get(id).cloned().ok_or_else(|| StoreError::UnknownDocument(id.into()))
    }

    fn persist(&self, rec: &DocumentRecord) -> Result<(), StoreError> {
        let id = &rec.doc_id;
        write_atomic(&self.root, &self.root.join(format!("{id}.aif")), rec.payload.as_bytes())?;
        let meta = format!("kind={}\nrevision={}\n", rec.kind, rec.revision);
        write_atomic(&self.root, &self.root.join(format!("{id}.meta")), meta.as_bytes())?;
        Ok(())
    }

    pub fn list(&self) -> Vec<DocSummary> {
        let docs = self.docs.read().expect("registry lock");
        docs.values()
            .filter_map(|slot| {
                let rec = slot.lock().expect("document lock");
                rec.as_ref().ok().map(|r| DocSummary { doc_id: r.doc_id.clone(), kind: r.kind, revision: r.revision })
            })
            .collect()
    }

    /// Creates a document at revision 0. Without a payload an empty document
    /// of `kind` is written; a given payload must decode as that kind and
    /// is stored byte for byte.
    pub fn create(&self, id: &str, kind: DocKind, payload: Option<String>) -> Result<DocSummary, StoreError> {
        if !valid_doc_id(id) {
            return Err(StoreError::BadId(id.into()));
        }
        let payload = match payload {
            Some(p) => {
                Document::decode(kind, &p)?;
                p
            }
            None => empty_payload(kind, id),
        };
        let mut docs = self.docs.write().expect("registry lock");
        if docs.contains_key(id) {
            return Err(StoreError::AlreadyExists(id.into()));
        }
        let rec = DocumentRecord { doc_id: id.to_string(), kind, revision: 0, payload };
        self.persist(&rec)?;
        docs.insert(id.to_string(), Arc::new(Mutex::new(Ok(rec))));
        Ok(DocSummary { doc_id: id.to_string(), kind, revision: 0 })
    }

    pub fn load(&self, id: &str) -> Result<DocumentRecord, StoreError> {
        let slot = self.slot(id)?;
        let rec = slot.lock().expect("document lock");
        rec.clone().map_err(StoreError::CorruptMeta)
    }

    /// Applies one command if `base_revision` (when given) matches. The
    /// revision advances by one per committed edit; a failing edit changes
    /// nothing.
    pub fn apply_edit(&self, id: &str, cmd: &EditCommand) -> Result<EditOutcome, StoreError> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock().expect("document lock");
        let rec = guard.as_mut().map_err(|id| StoreError::CorruptMeta(id.clone()))?;
        if let Some(given) = cmd.base_revision {
            if given != rec.revision {
                return Err(StoreError::RevisionConflict { given, current: rec.revision });
            }
        }
        let (payload, result) = apply_command(rec.kind, &rec.payload, cmd)?;
        let next = DocumentRecord { payload, revision: rec.revision + 1, ..rec.clone() };
        self.persist(&next)?;
        *rec = next;
        Ok(EditOutcome { revision: rec.revision, result })
    }
}
