use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use agkit_core::formats::{
    emit_aif, emit_lcf, emit_table, emit_treebank, graph_to_tree, parse_aif, parse_aif_lenient, parse_lcf,
    parse_table, parse_treebank, TableConfig,
};
use agkit_core::table_edit::TableDoc;
use agkit_core::{infer_kind, AgSet, DocKind, Document, EditCommand, Store};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Annotation graph toolkit: format conversion, validation and batch edits.
#[derive(Parser)]
#[command(name = "agkit", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Ptb,
    Aif,
    Table,
    Lcf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert between treebank brackets, AIF, delimited tables and LCF.
    Convert {
        #[arg(long)]
        from: Format,
        #[arg(long)]
        to: Format,
        /// Column configuration for table input or output.
        #[arg(long)]
        table_config: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Check referential and temporal integrity; violations go to stderr.
    Validate {
        input: PathBuf,
        #[arg(long, default_value = "aif")]
        format: Format,
        #[arg(long)]
        table_config: Option<PathBuf>,
    },
    /// Apply a line-delimited JSON edit script to an AIF document.
    Apply {
        #[arg(long)]
        script: PathBuf,
        /// Document kind; guessed from the annotations when omitted.
        #[arg(long)]
        kind: Option<String>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Print the terminal yield of every tree, one token per line.
    Yield { input: PathBuf },
    /// Run the HTTP document service.
    Serve {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    /// Already reported line by line.
    #[error("invalid input")]
    Invalid,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) | CliError::Invalid => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

/// Writes through a temp file in the destination directory so a failed run
/// never leaves a partial file behind.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
    tmp.write_all(text.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn set_id(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| agkit_core::store::valid_doc_id(s))
        .unwrap_or("set")
        .to_string()
}

fn table_config(path: Option<&Path>) -> Result<Option<TableConfig>, CliError> {
    path.map(|p| TableConfig::parse_config(&read(p)?).map_err(|e| fail(format!("{}: {e}", p.display()))))
        .transpose()
}

fn read_set(format: Format, input: &Path, config: Option<&TableConfig>) -> Result<AgSet, CliError> {
    let text = read(input)?;
    let id = set_id(input);
    let at = |e: agkit_core::FormatError| fail(format!("{}: {e}", input.display()));
    Ok(match format {
        Format::Aif => parse_aif(&text).map_err(at)?,
        Format::Ptb => AgSet::new(id, Document::Tree(parse_treebank(&text).map_err(at)?).to_graphs()),
        Format::Lcf => AgSet::new(id, vec![parse_lcf(&text).map_err(at)?]),
        Format::Table => {
            let config = config.ok_or_else(|| CliError::Usage("table input needs --table-config".into()))?;
            let graph = parse_table(&text, config).map_err(at)?;
            AgSet::new(id, vec![TableDoc::from_graph(graph, config).map_err(at)?.into_graph()])
        }
    })
}

fn single(set: &AgSet, what: &str) -> Result<agkit_core::AnnotationGraph, CliError> {
    match set.graphs.as_slice() {
        [g] => Ok(g.clone()),
        gs => Err(fail(format!("{what} output holds one graph, input has {}", gs.len()))),
    }
}

fn write_set(format: Format, set: &AgSet, config: Option<&TableConfig>) -> Result<String, CliError> {
    Ok(match format {
        Format::Aif => emit_aif(set),
        Format::Ptb => {
            let mut out = String::new();
            for g in &set.graphs {
                let tree = graph_to_tree(g).map_err(fail)?;
                out.push_str(&emit_treebank(&tree));
                out.push('\n');
            }
            out
        }
        Format::Lcf => emit_lcf(&single(set, "LCF")?).map_err(fail)?,
        Format::Table => {
            let graph = single(set, "table")?;
            let fallback = config.cloned().unwrap_or_default();
            let doc = TableDoc::from_graph(graph, &fallback).map_err(fail)?;
            emit_table(doc.graph(), config.unwrap_or(doc.config()))
        }
    })
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Convert { from, to, table_config: cfg, input, output } => {
            let config = table_config(cfg.as_deref())?;
            let set = read_set(from, &input, config.as_ref())?;
            let text = write_set(to, &set, config.as_ref())?;
            write_atomic(&output, &text)
        }
        Cmd::Validate { input, format, table_config: cfg } => {
            let set = if format == Format::Aif {
                parse_aif_lenient(&read(&input)?).map_err(|e| fail(format!("{}: {e}", input.display())))?
            } else {
                read_set(format, &input, table_config(cfg.as_deref())?.as_ref())?
            };
            let mut clean = true;
            for g in &set.graphs {
                for v in g.validate().violations {
                    eprintln!("{}: {v}", g.id);
                    clean = false;
                }
            }
            if !clean {
                Err(CliError::Invalid)
            } else {
                Ok(())
            }
        }
        Cmd::Apply { script, kind, input, output } => {
            let payload = read(&input)?;
            let kind = match kind {
                Some(k) => k.parse::<DocKind>().map_err(CliError::Usage)?,
                None => {
                    let set = parse_aif(&payload).map_err(|e| fail(format!("{}: {e}", input.display())))?;
                    infer_kind(&set).ok_or_else(|| CliError::Usage("cannot tell the document kind; pass --kind".into()))?
                }
            };
            let (id, mut doc) = Document::decode(kind, &payload).map_err(|e| fail(format!("{}: {e}", input.display())))?;
            for (n, line) in read(&script)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let at = |m: String| fail(format!("{}:{}: {m}", script.display(), n + 1));
                let cmd: EditCommand = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
                doc.apply(&cmd).map_err(|e| at(format!("{}: {e}", e.code())))?;
            }
            write_atomic(&output, &doc.encode(&id))
        }
        Cmd::Yield { input } => {
            let text = read(&input)?;
            let at = |e: agkit_core::FormatError| fail(format!("{}: {e}", input.display()));
            let trees = if text.trim_start().starts_with('<') {
                let set = parse_aif(&text).map_err(at)?;
                set.graphs.iter().map(graph_to_tree).collect::<Result<Vec<_>, _>>().map_err(at)?
            } else {
                parse_treebank(&text).map_err(at)?
            };
            let mut out = std::io::stdout().lock();
            for t in &trees {
                for w in t.terminal_yield() {
                    writeln!(out, "{w}").map_err(fail)?;
                }
            }
            Ok(())
        }
        Cmd::Serve { root, bind } => {
            let store = Store::open(&root).map_err(|e| fail(format!("{}: {e}", root.display())))?;
            let rt = tokio::runtime::Runtime::new().map_err(fail)?;
            rt.block_on(agkit_server::serve(Arc::new(store), &bind)).map_err(fail)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid) => ExitCode::from(1),
        Err(e) => {
            eprintln!("agkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
