//! Delimited tables: one row per line, `start` and `end` in decimal
//! seconds followed by one field per configured column. Fields holding the
//! delimiter, a quote or a line break are double-quoted with inner quotes
//! doubled. An empty time field leaves that anchor untimed.

use csv::{QuoteStyle, ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::FormatError;
use crate::graph::{AnnotationGraph, FeatureMap};
use crate::time::TimeOffset;

/// Annotation type of table rows.
pub const ROW_KIND: &str = "row";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub width: u32,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        ColumnSpec { name: name.into(), width }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableConfig {
    pub delimiter: char,
    pub columns: Vec<ColumnSpec>,
    pub has_header: bool,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig { delimiter: ',', columns: Vec::new(), has_header: false }
    }
}

impl TableConfig {
    pub fn new(delimiter: char, columns: Vec<ColumnSpec>, has_header: bool) -> Result<Self, FormatError> {
        let config = TableConfig { delimiter, columns, has_header };
        config.check()?;
        Ok(config)
    }

    /// Comma-delimited, headerless, every column 20 wide.
    pub fn with_columns<S: AsRef<str>>(names: &[S]) -> Result<Self, FormatError> {
        TableConfig::new(',', names.iter().map(|n| ColumnSpec::new(n.as_ref(), 20)).collect(), false)
    }

    pub fn check(&self) -> Result<(), FormatError> {
        let d = self.delimiter;
        if !d.is_ascii() || d == '"' || d == '\n' || d == '\r' {
            return Err(FormatError::BadConfig(format!("unusable delimiter {d:?}")));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() || c.name == "start" || c.name == "end" {
                return Err(FormatError::BadConfig(format!("bad column name {:?}", c.name)));
            }
            if c.name.contains([d, '"', '\n', '\r']) {
                return Err(FormatError::BadConfig(format!("column name {:?} holds a reserved character", c.name)));
            }
            if c.width == 0 {
                return Err(FormatError::BadConfig(format!("column {} has zero width", c.name)));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(FormatError::BadConfig(format!("duplicate column {}", c.name)));
            }
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    fn header(&self) -> Vec<&str> {
        let mut h = vec!["start", "end"];
        h.extend(self.columns.iter().map(|c| c.name.as_str()));
        h
    }

    /// Reads a column configuration file:
    ///
    /// ```text
    /// start,end,speaker,transcription
    /// 8,40
    /// header
    /// ```
    ///
    /// The delimiter is whatever follows `start` on the first line; the
    /// second line lists the widths of the feature columns and the optional
    /// third line turns the header row on.
    pub fn parse_config(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("");
        let rest = first
            .strip_prefix("start")
            .ok_or_else(|| FormatError::BadConfig("first line must begin with `start`".into()))?;
        let delimiter = rest.chars().next().ok_or_else(|| FormatError::BadConfig("no delimiter after `start`".into()))?;
        let fields: Vec<&str> = rest[delimiter.len_utf8()..].split(delimiter).collect();
        if fields.first() != Some(&"end") {
            return Err(FormatError::BadConfig("second field must be `end`".into()));
        }
        let names = &fields[1..];
        let width_line = lines.next().unwrap_or("");
        let widths: Vec<u32> = if width_line.is_empty() {
            Vec::new()
        } else {
            width_line
                .split(delimiter)
                .map(|w| w.trim().parse().map_err(|_| FormatError::BadConfig(format!("bad width {w:?}"))))
                .collect::<Result<_, _>>()?
        };
        if widths.len() != names.len() {
            return Err(FormatError::BadConfig(format!("{} columns but {} widths", names.len(), widths.len())));
        }
        let has_header = match lines.next().map(str::trim) {
            None | Some("") => false,
            Some("header") => true,
            Some(other) => return Err(FormatError::BadConfig(format!("unexpected line {other:?}"))),
        };
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(FormatError::BadConfig("trailing lines".into()));
        }
        let columns = names.iter().zip(widths).map(|(n, w)| ColumnSpec::new(*n, w)).collect();
        TableConfig::new(delimiter, columns, has_header)
    }

    pub fn emit_config(&self) -> String {
        let d = self.delimiter.to_string();
        let mut out = self.header().join(&d);
        out.push('\n');
        out.push_str(&self.columns.iter().map(|c| c.width.to_string()).collect::<Vec<_>>().join(&d));
        out.push('\n');
        if self.has_header {
            out.push_str("header\n");
        }
        out
    }
}

fn parse_time(field: &str, row: usize) -> Result<Option<TimeOffset>, FormatError> {
    if field.is_empty() {
        return Ok(None);
    }
    TimeOffset::parse(field).map(Some).map_err(|_| FormatError::BadTime { row })
}

/// Parses `text` into a graph with one `row` annotation per record, each on
/// its own pair of anchors.
pub fn parse_table(text: &str, config: &TableConfig) -> Result<AnnotationGraph, FormatError> {
    config.check()?;
    let mut reader = ReaderBuilder::new()
        .delimiter(config.delimiter as u8)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut graph = AnnotationGraph::new("g1");
    let want = config.columns.len() + 2;
    let mut record = StringRecord::new();
    let mut first = true;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            FormatError::ColumnCountMismatch { row }
        })?;
        if !more {
            break;
        }
        let row = record.position().map_or(0, |p| p.line() as usize);
        if std::mem::take(&mut first) && config.has_header {
            if record.iter().ne(config.header()) {
                return Err(FormatError::ColumnCountMismatch { row });
            }
            continue;
        }
        if record.len() != want {
            return Err(FormatError::ColumnCountMismatch { row });
        }
        let start = parse_time(&record[0], row)?;
        let end = parse_time(&record[1], row)?;
        if let (Some(s), Some(e)) = (start, end) {
            if s > e {
                return Err(FormatError::BadTime { row });
            }
        }
        let mut features = FeatureMap::new();
        for (col, value) in config.columns.iter().zip(record.iter().skip(2)) {
            features.insert(col.name.as_str(), value).expect("column names are non-empty");
        }
        let a = graph.add_anchor(start);
        let b = graph.add_anchor(end);
        graph.add_annotation(ROW_KIND, &a, &b, features).expect("fresh anchors in order");
    }
    Ok(graph)
}

/// Writes every `row` annotation in graph order.
pub fn emit_table(graph: &AnnotationGraph, config: &TableConfig) -> String {
    let ids: Vec<&str> = graph.annotations().filter(|a| a.kind == ROW_KIND).map(|a| a.id.as_str()).collect();
    emit_table_rows(graph, &ids, config)
}

/// Writes the given annotations in the given order. Unknown ids are skipped;
/// missing features are written as empty fields.
pub fn emit_table_rows<S: AsRef<str>>(graph: &AnnotationGraph, ids: &[S], config: &TableConfig) -> String {
    let mut writer = WriterBuilder::new()
        .delimiter(config.delimiter as u8)
        .quote_style(QuoteStyle::Necessary)
        .terminator(Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(Vec::new());
    if config.has_header {
        writer.write_record(config.header()).expect("writing to memory");
    }
    for id in ids {
        let Some(ann) = graph.annotation(id.as_ref()) else { continue };
        let time = |anchor: &str| graph.offset_of(anchor).map(|t| t.to_string()).unwrap_or_default();
        let mut fields = vec![time(&ann.start), time(&ann.end)];
        fields.extend(config.columns.iter().map(|c| ann.features.get(&c.name).unwrap_or("").to_string()));
        writer.write_record(&fields).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}
