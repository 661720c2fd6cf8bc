//! Spreadsheet-style coding: every row is a `row` annotation aligned to a
//! signal region, every configured column a feature. The row order, the
//! cursor, the current region and the view filter are editor state on top
//! of the graph.
//!
//! The column configuration travels inside the graph as a zero-length
//! `table-config` annotation, so a saved document reopens with its columns.

use thiserror::Error;

use crate::formats::{ColumnSpec, FormatError, TableConfig, ROW_KIND};
use crate::graph::{AnnotationGraph, FeatureMap, GraphError};
use crate::time::{Region, TimeOffset};

pub const CONFIG_KIND: &str = "table-config";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("no current row")]
    NoCurrentRow,
    #[error("no current region")]
    NoRegion,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("empty search query")]
    EmptyQuery,
    #[error("no cursor")]
    NoCursor,
    #[error("no visible row {0}")]
    UnknownRow(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl TableError {
    pub fn code(&self) -> &'static str {
        match self {
            TableError::NoCurrentRow => "NoCurrentRow",
            TableError::NoRegion => "NoRegion",
            TableError::UnknownColumn(_) => "UnknownColumn",
            TableError::EmptyQuery => "EmptyQuery",
            TableError::NoCursor => "NoCursor",
            TableError::UnknownRow(_) => "UnknownRow",
            TableError::Graph(e) => e.code(),
        }
    }
}

/// Position of the insertion point: a row, a 0-based feature column and a
/// character offset into that cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cursor {
    pub row: String,
    pub column: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum View {
    #[default]
    All,
    Filter { feature: String, value: String },
    HideAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
    Up,
    Down,
    Tab,
    CellLeft,
    CellRight,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "right" => Direction::Right,
            "left" => Direction::Left,
            "up" => Direction::Up,
            "down" => Direction::Down,
            "tab" => Direction::Tab,
            "cell-left" => Direction::CellLeft,
            "cell-right" => Direction::CellRight,
            other => return Err(format!("unknown direction {other:?}")),
        })
    }
}

/// Where `find` matched: row id, 0-based column and the char range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub row: String,
    pub column: usize,
    pub span: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct TableDoc {
    config: TableConfig,
    graph: AnnotationGraph,
    config_id: String,
    row_order: Vec<String>,
    cursor: Option<Cursor>,
    region: Option<Region>,
    view: View,
}

fn config_features(config: &TableConfig) -> FeatureMap {
    let mut f = FeatureMap::new();
    f.insert("delimiter", config.delimiter.to_string()).expect("fixed name");
    f.insert("header", if config.has_header { "yes" } else { "no" }).expect("fixed name");
    for c in &config.columns {
        f.insert(format!("column:{}", c.name), c.width.to_string()).expect("non-empty name");
    }
    f
}

fn config_from_features(f: &FeatureMap) -> Result<TableConfig, FormatError> {
    let bad = |m: &str| FormatError::BadConfig(m.to_string());
    let mut delim = f.get("delimiter").ok_or_else(|| bad("table-config has no delimiter"))?.chars();
    let (Some(delimiter), None) = (delim.next(), delim.next()) else {
        return Err(bad("delimiter must be one character"));
    };
    let has_header = match f.get("header") {
        Some("yes") => true,
        Some("no") | None => false,
        Some(_) => return Err(bad("header must be yes or no")),
    };
    let mut columns = Vec::new();
    for (name, width) in f.iter() {
        if let Some(col) = name.strip_prefix("column:") {
            let width = width.parse().map_err(|_| bad("bad column width"))?;
            columns.push(ColumnSpec::new(col, width));
        }
    }
    TableConfig::new(delimiter, columns, has_header)
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// First char index `>= from` at which `needle` occurs in `hay`.
fn find_from(hay: &str, needle: &str, from: usize) -> Option<usize> {
    hay.char_indices().enumerate().skip(from).find(|(_, (b, _))| hay[*b..].starts_with(needle)).map(|(i, _)| i)
}

impl TableDoc {
    pub fn new(config: TableConfig) -> Self {
        let mut graph = AnnotationGraph::new("g1");
        let config_id = Self::add_config(&mut graph, &config);
        TableDoc { config, graph, config_id, row_order: Vec::new(), cursor: None, region: None, view: View::All }
    }

    fn add_config(graph: &mut AnnotationGraph, config: &TableConfig) -> String {
        let a = graph.add_anchor(None);
        graph.add_annotation(CONFIG_KIND, &a, &a, config_features(config)).expect("zero-length arc on a fresh anchor")
    }

    /// Opens a graph as a table. The graph's own `table-config` wins over
    /// `fallback`; rows are the `row` annotations in graph order.
    pub fn from_graph(mut graph: AnnotationGraph, fallback: &TableConfig) -> Result<Self, FormatError> {
        let configs: Vec<_> = graph.annotations().filter(|a| a.kind == CONFIG_KIND).collect();
        let (config, config_id) = match configs.as_slice() {
            [] => {
                fallback.check()?;
                let id = Self::add_config(&mut graph, fallback);
                (fallback.clone(), id)
            }
            [one] => (config_from_features(&one.features)?, one.id.clone()),
            _ => return Err(FormatError::BadConfig("more than one table-config annotation".into())),
        };
        let row_order = graph.annotations().filter(|a| a.kind == ROW_KIND).map(|a| a.id.clone()).collect();
        let mut doc = TableDoc { config, graph, config_id, row_order, cursor: None, region: None, view: View::All };
        doc.sync();
        Ok(doc)
    }

    /// The graph with rows in `row_order`, followed by the configuration.
    pub fn graph(&self) -> &AnnotationGraph {
        &self.graph
    }

    pub fn into_graph(self) -> AnnotationGraph {
        self.graph
    }

    pub fn config(&self) -> &TableConfig {
        &self.config
    }

    pub fn row_order(&self) -> &[String] {
        &self.row_order
    }

    pub fn cursor(&self) -> Option<&Cursor> {
        self.cursor.as_ref()
    }

    pub fn current_row(&self) -> Option<&str> {
        self.cursor.as_ref().map(|c| c.row.as_str())
    }

    pub fn region(&self) -> Option<Region> {
        self.region
    }

    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn set_region(&mut self, region: Option<Region>) {
        self.region = region;
    }

    fn sync(&mut self) {
        let mut order = self.row_order.clone();
        order.push(self.config_id.clone());
        self.graph.reorder_annotations(&order);
    }

    pub fn row_times(&self, row: &str) -> Option<(Option<TimeOffset>, Option<TimeOffset>)> {
        let a = self.graph.annotation(row)?;
        Some((self.graph.offset_of(&a.start), self.graph.offset_of(&a.end)))
    }

    pub fn cell(&self, row: &str, column: usize) -> Option<&str> {
        let name = &self.config.columns.get(column)?.name;
        Some(self.graph.annotation(row)?.features.get(name).unwrap_or(""))
    }

    fn is_visible(&self, row: &str) -> bool {
        match &self.view {
            View::All => true,
            View::HideAll => false,
            View::Filter { feature, value } => {
                self.graph.annotation(row).and_then(|a| a.features.get(feature)) == Some(value.as_str())
            }
        }
    }

    pub fn visible_rows(&self) -> Vec<&str> {
        self.row_order.iter().map(String::as_str).filter(|r| self.is_visible(r)).collect()
    }

    fn place_cursor(&mut self, row: String, column: usize) {
        self.cursor = self.is_visible(&row).then_some(Cursor { row, column, offset: 0 });
    }

    /// Adds a blank row after the current one, timed by the current region
    /// if there is one, and makes it current.
    pub fn insert_row(&mut self) -> String {
        let (start, end) = match self.region {
            Some(r) => (Some(r.start()), Some(r.end())),
            None => (None, None),
        };
        let a = self.graph.add_anchor(start);
        let b = self.graph.add_anchor(end);
        let mut features = FeatureMap::new();
        for c in &self.config.columns {
            features.insert(c.name.as_str(), "").expect("column names are non-empty");
        }
        let id = self.graph.add_annotation(ROW_KIND, &a, &b, features).expect("region is ordered");
        let at = match &self.cursor {
            Some(c) => self.row_order.iter().position(|r| *r == c.row).map_or(self.row_order.len(), |i| i + 1),
            None => self.row_order.len(),
        };
        self.row_order.insert(at, id.clone());
        self.sync();
        let column = self.cursor.as_ref().map_or(0, |c| c.column);
        self.place_cursor(id.clone(), column);
        id
    }

    /// Removes the current row; the next visible row becomes current, or
    /// the previous one when the last was deleted.
    pub fn delete_row(&mut self) -> Result<(), TableError> {
        let cur = self.cursor.clone().ok_or(TableError::NoCurrentRow)?;
        let visible: Vec<String> = self.visible_rows().into_iter().map(str::to_string).collect();
        let i = visible.iter().position(|r| *r == cur.row).ok_or(TableError::NoCurrentRow)?;
        let next = visible.get(i + 1).or_else(|| i.checked_sub(1).map(|p| &visible[p])).cloned();
        self.graph.delete_annotation(&cur.row)?;
        self.row_order.retain(|r| *r != cur.row);
        self.sync();
        self.cursor = next.map(|row| Cursor { row, column: cur.column, offset: 0 });
        Ok(())
    }

    pub fn update_row_times(&mut self) -> Result<(), TableError> {
        let row = self.current_row().ok_or(TableError::NoCurrentRow)?.to_string();
        let region = self.region.ok_or(TableError::NoRegion)?;
        self.graph.set_annotation_times(&row, Some(region.start()), Some(region.end()))?;
        Ok(())
    }

    /// Stable sort by `start`, `end` (untimed first) or a column's text.
    pub fn sort_rows(&mut self, key: &str) -> Result<(), TableError> {
        let graph = &self.graph;
        match key {
            "start" | "end" => {
                let time = |r: &String| {
                    let a = graph.annotation(r).expect("row exists");
                    graph.offset_of(if key == "start" { &a.start } else { &a.end })
                };
                self.row_order.sort_by_key(time);
            }
            col => {
                if self.config.column_index(col).is_none() {
                    return Err(TableError::UnknownColumn(col.to_string()));
                }
                let text = |r: &String| graph.annotation(r).and_then(|a| a.features.get(col)).unwrap_or("").to_string();
                self.row_order.sort_by_cached_key(text);
            }
        }
        self.sync();
        Ok(())
    }

    /// Case-sensitive search over visible cells, starting at the cursor and
    /// wrapping once. A hit becomes current with the cursor after the match.
    pub fn find(&mut self, query: &str) -> Result<Option<Match>, TableError> {
        if query.is_empty() {
            return Err(TableError::EmptyQuery);
        }
        let rows: Vec<String> = self.visible_rows().into_iter().map(str::to_string).collect();
        let ncols = self.config.columns.len();
        if rows.is_empty() || ncols == 0 {
            return Ok(None);
        }
        let (r0, c0, o0) = match &self.cursor {
            Some(c) => (rows.iter().position(|r| *r == c.row).unwrap_or(0), c.column.min(ncols - 1), c.offset),
            None => (0, 0, 0),
        };
        let cells = rows.len() * ncols;
        let start = r0 * ncols + c0;
        for step in 0..=cells {
            let k = (start + step) % cells;
            let (ri, ci) = (k / ncols, k % ncols);
            let text = self.cell(&rows[ri], ci).unwrap_or("");
            let from = if step == 0 { o0 } else { 0 };
            if let Some(pos) = find_from(text, query, from) {
                if step == cells && pos >= o0 {
                    break;
                }
                let end = pos + char_len(query);
                self.cursor = Some(Cursor { row: rows[ri].clone(), column: ci, offset: end });
                return Ok(Some(Match { row: rows[ri].clone(), column: ci, span: (pos, end) }));
            }
        }
        Ok(None)
    }

    fn refresh_cursor(&mut self) {
        if self.cursor.as_ref().is_some_and(|c| !self.is_visible(&c.row)) {
            self.cursor = None;
        }
    }

    pub fn set_view_filter(&mut self, feature: &str, value: &str) -> Result<(), TableError> {
        if self.config.column_index(feature).is_none() {
            return Err(TableError::UnknownColumn(feature.to_string()));
        }
        self.view = View::Filter { feature: feature.to_string(), value: value.to_string() };
        self.refresh_cursor();
        Ok(())
    }

    pub fn clear_view_filter(&mut self) {
        self.view = View::All;
    }

    pub fn hide_all(&mut self) {
        self.view = View::HideAll;
        self.cursor = None;
    }

    pub fn select(&mut self, row: &str, column: usize, offset: usize) -> Result<(), TableError> {
        if self.graph.annotation(row).is_none_or(|a| a.kind != ROW_KIND) || !self.is_visible(row) {
            return Err(TableError::UnknownRow(row.to_string()));
        }
        if column >= self.config.columns.len().max(1) {
            return Err(TableError::UnknownColumn(column.to_string()));
        }
        let len = self.cell(row, column).map_or(0, char_len);
        self.cursor = Some(Cursor { row: row.to_string(), column, offset: offset.min(len) });
        Ok(())
    }

    pub fn move_cursor(&mut self, dir: Direction) -> Result<(), TableError> {
        let mut cur = self.cursor.clone().ok_or(TableError::NoCursor)?;
        let last_col = self.config.columns.len().saturating_sub(1);
        let visible = self.visible_rows();
        let ri = visible.iter().position(|r| *r == cur.row).ok_or(TableError::NoCursor)?;
        match dir {
            Direction::Right | Direction::Tab | Direction::Left => {
                let col = match dir {
                    Direction::Left => cur.column.saturating_sub(1),
                    _ => (cur.column + 1).min(last_col),
                };
                if col != cur.column {
                    cur.column = col;
                    cur.offset = 0;
                }
            }
            Direction::Up | Direction::Down => {
                let to = match dir {
                    Direction::Up => ri.saturating_sub(1),
                    _ => (ri + 1).min(visible.len() - 1),
                };
                cur.row = visible[to].to_string();
                cur.offset = cur.offset.min(self.cell(&cur.row, cur.column).map_or(0, char_len));
            }
            Direction::CellLeft => cur.offset = cur.offset.saturating_sub(1),
            Direction::CellRight => {
                cur.offset = (cur.offset + 1).min(self.cell(&cur.row, cur.column).map_or(0, char_len));
            }
        }
        self.cursor = Some(cur);
        Ok(())
    }

    /// Replaces a cell's text.
    pub fn set_cell(&mut self, row: &str, column: &str, text: &str) -> Result<(), TableError> {
        if self.config.column_index(column).is_none() {
            return Err(TableError::UnknownColumn(column.to_string()));
        }
        let ann = self
            .graph
            .annotation_mut(row)
            .filter(|a| a.kind == ROW_KIND)
            .ok_or_else(|| TableError::UnknownRow(row.to_string()))?;
        ann.features.insert(column, text).expect("column names are non-empty");
        Ok(())
    }
}
