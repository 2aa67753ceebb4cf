//! In-memory workbook model, action execution and workbook comparison.

mod compare;
mod exec;
pub mod formula;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::xwapi::{column_letters, Coord, RangeRef};

pub use compare::{compare, DiffReport, Mismatch, MismatchKind, DEFAULT_TOLERANCE};
pub use exec::{execute, execute_logged, ExecError, PLACEHOLDER_ACTION};
pub use formula::{evaluate_formula, ErrorKind, FormulaError};
pub use io::{load_workbook, save_workbook, workbook_from_json, workbook_to_json, WorkbookIoError, FORMAT_VERSION};

/// Chart types understood by the engine. Other names are kept verbatim.
pub const CHART_TYPES: [&str; 6] = ["Line", "Bar", "Column", "Pie", "XYScatter", "Area"];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub enum CellValue {
    #[default]
    Empty,
    Number(f64),
    Text(String),
    Bool(bool),
    Formula {
        source: String,
        cached: Box<CellValue>,
    },
    Error(FormulaError),
}

impl CellValue {
    pub fn formula(source: impl Into<String>) -> Self {
        CellValue::Formula {
            source: source.into(),
            cached: Box::new(CellValue::Empty),
        }
    }

    /// The value a reader sees: formulas resolve to their cached result.
    pub fn resolved(&self) -> &CellValue {
        match self {
            CellValue::Formula { cached, .. } => cached,
            other => other,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CellValue::Empty)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.resolved() {
            CellValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn formula_source(&self) -> Option<&str> {
        match self {
            CellValue::Formula { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Empty => Ok(()),
            CellValue::Number(n) => write!(f, "{n}"),
            CellValue::Text(s) => f.write_str(s),
            CellValue::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            CellValue::Formula { cached, .. } => write!(f, "{cached}"),
            CellValue::Error(e) => write!(f, "{}", e.kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartMeta {
    pub name: String,
    pub chart_type: String,
    pub source: RangeRef,
    pub dest_sheet: String,
    pub legend_position: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotMeta {
    pub name: String,
    pub source: RangeRef,
    pub dest_sheet: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterMeta {
    pub source: RangeRef,
    pub field_index: u32,
    pub criteria: String,
}

/// One `SetFormat` record, kept verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormatRecord {
    pub range: RangeRef,
    pub property: String,
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrozenPanes {
    pub rows: u32,
    pub cols: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Sheet {
    pub name: String,
    pub cells: BTreeMap<Coord, CellValue>,
    pub charts: Vec<ChartMeta>,
    pub pivots: Vec<PivotMeta>,
    pub filters: Vec<FilterMeta>,
    pub formats: Vec<FormatRecord>,
    pub frozen: Option<FrozenPanes>,
}

impl Sheet {
    pub fn new(name: impl Into<String>) -> Self {
        Sheet {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn get(&self, at: Coord) -> &CellValue {
        static EMPTY: CellValue = CellValue::Empty;
        self.cells.get(&at).unwrap_or(&EMPTY)
    }

    /// Store a value; writing `Empty` clears the cell.
    pub fn set(&mut self, at: Coord, value: CellValue) {
        if value.is_empty() {
            self.cells.remove(&at);
        } else {
            self.cells.insert(at, value);
        }
    }

    /// `(max column, max row)` over non-empty cells, or `None` for an empty sheet.
    pub fn used_extent(&self) -> Option<(u32, u32)> {
        self.cells.keys().fold(None, |acc, c| match acc {
            None => Some((c.column, c.row)),
            Some((w, h)) => Some((w.max(c.column), h.max(c.row))),
        })
    }

    /// One-line description of the header row and row counts.
    pub fn describe(&self) -> String {
        let Some((width, height)) = self.used_extent() else {
            return format!("Sheet \"{}\" is empty.", self.name);
        };
        let headers: Vec<String> = (1..=width)
            .filter_map(|col| {
                let v = self.get(Coord::new(col, 1)).resolved();
                (!v.is_empty()).then(|| format!("{}: \"{}\"", column_letters(col), v))
            })
            .collect();
        let data_rows = height - 1;
        format!(
            "Sheet \"{}\" has {} column{} (Headers are {}) and {} row{} (1 header row and {} data row{}).",
            self.name,
            width,
            plural(width),
            headers.join(", "),
            height,
            plural(height),
            data_rows,
            plural(data_rows),
        )
    }
}

fn plural(n: u32) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("a sheet named `{0}` already exists")]
pub struct DuplicateSheet(pub String);

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Workbook {
    pub sheets: Vec<Sheet>,
}

impl Workbook {
    pub fn new() -> Self {
        Workbook::default()
    }

    /// A workbook with one empty sheet named `Sheet1`.
    pub fn blank() -> Self {
        Workbook {
            sheets: vec![Sheet::new("Sheet1")],
        }
    }

    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name.eq_ignore_ascii_case(name))
    }

    /// Case-insensitive lookup.
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheet_index(name).map(|i| &self.sheets[i])
    }

    pub fn sheet_mut(&mut self, name: &str) -> Option<&mut Sheet> {
        self.sheet_index(name).map(move |i| &mut self.sheets[i])
    }

    pub fn add_sheet(&mut self, sheet: Sheet) -> Result<&mut Sheet, DuplicateSheet> {
        if self.sheet_index(&sheet.name).is_some() {
            return Err(DuplicateSheet(sheet.name));
        }
        self.sheets.push(sheet);
        Ok(self.sheets.last_mut().expect("just pushed"))
    }

    /// Find a chart by name on any sheet.
    pub fn chart_mut(&mut self, name: &str) -> Option<&mut ChartMeta> {
        self.sheets
            .iter_mut()
            .flat_map(|s| s.charts.iter_mut())
            .find(|c| c.name == name)
    }

    pub fn chart(&self, name: &str) -> Option<&ChartMeta> {
        self.sheets.iter().flat_map(|s| s.charts.iter()).find(|c| c.name == name)
    }

    /// Recompute every formula cache from scratch.
    pub fn recalculate(&mut self) {
        formula::recalculate(self);
    }

    /// Descriptions of every sheet, space separated.
    pub fn describe(&self) -> String {
        self.sheets.iter().map(Sheet::describe).collect::<Vec<_>>().join(" ")
    }
}
