//! Versioned JSON workbook format.
//!
//! ```json
//! {"version": 1, "sheets": [{"name": "Sheet1",
//!   "cells": {"A1": {"t": "s", "v": "Week"}, "D2": {"t": "f", "src": "=B2-C2"}},
//!   "charts": [], "pivots": [], "filters": [], "format": []}]}
//! ```
//!
//! Cell kinds: `n` number, `s` text, `b` boolean, `f` formula. Formula
//! results are recomputed on load, so their `v` field is informational.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CellValue, ChartMeta, FilterMeta, FormatRecord, FrozenPanes, PivotMeta, Sheet, Workbook};
use crate::xwapi::{parse_cell, parse_range, RangeRef};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WorkbookIoError {
    #[error("unsupported workbook format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("malformed workbook: {0}")]
    Malformed(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Serialize, Deserialize)]
struct BookDoc {
    version: u64,
    sheets: Vec<SheetDoc>,
}

#[derive(Serialize, Deserialize)]
struct SheetDoc {
    name: String,
    #[serde(default)]
    cells: BTreeMap<String, CellDoc>,
    #[serde(default)]
    charts: Vec<ChartDoc>,
    #[serde(default)]
    pivots: Vec<PivotDoc>,
    #[serde(default)]
    filters: Vec<FilterDoc>,
    #[serde(default)]
    format: Vec<FormatDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frozen: Option<FrozenDoc>,
}

#[derive(Serialize, Deserialize)]
struct CellDoc {
    t: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    src: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ChartDoc {
    name: String,
    chart_type: String,
    source: String,
    dest_sheet: String,
    #[serde(default)]
    legend_position: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PivotDoc {
    name: String,
    source: String,
    dest_sheet: String,
    #[serde(default)]
    rows: Vec<String>,
    #[serde(default)]
    columns: Vec<String>,
    #[serde(default)]
    values: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FilterDoc {
    source: String,
    field_index: u32,
    criteria: String,
}

#[derive(Serialize, Deserialize)]
struct FormatDoc {
    range: String,
    property: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct FrozenDoc {
    rows: u32,
    cols: u32,
}

fn malformed(msg: impl Into<String>) -> WorkbookIoError {
    WorkbookIoError::Malformed(msg.into())
}

fn range_from(text: &str, what: &str) -> Result<RangeRef, WorkbookIoError> {
    parse_range(text).map_err(|e| malformed(format!("{what}: bad range {text:?}: {e}")))
}

fn cell_to_doc(value: &CellValue) -> Option<CellDoc> {
    let doc = |t: &str, v: Value| CellDoc {
        t: t.into(),
        v: Some(v),
        src: None,
    };
    Some(match value {
        CellValue::Empty | CellValue::Error(_) => return None,
        CellValue::Number(n) => doc("n", serde_json::json!(n)),
        CellValue::Text(s) => doc("s", Value::String(s.clone())),
        CellValue::Bool(b) => doc("b", Value::Bool(*b)),
        CellValue::Formula { source, cached } => CellDoc {
            t: "f".into(),
            v: match cached.as_ref() {
                CellValue::Number(n) => Some(serde_json::json!(n)),
                CellValue::Text(s) => Some(Value::String(s.clone())),
                CellValue::Bool(b) => Some(Value::Bool(*b)),
                CellValue::Error(e) => Some(Value::String(e.kind.to_string())),
                _ => None,
            },
            src: Some(source.clone()),
        },
    })
}

fn cell_from_doc(at: &str, doc: CellDoc) -> Result<CellValue, WorkbookIoError> {
    let bad = || malformed(format!("cell {at}: value does not match kind {:?}", doc.t));
    Ok(match doc.t.as_str() {
        "n" => CellValue::Number(doc.v.as_ref().and_then(Value::as_f64).ok_or_else(bad)?),
        "s" => CellValue::Text(doc.v.as_ref().and_then(Value::as_str).ok_or_else(bad)?.to_string()),
        "b" => CellValue::Bool(doc.v.as_ref().and_then(Value::as_bool).ok_or_else(bad)?),
        "f" => {
            let src = doc.src.ok_or_else(|| malformed(format!("cell {at}: formula without src")))?;
            if !src.starts_with('=') {
                return Err(malformed(format!("cell {at}: formula must start with '='")));
            }
            CellValue::formula(src)
        }
        other => return Err(malformed(format!("cell {at}: unknown kind {other:?}"))),
    })
}

pub fn workbook_to_json(book: &Workbook) -> String {
    let sheets = book
        .sheets
        .iter()
        .map(|s| SheetDoc {
            name: s.name.clone(),
            cells: s
                .cells
                .iter()
                .filter_map(|(at, v)| cell_to_doc(v).map(|d| (at.a1(), d)))
                .collect(),
            charts: s
                .charts
                .iter()
                .map(|c| ChartDoc {
                    name: c.name.clone(),
                    chart_type: c.chart_type.clone(),
                    source: c.source.to_string(),
                    dest_sheet: c.dest_sheet.clone(),
                    legend_position: c.legend_position.clone(),
                })
                .collect(),
            pivots: s
                .pivots
                .iter()
                .map(|p| PivotDoc {
                    name: p.name.clone(),
                    source: p.source.to_string(),
                    dest_sheet: p.dest_sheet.clone(),
                    rows: p.rows.clone(),
                    columns: p.columns.clone(),
                    values: p.values.clone(),
                })
                .collect(),
            filters: s
                .filters
                .iter()
                .map(|f| FilterDoc {
                    source: f.source.to_string(),
                    field_index: f.field_index,
                    criteria: f.criteria.clone(),
                })
                .collect(),
            format: s
                .formats
                .iter()
                .map(|f| FormatDoc {
                    range: f.range.to_string(),
                    property: f.property.clone(),
                    value: f.value.clone(),
                })
                .collect(),
            frozen: s.frozen.map(|f| FrozenDoc {
                rows: f.rows,
                cols: f.cols,
            }),
        })
        .collect();
    let doc = BookDoc {
        version: FORMAT_VERSION as u64,
        sheets,
    };
    serde_json::to_string_pretty(&doc).expect("workbook document is always serializable")
}

pub fn workbook_from_json(text: &str) -> Result<Workbook, WorkbookIoError> {
    let raw: Value = serde_json::from_str(text)?;
    let version = raw
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("missing integer field `version`"))?;
    if version != FORMAT_VERSION as u64 {
        return Err(WorkbookIoError::Version { found: version });
    }
    let doc: BookDoc = serde_json::from_value(raw)?;
    let mut book = Workbook::new();
    for sd in doc.sheets {
        let mut sheet = Sheet::new(sd.name);
        for (at, cell) in sd.cells {
            let c = parse_cell(&at).map_err(|e| malformed(format!("bad cell address {at:?}: {e}")))?;
            if c.sheet.is_some() {
                return Err(malformed(format!("cell address {at:?} must not name a sheet")));
            }
            let value = cell_from_doc(&at, cell)?;
            sheet.set(c.coord(), value);
        }
        for c in sd.charts {
            sheet.charts.push(ChartMeta {
                source: range_from(&c.source, "chart source")?,
                name: c.name,
                chart_type: c.chart_type,
                dest_sheet: c.dest_sheet,
                legend_position: c.legend_position,
            });
        }
        for p in sd.pivots {
            sheet.pivots.push(PivotMeta {
                source: range_from(&p.source, "pivot source")?,
                name: p.name,
                dest_sheet: p.dest_sheet,
                rows: p.rows,
                columns: p.columns,
                values: p.values,
            });
        }
        for f in sd.filters {
            sheet.filters.push(FilterMeta {
                source: range_from(&f.source, "filter source")?,
                field_index: f.field_index,
                criteria: f.criteria,
            });
        }
        for f in sd.format {
            sheet.formats.push(FormatRecord {
                range: range_from(&f.range, "format range")?,
                property: f.property,
                value: f.value,
            });
        }
        sheet.frozen = sd.frozen.map(|f| FrozenPanes {
            rows: f.rows,
            cols: f.cols,
        });
        let name = sheet.name.clone();
        book.add_sheet(sheet)
            .map_err(|_| malformed(format!("duplicate sheet {name:?}")))?;
    }
    book.recalculate();
    Ok(book)
}

pub fn load_workbook(path: impl AsRef<Path>) -> Result<Workbook, WorkbookIoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WorkbookIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    workbook_from_json(&text)
}

pub fn save_workbook(book: &Workbook, path: impl AsRef<Path>) -> Result<(), WorkbookIoError> {
    let path = path.as_ref();
    let mut text = workbook_to_json(book);
    text.push('\n');
    fs::write(path, text).map_err(|source| WorkbookIoError::Io {
        path: path.display().to_string(),
        source,
    })
}
