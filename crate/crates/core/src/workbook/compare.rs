use std::fmt;

use serde::Serialize;

use super::{CellValue, ChartMeta, FilterMeta, FormatRecord, PivotMeta, Sheet, Workbook};
use crate::xwapi::{column_letters, Coord, RangeRef};

/// Default absolute tolerance for numeric cell comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchKind {
    Cell,
    Chart,
    Pivot,
    Filter,
    Format,
    FrozenPane,
    SheetMissing,
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MismatchKind::Cell => "cell",
            MismatchKind::Chart => "chart",
            MismatchKind::Pivot => "pivot",
            MismatchKind::Filter => "filter",
            MismatchKind::Format => "format",
            MismatchKind::FrozenPane => "frozen-pane",
            MismatchKind::SheetMissing => "sheet-missing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    pub location: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} mismatch at {}: expected {}, actual {}",
            self.kind, self.location, self.expected, self.actual
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    pub equivalent: bool,
    pub mismatches: Vec<Mismatch>,
}

impl DiffReport {
    fn from_mismatches(mismatches: Vec<Mismatch>) -> Self {
        DiffReport {
            equivalent: mismatches.is_empty(),
            mismatches,
        }
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.equivalent {
            return writeln!(f, "workbooks are equivalent");
        }
        writeln!(f, "{} mismatch(es)", self.mismatches.len())?;
        for m in &self.mismatches {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

/// Compare `actual` against `expected`, sheet by sheet.
///
/// For every sheet of `expected`: cell values over the union of both used
/// ranges column by column (numbers within `tol`, everything else exact,
/// formulas by evaluated value), then charts, pivot tables, filters, format
/// records and frozen panes. Sheets present only in `actual` are not
/// inspected.
pub fn compare(expected: &Workbook, actual: &Workbook, tol: f64) -> DiffReport {
    assert!(tol >= 0.0, "tolerance must be non-negative");
    let mut out = Vec::new();
    for exp in &expected.sheets {
        let Some(act) = actual.sheet(&exp.name) else {
            out.push(Mismatch {
                kind: MismatchKind::SheetMissing,
                location: exp.name.clone(),
                expected: "present".into(),
                actual: "missing".into(),
            });
            continue;
        };
        compare_cells(exp, act, tol, &mut out);
        compare_keyed(
            MismatchKind::Chart,
            &exp.name,
            &exp.charts,
            &act.charts,
            |c| c.name.clone(),
            chart_eq,
            describe_chart,
            &mut out,
        );
        compare_keyed(
            MismatchKind::Pivot,
            &exp.name,
            &exp.pivots,
            &act.pivots,
            |p| p.name.clone(),
            pivot_eq,
            describe_pivot,
            &mut out,
        );
        compare_multiset(MismatchKind::Filter, &exp.name, &exp.filters, &act.filters, filter_key, &mut out);
        compare_multiset(MismatchKind::Format, &exp.name, &exp.formats, &act.formats, format_key, &mut out);
        if exp.frozen != act.frozen {
            let show = |f: &Option<super::FrozenPanes>| match f {
                Some(p) => format!("{} row(s), {} column(s)", p.rows, p.cols),
                None => "none".into(),
            };
            out.push(Mismatch {
                kind: MismatchKind::FrozenPane,
                location: exp.name.clone(),
                expected: show(&exp.frozen),
                actual: show(&act.frozen),
            });
        }
    }
    DiffReport::from_mismatches(out)
}

fn compare_cells(exp: &Sheet, act: &Sheet, tol: f64, out: &mut Vec<Mismatch>) {
    let (ew, eh) = exp.used_extent().unwrap_or((0, 0));
    let (aw, ah) = act.used_extent().unwrap_or((0, 0));
    let (width, height) = (ew.max(aw), eh.max(ah));
    for col in 1..=width {
        for row in 1..=height {
            let at = Coord::new(col, row);
            let (e, a) = (exp.get(at).resolved(), act.get(at).resolved());
            if !values_match(e, a, tol) {
                out.push(Mismatch {
                    kind: MismatchKind::Cell,
                    location: format!("{}!{}{}", exp.name, column_letters(col), row),
                    expected: show_value(e),
                    actual: show_value(a),
                });
            }
        }
    }
}

fn values_match(e: &CellValue, a: &CellValue, tol: f64) -> bool {
    match (e, a) {
        (CellValue::Number(x), CellValue::Number(y)) => (x - y).abs() <= tol,
        (CellValue::Error(x), CellValue::Error(y)) => x.kind == y.kind,
        (x, y) => x == y,
    }
}

fn show_value(v: &CellValue) -> String {
    match v {
        CellValue::Empty => "(empty)".into(),
        CellValue::Text(s) => format!("{s:?}"),
        other => other.to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
fn compare_keyed<T>(
    kind: MismatchKind,
    sheet: &str,
    expected: &[T],
    actual: &[T],
    key: impl Fn(&T) -> String,
    same: impl Fn(&T, &T) -> bool,
    describe: impl Fn(&T) -> String,
    out: &mut Vec<Mismatch>,
) {
    for e in expected {
        let location = format!("{sheet}:{}", key(e));
        match actual.iter().find(|a| key(a) == key(e)) {
            None => out.push(Mismatch {
                kind,
                location,
                expected: describe(e),
                actual: "missing".into(),
            }),
            Some(a) if !same(e, a) => out.push(Mismatch {
                kind,
                location,
                expected: describe(e),
                actual: describe(a),
            }),
            Some(_) => {}
        }
    }
    for a in actual {
        if !expected.iter().any(|e| key(e) == key(a)) {
            out.push(Mismatch {
                kind,
                location: format!("{sheet}:{}", key(a)),
                expected: "missing".into(),
                actual: describe(a),
            });
        }
    }
}

fn compare_multiset<T>(
    kind: MismatchKind,
    sheet: &str,
    expected: &[T],
    actual: &[T],
    key: impl Fn(&T) -> String,
    out: &mut Vec<Mismatch>,
) {
    let mut e: Vec<String> = expected.iter().map(&key).collect();
    let mut a: Vec<String> = actual.iter().map(&key).collect();
    e.sort();
    a.sort();
    let mut remaining = a.clone();
    for item in &e {
        if let Some(i) = remaining.iter().position(|x| x == item) {
            remaining.remove(i);
        } else {
            out.push(Mismatch {
                kind,
                location: sheet.to_string(),
                expected: item.clone(),
                actual: "missing".into(),
            });
        }
    }
    for item in remaining {
        out.push(Mismatch {
            kind,
            location: sheet.to_string(),
            expected: "missing".into(),
            actual: item,
        });
    }
}

fn range_key(r: &RangeRef) -> String {
    let mut r = r.clone();
    r.sheet = r.sheet.map(|s| s.to_lowercase());
    r.to_string()
}

fn chart_eq(a: &ChartMeta, b: &ChartMeta) -> bool {
    a.chart_type == b.chart_type
        && a.source.same_area(&b.source)
        && a.dest_sheet.eq_ignore_ascii_case(&b.dest_sheet)
        && a.legend_position == b.legend_position
}

fn describe_chart(c: &ChartMeta) -> String {
    format!(
        "{} chart of {} on {} (legend {})",
        c.chart_type,
        c.source,
        c.dest_sheet,
        c.legend_position.as_deref().unwrap_or("none")
    )
}

fn pivot_eq(a: &PivotMeta, b: &PivotMeta) -> bool {
    a.source.same_area(&b.source)
        && a.dest_sheet.eq_ignore_ascii_case(&b.dest_sheet)
        && a.rows == b.rows
        && a.columns == b.columns
        && a.values == b.values
}

fn describe_pivot(p: &PivotMeta) -> String {
    format!(
        "pivot of {} on {} rows={:?} columns={:?} values={:?}",
        p.source, p.dest_sheet, p.rows, p.columns, p.values
    )
}

fn filter_key(f: &FilterMeta) -> String {
    format!("{} field {} {}", range_key(&f.source), f.field_index, f.criteria)
}

fn format_key(f: &FormatRecord) -> String {
    format!("{} {}={}", range_key(&f.range), f.property, f.value)
}
