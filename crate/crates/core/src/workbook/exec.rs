use log::warn;

use super::formula::shift_formula;
use super::{CellValue, ChartMeta, FilterMeta, FormatRecord, FrozenPanes, PivotMeta, Sheet, Workbook, CHART_TYPES};
use crate::xwapi::{ActionScript, ArgValue, AtomicAction, Coord, RangeRef};

/// Name of the placeholder action the transpiler emits for unrecognized
/// statements. Executing it has no effect.
pub const PLACEHOLDER_ACTION: &str = "Unknown";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {}: {message}", step + 1)]
pub struct ExecError {
    /// 0-based index into the script's steps.
    pub step: usize,
    pub message: String,
}

/// Run `script` against `book` and return the resulting workbook.
pub fn execute(script: &ActionScript, book: Workbook) -> Result<Workbook, ExecError> {
    execute_logged(script, book).map(|(book, _)| book)
}

/// Like [`execute`], also returning non-fatal warnings (for example an
/// unrecognized chart type, which is stored verbatim).
pub fn execute_logged(script: &ActionScript, mut book: Workbook) -> Result<(Workbook, Vec<String>), ExecError> {
    let mut warnings = Vec::new();
    book.recalculate();
    for (step, action) in script.steps.iter().enumerate() {
        let mut ctx = Step {
            step,
            action,
            book: &mut book,
            warnings: &mut warnings,
        };
        let mutated_cells = ctx.apply()?;
        if mutated_cells {
            book.recalculate();
        }
    }
    Ok((book, warnings))
}

struct Step<'a> {
    step: usize,
    action: &'a AtomicAction,
    book: &'a mut Workbook,
    warnings: &'a mut Vec<String>,
}

impl Step<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExecError> {
        Err(ExecError {
            step: self.step,
            message: message.into(),
        })
    }

    fn arg(&self, key: &str) -> Result<&ArgValue, ExecError> {
        match self.action.get(key) {
            Some(v) => Ok(v),
            None => self.fail(format!("{} is missing argument {key}", self.action.name)),
        }
    }

    fn text(&self, key: &str) -> Result<String, ExecError> {
        match self.arg(key)? {
            ArgValue::Number(n) => Ok(format!("{n}")),
            other => Ok(other.to_string()),
        }
    }

    /// Resolve a range argument and qualify it with the canonical sheet name.
    /// Unqualified ranges refer to the first sheet.
    fn range(&self, key: &str) -> Result<(usize, RangeRef), ExecError> {
        let value = self.arg(key)?;
        let Some(range) = value.as_range() else {
            return self.fail(format!("argument {key} is not a valid range: {value}"));
        };
        let idx = self.sheet_index(range.sheet.as_deref())?;
        Ok((idx, range.with_sheet(self.book.sheets[idx].name.clone())))
    }

    fn sheet_index(&self, name: Option<&str>) -> Result<usize, ExecError> {
        match name {
            None if !self.book.sheets.is_empty() => Ok(0),
            None => self.fail("workbook has no sheets"),
            Some(n) => match self.book.sheet_index(n) {
                Some(i) => Ok(i),
                None => self.fail(format!("no sheet named `{n}`")),
            },
        }
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.action.get(key).and_then(ArgValue::as_list).unwrap_or_default()
    }

    /// Returns whether cell contents changed.
    fn apply(&mut self) -> Result<bool, ExecError> {
        match self.action.name.as_str() {
            "Write" => self.write().map(|_| true),
            "CopyPaste" => self.copy_paste().map(|_| true),
            "AutoFill" => self.auto_fill().map(|_| true),
            "CreateSheet" => self.create_sheet().map(|_| true),
            "CreateChart" => self.create_chart().map(|_| false),
            "SetChartLegend" => self.set_chart_legend().map(|_| false),
            "Filter" => self.filter().map(|_| false),
            "CreatePivotTable" => self.create_pivot().map(|_| false),
            "SetFormat" => self.set_format().map(|_| false),
            "FreezePanes" => self.freeze_panes().map(|_| false),
            PLACEHOLDER_ACTION => Ok(false),
            other => self.fail(format!("unsupported action {other}")),
        }
    }

    fn write(&mut self) -> Result<(), ExecError> {
        let (idx, range) = self.range("range")?;
        let value = self.arg("value")?.clone();
        let origin = range.start;
        let sheet = &mut self.book.sheets[idx];
        for at in range.coords() {
            let cell = match &value {
                ArgValue::Number(n) => CellValue::Number(*n),
                ArgValue::Formula(src) => CellValue::formula(shift_formula(
                    src,
                    at.column as i64 - origin.column as i64,
                    at.row as i64 - origin.row as i64,
                )),
                ArgValue::Str(s) if s.is_empty() => CellValue::Empty,
                other => CellValue::Text(other.to_string()),
            };
            sheet.set(at, cell);
        }
        Ok(())
    }

    fn copy_paste(&mut self) -> Result<(), ExecError> {
        let (src_idx, src) = self.range("source")?;
        let (dst_idx, dst) = self.range("destination")?;
        let (w, h) = (src.width(), src.height());
        let (dw, dh) = if dst.is_single_cell() {
            (w, h)
        } else if dst.width() % w == 0 && dst.height() % h == 0 {
            (dst.width(), dst.height())
        } else {
            return self.fail(format!(
                "destination {dst} does not match the {w}x{h} shape of source {src}"
            ));
        };
        if dst.start.offset((dw - 1) as i64, (dh - 1) as i64).is_none() {
            return self.fail(format!("paste at {dst} runs off the sheet"));
        }

        let snapshot: Vec<CellValue> = src.coords().map(|c| self.book.sheets[src_idx].get(c).clone()).collect();
        let sheet = &mut self.book.sheets[dst_idx];
        for dy in 0..dh {
            for dx in 0..dw {
                let (sx, sy) = (dx % w, dy % h);
                let from = Coord::new(src.start.column + sx, src.start.row + sy);
                let to = Coord::new(dst.start.column + dx, dst.start.row + dy);
                let value = &snapshot[(sy * w + sx) as usize];
                sheet.set(to, relocate(value, from, to));
            }
        }
        Ok(())
    }

    fn auto_fill(&mut self) -> Result<(), ExecError> {
        let (src_idx, src) = self.range("source")?;
        let (dst_idx, dst) = self.range("destination")?;
        if src_idx != dst_idx || !dst.contains_range(&src) {
            return self.fail(format!("AutoFill destination {dst} must contain the source {src}"));
        }
        let (w, h) = (src.width(), src.height());
        let snapshot: Vec<CellValue> = src.coords().map(|c| self.book.sheets[src_idx].get(c).clone()).collect();
        let sheet = &mut self.book.sheets[dst_idx];
        for to in dst.coords() {
            if src.contains(to) {
                continue;
            }
            let sx = (to.column as i64 - src.start.column as i64).rem_euclid(w as i64) as u32;
            let sy = (to.row as i64 - src.start.row as i64).rem_euclid(h as i64) as u32;
            let from = Coord::new(src.start.column + sx, src.start.row + sy);
            let value = &snapshot[(sy * w + sx) as usize];
            sheet.set(to, relocate(value, from, to));
        }
        Ok(())
    }

    fn create_sheet(&mut self) -> Result<(), ExecError> {
        let name = self.text("sheetName")?;
        if name.trim().is_empty() {
            return self.fail("sheet name is empty");
        }
        if let Err(e) = self.book.add_sheet(Sheet::new(name)) {
            return self.fail(e.to_string());
        }
        Ok(())
    }

    fn create_chart(&mut self) -> Result<(), ExecError> {
        let (_, source) = self.range("source")?;
        let dest = self.text("destSheet")?;
        let dest_idx = self.sheet_index(Some(&dest))?;
        let chart_type = self.text("chartType")?;
        let name = self.text("chartName")?;
        if self.book.chart(&name).is_some() {
            return self.fail(format!("a chart named `{name}` already exists"));
        }
        if !CHART_TYPES.contains(&chart_type.as_str()) {
            let msg = format!("step {}: unrecognized chart type `{chart_type}` stored verbatim", self.step + 1);
            warn!("{msg}");
            self.warnings.push(msg);
        }
        let dest_name = self.book.sheets[dest_idx].name.clone();
        self.book.sheets[dest_idx].charts.push(ChartMeta {
            name,
            chart_type,
            source,
            dest_sheet: dest_name,
            legend_position: None,
        });
        Ok(())
    }

    fn set_chart_legend(&mut self) -> Result<(), ExecError> {
        let name = self.text("chartName")?;
        let position = self.text("position")?;
        match self.book.chart_mut(&name) {
            Some(chart) => {
                chart.legend_position = Some(position);
                Ok(())
            }
            None => self.fail(format!("no chart named `{name}`")),
        }
    }

    fn filter(&mut self) -> Result<(), ExecError> {
        let (idx, source) = self.range("source")?;
        let field = match self.arg("fieldIndex")? {
            ArgValue::Number(n) if n.fract() == 0.0 => *n,
            other => return self.fail(format!("fieldIndex must be an integer, found {other}")),
        };
        if field < 1.0 || field > source.width() as f64 {
            return self.fail(format!(
                "fieldIndex {field} is out of range 1..={} for {source}",
                source.width()
            ));
        }
        let criteria = self.text("criteria")?;
        self.book.sheets[idx].filters.push(FilterMeta {
            source,
            field_index: field as u32,
            criteria,
        });
        Ok(())
    }

    fn create_pivot(&mut self) -> Result<(), ExecError> {
        let (src_idx, source) = self.range("source")?;
        let dest = self.text("destSheet")?;
        let dest_idx = self.sheet_index(Some(&dest))?;
        let name = self.text("name")?;
        let (rows, columns, values) = (self.list("rows"), self.list("columns"), self.list("values"));
        if rows.is_empty() && columns.is_empty() && values.is_empty() {
            return self.fail("pivot table needs at least one row, column or value field");
        }

        let headers: Vec<String> = (source.start.column..=source.end.column)
            .map(|c| self.book.sheets[src_idx].get(Coord::new(c, source.start.row)).resolved().to_string())
            .collect();
        for field in rows.iter().chain(&columns).chain(&values) {
            if !headers.iter().any(|h| h.eq_ignore_ascii_case(field)) {
                return self.fail(format!("pivot field `{field}` is not a header of {source}"));
            }
        }
        let dest_sheet = self.book.sheets[dest_idx].name.clone();
        if self.book.sheets[dest_idx].pivots.iter().any(|p| p.name == name) {
            return self.fail(format!("a pivot table named `{name}` already exists on `{dest_sheet}`"));
        }
        self.book.sheets[dest_idx].pivots.push(PivotMeta {
            name,
            source,
            dest_sheet,
            rows,
            columns,
            values,
        });
        Ok(())
    }

    fn set_format(&mut self) -> Result<(), ExecError> {
        let (idx, range) = self.range("range")?;
        let property = self.text("property")?;
        let value = self.text("value")?;
        self.book.sheets[idx].formats.push(FormatRecord { range, property, value });
        Ok(())
    }

    fn freeze_panes(&mut self) -> Result<(), ExecError> {
        let (idx, range) = self.range("range")?;
        let frozen = FrozenPanes {
            rows: range.start.row - 1,
            cols: range.start.column - 1,
        };
        self.book.sheets[idx].frozen = (frozen.rows > 0 || frozen.cols > 0).then_some(frozen);
        Ok(())
    }
}

/// Copy a cell value from `from` to `to`, shifting formula references by the offset.
fn relocate(value: &CellValue, from: Coord, to: Coord) -> CellValue {
    match value {
        CellValue::Formula { source, .. } => CellValue::formula(shift_formula(
            source,
            to.column as i64 - from.column as i64,
            to.row as i64 - from.row as i64,
        )),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xwapi::{parse_script, ActionCatalog};

    fn run(book: Workbook, text: &str) -> Result<Workbook, ExecError> {
        execute(&parse_script(text, &ActionCatalog::seed()).unwrap(), book)
    }

    fn at(a1: &str) -> Coord {
        crate::xwapi::parse_range(a1).unwrap().start
    }

    fn sales_book() -> Workbook {
        let mut book = Workbook::blank();
        let s = &mut book.sheets[0];
        s.set(at("A1"), CellValue::Text("Week".into()));
        s.set(at("B1"), CellValue::Text("Sales".into()));
        s.set(at("C1"), CellValue::Text("COGS".into()));
        for r in 2..=11 {
            s.set(Coord::new(1, r), CellValue::Number((r - 1) as f64));
            s.set(Coord::new(2, r), CellValue::Number(10.0 * r as f64));
            s.set(Coord::new(3, r), CellValue::Number(4.0 * r as f64));
        }
        book
    }

    #[test]
    fn write_formula_evaluates() {
        let mut book = Workbook::blank();
        book.sheets[0].set(at("B2"), CellValue::Number(10.0));
        book.sheets[0].set(at("C2"), CellValue::Number(4.0));
        let out = run(book, r#"Write(range="Sheet1!D2", value="=B2-C2")"#).unwrap();
        assert_eq!(out.sheets[0].get(at("D2")).resolved(), &CellValue::Number(6.0));
    }

    #[test]
    fn autofill_shifts_formula() {
        let out = run(
            sales_book(),
            "Write(range=\"Sheet1!D2\", value=\"=B2-C2\")\nAutoFill(source=\"Sheet1!D2\", destination=\"Sheet1!D2:D11\")",
        )
        .unwrap();
        assert_eq!(out.sheets[0].get(at("D11")).formula_source(), Some("=B11-C11"));
        assert_eq!(out.sheets[0].get(at("D11")).as_number(), Some(110.0 - 44.0));
    }

    #[test]
    fn autofill_must_contain_source() {
        let err = run(sales_book(), "AutoFill(source=\"Sheet1!D2\", destination=\"Sheet1!E3:E11\")").unwrap_err();
        assert_eq!(err.step, 0);
        assert!(err.message.contains("must contain"));
    }

    #[test]
    fn create_sheet_appends() {
        let out = run(Workbook::blank(), r#"CreateSheet(sheetName="Sheet2")"#).unwrap();
        assert_eq!(out.sheets.len(), 2);
        assert_eq!(out.sheets[1].name, "Sheet2");
        let err = run(out, r#"CreateSheet(sheetName="sheet2")"#).unwrap_err();
        assert!(err.message.contains("already exists"));
    }

    #[test]
    fn missing_sheet_is_error() {
        let err = run(Workbook::blank(), r#"Write(range="Other!A1", value=1)"#).unwrap_err();
        assert!(err.message.contains("no sheet named `Other`"));
    }

    #[test]
    fn copy_paste_values_and_formulas() {
        let out = run(
            sales_book(),
            "Write(range=\"D2\", value=\"=B2-C2\")\nCopyPaste(source=\"Sheet1!B1:D2\", destination=\"Sheet1!F1\")",
        )
        .unwrap();
        let s = &out.sheets[0];
        assert_eq!(s.get(at("F1")), &CellValue::Text("Sales".into()));
        assert_eq!(s.get(at("F2")), &CellValue::Number(20.0));
        assert_eq!(s.get(at("H2")).formula_source(), Some("=F2-G2"));
        assert_eq!(s.get(at("H2")).as_number(), Some(12.0));
    }

    #[test]
    fn copy_paste_shape_mismatch() {
        let err = run(sales_book(), r#"CopyPaste(source="A1:A5", destination="B1:B3")"#).unwrap_err();
        assert!(err.message.contains("shape"));
    }

    #[test]
    fn copy_paste_tiles_into_multiple() {
        let out = run(sales_book(), r#"CopyPaste(source="B2", destination="F1:F3")"#).unwrap();
        for r in 1..=3 {
            assert_eq!(out.sheets[0].get(Coord::new(6, r)), &CellValue::Number(20.0));
        }
    }

    #[test]
    fn copy_across_sheets() {
        let out = run(
            sales_book(),
            "CreateSheet(sheetName=\"Copy\")\nCopyPaste(source=\"Sheet1!A1:C11\", destination=\"Copy!A1:C11\")",
        )
        .unwrap();
        assert_eq!(out.sheets[1].cells, out.sheets[0].cells);
    }

    #[test]
    fn chart_and_legend() {
        let out = run(
            sales_book(),
            "CreateChart(source=\"Sheet1!A1:C11\", destSheet=\"Sheet1\", chartType=\"Line\", chartName=\"Weekly Trends\")\n\
             SetChartLegend(chartName=\"Weekly Trends\", position=\"bottom\")",
        )
        .unwrap();
        let chart = out.chart("Weekly Trends").unwrap();
        assert_eq!(chart.chart_type, "Line");
        assert_eq!(chart.legend_position.as_deref(), Some("bottom"));
        let err = run(out, r#"SetChartLegend(chartName="Nope", position="top")"#).unwrap_err();
        assert!(err.message.contains("no chart"));
    }

    #[test]
    fn unknown_chart_type_warns() {
        let script = parse_script(
            r#"CreateChart(source="A1:C11", destSheet="Sheet1", chartType="Radar", chartName="R")"#,
            &ActionCatalog::seed(),
        )
        .unwrap();
        let (book, warnings) = execute_logged(&script, sales_book()).unwrap();
        assert_eq!(book.chart("R").unwrap().chart_type, "Radar");
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn filter_field_index_bounds() {
        let out = run(sales_book(), r#"Filter(source="Sheet1!A1:C11", fieldIndex=3, criteria="<2000")"#).unwrap();
        assert_eq!(out.sheets[0].filters[0].field_index, 3);
        let err = run(sales_book(), r#"Filter(source="Sheet1!A1:C11", fieldIndex=4, criteria="<2000")"#).unwrap_err();
        assert!(err.message.contains("out of range"));
        assert!(run(sales_book(), r#"Filter(source="Sheet1!A1:C11", fieldIndex=0, criteria="x")"#).is_err());
    }

    #[test]
    fn pivot_fields_must_be_headers() {
        let ok = run(
            sales_book(),
            "CreateSheet(sheetName=\"Pivot\")\nCreatePivotTable(source=\"Sheet1!A1:C11\", destSheet=\"Pivot\", name=\"P\", rows=\"Week\", values=\"Sales\")",
        )
        .unwrap();
        assert_eq!(ok.sheets[1].pivots[0].values, vec!["Sales".to_string()]);
        let err = run(
            sales_book(),
            r#"CreatePivotTable(source="Sheet1!A1:C11", destSheet="Sheet1", name="P", rows="Region")"#,
        )
        .unwrap_err();
        assert!(err.message.contains("Region"));
    }

    #[test]
    fn freeze_and_format() {
        let out = run(
            sales_book(),
            "FreezePanes(range=\"Sheet1!B2\")\nSetFormat(range=\"Sheet1!A1:C1\", property=\"bold\", value=\"true\")",
        )
        .unwrap();
        assert_eq!(out.sheets[0].frozen, Some(FrozenPanes { rows: 1, cols: 1 }));
        assert_eq!(out.sheets[0].formats[0].property, "bold");
        let out = run(out, "FreezePanes(range=\"Sheet1!A1\")").unwrap();
        assert_eq!(out.sheets[0].frozen, None);
    }

    #[test]
    fn placeholder_is_noop_and_other_unknowns_fail() {
        let book = sales_book();
        let out = run(book.clone(), r#"Unknown(raw="Application.ScreenUpdating = False")"#).unwrap();
        assert_eq!(out, {
            let mut b = book.clone();
            b.recalculate();
            b
        });
        assert!(run(book, "Frobnicate(x=1)").is_err());
    }

    #[test]
    fn write_range_fills_with_relative_formulas() {
        let out = run(sales_book(), r#"Write(range="E2:E4", value="=B2*2")"#).unwrap();
        assert_eq!(out.sheets[0].get(at("E4")).formula_source(), Some("=B4*2"));
    }
}
