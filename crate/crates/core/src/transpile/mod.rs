//! Translation of recorded macro code into xwAPI action scripts.
//!
//! Two source dialects are understood: a line-oriented subset of VBA and a
//! subset of Google Apps Script. Each recognized statement becomes exactly
//! one atomic action. Anything else becomes an `Unknown(raw="...")`
//! placeholder plus a warning, so the output always has one action per
//! source statement.

mod gas;
mod lex;
mod vba;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::workbook::PLACEHOLDER_ACTION;
use crate::xwapi::{parse_range, ActionCatalog, ActionScript, ArgValue, AtomicAction, Coord, Diagnostic, RangeRef, SyntaxError};
use lex::{Arg, Expr, Statement};

/// Sheet assumed active before any selector statement.
pub const DEFAULT_SHEET: &str = "Sheet1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceDialect {
    Vba,
    Gas,
}

impl fmt::Display for SourceDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceDialect::Vba => "vba",
            SourceDialect::Gas => "gas",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dialect `{0}` (expected vba or gas)")]
pub struct UnknownDialect(pub String);

impl FromStr for SourceDialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vba" => Ok(SourceDialect::Vba),
            "gas" | "js" | "apps-script" => Ok(SourceDialect::Gas),
            _ => Err(UnknownDialect(s.to_string())),
        }
    }
}

/// One statement form the transpiler recognizes and the action it maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MappingRule {
    pub dialect: SourceDialect,
    pub pattern: &'static str,
    pub target: &'static str,
}

pub const MAPPING_RULES: &[MappingRule] = &[
    MappingRule { dialect: SourceDialect::Vba, pattern: "Range(A).Value = V", target: "Write" },
    MappingRule { dialect: SourceDialect::Vba, pattern: "Range(A).Formula = V", target: "Write" },
    MappingRule { dialect: SourceDialect::Vba, pattern: "ActiveCell.Value = V", target: "Write" },
    MappingRule { dialect: SourceDialect::Vba, pattern: "Range(A).Copy Destination:=Range(B)", target: "CopyPaste" },
    MappingRule { dialect: SourceDialect::Vba, pattern: "Sheets.Add.Name = N", target: "CreateSheet" },
    MappingRule { dialect: SourceDialect::Vba, pattern: "Range(A).AutoFill Destination:=Range(B)", target: "AutoFill" },
    MappingRule { dialect: SourceDialect::Gas, pattern: "sheet.getRange(A).setValue(V)", target: "Write" },
    MappingRule { dialect: SourceDialect::Gas, pattern: "sheet.getRange(A).setFormula(V)", target: "Write" },
    MappingRule { dialect: SourceDialect::Gas, pattern: "sheet.getRange(A).copyTo(sheet.getRange(B))", target: "CopyPaste" },
    MappingRule { dialect: SourceDialect::Gas, pattern: "ss.insertSheet(N)", target: "CreateSheet" },
    MappingRule { dialect: SourceDialect::Gas, pattern: "sheet.getRange(A).autoFill(sheet.getRange(B), S)", target: "AutoFill" },
];

/// Full transpiler output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transpilation {
    pub script: ActionScript,
    /// One warning per `Unknown` placeholder, indexed by step.
    pub diagnostics: Vec<Diagnostic>,
    /// The sheet each step targets.
    pub sheets: Vec<String>,
    /// Source line of each step.
    pub lines: Vec<usize>,
}

/// Translate `source` into an action script plus diagnostics.
pub fn transpile(
    source: &str,
    dialect: SourceDialect,
    catalog: &ActionCatalog,
) -> Result<(ActionScript, Vec<Diagnostic>), SyntaxError> {
    transpile_detailed(source, dialect, catalog).map(|t| (t.script, t.diagnostics))
}

pub fn transpile_detailed(
    source: &str,
    dialect: SourceDialect,
    catalog: &ActionCatalog,
) -> Result<Transpilation, SyntaxError> {
    let statements = lex::split_statements(source, dialect)?;
    let mut state = State::new();
    let mut steps = Vec::new();
    let mut diagnostics = Vec::new();
    let mut sheets = Vec::new();
    let mut lines = Vec::new();
    for stmt in &statements {
        let outcome = match dialect {
            SourceDialect::Vba => vba::lower(&mut state, stmt),
            SourceDialect::Gas => gas::lower(&mut state, stmt),
        };
        let action = match outcome {
            Outcome::Structural | Outcome::Selector => continue,
            Outcome::Action(a) if catalog.contains(&a.name) => a,
            Outcome::Action(a) => {
                diagnostics.push(Diagnostic::warning(
                    steps.len(),
                    format!("line {}: action {} is not in the catalog", stmt.line, a.name),
                ));
                placeholder(stmt)
            }
            Outcome::Unrecognized => {
                diagnostics.push(Diagnostic::warning(
                    steps.len(),
                    format!("line {}: unrecognized {dialect} statement `{}`", stmt.line, stmt.text),
                ));
                placeholder(stmt)
            }
        };
        sheets.push(target_sheet(&action).unwrap_or_else(|| state.active.clone()));
        lines.push(stmt.line);
        steps.push(action);
    }
    Ok(Transpilation {
        script: ActionScript::new(steps),
        diagnostics,
        sheets,
        lines,
    })
}

/// The sheet each emitted step targets.
pub fn resolve_sheets(source: &str, dialect: SourceDialect) -> Result<Vec<String>, SyntaxError> {
    transpile_detailed(source, dialect, &ActionCatalog::seed()).map(|t| t.sheets)
}

/// The sheet bound after the last statement of `source`. Never fails: a
/// syntax error truncates the source at the offending line.
pub fn active_sheet(source: &str, dialect: SourceDialect) -> String {
    let mut text = source.to_string();
    loop {
        match lex::split_statements(&text, dialect) {
            Ok(statements) => {
                let mut state = State::new();
                for stmt in &statements {
                    match dialect {
                        SourceDialect::Vba => vba::lower(&mut state, stmt),
                        SourceDialect::Gas => gas::lower(&mut state, stmt),
                    };
                }
                return state.active;
            }
            Err(e) => {
                text = text.lines().take(e.line.saturating_sub(1)).collect::<Vec<_>>().join("\n");
            }
        }
    }
}

fn placeholder(stmt: &Statement) -> AtomicAction {
    let mut a = AtomicAction::new(PLACEHOLDER_ACTION).arg("raw", ArgValue::Str(stmt.text.clone()));
    a.unknown = true;
    a
}

fn target_sheet(action: &AtomicAction) -> Option<String> {
    if action.name == "CreateSheet" {
        return action.get("sheetName").and_then(ArgValue::as_str).map(String::from);
    }
    action.args.iter().find_map(|a| match &a.value {
        ArgValue::Range(r) => r.sheet.clone(),
        _ => None,
    })
}

pub(crate) enum Outcome {
    /// Procedure boundaries, declarations, braces.
    Structural,
    /// Changes the bound sheet, selection or a variable; emits nothing.
    Selector,
    Action(AtomicAction),
    Unrecognized,
}

/// What a call chain evaluates to.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Obj {
    App,
    Book,
    /// The sheets collection (`Sheets`, `Worksheets`).
    Sheets,
    /// Result of `Sheets.Add`, named by a later `.Name =`.
    NewSheet,
    Sheet(String),
    Range(RangeRef),
    Unknown,
}

pub(crate) struct State {
    pub active: String,
    pub selection: Option<RangeRef>,
    pub vars: HashMap<String, Obj>,
}

impl State {
    fn new() -> Self {
        State {
            active: DEFAULT_SHEET.to_string(),
            selection: None,
            vars: HashMap::new(),
        }
    }
}

/// `"A1"` or `"Data!A1:B2"`, defaulting the sheet.
pub(crate) fn range_in(text: &str, sheet: &str) -> Option<RangeRef> {
    let r = parse_range(text).ok()?;
    Some(if r.sheet.is_some() { r } else { r.with_sheet(sheet) })
}

/// Numeric `(row, column[, rows[, columns]])` addressing.
pub(crate) fn grid_range(args: &[Arg], sheet: &str) -> Option<RangeRef> {
    let nums: Vec<u32> = args
        .iter()
        .map(|a| match (&a.name, &a.value) {
            (None, Expr::Num(n)) if *n >= 1.0 && n.fract() == 0.0 => Some(*n as u32),
            _ => None,
        })
        .collect::<Option<_>>()?;
    let (row, col, rows, cols) = match nums[..] {
        [r, c] => (r, c, 1, 1),
        [r, c, nr] => (r, c, nr, 1),
        [r, c, nr, nc] => (r, c, nr, nc),
        _ => return None,
    };
    let start = Coord::new(col, row);
    let end = start.offset(cols as i64 - 1, rows as i64 - 1)?;
    Some(RangeRef::new(Some(sheet.to_string()), start, end))
}

pub(crate) fn literal_value(e: &Expr) -> Option<ArgValue> {
    match e {
        Expr::Str(s) if s.starts_with('=') => Some(ArgValue::Formula(s.clone())),
        Expr::Str(s) => Some(ArgValue::Str(s.clone())),
        Expr::Num(n) => Some(ArgValue::Number(*n)),
        _ => None,
    }
}

pub(crate) fn write(range: RangeRef, value: ArgValue) -> Outcome {
    Outcome::Action(
        AtomicAction::new("Write")
            .arg("range", ArgValue::Range(range))
            .arg("value", value),
    )
}

pub(crate) fn copy_paste(source: RangeRef, destination: RangeRef) -> Outcome {
    Outcome::Action(
        AtomicAction::new("CopyPaste")
            .arg("source", ArgValue::Range(source))
            .arg("destination", ArgValue::Range(destination)),
    )
}

pub(crate) fn auto_fill(source: RangeRef, destination: RangeRef) -> Outcome {
    Outcome::Action(
        AtomicAction::new("AutoFill")
            .arg("source", ArgValue::Range(source))
            .arg("destination", ArgValue::Range(destination)),
    )
}

pub(crate) fn create_sheet(name: &str) -> Outcome {
    Outcome::Action(AtomicAction::new("CreateSheet").arg("sheetName", ArgValue::Str(name.to_string())))
}
