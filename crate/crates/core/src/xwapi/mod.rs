//! The atomic-action language: one named spreadsheet operation per line,
//! keyword arguments, and bullet-based step grouping.
//!
//! ```text
//! - - Write(range="Sheet1!D1", value="Profit")
//! - - Write(range="Sheet1!D2", value="=B2-C2")
//!   - AutoFill(source="Sheet1!D2", destination="Sheet1!D2:D11")
//! ```
//!
//! `- -` opens a new step group and a single `-` continues the current one.

mod catalog;
mod parse;
mod range;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use catalog::{ActionCatalog, ActionSpec, ArgType, CatalogError, Param};
pub use parse::{parse_action, parse_script, serialize_action, serialize_script};
pub use range::{
    column_index, column_letters, parse_cell, parse_range, quote_sheet_name, CellRef, Coord, RangeRef, MAX_COLUMN,
    MAX_ROW,
};
pub use validate::{validate_script, Diagnostic, Severity};

/// Positioned syntax error. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// An argument value. Quoted strings beginning with `=` are formulas; range
/// and list values only appear where the catalog declares those types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ArgValue {
    Str(String),
    Number(f64),
    Range(RangeRef),
    Cell(CellRef),
    Formula(String),
    List(Vec<String>),
}

impl ArgValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ArgValue::Str(_) => "string",
            ArgValue::Number(_) => "number",
            ArgValue::Range(_) => "range",
            ArgValue::Cell(_) => "cell",
            ArgValue::Formula(_) => "formula",
            ArgValue::List(_) => "list",
        }
    }

    /// The textual content of string-like values.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::Str(s) | ArgValue::Formula(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            ArgValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Range view of range, cell and (parseable) string values.
    pub fn as_range(&self) -> Option<RangeRef> {
        match self {
            ArgValue::Range(r) => Some(r.clone()),
            ArgValue::Cell(c) => Some(RangeRef::cell(c.sheet.clone(), c.coord())),
            ArgValue::Str(s) => parse_range(s).ok(),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<Vec<String>> {
        match self {
            ArgValue::List(items) => Some(items.clone()),
            ArgValue::Str(s) => Some(split_list(s)),
            _ => None,
        }
    }
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Str(s) | ArgValue::Formula(s) => f.write_str(s),
            ArgValue::Number(n) => write!(f, "{n}"),
            ArgValue::Range(r) => write!(f, "{r}"),
            ArgValue::Cell(c) => write!(f, "{c}"),
            ArgValue::List(items) => f.write_str(&items.join(",")),
        }
    }
}

pub(crate) fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionArg {
    pub key: String,
    pub value: ArgValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicAction {
    pub name: String,
    pub args: Vec<ActionArg>,
    /// Set by the parser when `name` is not in the catalog.
    #[serde(default)]
    pub unknown: bool,
}

impl AtomicAction {
    pub fn new(name: impl Into<String>) -> Self {
        AtomicAction {
            name: name.into(),
            args: Vec::new(),
            unknown: false,
        }
    }

    pub fn arg(mut self, key: impl Into<String>, value: ArgValue) -> Self {
        self.args.push(ActionArg { key: key.into(), value });
        self
    }

    pub fn get(&self, key: &str) -> Option<&ArgValue> {
        self.args.iter().find(|a| a.key == key).map(|a| &a.value)
    }
}

impl fmt::Display for AtomicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_action(self))
    }
}

/// An ordered list of actions partitioned into consecutive step groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionScript {
    pub steps: Vec<AtomicAction>,
    /// Sizes of consecutive step groups; always sums to `steps.len()`.
    pub groups: Vec<usize>,
}

impl ActionScript {
    /// One group per action.
    pub fn new(steps: Vec<AtomicAction>) -> Self {
        let groups = vec![1; steps.len()];
        ActionScript { steps, groups }
    }

    /// Returns `None` if the group sizes do not cover `steps` exactly or contain a zero.
    pub fn with_groups(steps: Vec<AtomicAction>, groups: Vec<usize>) -> Option<Self> {
        let covers = groups.iter().sum::<usize>() == steps.len() && groups.iter().all(|&g| g > 0);
        covers.then_some(ActionScript { steps, groups })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step groups as slices, in order.
    pub fn step_groups(&self) -> impl Iterator<Item = &[AtomicAction]> + '_ {
        let mut start = 0;
        self.groups.iter().map(move |&len| {
            let group = &self.steps[start..start + len];
            start += len;
            group
        })
    }
}
