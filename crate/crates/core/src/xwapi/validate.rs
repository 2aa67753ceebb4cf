use std::fmt;

use serde::Serialize;

use super::catalog::{ActionCatalog, ArgType};
use super::{ActionScript, ArgValue, AtomicAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 0-based index into `ActionScript::steps`.
    pub step: usize,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(step: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            step,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(step: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            step,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "step {}: {sev}: {}", self.step + 1, self.message)
    }
}

/// Check every action against the catalog. An empty result means the
/// script is fully conformant.
pub fn validate_script(script: &ActionScript, catalog: &ActionCatalog) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, action) in script.steps.iter().enumerate() {
        validate_action(i, action, catalog, &mut out);
    }
    out
}

fn validate_action(step: usize, action: &AtomicAction, catalog: &ActionCatalog, out: &mut Vec<Diagnostic>) {
    for arg in &action.args {
        if let ArgValue::Formula(f) = &arg.value {
            if f.contains('$') {
                out.push(Diagnostic::warning(
                    step,
                    format!("argument {}: absolute references ($) are treated as relative", arg.key),
                ));
            }
        }
    }

    let Some(spec) = catalog.get(&action.name) else {
        out.push(Diagnostic::warning(step, format!("unknown action {}", action.name)));
        return;
    };

    for param in spec.required() {
        if action.get(&param.name).is_none() {
            out.push(Diagnostic::error(step, format!("missing required argument {}", param.name)));
        }
    }

    for arg in &action.args {
        let Some(param) = spec.param(&arg.key) else {
            out.push(Diagnostic::warning(step, format!("unexpected argument {}", arg.key)));
            continue;
        };
        if let Some(problem) = type_problem(param.ty, &arg.value) {
            out.push(Diagnostic::error(step, format!("argument {}: {problem}", arg.key)));
        }
    }

    if action.name == "CreatePivotTable" {
        let has_fields = ["rows", "columns", "values"]
            .iter()
            .any(|k| action.get(k).and_then(ArgValue::as_list).is_some_and(|l| !l.is_empty()));
        if !has_fields {
            out.push(Diagnostic::error(step, "pivot table needs at least one row, column or value field"));
        }
    }
}

fn type_problem(ty: ArgType, value: &ArgValue) -> Option<String> {
    let ok = match (ty, value) {
        (ArgType::Range, ArgValue::Range(_) | ArgValue::Cell(_)) => true,
        (ArgType::Cell, ArgValue::Cell(_)) => true,
        (ArgType::Range | ArgType::Cell, ArgValue::Str(s)) => {
            return Some(format!("malformed range \"{s}\""));
        }
        (ArgType::Str, ArgValue::Str(_) | ArgValue::Formula(_)) => true,
        (ArgType::Int, ArgValue::Number(n)) => {
            if n.fract() != 0.0 {
                return Some(format!("expected an integer, found {n}"));
            }
            true
        }
        (ArgType::Float, ArgValue::Number(_)) => true,
        (ArgType::Value, ArgValue::Str(_) | ArgValue::Number(_) | ArgValue::Formula(_)) => true,
        (ArgType::Formula, ArgValue::Formula(_)) => true,
        (ArgType::List, ArgValue::List(_)) => true,
        _ => false,
    };
    (!ok).then(|| format!("expected {ty}, found {}", value.kind_name()))
}
