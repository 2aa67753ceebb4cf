use std::collections::HashMap;

use super::{assistant_turn, code_of_user_turn, parse_steps, target_script, BackendError, PromptBundle, Summarizer};
use crate::xwapi::{parse_script, serialize_action, ActionCatalog, ActionScript, ArgValue, AtomicAction, RangeRef};

/// Deterministic offline summarizer: one templated sentence per step group.
/// Exemplars in the prompt are ignored.
#[derive(Debug, Clone)]
pub struct TemplateBaseline {
    name: String,
}

impl TemplateBaseline {
    pub fn named(name: &str) -> Self {
        TemplateBaseline { name: name.to_string() }
    }
}

impl Default for TemplateBaseline {
    fn default() -> Self {
        Self::named("template-baseline")
    }
}

impl Summarizer for TemplateBaseline {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        Ok(assistant_turn(&template_baseline(&target_script(bundle)?)))
    }
}

/// Like [`TemplateBaseline`], but a step group whose action names match a
/// group of an exemplar reuses that exemplar's step text.
#[derive(Debug, Clone)]
pub struct ExemplarBaseline {
    name: String,
}

impl ExemplarBaseline {
    pub fn named(name: &str) -> Self {
        ExemplarBaseline { name: name.to_string() }
    }
}

fn group_key(group: &[AtomicAction]) -> String {
    group.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(",")
}

impl Summarizer for ExemplarBaseline {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError> {
        let catalog = ActionCatalog::seed();
        let mut known: HashMap<String, String> = HashMap::new();
        for (user, assistant) in bundle.exemplars() {
            let (Ok(script), Ok(steps)) = (parse_script(code_of_user_turn(user), &catalog), parse_steps(assistant)) else {
                continue;
            };
            if steps.len() != script.groups.len() {
                continue;
            }
            for (group, step) in script.step_groups().zip(steps) {
                known.entry(group_key(group)).or_insert(step);
            }
        }
        let target = target_script(bundle)?;
        let steps: Vec<String> = target
            .step_groups()
            .map(|g| known.get(&group_key(g)).cloned().unwrap_or_else(|| group_sentence(g)))
            .collect();
        Ok(assistant_turn(&steps))
    }
}

/// One sentence per step group, in order.
pub fn template_baseline(script: &ActionScript) -> Vec<String> {
    script.step_groups().map(group_sentence).collect()
}

/// Sentence for a single action.
pub fn template_sentence(action: &AtomicAction) -> String {
    group_sentence(std::slice::from_ref(action))
}

fn group_sentence(group: &[AtomicAction]) -> String {
    let mut clauses = Vec::new();
    let mut i = 0;
    while i < group.len() {
        let sheet = write_sheet(&group[i]);
        let mut j = i + 1;
        if sheet.is_some() {
            while j < group.len() && write_sheet(&group[j]) == sheet {
                j += 1;
            }
        }
        clauses.push(if j - i > 1 { writes_clause(&group[i..j]) } else { clause(&group[i]) });
        i = j;
    }
    let mut out = String::new();
    for (k, c) in clauses.iter().enumerate() {
        if k == 0 {
            out.push_str(c);
        } else {
            out.push_str(", then ");
            out.push_str(&lower_first(c));
        }
    }
    out.push('.');
    out
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Sheet of a well-formed Write, used to merge runs of writes.
fn write_sheet(a: &AtomicAction) -> Option<String> {
    if a.unknown || a.name != "Write" || a.get("value").is_none() {
        return None;
    }
    let r = a.get("range")?.as_range()?;
    Some(r.sheet.unwrap_or_default())
}

fn addr(r: &RangeRef) -> String {
    if r.is_single_cell() {
        r.start.a1()
    } else {
        format!("{}:{}", r.start.a1(), r.end.a1())
    }
}

fn on_sheet(r: &RangeRef) -> String {
    match &r.sheet {
        Some(s) => format!(" on sheet {s}"),
        None => String::new(),
    }
}

fn located(r: &RangeRef) -> String {
    format!("{}{}", addr(r), on_sheet(r))
}

fn value_text(v: &ArgValue) -> String {
    match v {
        ArgValue::Str(s) => format!("\"{s}\""),
        other => other.to_string(),
    }
}

fn writes_clause(run: &[AtomicAction]) -> String {
    let items: Vec<String> = run
        .iter()
        .map(|a| {
            let r = a.get("range").and_then(ArgValue::as_range).expect("checked by write_sheet");
            format!("{} to {}", value_text(a.get("value").expect("checked by write_sheet")), addr(&r))
        })
        .collect();
    let (last, head) = items.split_last().expect("run is non-empty");
    let r = run[0].get("range").and_then(ArgValue::as_range).expect("checked by write_sheet");
    format!("Write {} and {}{}", head.join(", "), last, on_sheet(&r))
}

fn unknown_clause(a: &AtomicAction) -> String {
    let raw = match (a.name.as_str(), a.get("raw")) {
        ("Unknown", Some(v)) => v.to_string(),
        _ => serialize_action(a),
    };
    format!("Perform the operation: {}", raw.trim_end_matches('.'))
}

fn clause(a: &AtomicAction) -> String {
    if a.unknown {
        return unknown_clause(a);
    }
    known_clause(a).unwrap_or_else(|| unknown_clause(a))
}

fn known_clause(a: &AtomicAction) -> Option<String> {
    let range = |k: &str| a.get(k).and_then(ArgValue::as_range);
    let text = |k: &str| a.get(k).map(|v| v.to_string());
    Some(match a.name.as_str() {
        "Write" => {
            let r = range("range")?;
            let kind = if r.is_single_cell() { "cell" } else { "range" };
            match a.get("value")? {
                ArgValue::Formula(f) => format!("Enter the formula {f} in {kind} {}", located(&r)),
                v => format!("Write {} to {kind} {}", value_text(v), located(&r)),
            }
        }
        "CreateSheet" => format!("Create a new sheet named {}", text("sheetName")?),
        "CopyPaste" => {
            let (s, d) = (range("source")?, range("destination")?);
            format!("Copy range {} to {}", located(&s), located(&d))
        }
        "AutoFill" => {
            let (s, d) = (range("source")?, range("destination")?);
            if s.sheet == d.sheet {
                format!("Autofill from {} to {}", addr(&s), located(&d))
            } else {
                format!("Autofill from {} to {}", located(&s), located(&d))
            }
        }
        "CreateChart" => {
            let s = range("source")?;
            let mut out = format!(
                "Create a {} chart named \"{}\" from {}",
                text("chartType")?,
                text("chartName")?,
                located(&s)
            );
            let dest = text("destSheet")?;
            if s.sheet.as_deref() != Some(dest.as_str()) {
                out.push_str(&format!(" and place it on sheet {dest}"));
            }
            out
        }
        "SetChartLegend" => format!("Set the legend of chart \"{}\" to {}", text("chartName")?, text("position")?),
        "Filter" => format!(
            "Filter {} by column {} with criteria {}",
            located(&range("source")?),
            text("fieldIndex")?,
            text("criteria")?
        ),
        "CreatePivotTable" => {
            let mut out = format!(
                "Create a pivot table named \"{}\" on sheet {} from {}",
                text("name")?,
                text("destSheet")?,
                located(&range("source")?)
            );
            let parts: Vec<String> = ["rows", "columns", "values"]
                .iter()
                .filter_map(|k| {
                    let items = a.get(k)?.as_list()?;
                    (!items.is_empty()).then(|| format!("{k} {}", items.join(", ")))
                })
                .collect();
            if !parts.is_empty() {
                out.push_str(" with ");
                out.push_str(&parts.join(" and "));
            }
            out
        }
        "SetFormat" => format!(
            "Set {} to {} for {}",
            text("property")?,
            text("value")?,
            located(&range("range")?)
        ),
        "FreezePanes" => {
            let r = range("range")?;
            format!("Freeze panes at {}{}", r.start.a1(), on_sheet(&r))
        }
        _ => return None,
    })
}
