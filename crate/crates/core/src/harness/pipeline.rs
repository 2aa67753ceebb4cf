use serde::Serialize;

use super::HarnessError;
use crate::dataset::TaskInstance;
use crate::prompting::{build_prompt, doc_snippets_for, summarize, PromptSettings, Summarizer};
use crate::transpile::{transpile, SourceDialect};
use crate::workbook::{compare, execute, DiffReport, Workbook, DEFAULT_TOLERANCE};
use crate::xwapi::{serialize_script, ActionCatalog, Diagnostic};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub xwapi: String,
    pub diagnostics: Vec<Diagnostic>,
    pub steps: Vec<String>,
    #[serde(skip)]
    pub workbook: Workbook,
    /// Against the expected workbook, or the result against itself.
    pub diff: DiffReport,
}

/// Transpile a recorded macro, run it on `seed`, and describe it with
/// `backend` (zero-shot).
pub fn run_pipeline(
    source: &str,
    dialect: SourceDialect,
    seed: Workbook,
    backend: &dyn Summarizer,
    expected: Option<&Workbook>,
    settings: &PromptSettings,
) -> Result<PipelineOutput, HarnessError> {
    let stage = |stage, e: &dyn std::fmt::Display| HarnessError::Stage {
        stage,
        message: e.to_string(),
    };
    let catalog = ActionCatalog::seed();
    let (script, diagnostics) = transpile(source, dialect, &catalog).map_err(|e| stage("transpile", &e))?;
    let xwapi = serialize_script(&script);
    let sheet_state = seed.describe();
    let book = execute(&script, seed).map_err(|e| stage("execute", &e))?;

    let target = TaskInstance {
        id: "pipeline".into(),
        workbook: String::new(),
        categories: Vec::new(),
        code: xwapi.clone(),
        reference_steps: Vec::new(),
        sheet_state,
        seed_workbook: None,
    };
    let bundle = build_prompt(&target, &[], &doc_snippets_for(&xwapi, &catalog), settings)
        .map_err(|e| stage("prompt", &e))?;
    let steps = summarize(&bundle, backend).map_err(|e| stage("summarize", &e))?.steps;
    let diff = compare(expected.unwrap_or(&book), &book, DEFAULT_TOLERANCE);
    Ok(PipelineOutput {
        xwapi,
        diagnostics,
        steps,
        workbook: book,
        diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::TemplateBaseline;
    use crate::workbook::CellValue;
    use crate::xwapi::Coord;

    const COPY_HELLO_VBA: &str = "Range(\"A1\").Value = \"Hello\"\nRange(\"A1:A5\").Copy Destination:=Range(\"B1:B5\")\n";

    #[test]
    fn two_actions_two_sentences() {
        let out = run_pipeline(
            COPY_HELLO_VBA,
            SourceDialect::Vba,
            Workbook::blank(),
            &TemplateBaseline::default(),
            None,
            &PromptSettings::default(),
        )
        .unwrap();
        assert_eq!(out.xwapi.lines().count(), 2);
        assert_eq!(out.steps.len(), 2);
        assert!(out.diff.equivalent);
    }

    #[test]
    fn mismatch_and_stage_labels() {
        let mut expected = Workbook::blank();
        expected.sheets[0].set(Coord::new(1, 1), CellValue::Text("Bye".into()));
        let out = run_pipeline(
            COPY_HELLO_VBA,
            SourceDialect::Vba,
            Workbook::blank(),
            &TemplateBaseline::default(),
            Some(&expected),
            &PromptSettings::default(),
        )
        .unwrap();
        assert!(!out.diff.equivalent);

        let err = run_pipeline(
            "Range(\"A1).Value = 1",
            SourceDialect::Vba,
            Workbook::blank(),
            &TemplateBaseline::default(),
            None,
            &PromptSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::Stage { stage: "transpile", .. }));
    }
}
