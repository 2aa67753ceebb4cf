//! Few-shot chat prompts and the summarization backends that answer them.

mod remote;
mod template;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::TaskInstance;
use crate::xwapi::{parse_script, ActionCatalog, ActionScript};

pub use remote::RemoteChat;
pub use template::{template_baseline, template_sentence, ExemplarBaseline, TemplateBaseline};

/// Developer instruction placed first in every summarization prompt.
pub const DEVELOPER_INSTRUCTION: &str = "Summarize the each sub-step of instructions into explanations in natural language.
Be brief and do not provide verbose explanations.
Do not add text formatting such as bold, italic.
Do not provide extra notes or postscriptum.
Avoid redundant steps and provide minimal steps";

pub const DOCS_HEADER: &str = "Here is the supplementary documentation you can reference:";
pub const STATE_HEADER: &str = "Here is the corresponding sheet state:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Developer,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Developer => "developer",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSettings {
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub timeout_seconds: u64,
    /// Estimated token limit; `None` disables the check.
    pub context_budget: Option<usize>,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            temperature: 0.5,
            max_new_tokens: 256,
            timeout_seconds: 50,
            context_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub messages: Vec<ChatMessage>,
    pub shot_count: usize,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub timeout_seconds: u64,
}

impl PromptBundle {
    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(self.messages.iter().map(|m| m.content.as_str()))
    }

    /// The final user turn.
    pub fn target(&self) -> Option<&ChatMessage> {
        self.messages.last().filter(|m| m.role == Role::User)
    }

    /// Exemplar (user, assistant) content pairs, in order.
    pub fn exemplars(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        let end = self.messages.len().saturating_sub(1);
        self.messages[1.min(end)..end]
            .chunks(2)
            .filter(|p| p.len() == 2)
            .map(|p| (p[0].content.as_str(), p[1].content.as_str()))
    }
}

/// Characters divided by four, rounded up.
pub fn estimate_tokens<'a>(texts: impl IntoIterator<Item = &'a str>) -> usize {
    texts.into_iter().map(|t| t.chars().count()).sum::<usize>().div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt needs about {estimated} tokens but the context budget is {budget}")]
    Size { estimated: usize, budget: usize },
    #[error("exemplar `{0}` is the target instance")]
    ExemplarIsTarget(String),
}

/// Render strings as a Python list literal, the shape models see for the
/// documentation block.
pub fn python_list(items: &[String]) -> String {
    let parts: Vec<String> = items.iter().map(|s| python_str(s)).collect();
    format!("[{}]", parts.join(", "))
}

fn python_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// User turn: code, documentation list, sheet state.
pub fn user_turn(code: &str, doc_snippets: &[String], sheet_state: &str) -> String {
    format!(
        "{}\n\n{DOCS_HEADER}\n{}\n{STATE_HEADER}\nSheet state: {}",
        code.trim_end(),
        python_list(doc_snippets),
        sheet_state
    )
}

/// Code block of a user turn built by [`user_turn`].
pub fn code_of_user_turn(content: &str) -> &str {
    match content.find(&format!("\n\n{DOCS_HEADER}")) {
        Some(at) => &content[..at],
        None => content,
    }
}

/// Assistant turn: one `- Step k. text` line per step.
pub fn assistant_turn(steps: &[String]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(k, s)| format!("- Step {}. {}", k + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Documentation lines for the actions used by `code`, in order of first use.
/// Falls back to the whole catalog when the code does not parse.
pub fn doc_snippets_for(code: &str, catalog: &ActionCatalog) -> Vec<String> {
    let Ok(script) = parse_script(code, catalog) else {
        return catalog.iter().map(|s| s.doc_line()).collect();
    };
    let mut seen: Vec<&str> = Vec::new();
    for a in &script.steps {
        if !seen.contains(&a.name.as_str()) {
            seen.push(&a.name);
        }
    }
    seen.iter().filter_map(|n| catalog.get(n)).map(|s| s.doc_line()).collect()
}

pub fn build_prompt(
    target: &TaskInstance,
    exemplars: &[TaskInstance],
    doc_snippets: &[String],
    settings: &PromptSettings,
) -> Result<PromptBundle, PromptError> {
    if let Some(e) = exemplars.iter().find(|e| e.id == target.id) {
        return Err(PromptError::ExemplarIsTarget(e.id.clone()));
    }
    let mut messages = vec![ChatMessage::new(Role::Developer, DEVELOPER_INSTRUCTION)];
    for e in exemplars {
        messages.push(ChatMessage::new(Role::User, user_turn(&e.code, doc_snippets, &e.sheet_state)));
        messages.push(ChatMessage::new(Role::Assistant, assistant_turn(&e.reference_steps)));
    }
    messages.push(ChatMessage::new(
        Role::User,
        user_turn(&target.code, doc_snippets, &target.sheet_state),
    ));
    finish(messages, exemplars.len(), settings)
}

pub(crate) fn finish(messages: Vec<ChatMessage>, shot_count: usize, settings: &PromptSettings) -> Result<PromptBundle, PromptError> {
    let bundle = PromptBundle {
        messages,
        shot_count,
        temperature: settings.temperature,
        max_new_tokens: settings.max_new_tokens,
        timeout_seconds: settings.timeout_seconds,
    };
    if let Some(budget) = settings.context_budget {
        let estimated = bundle.estimated_tokens();
        if estimated > budget {
            return Err(PromptError::Size { estimated, budget });
        }
    }
    Ok(bundle)
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("request timed out after {0} s")]
    Timeout(u64),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cannot read the response: {0}")]
    Parse(String),
    #[error("environment variable `{0}` with the API key is not set")]
    MissingAuth(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SummarizeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("completion has no `- Step k.` lines")]
    NoSteps { raw: String },
}

/// Anything that can answer a prompt bundle with completion text.
pub trait Summarizer: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, bundle: &PromptBundle) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: Vec<String>,
    pub raw: String,
}

/// Extract the text of `- Step k.` lines, in order. Empty steps are dropped.
pub fn parse_steps(raw: &str) -> Result<Vec<String>, SummarizeError> {
    let mut steps = Vec::new();
    for line in raw.lines() {
        let Some(rest) = line.trim().strip_prefix('-') else { continue };
        let Some(rest) = rest.trim_start().strip_prefix("Step") else { continue };
        let rest = rest.trim_start();
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 {
            continue;
        }
        let Some(text) = rest[digits..].strip_prefix('.').or_else(|| rest[digits..].strip_prefix(':')) else {
            continue;
        };
        let text = text.trim();
        if !text.is_empty() {
            steps.push(text.to_string());
        }
    }
    if steps.is_empty() {
        return Err(SummarizeError::NoSteps { raw: raw.to_string() });
    }
    Ok(steps)
}

pub fn summarize(bundle: &PromptBundle, backend: &dyn Summarizer) -> Result<Summary, SummarizeError> {
    let raw = backend.complete(bundle)?;
    let steps = parse_steps(&raw)?;
    Ok(Summary { steps, raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    RemoteChat,
    TemplateBaseline,
    ExemplarBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Label used in reports; defaults to the model name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default)]
    pub context_budget: Option<usize>,
    /// Exemplars per prompt; the run default applies when unset.
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_retries() -> u32 {
    1
}

impl BackendConfig {
    pub fn template(name: &str) -> Self {
        BackendConfig {
            kind: BackendKind::TemplateBaseline,
            name: Some(name.to_string()),
            endpoint: None,
            model_name: name.to_string(),
            auth_env: None,
            context_budget: None,
            shots: None,
            retries: default_retries(),
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.model_name)
    }

    pub fn is_remote(&self) -> bool {
        self.kind == BackendKind::RemoteChat
    }

    pub fn check(&self) -> Result<(), BackendError> {
        if self.label().is_empty() {
            return Err(BackendError::Config("backend needs a name or model_name".into()));
        }
        if self.is_remote() {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(BackendError::Config(format!("remote backend `{}` needs an endpoint", self.label())));
            }
            if self.auth_env.as_deref().is_none_or(str::is_empty) {
                return Err(BackendError::Config(format!("remote backend `{}` needs auth_env", self.label())));
            }
            if self.model_name.is_empty() {
                return Err(BackendError::Config(format!("remote backend `{}` needs model_name", self.label())));
            }
        }
        Ok(())
    }

    /// Instantiate the backend. Remote backends read their token here.
    pub fn build(&self) -> Result<Box<dyn Summarizer>, BackendError> {
        self.check()?;
        Ok(match self.kind {
            BackendKind::TemplateBaseline => Box::new(TemplateBaseline::named(self.label())),
            BackendKind::ExemplarBaseline => Box::new(ExemplarBaseline::named(self.label())),
            BackendKind::RemoteChat => Box::new(RemoteChat::from_config(self)?),
        })
    }
}

/// Parse the code block of a prompt's target turn.
pub(crate) fn target_script(bundle: &PromptBundle) -> Result<ActionScript, BackendError> {
    let target = bundle
        .target()
        .ok_or_else(|| BackendError::Parse("prompt has no final user turn".into()))?;
    parse_script(code_of_user_turn(&target.content), &ActionCatalog::seed()).map_err(|e| BackendError::Parse(e.to_string()))
}
