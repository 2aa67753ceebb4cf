use super::catalog::{is_identifier, ActionCatalog, ArgType};
use super::range::{parse_cell, parse_range};
use super::{split_list, ActionArg, ActionScript, ArgValue, AtomicAction, SyntaxError};

/// Parse a bulleted action script.
///
/// Every non-blank line holds exactly one action. Names missing from
/// `catalog` are flagged `unknown` rather than rejected.
pub fn parse_script(text: &str, catalog: &ActionCatalog) -> Result<ActionScript, SyntaxError> {
    let mut steps = Vec::new();
    let mut groups: Vec<usize> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (opens_group, body_start) = split_bullet(line);
        let base = line[..body_start].chars().count();
        let action = parse_action_at(&line[body_start..], line_no, base, catalog)?;
        steps.push(action);
        match groups.last_mut() {
            Some(last) if !opens_group => *last += 1,
            _ => groups.push(1),
        }
    }

    if steps.is_empty() {
        return Err(SyntaxError::new(1, 1, "empty script"));
    }
    Ok(ActionScript { steps, groups })
}

/// Parse one `Name(key=value, ...)` call without a bullet prefix.
pub fn parse_action(text: &str, catalog: &ActionCatalog) -> Result<AtomicAction, SyntaxError> {
    parse_action_at(text, 1, 0, catalog)
}

/// Canonical text form. Each group's first action gets `- - `, the rest `  - `.
pub fn serialize_script(script: &ActionScript) -> String {
    let mut lines = Vec::with_capacity(script.steps.len());
    for group in script.step_groups() {
        for (i, action) in group.iter().enumerate() {
            let bullet = if i == 0 { "- - " } else { "  - " };
            lines.push(format!("{bullet}{}", serialize_action(action)));
        }
    }
    lines.join("\n")
}

pub fn serialize_action(action: &AtomicAction) -> String {
    let args: Vec<String> = action
        .args
        .iter()
        .map(|a| format!("{}={}", a.key, render_value(&a.value)))
        .collect();
    format!("{}({})", action.name, args.join(", "))
}

fn render_value(value: &ArgValue) -> String {
    match value {
        ArgValue::Number(n) => format!("{n}"),
        other => quote(&other.to_string()),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Returns whether the line opens a new group and the byte offset of the action text.
fn split_bullet(line: &str) -> (bool, usize) {
    let indent = line.len() - line.trim_start().len();
    let rest = &line[indent..];
    let Some(after_dash) = rest.strip_prefix('-') else {
        return (true, indent);
    };
    let gap = after_dash.len() - after_dash.trim_start().len();
    let after_ws = &after_dash[gap..];
    if let Some(after_second) = after_ws.strip_prefix('-') {
        let gap2 = after_second.len() - after_second.trim_start().len();
        (true, indent + 1 + gap + 1 + gap2)
    } else {
        (false, indent + 1 + gap)
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        let column = self.text[..self.pos].chars().count() + 1 + self.base;
        SyntaxError::new(self.line, column, message)
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of line"))),
        }
    }

    fn identifier(&mut self, what: &str) -> Result<&'a str, SyntaxError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let ident = &self.text[start..self.pos];
        if !is_identifier(ident) {
            self.pos = start;
            return Err(self.error(format!("expected {what}")));
        }
        Ok(ident)
    }

    fn string(&mut self, quote: char) -> Result<String, SyntaxError> {
        let open = self.pos;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    self.pos = open;
                    return Err(self.error("unterminated string literal"));
                }
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some(c @ ('"' | '\'' | '\\')) => out.push(c),
                    Some(c) => return Err(self.error(format!("unknown escape `\\{c}`"))),
                    None => {
                        self.pos = open;
                        return Err(self.error("unterminated string literal"));
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn value(&mut self) -> Result<ArgValue, SyntaxError> {
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                let s = self.string(q)?;
                Ok(if s.starts_with('=') { ArgValue::Formula(s) } else { ArgValue::Str(s) })
            }
            Some(c) if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, '-' | '+' | '.')) {
                    self.bump();
                }
                let token = &self.text[start..self.pos];
                match token.parse::<f64>() {
                    Ok(n) if n.is_finite() && !token.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') => {
                        Ok(ArgValue::Number(n))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("invalid number `{token}`")))
                    }
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => Ok(ArgValue::Str(self.identifier("value")?.to_string())),
            Some(c) => Err(self.error(format!("unexpected `{c}` in argument value"))),
            None => Err(self.error("missing argument value")),
        }
    }
}

fn parse_action_at(text: &str, line: usize, base: usize, catalog: &ActionCatalog) -> Result<AtomicAction, SyntaxError> {
    let mut cur = Cursor { text, pos: 0, line, base };
    cur.skip_ws();
    let name = cur.identifier("action name")?.to_string();
    cur.skip_ws();
    cur.expect('(')?;

    let spec = catalog.get(&name);
    let mut args: Vec<ActionArg> = Vec::new();
    loop {
        cur.skip_ws();
        if cur.peek() == Some(')') {
            cur.bump();
            break;
        }
        let key_pos = cur.pos;
        let raw_key = cur.identifier("argument name")?;
        let key = catalog.canonical_key(&name, raw_key).to_string();
        if args.iter().any(|a| a.key == key) {
            cur.pos = key_pos;
            return Err(cur.error(format!("duplicate argument `{key}`")));
        }
        cur.skip_ws();
        cur.expect('=')?;
        cur.skip_ws();
        let mut value = cur.value()?;
        if let Some(param) = spec.and_then(|s| s.param(&key)) {
            value = coerce(value, param.ty);
        }
        args.push(ActionArg { key, value });
        cur.skip_ws();
        match cur.peek() {
            Some(',') => {
                cur.bump();
            }
            Some(')') => {
                cur.bump();
                break;
            }
            Some(c) => return Err(cur.error(format!("expected `,` or `)`, found `{c}`"))),
            None => return Err(cur.error("unbalanced parentheses")),
        }
    }
    cur.skip_ws();
    if let Some(c) = cur.peek() {
        return Err(cur.error(format!("unexpected `{c}` after action")));
    }

    Ok(AtomicAction {
        unknown: spec.is_none(),
        name,
        args,
    })
}

/// Apply the catalog's declared type to a lexically parsed value. Values
/// that do not fit are left alone for `validate_script` to report.
fn coerce(value: ArgValue, ty: ArgType) -> ArgValue {
    match (ty, value) {
        (ArgType::Range, ArgValue::Str(s)) => parse_range(&s).map(ArgValue::Range).unwrap_or(ArgValue::Str(s)),
        (ArgType::Cell, ArgValue::Str(s)) => parse_cell(&s).map(ArgValue::Cell).unwrap_or(ArgValue::Str(s)),
        (ArgType::List, ArgValue::Str(s)) => ArgValue::List(split_list(&s)),
        (_, v) => v,
    }
}
