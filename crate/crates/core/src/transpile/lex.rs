//! Statement splitting, tokenizing and a tiny call-chain parser shared by
//! both dialects.

use super::SourceDialect;
use crate::xwapi::SyntaxError;

/// One logical source statement with comments removed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Statement {
    /// 1-based line where the statement starts.
    pub line: usize,
    pub text: String,
}

/// Split `source` into statements, dropping comments and blank lines.
///
/// Fails only on an unterminated string literal or unbalanced `(`/`[`.
pub(crate) fn split_statements(source: &str, dialect: SourceDialect) -> Result<Vec<Statement>, SyntaxError> {
    match dialect {
        SourceDialect::Vba => split_vba(source),
        SourceDialect::Gas => split_gas(source),
    }
}

struct Depth {
    open: Vec<(char, usize, usize)>,
}

impl Depth {
    fn new() -> Self {
        Depth { open: Vec::new() }
    }

    fn push(&mut self, c: char, line: usize, col: usize) {
        self.open.push((c, line, col));
    }

    fn pop(&mut self, c: char, line: usize, col: usize) -> Result<(), SyntaxError> {
        let want = if c == ')' { '(' } else { '[' };
        match self.open.pop() {
            Some((o, _, _)) if o == want => Ok(()),
            _ => Err(SyntaxError::new(line, col, format!("unbalanced `{c}`"))),
        }
    }

    fn is_zero(&self) -> bool {
        self.open.is_empty()
    }

    fn check_closed(&self) -> Result<(), SyntaxError> {
        match self.open.last() {
            Some(&(c, line, col)) => Err(SyntaxError::new(line, col, format!("unclosed `{c}`"))),
            None => Ok(()),
        }
    }
}

fn split_vba(source: &str) -> Result<Vec<Statement>, SyntaxError> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut pending_line = 0;
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let code = strip_vba_comment(raw, line_no)?;
        let trimmed = code.trim_end();
        if pending.is_empty() {
            pending_line = line_no;
        }
        if let Some(head) = trimmed.strip_suffix(" _").or_else(|| (trimmed == "_").then_some("")) {
            pending.push_str(head);
            pending.push(' ');
            continue;
        }
        pending.push_str(trimmed);
        let text = std::mem::take(&mut pending);
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        check_balance_vba(text, pending_line)?;
        out.push(Statement {
            line: pending_line,
            text: text.to_string(),
        });
    }
    let rest = pending.trim();
    if !rest.is_empty() {
        check_balance_vba(rest, pending_line)?;
        out.push(Statement {
            line: pending_line,
            text: rest.to_string(),
        });
    }
    Ok(out)
}

/// Remove a trailing `'` comment or a `Rem` line, rejecting unterminated strings.
fn strip_vba_comment(line: &str, line_no: usize) -> Result<&str, SyntaxError> {
    let lead = line.trim_start();
    if lead.len() >= 3 && lead[..3].eq_ignore_ascii_case("rem") && lead[3..].chars().next().is_none_or(char::is_whitespace) {
        return Ok("");
    }
    let mut in_str: Option<usize> = None;
    let mut chars = line.char_indices().peekable();
    let mut col = 0;
    while let Some((i, c)) = chars.next() {
        col += 1;
        match (in_str, c) {
            (Some(_), '"') => {
                if chars.peek().is_some_and(|&(_, n)| n == '"') {
                    chars.next();
                    col += 1;
                } else {
                    in_str = None;
                }
            }
            (Some(_), _) => {}
            (None, '"') => in_str = Some(col),
            (None, '\'') => return Ok(&line[..i]),
            (None, _) => {}
        }
    }
    match in_str {
        Some(start) => Err(SyntaxError::new(line_no, start, "unterminated string literal")),
        None => Ok(line),
    }
}

fn check_balance_vba(text: &str, line: usize) -> Result<(), SyntaxError> {
    let mut depth = Depth::new();
    let mut in_str = false;
    for (i, c) in text.chars().enumerate() {
        let col = i + 1;
        match c {
            '"' => in_str = !in_str,
            _ if in_str => {}
            '(' | '[' => depth.push(c, line, col),
            ')' | ']' => depth.pop(c, line, col)?,
            _ => {}
        }
    }
    depth.check_closed()
}

fn split_gas(source: &str) -> Result<Vec<Statement>, SyntaxError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_line = 1;
    let mut depth = Depth::new();
    let (mut line, mut col) = (1usize, 0usize);
    let mut i = 0;

    let flush = |cur: &mut String, cur_line: usize, out: &mut Vec<Statement>| {
        let text = cur.trim();
        if !text.is_empty() {
            out.push(Statement {
                line: cur_line,
                text: text.to_string(),
            });
        }
        cur.clear();
    };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        col += 1;
        if cur.trim().is_empty() {
            cur_line = line;
        }
        match c {
            '\n' => {
                line += 1;
                col = 0;
                let continues = chars[i + 1..]
                    .iter()
                    .find(|c| !c.is_whitespace())
                    .is_some_and(|&c| c == '.');
                if depth.is_zero() && !continues {
                    flush(&mut cur, cur_line, &mut out);
                } else {
                    cur.push(' ');
                }
            }
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '/' if next == Some('*') => {
                i += 2;
                col += 1;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        line += 1;
                        col = 0;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
                i += 2;
                col += 2;
                cur.push(' ');
                continue;
            }
            '"' | '\'' | '`' => {
                let (start_line, start_col) = (line, col);
                cur.push(c);
                i += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(SyntaxError::new(start_line, start_col, "unterminated string literal"));
                        }
                        Some('\\') => {
                            cur.push('\\');
                            if let Some(&e) = chars.get(i + 1) {
                                cur.push(e);
                            }
                            i += 2;
                            col += 2;
                        }
                        Some(&q) if q == c => {
                            cur.push(q);
                            col += 1;
                            break;
                        }
                        Some(&other) => {
                            cur.push(other);
                            i += 1;
                            col += 1;
                        }
                    }
                }
            }
            '(' | '[' => {
                depth.push(c, line, col);
                cur.push(c);
            }
            ')' | ']' => {
                depth.pop(c, line, col)?;
                cur.push(c);
            }
            ';' if depth.is_zero() => flush(&mut cur, cur_line, &mut out),
            '{' if depth.is_zero() => {
                cur.push(c);
                flush(&mut cur, cur_line, &mut out);
            }
            '}' if depth.is_zero() => {
                flush(&mut cur, cur_line, &mut out);
                out.push(Statement {
                    line,
                    text: "}".into(),
                });
            }
            _ => cur.push(c),
        }
        i += 1;
    }
    depth.check_closed()?;
    flush(&mut cur, cur_line, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    /// VBA named-argument marker `:=`.
    NamedArg,
    Punct(char),
}

pub(crate) fn tokenize(text: &str, dialect: SourceDialect) -> Vec<Tok> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse() {
                Ok(n) => out.push(Tok::Num(n)),
                Err(_) => out.push(Tok::Ident(s)),
            }
        } else if c == '"' || (dialect == SourceDialect::Gas && (c == '\'' || c == '`')) {
            let (s, next) = read_string(&chars, i, dialect);
            out.push(Tok::Str(s));
            i = next;
        } else if c == ':' && chars.get(i + 1) == Some(&'=') {
            out.push(Tok::NamedArg);
            i += 2;
        } else {
            out.push(Tok::Punct(c));
            i += 1;
        }
    }
    out
}

fn read_string(chars: &[char], start: usize, dialect: SourceDialect) -> (String, usize) {
    let quote = chars[start];
    let mut s = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        let c = chars[i];
        if c == quote {
            if dialect == SourceDialect::Vba && chars.get(i + 1) == Some(&'"') {
                s.push('"');
                i += 2;
                continue;
            }
            return (s, i + 1);
        }
        if c == '\\' && dialect == SourceDialect::Gas {
            let e = chars.get(i + 1).copied().unwrap_or('\\');
            s.push(match e {
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                '0' => '\0',
                other => other,
            });
            i += 2;
            continue;
        }
        s.push(c);
        i += 1;
    }
    (s, i)
}

/// A parsed expression. Anything beyond literals and call chains is `Other`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Expr {
    Str(String),
    Num(f64),
    Chain(Vec<Call>),
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Call {
    pub name: String,
    /// `None` when the member is used without parentheses.
    pub args: Option<Vec<Arg>>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Arg {
    pub name: Option<String>,
    pub value: Expr,
}

pub(crate) struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Tok>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    pub fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// `ident ( '(' args ')' )? ( '.' ident ( '(' args ')' )? )*`
    pub fn chain(&mut self) -> Option<Vec<Call>> {
        let mut calls = Vec::new();
        loop {
            let Some(Tok::Ident(name)) = self.peek().cloned() else {
                return None;
            };
            self.pos += 1;
            let args = if self.eat_punct('(') { Some(self.call_args()?) } else { None };
            calls.push(Call { name, args });
            if !self.eat_punct('.') {
                return Some(calls);
            }
        }
    }

    /// Arguments after an opening parenthesis, through the closing one.
    fn call_args(&mut self) -> Option<Vec<Arg>> {
        let mut args = Vec::new();
        if self.eat_punct(')') {
            return Some(args);
        }
        loop {
            args.push(self.arg());
            if self.eat_punct(')') {
                return Some(args);
            }
            if !self.eat_punct(',') {
                return None;
            }
        }
    }

    /// One argument, optionally named (`Name:=value`).
    pub fn arg(&mut self) -> Arg {
        if let (Some(Tok::Ident(name)), Some(Tok::NamedArg)) = (self.peek().cloned(), self.peek_at(1)) {
            self.pos += 2;
            return Arg {
                name: Some(name),
                value: self.expr(),
            };
        }
        Arg {
            name: None,
            value: self.expr(),
        }
    }

    /// A literal or call chain; anything more complex is skipped up to the
    /// next top-level `,` or closing bracket and reported as `Other`.
    pub fn expr(&mut self) -> Expr {
        let start = self.pos;
        let primary = match self.peek().cloned() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Some(Expr::Str(s))
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Some(Expr::Num(n))
            }
            Some(Tok::Punct('-')) => match self.peek_at(1).cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 2;
                    Some(Expr::Num(-n))
                }
                _ => None,
            },
            Some(Tok::Ident(_)) => self.chain().map(Expr::Chain),
            _ => None,
        };
        if let Some(e) = primary {
            if self.at_terminator() {
                return e;
            }
        }
        self.pos = start;
        self.skip_to_terminator();
        Expr::Other
    }

    fn at_terminator(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Punct(',' | ')' | ']')))
    }

    fn skip_to_terminator(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            match t {
                Tok::Punct('(' | '[' | '{') => depth += 1,
                Tok::Punct(')' | ']' | '}') if depth > 0 => depth -= 1,
                Tok::Punct(',' | ')' | ']') if depth == 0 => return,
                _ => {}
            }
            self.pos += 1;
        }
    }
}
