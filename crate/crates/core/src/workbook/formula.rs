//! Formula lexing, parsing, evaluation and relative reference shifting.
//!
//! Supported: numbers, `"text"`, `TRUE`/`FALSE`, cell and range references
//! (optionally sheet-qualified), `+ - * / ^`, parentheses and the functions
//! `SUM`, `AVERAGE`, `MIN`, `MAX` and `COUNT`. Operator precedence follows
//! spreadsheet convention: unary sign binds tightest, then `^`, then `* /`,
//! then `+ -`, all left-associative.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{CellValue, Workbook};
use crate::xwapi::{column_index, quote_sheet_name, Coord, MAX_ROW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    Ref,
    Cycle,
    Value,
    Div0,
    Num,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Ref => "#REF!",
            ErrorKind::Cycle => "#CYCLE!",
            ErrorKind::Value => "#VALUE!",
            ErrorKind::Div0 => "#DIV/0!",
            ErrorKind::Num => "#NUM!",
        })
    }
}

impl ErrorKind {
    pub fn parse(code: &str) -> Option<Self> {
        Some(match code.to_ascii_uppercase().as_str() {
            "#REF!" => ErrorKind::Ref,
            "#CYCLE!" => ErrorKind::Cycle,
            "#VALUE!" => ErrorKind::Value,
            "#DIV/0!" => ErrorKind::Div0,
            "#NUM!" => ErrorKind::Num,
            _ => return None,
        })
    }
}

/// An error value produced by formula evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormulaError {
    pub kind: ErrorKind,
    pub message: String,
}

impl FormulaError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        FormulaError {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.message)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Str(String),
    Bool(bool),
    Error(ErrorKind),
    Ref { sheet: Option<String>, coord: Coord, absolute: bool },
    Func(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    Colon,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    start: usize,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, String> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let tok = match c {
            '0'..='9' | '.' => {
                let mut j = i;
                while j < src.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < src.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < src.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < src.len() && bytes[k].is_ascii_digit() {
                        while k < src.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let n: f64 = src[i..j].parse().map_err(|_| format!("invalid number `{}`", &src[i..j]))?;
                i = j;
                Tok::Number(n)
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    let Some(ch) = src[j..].chars().next() else {
                        return Err("unterminated string".into());
                    };
                    j += ch.len_utf8();
                    if ch == '"' {
                        if src[j..].starts_with('"') {
                            s.push('"');
                            j += 1;
                            continue;
                        }
                        break;
                    }
                    s.push(ch);
                }
                i = j;
                Tok::Str(s)
            }
            '#' => {
                let end = src[i..]
                    .find('!')
                    .map(|k| i + k + 1)
                    .ok_or_else(|| "malformed error literal".to_string())?;
                let kind = ErrorKind::parse(&src[i..end]).ok_or_else(|| format!("unknown error `{}`", &src[i..end]))?;
                i = end;
                Tok::Error(kind)
            }
            '\'' => {
                let mut name = String::new();
                let mut j = i + 1;
                loop {
                    let Some(ch) = src[j..].chars().next() else {
                        return Err("unterminated sheet name".into());
                    };
                    j += ch.len_utf8();
                    if ch == '\'' {
                        if src[j..].starts_with('\'') {
                            name.push('\'');
                            j += 1;
                            continue;
                        }
                        break;
                    }
                    name.push(ch);
                }
                if !src[j..].starts_with('!') {
                    return Err("expected `!` after sheet name".into());
                }
                j += 1;
                let (tok, next) = lex_ref(src, j, Some(name))?;
                i = next;
                tok
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                let mut j = i;
                while j < src.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'$' || bytes[j] == b'.') {
                    j += 1;
                }
                let word = &src[i..j];
                if src[j..].starts_with('!') {
                    let (tok, next) = lex_ref(src, j + 1, Some(word.to_string()))?;
                    i = next;
                    tok
                } else if src[j..].trim_start().starts_with('(') {
                    i = j;
                    Tok::Func(word.to_ascii_uppercase())
                } else if word.eq_ignore_ascii_case("TRUE") || word.eq_ignore_ascii_case("FALSE") {
                    i = j;
                    Tok::Bool(word.eq_ignore_ascii_case("TRUE"))
                } else {
                    let (tok, next) = lex_ref(src, i, None)?;
                    i = next;
                    tok
                }
            }
            '+' | '-' | '*' | '/' | '^' => {
                i += 1;
                Tok::Op(c)
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            other => return Err(format!("unexpected `{other}`")),
        };
        out.push(Spanned { tok, start, end: i });
    }
    Ok(out)
}

fn lex_ref(src: &str, at: usize, sheet: Option<String>) -> Result<(Tok, usize), String> {
    let bytes = src.as_bytes();
    let mut j = at;
    let mut absolute = false;
    if j < src.len() && bytes[j] == b'$' {
        absolute = true;
        j += 1;
    }
    let letters = j;
    while j < src.len() && bytes[j].is_ascii_alphabetic() {
        j += 1;
    }
    let col_text = &src[letters..j];
    if j < src.len() && bytes[j] == b'$' {
        absolute = true;
        j += 1;
    }
    let digits = j;
    while j < src.len() && bytes[j].is_ascii_digit() {
        j += 1;
    }
    let row_text = &src[digits..j];
    let trailing_word = j < src.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_');
    let name = || src[at..j.max(at + 1).min(src.len())].to_string();
    if col_text.is_empty() || row_text.is_empty() || trailing_word {
        return Err(format!("unknown name `{}`", name()));
    }
    let column = column_index(col_text).ok_or_else(|| format!("column out of range in `{}`", name()))?;
    let row: u32 = row_text.parse().map_err(|_| format!("row out of range in `{}`", name()))?;
    if row == 0 || row > MAX_ROW {
        return Err(format!("row out of range in `{}`", name()));
    }
    Ok((
        Tok::Ref {
            sheet,
            coord: Coord::new(column, row),
            absolute,
        },
        j,
    ))
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Number(f64),
    Str(String),
    Bool(bool),
    Error(ErrorKind),
    Cell { sheet: Option<String>, at: Coord },
    Range { sheet: Option<String>, start: Coord, end: Coord },
    Neg(Box<Expr>),
    Binary(char, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn additive(&mut self) -> Result<Expr, String> {
        let mut lhs = self.multiplicative()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.multiplicative()?));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, String> {
        let mut lhs = self.power()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.power()?));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            lhs = Expr::Binary('^', Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, String> {
        match self.next() {
            Some(Tok::Number(n)) => Ok(Expr::Number(n)),
            Some(Tok::Str(s)) => Ok(Expr::Str(s)),
            Some(Tok::Bool(b)) => Ok(Expr::Bool(b)),
            Some(Tok::Error(k)) => Ok(Expr::Error(k)),
            Some(Tok::Ref { sheet, coord, .. }) => {
                if let Some(Tok::Colon) = self.peek() {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Ref { sheet: None, coord: end, .. }) => Ok(Expr::Range {
                            sheet,
                            start: Coord::new(coord.column.min(end.column), coord.row.min(end.row)),
                            end: Coord::new(coord.column.max(end.column), coord.row.max(end.row)),
                        }),
                        _ => Err("expected a cell reference after `:`".into()),
                    }
                } else {
                    Ok(Expr::Cell { sheet, at: coord })
                }
            }
            Some(Tok::Func(name)) => {
                if self.next() != Some(Tok::LParen) {
                    return Err("expected `(`".into());
                }
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::RParen) {
                    self.pos += 1;
                    return Ok(Expr::Call(name, args));
                }
                loop {
                    args.push(self.additive()?);
                    match self.next() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RParen) => break,
                        _ => return Err("expected `,` or `)` in argument list".into()),
                    }
                }
                Ok(Expr::Call(name, args))
            }
            Some(Tok::LParen) => {
                let e = self.additive()?;
                if self.next() != Some(Tok::RParen) {
                    return Err("unbalanced parentheses".into());
                }
                Ok(e)
            }
            Some(t) => Err(format!("unexpected {t:?}")),
            None => Err("unexpected end of formula".into()),
        }
    }
}

fn parse(source: &str) -> Result<Expr, String> {
    let body = source.strip_prefix('=').ok_or("formula must begin with `=`")?;
    let toks = lex(body)?.into_iter().map(|s| s.tok).collect();
    let mut p = Parser { toks, pos: 0 };
    let e = p.additive()?;
    if p.pos < p.toks.len() {
        return Err(format!("unexpected {:?}", p.toks[p.pos]));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Reference shifting

/// Whether the formula text contains an absolute (`$`) reference.
pub fn has_absolute_reference(source: &str) -> bool {
    source
        .strip_prefix('=')
        .and_then(|b| lex(b).ok())
        .is_some_and(|toks| toks.iter().any(|t| matches!(t.tok, Tok::Ref { absolute: true, .. })))
}

/// Shift every cell reference in `source` by `(d_col, d_row)`.
///
/// References pushed off the grid become `#REF!`. `$` markers are dropped
/// and the reference is shifted like any other. Text that fails to lex is
/// returned unchanged.
pub fn shift_formula(source: &str, d_col: i64, d_row: i64) -> String {
    let Some(body) = source.strip_prefix('=') else {
        return source.to_string();
    };
    let Ok(toks) = lex(body) else {
        return source.to_string();
    };
    let mut out = String::with_capacity(source.len());
    out.push('=');
    let mut last = 0;
    for t in &toks {
        out.push_str(&body[last..t.start]);
        match &t.tok {
            Tok::Ref { sheet, coord, .. } => {
                if let Some(s) = sheet {
                    out.push_str(&quote_sheet_name(s));
                    out.push('!');
                }
                match coord.offset(d_col, d_row) {
                    Some(c) => out.push_str(&c.a1()),
                    None => out.push_str("#REF!"),
                }
            }
            _ => out.push_str(&body[t.start..t.end]),
        }
        last = t.end;
    }
    out.push_str(&body[last..]);
    out
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Scalar(CellValue),
    Range { sheet: usize, start: Coord, end: Coord },
}

enum Slot {
    InProgress,
    Done(CellValue),
}

/// Resolves cell values, evaluating formula cells on demand and memoizing
/// the results. Cells revisited while still in progress are cycles.
struct Evaluator<'a> {
    book: &'a Workbook,
    memo: HashMap<(usize, Coord), Slot>,
}

impl<'a> Evaluator<'a> {
    fn new(book: &'a Workbook) -> Self {
        Evaluator {
            book,
            memo: HashMap::new(),
        }
    }

    fn cell(&mut self, sheet: usize, at: Coord) -> CellValue {
        let stored = self.book.sheets[sheet].get(at);
        let CellValue::Formula { source, .. } = stored else {
            return stored.clone();
        };
        match self.memo.get(&(sheet, at)) {
            Some(Slot::Done(v)) => return v.clone(),
            Some(Slot::InProgress) => {
                return CellValue::Error(FormulaError::new(
                    ErrorKind::Cycle,
                    format!("circular reference through {}!{}", self.book.sheets[sheet].name, at),
                ))
            }
            None => {}
        }
        self.memo.insert((sheet, at), Slot::InProgress);
        let v = self.formula(sheet, source);
        self.memo.insert((sheet, at), Slot::Done(v.clone()));
        v
    }

    fn formula(&mut self, sheet: usize, source: &str) -> CellValue {
        match parse(source) {
            Ok(expr) => match self.eval(sheet, &expr) {
                Ok(Val::Scalar(CellValue::Empty)) => CellValue::Number(0.0),
                Ok(Val::Scalar(v)) => v,
                Ok(Val::Range { .. }) => {
                    CellValue::Error(FormulaError::new(ErrorKind::Value, "a range cannot be used as a value"))
                }
                Err(e) => CellValue::Error(e),
            },
            Err(msg) => CellValue::Error(FormulaError::new(ErrorKind::Value, format!("cannot parse `{source}`: {msg}"))),
        }
    }

    fn sheet_of(&self, current: usize, sheet: &Option<String>) -> Result<usize, FormulaError> {
        match sheet {
            None => Ok(current),
            Some(name) => self
                .book
                .sheet_index(name)
                .ok_or_else(|| FormulaError::new(ErrorKind::Ref, format!("no sheet named `{name}`"))),
        }
    }

    fn eval(&mut self, sheet: usize, expr: &Expr) -> Result<Val, FormulaError> {
        Ok(match expr {
            Expr::Number(n) => Val::Scalar(CellValue::Number(*n)),
            Expr::Str(s) => Val::Scalar(CellValue::Text(s.clone())),
            Expr::Bool(b) => Val::Scalar(CellValue::Bool(*b)),
            Expr::Error(k) => return Err(FormulaError::new(*k, "error literal")),
            Expr::Cell { sheet: s, at } => {
                let idx = self.sheet_of(sheet, s)?;
                match self.cell(idx, *at) {
                    CellValue::Error(e) => return Err(e),
                    v => Val::Scalar(v),
                }
            }
            Expr::Range { sheet: s, start, end } => Val::Range {
                sheet: self.sheet_of(sheet, s)?,
                start: *start,
                end: *end,
            },
            Expr::Neg(inner) => {
                let v = self.eval(sheet, inner)?;
                Val::Scalar(CellValue::Number(-to_number(&v)?))
            }
            Expr::Binary(op, l, r) => {
                let a = to_number(&self.eval(sheet, l)?)?;
                let b = to_number(&self.eval(sheet, r)?)?;
                let v = match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => {
                        if b == 0.0 {
                            return Err(FormulaError::new(ErrorKind::Div0, "division by zero"));
                        }
                        a / b
                    }
                    '^' => a.powf(b),
                    _ => unreachable!("parser only emits arithmetic operators"),
                };
                if !v.is_finite() {
                    return Err(FormulaError::new(ErrorKind::Num, "result is not a finite number"));
                }
                Val::Scalar(CellValue::Number(v))
            }
            Expr::Call(name, args) => Val::Scalar(self.call(sheet, name, args)?),
        })
    }

    fn call(&mut self, sheet: usize, name: &str, args: &[Expr]) -> Result<CellValue, FormulaError> {
        if !matches!(name, "SUM" | "AVERAGE" | "MIN" | "MAX" | "COUNT") {
            return Err(FormulaError::new(ErrorKind::Value, format!("unsupported function {name}")));
        }
        let mut nums = Vec::new();
        for arg in args {
            match self.eval(sheet, arg)? {
                Val::Range { sheet: s, start, end } => {
                    for row in start.row..=end.row {
                        for col in start.column..=end.column {
                            match self.cell(s, Coord::new(col, row)) {
                                CellValue::Number(n) => nums.push(n),
                                CellValue::Error(e) if name != "COUNT" => return Err(e),
                                _ => {}
                            }
                        }
                    }
                }
                Val::Scalar(v) => match v {
                    CellValue::Number(n) => nums.push(n),
                    CellValue::Bool(b) => nums.push(if b { 1.0 } else { 0.0 }),
                    CellValue::Empty => {}
                    CellValue::Text(t) => match t.trim().parse::<f64>() {
                        Ok(n) => nums.push(n),
                        Err(_) if name == "COUNT" => {}
                        Err(_) => return Err(FormulaError::new(ErrorKind::Value, format!("`{t}` is not a number"))),
                    },
                    CellValue::Error(e) => return Err(e),
                    CellValue::Formula { .. } => unreachable!("cell reads resolve formulas"),
                },
            }
        }
        let n = nums.len() as f64;
        Ok(CellValue::Number(match name {
            "SUM" => nums.iter().sum(),
            "COUNT" => n,
            "AVERAGE" => {
                if nums.is_empty() {
                    return Err(FormulaError::new(ErrorKind::Div0, "AVERAGE of no numbers"));
                }
                nums.iter().sum::<f64>() / n
            }
            "MIN" => nums.iter().copied().reduce(f64::min).unwrap_or(0.0),
            "MAX" => nums.iter().copied().reduce(f64::max).unwrap_or(0.0),
            _ => unreachable!(),
        }))
    }
}

fn to_number(v: &Val) -> Result<f64, FormulaError> {
    match v {
        Val::Scalar(CellValue::Number(n)) => Ok(*n),
        Val::Scalar(CellValue::Empty) => Ok(0.0),
        Val::Scalar(CellValue::Bool(b)) => Ok(if *b { 1.0 } else { 0.0 }),
        Val::Scalar(CellValue::Text(t)) => t
            .trim()
            .parse::<f64>()
            .map_err(|_| FormulaError::new(ErrorKind::Value, format!("`{t}` is not a number"))),
        Val::Scalar(CellValue::Error(e)) => Err(e.clone()),
        Val::Scalar(CellValue::Formula { .. }) => unreachable!("cell reads resolve formulas"),
        Val::Range { .. } => Err(FormulaError::new(ErrorKind::Value, "a range cannot be used as a number")),
    }
}

/// Evaluate `source` as if it were entered on `sheet`, recomputing every
/// referenced formula from scratch (caches are ignored).
pub fn evaluate_formula(book: &Workbook, sheet: &str, source: &str) -> CellValue {
    let Some(idx) = book.sheet_index(sheet) else {
        return CellValue::Error(FormulaError::new(ErrorKind::Ref, format!("no sheet named `{sheet}`")));
    };
    if !source.starts_with('=') {
        return CellValue::Error(FormulaError::new(ErrorKind::Value, "formula must begin with `=`"));
    }
    Evaluator::new(book).formula(idx, source)
}

pub(crate) fn recalculate(book: &mut Workbook) {
    let mut results = Vec::new();
    {
        let mut ev = Evaluator::new(book);
        for (si, sheet) in book.sheets.iter().enumerate() {
            for (at, v) in &sheet.cells {
                if matches!(v, CellValue::Formula { .. }) {
                    results.push((si, *at, ev.cell(si, *at)));
                }
            }
        }
    }
    for (si, at, value) in results {
        if let Some(CellValue::Formula { cached, .. }) = book.sheets[si].cells.get_mut(&at) {
            **cached = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workbook::Sheet;

    fn book_with(cells: &[(&str, CellValue)]) -> Workbook {
        let mut book = Workbook::blank();
        for (a1, v) in cells {
            let r = crate::xwapi::parse_range(a1).unwrap();
            book.sheets[0].set(r.start, v.clone());
        }
        book.recalculate();
        book
    }

    fn num(n: f64) -> CellValue {
        CellValue::Number(n)
    }

    #[test]
    fn subtraction() {
        let book = book_with(&[("B2", num(10.0)), ("C2", num(4.0))]);
        assert_eq!(evaluate_formula(&book, "Sheet1", "=B2-C2"), num(6.0));
    }

    #[test]
    fn sum_range() {
        let book = book_with(&[("A1", num(1.0)), ("A2", num(2.0)), ("A3", num(3.0))]);
        assert_eq!(evaluate_formula(&book, "Sheet1", "=SUM(A1:A3)"), num(6.0));
        assert_eq!(evaluate_formula(&book, "Sheet1", "=AVERAGE(A1:A3)"), num(2.0));
        assert_eq!(evaluate_formula(&book, "Sheet1", "=MIN(A1:A3, 0.5)"), num(0.5));
        assert_eq!(evaluate_formula(&book, "Sheet1", "=MAX(A3:A1)"), num(3.0));
        assert_eq!(evaluate_formula(&book, "Sheet1", "=COUNT(A1:A9)"), num(3.0));
    }

    #[test]
    fn cross_sheet_reference() {
        let mut book = book_with(&[("D10", num(42.0))]);
        book.add_sheet(Sheet::new("Sheet2")).unwrap();
        assert_eq!(evaluate_formula(&book, "Sheet2", "=Sheet1!D10"), num(42.0));
        book.sheets[0].set(Coord::new(4, 10), CellValue::Text("hi".into()));
        assert_eq!(evaluate_formula(&book, "Sheet2", "=Sheet1!D10"), CellValue::Text("hi".into()));
        assert_eq!(evaluate_formula(&book, "Sheet2", "='Sheet1'!D10"), CellValue::Text("hi".into()));
    }

    #[test]
    fn precedence() {
        let book = Workbook::blank();
        let eval = |s| evaluate_formula(&book, "Sheet1", s);
        assert_eq!(eval("=1+2*3"), num(7.0));
        assert_eq!(eval("=(1+2)*3"), num(9.0));
        assert_eq!(eval("=2^3^2"), num(64.0));
        assert_eq!(eval("=-2^2"), num(4.0));
        assert_eq!(eval("=10/4-1"), num(1.5));
        assert_eq!(eval("=1.5e2"), num(150.0));
        assert_eq!(eval("=100*(1+0.05/12)^(12*2)"), num(100.0 * (1.0f64 + 0.05 / 12.0).powf(24.0)));
    }

    #[test]
    fn error_values() {
        let mut book = Workbook::blank();
        let kind = |v: CellValue| match v {
            CellValue::Error(e) => e.kind,
            other => panic!("expected error, got {other:?}"),
        };
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=Nope!A1")), ErrorKind::Ref);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=1/0")), ErrorKind::Div0);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=\"x\"+1")), ErrorKind::Value);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=A1:A3")), ErrorKind::Value);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=1+")), ErrorKind::Value);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=#REF!+1")), ErrorKind::Ref);
        let e = evaluate_formula(&book, "Sheet1", "=VLOOKUP(A1, B1:C3, 2)");
        match e {
            CellValue::Error(e) => {
                assert_eq!(e.kind, ErrorKind::Value);
                assert!(e.message.contains("VLOOKUP"));
            }
            other => panic!("{other:?}"),
        }

        book.sheets[0].set(Coord::new(1, 1), CellValue::formula("=B1+1"));
        book.sheets[0].set(Coord::new(2, 1), CellValue::formula("=A1*2"));
        book.recalculate();
        assert_eq!(kind(book.sheets[0].get(Coord::new(1, 1)).resolved().clone()), ErrorKind::Cycle);
        assert_eq!(kind(book.sheets[0].get(Coord::new(2, 1)).resolved().clone()), ErrorKind::Cycle);
        assert_eq!(kind(evaluate_formula(&book, "Sheet1", "=A1")), ErrorKind::Cycle);
    }

    #[test]
    fn empty_reference_is_zero() {
        let book = Workbook::blank();
        assert_eq!(evaluate_formula(&book, "Sheet1", "=Z99"), num(0.0));
        assert_eq!(evaluate_formula(&book, "Sheet1", "=Z99+1"), num(1.0));
    }

    #[test]
    fn chained_formulas_recalculate() {
        let mut book = book_with(&[("A1", num(2.0)), ("B1", CellValue::formula("=A1*10")), ("C1", CellValue::formula("=B1+1"))]);
        assert_eq!(book.sheets[0].get(Coord::new(3, 1)).resolved(), &num(21.0));
        book.sheets[0].set(Coord::new(1, 1), num(3.0));
        book.recalculate();
        assert_eq!(book.sheets[0].get(Coord::new(3, 1)).resolved(), &num(31.0));
    }

    #[test]
    fn shifting() {
        assert_eq!(shift_formula("=B2-C2", 0, 9), "=B11-C11");
        assert_eq!(shift_formula("=SUM(A1:A3)*Sheet1!B2", 1, 1), "=SUM(B2:B4)*Sheet1!C3");
        assert_eq!(shift_formula("='My Sheet'!A1 + 1", 0, 1), "='My Sheet'!A2 + 1");
        assert_eq!(shift_formula("=A1", 0, -1), "=#REF!");
        assert_eq!(shift_formula("=\"B2\"&A1", 0, 1), "=\"B2\"&A1");
        assert_eq!(shift_formula("=$A$1+B1", 1, 0), "=B1+C1");
        assert!(has_absolute_reference("=$A$1+B1"));
        assert!(!has_absolute_reference("=A1+B1"));
        assert_eq!(shift_formula("=LOG10(A1)", 0, 1), "=LOG10(A2)");
    }
}
