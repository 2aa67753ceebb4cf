use super::lex::{tokenize, Arg, Call, Expr, Parser, Statement, Tok};
use super::{auto_fill, copy_paste, create_sheet, grid_range, literal_value, range_in, write, Obj, Outcome, SourceDialect, State};
use crate::xwapi::{column_index, ArgValue, Coord, RangeRef};

const STRUCTURAL: &[&str] = &["sub", "end", "function", "option", "dim", "private", "public", "attribute"];

pub(crate) fn lower(state: &mut State, stmt: &Statement) -> Outcome {
    let mut p = Parser::new(tokenize(&stmt.text, SourceDialect::Vba));
    let Some(Tok::Ident(first)) = p.peek().cloned() else {
        return Outcome::Unrecognized;
    };
    let first = first.to_ascii_lowercase();
    if STRUCTURAL.contains(&first.as_str()) {
        return Outcome::Structural;
    }
    if first == "set" {
        p.bump();
        return bind_variable(state, &mut p);
    }
    if first == "let" {
        p.bump();
    }
    let Some(chain) = p.chain() else {
        return Outcome::Unrecognized;
    };
    if p.eat_punct('=') {
        let rhs = p.expr();
        if !p.at_end() {
            return Outcome::Unrecognized;
        }
        return assignment(state, &chain, &rhs);
    }
    let mut args = Vec::new();
    while !p.at_end() {
        args.push(p.arg());
        if !p.at_end() && !p.eat_punct(',') {
            return Outcome::Unrecognized;
        }
    }
    method_call(state, &chain, args)
}

fn bind_variable(state: &mut State, p: &mut Parser) -> Outcome {
    let (Some(Tok::Ident(name)), true) = (p.bump(), p.eat_punct('=')) else {
        return Outcome::Unrecognized;
    };
    let Some(chain) = p.chain().filter(|_| p.at_end()) else {
        return Outcome::Unrecognized;
    };
    match eval(state, &chain) {
        obj @ (Obj::App | Obj::Book | Obj::Sheet(_) | Obj::Range(_)) => {
            state.vars.insert(name.to_ascii_lowercase(), obj);
            Outcome::Selector
        }
        _ => Outcome::Unrecognized,
    }
}

fn assignment(state: &mut State, chain: &[Call], rhs: &Expr) -> Outcome {
    let (last, recv) = chain.split_last().expect("chain is non-empty");
    let member = last.name.to_ascii_lowercase();
    if last.args.is_none() {
        match (member.as_str(), eval(state, recv)) {
            ("value" | "value2" | "formula", Obj::Range(r)) => {
                return literal_value(rhs).map_or(Outcome::Unrecognized, |v| write(r, v));
            }
            // R1C1 formulas are not translated; plain values are.
            ("formular1c1", Obj::Range(r)) => {
                return match literal_value(rhs) {
                    Some(ArgValue::Formula(_)) | None => Outcome::Unrecognized,
                    Some(v) => write(r, v),
                };
            }
            ("name", Obj::NewSheet) => {
                let Expr::Str(name) = rhs else {
                    return Outcome::Unrecognized;
                };
                state.active = name.clone();
                return create_sheet(name);
            }
            _ => {}
        }
    }
    // `Range("A1") = v` uses the default member.
    if let Obj::Range(r) = eval(state, chain) {
        return literal_value(rhs).map_or(Outcome::Unrecognized, |v| write(r, v));
    }
    Outcome::Unrecognized
}

fn method_call(state: &mut State, chain: &[Call], mut args: Vec<Arg>) -> Outcome {
    let (last, recv) = chain.split_last().expect("chain is non-empty");
    if args.is_empty() {
        if let Some(a) = &last.args {
            args = a.clone();
        }
    }
    let member = last.name.to_ascii_lowercase();
    let target = eval(state, recv);
    match (member.as_str(), target) {
        ("select" | "activate", Obj::Sheet(s)) if args.is_empty() => {
            state.active = s;
            state.selection = None;
            Outcome::Selector
        }
        ("select" | "activate", Obj::Range(r)) if args.is_empty() => {
            if let Some(s) = &r.sheet {
                state.active = s.clone();
            }
            state.selection = Some(r);
            Outcome::Selector
        }
        ("copy", Obj::Range(src)) => match destination(state, &args) {
            Some(dst) => copy_paste(src, dst),
            None => Outcome::Unrecognized,
        },
        ("autofill", Obj::Range(src)) => match destination(state, &args) {
            Some(dst) => auto_fill(src, dst),
            None => Outcome::Unrecognized,
        },
        _ => Outcome::Unrecognized,
    }
}

/// The `Destination:=` argument, or the first positional one.
fn destination(state: &mut State, args: &[Arg]) -> Option<RangeRef> {
    let arg = args
        .iter()
        .find(|a| a.name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case("destination")))
        .or_else(|| args.first().filter(|a| a.name.is_none()))?;
    match &arg.value {
        Expr::Chain(c) => match eval(state, c) {
            Obj::Range(r) => Some(r),
            _ => None,
        },
        _ => None,
    }
}

/// Evaluate a member chain. Explicit `Worksheets("X")` selectors rebind the
/// active sheet as a side effect.
fn eval(state: &mut State, chain: &[Call]) -> Obj {
    let mut obj = Obj::App;
    for (i, call) in chain.iter().enumerate() {
        let name = call.name.to_ascii_lowercase();
        let args = call.args.as_deref().unwrap_or(&[]);
        obj = match (&obj, name.as_str()) {
            (Obj::App, v) if i == 0 && state.vars.contains_key(v) && call.args.is_none() => state.vars[v].clone(),
            (Obj::App, "application") if i == 0 => Obj::App,
            (Obj::App, "activeworkbook" | "thisworkbook") => Obj::Book,
            (Obj::App, "workbooks") if !args.is_empty() => Obj::Book,
            (Obj::App | Obj::Book, "activesheet") => Obj::Sheet(state.active.clone()),
            (Obj::App | Obj::Book, "worksheets" | "sheets") => match args {
                [] => Obj::Sheets,
                [Arg { name: None, value: Expr::Str(s) }] => {
                    state.active = s.clone();
                    Obj::Sheet(s.clone())
                }
                _ => Obj::Unknown,
            },
            (Obj::App, "activecell") => match &state.selection {
                Some(r) => Obj::Range(RangeRef::cell(r.sheet.clone(), r.start)),
                None => Obj::Unknown,
            },
            (Obj::App, "selection") => state.selection.clone().map_or(Obj::Unknown, Obj::Range),
            (Obj::Sheets, "add") => Obj::NewSheet,
            (Obj::App | Obj::Book, "range") => range_call(args, &state.active.clone()),
            (Obj::App, "cells") => cells_call(args, &state.active.clone()),
            (Obj::Sheet(s), "range") => range_call(args, s),
            (Obj::Sheet(s), "cells") => cells_call(args, s),
            _ => Obj::Unknown,
        };
        if obj == Obj::Unknown {
            return obj;
        }
    }
    obj
}

fn range_call(args: &[Arg], sheet: &str) -> Obj {
    let texts: Option<Vec<&str>> = args
        .iter()
        .map(|a| match (&a.name, &a.value) {
            (None, Expr::Str(s)) => Some(s.as_str()),
            _ => None,
        })
        .collect();
    let r = match texts.as_deref() {
        Some([one]) => range_in(one, sheet),
        Some([a, b]) => match (range_in(a, sheet), range_in(b, sheet)) {
            (Some(a), Some(b)) if a.sheet == b.sheet => Some(RangeRef::new(a.sheet.clone(), a.start, b.end)),
            _ => None,
        },
        _ => None,
    };
    r.map_or(Obj::Unknown, Obj::Range)
}

/// `Cells(row, column)` with a numeric or lettered column.
fn cells_call(args: &[Arg], sheet: &str) -> Obj {
    if let Some(r) = grid_range(args, sheet).filter(|_| args.len() == 2) {
        return Obj::Range(r);
    }
    match args {
        [Arg { name: None, value: Expr::Num(row) }, Arg { name: None, value: Expr::Str(col) }]
            if *row >= 1.0 && row.fract() == 0.0 =>
        {
            match column_index(col) {
                Some(c) => Obj::Range(RangeRef::cell(Some(sheet.to_string()), Coord::new(c, *row as u32))),
                None => Obj::Unknown,
            }
        }
        _ => Obj::Unknown,
    }
}
