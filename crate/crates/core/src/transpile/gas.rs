use super::lex::{tokenize, Arg, Call, Expr, Parser, Statement, Tok};
use super::{auto_fill, copy_paste, create_sheet, grid_range, literal_value, range_in, write, Obj, Outcome, SourceDialect, State};
use crate::xwapi::{ArgValue, RangeRef};

const DECLARATIONS: &[&str] = &["var", "let", "const"];

pub(crate) fn lower(state: &mut State, stmt: &Statement) -> Outcome {
    let text = stmt.text.trim();
    if text == "}" || text == "{" || text.starts_with("function ") || text.starts_with("function(") {
        return Outcome::Structural;
    }
    let toks = tokenize(text, SourceDialect::Gas);
    if let [Tok::Str(s)] = toks.as_slice() {
        if s == "use strict" {
            return Outcome::Structural;
        }
    }
    let mut p = Parser::new(toks);
    if let Some(Tok::Ident(kw)) = p.peek() {
        if DECLARATIONS.contains(&kw.as_str()) {
            p.bump();
        }
    }
    // `name = <chain>` binds a variable.
    if let (Some(Tok::Ident(name)), Some(Tok::Punct('='))) = (p.peek().cloned(), p.peek_at(1)) {
        if p.peek_at(2) != Some(&Tok::Punct('=')) {
            p.bump();
            p.bump();
            let rhs = p.expr();
            if !p.at_end() {
                return Outcome::Unrecognized;
            }
            return assign(state, name, &rhs);
        }
    }
    let Some(chain) = p.chain() else {
        return Outcome::Unrecognized;
    };
    if !p.at_end() {
        return Outcome::Unrecognized;
    }
    statement(state, &chain).0
}

fn assign(state: &mut State, name: String, rhs: &Expr) -> Outcome {
    let Expr::Chain(chain) = rhs else {
        return Outcome::Unrecognized;
    };
    let (outcome, result) = statement(state, chain);
    match outcome {
        Outcome::Unrecognized => match eval(state, chain) {
            obj @ (Obj::App | Obj::Book | Obj::Sheet(_) | Obj::Range(_)) => {
                state.vars.insert(name, obj);
                Outcome::Selector
            }
            _ => Outcome::Unrecognized,
        },
        other => {
            if let Some(obj) = result {
                state.vars.insert(name, obj);
            }
            other
        }
    }
}

/// Lower a chain whose last call is an action or selector method. Also
/// returns what the call evaluates to, for variable binding.
fn statement(state: &mut State, chain: &[Call]) -> (Outcome, Option<Obj>) {
    let (last, recv) = chain.split_last().expect("chain is non-empty");
    let Some(args) = last.args.as_deref() else {
        return (Outcome::Unrecognized, None);
    };
    let target = eval(state, recv);
    match (last.name.as_str(), target, args) {
        ("setValue", Obj::Range(r), [Arg { name: None, value }]) => match literal_value(value) {
            Some(v) => (write(r.clone(), v), Some(Obj::Range(r))),
            None => (Outcome::Unrecognized, None),
        },
        ("setFormula", Obj::Range(r), [Arg { name: None, value: Expr::Str(f) }]) => {
            let f = if f.starts_with('=') { f.clone() } else { format!("={f}") };
            (write(r.clone(), ArgValue::Formula(f)), Some(Obj::Range(r)))
        }
        ("copyTo", Obj::Range(src), [dst, ..]) => match range_arg(state, dst) {
            Some(dst) => (copy_paste(src, dst), None),
            None => (Outcome::Unrecognized, None),
        },
        ("autoFill", Obj::Range(src), [dst, ..]) => match range_arg(state, dst) {
            Some(dst) => (auto_fill(src, dst), None),
            None => (Outcome::Unrecognized, None),
        },
        ("insertSheet", Obj::Book, [Arg { name: None, value: Expr::Str(name) }, ..]) => {
            state.active = name.clone();
            (create_sheet(name), Some(Obj::Sheet(name.clone())))
        }
        ("activate", Obj::Sheet(s), []) => {
            state.active = s.clone();
            (Outcome::Selector, Some(Obj::Sheet(s)))
        }
        ("activate", Obj::Range(r), []) => {
            if let Some(s) = &r.sheet {
                state.active = s.clone();
            }
            state.selection = Some(r.clone());
            (Outcome::Selector, Some(Obj::Range(r)))
        }
        ("setActiveSheet", Obj::Book, [sheet]) => match &sheet.value {
            Expr::Chain(c) => match eval(state, c) {
                Obj::Sheet(s) => {
                    state.active = s.clone();
                    (Outcome::Selector, Some(Obj::Sheet(s)))
                }
                _ => (Outcome::Unrecognized, None),
            },
            _ => (Outcome::Unrecognized, None),
        },
        ("getSheetByName", Obj::Book, _) => match eval(state, chain) {
            obj @ Obj::Sheet(_) => (Outcome::Selector, Some(obj)),
            _ => (Outcome::Unrecognized, None),
        },
        _ => (Outcome::Unrecognized, None),
    }
}

fn range_arg(state: &mut State, arg: &Arg) -> Option<RangeRef> {
    match &arg.value {
        Expr::Chain(c) => match eval(state, c) {
            Obj::Range(r) => Some(r),
            _ => None,
        },
        _ => None,
    }
}

/// Evaluate a method chain. `getSheetByName("X")` rebinds the active sheet.
/// An undeclared receiver such as `sheet` stands for the active sheet.
fn eval(state: &mut State, chain: &[Call]) -> Obj {
    let mut obj = Obj::Unknown;
    for (i, call) in chain.iter().enumerate() {
        let args = call.args.as_deref();
        obj = if i == 0 {
            match (call.name.as_str(), args) {
                (v, None) if state.vars.contains_key(v) => state.vars[v].clone(),
                ("SpreadsheetApp", None) => Obj::App,
                (_, None) => Obj::Sheet(state.active.clone()),
                _ => Obj::Unknown,
            }
        } else {
            let Some(args) = args else {
                return Obj::Unknown;
            };
            match (&obj, call.name.as_str(), args) {
                (Obj::App, "getActiveSpreadsheet" | "getActive" | "openById" | "openByUrl", _) => Obj::Book,
                (Obj::App | Obj::Book, "getActiveSheet", []) => Obj::Sheet(state.active.clone()),
                (Obj::App | Obj::Book, "getActiveRange", []) => state.selection.clone().map_or(Obj::Unknown, Obj::Range),
                (Obj::Book, "getSheetByName", [Arg { name: None, value: Expr::Str(s) }]) => {
                    state.active = s.clone();
                    Obj::Sheet(s.clone())
                }
                (Obj::Book, "getRange", [Arg { name: None, value: Expr::Str(a1) }]) => {
                    range_in(a1, &state.active.clone()).map_or(Obj::Unknown, Obj::Range)
                }
                (Obj::Sheet(s), "getRange", [Arg { name: None, value: Expr::Str(a1) }]) => {
                    range_in(a1, s).map_or(Obj::Unknown, Obj::Range)
                }
                (Obj::Sheet(s), "getRange", _) => grid_range(args, s).map_or(Obj::Unknown, Obj::Range),
                _ => Obj::Unknown,
            }
        };
        if obj == Obj::Unknown {
            return obj;
        }
    }
    obj
}
