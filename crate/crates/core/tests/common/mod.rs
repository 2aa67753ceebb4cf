//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use sod_core::metrics::TokenSeq;
use sod_core::xwapi::{ActionCatalog, ActionScript, ArgType, ArgValue, AtomicAction, CellRef, Coord, RangeRef};

const SHEETS: &[&str] = &["Sheet1", "Data", "Q1 Sales", "Bob's", "2024"];
const WORDS: &[&str] = &["Profit", "Line", "bottom", "<2000", "Total \"net\"", "a\\b", "two\nlines", "", "ok"];
const NAMES: &[&str] = &["Region", "Product", "Month", "Units", "Sum of Units"];
const FORMULAS: &[&str] = &["=B2-C2", "=SUM(Sheet1!B2:B11)", "=AVERAGE(A1:A3)*2", "=MAX('Q1 Sales'!C2:C9)"];

fn coord<R: Rng>(rng: &mut R) -> Coord {
    Coord::new(rng.gen_range(1..=60), rng.gen_range(1..=500))
}

fn sheet<R: Rng>(rng: &mut R) -> Option<String> {
    if rng.gen_bool(0.2) {
        None
    } else {
        Some(SHEETS.choose(rng).unwrap().to_string())
    }
}

fn number<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(-1000..1000) as f64,
        1 => rng.gen_range(-1e6..1e6),
        _ => rng.gen_range(0.0..1.0),
    }
}

fn value_for<R: Rng>(ty: ArgType, rng: &mut R) -> ArgValue {
    match ty {
        ArgType::Str => ArgValue::Str(WORDS.choose(rng).unwrap().to_string()),
        ArgType::Int => ArgValue::Number(rng.gen_range(1..=20) as f64),
        ArgType::Float => ArgValue::Number(number(rng)),
        ArgType::Range => ArgValue::Range(RangeRef::new(sheet(rng), coord(rng), coord(rng))),
        ArgType::Cell => {
            let at = coord(rng);
            ArgValue::Cell(CellRef {
                sheet: sheet(rng),
                column: at.column,
                row: at.row,
            })
        }
        ArgType::Formula => ArgValue::Formula(FORMULAS.choose(rng).unwrap().to_string()),
        ArgType::List => {
            let n = rng.gen_range(1..=3);
            ArgValue::List(NAMES.choose_multiple(rng, n).map(|s| s.to_string()).collect())
        }
        ArgType::Value => match rng.gen_range(0..3) {
            0 => value_for(ArgType::Str, rng),
            1 => value_for(ArgType::Float, rng),
            _ => value_for(ArgType::Formula, rng),
        },
    }
}

/// A random well-typed script over the catalog with random step grouping.
pub fn random_script<R: Rng>(catalog: &ActionCatalog, rng: &mut R) -> ActionScript {
    let specs: Vec<_> = catalog.iter().collect();
    let len = rng.gen_range(1..=8);
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        let spec = specs.choose(rng).unwrap();
        let mut action = AtomicAction::new(&spec.name);
        for p in &spec.params {
            if p.optional && rng.gen_bool(0.5) {
                continue;
            }
            action = action.arg(&p.name, value_for(p.ty, rng));
        }
        steps.push(action);
    }
    let mut groups = Vec::new();
    let mut left = len;
    while left > 0 {
        let g = rng.gen_range(1..=left.min(3));
        groups.push(g);
        left -= g;
    }
    ActionScript::with_groups(steps, groups).expect("groups cover the steps")
}

/// Random token sequence of length 1..=max over a small vocabulary with
/// stem variants, so that exact and stem matches both occur.
pub fn random_tokens<R: Rng>(rng: &mut R, max: usize) -> TokenSeq {
    const VOCAB: &[&str] = &[
        "the", "sheet", "sheets", "chart", "charts", "filter", "filtered", "add", "adding", "a", "column", "value",
    ];
    let n = rng.gen_range(1..=max);
    TokenSeq::from_tokens((0..n).map(|_| *VOCAB.choose(rng).unwrap()))
}

// Count tables as plain vectors scanned linearly.
type Table = Vec<(Vec<String>, usize)>;

fn table(tokens: &[String], n: usize) -> Table {
    let mut t: Table = Vec::new();
    if tokens.len() < n {
        return t;
    }
    for i in 0..=tokens.len() - n {
        let gram = tokens[i..i + n].to_vec();
        match t.iter_mut().find(|(g, _)| *g == gram) {
            Some(e) => e.1 += 1,
            None => t.push((gram, 1)),
        }
    }
    t
}

fn count_in(t: &Table, gram: &[String]) -> usize {
    t.iter().find(|(g, _)| g.as_slice() == gram).map_or(0, |e| e.1)
}

fn clipped(c: &Table, r: &Table) -> usize {
    c.iter().map(|(g, n)| (*n).min(count_in(r, g))).sum()
}

fn total(t: &Table) -> usize {
    t.iter().map(|e| e.1).sum()
}

/// Single-reference sentence BLEU-4 with the half-count floor for zero precisions.
pub fn oracle_bleu(c: &[String], r: &[String]) -> f64 {
    let orders = c.len().min(4);
    let mut product = 1.0f64;
    for n in 1..=orders {
        let (ct, rt) = (table(c, n), table(r, n));
        let m = clipped(&ct, &rt) as f64;
        let t = total(&ct) as f64;
        product *= if m == 0.0 { 1.0 / (2.0 * t) } else { m / t };
    }
    let geo = product.powf(1.0 / orders as f64);
    let bp = if c.len() >= r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * geo
}

/// Pooled 1..=4 gram GLEU: min(precision, recall).
pub fn oracle_gleu(c: &[String], r: &[String]) -> f64 {
    let (mut m, mut tc, mut tr) = (0, 0, 0);
    for n in 1..=4 {
        let (ct, rt) = (table(c, n), table(r, n));
        m += clipped(&ct, &rt);
        tc += total(&ct);
        tr += total(&rt);
    }
    (m as f64 / tc as f64).min(m as f64 / tr as f64)
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// ROUGE-L F1 with the LCS found by enumerating candidate subsequences.
pub fn oracle_rouge_l(c: &[String], r: &[String]) -> f64 {
    let mut best = 0;
    for mask in 0u32..(1 << c.len()) {
        let pick: Vec<&String> = (0..c.len()).filter(|i| mask & (1 << i) != 0).map(|i| &c[i]).collect();
        if pick.len() > best && is_subsequence(&pick, r) {
            best = pick.len();
        }
    }
    if best == 0 {
        return 0.0;
    }
    let (p, rc) = (best as f64 / c.len() as f64, best as f64 / r.len() as f64);
    2.0 * p * rc / (p + rc)
}

/// METEOR with greedy exact-then-stem alignment, alpha 0.9, beta 3, gamma 0.5.
pub fn oracle_meteor(c: &[String], r: &[String]) -> f64 {
    let mut link: Vec<Option<usize>> = vec![None; c.len()];
    let mut taken = vec![false; r.len()];
    let stems = |s: &[String]| s.iter().map(|t| porter_stemmer::stem(t)).collect::<Vec<_>>();
    for (cand, refs) in [(c.to_vec(), r.to_vec()), (stems(c), stems(r))] {
        for i in 0..cand.len() {
            if link[i].is_some() {
                continue;
            }
            for j in 0..refs.len() {
                if !taken[j] && cand[i] == refs[j] {
                    link[i] = Some(j);
                    taken[j] = true;
                    break;
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = link.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    let m = pairs.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut chunks = 1.0;
    for w in pairs.windows(2) {
        if !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1) {
            chunks += 1.0;
        }
    }
    let (p, rc) = (m / c.len() as f64, m / r.len() as f64);
    let f = p * rc / (0.9 * p + 0.1 * rc);
    f * (1.0 - 0.5 * (chunks / m).powi(3))
}
