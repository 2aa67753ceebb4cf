//! A1-notation cell and range references.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SyntaxError;

/// Largest column index accepted (`XFD`, the usual spreadsheet limit).
pub const MAX_COLUMN: u32 = 16_384;
/// Largest row index accepted.
pub const MAX_ROW: u32 = 1_048_576;

/// A 1-based (column, row) position on a sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub column: u32,
    pub row: u32,
}

impl Coord {
    pub fn new(column: u32, row: u32) -> Self {
        debug_assert!(column >= 1 && row >= 1);
        Coord { column, row }
    }

    /// Shift by a signed offset, returning `None` when the result leaves the grid.
    pub fn offset(self, d_col: i64, d_row: i64) -> Option<Coord> {
        let column = self.column as i64 + d_col;
        let row = self.row as i64 + d_row;
        if (1..=MAX_COLUMN as i64).contains(&column) && (1..=MAX_ROW as i64).contains(&row) {
            Some(Coord::new(column as u32, row as u32))
        } else {
            None
        }
    }

    pub fn a1(self) -> String {
        format!("{}{}", column_letters(self.column), self.row)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_letters(self.column), self.row)
    }
}

/// A single cell, optionally qualified by a sheet name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub column: u32,
    pub row: u32,
}

impl CellRef {
    pub fn coord(&self) -> Coord {
        Coord::new(self.column, self.row)
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write!(f, "{}!", quote_sheet_name(sheet))?;
        }
        write!(f, "{}", self.coord())
    }
}

/// An inclusive rectangular range. `start` is always the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RangeRef {
    pub sheet: Option<String>,
    pub start: Coord,
    pub end: Coord,
}

impl RangeRef {
    /// Build a range from two arbitrary corners, normalizing so that
    /// `start` is the top-left and `end` the bottom-right.
    pub fn new(sheet: Option<String>, a: Coord, b: Coord) -> Self {
        RangeRef {
            sheet,
            start: Coord::new(a.column.min(b.column), a.row.min(b.row)),
            end: Coord::new(a.column.max(b.column), a.row.max(b.row)),
        }
    }

    pub fn cell(sheet: Option<String>, at: Coord) -> Self {
        RangeRef { sheet, start: at, end: at }
    }

    pub fn is_single_cell(&self) -> bool {
        self.start == self.end
    }

    pub fn width(&self) -> u32 {
        self.end.column - self.start.column + 1
    }

    pub fn height(&self) -> u32 {
        self.end.row - self.start.row + 1
    }

    pub fn contains(&self, at: Coord) -> bool {
        (self.start.column..=self.end.column).contains(&at.column)
            && (self.start.row..=self.end.row).contains(&at.row)
    }

    /// True when `other` lies entirely within this range (sheets ignored).
    pub fn contains_range(&self, other: &RangeRef) -> bool {
        self.contains(other.start) && self.contains(other.end)
    }

    /// Row-major iteration over every cell.
    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (self.start.row..=self.end.row)
            .flat_map(move |row| (self.start.column..=self.end.column).map(move |col| Coord::new(col, row)))
    }

    pub fn with_sheet(mut self, sheet: impl Into<String>) -> Self {
        self.sheet = Some(sheet.into());
        self
    }

    /// Same range, compared with case-insensitive sheet names.
    pub fn same_area(&self, other: &RangeRef) -> bool {
        self.start == other.start
            && self.end == other.end
            && match (&self.sheet, &other.sheet) {
                (Some(a), Some(b)) => a.eq_ignore_ascii_case(b),
                (None, None) => true,
                _ => false,
            }
    }
}

impl fmt::Display for RangeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write!(f, "{}!", quote_sheet_name(sheet))?;
        }
        if self.is_single_cell() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}", self.start, self.end)
        }
    }
}

impl FromStr for RangeRef {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_range(s)
    }
}

/// Parse an A1-style range such as `Sheet1!A1:E71`, `'My Sheet'!B2` or `B7`.
///
/// Reversed corners are normalized, `$` markers are dropped and column
/// letters are upper-cased.
pub fn parse_range(text: &str) -> Result<RangeRef, SyntaxError> {
    let err = |column: usize, message: &str| SyntaxError::new(1, column, message);
    let text = text.trim();
    if text.is_empty() {
        return Err(err(1, "empty range"));
    }

    let (sheet, body, body_offset) = split_sheet(text).map_err(|(col, msg)| err(col, msg))?;
    let mut parts = body.splitn(2, ':');
    let first = parts.next().unwrap_or_default();
    let a = parse_coord(first).map_err(|msg| err(body_offset + 1, msg))?;
    let b = match parts.next() {
        Some(second) => parse_coord(second).map_err(|msg| err(body_offset + first.len() + 2, msg))?,
        None => a,
    };
    Ok(RangeRef::new(sheet, a, b))
}

/// Parse a single cell reference; multi-cell ranges are rejected.
pub fn parse_cell(text: &str) -> Result<CellRef, SyntaxError> {
    let range = parse_range(text)?;
    if !range.is_single_cell() {
        return Err(SyntaxError::new(1, 1, "expected a single cell"));
    }
    Ok(CellRef {
        sheet: range.sheet,
        column: range.start.column,
        row: range.start.row,
    })
}

fn split_sheet(text: &str) -> Result<(Option<String>, &str, usize), (usize, &'static str)> {
    if let Some(rest) = text.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if matches!(chars.peek(), Some((_, '\''))) {
                    chars.next();
                    name.push('\'');
                    continue;
                }
                let after = &rest[i + 1..];
                let Some(body) = after.strip_prefix('!') else {
                    return Err((i + 2, "expected '!' after quoted sheet name"));
                };
                if name.is_empty() {
                    return Err((1, "empty sheet name"));
                }
                return Ok((Some(name), body, i + 3));
            }
            name.push(c);
        }
        return Err((1, "unterminated sheet name"));
    }
    match text.rfind('!') {
        Some(0) => Err((1, "empty sheet name")),
        Some(i) => Ok((Some(text[..i].to_string()), &text[i + 1..], i + 1)),
        None => Ok((None, text, 0)),
    }
}

fn parse_coord(text: &str) -> Result<Coord, &'static str> {
    let text = text.trim();
    let bytes = text.as_bytes();
    let mut i = 0;
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let letters_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
        i += 1;
    }
    if i == letters_start {
        return Err("expected column letters");
    }
    let column = column_index(&text[letters_start..i]).ok_or("column out of range")?;
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let digits = &text[i..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err("expected row number");
    }
    let row: u32 = digits.parse().map_err(|_| "row out of range")?;
    if row == 0 || row > MAX_ROW {
        return Err("row out of range");
    }
    Ok(Coord::new(column, row))
}

/// `A` → 1, `Z` → 26, `AA` → 27.
pub fn column_index(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut n: u32 = 0;
    for c in letters.chars() {
        if !c.is_ascii_alphabetic() {
            return None;
        }
        n = n * 26 + (c.to_ascii_uppercase() as u32 - 'A' as u32 + 1);
    }
    (1..=MAX_COLUMN).contains(&n).then_some(n)
}

/// 1 → `A`, 27 → `AA`.
pub fn column_letters(mut column: u32) -> String {
    let mut out = Vec::new();
    while column > 0 {
        let rem = (column - 1) % 26;
        out.push(b'A' + rem as u8);
        column = (column - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Render a sheet name for use before `!`, quoting when it is not a plain identifier.
pub fn quote_sheet_name(name: &str) -> String {
    let plain = !name.is_empty()
        && name.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if plain {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}
