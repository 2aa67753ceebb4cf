use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

/// Declared type of an action parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgType {
    Str,
    Int,
    Float,
    Range,
    Cell,
    /// Text, number or formula.
    Value,
    Formula,
    /// Comma-separated names written as one quoted string.
    List,
}

impl ArgType {
    pub fn name(self) -> &'static str {
        match self {
            ArgType::Str => "str",
            ArgType::Int => "int",
            ArgType::Float => "float",
            ArgType::Range => "range",
            ArgType::Cell => "cell",
            ArgType::Value => "value",
            ArgType::Formula => "formula",
            ArgType::List => "list",
        }
    }
}

impl FromStr for ArgType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "str" => ArgType::Str,
            "int" => ArgType::Int,
            "float" | "number" => ArgType::Float,
            "range" => ArgType::Range,
            "cell" => ArgType::Cell,
            "value" => ArgType::Value,
            "formula" => ArgType::Formula,
            "list" => ArgType::List,
            other => return Err(format!("unknown argument type `{other}`")),
        })
    }
}

impl fmt::Display for ArgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: ArgType,
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSpec {
    pub name: String,
    pub params: Vec<Param>,
    pub doc: String,
}

impl ActionSpec {
    pub fn param(&self, key: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == key)
    }

    pub fn required(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| !p.optional)
    }

    /// `Name(arg: type, opt?: type)`, the form shown to models as documentation.
    pub fn signature(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| format!("{}{}: {}", p.name, if p.optional { "?" } else { "" }, p.ty))
            .collect();
        format!("{}({})", self.name, params.join(", "))
    }

    /// Signature followed by the one-line description.
    pub fn doc_line(&self) -> String {
        format!("{} -- {}", self.signature(), self.doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("catalog line {line}: action `{name}` is already defined")]
    Collision { line: usize, name: String },
    #[error("reading catalog: {0}")]
    Io(String),
}

const SEED: &str = "\
Write(range:range, value:value) -- Write a value or formula into a cell or range.
CopyPaste(source:range, destination:range) -- Copy a range and paste its values and formulas into the destination.
CreateSheet(sheetName:str) -- Add a new worksheet with the given name.
AutoFill(source:range, destination:range) -- Fill the destination range by extending the source cells.
CreateChart(source:range, destSheet:str, chartType:str, chartName:str) -- Create a chart of the source data on the destination sheet.
SetChartLegend(chartName:str, position:str) -- Set the legend position of a chart.
Filter(source:range, fieldIndex:int, criteria:str) -- Filter the source range on one column with a criteria such as \"<2000\".
CreatePivotTable(source:range, destSheet:str, name:str, rows?:list, columns?:list, values?:list) -- Summarize the source data in a pivot table.
SetFormat(range:range, property:str, value:value) -- Set a formatting property of a range.
FreezePanes(range:range) -- Freeze the rows above and the columns left of the range's top-left cell.
";

/// Argument-key aliases accepted by the seed catalog: (action, alias, canonical).
const SEED_ALIASES: &[(&str, &str, &str)] = &[("CreateSheet", "name", "sheetName")];

/// Action signatures keyed by action name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionCatalog {
    entries: BTreeMap<String, ActionSpec>,
    #[serde(skip)]
    aliases: Vec<(String, String, String)>,
}

impl Default for ActionCatalog {
    fn default() -> Self {
        Self::seed()
    }
}

impl ActionCatalog {
    /// The ten built-in actions.
    pub fn seed() -> Self {
        let mut catalog = ActionCatalog {
            entries: BTreeMap::new(),
            aliases: SEED_ALIASES
                .iter()
                .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
                .collect(),
        };
        catalog.extend_from_str(SEED).expect("seed catalog is well-formed");
        catalog
    }

    pub fn empty() -> Self {
        ActionCatalog {
            entries: BTreeMap::new(),
            aliases: Vec::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ActionSpec> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionSpec> {
        self.entries.values()
    }

    /// Canonical key for `key` on action `action`.
    pub fn canonical_key<'a>(&'a self, action: &str, key: &'a str) -> &'a str {
        self.aliases
            .iter()
            .find(|(a, alias, _)| a == action && alias == key)
            .map(|(_, _, canonical)| canonical.as_str())
            .unwrap_or(key)
    }

    /// Add definitions from a file of `Name(arg:type, opt?:type) -- doc` lines.
    pub fn extend_from_file(&mut self, path: impl AsRef<Path>) -> Result<(), CatalogError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CatalogError::Io(format!("{}: {e}", path.as_ref().display())))?;
        self.extend_from_str(&text)
    }

    /// Add definitions from text. Blank lines and `#` comments are skipped.
    /// Redefining an existing action is an error; nothing is added when any
    /// line fails.
    pub fn extend_from_str(&mut self, text: &str) -> Result<(), CatalogError> {
        let mut staged: BTreeMap<String, ActionSpec> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let spec = parse_definition(trimmed).map_err(|message| CatalogError::Malformed { line, message })?;
            if self.entries.contains_key(&spec.name) || staged.contains_key(&spec.name) {
                return Err(CatalogError::Collision { line, name: spec.name });
            }
            staged.insert(spec.name.clone(), spec);
        }
        self.entries.extend(staged);
        Ok(())
    }
}

fn parse_definition(line: &str) -> Result<ActionSpec, String> {
    let (sig, doc) = match line.split_once("--") {
        Some((sig, doc)) => (sig.trim(), doc.trim()),
        None => (line, ""),
    };
    let open = sig.find('(').ok_or("expected `(`")?;
    let name = sig[..open].trim();
    if !is_identifier(name) {
        return Err(format!("invalid action name `{name}`"));
    }
    let inner = sig[open + 1..]
        .strip_suffix(')')
        .ok_or("expected `)` at end of signature")?;
    let mut params: Vec<Param> = Vec::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, ty) = part.split_once(':').ok_or_else(|| format!("parameter `{part}` needs a type"))?;
        let key = key.trim();
        let (key, optional) = match key.strip_suffix('?') {
            Some(k) => (k.trim(), true),
            None => (key, false),
        };
        if !is_identifier(key) {
            return Err(format!("invalid parameter name `{key}`"));
        }
        if params.iter().any(|p| p.name == key) {
            return Err(format!("duplicate parameter `{key}`"));
        }
        params.push(Param {
            name: key.to_string(),
            ty: ty.trim().parse()?,
            optional,
        });
    }
    Ok(ActionSpec {
        name: name.to_string(),
        params,
        doc: doc.to_string(),
    })
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_has_ten_actions() {
        let c = ActionCatalog::seed();
        let names: Vec<&str> = c.iter().map(|s| s.name.as_str()).collect();
        for expected in [
            "Write",
            "CopyPaste",
            "CreateSheet",
            "AutoFill",
            "CreateChart",
            "SetChartLegend",
            "Filter",
            "CreatePivotTable",
            "SetFormat",
            "FreezePanes",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
        }
        assert_eq!(c.len(), 10);
    }

    #[test]
    fn seed_signatures() {
        let c = ActionCatalog::seed();
        assert_eq!(
            c.get("AutoFill").unwrap().signature(),
            "AutoFill(source: range, destination: range)"
        );
        let chart = c.get("CreateChart").unwrap();
        let keys: Vec<&str> = chart.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(keys, ["source", "destSheet", "chartType", "chartName"]);
        assert_eq!(c.get("Filter").unwrap().param("fieldIndex").unwrap().ty, ArgType::Int);
    }

    #[test]
    fn user_definitions_extend_catalog() {
        let mut c = ActionCatalog::seed();
        c.extend_from_str("# extra\nSortRange(range:range, key:int, ascending?:str) -- Sort rows.\n")
            .unwrap();
        let spec = c.get("SortRange").unwrap();
        assert_eq!(spec.doc, "Sort rows.");
        assert!(spec.param("ascending").unwrap().optional);
        assert_eq!(spec.required().count(), 2);
    }

    #[test]
    fn collision_with_seed_is_error() {
        let mut c = ActionCatalog::seed();
        let err = c.extend_from_str("Write(range:range) -- shadow").unwrap_err();
        assert_eq!(err, CatalogError::Collision { line: 1, name: "Write".into() });
        assert_eq!(c.get("Write").unwrap().params.len(), 2);
    }

    #[test]
    fn failed_extension_adds_nothing() {
        let mut c = ActionCatalog::seed();
        assert!(c.extend_from_str("A(x:str)\nB(y:nonsense)").is_err());
        assert!(!c.contains("A"));
    }

    #[test]
    fn malformed_definitions() {
        for bad in ["Write", "Foo(x)", "Foo(x:str", "9Foo(x:str)", "Foo(x:str, x:int)"] {
            assert!(parse_definition(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn alias_lookup() {
        let c = ActionCatalog::seed();
        assert_eq!(c.canonical_key("CreateSheet", "name"), "sheetName");
        assert_eq!(c.canonical_key("CreateChart", "name"), "name");
    }
}
