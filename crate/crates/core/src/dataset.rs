//! The code-to-steps benchmark corpus: JSON Lines instances plus a manifest
//! sidecar with counts and the sweep subset.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::xwapi::{parse_script, validate_script, ActionCatalog};

pub const CATEGORIES: [&str; 5] = ["Entry and manipulation", "Management", "Formatting", "Chart", "Pivot table"];

/// The 28 source workbooks with their upstream task counts.
pub const WORKBOOKS: [(&str, &str, u32); 28] = [
    ("Boomerang Sales", "Boomerang sales records on \"Sheet1\" and product prices on \"Retail Price\".", 9),
    ("Demographic Profile", "Demographic details of survey respondents.", 7),
    ("Dragging", "Measurements of a hanging block dragging a second block (m1 = 0.75 kg) over a frictionless table through a pulley.", 8),
    ("Easy GDP Breakdown", "Economic indicators of several countries across years.", 10),
    ("Entire Shipping Costs", "Distances from customers to four destinations; shipping is $3.5 per mile with an $80 minimum.", 16),
    ("Entire Summer Sales", "Company sales over the summer season.", 13),
    ("Expense Report", "Expenses with Tax = Subtotal * Tax rate and Total = Subtotal + Tax.", 6),
    ("Future Value", "Investments whose future value is Present Value * (1 + Rate / Periods) ^ (Years * Periods).", 7),
    ("GDP Breakdown", "Economic indicators by country and year on \"Sheet1\" and selected countries on \"Sheet2\".", 7),
    ("Income Statement", "Annual accounts: Gross Profit = Net Sales - COGS, Operating Profit = Gross Profit - Operating Expenses, Net Profit = Operating Profit - Tax.", 5),
    ("Income Statement 2", "Yearly accounts: Gross Profit = Net Sales - COGS, Net Sales = Sales - Returns - Discounts, COGS = Materials + Labor + Overhead.", 9),
    ("Invoices", "Invoices issued on different dates.", 16),
    ("Maturity Date", "Loans and their lengths in days.", 8),
    ("Net Income", "Revenues and expenses; Net Income = Revenue - Total Expenses.", 3),
    ("Period Rate", "Annual investment rates; Period Rate = Annual Rate / Periods per Year.", 5),
    ("Present Value", "Investments whose present value is Future Value / (1 + Rate / Periods) ^ (Years * Periods).", 6),
    ("Pricing Table", "Fence-roll transactions on \"Sheet1\" and a quantity-based price table on \"Pricing Table\".", 10),
    ("Ramp Up And Down", "Block acceleration in two scenarios, in columns A to B and C to D.", 5),
    ("Sales Rep", "Monthly sales per employee.", 6),
    ("Shipping Costs", "Distances from customers to four destinations; shipping is $3.11 per mile with a $75 minimum.", 7),
    ("Simple Compound Interest", "Simple and compound interest on investments.", 2),
    ("Small Balance Sheet", "Assets, liabilities and owners' equity totals.", 7),
    ("Stock Change", "Stock values on two dates.", 4),
    ("Summer Sales", "Company sales during the summer.", 9),
    ("Tax", "Weekly sales used for tax: Profit Before Tax = Sales - Expenses, Tax Expense = Profit Before Tax * Tax Rate.", 6),
    ("Velocity Displacement", "Velocity against displacement.", 7),
    ("Weekly Sales", "Weekly sales and COGS; Profit = Sales - COGS.", 13),
    ("XY Scatter Plot", "Range and height against projection angle.", 10),
];

pub fn is_known_workbook(name: &str) -> bool {
    WORKBOOKS.iter().any(|(n, _, _)| *n == name)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus has {} problem(s):\n  {}", .0.len(), .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("cannot take {k} exemplar(s) from a pool of {available}")]
    Range { k: usize, available: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub workbook: String,
    pub categories: Vec<String>,
    pub code: String,
    pub reference_steps: Vec<String>,
    pub sheet_state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_workbook: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub total: usize,
    pub per_category: BTreeMap<String, usize>,
    pub per_workbook: BTreeMap<String, usize>,
    /// Ids of the instances used for the few-shot sweep.
    pub sweep_subset: Vec<String>,
}

impl Manifest {
    /// Counts recomputed from `instances`, keeping the given sweep subset.
    pub fn recount(instances: &[TaskInstance], sweep_subset: Vec<String>) -> Self {
        let mut per_category = BTreeMap::new();
        let mut per_workbook = BTreeMap::new();
        for inst in instances {
            for c in &inst.categories {
                *per_category.entry(c.clone()).or_insert(0) += 1;
            }
            *per_workbook.entry(inst.workbook.clone()).or_insert(0) += 1;
        }
        Manifest {
            total: instances.len(),
            per_category,
            per_workbook,
            sweep_subset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub instances: Vec<TaskInstance>,
    pub manifest: Manifest,
}

/// Strip a leading `Step k.` (optionally bulleted) from a reference step.
pub fn normalize_step(step: &str) -> String {
    let s = step.trim();
    let s = s.strip_prefix('-').map_or(s, str::trim_start);
    if let Some(rest) = s.strip_prefix("Step") {
        let rest = rest.trim_start();
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 {
            if let Some(after) = rest[digits..].strip_prefix('.').or_else(|| rest[digits..].strip_prefix(':')) {
                return after.trim().to_string();
            }
        }
    }
    s.to_string()
}

/// Sidecar manifest path: `corpus.jsonl` → `corpus.manifest.json`.
pub fn manifest_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("manifest.json")
}

impl Corpus {
    /// Build a corpus, normalizing steps and validating every instance.
    pub fn new(instances: Vec<TaskInstance>, sweep_subset: Vec<String>) -> Result<Self, DatasetError> {
        let mut instances = instances;
        for inst in &mut instances {
            inst.reference_steps = inst.reference_steps.iter().map(|s| normalize_step(s)).collect();
        }
        let mut problems = Vec::new();
        validate_instances(&instances, &mut problems);
        let ids: HashSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
        for id in &sweep_subset {
            if !ids.contains(id.as_str()) {
                problems.push(format!("sweep subset names unknown id `{id}`"));
            }
        }
        if !problems.is_empty() {
            return Err(DatasetError::Schema(problems));
        }
        let manifest = Manifest::recount(&instances, sweep_subset);
        Ok(Corpus { instances, manifest })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TaskInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Instances of the sweep subset, in corpus order.
    pub fn sweep_instances(&self) -> Vec<&TaskInstance> {
        let ids: HashSet<&str> = self.manifest.sweep_subset.iter().map(String::as_str).collect();
        self.instances.iter().filter(|i| ids.contains(i.id.as_str())).collect()
    }

    /// Non-sweep instances in a seeded random order. Exemplars for `k`
    /// shots are the first `k` entries, so smaller shot counts use a
    /// prefix of larger ones.
    pub fn exemplar_pool(&self, seed: u64) -> Vec<&TaskInstance> {
        let sweep: HashSet<&str> = self.manifest.sweep_subset.iter().map(String::as_str).collect();
        let mut pool: Vec<&TaskInstance> = self.instances.iter().filter(|i| !sweep.contains(i.id.as_str())).collect();
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        pool
    }
}

fn validate_instances(instances: &[TaskInstance], problems: &mut Vec<String>) {
    let catalog = ActionCatalog::seed();
    let mut seen = HashSet::new();
    for (n, inst) in instances.iter().enumerate() {
        let at = if inst.id.is_empty() {
            format!("instance #{}", n + 1)
        } else {
            format!("instance `{}`", inst.id)
        };
        if inst.id.trim().is_empty() {
            problems.push(format!("{at}: empty id"));
        } else if !seen.insert(inst.id.as_str()) {
            problems.push(format!("{at}: duplicate id `{}`", inst.id));
        }
        if !is_known_workbook(&inst.workbook) {
            problems.push(format!("{at}: unknown workbook `{}`", inst.workbook));
        }
        if inst.categories.is_empty() {
            problems.push(format!("{at}: no categories"));
        }
        for c in &inst.categories {
            if !CATEGORIES.contains(&c.as_str()) {
                problems.push(format!("{at}: unknown category `{c}`"));
            }
        }
        if inst.reference_steps.is_empty() {
            problems.push(format!("{at}: no reference steps"));
        }
        if inst.reference_steps.iter().any(|s| s.trim().is_empty()) {
            problems.push(format!("{at}: empty reference step"));
        }
        match parse_script(&inst.code, &catalog) {
            Err(e) => problems.push(format!("{at}: code does not parse: {e}")),
            Ok(script) => {
                for d in validate_script(&script, &catalog).iter().filter(|d| d.is_error()) {
                    problems.push(format!("{at}: {d}"));
                }
            }
        }
    }
}

/// Load a JSON Lines corpus and its manifest sidecar, if present. All
/// problems found are reported together.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut instances = Vec::new();
    let mut problems = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TaskInstance>(line) {
            Ok(inst) => instances.push(inst),
            Err(e) => problems.push(format!("line {}: {e}", n + 1)),
        }
    }

    let mpath = manifest_path(path);
    let stored: Option<Manifest> = match fs::read_to_string(&mpath) {
        Ok(t) => match serde_json::from_str(&t) {
            Ok(m) => Some(m),
            Err(e) => {
                problems.push(format!("{}: {e}", mpath.display()));
                None
            }
        },
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&mpath)(e)),
    };

    let corpus = Corpus::new(instances, stored.as_ref().map(|m| m.sweep_subset.clone()).unwrap_or_default());
    let corpus = match corpus {
        Ok(c) if problems.is_empty() => c,
        Ok(_) => return Err(DatasetError::Schema(problems)),
        Err(DatasetError::Schema(more)) => {
            problems.extend(more);
            return Err(DatasetError::Schema(problems));
        }
        Err(e) => return Err(e),
    };
    if let Some(m) = stored {
        if m != corpus.manifest {
            return Err(DatasetError::Schema(vec![format!(
                "{}: stored counts differ from the instances (stored total {}, found {})",
                mpath.display(),
                m.total,
                corpus.manifest.total
            )]));
        }
    }
    Ok(corpus)
}

/// Write the corpus as JSON Lines plus a recomputed manifest sidecar.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut text = String::new();
    for inst in &corpus.instances {
        text.push_str(&serde_json::to_string(inst).expect("instances are serializable"));
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))?;
    let manifest = Manifest::recount(&corpus.instances, corpus.manifest.sweep_subset.clone());
    let mpath = manifest_path(path);
    let mut mtext = serde_json::to_string_pretty(&manifest).expect("manifest is serializable");
    mtext.push('\n');
    fs::write(&mpath, mtext).map_err(io_err(&mpath))
}

/// Split into `k` exemplars and the evaluation set. Exemplars come from
/// [`Corpus::exemplar_pool`]; evaluation is everything else in corpus order.
pub fn split_shots(corpus: &Corpus, k: usize, seed: u64) -> Result<(Vec<TaskInstance>, Vec<TaskInstance>), DatasetError> {
    let pool = corpus.exemplar_pool(seed);
    if k >= corpus.len() || k > pool.len() {
        return Err(DatasetError::Range {
            k,
            available: pool.len().min(corpus.len().saturating_sub(1)),
        });
    }
    let exemplars: Vec<TaskInstance> = pool[..k].iter().map(|&i| i.clone()).collect();
    let taken: HashSet<&str> = exemplars.iter().map(|i| i.id.as_str()).collect();
    let evaluation = corpus.instances.iter().filter(|i| !taken.contains(i.id.as_str())).cloned().collect();
    Ok((exemplars, evaluation))
}
