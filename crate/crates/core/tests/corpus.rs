//! Checks on the shipped corpus under data/.

use std::path::PathBuf;

use sod_core::dataset::{load_corpus, split_shots, CATEGORIES, WORKBOOKS};
use sod_core::harness::check_seed_execution;
use sod_core::workbook::load_workbook;

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn loads_with_matching_manifest() {
    let corpus = load_corpus(data().join("sodbench.jsonl")).unwrap();
    assert_eq!(corpus.len(), 111);
    assert_eq!(corpus.manifest.sweep_subset.len(), 20);
    assert_eq!(corpus.manifest.per_workbook.len(), WORKBOOKS.len());
    assert!(corpus.manifest.per_category.keys().all(|c| CATEGORIES.contains(&c.as_str())));
    let (held, eval) = split_shots(&corpus, 4, 42).unwrap();
    assert_eq!((held.len(), eval.len()), (4, 107));
}

#[test]
fn every_instance_runs_on_its_seed_workbook() {
    let corpus = load_corpus(data().join("sodbench.jsonl")).unwrap();
    assert!(corpus.instances.iter().all(|i| i.seed_workbook.is_some()));
    let problems = check_seed_execution(&corpus, &data().join("workbooks"));
    assert!(problems.is_empty(), "{problems:#?}");
}

#[test]
fn sheet_state_matches_seed_workbook() {
    let corpus = load_corpus(data().join("sodbench.jsonl")).unwrap();
    for inst in &corpus.instances {
        let book = load_workbook(data().join("workbooks").join(inst.seed_workbook.as_ref().unwrap())).unwrap();
        assert_eq!(inst.sheet_state, book.describe(), "{}", inst.id);
    }
}

#[test]
fn steps_line_up_with_groups() {
    let catalog = sod_core::xwapi::ActionCatalog::seed();
    let corpus = load_corpus(data().join("sodbench.jsonl")).unwrap();
    for inst in &corpus.instances {
        let script = sod_core::xwapi::parse_script(&inst.code, &catalog).unwrap();
        assert_eq!(script.groups.len(), inst.reference_steps.len(), "{}", inst.id);
    }
}
