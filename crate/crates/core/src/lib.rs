pub mod xwapi;
pub mod workbook;
pub mod transpile;
pub mod metrics;
pub mod stats;
pub mod dataset;
pub mod prompting;
pub mod retrieval;
pub mod harness;
