//! Runs one study at its default settings and prints the headline checks.
//!
//! ```text
//! cargo run --release -p semf1-core --example headline -- A
//! ```

use std::time::Instant;

use semf1_core::study::{run_study, RunOptions, StudyConfig, StudyKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: StudyKind = std::env::args().nth(1).unwrap_or_else(|| "A".into()).parse()?;
    let start = Instant::now();
    let out = run_study(&StudyConfig::default_for(kind), RunOptions::default())?;
    println!("study {} ({} cells, {:.1?})", kind.name(), out.cells.len(), start.elapsed());
    for c in &out.summary.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.id, c.detail);
    }
    Ok(())
}
