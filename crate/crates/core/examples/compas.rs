//! Bonus points on a real risk-assessment dataset where a low decile score
//! is better and the selection is the set of records flagged as high risk.
//!
//! cargo run --example compas [-- path/to/compas-scores-two-years.csv]

use std::path::PathBuf;

use dca::data::{load_compas, summarize};
use dca::metrics::{disparity, fpr_gap};
use dca::prelude::*;

fn main() -> Result<()> {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/compas-scores-two-years.csv")
    });
    let report = load_compas(&path, None)?;
    let table = report.table;
    if !report.skipped.is_empty() {
        eprintln!("skipped {} rows", report.skipped.len());
    }
    let k = 0.3;
    let ranking = dca::data::compas_config(&path, None).ranking_spec(Some(k))?;
    let summary = summarize(&table, k, Some(500));
    println!("{} defendants, top {:.0}% flagged", summary.n_records, k * 100.0);
    for a in &summary.fairness {
        println!("  {:<24} {:.3}", a.name, a.mean);
    }
    println!("recommended sample size: {}", summary.recommended_sample_size);

    let names = table.fairness_names();
    for (label, kind) in [("disparity", MetricKind::Disparity), ("false positive rate gap", MetricKind::FprGap)] {
        let config = DcaConfig { objective: Objective::at_k(kind), ..DcaConfig::default() };
        let result = run_dca(&table, &ranking, &config)?;
        let flagged = select_with_bonus(&table, &ranking, &result.bonus)?;
        let flagged_before = select_with_bonus(&table, &ranking, &BonusVector::zeros(names.clone(), 0.5))?;
        println!("\nobjective: {label}");
        println!("{:<24} {:>8} {:>12} {:>12} {:>10} {:>10}", "group", "bonus", "disp before", "disp after", "fpr before", "fpr after");
        let (d0, d1) = (disparity(&table, &flagged_before, &names)?, disparity(&table, &flagged, &names)?);
        let (f0, f1) = (fpr_gap(&table, &flagged_before, &names)?, fpr_gap(&table, &flagged, &names)?);
        for (i, name) in names.iter().enumerate() {
            println!(
                "{:<24} {:>8.1} {:>+12.4} {:>+12.4} {:>+10.4} {:>+10.4}",
                name,
                result.bonus.values()[i],
                d0.components[i],
                d1.components[i],
                f0.components[i],
                f1.components[i]
            );
        }
    }
    Ok(())
}
