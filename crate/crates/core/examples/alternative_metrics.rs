//! The optimizer accepts other group-level objectives; exposure-based DDP is
//! reported alongside.
//!
//! cargo run --example alternative_metrics

use dca::data::OutcomeSpec;
use dca::metrics::{ddp_for_bonus, disparate_impact_scaled, fpr_gap};
use dca::prelude::*;

fn main() -> Result<()> {
    let spec = SyntheticSpec {
        n_records: 30_000,
        seed: 8,
        groups: vec![GroupSpec { name: "g".into(), frequency: 0.35 }],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "score".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev: 0.12 },
            shifts: [("g".to_string(), -0.09)].into(),
        }],
        correlation: 0.0,
        outcome: Some(OutcomeSpec { base_rate: 0.3, score_coupling: 0.6 }),
    };
    let table = generate_synthetic(&spec)?;
    let ranking = spec.ranking_spec(0.2, 100.0)?;
    let names = table.fairness_names();

    println!("{:<22} {:>7} {:>10} {:>10} {:>10} {:>8} {:>8}", "objective", "bonus", "disparity", "DI", "FPR gap", "DDP", "nDCG");
    let zero = BonusVector::zeros(names.clone(), 0.5);
    let mut bonuses = vec![("no bonus", zero)];
    for (label, kind) in [
        ("disparity", MetricKind::Disparity),
        ("disparate impact", MetricKind::DisparateImpact),
        ("false positive gap", MetricKind::FprGap),
    ] {
        let cfg = DcaConfig { objective: Objective::at_k(kind), ..DcaConfig::default() };
        bonuses.push((label, run_dca(&table, &ranking, &cfg)?.bonus));
    }
    for (label, b) in bonuses {
        let sel = select_with_bonus(&table, &ranking, &b)?;
        println!(
            "{label:<22} {:>7.1} {:>+10.4} {:>+10.4} {:>+10.4} {:>8.4} {:>8.4}",
            b.values()[0],
            disparity(&table, &sel, &names)?.components[0],
            disparate_impact_scaled(&table, &sel, &names)?.components[0],
            fpr_gap(&table, &sel, &names)?.components[0],
            ddp_for_bonus(&table, &ranking, &b, &names)?.value,
            ndcg_for_bonus(&table, &ranking, &b)?
        );
    }
    Ok(())
}
