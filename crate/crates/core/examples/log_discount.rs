//! Fit bonuses for every prefix of the ranking up to `k_max` instead of a
//! single cutoff, then compare disparity across cutoffs.
//!
//! cargo run --example log_discount

use dca::prelude::*;

fn population() -> SyntheticSpec {
    SyntheticSpec {
        n_records: 40_000,
        seed: 3,
        groups: vec![GroupSpec { name: "rural".into(), frequency: 0.35 }],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "exam".into(),
            weight: 1.0,
            // a narrower spread inside the group makes the gap depend on the cutoff
            distribution: Distribution::Normal { mean: 0.55, std_dev: 0.15 },
            shifts: [("rural".to_string(), -0.07)].into(),
        }],
        correlation: 0.0,
        outcome: None,
    }
}

fn main() -> Result<()> {
    let spec = population();
    let table = generate_synthetic(&spec)?;
    let k_max = 0.4;
    let ranking = spec.ranking_spec(k_max, 100.0)?;
    let names = table.fairness_names();

    let at_k = run_dca(&table, &ranking.with_k(0.1)?, &DcaConfig::default())?;
    let discounted = run_dca(
        &table,
        &ranking,
        &DcaConfig { objective: Objective::log_discounted(MetricKind::Disparity, k_max), ..DcaConfig::default() },
    )?;
    println!("bonus fitted at k=0.1:        {:?}", at_k.bonus.values());
    println!("bonus fitted over k<={k_max}:    {:?}", discounted.bonus.values());
    println!("log-discounted objective: {:.4} -> {:.4}", discounted.objective_before.norm, discounted.objective_after.norm);

    println!("\n{:>6} {:>10} {:>10} {:>10}", "k", "none", "at k=0.1", "log-disc");
    let zero = BonusVector::zeros(names.clone(), 0.5);
    for k in [0.02, 0.05, 0.1, 0.2, 0.3, 0.4] {
        let r = ranking.with_k(k)?;
        let d = |b: &BonusVector| -> Result<f64> { Ok(disparity(&table, &select_with_bonus(&table, &r, b)?, &names)?.components[0]) };
        println!("{k:>6} {:>+10.4} {:>+10.4} {:>+10.4}", d(&zero)?, d(&at_k.bonus)?, d(&discounted.bonus)?);
    }
    Ok(())
}
