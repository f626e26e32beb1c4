//! Generate a biased synthetic population, compute bonus points, and show
//! how the top 10% changes.
//!
//! cargo run --example quickstart

use dca::prelude::*;

fn main() -> Result<()> {
    // two groups whose scores run 8 and 5 points below everyone else's
    let spec = SyntheticSpec {
        n_records: 50_000,
        seed: 1,
        groups: vec![
            GroupSpec { name: "low_income".into(), frequency: 0.3 },
            GroupSpec { name: "first_gen".into(), frequency: 0.2 },
        ],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "grade".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev: 0.15 },
            shifts: [("low_income".to_string(), -0.08), ("first_gen".to_string(), -0.05)].into(),
        }],
        correlation: 0.3,
        outcome: None,
    };
    let table = generate_synthetic(&spec)?;
    let ranking = spec.ranking_spec(0.1, 100.0)?;

    let result = run_dca(&table, &ranking, &DcaConfig::default())?;

    println!("records: {}, selecting the top {:.0}%", table.len(), ranking.k * 100.0);
    println!("{:<12} {:>8} {:>10} {:>10}", "attribute", "bonus", "before", "after");
    for (i, (name, bonus)) in result.bonus.iter().enumerate() {
        println!(
            "{:<12} {:>8.1} {:>+10.4} {:>+10.4}",
            name, bonus, result.objective_before.components[i], result.objective_after.components[i]
        );
    }
    println!("disparity norm: {:.4} -> {:.4}", result.objective_before.norm, result.objective_after.norm);
    println!("nDCG@k with bonus: {:.4}", result.ndcg_after);
    println!("optimizer loop: {:.1} ms", result.loop_time.as_secs_f64() * 1e3);

    // the bonus is just a score adjustment, so anyone can apply it
    let selected = select_with_bonus(&table, &ranking, &result.bonus)?;
    println!("selected {} records; cutoff score {:.2}", selected.k_count, selected.threshold_score);
    Ok(())
}
