//! Bonus points next to a quota, a constrained re-ranker and an exhaustive
//! grid search.
//!
//! cargo run --release --example baselines_comparison

use dca::baselines::selection_ndcg;
use dca::prelude::*;

fn main() -> Result<()> {
    let spec = SyntheticSpec {
        n_records: 20_000,
        seed: 4,
        groups: vec![
            GroupSpec { name: "a".into(), frequency: 0.3 },
            GroupSpec { name: "b".into(), frequency: 0.4 },
        ],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "score".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev: 0.12 },
            shifts: [("a".to_string(), -0.1), ("b".to_string(), -0.08)].into(),
        }],
        correlation: 0.2,
        outcome: None,
    };
    let table = generate_synthetic(&spec)?;
    let ranking = spec.ranking_spec(0.2, 100.0)?;
    let names = table.fairness_names();
    let row = |method: &str, sel: &dca::model::SelectionResult| -> Result<()> {
        let d = disparity(&table, sel, &names)?;
        println!(
            "{method:<10} {:>+9.4} {:>+9.4} {:>8.4} {:>8.4}",
            d.components[0],
            d.components[1],
            d.norm,
            selection_ndcg(&table, &ranking, sel)?
        );
        Ok(())
    };
    println!("{:<10} {:>9} {:>9} {:>8} {:>8}", "method", "a", "b", "norm", "nDCG");

    row("none", &select_with_bonus(&table, &ranking, &BonusVector::zeros(names.clone(), 0.5))?)?;

    let dca = run_dca(&table, &ranking, &DcaConfig::default())?;
    let dca_sel = select_with_bonus(&table, &ranking, &dca.bonus)?;
    row("dca", &dca_sel)?;

    let population = table.fairness_columns().iter().map(|c| c.values.iter().sum::<f64>()).sum::<f64>() / table.len() as f64;
    let quota = quota_select(&table, &ranking, &QuotaSpec { quota_fraction: population.min(1.0), protected: names.clone() })?;
    row("quota", &quota.selection)?;

    // same group counts as the bonus selection, filled greedily by score
    let constraints = ConstraintSet::from_selection(&table, &dca_sel, &names)?;
    row("greedy", &greedy_reranker(&table, &ranking, &constraints)?)?;

    let oracle = grid_search_oracle(&table, &ranking, &names, 0.5, 20.0, &Objective::default())?;
    row("oracle", &select_with_bonus(&table, &ranking, &oracle.bonus)?)?;

    println!("\ndca bonus {:?}, oracle bonus {:?} ({} grid points)", dca.bonus.values(), oracle.bonus.values(), oracle.grid_points);
    Ok(())
}
