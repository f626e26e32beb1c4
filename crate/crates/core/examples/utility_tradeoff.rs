//! Shrink a bonus vector to trade fairness for ranking quality.
//!
//! cargo run --example utility_tradeoff

use dca::dca::scale_sweep;
use dca::prelude::*;

fn main() -> Result<()> {
    let spec = SyntheticSpec {
        n_records: 30_000,
        seed: 11,
        groups: vec![
            GroupSpec { name: "a".into(), frequency: 0.3 },
            GroupSpec { name: "b".into(), frequency: 0.25 },
        ],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "score".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev: 0.12 },
            shifts: [("a".to_string(), -0.12), ("b".to_string(), -0.06)].into(),
        }],
        correlation: 0.0,
        outcome: None,
    };
    let table = generate_synthetic(&spec)?;
    let ranking = spec.ranking_spec(0.1, 100.0)?;
    let objective = Objective::default();
    let full = run_dca(&table, &ranking, &DcaConfig::default())?;

    println!("{:>6} {:>16} {:>8} {:>8}", "scale", "bonus", "norm", "nDCG");
    for p in scale_sweep(&table, &ranking, &full.bonus, &objective, 0.1)? {
        println!("{:>6.1} {:>16} {:>8.4} {:>8.4}", p.scale, format!("{:?}", p.bonus.values()), p.norm, p.ndcg);
    }

    for target in [UtilityTarget::MinNdcg(0.99), UtilityTarget::MaxNorm(0.05)] {
        let p = scale_bonus_for_utility(&table, &ranking, &full.bonus, &objective, target)?;
        println!(
            "{target:?}: scale {:.3}, bonus {:?}, norm {:.4}, nDCG {:.4}{}",
            p.scale,
            p.bonus.values(),
            p.norm,
            p.ndcg,
            if p.feasible { "" } else { " (target not reachable)" }
        );
    }
    Ok(())
}
