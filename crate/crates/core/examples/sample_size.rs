//! How the sample size per iteration affects accuracy and run time.
//!
//! cargo run --release --example sample_size

use dca::data::summarize;
use dca::prelude::*;

fn main() -> Result<()> {
    let spec = SyntheticSpec {
        n_records: 200_000,
        seed: 2,
        groups: vec![
            GroupSpec { name: "common".into(), frequency: 0.4 },
            GroupSpec { name: "rare".into(), frequency: 0.03 },
        ],
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "score".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev: 0.12 },
            shifts: [("common".to_string(), -0.06), ("rare".to_string(), -0.1)].into(),
        }],
        correlation: 0.0,
        outcome: None,
    };
    let table = generate_synthetic(&spec)?;
    let ranking = spec.ranking_spec(0.1, 100.0)?;
    let summary = summarize(&table, ranking.k, None);
    println!(
        "rarest group frequency {:.3}; recommended sample size {}",
        summary.rarest_group_frequency.unwrap_or(f64::NAN),
        summary.recommended_sample_size
    );

    println!("{:>8} {:>16} {:>10} {:>10}", "sample", "bonus", "norm", "loop ms");
    for size in [100, 250, 500, 1_000, 2_000, 5_000] {
        let config = DcaConfig { sample: SampleSpec { sample_size: size, ..SampleSpec::default() }, ..DcaConfig::default() };
        let r = run_dca(&table, &ranking, &config)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "{size:>8} {:>16} {:>10.4} {:>10.1}",
            format!("{:?}", r.bonus.values()),
            r.objective_after.norm,
            r.loop_time.as_secs_f64() * 1e3
        );
    }
    Ok(())
}
