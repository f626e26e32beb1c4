#![allow(dead_code)]

use dca::data::{generate_synthetic, Distribution, GroupSpec, ScoreDistSpec, SyntheticSpec};
use dca::model::RecordTable;

/// One normal score attribute shifted down for members of each group.
pub fn shifted(n: usize, seed: u64, groups: &[(&str, f64, f64)], std_dev: f64) -> SyntheticSpec {
    SyntheticSpec {
        n_records: n,
        seed,
        groups: groups.iter().map(|&(name, frequency, _)| GroupSpec { name: name.into(), frequency }).collect(),
        continuous: vec![],
        scores: vec![ScoreDistSpec {
            name: "score".into(),
            weight: 1.0,
            distribution: Distribution::Normal { mean: 0.6, std_dev },
            shifts: groups.iter().map(|&(name, _, shift)| (name.to_string(), -shift)).collect(),
        }],
        correlation: 0.0,
        outcome: None,
    }
}

/// Two groups of 30% and 40%, scores 10 and 8 points lower.
pub fn moderate(n: usize, seed: u64) -> (SyntheticSpec, RecordTable) {
    let spec = shifted(n, seed, &[("a", 0.3, 0.10), ("b", 0.4, 0.08)], 0.12);
    let table = generate_synthetic(&spec).unwrap();
    (spec, table)
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}
