//! Bonus-point compensation for disparity in score-based top-k selection.
//!
//! A ranking function scores every record; the best `k` fraction is
//! selected. When protected groups are under- or over-represented in the
//! selection, [`dca`] finds one additive bonus per fairness attribute that
//! brings the selection back towards parity. The bonus vector is small,
//! rounded to a chosen granularity, and explains the intervention on its own.
//!
//! ```
//! use dca::prelude::*;
//!
//! let spec = SyntheticSpec {
//!     n_records: 2_000,
//!     seed: 7,
//!     groups: vec![GroupSpec { name: "low_income".into(), frequency: 0.3 }],
//!     continuous: vec![],
//!     scores: vec![ScoreDistSpec {
//!         name: "grade".into(),
//!         weight: 1.0,
//!         distribution: Distribution::Normal { mean: 0.6, std_dev: 0.15 },
//!         shifts: [("low_income".to_string(), -0.1)].into(),
//!     }],
//!     correlation: 0.0,
//!     outcome: None,
//! };
//! let table = generate_synthetic(&spec).unwrap();
//! let ranking = spec.ranking_spec(0.1, 100.0).unwrap();
//! let result = run_dca(&table, &ranking, &DcaConfig::default()).unwrap();
//! assert!(result.objective_after.norm < result.objective_before.norm);
//! ```

pub mod baselines;
pub mod cli;
pub mod data;
pub mod dca;
pub mod error;
pub mod metrics;
pub mod model;

pub use error::{DcaError, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::baselines::{greedy_reranker, grid_search_oracle, quota_select, ConstraintSet, QuotaSpec};
    pub use crate::data::{
        generate_synthetic, load_csv, load_dataset, summarize, DatasetConfig, Distribution, GroupSpec, ScoreDistSpec,
        SyntheticSpec,
    };
    pub use crate::dca::{core_dca, refine, run_dca, scale_bonus_for_utility, DcaConfig, DcaResult, UtilityTarget};
    pub use crate::error::{DcaError, Result};
    pub use crate::metrics::{
        disparity, ndcg_for_bonus, CheckpointRule, DisparityVector, Discounting, MetricKind, Objective,
    };
    pub use crate::model::{
        select_with_bonus, BonusVector, FairnessColumn, Orientation, RankingSpec, RecordTable, SampleSpec, ScoreColumn,
    };
}
