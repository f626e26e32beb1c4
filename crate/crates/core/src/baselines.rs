//! Comparison methods: a single set-aside quota, a greedy constrained
//! re-ranker, and an exhaustive grid search over bonus vectors.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DcaError, Result};
use crate::metrics::{dcg, DisparityVector, Objective};
use crate::model::{
    rank_order, selection_count, top_rows, AttrKind, BonusVector, RankingSpec, RecordTable, ScoringPlan,
    SelectionResult,
};

/// Largest grid the oracle agrees to enumerate.
pub const ORACLE_GRID_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotaSpec {
    pub quota_fraction: f64,
    /// A record is protected when any of these binary attributes is 1.
    pub protected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotaSelection {
    pub selection: SelectionResult,
    pub reserved: usize,
    pub protected_selected: usize,
    /// Fewer protected records exist than reserved slots.
    pub shortfall: bool,
}

fn binary_cols(table: &RecordTable, attrs: &[String]) -> Result<Vec<usize>> {
    let cols = table.fairness_indices(attrs)?;
    for &c in &cols {
        let col = &table.fairness_columns()[c];
        if col.kind != AttrKind::Binary {
            return Err(DcaError::config(format!("`{}` is not a binary attribute", col.name)));
        }
    }
    Ok(cols)
}

fn base_keys(table: &RecordTable, spec: &RankingSpec) -> Result<Vec<f64>> {
    let plan = ScoringPlan::new(table, spec, &[])?;
    Ok((0..table.len()).map(|r| plan.key(table, r, &[])).collect())
}

fn ranked_selection(table: &RecordTable, keys: &[f64], mut rows: Vec<usize>, raised: bool) -> SelectionResult {
    let ids = table.ids();
    rows.sort_unstable_by(|&a, &b| rank_order((keys[a], ids[a]), (keys[b], ids[b])));
    let threshold = rows.last().map(|&r| keys[r]).unwrap_or(f64::NAN);
    SelectionResult::from_ranked_rows(table, rows, threshold, raised)
}

/// Top-k selection with `floor(quota_fraction * k_count)` slots set aside for protected records.
pub fn quota_select(table: &RecordTable, spec: &RankingSpec, quota: &QuotaSpec) -> Result<QuotaSelection> {
    if quota.protected.is_empty() {
        return Err(DcaError::config("quota needs at least one protected attribute"));
    }
    if !(0.0..=1.0).contains(&quota.quota_fraction) {
        return Err(DcaError::config(format!("quota fraction {} outside [0, 1]", quota.quota_fraction)));
    }
    let cols = binary_cols(table, &quota.protected)?;
    let keys = base_keys(table, spec)?;
    let (m, raised) = selection_count(spec.k, table.len());
    let reserved = ((quota.quota_fraction * m as f64) + 1e-9).floor() as usize;
    let is_protected = |r: usize| cols.iter().any(|&c| table.fairness_columns()[c].values[r] == 1.0);

    let protected: Vec<usize> = (0..table.len()).filter(|&r| is_protected(r)).collect();
    let mut chosen: Vec<usize> = top_rows(table, &protected, reserved, |r| keys[r]).into_iter().map(|(r, _)| r).collect();
    let shortfall = chosen.len() < reserved;
    let mut taken = vec![false; table.len()];
    for &r in &chosen {
        taken[r] = true;
    }
    let rest: Vec<usize> = (0..table.len()).filter(|&r| !taken[r]).collect();
    chosen.extend(top_rows(table, &rest, m - chosen.len(), |r| keys[r]).into_iter().map(|(r, _)| r));
    let protected_selected = chosen.iter().filter(|&&r| is_protected(r)).count();
    Ok(QuotaSelection {
        selection: ranked_selection(table, &keys, chosen, raised),
        reserved,
        protected_selected,
        shortfall,
    })
}

/// Minimum member counts per binary group within the selected set.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub minima: BTreeMap<String, usize>,
}

impl ConstraintSet {
    pub fn new(minima: impl IntoIterator<Item = (String, usize)>) -> Self {
        Self { minima: minima.into_iter().collect() }
    }

    /// `ceil((population mean + target) * k_count)` per attribute, clamped to `[0, k_count]`.
    pub fn from_target(table: &RecordTable, target: &DisparityVector, k_count: usize) -> Result<Self> {
        let cols = binary_cols(table, &target.names)?;
        let minima = target
            .names
            .iter()
            .zip(&target.components)
            .zip(cols)
            .map(|((name, &t), c)| {
                let want = ((table.fairness_mean(c) + t) * k_count as f64 - 1e-9).ceil();
                (name.clone(), want.clamp(0.0, k_count as f64) as usize)
            })
            .collect();
        Ok(Self { minima })
    }

    /// Group counts realised by an existing selection.
    pub fn from_selection(table: &RecordTable, selection: &SelectionResult, attrs: &[String]) -> Result<Self> {
        let cols = binary_cols(table, attrs)?;
        let minima = attrs
            .iter()
            .zip(cols)
            .map(|(name, c)| {
                let v = &table.fairness_columns()[c].values;
                (name.clone(), selection.selected_rows.iter().filter(|&&r| v[r] == 1.0).count())
            })
            .collect();
        Ok(Self { minima })
    }

    pub fn is_empty(&self) -> bool {
        self.minima.values().all(|&m| m == 0)
    }

    /// Whether `selection` meets every minimum.
    pub fn satisfied_by(&self, table: &RecordTable, selection: &SelectionResult) -> Result<bool> {
        for (name, &min) in &self.minima {
            let col = table
                .fairness_column(name)
                .ok_or_else(|| DcaError::config(format!("unknown fairness attribute `{name}`")))?;
            let count = selection.selected_rows.iter().filter(|&&r| col.values[r] == 1.0).count();
            if count < min {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Records bucketed by which constrained groups they belong to.
struct Buckets {
    /// Group membership bitmask of each bucket.
    masks: Vec<u32>,
    /// Rows of each bucket, best first, consumed from the front.
    queues: Vec<Vec<usize>>,
    heads: Vec<usize>,
}

impl Buckets {
    fn available(&self, b: usize) -> usize {
        self.queues[b].len() - self.heads[b]
    }

    /// Greedy cover: can `slots` more records bring every deficit to zero?
    fn can_cover(&self, deficits: &[usize], slots: usize, taken_from: Option<usize>) -> bool {
        let mut deficits = deficits.to_vec();
        let mut avail: Vec<usize> = (0..self.masks.len()).map(|b| self.available(b)).collect();
        if let Some(b) = taken_from {
            avail[b] -= 1;
        }
        let mut slots = slots;
        loop {
            let open: u32 = deficits
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .fold(0, |m, (g, _)| m | (1 << g));
            if open == 0 {
                return true;
            }
            if slots == 0 {
                return false;
            }
            let best = (0..self.masks.len())
                .filter(|&b| avail[b] > 0 && self.masks[b] & open != 0)
                .max_by_key(|&b| ((self.masks[b] & open).count_ones(), std::cmp::Reverse(b)));
            let Some(b) = best else { return false };
            let covered = self.masks[b] & open;
            let step_size = (0..deficits.len())
                .filter(|g| covered & (1 << g) != 0)
                .map(|g| deficits[g])
                .min()
                .unwrap_or(0)
                .min(avail[b])
                .min(slots);
            for (g, d) in deficits.iter_mut().enumerate() {
                if covered & (1 << g) != 0 {
                    *d -= step_size.min(*d);
                }
            }
            avail[b] -= step_size;
            slots -= step_size;
        }
    }
}

/// Position-by-position re-ranking: each slot goes to the unplaced record
/// with the largest DCG gain whose placement still leaves room to meet
/// every group minimum.
///
/// Gains are unadjusted selection keys, so the best feasible record is the
/// one with the highest key. Returns the top `k_count` prefix in placement order.
pub fn greedy_reranker(table: &RecordTable, spec: &RankingSpec, constraints: &ConstraintSet) -> Result<SelectionResult> {
    let names: Vec<String> = constraints.minima.keys().cloned().collect();
    if names.len() > 31 {
        return Err(DcaError::config("at most 31 constrained groups are supported"));
    }
    let cols = binary_cols(table, &names)?;
    let keys = base_keys(table, spec)?;
    let (m, raised) = selection_count(spec.k, table.len());
    let minima: Vec<usize> = constraints.minima.values().copied().collect();

    for ((name, &min), &c) in names.iter().zip(&minima).zip(&cols) {
        let members = table.fairness_columns()[c].values.iter().filter(|&&v| v == 1.0).count();
        if min > m {
            return Err(DcaError::infeasible(format!(
                "group `{name}` needs {min} records but only {m} are selected"
            )));
        }
        if min > members {
            return Err(DcaError::infeasible(format!(
                "group `{name}` needs {min} records but has only {members} members"
            )));
        }
    }

    let order = crate::model::full_ranking(table, &keys);
    let mut by_mask: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &r in &order {
        let mask = cols
            .iter()
            .enumerate()
            .filter(|(_, &c)| table.fairness_columns()[c].values[r] == 1.0)
            .fold(0u32, |acc, (g, _)| acc | (1 << g));
        by_mask.entry(mask).or_default().push(r);
    }
    let (masks, queues): (Vec<u32>, Vec<Vec<usize>>) = by_mask.into_iter().unzip();
    let mut buckets = Buckets { heads: vec![0; masks.len()], masks, queues };

    let mut deficits = minima.clone();
    if !buckets.can_cover(&deficits, m, None) {
        let g = deficits.iter().enumerate().max_by_key(|(_, &d)| d).map(|(g, _)| g).unwrap_or(0);
        return Err(DcaError::infeasible(format!(
            "constraints cannot all be met within {m} slots; group `{}` cannot reach {}",
            names[g], minima[g]
        )));
    }

    let ids = table.ids();
    let mut placed = Vec::with_capacity(m);
    for pos in 0..m {
        let remaining = m - pos - 1;
        let mut candidates: Vec<usize> = (0..buckets.masks.len()).filter(|&b| buckets.available(b) > 0).collect();
        candidates.sort_by(|&a, &b| {
            let ra = buckets.queues[a][buckets.heads[a]];
            let rb = buckets.queues[b][buckets.heads[b]];
            rank_order((keys[ra], ids[ra]), (keys[rb], ids[rb]))
        });
        let mut chosen = None;
        for b in candidates {
            let after: Vec<usize> = deficits
                .iter()
                .enumerate()
                .map(|(g, &d)| if buckets.masks[b] & (1 << g) != 0 { d.saturating_sub(1) } else { d })
                .collect();
            if buckets.can_cover(&after, remaining, Some(b)) {
                chosen = Some((b, after));
                break;
            }
        }
        let (b, after) = chosen.ok_or_else(|| {
            let g = deficits.iter().enumerate().max_by_key(|(_, &d)| d).map(|(g, _)| g).unwrap_or(0);
            DcaError::infeasible(format!("group `{}` cannot reach its minimum of {}", names[g], minima[g]))
        })?;
        placed.push(buckets.queues[b][buckets.heads[b]]);
        buckets.heads[b] += 1;
        deficits = after;
    }
    let threshold = placed.last().map(|&r| keys[r]).unwrap_or(f64::NAN);
    Ok(SelectionResult::from_ranked_rows(table, placed, threshold, raised))
}

/// nDCG@k of a selection listed in its own order, against the unadjusted top-k.
pub fn selection_ndcg(table: &RecordTable, spec: &RankingSpec, selection: &SelectionResult) -> Result<f64> {
    let keys = base_keys(table, spec)?;
    let rows: Vec<usize> = (0..table.len()).collect();
    let (depth, _) = selection_count(spec.k, table.len());
    let original: Vec<usize> = top_rows(table, &rows, depth, |r| keys[r]).into_iter().map(|(r, _)| r).collect();
    let ideal = dcg(&original, &keys, depth);
    if ideal == 0.0 || !ideal.is_finite() {
        return Err(DcaError::data("ideal DCG is zero; all original scores are zero"));
    }
    Ok(dcg(&selection.selected_rows, &keys, depth) / ideal)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub bonus: BonusVector,
    pub norm: f64,
    pub grid_points: u64,
}

const NORM_TIE: f64 = 1e-12;

/// Total order used to pick the oracle winner: norm, then L1, then lexicographic values.
fn better(a: &(f64, f64, Vec<f64>), b: &(f64, f64, Vec<f64>)) -> bool {
    if (a.0 - b.0).abs() > NORM_TIE {
        return a.0 < b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2.iter().zip(&b.2).find(|(x, y)| x != y).map(|(x, y)| x < y).unwrap_or(false)
}

/// Exhaustive search over `{0, g, 2g, .., bonus_max}^|F|` for the smallest full-table objective norm.
///
/// Ties within 1e-12 go to the smaller L1 norm, then to the lexicographically smaller vector.
pub fn grid_search_oracle(
    table: &RecordTable,
    spec: &RankingSpec,
    attrs: &[String],
    granularity: f64,
    bonus_max: f64,
    objective: &Objective,
) -> Result<OracleResult> {
    if !(granularity > 0.0) || !granularity.is_finite() {
        return Err(DcaError::config("granularity must be positive"));
    }
    if !(bonus_max >= 0.0) || !bonus_max.is_finite() {
        return Err(DcaError::config("bonus_max must be a finite nonnegative number"));
    }
    objective.validate(table, attrs)?;
    let steps = (bonus_max / granularity + 1e-9).floor() as u64 + 1;
    let grid = (0..attrs.len()).try_fold(1u64, |acc, _| acc.checked_mul(steps));
    let grid = match grid {
        Some(g) if g <= ORACLE_GRID_LIMIT => g,
        _ => {
            return Err(DcaError::config(format!(
                "oracle grid of {steps}^{} points exceeds {ORACLE_GRID_LIMIT}; use a coarser granularity or a smaller bonus_max",
                attrs.len()
            )))
        }
    };
    let plan = ScoringPlan::new(table, spec, attrs)?;
    let all: Vec<usize> = (0..table.len()).collect();
    let point = |mut idx: u64| -> Vec<f64> {
        let mut v = vec![0.0; attrs.len()];
        for slot in v.iter_mut().rev() {
            *slot = (idx % steps) as f64 * granularity;
            idx /= steps;
        }
        v
    };
    let best = (0..grid)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, Vec<f64>)> {
            let v = point(i);
            let d = objective.evaluate_rows(table, &plan, &v, &all, spec.k)?;
            Ok((d.norm, v.iter().sum(), v))
        })
        .try_reduce_with(|a, b| Ok(if better(&b, &a) { b } else { a }))
        .expect("grid has at least one point")?;
    Ok(OracleResult {
        bonus: BonusVector::new(attrs.to_vec(), best.2, granularity)?,
        norm: best.0,
        grid_points: grid,
    })
}
