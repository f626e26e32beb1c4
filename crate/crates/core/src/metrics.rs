//! Fairness and utility metrics.
//!
//! Every group metric here is a signed vector with one component per
//! fairness attribute, each in `[-1, 1]` and `0` at parity. A positive
//! component means the attribute is over-represented in the selection.
//! That shared shape is what lets any of them drive the optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{DcaError, Result};
use crate::model::{
    check_fraction, selection_count, top_rows, AttrKind, BonusVector, RankingSpec, RecordTable,
    ScoringPlan, SelectionResult,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisparityVector {
    pub names: Vec<String>,
    pub components: Vec<f64>,
    pub norm: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DisparityVector {
    pub fn new(names: Vec<String>, components: Vec<f64>) -> Self {
        let norm = l2(&components);
        Self { names, components, norm, warnings: Vec::new() }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.components[i])
    }

    pub fn is_parity(&self) -> bool {
        self.components.iter().all(|&c| c == 0.0)
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Centroid of the selection minus centroid of the population.
    #[default]
    Disparity,
    /// Selection-rate ratio between members and non-members, scaled to `[-1, 1]`.
    DisparateImpact,
    /// Per-group false positive rate minus the overall one.
    FprGap,
}

/// Which ranks enter a log-discounted average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointRule {
    /// Ranks `step, 2*step, ...` up to `floor(k_max * n)`.
    RankStep(usize),
    /// Explicit selection fractions, each at most `k_max`.
    Fractions(Vec<f64>),
}

impl Default for CheckpointRule {
    fn default() -> Self {
        Self::RankStep(10)
    }
}

impl CheckpointRule {
    /// Absolute 1-based ranks for a population of `n`.
    pub fn ranks(&self, n: usize, k_max: f64) -> Result<Vec<usize>> {
        let limit = ((k_max * n as f64) + 1e-9).floor() as usize;
        let ranks: Vec<usize> = match self {
            Self::RankStep(0) => return Err(DcaError::config("checkpoint step must be positive")),
            Self::RankStep(step) => (*step..=limit).step_by(*step).collect(),
            Self::Fractions(fs) => {
                let mut r = Vec::with_capacity(fs.len());
                for &f in fs {
                    check_fraction(f)?;
                    if f > k_max + 1e-12 {
                        return Err(DcaError::config(format!("checkpoint {f} exceeds k_max {k_max}")));
                    }
                    r.push(selection_count(f, n).0);
                }
                r.sort_unstable();
                r.dedup();
                r
            }
        };
        if ranks.is_empty() {
            return Err(DcaError::config(format!(
                "no log-discount checkpoints for n={n}, k_max={k_max}"
            )));
        }
        Ok(ranks)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Discounting {
    /// Evaluate at the ranking's selection fraction `k`.
    #[default]
    AtK,
    /// Weighted average over rank checkpoints with weights `1 / log2(rank + 1)`.
    LogDiscounted {
        k_max: f64,
        #[serde(default)]
        checkpoints: CheckpointRule,
    },
}

/// Vector-valued objective the optimizer drives toward zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: MetricKind,
    pub discounting: Discounting,
}

impl Objective {
    pub fn at_k(kind: MetricKind) -> Self {
        Self { kind, discounting: Discounting::AtK }
    }

    pub fn log_discounted(kind: MetricKind, k_max: f64) -> Self {
        Self {
            kind,
            discounting: Discounting::LogDiscounted { k_max, checkpoints: CheckpointRule::default() },
        }
    }

    /// Structural checks against a table, before any evaluation.
    pub fn validate(&self, table: &RecordTable, attrs: &[String]) -> Result<()> {
        let cols = table.fairness_indices(attrs)?;
        match self.kind {
            MetricKind::FprGap if table.outcome().is_none() => {
                return Err(DcaError::config("the FPR-gap metric needs an outcome column"))
            }
            MetricKind::DisparateImpact => {
                for &c in &cols {
                    let col = &table.fairness_columns()[c];
                    if col.kind != AttrKind::Binary {
                        return Err(DcaError::config(format!(
                            "disparate impact needs binary attributes; `{}` is continuous",
                            col.name
                        )));
                    }
                }
            }
            _ => {}
        }
        if let Discounting::LogDiscounted { k_max, .. } = &self.discounting {
            if !(*k_max > 0.0 && *k_max <= 1.0) {
                return Err(DcaError::config(format!("k_max must lie in (0, 1], got {k_max}")));
            }
        }
        Ok(())
    }

    /// Objective over the given population rows ranked under `bonus`.
    pub fn evaluate_rows(
        &self,
        table: &RecordTable,
        plan: &ScoringPlan,
        bonus: &[f64],
        rows: &[usize],
        k: f64,
    ) -> Result<DisparityVector> {
        let cols = plan.bonus_columns();
        let names = plan.bonus_names().to_vec();
        let all = Tally::over(table, cols, rows.iter().copied());
        let key = |r| plan.key(table, r, bonus);
        match &self.discounting {
            Discounting::AtK => {
                let (m, _) = selection_count(k, rows.len());
                let top = top_rows(table, rows, m, key);
                let sel = Tally::over(table, cols, top.iter().map(|&(r, _)| r));
                Ok(components(self.kind, names, &sel, &all))
            }
            Discounting::LogDiscounted { k_max, checkpoints } => {
                let ranks = checkpoints.ranks(rows.len(), *k_max)?;
                let deepest = *ranks.last().expect("non-empty");
                let top = top_rows(table, rows, deepest, key);
                discounted(self.kind, names, top.len(), &ranks, |t, pos| t.add(table, cols, top[pos].0), &all)
            }
        }
    }

    /// Objective over the whole table.
    pub fn evaluate(
        &self,
        table: &RecordTable,
        spec: &RankingSpec,
        bonus: &BonusVector,
    ) -> Result<DisparityVector> {
        let plan = ScoringPlan::new(table, spec, bonus.names())?;
        self.validate(table, bonus.names())?;
        let rows: Vec<usize> = (0..table.len()).collect();
        self.evaluate_rows(table, &plan, bonus.values(), &rows, spec.k)
    }
}

/// Row-major copy of what the sampling loop reads: raw score, outcome flag
/// and the bonus attributes, so one sampled record costs one memory fetch.
#[derive(Clone, Debug)]
pub(crate) struct PackedRows {
    stride: usize,
    data: Vec<f64>,
    sign: f64,
}

const RAW: usize = 0;
const NEGATIVE: usize = 1;
const ATTRS: usize = 2;

impl PackedRows {
    pub(crate) fn new(table: &RecordTable, plan: &ScoringPlan) -> Self {
        let cols = plan.bonus_columns();
        let stride = ATTRS + cols.len();
        let f = table.fairness_columns();
        let outcome = table.outcome();
        let mut data = Vec::with_capacity(stride * table.len());
        for row in 0..table.len() {
            data.push(plan.raw(table, row));
            data.push(if outcome.is_some_and(|o| o[row] == 0.0) { 1.0 } else { 0.0 });
            data.extend(cols.iter().map(|&c| f[c].values[row]));
        }
        Self { stride, data, sign: plan.orientation().sign() }
    }

    /// Same result as [`Objective::evaluate_rows`] over `rows`.
    pub(crate) fn evaluate(
        &self,
        objective: &Objective,
        names: &[String],
        ids: &[crate::model::RecordId],
        rows: &[usize],
        bonus: &[f64],
        k: f64,
    ) -> Result<DisparityVector> {
        let stride = self.stride;
        let mut buf = Vec::with_capacity(rows.len() * stride);
        for &r in rows {
            buf.extend_from_slice(&self.data[r * stride..(r + 1) * stride]);
        }
        let rec = |i: usize| &buf[i * stride..(i + 1) * stride];
        let key = |i: usize| {
            let v = rec(i);
            let bt: f64 = bonus.iter().zip(&v[ATTRS..]).map(|(b, a)| b * a).sum();
            self.sign * (self.sign * v[RAW] + bt)
        };
        let add = |t: &mut Tally, i: usize| {
            let v = rec(i);
            t.push(v[ATTRS..].iter().copied(), v[NEGATIVE] == 1.0);
        };
        let mut all = Tally::empty(names.len());
        for i in 0..rows.len() {
            add(&mut all, i);
        }
        let mut keyed: Vec<(f64, usize)> = (0..rows.len()).map(|i| (key(i), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then_with(|| ids[rows[a.1]].cmp(&ids[rows[b.1]]));
        let depth = match &objective.discounting {
            Discounting::AtK => selection_count(k, rows.len()).0,
            Discounting::LogDiscounted { k_max, checkpoints } => {
                *checkpoints.ranks(rows.len(), *k_max)?.last().expect("non-empty")
            }
        };
        let depth = depth.min(keyed.len());
        if depth < keyed.len() {
            keyed.select_nth_unstable_by(depth - 1, cmp);
            keyed.truncate(depth);
        }
        keyed.sort_unstable_by(cmp);
        match &objective.discounting {
            Discounting::AtK => {
                let mut sel = Tally::empty(names.len());
                for &(_, i) in &keyed {
                    add(&mut sel, i);
                }
                Ok(components(objective.kind, names.to_vec(), &sel, &all))
            }
            Discounting::LogDiscounted { k_max, checkpoints } => {
                let ranks = checkpoints.ranks(rows.len(), *k_max)?;
                discounted(objective.kind, names.to_vec(), keyed.len(), &ranks, |t, pos| add(t, keyed[pos].1), &all)
            }
        }
    }
}

/// Running sums over a set of rows.
#[derive(Clone, Debug)]
pub(crate) struct Tally {
    count: f64,
    attr: Vec<f64>,
    /// Rows with outcome 0 (real negatives).
    neg: f64,
    attr_neg: Vec<f64>,
}

impl Tally {
    fn empty(width: usize) -> Self {
        Self { count: 0.0, attr: vec![0.0; width], neg: 0.0, attr_neg: vec![0.0; width] }
    }

    #[inline]
    fn add(&mut self, table: &RecordTable, cols: &[usize], row: usize) {
        let f = table.fairness_columns();
        let negative = table.outcome().map(|o| o[row] == 0.0).unwrap_or(false);
        self.push(cols.iter().map(|&c| f[c].values[row]), negative);
    }

    #[inline]
    fn push(&mut self, values: impl Iterator<Item = f64>, negative: bool) {
        self.count += 1.0;
        if negative {
            self.neg += 1.0;
        }
        for (j, v) in values.enumerate() {
            self.attr[j] += v;
            if negative {
                self.attr_neg[j] += v;
            }
        }
    }

    pub(crate) fn over(table: &RecordTable, cols: &[usize], rows: impl Iterator<Item = usize>) -> Self {
        let mut t = Self::empty(cols.len());
        for r in rows {
            t.add(table, cols, r);
        }
        t
    }
}

fn components(kind: MetricKind, names: Vec<String>, sel: &Tally, all: &Tally) -> DisparityVector {
    let mut warnings = Vec::new();
    let comps: Vec<f64> = match kind {
        MetricKind::Disparity => (0..names.len())
            .map(|j| sel.attr[j] / sel.count - all.attr[j] / all.count)
            .collect(),
        MetricKind::DisparateImpact => (0..names.len())
            .map(|j| {
                let members = all.attr[j];
                let others = all.count - members;
                if members == 0.0 || others == 0.0 {
                    warnings.push(format!("`{}`: one side of the group is empty; component set to 0", names[j]));
                    return 0.0;
                }
                let rate_in = sel.attr[j] / members;
                let rate_out = (sel.count - sel.attr[j]) / others;
                scaled_rate_ratio(rate_in, rate_out)
            })
            .collect(),
        MetricKind::FprGap => {
            if all.neg == 0.0 {
                warnings.push("no real negatives in the population; FPR gap set to 0".to_string());
                vec![0.0; names.len()]
            } else {
                let overall = sel.neg / all.neg;
                (0..names.len())
                    .map(|j| {
                        if all.attr_neg[j] == 0.0 {
                            warnings.push(format!("`{}`: group has no real negatives; component set to 0", names[j]));
                            return 0.0;
                        }
                        (sel.attr_neg[j] / all.attr_neg[j] - overall).clamp(-1.0, 1.0)
                    })
                    .collect()
            }
        }
    };
    let mut v = DisparityVector::new(names, comps);
    v.warnings = warnings;
    v
}

/// `sign * (1 - min(a/b, b/a))`, negative when the protected rate `rate_in` is lower.
pub(crate) fn scaled_rate_ratio(rate_in: f64, rate_out: f64) -> f64 {
    if rate_in == rate_out {
        return 0.0;
    }
    let ratio = if rate_in == 0.0 || rate_out == 0.0 {
        0.0
    } else {
        (rate_in / rate_out).min(rate_out / rate_in)
    };
    let sign = if rate_in < rate_out { -1.0 } else { 1.0 };
    sign * (1.0 - ratio)
}

fn discounted(
    kind: MetricKind,
    names: Vec<String>,
    ranked: usize,
    ranks: &[usize],
    add: impl Fn(&mut Tally, usize),
    all: &Tally,
) -> Result<DisparityVector> {
    let width = names.len();
    let mut acc = vec![0.0; width];
    let mut z = 0.0;
    let mut sel = Tally::empty(width);
    let mut warnings: Vec<String> = Vec::new();
    let mut next = 0;
    for pos in 0..ranked {
        add(&mut sel, pos);
        let rank = pos + 1;
        if next < ranks.len() && ranks[next] == rank {
            let w = 1.0 / ((rank + 1) as f64).log2();
            let d = components(kind, names.clone(), &sel, all);
            for (a, c) in acc.iter_mut().zip(&d.components) {
                *a += w * c;
            }
            z += w;
            for msg in d.warnings {
                if !warnings.contains(&msg) {
                    warnings.push(msg);
                }
            }
            next += 1;
        }
    }
    if next == 0 {
        return Err(DcaError::config("no checkpoint fell inside the ranking"));
    }
    let comps = acc.into_iter().map(|a| a / z).collect();
    let mut v = DisparityVector::new(names, comps);
    v.warnings = warnings;
    Ok(v)
}

fn selection_tallies(
    table: &RecordTable,
    selection: &SelectionResult,
    attrs: &[String],
) -> Result<(Vec<usize>, Tally, Tally)> {
    if selection.selected_rows.is_empty() {
        return Err(DcaError::data("empty selection"));
    }
    if let Some(&r) = selection.selected_rows.iter().find(|&&r| r >= table.len()) {
        return Err(DcaError::data(format!("selected row {r} is not in the table")));
    }
    let cols = table.fairness_indices(attrs)?;
    let sel = Tally::over(table, &cols, selection.selected_rows.iter().copied());
    let all = Tally::over(table, &cols, 0..table.len());
    Ok((cols, sel, all))
}

/// Selected centroid minus population centroid, per attribute.
pub fn disparity(table: &RecordTable, selection: &SelectionResult, attrs: &[String]) -> Result<DisparityVector> {
    let (_, sel, all) = selection_tallies(table, selection, attrs)?;
    Ok(components(MetricKind::Disparity, attrs.to_vec(), &sel, &all))
}

/// Disparate impact ratio mapped to `[-1, 1]`. Attributes must be binary.
pub fn disparate_impact_scaled(
    table: &RecordTable,
    selection: &SelectionResult,
    attrs: &[String],
) -> Result<DisparityVector> {
    Objective::at_k(MetricKind::DisparateImpact).validate(table, attrs)?;
    let (_, sel, all) = selection_tallies(table, selection, attrs)?;
    Ok(components(MetricKind::DisparateImpact, attrs.to_vec(), &sel, &all))
}

/// Per-group false positive rate minus overall false positive rate.
///
/// The selection is the predicted-positive set. Continuous attributes act as
/// soft group membership.
pub fn fpr_gap(table: &RecordTable, selection: &SelectionResult, attrs: &[String]) -> Result<DisparityVector> {
    Objective::at_k(MetricKind::FprGap).validate(table, attrs)?;
    let (_, sel, all) = selection_tallies(table, selection, attrs)?;
    Ok(components(MetricKind::FprGap, attrs.to_vec(), &sel, &all))
}

/// Disparity averaged over rank checkpoints with logarithmic discounting.
///
/// Normalized by the sum of the weights, so a disparity that is the same
/// at every checkpoint comes back unchanged.
pub fn log_discounted_disparity(
    table: &RecordTable,
    spec: &RankingSpec,
    bonus: &BonusVector,
    checkpoints: &CheckpointRule,
    k_max: f64,
) -> Result<DisparityVector> {
    let objective = Objective {
        kind: MetricKind::Disparity,
        discounting: Discounting::LogDiscounted { k_max, checkpoints: checkpoints.clone() },
    };
    objective.evaluate(table, spec, bonus)
}

/// DCG of `ranking` truncated at `depth`; `weights` is indexed by row.
pub fn dcg(ranking: &[usize], weights: &[f64], depth: usize) -> f64 {
    ranking
        .iter()
        .take(depth)
        .enumerate()
        .map(|(i, &r)| weights[r] / ((i + 2) as f64).log2())
        .sum()
}

/// DCG of the adjusted ranking over DCG of the original one, both cut at `floor(k * n)`.
pub fn ndcg_at_k(original: &[usize], adjusted: &[usize], k: f64, weights: &[f64]) -> Result<f64> {
    check_fraction(k)?;
    if original.len() != adjusted.len() {
        return Err(DcaError::data("rankings cover different numbers of records"));
    }
    let (depth, _) = selection_count(k, original.len());
    let ideal = dcg(original, weights, depth);
    if ideal == 0.0 || !ideal.is_finite() {
        return Err(DcaError::data("ideal DCG is zero; all original scores are zero"));
    }
    Ok(dcg(adjusted, weights, depth) / ideal)
}

/// nDCG@k of the bonus-adjusted ranking against the unadjusted one.
///
/// Gains are the unadjusted selection keys, which for both orientations are
/// the raw weighted sums.
pub fn ndcg_for_bonus(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector) -> Result<f64> {
    let plan = ScoringPlan::new(table, spec, bonus.names())?;
    let zero = vec![0.0; bonus.names().len()];
    let base: Vec<f64> = (0..table.len()).map(|r| plan.key(table, r, &zero)).collect();
    let adj: Vec<f64> = (0..table.len()).map(|r| plan.key(table, r, bonus.values())).collect();
    let rows: Vec<usize> = (0..table.len()).collect();
    let (depth, _) = selection_count(spec.k, table.len());
    let original: Vec<usize> = top_rows(table, &rows, depth, |r| base[r]).into_iter().map(|(r, _)| r).collect();
    let adjusted: Vec<usize> = top_rows(table, &rows, depth, |r| adj[r]).into_iter().map(|(r, _)| r).collect();
    let ideal = dcg(&original, &base, depth);
    if ideal == 0.0 || !ideal.is_finite() {
        return Err(DcaError::data("ideal DCG is zero; all original scores are zero"));
    }
    Ok(dcg(&adjusted, &base, depth) / ideal)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DdpReport {
    pub value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Largest gap in per-capita exposure between any two groups.
///
/// `ranking` lists rows best first; `groups` hold row positions. Exposure of
/// a group is the sum of `1 / log2(rank + 1)` over its members with 1-based ranks.
pub fn exposure_ddp(ranking: &[usize], groups: &[(String, Vec<usize>)]) -> DdpReport {
    let n = ranking.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut rank_of = vec![usize::MAX; n];
    for (pos, &r) in ranking.iter().enumerate() {
        rank_of[r] = pos + 1;
    }
    let mut warnings = Vec::new();
    let mut per_capita = Vec::new();
    for (name, members) in groups {
        if members.is_empty() {
            warnings.push(format!("group `{name}` is empty and was excluded"));
            continue;
        }
        let exposure: f64 = members
            .iter()
            .map(|&r| 1.0 / ((rank_of[r] + 1) as f64).log2())
            .sum();
        per_capita.push(exposure / members.len() as f64);
    }
    let value = if per_capita.len() < 2 {
        0.0
    } else {
        let hi = per_capita.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = per_capita.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    DdpReport { value, warnings }
}

/// Member and non-member groups for each binary attribute.
/// Continuous attributes are skipped with a warning.
pub fn binary_attribute_groups(table: &RecordTable, attrs: &[String]) -> Result<(Vec<(String, Vec<usize>)>, Vec<String>)> {
    let cols = table.fairness_indices(attrs)?;
    let mut groups = Vec::new();
    let mut warnings = Vec::new();
    for c in cols {
        let col = &table.fairness_columns()[c];
        if col.kind != AttrKind::Binary {
            warnings.push(format!("`{}` is continuous and was excluded from DDP", col.name));
            continue;
        }
        let (inside, outside): (Vec<usize>, Vec<usize>) = (0..table.len()).partition(|&r| col.values[r] == 1.0);
        groups.push((format!("{}=1", col.name), inside));
        groups.push((format!("{}=0", col.name), outside));
    }
    Ok((groups, warnings))
}

/// DDP of the full ranking produced by `bonus`.
pub fn ddp_for_bonus(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector, attrs: &[String]) -> Result<DdpReport> {
    let plan = ScoringPlan::new(table, spec, bonus.names())?;
    let keys: Vec<f64> = (0..table.len()).map(|r| plan.key(table, r, bonus.values())).collect();
    let ranking = crate::model::full_ranking(table, &keys);
    let (groups, mut warnings) = binary_attribute_groups(table, attrs)?;
    let mut report = exposure_ddp(&ranking, &groups);
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}
