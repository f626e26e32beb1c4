//! Records, ranking functions, bonus vectors, top-k selection and sampling.
//!
//! A [`RecordTable`] is immutable once built. Scoring and selection are pure
//! functions over it, so one table can back any number of concurrent
//! evaluations.
//!
//! Scores follow a single internal convention: higher is more favourable
//! for the object. A [`RankingSpec`] with [`Orientation::LowerBetter`]
//! (risk scores such as recidivism deciles) negates the weighted sum, so a
//! nonnegative bonus always helps the object that receives it. Which end of
//! the ranking forms the selection also follows the orientation:
//!
//! * `HigherBetter`: the selection is the `k` fraction with the highest
//!   scores (admitted, hired, funded).
//! * `LowerBetter`: the selection is the `k` fraction with the highest raw
//!   values, i.e. the lowest favourability (flagged as high risk).
//!
//! [`selection_keys`] folds both cases into one "higher key is selected
//! first" ordering; ties are always broken by ascending record id.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DcaError, Result};

pub type RecordId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreColumn {
    pub name: String,
    pub values: Vec<f64>,
}

impl ScoreColumn {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairnessColumn {
    pub name: String,
    pub kind: AttrKind,
    pub values: Vec<f64>,
}

impl FairnessColumn {
    pub fn binary(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), kind: AttrKind::Binary, values }
    }

    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), kind: AttrKind::Continuous, values }
    }
}

/// Immutable columnar set of objects.
///
/// Score and fairness columns hold values normalized to `[0, 1]`; binary
/// fairness columns hold only `0` or `1`. The optional outcome column is the
/// observed binary label used by false-positive-rate metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordTable {
    ids: Vec<RecordId>,
    scores: Vec<ScoreColumn>,
    fairness: Vec<FairnessColumn>,
    outcome: Option<Vec<f64>>,
}

impl RecordTable {
    pub fn new(
        ids: Vec<RecordId>,
        scores: Vec<ScoreColumn>,
        fairness: Vec<FairnessColumn>,
        outcome: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(DcaError::data("table has no records"));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(DcaError::data(format!("duplicate record id {}", w[0])));
        }

        let mut names = std::collections::HashSet::new();
        for c in &scores {
            check_column(&c.name, &c.values, n, false)?;
            if !names.insert(c.name.as_str()) {
                return Err(DcaError::config(format!("duplicate column name `{}`", c.name)));
            }
        }
        for c in &fairness {
            check_column(&c.name, &c.values, n, c.kind == AttrKind::Binary)?;
            if !names.insert(c.name.as_str()) {
                return Err(DcaError::config(format!("duplicate column name `{}`", c.name)));
            }
        }
        if let Some(o) = &outcome {
            check_column("outcome", o, n, true)?;
        }

        Ok(Self { ids, scores, fairness, outcome })
    }

    /// Builds a table whose record ids are the row positions `0..n`.
    pub fn with_sequential_ids(
        scores: Vec<ScoreColumn>,
        fairness: Vec<FairnessColumn>,
        outcome: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = scores
            .first()
            .map(|c| c.values.len())
            .or_else(|| fairness.first().map(|c| c.values.len()))
            .unwrap_or(0);
        Self::new((0..n as RecordId).collect(), scores, fairness, outcome)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[RecordId] {
        &self.ids
    }

    pub fn score_columns(&self) -> &[ScoreColumn] {
        &self.scores
    }

    pub fn fairness_columns(&self) -> &[FairnessColumn] {
        &self.fairness
    }

    pub fn outcome(&self) -> Option<&[f64]> {
        self.outcome.as_deref()
    }

    pub fn fairness_names(&self) -> Vec<String> {
        self.fairness.iter().map(|c| c.name.clone()).collect()
    }

    pub fn score_column(&self, name: &str) -> Option<&ScoreColumn> {
        self.scores.iter().find(|c| c.name == name)
    }

    pub fn fairness_column(&self, name: &str) -> Option<&FairnessColumn> {
        self.fairness.iter().find(|c| c.name == name)
    }

    /// Positions of the named fairness columns, in the order given.
    pub fn fairness_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.fairness
                    .iter()
                    .position(|c| &c.name == n)
                    .ok_or_else(|| DcaError::config(format!("unknown fairness attribute `{n}`")))
            })
            .collect()
    }

    /// Row position of every record id.
    pub fn row_index(&self) -> BTreeMap<RecordId, usize> {
        self.ids.iter().enumerate().map(|(row, &id)| (id, row)).collect()
    }

    /// Mean of a fairness column over the whole table.
    pub fn fairness_mean(&self, column: usize) -> f64 {
        let v = &self.fairness[column].values;
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// New table holding the given rows, in the given order. Record ids are kept.
    pub fn subset(&self, rows: &[usize]) -> RecordTable {
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        RecordTable {
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
            scores: self
                .scores
                .iter()
                .map(|c| ScoreColumn { name: c.name.clone(), values: pick(&c.values) })
                .collect(),
            fairness: self
                .fairness
                .iter()
                .map(|c| FairnessColumn { name: c.name.clone(), kind: c.kind, values: pick(&c.values) })
                .collect(),
            outcome: self.outcome.as_ref().map(pick),
        }
    }
}

fn check_column(name: &str, values: &[f64], n: usize, binary: bool) -> Result<()> {
    if values.len() != n {
        return Err(DcaError::data(format!(
            "column `{name}` has {} values, expected {n}",
            values.len()
        )));
    }
    for (row, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(DcaError::data(format!("column `{name}` row {row}: non-finite value")));
        }
        if binary && v != 0.0 && v != 1.0 {
            return Err(DcaError::data(format!(
                "column `{name}` row {row}: binary column holds {v}"
            )));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(DcaError::data(format!(
                "column `{name}` row {row}: value {v} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    /// `+1` when the selection is the favourable end of the ranking, `-1` otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Self::HigherBetter => 1.0,
            Self::LowerBetter => -1.0,
        }
    }
}

/// Weighted-sum ranking function with selection fraction `k`.
///
/// The raw score of a record is `score_scale * sum(weight_j * attr_j)`, so
/// bonuses are expressed in the ranking's native points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingSpec {
    pub weights: BTreeMap<String, f64>,
    pub orientation: Orientation,
    pub k: f64,
    pub score_scale: f64,
}

impl RankingSpec {
    pub fn new(
        weights: BTreeMap<String, f64>,
        orientation: Orientation,
        k: f64,
        score_scale: f64,
    ) -> Result<Self> {
        let spec = Self { weights, orientation, k, score_scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(DcaError::config("ranking needs at least one weighted score attribute"));
        }
        if let Some((n, w)) = self.weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(DcaError::config(format!("weight for `{n}` is {w}")));
        }
        check_fraction(self.k)?;
        if !(self.score_scale > 0.0 && self.score_scale.is_finite()) {
            return Err(DcaError::config(format!("score_scale must be > 0, got {}", self.score_scale)));
        }
        Ok(())
    }

    /// Same ranking, different selection fraction.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        check_fraction(k)?;
        Ok(Self { k, ..self.clone() })
    }
}

pub(crate) fn check_fraction(k: f64) -> Result<()> {
    if k > 0.0 && k < 1.0 {
        Ok(())
    } else {
        Err(DcaError::config(format!("selection fraction k must lie in (0, 1), got {k}")))
    }
}

/// `floor(k * n)`, raised to 1 when it would be empty. The flag reports the raise.
pub fn selection_count(k: f64, n: usize) -> (usize, bool) {
    // 1e-9 absorbs products such as 0.29 * 100 = 28.999999999999996.
    let m = (k * n as f64 + 1e-9).floor() as usize;
    if m == 0 {
        (1, true)
    } else {
        (m.min(n), false)
    }
}

/// Per-attribute bonus points.
#[derive(Clone, Debug, PartialEq)]
pub struct BonusVector {
    names: Vec<String>,
    values: Vec<f64>,
    pub granularity: f64,
}

pub const DEFAULT_GRANULARITY: f64 = 0.5;

impl BonusVector {
    pub fn new(names: Vec<String>, values: Vec<f64>, granularity: f64) -> Result<Self> {
        if names.len() != values.len() {
            return Err(DcaError::config("bonus names and values differ in length"));
        }
        if !(granularity > 0.0 && granularity.is_finite()) {
            return Err(DcaError::config(format!("granularity must be > 0, got {granularity}")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(DcaError::config(format!("bonus value {v} is not finite")));
        }
        Ok(Self { names, values, granularity })
    }

    pub fn zeros(names: Vec<String>, granularity: f64) -> Self {
        let values = vec![0.0; names.len()];
        Self { names, values, granularity }
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>, granularity: f64) -> Result<Self> {
        let (names, values): (Vec<String>, Vec<f64>) =
            pairs.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::new(names, values, granularity)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.names.len());
        Self { names: self.names.clone(), values, granularity: self.granularity }
    }

    /// Every value multiplied by `factor`, then rounded to the granularity.
    pub fn scaled(&self, factor: f64) -> Self {
        self.with_values(self.values.iter().map(|v| round_to_granularity(v * factor, self.granularity)).collect())
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

impl Serialize for BonusVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.names.len()))?;
        for (n, v) in self.iter() {
            map.serialize_entry(n, &v)?;
        }
        map.end()
    }
}

/// Nearest multiple of `granularity`, halves rounded away from zero.
pub fn round_to_granularity(value: f64, granularity: f64) -> f64 {
    let r = (value / granularity).round() * granularity;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Ranking function resolved against a table's column layout.
#[derive(Clone, Debug)]
pub struct ScoringPlan {
    terms: Vec<(usize, f64)>,
    bonus_cols: Vec<usize>,
    bonus_names: Vec<String>,
    orientation: Orientation,
}

impl ScoringPlan {
    pub fn new(table: &RecordTable, spec: &RankingSpec, bonus_names: &[String]) -> Result<Self> {
        spec.validate()?;
        let terms = spec
            .weights
            .iter()
            .map(|(name, &w)| {
                table
                    .scores
                    .iter()
                    .position(|c| &c.name == name)
                    .map(|i| (i, w * spec.score_scale))
                    .ok_or_else(|| DcaError::config(format!("unknown score attribute `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let bonus_cols = table.fairness_indices(bonus_names)?;
        Ok(Self {
            terms,
            bonus_cols,
            bonus_names: bonus_names.to_vec(),
            orientation: spec.orientation,
        })
    }

    pub fn bonus_names(&self) -> &[String] {
        &self.bonus_names
    }

    pub fn bonus_columns(&self) -> &[usize] {
        &self.bonus_cols
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Weighted sum before orientation and bonus.
    #[inline]
    pub fn raw(&self, table: &RecordTable, row: usize) -> f64 {
        self.terms.iter().map(|&(c, w)| w * table.scores[c].values[row]).sum()
    }

    #[inline]
    pub fn bonus_term(&self, table: &RecordTable, row: usize, bonus: &[f64]) -> f64 {
        self.bonus_cols
            .iter()
            .zip(bonus)
            .map(|(&c, &b)| b * table.fairness[c].values[row])
            .sum()
    }

    /// Favourability score with bonus applied.
    #[inline]
    pub fn score(&self, table: &RecordTable, row: usize, bonus: &[f64]) -> f64 {
        self.orientation.sign() * self.raw(table, row) + self.bonus_term(table, row, bonus)
    }

    /// Selection key: the selection takes the highest keys.
    #[inline]
    pub fn key(&self, table: &RecordTable, row: usize, bonus: &[f64]) -> f64 {
        self.orientation.sign() * self.score(table, row, bonus)
    }
}

/// Scores of every record, `f(o) + A_f . B` in the favourable-is-higher convention.
pub fn score(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector) -> Result<Vec<f64>> {
    let plan = ScoringPlan::new(table, spec, bonus.names())?;
    let out: Vec<f64> = (0..table.len()).map(|r| plan.score(table, r, bonus.values())).collect();
    if let Some(row) = out.iter().position(|s| !s.is_finite()) {
        return Err(DcaError::data(format!("record {} has a non-finite score", table.ids[row])));
    }
    Ok(out)
}

/// Converts scores into selection keys for the ranking's orientation.
pub fn selection_keys(spec: &RankingSpec, scores: &[f64]) -> Vec<f64> {
    let s = spec.orientation.sign();
    scores.iter().map(|v| s * v).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Selected ids in rank order, best first.
    pub selected_ids: Vec<RecordId>,
    /// Row positions matching `selected_ids`.
    #[serde(skip)]
    pub selected_rows: Vec<usize>,
    /// Selection key of the last selected record.
    pub threshold_score: f64,
    pub k_count: usize,
    /// `floor(k * n)` was zero and the selection was raised to one record.
    pub raised_to_minimum: bool,
}

impl SelectionResult {
    pub(crate) fn from_ranked_rows(table: &RecordTable, rows: Vec<usize>, threshold: f64, raised: bool) -> Self {
        Self {
            selected_ids: rows.iter().map(|&r| table.ids[r]).collect(),
            k_count: rows.len(),
            selected_rows: rows,
            threshold_score: threshold,
            raised_to_minimum: raised,
        }
    }
}

#[inline]
pub(crate) fn rank_order(a: (f64, RecordId), b: (f64, RecordId)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Ranks `rows` by descending key with ascending-id tie-break, keeping only the first `m`.
pub(crate) fn top_rows(
    table: &RecordTable,
    rows: &[usize],
    m: usize,
    key: impl Fn(usize) -> f64,
) -> Vec<(usize, f64)> {
    let mut keyed: Vec<(f64, RecordId, usize)> =
        rows.iter().map(|&r| (key(r), table.ids[r], r)).collect();
    let cmp = |a: &(f64, RecordId, usize), b: &(f64, RecordId, usize)| rank_order((a.0, a.1), (b.0, b.1));
    let m = m.min(keyed.len());
    if m == 0 {
        return Vec::new();
    }
    if m < keyed.len() {
        keyed.select_nth_unstable_by(m - 1, cmp);
        keyed.truncate(m);
    }
    keyed.sort_unstable_by(cmp);
    keyed.into_iter().map(|(k, _, r)| (r, k)).collect()
}

/// Full ranking of all rows of the table by key.
pub fn full_ranking(table: &RecordTable, keys: &[f64]) -> Vec<usize> {
    let rows: Vec<usize> = (0..table.len()).collect();
    top_rows(table, &rows, rows.len(), |r| keys[r]).into_iter().map(|(r, _)| r).collect()
}

/// Picks the `floor(k * n)` records with the highest keys (minimum one).
pub fn select_top_k(keys: &[f64], table: &RecordTable, k: f64) -> Result<SelectionResult> {
    check_fraction(k)?;
    if keys.len() != table.len() {
        return Err(DcaError::data(format!(
            "{} scores for a table of {} records",
            keys.len(),
            table.len()
        )));
    }
    if let Some(row) = keys.iter().position(|s| !s.is_finite()) {
        return Err(DcaError::data(format!("record {} has a non-finite score", table.ids[row])));
    }
    let (m, raised) = selection_count(k, table.len());
    let rows: Vec<usize> = (0..table.len()).collect();
    let top = top_rows(table, &rows, m, |r| keys[r]);
    let threshold = top.last().map(|&(_, k)| k).unwrap_or(f64::NAN);
    Ok(SelectionResult::from_ranked_rows(
        table,
        top.into_iter().map(|(r, _)| r).collect(),
        threshold,
        raised,
    ))
}

/// Scores and selects in one step.
pub fn select_with_bonus(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector) -> Result<SelectionResult> {
    let s = score(table, spec, bonus)?;
    select_top_k(&selection_keys(spec, &s), table, spec.k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub sample_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub replacement: bool,
}

pub const DEFAULT_SAMPLE_SIZE: usize = 500;

impl Default for SampleSpec {
    fn default() -> Self {
        Self { sample_size: DEFAULT_SAMPLE_SIZE, seed: 0, replacement: false }
    }
}

impl SampleSpec {
    /// `ceil(max(30 / k, 30 / r))`; `r` is the rarest group frequency when known.
    pub fn recommended_size(k: f64, rarest: Option<f64>) -> usize {
        let by_k = 30.0 / k;
        let by_r = rarest.filter(|r| *r > 0.0).map(|r| 30.0 / r).unwrap_or(0.0);
        (by_k.max(by_r) - 1e-9).ceil().max(30.0) as usize
    }

    /// Hard errors for unusable sizes, warnings when below the recommendation.
    pub fn check(&self, k: f64, rarest: Option<f64>) -> Result<Vec<String>> {
        if self.sample_size < 30 {
            return Err(DcaError::config(format!(
                "sample_size {} is below the minimum of 30",
                self.sample_size
            )));
        }
        let rec = Self::recommended_size(k, rarest);
        let mut warnings = Vec::new();
        if self.sample_size < rec {
            warnings.push(format!(
                "sample_size {} is below the recommended {rec} for k={k}",
                self.sample_size
            ));
        }
        Ok(warnings)
    }
}

/// RNG for draw number `stream` of a run seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Row positions of one sample draw. The flag is set when the table was too
/// small and every row was returned instead.
pub fn sample_rows(n: usize, spec: &SampleSpec, draw_index: u64) -> (Vec<usize>, bool) {
    let mut rng = stream_rng(spec.seed, draw_index);
    if spec.replacement {
        let rows = (0..spec.sample_size).map(|_| rng.random_range(0..n)).collect();
        (rows, false)
    } else if spec.sample_size >= n {
        ((0..n).collect(), spec.sample_size > n)
    } else {
        (index::sample(&mut rng, n, spec.sample_size).into_vec(), false)
    }
}

#[derive(Clone, Debug)]
pub struct SampleDraw {
    pub table: RecordTable,
    pub warning: Option<String>,
}

/// Uniform random subset of the table, reproducible for a given seed and draw index.
pub fn draw_sample(table: &RecordTable, spec: &SampleSpec, draw_index: u64) -> Result<SampleDraw> {
    if spec.sample_size == 0 {
        return Err(DcaError::config("sample_size must be positive"));
    }
    let (rows, fell_back) = sample_rows(table.len(), spec, draw_index);
    let warning = fell_back.then(|| {
        format!(
            "sample_size {} exceeds the {} available records; using the full table",
            spec.sample_size,
            table.len()
        )
    });
    Ok(SampleDraw { table: table.subset(&rows), warning })
}
