//! Dataset ingestion, export, synthetic generation and summaries.
//!
//! A [`DatasetConfig`] assigns roles to CSV columns:
//!
//! ```toml
//! path = "students.csv"
//! id_column = "id"
//! orientation = "higher_better"
//! score_scale = 100.0
//!
//! [[score]]
//! name = "gpa"
//! weight = 0.55
//! min = 0.0
//! max = 4.0
//!
//! [[fairness]]
//! name = "low_income"
//! kind = "binary"
//!
//! [[fairness]]
//! name = "race"
//! kind = "categorical"   # one binary column per category, named `race=<category>`
//! ```
//!
//! Score and continuous fairness columns are min-max scaled to `[0, 1]`
//! using the declared bounds, or the observed ones when none are declared.
//! Rows with an empty required cell are skipped and reported; any other bad
//! cell is an error naming the row and column.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DcaError, Result};
use crate::model::{
    AttrKind, FairnessColumn, Orientation, RankingSpec, RecordId, RecordTable, SampleSpec, ScoreColumn,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreAttr {
    pub name: String,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessRole {
    Binary,
    Continuous,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessAttr {
    pub name: String,
    pub kind: FairnessRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Categories to expand; every observed category when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

impl FairnessAttr {
    pub fn binary(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: FairnessRole::Binary, min: None, max: None, categories: None }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self { kind: FairnessRole::Continuous, ..Self::binary(name) }
    }
}

fn default_scale() -> f64 {
    100.0
}

/// Column roles and ranking function of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default = "default_scale")]
    pub score_scale: f64,
    /// Default selection fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(default)]
    pub score: Vec<ScoreAttr>,
    #[serde(default)]
    pub fairness: Vec<FairnessAttr>,
}

impl DatasetConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DcaError::config(format!("dataset config: {}", e.message())))
    }

    /// Reads a config file; a relative `path` inside it is resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DcaError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (cfg.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DcaError::config(format!("cannot encode config: {e}")))
    }

    /// Weighted-sum ranking at fraction `k` (falls back to the config's own `k`).
    pub fn ranking_spec(&self, k: Option<f64>) -> Result<RankingSpec> {
        let k = k
            .or(self.k)
            .ok_or_else(|| DcaError::config("no selection fraction k given"))?;
        let weights: BTreeMap<String, f64> = if !self.score.is_empty() {
            self.score.iter().map(|s| (s.name.clone(), s.weight)).collect()
        } else if let Some(syn) = &self.synthetic {
            syn.scores.iter().map(|s| (s.name.clone(), s.weight)).collect()
        } else {
            BTreeMap::new()
        };
        RankingSpec::new(weights, self.orientation, k, self.score_scale)
    }

    fn validate_roles(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let names = self
            .score
            .iter()
            .map(|s| &s.name)
            .chain(self.fairness.iter().map(|f| &f.name))
            .chain(self.outcome.iter())
            .chain(self.id_column.iter());
        for n in names {
            if !seen.insert(n.as_str()) {
                return Err(DcaError::config(format!("column `{n}` is assigned more than one role")));
            }
        }
        if self.score.is_empty() {
            return Err(DcaError::config("no score columns declared"));
        }
        for s in &self.score {
            check_bounds(&s.name, s.min, s.max)?;
        }
        for f in &self.fairness {
            check_bounds(&f.name, f.min, f.max)?;
            if f.categories.is_some() && f.kind != FairnessRole::Categorical {
                return Err(DcaError::config(format!("`{}` lists categories but is not categorical", f.name)));
            }
        }
        Ok(())
    }
}

fn check_bounds(name: &str, min: Option<f64>, max: Option<f64>) -> Result<()> {
    if let (Some(lo), Some(hi)) = (min, max) {
        if !(lo < hi) {
            return Err(DcaError::config(format!("`{name}`: min {lo} is not below max {hi}")));
        }
    }
    Ok(())
}

/// A loaded table plus the rows that were skipped.
#[derive(Clone, Debug)]
pub struct LoadReport {
    pub table: RecordTable,
    pub skipped: Vec<String>,
}

/// Loads the dataset a config describes: its CSV file, or its synthetic generator.
pub fn load_dataset(config: &DatasetConfig) -> Result<LoadReport> {
    match (&config.path, &config.synthetic) {
        (Some(_), _) => load_csv(config),
        (None, Some(syn)) => Ok(LoadReport { table: generate_synthetic(syn)?, skipped: Vec::new() }),
        (None, None) => Err(DcaError::config("dataset config has neither `path` nor `synthetic`")),
    }
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("null")
}

/// Reads a CSV file with a header row into a normalized table.
pub fn load_csv(config: &DatasetConfig) -> Result<LoadReport> {
    config.validate_roles()?;
    let path = config
        .path
        .as_ref()
        .ok_or_else(|| DcaError::config("dataset config has no `path`"))?;
    let file = std::fs::File::open(path)
        .map_err(|e| DcaError::config(format!("cannot open {}: {e}", path.display())))?;
    read_csv(config, file)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(config: &DatasetConfig, reader: R) -> Result<LoadReport> {
    config.validate_roles()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DcaError::data(format!("cannot read CSV header: {e}")))?
        .clone();
    // first occurrence wins for repeated header names
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DcaError::config(format!("column `{name}` not found in CSV header")))
    };
    let score_idx: Vec<usize> = config.score.iter().map(|s| col(&s.name)).collect::<Result<_>>()?;
    let fair_idx: Vec<usize> = config.fairness.iter().map(|f| col(&f.name)).collect::<Result<_>>()?;
    let outcome_idx = config.outcome.as_deref().map(col).transpose()?;
    let id_idx = config.id_column.as_deref().map(col).transpose()?;

    let mut raw_scores: Vec<Vec<f64>> = vec![Vec::new(); score_idx.len()];
    let mut raw_fair: Vec<Vec<f64>> = vec![Vec::new(); fair_idx.len()];
    let mut raw_cat: Vec<Vec<String>> = vec![Vec::new(); fair_idx.len()];
    let mut outcome = Vec::new();
    let mut ids: Vec<RecordId> = Vec::new();
    let mut skipped = Vec::new();

    let required: Vec<usize> = score_idx
        .iter()
        .chain(&fair_idx)
        .chain(outcome_idx.iter())
        .chain(id_idx.iter())
        .copied()
        .collect();

    for (i, rec) in rdr.records().enumerate() {
        // line 1 is the header
        let line = i + 2;
        let rec = rec.map_err(|e| DcaError::data(format!("line {line}: {e}")))?;
        let missing = |c: usize| rec.get(c).is_none_or(is_missing);
        if let Some(&c) = required.iter().find(|&&c| missing(c)) {
            skipped.push(format!("line {line}: missing value in column `{}`", &headers[c]));
            continue;
        }
        let num = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DcaError::data(format!("line {line}, column `{}`: `{s}` is not a number", &headers[c])))
        };

        for (j, &c) in score_idx.iter().enumerate() {
            raw_scores[j].push(num(c)?);
        }
        for (j, (&c, attr)) in fair_idx.iter().zip(&config.fairness).enumerate() {
            match attr.kind {
                FairnessRole::Categorical => raw_cat[j].push(rec[c].to_string()),
                FairnessRole::Binary => {
                    let v = num(c)?;
                    if v != 0.0 && v != 1.0 {
                        return Err(DcaError::data(format!(
                            "line {line}, column `{}`: binary column holds {v}",
                            attr.name
                        )));
                    }
                    raw_fair[j].push(v);
                }
                FairnessRole::Continuous => raw_fair[j].push(num(c)?),
            }
        }
        if let Some(c) = outcome_idx {
            let v = num(c)?;
            if v != 0.0 && v != 1.0 {
                return Err(DcaError::data(format!("line {line}, column `{}`: outcome must be 0 or 1, got {v}", &headers[c])));
            }
            outcome.push(v);
        }
        match id_idx {
            Some(c) => {
                let s = &rec[c];
                let id = s.parse::<RecordId>().map_err(|_| {
                    DcaError::data(format!("line {line}, column `{}`: `{s}` is not an unsigned integer id", &headers[c]))
                })?;
                ids.push(id);
            }
            None => ids.push(i as RecordId),
        }
    }
    if ids.is_empty() {
        return Err(DcaError::data("the CSV file has no usable rows"));
    }

    let scores = config
        .score
        .iter()
        .zip(raw_scores)
        .map(|(s, v)| Ok(ScoreColumn::new(s.name.clone(), normalize(&s.name, v, s.min, s.max)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut fairness = Vec::new();
    for ((attr, values), cats) in config.fairness.iter().zip(raw_fair).zip(raw_cat) {
        match attr.kind {
            FairnessRole::Binary => fairness.push(FairnessColumn::binary(attr.name.clone(), values)),
            FairnessRole::Continuous => fairness.push(FairnessColumn::continuous(
                attr.name.clone(),
                normalize(&attr.name, values, attr.min, attr.max)?,
            )),
            FairnessRole::Categorical => {
                let observed: BTreeSet<&str> = cats.iter().map(String::as_str).collect();
                let chosen: Vec<String> = match &attr.categories {
                    Some(list) => {
                        if let Some(missing) = list.iter().find(|c| !observed.contains(c.as_str())) {
                            return Err(DcaError::config(format!(
                                "category `{missing}` of `{}` never occurs in the data",
                                attr.name
                            )));
                        }
                        list.clone()
                    }
                    None => observed.iter().map(|s| s.to_string()).collect(),
                };
                for c in chosen {
                    let v = cats.iter().map(|x| if *x == c { 1.0 } else { 0.0 }).collect();
                    fairness.push(FairnessColumn::binary(format!("{}={c}", attr.name), v));
                }
            }
        }
    }

    let outcome = outcome_idx.map(|_| outcome);
    let table = RecordTable::new(ids, scores, fairness, outcome)?;
    Ok(LoadReport { table, skipped })
}

/// Min-max scaling into `[0, 1]`. Declared bounds win over observed ones.
pub fn normalize(name: &str, values: Vec<f64>, min: Option<f64>, max: Option<f64>) -> Result<Vec<f64>> {
    let lo = min.unwrap_or_else(|| values.iter().copied().fold(f64::INFINITY, f64::min));
    let hi = max.unwrap_or_else(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if let Some((row, v)) = values.iter().enumerate().find(|(_, v)| **v < lo || **v > hi) {
        return Err(DcaError::data(format!(
            "column `{name}`, row {row}: value {v} outside declared bounds [{lo}, {hi}]"
        )));
    }
    let span = hi - lo;
    Ok(values
        .into_iter()
        .map(|v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect())
}

/// Writes the normalized table as CSV: `id`, score columns, fairness columns, then `outcome`.
pub fn write_csv<W: Write>(table: &RecordTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(table.score_columns().iter().map(|c| c.name.clone()));
    header.extend(table.fairness_columns().iter().map(|c| c.name.clone()));
    if table.outcome().is_some() {
        header.push("outcome".to_string());
    }
    w.write_record(&header).map_err(csv_err)?;
    for row in 0..table.len() {
        let mut rec = vec![table.ids()[row].to_string()];
        rec.extend(table.score_columns().iter().map(|c| c.values[row].to_string()));
        rec.extend(table.fairness_columns().iter().map(|c| c.values[row].to_string()));
        if let Some(o) = table.outcome() {
            rec.push(o[row].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> DcaError {
    DcaError::data(format!("csv: {e}"))
}

/// Config that reloads a [`write_csv`] export unchanged.
pub fn export_config(table: &RecordTable, ranking: &RankingSpec, path: impl Into<PathBuf>) -> DatasetConfig {
    DatasetConfig {
        path: Some(path.into()),
        synthetic: None,
        id_column: Some("id".into()),
        orientation: ranking.orientation,
        score_scale: ranking.score_scale,
        k: Some(ranking.k),
        outcome: table.outcome().map(|_| "outcome".into()),
        score: table
            .score_columns()
            .iter()
            .map(|c| ScoreAttr {
                name: c.name.clone(),
                weight: ranking.weights.get(&c.name).copied().unwrap_or(0.0),
                min: Some(0.0),
                max: Some(1.0),
            })
            .collect(),
        fairness: table
            .fairness_columns()
            .iter()
            .map(|c| match c.kind {
                AttrKind::Binary => FairnessAttr::binary(c.name.clone()),
                AttrKind::Continuous => FairnessAttr { min: Some(0.0), max: Some(1.0), ..FairnessAttr::continuous(c.name.clone()) },
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Distribution {
    Normal { mean: f64, std_dev: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSpec {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreDistSpec {
    pub name: String,
    #[serde(default = "one")]
    pub weight: f64,
    pub distribution: Distribution,
    /// Mean shift per unit of each fairness attribute, in normalized units.
    #[serde(default)]
    pub shifts: BTreeMap<String, f64>,
}

/// Observed binary outcome, `P(y = 1) = base_rate + score_coupling * (score - 0.5)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub base_rate: f64,
    #[serde(default)]
    pub score_coupling: f64,
}

/// Generator for tables drawn from a known distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_records: usize,
    pub seed: u64,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub continuous: Vec<ContinuousSpec>,
    pub scores: Vec<ScoreDistSpec>,
    /// Probability that a record reuses one shared uniform draw for every
    /// group decision; 0 keeps groups independent, 1 nests them.
    #[serde(default)]
    pub correlation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeSpec>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(DcaError::config("synthetic n_records must be positive"));
        }
        if self.scores.is_empty() {
            return Err(DcaError::config("synthetic spec needs at least one score attribute"));
        }
        for g in &self.groups {
            if !(g.frequency > 0.0 && g.frequency <= 1.0) {
                return Err(DcaError::config(format!("group `{}` frequency must lie in (0, 1]", g.name)));
            }
        }
        for c in &self.continuous {
            if !(c.std_dev >= 0.0) {
                return Err(DcaError::config(format!("`{}` std_dev must be >= 0", c.name)));
            }
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(DcaError::config("correlation must lie in [0, 1]"));
        }
        let known: BTreeSet<&str> = self
            .groups
            .iter()
            .map(|g| g.name.as_str())
            .chain(self.continuous.iter().map(|c| c.name.as_str()))
            .collect();
        for s in &self.scores {
            match s.distribution {
                Distribution::Normal { std_dev, .. } if !(std_dev >= 0.0) => {
                    return Err(DcaError::config(format!("`{}` std_dev must be >= 0", s.name)))
                }
                Distribution::Uniform { low, high } if !(low <= high) => {
                    return Err(DcaError::config(format!("`{}` uniform bounds are reversed", s.name)))
                }
                _ => {}
            }
            if let Some(unknown) = s.shifts.keys().find(|k| !known.contains(k.as_str())) {
                return Err(DcaError::config(format!("`{}` shifts unknown attribute `{unknown}`", s.name)));
            }
        }
        if let Some(o) = &self.outcome {
            if !(0.0..=1.0).contains(&o.base_rate) {
                return Err(DcaError::config("outcome base_rate must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Ranking over the generated score attributes with their weights.
    pub fn ranking_spec(&self, k: f64, score_scale: f64) -> Result<RankingSpec> {
        let weights = self.scores.iter().map(|s| (s.name.clone(), s.weight)).collect();
        RankingSpec::new(weights, Orientation::HigherBetter, k, score_scale)
    }
}

/// Draws a table from a [`SyntheticSpec`]. Deterministic for a given seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<RecordTable> {
    spec.validate()?;
    let n = spec.n_records;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut groups: Vec<Vec<f64>> = vec![Vec::with_capacity(n); spec.groups.len()];
    let mut conts: Vec<Vec<f64>> = vec![Vec::with_capacity(n); spec.continuous.len()];
    let cont_dists: Vec<Normal<f64>> = spec
        .continuous
        .iter()
        .map(|c| Normal::new(c.mean, c.std_dev).map_err(|e| DcaError::config(format!("`{}`: {e}", c.name))))
        .collect::<Result<_>>()?;
    for _ in 0..n {
        let shared: f64 = rng.random();
        for (g, col) in spec.groups.iter().zip(groups.iter_mut()) {
            let u = if rng.random::<f64>() < spec.correlation { shared } else { rng.random() };
            col.push(if u < g.frequency { 1.0 } else { 0.0 });
        }
        for (d, col) in cont_dists.iter().zip(conts.iter_mut()) {
            col.push(d.sample(&mut rng).clamp(0.0, 1.0));
        }
    }

    let attr_value = |name: &str, row: usize| -> f64 {
        if let Some(i) = spec.groups.iter().position(|g| g.name == name) {
            groups[i][row]
        } else {
            let i = spec.continuous.iter().position(|c| c.name == name).expect("validated");
            conts[i][row]
        }
    };

    let mut scores = Vec::with_capacity(spec.scores.len());
    for s in &spec.scores {
        let mut values = Vec::with_capacity(n);
        let normal = match s.distribution {
            Distribution::Normal { mean, std_dev } => {
                Some(Normal::new(mean, std_dev).map_err(|e| DcaError::config(format!("`{}`: {e}", s.name)))?)
            }
            Distribution::Uniform { .. } => None,
        };
        for row in 0..n {
            let base = match (&s.distribution, &normal) {
                (_, Some(d)) => d.sample(&mut rng),
                (Distribution::Uniform { low, high }, None) => low + (high - low) * rng.random::<f64>(),
                _ => unreachable!(),
            };
            let shift: f64 = s.shifts.iter().map(|(a, d)| d * attr_value(a, row)).sum();
            values.push((base + shift).clamp(0.0, 1.0));
        }
        scores.push(ScoreColumn::new(s.name.clone(), values));
    }

    let outcome = spec.outcome.as_ref().map(|o| {
        (0..n)
            .map(|row| {
                let mean_score = scores.iter().map(|c| c.values[row]).sum::<f64>() / scores.len() as f64;
                let p = (o.base_rate + o.score_coupling * (mean_score - 0.5)).clamp(0.0, 1.0);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    });

    let mut fairness: Vec<FairnessColumn> = spec
        .groups
        .iter()
        .zip(groups)
        .map(|(g, v)| FairnessColumn::binary(g.name.clone(), v))
        .collect();
    fairness.extend(
        spec.continuous
            .iter()
            .zip(conts)
            .map(|(c, v)| FairnessColumn::continuous(c.name.clone(), v)),
    );
    RecordTable::with_sequential_ids(scores, fairness, outcome)
}

/// Frequency of the least common binary group among `attrs`, ignoring empty ones.
pub fn rarest_group_frequency(table: &RecordTable, attrs: &[String]) -> Option<f64> {
    attrs
        .iter()
        .filter_map(|a| table.fairness_column(a))
        .filter(|c| c.kind == AttrKind::Binary)
        .map(|c| c.values.iter().sum::<f64>() / c.values.len() as f64)
        .filter(|&p| p > 0.0)
        .min_by(f64::total_cmp)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeSummary {
    pub name: String,
    pub kind: AttrKind,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n_records: usize,
    pub score_means: Vec<(String, f64)>,
    pub fairness: Vec<AttributeSummary>,
    pub rarest_group_frequency: Option<f64>,
    pub k: f64,
    pub recommended_sample_size: usize,
    pub configured_sample_size: Option<usize>,
}

/// Per-attribute means, group frequencies and the recommended sample size.
pub fn summarize(table: &RecordTable, k: f64, configured_sample_size: Option<usize>) -> DatasetSummary {
    let fairness: Vec<AttributeSummary> = table
        .fairness_columns()
        .iter()
        .map(|c| AttributeSummary {
            name: c.name.clone(),
            kind: c.kind,
            mean: c.values.iter().sum::<f64>() / c.values.len() as f64,
        })
        .collect();
    let rarest = rarest_group_frequency(table, &table.fairness_names());
    DatasetSummary {
        n_records: table.len(),
        score_means: table
            .score_columns()
            .iter()
            .map(|c| (c.name.clone(), c.values.iter().sum::<f64>() / c.values.len() as f64))
            .collect(),
        fairness,
        rarest_group_frequency: rarest,
        k,
        recommended_sample_size: SampleSpec::recommended_size(k, rarest),
        configured_sample_size,
    }
}

/// Race categories with enough defendants to form a stable group.
pub const COMPAS_DEFAULT_RACES: [&str; 4] = ["African-American", "Caucasian", "Hispanic", "Other"];

/// Column roles for the ProPublica two-year recidivism file.
///
/// The decile score is the only ranking attribute, lower being better; its
/// bounds `[0, 10]` and scale 10 keep bonuses in decile points. Race is
/// expanded into one binary column per category, and the two-year
/// recidivism flag is the observed outcome.
pub fn compas_config(path: impl Into<PathBuf>, races: Option<Vec<String>>) -> DatasetConfig {
    DatasetConfig {
        path: Some(path.into()),
        synthetic: None,
        id_column: Some("id".into()),
        orientation: Orientation::LowerBetter,
        score_scale: 10.0,
        k: None,
        outcome: Some("two_year_recid".into()),
        score: vec![ScoreAttr { name: "decile_score".into(), weight: 1.0, min: Some(0.0), max: Some(10.0) }],
        fairness: vec![FairnessAttr {
            name: "race".into(),
            kind: FairnessRole::Categorical,
            min: None,
            max: None,
            categories: Some(races.unwrap_or_else(|| COMPAS_DEFAULT_RACES.iter().map(|s| s.to_string()).collect())),
        }],
    }
}

pub fn load_compas(path: impl Into<PathBuf>, races: Option<Vec<String>>) -> Result<LoadReport> {
    load_csv(&compas_config(path, races))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn school_config() -> DatasetConfig {
        DatasetConfig::from_toml_str(
            r#"
            path = "unused.csv"
            score_scale = 100.0
            k = 0.5
            [[score]]
            name = "gpa"
            weight = 0.55
            [[score]]
            name = "test"
            weight = 0.45
            [[fairness]]
            name = "low_income"
            kind = "binary"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn reads_small_file() {
        let csv = "gpa,test,low_income\n3.0,80,1\n4.0,90,0\n2.0,70,1\n3.5,60,0\n";
        let rep = read_csv(&school_config(), csv.as_bytes()).unwrap();
        assert_eq!(rep.table.len(), 4);
        assert_eq!(rep.table.ids(), &[0, 1, 2, 3]);
        let gpa = &rep.table.score_column("gpa").unwrap().values;
        assert_eq!(gpa, &vec![0.5, 1.0, 0.0, 0.75]);
        assert!(rep.skipped.is_empty());
    }

    #[test]
    fn binary_column_with_fraction_rejected() {
        let csv = "gpa,test,low_income\n3.0,80,1\n4.0,90,0.5\n";
        let err = read_csv(&school_config(), csv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("low_income"), "{err}");
    }

    #[test]
    fn missing_cells_skip_rows() {
        let csv = "gpa,test,low_income\n3.0,80,1\n,90,0\n2.0,70,1\n";
        let rep = read_csv(&school_config(), csv.as_bytes()).unwrap();
        assert_eq!(rep.table.len(), 2);
        assert_eq!(rep.table.ids(), &[0, 2]);
        assert_eq!(rep.skipped.len(), 1);
        assert!(rep.skipped[0].contains("line 3"));
    }

    #[test]
    fn bad_inputs() {
        let cfg = school_config();
        assert!(matches!(read_csv(&cfg, "gpa,test\n1,2\n".as_bytes()), Err(DcaError::Config(_))));
        assert!(matches!(read_csv(&cfg, "gpa,test,low_income\nx,2,1\n".as_bytes()), Err(DcaError::Data(_))));
        assert!(matches!(read_csv(&cfg, "gpa,test,low_income\n".as_bytes()), Err(DcaError::Data(_))));
        let mut dup = cfg.clone();
        dup.fairness.push(FairnessAttr::binary("gpa"));
        assert!(matches!(read_csv(&dup, "gpa,test,low_income\n1,2,1\n".as_bytes()), Err(DcaError::Config(_))));
    }

    #[test]
    fn declared_bounds_win() {
        let mut cfg = school_config();
        cfg.score[0].min = Some(0.0);
        cfg.score[0].max = Some(4.0);
        let rep = read_csv(&cfg, "gpa,test,low_income\n3.0,80,1\n2.0,90,0\n".as_bytes()).unwrap();
        assert_eq!(rep.table.score_column("gpa").unwrap().values, vec![0.75, 0.5]);
        let out = read_csv(&cfg, "gpa,test,low_income\n5.0,80,1\n".as_bytes());
        assert!(matches!(out, Err(DcaError::Data(_))));
    }

    #[test]
    fn categorical_expansion() {
        let cfg = DatasetConfig::from_toml_str(
            r#"
            path = "x.csv"
            [[score]]
            name = "s"
            [[fairness]]
            name = "race"
            kind = "categorical"
            "#,
        )
        .unwrap();
        let rep = read_csv(&cfg, "s,race\n1,b\n2,a\n3,b\n".as_bytes()).unwrap();
        assert_eq!(rep.table.fairness_names(), vec!["race=a", "race=b"]);
        assert_eq!(rep.table.fairness_column("race=b").unwrap().values, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let v = normalize("x", vec![3.0, 7.0, 5.0, 4.2], None, None).unwrap();
        let again = normalize("x", v.clone(), None, None).unwrap();
        for (a, b) in v.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn biased_spec(n: usize, shift: f64, freq: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_records: n,
            seed,
            groups: vec![GroupSpec { name: "g".into(), frequency: freq }],
            continuous: vec![],
            scores: vec![ScoreDistSpec {
                name: "s".into(),
                weight: 1.0,
                distribution: Distribution::Normal { mean: 0.6, std_dev: 0.1 },
                shifts: [("g".to_string(), shift)].into(),
            }],
            correlation: 0.0,
            outcome: None,
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_biased() {
        let spec = biased_spec(5_000, -0.1, 0.3, 9);
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a, generate_synthetic(&spec).unwrap());
        let ranking = spec.ranking_spec(0.2, 100.0).unwrap();
        let sel = crate::model::select_with_bonus(&a, &ranking, &crate::model::BonusVector::zeros(vec!["g".into()], 0.5)).unwrap();
        let d = crate::metrics::disparity(&a, &sel, &["g".to_string()]).unwrap();
        assert!(d.components[0] < -0.1, "{:?}", d.components);
        let p = a.fairness_mean(0);
        let se = (0.3 * 0.7 / 5_000f64).sqrt();
        assert!((p - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn synthetic_single_full_group() {
        let spec = biased_spec(1_000, -0.1, 1.0, 1);
        let t = generate_synthetic(&spec).unwrap();
        let ranking = spec.ranking_spec(0.2, 100.0).unwrap();
        let sel = crate::model::select_with_bonus(&t, &ranking, &crate::model::BonusVector::zeros(vec!["g".into()], 0.5)).unwrap();
        assert_eq!(crate::metrics::disparity(&t, &sel, &["g".to_string()]).unwrap().components[0], 0.0);
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        let mut s = biased_spec(10, 0.0, 0.3, 1);
        s.groups[0].frequency = 0.0;
        assert!(generate_synthetic(&s).is_err());
        let mut s = biased_spec(10, 0.0, 0.3, 1);
        s.correlation = 1.5;
        assert!(generate_synthetic(&s).is_err());
        let mut s = biased_spec(10, 0.0, 0.3, 1);
        s.scores[0].shifts.insert("nope".into(), 1.0);
        assert!(generate_synthetic(&s).is_err());
    }

    #[test]
    fn summary_recommendations() {
        let spec = biased_spec(1_000, 0.0, 1.0, 1);
        let t = generate_synthetic(&spec).unwrap();
        let s = summarize(&t, 0.2, None);
        assert_eq!(s.rarest_group_frequency, Some(1.0));
        assert_eq!(s.recommended_sample_size, 150);
    }
}
