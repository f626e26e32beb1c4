//! The disparity compensation optimizer.
//!
//! The objective (disparity of a top-k selection) is a step function of the
//! bonus vector, so there is no gradient to follow. Instead each iteration
//! draws a fresh uniform sample, measures the objective vector on it under
//! the current bonuses and moves every bonus against its own component:
//! an attribute that is under-represented in the selection gains points.
//!
//! [`run_dca`] chains two passes:
//!
//! 1. [`core_dca`]: fixed learning rates in decreasing order, `t` steps each,
//!    `B <- B - L * D`, clamped to the bonus bounds after every step.
//! 2. [`refine`]: the same signal fed to Adam in place of a gradient, then the
//!    rolling average of the last iterates, rounded to the granularity.
//!
//! Sampling makes the per-iteration cost depend on the sample size only; the
//! full table is touched once at the end to report before/after metrics.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DcaError, Result};
use crate::metrics::{ndcg_for_bonus, DisparityVector, MetricKind, Objective, PackedRows};
use crate::model::{
    round_to_granularity, sample_rows, stream_rng, BonusVector, RankingSpec, RecordTable, SampleSpec,
    ScoringPlan, DEFAULT_GRANULARITY,
};

/// Stream reserved for the initial bonus draw; sample draws use 0, 1, 2, ...
const INIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { alpha: 0.1, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Optimizer schedule, caps and seed. `sample.seed` is the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcaConfig {
    pub learning_rates: Vec<f64>,
    pub iterations_per_rate: usize,
    pub refine_iterations: usize,
    pub rolling_average_window: usize,
    pub sample: SampleSpec,
    pub granularity: f64,
    pub bonus_min: f64,
    pub bonus_max: Option<f64>,
    pub objective: Objective,
    /// Fairness attributes receiving bonuses; all of the table's when unset.
    pub attributes: Option<Vec<String>>,
    pub adam: AdamParams,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self {
            learning_rates: vec![1.0, 0.1],
            iterations_per_rate: 100,
            refine_iterations: 100,
            rolling_average_window: 100,
            sample: SampleSpec::default(),
            granularity: DEFAULT_GRANULARITY,
            bonus_min: 0.0,
            bonus_max: None,
            objective: Objective::default(),
            attributes: None,
            adam: AdamParams::default(),
        }
    }
}

impl DcaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sample.seed = seed;
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.sample.seed
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() {
            return Err(DcaError::config("at least one learning rate is required"));
        }
        if self.learning_rates.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(DcaError::config("learning rates must be positive"));
        }
        if self.learning_rates.windows(2).any(|w| w[1] >= w[0]) {
            return Err(DcaError::config("learning rates must be strictly decreasing"));
        }
        if self.iterations_per_rate == 0 {
            return Err(DcaError::config("iterations_per_rate must be at least 1"));
        }
        if self.rolling_average_window == 0 {
            return Err(DcaError::config("rolling_average_window must be at least 1"));
        }
        if !(self.granularity > 0.0 && self.granularity.is_finite()) {
            return Err(DcaError::config("granularity must be positive"));
        }
        if !self.bonus_min.is_finite() {
            return Err(DcaError::config("bonus_min must be finite"));
        }
        if let Some(max) = self.bonus_max {
            if !(max >= self.bonus_min) {
                return Err(DcaError::config(format!(
                    "bonus_max {max} is below bonus_min {}",
                    self.bonus_min
                )));
            }
            let g = self.granularity;
            if (self.bonus_min / g - 1e-9).ceil() > (max / g + 1e-9).floor() {
                return Err(DcaError::config(format!(
                    "no multiple of granularity {g} lies in [{}, {max}]",
                    self.bonus_min
                )));
            }
        }
        let a = &self.adam;
        if !(a.alpha > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(DcaError::config("invalid Adam parameters"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds { lo: self.bonus_min, hi: self.bonus_max.unwrap_or(f64::INFINITY) }
    }

    fn resolve_attributes(&self, table: &RecordTable) -> Vec<String> {
        self.attributes.clone().unwrap_or_else(|| table.fairness_names())
    }
}

/// Inclusive bonus range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn clamp(&self, v: &mut [f64]) {
        for x in v {
            *x = x.clamp(self.lo, self.hi);
        }
    }

    /// Rounds to the granularity, then clamps to the multiples of it inside the range.
    pub fn round(&self, v: &[f64], granularity: f64) -> Vec<f64> {
        let lo = (self.lo / granularity - 1e-9).ceil() * granularity;
        let hi = if self.hi.is_finite() { (self.hi / granularity + 1e-9).floor() * granularity } else { f64::INFINITY };
        v.iter()
            .map(|&x| {
                let r = round_to_granularity(x, granularity).clamp(lo, hi);
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }
}

/// Per-parameter adaptive step sizes.
#[derive(Clone, Debug)]
pub struct Adam {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(params: AdamParams, width: usize) -> Self {
        Self { params, m: vec![0.0; width], v: vec![0.0; width], t: 0 }
    }

    /// One bias-corrected update of `theta` against `signal`.
    pub fn step(&mut self, theta: &mut [f64], signal: &[f64]) {
        let AdamParams { alpha, beta1, beta2, epsilon } = self.params;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for i in 0..theta.len() {
            let g = signal[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] -= alpha * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "phase")]
pub enum Phase {
    Core { rate: f64 },
    Refine,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    #[serde(flatten)]
    pub phase: Phase,
    /// Bonus values after the update.
    pub bonus: Vec<f64>,
    /// Norm of the objective measured on the sample before the update.
    pub sampled_norm: f64,
}

/// Output of the first pass: unrounded bonuses and their path.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreResult {
    pub names: Vec<String>,
    pub bonus: Vec<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Next free sample draw index.
    pub next_draw: u64,
    pub loop_time: Duration,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DcaResult {
    /// Rounded, clamped bonus vector.
    pub bonus: BonusVector,
    /// The first pass's bonus vector, rounded the same way.
    pub core_bonus: BonusVector,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Objective on the full table without bonuses.
    pub objective_before: DisparityVector,
    /// Objective on the full table with `bonus`.
    pub objective_after: DisparityVector,
    pub ndcg_after: f64,
    /// Time spent in the sampling loops only.
    pub loop_time: Duration,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

impl DcaResult {
    /// Everything except the timing fields agrees.
    pub fn same_outcome(&self, other: &DcaResult) -> bool {
        self.bonus == other.bonus
            && self.core_bonus == other.core_bonus
            && self.trajectory == other.trajectory
            && self.objective_before == other.objective_before
            && self.objective_after == other.objective_after
            && self.ndcg_after.to_bits() == other.ndcg_after.to_bits()
    }
}

struct Setup {
    packed: PackedRows,
    names: Vec<String>,
    sign: f64,
    warnings: Vec<String>,
}

fn setup(table: &RecordTable, spec: &RankingSpec, config: &DcaConfig) -> Result<Setup> {
    config.validate()?;
    spec.validate()?;
    let names = config.resolve_attributes(table);
    if names.is_empty() {
        return Err(DcaError::config("no fairness attributes to compensate"));
    }
    let plan = ScoringPlan::new(table, spec, &names)?;
    config.objective.validate(table, &names)?;
    let rarest = crate::data::rarest_group_frequency(table, &names);
    let k = match &config.objective.discounting {
        crate::metrics::Discounting::AtK => spec.k,
        crate::metrics::Discounting::LogDiscounted { k_max, .. } => k_max.min(0.999),
    };
    let mut warnings = config.sample.check(k, rarest)?;
    if !config.sample.replacement && config.sample.sample_size > table.len() {
        warnings.push(format!(
            "sample_size {} exceeds the {} available records; every draw uses the full table",
            config.sample.sample_size,
            table.len()
        ));
    }
    let packed = PackedRows::new(table, &plan);
    Ok(Setup { packed, names, sign: spec.orientation.sign(), warnings })
}

fn sampled_objective(
    table: &RecordTable,
    spec: &RankingSpec,
    config: &DcaConfig,
    setup: &Setup,
    bonus: &[f64],
    draw: u64,
) -> Result<DisparityVector> {
    let (rows, _) = sample_rows(table.len(), &config.sample, draw);
    let d = setup.packed.evaluate(&config.objective, &setup.names, table.ids(), &rows, bonus, spec.k)?;
    if d.components.iter().any(|c| !c.is_finite()) {
        return Err(DcaError::data(format!("objective became non-finite at draw {draw}: {:?}", d.components)));
    }
    Ok(d)
}

/// First pass: fixed-rate descent over sampled objective vectors.
pub fn core_dca(table: &RecordTable, spec: &RankingSpec, config: &DcaConfig) -> Result<CoreResult> {
    let st = setup(table, spec, config)?;
    let (names, sign, warnings) = (st.names.clone(), st.sign, st.warnings.clone());
    let bounds = config.bounds();
    let mut rng = stream_rng(config.master_seed(), INIT_STREAM);
    let mut bonus: Vec<f64> = names
        .iter()
        .map(|_| rng.random::<f64>() * 4.0 * config.granularity)
        .collect();
    bounds.clamp(&mut bonus);

    let start = Instant::now();
    let mut trajectory = Vec::with_capacity(config.learning_rates.len() * config.iterations_per_rate);
    let mut draw = 0u64;
    for &rate in &config.learning_rates {
        for _ in 0..config.iterations_per_rate {
            let d = sampled_objective(table, spec, config, &st, &bonus, draw)?;
            draw += 1;
            for (b, c) in bonus.iter_mut().zip(&d.components) {
                *b -= sign * rate * c;
            }
            bounds.clamp(&mut bonus);
            trajectory.push(TrajectoryPoint { phase: Phase::Core { rate }, bonus: bonus.clone(), sampled_norm: d.norm });
        }
    }
    Ok(CoreResult { names, bonus, trajectory, next_draw: draw, loop_time: start.elapsed(), warnings })
}

/// Second pass: Adam over the sampled objective, rolling average, rounding.
pub fn refine(table: &RecordTable, spec: &RankingSpec, config: &DcaConfig, core: CoreResult) -> Result<DcaResult> {
    let started = Instant::now();
    let st = setup(table, spec, config)?;
    let (names, sign) = (st.names.clone(), st.sign);
    if names != core.names {
        return Err(DcaError::config("core result was computed for different attributes"));
    }
    let bounds = config.bounds();
    let mut adam = Adam::new(config.adam.clone(), names.len());
    let mut bonus = core.bonus.clone();
    let mut window: VecDeque<Vec<f64>> = VecDeque::with_capacity(config.rolling_average_window);
    let mut trajectory = core.trajectory;
    let mut signal = vec![0.0; names.len()];

    let loop_start = Instant::now();
    let mut draw = core.next_draw;
    for _ in 0..config.refine_iterations {
        let d = sampled_objective(table, spec, config, &st, &bonus, draw)?;
        draw += 1;
        for (s, c) in signal.iter_mut().zip(&d.components) {
            *s = sign * c;
        }
        adam.step(&mut bonus, &signal);
        bounds.clamp(&mut bonus);
        if window.len() == config.rolling_average_window {
            window.pop_front();
        }
        window.push_back(bonus.clone());
        trajectory.push(TrajectoryPoint { phase: Phase::Refine, bonus: bonus.clone(), sampled_norm: d.norm });
    }
    let loop_time = core.loop_time + loop_start.elapsed();

    let averaged = if window.is_empty() {
        core.bonus.clone()
    } else {
        let mut acc = vec![0.0; names.len()];
        for it in &window {
            for (a, v) in acc.iter_mut().zip(it) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / window.len() as f64).collect()
    };

    let g = config.granularity;
    let bonus = BonusVector::new(names.clone(), bounds.round(&averaged, g), g)?;
    let core_bonus = BonusVector::new(names.clone(), bounds.round(&core.bonus, g), g)?;
    let zero = BonusVector::zeros(names, g);
    let objective_before = config.objective.evaluate(table, spec, &zero)?;
    let objective_after = config.objective.evaluate(table, spec, &bonus)?;
    let ndcg_after = ndcg_for_bonus(table, spec, &bonus)?;

    Ok(DcaResult {
        bonus,
        core_bonus,
        trajectory,
        objective_before,
        objective_after,
        ndcg_after,
        loop_time,
        wall_time: started.elapsed() + core.loop_time,
        warnings: core.warnings,
    })
}

/// Both passes. A pure function of its inputs, including the master seed.
pub fn run_dca(table: &RecordTable, spec: &RankingSpec, config: &DcaConfig) -> Result<DcaResult> {
    let core = core_dca(table, spec, config)?;
    refine(table, spec, config, core)
}

/// One descent step on the entire table instead of a sample.
///
/// Returns `B - L * D` (sign-adjusted for the orientation) without clamping,
/// so callers can inspect the raw increment.
pub fn full_dca_step(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector, rate: f64) -> Result<BonusVector> {
    let d = Objective::at_k(MetricKind::Disparity).evaluate(table, spec, bonus)?;
    let sign = spec.orientation.sign();
    let values = bonus
        .values()
        .iter()
        .zip(&d.components)
        .map(|(b, c)| b - sign * rate * c)
        .collect();
    Ok(bonus.with_values(values))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityTarget {
    /// Keep at least this nDCG@k; the largest scale that does is returned.
    MinNdcg(f64),
    /// Reach at most this objective norm; the smallest scale that does is returned.
    MaxNorm(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledBonus {
    pub scale: f64,
    pub bonus: BonusVector,
    pub ndcg: f64,
    pub norm: f64,
    pub feasible: bool,
}

fn scaled_point(
    table: &RecordTable,
    spec: &RankingSpec,
    bonus: &BonusVector,
    objective: &Objective,
    s: f64,
) -> Result<ScaledBonus> {
    let b = bonus.scaled(s);
    let norm = objective.evaluate(table, spec, &b)?.norm;
    let ndcg = ndcg_for_bonus(table, spec, &b)?;
    Ok(ScaledBonus { scale: s, bonus: b, ndcg, norm, feasible: true })
}

const MAX_BISECTIONS: usize = 30;

/// Shrinks a bonus vector by a common factor to meet a utility or fairness target.
pub fn scale_bonus_for_utility(
    table: &RecordTable,
    spec: &RankingSpec,
    bonus: &BonusVector,
    objective: &Objective,
    target: UtilityTarget,
) -> Result<ScaledBonus> {
    let meets = |p: &ScaledBonus| match target {
        UtilityTarget::MinNdcg(x) => p.ndcg >= x,
        UtilityTarget::MaxNorm(x) => p.norm <= x,
    };
    let at = |s| scaled_point(table, spec, bonus, objective, s);

    // (feasible end, infeasible end) of the search interval
    let (mut good, mut bad) = match target {
        UtilityTarget::MinNdcg(_) => {
            let full = at(1.0)?;
            if meets(&full) {
                return Ok(full);
            }
            let none = at(0.0)?;
            if !meets(&none) {
                return Ok(ScaledBonus { feasible: false, ..none });
            }
            (none, full)
        }
        UtilityTarget::MaxNorm(_) => {
            let none = at(0.0)?;
            if meets(&none) {
                return Ok(none);
            }
            let full = at(1.0)?;
            if !meets(&full) {
                return Ok(ScaledBonus { feasible: false, ..full });
            }
            (full, none)
        }
    };
    for _ in 0..MAX_BISECTIONS {
        if good.bonus == bad.bonus {
            break;
        }
        let mid = at(0.5 * (good.scale + bad.scale))?;
        if meets(&mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Objective norm and nDCG at evenly spaced scale factors from 0 to 1.
pub fn scale_sweep(
    table: &RecordTable,
    spec: &RankingSpec,
    bonus: &BonusVector,
    objective: &Objective,
    step: f64,
) -> Result<Vec<ScaledBonus>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(DcaError::config(format!("scale step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step + 1e-9).floor() as usize;
    let mut scales: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    if *scales.last().unwrap() < 1.0 {
        scales.push(1.0);
    }
    scales.into_iter().map(|s| scaled_point(table, spec, bonus, objective, s)).collect()
}
