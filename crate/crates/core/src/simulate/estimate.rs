use super::{run_trials, sampler::LawCache, trial_rng, Population, SimOutcome, StopReason, TrialPlan};
use crate::error::{Error, Result};
use crate::model::{BrwModel, Site};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const Z95: f64 = 1.959_964;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SurvivalMode {
    /// Alive at the horizon.
    Global,
    /// Visits `target` during the final quarter of the horizon.
    Local { target: Vec<Site> },
    /// Among trials alive at the end, visits `target` during the final quarter.
    StrongLocal { target: Vec<Site> },
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Survival frequency with Wilson intervals.
///
/// Trials stopped by the population cap or by leaving the representable space are censored:
/// the upper estimate counts them as successes, the lower one as failures.
#[derive(Clone, Debug, Serialize)]
pub struct SurvivalEstimate {
    pub mode: SurvivalMode,
    pub trials: u64,
    /// Denominator: all trials, or the trials alive at the end for strong-local mode.
    pub eligible: u64,
    pub successes: u64,
    pub censored: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lower_estimate: f64,
    pub lower_ci_low: f64,
    pub lower_ci_high: f64,
    pub horizon: u64,
    pub note: String,
}

impl SurvivalEstimate {
    pub fn std_error(&self) -> f64 {
        if self.eligible == 0 {
            return 0.0;
        }
        (self.estimate * (1.0 - self.estimate) / self.eligible as f64).sqrt()
    }

    /// Lower 95% bound is positive for the censored-as-failure estimate.
    pub fn bounded_away_from_zero(&self) -> bool {
        self.lower_ci_low > 0.0
    }
}

/// Summarizes finished trials under `mode`; local modes read the first target counter.
pub fn summarize(outcomes: &[SimOutcome], mode: SurvivalMode, horizon: u64) -> Result<SurvivalEstimate> {
    if outcomes.is_empty() {
        return Err(Error::Invalid("survival estimate needs at least one trial".into()));
    }
    let censored_stop = |o: &SimOutcome| matches!(o.stop, StopReason::PopulationCap | StopReason::EscapedBall);
    let late = |o: &SimOutcome| o.visits.first().is_some_and(|v| v.late_visits > 0);
    let (eligible, successes, censored, note) = match &mode {
        SurvivalMode::Global => {
            let alive = outcomes.iter().filter(|o| o.stop == StopReason::Horizon).count() as u64;
            let cens = outcomes.iter().filter(|o| censored_stop(o)).count() as u64;
            (outcomes.len() as u64, alive, cens, "alive at a finite horizon over-estimates eventual survival".to_string())
        }
        SurvivalMode::Local { .. } => {
            let hit = outcomes.iter().filter(|o| late(o)).count() as u64;
            let cens = outcomes.iter().filter(|o| censored_stop(o) && !late(o)).count() as u64;
            (outcomes.len() as u64, hit, cens, "local survival proxy: visits in the final quarter of the horizon".to_string())
        }
        SurvivalMode::StrongLocal { .. } => {
            let alive: Vec<_> = outcomes.iter().filter(|o| o.stop.alive()).collect();
            let hit = alive.iter().filter(|o| late(o)).count() as u64;
            let cens = alive.iter().filter(|o| censored_stop(o) && !late(o)).count() as u64;
            (alive.len() as u64, hit, cens, "conditioned on being alive at the end of the trial".to_string())
        }
    };
    let frac = |k: u64| if eligible == 0 { 0.0 } else { k as f64 / eligible as f64 };
    let (ci_low, ci_high) = wilson_interval(successes + censored, eligible);
    let (lower_ci_low, lower_ci_high) = wilson_interval(successes, eligible);
    Ok(SurvivalEstimate {
        mode,
        trials: outcomes.len() as u64,
        eligible,
        successes,
        censored,
        estimate: frac(successes + censored),
        ci_low,
        ci_high,
        lower_estimate: frac(successes),
        lower_ci_low,
        lower_ci_high,
        horizon,
        note,
    })
}

/// Runs the plan from one particle at `start` and estimates survival in `mode`.
pub fn estimate_survival(model: &BrwModel, start: &Site, plan: &TrialPlan, mode: SurvivalMode) -> Result<SurvivalEstimate> {
    if plan.trials == 0 {
        return Err(Error::Invalid("survival estimate needs at least one trial".into()));
    }
    let mut plan = plan.clone();
    plan.targets = match &mode {
        SurvivalMode::Global => Vec::new(),
        SurvivalMode::Local { target } | SurvivalMode::StrongLocal { target } => vec![target.clone()],
    };
    let outcomes = run_trials(model, &Population::single(start.clone()), &plan)?;
    summarize(&outcomes, mode, plan.horizon)
}

#[derive(Clone, Debug, Serialize)]
pub struct OneStepMean {
    pub site: Site,
    pub mean: f64,
    pub std_error: f64,
}

/// Empirical mean and standard error of the first-generation count at every reached site.
pub fn one_step_means(model: &BrwModel, start: &Site, trials: u64, seed: u64) -> Result<Vec<OneStepMean>> {
    if trials == 0 {
        return Err(Error::Invalid("one-step means need at least one trial".into()));
    }
    type Sums = BTreeMap<Site, (u128, u128)>;
    let merge = |mut a: Sums, b: Sums| {
        for (s, (x, xx)) in b {
            let e = a.entry(s).or_insert((0, 0));
            e.0 += x;
            e.1 += xx;
        }
        a
    };
    let sums: Sums = (0..trials)
        .into_par_iter()
        .fold(
            || (LawCache::new(model.structure().clone()), Sums::new(), BTreeMap::<Site, u128>::new()),
            |(mut cache, mut sums, mut counts), t| {
                let mut rng = trial_rng(seed, t);
                counts.clear();
                cache.get(start).sample(&mut rng, |s, c| *counts.entry(s.clone()).or_insert(0) += c);
                for (s, c) in &counts {
                    let e = sums.entry(s.clone()).or_insert((0, 0));
                    e.0 += c;
                    e.1 += c * c;
                }
                (cache, sums, counts)
            },
        )
        .map(|(_, sums, _)| sums)
        .reduce(Sums::new, merge);
    let n = trials as f64;
    Ok(sums
        .into_iter()
        .map(|(site, (x, xx))| {
            let mean = x as f64 / n;
            let var = (xx as f64 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            OneStepMean { site, mean, std_error: (var / n).sqrt() }
        })
        .collect())
}
