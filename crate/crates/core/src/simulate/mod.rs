//! Monte Carlo engine for plain, truncated and restrained branching random walks.

mod estimate;
mod sampler;
mod sweep;

pub use estimate::{estimate_survival, one_step_means, summarize, wilson_interval, OneStepMean, SurvivalEstimate, SurvivalMode};
pub use sweep::{coupled_trial, coupled_truncation_sweep, SweepLevel, SweepResult};

use crate::error::{Error, Result};
use crate::model::{Acceptance, BrwModel, Count, Site};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sampler::LawCache;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

/// Particle counts per site at one generation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Population {
    counts: BTreeMap<Site, u64>,
    generation: u64,
}

impl Population {
    pub fn single(site: Site) -> Population {
        Population { counts: BTreeMap::from([(site, 1)]), generation: 0 }
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (Site, u64)>) -> Population {
        Population { counts: counts.into_iter().filter(|(_, c)| *c > 0).collect(), generation: 0 }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn get(&self, site: &Site) -> u64 {
        self.counts.get(site).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.counts.is_empty()
    }

    /// Occupied sites in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, u64)> {
        self.counts.iter().map(|(s, c)| (s, *c))
    }

    /// Coordinatewise `self <= other`.
    pub fn dominated_by(&self, other: &Population) -> bool {
        self.counts.iter().all(|(s, c)| *c <= other.get(s))
    }

    fn count_in(&self, set: &BTreeSet<Site>) -> u64 {
        set.iter().map(|s| self.get(s)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Extinct,
    Horizon,
    PopulationCap,
    EscapedBall,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Extinct => "extinct",
            StopReason::Horizon => "horizon",
            StopReason::PopulationCap => "population-cap",
            StopReason::EscapedBall => "escaped-ball",
        }
    }

    /// Alive when the trial stopped.
    pub fn alive(self) -> bool {
        self != StopReason::Extinct
    }
}

/// Visits of one target set, counted over generations `1..`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TargetVisits {
    pub first_visit: Option<u64>,
    /// Particle-generations spent in the set.
    pub total_visits: u64,
    /// Particle-generations in the final quarter of the horizon.
    pub late_visits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub trial: u64,
    pub stop: StopReason,
    pub final_generation: u64,
    pub final_population: u64,
    pub max_population: u64,
    pub visits: Vec<TargetVisits>,
    /// Total population per generation when requested by the plan.
    pub history: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialPlan {
    pub trials: u64,
    pub horizon: u64,
    pub population_cap: u64,
    pub seed: u64,
    /// Overrides the model's truncation level.
    pub truncation: Option<u64>,
    /// Overrides the model's acceptance function.
    pub acceptance: Option<Acceptance>,
    pub targets: Vec<Vec<Site>>,
    pub record_history: bool,
}

impl Default for TrialPlan {
    fn default() -> Self {
        TrialPlan {
            trials: 1000,
            horizon: 100,
            population_cap: 10_000_000,
            seed: 0,
            truncation: None,
            acceptance: None,
            targets: Vec::new(),
            record_history: false,
        }
    }
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        if self.population_cap == 0 {
            return Err(Error::Invalid("population cap must be positive".into()));
        }
        if self.truncation == Some(0) {
            return Err(Error::Invalid("truncation level must be positive".into()));
        }
        Ok(())
    }

    /// First generation of the final quarter of the horizon.
    pub fn late_start(&self) -> u64 {
        self.horizon - self.horizon / 4
    }

    fn target_sets(&self) -> Vec<BTreeSet<Site>> {
        self.targets.iter().map(|t| t.iter().cloned().collect()).collect()
    }
}

/// Independent substream for one trial, derived from the master seed and the trial index only.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub(crate) enum Step {
    Next(BTreeMap<Site, u64>),
    Overflow,
    Escaped,
}

struct Rules<'a> {
    truncation: Option<u64>,
    acceptance: Option<&'a Acceptance>,
    cap: u64,
}

/// One generation: particles in canonical site order, each drawing one configuration.
fn step(cache: &mut LawCache, rng: &mut ChaCha8Rng, pop: &Population, rules: &Rules) -> Step {
    let mut next: BTreeMap<Site, u128> = BTreeMap::new();
    let mut total: u128 = 0;
    let mut placed = Vec::new();
    for (site, count) in pop.iter() {
        for _ in 0..count {
            placed.clear();
            cache.get(site).sample(rng, |t, c| placed.push((t.clone(), c)));
            for (t, c) in placed.drain(..) {
                if !cache.representable(&t) {
                    return Step::Escaped;
                }
                let slot = next.entry(t).or_insert(0);
                let accepted = match rules.acceptance {
                    None => {
                        *slot = slot.saturating_add(c);
                        c
                    }
                    Some(a) => accept_each(a, rng, slot, c),
                };
                total = total.saturating_add(accepted);
            }
            if rules.truncation.is_none() && total > rules.cap as u128 {
                return Step::Overflow;
            }
        }
    }
    let mut out = BTreeMap::new();
    let mut kept: u128 = 0;
    for (s, c) in next {
        let c = match rules.truncation {
            Some(m) => c.min(m as u128),
            None => c,
        };
        if c > 0 {
            kept += c;
            if kept > rules.cap as u128 {
                return Step::Overflow;
            }
            out.insert(s, c as u64);
        }
    }
    Step::Next(out)
}

/// Sequential restrained placement of `count` children at a site currently holding `*slot`.
fn accept_each(a: &Acceptance, rng: &mut ChaCha8Rng, slot: &mut u128, count: Count) -> Count {
    let mut accepted = 0;
    for _ in 0..count {
        let p = a.prob(u64::try_from(*slot).unwrap_or(u64::MAX));
        if p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p) {
            *slot += 1;
            accepted += 1;
        }
    }
    accepted
}

fn effective_rules<'a>(model: &'a BrwModel, plan: &'a TrialPlan) -> Rules<'a> {
    Rules {
        truncation: plan.truncation.or(model.truncation()),
        acceptance: plan.acceptance.as_ref().or(model.acceptance()),
        cap: plan.population_cap,
    }
}

fn run_with(cache: &mut LawCache, model: &BrwModel, initial: &Population, plan: &TrialPlan, trial: u64) -> SimOutcome {
    let rules = effective_rules(model, plan);
    let sets = plan.target_sets();
    let late = plan.late_start();
    let mut rng = trial_rng(plan.seed, trial);
    let mut pop = initial.clone();
    let mut visits = vec![TargetVisits::default(); sets.len()];
    let mut max_population = pop.total();
    let mut history = plan.record_history.then(|| vec![pop.total()]);
    let mut stop = StopReason::Horizon;
    while pop.generation < plan.horizon {
        if pop.is_extinct() {
            stop = StopReason::Extinct;
            break;
        }
        match step(cache, &mut rng, &pop, &rules) {
            Step::Next(counts) => {
                pop = Population { counts, generation: pop.generation + 1 };
            }
            Step::Overflow => {
                stop = StopReason::PopulationCap;
                break;
            }
            Step::Escaped => {
                stop = StopReason::EscapedBall;
                break;
            }
        }
        let total = pop.total();
        max_population = max_population.max(total);
        if let Some(h) = history.as_mut() {
            h.push(total);
        }
        for (v, set) in visits.iter_mut().zip(&sets) {
            let k = pop.count_in(set);
            if k > 0 {
                v.first_visit.get_or_insert(pop.generation);
                v.total_visits += k;
                if pop.generation >= late {
                    v.late_visits += k;
                }
            }
        }
    }
    if stop == StopReason::Horizon && pop.is_extinct() {
        stop = StopReason::Extinct;
    }
    SimOutcome {
        trial,
        stop,
        final_generation: pop.generation,
        final_population: pop.total(),
        max_population,
        visits,
        history,
    }
}

/// Simulates one trial from `initial` on the substream of `trial`.
pub fn run_trial(model: &BrwModel, initial: &Population, plan: &TrialPlan, trial: u64) -> Result<SimOutcome> {
    plan.validate()?;
    let mut cache = LawCache::new(model.structure().clone());
    Ok(run_with(&mut cache, model, initial, plan, trial))
}

/// All trials of the plan in parallel; results are in trial order and independent of thread count.
pub fn run_trials(model: &BrwModel, initial: &Population, plan: &TrialPlan) -> Result<Vec<SimOutcome>> {
    plan.validate()?;
    Ok((0..plan.trials)
        .into_par_iter()
        .map_init(|| LawCache::new(model.structure().clone()), |cache, t| run_with(cache, model, initial, plan, t))
        .collect())
}

/// CSV with columns `trial,stop_reason,final_gen,max_pop,visits_A` plus one visit column per extra target.
pub fn write_trials_csv<W: Write>(mut w: W, outcomes: &[SimOutcome]) -> std::io::Result<()> {
    let extra = outcomes.first().map_or(0, |o| o.visits.len().saturating_sub(1));
    write!(w, "trial,stop_reason,final_gen,max_pop,visits_A")?;
    for i in 1..=extra {
        write!(w, ",visits_A{i}")?;
    }
    writeln!(w)?;
    for o in outcomes {
        write!(w, "{},{},{},{}", o.trial, o.stop.as_str(), o.final_generation, o.max_population)?;
        if o.visits.is_empty() {
            write!(w, ",0")?;
        }
        for v in &o.visits {
            write!(w, ",{}", v.total_visits)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
