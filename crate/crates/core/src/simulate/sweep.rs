use super::{sampler::LawCache, summarize, trial_rng, Population, SimOutcome, StopReason, SurvivalEstimate, SurvivalMode, TargetVisits, TrialPlan};
use crate::error::{Error, Result};
use crate::model::{BrwModel, Count, Site};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Survival at one truncation level; `m = None` is the plain walk.
#[derive(Clone, Debug, Serialize)]
pub struct SweepLevel {
    pub m: Option<u64>,
    pub global: SurvivalEstimate,
    pub local: Option<SurvivalEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub trials: u64,
    pub horizon: u64,
    pub levels: Vec<SweepLevel>,
    /// Level pairs compared across all trials and generations.
    pub comparisons: u64,
}

impl SweepResult {
    /// Survival estimates are nondecreasing in `m`.
    pub fn monotone(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].global.estimate <= w[1].global.estimate)
    }
}

struct Track {
    m: Option<u64>,
    pop: Population,
    stop: Option<StopReason>,
    max_population: u64,
    visits: Vec<TargetVisits>,
    history: Option<Vec<u64>>,
}

fn validate_levels(levels: &[Option<u64>]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Invalid("truncation sweep needs at least one level".into()));
    }
    let key = |m: &Option<u64>| m.unwrap_or(u64::MAX);
    if levels.iter().any(|m| *m == Some(0)) || levels.windows(2).any(|w| key(&w[0]) >= key(&w[1])) {
        return Err(Error::Invalid("truncation levels must be positive and strictly ascending".into()));
    }
    Ok(())
}

/// One trial of the coupled family, returning one outcome per level in `levels` order.
///
/// Particle `k` at a site draws its offspring once; a level holding `n` particles there uses the
/// draws of particles `0..n`, so smaller levels reuse a prefix of the larger level's randomness.
pub fn coupled_trial(model: &BrwModel, start: &Site, plan: &TrialPlan, levels: &[Option<u64>], trial: u64) -> Result<Vec<SimOutcome>> {
    plan.validate()?;
    validate_levels(levels)?;
    if plan.acceptance.is_some() || model.acceptance().is_some() {
        return Err(Error::Invalid("truncation sweeps do not support restrained acceptance".into()));
    }
    let mut cache = LawCache::new(model.structure().clone());
    coupled_with(&mut cache, start, plan, levels, trial).map(|(o, _)| o)
}

fn coupled_with(cache: &mut LawCache, start: &Site, plan: &TrialPlan, levels: &[Option<u64>], trial: u64) -> Result<(Vec<SimOutcome>, u64)> {
    let sets: Vec<BTreeSet<Site>> = plan.targets.iter().map(|t| t.iter().cloned().collect()).collect();
    let late = plan.late_start();
    let mut rng = trial_rng(plan.seed, trial);
    let mut tracks: Vec<Track> = levels
        .iter()
        .map(|&m| Track {
            m,
            pop: Population::single(start.clone()),
            stop: None,
            max_population: 1,
            visits: vec![TargetVisits::default(); sets.len()],
            history: plan.record_history.then(|| vec![1]),
        })
        .collect();
    let mut comparisons = 0;
    let mut children: Vec<(Site, Count)> = Vec::new();
    for generation in 1..=plan.horizon {
        for t in tracks.iter_mut().filter(|t| t.stop.is_none() && t.pop.is_extinct()) {
            t.stop = Some(StopReason::Extinct);
        }
        let active: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].stop.is_none()).collect();
        let Some(&top) = active.last() else { break };
        let mut next: Vec<BTreeMap<Site, u128>> = vec![BTreeMap::new(); active.len()];
        let mut escaped = vec![false; active.len()];
        let top_pop = tracks[top].pop.clone();
        for (site, count) in top_pop.iter() {
            let held: Vec<u64> = active.iter().map(|&i| tracks[i].pop.get(site)).collect();
            for k in 0..count {
                children.clear();
                cache.get(site).sample(&mut rng, |s, c| children.push((s.clone(), c)));
                let lost = children.iter().any(|(s, _)| !cache.representable(s));
                for (j, &n) in held.iter().enumerate() {
                    if k >= n {
                        continue;
                    }
                    if lost {
                        escaped[j] = true;
                        continue;
                    }
                    for (s, c) in &children {
                        *next[j].entry(s.clone()).or_insert(0) += *c;
                    }
                }
            }
        }
        for (j, &i) in active.iter().enumerate() {
            let track = &mut tracks[i];
            if escaped[j] {
                track.stop = Some(StopReason::EscapedBall);
                continue;
            }
            let mut counts = BTreeMap::new();
            let mut total: u128 = 0;
            for (s, c) in std::mem::take(&mut next[j]) {
                let c = track.m.map_or(c, |m| c.min(m as u128));
                total += c;
                counts.insert(s, c as u64);
            }
            if total > plan.population_cap as u128 {
                track.stop = Some(StopReason::PopulationCap);
                continue;
            }
            track.pop = Population { counts, generation };
            let total = total as u64;
            track.max_population = track.max_population.max(total);
            if let Some(h) = track.history.as_mut() {
                h.push(total);
            }
            for (v, set) in track.visits.iter_mut().zip(&sets) {
                let k = track.pop.count_in(set);
                if k > 0 {
                    v.first_visit.get_or_insert(generation);
                    v.total_visits += k;
                    if generation >= late {
                        v.late_visits += k;
                    }
                }
            }
        }
        let live: Vec<usize> = active.iter().copied().filter(|&i| tracks[i].stop.is_none()).collect();
        for w in live.windows(2) {
            comparisons += 1;
            if !tracks[w[0]].pop.dominated_by(&tracks[w[1]].pop) {
                return Err(Error::CouplingBroken {
                    trial,
                    generation,
                    detail: format!("level {:?} exceeds level {:?}", tracks[w[0]].m, tracks[w[1]].m),
                });
            }
        }
    }
    let outcomes = tracks
        .into_iter()
        .map(|t| {
            let stop = t.stop.unwrap_or(if t.pop.is_extinct() { StopReason::Extinct } else { StopReason::Horizon });
            SimOutcome {
                trial,
                stop,
                final_generation: t.pop.generation(),
                final_population: if stop == StopReason::Extinct { 0 } else { t.pop.total() },
                max_population: t.max_population,
                visits: t.visits,
                history: t.history,
            }
        })
        .collect();
    Ok((outcomes, comparisons))
}

/// Simulates every truncation level on shared randomness and checks pathwise domination each generation.
pub fn coupled_truncation_sweep(model: &BrwModel, start: &Site, plan: &TrialPlan, levels: &[Option<u64>]) -> Result<SweepResult> {
    plan.validate()?;
    validate_levels(levels)?;
    if plan.trials == 0 {
        return Err(Error::Invalid("truncation sweep needs at least one trial".into()));
    }
    if plan.acceptance.is_some() || model.acceptance().is_some() {
        return Err(Error::Invalid("truncation sweeps do not support restrained acceptance".into()));
    }
    let runs: Vec<Result<(Vec<SimOutcome>, u64)>> = (0..plan.trials)
        .into_par_iter()
        .map_init(|| LawCache::new(model.structure().clone()), |cache, t| coupled_with(cache, start, plan, levels, t))
        .collect();
    let mut per_level: Vec<Vec<SimOutcome>> = vec![Vec::with_capacity(plan.trials as usize); levels.len()];
    let mut comparisons = 0;
    for run in runs {
        let (outcomes, c) = run?;
        comparisons += c;
        for (l, o) in per_level.iter_mut().zip(outcomes) {
            l.push(o);
        }
    }
    let target = plan.targets.first().cloned();
    let levels = levels
        .iter()
        .zip(&per_level)
        .map(|(&m, outcomes)| {
            Ok(SweepLevel {
                m,
                global: summarize(outcomes, SurvivalMode::Global, plan.horizon)?,
                local: match &target {
                    Some(t) => Some(summarize(outcomes, SurvivalMode::Local { target: t.clone() }, plan.horizon)?),
                    None => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { trials: plan.trials, horizon: plan.horizon, levels, comparisons })
}
