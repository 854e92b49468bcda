use crate::model::{Count, OffspringLaw, ReproductionLaw, Site, Structure};
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Geometric};
use std::collections::HashMap;
use std::sync::Arc;

pub(crate) enum Offspring {
    Fixed(usize),
    Alias(WeightedAliasIndex<f64>),
    Geometric(Geometric),
}

impl Offspring {
    fn new(law: &OffspringLaw) -> Offspring {
        match law {
            OffspringLaw::Geometric { mean } => Offspring::Geometric(Geometric::new(1.0 / (1.0 + mean)).expect("mean is finite and nonnegative")),
            OffspringLaw::Finite(p) => match p.iter().filter(|w| **w > 0.0).count() {
                0 => Offspring::Fixed(0),
                1 => Offspring::Fixed(p.iter().position(|w| *w > 0.0).expect("one positive weight")),
                _ => Offspring::Alias(WeightedAliasIndex::new(p.clone()).expect("validated offspring law")),
            },
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Offspring::Fixed(k) => *k as u64,
            Offspring::Alias(a) => a.sample(rng) as u64,
            Offspring::Geometric(g) => g.sample(rng),
        }
    }
}

/// Index into `targets`, or `None` for a child lost to a deficient diffusion row.
pub(crate) enum Placement {
    Fixed(Option<usize>),
    Alias(WeightedAliasIndex<f64>, usize),
}

impl Placement {
    fn sample<R: Rng>(&self, rng: &mut R) -> Option<usize> {
        match self {
            Placement::Fixed(t) => *t,
            Placement::Alias(a, n) => Some(a.sample(rng)).filter(|i| i < n),
        }
    }
}

/// Draws offspring configurations of one site.
pub(crate) enum SiteSampler {
    Null,
    Explicit { configs: Vec<Vec<(Site, Count)>>, index: Option<WeightedAliasIndex<f64>> },
    Diffusion { offspring: Offspring, targets: Vec<Site>, placement: Placement },
}

impl SiteSampler {
    pub(crate) fn new(law: ReproductionLaw<Site>) -> SiteSampler {
        let law = match law {
            ReproductionLaw::ContinuousCounterpart { .. } => law.to_discrete_counterpart(),
            other => other,
        };
        match law {
            ReproductionLaw::Explicit(outcomes) => {
                let outcomes: Vec<_> = outcomes.into_iter().filter(|o| o.prob > 0.0).collect();
                if outcomes.is_empty() {
                    return SiteSampler::Null;
                }
                let weights: Vec<f64> = outcomes.iter().map(|o| o.prob).collect();
                let index = (weights.len() > 1).then(|| WeightedAliasIndex::new(weights).expect("validated explicit law"));
                SiteSampler::Explicit { configs: outcomes.into_iter().map(|o| o.config.children).collect(), index }
            }
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                let moves: Vec<_> = moves.into_iter().filter(|(_, p)| *p > 0.0).collect();
                let total: f64 = moves.iter().map(|(_, p)| p).sum();
                let lost = (1.0 - total).max(0.0);
                let n = moves.len();
                let placement = if n == 0 {
                    Placement::Fixed(None)
                } else if n == 1 && lost <= 0.0 {
                    Placement::Fixed(Some(0))
                } else {
                    let mut w: Vec<f64> = moves.iter().map(|(_, p)| *p).collect();
                    if lost > 0.0 {
                        w.push(lost);
                    }
                    Placement::Alias(WeightedAliasIndex::new(w).expect("validated diffusion row"), n)
                };
                SiteSampler::Diffusion {
                    offspring: Offspring::new(&offspring),
                    targets: moves.into_iter().map(|(t, _)| t).collect(),
                    placement,
                }
            }
            ReproductionLaw::ContinuousCounterpart { .. } => unreachable!("converted above"),
        }
    }

    /// Calls `place(target, count)` for each group of children, in a fixed order.
    pub(crate) fn sample<R: Rng>(&self, rng: &mut R, mut place: impl FnMut(&Site, Count)) {
        match self {
            SiteSampler::Null => {}
            SiteSampler::Explicit { configs, index } => {
                let i = index.as_ref().map_or(0, |a| a.sample(rng));
                for (t, c) in &configs[i] {
                    place(t, *c);
                }
            }
            SiteSampler::Diffusion { offspring, targets, placement } => {
                let k = offspring.sample(rng);
                for _ in 0..k {
                    if let Some(t) = placement.sample(rng) {
                        place(&targets[t], 1);
                    }
                }
            }
        }
    }
}

/// Lazily built samplers, one per visited site.
pub(crate) struct LawCache {
    structure: Arc<dyn Structure>,
    samplers: HashMap<Site, SiteSampler>,
}

impl LawCache {
    pub(crate) fn new(structure: Arc<dyn Structure>) -> LawCache {
        LawCache { structure, samplers: HashMap::new() }
    }

    pub(crate) fn get(&mut self, site: &Site) -> &SiteSampler {
        if !self.samplers.contains_key(site) {
            let sampler = SiteSampler::new(self.structure.law(site));
            self.samplers.insert(site.clone(), sampler);
        }
        &self.samplers[site]
    }

    pub(crate) fn representable(&self, site: &Site) -> bool {
        self.structure.representable(site)
    }
}
