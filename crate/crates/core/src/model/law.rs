use serde::{Deserialize, Serialize};

/// Number of children placed at one target.
pub type Count = u128;

/// Finitely supported offspring placement `f : X -> N`, stored as (target, count) pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringConfig<T> {
    pub children: Vec<(T, Count)>,
}

impl<T> OffspringConfig<T> {
    pub fn empty() -> Self {
        OffspringConfig { children: Vec::new() }
    }

    pub fn total(&self) -> Count {
        self.children.iter().map(|(_, c)| *c).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome<T> {
    pub prob: f64,
    pub config: OffspringConfig<T>,
}

/// Law of the total number of children in an independent-diffusion law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffspringLaw {
    /// `probs[i]` is the probability of exactly `i` children.
    Finite(Vec<f64>),
    /// `rho(i) = (1 - q) q^i` with `q = mean / (1 + mean)`.
    Geometric { mean: f64 },
}

impl OffspringLaw {
    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Finite(p) => p.iter().enumerate().map(|(i, w)| i as f64 * w).sum(),
            OffspringLaw::Geometric { mean } => *mean,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            OffspringLaw::Finite(p) => p.iter().sum(),
            OffspringLaw::Geometric { .. } => 1.0,
        }
    }

    pub fn prob(&self, i: usize) -> f64 {
        match self {
            OffspringLaw::Finite(p) => p.get(i).copied().unwrap_or(0.0),
            OffspringLaw::Geometric { mean } => {
                let q = mean / (1.0 + mean);
                (1.0 - q) * q.powi(i as i32)
            }
        }
    }

    /// Generating function evaluated at `s = 1 - u`; the complement form keeps precision near 1.
    pub fn pgf_at_complement(&self, u: f64) -> f64 {
        match self {
            OffspringLaw::Finite(p) => {
                let s = 1.0 - u;
                p.iter().rev().fold(0.0, |acc, w| acc * s + w)
            }
            OffspringLaw::Geometric { mean } => 1.0 / (1.0 + mean * u),
        }
    }

    pub fn pgf(&self, s: f64) -> f64 {
        self.pgf_at_complement(1.0 - s)
    }

    /// Probability that exactly one child lands in a set hit with probability `p` per child.
    pub fn prob_exactly_one(&self, p: f64) -> f64 {
        match self {
            OffspringLaw::Finite(w) => w
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, r)| r * n as f64 * p * (1.0 - p).powi(n as i32 - 1))
                .sum(),
            OffspringLaw::Geometric { mean } => {
                let q = mean / (1.0 + mean);
                let d = 1.0 - q * (1.0 - p);
                (1.0 - q) * q * p / (d * d)
            }
        }
    }

    pub fn can_reproduce(&self) -> bool {
        match self {
            OffspringLaw::Finite(p) => p.iter().skip(1).any(|w| *w > 0.0),
            OffspringLaw::Geometric { mean } => *mean > 0.0,
        }
    }

    fn issue(&self) -> Option<String> {
        match self {
            OffspringLaw::Finite(p) => {
                if p.iter().any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0) {
                    return Some("offspring probabilities must lie in [0,1]".into());
                }
                let s: f64 = p.iter().sum();
                ((s - 1.0).abs() > NORMALIZATION_TOL)
                    .then(|| format!("offspring probabilities sum to {s}"))
            }
            OffspringLaw::Geometric { mean } => (!mean.is_finite() || *mean < 0.0)
                .then(|| format!("geometric mean {mean} is not a finite nonnegative number")),
        }
    }
}

/// Absolute tolerance on total probability mass.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Reproduction law `mu_x` of one vertex, with targets of type `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproductionLaw<T> {
    /// Explicit finite table of offspring configurations.
    Explicit(Vec<Outcome<T>>),
    /// Total offspring drawn from `offspring`, each child placed independently by `moves`.
    IndependentDiffusion { offspring: OffspringLaw, moves: Vec<(T, f64)> },
    /// Continuous-time rates `k_xy` at infection parameter `lambda`.
    ContinuousCounterpart { lambda: f64, rates: Vec<(T, f64)> },
}

pub(crate) fn pow_count(z: f64, n: Count) -> f64 {
    if n <= i32::MAX as Count {
        z.powi(n as i32)
    } else {
        z.powf(n as f64)
    }
}

impl<T> ReproductionLaw<T> {
    /// The law that never produces children.
    pub fn null() -> Self {
        ReproductionLaw::Explicit(vec![Outcome { prob: 1.0, config: OffspringConfig::empty() }])
    }

    /// Drops zero-weight outcomes, counts, moves and rates.
    pub fn pruned(self) -> Self {
        match self {
            ReproductionLaw::Explicit(outs) => ReproductionLaw::Explicit(
                outs.into_iter()
                    .filter(|o| o.prob > 0.0)
                    .map(|mut o| {
                        o.config.children.retain(|(_, c)| *c > 0);
                        o
                    })
                    .collect(),
            ),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                let moves = if offspring.can_reproduce() {
                    moves.into_iter().filter(|(_, p)| *p > 0.0).collect()
                } else {
                    Vec::new()
                };
                ReproductionLaw::IndependentDiffusion { offspring, moves }
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                let rates = if lambda > 0.0 {
                    rates.into_iter().filter(|(_, k)| *k > 0.0).collect()
                } else {
                    Vec::new()
                };
                ReproductionLaw::ContinuousCounterpart { lambda, rates }
            }
        }
    }

    pub fn map_targets<U>(&self, mut f: impl FnMut(&T) -> U) -> ReproductionLaw<U> {
        match self {
            ReproductionLaw::Explicit(outs) => ReproductionLaw::Explicit(
                outs.iter()
                    .map(|o| Outcome {
                        prob: o.prob,
                        config: OffspringConfig {
                            children: o.config.children.iter().map(|(t, c)| (f(t), *c)).collect(),
                        },
                    })
                    .collect(),
            ),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                ReproductionLaw::IndependentDiffusion {
                    offspring: offspring.clone(),
                    moves: moves.iter().map(|(t, p)| (f(t), *p)).collect(),
                }
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                ReproductionLaw::ContinuousCounterpart {
                    lambda: *lambda,
                    rates: rates.iter().map(|(t, k)| (f(t), *k)).collect(),
                }
            }
        }
    }

    /// Every target with positive weight, in storage order (may repeat).
    pub fn targets(&self) -> Vec<&T> {
        match self {
            ReproductionLaw::Explicit(outs) => outs
                .iter()
                .filter(|o| o.prob > 0.0)
                .flat_map(|o| o.config.children.iter().filter(|(_, c)| *c > 0).map(|(t, _)| t))
                .collect(),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                if offspring.can_reproduce() {
                    moves.iter().filter(|(_, p)| *p > 0.0).map(|(t, _)| t).collect()
                } else {
                    Vec::new()
                }
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                if *lambda > 0.0 {
                    rates.iter().filter(|(_, k)| *k > 0.0).map(|(t, _)| t).collect()
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Unaggregated first moments `m_xy` (a target may appear more than once).
    pub fn first_moments(&self) -> Vec<(&T, f64)> {
        match self {
            ReproductionLaw::Explicit(outs) => outs
                .iter()
                .flat_map(|o| o.config.children.iter().map(move |(t, c)| (t, o.prob * *c as f64)))
                .collect(),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                let mean = offspring.mean();
                moves.iter().map(|(t, p)| (t, p * mean)).collect()
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                rates.iter().map(|(t, k)| (t, lambda * k)).collect()
            }
        }
    }

    /// Expected total number of children.
    pub fn mean_offspring(&self) -> f64 {
        self.first_moments().iter().map(|(_, m)| m).sum()
    }

    /// Generating function `G(z|x) = sum_f mu_x(f) prod_y z(y)^f(y)`.
    pub fn eval(&self, z: impl Fn(&T) -> f64) -> f64 {
        match self {
            ReproductionLaw::Explicit(outs) => outs
                .iter()
                .map(|o| o.prob * o.config.children.iter().map(|(t, c)| pow_count(z(t), *c)).product::<f64>())
                .sum(),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                let total: f64 = moves.iter().map(|(_, p)| p).sum();
                let u = moves.iter().map(|(t, p)| p * (1.0 - z(t))).sum::<f64>() + (1.0 - total);
                offspring.pgf_at_complement(u)
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                let u: f64 = rates.iter().map(|(t, k)| k * (1.0 - z(t))).sum();
                1.0 / (1.0 + lambda * u)
            }
        }
    }

    /// Probability that exactly one child is placed in the set described by `inside`.
    pub fn prob_exactly_one_in(&self, inside: impl Fn(&T) -> bool) -> f64 {
        match self {
            ReproductionLaw::Explicit(outs) => outs
                .iter()
                .filter(|o| {
                    o.config.children.iter().filter(|(t, _)| inside(t)).map(|(_, c)| *c).sum::<Count>() == 1
                })
                .map(|o| o.prob)
                .sum(),
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                let p: f64 = moves.iter().filter(|(t, _)| inside(t)).map(|(_, p)| p).sum();
                offspring.prob_exactly_one(p)
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                let k: f64 = rates.iter().map(|(_, k)| k).sum();
                if k <= 0.0 {
                    return 0.0;
                }
                let p: f64 = rates.iter().filter(|(t, _)| inside(t)).map(|(_, r)| r).sum::<f64>() / k;
                OffspringLaw::Geometric { mean: lambda * k }.prob_exactly_one(p)
            }
        }
    }

    /// Describes the first normalization problem, if any.
    pub fn normalization_issue(&self) -> Option<String> {
        match self {
            ReproductionLaw::Explicit(outs) => {
                if outs.iter().any(|o| !o.prob.is_finite() || o.prob < 0.0 || o.prob > 1.0) {
                    return Some("outcome probabilities must lie in [0,1]".into());
                }
                let s: f64 = outs.iter().map(|o| o.prob).sum();
                ((s - 1.0).abs() > NORMALIZATION_TOL).then(|| format!("outcome probabilities sum to {s}"))
            }
            ReproductionLaw::IndependentDiffusion { offspring, moves } => {
                if let Some(issue) = offspring.issue() {
                    return Some(issue);
                }
                if !offspring.can_reproduce() {
                    return None;
                }
                if moves.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
                    return Some("diffusion probabilities must be nonnegative".into());
                }
                let s: f64 = moves.iter().map(|(_, p)| p).sum();
                ((s - 1.0).abs() > NORMALIZATION_TOL).then(|| format!("diffusion row sums to {s}"))
            }
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                if !lambda.is_finite() || *lambda < 0.0 {
                    return Some(format!("lambda {lambda} must be finite and nonnegative"));
                }
                rates
                    .iter()
                    .any(|(_, k)| !k.is_finite() || *k < 0.0)
                    .then(|| "rates must be finite and nonnegative".to_string())
            }
        }
    }

    /// Converts continuous-time rates to the discrete-time counterpart law.
    pub fn to_discrete_counterpart(&self) -> Self
    where
        T: Clone,
    {
        match self {
            ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
                let k: f64 = rates.iter().map(|(_, r)| r).sum();
                if k <= 0.0 || *lambda <= 0.0 {
                    return ReproductionLaw::null();
                }
                ReproductionLaw::IndependentDiffusion {
                    offspring: OffspringLaw::Geometric { mean: lambda * k },
                    moves: rates.iter().map(|(t, r)| (t.clone(), r / k)).collect(),
                }
            }
            other => other.clone(),
        }
    }
}
