use super::{BrwModel, Count, FiniteStructure, OffspringConfig, OffspringLaw, Outcome, ReproductionLaw, Site};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

/// Finite image of a locally isomorphic projection `g : X -> Y`.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Model on `Y`, with sites `[label]`.
    pub model: BrwModel,
    /// Labels of `Y` in increasing order.
    pub types: Vec<u32>,
    /// Number of vertices of `X` compared.
    pub checked: usize,
    /// Largest `|G_X(z o g | x) - G_Y(z | g(x))|` over the random test vectors.
    pub residual: f64,
}

const RESIDUAL_DRAWS: usize = 20;
const RESIDUAL_SEED: u64 = 0x6c6f_6361_6c69_736f;

fn pushforward(law: &ReproductionLaw<u32>) -> ReproductionLaw<u32> {
    match law {
        ReproductionLaw::Explicit(outs) => {
            let mut merged: BTreeMap<Vec<(u32, Count)>, f64> = BTreeMap::new();
            for o in outs {
                let mut agg: BTreeMap<u32, Count> = BTreeMap::new();
                for (t, c) in &o.config.children {
                    *agg.entry(*t).or_default() += c;
                }
                *merged.entry(agg.into_iter().collect()).or_default() += o.prob;
            }
            ReproductionLaw::Explicit(
                merged
                    .into_iter()
                    .map(|(children, prob)| Outcome { prob, config: OffspringConfig { children } })
                    .collect(),
            )
        }
        ReproductionLaw::IndependentDiffusion { offspring, moves } => {
            let offspring = match offspring {
                OffspringLaw::Finite(p) => {
                    let mut p = p.clone();
                    while p.last() == Some(&0.0) {
                        p.pop();
                    }
                    OffspringLaw::Finite(p)
                }
                g => g.clone(),
            };
            ReproductionLaw::IndependentDiffusion { offspring, moves: aggregate(moves) }
        }
        ReproductionLaw::ContinuousCounterpart { lambda, rates } => {
            ReproductionLaw::ContinuousCounterpart { lambda: *lambda, rates: aggregate(rates) }
        }
    }
}

fn aggregate(row: &[(u32, f64)]) -> Vec<(u32, f64)> {
    let mut agg: BTreeMap<u32, f64> = BTreeMap::new();
    for (t, w) in row {
        *agg.entry(*t).or_default() += w;
    }
    agg.into_iter().collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn rows_match(a: &[(u32, f64)], b: &[(u32, f64)], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((s, x), (t, y))| s == t && close(*x, *y, tol))
}

fn mismatch(a: &ReproductionLaw<u32>, b: &ReproductionLaw<u32>, tol: f64) -> Option<String> {
    use ReproductionLaw::*;
    match (a, b) {
        (Explicit(x), Explicit(y)) => {
            let same = x.len() == y.len()
                && x.iter().zip(y).all(|(o, p)| o.config == p.config && close(o.prob, p.prob, tol));
            (!same).then(|| "pushed-forward offspring tables differ".into())
        }
        (IndependentDiffusion { offspring: f, moves: m }, IndependentDiffusion { offspring: g, moves: n }) => {
            let same_offspring = match (f, g) {
                (OffspringLaw::Finite(p), OffspringLaw::Finite(q)) => {
                    p.len() == q.len() && p.iter().zip(q).all(|(s, t)| close(*s, *t, tol))
                }
                (OffspringLaw::Geometric { mean: s }, OffspringLaw::Geometric { mean: t }) => close(*s, *t, tol),
                _ => false,
            };
            if !same_offspring {
                return Some("offspring laws differ".into());
            }
            (!rows_match(m, n, tol)).then(|| "pushed-forward diffusion rows differ".into())
        }
        (ContinuousCounterpart { lambda: l, rates: r }, ContinuousCounterpart { lambda: k, rates: s }) => {
            if !close(*l, *k, tol) {
                return Some("infection parameters differ".into());
            }
            (!rows_match(r, s, tol)).then(|| "pushed-forward rates differ".into())
        }
        _ => Some("laws are of different kinds".into()),
    }
}

/// Verifies that `g` pushes every law in the fiber of a type to the same law, and builds the image.
pub fn project_local_isomorphism(model: &BrwModel, g: &dyn Fn(&Site) -> u32, radius: u32) -> Result<Projection> {
    const TOL: f64 = 1e-12;
    let ball = model.region(radius)?;
    let types: Vec<u32> = ball.sites().iter().map(g).collect();
    let mut reps: BTreeMap<u32, (usize, ReproductionLaw<u32>)> = BTreeMap::new();
    for v in 0..ball.inside_len() {
        let law = pushforward(&ball.law(v).map_targets(|t| types[*t]));
        match reps.get(&types[v]) {
            Some((w, rep)) => {
                if let Some(detail) = mismatch(rep, &law, TOL) {
                    return Err(Error::FiberMismatch { x: ball.label(*w), x_prime: ball.label(v), detail });
                }
            }
            None => {
                reps.insert(types[v], (v, law));
            }
        }
    }
    for (_, law) in reps.values() {
        if let Some(t) = law.targets().into_iter().find(|t| !reps.contains_key(*t)) {
            return Err(Error::Precondition(format!("type {t} has no representative inside radius {radius}")));
        }
    }
    let root = Site::scalar(types[0] as i64);
    let entries = reps
        .iter()
        .map(|(t, (_, law))| (Site::scalar(*t as i64), law.map_targets(|u| Site::scalar(*u as i64))))
        .collect();
    let labels: HashMap<Site, String> =
        reps.iter().map(|(t, (v, _))| (Site::scalar(*t as i64), format!("type {t} ({})", ball.label(*v)))).collect();
    let structure = FiniteStructure::new(format!("{} / types", model.name()), root, entries)?.with_labels(labels);

    let mut rng = ChaCha8Rng::seed_from_u64(RESIDUAL_SEED);
    let mut residual: f64 = 0.0;
    let type_list: Vec<u32> = reps.keys().copied().collect();
    for _ in 0..RESIDUAL_DRAWS {
        let zy: HashMap<u32, f64> = type_list.iter().map(|t| (*t, rng.random::<f64>())).collect();
        let zx: Vec<f64> = types.iter().map(|t| zy.get(t).copied().unwrap_or(1.0)).collect();
        for v in 0..ball.inside_len() {
            let gx = ball.eval_g(v, &zx);
            let gy = reps[&types[v]].1.eval(|t| zy[t]);
            residual = residual.max((gx - gy).abs());
        }
    }
    Ok(Projection { model: BrwModel::new(structure), types: type_list, checked: ball.inside_len(), residual })
}
