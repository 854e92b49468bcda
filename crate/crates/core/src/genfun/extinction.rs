use super::Boundary;
use crate::error::{Error, Result};
use crate::model::{Ball, BrwModel, VertexId};
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterationSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationSettings {
    fn default() -> Self {
        IterationSettings { tol: 1e-10, max_iter: 1_000_000 }
    }
}

/// One monotone iteration under a fixed boundary policy.
#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub policy: Boundary,
    /// Values at inside vertices.
    pub values: Vec<f64>,
    /// `max |G(z) - z|` at the returned iterate over updated vertices.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest step against the monotone direction before clamping; stays at rounding level.
    pub monotone_violation: f64,
}

/// Lower and upper brackets of an extinction-type vector on a ball.
#[derive(Clone, Debug, Serialize)]
pub struct ExtinctionVector {
    /// Target set; empty for global extinction.
    pub target: Vec<VertexId>,
    pub radius: Option<u32>,
    pub labels: Vec<String>,
    pub lower: Bracket,
    pub upper: Bracket,
}

impl ExtinctionVector {
    pub fn width(&self) -> f64 {
        self.lower.values.iter().zip(&self.upper.values).map(|(l, u)| u - l).fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.lower.converged && self.upper.converged
    }

    /// Records in the exported layout `{A, radius, policy, values, residual, iterations}`.
    pub fn to_json(&self) -> serde_json::Value {
        let rec = |b: &Bracket| {
            serde_json::json!({
                "A": self.target.iter().map(|v| &self.labels[*v]).collect::<Vec<_>>(),
                "radius": self.radius,
                "policy": b.policy,
                "values": b.values,
                "residual": b.residual,
                "iterations": b.iterations,
                "converged": b.converged,
            })
        };
        serde_json::json!([rec(&self.lower), rec(&self.upper)])
    }

    /// CSV with columns `vertex,label,lower,upper`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertex,label,lower,upper")?;
        for (v, label) in self.labels.iter().enumerate() {
            writeln!(w, "{v},\"{label}\",{},{}", self.lower.values[v], self.upper.values[v])?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Up,
    Down,
}

/// In-place sweeps `z(x) <- G(z|x)` over `active` vertices; frontier and inactive entries stay fixed.
fn iterate(ball: &Ball, z: &mut [f64], active: &[bool], dir: Direction, s: IterationSettings, policy: Boundary) -> Bracket {
    let n = ball.inside_len();
    let mut violation: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < s.max_iter {
        iterations += 1;
        let mut change: f64 = 0.0;
        for x in 0..n {
            if !active[x] {
                continue;
            }
            // G maps [0,1] into itself; anything outside is rounding.
            let g = ball.eval_g(x, z).clamp(0.0, 1.0);
            let next = match dir {
                Direction::Up => {
                    violation = violation.max(z[x] - g);
                    g.max(z[x])
                }
                Direction::Down => {
                    violation = violation.max(g - z[x]);
                    g.min(z[x])
                }
            };
            change = change.max((next - z[x]).abs());
            z[x] = next;
        }
        if change <= s.tol {
            converged = true;
            break;
        }
    }
    let residual = (0..n).filter(|x| active[*x]).map(|x| (ball.eval_g(x, z) - z[x]).abs()).fold(0.0, f64::max);
    Bracket { policy, values: z[..n].to_vec(), residual, iterations, converged, monotone_violation: violation.max(0.0) }
}

fn global_on_ball(ball: &Ball, s: IterationSettings) -> ExtinctionVector {
    let active = vec![true; ball.inside_len()];
    let run = |policy: Boundary| {
        let mut z = vec![0.0; ball.inside_len()];
        z.resize(ball.len(), policy.value());
        iterate(ball, &mut z, &active, Direction::Up, s, policy)
    };
    ExtinctionVector {
        target: Vec::new(),
        radius: ball.radius(),
        labels: (0..ball.inside_len()).map(|v| ball.label(v)).collect(),
        lower: run(Boundary::PinZero),
        upper: run(Boundary::PinOne),
    }
}

/// Brackets the global extinction probabilities on `B(root, radius)` by ascending iteration from 0.
///
/// Pinning the frontier to 0 gives the lower bracket, pinning it to 1 the upper one. Finite spaces
/// covered by the radius have no frontier and both brackets coincide.
pub fn global_extinction_bracket(model: &BrwModel, radius: u32, s: IterationSettings) -> Result<ExtinctionVector> {
    let ball = model.region(radius)?;
    Ok(global_on_ball(&ball, s))
}

fn target_mask(ball: &Ball, target: &[VertexId]) -> Result<Vec<bool>> {
    if target.is_empty() {
        return Err(Error::Invalid("target set must be nonempty".into()));
    }
    let mut mask = vec![false; ball.inside_len()];
    for &a in target {
        if !ball.is_inside(a) {
            return Err(Error::Invalid(format!("target vertex {a} is outside the ball")));
        }
        mask[a] = true;
    }
    Ok(mask)
}

/// Never-hit vector descending from 1 with the target pinned to 0; values on the target are
/// `G(z|a)`, the probability that no descendant ever visits the target.
fn never_hit_on_ball(ball: &Ball, mask: &[bool], policy: Boundary, s: IterationSettings) -> (Vec<f64>, Bracket) {
    let n = ball.inside_len();
    let mut z: Vec<f64> = (0..n).map(|x| if mask[x] { 0.0 } else { 1.0 }).collect();
    z.resize(ball.len(), policy.value());
    let active: Vec<bool> = mask.iter().map(|m| !m).collect();
    let mut bracket = iterate(ball, &mut z, &active, Direction::Down, s, policy);
    for x in 0..n {
        if mask[x] {
            bracket.values[x] = ball.eval_g(x, &z);
        }
    }
    (z, bracket)
}

/// Brackets the probabilities that no descendant ever visits `target`.
///
/// Frontier pinned to 1 (escapes never return) gives the upper bracket, pinned to 0 the lower one.
pub fn never_hit_bracket(model: &BrwModel, target: &[VertexId], radius: u32, s: IterationSettings) -> Result<ExtinctionVector> {
    let ball = model.region(radius)?;
    let mask = target_mask(&ball, target)?;
    Ok(ExtinctionVector {
        target: target.to_vec(),
        radius: ball.radius(),
        labels: (0..ball.inside_len()).map(|v| ball.label(v)).collect(),
        lower: never_hit_on_ball(&ball, &mask, Boundary::PinZero, s).1,
        upper: never_hit_on_ball(&ball, &mask, Boundary::PinOne, s).1,
    })
}

/// Local extinction brackets together with the diagnostics the iteration produces.
#[derive(Clone, Debug, Serialize)]
pub struct LocalExtinction {
    pub local: ExtinctionVector,
    pub global: ExtinctionVector,
    /// Same recursion started from the never-return probabilities on the target instead of 0.
    pub alternative_start: ExtinctionVector,
    /// Largest violation of `qbar <= q(., A)` across matching policies.
    pub ordering_violation: f64,
}

/// Probabilities `q(x, A)` that the target is visited finitely often.
///
/// Ascending iteration started at 0 on the target and at the never-hit values elsewhere.
pub fn local_extinction_vector(model: &BrwModel, target: &[VertexId], radius: u32, s: IterationSettings) -> Result<LocalExtinction> {
    let ball = model.region(radius)?;
    let mask = target_mask(&ball, target)?;
    let n = ball.inside_len();
    let all = vec![true; n];
    let run = |policy: Boundary, alternative: bool| {
        let (mut z, hit) = never_hit_on_ball(&ball, &mask, policy, s);
        if alternative {
            z[..n].copy_from_slice(&hit.values);
        }
        iterate(&ball, &mut z, &all, Direction::Up, s, policy)
    };
    let labels: Vec<String> = (0..n).map(|v| ball.label(v)).collect();
    let local = ExtinctionVector {
        target: target.to_vec(),
        radius: ball.radius(),
        labels: labels.clone(),
        lower: run(Boundary::PinZero, false),
        upper: run(Boundary::PinOne, false),
    };
    let alternative_start = ExtinctionVector {
        target: target.to_vec(),
        radius: ball.radius(),
        labels,
        lower: run(Boundary::PinZero, true),
        upper: run(Boundary::PinOne, true),
    };
    let global = global_on_ball(&ball, s);
    let ordering_violation = (0..n)
        .map(|x| {
            (global.lower.values[x] - local.lower.values[x]).max(global.upper.values[x] - local.upper.values[x])
        })
        .fold(0.0, f64::max);
    Ok(LocalExtinction { local, global, alternative_start, ordering_violation })
}
