use super::check_unit;
use crate::error::{Error, Result};
use crate::model::{Ball, VertexId};
use serde::Serialize;

/// Self-verifying evidence attached to survival verdicts.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `z < 1` on the region and `G(z) <= z` on every inside vertex.
    GlobalSurvival { radius: Option<u32>, z: Vec<f64>, max_excess: f64 },
    /// Escape certificate: `G(v) >= v` off `target` and some vertex beats the target after rescaling.
    StrongLocalFailure {
        radius: Option<u32>,
        target: Vec<VertexId>,
        v: Vec<f64>,
        qbar: Vec<f64>,
        witness: VertexId,
        gap: f64,
        min_slack: f64,
    },
    /// Vertex where the rescaled vector violates the neighbourhood maximum principle.
    MaximumPrincipleWitness { radius: Option<u32>, vertex: VertexId, z: Vec<f64>, qbar: Vec<f64> },
}

impl Certificate {
    /// Re-runs the check that produced the certificate.
    pub fn verify(&self, ball: &Ball, tol: f64) -> Result<bool> {
        match self {
            Certificate::GlobalSurvival { z, .. } => Ok(global_survival_check(ball, z, tol)?.is_some()),
            Certificate::StrongLocalFailure { target, v, qbar, .. } => {
                Ok(mv_certificate_check(ball, target, v, qbar, tol)?.verified)
            }
            Certificate::MaximumPrincipleWitness { vertex, z, qbar, .. } => {
                let out = maximum_principle_check(ball, z, qbar, tol)?;
                Ok(out.witness == Some(*vertex))
            }
        }
    }
}

fn require_full(ball: &Ball, v: &[f64], what: &str) -> Result<()> {
    if v.len() != ball.len() {
        return Err(Error::Invalid(format!("{what} has length {}, ball has {} vertices", v.len(), ball.len())));
    }
    Ok(())
}

/// Returns a certificate when `z(x) < 1` and `G(z|x) <= z(x) + tol` at every inside vertex.
pub fn global_survival_check(ball: &Ball, z: &[f64], tol: f64) -> Result<Option<Certificate>> {
    require_full(ball, z, "z")?;
    check_unit(z, "z")?;
    let n = ball.inside_len();
    if z[..n].iter().any(|v| *v >= 1.0) {
        return Ok(None);
    }
    let max_excess = (0..n).map(|x| ball.eval_g(x, z) - z[x]).fold(f64::NEG_INFINITY, f64::max);
    Ok((max_excess <= tol).then(|| Certificate::GlobalSurvival { radius: ball.radius(), z: z.to_vec(), max_excess }))
}

/// `(v - q) / (1 - q)`, with `q` within `tol` of 1 treated as 1 so rounding is not amplified.
fn rescale(v: f64, q: f64, tol: f64) -> f64 {
    if q >= 1.0 - tol {
        1.0
    } else {
        (v - q) / (1.0 - q)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleOutcome {
    pub checked: usize,
    /// First interior vertex where neither alternative holds.
    pub witness: Option<VertexId>,
}

impl MaxPrincipleOutcome {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }

    pub fn certificate(&self, ball: &Ball, z: &[f64], qbar: &[f64]) -> Option<Certificate> {
        self.witness.map(|vertex| Certificate::MaximumPrincipleWitness {
            radius: ball.radius(),
            vertex,
            z: z.to_vec(),
            qbar: qbar.to_vec(),
        })
    }
}

/// For `z >= qbar` with `G(z) >= z`, checks at every interior vertex that the rescaled vector is
/// constant on the out-neighbourhood or strictly larger at some out-neighbour.
pub fn maximum_principle_check(ball: &Ball, z: &[f64], qbar: &[f64], tol: f64) -> Result<MaxPrincipleOutcome> {
    require_full(ball, z, "z")?;
    require_full(ball, qbar, "qbar")?;
    check_unit(z, "z")?;
    check_unit(qbar, "qbar")?;
    if let Some(i) = (0..ball.len()).find(|i| z[*i] < qbar[*i] - tol) {
        return Err(Error::Domain(format!("z < qbar at {}", ball.label(i))));
    }
    for x in 0..ball.inside_len() {
        if ball.eval_g(x, z) < z[x] - tol {
            return Err(Error::Precondition(format!("G(z) < z at {}", ball.label(x))));
        }
    }
    let hat: Vec<f64> = z.iter().zip(qbar).map(|(v, q)| rescale(*v, *q, tol)).collect();
    let mut checked = 0;
    for x in 0..ball.inside_len() {
        if !ball.is_interior(x) {
            continue;
        }
        let nb = ball.out_neighbors(x);
        if nb.is_empty() {
            continue;
        }
        checked += 1;
        let (lo, hi) = nb.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), y| (l.min(hat[*y]), h.max(hat[*y])));
        if hi - lo <= tol || hi > hat[x] {
            continue;
        }
        return Ok(MaxPrincipleOutcome { checked, witness: Some(x) });
    }
    Ok(MaxPrincipleOutcome { checked, witness: None })
}

#[derive(Clone, Debug, Serialize)]
pub struct MvOutcome {
    pub verified: bool,
    /// `min_{x not in A} G(v|x) - v(x)` over inside vertices.
    pub min_slack: f64,
    pub slack_vertex: Option<VertexId>,
    /// `max_{x not in A} tau v(x) - max_A tau v`; positive values witness escape.
    pub gap: f64,
    pub witness: Option<VertexId>,
    pub certificate: Option<Certificate>,
}

/// Escape certificate for the absence of strong local survival at a finite target set.
///
/// Needs `qbar <= v <= 1`, `G(v|x) >= v(x)` off the target, and a vertex off the target whose
/// rescaled value strictly exceeds the maximum over the target.
pub fn mv_certificate_check(ball: &Ball, target: &[VertexId], v: &[f64], qbar: &[f64], tol: f64) -> Result<MvOutcome> {
    require_full(ball, v, "v")?;
    require_full(ball, qbar, "qbar")?;
    check_unit(qbar, "qbar")?;
    if target.is_empty() || target.iter().any(|a| !ball.is_inside(*a)) {
        return Err(Error::Invalid("target must be a nonempty set of inside vertices".into()));
    }
    if let Some(i) = (0..ball.len()).find(|i| v[*i] < qbar[*i] - tol || v[*i] > 1.0 + tol || v[*i].is_nan()) {
        return Err(Error::Domain(format!("v = {} at {} lies outside [qbar, 1]", v[i], ball.label(i))));
    }
    let in_target = |x: VertexId| target.contains(&x);
    let tau: Vec<f64> = v.iter().zip(qbar).map(|(a, q)| if *q >= 1.0 - tol { 0.0 } else { (a - q) / (1.0 - q) }).collect();
    let target_max = target.iter().map(|a| tau[*a]).fold(f64::NEG_INFINITY, f64::max);
    let mut min_slack = f64::INFINITY;
    let mut slack_vertex = None;
    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for x in (0..ball.inside_len()).filter(|x| !in_target(*x)) {
        let slack = ball.eval_g(x, v) - v[x];
        if slack < min_slack {
            min_slack = slack;
            slack_vertex = Some(x);
        }
        if tau[x] > best {
            best = tau[x];
            witness = Some(x);
        }
    }
    let gap = best - target_max;
    let verified = min_slack >= -tol && gap > 0.0 && witness.is_some();
    let certificate = verified.then(|| Certificate::StrongLocalFailure {
        radius: ball.radius(),
        target: target.to_vec(),
        v: v.to_vec(),
        qbar: qbar.to_vec(),
        witness: witness.expect("verified"),
        gap,
        min_slack,
    });
    Ok(MvOutcome { verified, min_slack, slack_vertex, gap, witness: if gap > 0.0 { witness } else { None }, certificate })
}
