//! Generating functions, extinction-probability brackets and survival certificates.

mod certificates;
mod extinction;

pub use certificates::{
    global_survival_check, maximum_principle_check, mv_certificate_check, Certificate, MaxPrincipleOutcome,
    MvOutcome,
};
pub use extinction::{
    global_extinction_bracket, local_extinction_vector, never_hit_bracket, Bracket, ExtinctionVector, IterationSettings,
    LocalExtinction,
};

use crate::error::{Error, Result};
use crate::model::{Ball, VertexId};
use serde::{Deserialize, Serialize};

/// Value assigned to frontier coordinates of a truncated ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Particles leaving the ball are treated as never dying and as hitting every target.
    PinZero,
    /// Particles leaving the ball are killed.
    PinOne,
}

impl Boundary {
    pub fn value(self) -> f64 {
        match self {
            Boundary::PinZero => 0.0,
            Boundary::PinOne => 1.0,
        }
    }
}

pub(crate) fn check_unit(z: &[f64], what: &str) -> Result<()> {
    match z.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::Domain(format!("{what}[{i}] = {} lies outside [0,1]", z[i]))),
        None => Ok(()),
    }
}

/// Extends a vector over inside vertices to the whole ball using `boundary` on the frontier.
pub fn extend(ball: &Ball, inside: &[f64], boundary: Boundary) -> Vec<f64> {
    let mut z = Vec::with_capacity(ball.len());
    z.extend_from_slice(&inside[..ball.inside_len()]);
    z.resize(ball.len(), boundary.value());
    z
}

/// `G(z|x)` with frontier coordinates pinned by `boundary`; `z` covers inside vertices or the whole ball.
pub fn eval_g(ball: &Ball, z: &[f64], x: VertexId, boundary: Boundary) -> Result<f64> {
    if z.len() != ball.inside_len() && z.len() != ball.len() {
        return Err(Error::Invalid(format!("vector has length {}, ball has {} vertices", z.len(), ball.len())));
    }
    if !ball.is_inside(x) {
        return Err(Error::Invalid(format!("vertex {x} carries no law in this ball")));
    }
    check_unit(z, "z")?;
    if z.len() == ball.len() {
        Ok(ball.eval_g(x, z))
    } else {
        Ok(ball.eval_g(x, &extend(ball, z, boundary)))
    }
}

/// Generating function of the process conditioned on survival and with dying lines removed:
/// `(G(qbar + z (1 - qbar) | x) - qbar(x)) / (1 - qbar(x))`.
pub fn nodeath_generating_function(ball: &Ball, qbar: &[f64], z: &[f64], x: VertexId) -> Result<f64> {
    if qbar.len() != ball.len() || z.len() != ball.len() {
        return Err(Error::Invalid("qbar and z must cover every ball vertex".into()));
    }
    check_unit(z, "z")?;
    check_unit(qbar, "qbar")?;
    if qbar[x] >= 1.0 {
        return Err(Error::Domain(format!("extinction is certain at {}", ball.label(x))));
    }
    let v: Vec<f64> = qbar.iter().zip(z).map(|(q, s)| q + s * (1.0 - q)).collect();
    Ok((ball.eval_g(x, &v) - qbar[x]) / (1.0 - qbar[x]))
}
