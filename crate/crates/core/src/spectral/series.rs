use crate::error::{Error, Result};
use crate::model::{MomentKernel, VertexId};
use serde::Serialize;

/// Partial sums of `Phi(x,y|lambda) = sum_n phi^(n)_{xy} lambda^n` and
/// `Gamma(x,y|lambda) = sum_n m^(n)_{xy} lambda^n`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiGamma {
    pub source: VertexId,
    pub target: VertexId,
    pub lambda: f64,
    /// `phi[n]` is the partial sum up to `n`; `phi[0] = 0`.
    pub phi: Vec<f64>,
    /// `gamma[n]` is the partial sum up to `n`; `gamma[0] = [x = y]`.
    pub gamma: Vec<f64>,
    /// First `n` with `phi[n] > 1`.
    pub phi_exceeds_one_at: Option<usize>,
    /// `|Gamma_N - 1/(1 - Phi_N)|` for `x = y` and `Phi_N < 1`.
    pub identity_residual: Option<f64>,
}

impl PhiGamma {
    pub fn phi_total(&self) -> f64 {
        *self.phi.last().expect("series has n = 0")
    }

    pub fn gamma_total(&self) -> f64 {
        *self.gamma.last().expect("series has n = 0")
    }
}

/// Taboo series by forward propagation: mass that hits `y` is recorded and removed.
pub fn phi_gamma_series(kernel: &MomentKernel, x: VertexId, y: VertexId, lambda: f64, horizon: usize) -> Result<PhiGamma> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda}")));
    }
    if x >= kernel.inside_len() || y >= kernel.len() {
        return Err(Error::Invalid("source must have a row and target must be in the kernel".into()));
    }
    kernel.require_horizon(x, horizon)?;
    let n = kernel.len();
    let mut taboo = vec![0.0; n];
    let mut free = vec![0.0; n];
    let mut next = vec![0.0; n];
    taboo[x] = 1.0;
    free[x] = 1.0;
    let mut phi = vec![0.0];
    let mut gamma = vec![if x == y { 1.0 } else { 0.0 }];
    let mut phi_exceeds_one_at = None;
    for step in 1..=horizon {
        kernel.push_forward(&taboo, &mut next);
        next.iter_mut().for_each(|v| *v *= lambda);
        let hit = next[y];
        next[y] = 0.0;
        std::mem::swap(&mut taboo, &mut next);
        let p = phi[step - 1] + hit;
        phi.push(p);
        if p > 1.0 && phi_exceeds_one_at.is_none() {
            phi_exceeds_one_at = Some(step);
        }
        kernel.push_forward(&free, &mut next);
        next.iter_mut().for_each(|v| *v *= lambda);
        std::mem::swap(&mut free, &mut next);
        gamma.push(gamma[step - 1] + free[y]);
    }
    let (p, g) = (phi[horizon], gamma[horizon]);
    let identity_residual = (x == y && p < 1.0).then(|| (g - 1.0 / (1.0 - p)).abs());
    Ok(PhiGamma { source: x, target: y, lambda, phi, gamma, phi_exceeds_one_at, identity_residual })
}
