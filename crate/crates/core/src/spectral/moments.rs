use crate::error::{Error, Result};
use crate::model::{Ball, BrwModel, MomentKernel, Site, VertexId};
use serde::Serialize;
use std::f64::consts::LN_2;

/// Nonnegative number `mantissa * 2^exp2`; power-of-two rescaling keeps small integers exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scaled {
    pub mantissa: f64,
    pub exp2: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exp2: 0 };

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.exp2 as f64 * LN_2
        }
    }

    /// Plain value; saturates to infinity or zero outside the `f64` range.
    pub fn value(&self) -> f64 {
        let mut v = self.mantissa;
        let mut e = self.exp2;
        while e != 0 && v != 0.0 && v.is_finite() {
            let step = e.clamp(-1000, 1000);
            v *= 2f64.powi(step as i32);
            e -= step;
        }
        v
    }

    /// `value^(1/n)`.
    pub fn root(&self, n: usize) -> f64 {
        (self.ln() / n as f64).exp()
    }
}

const RESCALE_EXP: i64 = 512;

/// `m^(n)_{xy}` and `T^n_x` for `n = 0..=horizon`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentSeries {
    pub source: VertexId,
    pub target: VertexId,
    pub returns: Vec<Scaled>,
    pub totals: Vec<Scaled>,
}

impl MomentSeries {
    pub fn horizon(&self) -> usize {
        self.returns.len() - 1
    }

    /// Gcd of the positive-return times, if any.
    pub fn period(&self) -> Option<u32> {
        let mut d = 0usize;
        for (n, m) in self.returns.iter().enumerate().skip(1) {
            if !m.is_zero() {
                d = gcd(d, n);
            }
        }
        (d > 0).then_some(d as u32)
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact n-step moments from `x` by repeated sparse row application.
///
/// Refuses when paths of `horizon` steps could leave the rows of the kernel.
pub fn n_step_moments(kernel: &MomentKernel, x: VertexId, horizon: usize, target: Option<VertexId>) -> Result<MomentSeries> {
    if x >= kernel.inside_len() {
        return Err(Error::Invalid(format!("vertex {x} has no kernel row")));
    }
    let y = target.unwrap_or(x);
    if y >= kernel.len() {
        return Err(Error::Invalid(format!("target {y} is outside the kernel")));
    }
    kernel.require_horizon(x, horizon)?;
    let mut u = vec![0.0; kernel.len()];
    let mut next = vec![0.0; kernel.len()];
    u[x] = 1.0;
    let mut exp2 = 0i64;
    let mut returns = vec![Scaled { mantissa: if x == y { 1.0 } else { 0.0 }, exp2: 0 }];
    let mut totals = vec![Scaled { mantissa: 1.0, exp2: 0 }];
    let hi = 2f64.powi(RESCALE_EXP as i32);
    let lo = 2f64.powi(-RESCALE_EXP as i32);
    for _ in 0..horizon {
        kernel.push_forward(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
        returns.push(Scaled { mantissa: u[y], exp2 });
        totals.push(Scaled { mantissa: u.iter().sum(), exp2 });
        let max = u.iter().cloned().fold(0.0, f64::max);
        if max > hi {
            u.iter_mut().for_each(|v| *v *= lo);
            exp2 += RESCALE_EXP;
        } else if max > 0.0 && max < lo {
            u.iter_mut().for_each(|v| *v *= hi);
            exp2 -= RESCALE_EXP;
        }
    }
    Ok(MomentSeries { source: x, target: y, returns, totals })
}

/// Ball and kernel large enough for exact `steps`-step quantities started at one vertex.
#[derive(Debug)]
pub struct HorizonView {
    /// The model the ball was grown in: the exact quotient when one exists, or a re-rooted copy.
    pub model: BrwModel,
    pub ball: Ball,
    pub kernel: MomentKernel,
    pub vertex: VertexId,
    pub lumped: bool,
}

/// Builds the smallest exact view: the quotient at the root when available, else a ball around `x`.
pub fn horizon_view(model: &BrwModel, x: &Site, steps: usize) -> Result<HorizonView> {
    let radius = u32::try_from(steps.max(1)).map_err(|_| Error::Invalid("horizon too large".into()))?;
    let (view_model, lumped) = match model.lumped() {
        Some(q) if *x == model.root() => (q, true),
        _ => (model.with_root(x.clone()), false),
    };
    let ball = view_model.region(radius)?;
    let kernel = crate::model::build_moment_kernel(&ball)?;
    let vertex = ball.require(&view_model.root())?;
    Ok(HorizonView { model: view_model, ball, kernel, vertex, lumped })
}
