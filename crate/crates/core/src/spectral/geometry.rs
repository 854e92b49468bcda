use super::moments::n_step_moments;
use crate::error::{Error, Result};
use crate::model::{build_moment_kernel, BrwModel, MomentKernel, Site, VertexId};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UniformGrowthParams {
    pub k_w: f64,
    pub epsilon: f64,
    pub nbar: usize,
    /// Maximum number of vertices examined, spread evenly over the ball.
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformGrowth {
    pub passed: bool,
    pub threshold: f64,
    pub checked: usize,
    pub worst_vertex: String,
    /// `sup_{n <= nbar} (T^n_x)^(1/n)` at the worst vertex.
    pub worst_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reversibility {
    /// Largest relative detailed-balance defect `|k(x)m_xy - k(y)m_yx| / (k(x)m_xy + k(y)m_yx)`.
    pub residual: f64,
    pub reversible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub root: String,
    pub radius: u32,
    /// `|B(root, r)|` for `r = 0..=radius`.
    pub ball_sizes: Vec<usize>,
    /// Secant slope of `ln |B(r)|` between `radius/2` and `radius`.
    pub growth_exponent: f64,
    /// Boundary weight over volume of each ball, `r = 0..=radius`.
    pub isoperimetric_profile: Option<Vec<f64>>,
    /// Minimum of the profile: an upper bound on the isoperimetric constant.
    pub isoperimetric_upper: Option<f64>,
    pub reversibility: Option<Reversibility>,
    pub uniform_growth: Option<UniformGrowth>,
    pub notices: Vec<String>,
}

fn non_oriented(k: &MomentKernel) -> bool {
    let n = k.inside_len();
    (0..n).all(|x| k.row(x).iter().all(|(y, m)| *y >= n || *m == 0.0 || k.get(*y, x) > 0.0))
}

/// Ball growth, isoperimetric upper bounds, reversibility and uniform total-moment growth around `x0`.
pub fn geometry_diagnostics(model: &BrwModel, x0: &Site, radius: u32, uniform: Option<UniformGrowthParams>) -> Result<GeometryReport> {
    if radius == 0 {
        return Err(Error::Invalid("radius must be positive".into()));
    }
    let rooted = model.with_root(x0.clone());
    let ball = rooted.ball(radius)?;
    let kernel = build_moment_kernel(&ball)?;
    let n = ball.inside_len();
    let mut ball_sizes = vec![0usize; radius as usize + 1];
    for v in 0..n {
        ball_sizes[ball.dist(v) as usize] += 1;
    }
    for r in 1..ball_sizes.len() {
        ball_sizes[r] += ball_sizes[r - 1];
    }
    let half = (radius / 2) as usize;
    let full = radius as usize;
    let growth_exponent = ((ball_sizes[full] as f64).ln() - (ball_sizes[half] as f64).ln()) / (full - half) as f64;
    let mut notices = Vec::new();
    let (isoperimetric_profile, isoperimetric_upper, reversibility) = if non_oriented(&kernel) {
        let mut boundary = vec![0.0; full + 1];
        for x in 0..n {
            let dx = ball.dist(x) as usize;
            for (y, m) in kernel.row(x) {
                let dy = ball.dist(*y) as usize;
                // The edge leaves B(r) for every r in dx..dy.
                for b in boundary.iter_mut().take(dy.min(full + 1)).skip(dx) {
                    *b += m;
                }
            }
        }
        let profile: Vec<f64> = boundary.iter().zip(&ball_sizes).map(|(b, s)| b / *s as f64).collect();
        let upper = profile.iter().cloned().fold(f64::INFINITY, f64::min);
        (Some(profile), Some(upper), Some(reversibility(&kernel)))
    } else {
        notices.push("kernel is oriented; isoperimetric and reversibility diagnostics skipped".into());
        (None, None, None)
    };
    let uniform_growth = match uniform {
        Some(p) => Some(uniform_growth(&ball, &kernel, p)?),
        None => None,
    };
    Ok(GeometryReport {
        root: ball.label(0),
        radius,
        ball_sizes,
        growth_exponent,
        isoperimetric_profile,
        isoperimetric_upper,
        reversibility,
        uniform_growth,
        notices,
    })
}

/// Propagates `k(y) = k(x) m_xy / m_yx` along a BFS tree and measures detailed balance elsewhere.
fn reversibility(kernel: &MomentKernel) -> Reversibility {
    let n = kernel.inside_len();
    let mut kappa = vec![f64::NAN; n];
    kappa[0] = 1.0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for (y, m) in kernel.row(x) {
            if *y < n && kappa[*y].is_nan() {
                kappa[*y] = kappa[x] * m / kernel.get(*y, x);
                queue.push_back(*y);
            }
        }
    }
    let mut residual = 0.0f64;
    for x in (0..n).filter(|x| !kappa[*x].is_nan()) {
        for (y, m) in kernel.row(x) {
            if *y >= n || kappa[*y].is_nan() {
                continue;
            }
            let a = kappa[x] * m;
            let b = kappa[*y] * kernel.get(*y, x);
            residual = residual.max((a - b).abs() / (a + b));
        }
    }
    Reversibility { residual, reversible: residual <= 1e-12 }
}

fn uniform_growth(ball: &crate::model::Ball, kernel: &MomentKernel, p: UniformGrowthParams) -> Result<UniformGrowth> {
    if p.nbar == 0 || p.samples == 0 {
        return Err(Error::Invalid("nbar and samples must be positive".into()));
    }
    let eligible: Vec<VertexId> = (0..ball.inside_len()).filter(|v| kernel.require_horizon(*v, p.nbar).is_ok()).collect();
    if eligible.is_empty() {
        return Err(Error::HorizonExceedsBall { needed: p.nbar as u32, radius: ball.radius().unwrap_or(0) });
    }
    let stride = eligible.len().div_ceil(p.samples).max(1);
    let threshold = p.k_w - p.epsilon;
    let mut worst = (f64::INFINITY, 0usize);
    let mut checked = 0;
    for &x in eligible.iter().step_by(stride) {
        let series = n_step_moments(kernel, x, p.nbar, None)?;
        let best = (1..=p.nbar).map(|k| series.totals[k].root(k)).fold(0.0, f64::max);
        checked += 1;
        if best < worst.0 {
            worst = (best, x);
        }
    }
    Ok(UniformGrowth { passed: worst.0 >= threshold, threshold, checked, worst_vertex: ball.label(worst.1), worst_value: worst.0 })
}
