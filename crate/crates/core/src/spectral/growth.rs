use super::moments::{n_step_moments, MomentSeries};
use super::perron::{class_perron, out_distances, window_lower_bound, DEFAULT_PERRON_TOL};
use crate::error::{Error, Result};
use crate::model::{analyze_kernel, MomentKernel, VertexId};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthQuantity {
    /// `M_s(x,x) = limsup (m^(n)_{xx})^(1/n)`.
    ReturnRate,
    /// `M_w(x) = liminf (T^n_x)^(1/n)`.
    TotalRate,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthEstimate {
    pub quantity: GrowthQuantity,
    pub vertex: String,
    /// Certified lower bound: the larger of `moment_lower` and `window_lower`.
    pub lower: f64,
    /// `max_n (m^(n)_{xx})^(1/n)` over the horizon.
    pub moment_lower: f64,
    /// Largest class Perron root over finite windows around the vertex.
    pub window_lower: f64,
    /// Heuristic point estimate, never below `lower`.
    pub estimate: f64,
    /// Exact value when everything reachable from the vertex lies inside the ball.
    pub exact: Option<f64>,
    pub horizon: usize,
    pub period: Option<u32>,
}

impl GrowthEstimate {
    /// Exact value when known, else the point estimate.
    pub fn best(&self) -> f64 {
        self.exact.unwrap_or(self.estimate)
    }
}

/// `M_s(x,x)` and `M_w(x)` from exact moments up to `horizon`.
pub fn estimate_growth_rates(kernel: &MomentKernel, x: VertexId, horizon: usize) -> Result<(GrowthEstimate, GrowthEstimate)> {
    let series = n_step_moments(kernel, x, horizon, None)?;
    let period = series.period();
    if let Some(d) = period {
        if horizon < 2 * d as usize {
            return Err(Error::Precondition(format!("horizon {horizon} is shorter than twice the period {d}")));
        }
    }
    let moment_lower = return_lower_bound(&series);
    let window_lower = window_lower_bound(kernel, x, horizon / 2);
    let lower = moment_lower.max(window_lower);
    let exact = exact_rates(kernel, x);
    let ratio = ratio_estimate(&series, period);
    let label = kernel.label(x).to_string();
    let ms = GrowthEstimate {
        quantity: GrowthQuantity::ReturnRate,
        vertex: label.clone(),
        lower,
        moment_lower,
        window_lower,
        estimate: ratio.unwrap_or(lower).max(lower),
        exact: exact.map(|e| e.0),
        horizon,
        period,
    };
    let mw = GrowthEstimate {
        quantity: GrowthQuantity::TotalRate,
        vertex: label,
        lower,
        moment_lower,
        window_lower,
        estimate: total_tail_min(&series).max(lower),
        exact: exact.map(|e| e.1),
        horizon,
        period,
    };
    Ok((ms, mw))
}

/// Supermultiplicativity makes every `(m^(n)_{xx})^(1/n)` a lower bound of the limit.
pub fn return_lower_bound(series: &MomentSeries) -> f64 {
    series.returns.iter().enumerate().skip(1).filter(|(_, m)| !m.is_zero()).map(|(n, m)| m.root(n)).fold(0.0, f64::max)
}

fn ratio_estimate(series: &MomentSeries, period: Option<u32>) -> Option<f64> {
    let d = period? as usize;
    let n = (series.horizon() / d) * d;
    if n < 2 * d {
        return None;
    }
    let (a, b) = (series.returns[n], series.returns[n - d]);
    if a.is_zero() || b.is_zero() {
        return None;
    }
    Some(((a.ln() - b.ln()) / d as f64).exp())
}

/// `min_{N/2 <= n <= N} (T^n_x)^(1/n)`, a liminf proxy.
pub fn total_tail_min(series: &MomentSeries) -> f64 {
    let n = series.horizon();
    (n.div_ceil(2).max(1)..=n).map(|k| series.totals[k].root(k)).fold(f64::INFINITY, f64::min)
}

/// Exact `(M_s(x,x), M_w(x))` from class Perron roots when the forward closure of `x` is inside.
pub fn exact_rates(kernel: &MomentKernel, x: VertexId) -> Option<(f64, f64)> {
    let dist = out_distances(kernel, x);
    if (kernel.inside_len()..kernel.len()).any(|v| dist[v] != usize::MAX) {
        return None;
    }
    let closure: Vec<VertexId> = (0..kernel.inside_len()).filter(|v| dist[*v] != usize::MAX).collect();
    let sub = kernel.restrict(&closure);
    let local = closure.iter().position(|v| *v == x).expect("x reaches itself");
    let report = analyze_kernel(&sub);
    let mut ms = 0.0;
    let mut mw = 0.0f64;
    for (c, class) in report.classes.iter().enumerate() {
        if !class.has_cycle() {
            continue;
        }
        let (root, _) = class_perron(&sub, &class.members, class.members[0], DEFAULT_PERRON_TOL, usize::MAX / 4);
        mw = mw.max(root.value);
        if report.class_of[local] == c {
            ms = root.value;
        }
    }
    Some((ms, mw))
}
