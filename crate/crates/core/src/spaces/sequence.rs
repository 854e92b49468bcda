use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Finite-horizon evidence for `sum k_i a_i < inf`, equivalently `prod (1 - a_i)^{k_i} > 0`.
#[derive(Clone, Debug, Serialize)]
pub struct SequenceCheck {
    pub verdict: SeriesVerdict,
    pub horizon: usize,
    pub partial_sum: f64,
    /// `ln prod_{i <= horizon} (1 - a_i)^{k_i}`.
    pub log_product: f64,
    /// Largest ratio of consecutive terms over the last quarter of the horizon.
    pub tail_ratio: f64,
    /// Geometric bound on the remainder when the tail ratio is below one.
    pub tail_bound: Option<f64>,
}

/// Largest tail ratio accepted as geometric decay.
const GEOMETRIC_RATIO: f64 = 0.9;

/// Evaluates the series and the product over `1..=horizon` and classifies the tail.
///
/// Over the last quarter of the horizon: geometric decay (ratio at most 0.9) or a Raabe statistic
/// `i (t_i / t_{i+1} - 1)` above 1.2 gives convergence; a Raabe statistic below 1, or `i * t_i`
/// bounded below, gives divergence. Anything else is inconclusive.
pub fn sequence_condition_check(
    alpha: &dyn Fn(usize) -> f64,
    k: &dyn Fn(usize) -> f64,
    horizon: usize,
) -> Result<SequenceCheck> {
    if horizon < 8 {
        return Err(Error::Invalid("horizon must be at least 8".into()));
    }
    let mut terms = Vec::with_capacity(horizon);
    let mut log_product = 0.0;
    for i in 1..=horizon {
        let a = alpha(i);
        if !(0.0..1.0).contains(&a) {
            return Err(Error::Domain(format!("alpha_{i} = {a} must lie in [0,1)")));
        }
        let ki = k(i);
        if ki < 0.0 || !ki.is_finite() {
            return Err(Error::Domain(format!("k_{i} = {ki} must be finite and nonnegative")));
        }
        terms.push(ki * a);
        log_product += ki * (-a).ln_1p();
    }
    let partial_sum: f64 = terms.iter().sum();
    let start = 3 * horizon / 4;
    let tail = &terms[start..];
    let tail_ratio = tail
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let last = *terms.last().expect("nonempty");
    let n = horizon as f64;
    if tail_ratio <= GEOMETRIC_RATIO {
        let bound = last * tail_ratio / (1.0 - tail_ratio);
        return Ok(SequenceCheck { verdict: SeriesVerdict::Converges, horizon, partial_sum, log_product, tail_ratio, tail_bound: Some(bound) });
    }
    let positive = tail.iter().all(|t| *t > 0.0);
    let (raabe_min, raabe_max) = if positive {
        tail.windows(2)
            .enumerate()
            .map(|(j, w)| (start + j + 1) as f64 * (w[0] / w[1] - 1.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    } else {
        (f64::NAN, f64::NAN)
    };
    let floor = tail.iter().enumerate().map(|(j, t)| (start + j + 1) as f64 * t).fold(f64::INFINITY, f64::min);
    let (verdict, tail_bound) = if raabe_min > 1.2 {
        // t_i <= t_H (H / i)^R past the horizon, so the remainder is at most t_H H / (R - 1).
        (SeriesVerdict::Converges, Some(last * n / (raabe_min - 1.0)))
    } else if raabe_max < 1.0 || floor >= 0.1 {
        (SeriesVerdict::Diverges, None)
    } else {
        (SeriesVerdict::Inconclusive, None)
    };
    Ok(SequenceCheck { verdict, horizon, partial_sum, log_product, tail_ratio, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_tail_converges() {
        let c = sequence_condition_check(&|i| 4f64.powi(-(i as i32)), &|i| 2f64.powi(i as i32), 40).unwrap();
        assert_eq!(c.verdict, SeriesVerdict::Converges);
        assert!((c.partial_sum - 1.0).abs() < 1e-9);
        assert!(c.log_product.exp() > 0.0);
    }

    #[test]
    fn harmonic_diverges() {
        let c = sequence_condition_check(&|i| 1.0 / (i as f64 + 1.0), &|_| 1.0, 200).unwrap();
        assert_eq!(c.verdict, SeriesVerdict::Diverges);
    }

    #[test]
    fn alpha_one_is_a_domain_error() {
        assert!(sequence_condition_check(&|_| 1.0, &|_| 1.0, 10).is_err());
    }
}
