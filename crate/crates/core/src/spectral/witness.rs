use crate::error::{Error, Result};
use crate::model::{MomentKernel, VertexId};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum WitnessForm {
    /// `lambda K v >= v / (1 - v)`, a global survival witness for `v` in `[0,1)`.
    Nonlinear,
    /// `lambda^n K^n v >= v` for a bounded nonnegative `v`.
    Linear { power: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessOutcome {
    pub form: WitnessForm,
    pub lambda: f64,
    pub passed: bool,
    /// Per inside vertex; `None` where the coordinate was not checked.
    pub slack: Vec<Option<f64>>,
    pub min_slack: f64,
    pub min_slack_vertex: Option<VertexId>,
    /// Every checked coordinate with negative slack beyond `tol`.
    pub failing: Vec<VertexId>,
    /// Coordinates with `v = 1` in the nonlinear form.
    pub excluded: Vec<VertexId>,
    pub checked: usize,
    /// `min v` over the positive checked coordinates, a criticality diagnostic.
    pub min_positive_v: Option<f64>,
}

/// Verifies a supplied Collatz-Wielandt witness on the rows of `kernel`.
///
/// `v` covers every kernel column. The linear form checks only vertices whose `power`-step paths
/// stay on kernel rows.
pub fn collatz_wielandt_check(kernel: &MomentKernel, lambda: f64, v: &[f64], form: WitnessForm, tol: f64) -> Result<WitnessOutcome> {
    if v.len() != kernel.len() {
        return Err(Error::Invalid(format!("v has length {}, kernel has {} columns", v.len(), kernel.len())));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda}")));
    }
    if let Some(i) = v.iter().position(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::Domain(format!("v = {} at {}", v[i], kernel.label(i))));
    }
    let n = kernel.inside_len();
    let mut slack = vec![None; n];
    let mut excluded = Vec::new();
    match form {
        WitnessForm::Nonlinear => {
            if let Some(i) = v.iter().position(|a| *a > 1.0) {
                return Err(Error::Domain(format!("v = {} > 1 at {}", v[i], kernel.label(i))));
            }
            for x in 0..n {
                if v[x] >= 1.0 {
                    excluded.push(x);
                    continue;
                }
                slack[x] = Some(lambda * kernel.apply_at(x, v) - v[x] / (1.0 - v[x]));
            }
        }
        WitnessForm::Linear { power } => {
            if power == 0 {
                return Err(Error::Invalid("power must be at least 1".into()));
            }
            let mut w = v.to_vec();
            let mut next = vec![0.0; kernel.len()];
            for _ in 0..power {
                for x in 0..n {
                    next[x] = lambda * kernel.apply_at(x, &w);
                }
                next[n..].iter_mut().for_each(|a| *a = 0.0);
                std::mem::swap(&mut w, &mut next);
            }
            for x in 0..n {
                if kernel.require_horizon(x, power).is_ok() {
                    slack[x] = Some(w[x] - v[x]);
                }
            }
        }
    }
    let mut min_slack = f64::INFINITY;
    let mut min_slack_vertex = None;
    let mut failing = Vec::new();
    for (x, s) in slack.iter().enumerate() {
        let Some(s) = *s else { continue };
        if s < min_slack {
            min_slack = s;
            min_slack_vertex = Some(x);
        }
        if s < -tol {
            failing.push(x);
        }
    }
    let checked = slack.iter().filter(|s| s.is_some()).count();
    let min_positive_v = slack.iter().enumerate().filter(|(x, s)| s.is_some() && v[*x] > 0.0).map(|(x, _)| v[x]).reduce(f64::min);
    Ok(WitnessOutcome {
        form,
        lambda,
        passed: failing.is_empty() && checked > 0,
        slack,
        min_slack,
        min_slack_vertex,
        failing,
        excluded,
        checked,
        min_positive_v,
    })
}
