use super::perron::{class_perron, DEFAULT_PERRON_TOL};
use crate::error::{Error, Result};
use crate::model::{MomentKernel, VertexId};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceSequence {
    /// `R` per window; infinite when the class of `x0` carries no cycle.
    pub values: Vec<f64>,
    pub perron: Vec<f64>,
    pub window_sizes: Vec<usize>,
    pub nested: bool,
    /// Largest increase between consecutive values, zero for a nonincreasing sequence.
    pub max_increase: f64,
}

impl ConvergenceSequence {
    pub fn nonincreasing(&self, tol: f64) -> bool {
        self.max_increase <= tol
    }
}

/// Reciprocal Perron roots of the class of `x0` in each finite window.
pub fn convergence_parameter_sequence(kernel: &MomentKernel, x0: VertexId, windows: &[Vec<VertexId>]) -> Result<ConvergenceSequence> {
    let mut values = Vec::with_capacity(windows.len());
    let mut perron = Vec::with_capacity(windows.len());
    let mut window_sizes = Vec::with_capacity(windows.len());
    let mut nested = true;
    let mut previous: Option<std::collections::HashSet<VertexId>> = None;
    for w in windows {
        if !w.contains(&x0) {
            return Err(Error::Precondition(format!("window of size {} misses {}", w.len(), kernel.label(x0))));
        }
        if let Some(v) = w.iter().find(|v| **v >= kernel.inside_len()) {
            return Err(Error::Invalid(format!("window vertex {} has no kernel row", kernel.label(*v))));
        }
        let set: std::collections::HashSet<VertexId> = w.iter().copied().collect();
        if let Some(prev) = &previous {
            nested &= prev.is_subset(&set);
        }
        let (root, _) = class_perron(kernel, w, x0, DEFAULT_PERRON_TOL, usize::MAX / 4);
        perron.push(root.value);
        values.push(if root.value > 0.0 { 1.0 / root.value } else { f64::INFINITY });
        window_sizes.push(w.len());
        previous = Some(set);
    }
    let max_increase = values.windows(2).map(|p| p[1] - p[0]).filter(|d| d.is_finite()).fold(0.0, f64::max);
    Ok(ConvergenceSequence { values, perron, window_sizes, nested, max_increase })
}
