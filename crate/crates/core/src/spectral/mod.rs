//! Moment growth rates, taboo series, Perron roots, witnesses and survival classification.

mod classify;
mod convergence;
mod geometry;
mod growth;
mod moments;
mod perron;
mod series;
mod witness;

pub use classify::{
    classify_global_fbrw, classify_local_survival, critical_values, CriticalValues, Evidence, GlobalClassification,
    LocalClassification, StrongLocal, SurvivalReport, TypeClass, Verdict,
};
pub use convergence::{convergence_parameter_sequence, ConvergenceSequence};
pub use geometry::{geometry_diagnostics, GeometryReport, Reversibility, UniformGrowth, UniformGrowthParams};
pub use growth::{estimate_growth_rates, exact_rates, return_lower_bound, total_tail_min, GrowthEstimate, GrowthQuantity};
pub use moments::{horizon_view, n_step_moments, HorizonView, MomentSeries, Scaled};
pub use perron::{perron_root, window_lower_bound, PerronRoot, DEFAULT_PERRON_TOL};
pub use series::{phi_gamma_series, PhiGamma};
pub use witness::{collatz_wielandt_check, WitnessForm, WitnessOutcome};

use std::io::Write;

/// CSV with columns `n,value`.
pub fn write_series_csv<W: Write>(mut w: W, values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "n,value")?;
    for (n, v) in values.iter().enumerate() {
        writeln!(w, "{n},{v}")?;
    }
    Ok(())
}
