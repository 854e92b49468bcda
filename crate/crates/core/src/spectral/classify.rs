use super::growth::{estimate_growth_rates, GrowthEstimate};
use super::moments::horizon_view;
use super::perron::{class_perron, DEFAULT_PERRON_TOL};
use super::series::phi_gamma_series;
use crate::error::{Error, Result};
use crate::genfun::Certificate;
use crate::model::{analyze_kernel, build_moment_kernel, project_local_isomorphism, BrwModel, Site};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Survives,
    Dies,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// `Phi_n(x,x|1) > 1` at a finite `n`.
    PhiPartialSum { n: usize, value: f64 },
    /// Perron root of a class that is known completely.
    ClassPerron { value: f64, class_size: usize },
    Growth { estimate: GrowthEstimate },
    Certificate { certificate: Certificate },
    MonteCarlo { estimate: f64, ci_low: f64, ci_high: f64, trials: usize },
    Note { text: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalClassification {
    pub vertex: String,
    pub verdict: Verdict,
    pub horizon: usize,
    pub growth: GrowthEstimate,
    pub evidence: Vec<Evidence>,
    pub caveats: Vec<String>,
}

/// Local survival at `x` from `x`: decided by a finite `Phi` partial sum above 1 or by the Perron
/// root of a class that lies entirely inside the horizon ball; undecided otherwise.
pub fn classify_local_survival(model: &BrwModel, x: &Site, horizon: usize) -> Result<LocalClassification> {
    let view = horizon_view(model, x, horizon)?;
    let v = view.vertex;
    let (ms, _) = estimate_growth_rates(&view.kernel, v, horizon)?;
    let phi = phi_gamma_series(&view.kernel, v, v, 1.0, horizon)?;
    let mut evidence = Vec::new();
    let mut verdict = Verdict::Undecided;
    if let Some(n) = phi.phi_exceeds_one_at {
        verdict = Verdict::Survives;
        evidence.push(Evidence::PhiPartialSum { n, value: phi.phi[n] });
    }
    let report = analyze_kernel(&view.kernel);
    let class = report.class_of_vertex(v);
    if let Some(exact) = ms.exact {
        evidence.push(Evidence::ClassPerron { value: exact, class_size: class.members.len() });
        if verdict == Verdict::Undecided {
            verdict = if exact > 1.0 { Verdict::Survives } else { Verdict::Dies };
        }
    }
    let mut caveats = Vec::new();
    let own = report.class_of[v];
    let others: Vec<String> = report
        .reachable_from(own)
        .into_iter()
        .filter(|c| *c != own && report.classes[*c].has_cycle())
        .map(|c| view.ball.label(report.classes[c].members[0]))
        .collect();
    if !others.is_empty() {
        caveats.push(format!(
            "reducible from {}: local survival at other classes reachable from it (e.g. {}) is not decided by returns to it",
            view.ball.label(v),
            others.iter().take(3).cloned().collect::<Vec<_>>().join(", ")
        ));
    }
    if verdict == Verdict::Undecided {
        evidence.push(Evidence::Note { text: format!("no finite certificate within horizon {horizon}; M_s lower bound {}", ms.lower) });
    }
    evidence.push(Evidence::Growth { estimate: ms.clone() });
    Ok(LocalClassification { vertex: view.ball.label(v), verdict, horizon, growth: ms, evidence, caveats })
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeClass {
    pub types: Vec<String>,
    pub perron: f64,
    pub period: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalClassification {
    pub vertex: String,
    pub verdict: Verdict,
    /// Exact `M_w(x)`: the largest Perron root over type classes reachable from the type of `x`.
    pub m_w: f64,
    pub classes: Vec<TypeClass>,
    pub types: usize,
    pub projection_residual: f64,
    /// Rate parameter when the model is given by rates.
    pub lambda: Option<f64>,
    pub k_w: Option<f64>,
    pub lambda_w: Option<f64>,
    pub notes: Vec<String>,
}

/// Exact global classification of an F-BRW through its finite type projection.
///
/// `g` defaults to the type labels the space provides. Refuses when the projection fails.
pub fn classify_global_fbrw(model: &BrwModel, g: Option<&dyn Fn(&Site) -> u32>, x: &Site, radius: u32) -> Result<GlobalClassification> {
    let default_g = |s: &Site| model.structure().type_label(s).unwrap_or(u32::MAX);
    let g: &dyn Fn(&Site) -> u32 = match g {
        Some(g) => g,
        None => {
            if model.structure().type_label(&model.root()).is_none() {
                return Err(Error::Precondition(format!("{} provides no type map", model.name())));
            }
            &default_g
        }
    };
    let projection = project_local_isomorphism(model, g, radius)?;
    let ty = g(x);
    let y = projection.model.whole()?;
    let yv = y.require(&Site::scalar(ty as i64))?;
    let kernel = build_moment_kernel(&y)?;
    let report = analyze_kernel(&kernel);
    let start = report.class_of[yv];
    let mut classes = Vec::new();
    let mut m_w = 0.0f64;
    for c in report.reachable_from(start) {
        let info = &report.classes[c];
        let (root, _) = class_perron(&kernel, &info.members, info.members[0], DEFAULT_PERRON_TOL, usize::MAX / 4);
        m_w = m_w.max(root.value);
        classes.push(TypeClass { types: info.members.iter().map(|v| y.label(*v)).collect(), perron: root.value, period: info.period });
    }
    let verdict = if m_w > 1.0 { Verdict::Survives } else { Verdict::Dies };
    let lambda = model.lambda();
    let k_w = lambda.map(|l| m_w / l);
    let lambda_w = k_w.map(|k| if k > 0.0 { 1.0 / k } else { f64::INFINITY });
    let mut notes = vec!["global survival iff M_w > 1; an F-BRW dies out globally at M_w = 1".to_string()];
    if lambda.is_some() {
        notes.push("continuous-time rates: extinction holds at lambda = lambda_w".into());
    }
    Ok(GlobalClassification {
        vertex: model.label(x),
        verdict,
        m_w,
        classes,
        types: projection.types.len(),
        projection_residual: projection.residual,
        lambda,
        k_w,
        lambda_w,
        notes,
    })
}

/// Critical rate parameters of a continuous-time model at a vertex.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalValues {
    pub lambda: f64,
    pub lambda_w: Option<f64>,
    /// `lambda_s >= lambda_w`; this is `lambda_w` when known.
    pub lambda_s_lower: Option<f64>,
    /// `lambda / (certified M_s lower bound)`.
    pub lambda_s_upper: f64,
    /// `lambda / (M_s point estimate)`.
    pub lambda_s_estimate: f64,
}

pub fn critical_values(model: &BrwModel, x: &Site, horizon: usize, global: Option<&GlobalClassification>) -> Result<CriticalValues> {
    let lambda = model.lambda().ok_or_else(|| Error::Precondition(format!("{} is not given by rates", model.name())))?;
    let view = horizon_view(model, x, horizon)?;
    let (ms, _) = estimate_growth_rates(&view.kernel, view.vertex, horizon)?;
    let lambda_w = global.and_then(|g| g.lambda_w);
    Ok(CriticalValues {
        lambda,
        lambda_w,
        lambda_s_lower: lambda_w,
        lambda_s_upper: lambda / ms.lower,
        lambda_s_estimate: lambda / ms.best(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongLocal {
    pub target: Vec<String>,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

/// Classification record for one model and starting vertex.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SurvivalReport {
    pub model: String,
    pub vertex: String,
    pub local: Option<LocalClassification>,
    pub global: Option<GlobalClassification>,
    pub strong_local: Option<StrongLocal>,
    pub critical: Option<CriticalValues>,
}

impl SurvivalReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}
