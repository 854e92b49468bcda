use crate::error::{Error, Result};
use crate::genfun::{
    extend, global_extinction_bracket, global_survival_check, mv_certificate_check, never_hit_bracket, nodeath_generating_function,
    Boundary, IterationSettings,
};
use crate::model::{build_moment_kernel, project_local_isomorphism, BrwModel, Site};
use crate::simulate::{estimate_survival, SurvivalMode, TrialPlan};
use crate::spaces::{
    build_example, build_example_with, lattice_zd, noext, sequence_condition_check, BinaryDriftChain, CatalogEntry, DriftChain,
    Expected, GrowingDriftChain, KnownFact, NoExtVariant, CATALOG_IDS,
};
use crate::spectral::{
    classify_global_fbrw, classify_local_survival, collatz_wielandt_check, critical_values, geometry_diagnostics, horizon_view,
    n_step_moments, perron_root, phi_gamma_series, UniformGrowthParams, WitnessForm, DEFAULT_PERRON_TOL,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt;
use std::io::Write;

/// Settings shared by every reproduction.
#[derive(Clone, Copy, Debug)]
pub struct ReproduceOptions {
    pub seed: u64,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions { seed: 20_240_601 }
    }
}

/// Value computed for one fact.
#[derive(Clone, Debug, PartialEq)]
pub enum Computed {
    Scalar(f64),
    Vector(Vec<f64>),
    Verdict(String),
    /// Whether the property holds, with the quantity that decided it.
    Holds(bool, f64),
}

impl fmt::Display for Computed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Computed::Scalar(v) => write!(f, "{v:.12}"),
            Computed::Vector(v) => write!(f, "[{}]", v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ")),
            Computed::Verdict(v) => write!(f, "{v}"),
            Computed::Holds(h, d) => write!(f, "{} ({d:.3e})", if *h { "holds" } else { "fails" }),
        }
    }
}

fn describe(expected: &Expected) -> String {
    match expected {
        Expected::Value { value } => format!("{value:.12}"),
        Expected::Vector { values } => format!("[{}]", values.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ")),
        Expected::AtMost { bound } => format!("<= {bound}"),
        Expected::AtLeast { bound } => format!(">= {bound}"),
        Expected::Verdict { verdict } => verdict.clone(),
        Expected::Holds => "holds".into(),
    }
}

/// Compares a computed value with the fact; `AtLeast` with a positive tolerance is strict.
pub fn fact_passes(fact: &KnownFact, computed: &Computed) -> bool {
    let tol = fact.tolerance;
    match (&fact.expected, computed) {
        (Expected::Value { value }, Computed::Scalar(c)) => (c - value).abs() <= tol,
        (Expected::Vector { values }, Computed::Vector(c)) => {
            c.len() == values.len() && c.iter().zip(values).all(|(a, b)| (a - b).abs() <= tol)
        }
        (Expected::AtMost { bound }, Computed::Scalar(c)) => *c <= bound + tol,
        (Expected::AtLeast { bound }, Computed::Scalar(c)) => if tol > 0.0 { *c > *bound } else { *c >= *bound },
        (Expected::Verdict { verdict }, Computed::Verdict(c)) => c == verdict,
        (Expected::Holds, Computed::Holds(h, _)) => *h,
        _ => false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FactRow {
    pub example: String,
    pub key: String,
    pub statement: String,
    pub expected: String,
    pub computed: String,
    pub tolerance: f64,
    pub passed: bool,
    pub source: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reproduction {
    pub id: String,
    pub title: String,
    pub params: Value,
    pub rows: Vec<FactRow>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Writes `example | fact | expected | computed | tolerance | verdict` rows.
pub fn write_table<W: Write>(mut w: W, reps: &[Reproduction]) -> std::io::Result<()> {
    writeln!(w, "{:<24} {:<26} {:<34} {:<34} {:>9}  verdict", "example", "fact", "expected", "computed", "tolerance")?;
    for rep in reps {
        for r in &rep.rows {
            writeln!(
                w,
                "{:<24} {:<26} {:<34} {:<34} {:>9.1e}  {}",
                rep.id,
                r.key,
                r.expected,
                r.computed,
                r.tolerance,
                if r.passed { "PASS" } else { "FAIL" }
            )?;
        }
    }
    Ok(())
}

fn tight() -> IterationSettings {
    IterationSettings { tol: 1e-13, ..Default::default() }
}

fn param(params: &Value, key: &str, default: f64) -> f64 {
    params.get(key).and_then(Value::as_f64).unwrap_or(default)
}

fn verdict_name(v: impl Serialize) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Global extinction probability at the root through the single-type projection.
fn projected_extinction(model: &BrwModel) -> Result<f64> {
    let proj = project_local_isomorphism(model, &|_| 0, 3)?;
    Ok(global_extinction_bracket(&proj.model, 1, tight())?.lower.values[0])
}

/// Escape certificate at `{root}` from the upper never-hit vector with `qbar` constant.
///
/// The target value is raised to `qbar`; `G` is monotone, so supersolution slack only grows.
fn escape_certificate(model: &BrwModel, radius: u32, qbar: f64) -> Result<Computed> {
    let ball = model.ball(radius)?;
    let hit = never_hit_bracket(model, &[0], radius, tight())?;
    let mut v = extend(&ball, &hit.upper.values, Boundary::PinOne);
    v[0] = v[0].max(qbar);
    let q = vec![qbar; ball.len()];
    let out = mv_certificate_check(&ball, &[0], &v, &q, 1e-9)?;
    Ok(Computed::Holds(out.verified, out.gap))
}

/// Largest deviation of the taboo series on `T_d` from the closed-form first-passage function.
fn tree_first_return(d: u32, t: f64) -> Result<f64> {
    let df = d as f64;
    let f = |s: f64| (df - (df * df - 4.0 * (df - 1.0) * s * s).sqrt()) / (2.0 * (df - 1.0) * s);
    let tree = crate::spaces::homogeneous_tree(d, 1.0, crate::spaces::Decoration::None);
    let view = horizon_view(&tree, &tree.root(), 60)?;
    let own = phi_gamma_series(&view.kernel, view.vertex, view.vertex, t, 60)?;
    let neighbour = view.ball.require(&Site::new(&[0, 1]))?;
    let from_neighbour = phi_gamma_series(&view.kernel, neighbour, view.vertex, t, 59)?;
    let s = df * t;
    Ok((own.phi_total() - s * f(s)).abs().max((from_neighbour.phi_total() - f(s)).abs()))
}

fn evaluate(entry: &CatalogEntry, fact: &KnownFact, opts: &ReproduceOptions) -> Result<Computed> {
    let id = entry.descriptor.id.as_str();
    let params = &entry.descriptor.params;
    let model = &entry.model;
    let root = model.root();
    let missing = || Error::Invalid(format!("no evaluator for fact {id}/{}", fact.key));
    Ok(match (id, fact.key.as_str()) {
        ("galton-watson", "extinction") => Computed::Scalar(global_extinction_bracket(model, 1, tight())?.lower.values[0]),
        ("galton-watson", "monte-carlo-extinction") => {
            // Past 100 particles the chance of later extinction is below 3^-100.
            let plan = TrialPlan { trials: 100_000, horizon: 200, population_cap: 100, seed: opts.seed, ..TrialPlan::default() };
            Computed::Scalar(1.0 - estimate_survival(model, &root, &plan, SurvivalMode::Global)?.estimate)
        }
        ("galton-watson", "nodeath-half") => {
            let ball = model.whole()?;
            let q = global_extinction_bracket(model, 1, tight())?.lower.values;
            Computed::Scalar(nodeath_generating_function(&ball, &q, &[0.5], 0)?)
        }
        ("continuous-bp", "extinction") => Computed::Scalar(global_extinction_bracket(model, 1, tight())?.lower.values[0]),
        ("continuous-bp", "witness-equality") => {
            let lk = param(params, "lambda_k", 2.0);
            let k = build_moment_kernel(&model.whole()?)?;
            Computed::Scalar(collatz_wielandt_check(&k, 1.0, &[1.0 - 1.0 / lk], WitnessForm::Nonlinear, 0.0)?.min_slack)
        }
        ("zd", "lambda-w") => Computed::Scalar(classify_global_fbrw(model, None, &root, 3)?.lambda_w.unwrap_or(f64::NAN)),
        ("zd", "lambda-s") => {
            let steps = match param(params, "d", 1.0) as usize {
                1 => 2000,
                2 => 200,
                _ => 80,
            };
            Computed::Scalar(critical_values(model, &root, steps, None)?.lambda_s_upper)
        }
        ("zd", "return-counts") => {
            let z = lattice_zd(1, 1.0);
            let view = horizon_view(&z, &z.root(), 16)?;
            let s = n_step_moments(&view.kernel, view.vertex, 16, None)?;
            Computed::Vector((1..=8).map(|n| s.returns[2 * n].value()).collect())
        }
        ("tree", "lambda-w") => Computed::Scalar(classify_global_fbrw(model, None, &root, 4)?.lambda_w.unwrap_or(f64::NAN)),
        ("tree", "lambda-s") => Computed::Scalar(critical_values(model, &root, 60, None)?.lambda_s_upper),
        ("tree", "first-return") => {
            let err = tree_first_return(param(params, "d", 3.0) as u32, 0.2)?;
            Computed::Holds(err <= fact.tolerance, err)
        }
        ("radial-tree", "uniform-growth") => {
            let period: Vec<f64> = params["period"].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
            let k_w = period.iter().map(|m| m + 1.0).product::<f64>().powf(1.0 / period.len() as f64);
            let p = UniformGrowthParams { k_w, epsilon: fact.tolerance, nbar: period.len().max(2), samples: 200 };
            let g = geometry_diagnostics(model, &root, 10, Some(p))?;
            let u = g.uniform_growth.ok_or_else(missing)?;
            Computed::Holds(u.passed, u.worst_value)
        }
        ("strip", "vertex-growth-at-most-one") => {
            let mut worst = 0.0f64;
            for i in 0..6 {
                for s in 0..2 {
                    worst = worst.max(classify_local_survival(model, &Site::new(&[i, s]), 20)?.growth.lower);
                }
            }
            Computed::Scalar(worst)
        }
        ("strip", "corner-local-survival") => {
            let plan = TrialPlan { trials: 10_000, horizon: 12, population_cap: 1_000_000, seed: opts.seed, ..TrialPlan::default() };
            let est = estimate_survival(model, &root, &plan, SurvivalMode::Local { target: vec![Site::new(&[0, 1])] })?;
            let p = est.lower_estimate;
            Computed::Scalar(p - fact.tolerance * (p * (1.0 - p) / est.eligible as f64).sqrt())
        }
        ("lambda-w-attained-chain", "kernel-entries") => {
            let m = build_example_with(id, &json!({ "lambda": 1.0 }))?.model;
            let ball = m.ball(3)?;
            let k = build_moment_kernel(&ball)?;
            let v = |i: i64| ball.require(&Site::scalar(i));
            Computed::Vector(vec![k.get(v(0)?, v(1)?), k.get(v(1)?, v(2)?), k.get(v(1)?, v(0)?)])
        }
        ("lambda-w-attained-chain", "witness-at-critical") | ("lambda-w-attained-chain", "witness-fails-below") => {
            let m = build_example_with(id, &json!({ "lambda": 1.0 }))?.model;
            let ball = m.ball(200)?;
            let k = build_moment_kernel(&ball)?;
            let v: Vec<f64> = ball.sites().iter().map(|s| if s.get(0) == 0 { 0.5 } else { 1.0 / (s.get(0) + 1) as f64 }).collect();
            if fact.key == "witness-at-critical" {
                let out = collatz_wielandt_check(&k, 1.0, &v, WitnessForm::Nonlinear, 0.0)?;
                Computed::Scalar(if out.passed { out.slack[0].unwrap_or(f64::NAN) } else { out.min_slack })
            } else {
                let out = collatz_wielandt_check(&k, 0.9, &v, WitnessForm::Nonlinear, 0.0)?;
                let deep = out.failing.iter().any(|x| ball.site(*x).get(0) >= 2);
                Computed::Holds(!out.passed && deep, out.min_slack)
            }
        }
        ("noext-pair", "equal-kernels") => {
            let dense = |v: NoExtVariant| -> Result<std::collections::BTreeMap<(String, String), f64>> {
                let m = noext(v);
                let ball = m.ball(20)?;
                let k = build_moment_kernel(&ball)?;
                Ok((0..k.inside_len()).flat_map(|x| k.row(x).iter().map(move |(y, w)| ((x, *y), *w)).collect::<Vec<_>>())
                    .map(|((x, y), w)| ((ball.label(x), ball.label(y)), w))
                    .collect())
            };
            let (a, b) = (dense(NoExtVariant::A)?, dense(NoExtVariant::B)?);
            let same_support = a.keys().eq(b.keys());
            let diff = a.iter().map(|(key, w)| (w - b.get(key).copied().unwrap_or(f64::NAN)).abs()).fold(0.0, f64::max);
            Computed::Holds(same_support && diff == 0.0, diff)
        }
        ("noext-pair", "variant-a-dies") => {
            let q = global_extinction_bracket(&noext(NoExtVariant::A), 40, tight())?;
            Computed::Scalar(1.0 - q.lower.values[0])
        }
        ("noext-pair", "variant-b-survives") => {
            let b = noext(NoExtVariant::B);
            let plan = TrialPlan { trials: 10_000, horizon: 60, population_cap: 10_000, seed: opts.seed, ..TrialPlan::default() };
            Computed::Scalar(estimate_survival(&b, &b.root(), &plan, SurvivalMode::Global)?.estimate)
        }
        ("drift-chain", "row-sums-below-one") => Computed::Scalar(build_moment_kernel(&model.ball(40)?)?.max_row_sum()),
        ("drift-chain", "survival-witness") => {
            let chain = DriftChain::new(param(params, "base", 2.0));
            let ball = model.ball(40)?;
            let z: Vec<f64> = ball.sites().iter().map(|s| 1.0 - chain.tail_product(s.get(0))).collect();
            let cert = global_survival_check(&ball, &z, fact.tolerance)?;
            let excess = (0..ball.inside_len()).map(|x| ball.eval_g(x, &z) - z[x]).fold(f64::NEG_INFINITY, f64::max);
            Computed::Holds(cert.is_some(), excess)
        }
        ("binary-drift-chain", "global-extinction") | ("growing-drift-chain", "global-extinction") => {
            Computed::Scalar(projected_extinction(model)?)
        }
        ("binary-drift-chain", "summability") => {
            let chain = BinaryDriftChain::new(param(params, "p1", 0.5), param(params, "base", 4.0));
            let c = sequence_condition_check(&|i| 1.0 - chain.p(i as i64), &|i| 2f64.powi(i as i32), 40)?;
            Computed::Verdict(verdict_name(c.verdict))
        }
        ("binary-drift-chain", "local-survival") | ("growing-drift-chain", "local-survival") => {
            Computed::Verdict(verdict_name(classify_local_survival(model, &root, 10)?.verdict))
        }
        ("binary-drift-chain", "no-strong-local-survival") => escape_certificate(model, 40, projected_extinction(model)?)?,
        ("growing-drift-chain", "product-condition") => {
            let mean = param(params, "mean", 2.0);
            let chain = GrowingDriftChain::new(mean, param(params, "p0", 0.25))?;
            let product = chain.product_condition();
            Computed::Holds(product > 1.0 / mean, product)
        }
        ("growing-drift-chain", "no-strong-local-survival") => {
            let radius = model.structure().cap().unwrap_or(40).min(40);
            escape_certificate(model, radius, projected_extinction(model)?)?
        }
        ("two-type-bp", "extinction-vector") | ("two-type-bp", "ordering") => {
            let q = global_extinction_bracket(model, 2, tight())?;
            let ball = model.whole()?;
            let (a, b) = (q.lower.values[ball.require(&Site::scalar(1))?], q.lower.values[ball.require(&Site::scalar(2))?]);
            if fact.key == "ordering" {
                Computed::Holds(a < b, b - a)
            } else {
                Computed::Vector(vec![a, b])
            }
        }
        ("two-type-bp", "survival-threshold") => {
            let root = perron_root(&build_moment_kernel(&model.whole()?)?, DEFAULT_PERRON_TOL)?;
            Computed::Verdict(if root.value > 1.0 { "survives" } else { "dies" }.into())
        }
        ("square-tree-fgraph", "type-matrix") | ("square-tree-fgraph", "perron") => {
            let m = build_example_with(id, &json!({ "lambda": 1.0 }))?.model;
            let g = |s: &Site| m.structure().type_label(s).unwrap_or(u32::MAX);
            let proj = project_local_isomorphism(&m, &g, 8)?;
            let k = build_moment_kernel(&proj.model.whole()?)?;
            if fact.key == "perron" {
                Computed::Scalar(perron_root(&k, DEFAULT_PERRON_TOL)?.value)
            } else {
                Computed::Vector(k.to_dense().into_iter().flatten().collect())
            }
        }
        ("square-tree-fgraph", "lambda-w") | ("square-tree-fgraph", "projection-residual") => {
            let m = build_example_with(id, &json!({ "lambda": 1.0 }))?.model;
            let g = classify_global_fbrw(&m, None, &m.root(), 8)?;
            if fact.key == "lambda-w" {
                Computed::Scalar(g.lambda_w.unwrap_or(f64::NAN))
            } else {
                Computed::Scalar(g.projection_residual)
            }
        }
        _ => return Err(missing()),
    })
}

/// Evaluates one fact of a built example.
pub fn evaluate_fact(entry: &CatalogEntry, fact: &KnownFact, opts: &ReproduceOptions) -> Result<(Computed, bool)> {
    let c = evaluate(entry, fact, opts)?;
    let ok = fact_passes(fact, &c);
    Ok((c, ok))
}

/// Checks every known fact of the example named by `spec` (`id` or `id(args)`).
pub fn reproduce_example(spec: &str, opts: &ReproduceOptions) -> Result<Reproduction> {
    let entry = build_example(spec)?;
    let d = &entry.descriptor;
    let rows = d
        .facts
        .iter()
        .map(|fact| {
            let (computed, passed) = match evaluate_fact(&entry, fact, opts) {
                Ok((c, ok)) => (c.to_string(), ok),
                Err(e) => (format!("error: {e}"), false),
            };
            FactRow {
                example: d.id.clone(),
                key: fact.key.clone(),
                statement: fact.statement.clone(),
                expected: describe(&fact.expected),
                computed,
                tolerance: fact.tolerance,
                passed,
                source: fact.source.clone(),
            }
        })
        .collect();
    Ok(Reproduction { id: d.id.clone(), title: d.title.clone(), params: d.params.clone(), rows })
}

/// Reproduces every catalog example with default parameters.
pub fn reproduce_all(opts: &ReproduceOptions) -> Result<Vec<Reproduction>> {
    CATALOG_IDS.iter().map(|id| reproduce_example(id, opts)).collect()
}
