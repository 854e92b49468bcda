use super::config::{ExperimentConfig, Settings, Task};
use crate::error::{Error, Result};
use crate::genfun::{global_extinction_bracket, never_hit_bracket, IterationSettings};
use crate::model::{validate_model, BrwModel, Site};
use crate::simulate::{coupled_truncation_sweep, run_trials, summarize, write_trials_csv, Population, SurvivalMode, TrialPlan};
use crate::spectral::{
    classify_global_fbrw, classify_local_survival, critical_values, geometry_diagnostics, horizon_view, n_step_moments,
    phi_gamma_series, write_series_csv, SurvivalReport,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODEL_REJECTED: i32 = 2;
pub const EXIT_TASK_FAILED: i32 = 3;
/// Version of the layout of `report.json` and `manifest.json`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// JSON Schema for `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../../schemas/report.schema.json");

/// Exit code for an error raised before or while running tasks.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Json(_)
        | Error::ModelRejected(_)
        | Error::Normalization { .. }
        | Error::DegenerateClass { .. }
        | Error::UnboundedRowSum { .. } => EXIT_MODEL_REJECTED,
        _ => EXIT_TASK_FAILED,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskRecord {
    pub task: Task,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub model: String,
    pub start: String,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
}

/// Result of a run: exit code plus what was written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub report: Report,
    pub files: Vec<String>,
}

struct Ctx<'a> {
    model: &'a BrwModel,
    settings: &'a Settings,
    start: Site,
    target: Vec<Site>,
    dir: &'a Path,
}

impl Ctx<'_> {
    fn iteration(&self) -> IterationSettings {
        IterationSettings { tol: self.settings.tol, max_iter: self.settings.max_iter }
    }

    fn plan(&self, targets: Vec<Vec<Site>>) -> TrialPlan {
        TrialPlan {
            trials: self.settings.trials,
            horizon: self.settings.horizon,
            population_cap: self.settings.population_cap,
            seed: self.settings.seed,
            targets,
            ..TrialPlan::default()
        }
    }

    fn write(&self, name: &str, files: &mut Vec<String>, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        std::fs::write(self.dir.join(name), buf)?;
        files.push(name.to_string());
        Ok(())
    }
}

/// Maps each site of a finite space to its own type, so finite models project onto themselves.
fn finite_types(model: &BrwModel) -> Option<HashMap<Site, u32>> {
    model.structure().finite_sites().map(|sites| sites.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect())
}

fn run_task(task: Task, ctx: &Ctx, files: &mut Vec<String>) -> Result<Value> {
    let s = ctx.settings;
    let model = ctx.model;
    Ok(match task {
        Task::Validate => serde_json::to_value(validate_model(model, s.radius)?)?,
        Task::ClassifyLocal => {
            let local = classify_local_survival(model, &ctx.start, s.steps)?;
            let report = SurvivalReport { model: model.name(), vertex: local.vertex.clone(), local: Some(local), ..Default::default() };
            report.to_json()
        }
        Task::ClassifyGlobal => {
            let types = finite_types(model);
            let global = match (&types, model.structure().type_label(&model.root())) {
                (_, Some(_)) | (None, None) => classify_global_fbrw(model, None, &ctx.start, s.radius)?,
                (Some(t), None) => classify_global_fbrw(model, Some(&|x: &Site| t.get(x).copied().unwrap_or(u32::MAX)), &ctx.start, s.radius)?,
            };
            let critical = match model.lambda() {
                Some(_) => Some(critical_values(model, &ctx.start, s.steps, Some(&global))?),
                None => None,
            };
            let report =
                SurvivalReport { model: model.name(), vertex: global.vertex.clone(), global: Some(global), critical, ..Default::default() };
            report.to_json()
        }
        Task::Extinction => {
            let q = global_extinction_bracket(model, s.radius, ctx.iteration())?;
            ctx.write("extinction.csv", files, |w| q.write_csv(w))?;
            json!({ "brackets": q.to_json(), "width": q.width(), "converged": q.converged() })
        }
        Task::NeverHit => {
            let ball = model.region(s.radius)?;
            let ids = ctx.target.iter().map(|a| ball.require(a)).collect::<Result<Vec<_>>>()?;
            let h = never_hit_bracket(model, &ids, s.radius, ctx.iteration())?;
            ctx.write("never_hit.csv", files, |w| h.write_csv(w))?;
            json!({ "brackets": h.to_json(), "width": h.width(), "converged": h.converged() })
        }
        Task::Series => {
            let view = horizon_view(model, &ctx.start, s.steps)?;
            let y = view.ball.require(&ctx.target[0])?;
            let series = phi_gamma_series(&view.kernel, view.vertex, y, s.t, s.steps)?;
            let moments = n_step_moments(&view.kernel, view.vertex, s.steps, Some(y))?;
            let ln: Vec<f64> = moments.returns.iter().map(|m| m.ln()).collect();
            ctx.write("phi.csv", files, |w| write_series_csv(w, &series.phi))?;
            ctx.write("gamma.csv", files, |w| write_series_csv(w, &series.gamma))?;
            ctx.write("log_moments.csv", files, |w| write_series_csv(w, &ln))?;
            json!({
                "source": series.source,
                "target": series.target,
                "t": series.lambda,
                "phi_total": series.phi_total(),
                "gamma_total": series.gamma_total(),
                "phi_exceeds_one_at": series.phi_exceeds_one_at,
                "identity_residual": series.identity_residual,
                "period": moments.period(),
            })
        }
        Task::Diagnostics => {
            let g = geometry_diagnostics(model, &ctx.start, s.radius, None)?;
            ctx.write("ball_sizes.csv", files, |w| {
                writeln!(w, "radius,size")?;
                for (r, n) in g.ball_sizes.iter().enumerate() {
                    writeln!(w, "{r},{n}")?;
                }
                Ok(())
            })?;
            serde_json::to_value(g)?
        }
        Task::Simulate => {
            let plan = ctx.plan(vec![ctx.target.clone()]);
            let outcomes = run_trials(model, &Population::single(ctx.start.clone()), &plan)?;
            ctx.write("trials.csv", files, |w| write_trials_csv(w, &outcomes))?;
            let global = summarize(&outcomes, SurvivalMode::Global, plan.horizon)?;
            let local = summarize(&outcomes, SurvivalMode::Local { target: ctx.target.clone() }, plan.horizon)?;
            let strong = summarize(&outcomes, SurvivalMode::StrongLocal { target: ctx.target.clone() }, plan.horizon)?;
            json!({ "global": global, "local": local, "strong_local": strong })
        }
        Task::Sweep => {
            let plan = ctx.plan(vec![ctx.target.clone()]);
            let r = coupled_truncation_sweep(model, &ctx.start, &plan, &s.levels)?;
            ctx.write("sweep.csv", files, |w| {
                writeln!(w, "m,global_estimate,global_ci_low,global_ci_high,local_estimate")?;
                for l in &r.levels {
                    let m = l.m.map_or("inf".to_string(), |m| m.to_string());
                    let local = l.local.as_ref().map_or(String::new(), |e| e.estimate.to_string());
                    writeln!(w, "{m},{},{},{},{local}", l.global.estimate, l.global.ci_low, l.global.ci_high)?;
                }
                Ok(())
            })?;
            json!({ "result": r, "monotone": r.monotone() })
        }
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs every task in order and writes `report.json`, `manifest.json` and per-task CSVs into `out_dir`.
///
/// Model construction errors are returned as errors. A failing task is recorded in the report
/// and turns the exit code into [`EXIT_TASK_FAILED`] while later tasks still run; a model
/// rejected by the validate task stops the run with [`EXIT_MODEL_REJECTED`].
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let model = config.model.build()?;
    let settings = &config.settings;
    let start = settings.start.clone().unwrap_or_else(|| model.root());
    let target = settings.target.clone().unwrap_or_else(|| vec![start.clone()]);
    if target.is_empty() {
        return Err(Error::Config("target set must be nonempty".into()));
    }
    if config.tasks.contains(&Task::ClassifyGlobal) && model.structure().type_label(&model.root()).is_none() && !model.is_finite() {
        return Err(Error::Config(format!("classify-global needs a finite type projection, which {} does not provide", model.name())));
    }
    std::fs::create_dir_all(out_dir)?;
    let ctx = Ctx { model: &model, settings, start: start.clone(), target, dir: out_dir };
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut exit = EXIT_OK;
    for &task in &config.tasks {
        let mut task_files = Vec::new();
        let record = match run_task(task, &ctx, &mut task_files) {
            Ok(result) => TaskRecord { task, status: TaskStatus::Ok, result: Some(result), error: None, files: task_files.clone() },
            Err(e) => {
                let code = if task == Task::Validate { exit_code(&e) } else { EXIT_TASK_FAILED };
                exit = exit.max(code);
                TaskRecord { task, status: TaskStatus::Failed, result: None, error: Some(e.to_string()), files: task_files.clone() }
            }
        };
        files.extend(task_files);
        records.push(record);
        if exit == EXIT_MODEL_REJECTED {
            break;
        }
    }
    let report = Report { schema_version: REPORT_SCHEMA_VERSION, model: model.name(), start: model.label(&start), seed: settings.seed, tasks: records };
    write_json(&out_dir.join("report.json"), &report)?;
    files.insert(0, "report.json".into());
    let versions = BTreeMap::from([("brwlab".to_string(), env!("CARGO_PKG_VERSION").to_string())]);
    let manifest = Manifest {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: config.hash(),
        seed: settings.seed,
        versions,
        config: config.resolved(),
        files: files.clone(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { exit_code: exit, out_dir: out_dir.to_path_buf(), report, files })
}
