use crate::error::{Error, Result};
use crate::model::{Acceptance, BrwModel, FiniteStructure, OffspringConfig, Outcome, ReproductionLaw, Site};
use crate::spaces::build_example_with;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Probability given as a number or as a rational string such as `"3/4"`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prob {
    pub value: f64,
    text: Option<String>,
}

impl Prob {
    pub fn parse(s: &str) -> Result<Prob> {
        let bad = || Error::Config(format!("probability {s:?} is not a number or a ratio a/b"));
        let value = match s.split_once('/') {
            Some((a, b)) => {
                let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if b == 0.0 {
                    return Err(bad());
                }
                a / b
            }
            None => s.trim().parse().map_err(|_| bad())?,
        };
        Ok(Prob { value, text: Some(s.to_string()) })
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.text {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(value) => Ok(Prob { value, text: None }),
            Raw::Text(t) => Prob::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChildSpec {
    pub site: Site,
    #[serde(default = "one")]
    pub count: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    pub prob: Prob,
    #[serde(default)]
    pub children: Vec<ChildSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub site: Site,
    pub rate: f64,
}

/// Law of one site: explicit outcomes, or rates of a continuous-time walk with parameter `lambda`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub site: Site,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<OutcomeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<RateSpec>>,
}

impl LawSpec {
    fn to_law(&self) -> Result<ReproductionLaw<Site>> {
        match (&self.outcomes, &self.rates) {
            (Some(outcomes), None) if self.lambda.is_none() => Ok(ReproductionLaw::Explicit(
                outcomes
                    .iter()
                    .map(|o| Outcome {
                        prob: o.prob.value,
                        config: OffspringConfig { children: o.children.iter().map(|c| (c.site.clone(), c.count as u128)).collect() },
                    })
                    .collect(),
            )),
            (None, Some(rates)) => Ok(ReproductionLaw::ContinuousCounterpart {
                lambda: self.lambda.unwrap_or(1.0),
                rates: rates.iter().map(|r| (r.site.clone(), r.rate)).collect(),
            }),
            _ => Err(Error::Config(format!("law at {} needs either outcomes or rates (with optional lambda)", self.site))),
        }
    }
}

/// A catalog builder with parameters, or an inline table of laws on a finite space.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<Site>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laws: Option<Vec<LawSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<Vec<f64>>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<BrwModel> {
        let model = match (&self.builder, &self.laws) {
            (Some(id), None) => {
                let params = if self.params.is_null() { Value::Object(Default::default()) } else { self.params.clone() };
                build_example_with(id, &params)?.model
            }
            (None, Some(laws)) => {
                if laws.is_empty() {
                    return Err(Error::Config("inline model needs at least one law".into()));
                }
                let root = self.root.clone().unwrap_or_else(|| laws[0].site.clone());
                let entries = laws.iter().map(|l| Ok((l.site.clone(), l.to_law()?))).collect::<Result<Vec<_>>>()?;
                let name = self.name.clone().unwrap_or_else(|| "inline model".into());
                BrwModel::new(FiniteStructure::new(name, root, entries)?)
            }
            _ => return Err(Error::Config("model needs exactly one of builder or laws".into())),
        };
        let model = match self.truncation {
            Some(m) => model.with_truncation(m)?,
            None => model,
        };
        Ok(match &self.acceptance {
            Some(c) => model.with_acceptance(Acceptance::new(c.clone())?),
            None => model,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    ClassifyLocal,
    ClassifyGlobal,
    Extinction,
    NeverHit,
    Series,
    Diagnostics,
    Simulate,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::ClassifyLocal => "classify-local",
            Task::ClassifyGlobal => "classify-global",
            Task::Extinction => "extinction",
            Task::NeverHit => "never-hit",
            Task::Series => "series",
            Task::Diagnostics => "diagnostics",
            Task::Simulate => "simulate",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Ball radius for fixed-point iterations, validation and projections.
    pub radius: u32,
    /// Number of steps for moment sequences and taboo series.
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub trials: u64,
    /// Generations per simulated trial.
    pub horizon: u64,
    pub population_cap: u64,
    pub seed: u64,
    /// Start vertex; the model root when absent.
    pub start: Option<Site>,
    /// Target set for never-hit, series and local simulation; the start vertex when absent.
    pub target: Option<Vec<Site>>,
    /// Truncation levels for sweeps, ascending; `null` is the untruncated walk.
    pub levels: Vec<Option<u64>>,
    /// Argument of the taboo generating functions.
    pub t: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            radius: 20,
            steps: 100,
            tol: 1e-10,
            max_iter: 1_000_000,
            trials: 1000,
            horizon: 100,
            population_cap: 1_000_000,
            seed: 0,
            start: None,
            target: None,
            levels: vec![Some(1), Some(2), Some(4), Some(8), None],
            t: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub settings: Settings,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config does not match the schema: {e}")))
    }

    /// Reads a config file, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{} is not JSON: {e}", path.display())))?;
        match value.get("config_hash").and(value.get("config")) {
            Some(embedded) => Self::from_json(&embedded.to_string()),
            None => Self::from_json(&text),
        }
    }

    /// Config without the output directory, as recorded in manifests.
    pub fn resolved(&self) -> ExperimentConfig {
        ExperimentConfig { output: None, ..self.clone() }
    }

    /// SHA-256 of the canonical JSON of the resolved config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.resolved()).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}
