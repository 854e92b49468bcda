use super::{homogeneous_tree, lattice_zd, radial_tree, Decoration};
use crate::error::{Error, Result};
use crate::model::{
    galton_watson, BrwModel, Count, FiniteStructure, OffspringConfig, OffspringLaw, Outcome, ReproductionLaw,
    Site, Structure,
};
use serde::Serialize;
use serde_json::{json, Value};

/// Expected value of a known fact.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expected {
    Value { value: f64 },
    Vector { values: Vec<f64> },
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    Verdict { verdict: String },
    Holds,
}

/// A quantitative statement about an example, checked by the reproduction suite.
#[derive(Clone, Debug, Serialize)]
pub struct KnownFact {
    pub key: String,
    pub statement: String,
    pub expected: Expected,
    pub tolerance: f64,
    /// Short description of where the value comes from.
    pub source: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleDescriptor {
    pub id: String,
    pub title: String,
    pub params: Value,
    pub facts: Vec<KnownFact>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub model: BrwModel,
    pub descriptor: ExampleDescriptor,
}

/// Identifiers accepted by [`build_example`].
pub const CATALOG_IDS: &[&str] = &[
    "galton-watson",
    "continuous-bp",
    "zd",
    "tree",
    "radial-tree",
    "strip",
    "lambda-w-attained-chain",
    "noext-pair",
    "drift-chain",
    "binary-drift-chain",
    "growing-drift-chain",
    "two-type-bp",
    "square-tree-fgraph",
];

fn fact(key: &str, statement: &str, expected: Expected, tolerance: f64, source: &str) -> KnownFact {
    KnownFact {
        key: key.into(),
        statement: statement.into(),
        expected,
        tolerance,
        source: source.into(),
    }
}

fn num(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::Config(format!("parameter {key} must be a number"))),
    }
}

/// Parses `name` or `name(a,b,...)` into an id and a parameter object.
pub fn parse_example_spec(spec: &str) -> Result<(String, Value)> {
    let spec = spec.trim();
    let (id, args) = match spec.find('(') {
        Some(i) if spec.ends_with(')') => (&spec[..i], Some(&spec[i + 1..spec.len() - 1])),
        Some(_) => return Err(Error::Config(format!("malformed example spec {spec}"))),
        None => (spec, None),
    };
    if !CATALOG_IDS.contains(&id) {
        return Err(Error::Config(format!("unknown example {id}")));
    }
    let args: Vec<&str> = args.map(|a| a.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()).unwrap_or_default();
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("argument {s} is not a number")));
    let positional: &[&str] = match id {
        "zd" => &["d", "lambda"],
        "tree" => &["d", "lambda"],
        "strip" => &["p"],
        "continuous-bp" => &["lambda_k"],
        "two-type-bp" => &["p"],
        "lambda-w-attained-chain" => &["lambda"],
        "square-tree-fgraph" => &["lambda"],
        _ => &[],
    };
    let mut params = serde_json::Map::new();
    if id == "radial-tree" && !args.is_empty() {
        let period: Result<Vec<f64>> = args.iter().map(|a| parse(a)).collect();
        params.insert("period".into(), json!(period?));
    } else if id == "noext-pair" && !args.is_empty() {
        params.insert("variant".into(), json!(args[0]));
    } else {
        if args.len() > positional.len() {
            return Err(Error::Config(format!("too many arguments for {id}")));
        }
        for (name, a) in positional.iter().zip(&args) {
            params.insert((*name).into(), json!(parse(a)?));
        }
    }
    Ok((id.to_string(), Value::Object(params)))
}

/// Builds an example from `name` or `name(args)`.
pub fn build_example(spec: &str) -> Result<CatalogEntry> {
    let (id, params) = parse_example_spec(spec)?;
    build_example_with(&id, &params)
}

/// Builds an example from its id and a parameter object; missing parameters take defaults.
pub fn build_example_with(id: &str, params: &Value) -> Result<CatalogEntry> {
    let (model, title, params, facts) = match id {
        "galton-watson" => {
            let model = galton_watson(&[0.25, 0.0, 0.75]);
            let facts = vec![
                fact("extinction", "smallest fixed point of 1/4 + 3/4 s^2", Expected::Value { value: 1.0 / 3.0 }, 1e-9,
                    "root of the quadratic fixed-point equation"),
                fact("monte-carlo-extinction", "simulated extinct fraction", Expected::Value { value: 1.0 / 3.0 }, 5e-3,
                    "same root, sampled"),
                fact("nodeath-half", "no-death generating function at 1/2", Expected::Value { value: 3.0 / 8.0 }, 1e-12,
                    "direct evaluation of the conditioned generating function"),
            ];
            (model, "Galton-Watson, 2 children w.p. 3/4".to_string(), json!({}), facts)
        }
        "continuous-bp" => {
            let lk = num(params, "lambda_k", 2.0)?;
            let root = Site::scalar(0);
            let law = ReproductionLaw::ContinuousCounterpart { lambda: 1.0, rates: vec![(root.clone(), lk)] };
            let model = BrwModel::new(FiniteStructure::new("continuous-time branching process", root.clone(), vec![(root, law)])?);
            let facts = vec![
                fact("extinction", "extinction probability 1/(lambda k)", Expected::Value { value: (1.0 / lk).min(1.0) }, 1e-9,
                    "fixed point of 1/(1 + lambda k (1 - s))"),
                fact("witness-equality", "v = 1 - 1/(lambda k) meets the rate inequality with equality",
                    Expected::Value { value: 0.0 }, 1e-12, "algebraic identity"),
            ];
            (model, format!("continuous-time branching process, lambda k = {lk}"), json!({ "lambda_k": lk }), facts)
        }
        "zd" => {
            let d = num(params, "d", 1.0)? as usize;
            let lambda = num(params, "lambda", 1.0)?;
            let c = 1.0 / (2.0 * d as f64);
            let mut facts = vec![
                fact("lambda-w", "global critical parameter 1/(2d)", Expected::Value { value: c }, 1e-10,
                    "single-type projection"),
                fact("lambda-s", "local critical parameter 1/(2d)", Expected::Value { value: c }, 0.03,
                    "amenable symmetric walk, return probabilities decay subexponentially"),
            ];
            if d == 1 {
                facts.push(fact("return-counts", "return path counts C(2n,n) for n <= 8",
                    Expected::Vector { values: (1..=8).map(|n| binomial(2 * n, n)).collect() }, 0.0,
                    "lattice path count"));
            }
            (lattice_zd(d, lambda), format!("Z^{d} edge-breeding"), json!({ "d": d, "lambda": lambda }), facts)
        }
        "tree" => {
            let d = num(params, "d", 3.0)? as u32;
            let lambda = num(params, "lambda", 1.0)?;
            let df = d as f64;
            let facts = vec![
                fact("lambda-w", "global critical parameter 1/d", Expected::Value { value: 1.0 / df }, 1e-10,
                    "single-type projection"),
                fact("lambda-s", "local critical parameter 1/(2 sqrt(d-1))", Expected::Value { value: 1.0 / (2.0 * (df - 1.0).sqrt()) },
                    0.02, "spectral radius of the simple random walk on the tree"),
                fact("first-return", "taboo series matches the closed-form first-passage function at t = 0.2",
                    Expected::Holds, 1e-6, "first-passage generating function of the tree walk"),
            ];
            (homogeneous_tree(d, lambda, Decoration::None), format!("T_{d} edge-breeding"), json!({ "d": d, "lambda": lambda }), facts)
        }
        "radial-tree" => {
            let period: Vec<u32> = match params.get("period") {
                Some(Value::Array(a)) => a.iter().map(|v| v.as_f64().unwrap_or(1.0) as u32).collect(),
                _ => vec![1, 2],
            };
            if period.is_empty() || period.contains(&0) {
                return Err(Error::Config("radial tree period entries must be positive".into()));
            }
            let facts = vec![fact("uniform-growth", "finite-step growth is uniform with horizon 2", Expected::Holds, 0.75,
                "walk counts over one period")];
            (radial_tree(&period, 1.0), format!("radial tree {period:?}"), json!({ "period": period }), facts)
        }
        "strip" => {
            let p = num(params, "p", 0.9)?;
            if !(p > 0.5 && p <= 1.0) {
                return Err(Error::Config(format!("strip needs 1/2 < p <= 1, got {p}")));
            }
            let facts = vec![
                fact("vertex-growth-at-most-one", "every per-vertex return growth rate is at most 1",
                    Expected::AtMost { bound: 1.0 }, 1e-12, "no vertex lies on a supercritical cycle"),
                fact("corner-local-survival", "local survival at (0,1) from (0,0) is positive",
                    Expected::AtLeast { bound: 0.0 }, 3.0, "infinitely many supercritical influx paths"),
            ];
            (BrwModel::new(Strip { p }), format!("reducible strip, p = {p}"), json!({ "p": p }), facts)
        }
        "lambda-w-attained-chain" => {
            let lambda = num(params, "lambda", 1.0)?;
            let facts = vec![
                fact("kernel-entries", "m01, m12, m10 at lambda = 1", Expected::Vector { values: vec![2.0, 4.0, 1.0 / 3.0] }, 1e-15,
                    "rates 2, (1+1/n)^2 and 3^-n"),
                fact("witness-at-critical", "v(0)=1/2, v(n)=1/(n+1) meets the rate inequality at lambda = 1 with zero slack at 0",
                    Expected::Value { value: 0.0 }, 0.0, "explicit witness"),
                fact("witness-fails-below", "the same witness fails at lambda = 0.9 for some n >= 2", Expected::Holds, 0.0,
                    "explicit witness"),
            ];
            (BrwModel::new(WitnessChain { lambda }), "chain with global survival at the critical parameter".into(),
                json!({ "lambda": lambda }), facts)
        }
        "noext-pair" => {
            let variant = match params.get("variant").and_then(Value::as_str).unwrap_or("b") {
                "a" | "A" => NoExtVariant::A,
                "b" | "B" => NoExtVariant::B,
                other => return Err(Error::Config(format!("noext variant must be a or b, got {other}"))),
            };
            let facts = vec![
                fact("equal-kernels", "both variants share the first-moment matrix", Expected::Holds, 0.0,
                    "p_i n_i = 2 and 4 * 1/2 = 2"),
                fact("variant-a-dies", "fixed-point upper bracket of survival for variant A at radius 40",
                    Expected::AtMost { bound: 0.05 }, 0.0, "subcritical reproducer counts"),
                fact("variant-b-survives", "simulated global survival of variant B", Expected::AtLeast { bound: 0.2 }, 0.0,
                    "dominates a branching process with mean 2"),
            ];
            (noext(variant), format!("same first moments, different fate (variant {variant:?})"),
                json!({ "variant": format!("{variant:?}").to_lowercase() }), facts)
        }
        "drift-chain" => {
            let base = num(params, "base", 2.0)?;
            let facts = vec![
                fact("row-sums-below-one", "every row sum (1 + p_n)/2 is below 1", Expected::AtMost { bound: 1.0 }, 0.0,
                    "direct computation"),
                fact("survival-witness", "z(n) = 1 - prod_{i>=n} p_i satisfies G(z) <= z", Expected::Holds, 1e-12,
                    "explicit witness"),
            ];
            (BrwModel::new(DriftChain { base }), "irreducible drift chain".into(), json!({ "base": base }), facts)
        }
        "binary-drift-chain" => {
            let p1 = num(params, "p1", 0.5)?;
            let base = num(params, "base", 4.0)?;
            let facts = vec![
                fact("global-extinction", "extinction probability 1/3 at every vertex", Expected::Value { value: 1.0 / 3.0 }, 1e-9,
                    "single-type projection"),
                fact("summability", "sum 2^i (1 - p_i) converges", Expected::Verdict { verdict: "converges".into() }, 0.0,
                    "geometric tail"),
                fact("local-survival", "local survival at 0", Expected::Verdict { verdict: "survives".into() }, 0.0,
                    "two-step return mean 9/8"),
                fact("no-strong-local-survival", "escape certificate at A = {0}", Expected::Holds, 0.0,
                    "never-hit probabilities exceed the global extinction value"),
            ];
            (BrwModel::new(BinaryDriftChain { p1, base }), "binary drift chain".into(), json!({ "p1": p1, "base": base }), facts)
        }
        "growing-drift-chain" => {
            let mean = num(params, "mean", 2.0)?;
            let p0 = num(params, "p0", 0.25)?;
            let chain = GrowingDriftChain::new(mean, p0)?;
            let facts = vec![
                fact("global-extinction", "extinction probability 1/mean of the geometric offspring law", Expected::Value { value: 1.0 / mean },
                    1e-9, "single-type projection"),
                fact("local-survival", "local survival at 0", Expected::Verdict { verdict: "survives".into() }, 0.0,
                    "self-loop mean (1 - p0) * mean > 1"),
                fact("product-condition", "prod rho([0, N_{i+1}])^{prod N_j} exceeds the extinction probability",
                    Expected::Holds, 0.0, "choice of N_i"),
                fact("no-strong-local-survival", "escape certificate at A = {0}", Expected::Holds, 0.0,
                    "never-hit probabilities exceed the global extinction value"),
            ];
            let params = json!({ "mean": mean, "p0": p0, "n": chain.n_seq.iter().take(6).collect::<Vec<_>>() });
            (BrwModel::new(chain), "drift chain with growing blocks".into(), params, facts)
        }
        "two-type-bp" => {
            let p = num(params, "p", 0.8)?;
            let rho: Vec<f64> = match params.get("rho") {
                Some(Value::Array(a)) => a.iter().map(|v| v.as_f64().unwrap_or(0.0)).collect(),
                _ => vec![0.25, 0.0, 0.75],
            };
            let mean: f64 = rho.iter().enumerate().map(|(i, r)| i as f64 * r).sum();
            let facts = vec![
                fact("extinction-vector", "extinction probabilities at types 1 and 2", Expected::Vector { values: vec![7.0 / 12.0, 2.0 / 3.0] },
                    1e-9, "roots of 12 s^2 - 19 s + 7"),
                fact("ordering", "extinction at type 1 is below type 2", Expected::Holds, 0.0, "direct comparison"),
                fact("survival-threshold", "survival iff p * mean > 1", Expected::Verdict {
                    verdict: if p * mean > 1.0 { "survives" } else { "dies" }.into() }, 0.0, "Perron root sqrt(p * mean)"),
            ];
            (two_type_bp(&rho, p)?, "two-type branching process".into(), json!({ "p": p, "rho": rho }), facts)
        }
        "square-tree-fgraph" => {
            let lambda = num(params, "lambda", 1.0)?;
            let root = (3.0 + 13f64.sqrt()) / 2.0;
            let facts = vec![
                fact("type-matrix", "type kernel [[3,1],[1,0]] at lambda = 1", Expected::Vector { values: vec![3.0, 1.0, 1.0, 0.0] }, 1e-15,
                    "degree counts of the two vertex types"),
                fact("perron", "Perron root of the type kernel", Expected::Value { value: root }, 1e-10, "(3 + sqrt 13)/2"),
                fact("lambda-w", "global critical parameter", Expected::Value { value: 1.0 / root }, 1e-10, "inverse Perron root"),
                fact("projection-residual", "generating-function residual over 20 random vectors", Expected::AtMost { bound: 1e-12 }, 0.0,
                    "exact local isomorphism"),
            ];
            (BrwModel::new(SquareTree { lambda }), "square with tree branches and pendant edges".into(), json!({ "lambda": lambda }), facts)
        }
        other => return Err(Error::Config(format!("unknown example {other}"))),
    };
    Ok(CatalogEntry { model, descriptor: ExampleDescriptor { id: id.to_string(), title, params, facts } })
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

fn explicit(outcomes: Vec<(f64, Vec<(Site, Count)>)>) -> ReproductionLaw<Site> {
    ReproductionLaw::Explicit(
        outcomes
            .into_iter()
            .map(|(prob, children)| Outcome { prob, config: OffspringConfig { children } })
            .collect(),
    )
}

/// Reducible strip `N x {0,1}` with local survival at a vertex whose own growth rate is below 1.
#[derive(Clone, Debug)]
pub struct Strip {
    p: f64,
}

impl Structure for Strip {
    fn name(&self) -> String {
        format!("strip (p={})", self.p)
    }
    fn root(&self) -> Site {
        Site::new(&[0, 0])
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let (i, s) = (site.get(0), site.get(1));
        let children = match (i, s) {
            (i, 0) => vec![(Site::new(&[i + 1, 0]), 2), (Site::new(&[i, 1]), 1)],
            (0, _) => vec![(Site::new(&[0, 1]), 1)],
            (i, _) => vec![(Site::new(&[i - 1, 1]), 2)],
        };
        explicit(vec![(self.p, children), (1.0 - self.p, vec![])])
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32 + site.get(1) as u32)
    }
}

/// Chain on `N` with rates `k_01 = 2`, `k_{n,n+1} = (1+1/n)^2`, `k_{n,n-1} = 3^-n`.
#[derive(Clone, Debug)]
pub struct WitnessChain {
    lambda: f64,
}

impl Structure for WitnessChain {
    fn name(&self) -> String {
        format!("witness chain (lambda={})", self.lambda)
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let n = site.get(0);
        let rates = if n == 0 {
            vec![(Site::scalar(1), 2.0)]
        } else {
            let f = 1.0 + 1.0 / n as f64;
            vec![(Site::scalar(n - 1), 3f64.powi(-(n as i32))), (Site::scalar(n + 1), f * f)]
        };
        ReproductionLaw::ContinuousCounterpart { lambda: self.lambda, rates }
    }
    fn cap(&self) -> Option<u32> {
        Some(600)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoExtVariant {
    A,
    B,
}

/// Pair of chains with equal first moments: variant A dies out, variant B survives.
///
/// With `n_i = 2^(3+2i)` and `p_i = 2/n_i`, a reproducing particle in variant A yields on
/// average at most 3/4 reproducing particles, while variant B dominates a process of mean 2.
#[derive(Clone, Debug)]
pub struct NoExt {
    variant: NoExtVariant,
}

impl NoExt {
    fn exponent(i: i64) -> u32 {
        3 + 2 * i as u32
    }

    pub fn p(i: i64) -> f64 {
        2f64.powi(1 - Self::exponent(i) as i32)
    }

    pub fn n(i: i64) -> Count {
        1u128 << Self::exponent(i)
    }
}

impl Structure for NoExt {
    fn name(&self) -> String {
        format!("noext variant {:?}", self.variant)
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let i = site.get(0);
        let p = Self::p(i);
        let right = Site::scalar(i + 1);
        match self.variant {
            NoExtVariant::A => {
                let mut children = vec![(right, Self::n(i))];
                if i > 0 {
                    children.insert(0, (Site::scalar(i - 1), 1));
                }
                explicit(vec![(p, children), (1.0 - p, vec![])])
            }
            NoExtVariant::B => {
                if i == 0 {
                    explicit(vec![(0.5, vec![(right, 4)]), (0.5, vec![])])
                } else {
                    explicit(vec![(0.5, vec![(right, 4)]), (p, vec![(Site::scalar(i - 1), 1)]), (0.5 - p, vec![])])
                }
            }
        }
    }
    fn cap(&self) -> Option<u32> {
        Some(60)
    }
    fn representable(&self, site: &Site) -> bool {
        Self::exponent(site.get(0)) < 128
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
}

pub fn noext(variant: NoExtVariant) -> BrwModel {
    BrwModel::new(NoExt { variant })
}

/// Irreducible chain with row sums below one that still survives globally.
///
/// At `n`: one child at `n+1` w.p. `p_n`, one at `n-1` (at 0: at 0 itself) w.p. `(1-p_n)/2`,
/// none otherwise, with `p_n = 1 - base^-(n+1)`.
#[derive(Clone, Debug)]
pub struct DriftChain {
    base: f64,
}

impl DriftChain {
    pub fn new(base: f64) -> Self {
        DriftChain { base }
    }

    pub fn p(&self, n: i64) -> f64 {
        1.0 - self.base.powi(-(n as i32 + 1))
    }

    /// `prod_{i >= n} p_i`, summed in log space until the terms vanish.
    pub fn tail_product(&self, n: i64) -> f64 {
        let mut log = 0.0;
        let mut i = n;
        loop {
            let q = self.base.powi(-(i as i32 + 1));
            log += (-q).ln_1p();
            if q < 1e-18 {
                break;
            }
            i += 1;
        }
        log.exp()
    }
}

impl Structure for DriftChain {
    fn name(&self) -> String {
        format!("drift chain (base={})", self.base)
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let n = site.get(0);
        let p = self.p(n);
        let back = Site::scalar((n - 1).max(0));
        explicit(vec![(p, vec![(Site::scalar(n + 1), 1)]), ((1.0 - p) / 2.0, vec![(back, 1)]), ((1.0 - p) / 2.0, vec![])])
    }
    fn cap(&self) -> Option<u32> {
        Some(1000)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
}

/// Binary branching (2 children w.p. 3/4) with drift `p_0 = 1`, `p_1`, `p_i = 1 - base^-i`.
#[derive(Clone, Debug)]
pub struct BinaryDriftChain {
    p1: f64,
    base: f64,
}

impl BinaryDriftChain {
    pub fn new(p1: f64, base: f64) -> Self {
        BinaryDriftChain { p1, base }
    }

    pub fn p(&self, i: i64) -> f64 {
        match i {
            0 => 1.0,
            1 => self.p1,
            _ => 1.0 - self.base.powi(-(i as i32)),
        }
    }
}

impl Structure for BinaryDriftChain {
    fn name(&self) -> String {
        format!("binary drift chain (p1={}, base={})", self.p1, self.base)
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let i = site.get(0);
        let p = self.p(i);
        let mut moves = vec![(Site::scalar(i + 1), p)];
        if i > 0 {
            moves.insert(0, (Site::scalar(i - 1), 1.0 - p));
        }
        ReproductionLaw::IndependentDiffusion { offspring: OffspringLaw::Finite(vec![0.25, 0.0, 0.75]), moves }
    }
    fn cap(&self) -> Option<u32> {
        Some(1000)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
    fn type_label(&self, _site: &Site) -> Option<u32> {
        Some(0)
    }
}

/// Geometric offspring with drift whose backward probabilities shrink faster than block sizes grow.
#[derive(Clone, Debug)]
pub struct GrowingDriftChain {
    mean: f64,
    p0: f64,
    /// `N_1, N_2, ...`
    pub n_seq: Vec<u64>,
    /// `ln prod_{j <= i} N_j` for `i = 0, 1, ...`
    pub log_block: Vec<f64>,
    /// Backward probabilities `1 - p_i`, `i >= 1` (index 0 unused).
    q: Vec<f64>,
    cap: u32,
}

impl GrowingDriftChain {
    pub fn new(mean: f64, p0: f64) -> Result<Self> {
        if !(mean > 1.0) || !(0.0..1.0).contains(&p0) || (1.0 - p0) * mean <= 1.0 {
            return Err(Error::Config("need mean > 1 and (1 - p0) mean > 1".into()));
        }
        let r = mean / (1.0 + mean);
        let mut n_seq = Vec::new();
        let mut log_block: Vec<f64> = vec![0.0];
        let mut q = vec![0.0];
        for i in 1..400usize {
            let log_alpha = (-(2f64.powi(-(i as i32 + 1)))).ln_1p();
            let lp = *log_block.last().expect("nonempty");
            let mut n = 1u64;
            while lp.exp() * (-(r.powi(n as i32 + 1))).ln_1p() <= log_alpha {
                n += 1;
            }
            n_seq.push(n);
            let next = lp + (n as f64).ln();
            let log_q = -2.0 * ((i + 1) as f64).ln() - lp;
            if log_q < -690.0 {
                break;
            }
            q.push(log_q.exp());
            log_block.push(next);
        }
        let cap = q.len() as u32 - 2;
        Ok(GrowingDriftChain { mean, p0, n_seq, log_block, q, cap })
    }

    /// `1 - p_i` for `i >= 1`.
    pub fn backward(&self, i: usize) -> f64 {
        self.q[i]
    }

    /// `prod_i rho([0, N_i])^(prod_{j<i} N_j)`, the chance that no block overshoots its size.
    pub fn product_condition(&self) -> f64 {
        let r = self.mean / (1.0 + self.mean);
        let log: f64 = self
            .n_seq
            .iter()
            .zip(&self.log_block)
            .map(|(n, lp)| lp.exp() * (-(r.powi(*n as i32 + 1))).ln_1p())
            .sum();
        log.exp()
    }

    /// Mean of the geometric offspring law.
    pub fn offspring_mean(&self) -> f64 {
        self.mean
    }
}

impl Structure for GrowingDriftChain {
    fn name(&self) -> String {
        format!("growing drift chain (mean={}, p0={})", self.mean, self.p0)
    }
    fn root(&self) -> Site {
        Site::scalar(0)
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let i = site.get(0);
        let moves = if i == 0 {
            vec![(Site::scalar(0), 1.0 - self.p0), (Site::scalar(1), self.p0)]
        } else {
            let q = self.q.get(i as usize).copied().unwrap_or(0.0);
            vec![(Site::scalar(i - 1), q), (Site::scalar(i + 1), 1.0 - q)]
        };
        ReproductionLaw::IndependentDiffusion { offspring: OffspringLaw::Geometric { mean: self.mean }, moves }
    }
    fn cap(&self) -> Option<u32> {
        Some(self.cap)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
    fn type_label(&self, _site: &Site) -> Option<u32> {
        Some(0)
    }
}

/// Two types: type 1 places `b` children on type 2 w.p. `rho(b)`; type 2 places one on type 1 w.p. `p`.
pub fn two_type_bp(rho: &[f64], p: f64) -> Result<BrwModel> {
    let (one, two) = (Site::scalar(1), Site::scalar(2));
    let law1 = explicit(
        rho.iter()
            .enumerate()
            .filter(|(_, r)| **r > 0.0)
            .map(|(b, r)| (*r, if b == 0 { vec![] } else { vec![(two.clone(), b as Count)] }))
            .collect(),
    );
    let law2 = explicit(vec![(p, vec![(one.clone(), 1)]), (1.0 - p, vec![])]);
    Ok(BrwModel::new(FiniteStructure::new("two-type branching process", one.clone(), vec![(one, law1), (two, law2)])?))
}

const SQUARE: i64 = 0;
const BRANCH: i64 = 1;
const SQUARE_LEAF: i64 = 2;
const BRANCH_LEAF: i64 = 3;

/// Four-cycle with a binary branch at each corner and a pendant edge at every non-leaf vertex.
///
/// Sites are `[kind, corner, depth, index]`.
#[derive(Clone, Debug)]
pub struct SquareTree {
    lambda: f64,
}

impl Structure for SquareTree {
    fn name(&self) -> String {
        format!("square-tree (lambda={})", self.lambda)
    }
    fn root(&self) -> Site {
        Site::new(&[SQUARE, 0, 0, 0])
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let (kind, j, k, i) = (site.get(0), site.get(1), site.get(2), site.get(3));
        let rates: Vec<(Site, f64)> = match kind {
            SQUARE => vec![
                (Site::new(&[SQUARE, (j + 3) % 4, 0, 0]), 1.0),
                (Site::new(&[SQUARE, (j + 1) % 4, 0, 0]), 1.0),
                (Site::new(&[BRANCH, j, 1, 0]), 1.0),
                (Site::new(&[SQUARE_LEAF, j, 0, 0]), 1.0),
            ],
            BRANCH => {
                let parent = if k == 1 { Site::new(&[SQUARE, j, 0, 0]) } else { Site::new(&[BRANCH, j, k - 1, i / 2]) };
                vec![
                    (parent, 1.0),
                    (Site::new(&[BRANCH, j, k + 1, 2 * i]), 1.0),
                    (Site::new(&[BRANCH, j, k + 1, 2 * i + 1]), 1.0),
                    (Site::new(&[BRANCH_LEAF, j, k, i]), 1.0),
                ]
            }
            SQUARE_LEAF => vec![(Site::new(&[SQUARE, j, 0, 0]), 1.0)],
            _ => vec![(Site::new(&[BRANCH, j, k, i]), 1.0)],
        };
        ReproductionLaw::ContinuousCounterpart { lambda: self.lambda, rates }
    }
    fn cap(&self) -> Option<u32> {
        Some(17)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        let corner = site.get(1).min(4 - site.get(1)) as u32;
        Some(match site.get(0) {
            SQUARE => corner,
            BRANCH => corner + site.get(2) as u32,
            SQUARE_LEAF => corner + 1,
            _ => corner + site.get(2) as u32 + 1,
        })
    }
    fn type_label(&self, site: &Site) -> Option<u32> {
        Some(if site.get(0) <= BRANCH { 0 } else { 1 })
    }
}
