//! Vertex spaces, reproduction laws, moment kernels and structural checks.

mod ball;
mod digraph;
mod kernel;
mod law;
mod projection;
mod site;

pub use ball::{Ball, VertexId, DEFAULT_VERTEX_BUDGET, UNREACHED};
pub use digraph::{analyze_adjacency, analyze_digraph, analyze_kernel, validate_model, ClassInfo, ClassStatus, DigraphReport, ValidationReport};
pub use kernel::{build_moment_kernel, MomentKernel};
pub use law::{Count, OffspringConfig, OffspringLaw, Outcome, ReproductionLaw, NORMALIZATION_TOL};
pub use projection::{project_local_isomorphism, Projection};
pub use site::Site;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// A countable vertex set together with one reproduction law per vertex.
///
/// Finite spaces list their sites; lazy spaces generate laws on demand from a root.
pub trait Structure: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn root(&self) -> Site;
    fn law(&self, site: &Site) -> ReproductionLaw<Site>;

    fn label(&self, site: &Site) -> String {
        site.to_string()
    }

    /// All sites, for finite spaces.
    fn finite_sites(&self) -> Option<Vec<Site>> {
        None
    }

    /// Largest ball radius the space agrees to materialize.
    fn cap(&self) -> Option<u32> {
        None
    }

    /// Whether the law at `site` is representable; simulations stop once a particle leaves this set.
    fn representable(&self, _site: &Site) -> bool {
        true
    }

    /// Graph distance from the root, when it is cheap to compute.
    fn distance_hint(&self, _site: &Site) -> Option<u32> {
        None
    }

    /// Canonical type label for a finite local-isomorphism projection, when one is known.
    fn type_label(&self, _site: &Site) -> Option<u32> {
        None
    }

    /// Exact quotient by an equitable partition in which the root is a singleton cell.
    fn lumping(&self) -> Option<Lumping> {
        None
    }
}

/// Quotient of a space by an equitable partition with the root in its own cell.
///
/// Return moments at the root, total moments from the root and extinction probabilities of
/// unions of cells are identical on the quotient.
#[derive(Clone)]
pub struct Lumping {
    pub quotient: Arc<dyn Structure>,
    pub key: Arc<dyn Fn(&Site) -> Site + Send + Sync>,
}

impl fmt::Debug for Lumping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lumping").field("quotient", &self.quotient.name()).finish()
    }
}

/// Finite space given by an explicit law table.
#[derive(Clone, Debug)]
pub struct FiniteStructure {
    name: String,
    root: Site,
    order: Vec<Site>,
    laws: HashMap<Site, ReproductionLaw<Site>>,
    labels: HashMap<Site, String>,
}

impl FiniteStructure {
    pub fn new(name: impl Into<String>, root: Site, entries: Vec<(Site, ReproductionLaw<Site>)>) -> Result<Self> {
        let mut order = Vec::with_capacity(entries.len());
        let mut laws = HashMap::with_capacity(entries.len());
        for (site, law) in entries {
            if laws.contains_key(&site) {
                return Err(Error::ModelRejected(format!("duplicate vertex {site}")));
            }
            order.push(site.clone());
            laws.insert(site, law);
        }
        if !laws.contains_key(&root) {
            return Err(Error::ModelRejected(format!("root {root} is not a vertex")));
        }
        for (site, law) in &laws {
            if let Some(t) = law.targets().into_iter().find(|t| !laws.contains_key(*t)) {
                return Err(Error::ModelRejected(format!("law at {site} places children at unknown vertex {t}")));
            }
        }
        Ok(FiniteStructure { name: name.into(), root, order, laws, labels: HashMap::new() })
    }

    pub fn with_labels(mut self, labels: HashMap<Site, String>) -> Self {
        self.labels = labels;
        self
    }
}

impl Structure for FiniteStructure {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn root(&self) -> Site {
        self.root.clone()
    }

    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        self.laws.get(site).cloned().unwrap_or_else(ReproductionLaw::null)
    }

    fn label(&self, site: &Site) -> String {
        self.labels.get(site).cloned().unwrap_or_else(|| site.to_string())
    }

    fn finite_sites(&self) -> Option<Vec<Site>> {
        Some(self.order.clone())
    }
}

/// Per-placement acceptance probabilities of a restrained walk.
///
/// `probs[k]` is the probability that a child is accepted at a site already holding `k`
/// particles in the generation being built; the last entry repeats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    probs: Vec<f64>,
}

impl Acceptance {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs[0] != 1.0 {
            return Err(Error::Invalid("acceptance must start at 1 on empty sites".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Invalid("acceptance must be nonincreasing in [0,1]".into()));
        }
        Ok(Acceptance { probs })
    }

    pub fn prob(&self, occupancy: u64) -> f64 {
        let i = (occupancy as usize).min(self.probs.len() - 1);
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A branching random walk: a space with laws, plus optional truncation and restraint.
#[derive(Clone)]
pub struct BrwModel {
    structure: Arc<dyn Structure>,
    truncation: Option<u64>,
    acceptance: Option<Acceptance>,
    vertex_budget: usize,
}

impl fmt::Debug for BrwModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BrwModel")
            .field("structure", &self.structure.name())
            .field("truncation", &self.truncation)
            .field("acceptance", &self.acceptance)
            .finish()
    }
}

impl BrwModel {
    pub fn new(structure: impl Structure + 'static) -> Self {
        Self::from_arc(Arc::new(structure))
    }

    pub fn from_arc(structure: Arc<dyn Structure>) -> Self {
        BrwModel { structure, truncation: None, acceptance: None, vertex_budget: DEFAULT_VERTEX_BUDGET }
    }

    /// Caps the number of particles per site after each generation.
    pub fn with_truncation(mut self, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("truncation level must be positive".into()));
        }
        self.truncation = Some(m);
        Ok(self)
    }

    pub fn with_acceptance(mut self, acceptance: Acceptance) -> Self {
        self.acceptance = Some(acceptance);
        self
    }

    pub fn with_vertex_budget(mut self, budget: usize) -> Self {
        self.vertex_budget = budget;
        self
    }

    pub fn structure(&self) -> &Arc<dyn Structure> {
        &self.structure
    }

    pub fn name(&self) -> String {
        self.structure.name()
    }

    pub fn truncation(&self) -> Option<u64> {
        self.truncation
    }

    pub fn acceptance(&self) -> Option<&Acceptance> {
        self.acceptance.as_ref()
    }

    pub fn root(&self) -> Site {
        self.structure.root()
    }

    pub fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        self.structure.law(site)
    }

    pub fn label(&self, site: &Site) -> String {
        self.structure.label(site)
    }

    pub fn is_finite(&self) -> bool {
        self.structure.finite_sites().is_some()
    }

    /// Exact out-ball of `radius` around the root, ids in BFS order.
    pub fn ball(&self, radius: u32) -> Result<Ball> {
        if let Some(cap) = self.structure.cap() {
            if radius > cap {
                return Err(Error::RadiusCap { requested: radius, cap });
            }
        }
        Ball::explore(self.structure.clone(), Some(radius), false, self.vertex_budget)
    }

    /// Every vertex of a finite space, unreachable ones appended after the root's component.
    pub fn whole(&self) -> Result<Ball> {
        if !self.is_finite() {
            return Err(Error::Precondition(format!("{} is not a finite space", self.name())));
        }
        Ball::explore(self.structure.clone(), None, true, self.vertex_budget)
    }

    /// Ball of `radius`, or the whole space when it is finite and smaller.
    pub fn region(&self, radius: u32) -> Result<Ball> {
        if self.is_finite() {
            let whole = self.whole()?;
            if whole.max_finite_distance() <= radius {
                return Ok(whole);
            }
        }
        self.ball(radius)
    }

    /// Exact equitable quotient, when the space provides one.
    pub fn lumped(&self) -> Option<BrwModel> {
        self.structure.lumping().map(|l| BrwModel {
            structure: l.quotient,
            truncation: None,
            acceptance: None,
            vertex_budget: self.vertex_budget,
        })
    }

    /// Replaces continuous-time rates by the geometric/diffusion counterpart law.
    pub fn discrete_counterpart(&self) -> BrwModel {
        BrwModel {
            structure: Arc::new(Counterpart { inner: self.structure.clone() }),
            truncation: self.truncation,
            acceptance: self.acceptance.clone(),
            vertex_budget: self.vertex_budget,
        }
    }

    /// Same process with balls grown around `root`; lumping is dropped.
    pub fn with_root(&self, root: Site) -> BrwModel {
        if root == self.root() {
            return self.clone();
        }
        BrwModel {
            structure: Arc::new(Rerooted { inner: self.structure.clone(), root }),
            truncation: self.truncation,
            acceptance: self.acceptance.clone(),
            vertex_budget: self.vertex_budget,
        }
    }

    /// Infection parameter at the root, when the root law is given by rates.
    pub fn lambda(&self) -> Option<f64> {
        match self.structure.law(&self.structure.root()) {
            ReproductionLaw::ContinuousCounterpart { lambda, .. } => Some(lambda),
            _ => None,
        }
    }
}

/// Discrete-time counterpart of a continuous-time space.
#[derive(Debug)]
struct Counterpart {
    inner: Arc<dyn Structure>,
}

impl Structure for Counterpart {
    fn name(&self) -> String {
        format!("{} (discrete counterpart)", self.inner.name())
    }
    fn root(&self) -> Site {
        self.inner.root()
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        self.inner.law(site).to_discrete_counterpart()
    }
    fn label(&self, site: &Site) -> String {
        self.inner.label(site)
    }
    fn finite_sites(&self) -> Option<Vec<Site>> {
        self.inner.finite_sites()
    }
    fn cap(&self) -> Option<u32> {
        self.inner.cap()
    }
    fn representable(&self, site: &Site) -> bool {
        self.inner.representable(site)
    }
    fn distance_hint(&self, site: &Site) -> Option<u32> {
        self.inner.distance_hint(site)
    }
    fn type_label(&self, site: &Site) -> Option<u32> {
        self.inner.type_label(site)
    }
    fn lumping(&self) -> Option<Lumping> {
        self.inner.lumping().map(|l| Lumping {
            quotient: Arc::new(Counterpart { inner: l.quotient }),
            key: l.key,
        })
    }
}

#[derive(Debug)]
struct Rerooted {
    inner: Arc<dyn Structure>,
    root: Site,
}

impl Structure for Rerooted {
    fn name(&self) -> String {
        format!("{} (rooted at {})", self.inner.name(), self.inner.label(&self.root))
    }
    fn root(&self) -> Site {
        self.root.clone()
    }
    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        self.inner.law(site)
    }
    fn label(&self, site: &Site) -> String {
        self.inner.label(site)
    }
    fn finite_sites(&self) -> Option<Vec<Site>> {
        self.inner.finite_sites()
    }
    fn representable(&self, site: &Site) -> bool {
        self.inner.representable(site)
    }
    fn cap(&self) -> Option<u32> {
        let cap = self.inner.cap()?;
        Some(cap.saturating_sub(self.inner.distance_hint(&self.root).unwrap_or(0)))
    }
    fn type_label(&self, site: &Site) -> Option<u32> {
        self.inner.type_label(site)
    }
}

/// Convenience: single-vertex Galton-Watson model with offspring probabilities `probs`.
pub fn galton_watson(probs: &[f64]) -> BrwModel {
    let root = Site::scalar(0);
    let outcomes = probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| Outcome {
            prob: *p,
            config: OffspringConfig { children: if i == 0 { vec![] } else { vec![(root.clone(), i as Count)] } },
        })
        .collect();
    let s = FiniteStructure::new("galton-watson", root.clone(), vec![(root, ReproductionLaw::Explicit(outcomes))])
        .expect("single vertex table is consistent");
    BrwModel::new(s)
}
