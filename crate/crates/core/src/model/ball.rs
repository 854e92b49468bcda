use super::{ReproductionLaw, Site, Structure};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

/// Dense vertex id, assigned in BFS order from the root.
pub type VertexId = usize;

/// Distance recorded for vertices of a finite space not reachable from the root.
pub const UNREACHED: u32 = u32::MAX;

pub const DEFAULT_VERTEX_BUDGET: usize = 4_000_000;

/// Materialized region of a space.
///
/// Vertices `0..inside_len()` carry laws. The remaining vertices form the frontier: they are
/// targets of inside laws but lie one step beyond the radius, and callers pin their values.
#[derive(Clone)]
pub struct Ball {
    structure: Arc<dyn Structure>,
    radius: Option<u32>,
    sites: Vec<Site>,
    index: HashMap<Site, VertexId>,
    dist: Vec<u32>,
    laws: Vec<ReproductionLaw<VertexId>>,
    issues: Vec<Option<String>>,
}

impl std::fmt::Debug for Ball {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ball")
            .field("space", &self.structure.name())
            .field("radius", &self.radius)
            .field("inside", &self.laws.len())
            .field("total", &self.sites.len())
            .finish()
    }
}

impl Ball {
    pub(super) fn explore(
        structure: Arc<dyn Structure>,
        radius: Option<u32>,
        include_unreached: bool,
        budget: usize,
    ) -> Result<Ball> {
        let mut ball = Ball {
            structure: structure.clone(),
            radius,
            sites: Vec::new(),
            index: HashMap::new(),
            dist: Vec::new(),
            laws: Vec::new(),
            issues: Vec::new(),
        };
        ball.intern(&structure.root(), 0);
        let mut pending = include_unreached.then(|| structure.finite_sites().unwrap_or_default().into_iter());
        loop {
            while ball.laws.len() < ball.sites.len() {
                let v = ball.laws.len();
                let d = ball.dist[v];
                if matches!(radius, Some(r) if d > r) {
                    break;
                }
                let law = structure.law(&ball.sites[v]);
                ball.issues.push(law.normalization_issue());
                let law = law.pruned();
                let next = d.saturating_add(1);
                let mapped = law.map_targets(|t| ball.intern(t, next));
                ball.laws.push(mapped);
                if ball.sites.len() > budget {
                    return Err(Error::VertexBudget { radius: radius.unwrap_or(UNREACHED), budget });
                }
            }
            if ball.laws.len() < ball.sites.len() {
                break;
            }
            let Some(iter) = pending.as_mut() else { break };
            match iter.find(|s| !ball.index.contains_key(s)) {
                Some(s) => {
                    ball.intern(&s, UNREACHED);
                }
                None => break,
            }
        }
        Ok(ball)
    }

    fn intern(&mut self, site: &Site, dist: u32) -> VertexId {
        if let Some(&id) = self.index.get(site) {
            return id;
        }
        let id = self.sites.len();
        self.sites.push(site.clone());
        self.index.insert(site.clone(), id);
        self.dist.push(dist);
        id
    }

    pub fn structure(&self) -> &Arc<dyn Structure> {
        &self.structure
    }

    /// Radius of the ball; `None` for the whole of a finite space.
    pub fn radius(&self) -> Option<u32> {
        self.radius
    }

    /// Number of vertices including the frontier.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Number of vertices carrying laws.
    pub fn inside_len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_inside(&self, v: VertexId) -> bool {
        v < self.laws.len()
    }

    pub fn frontier(&self) -> Range<VertexId> {
        self.laws.len()..self.sites.len()
    }

    /// True when no frontier vertex exists, so every law target is materialized.
    pub fn is_closed(&self) -> bool {
        self.laws.len() == self.sites.len()
    }

    pub fn site(&self, v: VertexId) -> &Site {
        &self.sites[v]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn id(&self, site: &Site) -> Option<VertexId> {
        self.index.get(site).copied()
    }

    pub fn require(&self, site: &Site) -> Result<VertexId> {
        self.id(site).ok_or_else(|| Error::UnknownVertex(site.to_string()))
    }

    pub fn label(&self, v: VertexId) -> String {
        self.structure.label(&self.sites[v])
    }

    pub fn dist(&self, v: VertexId) -> u32 {
        self.dist[v]
    }

    pub fn max_finite_distance(&self) -> u32 {
        self.dist.iter().copied().filter(|d| *d != UNREACHED).max().unwrap_or(0)
    }

    pub fn law(&self, v: VertexId) -> &ReproductionLaw<VertexId> {
        &self.laws[v]
    }

    pub fn normalization_issue(&self, v: VertexId) -> Option<&str> {
        self.issues[v].as_deref()
    }

    /// Sorted distinct out-neighbours in the offspring graph.
    pub fn out_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut n: Vec<VertexId> = self.laws[v].targets().into_iter().copied().collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// Inside vertex whose out-neighbours are all inside.
    pub fn is_interior(&self, v: VertexId) -> bool {
        self.is_inside(v) && self.laws[v].targets().into_iter().all(|t| self.is_inside(*t))
    }

    /// `G(z|v)` for a vector indexed by all ball vertices, frontier included.
    pub fn eval_g(&self, v: VertexId, z: &[f64]) -> f64 {
        self.laws[v].eval(|t| z[*t])
    }
}
