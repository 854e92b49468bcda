use crate::model::{BrwModel, Lumping, ReproductionLaw, Site, Structure};
use crate::model::DEFAULT_VERTEX_BUDGET;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const TREE: i64 = 0;
const CLIQUE: i64 = 1;
const HALFLINE: i64 = 2;

/// Extra structure attached at the root of a tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Decoration {
    None,
    /// Self-rate `k_yy` at the root.
    Loop { rate: f64 },
    /// Complete graph of degree `k` joined to the root by one edge.
    Clique { k: u32 },
    /// The root is the endpoint of a half-line and keeps `d - 1` tree children.
    Halfline,
}

/// Rooted tree where a vertex at depth `k` has `children(k)` children, with edge-breeding rate 1.
#[derive(Clone, Debug)]
pub struct RadialTree {
    lambda: f64,
    root_children: u32,
    period: Vec<u32>,
    decoration: Decoration,
    cap: u32,
    name: String,
}

impl RadialTree {
    fn new(lambda: f64, root_children: u32, period: Vec<u32>, decoration: Decoration, name: String) -> Self {
        assert!(!period.is_empty() && period.iter().all(|c| *c >= 1), "every level needs a child");
        let mut t = RadialTree { lambda, root_children, period, decoration, cap: 0, name };
        let mut size: u128 = 1;
        let mut level: u128 = 1;
        let mut r = 0;
        loop {
            level = level.saturating_mul(t.children(r) as u128);
            size = size.saturating_add(level);
            if size > DEFAULT_VERTEX_BUDGET as u128 / 2 || r >= 4096 {
                break;
            }
            r += 1;
        }
        t.cap = r;
        t
    }

    fn children(&self, depth: u32) -> u32 {
        if depth == 0 {
            self.root_children
        } else {
            self.period[depth as usize % self.period.len()]
        }
    }

    fn root_extras(&self, rates: &mut Vec<(Site, f64)>, quotient: bool) {
        let root = Site::new(&[TREE, 0, 0]);
        let root = if quotient { Site::new(&[TREE, 0]) } else { root };
        match &self.decoration {
            Decoration::None => {}
            Decoration::Loop { rate } => rates.push((root, *rate)),
            Decoration::Clique { .. } => rates.push((Site::new(&[CLIQUE, 0]), 1.0)),
            Decoration::Halfline => rates.push((Site::new(&[HALFLINE, 1]), 1.0)),
        }
    }

    fn decoration_law(&self, site: &Site, quotient: bool) -> Vec<(Site, f64)> {
        let root = if quotient { Site::new(&[TREE, 0]) } else { Site::new(&[TREE, 0, 0]) };
        match site.get(0) {
            CLIQUE => {
                let Decoration::Clique { k } = self.decoration else { return Vec::new() };
                let j = site.get(1);
                let mut rates = Vec::new();
                if quotient {
                    if j == 0 {
                        rates.push((root, 1.0));
                        rates.push((Site::new(&[CLIQUE, 1]), k as f64));
                    } else {
                        rates.push((Site::new(&[CLIQUE, 0]), 1.0));
                        if k > 1 {
                            rates.push((Site::new(&[CLIQUE, 1]), (k - 1) as f64));
                        }
                    }
                } else {
                    if j == 0 {
                        rates.push((root, 1.0));
                    }
                    for other in 0..=k as i64 {
                        if other != j {
                            rates.push((Site::new(&[CLIQUE, other]), 1.0));
                        }
                    }
                }
                rates
            }
            HALFLINE => {
                let n = site.get(1);
                let back = if n == 1 { root } else { Site::new(&[HALFLINE, n - 1]) };
                vec![(back, 1.0), (Site::new(&[HALFLINE, n + 1]), 1.0)]
            }
            _ => Vec::new(),
        }
    }
}

impl Structure for RadialTree {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn root(&self) -> Site {
        Site::new(&[TREE, 0, 0])
    }

    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let rates = if site.get(0) == TREE {
            let (k, i) = (site.get(1) as u32, site.get(2));
            let mut rates = Vec::new();
            if k == 0 {
                self.root_extras(&mut rates, false);
            } else {
                let up = self.children(k - 1) as i64;
                rates.push((Site::new(&[TREE, k as i64 - 1, i / up]), 1.0));
            }
            let c = self.children(k) as i64;
            for j in 0..c {
                rates.push((Site::new(&[TREE, k as i64 + 1, i * c + j]), 1.0));
            }
            rates
        } else {
            self.decoration_law(site, false)
        };
        ReproductionLaw::ContinuousCounterpart { lambda: self.lambda, rates }
    }

    fn cap(&self) -> Option<u32> {
        Some(self.cap)
    }

    /// Vertex indices are packed into one `i64` per level; deeper levels are out of range.
    fn representable(&self, site: &Site) -> bool {
        if site.get(0) != TREE {
            return true;
        }
        let c = self.children(site.get(1) as u32) as i64;
        site.get(2).checked_mul(c).and_then(|v| v.checked_add(c)).is_some()
    }

    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(match site.get(0) {
            TREE => site.get(1) as u32,
            CLIQUE => 1 + (site.get(1) > 0) as u32,
            _ => site.get(1) as u32,
        })
    }

    fn type_label(&self, _site: &Site) -> Option<u32> {
        let homogeneous = self.decoration == Decoration::None
            && self.period.len() == 1
            && self.root_children == self.period[0] + 1;
        homogeneous.then_some(0)
    }

    fn lumping(&self) -> Option<Lumping> {
        Some(Lumping {
            quotient: Arc::new(RadialQuotient { tree: self.clone() }),
            key: Arc::new(|s: &Site| match s.get(0) {
                TREE => Site::new(&[TREE, s.get(1)]),
                CLIQUE => Site::new(&[CLIQUE, (s.get(1) > 0) as i64]),
                _ => s.clone(),
            }),
        })
    }
}

/// Depth quotient of a radial tree; the root stays a singleton cell.
#[derive(Clone, Debug)]
struct RadialQuotient {
    tree: RadialTree,
}

impl Structure for RadialQuotient {
    fn name(&self) -> String {
        format!("{} / depth", self.tree.name)
    }

    fn root(&self) -> Site {
        Site::new(&[TREE, 0])
    }

    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let rates = if site.get(0) == TREE {
            let k = site.get(1) as u32;
            let mut rates = Vec::new();
            if k == 0 {
                self.tree.root_extras(&mut rates, true);
            } else {
                rates.push((Site::new(&[TREE, k as i64 - 1]), 1.0));
            }
            rates.push((Site::new(&[TREE, k as i64 + 1]), self.tree.children(k) as f64));
            rates
        } else {
            self.tree.decoration_law(site, true)
        };
        ReproductionLaw::ContinuousCounterpart { lambda: self.tree.lambda, rates }
    }

    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(match site.get(0) {
            TREE => site.get(1) as u32,
            CLIQUE => 1 + site.get(1) as u32,
            _ => site.get(1) as u32,
        })
    }
}

/// Homogeneous tree of degree `d` with optional decoration at the root.
pub fn homogeneous_tree(d: u32, lambda: f64, decoration: Decoration) -> BrwModel {
    assert!(d >= 2, "tree degree must be at least 2");
    let root_children = if decoration == Decoration::Halfline { d - 1 } else { d };
    let name = format!("T_{d} edge-breeding (lambda={lambda}, decoration={decoration:?})");
    BrwModel::new(RadialTree::new(lambda, root_children, vec![d - 1], decoration, name))
}

/// Radial tree where a vertex at depth `k` has `period[k mod len]` children.
pub fn radial_tree(period: &[u32], lambda: f64) -> BrwModel {
    let name = format!("radial tree {period:?} edge-breeding (lambda={lambda})");
    BrwModel::new(RadialTree::new(lambda, period[0], period.to_vec(), Decoration::None, name))
}
