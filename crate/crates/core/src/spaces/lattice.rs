use crate::model::{BrwModel, Lumping, ReproductionLaw, Site, Structure};
use std::sync::Arc;

/// Nearest-neighbour edge-breeding on `Z^d` with rate 1 per edge.
#[derive(Clone, Debug)]
pub struct Lattice {
    d: usize,
    lambda: f64,
}

impl Structure for Lattice {
    fn name(&self) -> String {
        format!("Z^{} edge-breeding (lambda={})", self.d, self.lambda)
    }

    fn root(&self) -> Site {
        Site::new(&vec![0; self.d])
    }

    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let mut rates = Vec::with_capacity(2 * self.d);
        for i in 0..self.d {
            for s in [-1, 1] {
                let mut c = site.clone();
                c.0[i] += s;
                rates.push((c, 1.0));
            }
        }
        ReproductionLaw::ContinuousCounterpart { lambda: self.lambda, rates }
    }

    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.coords().iter().map(|c| c.unsigned_abs() as u32).sum())
    }

    fn type_label(&self, _site: &Site) -> Option<u32> {
        Some(0)
    }

    fn lumping(&self) -> Option<Lumping> {
        (self.d == 1).then(|| Lumping {
            quotient: Arc::new(FoldedLine { lambda: self.lambda }),
            key: Arc::new(|s: &Site| Site::scalar(s.get(0).abs())),
        })
    }
}

/// `Z` folded at the origin: `|x|` with rate 2 out of 0.
#[derive(Clone, Debug)]
struct FoldedLine {
    lambda: f64,
}

impl Structure for FoldedLine {
    fn name(&self) -> String {
        format!("|Z| edge-breeding quotient (lambda={})", self.lambda)
    }

    fn root(&self) -> Site {
        Site::scalar(0)
    }

    fn law(&self, site: &Site) -> ReproductionLaw<Site> {
        let n = site.get(0);
        let rates = if n == 0 {
            vec![(Site::scalar(1), 2.0)]
        } else {
            vec![(Site::scalar(n - 1), 1.0), (Site::scalar(n + 1), 1.0)]
        };
        ReproductionLaw::ContinuousCounterpart { lambda: self.lambda, rates }
    }

    fn distance_hint(&self, site: &Site) -> Option<u32> {
        Some(site.get(0) as u32)
    }
}

/// Edge-breeding walk on the integer lattice of dimension `d`.
pub fn lattice_zd(d: usize, lambda: f64) -> BrwModel {
    assert!(d >= 1, "lattice dimension must be positive");
    BrwModel::new(Lattice { d, lambda })
}
