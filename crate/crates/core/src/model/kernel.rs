use super::{Ball, VertexId};
use crate::error::{Error, Result};
use std::io::Write;

/// Largest row sum accepted as bounded.
const MAX_ROW_SUM: f64 = 1e12;

/// First-moment matrix `m_xy = sum_f f(y) mu_x(f)` restricted to a ball.
///
/// Rows exist for inside vertices; columns range over all ball vertices, frontier included.
#[derive(Clone, Debug)]
pub struct MomentKernel {
    rows: Vec<Vec<(VertexId, f64)>>,
    dist: Vec<u32>,
    radius: Option<u32>,
    labels: Vec<String>,
    symmetric: bool,
}

/// Aggregates the first moments of every inside law of `ball`.
pub fn build_moment_kernel(ball: &Ball) -> Result<MomentKernel> {
    let mut rows = Vec::with_capacity(ball.inside_len());
    for v in 0..ball.inside_len() {
        let mut row: Vec<(VertexId, f64)> = ball.law(v).first_moments().into_iter().map(|(t, m)| (*t, m)).collect();
        row.sort_by_key(|(t, _)| *t);
        let mut merged: Vec<(VertexId, f64)> = Vec::with_capacity(row.len());
        for (t, m) in row {
            match merged.last_mut() {
                Some((u, acc)) if *u == t => *acc += m,
                _ => merged.push((t, m)),
            }
        }
        merged.retain(|(_, m)| *m > 0.0);
        let sum: f64 = merged.iter().map(|(_, m)| m).sum();
        if !sum.is_finite() || sum > MAX_ROW_SUM {
            return Err(Error::UnboundedRowSum { vertex: ball.label(v), sum });
        }
        rows.push(merged);
    }
    let labels = (0..ball.len()).map(|v| ball.label(v)).collect();
    let dist = (0..ball.len()).map(|v| ball.dist(v)).collect();
    let mut k = MomentKernel { rows, dist, radius: ball.radius(), labels, symmetric: false };
    k.symmetric = k.check_symmetric();
    Ok(k)
}

impl MomentKernel {
    /// Kernel of a dense finite nonnegative matrix; every vertex is inside.
    pub fn from_dense(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        let mut rows = Vec::with_capacity(n);
        for (i, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Invalid(format!("row {i} has length {} in a {n}x{n} matrix", r.len())));
            }
            if r.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Invalid(format!("row {i} has a negative or non-finite entry")));
            }
            rows.push(r.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(j, w)| (j, *w)).collect());
        }
        let mut k = MomentKernel {
            rows,
            dist: vec![0; n],
            radius: None,
            labels: (0..n).map(|i| i.to_string()).collect(),
            symmetric: false,
        };
        k.symmetric = k.check_symmetric();
        Ok(k)
    }

    fn check_symmetric(&self) -> bool {
        let n = self.rows.len();
        self.rows.iter().enumerate().all(|(x, row)| {
            row.iter().filter(|(y, _)| *y < n).all(|(y, m)| {
                let back = self.get(*y, x);
                (back - m).abs() <= 1e-15 * m.abs().max(back.abs())
            })
        })
    }

    /// Number of rows (inside vertices).
    pub fn inside_len(&self) -> usize {
        self.rows.len()
    }

    /// Number of columns (all ball vertices).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, x: VertexId) -> &[(VertexId, f64)] {
        &self.rows[x]
    }

    pub fn get(&self, x: VertexId, y: VertexId) -> f64 {
        match self.rows[x].binary_search_by_key(&y, |(t, _)| *t) {
            Ok(i) => self.rows[x][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, x: VertexId) -> f64 {
        self.rows[x].iter().map(|(_, m)| m).sum()
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows.len()).map(|x| self.row_sum(x)).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dist(&self, v: VertexId) -> u32 {
        self.dist[v]
    }

    pub fn radius(&self) -> Option<u32> {
        self.radius
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    /// Radius needed so that every path of `steps` steps from `x` only uses inside rows.
    pub fn require_horizon(&self, x: VertexId, steps: usize) -> Result<()> {
        let Some(r) = self.radius else { return Ok(()) };
        let needed = (self.dist[x] as u64 + steps as u64).saturating_sub(1);
        if needed > r as u64 {
            return Err(Error::HorizonExceedsBall { needed: needed.min(u32::MAX as u64) as u32, radius: r });
        }
        Ok(())
    }

    /// Restriction to `vertices` (reindexed in the given order), dropping every other column.
    pub fn restrict(&self, vertices: &[VertexId]) -> MomentKernel {
        let mut pos = std::collections::HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            pos.insert(*v, i);
        }
        let rows = vertices
            .iter()
            .map(|v| {
                if *v >= self.rows.len() {
                    return Vec::new();
                }
                let mut r: Vec<(VertexId, f64)> =
                    self.rows[*v].iter().filter_map(|(t, m)| pos.get(t).map(|j| (*j, *m))).collect();
                r.sort_by_key(|(t, _)| *t);
                r
            })
            .collect();
        let mut k = MomentKernel {
            rows,
            dist: vec![0; vertices.len()],
            radius: None,
            labels: vertices.iter().map(|v| self.labels[*v].clone()).collect(),
            symmetric: false,
        };
        k.symmetric = k.check_symmetric();
        k
    }

    /// Dense copy of the square inside block.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        let mut d = vec![vec![0.0; n]; n];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, m) in row {
                if *y < n {
                    d[x][*y] = *m;
                }
            }
        }
        d
    }

    /// One step of `u -> u M` on row vectors indexed by all vertices.
    pub fn push_forward(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (x, row) in self.rows.iter().enumerate() {
            let w = u[x];
            if w == 0.0 {
                continue;
            }
            for (y, m) in row {
                out[*y] += w * m;
            }
        }
    }

    /// `(M v)(x)` for inside `x`.
    pub fn apply_at(&self, x: VertexId, v: &[f64]) -> f64 {
        self.rows[x].iter().map(|(y, m)| m * v[*y]).sum()
    }

    /// Coordinate list with columns `src,dst,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "src,dst,value")?;
        for (x, row) in self.rows.iter().enumerate() {
            for (y, m) in row {
                writeln!(w, "{x},{y},{m}")?;
            }
        }
        Ok(())
    }
}
