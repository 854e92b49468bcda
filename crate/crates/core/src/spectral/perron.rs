use crate::error::{Error, Result};
use crate::model::{analyze_kernel, MomentKernel, VertexId};
use serde::Serialize;

/// Perron root with its Collatz-Wielandt bracket.
#[derive(Clone, Debug, Serialize)]
pub struct PerronRoot {
    pub value: f64,
    /// `min_i (Mv)_i / v_i`, a certified lower bound.
    pub lower: f64,
    /// `max_i (Mv)_i / v_i`, a certified upper bound.
    pub upper: f64,
    /// Right eigenvector, normalized to maximum 1.
    pub vector: Vec<f64>,
    /// `||Mv - value v||_inf` with `||v||_inf = 1`.
    pub residual: f64,
    pub iterations: usize,
    pub period: Option<u32>,
    pub converged: bool,
}

pub const DEFAULT_PERRON_TOL: f64 = 1e-12;
const DEFAULT_WORK: usize = 400_000_000;

/// Perron root of a finite irreducible nonnegative matrix.
///
/// Shifted power iteration `v <- (M + s I) v` from the all-ones vector damps the rotating part of
/// the spectrum of periodic matrices; stops once the bracket width is below `tol * upper`.
pub fn perron_root(kernel: &MomentKernel, tol: f64) -> Result<PerronRoot> {
    if kernel.inside_len() != kernel.len() {
        return Err(Error::Invalid("Perron root needs a square kernel without frontier".into()));
    }
    let report = analyze_kernel(kernel);
    if report.classes.len() != 1 {
        return Err(Error::Reducible);
    }
    let period = report.classes[0].period;
    let root = power_iteration(kernel, tol, DEFAULT_WORK);
    Ok(PerronRoot { period, ..root })
}

/// Power iteration on a square kernel assumed irreducible; bounded by `work` row operations.
pub(crate) fn power_iteration(kernel: &MomentKernel, tol: f64, work: usize) -> PerronRoot {
    let n = kernel.len();
    let nnz: usize = (0..n).map(|x| kernel.row(x).len()).sum::<usize>().max(1);
    let max_iter = (work / (nnz + n)).max(1000);
    let shift = kernel.max_row_sum();
    if n == 0 || shift == 0.0 {
        let mut vector = vec![0.0; n];
        if n > 0 {
            vector[0] = 1.0;
        }
        return PerronRoot { value: 0.0, lower: 0.0, upper: 0.0, vector, residual: 0.0, iterations: 0, period: None, converged: true };
    }
    let mut v = vec![1.0; n];
    let mut mv = vec![0.0; n];
    let (mut lower, mut upper) = (0.0, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        apply(kernel, &v, &mut mv);
        let (lo, hi) = bracket(&v, &mv);
        lower = lo;
        upper = hi;
        if hi - lo <= tol * hi {
            converged = true;
            break;
        }
        let mut max = 0.0f64;
        for i in 0..n {
            v[i] = mv[i] + shift * v[i];
            max = max.max(v[i]);
        }
        v.iter_mut().for_each(|x| *x /= max);
    }
    apply(kernel, &v, &mut mv);
    let value = 0.5 * (lower + upper);
    let residual = v.iter().zip(&mv).map(|(a, b)| (b - value * a).abs()).fold(0.0, f64::max);
    PerronRoot { value, lower, upper, vector: v, residual, iterations, period: None, converged }
}

fn apply(kernel: &MomentKernel, v: &[f64], out: &mut [f64]) {
    for (x, o) in out.iter_mut().enumerate() {
        *o = kernel.apply_at(x, v);
    }
}

fn bracket(v: &[f64], mv: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (a, b) in v.iter().zip(mv) {
        if *a <= 0.0 {
            lo = 0.0;
            hi = f64::INFINITY;
            continue;
        }
        let r = b / a;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

/// Perron root of the class of `x` inside `vertices`, zero when that class carries no cycle.
pub(crate) fn class_perron(kernel: &MomentKernel, vertices: &[VertexId], x: VertexId, tol: f64, work: usize) -> (PerronRoot, usize) {
    let window = kernel.restrict(vertices);
    let local = vertices.iter().position(|v| *v == x).expect("x lies in its window");
    let report = analyze_kernel(&window);
    let class = report.class_of_vertex(local);
    if !class.has_cycle() {
        let zero = PerronRoot { value: 0.0, lower: 0.0, upper: 0.0, vector: vec![1.0], residual: 0.0, iterations: 0, period: None, converged: true };
        return (zero, class.members.len());
    }
    let sub = window.restrict(&class.members);
    let mut root = power_iteration(&sub, tol, work);
    root.period = class.period;
    (root, class.members.len())
}

pub(crate) const WINDOW_WORK: usize = 30_000_000;
const WINDOW_VERTEX_LIMIT: usize = 20_000;

/// Certified lower bound on `M_s(x,x)` from Perron roots of growing windows around `x`.
///
/// Any finite window gives `m^(n)_{xx} >= (M_W^n)_{xx}`, so its class Perron root bounds the return
/// growth rate from below; windows are out-balls of radius `4, 8, ...` up to `max_radius`.
pub fn window_lower_bound(kernel: &MomentKernel, x: VertexId, max_radius: usize) -> f64 {
    let dist = out_distances(kernel, x);
    let mut best = 0.0f64;
    let mut r = 4usize;
    loop {
        let r_eff = r.min(max_radius);
        let window: Vec<VertexId> = (0..kernel.inside_len()).filter(|v| dist[*v] <= r_eff).collect();
        if window.len() > WINDOW_VERTEX_LIMIT {
            break;
        }
        let (root, _) = class_perron(kernel, &window, x, 1e-10, WINDOW_WORK);
        best = best.max(root.lower);
        if !root.converged || r_eff >= max_radius {
            break;
        }
        r *= 2;
    }
    best
}

/// BFS distances along kernel rows; `usize::MAX` when unreachable.
pub(crate) fn out_distances(kernel: &MomentKernel, x: VertexId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; kernel.len()];
    dist[x] = 0;
    let mut queue = std::collections::VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        if u >= kernel.inside_len() {
            continue;
        }
        for (w, m) in kernel.row(u) {
            if *m > 0.0 && dist[*w] == usize::MAX {
                dist[*w] = dist[u] + 1;
                queue.push_back(*w);
            }
        }
    }
    dist
}
