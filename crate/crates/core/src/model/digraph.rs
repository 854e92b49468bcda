use super::{build_moment_kernel, Ball, BrwModel, MomentKernel, VertexId};
use crate::error::{Error, Result};
use serde::Serialize;

/// One irreducible class of the offspring graph restricted to a ball.
#[derive(Clone, Debug, Serialize)]
pub struct ClassInfo {
    pub members: Vec<VertexId>,
    /// Greatest common divisor of cycle lengths; `None` when the class carries no cycle.
    pub period: Option<u32>,
    /// Some member has an out-edge into the frontier, so the class may extend beyond the ball.
    pub touches_boundary: bool,
    /// Classes directly reachable by one edge.
    pub successors: Vec<usize>,
}

impl ClassInfo {
    pub fn has_cycle(&self) -> bool {
        self.period.is_some()
    }
}

/// Strongly connected classes, periods and reachability of a ball.
#[derive(Clone, Debug, Serialize)]
pub struct DigraphReport {
    pub classes: Vec<ClassInfo>,
    pub class_of: Vec<usize>,
}

impl DigraphReport {
    /// Classes reachable from `class`, itself included, in increasing order.
    pub fn reachable_from(&self, class: usize) -> Vec<usize> {
        let mut seen = vec![false; self.classes.len()];
        let mut stack = vec![class];
        seen[class] = true;
        while let Some(c) = stack.pop() {
            for &s in &self.classes[c].successors {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        (0..seen.len()).filter(|c| seen[*c]).collect()
    }

    pub fn class_of_vertex(&self, v: VertexId) -> &ClassInfo {
        &self.classes[self.class_of[v]]
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Tarjan's algorithm over inside vertices; frontier edges are recorded but not followed.
pub fn analyze_digraph(ball: &Ball) -> DigraphReport {
    let adj: Vec<Vec<VertexId>> = (0..ball.inside_len()).map(|v| ball.out_neighbors(v)).collect();
    analyze_adjacency(&adj)
}

/// Same analysis on the support of a kernel; targets without a row count as frontier.
pub fn analyze_kernel(kernel: &MomentKernel) -> DigraphReport {
    let adj: Vec<Vec<VertexId>> =
        (0..kernel.inside_len()).map(|v| kernel.row(v).iter().filter(|(_, m)| *m > 0.0).map(|(y, _)| *y).collect()).collect();
    analyze_adjacency(&adj)
}

/// Vertices `0..adj.len()` are inside; any larger target is treated as frontier.
pub fn analyze_adjacency(adj: &[Vec<VertexId>]) -> DigraphReport {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<VertexId>> = Vec::new();
    let mut counter = 0;
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        let mut call: Vec<(VertexId, usize)> = vec![(start, 0)];
        index[start] = counter;
        low[start] = counter;
        counter += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < adj[v].len() {
                let w = adj[v][top.1];
                top.1 += 1;
                if w >= n {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut members = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        members.push(w);
                        if w == v {
                            break;
                        }
                    }
                    members.sort_unstable();
                    comps.push(members);
                }
            }
        }
    }
    comps.sort_by_key(|m| m[0]);
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp[v] = c;
        }
    }
    let classes = comps
        .into_iter()
        .enumerate()
        .map(|(c, members)| {
            let mut level = std::collections::HashMap::new();
            level.insert(members[0], 0i64);
            let mut queue = std::collections::VecDeque::from([members[0]]);
            let mut period = 0u32;
            let mut touches_boundary = false;
            let mut successors = Vec::new();
            while let Some(u) = queue.pop_front() {
                let lu = level[&u];
                for &w in &adj[u] {
                    if w >= n {
                        touches_boundary = true;
                        continue;
                    }
                    if comp[w] != c {
                        successors.push(comp[w]);
                        continue;
                    }
                    match level.get(&w) {
                        Some(&lw) => period = gcd(period, (lu + 1 - lw).unsigned_abs() as u32),
                        None => {
                            level.insert(w, lu + 1);
                            queue.push_back(w);
                        }
                    }
                }
            }
            successors.sort_unstable();
            successors.dedup();
            ClassInfo { members, period: (period > 0).then_some(period), touches_boundary, successors }
        })
        .collect();
    DigraphReport { classes, class_of: comp }
}

/// Status of one class under the non-degeneracy requirement.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum ClassStatus {
    /// Fully inside the ball and some member places a number of class children other than one.
    Satisfied,
    /// The class reaches the frontier; the check is deferred.
    BoundaryFlagged,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub radius: Option<u32>,
    pub vertices: usize,
    pub inside: usize,
    pub classes: usize,
    pub boundary_flagged: usize,
    pub max_row_sum: f64,
    pub symmetric: bool,
    pub class_status: Vec<ClassStatus>,
}

/// Checks normalization, bounded row sums and non-degeneracy of every class inside `B(root, radius)`.
pub fn validate_model(model: &BrwModel, radius: u32) -> Result<ValidationReport> {
    let ball = model.region(radius)?;
    for v in 0..ball.inside_len() {
        if let Some(issue) = ball.normalization_issue(v) {
            return Err(Error::Normalization { vertex: ball.label(v), detail: issue.to_string() });
        }
    }
    let kernel = build_moment_kernel(&ball)?;
    let graph = analyze_digraph(&ball);
    let mut class_status = Vec::with_capacity(graph.classes.len());
    for (c, class) in graph.classes.iter().enumerate() {
        if class.touches_boundary {
            class_status.push(ClassStatus::BoundaryFlagged);
            continue;
        }
        let degenerate = class.members.iter().all(|&y| {
            let p = ball.law(y).prob_exactly_one_in(|t| *t < ball.inside_len() && graph.class_of[*t] == c);
            p >= 1.0 - 1e-12
        });
        if degenerate {
            return Err(Error::DegenerateClass { class: class.members.iter().map(|v| ball.label(*v)).collect() });
        }
        class_status.push(ClassStatus::Satisfied);
    }
    Ok(ValidationReport {
        model: model.name(),
        radius: ball.radius(),
        vertices: ball.len(),
        inside: ball.inside_len(),
        classes: graph.classes.len(),
        boundary_flagged: class_status.iter().filter(|s| **s == ClassStatus::BoundaryFlagged).count(),
        max_row_sum: kernel.max_row_sum(),
        symmetric: kernel.is_symmetric(),
        class_status,
    })
}
