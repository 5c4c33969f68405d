//! Exact solver for the balanced transportation problem
//!
//! ```text
//! min sum c_ij x_ij   s.t.  sum_j x_ij = a_i,  sum_i x_ij = b_j,  x >= 0,
//! ```
//!
//! by the transportation simplex on a spanning-tree basis. Marginals are
//! perturbed during pivoting to keep the basis nondegenerate (no cycling);
//! flows are re-solved on the final tree against the unperturbed marginals, so
//! reported plans are exact. Optimality is certified by the dual potentials:
//! every reduced cost `c_ij - u_i - v_j` is nonnegative up to the pivot
//! tolerance and vanishes on the basis.

use crate::dim::DimensionContext;
use crate::error::{Error, Result};
use crate::marginal::{cell_midpoint, marginal_weights};
use std::f64::consts::PI;

/// Stop pivoting once no reduced cost is below -PIVOT_TOL.
const PIVOT_TOL: f64 = 1e-11;
/// Flows below this threshold are dropped when emitting the support.
const MASS_TOL: f64 = 1e-12;
/// Balance check on the marginals.
const BALANCE_TOL: f64 = 1e-12;

/// A balanced transportation instance with a dense n x n cost matrix.
#[derive(Clone, Debug)]
pub struct TransportInstance {
    pub n: usize,
    /// Row-major n*n costs.
    pub cost: Vec<f64>,
    pub row_marginal: Vec<f64>,
    pub col_marginal: Vec<f64>,
}

impl TransportInstance {
    pub fn new(
        n: usize,
        cost: Vec<f64>,
        row_marginal: Vec<f64>,
        col_marginal: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("instance size must be >= 1".into()));
        }
        if cost.len() != n * n || row_marginal.len() != n || col_marginal.len() != n {
            return Err(Error::InvalidInput(format!(
                "shape mismatch: n={n}, cost len {}, marginals {} / {}",
                cost.len(),
                row_marginal.len(),
                col_marginal.len()
            )));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("cost entries must be finite".into()));
        }
        if row_marginal
            .iter()
            .chain(col_marginal.iter())
            .any(|&m| !(m >= 0.0))
        {
            return Err(Error::InvalidInput(
                "marginals must be nonnegative and finite".into(),
            ));
        }
        let row_sum: f64 = row_marginal.iter().sum();
        let col_sum: f64 = col_marginal.iter().sum();
        if (row_sum - col_sum).abs() > BALANCE_TOL * row_sum.abs().max(1.0) {
            return Err(Error::Unbalanced { row_sum, col_sum });
        }
        Ok(TransportInstance {
            n,
            cost,
            row_marginal,
            col_marginal,
        })
    }

    /// Kernel-cost instance with both marginals equal to the exact cell masses.
    pub fn kernel(ctx: &DimensionContext, lambda: f64, n: usize) -> Result<Self> {
        let cost = crate::marginal::cost_matrix(ctx, lambda, n)?;
        let weights = marginal_weights(ctx.d, n)?.weights;
        TransportInstance::new(n, cost.entries, weights.clone(), weights)
    }

    #[inline]
    fn cost_at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }
}

/// Optimal basic solution with its dual certificate.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    /// (row, col, mass) triples with mass above the emission threshold.
    pub support: Vec<(usize, usize, f64)>,
    pub objective: f64,
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
    /// Simplex pivots performed.
    pub iterations: usize,
}

impl TransportPlan {
    /// Largest violation of the marginal constraints by the emitted support
    /// (masses below the emission threshold count toward the defect).
    pub fn marginal_defect(&self, instance: &TransportInstance) -> f64 {
        let n = instance.n;
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for &(i, j, m) in &self.support {
            rows[i] += m;
            cols[j] += m;
        }
        let mut defect: f64 = 0.0;
        for i in 0..n {
            defect = defect.max((rows[i] - instance.row_marginal[i]).abs());
            defect = defect.max((cols[i] - instance.col_marginal[i]).abs());
        }
        defect
    }

    /// Most negative reduced cost over all cells (>= -1e-9 at optimality) and
    /// the largest |reduced cost| on the support (certificate slack).
    pub fn certificate(&self, instance: &TransportInstance) -> (f64, f64) {
        let n = instance.n;
        let mut min_reduced = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let r = instance.cost_at(i, j) - self.row_duals[i] - self.col_duals[j];
                min_reduced = min_reduced.min(r);
            }
        }
        let mut support_slack: f64 = 0.0;
        for &(i, j, _) in &self.support {
            let r = instance.cost_at(i, j) - self.row_duals[i] - self.col_duals[j];
            support_slack = support_slack.max(r.abs());
        }
        (min_reduced, support_slack)
    }
}

/// Spanning-tree basis over nodes 0..n (rows) and n..2n (columns).
struct Basis {
    n: usize,
    /// Parent node, usize::MAX at the root (row 0).
    parent: Vec<usize>,
    /// Flow on the arc joining a node to its parent.
    flow: Vec<f64>,
    depth: Vec<u32>,
    /// u on rows then v on columns; basic arcs satisfy u_i + v_j = c_ij.
    potential: Vec<f64>,
    /// Scratch buffers reused every pivot.
    children_head: Vec<usize>,
    children_next: Vec<usize>,
    order: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Basis {
    /// Northwest-corner staircase on the given (perturbed) marginals. With all
    /// ties broken by the perturbation this is a path, hence a spanning tree.
    fn northwest(n: usize, a: &[f64], b: &[f64]) -> Basis {
        let mut parent = vec![NONE; 2 * n];
        let mut flow = vec![0.0; 2 * n];
        let mut visited = vec![false; 2 * n];
        visited[0] = true;
        let (mut i, mut j) = (0usize, 0usize);
        let mut arem = a[0];
        let mut brem = b[0];
        loop {
            let x = arem.min(brem).max(0.0);
            let (row_node, col_node) = (i, n + j);
            if visited[row_node] && !visited[col_node] {
                parent[col_node] = row_node;
                flow[col_node] = x;
                visited[col_node] = true;
            } else if visited[col_node] && !visited[row_node] {
                parent[row_node] = col_node;
                flow[row_node] = x;
                visited[row_node] = true;
            }
            // else: both seen, a degenerate revisit of the first cell (n=1).
            if i == n - 1 && j == n - 1 {
                break;
            }
            if (arem <= brem && i < n - 1) || j == n - 1 {
                brem -= arem;
                i += 1;
                arem = a[i];
            } else {
                arem -= brem;
                j += 1;
                brem = b[j];
            }
        }
        Basis::from_parent_flow(n, parent, flow)
    }

    fn from_parent(n: usize, parent: Vec<usize>) -> Basis {
        let flow = vec![0.0; 2 * n];
        Basis::from_parent_flow(n, parent, flow)
    }

    fn from_parent_flow(n: usize, parent: Vec<usize>, flow: Vec<f64>) -> Basis {
        Basis {
            n,
            parent,
            flow,
            depth: vec![0; 2 * n],
            potential: vec![0.0; 2 * n],
            children_head: vec![NONE; 2 * n],
            children_next: vec![NONE; 2 * n],
            order: Vec::with_capacity(2 * n),
        }
    }

    /// Recompute depths and potentials from the parent array (O(n)).
    fn refresh(&mut self, cost: &[f64]) {
        let n = self.n;
        self.children_head.iter_mut().for_each(|h| *h = NONE);
        for node in 0..2 * n {
            let p = self.parent[node];
            if p != NONE {
                self.children_next[node] = self.children_head[p];
                self.children_head[p] = node;
            }
        }
        self.order.clear();
        self.order.push(0);
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        let mut head = 0;
        while head < self.order.len() {
            let node = self.order[head];
            head += 1;
            let mut child = self.children_head[node];
            while child != NONE {
                self.depth[child] = self.depth[node] + 1;
                let (i, j) = if child < n {
                    (child, node - n)
                } else {
                    (node, child - n)
                };
                self.potential[child] = cost[i * n + j] - self.potential[node];
                self.order.push(child);
                child = self.children_next[child];
            }
        }
        debug_assert_eq!(self.order.len(), 2 * n, "basis tree is disconnected");
    }
}

/// Deterministic block-search pricing state.
struct Pricing {
    cursor: usize,
    block: usize,
}

impl Pricing {
    fn new(n: usize) -> Pricing {
        Pricing {
            cursor: 0,
            block: (2 * n).max(256),
        }
    }

    /// Most negative reduced cost in the first block (from the cursor) that
    /// contains one, or None if a full sweep finds nothing below -PIVOT_TOL.
    fn find(&mut self, inst: &TransportInstance, basis: &Basis) -> Option<(usize, usize)> {
        let n = inst.n;
        let total = n * n;
        let (u, v) = basis.potential.split_at(n);
        let mut scanned = 0;
        while scanned < total {
            let lo = self.cursor % total;
            let hi = (lo + self.block).min(total);
            let mut best = -PIVOT_TOL;
            let mut best_arc = None;
            let mut idx = lo;
            while idx < hi {
                let i = idx / n;
                let j0 = idx % n;
                let j1 = n.min(j0 + (hi - idx));
                let ui = u[i];
                let row = &inst.cost[i * n..i * n + n];
                for j in j0..j1 {
                    let r = row[j] - ui - v[j];
                    if r < best {
                        best = r;
                        best_arc = Some((i, j));
                    }
                }
                idx += j1 - j0;
            }
            scanned += hi - lo;
            self.cursor = hi % total;
            if best_arc.is_some() {
                return best_arc;
            }
        }
        None
    }
}

/// Spanning-tree snapshot of an optimal basis, reusable as a warm start for
/// another instance with the same marginals (a basis tree stays primal
/// feasible when only the costs change).
#[derive(Clone, Debug)]
pub struct BasisTree {
    parent: Vec<usize>,
}

/// Solve the instance to optimality. Deterministic: a fixed initial basis,
/// pricing order, and tie-breaking rule make repeated runs identical.
pub fn solve_transport(instance: &TransportInstance) -> Result<TransportPlan> {
    Ok(solve_transport_warm(instance, None)?.0)
}

/// As [`solve_transport`], optionally starting from a previous basis tree.
/// The warm tree must come from an instance with identical marginals.
pub fn solve_transport_warm(
    instance: &TransportInstance,
    warm: Option<&BasisTree>,
) -> Result<(TransportPlan, BasisTree)> {
    let n = instance.n;

    // Perturbed marginals for pivoting only: rows get +k*eps0, the last column
    // absorbs the total, so the instance stays balanced and the northwest
    // staircase has no ties.
    let min_mass = instance
        .row_marginal
        .iter()
        .chain(instance.col_marginal.iter())
        .fold(f64::INFINITY, |acc, &x| if x > 0.0 { acc.min(x) } else { acc });
    let eps0 = if min_mass.is_finite() {
        1e-11 * min_mass
    } else {
        1e-14
    };
    let a: Vec<f64> = instance
        .row_marginal
        .iter()
        .enumerate()
        .map(|(k, &x)| x + (k + 1) as f64 * eps0)
        .collect();
    let mut b = instance.col_marginal.clone();
    b[n - 1] += eps0 * (n * (n + 1) / 2) as f64;

    let mut basis = match warm {
        Some(tree) if tree.parent.len() == 2 * n => {
            let mut basis = Basis::from_parent(n, tree.parent.clone());
            basis.refresh(&instance.cost);
            // Tree flows are forced by the (perturbed) marginals.
            let mut need = vec![0.0; 2 * n];
            need[..n].copy_from_slice(&a);
            need[n..].copy_from_slice(&b);
            for &node in basis.order.iter().skip(1).rev() {
                let p = basis.parent[node];
                basis.flow[node] = need[node];
                need[p] -= need[node];
            }
            basis
        }
        Some(_) => {
            return Err(Error::InvalidInput(
                "warm basis size does not match the instance".into(),
            ))
        }
        None => {
            let mut basis = Basis::northwest(n, &a, &b);
            basis.refresh(&instance.cost);
            basis
        }
    };
    let mut pricing = Pricing::new(n);
    let mut iterations = 0usize;
    let max_pivots = 400 * n + 20_000;

    while let Some((ei, ej)) = pricing.find(instance, &basis) {
        iterations += 1;
        if iterations > max_pivots {
            return Err(Error::Solver(format!(
                "pivot limit {max_pivots} exceeded (n={n})"
            )));
        }
        pivot(&mut basis, instance, ei, ej);
    }

    // Re-solve flows on the final tree against the unperturbed marginals:
    // peel from the deepest nodes upward.
    let mut need = vec![0.0; 2 * n];
    need[..n].copy_from_slice(&instance.row_marginal);
    need[n..].copy_from_slice(&instance.col_marginal);
    for &node in basis.order.iter().skip(1).rev() {
        let p = basis.parent[node];
        basis.flow[node] = need[node];
        need[p] -= need[node];
    }

    let mut support = Vec::with_capacity(2 * n - 1);
    let mut objective = 0.0;
    for &node in basis.order.iter().skip(1) {
        let p = basis.parent[node];
        let (i, j) = if node < n {
            (node, p - n)
        } else {
            (p, node - n)
        };
        let mass = basis.flow[node];
        objective += mass * instance.cost_at(i, j);
        if mass > MASS_TOL {
            support.push((i, j, mass));
        }
    }
    support.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));

    let plan = TransportPlan {
        support,
        objective,
        row_duals: basis.potential[..n].to_vec(),
        col_duals: basis.potential[n..].to_vec(),
        iterations,
    };
    Ok((
        plan,
        BasisTree {
            parent: basis.parent,
        },
    ))
}

/// One simplex pivot: push flow around the cycle closed by the entering arc,
/// drop the blocking arc, and reattach the cut subtree.
fn pivot(basis: &mut Basis, instance: &TransportInstance, ei: usize, ej: usize) {
    let n = basis.n;
    let node_a = ei;
    let node_b = n + ej;

    // Climb both endpoints to their common ancestor. Arcs that lose flow when
    // the entering arc gains: row->parent steps on the A side, col->parent
    // steps on the B side.
    let mut x = node_a;
    let mut y = node_b;
    let mut delta = f64::INFINITY;
    // Blocking arc recorded as (child node, on_a_side); ties prefer the B side
    // and, within a side, the arc closest to the entering one.
    let mut leave: (usize, bool) = (NONE, false);
    let (mut dx, mut dy) = (basis.depth[x], basis.depth[y]);
    let probe = |node: usize, on_a: bool, delta: &mut f64, leave: &mut (usize, bool)| {
        let decreasing = if on_a { node < n } else { node >= n };
        if decreasing && basis.flow[node] < *delta {
            *delta = basis.flow[node];
            *leave = (node, on_a);
        }
    };
    while dx > dy {
        probe(x, true, &mut delta, &mut leave);
        x = basis.parent[x];
        dx -= 1;
    }
    while dy > dx {
        probe(y, false, &mut delta, &mut leave);
        y = basis.parent[y];
        dy -= 1;
    }
    while x != y {
        probe(x, true, &mut delta, &mut leave);
        probe(y, false, &mut delta, &mut leave);
        x = basis.parent[x];
        y = basis.parent[y];
    }
    debug_assert!(leave.0 != NONE, "cycle has no decreasing arc");
    let (leaf, leave_on_a) = leave;

    // Apply the flow change around the cycle.
    let mut x = node_a;
    let mut y = node_b;
    let (mut dx, mut dy) = (basis.depth[x], basis.depth[y]);
    let apply = |basis: &mut Basis, node: usize, on_a: bool| {
        let decreasing = if on_a { node < n } else { node >= n };
        basis.flow[node] += if decreasing { -delta } else { delta };
    };
    while dx > dy {
        apply(basis, x, true);
        x = basis.parent[x];
        dx -= 1;
    }
    while dy > dx {
        apply(basis, y, false);
        y = basis.parent[y];
        dy -= 1;
    }
    while x != y {
        apply(basis, x, true);
        apply(basis, y, false);
        x = basis.parent[x];
        y = basis.parent[y];
    }

    // The leaving arc joins `leaf` to its parent; the cut subtree contains
    // exactly one endpoint of the entering arc. Re-root it there and hang it
    // off the other endpoint.
    let (inside, outside) = if leave_on_a {
        (node_a, node_b)
    } else {
        (node_b, node_a)
    };
    // Reverse parent pointers on the path inside the cut subtree.
    let mut node = inside;
    let mut prev = outside;
    let mut carry_flow = delta;
    loop {
        let next = basis.parent[node];
        let next_flow = basis.flow[node];
        basis.parent[node] = prev;
        basis.flow[node] = carry_flow;
        if node == leaf {
            break;
        }
        prev = node;
        node = next;
        carry_flow = next_flow;
    }
    basis.refresh(&instance.cost);
}

/// Discrete right-hand side of the diagonal-transport identity:
/// `sum_k b_k kappa(2 * midpoint_k)`. For strictly concave `kappa` this equals
/// the optimum of the transportation problem with cost `kappa(x + y)` and both
/// marginals the cell masses.
pub fn diagonal_oracle<F: Fn(f64) -> f64>(d: usize, n: usize, kappa_fn: F) -> Result<f64> {
    let weights = marginal_weights(d, n)?;
    Ok(weights
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| w * kappa_fn(2.0 * cell_midpoint(n, k)))
        .sum())
}

/// Support-structure diagnostics for a solved kernel instance.
#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    /// theta = pi - arcsin(Lambda) (pi when Lambda >= 1).
    pub separator_theta: f64,
    /// Support points with phi+psi below / above the separator (outside the
    /// one-cell tolerance band), and points inside the band.
    pub concave_points: usize,
    pub convex_points: usize,
    pub band_points: usize,
    /// Pairs violating monotone-increasing order in the concave region.
    pub concave_violations: usize,
    /// Pairs violating monotone-decreasing order in the convex region.
    pub convex_violations: usize,
    pub concave_pairs: usize,
    pub convex_pairs: usize,
}

/// Partition the support by the concavity separator and count order
/// violations. Counts are reported as data, not pass/fail: discrete optima
/// near the separator legitimately show artifacts.
pub fn check_c_monotonicity(
    plan: &TransportPlan,
    ctx: &DimensionContext,
    lambda: f64,
    n: usize,
) -> Result<MonotonicityReport> {
    let big_lambda = ctx.lambda_to_big_lambda(lambda)?;
    let separator = if big_lambda < 1.0 {
        PI - big_lambda.asin()
    } else {
        PI
    };
    let cell = PI / (2.0 * n as f64);
    let mut concave: Vec<(f64, f64)> = Vec::new();
    let mut convex: Vec<(f64, f64)> = Vec::new();
    let mut band = 0usize;
    for &(i, j, _) in &plan.support {
        let phi = cell_midpoint(n, i);
        let psi = cell_midpoint(n, j);
        let theta = phi + psi;
        if (theta - separator).abs() <= cell {
            band += 1;
        } else if theta < separator {
            concave.push((phi, psi));
        } else {
            convex.push((phi, psi));
        }
    }
    let count_violations = |pts: &[(f64, f64)], increasing: bool| -> (usize, usize) {
        let mut violations = 0;
        let mut pairs = 0;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                pairs += 1;
                let prod = (pts[a].0 - pts[b].0) * (pts[a].1 - pts[b].1);
                if (increasing && prod < 0.0) || (!increasing && prod > 0.0) {
                    violations += 1;
                }
            }
        }
        (violations, pairs)
    };
    let (concave_violations, concave_pairs) = count_violations(&concave, true);
    let (convex_violations, convex_pairs) = count_violations(&convex, false);
    Ok(MonotonicityReport {
        separator_theta: separator,
        concave_points: concave.len(),
        convex_points: convex.len(),
        band_points: band,
        concave_violations,
        convex_violations,
        concave_pairs,
        convex_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_instance() {
        let inst = TransportInstance::new(1, vec![0.375], vec![1.0], vec![1.0]).unwrap();
        let plan = solve_transport(&inst).unwrap();
        assert_eq!(plan.support, vec![(0, 0, 1.0)]);
        assert!((plan.objective - 0.375).abs() < 1e-15);
    }

    #[test]
    fn zero_cost_matching_on_the_diagonal() {
        let inst = TransportInstance::new(
            2,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        let plan = solve_transport(&inst).unwrap();
        assert!(plan.objective.abs() < 1e-12, "objective={}", plan.objective);
        for &(i, j, _) in &plan.support {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn permutation_cost_reaches_zero() {
        // Uniform marginals, zeros on a permutation, ones elsewhere.
        let n = 5;
        let perm = [2usize, 0, 4, 1, 3];
        let mut cost = vec![1.0; n * n];
        for (i, &p) in perm.iter().enumerate() {
            cost[i * n + p] = 0.0;
        }
        let u = vec![1.0 / n as f64; n];
        let inst = TransportInstance::new(n, cost, u.clone(), u).unwrap();
        let plan = solve_transport(&inst).unwrap();
        assert!(plan.objective.abs() < 1e-12, "objective={}", plan.objective);
    }

    #[test]
    fn concave_cost_selects_the_diagonal() {
        // Strictly concave kappa(x+y): the optimal plan is the diagonal and
        // the objective is the diagonal quadrature.
        let n = 3;
        let d = 2;
        let weights = marginal_weights(d, n).unwrap().weights;
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let theta = cell_midpoint(n, i) + cell_midpoint(n, j);
                cost[i * n + j] = (theta / 2.0).cos();
            }
        }
        let inst = TransportInstance::new(n, cost, weights.clone(), weights).unwrap();
        let plan = solve_transport(&inst).unwrap();
        let oracle = diagonal_oracle(d, n, |x| (x / 2.0).cos()).unwrap();
        assert!(
            (plan.objective - oracle).abs() < 1e-12,
            "lp={} oracle={oracle}",
            plan.objective
        );
        for &(i, j, _) in &plan.support {
            assert!(i.abs_diff(j) <= 1, "off-diagonal support at ({i},{j})");
        }
    }

    #[test]
    fn unbalanced_instances_are_rejected() {
        let err = TransportInstance::new(2, vec![0.0; 4], vec![0.6, 0.5], vec![0.5, 0.5]);
        assert!(matches!(err, Err(Error::Unbalanced { .. })));
    }

    #[test]
    fn non_finite_costs_are_rejected() {
        let err = TransportInstance::new(
            2,
            vec![0.0, f64::NAN, 1.0, 0.0],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = TransportInstance::new(
            2,
            vec![0.0, f64::INFINITY, 1.0, 0.0],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn plans_are_deterministic() {
        let ctx = DimensionContext::new(2).unwrap();
        let inst = TransportInstance::kernel(&ctx, 0.7, 40).unwrap();
        let p1 = solve_transport(&inst).unwrap();
        let p2 = solve_transport(&inst).unwrap();
        assert_eq!(p1.support, p2.support);
        assert_eq!(p1.objective, p2.objective);
        assert_eq!(p1.iterations, p2.iterations);
    }

    #[test]
    fn kernel_instance_satisfies_certificate_and_marginals() {
        let ctx = DimensionContext::new(3).unwrap();
        for lambda in [0.3, 0.9, ctx.lambda_hat] {
            let inst = TransportInstance::kernel(&ctx, lambda, 60).unwrap();
            let plan = solve_transport(&inst).unwrap();
            assert!(plan.marginal_defect(&inst) <= 1e-10);
            let (min_reduced, support_slack) = plan.certificate(&inst);
            assert!(min_reduced >= -1e-9, "min reduced cost {min_reduced}");
            assert!(support_slack <= 1e-9, "support slack {support_slack}");
            assert!(plan.support.len() <= 2 * 60 - 1);
            assert!(plan.support.iter().all(|&(_, _, m)| m > 0.0));
        }
    }

    #[test]
    fn diagonal_oracle_matches_closed_forms() {
        // Constant kappa integrates to 1; kappa = cos(x/2) at d=2 telescopes
        // to n*sin(pi/(4n)).
        assert!((diagonal_oracle(2, 13, |_| 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((diagonal_oracle(3, 13, |_| 1.0).unwrap() - 1.0).abs() < 1e-14);
        for n in [10usize, 100] {
            let value = diagonal_oracle(2, n, |x| (x / 2.0).cos()).unwrap();
            let closed = n as f64 * (PI / (4.0 * n as f64)).sin();
            assert!((value - closed).abs() < 1e-13, "n={n}: {value} vs {closed}");
        }
    }

    #[test]
    fn monotonicity_report_on_diagonal_plan() {
        let n = 3;
        let weights = marginal_weights(2, n).unwrap().weights;
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let theta = cell_midpoint(n, i) + cell_midpoint(n, j);
                cost[i * n + j] = (theta / 2.0).cos();
            }
        }
        let inst = TransportInstance::new(n, cost, weights.clone(), weights).unwrap();
        let plan = solve_transport(&inst).unwrap();
        let ctx = DimensionContext::new(2).unwrap();
        // Large lambda: single (concave-side) region covers the whole support.
        let report = check_c_monotonicity(&plan, &ctx, 2.0 * ctx.lambda_hat, n).unwrap();
        assert_eq!(report.separator_theta, PI);
        assert_eq!(report.convex_points, 0);
        assert_eq!(report.concave_violations, 0);
    }
}
