//! Self-check suite behind the `verify` subcommand: kernel identities, the
//! diagonal-transport oracle, the quadratic-bound inequality chain, solver
//! exactness on enumerable instances, and simulator calibration.

use crate::billiard::{estimate_f1, estimate_visibility};
use crate::bounds::{theorem_bounds, verify_tt2_chain, MdSource};
use crate::dim::DimensionContext;
use crate::error::Result;
use crate::kernel::{eta_of_theta, k_bruteforce, k_reduced, kappa_dtheta, kappa_of_theta};
use crate::marginal::cell_midpoint;
use crate::rng::CounterRng;
use crate::scene::Scene2D;
use crate::transport::{diagonal_oracle, solve_transport, TransportInstance};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult {
            name,
            passed,
            detail,
        }
    }
}

/// Exhaustive optimum of a balanced transportation instance by enumerating
/// the polytope vertices. Every vertex is a basic solution whose support
/// extends to a spanning tree of the bipartite row/column graph, and tree
/// flows are uniquely determined by the marginals; so iterating all spanning
/// trees with 2n-1 arcs, keeping those with nonnegative flows, and minimizing
/// the cost visits the true optimum. Exponential: only sensible for n <= 5.
/// Deliberately independent of the simplex solver.
pub fn enumerate_transport_optimum(instance: &TransportInstance) -> f64 {
    let n = instance.n;
    let _cells = n * n;
    let arcs_needed = 2 * n - 1;
    let mut chosen: Vec<usize> = Vec::with_capacity(arcs_needed);
    // Union-find over 2n nodes with an undo stack (no path compression, so
    // unions are reversible).
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut rank = vec![0u32; 2 * n];
    let mut best = f64::INFINITY;

    fn find(parent: &[usize], mut x: usize) -> usize {
        while parent[x] != x {
            x = parent[x];
        }
        x
    }

    fn recurse(
        instance: &TransportInstance,
        next_cell: usize,
        chosen: &mut Vec<usize>,
        parent: &mut Vec<usize>,
        rank: &mut Vec<u32>,
        best: &mut f64,
    ) {
        let n = instance.n;
        let arcs_needed = 2 * n - 1;
        if chosen.len() == arcs_needed {
            if let Some(cost) = tree_cost(instance, chosen) {
                if cost < *best {
                    *best = cost;
                }
            }
            return;
        }
        // Not enough cells left to finish the tree.
        if n * n - next_cell < arcs_needed - chosen.len() {
            return;
        }
        for cell in next_cell..n * n {
            let (i, j) = (cell / n, n + cell % n);
            let (ri, rj) = (find(parent, i), find(parent, j));
            if ri == rj {
                continue; // would close a cycle
            }
            // Union by rank, remembering what to undo.
            let (hi, lo) = if rank[ri] >= rank[rj] { (ri, rj) } else { (rj, ri) };
            parent[lo] = hi;
            let bumped = rank[ri] == rank[rj];
            if bumped {
                rank[hi] += 1;
            }
            chosen.push(cell);
            recurse(instance, cell + 1, chosen, parent, rank, best);
            chosen.pop();
            parent[lo] = lo;
            if bumped {
                rank[hi] -= 1;
            }
        }
    }

    recurse(instance, 0, &mut chosen, &mut parent, &mut rank, &mut best);
    best
}

/// Flows on a spanning tree are forced by the marginals (peel leaves); returns
/// the plan cost when all flows are nonnegative, None when the vertex is
/// infeasible.
fn tree_cost(instance: &TransportInstance, arcs: &[usize]) -> Option<f64> {
    let n = instance.n;
    let mut degree = vec![0usize; 2 * n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    for (k, &cell) in arcs.iter().enumerate() {
        let (i, j) = (cell / n, n + cell % n);
        degree[i] += 1;
        degree[j] += 1;
        incident[i].push(k);
        incident[j].push(k);
    }
    let mut need: Vec<f64> = instance
        .row_marginal
        .iter()
        .chain(instance.col_marginal.iter())
        .copied()
        .collect();
    let mut used = vec![false; arcs.len()];
    let mut stack: Vec<usize> = (0..2 * n).filter(|&v| degree[v] == 1).collect();
    let mut cost = 0.0;
    let mut resolved = 0;
    while let Some(node) = stack.pop() {
        if degree[node] != 1 {
            continue;
        }
        let &k = incident[node]
            .iter()
            .find(|&&k| !used[k])
            .expect("leaf has an unused arc");
        used[k] = true;
        resolved += 1;
        let cell = arcs[k];
        let (i, j) = (cell / n, n + cell % n);
        let other = if node == i { j } else { i };
        let flow = need[node];
        if flow < -1e-12 {
            return None;
        }
        cost += flow.max(0.0) * instance.cost[cell];
        need[other] -= flow;
        need[node] = 0.0;
        degree[node] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    (resolved == arcs.len()).then_some(cost)
}

/// The scene corpus used for bound validation. Shapes are chosen to span
/// convex, non-convex (retroreflector-like notch) and scattered (pin-array)
/// regimes; none has trapping pockets.
pub fn scene_corpus() -> Vec<(&'static str, Scene2D)> {
    let square = |side: f64| {
        let h = side / 2.0;
        vec![(-h, -h), (h, -h), (h, h), (-h, h)]
    };
    let notched = vec![
        (-0.5, -0.5),
        (0.5, -0.5),
        (0.5, -0.15),
        (0.1, 0.0),
        (0.5, 0.15),
        (0.5, 0.5),
        (-0.5, 0.5),
    ];
    let mut pins = Vec::new();
    for ix in -1i32..=1 {
        for iy in -1i32..=1 {
            pins.push((0.45 * ix as f64, 0.45 * iy as f64, 0.07));
        }
    }
    vec![
        (
            "disc-half",
            Scene2D::new(vec![], vec![(0.0, 0.0, 0.5)]).expect("valid scene"),
        ),
        (
            "disc-offset",
            Scene2D::new(vec![], vec![(0.3, 0.2, 0.35)]).expect("valid scene"),
        ),
        (
            "square",
            Scene2D::new(vec![square(0.9)], vec![]).expect("valid scene"),
        ),
        (
            "notched-square",
            Scene2D::new(vec![notched], vec![]).expect("valid scene"),
        ),
        (
            "pin-array",
            Scene2D::new(vec![], pins).expect("valid scene"),
        ),
        (
            "two-discs",
            Scene2D::new(vec![], vec![(-0.45, 0.0, 0.3), (0.45, 0.1, 0.4)]).expect("valid scene"),
        ),
    ]
}

/// Run the property suite. `quick` shrinks grids and sample counts to land in
/// a couple of seconds; the full suite mirrors the acceptance tolerances.
pub fn run_suite(quick: bool) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    results.push(check_kernel_residuals(quick)?);
    results.push(check_kernel_minimality(quick)?);
    results.push(check_kernel_derivative(quick)?);
    results.push(check_kernel_curvature()?);
    results.push(check_kernel_oracle(quick)?);
    results.push(check_prop3_oracle(quick)?);
    results.push(check_tt2_chain()?);
    results.push(check_lp_enumeration()?);
    results.push(check_simulator_calibration(quick)?);
    results.push(check_scene_bounds(quick)?);
    Ok(results)
}

fn check_kernel_residuals(quick: bool) -> Result<CheckResult> {
    let grid = if quick { 20 } else { 60 };
    let mut worst: f64 = 0.0;
    for a in 1..grid {
        let big_lambda = a as f64 / grid as f64;
        let switch = PI - big_lambda.asin();
        for b in 1..grid {
            let theta = switch * b as f64 / grid as f64;
            let eta = eta_of_theta(big_lambda, theta)?;
            if eta > 0.0 {
                worst = worst.max((big_lambda * eta.cos() - (theta + 2.0 * eta).sin()).abs());
            }
        }
    }
    Ok(CheckResult::new(
        "kernel-root-residual",
        worst <= 1e-12,
        format!("max |Lambda cos(eta) - sin(theta+2eta)| = {worst:.3e} (tol 1e-12)"),
    ))
}

fn check_kernel_minimality(quick: bool) -> Result<CheckResult> {
    let grid = if quick { 15 } else { 50 };
    let mut worst: f64 = f64::NEG_INFINITY;
    for a in 1..=grid {
        let big_lambda = 1.5 * a as f64 / grid as f64;
        for b in 0..=grid {
            let theta = PI * b as f64 / grid as f64;
            let kappa = kappa_of_theta(big_lambda, theta)?;
            for k in 0..=200 {
                let eta = (PI - theta) / 2.0 * k as f64 / 200.0;
                let f = (theta + 2.0 * eta).cos() + 2.0 * big_lambda * eta.sin();
                worst = worst.max(kappa - f);
            }
        }
    }
    Ok(CheckResult::new(
        "kernel-minimality",
        worst <= 1e-12,
        format!("max kappa - f over eta grid = {worst:.3e} (tol 1e-12)"),
    ))
}

fn check_kernel_derivative(quick: bool) -> Result<CheckResult> {
    let points = if quick { 15 } else { 50 };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for big_lambda in [0.25f64, 0.5, 0.75] {
        let switch = PI - big_lambda.asin();
        for k in 0..points {
            let theta = 1e-3 + (switch - 2e-3) * k as f64 / (points - 1) as f64;
            let analytic = kappa_dtheta(big_lambda, theta)?;
            let fd = (kappa_of_theta(big_lambda, theta + h)? - kappa_of_theta(big_lambda, theta - h)?)
                / (2.0 * h);
            worst = worst.max((analytic - fd).abs());
        }
    }
    Ok(CheckResult::new(
        "kernel-derivative-identity",
        worst <= 1e-6,
        format!("max |analytic - central difference| = {worst:.3e} (tol 1e-6)"),
    ))
}

fn check_kernel_curvature() -> Result<CheckResult> {
    // Second differences: concave before the switch angle, convex after.
    let h = 1e-4;
    let slack = 1e-8;
    let mut ok = true;
    let mut detail = String::new();
    for big_lambda in [0.25f64, 0.5, 0.75] {
        let switch = PI - big_lambda.asin();
        let mut concave_max: f64 = f64::NEG_INFINITY;
        let mut convex_min: f64 = f64::INFINITY;
        for k in 1..60 {
            let theta = (switch - 10.0 * h) * k as f64 / 60.0;
            if theta <= 2.0 * h {
                continue;
            }
            let d2 = kappa_of_theta(big_lambda, theta - h)? - 2.0 * kappa_of_theta(big_lambda, theta)?
                + kappa_of_theta(big_lambda, theta + h)?;
            concave_max = concave_max.max(d2);
        }
        for k in 1..20 {
            let theta = switch + (PI - switch - 10.0 * h) * k as f64 / 20.0;
            let d2 = kappa_of_theta(big_lambda, theta - h)? - 2.0 * kappa_of_theta(big_lambda, theta)?
                + kappa_of_theta(big_lambda, theta + h)?;
            convex_min = convex_min.min(d2);
        }
        if concave_max > slack || convex_min < -slack {
            ok = false;
        }
        detail.push_str(&format!(
            "Lambda={big_lambda}: concave-side max d2 {concave_max:.2e}, convex-side min d2 {convex_min:.2e}; "
        ));
    }
    Ok(CheckResult::new("kernel-curvature-signs", ok, detail))
}

fn check_kernel_oracle(quick: bool) -> Result<CheckResult> {
    let (angles, lambdas, samples) = if quick { (3, 2, 10_000) } else { (6, 4, 10_000) };
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        let ctx = DimensionContext::new(d)?;
        for a in 0..angles {
            for b in 0..angles {
                let phi = FRAC_PI_2 * (a as f64 + 0.5) / angles as f64;
                let psi = FRAC_PI_2 * (b as f64 + 0.5) / angles as f64;
                for l in 1..=lambdas {
                    let lambda = 1.3 * ctx.lambda_hat * l as f64 / lambdas as f64;
                    let reduced = k_reduced(&ctx, lambda, phi, psi)?;
                    let brute = k_bruteforce(&ctx, lambda, phi, psi, samples, 1234)?;
                    worst = worst.max((reduced - brute).abs());
                }
            }
        }
    }
    Ok(CheckResult::new(
        "kernel-bruteforce-oracle",
        worst <= 1e-3,
        format!("max |K_reduced - K_bruteforce| = {worst:.3e} (tol 1e-3)"),
    ))
}

fn check_prop3_oracle(quick: bool) -> Result<CheckResult> {
    let n = if quick { 60 } else { 200 };
    let kappa_fn = |x: f64| (x / 2.0).cos();
    let weights = crate::marginal::marginal_weights(2, n)?.weights;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = kappa_fn(cell_midpoint(n, i) + cell_midpoint(n, j));
        }
    }
    let instance = TransportInstance::new(n, cost, weights.clone(), weights)?;
    let plan = solve_transport(&instance)?;
    let oracle = diagonal_oracle(2, n, kappa_fn)?;
    let gap = (plan.objective - oracle).abs();
    let max_off = plan
        .support
        .iter()
        .map(|&(i, j, _)| i.abs_diff(j))
        .max()
        .unwrap_or(0);
    Ok(CheckResult::new(
        "prop3-diagonal-oracle",
        gap <= 5e-3 && max_off <= 1,
        format!("n={n}: |LP - diagonal quadrature| = {gap:.3e} (tol 5e-3), max |i-j| on support = {max_off}"),
    ))
}

fn check_tt2_chain() -> Result<CheckResult> {
    let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let mut ok = true;
    let mut detail = String::new();
    for d in [2usize, 3] {
        let ctx = DimensionContext::new(d)?;
        let report = verify_tt2_chain(&ctx, &grid)?;
        if !report.holds(1e-12) {
            ok = false;
        }
        detail.push_str(&format!(
            "d={d}: slacks {:.2e}/{:.2e}/{:.2e}, Q excess {:.2e}; ",
            report.ineq1_max_slack,
            report.ineq2_max_slack,
            report.ineq3_max_slack,
            report.q_max_excess
        ));
    }
    Ok(CheckResult::new("tt2-inequality-chain", ok, detail))
}

fn check_lp_enumeration() -> Result<CheckResult> {
    let mut rng = CounterRng::new(2024, 0);
    let mut worst: f64 = 0.0;
    let mut cert_ok = true;
    for n in 2..=4usize {
        for _ in 0..3 {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.next_f64()).collect();
            let mut a: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
            let scale = b.iter().sum::<f64>() / a.iter().sum::<f64>();
            a.iter_mut().for_each(|x| *x *= scale);
            let instance = TransportInstance::new(n, cost, a, b)?;
            let plan = solve_transport(&instance)?;
            let brute = enumerate_transport_optimum(&instance);
            worst = worst.max((plan.objective - brute).abs());
            let (min_reduced, support_slack) = plan.certificate(&instance);
            if min_reduced < -1e-9 || support_slack > 1e-9 {
                cert_ok = false;
            }
        }
    }
    Ok(CheckResult::new(
        "lp-vertex-enumeration",
        worst <= 1e-10 && cert_ok,
        format!("max |simplex - enumeration| = {worst:.3e} (tol 1e-10), dual certificates {}",
            if cert_ok { "hold" } else { "VIOLATED" }),
    ))
}

fn check_simulator_calibration(quick: bool) -> Result<CheckResult> {
    let samples = if quick { 200_000 } else { 1_000_000 };
    let mut ok = true;
    let mut detail = String::new();
    for r in [0.3, 0.6, 0.9] {
        let scene = Scene2D::new(vec![], vec![(0.0, 0.0, r)])?;
        let est = estimate_visibility(&scene, samples, 71)?;
        let pass = (est.mean - r).abs() <= 3.0 * est.std_error;
        ok &= pass;
        detail.push_str(&format!("r={r}: {:.5}+-{:.5}; ", est.mean, est.std_error));
    }
    let empty = estimate_visibility(&Scene2D::empty(), samples, 71)?;
    ok &= empty.mean == 0.0;
    detail.push_str(&format!("empty: {}", empty.mean));
    Ok(CheckResult::new("simulator-calibration", ok, detail))
}

fn check_scene_bounds(quick: bool) -> Result<CheckResult> {
    let samples = if quick { 100_000 } else { 1_000_000 };
    let ctx = DimensionContext::new(2)?;
    let xs: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let curves = theorem_bounds(&ctx, &xs, MdSource::Literature)?;
    let combined = curves
        .iter()
        .find(|c| c.source == crate::bounds::BoundSource::Combined)
        .expect("combined curve present");
    let mut ok = true;
    let mut detail = String::new();
    for (name, scene) in scene_corpus() {
        let x = scene.normalized_volume();
        let bound = combined.eval(x);
        let vis = estimate_visibility(&scene, samples, 2718)?;
        let f1 = estimate_f1(&scene, samples, 2718)?;
        let vis_ok = vis.mean >= bound - 3.0 * vis.std_error;
        let f1_ok = x <= f1.mean + 3.0 * f1.std_error;
        ok &= vis_ok && f1_ok;
        detail.push_str(&format!(
            "{name}: [D]={x:.4} F={:.4} bound={bound:.4} F1={:.4}{}; ",
            vis.mean,
            f1.mean,
            if vis_ok && f1_ok { "" } else { " VIOLATED" }
        ));
    }
    Ok(CheckResult::new("scene-bound-consistency", ok, detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_matches_hand_solved_instance() {
        // 2x2 with a dominant diagonal: optimal plan pairs 0-0 and 1-1.
        let instance = TransportInstance::new(
            2,
            vec![1.0, 5.0, 5.0, 1.0],
            vec![0.3, 0.7],
            vec![0.3, 0.7],
        )
        .unwrap();
        let best = enumerate_transport_optimum(&instance);
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corpus_scenes_are_valid_and_distinct() {
        let corpus = scene_corpus();
        assert!(corpus.len() >= 5);
        for (name, scene) in &corpus {
            assert!(scene.normalized_volume() > 0.0, "{name} has zero volume");
            assert!(scene.normalized_volume() < 1.0);
        }
    }

    #[test]
    fn quick_suite_passes() {
        for result in run_suite(true).unwrap() {
            assert!(result.passed, "{}: {}", result.name, result.detail);
        }
    }
}
