//! Discretization of the angular marginal and the kernel cost matrix.
//!
//! The marginal on [0, pi/2] has generating function sin^{d-1}(phi); its exact
//! mass on cell k of the uniform n-cell partition telescopes to
//! `sin^{d-1}(k h) - sin^{d-1}((k-1) h)` with `h = pi/(2n)`. Costs are the
//! kernel evaluated at sums of cell midpoints.

use crate::dim::DimensionContext;
use crate::error::{Error, Result};
use crate::kernel::kappa_of_theta;
use std::f64::consts::FRAC_PI_2;

/// Exact cell masses of the marginal on the uniform n-cell grid.
#[derive(Clone, Debug)]
pub struct MarginalWeights {
    pub d: usize,
    pub n: usize,
    pub weights: Vec<f64>,
}

impl MarginalWeights {
    pub fn midpoint(&self, k: usize) -> f64 {
        cell_midpoint(self.n, k)
    }
}

/// Midpoint of cell k (0-based) of the uniform n-cell partition of [0, pi/2].
pub fn cell_midpoint(n: usize, k: usize) -> f64 {
    (k as f64 + 0.5) / n as f64 * FRAC_PI_2
}

pub fn marginal_weights(d: usize, n: usize) -> Result<MarginalWeights> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidInput("grid size n must be >= 1".into()));
    }
    let h = FRAC_PI_2 / n as f64;
    let gen = |x: f64| x.sin().powi(d as i32 - 1);
    let weights = (1..=n)
        .map(|k| gen(k as f64 * h) - gen((k - 1) as f64 * h))
        .collect();
    Ok(MarginalWeights { d, n, weights })
}

/// Dense kernel cost matrix `c_ij = 1 + kappa_Lambda(mid_i + mid_j)`.
///
/// The cost depends on i and j only through i+j, so construction evaluates the
/// kernel at the 2n-1 distinct midpoint sums and fans the values out.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    /// Row-major n*n entries.
    pub entries: Vec<f64>,
    /// The 2n-1 distinct values, indexed by i+j-2 for 1-based i, j.
    diagonal_values: Vec<f64>,
}

impl CostMatrix {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Value shared by every cell with the given 0-based index sum.
    pub fn by_index_sum(&self, s: usize) -> f64 {
        self.diagonal_values[s]
    }
}

pub fn cost_matrix(ctx: &DimensionContext, lambda: f64, n: usize) -> Result<CostMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("grid size n must be >= 1".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let big_lambda = ctx.lambda_to_big_lambda(lambda)?;
    // theta at index sum s (0-based cells): mid_i + mid_j = (s+1) * pi/(2n).
    let diagonal_values: Vec<f64> = (0..2 * n - 1)
        .map(|s| {
            let theta = (s as f64 + 1.0) / n as f64 * FRAC_PI_2;
            Ok(1.0 + kappa_of_theta(big_lambda, theta)?)
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = diagonal_values[i + j];
        }
    }
    Ok(CostMatrix {
        n,
        d: ctx.d,
        lambda,
        entries,
        diagonal_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn two_cell_weights_for_d2() {
        let w = marginal_weights(2, 2).unwrap();
        assert!((w.weights[0] - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((w.weights[1] - (1.0 - SQRT_2 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn single_cell_carries_full_mass() {
        for d in 2..=5 {
            let w = marginal_weights(d, 1).unwrap();
            assert_eq!(w.weights.len(), 1);
            assert!((w.weights[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_one_and_are_positive() {
        for d in [2, 3, 5] {
            for n in [4, 17, 256] {
                let w = marginal_weights(d, n).unwrap();
                let sum: f64 = w.weights.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-14, "d={d} n={n} sum={sum}");
                assert!(w.weights.iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn d3_n4_weights_match_sine_squares() {
        let w = marginal_weights(3, 4).unwrap();
        for k in 1..=4usize {
            let expected =
                (k as f64 * PI / 8.0).sin().powi(2) - ((k - 1) as f64 * PI / 8.0).sin().powi(2);
            assert!((w.weights[k - 1] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn refinement_aggregates_exactly() {
        // Pairwise sums of the 2m-cell weights reproduce the m-cell weights;
        // the generating function telescopes, so equality is exact.
        for d in [2, 3] {
            let coarse = marginal_weights(d, 8).unwrap();
            let fine = marginal_weights(d, 16).unwrap();
            for k in 0..8 {
                let merged = fine.weights[2 * k] + fine.weights[2 * k + 1];
                assert!(
                    (merged - coarse.weights[k]).abs() < 1e-15,
                    "d={d} k={k}: {merged} vs {}",
                    coarse.weights[k]
                );
            }
        }
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(marginal_weights(1, 4).is_err());
        assert!(marginal_weights(2, 0).is_err());
    }

    #[test]
    fn cost_is_shifted_cosine_for_large_lambda() {
        let ctx = DimensionContext::new(2).unwrap();
        let n = 8;
        let c = cost_matrix(&ctx, ctx.lambda_hat, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let theta = cell_midpoint(n, i) + cell_midpoint(n, j);
                assert!((c.at(i, j) - (1.0 + theta.cos())).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn one_cell_matrix_at_unit_lambda() {
        let ctx = DimensionContext::new(2).unwrap();
        let c = cost_matrix(&ctx, ctx.lambda_hat, 1).unwrap();
        // Midpoints are pi/4 each, so theta = pi/2 and the entry is 1.
        assert!((c.at(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_is_symmetric_and_bounded() {
        let ctx = DimensionContext::new(3).unwrap();
        let n = 20;
        let c = cost_matrix(&ctx, 0.61, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(c.at(i, j), c.at(j, i));
                assert!((0.0..=2.0).contains(&c.at(i, j)), "c={}", c.at(i, j));
            }
        }
    }

    #[test]
    fn index_sum_accessor_matches_entries() {
        let ctx = DimensionContext::new(2).unwrap();
        let c = cost_matrix(&ctx, 0.8, 12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(c.at(i, j), c.by_index_sum(i + j));
            }
        }
    }

    #[test]
    fn midpoints_cover_open_interval() {
        let n = 5;
        assert!(cell_midpoint(n, 0) > 0.0);
        assert!(cell_midpoint(n, n - 1) < FRAC_PI_2);
    }
}
