//! The bound pipeline: I(lambda) from the transportation program, its
//! Legendre transform into a volume-indexed lower-bound curve, the closed-form
//! theorem curves, and the inequality chain behind the quadratic bound.

use crate::dim::DimensionContext;
use crate::error::{Error, Result};
use crate::transport::{solve_transport, TransportInstance};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

/// Literature values of the minimal-roughening constant.
pub const M2_LITERATURE: f64 = 0.987820;
pub const M3_LITERATURE: f64 = 0.969445;

/// Where the m_d constant in the tt1 line comes from; recorded in outputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MdSource {
    /// Published values (d = 2, 3 only).
    Literature,
    /// Self-computed, e.g. the LP value at Lambda = 1 scaled by (d+1)/4.
    Computed(f64),
}

impl MdSource {
    pub fn value(&self, d: usize) -> Result<f64> {
        match self {
            MdSource::Computed(v) => Ok(*v),
            MdSource::Literature => match d {
                2 => Ok(M2_LITERATURE),
                3 => Ok(M3_LITERATURE),
                _ => Err(Error::InvalidInput(format!(
                    "no literature m_d value for d={d}; supply a computed one"
                ))),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            MdSource::Literature => "literature".into(),
            MdSource::Computed(v) => format!("computed({v})"),
        }
    }
}

/// I(lambda) = (d+1)/4 * (optimum of the discretized transportation program)
/// - lambda, for lambda in (0, lambda_hat].
pub fn i_of_lambda(ctx: &DimensionContext, lambda: f64, n: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if lambda > ctx.lambda_hat * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "lambda {lambda} exceeds lambda_hat {}; values beyond it add nothing to the transform",
            ctx.lambda_hat
        )));
    }
    let instance = TransportInstance::kernel(ctx, lambda, n)?;
    let plan = solve_transport(&instance)?;
    Ok((ctx.d as f64 + 1.0) / 4.0 * plan.objective - lambda)
}

/// Sampled map lambda -> I(lambda) on a uniform grid of (0, lambda_hat].
#[derive(Clone, Debug)]
pub struct LambdaSweep {
    pub d: usize,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub i_values: Vec<f64>,
}

/// Uniform grid lambda_k = lambda_hat * k / m, k = 1..m (the last sample is
/// exactly lambda_hat).
pub fn lambda_grid(ctx: &DimensionContext, m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| ctx.lambda_hat * (k as f64 / m as f64))
        .collect()
}

/// Contiguous lambda indices solved as one warm-start chain.
const SWEEP_CHAIN: usize = 64;

/// Run the sweep. The grid is cut into fixed chains of consecutive lambdas;
/// within a chain the solves run from the largest lambda down, reusing the
/// previous basis tree (the marginals are shared, so a basis stays feasible
/// when only the costs change). Chains are independent and distribute across
/// the thread pool; results are keyed by index, so the outcome does not
/// depend on scheduling or worker count.
pub fn lambda_sweep(ctx: &DimensionContext, n: usize, m_samples: usize) -> Result<LambdaSweep> {
    if m_samples == 0 {
        return Err(Error::InvalidInput("lambda sample count must be >= 1".into()));
    }
    let lambdas = lambda_grid(ctx, m_samples);
    let scale = (ctx.d as f64 + 1.0) / 4.0;
    let chunks: Vec<(usize, &[f64])> = lambdas
        .chunks(SWEEP_CHAIN)
        .enumerate()
        .map(|(c, chunk)| (c * SWEEP_CHAIN, chunk))
        .collect();
    let chunk_values: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(_, chunk)| -> Result<Vec<f64>> {
            let mut values = vec![0.0; chunk.len()];
            let mut warm: Option<crate::transport::BasisTree> = None;
            for (offset, &lambda) in chunk.iter().enumerate().rev() {
                let instance = TransportInstance::kernel(ctx, lambda, n)?;
                let (plan, tree) =
                    crate::transport::solve_transport_warm(&instance, warm.as_ref())?;
                values[offset] = scale * plan.objective - lambda;
                warm = Some(tree);
            }
            Ok(values)
        })
        .collect::<Result<_>>()?;
    let i_values: Vec<f64> = chunk_values.into_iter().flatten().collect();
    Ok(LambdaSweep {
        d: ctx.d,
        n,
        lambdas,
        i_values,
    })
}

/// Identifies which bound produced a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSource {
    LpLegendre,
    ThmTt1,
    ThmTt2a,
    ThmTt2bAsymptotic,
    PriorT2,
    Combined,
}

impl std::fmt::Display for BoundSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundSource::LpLegendre => "lp-legendre",
            BoundSource::ThmTt1 => "thm-tt1",
            BoundSource::ThmTt2a => "thm-tt2a",
            BoundSource::ThmTt2bAsymptotic => "thm-tt2b-asymptotic",
            BoundSource::PriorT2 => "prior-t2",
            BoundSource::Combined => "combined",
        };
        f.write_str(s)
    }
}

/// A sampled lower bound: normalized volume x against a bound on normalized
/// visibility.
#[derive(Clone, Debug)]
pub struct BoundCurve {
    pub source: BoundSource,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl BoundCurve {
    /// Linear interpolation, clamped to the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        match self
            .xs
            .binary_search_by(|p| p.partial_cmp(&x).expect("finite xs"))
        {
            Ok(k) => self.ys[k],
            Err(0) => self.ys[0],
            Err(k) if k == self.xs.len() => *self.ys.last().expect("nonempty curve"),
            Err(k) => {
                let (x0, x1) = (self.xs[k - 1], self.xs[k]);
                let t = (x - x0) / (x1 - x0);
                self.ys[k - 1] * (1.0 - t) + self.ys[k] * t
            }
        }
    }
}

/// Uniform grid of k points covering [0, 1] inclusive.
pub fn x_grid(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k).map(|j| j as f64 / (k - 1) as f64).collect()
}

/// Legendre transform of the sweep: I*(x) = max_k (lambda_k x + I(lambda_k)).
pub fn legendre_transform(sweep: &LambdaSweep, xs: &[f64]) -> Result<BoundCurve> {
    if sweep.lambdas.is_empty() {
        return Err(Error::InvalidInput("empty lambda sweep".into()));
    }
    if xs.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidInput(
            "normalized volumes must lie in [0, 1]".into(),
        ));
    }
    let ys = xs
        .iter()
        .map(|&x| {
            sweep
                .lambdas
                .iter()
                .zip(&sweep.i_values)
                .map(|(&l, &i)| l * x + i)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(BoundCurve {
        source: BoundSource::LpLegendre,
        xs: xs.to_vec(),
        ys,
    })
}

/// Closed-form constants of the theorem curves.
#[derive(Clone, Debug)]
pub struct TheoremConstants {
    pub d: usize,
    pub lambda_hat: f64,
    /// c in the quadratic bound x^2 / (2c).
    pub c: f64,
    /// The quadratic coefficient 1/(2c).
    pub inv_2c: f64,
    /// Coefficient of the small-volume asymptotic quadratic.
    pub tt2b_coefficient: f64,
    /// Cubic coefficient of the prior bound (d = 2, 3 only).
    pub prior_coefficient: Option<f64>,
}

pub fn theorem_constants(ctx: &DimensionContext) -> TheoremConstants {
    let d = ctx.d as f64;
    let ratio = ctx.lower_ball_volume / ctx.ball_volume;
    let bracket = (1.0 / ratio) * (1.0 - 1.0 / SQRT_2)
        + SQRT_2 * (d - 1.0) / d
        + FRAC_PI_2 * (FRAC_PI_4 - 1.0 / SQRT_2);
    let c = 8.0 / (d + 1.0) * ratio * ratio * bracket;
    let tt2b = d * (d + 1.0) / (16.0 * (d - 1.0)) / (ratio * ratio);
    let prior = match ctx.d {
        2 => Some(PI.powi(3) / 288.0),
        3 => Some(16.0 / 729.0),
        _ => None,
    };
    TheoremConstants {
        d: ctx.d,
        lambda_hat: ctx.lambda_hat,
        c,
        inv_2c: 1.0 / (2.0 * c),
        tt2b_coefficient: tt2b,
        prior_coefficient: prior,
    }
}

/// The closed-form bound curves on the grid `xs`.
///
/// Emits the linear tt1 bound `m_d - lambda_hat (1 - x)`, the quadratic tt2a
/// bound `x^2/(2c)`, the small-volume asymptotic quadratic (display only), the
/// prior cubic when d is 2 or 3, and the combined curve: the pointwise max of
/// tt1 and tt2a clipped below at zero. The asymptotic curve is excluded from
/// the combination since it holds only as x -> 0.
pub fn theorem_bounds(
    ctx: &DimensionContext,
    xs: &[f64],
    m_source: MdSource,
) -> Result<Vec<BoundCurve>> {
    if xs.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidInput(
            "normalized volumes must lie in [0, 1]".into(),
        ));
    }
    let consts = theorem_constants(ctx);
    let m_d = m_source.value(ctx.d)?;
    let tt1: Vec<f64> = xs.iter().map(|&x| m_d - ctx.lambda_hat * (1.0 - x)).collect();
    let tt2a: Vec<f64> = xs.iter().map(|&x| consts.inv_2c * x * x).collect();
    let tt2b: Vec<f64> = xs
        .iter()
        .map(|&x| consts.tt2b_coefficient * x * x)
        .collect();
    let combined: Vec<f64> = tt1
        .iter()
        .zip(&tt2a)
        .map(|(&a, &b)| a.max(b).max(0.0))
        .collect();
    let mut curves = vec![
        BoundCurve {
            source: BoundSource::ThmTt1,
            xs: xs.to_vec(),
            ys: tt1,
        },
        BoundCurve {
            source: BoundSource::ThmTt2a,
            xs: xs.to_vec(),
            ys: tt2a,
        },
        BoundCurve {
            source: BoundSource::ThmTt2bAsymptotic,
            xs: xs.to_vec(),
            ys: tt2b,
        },
    ];
    if let Some(prior) = consts.prior_coefficient {
        curves.push(BoundCurve {
            source: BoundSource::PriorT2,
            xs: xs.to_vec(),
            ys: xs.iter().map(|&x| prior * x * x * x).collect(),
        });
    }
    curves.push(BoundCurve {
        source: BoundSource::Combined,
        xs: xs.to_vec(),
        ys: combined,
    });
    Ok(curves)
}

/// Worst slacks of the inequality chain behind the quadratic bound; all are
/// expected nonpositive (up to 1e-12) on (0, 1].
#[derive(Clone, Debug)]
pub struct Tt2ChainReport {
    /// max over the grid of (1 - cos(a/2)) - (1 - 1/sqrt2) Lambda.
    pub ineq1_max_slack: f64,
    /// max of sin(a/2) - Lambda/sqrt2.
    pub ineq2_max_slack: f64,
    /// max of a(a/2 - sin(a/2)) - (pi/2)(pi/4 - 1/sqrt2) Lambda.
    pub ineq3_max_slack: f64,
    /// max of Q(Lambda) - (c/2) lambda^2.
    pub q_max_excess: f64,
}

impl Tt2ChainReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.ineq1_max_slack <= tol
            && self.ineq2_max_slack <= tol
            && self.ineq3_max_slack <= tol
            && self.q_max_excess <= tol
    }
}

/// Q(Lambda) from the proof of the quadratic bound.
pub fn q_of_big_lambda(ctx: &DimensionContext, big_lambda: f64) -> Result<f64> {
    if !(big_lambda > 0.0 && big_lambda <= 1.0) {
        return Err(Error::Domain(format!(
            "Q is defined for Lambda in (0, 1], got {big_lambda}"
        )));
    }
    let d = ctx.d as f64;
    let a = big_lambda.asin();
    let half = a / 2.0;
    Ok((d + 1.0) / 4.0
        * (ctx.ball_volume / ctx.lower_ball_volume * (1.0 - half.cos())
            + 2.0 * (d - 1.0) / d * half.sin()
            + a * (half - half.sin()))
        * big_lambda)
}

/// Evaluate the three elementary inequalities and the quadratic domination of
/// Q on a grid of Lambda values in (0, 1].
pub fn verify_tt2_chain(ctx: &DimensionContext, big_lambda_grid: &[f64]) -> Result<Tt2ChainReport> {
    if big_lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty Lambda grid".into()));
    }
    let consts = theorem_constants(ctx);
    let mut report = Tt2ChainReport {
        ineq1_max_slack: f64::NEG_INFINITY,
        ineq2_max_slack: f64::NEG_INFINITY,
        ineq3_max_slack: f64::NEG_INFINITY,
        q_max_excess: f64::NEG_INFINITY,
    };
    for &big_lambda in big_lambda_grid {
        if !(big_lambda > 0.0 && big_lambda <= 1.0) {
            return Err(Error::Domain(format!(
                "Lambda grid must lie in (0, 1], got {big_lambda}"
            )));
        }
        let a = big_lambda.asin();
        let half = a / 2.0;
        let s1 = (1.0 - half.cos()) - (1.0 - 1.0 / SQRT_2) * big_lambda;
        let s2 = half.sin() - big_lambda / SQRT_2;
        let s3 = a * (half - half.sin()) - FRAC_PI_2 * (FRAC_PI_4 - 1.0 / SQRT_2) * big_lambda;
        let lambda = ctx.big_lambda_to_lambda(big_lambda);
        let q_excess = q_of_big_lambda(ctx, big_lambda)? - consts.c / 2.0 * lambda * lambda;
        report.ineq1_max_slack = report.ineq1_max_slack.max(s1);
        report.ineq2_max_slack = report.ineq2_max_slack.max(s2);
        report.ineq3_max_slack = report.ineq3_max_slack.max(s3);
        report.q_max_excess = report.q_max_excess.max(q_excess);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: usize) -> DimensionContext {
        DimensionContext::new(d).unwrap()
    }

    #[test]
    fn i_rejects_lambda_outside_domain() {
        let c = ctx(2);
        assert!(i_of_lambda(&c, 0.0, 10).is_err());
        assert!(i_of_lambda(&c, -1.0, 10).is_err());
        assert!(i_of_lambda(&c, 1.1 * c.lambda_hat, 10).is_err());
        assert!(i_of_lambda(&c, c.lambda_hat, 10).is_ok());
    }

    #[test]
    fn i_vanishes_as_lambda_tends_to_zero() {
        let c = ctx(2);
        let i = i_of_lambda(&c, 1e-4, 24).unwrap();
        assert!(i.abs() < 1e-3, "I(1e-4)={i}");
        assert!(i >= -1e-4 - 1e-12, "I >= -lambda violated: {i}");
    }

    #[test]
    fn i_at_lambda_hat_matches_cosine_program() {
        // At Lambda = 1 the kernel is the plain cosine, so I(lambda_hat) is
        // determined by that program alone.
        let c = ctx(2);
        let n = 24;
        let inst = TransportInstance::kernel(&c, c.lambda_hat, n).unwrap();
        let md_n = 0.75 * solve_transport(&inst).unwrap().objective;
        let i = i_of_lambda(&c, c.lambda_hat, n).unwrap();
        assert!((i - (md_n - c.lambda_hat)).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_monotone_decreasing_and_midpoint_concave() {
        let c = ctx(2);
        let sweep = lambda_sweep(&c, 24, 16).unwrap();
        for k in 1..sweep.i_values.len() {
            assert!(
                sweep.i_values[k] <= sweep.i_values[k - 1] + 1e-9,
                "I not decreasing at k={k}"
            );
        }
        for k in 2..sweep.i_values.len() {
            let mid = sweep.i_values[k - 1];
            let avg = 0.5 * (sweep.i_values[k - 2] + sweep.i_values[k]);
            assert!(mid >= avg - 1e-9, "concavity violated at k={k}");
        }
    }

    #[test]
    fn legendre_transform_basics() {
        let c = ctx(2);
        let sweep = lambda_sweep(&c, 24, 32).unwrap();
        let xs = x_grid(21);
        let curve = legendre_transform(&sweep, &xs).unwrap();
        // Nondecreasing and midpoint convex (supremum of increasing affine).
        for k in 1..curve.ys.len() {
            assert!(curve.ys[k] >= curve.ys[k - 1] - 1e-12);
        }
        for k in 2..curve.ys.len() {
            assert!(curve.ys[k - 1] <= 0.5 * (curve.ys[k - 2] + curve.ys[k]) + 1e-9);
        }
        // I*(0) = 0 within grid resolution (I <= 0 near zero, I(0+) = 0).
        let res = c.lambda_hat / 32.0;
        assert!(curve.ys[0].abs() <= res + 1e-6, "I*(0)={}", curve.ys[0]);
        // I*(1) equals the lambda_hat program value.
        let md_n = 0.75
            * solve_transport(&TransportInstance::kernel(&c, c.lambda_hat, 24).unwrap())
                .unwrap()
                .objective;
        assert!((curve.ys[20] - md_n).abs() < 1e-9);
    }

    #[test]
    fn legendre_dominates_tt1_with_matching_m() {
        let c = ctx(2);
        let n = 24;
        let sweep = lambda_sweep(&c, n, 32).unwrap();
        let xs = x_grid(11);
        let lp = legendre_transform(&sweep, &xs).unwrap();
        let md_n = 0.75
            * solve_transport(&TransportInstance::kernel(&c, c.lambda_hat, n).unwrap())
                .unwrap()
                .objective;
        let thm = theorem_bounds(&c, &xs, MdSource::Computed(md_n)).unwrap();
        let tt1 = thm.iter().find(|b| b.source == BoundSource::ThmTt1).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            assert!(
                lp.ys[k] >= tt1.ys[k] - 1e-9,
                "x={x}: lp={} tt1={}",
                lp.ys[k],
                tt1.ys[k]
            );
        }
    }

    #[test]
    fn legendre_rejects_bad_inputs() {
        let sweep = LambdaSweep {
            d: 2,
            n: 4,
            lambdas: vec![],
            i_values: vec![],
        };
        assert!(legendre_transform(&sweep, &[0.5]).is_err());
        let sweep = LambdaSweep {
            d: 2,
            n: 4,
            lambdas: vec![0.5],
            i_values: vec![-0.1],
        };
        assert!(legendre_transform(&sweep, &[1.5]).is_err());
    }

    #[test]
    fn theorem_constants_match_their_closed_forms() {
        // Values of the displayed formula, frozen from 30-digit arithmetic.
        let t2 = theorem_constants(&ctx(2));
        assert!((t2.inv_2c - 0.358_588_796_224).abs() < 1e-10, "{}", t2.inv_2c);
        assert!((t2.tt2b_coefficient - 3.0 * PI * PI / 32.0).abs() < 1e-15);
        assert!((t2.prior_coefficient.unwrap() - PI.powi(3) / 288.0).abs() < 1e-15);

        let t3 = theorem_constants(&ctx(3));
        assert!((t3.inv_2c - 0.305_184_667_715).abs() < 1e-10, "{}", t3.inv_2c);
        assert!((t3.tt2b_coefficient - 2.0 / 3.0).abs() < 1e-15);
        assert!((t3.prior_coefficient.unwrap() - 16.0 / 729.0).abs() < 1e-15);

        assert!(theorem_constants(&ctx(4)).prior_coefficient.is_none());
    }

    #[test]
    fn theorem_bounds_combine_and_clip() {
        let c = ctx(2);
        let xs = x_grid(26);
        let curves = theorem_bounds(&c, &xs, MdSource::Literature).unwrap();
        assert_eq!(curves.len(), 5);
        let get = |s: BoundSource| curves.iter().find(|b| b.source == s).unwrap();
        let tt1 = get(BoundSource::ThmTt1);
        let tt2a = get(BoundSource::ThmTt2a);
        let combined = get(BoundSource::Combined);
        for k in 0..xs.len() {
            let expect = tt1.ys[k].max(tt2a.ys[k]).max(0.0);
            assert_eq!(combined.ys[k], expect);
            assert!(combined.ys[k] >= 0.0);
        }
        // tt1 is negative at x=0 (m_d < lambda_hat), so clipping must bite.
        assert!(tt1.ys[0] < 0.0);
        assert_eq!(combined.ys[0], 0.0);
        // At x=1 the combined bound equals m_d.
        assert!((combined.ys[25] - M2_LITERATURE).abs() < 1e-12);
    }

    #[test]
    fn theorem_bounds_without_prior_curve() {
        let c = ctx(5);
        let md = MdSource::Computed(0.9);
        let curves = theorem_bounds(&c, &x_grid(5), md).unwrap();
        assert!(curves
            .iter()
            .all(|b| b.source != BoundSource::PriorT2));
        assert!(matches!(
            theorem_bounds(&c, &x_grid(5), MdSource::Literature),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn chain_equalities_at_unit_lambda() {
        let c = ctx(2);
        let report = verify_tt2_chain(&c, &[1.0]).unwrap();
        // ineq1 and ineq3 are tight at Lambda = 1 (a = pi/2).
        assert!(report.ineq1_max_slack.abs() <= 1e-12, "{}", report.ineq1_max_slack);
        assert!(report.ineq3_max_slack.abs() <= 1e-12, "{}", report.ineq3_max_slack);
        assert!(report.ineq2_max_slack.abs() <= 1e-12);
        assert!(report.q_max_excess.abs() <= 1e-12);
        assert!(report.holds(1e-12));
    }

    #[test]
    fn chain_is_strict_in_the_interior() {
        for d in [2usize, 3] {
            let c = ctx(d);
            let grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
            let report = verify_tt2_chain(&c, &grid).unwrap();
            assert!(report.ineq1_max_slack < 0.0);
            assert!(report.ineq2_max_slack < 0.0);
            assert!(report.ineq3_max_slack < 0.0);
            assert!(report.q_max_excess < 0.0);
        }
    }

    #[test]
    fn chain_rejects_out_of_range_grid() {
        let c = ctx(2);
        assert!(verify_tt2_chain(&c, &[0.0]).is_err());
        assert!(verify_tt2_chain(&c, &[1.1]).is_err());
        assert!(verify_tt2_chain(&c, &[]).is_err());
    }

    #[test]
    fn curve_interpolation_is_piecewise_linear() {
        let curve = BoundCurve {
            source: BoundSource::Combined,
            xs: vec![0.0, 0.5, 1.0],
            ys: vec![0.0, 1.0, 3.0],
        };
        assert_eq!(curve.eval(0.25), 0.5);
        assert_eq!(curve.eval(0.75), 2.0);
        assert_eq!(curve.eval(-0.5), 0.0);
        assert_eq!(curve.eval(2.0), 3.0);
        assert_eq!(curve.eval(0.5), 1.0);
    }
}
