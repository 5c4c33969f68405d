//! The reduced transport kernel.
//!
//! For a multiplier `Lambda > 0` and an angle sum `theta = phi + psi`, the
//! kernel minimizes
//!
//! ```text
//! f(eta) = cos(theta + 2 eta) + 2 Lambda sin(eta)
//! ```
//!
//! over the admissible half-angle `eta in [0, (pi - theta)/2]` between the two
//! exterior normals. An interior minimizer solves
//! `Lambda cos(eta) = sin(theta + 2 eta)`, and on the bracket
//! `[(pi/2 - theta)_+, (pi - theta)/2]` that equation has exactly one root,
//! with `eta = 0` taking over once `theta >= pi - arcsin(Lambda)` or
//! `Lambda > 1`. The minimized value `kappa_Lambda(theta)` feeds the cost
//! matrix of the transportation program, and the full vector problem on unit
//! quadruples reduces to this one-dimensional family; `k_bruteforce` checks
//! that reduction numerically.

use crate::dim::DimensionContext;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use std::f64::consts::{FRAC_PI_2, PI};

/// Lambda values this close to 1 use the closed form eta = (pi/2 - theta)_+
/// instead of root-finding at the degenerate parameter.
const UNIT_LAMBDA_EPS: f64 = 1e-15;

/// Absolute tolerance on the root eta.
const ROOT_TOL: f64 = 1e-15;

#[inline]
fn f_theta_lambda(big_lambda: f64, theta: f64, eta: f64) -> f64 {
    (theta + 2.0 * eta).cos() + 2.0 * big_lambda * eta.sin()
}

/// Brent's method on a bracketing interval; falls back to bisection whenever
/// the interpolation step stalls, so termination is guaranteed.
fn brent_root<F: Fn(f64) -> f64>(f: F, a0: f64, b0: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a0, b0);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "root not bracketed: f({a})={fa}, f({b})={fb}");
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Secant / inverse quadratic interpolation.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
    }
    b
}

fn check_lambda_theta(big_lambda: f64, theta: f64) -> Result<()> {
    if !(big_lambda > 0.0) {
        return Err(Error::Domain(format!(
            "Lambda must be positive, got {big_lambda}"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "theta must lie in [0, pi], got {theta}"
        )));
    }
    Ok(())
}

/// The minimizing half-angle eta_Lambda(theta).
///
/// Piecewise: 0 when `Lambda > 1` or `theta >= pi - arcsin(Lambda)`; otherwise
/// the unique root of `Lambda cos(eta) = sin(theta + 2 eta)` in
/// `[(pi/2 - theta)_+, (pi - theta)/2]`.
pub fn eta_of_theta(big_lambda: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(big_lambda, theta)?;
    if big_lambda > 1.0 + UNIT_LAMBDA_EPS {
        return Ok(0.0);
    }
    if (big_lambda - 1.0).abs() <= UNIT_LAMBDA_EPS {
        return Ok((FRAC_PI_2 - theta).max(0.0));
    }
    let switch = PI - big_lambda.asin();
    if theta >= switch {
        return Ok(0.0);
    }
    let lo = (FRAC_PI_2 - theta).max(0.0);
    let hi = (PI - theta) / 2.0;
    if theta == 0.0 {
        // Bracket degenerates to {pi/2}; the equation holds there trivially.
        return Ok(FRAC_PI_2);
    }
    // g is <= 0 at lo and >= 0 at hi with a single sign change (the monotone
    // sub-bracket of Lambda(eta)).
    let g = |eta: f64| big_lambda * eta.cos() - (theta + 2.0 * eta).sin();
    Ok(brent_root(g, lo, hi, ROOT_TOL))
}

/// kappa_Lambda(theta): the minimum of `f(eta)` over the admissible interval.
/// Equals `cos(theta)` whenever the minimizing eta is 0 (in particular for all
/// `Lambda >= 1`).
pub fn kappa_of_theta(big_lambda: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(big_lambda, theta)?;
    if big_lambda >= 1.0 - UNIT_LAMBDA_EPS {
        return Ok(theta.cos());
    }
    let eta = eta_of_theta(big_lambda, theta)?;
    Ok(f_theta_lambda(big_lambda, theta, eta))
}

/// d kappa / d theta = -Lambda cos(eta_Lambda(theta)).
///
/// The identity is established only on the open region `0 < Lambda < 1`,
/// `0 < theta < pi - arcsin(Lambda)`; outside it this returns a domain error.
pub fn kappa_dtheta(big_lambda: f64, theta: f64) -> Result<f64> {
    if !(big_lambda > 0.0) || big_lambda >= 1.0 - UNIT_LAMBDA_EPS {
        return Err(Error::Domain(format!(
            "derivative identity requires 0 < Lambda < 1, got {big_lambda}"
        )));
    }
    let switch = PI - big_lambda.asin();
    if !(theta > 0.0 && theta < switch) {
        return Err(Error::Domain(format!(
            "derivative identity requires 0 < theta < pi - arcsin(Lambda) = {switch}, got {theta}"
        )));
    }
    let eta = eta_of_theta(big_lambda, theta)?;
    Ok(-big_lambda * eta.cos())
}

/// Derivative of the piecewise kappa, extended continuously across the
/// boundary theta = pi - arcsin(Lambda) (both one-sided limits equal -Lambda
/// there) and to the cosine branch for Lambda >= 1. Used by the CSV emitter.
pub fn kappa_dtheta_extended(big_lambda: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(big_lambda, theta)?;
    if big_lambda < 1.0 - UNIT_LAMBDA_EPS && theta > 0.0 && theta < PI - big_lambda.asin() {
        let eta = eta_of_theta(big_lambda, theta)?;
        Ok(-big_lambda * eta.cos())
    } else {
        Ok(-theta.sin())
    }
}

fn check_phi_psi(phi: f64, psi: f64) -> Result<()> {
    for (name, v) in [("phi", phi), ("psi", psi)] {
        if !(0.0..=FRAC_PI_2).contains(&v) {
            return Err(Error::Domain(format!(
                "{name} must lie in [0, pi/2], got {v}"
            )));
        }
    }
    Ok(())
}

/// Reduced transport cost.
///
/// `K_lambda(phi, psi) = (d+1)/4 [1 + kappa_Lambda(phi+psi) - (b_d/b_{d-1}) Lambda]`
/// with `Lambda` the normalized multiplier. For `lambda >= lambda_hat` this is
/// exactly `(d+1)/4 [1 + cos(phi+psi)] - lambda`.
pub fn k_reduced(ctx: &DimensionContext, lambda: f64, phi: f64, psi: f64) -> Result<f64> {
    check_phi_psi(phi, psi)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let big_lambda = ctx.lambda_to_big_lambda(lambda)?;
    let kappa = kappa_of_theta(big_lambda, phi + psi)?;
    let d1 = ctx.d as f64 + 1.0;
    Ok(d1 / 4.0 * (1.0 + kappa - ctx.ball_volume / ctx.lower_ball_volume * big_lambda))
}

/// Outcome of the two brute-force phases of [`k_bruteforce`].
#[derive(Clone, Copy, Debug)]
pub struct KBruteforce {
    /// Overall minimum found (min of the two phases).
    pub minimum: f64,
    /// Minimum of the dense coplanar scan.
    pub coplanar_min: f64,
    /// Normal half-angle parameter `2 eta` attaining the coplanar minimum.
    pub coplanar_arg_2eta: f64,
    /// Minimum over the random feasible quadruples.
    pub random_min: f64,
}

/// Scan resolution in the coplanar parameter 2 eta.
const SCAN_RESOLUTION: f64 = 1e-4;

/// Direct numerical minimization of the unreduced cost
/// `(d+1)/4 |v1+v2|^2/2 + lambda (b_{d-1}/b_d |n1-n2| - 1)` over unit
/// quadruples with `<v1,n1> = cos(phi)`, `<v2,n2> = cos(psi)`.
///
/// Phase (a) scans coplanar configurations (vectors ordered v1, n1, n2, v2 at
/// consecutive angles phi, 2 eta, psi) with `2 eta` stepping through `[0, pi]`
/// at resolution 1e-4. Phase (b) draws `samples` random feasible quadruples on
/// `(S^{d-1})^4` from the seeded counter generator. Every evaluated
/// configuration is feasible, so the result is a true upper bound on the
/// infimum; the scan makes it tight to scan resolution.
pub fn k_bruteforce_detail(
    ctx: &DimensionContext,
    lambda: f64,
    phi: f64,
    psi: f64,
    samples: usize,
    seed: u64,
) -> Result<KBruteforce> {
    check_phi_psi(phi, psi)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if samples < 10_000 {
        return Err(Error::Domain(format!(
            "brute-force oracle needs at least 10^4 samples, got {samples}"
        )));
    }
    let d = ctx.d;
    let d1 = d as f64 + 1.0;
    let ratio = ctx.lower_ball_volume / ctx.ball_volume;
    let theta = phi + psi;

    let objective = |v_sum_sq_half: f64, n_dist: f64| -> f64 {
        d1 / 4.0 * v_sum_sq_half + lambda * (ratio * n_dist - 1.0)
    };

    // Phase (a): coplanar scan. |v1+v2|^2/2 = 1 + cos(theta + 2 eta),
    // |n1-n2| = 2 sin(eta).
    let steps = (PI / SCAN_RESOLUTION).ceil() as usize;
    let mut coplanar_min = f64::INFINITY;
    let mut coplanar_arg = 0.0;
    for k in 0..=steps {
        let two_eta = PI * k as f64 / steps as f64;
        let value = objective(1.0 + (theta + two_eta).cos(), 2.0 * (two_eta / 2.0).sin());
        if value < coplanar_min {
            coplanar_min = value;
            coplanar_arg = two_eta;
        }
    }

    // Phase (b): random feasible quadruples.
    let mut rng = CounterRng::new(seed, 0);
    let mut random_min = f64::INFINITY;
    for _ in 0..samples {
        let n1 = rng.unit_vector(d);
        let n2 = rng.unit_vector(d);
        let v1 = tilted_unit(&mut rng, &n1, phi);
        let v2 = tilted_unit(&mut rng, &n2, psi);
        let mut sum_sq = 0.0;
        let mut dist_sq = 0.0;
        for i in 0..d {
            let s = v1[i] + v2[i];
            let t = n1[i] - n2[i];
            sum_sq += s * s;
            dist_sq += t * t;
        }
        let value = objective(sum_sq / 2.0, dist_sq.sqrt());
        if value < random_min {
            random_min = value;
        }
    }

    Ok(KBruteforce {
        minimum: coplanar_min.min(random_min),
        coplanar_min,
        coplanar_arg_2eta: coplanar_arg,
        random_min,
    })
}

/// See [`k_bruteforce_detail`]; returns only the overall minimum.
pub fn k_bruteforce(
    ctx: &DimensionContext,
    lambda: f64,
    phi: f64,
    psi: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(k_bruteforce_detail(ctx, lambda, phi, psi, samples, seed)?.minimum)
}

/// Unit vector at angle `angle` from `axis`, with the orthogonal direction
/// drawn uniformly at random.
fn tilted_unit(rng: &mut CounterRng, axis: &[f64], angle: f64) -> Vec<f64> {
    let d = axis.len();
    let (sin_a, cos_a) = angle.sin_cos();
    if sin_a == 0.0 {
        return axis.to_vec();
    }
    loop {
        let w = rng.unit_vector(d);
        let dot: f64 = w.iter().zip(axis).map(|(a, b)| a * b).sum();
        let mut u: Vec<f64> = w.iter().zip(axis).map(|(a, b)| a - dot * b).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for x in &mut u {
                *x /= norm;
            }
            return (0..d).map(|i| cos_a * axis[i] + sin_a * u[i]).collect();
        }
    }
}
