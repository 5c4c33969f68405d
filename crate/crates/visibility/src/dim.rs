//! Dimension-dependent constants: sphere areas, ball volumes, and the
//! multiplier normalization used throughout the bound pipeline.

use crate::error::{Error, Result};

/// Gamma(k/2) for integer k >= 1, by exact recursion from Gamma(1/2) = sqrt(pi)
/// and Gamma(1) = 1. Only integer and half-integer arguments ever occur, so no
/// general-purpose approximation is needed.
fn gamma_half_integer(k: u32) -> f64 {
    debug_assert!(k >= 1);
    let mut value = if k % 2 == 1 {
        std::f64::consts::PI.sqrt()
    } else {
        1.0
    };
    let mut arg = if k % 2 == 1 { 1u32 } else { 2u32 };
    while arg < k {
        value *= arg as f64 / 2.0;
        arg += 2;
    }
    value
}

/// Area of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2).
fn sphere_area(d: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// Volume of the unit ball in R^d: s_{d-1} / d.
fn ball_volume(d: u32) -> f64 {
    sphere_area(d) / d as f64
}

/// Constants of the ambient dimension `d`, shared by every module.
///
/// Immutable after construction; freely shareable across threads.
#[derive(Clone, Copy, Debug)]
pub struct DimensionContext {
    /// Ambient dimension, >= 2.
    pub d: usize,
    /// s_{d-1}, area of S^{d-1}.
    pub sphere_area: f64,
    /// b_d, volume of the unit d-ball.
    pub ball_volume: f64,
    /// b_{d-1}, volume of the unit (d-1)-ball.
    pub lower_ball_volume: f64,
    /// lambda-hat = (d+1)/4 * b_d / b_{d-1}; the multiplier where Lambda = 1.
    pub lambda_hat: f64,
}

impl DimensionContext {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let d32 = u32::try_from(d).map_err(|_| Error::InvalidDimension(d))?;
        let ball = ball_volume(d32);
        let lower = ball_volume(d32 - 1);
        Ok(DimensionContext {
            d,
            sphere_area: sphere_area(d32),
            ball_volume: ball,
            lower_ball_volume: lower,
            lambda_hat: (d as f64 + 1.0) / 4.0 * ball / lower,
        })
    }

    /// Lambda = 4/(d+1) * b_{d-1}/b_d * lambda. Linear, increasing, and
    /// `lambda_to_big_lambda(lambda_hat) = 1`.
    pub fn lambda_to_big_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "lambda must be nonnegative, got {lambda}"
            )));
        }
        Ok(4.0 / (self.d as f64 + 1.0) * self.lower_ball_volume / self.ball_volume * lambda)
    }

    /// Inverse of `lambda_to_big_lambda`.
    pub fn big_lambda_to_lambda(&self, big_lambda: f64) -> f64 {
        (self.d as f64 + 1.0) / 4.0 * self.ball_volume / self.lower_ball_volume * big_lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn low_dimension_constants_are_exact() {
        let c2 = DimensionContext::new(2).unwrap();
        assert!((c2.sphere_area - 2.0 * PI).abs() < 1e-15);
        assert!((c2.ball_volume - PI).abs() < 1e-15);
        assert!((c2.lower_ball_volume - 2.0).abs() < 1e-15);
        assert!((c2.lambda_hat - 3.0 * PI / 8.0).abs() < 1e-15);

        let c3 = DimensionContext::new(3).unwrap();
        assert!((c3.sphere_area - 4.0 * PI).abs() < 1e-14);
        assert!((c3.ball_volume - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((c3.lower_ball_volume - PI).abs() < 1e-15);
        assert!((c3.lambda_hat - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_area_is_d_times_ball_volume() {
        for d in 2..=10 {
            let ctx = DimensionContext::new(d).unwrap();
            let ratio = ctx.sphere_area / ctx.ball_volume;
            assert!(
                (ratio - d as f64).abs() / d as f64 <= 1e-14,
                "d={d}: ratio={ratio}"
            );
        }
    }

    #[test]
    fn lambda_hat_maps_to_unit_big_lambda() {
        for d in 2..=8 {
            let ctx = DimensionContext::new(d).unwrap();
            let one = ctx.lambda_to_big_lambda(ctx.lambda_hat).unwrap();
            assert!((one - 1.0).abs() < 1e-14, "d={d}: {one}");
            assert_eq!(ctx.lambda_to_big_lambda(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn conversion_is_linear_and_increasing() {
        let ctx = DimensionContext::new(3).unwrap();
        let f = |x: f64| ctx.lambda_to_big_lambda(x).unwrap();
        let (a, b) = (0.3, 1.1);
        assert!((f(a + b) - (f(a) + f(b))).abs() < 1e-14);
        assert!(f(b) > f(a));
        let back = ctx.big_lambda_to_lambda(f(0.77));
        assert!((back - 0.77).abs() < 1e-14);
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(matches!(
            DimensionContext::new(1),
            Err(Error::InvalidDimension(1))
        ));
        assert!(matches!(
            DimensionContext::new(0),
            Err(Error::InvalidDimension(0))
        ));
    }

    #[test]
    fn rejects_negative_lambda() {
        let ctx = DimensionContext::new(2).unwrap();
        assert!(ctx.lambda_to_big_lambda(-0.1).is_err());
    }
}
