//! Specular billiard tracer in the unit disc and Monte-Carlo estimators of the
//! normalized visibility and the volume surrogate F1.
//!
//! A ray enters at a boundary point `n` with velocity `-v` (so `<v, n> >= 0`),
//! reflects specularly off obstacle boundaries, and leaves the disc at `n+`
//! with velocity `v+`. The estimators sample the boundary measure with
//! cosine-weighted inward directions and average the visibility integrand
//! `(d+1)/4 * |v + v+|^2 / 2` (d = 2) and the normal displacement `|n - n+|`.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::CounterRng;
use crate::scene::Scene2D;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Bounce cap; beyond it the ray is declared trapped and the whole estimate
/// aborts rather than silently biasing the mean.
pub const MAX_BOUNCES: usize = 10_000;
/// Advance after each bounce to avoid re-hitting the same surface.
const STEP_EPS: f64 = 1e-12;
/// Hits closer than this to a polygon vertex are singular (the outcome is not
/// defined there); the caller discards the sample.
const VERTEX_EPS: f64 = 1e-10;
/// Minimal travel distance for a hit to count.
const T_MIN: f64 = 1e-12;

/// Result of tracing one ray through the scene.
#[derive(Clone, Copy, Debug)]
pub struct RayOutcome {
    /// Entry point on the unit circle.
    pub entry_point: Vec2,
    /// Outward direction v at entry; the particle travels with velocity -v.
    pub entry_v: Vec2,
    /// Exit point on the unit circle.
    pub exit_point: Vec2,
    /// Exit velocity v+ (points out of the disc).
    pub exit_direction: Vec2,
    pub bounces: usize,
    pub path_length: f64,
}

impl RayOutcome {
    /// Visibility integrand |v + v+|^2 / 2 of this ray.
    pub fn deviation(&self) -> f64 {
        (self.entry_v + self.exit_direction).norm_sq() / 2.0
    }

    /// Normal displacement |n - n+|.
    pub fn displacement(&self) -> f64 {
        self.entry_point.dist(self.exit_point)
    }
}

/// Identifies the surface element a ray last bounced off. A straight ray
/// leaving a disc boundary or an edge line cannot hit that same element again
/// before hitting something else, so excluding it for one step removes the
/// spurious self-intersections that grazing reflections otherwise produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Surface {
    None,
    Disc(usize),
    Edge(usize, usize),
}

struct Hit {
    t: f64,
    point: Vec2,
    normal: Vec2,
    surface: Surface,
    near_vertex: bool,
}

fn nearest_hit(scene: &Scene2D, p: Vec2, u: Vec2, exclude: Surface) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let mut consider = |hit: Hit| {
        if best.as_ref().map_or(true, |b| hit.t < b.t) {
            best = Some(hit);
        }
    };

    for (di, disc) in scene.discs.iter().enumerate() {
        if exclude == Surface::Disc(di) {
            continue;
        }
        let oc = p - disc.center;
        let b = oc.dot(u);
        let c = oc.norm_sq() - disc.radius * disc.radius;
        let disc_sq = b * b - c;
        if disc_sq <= 0.0 {
            continue;
        }
        let sq = disc_sq.sqrt();
        for t in [-b - sq, -b + sq] {
            if t > T_MIN {
                let point = p + u.scale(t);
                consider(Hit {
                    t,
                    point,
                    normal: (point - disc.center).scale(1.0 / disc.radius),
                    surface: Surface::Disc(di),
                    near_vertex: false,
                });
                break;
            }
        }
    }

    for (pi, poly) in scene.polygons.iter().enumerate() {
        let m = poly.vertices.len();
        for i in 0..m {
            if exclude == Surface::Edge(pi, i) {
                continue;
            }
            let a = poly.vertices[i];
            let b = poly.vertices[(i + 1) % m];
            let e = b - a;
            let denom = u.x * e.y - u.y * e.x;
            if denom.abs() < 1e-15 {
                continue;
            }
            let ap = a - p;
            let t = (ap.x * e.y - ap.y * e.x) / denom;
            let s = (ap.x * u.y - ap.y * u.x) / denom;
            if t > T_MIN && (0.0..=1.0).contains(&s) {
                let point = p + u.scale(t);
                let normal = e.perp().normalized();
                let near_vertex =
                    point.dist(a) < VERTEX_EPS || point.dist(b) < VERTEX_EPS;
                consider(Hit {
                    t,
                    point,
                    normal,
                    surface: Surface::Edge(pi, i),
                    near_vertex,
                });
            }
        }
    }
    best
}

/// Trace the billiard ray that enters at `n` with velocity `-v`.
pub fn trace(scene: &Scene2D, v: Vec2, n: Vec2) -> Result<RayOutcome> {
    if (n.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "entry point must lie on the unit circle, |n| = {}",
            n.norm()
        )));
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "entry direction must be a unit vector, |v| = {}",
            v.norm()
        )));
    }
    if v.dot(n) < -1e-12 {
        return Err(Error::Domain(
            "entry direction must satisfy <v, n> >= 0".into(),
        ));
    }

    let mut p = n;
    let mut u = -v;
    let mut bounces = 0usize;
    let mut path_length = 0.0;
    let mut last_surface = Surface::None;
    loop {
        match nearest_hit(scene, p, u, last_surface) {
            Some(hit) => {
                if hit.near_vertex {
                    return Err(Error::SingularHit(VERTEX_EPS));
                }
                bounces += 1;
                if bounces > MAX_BOUNCES {
                    return Err(Error::TrappedRay(MAX_BOUNCES));
                }
                path_length += hit.t;
                u = u.reflect(hit.normal);
                p = hit.point + u.scale(STEP_EPS);
                path_length += STEP_EPS;
                last_surface = hit.surface;
            }
            None => {
                // Exit through the unit circle: positive root of |p + t u| = 1.
                let b = p.dot(u);
                let t = -b + (b * b + 1.0 - p.norm_sq()).max(0.0).sqrt();
                let exit = (p + u.scale(t)).normalized();
                path_length += t;
                return Ok(RayOutcome {
                    entry_point: n,
                    entry_v: v,
                    exit_point: exit,
                    exit_direction: u,
                    bounces,
                    path_length,
                });
            }
        }
    }
}

/// A Monte-Carlo mean with its standard error; `seed` replays the run.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Samples contributing to the mean (requested minus discarded).
    pub samples: usize,
    pub seed: u64,
    /// Singular hits excluded from the mean.
    pub discarded: usize,
}

/// Draw the boundary measure: `n` uniform on the circle, `v` cosine-weighted
/// in the hemisphere around `n` (sin(alpha) uniform on [-1, 1]).
#[inline]
fn sample_entry(seed: u64, index: u64) -> (Vec2, Vec2) {
    let mut rng = CounterRng::new(seed, 2 * index);
    let t = rng.uniform(0.0, 2.0 * PI);
    let s = rng.uniform(-1.0, 1.0);
    let n = Vec2::new(t.cos(), t.sin());
    let alpha = s.asin();
    let (sin_a, cos_a) = alpha.sin_cos();
    let v = n.scale(cos_a) + n.perp().scale(sin_a);
    (v, n)
}

const CHUNK: usize = 1 << 14;

/// Parallel Monte-Carlo average of `integrand` over the boundary measure.
/// Chunked by sample index with a sequential merge, so the result is
/// byte-identical regardless of thread count.
fn mc_run<F>(scene: &Scene2D, samples: usize, seed: u64, integrand: F) -> Result<McEstimate>
where
    F: Fn(&RayOutcome) -> f64 + Sync,
{
    if samples < 1_000 {
        return Err(Error::InvalidInput(format!(
            "Monte-Carlo estimates need at least 10^3 samples, got {samples}"
        )));
    }
    struct Acc {
        sum: f64,
        sum_sq: f64,
        used: usize,
        discarded: usize,
    }
    let chunk_count = samples.div_ceil(CHUNK);
    let accs: Vec<Acc> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| -> Result<Acc> {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(samples);
            let mut acc = Acc {
                sum: 0.0,
                sum_sq: 0.0,
                used: 0,
                discarded: 0,
            };
            for index in lo..hi {
                let (v, n) = sample_entry(seed, index as u64);
                match trace(scene, v, n) {
                    Ok(outcome) => {
                        let x = integrand(&outcome);
                        acc.sum += x;
                        acc.sum_sq += x * x;
                        acc.used += 1;
                    }
                    Err(Error::SingularHit(_)) => acc.discarded += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut used = 0usize;
    let mut discarded = 0usize;
    for acc in accs {
        sum += acc.sum;
        sum_sq += acc.sum_sq;
        used += acc.used;
        discarded += acc.discarded;
    }
    if discarded as f64 > 1e-4 * samples as f64 {
        return Err(Error::Solver(format!(
            "{discarded} of {samples} rays hit polygon vertices; scene too singular for a reliable estimate"
        )));
    }
    let n = used as f64;
    let mean = sum / n;
    let variance = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        samples: used,
        seed,
        discarded,
    })
}

/// Monte-Carlo estimate of the normalized visibility: the average of
/// `(d+1)/4 * |v + v+|^2 / 2` with d = 2.
pub fn estimate_visibility(scene: &Scene2D, samples: usize, seed: u64) -> Result<McEstimate> {
    mc_run(scene, samples, seed, |outcome| 0.75 * outcome.deviation())
}

/// Monte-Carlo estimate of the volume surrogate
/// `F1 = 1 - (b_1/b_2) E|n - n+| = 1 - (2/pi) E|n - n+|`; the normalized
/// volume of the scene is bounded by it.
pub fn estimate_f1(scene: &Scene2D, samples: usize, seed: u64) -> Result<McEstimate> {
    mc_run(scene, samples, seed, |outcome| {
        1.0 - 2.0 / PI * outcome.displacement()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }

    #[test]
    fn free_flight_reverses_velocity() {
        let scene = Scene2D::empty();
        let n = unit(0.3);
        let v = unit(0.3 + 0.4); // <v, n> = cos 0.4 > 0
        let out = trace(&scene, v, n).unwrap();
        assert_eq!(out.bounces, 0);
        assert!((out.exit_direction + v).norm() < 1e-12);
        assert!(out.deviation() < 1e-24);
        // Chord length 2 cos(alpha).
        assert!((out.path_length - 2.0 * 0.4f64.cos()).abs() < 1e-12);
        assert!((out.displacement() - out.path_length).abs() < 1e-12);
    }

    #[test]
    fn near_full_disc_reflects_like_the_sphere() {
        let scene = Scene2D::new(vec![], vec![(0.0, 0.0, 1.0 - 1e-9)]).unwrap();
        let n = unit(1.1);
        let alpha = 0.5;
        let v = unit(1.1 + alpha);
        let out = trace(&scene, v, n).unwrap();
        assert_eq!(out.bounces, 1);
        let expected = (-v).reflect(n);
        assert!((out.exit_direction - expected).norm() < 1e-6);
        assert!((out.deviation() - 2.0 * alpha.cos().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn head_on_segment_reflection() {
        // Rectangle with a vertical left edge at x = 0.2; ray along -x.
        let scene = Scene2D::new(
            vec![vec![(0.2, -0.4), (0.3, -0.4), (0.3, 0.4), (0.2, 0.4)]],
            vec![],
        )
        .unwrap();
        let n = Vec2::new(1.0, 0.1).normalized();
        // Aim straight along -x from the boundary point.
        let v = Vec2::new(1.0, 0.0);
        assert!(v.dot(n) > 0.0);
        let out = trace(&scene, v, n).unwrap();
        assert_eq!(out.bounces, 1);
        // Head-on specular reflection sends the ray back along +x.
        assert!((out.exit_direction - Vec2::new(1.0, 0.0)).norm() < 1e-9);
        // It must exit exactly where it entered (up to the bounce advance).
        assert!((out.exit_point - n).norm() < 1e-9);
    }

    #[test]
    fn energy_is_conserved_per_trace() {
        let scene = Scene2D::new(
            vec![vec![(-0.3, -0.3), (0.3, -0.35), (0.32, 0.3), (-0.25, 0.28)]],
            vec![(0.6, 0.0, 0.15)],
        )
        .unwrap();
        for k in 0..200 {
            let (v, n) = sample_entry(5, k);
            if let Ok(out) = trace(&scene, v, n) {
                assert!((out.exit_direction.norm() - 1.0).abs() < 1e-9);
                assert!(out.path_length >= out.displacement() - 1e-12);
            }
        }
    }

    #[test]
    fn traces_are_reversible() {
        let scene = Scene2D::new(
            vec![vec![(-0.3, -0.3), (0.3, -0.35), (0.32, 0.3), (-0.25, 0.28)]],
            vec![(0.6, 0.0, 0.15), (-0.55, 0.35, 0.12)],
        )
        .unwrap();
        let mut checked = 0;
        for k in 0..400 {
            let (v, n) = sample_entry(11, k);
            let Ok(out) = trace(&scene, v, n) else {
                continue;
            };
            if out.bounces > 10 {
                continue;
            }
            let back = trace(&scene, out.exit_direction, out.exit_point).unwrap();
            assert!(
                (back.exit_point - n).norm() < 1e-6,
                "k={k}: returned to {:?}, expected {:?}",
                back.exit_point,
                n
            );
            assert!((back.exit_direction - v).norm() < 1e-6);
            assert_eq!(back.bounces, out.bounces);
            checked += 1;
        }
        assert!(checked > 100, "too few reversible rays checked: {checked}");
    }

    #[test]
    fn empty_scene_estimates_are_exact_zero_and_f1_zero_mean() {
        let scene = Scene2D::empty();
        let vis = estimate_visibility(&scene, 10_000, 1).unwrap();
        assert_eq!(vis.mean, 0.0);
        assert_eq!(vis.std_error, 0.0);
        assert_eq!(vis.discarded, 0);
        // Free flight: E|n - n+| is the cosine-weighted mean chord pi/2, so F1
        // has mean zero (the volume chain is tight for the empty scene).
        let f1 = estimate_f1(&scene, 200_000, 1).unwrap();
        assert!(
            f1.mean.abs() <= 3.0 * f1.std_error,
            "F1 mean {} se {}",
            f1.mean,
            f1.std_error
        );
    }

    #[test]
    fn disc_visibility_matches_radius() {
        let scene = Scene2D::new(vec![], vec![(0.0, 0.0, 0.6)]).unwrap();
        let est = estimate_visibility(&scene, 200_000, 42).unwrap();
        assert!(
            (est.mean - 0.6).abs() <= 3.0 * est.std_error,
            "mean {} se {}",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn full_disc_f1_is_one() {
        let scene = Scene2D::new(vec![], vec![(0.0, 0.0, 1.0 - 1e-9)]).unwrap();
        let est = estimate_f1(&scene, 20_000, 3).unwrap();
        // n+ = n up to the 1e-9 shell, so the displacement vanishes.
        assert!((est.mean - 1.0).abs() < 1e-4, "mean {}", est.mean);
    }

    #[test]
    fn estimates_are_deterministic_and_seeded() {
        let scene = Scene2D::new(vec![], vec![(0.2, -0.1, 0.3)]).unwrap();
        let a = estimate_visibility(&scene, 5_000, 9).unwrap();
        let b = estimate_visibility(&scene, 5_000, 9).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std_error, b.std_error);
        assert_eq!(a.seed, 9);
        let c = estimate_visibility(&scene, 5_000, 10).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn rejects_tiny_sample_counts_and_bad_entries() {
        let scene = Scene2D::empty();
        assert!(estimate_visibility(&scene, 10, 0).is_err());
        assert!(trace(&scene, Vec2::new(1.0, 0.0), Vec2::new(0.5, 0.0)).is_err());
        assert!(trace(&scene, Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0)).is_err());
        // Inward-pointing v violates <v, n> >= 0.
        assert!(trace(&scene, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)).is_err());
    }
}

