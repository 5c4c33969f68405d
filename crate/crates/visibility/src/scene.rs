//! 2D obstacle scenes: unions of closed simple polygons and discs, all
//! strictly inside the unit disc and pairwise disjoint.

use crate::error::{Error, Result};
use crate::geom::{point_in_polygon, point_segment_dist_sq, segments_intersect, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Obstacles must keep this margin to the unit circle.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    /// Shoelace area (winding-independent).
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut twice = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            twice += a.x * b.y - b.x * a.y;
        }
        twice.abs() / 2.0
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Validated obstacle scene with its exact area precomputed.
#[derive(Clone, Debug, Default)]
pub struct Scene2D {
    pub polygons: Vec<Polygon>,
    pub discs: Vec<Disc>,
    area: f64,
}

/// On-disk scene representation.
#[derive(Serialize, Deserialize)]
struct SceneFile {
    #[serde(default)]
    polygons: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    discs: Vec<DiscSpec>,
}

#[derive(Serialize, Deserialize)]
struct DiscSpec {
    cx: f64,
    cy: f64,
    r: f64,
}

impl Scene2D {
    pub fn empty() -> Scene2D {
        Scene2D::default()
    }

    pub fn new(polygons: Vec<Vec<(f64, f64)>>, discs: Vec<(f64, f64, f64)>) -> Result<Scene2D> {
        let polygons: Vec<Polygon> = polygons
            .into_iter()
            .map(|vs| Polygon {
                vertices: vs.into_iter().map(|(x, y)| Vec2::new(x, y)).collect(),
            })
            .collect();
        let discs: Vec<Disc> = discs
            .into_iter()
            .map(|(cx, cy, r)| Disc {
                center: Vec2::new(cx, cy),
                radius: r,
            })
            .collect();

        let limit = 1.0 - BOUNDARY_MARGIN;
        for (k, poly) in polygons.iter().enumerate() {
            if poly.vertices.len() < 3 {
                return Err(Error::Scene(format!(
                    "polygon {k} has fewer than 3 vertices"
                )));
            }
            for v in &poly.vertices {
                if !v.x.is_finite() || !v.y.is_finite() || v.norm() > limit {
                    return Err(Error::Scene(format!(
                        "polygon {k} vertex ({}, {}) leaves the unit disc margin",
                        v.x, v.y
                    )));
                }
            }
            // Simplicity: non-adjacent edges must not intersect.
            let edges: Vec<(Vec2, Vec2)> = poly.edges().collect();
            let n = edges.len();
            for i in 0..n {
                for j in i + 1..n {
                    if j == i + 1 || (i == 0 && j == n - 1) {
                        continue;
                    }
                    if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                        return Err(Error::Scene(format!(
                            "polygon {k} is self-intersecting (edges {i} and {j})"
                        )));
                    }
                }
            }
            if poly.area() == 0.0 {
                return Err(Error::Scene(format!("polygon {k} is degenerate")));
            }
        }
        for (k, disc) in discs.iter().enumerate() {
            if !(disc.radius > 0.0)
                || !disc.center.x.is_finite()
                || !disc.center.y.is_finite()
                || disc.center.norm() + disc.radius > limit
            {
                return Err(Error::Scene(format!(
                    "disc {k} (center ({}, {}), radius {}) leaves the unit disc margin",
                    disc.center.x, disc.center.y, disc.radius
                )));
            }
        }

        // Pairwise separation.
        for i in 0..discs.len() {
            for j in i + 1..discs.len() {
                let gap = discs[i].center.dist(discs[j].center)
                    - discs[i].radius
                    - discs[j].radius;
                if gap <= 0.0 {
                    return Err(Error::Scene(format!("discs {i} and {j} overlap")));
                }
            }
        }
        for (pi, poly) in polygons.iter().enumerate() {
            for (di, disc) in discs.iter().enumerate() {
                if point_in_polygon(disc.center, &poly.vertices) {
                    return Err(Error::Scene(format!(
                        "disc {di} lies inside polygon {pi}"
                    )));
                }
                for (a, b) in poly.edges() {
                    if point_segment_dist_sq(disc.center, a, b) <= disc.radius * disc.radius {
                        return Err(Error::Scene(format!(
                            "disc {di} touches polygon {pi}"
                        )));
                    }
                }
            }
        }
        for i in 0..polygons.len() {
            for j in i + 1..polygons.len() {
                for (a, b) in polygons[i].edges() {
                    for (c, d) in polygons[j].edges() {
                        if segments_intersect(a, b, c, d) {
                            return Err(Error::Scene(format!(
                                "polygons {i} and {j} intersect"
                            )));
                        }
                    }
                }
                if point_in_polygon(polygons[i].vertices[0], &polygons[j].vertices)
                    || point_in_polygon(polygons[j].vertices[0], &polygons[i].vertices)
                {
                    return Err(Error::Scene(format!(
                        "polygon {i} and polygon {j} are nested"
                    )));
                }
            }
        }

        let area = polygons.iter().map(Polygon::area).sum::<f64>()
            + discs
                .iter()
                .map(|d| PI * d.radius * d.radius)
                .sum::<f64>();
        Ok(Scene2D {
            polygons,
            discs,
            area,
        })
    }

    /// Exact area: shoelace sums plus pi r^2 per disc.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Normalized volume [D] = area / pi.
    pub fn normalized_volume(&self) -> f64 {
        self.area / PI
    }

    pub fn from_json(text: &str) -> Result<Scene2D> {
        let file: SceneFile = serde_json::from_str(text)?;
        Scene2D::new(
            file.polygons
                .into_iter()
                .map(|p| p.into_iter().map(|[x, y]| (x, y)).collect())
                .collect(),
            file.discs.into_iter().map(|d| (d.cx, d.cy, d.r)).collect(),
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Scene2D> {
        Scene2D::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = SceneFile {
            polygons: self
                .polygons
                .iter()
                .map(|p| p.vertices.iter().map(|v| [v.x, v.y]).collect())
                .collect(),
            discs: self
                .discs
                .iter()
                .map(|d| DiscSpec {
                    cx: d.center.x,
                    cy: d.center.y,
                    r: d.radius,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("scene serialization cannot fail")
    }
}
