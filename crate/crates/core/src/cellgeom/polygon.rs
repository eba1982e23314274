//! Exact 2-D zero cells by successive halfplane clipping of the window square.

use rand::Rng;
use serde::Serialize;

use super::{CellError, HalfspaceSystem};

/// A convex polygon containing the origin, vertices in counterclockwise order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon2D {
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub r_max: f64,
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let k = v.len();
    0.5 * (0..k)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % k]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn dedupe(points: Vec<[f64; 2]>, eps: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        if let Some(last) = out.last() {
            if (p[0] - last[0]).abs() <= eps && (p[1] - last[1]).abs() <= eps {
                continue;
            }
        }
        out.push(p);
    }
    while out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if (first[0] - last[0]).abs() <= eps && (first[1] - last[1]).abs() <= eps {
            out.pop();
        } else {
            break;
        }
    }
    out
}

/// Clip one halfplane `<a, x> <= b` out of a convex polygon.
fn clip(poly: &[[f64; 2]], a: &[f64], b: f64) -> Vec<[f64; 2]> {
    let k = poly.len();
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..k {
        let (p, q) = (poly[i], poly[(i + 1) % k]);
        let dp = a[0] * p[0] + a[1] * p[1] - b;
        let dq = a[0] * q[0] + a[1] * q[1] - b;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Polygon of a 2-D halfspace system, clipped from the square `[-box_r, box_r]²`.
/// Fails with `Truncated` if any final vertex still lies on the square.
pub fn clip_system(system: &HalfspaceSystem) -> Result<Polygon2D, CellError> {
    if system.dim != 2 {
        return Err(CellError::UnsupportedDimension { op: "exact_polygon_2d", dim: system.dim });
    }
    let w = system.box_r;
    let eps = 1e-12 * w.max(1.0);
    let mut poly = vec![[-w, -w], [w, -w], [w, w], [-w, w]];
    for (a, &b) in system.normals.iter().zip(&system.offsets) {
        poly = dedupe(clip(&poly, a, b), eps);
        if poly.len() < 3 {
            return Err(CellError::Empty);
        }
    }
    let edge = w * (1.0 - 1e-12);
    if poly.iter().any(|p| p[0].abs() >= edge || p[1].abs() >= edge) {
        return Err(CellError::Truncated("polygon vertex on the window square".into()));
    }
    let area = shoelace(&poly);
    let r_max = poly.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    Ok(Polygon2D { vertices: poly, area, r_max })
}

impl Polygon2D {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of vertices with norm strictly greater than `r`.
    pub fn vertices_beyond(&self, r: f64) -> usize {
        self.vertices.iter().filter(|p| p[0].hypot(p[1]) > r).count()
    }

    /// Largest distance from `x` to a vertex, which is the farthest point of the polygon.
    pub fn farthest_from(&self, x: [f64; 2]) -> f64 {
        self.vertices.iter().map(|p| (p[0] - x[0]).hypot(p[1] - x[1])).fold(0.0, f64::max)
    }

    /// Exact uniform draw by choosing a fan triangle proportional to area.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let v = &self.vertices;
        let tri_area = |i: usize| {
            let (a, b, c) = (v[0], v[i], v[i + 1]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
        };
        let total: f64 = (1..v.len() - 1).map(tri_area).sum();
        let mut target = rng.random::<f64>() * total;
        let mut idx = v.len() - 2;
        for i in 1..v.len() - 1 {
            let a = tri_area(i);
            if target < a {
                idx = i;
                break;
            }
            target -= a;
        }
        let (mut s, mut t) = (rng.random::<f64>(), rng.random::<f64>());
        if s + t > 1.0 {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        let (a, b, c) = (v[0], v[idx], v[idx + 1]);
        [a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])]
    }
}
