//! Exhaustive facet counts of beta-prime convex hulls.

use rayon::prelude::*;
use serde::Serialize;

use super::{oracle_check, ExperimentError, Result};
use crate::analytics;
use crate::processes::{self, dot, norm};
use crate::rng::{self, Purpose};
use crate::stats::{EstimateWithCI, MeanVar};

const MAX_RESAMPLES: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetReport {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub r: f64,
    pub hulls: usize,
    pub subsets_per_hull: usize,
    /// Per-hull fraction of `n`-subsets that span a facet within distance `r`.
    pub frequency: EstimateWithCI,
    pub analytic: f64,
    pub within_3se: Option<bool>,
    /// Hulls redrawn because some subset was degenerate or coplanar with another point.
    pub degenerate_resampled: usize,
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Unit normal and offset of the affine hull of `n` points in `R^n`
/// (`n <= 3`), or `None` when the points are affinely dependent.
fn affine_hull(pts: &[&Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let p0 = pts[0];
    let diff = |p: &Vec<f64>| -> Vec<f64> { p.iter().zip(p0).map(|(a, b)| a - b).collect() };
    let (raw, scale) = match pts.len() {
        1 => (vec![1.0], 1.0),
        2 => {
            let d = diff(pts[1]);
            (vec![-d[1], d[0]], norm(&d))
        }
        3 => {
            let (a, b) = (diff(pts[1]), diff(pts[2]));
            let c = vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            (c, norm(&a) * norm(&b))
        }
        _ => return None,
    };
    let len = norm(&raw);
    if !(len > 1e-12 * scale) {
        return None;
    }
    let u: Vec<f64> = raw.iter().map(|v| v / len).collect();
    let b = dot(&u, p0);
    Some((u, b))
}

/// Facet fraction of one hull, or `None` when it must be redrawn.
fn hull_fraction(points: &[Vec<f64>], subsets: &[Vec<usize>], r: f64) -> Option<f64> {
    let mut hits = 0usize;
    for s in subsets {
        let chosen: Vec<&Vec<f64>> = s.iter().map(|&i| &points[i]).collect();
        let (u, b) = affine_hull(&chosen)?;
        let mut sign = 0.0f64;
        let mut facet = true;
        for (k, p) in points.iter().enumerate() {
            if s.contains(&k) {
                continue;
            }
            let side = dot(&u, p) - b;
            if side.abs() <= 1e-12 * (1.0 + norm(p) + b.abs()) {
                return None;
            }
            if sign == 0.0 {
                sign = side.signum();
            } else if side.signum() != sign {
                facet = false;
            }
        }
        if facet && b.abs() <= r {
            hits += 1;
        }
    }
    Some(hits as f64 / subsets.len() as f64)
}

/// Draw `hulls` samples of `m` beta-prime points and compare the frequency of
/// facets within distance `r` of the origin with the closed form.
pub fn facet_check(n: usize, m: usize, sigma: f64, r: f64, hulls: usize, seed: u64) -> Result<FacetReport> {
    if !(1..=3).contains(&n) || m <= n || m > 12 {
        return Err(ExperimentError::InvalidArgument(format!("facet check needs n in 1..=3 and n < m <= 12, got n={n}, m={m}")));
    }
    if hulls == 0 || !(sigma > 0.0 && sigma.is_finite()) || !(r > 0.0) {
        return Err(ExperimentError::InvalidArgument(format!("hulls={hulls}, sigma={sigma}, r={r}")));
    }
    let analytic = analytics::facet_probability(n, m, sigma, r)?;
    let subsets = combinations(m, n);
    let per_hull: Vec<(f64, usize)> = (0..hulls as u64)
        .into_par_iter()
        .map(|h| {
            let base = rng::derive_seed(seed, h, Purpose::BetaPrime);
            for attempt in 0..MAX_RESAMPLES {
                let pts = processes::sample_beta_prime(n, sigma, m, rng::derive_seed(base, attempt, Purpose::BetaPrime))?;
                if let Some(f) = hull_fraction(&pts, &subsets, r) {
                    return Ok((f, attempt as usize));
                }
            }
            Err(ExperimentError::InvalidArgument(format!("hull {h} stayed degenerate after {MAX_RESAMPLES} draws")))
        })
        .collect::<Result<_>>()?;
    let mut acc = MeanVar::default();
    per_hull.iter().for_each(|&(f, _)| acc.push(f));
    let frequency = acc.estimate(0);
    Ok(FacetReport {
        n,
        m,
        sigma,
        r,
        hulls,
        subsets_per_hull: subsets.len(),
        within_3se: oracle_check(&frequency, Some(analytic)).1,
        frequency,
        analytic,
        degenerate_resampled: per_hull.iter().map(|&(_, a)| a).sum(),
    })
}
