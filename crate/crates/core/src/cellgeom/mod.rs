//! Geometry of the zero cell `{x : <u_i, x> <= τ_i for all i}`.
//!
//! Everything here works on a window-restricted sample. A plane with offset
//! `τ` can only cut the cell at radii `>= τ`, so once the cell is verified to
//! lie inside `B(window_r)` it is exactly the zero cell of the full process.
//! [`certify`] grows the window until that holds.

mod halfspace;
mod polygon;
mod section;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub use halfspace::{HalfspaceSystem, RayExit, TIE_TOL};
pub use polygon::{clip_system, Polygon2D};
pub use section::{induced_intensity, intersect_with_subspace, random_frame};

use crate::lp::LpError;
use crate::processes::{self, dot, norm, uniform_direction, Hyperplane, ProcessError, TessellationSample};
use crate::rng::{self, Purpose};
use crate::specfun;
use crate::stats::{EstimateWithCI, MeanVar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero direction vector")]
    ZeroVector,
    #[error("window truncation: {0}")]
    Truncated(String),
    #[error("certification budget exhausted after {doublings} doublings (window radius {window_r})")]
    BudgetExhausted { doublings: u32, window_r: f64 },
    #[error("empty cell")]
    Empty,
    #[error("hit-and-run chord stayed degenerate after repeated retries")]
    DegenerateChord,
    #[error("subspace basis is not orthonormal")]
    NotOrthonormal,
    #[error("invalid subspace dimension {m} in ambient dimension {n}")]
    InvalidSubspace { n: usize, m: usize },
    #[error("{op} is not available in dimension {dim}")]
    UnsupportedDimension { op: &'static str, dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

fn check_dim(expected: usize, x: &[f64]) -> Result<(), CellError> {
    if x.len() != expected {
        return Err(CellError::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// True when `x` lies strictly beyond the plane (away from the origin).
/// Points within [`TIE_TOL`] of the plane count as the origin side.
#[inline]
pub fn beyond(h: &Hyperplane, x: &[f64]) -> bool {
    h.signed_distance(x) > TIE_TOL
}

/// True iff no hyperplane separates 0 and `x`.
pub fn in_zero_cell(ts: &TessellationSample, x: &[f64]) -> Result<bool, CellError> {
    check_dim(ts.dim, x)?;
    Ok(!ts.hyperplanes.iter().any(|h| beyond(h, x)))
}

/// True iff no hyperplane puts `x` and `y` on opposite sides.
pub fn same_cell(ts: &TessellationSample, x: &[f64], y: &[f64]) -> Result<bool, CellError> {
    check_dim(ts.dim, x)?;
    check_dim(ts.dim, y)?;
    Ok(ts.hyperplanes.iter().all(|h| beyond(h, x) == beyond(h, y)))
}

/// Radius of the largest origin-centered ball inside the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inradius {
    pub radius: f64,
    /// No plane hit the window, so only `radius >= window_r` is known.
    pub truncated: bool,
}

pub fn inradius(ts: &TessellationSample) -> Inradius {
    ts.hyperplanes
        .iter()
        .map(|h| h.offset)
        .min_by(f64::total_cmp)
        .map_or(Inradius { radius: ts.window_r, truncated: true }, |radius| Inradius { radius, truncated: false })
}

/// Distance from the origin to the cell boundary along a direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Radial {
    /// `rho` is exact unless `truncated`, in which case a plane outside the
    /// certified ball might still cut the ray earlier.
    Finite { rho: f64, truncated: bool },
    Unbounded,
}

impl Radial {
    pub fn exact(self) -> Option<f64> {
        match self {
            Radial::Finite { rho, truncated: false } => Some(rho),
            _ => None,
        }
    }
}

fn radial_in(planes: &[Hyperplane], u: &[f64], certified: f64) -> Radial {
    let mut best = f64::INFINITY;
    for h in planes {
        let s = dot(&h.normal, u);
        if s > 0.0 {
            best = best.min(h.offset / s);
        }
    }
    if best.is_finite() {
        Radial::Finite { rho: best, truncated: best > certified }
    } else {
        Radial::Unbounded
    }
}

/// `ρ(u) = min { τ_i / <u_i, u> : <u_i, u> > 0 }`, with `u` normalized first.
pub fn radial_function(ts: &TessellationSample, u: &[f64]) -> Result<Radial, CellError> {
    check_dim(ts.dim, u)?;
    let len = norm(u);
    if len == 0.0 || !len.is_finite() {
        return Err(CellError::ZeroVector);
    }
    let unit: Vec<f64> = u.iter().map(|x| x / len).collect();
    Ok(radial_in(&ts.hyperplanes, &unit, ts.window_r))
}

/// Initial window radius `max(10, 8n/γ + |target|)`.
pub fn initial_window(n: usize, gamma: f64, target_norm: f64) -> f64 {
    (8.0 * n as f64 / gamma + target_norm).max(10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyPolicy {
    /// Random probe directions used above dimension 2 (in addition to `±e_j`).
    pub probe_dirs: usize,
    pub max_doublings: u32,
}

impl Default for CertifyPolicy {
    fn default() -> Self {
        CertifyPolicy { probe_dirs: 64, max_doublings: 6 }
    }
}

/// A sample together with its halfspace system and exactness certificate.
/// Immutable once built; all queries are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCellView {
    pub sample: TessellationSample,
    pub system: HalfspaceSystem,
    pub certified_radius: f64,
    pub truncated: bool,
    pub doublings: u32,
    polygon: Option<Polygon2D>,
}

impl ZeroCellView {
    /// Wrap a sample without extending it. `truncated` reports the probe verdict.
    pub fn from_sample(ts: TessellationSample, policy: &CertifyPolicy) -> Result<Self, CellError> {
        let system = system_of(&ts);
        let (exact, polygon) = exactness(&ts, &system, policy)?;
        Ok(ZeroCellView {
            certified_radius: ts.window_r,
            truncated: !exact,
            doublings: 0,
            sample: ts,
            system,
            polygon,
        })
    }

    pub fn dim(&self) -> usize {
        self.sample.dim
    }

    /// Err unless the view is certified; budget exhaustion is reported as such.
    pub fn require_exact(&self) -> Result<(), CellError> {
        if self.truncated {
            return Err(CellError::BudgetExhausted { doublings: self.doublings, window_r: self.sample.window_r });
        }
        Ok(())
    }

    pub fn radial(&self, u: &[f64]) -> Radial {
        radial_in(&self.sample.hyperplanes, u, self.certified_radius)
    }
}

fn system_of(ts: &TessellationSample) -> HalfspaceSystem {
    let mut s = HalfspaceSystem::new(ts.dim, ts.window_r);
    for h in &ts.hyperplanes {
        s.push(h.normal.clone(), h.offset);
    }
    s
}

/// Whether the window-restricted cell is provably the full cell.
fn exactness(
    ts: &TessellationSample,
    system: &HalfspaceSystem,
    policy: &CertifyPolicy,
) -> Result<(bool, Option<Polygon2D>), CellError> {
    let w = ts.window_r;
    match ts.dim {
        1 => {
            let right = ts.hyperplanes.iter().any(|h| h.normal[0] > 0.0);
            let left = ts.hyperplanes.iter().any(|h| h.normal[0] < 0.0);
            Ok((right && left, None))
        }
        2 => match clip_system(system) {
            Ok(p) if p.r_max < w => Ok((true, Some(p))),
            Ok(_) | Err(CellError::Truncated(_)) => Ok((false, None)),
            Err(e) => Err(e),
        },
        n => {
            let mut rng = rng::stream(ts.seed, ts.hyperplanes.len() as u64, Purpose::Probe);
            let axes = (0..2 * n).map(|k| {
                let mut e = vec![0.0; n];
                e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
                e
            });
            let randoms: Vec<Vec<f64>> = (0..policy.probe_dirs).map(|_| uniform_direction(n, &mut rng)).collect();
            for u in axes.chain(randoms) {
                match radial_in(&ts.hyperplanes, &u, w) {
                    Radial::Finite { truncated: false, .. } => {}
                    _ => return Ok((false, None)),
                }
            }
            Ok((true, None))
        }
    }
}

/// Certify a sample, doubling its window (with fresh independent layers) until
/// the cell is verified inside it or the doubling budget runs out. A view that
/// ran out of budget comes back with `truncated = true`.
pub fn certify(ts: &TessellationSample, policy: &CertifyPolicy) -> Result<ZeroCellView, CellError> {
    let mut current = ts.clone();
    for d in 0..=policy.max_doublings {
        let system = system_of(&current);
        let (exact, polygon) = exactness(&current, &system, policy)?;
        if exact || d == policy.max_doublings {
            return Ok(ZeroCellView {
                certified_radius: current.window_r,
                truncated: !exact,
                doublings: d,
                sample: current,
                system,
                polygon,
            });
        }
        let seed = rng::derive_seed(ts.seed, u64::from(d), Purpose::WindowExtension);
        current = processes::extend_window(&current, 2.0 * current.window_r, seed)?;
    }
    unreachable!("loop returns on the last doubling")
}

/// Per-cell volume estimate `κ_n · mean ρ(u)^n` over antithetic direction pairs,
/// with the standard error across pairs. In one dimension it is exact.
pub fn volume_radial_mc(view: &ZeroCellView, k_dirs: usize, seed: u64) -> Result<EstimateWithCI, CellError> {
    view.require_exact()?;
    if k_dirs == 0 {
        return Err(CellError::InvalidArgument("k_dirs must be positive".into()));
    }
    let n = view.dim();
    let kappa = specfun::log_kappa_unchecked(n as u64).exp();
    let mut rng = rng::stream(seed, 0, Purpose::Directions);
    let mut acc = MeanVar::default();
    let exact_rho = |u: &[f64]| match view.radial(u) {
        Radial::Finite { rho, truncated: false } => Ok(rho),
        _ => Err(CellError::Truncated("radial ray leaves the certified ball".into())),
    };
    for _ in 0..k_dirs.div_ceil(2) {
        let u = uniform_direction(n, &mut rng);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let (a, b) = (exact_rho(&u)?, exact_rho(&neg)?);
        acc.push(0.5 * kappa * (a.powi(n as i32) + b.powi(n as i32)));
    }
    Ok(acc.estimate(0))
}

/// Exact 2-D cell polygon.
pub fn exact_polygon_2d(view: &ZeroCellView) -> Result<Polygon2D, CellError> {
    if view.dim() != 2 {
        return Err(CellError::UnsupportedDimension { op: "exact_polygon_2d", dim: view.dim() });
    }
    view.require_exact()?;
    match &view.polygon {
        Some(p) => Ok(p.clone()),
        None => clip_system(&view.system),
    }
}

/// Vertex maximizing `<direction, x>` over the cell.
pub fn support_vertex(view: &ZeroCellView, direction: &[f64]) -> Result<Vec<f64>, CellError> {
    check_dim(view.dim(), direction)?;
    if norm(direction) == 0.0 {
        return Err(CellError::ZeroVector);
    }
    view.require_exact()?;
    let v = view.system.support_point(direction)?;
    if norm(&v) > view.certified_radius {
        return Err(CellError::Truncated("support vertex outside the certified ball".into()));
    }
    Ok(v)
}

/// `R_M`, the largest vertex norm. Exact in dimensions 1 and 2; above that the
/// maximum of `|support_vertex(d)|` over `k_dirs` random directions, a lower bound.
pub fn r_max_estimate(view: &ZeroCellView, k_dirs: usize, seed: u64) -> Result<f64, CellError> {
    view.require_exact()?;
    match view.dim() {
        1 => {
            let rho = |s: f64| view.radial(&[s]).exact().ok_or_else(|| CellError::Truncated("open interval".into()));
            Ok(rho(1.0)?.max(rho(-1.0)?))
        }
        2 => Ok(exact_polygon_2d(view)?.r_max),
        n => {
            let mut rng = rng::stream(seed, 0, Purpose::Directions);
            let mut best = 0.0f64;
            for _ in 0..k_dirs.max(1) {
                let d = uniform_direction(n, &mut rng);
                best = best.max(norm(&support_vertex(view, &d)?));
            }
            Ok(best)
        }
    }
}

/// Center and radius of the largest ball inside the cell.
pub fn chebyshev_center(view: &ZeroCellView) -> Result<(Vec<f64>, f64), CellError> {
    view.require_exact()?;
    view.system.chebyshev_center()
}

/// Approximately uniform point of the cell by hit-and-run from the Chebyshev center.
pub fn hit_and_run_uniform(view: &ZeroCellView, steps: usize, seed: u64) -> Result<Vec<f64>, CellError> {
    if steps == 0 {
        return Err(CellError::InvalidArgument("steps must be at least 1".into()));
    }
    let (center, _) = chebyshev_center(view)?;
    let mut rng = rng::stream(seed, 0, Purpose::Walk);
    view.system.hit_and_run(&center, steps, &mut rng)
}

/// Exact uniform point of a certified 2-D cell, or hit-and-run above that.
pub fn uniform_point<R: Rng + ?Sized>(view: &ZeroCellView, rng: &mut R) -> Result<Vec<f64>, CellError> {
    if view.dim() == 2 {
        return Ok(exact_polygon_2d(view)?.sample_uniform(rng).to_vec());
    }
    if view.dim() == 1 {
        let hi = view.radial(&[1.0]).exact().ok_or(CellError::Empty)?;
        let lo = view.radial(&[-1.0]).exact().ok_or(CellError::Empty)?;
        return Ok(vec![-lo + (hi + lo) * rng.random::<f64>()]);
    }
    let (center, _) = chebyshev_center(view)?;
    view.system.hit_and_run(&center, 50 * view.dim(), rng)
}

/// One exported row per cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub seed: u64,
    pub n: usize,
    pub gamma: f64,
    pub volume: f64,
    pub inradius: f64,
    pub r_max: f64,
    pub n_vertices: Option<usize>,
    pub truncated: bool,
}

pub fn summarize(view: &ZeroCellView, k_dirs: usize) -> Result<CellSummary, CellError> {
    let seed = view.sample.seed;
    let (volume, n_vertices) = if view.dim() == 2 {
        let p = exact_polygon_2d(view)?;
        (p.area, Some(p.n_vertices()))
    } else {
        (volume_radial_mc(view, k_dirs, seed)?.mean, None)
    };
    Ok(CellSummary {
        seed,
        n: view.dim(),
        gamma: view.sample.gamma,
        volume,
        inradius: inradius(&view.sample).radius,
        r_max: r_max_estimate(view, k_dirs, seed)?,
        n_vertices,
        truncated: view.truncated,
    })
}
