//! Seeded samplers: hyperplane processes inside a ball window, Poisson data,
//! beta-prime clouds and displacement laws.
//!
//! Hyperplanes are stored in the canonical form `{z : <normal, z> = offset}`
//! with a unit normal and `offset >= 0`, so the origin always lies on the
//! nonpositive side of every plane.

use rand::Rng;
use rand_distr::{Distribution, Open01, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Purpose, StreamRng};
use crate::specfun;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("new window radius {new_r} is smaller than the current radius {current_r}")]
    ShrinkingWindow { current_r: f64, new_r: f64 },
    #[error("expected point count {expected:.3e} exceeds the memory guard of {limit:.0e}")]
    MemoryGuard { expected: f64, limit: f64 },
    #[error("invalid tessellation sample: {0}")]
    Invalid(String),
}

/// The hyperplane `{z : <normal, z> = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// Signed value `<normal, x> - offset`; negative on the origin's side.
    #[inline]
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "isotropic")]
    IsotropicPoisson,
    #[serde(rename = "manhattan")]
    ManhattanPoisson,
    #[serde(rename = "grid")]
    DeterministicGrid,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::IsotropicPoisson => "isotropic",
            Model::ManhattanPoisson => "manhattan",
            Model::DeterministicGrid => "grid",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isotropic" | "isotropic_poisson" => Ok(Model::IsotropicPoisson),
            "manhattan" | "manhattan_poisson" => Ok(Model::ManhattanPoisson),
            "grid" | "deterministic_grid" => Ok(Model::DeterministicGrid),
            other => Err(format!("unknown model '{other}' (expected isotropic, manhattan or grid)")),
        }
    }
}

/// A realized hyperplane process restricted to the planes meeting `B_n(window_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TessellationSample {
    pub dim: usize,
    pub model: Model,
    pub gamma: f64,
    pub window_r: f64,
    pub seed: u64,
    pub hyperplanes: Vec<Hyperplane>,
    /// Per-axis shift of a random-phase grid; absent for centered grids and Poisson models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_phase: Option<Vec<f64>>,
}

impl TessellationSample {
    pub fn len(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperplanes.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tessellation samples always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, ProcessError> {
        let ts: TessellationSample =
            serde_json::from_str(s).map_err(|e| ProcessError::Invalid(e.to_string()))?;
        ts.validate()?;
        Ok(ts)
    }

    /// Checks the stored invariants: unit normals of the right dimension and
    /// offsets in `[0, window_r)`.
    pub fn validate(&self) -> Result<(), ProcessError> {
        if self.dim == 0 {
            return Err(ProcessError::ZeroDimension);
        }
        for (i, h) in self.hyperplanes.iter().enumerate() {
            if h.normal.len() != self.dim {
                return Err(ProcessError::Invalid(format!("hyperplane {i} has wrong dimension")));
            }
            if (norm(&h.normal) - 1.0).abs() > 1e-12 {
                return Err(ProcessError::Invalid(format!("hyperplane {i} normal is not unit")));
            }
            if !(h.offset >= 0.0 && h.offset < self.window_r) {
                return Err(ProcessError::Invalid(format!(
                    "hyperplane {i} offset {} outside [0, {})",
                    h.offset, self.window_r
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub dim: usize,
    pub intensity: f64,
    pub window_r: f64,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Displacement {
    /// `N(0, sigma^2 I_n)`.
    GaussianPerDim { sigma: f64 },
    /// Uniform on the sphere of radius `delta`.
    SphereFixed { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridPhase {
    /// Origin at the center of a cell.
    Centered,
    /// Independent uniform shift per axis, drawn from `seed`.
    Random { seed: u64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ProcessError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ProcessError::NonPositive { name, value })
    }
}

fn check_common(n: usize, gamma: f64, window_r: f64) -> Result<(), ProcessError> {
    if n == 0 {
        return Err(ProcessError::ZeroDimension);
    }
    positive("gamma", gamma)?;
    positive("window_r", window_r)?;
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    let k: f64 = dist.sample(rng);
    k as usize
}

/// Uniform direction on S^{n-1}.
pub fn uniform_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&v);
        if len > 1e-300 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

fn isotropic_layer(n: usize, gamma: f64, lo: f64, hi: f64, rng: &mut StreamRng) -> Vec<Hyperplane> {
    let k = poisson_count(2.0 * gamma * (hi - lo), rng);
    (0..k)
        .map(|_| {
            let normal = uniform_direction(n, rng);
            let offset = lo + (hi - lo) * open01(rng);
            Hyperplane { normal, offset }
        })
        .collect()
}

fn axis_plane(n: usize, axis: usize, position: f64) -> Hyperplane {
    let mut normal = vec![0.0; n];
    normal[axis] = if position < 0.0 { -1.0 } else { 1.0 };
    Hyperplane { normal, offset: position.abs() }
}

/// Manhattan planes with `lo <= |position| < hi` on every axis.
fn manhattan_layer(n: usize, gamma: f64, lo: f64, hi: f64, rng: &mut StreamRng) -> Vec<Hyperplane> {
    let per_axis = gamma / n as f64;
    let mut planes = Vec::new();
    for axis in 0..n {
        let k = poisson_count(2.0 * per_axis * (hi - lo), rng);
        for _ in 0..k {
            let magnitude = lo + (hi - lo) * open01(rng);
            let position = if rng.random::<bool>() { magnitude } else { -magnitude };
            planes.push(axis_plane(n, axis, position));
        }
    }
    planes
}

/// Isotropic Poisson hyperplanes meeting `B_n(window_r)`: a Poisson(2γr) number of
/// planes with uniform normals and uniform offsets on `(0, window_r)`.
pub fn sample_isotropic(n: usize, gamma: f64, window_r: f64, seed: u64) -> Result<TessellationSample, ProcessError> {
    check_common(n, gamma, window_r)?;
    let mut rng = rng::stream(seed, 0, Purpose::Hyperplanes);
    Ok(TessellationSample {
        dim: n,
        model: Model::IsotropicPoisson,
        gamma,
        window_r,
        seed,
        hyperplanes: isotropic_layer(n, gamma, 0.0, window_r, &mut rng),
        grid_phase: None,
    })
}

/// Poisson Manhattan planes: on each axis an independent Poisson process of
/// intensity γ/n on `(-window_r, window_r)`.
pub fn sample_manhattan(n: usize, gamma: f64, window_r: f64, seed: u64) -> Result<TessellationSample, ProcessError> {
    check_common(n, gamma, window_r)?;
    let mut rng = rng::stream(seed, 0, Purpose::Hyperplanes);
    Ok(TessellationSample {
        dim: n,
        model: Model::ManhattanPoisson,
        gamma,
        window_r,
        seed,
        hyperplanes: manhattan_layer(n, gamma, 0.0, window_r, &mut rng),
        grid_phase: None,
    })
}

fn grid_planes(n: usize, gamma: f64, window_r: f64, phase: &[f64]) -> Vec<Hyperplane> {
    let half = n as f64 / gamma;
    let mut planes = Vec::new();
    for (axis, &shift) in phase.iter().enumerate() {
        // planes at shift + (2k+1)·half
        let k_lo = ((-window_r - shift) / (2.0 * half) - 0.5).floor() as i64 - 1;
        let k_hi = ((window_r - shift) / (2.0 * half) - 0.5).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let position = shift + (2 * k + 1) as f64 * half;
            if position.abs() < window_r {
                planes.push(axis_plane(n, axis, position));
            }
        }
    }
    planes
}

/// Deterministic axis-aligned grid with spacing `2n/γ`, planes at `(2k+1)·n/γ`
/// (plus a per-axis shift when `phase` is random).
pub fn grid(n: usize, gamma: f64, window_r: f64, phase: GridPhase) -> Result<TessellationSample, ProcessError> {
    check_common(n, gamma, window_r)?;
    let half = n as f64 / gamma;
    let (shift, seed, stored) = match phase {
        GridPhase::Centered => (vec![0.0; n], 0, None),
        GridPhase::Random { seed } => {
            let mut rng = rng::stream(seed, 0, Purpose::GridPhase);
            let s: Vec<f64> = (0..n).map(|_| half * (2.0 * rng.random::<f64>() - 1.0)).collect();
            (s.clone(), seed, Some(s))
        }
    };
    Ok(TessellationSample {
        dim: n,
        model: Model::DeterministicGrid,
        gamma,
        window_r,
        seed,
        hyperplanes: grid_planes(n, gamma, window_r, &shift),
        grid_phase: stored,
    })
}

/// Draw a sample of the given model. Grids use the centered phase.
pub fn sample_model(model: Model, n: usize, gamma: f64, window_r: f64, seed: u64) -> Result<TessellationSample, ProcessError> {
    match model {
        Model::IsotropicPoisson => sample_isotropic(n, gamma, window_r, seed),
        Model::ManhattanPoisson => sample_manhattan(n, gamma, window_r, seed),
        Model::DeterministicGrid => grid(n, gamma, window_r, GridPhase::Centered),
    }
}

/// Grow the window to `new_r`, appending an independent layer of planes with
/// offsets in `[window_r, new_r)`. The union has the law of a fresh sample at
/// `new_r`; existing planes are kept as they are. Grids are regenerated.
pub fn extend_window(ts: &TessellationSample, new_r: f64, seed: u64) -> Result<TessellationSample, ProcessError> {
    positive("new_r", new_r)?;
    if new_r < ts.window_r {
        return Err(ProcessError::ShrinkingWindow { current_r: ts.window_r, new_r });
    }
    if new_r == ts.window_r {
        return Ok(ts.clone());
    }
    let mut out = ts.clone();
    out.window_r = new_r;
    let mut rng = rng::stream(seed, 0, Purpose::WindowExtension);
    match ts.model {
        Model::IsotropicPoisson => {
            out.hyperplanes.extend(isotropic_layer(ts.dim, ts.gamma, ts.window_r, new_r, &mut rng));
        }
        Model::ManhattanPoisson => {
            out.hyperplanes.extend(manhattan_layer(ts.dim, ts.gamma, ts.window_r, new_r, &mut rng));
        }
        Model::DeterministicGrid => {
            let shift = ts.grid_phase.clone().unwrap_or_else(|| vec![0.0; ts.dim]);
            out.hyperplanes = grid_planes(ts.dim, ts.gamma, new_r, &shift);
        }
    }
    Ok(out)
}

/// Homogeneous Poisson points of intensity `lambda` in `B_n(window_r)`.
pub fn sample_poisson_points(n: usize, lambda: f64, window_r: f64, seed: u64) -> Result<PointSample, ProcessError> {
    const LIMIT: f64 = 1e8;
    if n == 0 {
        return Err(ProcessError::ZeroDimension);
    }
    positive("window_r", window_r)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ProcessError::NonPositive { name: "lambda", value: lambda });
    }
    let mean = if lambda == 0.0 {
        0.0
    } else {
        (lambda.ln() + specfun::log_kappa_unchecked(n as u64) + n as f64 * window_r.ln()).exp()
    };
    if mean > LIMIT {
        return Err(ProcessError::MemoryGuard { expected: mean, limit: LIMIT });
    }
    let mut rng = rng::stream(seed, 0, Purpose::DataPoints);
    let k = poisson_count(mean, &mut rng);
    let points = (0..k).map(|_| uniform_in_ball(n, window_r, &mut rng)).collect();
    Ok(PointSample { dim: n, intensity: lambda, window_r, points, seed })
}

pub fn uniform_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = uniform_direction(n, rng);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|x| x * r).collect()
}

/// Draw from the beta-prime density `f_{n,σ}(x) ∝ (1 + |x|²/σ²)^{-(n+1)/2}`,
/// realized as `σ Z / |g|` (a multivariate Cauchy law).
pub fn draw_beta_prime<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g: f64 = StandardNormal.sample(rng);
        if g.abs() < 1e-300 {
            continue;
        }
        let scale = sigma / g.abs();
        return (0..n).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng)).collect();
    }
}

pub fn sample_beta_prime(n: usize, sigma: f64, m: usize, seed: u64) -> Result<Vec<Vec<f64>>, ProcessError> {
    if n == 0 {
        return Err(ProcessError::ZeroDimension);
    }
    if m == 0 {
        return Err(ProcessError::Invalid("m must be at least 1".into()));
    }
    positive("sigma", sigma)?;
    let mut rng = rng::stream(seed, 0, Purpose::BetaPrime);
    Ok((0..m).map(|_| draw_beta_prime(n, sigma, &mut rng)).collect())
}

pub fn draw_displacement<R: Rng + ?Sized>(kind: Displacement, n: usize, rng: &mut R) -> Vec<f64> {
    match kind {
        Displacement::GaussianPerDim { sigma } => {
            (0..n).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
        }
        Displacement::SphereFixed { delta } => {
            uniform_direction(n, rng).into_iter().map(|x| x * delta).collect()
        }
    }
}

pub fn sample_displacement(kind: Displacement, n: usize, seed: u64) -> Result<Vec<f64>, ProcessError> {
    if n == 0 {
        return Err(ProcessError::ZeroDimension);
    }
    match kind {
        Displacement::GaussianPerDim { sigma } => positive("sigma", sigma)?,
        Displacement::SphereFixed { delta } => positive("delta", delta)?,
    };
    let mut rng = rng::stream(seed, 0, Purpose::Displacement);
    Ok(draw_displacement(kind, n, &mut rng))
}
