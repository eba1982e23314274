//! Closed forms for the zero cell, the typical cell and their separation and
//! distortion laws, evaluated in the log domain so they stay finite in high
//! dimension.

mod dual;
mod tables;

use std::f64::consts::{LN_2, PI};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dual::{
    dual_intensity_density, expected_vertices, facet_probability, gamma_to_sigma, ln_expected_vertices,
    rho_thresholds, sigma_to_gamma, threshold_function, RhoThresholds, VertexSide,
};
pub use tables::{comparison_table, section_expectations, section_moment_bounds, ModelRow, SectionExpectations};

use crate::quad::{self, QuadError};
use crate::specfun::{self, LogValue, SpecfunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("{name} out of range (got {value})")]
    Domain { name: &'static str, value: f64 },
    #[error("unknown {what} '{name}'")]
    Unknown { what: &'static str, name: String },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

/// `ρ` above which the zero-cell volume vanishes in the Shannon regime `γ_n ~ ρn`.
pub const ZERO_CELL_RHO_THRESHOLD: f64 = 1.905_472_264_730_179_8;
/// `ρ` above which the typical-cell volume vanishes in the same regime.
pub const TYPICAL_CELL_RHO_THRESHOLD: f64 = 0.606_530_659_712_633_4;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticsError::Domain { name, value })
    }
}

fn dim(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(AnalyticsError::Specfun(SpecfunError::ZeroDimension(0)));
    }
    Ok(n as u64)
}

fn ln_kappa(n: usize) -> f64 {
    specfun::log_kappa_unchecked(n as u64)
}

fn ln_omega(n: usize) -> f64 {
    (n as f64).ln() + ln_kappa(n)
}

/// `ln c_n = ln(2γκ_{n-1}/(nκ_n))`.
fn ln_chord(n: usize, gamma: f64) -> Result<f64> {
    Ok(specfun::ln_mean_chord_coeff(dim(n)?, positive("gamma", gamma)?)?)
}

/// Scaling `γ_n = ρ n^α` with data intensity `λ_n = n^{n(α-1)} e^{nλ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub rho: f64,
    pub alpha: f64,
    pub lambda_exp: f64,
    /// Distortion radius.
    pub r: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { rho: 1.0, alpha: 0.0, lambda_exp: 0.0, r: 1.0, sigma: 1.0, delta: 1.0 }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        positive("rho", self.rho)?;
        positive("r", self.r)?;
        positive("sigma", self.sigma)?;
        positive("delta", self.delta)?;
        for (name, v) in [("alpha", self.alpha), ("lambda_exp", self.lambda_exp)] {
            if !v.is_finite() {
                return Err(AnalyticsError::Domain { name, value: v });
            }
        }
        Ok(())
    }

    pub fn gamma_n(&self, n: usize) -> f64 {
        self.rho * (n as f64).powf(self.alpha)
    }

    pub fn ln_lambda_n(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf * (self.alpha - 1.0) * nf.ln() + nf * self.lambda_exp
    }

    /// Radius `R n^{3/2 - α}` at which the distortion criteria are evaluated.
    pub fn radius_n(&self, n: usize) -> f64 {
        self.r * (n as f64).powf(1.5 - self.alpha)
    }
}

/// `E[V(Z_0)] = n! κ_n (nκ_n / (2γκ_{n-1}))^n`.
pub fn expected_zero_cell_volume(n: usize, gamma: f64) -> Result<LogValue> {
    let c = ln_chord(n, gamma)?;
    let nf = n as f64;
    Ok(LogValue::from_ln(specfun::ln_gamma(nf + 1.0) + ln_kappa(n) - nf * c))
}

/// Bounds `Γ(n+1) κ_n^k L^{kn} <= E[V(Z_0)^k] <= Γ(kn+1) κ_n^k L^{kn}` with
/// `L = 1/c_n`. At `k = 1` both equal the mean.
pub fn zero_cell_moment_bounds(n: usize, gamma: f64, k: u32) -> Result<(LogValue, LogValue)> {
    if k == 0 {
        return Err(AnalyticsError::Domain { name: "k", value: 0.0 });
    }
    let c = ln_chord(n, gamma)?;
    let (nf, kf) = (n as f64, f64::from(k));
    let common = kf * ln_kappa(n) - kf * nf * c;
    Ok((
        LogValue::from_ln(specfun::ln_gamma(nf + 1.0) + common),
        LogValue::from_ln(specfun::ln_gamma(kf * nf + 1.0) + common),
    ))
}

/// The `(n, γ)`-dependent factor `√n (π n (1+1/n)^{n/2} / (eγ))^{2n}` that
/// brackets `Var V(Z_0)` up to absolute constants. It is not a variance.
pub fn zero_cell_variance_bracket(n: usize, gamma: f64) -> Result<LogValue> {
    dim(n)?;
    positive("gamma", gamma)?;
    let nf = n as f64;
    let inner = PI.ln() + nf.ln() + 0.5 * nf * (1.0 / nf).ln_1p() - 1.0 - gamma.ln();
    Ok(LogValue::from_ln(0.5 * nf.ln() + 2.0 * nf * inner))
}

/// Cell intensity `λ = κ_n (γκ_{n-1}/(nκ_n))^n` of the isotropic tessellation.
pub fn cell_intensity(n: usize, gamma: f64) -> Result<LogValue> {
    let c = ln_chord(n, gamma)?;
    let nf = n as f64;
    Ok(LogValue::from_ln(ln_kappa(n) + nf * (c - LN_2)))
}

/// `E[V(Z)] = 1/λ`.
pub fn expected_typical_cell_volume(n: usize, gamma: f64) -> Result<LogValue> {
    Ok(LogValue::from_ln(-cell_intensity(n, gamma)?.ln()))
}

/// Named separation laws of the isotropic model (and the Manhattan one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparationKind {
    /// `P(no plane meets B(r)) = e^{-2γr}`.
    Contact { r: f64 },
    /// `P(x ∈ Z_0) = e^{-c_n |x|}`.
    PointInZeroCell { norm: f64 },
    /// `P(Y ∈ Z_0)` for `Y` uniform on the sphere of radius `δ`.
    SphereDisplacement { delta: f64 },
    /// `P(r_in(Z) <= a) = 1 - e^{-2γa}`.
    TypicalInradiusCdf { a: f64 },
    /// Manhattan `P(x ∉ Z_0) = 1 - e^{-(γ/n)‖x‖₁}`.
    ManhattanSeparation { l1: f64 },
}

impl FromStr for SeparationKind {
    type Err = AnalyticsError;

    /// Parses `name:value`, e.g. `contact:0.5` or `point_in_z0:1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s.split_once(':').unwrap_or((s, ""));
        let v: f64 = value.parse().map_err(|_| AnalyticsError::Unknown { what: "separation argument", name: s.into() })?;
        match name {
            "contact" => Ok(SeparationKind::Contact { r: v }),
            "point_in_z0" | "point_in_Z0" => Ok(SeparationKind::PointInZeroCell { norm: v }),
            "sphere_displacement" | "sphere_sep" => Ok(SeparationKind::SphereDisplacement { delta: v }),
            "typical_inradius_cdf" | "inradius_cdf" => Ok(SeparationKind::TypicalInradiusCdf { a: v }),
            "manhattan_separation" => Ok(SeparationKind::ManhattanSeparation { l1: v }),
            _ => Err(AnalyticsError::Unknown { what: "separation kind", name: name.into() }),
        }
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() { Ok(v) } else { Err(AnalyticsError::Domain { name, value: v }) }
}

pub fn separation_probability(n: usize, gamma: f64, kind: SeparationKind) -> Result<f64> {
    let c = ln_chord(n, gamma)?.exp();
    Ok(match kind {
        SeparationKind::Contact { r } => (-2.0 * gamma * nonneg("r", r)?).exp(),
        SeparationKind::PointInZeroCell { norm } => (-c * nonneg("norm", norm)?).exp(),
        SeparationKind::SphereDisplacement { delta } => (-c * nonneg("delta", delta)?).exp(),
        SeparationKind::TypicalInradiusCdf { a } => -(-2.0 * gamma * nonneg("a", a)?).exp_m1(),
        SeparationKind::ManhattanSeparation { l1 } => -(-gamma / n as f64 * nonneg("l1", l1)?).exp_m1(),
    })
}

/// `P(Y ∈ Z_0) = E[e^{-c_n|Y|}]` for `Y ~ N(0, σ²I_n)`, by quadrature against
/// the density of `|Y|/σ ~ χ_n`.
pub fn gaussian_separation(n: usize, gamma: f64, sigma: f64) -> Result<f64> {
    let c = ln_chord(n, gamma)?.exp();
    let sigma = nonneg("sigma", sigma)?;
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let b = c * sigma;
    let ln_norm = (0.5 * nf - 1.0) * LN_2 + specfun::ln_gamma(0.5 * nf);
    let integrand = |s: f64| {
        if s <= 0.0 {
            return if n == 1 { (-ln_norm).exp() } else { 0.0 };
        }
        ((nf - 1.0) * s.ln() - 0.5 * s * s - b * s - ln_norm).exp()
    };
    // mode of the integrand; the Gaussian factor makes ±40 around it exhaustive
    let mode = 0.5 * (-b + (b * b + 4.0 * (nf - 1.0)).sqrt());
    let lo = (mode - 40.0).max(0.0);
    let v = quad::integrate(integrand, lo, mode + 40.0, 1e-12)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Limit `e^{-√(2/π) ρσ}` of the Gaussian separation at constant intensity `γ = ρ`.
pub fn gaussian_separation_limit(rho: f64, sigma: f64) -> f64 {
    (-(2.0 / PI).sqrt() * rho * sigma).exp()
}

/// Exponential rates `lim (1/n) ln(·)` in the regime `γ_n ~ ρ n^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    /// `(1/n) ln E[V(Z_0)]` at `α = 1`: `-ln ρ + ln π - 1/2`.
    ZeroCellVolume,
    /// `(1/n) ln E[V(Z)]` at `α = 1`: `-ln ρ - 1/2`.
    TypicalCellVolume,
    /// `(1/n) ln E[N(Z_0)]` for Poisson data: `λ + ln(π/(ρ√e))`.
    PoissonDataCount,
    /// Bound on the conditional probability that the farthest data point of
    /// the cell is beyond `R n^{3/2-α}`: `λ + ½ ln 2πe + ln R - √2ρR/√π + ln 4`.
    FarthestDataPoint,
    /// `(1/n) ln E[N(Z_0 ∩ B(R n^{3/2-α})^c)]`.
    OutsideCount,
    /// `(1/n) ln E[N(Z_0 ∩ B(R n^{3/2-α}))]`.
    InsideCount,
    /// Bound on `(1/n) ln P(R_M >= R n^{3/2-α})`: `ln(ρR√(2π)) - √2ρR/√π + 1`.
    VertexBeyond,
}

impl FromStr for Rate {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero_cell_volume" => Rate::ZeroCellVolume,
            "typical_cell_volume" => Rate::TypicalCellVolume,
            "poisson_data_count" => Rate::PoissonDataCount,
            "farthest_data_point" => Rate::FarthestDataPoint,
            "outside_count" => Rate::OutsideCount,
            "inside_count" => Rate::InsideCount,
            "vertex_beyond" => Rate::VertexBeyond,
            _ => return Err(AnalyticsError::Unknown { what: "rate", name: s.into() }),
        })
    }
}

pub fn rate_function(cfg: &ScalingConfig, which: Rate) -> f64 {
    let (rho, lam, r) = (cfg.rho, cfg.lambda_exp, cfg.r);
    let half_ln_2pie = 0.5 * (2.0 * PI * std::f64::consts::E).ln();
    let x = 2f64.sqrt() * rho * r / PI.sqrt();
    let count = lam + (PI / (rho * 0.5f64.exp())).ln();
    let tail = lam + half_ln_2pie + r.ln() - x;
    match which {
        Rate::ZeroCellVolume => -rho.ln() + PI.ln() - 0.5,
        Rate::TypicalCellVolume => -rho.ln() - 0.5,
        Rate::PoissonDataCount => count,
        Rate::FarthestDataPoint => tail + 4f64.ln(),
        Rate::OutsideCount => {
            if x > 1.0 { tail } else { count }
        }
        Rate::InsideCount => {
            if x < 1.0 { tail } else { count }
        }
        Rate::VertexBeyond => (rho * r * (2.0 * PI).sqrt()).ln() - x + 1.0,
    }
}

/// Threshold `ρ* = e^λ π/√e` separating a vanishing from an exploding
/// expected number of further data points in the zero cell.
pub fn poisson_rho_star(lambda_exp: f64) -> f64 {
    lambda_exp.exp() * ZERO_CELL_RHO_THRESHOLD
}

/// `ρ_u = (√π/(R√2)) · max(1, λ + ½ ln 2πe + ln R + ln 4)`, above which the
/// farthest data point in the cell is within `R n^{3/2-α}` with high probability.
pub fn farthest_point_rho_u(r: f64, lambda_exp: f64) -> Result<f64> {
    positive("R", r)?;
    let a = lambda_exp + 0.5 * (2.0 * PI * std::f64::consts::E).ln() + r.ln() + 4f64.ln();
    Ok(PI.sqrt() / (r * 2f64.sqrt()) * a.max(1.0))
}

/// Large-`n` behavior predicted for a finite-`n` sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Zero,
    Infinite,
    Boundary,
}

/// Limit of `E[N(Z_0)]` for Poisson data in the scaling `cfg`.
pub fn poisson_count_limit(cfg: &ScalingConfig) -> Limit {
    let star = poisson_rho_star(cfg.lambda_exp);
    if cfg.rho > star {
        Limit::Zero
    } else if cfg.rho < star {
        Limit::Infinite
    } else {
        Limit::Boundary
    }
}

/// Expected counts of Poisson data (intensity `λ`) in the zero cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonDataExpectations {
    /// `E[N(Z_0)] = λ E[V(Z_0)]`.
    pub total: LogValue,
    /// `E[N(Z_0 ∩ B(R)^c)] = E[N(Z_0)] Γ_u(n, c_n R)`.
    pub outside: LogValue,
    /// `E[N(Z_0 ∩ B(R))] = E[N(Z_0)] Γ_ℓ(n, c_n R)`.
    pub inside: LogValue,
    /// Jensen bound `P(N(Z_0) = 0) >= e^{-E[N(Z_0)]}`, which is also the Palm
    /// probability that the typical data point is alone in its cell.
    pub jensen_lower_alone: f64,
    /// Second-moment bound `P(N(Z_0) > 0) >= E[V]² / (E[V²] + E[V]/λ)` using
    /// the upper moment bound for `E[V²]`.
    pub second_moment_lower_occupied: f64,
}

pub fn poisson_data_expectations(n: usize, gamma: f64, ln_lambda: f64, radius: f64) -> Result<PoissonDataExpectations> {
    if !ln_lambda.is_finite() {
        return Err(AnalyticsError::Domain { name: "ln_lambda", value: ln_lambda });
    }
    nonneg("radius", radius)?;
    let ev = expected_zero_cell_volume(n, gamma)?;
    let total = LogValue::from_ln(ln_lambda + ev.ln());
    let arg = ln_chord(n, gamma)?.exp() * radius;
    let nf = n as f64;
    let outside = LogValue::from_ln(total.ln() + specfun::ln_reg_gamma_upper(nf, arg)?);
    let inside = LogValue::from_ln(total.ln() + specfun::ln_reg_gamma_lower(nf, arg)?);
    let (_, upper2) = zero_cell_moment_bounds(n, gamma, 2)?;
    // E[V]² / (E[V²] + E[V]/λ), in logs
    let a = upper2.ln();
    let b = ev.ln() - ln_lambda;
    let ln_den = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    let second = (2.0 * ev.ln() - ln_den).exp().min(1.0);
    Ok(PoissonDataExpectations {
        total,
        outside,
        inside,
        jensen_lower_alone: (-total.value()).exp(),
        second_moment_lower_occupied: second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn zero_cell_volume_examples() {
        assert!(close(expected_zero_cell_volume(2, 1.0).unwrap().value(), PI.powi(3) / 2.0, 1e-13));
        assert!(close(expected_zero_cell_volume(1, 2.0).unwrap().value(), 1.0, 1e-14));
        assert!(close(expected_zero_cell_volume(2, 2.0).unwrap().value(), PI.powi(3) / 8.0, 1e-13));
    }

    #[test]
    fn moment_bound_examples() {
        for n in 1..=50 {
            let (lo, hi) = zero_cell_moment_bounds(n, 1.3, 1).unwrap();
            let ev = expected_zero_cell_volume(n, 1.3).unwrap();
            assert!((lo.ln() - ev.ln()).abs() < 1e-12 && (hi.ln() - ev.ln()).abs() < 1e-12);
        }
        let (lo, hi) = zero_cell_moment_bounds(2, 1.0, 2).unwrap();
        assert!(close(hi.value() / lo.value(), 12.0, 1e-12));
        // one dimension: E[V^k] = (k+1)!/γ^k, inside the bounds
        for k in 1..=3u32 {
            let (lo, hi) = zero_cell_moment_bounds(1, 1.0, k).unwrap();
            let exact = (1..=k + 1).product::<u32>() as f64;
            assert!(lo.value() <= exact * (1.0 + 1e-12) && exact <= hi.value() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn variance_bracket_examples() {
        let b = zero_cell_variance_bracket(1, 1.0).unwrap().value();
        assert!(close(b, (PI * 2f64.sqrt() / std::f64::consts::E).powi(2), 1e-13));
        for n in [1, 3, 8] {
            let r = zero_cell_variance_bracket(n, 2.0).unwrap().ln() - zero_cell_variance_bracket(n, 1.0).unwrap().ln();
            assert!((r + 2.0 * n as f64 * LN_2).abs() < 1e-10);
        }
    }

    #[test]
    fn typical_cell_examples() {
        assert!(close(expected_typical_cell_volume(2, 1.0).unwrap().value(), PI, 1e-13));
        assert!(close(cell_intensity(2, 1.0).unwrap().value(), 1.0 / PI, 1e-13));
        for n in 1..=200 {
            let prod = cell_intensity(n, 0.7).unwrap().ln() + expected_typical_cell_volume(n, 0.7).unwrap().ln();
            assert!(prod.abs() < 1e-12);
            let ratio = expected_zero_cell_volume(n, 0.7).unwrap().ln() - expected_typical_cell_volume(n, 0.7).unwrap().ln();
            assert!(ratio >= -1e-12, "n={n}");
        }
    }

    #[test]
    fn separation_examples() {
        assert_eq!(separation_probability(3, 1.0, SeparationKind::Contact { r: 0.0 }).unwrap(), 1.0);
        let p = separation_probability(2, 1.0, SeparationKind::PointInZeroCell { norm: 1.0 }).unwrap();
        assert!(close(p, (-2.0 / PI).exp(), 1e-14));
        let q = separation_probability(5, 2.0, SeparationKind::TypicalInradiusCdf { a: 0.25 }).unwrap();
        assert!(close(q, 1.0 - (-1.0f64).exp(), 1e-14));
        assert!("bogus:1".parse::<SeparationKind>().is_err());
        assert_eq!("contact:0.5".parse::<SeparationKind>().unwrap(), SeparationKind::Contact { r: 0.5 });
    }

    #[test]
    fn gaussian_separation_examples() {
        assert_eq!(gaussian_separation(4, 1.0, 0.0).unwrap(), 1.0);
        // n = 1: E[e^{-|Y|}] = 2 e^{1/2} Φ(-1)
        let expect = 2.0 * 0.5f64.exp() * 0.158_655_253_931_457_07;
        assert!(close(gaussian_separation(1, 1.0, 1.0).unwrap(), expect, 1e-10));
        // tiny σ behaves like 1 - c_n σ E|Z|
        let v = gaussian_separation(3, 1.0, 1e-6).unwrap();
        assert!((1.0 - v) < 1e-5);
    }

    #[test]
    fn rate_examples() {
        let at = |rho: f64| ScalingConfig { rho, ..Default::default() };
        assert!(rate_function(&at(ZERO_CELL_RHO_THRESHOLD), Rate::ZeroCellVolume).abs() < 1e-15);
        assert!((rate_function(&at(1.0), Rate::TypicalCellVolume) + 0.5).abs() < 1e-15);
        assert!(rate_function(&at(TYPICAL_CELL_RHO_THRESHOLD), Rate::TypicalCellVolume).abs() < 1e-15);
        assert!((ZERO_CELL_RHO_THRESHOLD - PI / 0.5f64.exp()).abs() < 1e-15);
        assert!((TYPICAL_CELL_RHO_THRESHOLD - (-0.5f64).exp()).abs() < 1e-15);
        let n = 200;
        let per_n = expected_zero_cell_volume(n, n as f64).unwrap().ln() / n as f64;
        assert!((per_n - (PI.ln() - 0.5)).abs() < 0.02);
    }

    #[test]
    fn poisson_data_examples() {
        let e = poisson_data_expectations(2, 1.0, 0.0, 1.0).unwrap();
        assert!(close(e.total.value(), PI.powi(3) / 2.0, 1e-13));
        assert!(close(e.outside.value() + e.inside.value(), e.total.value(), 1e-13));
        assert!(e.jensen_lower_alone > 0.0 && e.jensen_lower_alone < 1.0);
        let far = poisson_data_expectations(2, 1.0, 0.0, 1e3).unwrap();
        assert!(far.outside.value() < 1e-200);
        assert!(e.second_moment_lower_occupied > 0.0 && e.second_moment_lower_occupied <= 1.0);
    }

    #[test]
    fn case_split_and_rho_u() {
        let cfg = ScalingConfig { rho: 2.0, lambda_exp: 0.0, ..Default::default() };
        assert_eq!(poisson_count_limit(&cfg), Limit::Zero);
        let cfg = ScalingConfig { rho: 1.0, lambda_exp: 0.0, ..Default::default() };
        assert_eq!(poisson_count_limit(&cfg), Limit::Infinite);
        let r = 10.0;
        let rho_u = farthest_point_rho_u(r, 0.0).unwrap();
        let at = ScalingConfig { rho: rho_u, r, ..Default::default() };
        assert!(rate_function(&at, Rate::FarthestDataPoint).abs() < 1e-12);
    }

    // Direct floating-point evaluation with products, for the log-domain cross-check.
    fn direct_volume(n: usize, gamma: f64) -> f64 {
        let mut kappa = vec![1.0, 2.0];
        for k in 2..=n {
            kappa.push(kappa[k - 2] * 2.0 * PI / k as f64);
        }
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let l = n as f64 * kappa[n] / (2.0 * gamma * kappa[n - 1]);
        fact * kappa[n] * l.powi(n as i32)
    }

    proptest! {
        #[test]
        fn log_domain_matches_direct(n in 1usize..=150, gamma in 0.5f64..50.0) {
            let direct = direct_volume(n, gamma);
            prop_assume!(direct.is_finite() && direct > 1e-300);
            let v = expected_zero_cell_volume(n, gamma).unwrap().value();
            prop_assert!(close(v, direct, 1e-10), "n={} {} vs {}", n, v, direct);
        }

        #[test]
        fn threshold_signs(rho in 0.01f64..10.0) {
            let cfg = ScalingConfig { rho, ..Default::default() };
            prop_assert_eq!(rate_function(&cfg, Rate::ZeroCellVolume) > 0.0, rho < ZERO_CELL_RHO_THRESHOLD);
            prop_assert_eq!(rate_function(&cfg, Rate::TypicalCellVolume) > 0.0, rho < TYPICAL_CELL_RHO_THRESHOLD);
        }

        #[test]
        fn moment_bounds_ordered(n in 1usize..=50, gamma in 0.1f64..10.0, k in 1u32..=3) {
            let (lo, hi) = zero_cell_moment_bounds(n, gamma, k).unwrap();
            let jensen = expected_zero_cell_volume(n, gamma).unwrap().ln() * f64::from(k);
            prop_assert!(lo.ln() <= jensen + 1e-9);
            prop_assert!(jensen <= hi.ln() + 1e-9);
        }
    }
}
