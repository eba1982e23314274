//! Vertex counts of the zero cell through its dual beta-prime polytope, the
//! facet probability of beta-prime hulls, and the `R_M` thresholds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{dim, ln_omega, positive, AnalyticsError, Result};
use crate::quad;
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexSide {
    Beyond,
    Within,
}

impl std::str::FromStr for VertexSide {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beyond" => Ok(VertexSide::Beyond),
            "within" => Ok(VertexSide::Within),
            _ => Err(AnalyticsError::Unknown { what: "vertex side", name: s.into() }),
        }
    }
}

/// ln of the expected number of zero-cell vertices farther than `r` (or within `r`):
/// `Γ((n+1)/2) π^n / (√π Γ(n/2+1)) · Γ_u(n, γ ω_{n+1} r / (π ω_n))`.
pub fn ln_expected_vertices(n: usize, gamma: f64, r: f64, side: VertexSide) -> Result<f64> {
    dim(n)?;
    positive("gamma", gamma)?;
    if !(r >= 0.0) {
        return Err(AnalyticsError::Domain { name: "r", value: r });
    }
    let nf = n as f64;
    let coeff = specfun::ln_gamma(0.5 * (nf + 1.0)) + nf * PI.ln() - 0.5 * PI.ln() - specfun::ln_gamma(0.5 * nf + 1.0);
    let arg = gamma * (ln_omega(n + 1) - ln_omega(n)).exp() / PI * r;
    let tail = match side {
        VertexSide::Beyond => specfun::ln_reg_gamma_upper(nf, arg)?,
        VertexSide::Within => specfun::ln_reg_gamma_lower(nf, arg)?,
    };
    Ok(coeff + tail)
}

pub fn expected_vertices(n: usize, gamma: f64, r: f64, side: VertexSide) -> Result<f64> {
    Ok(ln_expected_vertices(n, gamma, r, side)?.exp())
}

/// Probability that `n` given points among `m` i.i.d. beta-prime points
/// (scale `σ`) span a facet of their hull whose affine hull lies within
/// distance `r` of the origin. `r = f64::INFINITY` drops the distance condition.
pub fn facet_probability(n: usize, m: usize, sigma: f64, r: f64) -> Result<f64> {
    dim(n)?;
    if m <= n {
        return Err(AnalyticsError::Domain { name: "m", value: m as f64 });
    }
    positive("sigma", sigma)?;
    if !(r > 0.0) {
        return Err(AnalyticsError::Domain { name: "r", value: r });
    }
    let nf = n as f64;
    // With t = σ tan θ the integrand becomes σ cos^{n-1}θ (1/2 + θ/π)^{m-n}.
    let coeff = 2.0 * (specfun::ln_gamma(0.5 * (nf + 1.0)) - specfun::ln_gamma(0.5 * nf)).exp() / PI.sqrt();
    let theta_r = (r / sigma).atan();
    let power = (m - n) as i32;
    let f = |theta: f64| theta.cos().powi(n as i32 - 1) * (0.5 + theta / PI).powi(power);
    let v = quad::integrate(f, -theta_r, theta_r, 1e-12)?;
    Ok((coeff * v).clamp(0.0, 1.0))
}

/// `γ = σ ω_n / ω_{n+1}`.
pub fn sigma_to_gamma(n: usize, sigma: f64) -> Result<f64> {
    dim(n)?;
    Ok(positive("sigma", sigma)? * (ln_omega(n) - ln_omega(n + 1)).exp())
}

/// `σ = γ ω_{n+1} / ω_n`.
pub fn gamma_to_sigma(n: usize, gamma: f64) -> Result<f64> {
    dim(n)?;
    Ok(positive("gamma", gamma)? * (ln_omega(n + 1) - ln_omega(n)).exp())
}

/// Intensity density `(2σ/ω_{n+1}) |x|^{-n-1}` of the limiting dual point process.
pub fn dual_intensity_density(n: usize, sigma: f64, norm: f64) -> Result<f64> {
    dim(n)?;
    positive("sigma", sigma)?;
    positive("|x|", norm)?;
    Ok(2.0 * sigma * (-ln_omega(n + 1) - (n as f64 + 1.0) * norm.ln()).exp())
}

/// `ln π + ln x - x + 1`, whose two roots set the `R_M` thresholds.
pub fn threshold_function(x: f64) -> f64 {
    PI.ln() + x.ln() - x + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoThresholds {
    pub x_ell: f64,
    pub x_u: f64,
    pub rho_ell: f64,
    pub rho_u: f64,
}

fn bisect(mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = threshold_function(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (threshold_function(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Roots `x_ℓ < 1 < x_u` and the scaled thresholds `ρ = x √π / (R√2)`.
pub fn rho_thresholds(r: f64) -> Result<RhoThresholds> {
    positive("R", r)?;
    // the function is concave with maximum ln π > 0 at x = 1
    let x_ell = bisect(1e-12, 1.0);
    let x_u = bisect(1.0, 50.0);
    let scale = PI.sqrt() / (r * 2f64.sqrt());
    Ok(RhoThresholds { x_ell, x_u, rho_ell: x_ell * scale, rho_u: x_u * scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts_in_the_plane() {
        let total = expected_vertices(2, 1.0, 0.0, VertexSide::Beyond).unwrap();
        assert!((total - PI * PI / 2.0).abs() < 1e-12);
        for gamma in [0.3, 1.0, 7.0] {
            assert!((expected_vertices(2, gamma, 0.0, VertexSide::Beyond).unwrap() - total).abs() < 1e-12);
        }
        let beyond = expected_vertices(2, 1.0, PI, VertexSide::Beyond).unwrap();
        assert!((beyond - PI * PI / 2.0 * 3.0 * (-2.0f64).exp()).abs() < 1e-12);
        for r in [0.1, 1.0, 4.0, 30.0] {
            let w = expected_vertices(3, 2.0, r, VertexSide::Within).unwrap();
            let b = expected_vertices(3, 2.0, r, VertexSide::Beyond).unwrap();
            let t = expected_vertices(3, 2.0, 0.0, VertexSide::Beyond).unwrap();
            assert!((w + b - t).abs() < 1e-12 * t);
        }
    }

    #[test]
    fn vertices_beyond_is_nonincreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let v = expected_vertices(4, 1.0, i as f64 * 0.05, VertexSide::Beyond).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn facet_probability_checks() {
        assert!((facet_probability(2, 3, 1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-10);
        for m in 2..10 {
            assert!((facet_probability(1, m, 2.0, f64::INFINITY).unwrap() - 2.0 / m as f64).abs() < 1e-10);
        }
        assert!(facet_probability(2, 4, 1.0, 1e-9).unwrap() < 1e-8);
        for n in 1..=3 {
            let mut prev = 0.0;
            for r in [0.1, 0.5, 1.0, 5.0, 50.0, 1e4] {
                let p = facet_probability(n, n + 1, 1.0, r).unwrap();
                assert!(p >= prev - 1e-12);
                prev = p;
            }
            assert!((facet_probability(n, n + 1, 1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(facet_probability(2, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn dual_mapping_round_trip() {
        assert!((sigma_to_gamma(2, 3.0).unwrap() - 1.5).abs() < 1e-14);
        for n in 1..40 {
            let s = gamma_to_sigma(n, sigma_to_gamma(n, 1.7).unwrap()).unwrap();
            assert!((s - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_density_shell_integral() {
        // ∫_{1<=|x|<=2} density = ω_n ∫_1^2 ρ^{n-1} f(ρ) dρ, which equals γ = σω_n/ω_{n+1}
        for n in 1..=6 {
            let sigma = 1.3;
            let omega = ln_omega(n).exp();
            let f = |r: f64| omega * r.powi(n as i32 - 1) * dual_intensity_density(n, sigma, r).unwrap();
            let v = quad::integrate(f, 1.0, 2.0, 1e-13).unwrap();
            assert!((v - sigma_to_gamma(n, sigma).unwrap()).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn thresholds() {
        let t = rho_thresholds(1.0).unwrap();
        assert!(threshold_function(t.x_u).abs() < 1e-10);
        assert!(threshold_function(t.x_ell).abs() < 1e-10);
        assert!((t.x_u - 3.355).abs() < 1e-3, "{}", t.x_u);
        assert!((t.x_ell - 0.134).abs() < 1e-3, "{}", t.x_ell);
        let t2 = rho_thresholds(2.0).unwrap();
        assert!((t2.rho_u - t.rho_u / 2.0).abs() < 1e-14);
    }
}
