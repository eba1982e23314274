//! Per-model comparison rows and subspace-section expectations.

use std::f64::consts::PI;

use serde::Serialize;

use super::{
    dim, expected_typical_cell_volume, expected_zero_cell_volume, ln_chord, ln_kappa, ln_omega, positive,
    rho_thresholds, AnalyticsError, Result,
};
use crate::processes::Model;
use crate::specfun::{self, LogValue};

/// Closed-form quantities of one tessellation model at intensity `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: Model,
    pub n: usize,
    pub gamma: f64,
    pub zero_cell_volume: LogValue,
    pub typical_cell_volume: LogValue,
    /// Coefficient of the separation law: `P(x ∉ Z_0) = 1 - exp(-coef · |x|)`
    /// (Euclidean norm for isotropic, `ℓ¹` for Manhattan). For the grid,
    /// `x ∉ Z_0` iff `‖x‖_∞ >= coef`.
    pub separation_coefficient: f64,
    /// `E[|Y|²]^{1/2}` for `Y` uniform in the zero cell.
    pub rms_uniform_norm: f64,
    /// `E[R_M²]^{1/2}` (exact for grid and Manhattan).
    pub rms_r_max: f64,
    /// Isotropic entries are high-dimensional upper-bound scales, not identities.
    pub upper_bound_style: bool,
}

impl ModelRow {
    /// `P(x ∉ Z_0)` for this model.
    pub fn separation(&self, x: &[f64]) -> f64 {
        let c = self.separation_coefficient;
        match self.model {
            Model::DeterministicGrid => {
                let sup = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if sup >= c { 1.0 } else { 0.0 }
            }
            Model::ManhattanPoisson => -(-c * x.iter().map(|v| v.abs()).sum::<f64>()).exp_m1(),
            Model::IsotropicPoisson => -(-c * x.iter().map(|v| v * v).sum::<f64>().sqrt()).exp_m1(),
        }
    }
}

pub fn comparison_table(n: usize, gamma: f64, model: Model) -> Result<ModelRow> {
    dim(n)?;
    positive("gamma", gamma)?;
    let nf = n as f64;
    let half = nf / gamma; // n/γ
    let n32 = nf.powf(1.5) / gamma;
    let cube = LogValue::from_ln(nf * (2.0 * half).ln());
    let row = match model {
        Model::DeterministicGrid => ModelRow {
            model,
            n,
            gamma,
            zero_cell_volume: cube,
            typical_cell_volume: cube,
            separation_coefficient: half,
            rms_uniform_norm: n32 / 3f64.sqrt(),
            rms_r_max: n32,
            upper_bound_style: false,
        },
        Model::ManhattanPoisson => ModelRow {
            model,
            n,
            gamma,
            zero_cell_volume: cube,
            // product of n typical intervals of mean n/γ
            typical_cell_volume: LogValue::from_ln(nf * half.ln()),
            separation_coefficient: gamma / nf,
            rms_uniform_norm: n32,
            rms_r_max: 3.5f64.sqrt() * n32,
            upper_bound_style: false,
        },
        Model::IsotropicPoisson => ModelRow {
            model,
            n,
            gamma,
            zero_cell_volume: expected_zero_cell_volume(n, gamma)?,
            typical_cell_volume: expected_typical_cell_volume(n, gamma)?,
            separation_coefficient: ln_chord(n, gamma)?.exp(),
            rms_uniform_norm: (PI / 2.0).sqrt() * n32,
            rms_r_max: rho_thresholds(1.0)?.x_u * (PI / 2.0).sqrt() * n32,
            upper_bound_style: true,
        },
    };
    Ok(row)
}

/// Expectations for the section `Z_0 ∩ L` by an `m`-dimensional subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionExpectations {
    pub n: usize,
    pub m: usize,
    /// Intensity `γ_m = ω_m ω_{n+1} / (ω_n ω_{m+1}) · γ` of the section process.
    pub induced_gamma: f64,
    /// `E[V_m(Z_0 ∩ L)] = Γ(m+1) κ_m (π ω_n / (γ ω_{n+1}))^m`.
    pub expected_volume: LogValue,
}

fn check_section(n: usize, m: usize, gamma: f64) -> Result<()> {
    dim(n)?;
    positive("gamma", gamma)?;
    if m == 0 || m >= n {
        return Err(AnalyticsError::Domain { name: "m", value: m as f64 });
    }
    Ok(())
}

fn ln_section_scale(n: usize, gamma: f64) -> f64 {
    PI.ln() + ln_omega(n) - gamma.ln() - ln_omega(n + 1)
}

pub fn section_expectations(n: usize, m: usize, gamma: f64) -> Result<SectionExpectations> {
    check_section(n, m, gamma)?;
    let mf = m as f64;
    let induced_gamma = gamma * (ln_omega(m) + ln_omega(n + 1) - ln_omega(n) - ln_omega(m + 1)).exp();
    let expected_volume =
        LogValue::from_ln(specfun::ln_gamma(mf + 1.0) + ln_kappa(m) + mf * ln_section_scale(n, gamma));
    Ok(SectionExpectations { n, m, induced_gamma, expected_volume })
}

/// Bounds `Γ(m+1)^k κ_m^k S^{km} <= E[V_m^k] <= Γ(km+1) κ_m^k S^{km}` with
/// `S = π ω_n / (γ ω_{n+1})`; the lower one is Jensen's, the upper one the
/// zero-cell moment bound in dimension `m`.
pub fn section_moment_bounds(n: usize, m: usize, gamma: f64, k: u32) -> Result<(LogValue, LogValue)> {
    check_section(n, m, gamma)?;
    if k == 0 {
        return Err(AnalyticsError::Domain { name: "k", value: 0.0 });
    }
    let (mf, kf) = (m as f64, f64::from(k));
    let common = kf * ln_kappa(m) + kf * mf * ln_section_scale(n, gamma);
    Ok((
        LogValue::from_ln(kf * specfun::ln_gamma(mf + 1.0) + common),
        LogValue::from_ln(specfun::ln_gamma(kf * mf + 1.0) + common),
    ))
}
