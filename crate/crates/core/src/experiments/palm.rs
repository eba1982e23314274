//! Poisson data in the zero cell, seen from a typical data point.
//!
//! By Slivnyak's theorem the reduced Palm law of a Poisson process is its
//! ordinary law, so adding a point at the origin to an independent sample
//! gives the typical point's view: it is alone in its cell iff `N(Z_0) = 0`.

use serde::Serialize;

use super::{cell_data_points, cell_volume, certified_cell, check_inputs, oracle_check, run_replications, Result};
use super::ExperimentError;
use crate::analytics;
use crate::processes::{norm, Model};
use crate::rng::{self, Purpose};
use crate::specfun;
use crate::stats::{ratio_estimate, EstimateWithCI};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PalmReport {
    pub n: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub radius: f64,
    pub reps: usize,
    /// `P(N(Z_0) = 0)`, the Palm probability that the typical point is alone.
    pub alone: EstimateWithCI,
    /// Jensen lower bound `e^{-E[N(Z_0)]}`.
    pub jensen_bound: f64,
    pub alone_above_bound: bool,
    /// `E[e^{-λV(Z_0)}]`, which equals `P(N(Z_0) = 0)`.
    pub laplace: EstimateWithCI,
    /// Radial-MC volumes enter the exponential nonlinearly above dimension 2.
    pub laplace_bias_noted: bool,
    pub mean_count: EstimateWithCI,
    pub mean_count_analytic: f64,
    pub mean_count_within_3se: Option<bool>,
    /// `P(max |x_i| >= R | N(Z_0) > 0)`; `None` when no replication had data.
    pub conditional_far: Option<EstimateWithCI>,
    pub conditioning_events: usize,
    pub outside_mean: EstimateWithCI,
    pub outside_mean_analytic: f64,
    /// `E[N(Z_0 ∩ B(R)^c)] / E[N(Z_0)]` against `Γ_u(n, c_n R)`.
    pub outside_fraction: Option<EstimateWithCI>,
    pub outside_fraction_analytic: f64,
    pub outside_fraction_within_3se: Option<bool>,
    pub excluded_fraction: f64,
}

impl PalmReport {
    pub fn passed(&self) -> bool {
        self.alone_above_bound
            && self.mean_count_within_3se != Some(false)
            && self.outside_fraction_within_3se != Some(false)
    }
}

struct PalmRep {
    count: f64,
    outside: f64,
    far: f64,
    laplace: f64,
}

/// Isotropic tessellation plus independent Poisson data of intensity `lambda`.
pub fn palm_experiment(n: usize, gamma: f64, lambda: f64, radius: f64, reps: usize, seed: u64) -> Result<PalmReport> {
    check_inputs(n, gamma, reps)?;
    if !(lambda > 0.0 && lambda.is_finite()) || !(radius >= 0.0 && radius.is_finite()) {
        return Err(ExperimentError::InvalidArgument(format!("lambda = {lambda}, R = {radius}")));
    }
    let (reps_out, excluded) = run_replications(reps, |i| {
        let Some(view) = certified_cell(Model::IsotropicPoisson, n, gamma, seed, i, radius)? else {
            return Ok(None);
        };
        let pts = cell_data_points(&view, lambda, seed, i)?;
        let volume = cell_volume(&view, rng::derive_seed(seed, i, Purpose::Directions))?;
        let outside = pts.iter().filter(|p| norm(p) > radius).count() as f64;
        let far = pts.iter().any(|p| norm(p) >= radius);
        Ok(Some(PalmRep {
            count: pts.len() as f64,
            outside,
            far: f64::from(u8::from(far)),
            laplace: (-lambda * volume).exp(),
        }))
    })?;

    let col = |f: fn(&PalmRep) -> f64| reps_out.iter().map(f).collect::<Vec<f64>>();
    let counts = col(|r| r.count);
    let occupied: Vec<f64> = counts.iter().map(|&c| f64::from(u8::from(c > 0.0))).collect();
    let alone_ind: Vec<f64> = occupied.iter().map(|o| 1.0 - o).collect();
    let outside = col(|r| r.outside);

    let expectations = analytics::poisson_data_expectations(n, gamma, lambda.ln(), radius)?;
    let mean_count = EstimateWithCI::from_samples(&counts, excluded);
    let mean_count_analytic = expectations.total.value();
    let alone = EstimateWithCI::from_samples(&alone_ind, excluded);
    let jensen_bound = expectations.jensen_lower_alone;
    let alone_se = alone.std_err.unwrap_or(0.0);
    let outside_fraction = ratio_estimate(&outside, &counts, excluded);
    let chord = specfun::mean_chord_coeff(n as u64, gamma)?;
    let outside_fraction_analytic = specfun::reg_gamma_upper(n as f64, chord * radius)?;
    let outside_fraction_within_3se =
        outside_fraction.as_ref().and_then(|e| oracle_check(e, Some(outside_fraction_analytic)).1);

    Ok(PalmReport {
        n,
        gamma,
        lambda,
        radius,
        reps,
        alone_above_bound: alone.mean >= jensen_bound - 3.0 * alone_se,
        alone,
        jensen_bound,
        laplace: EstimateWithCI::from_samples(&col(|r| r.laplace), excluded),
        laplace_bias_noted: n > 2,
        mean_count_within_3se: oracle_check(&mean_count, Some(mean_count_analytic)).1,
        mean_count,
        mean_count_analytic,
        conditional_far: ratio_estimate(&col(|r| r.far), &occupied, excluded),
        conditioning_events: occupied.iter().filter(|&&o| o > 0.0).count(),
        outside_mean: EstimateWithCI::from_samples(&outside, excluded),
        outside_mean_analytic: expectations.outside.value(),
        outside_fraction,
        outside_fraction_analytic,
        outside_fraction_within_3se,
        excluded_fraction: excluded as f64 / reps as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_consistent() {
        let r = palm_experiment(2, 1.0, 1.0, 1.0, 400, 8).unwrap();
        assert!(r.alone.mean >= 0.0 && r.alone.mean <= 1.0);
        // the Laplace transform and the empty-cell frequency estimate the same quantity
        let diff = (r.alone.mean - r.laplace.mean).abs();
        let se = r.alone.std_err.unwrap().hypot(r.laplace.std_err.unwrap());
        assert!(diff < 4.0 * se, "{diff} vs {se}");
        assert!(r.outside_fraction.unwrap().mean <= 1.0);
        assert!(!r.laplace_bias_noted);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(palm_experiment(2, 1.0, 0.0, 1.0, 10, 1).is_err());
        assert!(palm_experiment(2, 1.0, 1.0, -1.0, 10, 1).is_err());
    }
}
