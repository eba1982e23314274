//! Dimension sweeps along `γ_n = ρ n^α`, judged as finite-`n` trends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{estimate, oracle_check, ExperimentError, Metric, Result};
use crate::analytics::{self, Rate, ScalingConfig};
use crate::processes::Model;
use crate::rng::{self, Purpose};
use crate::stats::{kendall_tau, EstimateWithCI};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub model: Model,
    pub rho: f64,
    pub alpha: f64,
    pub n_list: Vec<usize>,
    pub metric: Metric,
    /// Replications per dimension; zero runs the analytic columns only.
    pub reps: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
    pub estimate: Option<EstimateWithCI>,
    pub analytic: Option<f64>,
    pub within_3se: Option<bool>,
    /// Quantity whose trend is judged (`(1/n) ln` of volume-type metrics).
    pub trend: Option<f64>,
    /// Large-`n` limit of `trend` in this regime, when one is known.
    pub prediction: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Distance to the predicted limit strictly decreases along the grid.
    MonotoneTowardLimit,
    /// No limit is known, but the trend is strictly monotone.
    Monotone,
    NotMonotone,
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub kendall_tau: Option<f64>,
    pub verdict: Verdict,
}

/// `lim_{n→∞}` of `g(ρ n^{α - pivot})` given its value at the pivot exponent.
fn by_regime(alpha: f64, pivot: f64, below: f64, at: f64, above: f64) -> f64 {
    if (alpha - pivot).abs() < 1e-12 {
        at
    } else if alpha < pivot {
        below
    } else {
        above
    }
}

/// Analytic value, trend quantity and predicted limit for one dimension.
fn analytic_row(spec: &SweepSpec, n: usize, gamma: f64) -> Result<(Option<f64>, Option<f64>, Option<f64>)> {
    let (rho, alpha) = (spec.rho, spec.alpha);
    let analytic = spec.metric.oracle(spec.model, n, gamma)?;
    if spec.model != Model::IsotropicPoisson {
        return Ok((analytic, analytic, None));
    }
    let cfg = ScalingConfig { rho, alpha, ..ScalingConfig::default() };
    let sqrt_2_pi = (2.0 / PI).sqrt();
    let (trend, prediction) = match spec.metric {
        Metric::ZeroVolume => {
            let ln_v = analytics::expected_zero_cell_volume(n, gamma)?.ln();
            let limit = (alpha == 1.0).then(|| analytics::rate_function(&cfg, Rate::ZeroCellVolume));
            (Some(ln_v / n as f64), limit)
        }
        Metric::PalmCount { lambda } => {
            let ln_n = lambda.ln() + analytics::expected_zero_cell_volume(n, gamma)?.ln();
            let limit = (alpha == 1.0).then(|| analytics::rate_function(&cfg, Rate::PoissonDataCount));
            (Some(ln_n / n as f64), limit)
        }
        Metric::GaussianSep { sigma } => {
            (analytic, Some(by_regime(alpha, 0.0, 1.0, analytics::gaussian_separation_limit(rho, sigma), 0.0)))
        }
        Metric::PointInZ0 { r: d } | Metric::SphereSep { delta: d } => {
            (analytic, Some(by_regime(alpha, 0.5, 1.0, (-sqrt_2_pi * rho * d).exp(), 0.0)))
        }
        Metric::InradiusCdf { a } => (analytic, Some(by_regime(alpha, 0.0, 0.0, -(-2.0 * rho * a).exp_m1(), 1.0))),
        _ => (analytic, None),
    };
    Ok((analytic, trend, prediction))
}

fn run_row(spec: &SweepSpec, n: usize) -> SweepRow {
    let gamma = spec.rho * (n as f64).powf(spec.alpha);
    let seed = rng::derive_seed(spec.master_seed, n as u64, Purpose::Misc);
    let mut row = SweepRow {
        n,
        gamma,
        seed,
        estimate: None,
        analytic: None,
        within_3se: None,
        trend: None,
        prediction: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let (analytic, trend, prediction) = analytic_row(spec, n, gamma)?;
        row.analytic = analytic;
        row.trend = trend;
        row.prediction = prediction;
        if spec.reps > 0 {
            let est = estimate(spec.metric, spec.model, n, gamma, spec.reps, seed)?;
            row.within_3se = oracle_check(&est, analytic).1;
            if row.trend.is_none() {
                row.trend = Some(est.mean);
            }
            row.estimate = Some(est);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// One row per dimension plus a Kendall-tau trend verdict. A failing
/// dimension is recorded in its row and left out of the verdict.
pub fn sweep(spec: &SweepSpec) -> Result<Sweep> {
    if spec.n_list.is_empty() {
        return Err(ExperimentError::InvalidArgument("n_list must not be empty".into()));
    }
    if spec.n_list.contains(&0) {
        return Err(ExperimentError::InvalidArgument("dimensions must be positive".into()));
    }
    if !(spec.rho > 0.0 && spec.rho.is_finite() && spec.alpha.is_finite()) {
        return Err(ExperimentError::InvalidArgument(format!("rho = {}, alpha = {}", spec.rho, spec.alpha)));
    }
    let rows: Vec<SweepRow> = spec.n_list.iter().map(|&n| run_row(spec, n)).collect();
    let usable: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none() && r.trend.is_some()).collect();
    let ns: Vec<f64> = usable.iter().map(|r| r.n as f64).collect();
    let (kendall, verdict) = if usable.len() < 2 {
        (None, Verdict::Insufficient)
    } else if usable.iter().all(|r| r.prediction.is_some_and(f64::is_finite)) {
        let dist: Vec<f64> = usable.iter().map(|r| (r.trend.unwrap_or(f64::NAN) - r.prediction.unwrap_or(f64::NAN)).abs()).collect();
        let tau = kendall_tau(&ns, &dist);
        (Some(tau), if tau == -1.0 { Verdict::MonotoneTowardLimit } else { Verdict::NotMonotone })
    } else {
        let trend: Vec<f64> = usable.iter().map(|r| r.trend.unwrap_or(f64::NAN)).collect();
        let tau = kendall_tau(&ns, &trend);
        (Some(tau), if tau.abs() == 1.0 { Verdict::Monotone } else { Verdict::NotMonotone })
    };
    Ok(Sweep { spec: spec.clone(), rows, kendall_tau: kendall, verdict })
}
