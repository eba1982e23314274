//! Monte Carlo drivers. Every replication draws from its own counter-based
//! stream keyed by `(seed, index)`, and results are collected in index order,
//! so output does not depend on the number of worker threads.

mod compare;
mod facet;
mod palm;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use compare::{compare_models, section_experiment, CompareRow, SectionReport};
pub use facet::{facet_check, FacetReport};
pub use palm::{palm_experiment, PalmReport};
pub use sweep::{sweep, Sweep, SweepRow, SweepSpec, Verdict};

use crate::analytics::{self, AnalyticsError, VertexSide};
use crate::cellgeom::{self, CellError, CertifyPolicy, ZeroCellView};
use crate::codec::CodecError;
use crate::processes::{self, Displacement, Model, ProcessError};
use crate::rng::{self, Purpose};
use crate::specfun::SpecfunError;
use crate::stats::{ratio_estimate, EstimateWithCI, MeanVar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("metric {metric} is not available for n={n}")]
    Unsupported { metric: String, n: usize },
    #[error("{excluded} of {reps} replications excluded (fraction {fraction}, limit 1e-2)")]
    ExclusionOverflow { excluded: usize, reps: usize, fraction: f64 },
    #[error("no conditioning events in {reps} replications")]
    Undefined { reps: usize },
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Largest fraction of excluded (uncertifiable) replications a run may have.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-2;

/// Per-replication quantity estimated by [`estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric {
    /// Volume of the zero cell (exact in 1-D and 2-D, radial MC otherwise).
    ZeroVolume,
    /// Indicator `r_in <= a`.
    InradiusCdf { a: f64 },
    /// Indicator `r e_1 ∈ Z_0`.
    PointInZ0 { r: f64 },
    /// Indicator `Y ∈ Z_0` for `Y ~ N(0, σ²I)`.
    GaussianSep { sigma: f64 },
    /// Indicator `δU ∈ Z_0` for `U` uniform on the sphere.
    SphereSep { delta: f64 },
    /// Number of zero-cell vertices with norm above `r` (2-D).
    VerticesBeyond { r: f64 },
    /// `R_M`, the largest vertex norm.
    RMax,
    /// `|Y|` for `Y` uniform in the zero cell.
    UniformNorm,
    /// Number of Poisson data points of intensity `lambda` in the zero cell.
    PalmCount { lambda: f64 },
    /// `P(max |x_i| >= R | N(Z_0) > 0)`, a ratio estimate.
    PalmMaxDistance { radius: f64, lambda: f64 },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::ZeroVolume => "zero_volume",
            Metric::InradiusCdf { .. } => "inradius_cdf",
            Metric::PointInZ0 { .. } => "point_in_Z0",
            Metric::GaussianSep { .. } => "gaussian_sep",
            Metric::SphereSep { .. } => "sphere_sep",
            Metric::VerticesBeyond { .. } => "vertices_beyond",
            Metric::RMax => "r_max",
            Metric::UniformNorm => "uniform_norm",
            Metric::PalmCount { .. } => "palm_count",
            Metric::PalmMaxDistance { .. } => "palm_max_distance",
        }
    }

    fn is_ratio(&self) -> bool {
        matches!(self, Metric::PalmMaxDistance { .. })
    }

    /// Closed-form value of the estimated mean, when one exists.
    pub fn oracle(&self, model: Model, n: usize, gamma: f64) -> Result<Option<f64>> {
        let row = analytics::comparison_table(n, gamma, model)?;
        let iso = model == Model::IsotropicPoisson;
        let mut e1 = vec![0.0; n];
        Ok(match *self {
            Metric::ZeroVolume => Some(row.zero_cell_volume.value()),
            Metric::InradiusCdf { a } => Some(match model {
                Model::DeterministicGrid => f64::from(u8::from(a >= n as f64 / gamma)),
                _ => -(-2.0 * gamma * a).exp_m1(),
            }),
            Metric::PointInZ0 { r } => {
                e1[0] = r;
                Some(1.0 - row.separation(&e1))
            }
            Metric::GaussianSep { sigma } if iso => Some(analytics::gaussian_separation(n, gamma, sigma)?),
            Metric::SphereSep { delta } if iso => Some(analytics::separation_probability(
                n,
                gamma,
                analytics::SeparationKind::SphereDisplacement { delta },
            )?),
            Metric::VerticesBeyond { r } if iso && n == 2 => {
                Some(analytics::expected_vertices(n, gamma, r, VertexSide::Beyond)?)
            }
            Metric::PalmCount { lambda } => Some(lambda * row.zero_cell_volume.value()),
            _ => None,
        })
    }

    /// Metrics whose estimator is known to be biased at this dimension.
    pub fn bias_noted(&self, n: usize) -> bool {
        matches!(self, Metric::UniformNorm) && n > 2
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.name();
        match *self {
            Metric::InradiusCdf { a: v }
            | Metric::PointInZ0 { r: v }
            | Metric::GaussianSep { sigma: v }
            | Metric::SphereSep { delta: v }
            | Metric::VerticesBeyond { r: v }
            | Metric::PalmCount { lambda: v } => write!(f, "{name}:{v}"),
            Metric::PalmMaxDistance { radius, lambda } => write!(f, "{name}:{radius},{lambda}"),
            Metric::ZeroVolume | Metric::RMax | Metric::UniformNorm => f.write_str(name),
        }
    }
}

impl FromStr for Metric {
    type Err = ExperimentError;

    /// `name` or `name:p1[,p2]`, e.g. `point_in_Z0:1` or `palm_max_distance:2,1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| ExperimentError::UnknownMetric(s.into()))?
        };
        let need = |k: usize| -> Result<f64> {
            params.get(k).copied().ok_or_else(|| ExperimentError::InvalidArgument(format!("metric `{s}` needs a parameter")))
        };
        let metric = match name {
            "zero_volume" => Metric::ZeroVolume,
            "inradius_cdf" => Metric::InradiusCdf { a: need(0)? },
            "point_in_Z0" | "point_in_z0" => Metric::PointInZ0 { r: need(0)? },
            "gaussian_sep" => Metric::GaussianSep { sigma: need(0)? },
            "sphere_sep" => Metric::SphereSep { delta: need(0)? },
            "vertices_beyond" => Metric::VerticesBeyond { r: need(0)? },
            "r_max" => Metric::RMax,
            "uniform_norm" => Metric::UniformNorm,
            "palm_count" => Metric::PalmCount { lambda: params.first().copied().unwrap_or(1.0) },
            "palm_max_distance" => {
                Metric::PalmMaxDistance { radius: need(0)?, lambda: params.get(1).copied().unwrap_or(1.0) }
            }
            _ => return Err(ExperimentError::UnknownMetric(s.into())),
        };
        metric.validate()?;
        Ok(metric)
    }
}

impl Metric {
    fn validate(&self) -> Result<()> {
        let (name, v, strict) = match *self {
            Metric::InradiusCdf { a } => ("a", a, false),
            Metric::PointInZ0 { r } => ("r", r, false),
            Metric::GaussianSep { sigma } => ("sigma", sigma, false),
            Metric::SphereSep { delta } => ("delta", delta, false),
            Metric::VerticesBeyond { r } => ("r", r, false),
            Metric::PalmCount { lambda } => ("lambda", lambda, true),
            Metric::PalmMaxDistance { radius, lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(ExperimentError::InvalidArgument(format!("lambda = {lambda}")));
                }
                ("R", radius, false)
            }
            Metric::ZeroVolume | Metric::RMax | Metric::UniformNorm => return Ok(()),
        };
        let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
        if ok { Ok(()) } else { Err(ExperimentError::InvalidArgument(format!("{name} = {v}"))) }
    }
}

pub(crate) fn check_inputs(n: usize, gamma: f64, reps: usize) -> Result<()> {
    if n == 0 {
        return Err(ExperimentError::InvalidArgument("n must be positive".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(ExperimentError::InvalidArgument(format!("gamma = {gamma}")));
    }
    if reps == 0 {
        return Err(ExperimentError::InvalidArgument("reps must be positive".into()));
    }
    Ok(())
}

/// Certified zero cell of replication `index`, or `None` when the
/// certification budget runs out.
pub(crate) fn certified_cell(
    model: Model,
    n: usize,
    gamma: f64,
    seed: u64,
    index: u64,
    target_norm: f64,
) -> Result<Option<ZeroCellView>> {
    let s = rng::derive_seed(seed, index, Purpose::Hyperplanes);
    let ts = processes::sample_model(model, n, gamma, cellgeom::initial_window(n, gamma, target_norm), s)?;
    let view = cellgeom::certify(&ts, &CertifyPolicy::default())?;
    Ok((!view.truncated).then_some(view))
}

/// Whether `x` lies in the zero cell of replication `index`. Only planes with
/// offset below `|x|` can separate, so a window just past `|x|` is exact.
fn point_in_cell(model: Model, gamma: f64, seed: u64, index: u64, x: &[f64]) -> Result<f64> {
    let s = rng::derive_seed(seed, index, Purpose::Hyperplanes);
    let w = processes::norm(x) + 1.0;
    let ts = processes::sample_model(model, x.len(), gamma, w, s)?;
    Ok(f64::from(u8::from(cellgeom::in_zero_cell(&ts, x)?)))
}

/// Data points of replication `index` inside the certified zero cell.
pub(crate) fn cell_data_points(view: &ZeroCellView, lambda: f64, seed: u64, index: u64) -> Result<Vec<Vec<f64>>> {
    // the cell lies inside B(R_M) in 2-D and inside the certified ball otherwise
    let reach = match view.dim() {
        2 => cellgeom::exact_polygon_2d(view)?.r_max * (1.0 + 1e-9) + 1e-12,
        _ => view.certified_radius,
    };
    let pts = processes::sample_poisson_points(view.dim(), lambda, reach, rng::derive_seed(seed, index, Purpose::DataPoints))?;
    let mut inside = Vec::new();
    for p in pts.points {
        if cellgeom::in_zero_cell(&view.sample, &p)? {
            inside.push(p);
        }
    }
    Ok(inside)
}

/// Exact volume of a certified cell in dimensions 1 and 2, radial MC otherwise.
pub(crate) fn cell_volume(view: &ZeroCellView, seed: u64) -> Result<f64> {
    Ok(match view.dim() {
        1 => {
            let len = |s: f64| view.radial(&[s]).exact().ok_or(CellError::Truncated("open interval".into()));
            len(1.0)? + len(-1.0)?
        }
        2 => cellgeom::exact_polygon_2d(view)?.area,
        _ => cellgeom::volume_radial_mc(view, 256, seed)?.mean,
    })
}

/// `(numerator, denominator)` of one replication; `None` when excluded.
pub fn replicate(metric: Metric, model: Model, n: usize, gamma: f64, seed: u64, index: u64) -> Result<Option<(f64, f64)>> {
    let data = |p: Purpose| rng::stream(seed, index, p);
    let plain = |v: f64| Ok(Some((v, 1.0)));
    match metric {
        Metric::InradiusCdf { a } => {
            let s = rng::derive_seed(seed, index, Purpose::Hyperplanes);
            let w = cellgeom::initial_window(n, gamma, a);
            let r = cellgeom::inradius(&processes::sample_model(model, n, gamma, w, s)?);
            if r.truncated {
                return Ok(None);
            }
            plain(f64::from(u8::from(r.radius <= a)))
        }
        Metric::PointInZ0 { r } => {
            let mut x = vec![0.0; n];
            x[0] = r;
            plain(point_in_cell(model, gamma, seed, index, &x)?)
        }
        Metric::GaussianSep { sigma } => {
            let y = processes::draw_displacement(Displacement::GaussianPerDim { sigma }, n, &mut data(Purpose::Displacement));
            plain(point_in_cell(model, gamma, seed, index, &y)?)
        }
        Metric::SphereSep { delta } => {
            let y = processes::draw_displacement(Displacement::SphereFixed { delta }, n, &mut data(Purpose::Displacement));
            plain(point_in_cell(model, gamma, seed, index, &y)?)
        }
        _ => {
            if matches!(metric, Metric::VerticesBeyond { .. }) && n != 2 {
                return Err(ExperimentError::Unsupported { metric: metric.to_string(), n });
            }
            let Some(view) = certified_cell(model, n, gamma, seed, index, 0.0)? else {
                return Ok(None);
            };
            let cell_seed = rng::derive_seed(seed, index, Purpose::Directions);
            match metric {
                Metric::ZeroVolume => plain(cell_volume(&view, cell_seed)?),
                Metric::VerticesBeyond { r } => plain(cellgeom::exact_polygon_2d(&view)?.vertices_beyond(r) as f64),
                Metric::RMax => plain(cellgeom::r_max_estimate(&view, 64, cell_seed)?),
                Metric::UniformNorm => plain(processes::norm(&cellgeom::uniform_point(&view, &mut data(Purpose::Walk))?)),
                Metric::PalmCount { lambda } => plain(cell_data_points(&view, lambda, seed, index)?.len() as f64),
                Metric::PalmMaxDistance { radius, lambda } => {
                    let pts = cell_data_points(&view, lambda, seed, index)?;
                    let far = pts.iter().any(|p| processes::norm(p) >= radius);
                    Ok(Some((f64::from(u8::from(far)), f64::from(u8::from(!pts.is_empty())))))
                }
                _ => unreachable!("point metrics handled above"),
            }
        }
    }
}

/// Run `reps` replications in parallel, in index order, failing when the
/// excluded fraction reaches [`MAX_EXCLUDED_FRACTION`].
pub(crate) fn run_replications<T: Send>(
    reps: usize,
    f: impl Fn(u64) -> Result<Option<T>> + Sync,
) -> Result<(Vec<T>, usize)> {
    let out: Vec<Option<T>> = (0..reps as u64).into_par_iter().map(&f).collect::<Result<_>>()?;
    let kept: Vec<T> = out.into_iter().flatten().collect();
    let excluded = reps - kept.len();
    let fraction = excluded as f64 / reps as f64;
    if fraction >= MAX_EXCLUDED_FRACTION || kept.is_empty() {
        return Err(ExperimentError::ExclusionOverflow { excluded, reps, fraction });
    }
    Ok((kept, excluded))
}

/// Replication mean of `metric` with a 95% interval.
pub fn estimate(metric: Metric, model: Model, n: usize, gamma: f64, reps: usize, seed: u64) -> Result<EstimateWithCI> {
    check_inputs(n, gamma, reps)?;
    metric.validate()?;
    let (pairs, excluded) = run_replications(reps, |i| replicate(metric, model, n, gamma, seed, i))?;
    if metric.is_ratio() {
        let (num, den): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        return ratio_estimate(&num, &den, excluded).ok_or(ExperimentError::Undefined { reps });
    }
    let mut acc = MeanVar::default();
    pairs.iter().for_each(|&(v, _)| acc.push(v));
    Ok(acc.estimate(excluded))
}

/// An estimate next to its closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub metric: String,
    pub model: Model,
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
    pub estimate: EstimateWithCI,
    pub oracle: Option<f64>,
    pub z_score: Option<f64>,
    /// `Some(false)` when the oracle lies more than 3 SE from the estimate.
    pub within_3se: Option<bool>,
    pub bias_noted: bool,
}

impl EstimateReport {
    /// True unless an unflagged oracle check failed.
    pub fn passed(&self) -> bool {
        self.bias_noted || self.within_3se != Some(false)
    }
}

pub(crate) fn oracle_check(est: &EstimateWithCI, oracle: Option<f64>) -> (Option<f64>, Option<bool>) {
    let Some(v) = oracle else { return (None, None) };
    match est.std_err {
        Some(se) if se > 0.0 => (est.z_score(v), Some(est.within_se(v, 3.0))),
        // deterministic rows must match to rounding
        Some(_) => (None, Some((est.mean - v).abs() <= 1e-9 * v.abs().max(1.0))),
        None => (None, None),
    }
}

pub fn estimate_report(metric: Metric, model: Model, n: usize, gamma: f64, reps: usize, seed: u64) -> Result<EstimateReport> {
    let estimate = estimate(metric, model, n, gamma, reps, seed)?;
    let oracle = metric.oracle(model, n, gamma)?;
    let (z_score, within_3se) = oracle_check(&estimate, oracle);
    Ok(EstimateReport {
        metric: metric.to_string(),
        model,
        n,
        gamma,
        seed,
        estimate,
        oracle,
        z_score,
        within_3se,
        bias_noted: metric.bias_noted(n),
    })
}

/// Raw inradius draws (for distribution tests); truncated draws are dropped.
pub fn inradius_samples(model: Model, n: usize, gamma: f64, reps: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    check_inputs(n, gamma, reps)?;
    run_replications(reps, |i| {
        let s = rng::derive_seed(seed, i, Purpose::Hyperplanes);
        let r = cellgeom::inradius(&processes::sample_model(model, n, gamma, cellgeom::initial_window(n, gamma, 0.0), s)?);
        Ok((!r.truncated).then_some(r.radius))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_round_trip() {
        for s in ["zero_volume", "inradius_cdf:0.5", "point_in_Z0:1", "gaussian_sep:1", "sphere_sep:2", "vertices_beyond:3", "r_max", "uniform_norm", "palm_count:1", "palm_max_distance:2,0.5"] {
            let m: Metric = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("volume".parse::<Metric>().is_err());
        assert!("point_in_Z0".parse::<Metric>().is_err());
        assert!("palm_count:-1".parse::<Metric>().is_err());
    }

    #[test]
    fn single_rep_has_no_standard_error() {
        let e = estimate(Metric::ZeroVolume, Model::IsotropicPoisson, 2, 1.0, 1, 5).unwrap();
        assert!(e.std_err.is_none() && e.ci95.is_none());
        assert!(estimate(Metric::ZeroVolume, Model::IsotropicPoisson, 2, 1.0, 0, 5).is_err());
    }

    #[test]
    fn vertices_beyond_is_planar_only() {
        let e = estimate(Metric::VerticesBeyond { r: 1.0 }, Model::IsotropicPoisson, 3, 1.0, 4, 1);
        assert!(matches!(e, Err(ExperimentError::Unsupported { .. })));
    }

    #[test]
    fn one_dimensional_separation() {
        let e = estimate(Metric::PointInZ0 { r: 1.0 }, Model::IsotropicPoisson, 1, 1.0, 20_000, 3).unwrap();
        assert!(e.within_se((-1.0f64).exp(), 4.0), "{e:?}");
    }

    #[test]
    fn grid_volume_is_deterministic() {
        let r = estimate_report(Metric::ZeroVolume, Model::DeterministicGrid, 2, 2.0, 5, 0).unwrap();
        assert_eq!(r.within_3se, Some(true));
        assert!((r.estimate.mean - 4.0).abs() < 1e-12);
    }

    #[test]
    fn results_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate(Metric::RMax, Model::IsotropicPoisson, 3, 1.0, 40, 77).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
