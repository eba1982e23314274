//! One-bit codes: the sign of every hyperplane measurement, and two decoders
//! that map a code back to a point of its cell.
//!
//! A point `x` with `|x| < window_r` lies on the origin side of every plane
//! outside the window, so the window-restricted code loses nothing.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cellgeom::{self, clip_system, CellError, HalfspaceSystem, Polygon2D, TIE_TOL};
use crate::processes::{self, norm, uniform_direction, Model, ProcessError, TessellationSample};
use crate::rng::{self, Purpose};
use crate::stats::{quantile, EstimateWithCI, MeanVar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point of norm {norm} is outside the window of radius {window_r}")]
    OutsideWindow { norm: f64, window_r: f64 },
    #[error("code does not belong to this tessellation ({reason})")]
    Unbound { reason: String },
    #[error("decode failed: {0}")]
    DecodeFailure(CellError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{excluded} of {trials} trials could not be certified (fraction {fraction})")]
    BudgetExhausted { excluded: usize, trials: usize, fraction: f64 },
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// Sign bits of a point, one per hyperplane of the bound sample, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeWord {
    pub bits: Vec<i8>,
    pub source_seed: u64,
}

impl CodeWord {
    /// Hex SHA-256 of the seed and the bit string.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.source_seed.to_le_bytes());
        h.update(self.bits.iter().map(|&b| u8::from(b > 0)).collect::<Vec<u8>>());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// `bit_i = +1` iff `<u_i, x> - τ_i > 1e-12`, otherwise `-1` (origin side).
pub fn encode(ts: &TessellationSample, x: &[f64]) -> Result<CodeWord> {
    if x.len() != ts.dim {
        return Err(CodecError::DimensionMismatch { expected: ts.dim, got: x.len() });
    }
    let r = norm(x);
    if !(r < ts.window_r) {
        return Err(CodecError::OutsideWindow { norm: r, window_r: ts.window_r });
    }
    let bits = ts.hyperplanes.iter().map(|h| if cellgeom::beyond(h, x) { 1 } else { -1 }).collect();
    Ok(CodeWord { bits, source_seed: ts.seed })
}

/// `{z : bit_i (<u_i, z> - τ_i) >= 0}` intersected with the window box.
pub fn cell_of(ts: &TessellationSample, code: &CodeWord) -> Result<HalfspaceSystem> {
    if code.source_seed != ts.seed {
        return Err(CodecError::Unbound { reason: format!("seed {} vs {}", code.source_seed, ts.seed) });
    }
    if code.len() != ts.len() {
        return Err(CodecError::Unbound { reason: format!("{} bits for {} planes", code.len(), ts.len()) });
    }
    let mut sys = HalfspaceSystem::new(ts.dim, ts.window_r);
    for (h, &b) in ts.hyperplanes.iter().zip(&code.bits) {
        if b > 0 {
            sys.push(h.normal.iter().map(|v| -v).collect(), -h.offset);
        } else {
            sys.push(h.normal.clone(), h.offset);
        }
    }
    Ok(sys)
}

fn center_of(sys: &HalfspaceSystem) -> Result<Vec<f64>> {
    match sys.chebyshev_center() {
        Ok((_, r)) if r <= TIE_TOL => Err(CodecError::DecodeFailure(CellError::Empty)),
        Ok((c, _)) => Ok(c),
        Err(e) => Err(CodecError::DecodeFailure(e)),
    }
}

/// Center of the largest ball inside the cell of `code`.
pub fn decode_chebyshev(ts: &TessellationSample, code: &CodeWord) -> Result<Vec<f64>> {
    center_of(&cell_of(ts, code)?)
}

/// Hit-and-run point of the cell after `steps` moves from its Chebyshev center.
pub fn decode_uniform(ts: &TessellationSample, code: &CodeWord, steps: usize, seed: u64) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(CodecError::InvalidArgument("steps must be at least 1".into()));
    }
    let sys = cell_of(ts, code)?;
    let start = center_of(&sys)?;
    let mut rng = rng::stream(seed, 0, Purpose::Walk);
    sys.hit_and_run(&start, steps, &mut rng).map_err(CodecError::DecodeFailure)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Chebyshev,
    Uniform,
}

impl std::str::FromStr for Decoder {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" => Ok(Decoder::Chebyshev),
            "uniform" => Ok(Decoder::Uniform),
            _ => Err(CodecError::InvalidArgument(format!("unknown decoder `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionConfig {
    pub model: Model,
    pub n: usize,
    pub gamma: f64,
    pub decoder: Decoder,
    pub trials: usize,
    pub seed: u64,
    /// Radius of the ball `x` is drawn from; `n/γ` when unset.
    pub probe_radius: Option<f64>,
    /// Threshold for the farthest-vertex fraction (2-D only).
    pub far_radius: Option<f64>,
    pub walk_steps: usize,
    pub max_doublings: u32,
}

impl DistortionConfig {
    pub fn new(model: Model, n: usize, gamma: f64, decoder: Decoder, trials: usize, seed: u64) -> Self {
        DistortionConfig {
            model,
            n,
            gamma,
            decoder,
            trials,
            seed,
            probe_radius: None,
            far_radius: None,
            walk_steps: 100,
            max_doublings: 6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CodecError::InvalidArgument("trials must be positive".into()));
        }
        if self.n == 0 || !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(CodecError::InvalidArgument(format!("n={} gamma={}", self.n, self.gamma)));
        }
        if self.walk_steps == 0 {
            return Err(CodecError::InvalidArgument("walk_steps must be positive".into()));
        }
        match self.probe_radius {
            Some(r) if !(r > 0.0 && r.is_finite()) => Err(CodecError::InvalidArgument(format!("probe radius {r}"))),
            _ => Ok(()),
        }
    }

    pub fn probe(&self) -> f64 {
        self.probe_radius.unwrap_or(self.n as f64 / self.gamma)
    }
}

/// One encode/decode round trip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub x: Vec<f64>,
    pub code_hash: String,
    pub x_hat: Vec<f64>,
    pub distortion: f64,
    /// `encode(x_hat) == encode(x)`.
    pub fixed_point: bool,
    /// Largest distance from `x` to a vertex of its cell (2-D only).
    pub farthest_vertex: Option<f64>,
}

enum Exactness {
    Exact(Option<Polygon2D>),
    Truncated,
}

/// Whether the cell lies inside `B(window_r)`: exact in 2-D, probed by support
/// points along `±e_j` and random directions otherwise.
fn check_cell(sys: &HalfspaceSystem, window_r: f64, rng: &mut impl Rng) -> Result<Exactness> {
    let n = sys.dim;
    if n == 2 {
        return match clip_system(sys) {
            Ok(p) if p.r_max < window_r => Ok(Exactness::Exact(Some(p))),
            Ok(_) | Err(CellError::Truncated(_)) => Ok(Exactness::Truncated),
            Err(e) => Err(e.into()),
        };
    }
    let axes = (0..2 * n).map(|k| {
        let mut e = vec![0.0; n];
        e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
        e
    });
    let randoms: Vec<Vec<f64>> = (0..16).map(|_| uniform_direction(n, rng)).collect();
    for d in axes.chain(randoms) {
        match sys.support_point(&d) {
            Ok(v) if norm(&v) < window_r => {}
            Ok(_) | Err(CellError::Truncated(_)) => return Ok(Exactness::Truncated),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Exactness::Exact(None))
}

/// Run trial `index`; `Ok(None)` means the cell could not be certified.
pub fn run_trial(cfg: &DistortionConfig, index: u64) -> Result<Option<TrialRecord>> {
    cfg.validate()?;
    let (n, probe) = (cfg.n, cfg.probe());
    let plane_seed = rng::derive_seed(cfg.seed, index, Purpose::Hyperplanes);
    let x = processes::uniform_in_ball(n, probe, &mut rng::stream(cfg.seed, index, Purpose::DataPoints));
    let mut probe_rng = rng::stream(cfg.seed, index, Purpose::Probe);
    let mut ts = processes::sample_model(cfg.model, n, cfg.gamma, cellgeom::initial_window(n, cfg.gamma, probe), plane_seed)?;
    for d in 0..=cfg.max_doublings {
        let code = encode(&ts, &x)?;
        let sys = cell_of(&ts, &code)?;
        let polygon = match check_cell(&sys, ts.window_r, &mut probe_rng)? {
            Exactness::Exact(p) => p,
            Exactness::Truncated => {
                let ext_seed = rng::derive_seed(plane_seed, u64::from(d), Purpose::WindowExtension);
                ts = processes::extend_window(&ts, 2.0 * ts.window_r, ext_seed)?;
                continue;
            }
        };
        let x_hat = match cfg.decoder {
            Decoder::Chebyshev => decode_chebyshev(&ts, &code)?,
            Decoder::Uniform => {
                decode_uniform(&ts, &code, cfg.walk_steps, rng::derive_seed(cfg.seed, index, Purpose::Walk))?
            }
        };
        let fixed_point = encode(&ts, &x_hat).is_ok_and(|c| c == code);
        let distortion = norm(&x.iter().zip(&x_hat).map(|(a, b)| a - b).collect::<Vec<_>>());
        return Ok(Some(TrialRecord {
            farthest_vertex: polygon.map(|p| p.farthest_from([x[0], x[1]])),
            code_hash: code.hash(),
            x,
            x_hat,
            distortion,
            fixed_point,
        }));
    }
    Ok(None)
}

/// All trials in index order; the order does not depend on the thread count.
pub fn distortion_trials(cfg: &DistortionConfig) -> Result<Vec<Option<TrialRecord>>> {
    cfg.validate()?;
    (0..cfg.trials as u64).into_par_iter().map(|i| run_trial(cfg, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub config: DistortionConfig,
    pub mean: EstimateWithCI,
    pub median: f64,
    /// Distribution-free 95% interval from order statistics.
    pub median_ci95: (f64, f64),
    /// `(q, value)` for q in 0.1, 0.25, 0.75, 0.9.
    pub quantiles: Vec<(f64, f64)>,
    pub fixed_point_violations: usize,
    /// Fraction of trials whose farthest cell vertex from `x` exceeds `far_radius`.
    pub far_fraction: Option<EstimateWithCI>,
    pub excluded_fraction: f64,
}

/// Largest excluded fraction before a run is declared failed.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-2;

pub fn summarize_trials(cfg: &DistortionConfig, trials: &[Option<TrialRecord>]) -> Result<DistortionReport> {
    let done: Vec<&TrialRecord> = trials.iter().flatten().collect();
    let excluded = trials.len() - done.len();
    let fraction = excluded as f64 / trials.len().max(1) as f64;
    if done.is_empty() || fraction >= MAX_EXCLUDED_FRACTION {
        return Err(CodecError::BudgetExhausted { excluded, trials: trials.len(), fraction });
    }
    let mut acc = MeanVar::default();
    let mut sorted: Vec<f64> = done.iter().map(|t| t.distortion).collect();
    sorted.iter().for_each(|&d| acc.push(d));
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let half_width = 0.98 * m.sqrt();
    let lo = ((0.5 * m - half_width).floor().max(0.0) as usize).min(sorted.len() - 1);
    let hi = ((0.5 * m + half_width).ceil() as usize).min(sorted.len() - 1);
    let far_fraction = match (cfg.far_radius, cfg.n) {
        (Some(r), 2) => {
            let hits: Vec<f64> =
                done.iter().map(|t| f64::from(u8::from(t.farthest_vertex.is_some_and(|v| v > r)))).collect();
            Some(EstimateWithCI::from_samples(&hits, excluded))
        }
        _ => None,
    };
    Ok(DistortionReport {
        config: cfg.clone(),
        mean: acc.estimate(excluded),
        median: quantile(&sorted, 0.5),
        median_ci95: (sorted[lo], sorted[hi]),
        quantiles: [0.1, 0.25, 0.75, 0.9].iter().map(|&q| (q, quantile(&sorted, q))).collect(),
        fixed_point_violations: done.iter().filter(|t| !t.fixed_point).count(),
        far_fraction,
        excluded_fraction: fraction,
    })
}

/// Draw `x` uniformly in the probe ball, encode, decode and report distortion.
pub fn distortion_experiment(cfg: &DistortionConfig) -> Result<DistortionReport> {
    summarize_trials(cfg, &distortion_trials(cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgeom::same_cell;
    use crate::processes::{sample_isotropic, Hyperplane};
    use proptest::prelude::*;

    fn square_sample(tau: f64) -> TessellationSample {
        let hs = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        TessellationSample {
            dim: 2,
            model: Model::DeterministicGrid,
            gamma: 1.0,
            window_r: 10.0,
            seed: 3,
            hyperplanes: hs.iter().map(|u| Hyperplane { normal: u.to_vec(), offset: tau }).collect(),
            grid_phase: None,
        }
    }

    #[test]
    fn origin_encodes_to_all_minus() {
        let ts = sample_isotropic(3, 2.0, 8.0, 11).unwrap();
        let c = encode(&ts, &[0.0; 3]).unwrap();
        assert!(c.bits.iter().all(|&b| b == -1));
        assert_eq!(c.len(), ts.len());
        assert!(encode(&ts, &[0.0; 2]).is_err());
        assert!(matches!(encode(&ts, &[9.0, 0.0, 0.0]), Err(CodecError::OutsideWindow { .. })));
    }

    #[test]
    fn ties_go_to_the_origin_side() {
        let ts = square_sample(1.0);
        let c = encode(&ts, &[1.0, 0.0]).unwrap();
        assert_eq!(c.bits, vec![-1, -1, -1, -1]);
        assert_eq!(encode(&ts, &[1.0 + 1e-9, 0.0]).unwrap().bits[0], 1);
    }

    #[test]
    fn zero_cell_code_decodes_to_the_origin_square() {
        let ts = square_sample(1.5);
        let code = encode(&ts, &[0.2, -0.3]).unwrap();
        let c = decode_chebyshev(&ts, &code).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unbound_codes_rejected() {
        let ts = square_sample(1.0);
        let mut code = encode(&ts, &[0.0, 0.0]).unwrap();
        code.source_seed += 1;
        assert!(matches!(cell_of(&ts, &code), Err(CodecError::Unbound { .. })));
        code.source_seed -= 1;
        code.bits.pop();
        assert!(matches!(cell_of(&ts, &code), Err(CodecError::Unbound { .. })));
    }

    #[test]
    fn adversarial_code_is_a_decode_failure() {
        // x > 1 and x < -1 at once
        let ts = square_sample(1.0);
        let code = CodeWord { bits: vec![1, 1, -1, -1], source_seed: 3 };
        assert!(matches!(decode_chebyshev(&ts, &code), Err(CodecError::DecodeFailure(CellError::Empty))));
    }

    #[test]
    fn square_cell_uniform_decode_moments() {
        // outer cell [1, 3] x [-1, 1] of the square grid with spacing 2
        let mut ts = square_sample(1.0);
        ts.hyperplanes.push(Hyperplane { normal: vec![1.0, 0.0], offset: 3.0 });
        let code = encode(&ts, &[2.0, 0.0]).unwrap();
        let mut acc = MeanVar::default();
        for s in 0..4000 {
            let p = decode_uniform(&ts, &code, 30, s).unwrap();
            assert_eq!(encode(&ts, &p).unwrap(), code);
            acc.push(p[1] * p[1]);
        }
        // half-width 1 so E[y²] = 1/3
        assert!(acc.estimate(0).within_se(1.0 / 3.0, 4.0), "{:?}", acc.estimate(0));
    }

    #[test]
    fn single_bit_flips_are_sometimes_feasible() {
        let mut feasible = 0;
        let mut total = 0;
        for seed in 0..20 {
            let ts = sample_isotropic(2, 1.0, 12.0, seed).unwrap();
            let code = encode(&ts, &[0.0, 0.0]).unwrap();
            for i in 0..code.len() {
                let mut flipped = code.clone();
                flipped.bits[i] = -flipped.bits[i];
                total += 1;
                if decode_chebyshev(&ts, &flipped).is_ok() {
                    feasible += 1;
                }
            }
        }
        assert!(feasible > 0 && feasible < total, "{feasible}/{total}");
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = DistortionConfig::new(Model::IsotropicPoisson, 2, 1.0, Decoder::Chebyshev, 0, 1);
        assert!(matches!(distortion_experiment(&cfg), Err(CodecError::InvalidArgument(_))));
    }

    #[test]
    fn distortion_bounded_by_cell_diameter() {
        let mut cfg = DistortionConfig::new(Model::IsotropicPoisson, 2, 2.0, Decoder::Chebyshev, 200, 9);
        cfg.far_radius = Some(1.0);
        for t in distortion_trials(&cfg).unwrap().into_iter().flatten() {
            assert!(t.fixed_point);
            let far = t.farthest_vertex.unwrap();
            assert!(t.distortion <= far + 1e-9);
        }
        let rep = distortion_experiment(&cfg).unwrap();
        assert_eq!(rep.fixed_point_violations, 0);
        assert!(rep.median_ci95.0 <= rep.median && rep.median <= rep.median_ci95.1);
    }

    #[test]
    fn higher_dimensional_trials_run() {
        for decoder in [Decoder::Chebyshev, Decoder::Uniform] {
            let cfg = DistortionConfig::new(Model::IsotropicPoisson, 3, 1.0, decoder, 10, 4);
            let rep = distortion_experiment(&cfg).unwrap();
            assert_eq!(rep.fixed_point_violations, 0);
            assert!(rep.far_fraction.is_none());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn codes_agree_with_same_cell(
            seed in 0u64..1_000,
            x in prop::array::uniform2(-3.0f64..3.0),
            y in prop::array::uniform2(-3.0f64..3.0),
        ) {
            let ts = sample_isotropic(2, 1.0, 6.0, seed).unwrap();
            let same = same_cell(&ts, &x, &y).unwrap();
            prop_assert_eq!(encode(&ts, &x).unwrap() == encode(&ts, &y).unwrap(), same);
        }

        #[test]
        fn chebyshev_decode_is_a_right_inverse(seed in 0u64..1_000, x in prop::array::uniform2(-2.0f64..2.0)) {
            let ts = sample_isotropic(2, 1.5, 8.0, seed).unwrap();
            let code = encode(&ts, &x).unwrap();
            let x_hat = decode_chebyshev(&ts, &code).unwrap();
            prop_assert_eq!(encode(&ts, &x_hat).unwrap(), code);
        }
    }
}
