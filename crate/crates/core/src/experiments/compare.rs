//! Grid, Manhattan and isotropic zero cells side by side, and sections of the
//! isotropic zero cell by random subspaces.

use serde::Serialize;

use super::{cell_volume, certified_cell, check_inputs, oracle_check, run_replications, ExperimentError, Result};
use crate::analytics;
use crate::cellgeom::{self, CertifyPolicy};
use crate::processes::{self, norm, Model};
use crate::rng::{self, Purpose};
use crate::stats::{EstimateWithCI, MeanVar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub model: Model,
    pub n: usize,
    pub gamma: f64,
    pub probe: Vec<f64>,
    pub volume: EstimateWithCI,
    pub volume_analytic: f64,
    pub volume_within_3se: Option<bool>,
    /// `P(probe ∉ Z_0)`.
    pub separation: EstimateWithCI,
    pub separation_analytic: Option<f64>,
    pub separation_within_3se: Option<bool>,
    pub rms_uniform_norm: EstimateWithCI,
    pub rms_uniform_norm_table: f64,
    pub rms_r_max: EstimateWithCI,
    pub rms_r_max_table: f64,
    /// Table entries of this row are bounds on scale, not identities.
    pub upper_bound_style: bool,
    pub rms_within_3se: Option<bool>,
    pub excluded_fraction: f64,
}

impl CompareRow {
    pub fn passed(&self) -> bool {
        [self.volume_within_3se, self.separation_within_3se, self.rms_within_3se]
            .iter()
            .all(|c| *c != Some(false))
    }
}

struct Measures {
    volume: f64,
    norm_sq: f64,
    r_max_sq: f64,
    separated: f64,
}

/// Probe point `(1/γ, ..., 1/γ)`.
pub fn default_probe(n: usize, gamma: f64) -> Vec<f64> {
    vec![1.0 / gamma; n]
}

/// Root of a mean of squares, with a delta-method standard error.
fn rms(acc: &MeanVar, excluded: usize) -> EstimateWithCI {
    let m = acc.mean().max(0.0).sqrt();
    let se = acc.std_err().map(|s| if m > 0.0 { s / (2.0 * m) } else { 0.0 });
    EstimateWithCI::from_parts(m, se, acc.count(), acc.estimate(excluded).excluded_fraction)
}

fn measure(model: Model, n: usize, gamma: f64, seed: u64, index: u64, probe: &[f64]) -> Result<Option<Measures>> {
    let Some(view) = certified_cell(model, n, gamma, seed, index, norm(probe))? else {
        return Ok(None);
    };
    let separated = f64::from(u8::from(!cellgeom::in_zero_cell(&view.sample, probe)?));
    if model == Model::IsotropicPoisson {
        let dir_seed = rng::derive_seed(seed, index, Purpose::Directions);
        let y = cellgeom::uniform_point(&view, &mut rng::stream(seed, index, Purpose::Walk))?;
        let r_max = cellgeom::r_max_estimate(&view, 64, dir_seed)?;
        return Ok(Some(Measures {
            volume: cell_volume(&view, dir_seed)?,
            norm_sq: y.iter().map(|v| v * v).sum(),
            r_max_sq: r_max * r_max,
            separated,
        }));
    }
    // axis-parallel models give boxes; use the exact conditional moments
    let mut m = Measures { volume: 1.0, norm_sq: 0.0, r_max_sq: 0.0, separated };
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let hi = view.radial(&e).exact();
        e[j] = -1.0;
        let lo = view.radial(&e).exact();
        let (Some(hi), Some(lo)) = (hi, lo) else { return Ok(None) };
        m.volume *= hi + lo;
        m.norm_sq += (hi.powi(3) + lo.powi(3)) / (3.0 * (hi + lo));
        m.r_max_sq += hi.max(lo).powi(2);
    }
    Ok(Some(m))
}

fn compare_row(model: Model, n: usize, gamma: f64, reps: usize, seed: u64, probe: &[f64]) -> Result<CompareRow> {
    let table = analytics::comparison_table(n, gamma, model)?;
    let model_seed = rng::derive_seed(seed, model as u64, Purpose::Misc);
    let (ms, excluded) = run_replications(reps, |i| measure(model, n, gamma, model_seed, i, probe))?;
    let mut acc = [MeanVar::default(), MeanVar::default(), MeanVar::default(), MeanVar::default()];
    for m in &ms {
        for (a, v) in acc.iter_mut().zip([m.volume, m.separated, m.norm_sq, m.r_max_sq]) {
            a.push(v);
        }
    }
    let volume = acc[0].estimate(excluded);
    let separation = acc[1].estimate(excluded);
    let rms_uniform_norm = rms(&acc[2], excluded);
    let rms_r_max = rms(&acc[3], excluded);
    let volume_analytic = table.zero_cell_volume.value();
    let separation_analytic = Some(table.separation(probe));
    let rms_within_3se = (!table.upper_bound_style).then(|| {
        oracle_check(&rms_uniform_norm, Some(table.rms_uniform_norm)).1 != Some(false)
            && oracle_check(&rms_r_max, Some(table.rms_r_max)).1 != Some(false)
    });
    Ok(CompareRow {
        model,
        n,
        gamma,
        probe: probe.to_vec(),
        volume_within_3se: oracle_check(&volume, Some(volume_analytic)).1,
        separation_within_3se: oracle_check(&separation, separation_analytic).1,
        volume,
        volume_analytic,
        separation,
        separation_analytic,
        rms_uniform_norm,
        rms_uniform_norm_table: table.rms_uniform_norm,
        rms_r_max,
        rms_r_max_table: table.rms_r_max,
        upper_bound_style: table.upper_bound_style,
        rms_within_3se,
        excluded_fraction: excluded as f64 / reps as f64,
    })
}

/// Rows for the grid, Manhattan and isotropic models at the probe `(1/γ, ..., 1/γ)`.
pub fn compare_models(n: usize, gamma: f64, reps: usize, seed: u64) -> Result<Vec<CompareRow>> {
    compare_models_at(n, gamma, reps, seed, &default_probe(n, gamma))
}

pub fn compare_models_at(n: usize, gamma: f64, reps: usize, seed: u64, probe: &[f64]) -> Result<Vec<CompareRow>> {
    check_inputs(n, gamma, reps)?;
    if n > 6 {
        return Err(ExperimentError::InvalidArgument(format!("model comparison needs n <= 6, got {n}")));
    }
    if probe.len() != n {
        return Err(ExperimentError::InvalidArgument(format!("probe has {} coordinates, expected {n}", probe.len())));
    }
    [Model::DeterministicGrid, Model::ManhattanPoisson, Model::IsotropicPoisson]
        .into_iter()
        .map(|m| compare_row(m, n, gamma, reps, seed, probe))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    /// Section planes per unit of `2W`, an estimate of the induced intensity.
    pub intensity: EstimateWithCI,
    pub intensity_analytic: f64,
    pub intensity_within_3se: Option<bool>,
    pub volume: EstimateWithCI,
    pub volume_analytic: f64,
    pub volume_within_3se: Option<bool>,
    pub excluded_fraction: f64,
}

impl SectionReport {
    pub fn passed(&self) -> bool {
        self.intensity_within_3se != Some(false) && self.volume_within_3se != Some(false)
    }
}

/// Intersect isotropic samples with uniformly random `m`-dimensional subspaces.
pub fn section_experiment(n: usize, m: usize, gamma: f64, reps: usize, seed: u64) -> Result<SectionReport> {
    check_inputs(n, gamma, reps)?;
    let expected = analytics::section_expectations(n, m, gamma)?;
    let (pairs, excluded) = run_replications(reps, |i| {
        let s = rng::derive_seed(seed, i, Purpose::Hyperplanes);
        let w = cellgeom::initial_window(m, expected.induced_gamma, 0.0);
        let ts = processes::sample_isotropic(n, gamma, w, s)?;
        let frame = cellgeom::random_frame(n, m, &mut rng::stream(seed, i, Purpose::Subspace));
        let section = cellgeom::intersect_with_subspace(&ts, &frame)?;
        let intensity = section.len() as f64 / (2.0 * w);
        let view = cellgeom::certify(&section, &CertifyPolicy::default())?;
        if view.truncated {
            return Ok(None);
        }
        Ok(Some((intensity, cell_volume(&view, rng::derive_seed(seed, i, Purpose::Directions))?)))
    })?;
    let (ints, vols): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let intensity = EstimateWithCI::from_samples(&ints, excluded);
    let volume = EstimateWithCI::from_samples(&vols, excluded);
    let volume_analytic = expected.expected_volume.value();
    Ok(SectionReport {
        n,
        m,
        gamma,
        intensity_within_3se: oracle_check(&intensity, Some(expected.induced_gamma)).1,
        volume_within_3se: oracle_check(&volume, Some(volume_analytic)).1,
        intensity,
        intensity_analytic: expected.induced_gamma,
        volume,
        volume_analytic,
        excluded_fraction: excluded as f64 / reps as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_row_is_exact() {
        let rows = compare_models(3, 2.0, 3, 1).unwrap();
        let g = &rows[0];
        assert_eq!(g.model, Model::DeterministicGrid);
        assert!((g.volume.mean - g.volume_analytic).abs() < 1e-12 * g.volume_analytic);
        assert!((g.rms_uniform_norm.mean - g.rms_uniform_norm_table).abs() < 1e-12);
        assert!((g.rms_r_max.mean - g.rms_r_max_table).abs() < 1e-12);
        assert_eq!(g.separation.mean, g.separation_analytic.unwrap());
        assert!(g.passed());
    }

    #[test]
    fn manhattan_row_small_run() {
        let rows = compare_models(2, 1.0, 3000, 4).unwrap();
        assert!(rows[1].passed(), "{:?}", rows[1]);
        assert!(rows[2].upper_bound_style && rows[2].rms_within_3se.is_none());
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(compare_models(7, 1.0, 10, 1).is_err());
    }

    #[test]
    fn section_small_run() {
        let r = section_experiment(3, 2, 1.0, 500, 2).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(section_experiment(3, 3, 1.0, 10, 2).is_err());
    }
}
