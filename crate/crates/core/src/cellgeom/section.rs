//! Sections of a hyperplane sample by a linear subspace.

use rand::Rng;

use super::CellError;
use crate::processes::{dot, norm, Hyperplane, Model, TessellationSample};
use crate::specfun;

const DROP_TOL: f64 = 1e-12;

fn check_frame(n: usize, basis: &[Vec<f64>]) -> Result<(), CellError> {
    let m = basis.len();
    if m == 0 || m >= n {
        return Err(CellError::InvalidSubspace { n, m });
    }
    for (i, b) in basis.iter().enumerate() {
        if b.len() != n {
            return Err(CellError::DimensionMismatch { expected: n, got: b.len() });
        }
        for (j, c) in basis.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            if (dot(b, c) - target).abs() > 1e-10 {
                return Err(CellError::NotOrthonormal);
            }
        }
    }
    Ok(())
}

/// Intensity of the section process `X ∩ L` for an isotropic process of
/// intensity `gamma` in dimension `n` and an `m`-dimensional subspace `L`.
pub fn induced_intensity(n: usize, m: usize, gamma: f64) -> f64 {
    let lo = |k: usize| specfun::log_omega(k as u64).expect("k >= 1");
    gamma * (lo(m) + lo(n + 1) - lo(n) - lo(m + 1)).exp()
}

/// Restrict the sample to the span of an orthonormal `m`-frame, expressed in
/// frame coordinates. Planes nearly parallel to the subspace are dropped, as
/// are planes whose section lies outside the window. For the isotropic model
/// the returned `gamma` is the induced intensity; other models keep theirs.
pub fn intersect_with_subspace(ts: &TessellationSample, basis: &[Vec<f64>]) -> Result<TessellationSample, CellError> {
    check_frame(ts.dim, basis)?;
    let m = basis.len();
    let mut hyperplanes = Vec::new();
    for h in &ts.hyperplanes {
        let p: Vec<f64> = basis.iter().map(|b| dot(&h.normal, b)).collect();
        let len = norm(&p);
        if len < DROP_TOL {
            continue;
        }
        let offset = h.offset / len;
        if offset >= ts.window_r {
            continue;
        }
        hyperplanes.push(Hyperplane { normal: p.into_iter().map(|x| x / len).collect(), offset });
    }
    let gamma = match ts.model {
        Model::IsotropicPoisson => induced_intensity(ts.dim, m, ts.gamma),
        _ => ts.gamma,
    };
    Ok(TessellationSample {
        dim: m,
        model: ts.model,
        gamma,
        window_r: ts.window_r,
        seed: ts.seed,
        hyperplanes,
        grid_phase: None,
    })
}

/// Uniformly random orthonormal `m`-frame in `R^n` (Gram–Schmidt on Gaussian vectors).
pub fn random_frame<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(m);
    while frame.len() < m {
        let mut v = crate::processes::uniform_direction(n, rng);
        for b in &frame {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let len = norm(&v);
        if len > 1e-6 {
            frame.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    frame
}
