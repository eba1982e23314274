//! Log-domain special functions and the dimension constants of the unit ball.
//!
//! Every product of factorials and powers that appears in the zero-cell formulas
//! overflows a double somewhere past `n = 170`, so the functions here work with
//! logarithms throughout and exponentiate only at the very end.

use std::f64::consts::{LN_2, PI};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("dimension must be at least 1 (got {0})")]
    ZeroDimension(u64),
    #[error("argument {name} = {value} is outside the domain of {func}")]
    Domain {
        func: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("{func} did not converge after {iterations} iterations")]
    NoConvergence { func: &'static str, iterations: usize },
}

/// A positive quantity carried by its natural logarithm.
///
/// `value()` may overflow to `+inf` or underflow to `0`; `ln()` never does.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct LogValue(f64);

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        LogValue(ln)
    }

    pub fn from_value(value: f64) -> Self {
        LogValue(value.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn powf(self, k: f64) -> LogValue {
        LogValue(self.0 * k)
    }
}

// products of values are sums of logs
#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Mul for LogValue {
    type Output = LogValue;

    fn mul(self, other: LogValue) -> LogValue {
        LogValue(self.0 + other.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Div for LogValue {
    type Output = LogValue;

    fn div(self, other: LogValue) -> LogValue {
        LogValue(self.0 - other.0)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
///
/// Lanczos (g = 7, nine terms) below 10; above, the Stirling series with seven
/// Bernoulli corrections, whose truncation error is below 1e-16 there.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma called with x = {x}");
    if x >= 10.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 360.0
                        - inv2
                            * (1.0 / 1260.0
                                - inv2
                                    * (1.0 / 1680.0
                                        - inv2 * (1.0 / 1188.0 - inv2 * (691.0 / 360_360.0 - inv2 / 156.0))))));
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series;
    }
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

fn check_dim(n: u64) -> Result<(), SpecfunError> {
    if n == 0 {
        Err(SpecfunError::ZeroDimension(n))
    } else {
        Ok(())
    }
}

/// `ln κ_n`, the log-volume of the unit ball in dimension `n`.
pub fn log_kappa(n: u64) -> Result<f64, SpecfunError> {
    check_dim(n)?;
    Ok(log_kappa_unchecked(n))
}

/// Same as [`log_kappa`] but also defined at `n = 0` (where κ_0 = 1).
pub(crate) fn log_kappa_unchecked(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let half = n as f64 / 2.0;
    half * PI.ln() - ln_gamma(half + 1.0)
}

/// `ln ω_n`, the log-surface area of the unit sphere S^{n-1}; ω_n = n κ_n.
pub fn log_omega(n: u64) -> Result<f64, SpecfunError> {
    check_dim(n)?;
    Ok((n as f64).ln() + log_kappa_unchecked(n))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DimConstants {
    pub n: u64,
    pub log_kappa_n: f64,
    pub log_omega_n: f64,
}

impl DimConstants {
    pub fn new(n: u64) -> Result<Self, SpecfunError> {
        Ok(DimConstants {
            n,
            log_kappa_n: log_kappa(n)?,
            log_omega_n: log_omega(n)?,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.log_kappa_n.exp()
    }

    pub fn omega(&self) -> f64 {
        self.log_omega_n.exp()
    }
}

const GAMMA_EPS: f64 = 1e-14;
const GAMMA_BASE_ITERS: usize = 200;

fn gamma_iteration_cap(x: f64) -> usize {
    // The series and the continued fraction both need O(sqrt(x)) terms near
    // the transition point R ~ x, so the flat cap grows for large shapes.
    GAMMA_BASE_ITERS + (20.0 * x.sqrt()).ceil() as usize
}

fn check_gamma_args(func: &'static str, x: f64, r: f64) -> Result<(), SpecfunError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecfunError::Domain { func, name: "x", value: x });
    }
    if r.is_nan() || r < 0.0 || r == f64::NEG_INFINITY {
        return Err(SpecfunError::Domain { func, name: "R", value: r });
    }
    Ok(())
}

/// ln of the series sum for the lower regularized gamma (valid for R < x + 1).
fn ln_lower_series(x: f64, r: f64) -> Result<f64, SpecfunError> {
    let cap = gamma_iteration_cap(x);
    let mut term = 1.0 / x;
    let mut sum = term;
    let mut denom = x;
    for _ in 0..cap {
        denom += 1.0;
        term *= r / denom;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            return Ok(x * r.ln() - r - ln_gamma(x) + sum.ln());
        }
    }
    Err(SpecfunError::NoConvergence { func: "incomplete gamma series", iterations: cap })
}

/// ln of the continued fraction for the upper regularized gamma (valid for R >= x + 1).
fn ln_upper_cf(x: f64, r: f64) -> Result<f64, SpecfunError> {
    const TINY: f64 = 1e-300;
    let cap = gamma_iteration_cap(x);
    let mut b = r + 1.0 - x;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=cap {
        let an = -(i as f64) * (i as f64 - x);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            return Ok(x * r.ln() - r - ln_gamma(x) + h.ln());
        }
    }
    Err(SpecfunError::NoConvergence { func: "incomplete gamma continued fraction", iterations: cap })
}

/// Pair `(ln Γ_ℓ(x,R), ln Γ_u(x,R))`, each computed on its stable side.
fn ln_reg_gamma_pair(x: f64, r: f64) -> Result<(f64, f64), SpecfunError> {
    if r == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if r == f64::INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if r < x + 1.0 {
        let lower = ln_lower_series(x, r)?;
        Ok((lower, ln_one_minus_exp(lower)))
    } else {
        let upper = ln_upper_cf(x, r)?;
        Ok((ln_one_minus_exp(upper), upper))
    }
}

/// `ln(1 - e^a)` for `a <= 0`.
fn ln_one_minus_exp(a: f64) -> f64 {
    if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// Upper regularized incomplete gamma Γ_u(x, R) = Γ(x, R) / Γ(x).
pub fn reg_gamma_upper(x: f64, r: f64) -> Result<f64, SpecfunError> {
    check_gamma_args("reg_gamma_upper", x, r)?;
    Ok(ln_reg_gamma_pair(x, r)?.1.exp().clamp(0.0, 1.0))
}

/// Lower regularized incomplete gamma Γ_ℓ(x, R) = γ(x, R) / Γ(x).
pub fn reg_gamma_lower(x: f64, r: f64) -> Result<f64, SpecfunError> {
    check_gamma_args("reg_gamma_lower", x, r)?;
    Ok(ln_reg_gamma_pair(x, r)?.0.exp().clamp(0.0, 1.0))
}

/// `ln Γ_u(x, R)`, finite even when Γ_u itself underflows.
pub fn ln_reg_gamma_upper(x: f64, r: f64) -> Result<f64, SpecfunError> {
    check_gamma_args("ln_reg_gamma_upper", x, r)?;
    Ok(ln_reg_gamma_pair(x, r)?.1)
}

/// `ln Γ_ℓ(x, R)`.
pub fn ln_reg_gamma_lower(x: f64, r: f64) -> Result<f64, SpecfunError> {
    check_gamma_args("ln_reg_gamma_lower", x, r)?;
    Ok(ln_reg_gamma_pair(x, r)?.0)
}

/// ln of the coefficient c_n = 2γκ_{n-1}/(nκ_n) governing every separation law:
/// the expected number of hyperplanes crossing a segment [0, x] is c_n |x|.
pub fn ln_mean_chord_coeff(n: u64, gamma: f64) -> Result<f64, SpecfunError> {
    check_dim(n)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SpecfunError::Domain { func: "mean_chord_coeff", name: "gamma", value: gamma });
    }
    Ok(LN_2 + gamma.ln() + log_kappa_unchecked(n - 1) - (n as f64).ln() - log_kappa_unchecked(n))
}

pub fn mean_chord_coeff(n: u64, gamma: f64) -> Result<f64, SpecfunError> {
    Ok(ln_mean_chord_coeff(n, gamma)?.exp())
}

/// Large-n exponent ln β − β + 1 of (1/n) ln Γ_u(n, βn) for β > 1 and of
/// (1/n) ln Γ_ℓ(n, βn) for β < 1.
pub fn laplace_rate(beta: f64) -> Result<f64, SpecfunError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SpecfunError::Domain { func: "laplace_rate", name: "beta", value: beta });
    }
    Ok(beta.ln() - beta + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_small_dimensions() {
        assert!((log_kappa(1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((log_kappa(2).unwrap() - PI.ln()).abs() < 1e-15);
        // π^5 / 5! = 306.0196847852814 / 120
        let k10 = 306.019_684_785_281_4 / 120.0;
        assert!((log_kappa(10).unwrap().exp() - k10).abs() < 1e-12);
        assert!((log_kappa(10).unwrap() - 2.55016f64.ln()).abs() < 1e-5);
        assert!(log_kappa(0).is_err());
    }

    #[test]
    fn omega_is_n_kappa() {
        for n in 1..=400u64 {
            let c = DimConstants::new(n).unwrap();
            let lhs = c.omega();
            let rhs = n as f64 * c.kappa();
            assert!(((lhs - rhs) / rhs).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn kappa_decreasing_from_six() {
        let mut prev = log_kappa(6).unwrap();
        for n in 7..=2000u64 {
            let cur = log_kappa(n).unwrap();
            assert!(cur.is_finite() && cur < prev, "n = {n}");
            prev = cur;
        }
        assert!(log_kappa(10_000).unwrap().is_finite());
    }

    #[test]
    fn ln_gamma_against_factorials() {
        let mut fact = 1.0f64;
        for k in 1..=30u32 {
            fact *= k as f64;
            let got = ln_gamma(k as f64 + 1.0);
            assert!((got - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0), "k = {k}");
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(1.5) - (PI.sqrt() / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn stirling_consistency() {
        for x in [50.0, 75.0, 100.0, 500.0, 5000.0] {
            let exact = ln_gamma(x + 1.0);
            let stirling = 0.5 * (2.0 * PI * x).ln() + x * (x / std::f64::consts::E).ln();
            assert!(((exact - stirling) / exact).abs() < 1e-3);
        }
    }

    #[test]
    fn incomplete_gamma_examples() {
        let e = std::f64::consts::E;
        assert!((reg_gamma_upper(1.0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(reg_gamma_upper(2.0, 0.0).unwrap(), 1.0);
        assert!((reg_gamma_upper(2.0, 1.0).unwrap() - 2.0 / e).abs() < 1e-14);
        assert!((reg_gamma_lower(1.0, 2.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
        assert_eq!(reg_gamma_lower(2.0, 0.0).unwrap(), 0.0);
        assert!((reg_gamma_lower(2.0, 1.0).unwrap() - (1.0 - 2.0 / e)).abs() < 1e-14);
        // Γ_u(2, 2) = 3 e^{-2}
        assert!((reg_gamma_upper(2.0, 2.0).unwrap() - 3.0 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn incomplete_gamma_integer_shape_closed_form() {
        // Γ_u(k, R) = e^{-R} Σ_{j<k} R^j / j!
        for k in 1..=12u32 {
            for &r in &[0.1, 0.7, 1.0, 3.0, 7.5, 12.0, 25.0] {
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..k {
                    term *= r / j as f64;
                    sum += term;
                }
                let expect = (-r).exp() * sum;
                let got = reg_gamma_upper(k as f64, r).unwrap();
                assert!((got - expect).abs() < 1e-13, "k={k} r={r} diff={}", got - expect);
            }
        }
    }

    #[test]
    fn incomplete_gamma_rejects_bad_input() {
        assert!(reg_gamma_upper(0.0, 1.0).is_err());
        assert!(reg_gamma_upper(f64::NAN, 1.0).is_err());
        assert!(reg_gamma_upper(1.0, f64::NAN).is_err());
        assert!(reg_gamma_lower(1.0, -1.0).is_err());
    }

    #[test]
    fn large_shape_converges() {
        for &x in &[200.0, 1000.0, 10_000.0] {
            for &ratio in &[0.5, 0.99, 1.0, 1.01, 2.0] {
                let u = reg_gamma_upper(x, ratio * x).unwrap();
                let l = reg_gamma_lower(x, ratio * x).unwrap();
                assert!((u + l - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chord_coefficient() {
        assert!((mean_chord_coeff(2, 1.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((mean_chord_coeff(1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(mean_chord_coeff(3, 0.0).is_err());
        assert!(mean_chord_coeff(3, -1.0).is_err());
        let lim = (2.0 / PI).sqrt();
        let mut prev_dev = f64::INFINITY;
        for n in [100u64, 1000, 10_000] {
            let scaled = mean_chord_coeff(n, 1.0).unwrap() * (n as f64).sqrt();
            let dev = (scaled / lim - 1.0).abs();
            assert!(dev < 0.01 && dev < prev_dev, "n = {n}, dev = {dev}");
            prev_dev = dev;
        }
        let c = mean_chord_coeff(10_000, 1.0).unwrap();
        assert!((c / (lim / 100.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn laplace_rate_examples() {
        assert_eq!(laplace_rate(1.0).unwrap(), 0.0);
        assert!((laplace_rate(2.0).unwrap() - (2f64.ln() - 1.0)).abs() < 1e-15);
        let n = 200.0;
        let empirical = ln_reg_gamma_upper(n, 2.0 * n).unwrap() / n;
        assert!((empirical - laplace_rate(2.0).unwrap()).abs() < 0.02);
        let below = ln_reg_gamma_lower(n, 0.5 * n).unwrap() / n;
        assert!((below - laplace_rate(0.5).unwrap()).abs() < 0.02);
        assert!(laplace_rate(0.0).is_err());
    }

    proptest! {
        #[test]
        fn upper_plus_lower_is_one(x in 0.05f64..400.0, r in 0.0f64..800.0) {
            let u = reg_gamma_upper(x, r).unwrap();
            let l = reg_gamma_lower(x, r).unwrap();
            prop_assert!((u + l - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&u));
        }

        #[test]
        fn upper_is_nonincreasing(x in 0.5f64..100.0, r in 0.0f64..200.0, dr in 0.0f64..5.0) {
            let a = reg_gamma_upper(x, r).unwrap();
            let b = reg_gamma_upper(x, r + dr).unwrap();
            prop_assert!(b <= a + 1e-14);
        }
    }
}
