//! Empirical probing of the restriction inequality
//! `[∫|f|² dμ]^{1/2} ≤ C ‖f̂‖_{ℓ^p}`.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{FourierTable, fourier_table};
use crate::error::{Result, domain};
use crate::measure::LevelApproximation;
use crate::rng::{stream, tag};
use crate::scalar::Real;

/// `p = 2(β + 4(1-α)) / (β + 8(1-α))` and `θ = 2/p - 1`.
pub fn restriction_exponents(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let two_thirds = 2.0 / 3.0;
    if !(alpha > two_thirds && alpha <= 1.0 && beta > two_thirds && beta <= 1.0) {
        return domain("restriction exponents need 2/3 < alpha, beta ≤ 1");
    }
    if alpha == 1.0 {
        return Ok((2.0, 0.0));
    }
    let gap = 1.0 - alpha;
    let p = 2.0 * (beta + 4.0 * gap) / (beta + 8.0 * gap);
    Ok((p, 2.0 / p - 1.0))
}

/// Largest ratios seen for trigonometric polynomials with coefficients on
/// `[0, degree]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionBucket {
    pub degree: u64,
    pub max_ratio: f64,
    /// Ratio of the (modulated) Dirichlet kernel of the same width.
    pub dirichlet_ratio: f64,
    pub random_max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionReport {
    pub p: f64,
    pub trials: usize,
    pub buckets: Vec<RestrictionBucket>,
    pub max_ratio: f64,
}

impl RestrictionReport {
    /// `max(2^{k+1}) / max(2^k)` for consecutive buckets, keyed by the smaller degree.
    pub fn growth(&self) -> Vec<(u64, f64)> {
        self.buckets
            .windows(2)
            .map(|w| (w[0].degree, w[1].max_ratio / w[0].max_ratio))
            .collect()
    }
}

/// `∫|f|² dμ` for `f = Σ_n c_n e^{2πinx}`: `Σ_d R(d) μ̂(-d)` with the
/// autocorrelation `R(d) = Σ_n c_{n+d} conj(c_n)`, formed by FFT.
pub fn l2_against<T: Real>(coeffs: &[Complex<f64>], table: &FourierTable<T>) -> f64 {
    let n = coeffs.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(coeffs);
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    // Forward-then-inverse gives Σ_n c_n conj(c_{n-d})·len at index d.
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    let top = (n - 1) as i64;
    let mut acc = 0.0;
    for d in -top..=top {
        let r = buf[d.rem_euclid(len as i64) as usize] * scale;
        let mu = table.get(-d);
        acc += r.re * mu.re.f64() - r.im * mu.im.f64();
    }
    acc.max(0.0)
}

fn lp_norm(coeffs: &[Complex<f64>], p: f64) -> f64 {
    coeffs.iter().map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Ratios `[∫|f|² dμ_j]^{1/2} / ‖f̂‖_p` over degrees `2, 4, …, max_degree`,
/// for `trials` complex-Gaussian polynomials per degree and the Dirichlet
/// kernel of the same width.
pub fn restriction_sweep(
    approx: &LevelApproximation,
    trials: usize,
    max_degree: u64,
    p: f64,
    seed: u64,
) -> Result<RestrictionReport> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    if max_degree < 2 {
        return domain("max degree must be at least 2");
    }
    if !(p >= 1.0) {
        return domain("p must be at least 1");
    }
    let table = fourier_table::<f64>(approx, max_degree)?;
    let mut degrees = Vec::new();
    let mut d = 2u64;
    while d <= max_degree {
        degrees.push(d);
        d *= 2;
    }
    let buckets = degrees
        .iter()
        .map(|&degree| {
            let width = degree as usize + 1;
            let ratio = |c: &[Complex<f64>]| l2_against(c, &table).sqrt() / lp_norm(c, p);
            let dirichlet_ratio = ratio(&vec![Complex::new(1.0, 0.0); width]);
            let random_max_ratio = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream(seed, &[tag::RESTRICTION, degree, trial as u64]);
                    let c: Vec<Complex<f64>> = (0..width)
                        .map(|_| Complex::new(f64::standard_normal(&mut rng), f64::standard_normal(&mut rng)))
                        .collect();
                    ratio(&c)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(0.0, f64::max);
            RestrictionBucket {
                degree,
                max_ratio: dirichlet_ratio.max(random_max_ratio),
                dirichlet_ratio,
                random_max_ratio,
            }
        })
        .collect::<Vec<_>>();
    let max_ratio = buckets.iter().map(|b| b.max_ratio).fold(0.0, f64::max);
    Ok(RestrictionReport {
        p,
        trials,
        buckets,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dirichlet_kernel;

    #[test]
    fn exponent_spot_checks() {
        assert_eq!(restriction_exponents(1.0, 1.0).unwrap(), (2.0, 0.0));
        let (p, theta) = restriction_exponents(0.9, 0.8).unwrap();
        assert!((p - 1.5).abs() < 1e-15);
        assert!((theta - 1.0 / 3.0).abs() < 1e-15);
        assert!(restriction_exponents(0.6, 0.9).is_err());
        assert!(restriction_exponents(0.9, 1.1).is_err());
    }

    #[test]
    fn exponents_in_range() {
        for i in 1..=30 {
            for j in 1..=30 {
                let a = 2.0 / 3.0 + i as f64 / 90.0;
                let b = 2.0 / 3.0 + j as f64 / 90.0;
                let (p, theta) = restriction_exponents(a, b).unwrap();
                assert!(p > 1.0 && p <= 2.0);
                assert!((theta - (2.0 / p - 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_polynomial_ratio_is_one() {
        let a = LevelApproximation::new(1, 64, vec![3, 17, 40]).unwrap();
        let t = fourier_table::<f64>(&a, 4).unwrap();
        let c = [Complex::new(1.0, 0.0)];
        assert!((l2_against(&c, &t).sqrt() / lp_norm(&c, 1.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_energy_matches_quadrature() {
        // ∫|D_N|² dμ for a step density, by fine midpoint quadrature.
        let a = LevelApproximation::new(1, 16, vec![2, 3, 9]).unwrap();
        let n = 6u64;
        let t = fourier_table::<f64>(&a, 2 * n).unwrap();
        let c = vec![Complex::new(1.0, 0.0); (2 * n + 1) as usize];
        let exact = l2_against(&c, &t);
        let sub = 4000;
        let mut q = 0.0;
        for &p in a.cells() {
            for i in 0..sub {
                let x = (p as f64 + (i as f64 + 0.5) / sub as f64) / 16.0;
                q += dirichlet_kernel(n, x).powi(2);
            }
        }
        q /= (sub * a.cells().len()) as f64;
        assert!((exact - q).abs() < 1e-5 * q, "{exact} vs {q}");
        assert!((lp_norm(&c, 1.5) - 13f64.powf(1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = LevelApproximation::new(1, 256, (0..256).filter(|p| p % 5 < 3).collect()).unwrap();
        let r1 = restriction_sweep(&a, 8, 64, 1.5, 3).unwrap();
        let r2 = restriction_sweep(&a, 8, 64, 1.5, 3).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.buckets.len(), 6);
        assert!(r1.max_ratio > 0.0);
    }
}
