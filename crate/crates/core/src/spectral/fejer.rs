//! Fejér and Dirichlet kernels and the smoothing split `μ = μ₁ + μ₂` with
//! `μ₁ = K_{2N} * μ`.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{FourierTable, decay_ratio};
use crate::error::{Error, Result, domain};
use crate::scalar::Real;

/// Fractional part in `[0, 1)`, and whether `x` is an integer.
fn reduce<T: Real>(x: T) -> (T, bool) {
    let f = x - x.floor();
    (f, f == T::zero())
}

/// `K_N(x) = sin²((N+1)πx) / ((N+1) sin²(πx))`, equal to `N + 1` at integers.
pub fn fejer_kernel<T: Real>(n: u64, x: T) -> T {
    let np1 = T::of_u64(n + 1);
    let (f, integer) = reduce(x);
    if integer {
        return np1;
    }
    let num = (np1 * T::PI() * f).sin();
    let den = (T::PI() * f).sin();
    num * num / (np1 * den * den)
}

/// `D_N(x) = sin((2N+1)πx) / sin(πx)`, equal to `2N + 1` at integers.
pub fn dirichlet_kernel<T: Real>(n: u64, x: T) -> T {
    let width = T::of_u64(2 * n + 1);
    let (f, integer) = reduce(x);
    if integer {
        return width;
    }
    (width * T::PI() * f).sin() / (T::PI() * f).sin()
}

/// `N = ⌊e^{1/(1-α)} / C₂⌋`.
///
/// The bounded-part argument needs `α ≥ 1 - 1/ln C₂` when `C₂ > e`; outside
/// that range the formula value is still returned as long as it is at least 1.
pub fn choose_fejer_n(alpha: f64, c2: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain("alpha must lie in (0, 1)");
    }
    if !(c2 > 0.0) {
        return domain("C2 must be positive");
    }
    let n = ((1.0 / (1.0 - alpha)).exp() / c2).floor();
    if !(n >= 1.0) {
        return domain(format!(
            "alpha = {alpha} is too small for C2 = {c2}: e^(1/(1-alpha))/C2 < 1"
        ));
    }
    if n >= u64::MAX as f64 {
        return domain("Fejér order overflows; alpha is too close to 1");
    }
    Ok(n as u64)
}

/// Splits `μ̂` into `μ̂₁(n) = (1 - |n|/(2N+1))₊ μ̂(n)` and `μ̂₂ = μ̂ - μ̂₁`.
///
/// Whichever part carries the larger weight is rounded first and the other is
/// obtained by a subtraction that is exact (Sterbenz), so `μ̂₁ + μ̂₂ = μ̂`
/// holds bit-for-bit.
pub fn fejer_split<T: Real>(table: &FourierTable<T>, n: u64) -> (FourierTable<T>, FourierTable<T>) {
    if table.k_max() < 2 * n {
        log::warn!(
            "Fejér split with N = {n} on a table of k_max = {} < 2N; μ₁ is truncated",
            table.k_max()
        );
    }
    let width = 2 * n + 1;
    let split = |k: i64, z: Complex<T>| -> (Complex<T>, Complex<T>) {
        let a = k.unsigned_abs();
        if a >= width {
            return (Complex::new(T::zero(), T::zero()), z);
        }
        let w1 = T::of_u64(width - a) / T::of_u64(width);
        let w2 = T::of_u64(a) / T::of_u64(width);
        if 2 * a <= width {
            let z1 = z * w1;
            (z1, z - z1)
        } else {
            let z2 = z * w2;
            (z - z2, z2)
        }
    };
    let mu1 = table.map(format!("{}:fejer1-N{n}", table.source_id()), |k, z| split(k, z).0);
    let mu2 = table.map(format!("{}:fejer2-N{n}", table.source_id()), |k, z| split(k, z).1);
    (mu1, mu2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu1Extrema {
    pub min: f64,
    pub max: f64,
}

/// Extremes of `μ₁(x) = Σ_{|n|≤2N} μ̂₁(n) e^{2πinx}` on `grid_size` equally
/// spaced points, evaluated by one inverse FFT.
pub fn mu1_sup_norm<T: Real>(table: &FourierTable<T>, n: u64, grid_size: usize) -> Result<Mu1Extrema> {
    if (grid_size as u128) < 4 * n as u128 {
        return domain(format!("grid size {grid_size} is below 4N = {}", 4 * n));
    }
    let (mu1, _) = fejer_split(table, n);
    let top = (2 * n).min(mu1.k_max()) as i64;
    let g = grid_size as i64;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); grid_size];
    for k in -top..=top {
        buf[k.rem_euclid(g) as usize] = buf[k.rem_euclid(g) as usize] + mu1.get(k);
    }
    // The inverse transform uses e^{+2πi kn/G}, the synthesis sign.
    FftPlanner::<T>::new().plan_fft_inverse(grid_size).process(&mut buf);
    let (min, max) = buf
        .iter()
        .map(|z| z.re.f64())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if min < -1e-9 {
        return Err(Error::Invariant(format!(
            "Fejér-smoothed density is negative ({min:e}) beyond roundoff"
        )));
    }
    Ok(Mu1Extrema { min, max })
}

/// Observed error terms of the Fejér decomposition and the bounds of the
/// analytic chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorTerms {
    /// `4 C₂³ (1-α)^{-3B} N^{1-3β/2}`.
    pub bound112: f64,
    /// `(3β+2)/(3β-2) · C₂³ (1-α)^{-3B} N^{1-3β/2}`.
    pub bound222: f64,
    /// `Σ_{|n|≤2N} |μ̂₁(n)|² |μ̂₂(-2n)|`.
    pub observed112: f64,
    /// `Σ_{|n|≤k_max/2} |μ̂₂(n)|² |μ̂₂(-2n)|`, truncated to the table.
    pub observed222: f64,
    /// Highest `|n|` entering `observed222`.
    pub range222: u64,
    /// Whether the observations respect the bounds; `None` unless the table
    /// satisfies the decay hypothesis with the given constants on its range.
    pub consistent: Option<bool>,
}

pub fn error_terms<T: Real>(
    table: &FourierTable<T>,
    n: u64,
    beta: f64,
    c2: f64,
    b: f64,
    alpha: f64,
) -> Result<ErrorTerms> {
    if beta <= 2.0 / 3.0 {
        return domain("the error-term bounds need beta > 2/3");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain("alpha must lie in (0, 1)");
    }
    if n == 0 {
        return domain("Fejér order N must be at least 1");
    }
    if table.k_max() < 4 * n {
        log::warn!(
            "error terms with N = {n} on a table of k_max = {} < 4N; observed112 is truncated",
            table.k_max()
        );
    }
    let (mu1, mu2) = fejer_split(table, n);
    let k_max = table.k_max() as i64;
    let c = c2.powi(3) * (1.0 - alpha).powf(-3.0 * b);
    let decay = (n as f64).powf(1.0 - 1.5 * beta);
    let bound112 = 4.0 * c * decay;
    let bound222 = (3.0 * beta + 2.0) / (3.0 * beta - 2.0) * c * decay;

    let top112 = (2 * n as i64).min(k_max / 2);
    let observed112: f64 = (-top112..=top112)
        .map(|k| mu1.get(k).norm_sqr().f64() * mu2.get(-2 * k).norm().f64())
        .sum();
    let top222 = k_max / 2;
    let observed222: f64 = (-top222..=top222)
        .map(|k| mu2.get(k).norm_sqr().f64() * mu2.get(-2 * k).norm().f64())
        .sum();

    let (tb, tbeta, talpha) = (T::of(b), T::of(beta), T::of(alpha));
    let certified = (1..=k_max).all(|k| {
        decay_ratio(table.get(k), k, tbeta, tb, talpha).f64() <= c2
            && decay_ratio(table.get(-k), -k, tbeta, tb, talpha).f64() <= c2
    });
    Ok(ErrorTerms {
        bound112,
        bound222,
        observed112,
        observed222,
        range222: top222 as u64,
        consistent: certified.then_some(observed112 <= bound112 && observed222 <= bound222),
    })
}
