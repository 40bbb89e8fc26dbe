//! The trilinear form `Λ(μ₁, μ₂, μ₃) = Σ_k μ̂₁(k) μ̂₂(k) μ̂₃(-2k)`.
//!
//! For a density `f` supported in `[1/3, 2/3]`, Poisson summation gives
//! `Λ(f, f, f) = ½ ∬ f(x) f(y) f((x+y)/2) dx dy`: only the `n = 0` translate of
//! `f * f` meets `2·supp f`, and `y ↦ (x+y)/2` has Jacobian ½.

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{FourierTable, periodic_sums};
use crate::convolution::convolve;
use crate::error::{Error, Result, capacity, domain};
use crate::measure::StepDensity;
use crate::scalar::Real;

/// Where the decay constant `C₂` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Proven for every frequency.
    Certified,
    /// Measured over a finite frequency window.
    Empirical,
    /// Supplied by the user.
    Configured,
}

/// Decay hypothesis `|μ̂(k)| ≤ C₂ (1-α)^{-B} |k|^{-β/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayHypothesis {
    pub beta: f64,
    pub c2: f64,
    pub b: f64,
    pub alpha: f64,
    pub provenance: Provenance,
}

/// `[C₂ (1-α)^{-B}]³ · 4/(3β-2) · cutoff^{1-3β/2}`, which dominates
/// `Σ_{|k|>cutoff} |μ̂₁(k) μ̂₂(k) μ̂₃(-2k)|` under the decay hypothesis.
pub fn power_tail_bound(h: &DecayHypothesis, cutoff: u64) -> Result<f64> {
    if h.beta <= 2.0 / 3.0 {
        return domain(format!(
            "beta = {} ≤ 2/3: the series for Λ need not converge (requires beta > 2/3)",
            h.beta
        ));
    }
    if cutoff == 0 {
        return domain("cutoff must be at least 1");
    }
    let c = h.c2 * (1.0 - h.alpha).powf(-h.b);
    Ok(c.powi(3) * 4.0 / (3.0 * h.beta - 2.0) * (cutoff as f64).powf(1.0 - 1.5 * h.beta))
}

/// Truncated `Λ` with a tail bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub tail: f64,
    pub cutoff: u64,
    /// `value - tail > 0`.
    pub certified: bool,
    pub imag: f64,
    pub tail_kind: Provenance,
}

impl LambdaEstimate {
    pub fn new(value: f64, imag: f64, tail: f64, cutoff: u64, tail_kind: Provenance) -> Self {
        Self {
            value,
            tail,
            cutoff,
            certified: value - tail > 0.0,
            imag,
            tail_kind,
        }
    }
}

/// `Σ_{|k|≤cutoff} t₁(k) t₂(k) t₃(-2k)` with the power-law tail bound.
pub fn lambda_fourier<T: Real>(
    t1: &FourierTable<T>,
    t2: &FourierTable<T>,
    t3: &FourierTable<T>,
    cutoff: u64,
    hypothesis: &DecayHypothesis,
) -> Result<LambdaEstimate> {
    if t3.k_max() < 2 * cutoff || t1.k_max() < cutoff || t2.k_max() < cutoff {
        return domain(format!(
            "cutoff {cutoff} needs k_max ≥ cutoff for the first two tables and ≥ 2·cutoff for the third"
        ));
    }
    let tail = power_tail_bound(hypothesis, cutoff)?;
    let c = cutoff as i64;
    let sum = (-c..=c).fold(Complex::new(0.0, 0.0), |acc: Complex<f64>, k| {
        let z = t1.get(k) * t2.get(k) * t3.get(-2 * k);
        acc + Complex::new(z.re.f64(), z.im.f64())
    });
    let same = std::ptr::eq(t1, t2) && std::ptr::eq(t2, t3);
    if same && sum.im.abs() > 1e-9 * (1.0 + sum.re.abs()) {
        return Err(Error::Invariant(format!(
            "Λ of a real measure has imaginary part {:e}",
            sum.im
        )));
    }
    Ok(LambdaEstimate::new(sum.re, sum.im, tail, cutoff, hypothesis.provenance))
}

/// Heights over a common denominator: `(D, [H_p])` with `h_p = H_p / D`,
/// dense over `[first, last]`.
fn integer_heights(density: &StepDensity) -> Result<(u64, u64, Vec<u64>)> {
    let hs = density.heights();
    let Some(&(first, _)) = hs.first() else {
        return Ok((1, 0, Vec::new()));
    };
    let last = hs.last().unwrap().0;
    let mut den = 1u64;
    for (_, h) in hs {
        den = den
            .checked_div(den.gcd(h.denom()))
            .and_then(|d| d.checked_mul(*h.denom()))
            .ok_or_else(|| Error::Capacity("height denominators overflow 64 bits".into()))?;
    }
    let mut dense = vec![0u64; (last - first + 1) as usize];
    for &(p, h) in hs {
        dense[(p - first) as usize] = (den / h.denom())
            .checked_mul(*h.numer())
            .ok_or_else(|| Error::Capacity("scaled height overflows 64 bits".into()))?;
    }
    Ok((den, first, dense))
}

/// `∬ f(x) f(y) f((x+y)/2) dx dy`, exactly.
///
/// On the cell pair `P × Q` the midpoint `(x+y)/2` runs over
/// `[(p+q)/2M, (p+q+2)/2M)` with triangular density. When `p + q = 2r` all of
/// it lands in cell `r`; when `p + q = 2r + 1` half lands in `r` and half in
/// `r + 1`. Hence `∬ = M^{-2} Σ_{p,q} h_p h_q g(p+q)` with `g(2r) = h_r` and
/// `g(2r+1) = (h_r + h_{r+1})/2`; the inner sums over `p + q = s` form one
/// integer self-convolution.
pub fn midpoint_integral(density: &StepDensity) -> Result<BigRational> {
    let (den, _, dense) = integer_heights(density)?;
    if dense.is_empty() {
        return Ok(BigRational::zero());
    }
    if dense.len() > 1 << 26 {
        return capacity("support too wide for the exact midpoint integral");
    }
    let (conv, _) = convolve(&dense, &dense);
    let at = |i: usize| dense.get(i).copied().unwrap_or(0);
    // Index s of `conv` stands for cells p + q = 2·first + s.
    let mut twice = BigInt::zero();
    for (s, &c) in conv.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let r = s / 2;
        let g2 = if s % 2 == 0 {
            2 * at(r) as u128
        } else {
            at(r) as u128 + at(r + 1) as u128
        };
        if g2 != 0 {
            twice += BigInt::from(c) * BigInt::from(g2);
        }
    }
    let m = BigInt::from(density.modulus());
    let d = BigInt::from(den);
    Ok(BigRational::new(twice, BigInt::from(2) * &m * &m * &d * &d * &d))
}

/// `½ ∬ f(x) f(y) f((x+y)/2) dx dy`, which equals `Λ(f, f, f)` when
/// `supp f ⊂ [1/3, 2/3]`. Computed for any support.
pub fn lambda_spatial_step(density: &StepDensity) -> Result<BigRational> {
    Ok(midpoint_integral(density)? / BigRational::from_integer(BigInt::from(2)))
}

/// Rigorous bound on `|Σ_{|k|>cutoff} f̂(k)² f̂(-2k)|` for a step density.
///
/// With `H(r) = Σ_p h_p e^{-2πirp/M}`, `|f̂(k)| = |H(k)| |sin(πk/M)| / (π|k|)`,
/// and `|H(k) sin(πk/M)|` is `M`-periodic in `k`. So the sum is at most
/// `sup_{|m|>2c} |f̂(m)| · Σ_r A_r² Σ_{|k|>c, k≡r} k^{-2}`, and each progression
/// sum is bounded by `k₀^{-2} + 1/(M k₀)` for its first term `k₀`.
pub fn coefficient_tail_bound(density: &StepDensity, cutoff: u64) -> Result<f64> {
    if cutoff == 0 {
        return domain("cutoff must be at least 1");
    }
    let m = density.modulus();
    let heights: Vec<(u64, f64)> = density
        .heights()
        .iter()
        .map(|&(p, h)| (p, h.to_f64().unwrap_or(f64::NAN)))
        .collect();
    if heights.is_empty() {
        return Ok(0.0);
    }
    if m > super::MAX_FFT_MODULUS {
        return capacity("modulus too large for the coefficient tail bound");
    }
    let sums = periodic_sums::<f64>(m, &heights, 0)?;
    let pi = std::f64::consts::PI;
    let amp: Vec<f64> = (0..m)
        .map(|r| sums.get(r).norm() * (pi * r as f64 / m as f64).sin().abs() / pi)
        .collect();
    let a_max = amp.iter().copied().fold(0.0, f64::max);
    let sup_far = a_max / (2 * cutoff + 1) as f64;
    let mf = m as f64;
    let mut energy = 0.0;
    for (r, &a) in amp.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        // First k > cutoff with k ≡ ±r (mod M); the two signs give the two halves.
        for residue in [r as u64, (m - r as u64) % m] {
            let k0 = first_above(cutoff, residue, m) as f64;
            energy += a * a * (1.0 / (k0 * k0) + 1.0 / (mf * k0));
        }
    }
    // Relative slack for rounding in the amplitudes.
    Ok(sup_far * energy * (1.0 + 1e-9))
}

/// Smallest `k > c` with `k ≡ r (mod m)`.
fn first_above(c: u64, r: u64, m: u64) -> u64 {
    let base = c + 1;
    base + (r + m - base % m) % m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::LevelApproximation;
    use crate::spectral::{Method, density_table, fourier_table};
    use num_rational::Ratio;

    fn hyp(beta: f64) -> DecayHypothesis {
        DecayHypothesis {
            beta,
            c2: 1.0,
            b: 0.0,
            alpha: 0.5,
            provenance: Provenance::Configured,
        }
    }

    #[test]
    fn uniform_lambda_is_one() {
        let t = fourier_table::<f64>(&LevelApproximation::full(0, 8).unwrap(), 64).unwrap();
        let e = lambda_fourier(&t, &t, &t, 32, &hyp(0.8)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-14);
        assert!((e.tail - 4.0 / 0.4 * 32f64.powf(-0.2)).abs() < 1e-12);
        assert_eq!(e.certified, e.value - e.tail > 0.0);
    }

    #[test]
    fn one_plus_cosine() {
        let nonneg = vec![Complex::new(1.0, 0.0), Complex::new(0.5, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)];
        let t = FourierTable::from_nonnegative(nonneg, Method::ExactStep, 0.0, "1+cos").unwrap();
        let e = lambda_fourier(&t, &t, &t, 2, &hyp(0.8)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn small_beta_is_rejected() {
        let t = fourier_table::<f64>(&LevelApproximation::full(0, 8).unwrap(), 64).unwrap();
        assert!(lambda_fourier(&t, &t, &t, 32, &hyp(2.0 / 3.0)).is_err());
        assert!(lambda_fourier(&t, &t, &t, 33, &hyp(0.8)).is_err());
    }

    #[test]
    fn constant_density_midpoint_integral() {
        let d = StepDensity::new(5, (0..5).map(|p| (p, Ratio::from_integer(1))).collect()).unwrap();
        assert_eq!(midpoint_integral(&d).unwrap(), BigRational::from_integer(1.into()));
        assert_eq!(lambda_spatial_step(&d).unwrap(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn middle_third_indicator() {
        // f = 3·1_[1/3,2/3]: ∬ f f f(mid) = 27 · (1/9) = 3, so Λ = 3/2.
        let d = StepDensity::new(3, vec![(1, Ratio::from_integer(3))]).unwrap();
        assert_eq!(lambda_spatial_step(&d).unwrap(), BigRational::new(3.into(), 2.into()));
        let t = density_table::<f64>(&d, 1 << 16, "3·1_[1/3,2/3]").unwrap();
        let h = DecayHypothesis { beta: 1.0, c2: 3.0, b: 0.0, alpha: 0.5, provenance: Provenance::Configured };
        let e = lambda_fourier(&t, &t, &t, 1 << 15, &h).unwrap();
        let tail = coefficient_tail_bound(&d, 1 << 15).unwrap();
        assert!((e.value - 1.5).abs() <= tail, "{} vs 1.5 ± {tail}", e.value);
    }

    /// Midpoint quadrature at resolution `M²` over cell pairs.
    fn brute_midpoint(d: &StepDensity, sub: u64) -> f64 {
        let m = d.modulus();
        let h = |x: f64| {
            let p = (x * m as f64).floor() as u64;
            d.height(p.min(m - 1)).to_f64().unwrap()
        };
        let n = m * sub;
        let mut s = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let hx = h(x);
            if hx == 0.0 {
                continue;
            }
            for j in 0..n {
                let y = (j as f64 + 0.5) / n as f64;
                s += hx * h(y) * h((x + y) / 2.0);
            }
        }
        s / (n * n) as f64
    }

    #[test]
    fn midpoint_integral_matches_quadrature() {
        let d = StepDensity::new(
            12,
            vec![(1, Ratio::new(3, 2)), (2, Ratio::new(7, 3)), (6, Ratio::from_integer(2)), (10, Ratio::new(1, 5))],
        )
        .unwrap();
        let exact = midpoint_integral(&d).unwrap().to_f64().unwrap();
        let approx = brute_midpoint(&d, 48);
        assert!((exact - approx).abs() < 2e-3 * exact, "{exact} vs {approx}");
    }

    #[test]
    fn separated_cells_keep_only_diagonal_terms() {
        // Cells 0 and 5 of 6: mixed midpoints land in cells 2 and 3, which are empty.
        let d = StepDensity::new(6, vec![(0, Ratio::from_integer(3)), (5, Ratio::from_integer(3))]).unwrap();
        let v = midpoint_integral(&d).unwrap();
        // Diagonal: each cell contributes h³/M² = 27/36.
        assert_eq!(v, BigRational::new(54.into(), 36.into()));
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let a = LevelApproximation::new(0, 9, vec![3, 4, 5]).unwrap();
        let d = crate::measure::step_density(&a);
        let t = density_table::<f64>(&d, 1 << 14, "mid").unwrap();
        let full: f64 = (-(1i64 << 13)..=(1 << 13)).map(|k| (t.get(k) * t.get(k) * t.get(-2 * k)).re).sum();
        let cut: f64 = (-64i64..=64).map(|k| (t.get(k) * t.get(k) * t.get(-2 * k)).re).sum();
        assert!((full - cut).abs() <= coefficient_tail_bound(&d, 64).unwrap());
    }

    #[test]
    fn first_above_residue() {
        assert_eq!(first_above(10, 3, 8), 11);
        assert_eq!(first_above(10, 0, 8), 16);
        assert_eq!(first_above(7, 0, 8), 8);
    }
}
