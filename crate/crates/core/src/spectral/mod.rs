//! Fourier coefficients of measures on `[0, 1]` and the hypotheses built on
//! them: the ball condition (A), the decay condition (B), the Fejér
//! decomposition, the trilinear form Λ and restriction-ratio probing.
//!
//! Coefficients use `μ̂(k) = ∫ e^{-2πikx} dμ(x)`.

mod fejer;
mod lambda;
mod restriction;

pub use fejer::{
    ErrorTerms, Mu1Extrema, choose_fejer_n, dirichlet_kernel, error_terms, fejer_kernel, fejer_split,
    mu1_sup_norm,
};
pub use lambda::{
    DecayHypothesis, LambdaEstimate, Provenance, coefficient_tail_bound, lambda_fourier,
    lambda_spatial_step, midpoint_integral, power_tail_bound,
};
pub use restriction::{RestrictionBucket, RestrictionReport, restriction_exponents, restriction_sweep};

use num_complex::Complex;
use num_rational::BigRational;
use num_bigint::BigInt;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, capacity, domain};
use crate::measure::{Exponent, LevelApproximation, StepDensity, step_density};
use crate::scalar::{Real, box_transform, unit_root};

/// Largest modulus for which a full period of `S_A` is transformed at once.
const MAX_FFT_MODULUS: u64 = 1 << 26;

/// How the coefficients of a [`FourierTable`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ExactStep,
    ProductFormula,
    MonteCarlo,
}

/// Coefficients `μ̂(k)` for `k ∈ [-k_max, k_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable<T> {
    k_max: u64,
    values: Vec<Complex<T>>,
    method: Method,
    truncation_bound: T,
    source_id: String,
}

impl<T: Real> FourierTable<T> {
    /// Builds a table from its nonnegative half; negative frequencies are the
    /// conjugates, so the table is exactly Hermitian.
    pub fn from_nonnegative(
        nonneg: Vec<Complex<T>>,
        method: Method,
        truncation_bound: T,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if nonneg.len() < 2 {
            return domain("a Fourier table needs k_max ≥ 1");
        }
        let k_max = (nonneg.len() - 1) as u64;
        let mut values = Vec::with_capacity(2 * nonneg.len() - 1);
        values.extend(nonneg[1..].iter().rev().map(|z| z.conj()));
        values.extend(nonneg);
        Ok(Self {
            k_max,
            values,
            method,
            truncation_bound,
            source_id: source_id.into(),
        })
    }

    /// Builds a table from all `2·k_max + 1` values, ordered from `-k_max`.
    pub fn from_values(
        values: Vec<Complex<T>>,
        method: Method,
        truncation_bound: T,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if values.len() < 3 || values.len() % 2 == 0 {
            return domain("a Fourier table needs 2·k_max + 1 values with k_max ≥ 1");
        }
        Ok(Self {
            k_max: (values.len() / 2) as u64,
            values,
            method,
            truncation_bound,
            source_id: source_id.into(),
        })
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn truncation_bound(&self) -> T {
        self.truncation_bound
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// `μ̂(k)`; panics if `|k| > k_max`.
    #[inline]
    pub fn get(&self, k: i64) -> Complex<T> {
        self.values[(k + self.k_max as i64) as usize]
    }

    pub fn try_get(&self, k: i64) -> Option<Complex<T>> {
        (k.unsigned_abs() <= self.k_max).then(|| self.get(k))
    }

    /// `(k, μ̂(k))` from `-k_max` to `k_max`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        let offset = self.k_max as i64;
        self.values.iter().enumerate().map(move |(i, &z)| (i as i64 - offset, z))
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Applies `f(k, μ̂(k))` to every entry.
    pub fn map(&self, source_id: impl Into<String>, f: impl Fn(i64, Complex<T>) -> Complex<T>) -> Self {
        Self {
            k_max: self.k_max,
            values: self.iter().map(|(k, z)| f(k, z)).collect(),
            method: self.method,
            truncation_bound: self.truncation_bound,
            source_id: source_id.into(),
        }
    }

    /// Largest `|μ̂(k) - conj(μ̂(-k))|`.
    pub fn hermitian_defect(&self) -> T {
        (1..=self.k_max as i64)
            .map(|k| (self.get(k) - self.get(-k).conj()).norm())
            .fold(T::zero(), T::max)
    }
}

/// `φ̂_j(k)` for the level's step density, by direct summation:
/// `[(1 - e^{-2πik/M}) / (2πik/M)] · T^{-1} · Σ_{p∈A} e^{-2πikp/M}`.
pub fn fourier_step<T: Real>(approx: &LevelApproximation, k: i64) -> Complex<T> {
    if k == 0 {
        return Complex::new(T::one(), T::zero());
    }
    let m = approx.modulus() as u128;
    let k_res = (k as i128).rem_euclid(m as i128);
    let sum: Complex<T> = approx
        .cells()
        .iter()
        .map(|&p| unit_root::<T>(k_res * p as i128 % m as i128, m))
        .fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z);
    box_transform::<T>(k as i128, m) * sum / T::of_u64(approx.cell_count())
}

/// Coefficients of a step density up to `k_max`, exact up to rounding.
pub fn density_table<T: Real>(density: &StepDensity, k_max: u64, source_id: &str) -> Result<FourierTable<T>> {
    if k_max < 1 {
        return domain("k_max must be at least 1");
    }
    let m = density.modulus();
    let heights: Vec<(u64, T)> = density
        .heights()
        .iter()
        .map(|&(p, h)| (p, T::of_u64(*h.numer()) / T::of_u64(*h.denom())))
        .collect();
    let sums = periodic_sums(m, &heights, k_max)?;
    let inv_m = T::one() / T::of_u64(m);
    let nonneg = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let s = sums.get(k);
            box_transform::<T>(k as i128, m as u128) * s * inv_m
        })
        .collect();
    FourierTable::from_nonnegative(nonneg, Method::ExactStep, T::zero(), source_id)
}

/// EXACT_STEP table of the level's step density `φ_j`.
pub fn fourier_table<T: Real>(approx: &LevelApproximation, k_max: u64) -> Result<FourierTable<T>> {
    let id = format!("cantor-level-{}-M{}-T{}", approx.level(), approx.modulus(), approx.cell_count());
    let mut table = density_table(&step_density(approx), k_max, &id)?;
    // k = 0 is the total mass, exactly 1.
    let mid = table.k_max as usize;
    table.values[mid] = Complex::new(T::one(), T::zero());
    Ok(table)
}

/// `H(k) = Σ_p h_p e^{-2πikp/M}` for `k ∈ [0, k_max]`, periodic in `k`.
enum PeriodicSums<T> {
    Period(Vec<Complex<T>>),
    Direct(Vec<Complex<T>>),
}

impl<T: Real> PeriodicSums<T> {
    fn get(&self, k: u64) -> Complex<T> {
        match self {
            PeriodicSums::Period(v) => v[(k % v.len() as u64) as usize],
            PeriodicSums::Direct(v) => v[k as usize],
        }
    }
}

fn periodic_sums<T: Real>(m: u64, heights: &[(u64, T)], k_max: u64) -> Result<PeriodicSums<T>> {
    if m <= MAX_FFT_MODULUS {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m as usize];
        for &(p, h) in heights {
            buf[p as usize].re = h;
        }
        FftPlanner::<T>::new().plan_fft_forward(m as usize).process(&mut buf);
        return Ok(PeriodicSums::Period(buf));
    }
    let work = (k_max as u128 + 1) * heights.len() as u128;
    if work > 4_000_000_000 {
        return capacity(format!(
            "modulus {m} with k_max {k_max} and {} cells is beyond the direct-summation budget",
            heights.len()
        ));
    }
    let v = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            heights
                .iter()
                .map(|&(p, h)| unit_root::<T>((k as i128 * p as i128) % m as i128, m as u128) * h)
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
        })
        .collect();
    Ok(PeriodicSums::Direct(v))
}

/// Window sizes, in cells of the level, tested by [`ball_condition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowGrid {
    sizes: Vec<u64>,
}

impl WindowGrid {
    /// Sizes `b^i ≤ modulus` for every base `b`, plus the whole interval.
    pub fn adic(modulus: u64, bases: &[u64]) -> Self {
        let mut sizes = vec![1, modulus];
        for &b in bases.iter().filter(|&&b| b >= 2) {
            let mut s = b;
            while s < modulus {
                sizes.push(s);
                s = match s.checked_mul(b) {
                    Some(v) => v,
                    None => break,
                };
            }
        }
        sizes.sort_unstable();
        sizes.dedup();
        Self { sizes }
    }

    pub fn from_sizes(mut sizes: Vec<u64>) -> Self {
        sizes.retain(|&s| s > 0);
        sizes.sort_unstable();
        sizes.dedup();
        Self { sizes }
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }
}

/// The heaviest window of one size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallRow {
    /// Window `[x_num/M, (x_num + size)/M]`.
    pub x_num: u64,
    pub size: u64,
    pub modulus: u64,
    pub cells_covered: u64,
    pub ratio: f64,
}

impl BallRow {
    pub fn window_x(&self) -> f64 {
        self.x_num as f64 / self.modulus as f64
    }

    pub fn window_eps(&self) -> f64 {
        self.size as f64 / self.modulus as f64
    }
}

/// Empirical ball-condition constant `sup μ([x, x+ε]) / ε^α` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallReport {
    pub alpha: f64,
    pub empirical_c1: f64,
    pub witness: BallRow,
    pub rows: Vec<BallRow>,
    pub pass: Option<bool>,
}

/// Evaluates `μ([x, x+ε]) / ε^α` on cell-aligned windows with `x` on the cell
/// grid, returning the maximum per window size and overall.
pub fn ball_condition(
    approx: &LevelApproximation,
    alpha: Exponent,
    grid: &WindowGrid,
    configured_c1: Option<f64>,
) -> Result<BallReport> {
    if !(alpha.value() > 0.0 && alpha.value() <= 1.0) {
        return domain("alpha must lie in (0, 1]");
    }
    if grid.sizes().is_empty() {
        return domain("window grid is empty");
    }
    let m = approx.modulus();
    let t = approx.cell_count();
    let cells = approx.cells();
    let mut rows = Vec::with_capacity(grid.sizes().len());
    for &size in grid.sizes().iter().filter(|&&s| s <= m) {
        // Heaviest window [p, p + size) starting at an occupied cell.
        let (mut best, mut best_start) = (0u64, cells[0]);
        let mut hi = 0usize;
        for (lo, &p) in cells.iter().enumerate() {
            let end = p.saturating_add(size);
            while hi < cells.len() && cells[hi] < end {
                hi += 1;
            }
            let count = (hi - lo) as u64;
            if count > best {
                best = count;
                best_start = p;
            }
        }
        // Keep the window inside [0, 1].
        let x_num = best_start.min(m - size);
        let covered = count_in(cells, x_num, x_num + size);
        let mass = BigRational::new(BigInt::from(covered), BigInt::from(t));
        rows.push(BallRow {
            x_num,
            size,
            modulus: m,
            cells_covered: covered,
            ratio: alpha.ball_ratio(&mass, size, m),
        });
    }
    if rows.is_empty() {
        return domain("no window size fits the level");
    }
    let witness = rows
        .iter()
        .fold(None::<&BallRow>, |best, r| match best {
            Some(b) if b.ratio >= r.ratio => Some(b),
            _ => Some(r),
        })
        .unwrap()
        .clone();
    Ok(BallReport {
        alpha: alpha.value(),
        empirical_c1: witness.ratio,
        pass: configured_c1.map(|c| witness.ratio <= c),
        witness,
        rows,
    })
}

fn count_in(cells: &[u64], lo: u64, hi: u64) -> u64 {
    (cells.partition_point(|&p| p < hi) - cells.partition_point(|&p| p < lo)) as u64
}

/// Empirical decay constant `sup_{0<|k|≤k_max} |μ̂(k)|·|k|^{β/2}·(1-α)^B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport<T> {
    pub beta: T,
    pub b: T,
    pub alpha: T,
    pub empirical_c2: T,
    pub argmax_k: i64,
    pub pass: Option<bool>,
}

/// `|μ̂(k)|·|k|^{β/2}·(1-α)^B`.
#[inline]
pub fn decay_ratio<T: Real>(coeff: Complex<T>, k: i64, beta: T, b: T, alpha: T) -> T {
    let two = T::of(2.0);
    coeff.norm() * T::of_u64(k.unsigned_abs()).powf(beta / two) * (T::one() - alpha).powf(b)
}

pub fn decay_condition<T: Real>(
    table: &FourierTable<T>,
    beta: T,
    b: T,
    alpha: T,
    configured_c2: Option<T>,
) -> Result<DecayReport<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return domain("alpha must lie in (0, 1)");
    }
    if beta <= T::zero() {
        return domain("beta must be positive");
    }
    // Scan k = 1, -1, 2, -2, … and keep the first maximum.
    let (mut best, mut arg) = (T::neg_infinity(), 1i64);
    for k in 1..=table.k_max() as i64 {
        for kk in [k, -k] {
            let r = decay_ratio(table.get(kk), kk, beta, b, alpha);
            if r > best {
                best = r;
                arg = kk;
            }
        }
    }
    Ok(DecayReport {
        beta,
        b,
        alpha,
        empirical_c2: best,
        argmax_k: arg,
        pass: configured_c2.map(|c| best <= c),
    })
}

/// Rows `(k, |μ̂(k)|, decay ratio)` for `k = 1..=k_max`.
pub fn decay_rows<T: Real>(table: &FourierTable<T>, beta: T, b: T, alpha: T) -> Vec<(i64, T, T)> {
    (1..=table.k_max() as i64)
        .map(|k| {
            let z = table.get(k);
            (k, z.norm(), decay_ratio(z, k, beta, b, alpha))
        })
        .collect()
}
