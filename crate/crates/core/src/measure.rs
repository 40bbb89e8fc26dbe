//! Finite-level approximations of hierarchical Cantor sets.
//!
//! A level is stored as a sorted list of integer cell indices `p` over a
//! modulus `M`; cell `p` is the interval `[p/M, (p+1)/M]`. The natural
//! measure puts mass `1/T` on each of the `T` cells, so every quantity here is
//! an exact rational.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, capacity, domain};

/// Exact rational used for interval endpoints and masses.
pub type Rational = Ratio<i128>;

/// Largest cell count any single level may hold.
pub const MAX_CELLS: u64 = 1 << 27;

/// One generation `A_j` of a Cantor construction.
///
/// Serialized as `{"level": j, "modulus": M, "cells": [p…], "t_j": T}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLevel", into = "RawLevel")]
pub struct LevelApproximation {
    level: u32,
    modulus: u64,
    cells: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawLevel {
    level: u32,
    modulus: u64,
    cells: Vec<u64>,
    t_j: u64,
}

impl TryFrom<RawLevel> for LevelApproximation {
    type Error = Error;

    fn try_from(raw: RawLevel) -> Result<Self> {
        if raw.t_j != raw.cells.len() as u64 {
            return domain(format!(
                "t_j = {} but {} cells are listed",
                raw.t_j,
                raw.cells.len()
            ));
        }
        LevelApproximation::new(raw.level, raw.modulus, raw.cells)
    }
}

impl From<LevelApproximation> for RawLevel {
    fn from(level: LevelApproximation) -> Self {
        RawLevel {
            t_j: level.cells.len() as u64,
            level: level.level,
            modulus: level.modulus,
            cells: level.cells,
        }
    }
}

impl LevelApproximation {
    /// Validates that `cells` is strictly increasing inside `[0, modulus)`.
    pub fn new(level: u32, modulus: u64, cells: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return domain("modulus must be positive");
        }
        if cells.is_empty() {
            return domain("a level needs at least one cell");
        }
        if cells.len() as u64 > MAX_CELLS {
            return capacity(format!("{} cells exceeds the limit {MAX_CELLS}", cells.len()));
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return domain("cells must be strictly increasing");
        }
        if *cells.last().unwrap() >= modulus {
            return domain("cell index out of range [0, modulus)");
        }
        Ok(Self { level, modulus, cells })
    }

    /// The level covering all of `[0, 1]` with `modulus` cells.
    pub fn full(level: u32, modulus: u64) -> Result<Self> {
        if modulus > MAX_CELLS {
            return capacity(format!("{modulus} cells exceeds the limit {MAX_CELLS}"));
        }
        Self::new(level, modulus, (0..modulus).collect())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    /// `T_j`, the number of cells.
    pub fn cell_count(&self) -> u64 {
        self.cells.len() as u64
    }

    /// Mass `1/T_j` of each cell.
    pub fn cell_mass(&self) -> Ratio<u64> {
        Ratio::new(1, self.cell_count())
    }

    pub fn contains_cell(&self, p: u64) -> bool {
        self.cells.binary_search(&p).is_ok()
    }

    /// Maps every cell into the middle third: `x ↦ (1 + x)/3`.
    pub fn rescale_to_middle_third(&self) -> Result<Self> {
        let modulus = self
            .modulus
            .checked_mul(3)
            .ok_or_else(|| Error::Capacity("modulus overflow".into()))?;
        let cells = self.cells.iter().map(|&p| p + self.modulus).collect();
        Self::new(self.level, modulus, cells)
    }

    /// True if every cell lies inside `[1/3, 2/3]`.
    pub fn in_middle_third(&self) -> bool {
        let m = self.modulus as u128;
        let first = *self.cells.first().unwrap() as u128;
        let last = *self.cells.last().unwrap() as u128;
        3 * first >= m && 3 * (last + 1) <= 2 * m
    }
}

/// How the base count `K` of the construction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMode {
    /// `K = 2^N`.
    Pow2,
    /// `K = 1`.
    Unit,
}

impl std::str::FromStr for KMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pow2" => Ok(KMode::Pow2),
            "unit" => Ok(KMode::Unit),
            other => domain(format!("unknown k-mode '{other}' (expected pow2 or unit)")),
        }
    }
}

/// Parameters `(N0, t0, n, K)` of the random Cantor construction, with
/// `N = N0^n`, `t = t0^n`, `M_j = K·N^j` and `T_j = K·t^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorParams {
    pub n0: u64,
    pub t0: u64,
    pub n: u32,
    pub k_mode: KMode,
}

impl CantorParams {
    pub fn new(n0: u64, t0: u64, n: u32, k_mode: KMode) -> Result<Self> {
        if n0 < 2 {
            return domain("N0 must be at least 2");
        }
        if t0 < 1 || t0 > n0 {
            return domain("t0 must satisfy 1 ≤ t0 ≤ N0");
        }
        if n < 1 {
            return domain("n must be at least 1");
        }
        let params = Self { n0, t0, n, k_mode };
        params.big_n()?;
        Ok(params)
    }

    /// `N = N0^n`.
    pub fn big_n(&self) -> Result<u64> {
        self.n0
            .checked_pow(self.n)
            .ok_or_else(|| Error::Capacity(format!("N = {}^{} overflows", self.n0, self.n)))
    }

    /// `t = t0^n`.
    pub fn t(&self) -> Result<u64> {
        self.t0
            .checked_pow(self.n)
            .ok_or_else(|| Error::Capacity(format!("t = {}^{} overflows", self.t0, self.n)))
    }

    pub fn k(&self) -> Result<u64> {
        match self.k_mode {
            KMode::Unit => Ok(1),
            KMode::Pow2 => {
                let n = self.big_n()?;
                if n >= 63 {
                    return capacity(format!("K = 2^{n} does not fit 64-bit arithmetic"));
                }
                Ok(1u64 << n)
            }
        }
    }

    /// `M_j = K·N^j`.
    pub fn modulus(&self, j: u32) -> Result<u64> {
        let n = self.big_n()?;
        n.checked_pow(j)
            .and_then(|p| p.checked_mul(self.k().ok()?))
            .ok_or_else(|| Error::Capacity(format!("M_{j} overflows 64-bit arithmetic")))
    }

    /// `T_j = K·t^j`.
    pub fn cell_count(&self, j: u32) -> Result<u64> {
        let t = self.t()?;
        t.checked_pow(j)
            .and_then(|p| p.checked_mul(self.k().ok()?))
            .ok_or_else(|| Error::Capacity(format!("T_{j} overflows 64-bit arithmetic")))
    }

    /// `ln t / ln N`, which equals `ln t0 / ln N0`.
    pub fn alpha(&self) -> f64 {
        (self.t0 as f64).ln() / (self.n0 as f64).ln()
    }

    /// The dimension exponent, carrying the exact relation `N^α = t`.
    pub fn exponent(&self) -> Exponent {
        Exponent::log_ratio(self.t0, self.n0)
    }
}

/// A dimension exponent `α`.
///
/// When `α = ln t / ln N` for integers `t, N` the exponent remembers the pair,
/// so that `(N^{-i})^α = t^{-i}` is evaluated exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    value: f64,
    log_ratio: Option<(u64, u64)>,
}

impl Exponent {
    pub fn real(value: f64) -> Self {
        Self { value, log_ratio: None }
    }

    pub fn log_ratio(t: u64, n: u64) -> Self {
        Self {
            value: (t as f64).ln() / (n as f64).ln(),
            log_ratio: Some((t, n)),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `mass / eps^α` for rational `mass` and `eps = eps_num / eps_den`.
    pub fn ball_ratio(&self, mass: &BigRational, eps_num: u64, eps_den: u64) -> f64 {
        if let Some((t, n)) = self.log_ratio {
            // eps = N^{-i} exactly  ⇒  eps^α = t^{-i}.
            let g = num_integer::gcd(eps_num, eps_den);
            let (num, mut den) = (eps_num / g, eps_den / g);
            if num == 1 {
                let mut i = 0u32;
                while den > 1 && den % n == 0 {
                    den /= n;
                    i += 1;
                }
                if den == 1 {
                    let scale = BigInt::from(t).pow(i);
                    let exact = mass * BigRational::from_integer(scale);
                    return exact.to_f64().unwrap_or(f64::INFINITY);
                }
            }
        }
        let eps = eps_num as f64 / eps_den as f64;
        mass.to_f64().unwrap_or(f64::NAN) / eps.powf(self.value)
    }
}

/// A nonnegative step function constant on the cells `[p/M, (p+1)/M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepDensity {
    modulus: u64,
    heights: Vec<(u64, Ratio<u64>)>,
}

impl StepDensity {
    /// `heights` lists `(cell, value)` pairs; cells absent from the list have
    /// height zero.
    pub fn new(modulus: u64, mut heights: Vec<(u64, Ratio<u64>)>) -> Result<Self> {
        if modulus == 0 {
            return domain("modulus must be positive");
        }
        heights.sort_by_key(|&(p, _)| p);
        if heights.windows(2).any(|w| w[0].0 == w[1].0) {
            return domain("duplicate cell in step density");
        }
        if heights.last().is_some_and(|&(p, _)| p >= modulus) {
            return domain("cell index out of range [0, modulus)");
        }
        heights.retain(|(_, h)| !h.is_zero());
        Ok(Self { modulus, heights })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Nonzero heights, sorted by cell.
    pub fn heights(&self) -> &[(u64, Ratio<u64>)] {
        &self.heights
    }

    pub fn height(&self, p: u64) -> Ratio<u64> {
        self.heights
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.heights[i].1)
            .unwrap_or_else(|_| Ratio::zero())
    }

    /// `Σ_p height(p) / M`.
    pub fn integral(&self) -> BigRational {
        let sum = self
            .heights
            .iter()
            .fold(BigRational::zero(), |acc, (_, h)| acc + big(*h));
        sum / BigRational::from_integer(BigInt::from(self.modulus))
    }

    /// `∫ f²`, used for Parseval checks.
    pub fn l2_norm_sq(&self) -> BigRational {
        let sum = self
            .heights
            .iter()
            .fold(BigRational::zero(), |acc, (_, h)| acc + big(*h) * big(*h));
        sum / BigRational::from_integer(BigInt::from(self.modulus))
    }

    /// True if the support lies in `[1/3, 2/3]`.
    pub fn in_middle_third(&self) -> bool {
        let m = self.modulus as u128;
        match (self.heights.first(), self.heights.last()) {
            (Some(&(first, _)), Some(&(last, _))) => {
                3 * first as u128 >= m && 3 * (last as u128 + 1) <= 2 * m
            }
            _ => true,
        }
    }
}

pub(crate) fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact mass of `[lo, hi]` under the level's step approximant.
///
/// A cell fully inside the interval contributes `1/T`; a partially covered
/// cell contributes its overlap fraction times `1/T`.
pub fn measure_of_interval(approx: &LevelApproximation, lo: Rational, hi: Rational) -> Result<Rational> {
    let zero = Rational::zero();
    let one = Rational::one();
    if lo > hi {
        return domain("malformed interval: lo > hi");
    }
    if lo < zero || hi > one {
        return domain("interval must lie in [0, 1]");
    }
    let m = Rational::from_integer(approx.modulus as i128);
    // In cell units the interval is [x, y].
    let (x, y) = (lo * m, hi * m);
    let first = x.floor().to_integer().max(0) as u64;
    let start = approx.cells.partition_point(|&p| p < first);
    let mut units = Rational::zero();
    for &p in &approx.cells[start..] {
        let left = Rational::from_integer(p as i128);
        if left >= y {
            break;
        }
        let right = left + one;
        let overlap = right.min(y) - left.max(x);
        if overlap > zero {
            units += overlap;
        }
    }
    Ok(units / Rational::from_integer(approx.cell_count() as i128))
}

/// Density `φ_j = Σ_{a∈A_j} (M_j/T_j)·1_{[a, a+1/M_j]}`.
pub fn step_density(approx: &LevelApproximation) -> StepDensity {
    let h = Ratio::new(approx.modulus, approx.cell_count());
    StepDensity {
        modulus: approx.modulus,
        heights: approx.cells.iter().map(|&p| (p, h)).collect(),
    }
}

/// True iff every child cell sits in a parent cell and every parent cell holds
/// the same number `t = T_child / T_parent` of children.
///
/// `n` is the subdivision factor; the child modulus must equal `n` times the
/// parent modulus.
pub fn refine_check(parent: &LevelApproximation, child: &LevelApproximation, n: u64) -> Result<bool> {
    if child.level != parent.level + 1 {
        return domain(format!(
            "child level {} does not follow parent level {}",
            child.level, parent.level
        ));
    }
    if parent.modulus.checked_mul(n) != Some(child.modulus) {
        return domain(format!(
            "modulus mismatch: child {} ≠ parent {} × {n}",
            child.modulus, parent.modulus
        ));
    }
    if child.cell_count() % parent.cell_count() != 0 {
        return Ok(false);
    }
    let t = child.cell_count() / parent.cell_count();
    let mut counts = vec![0u64; parent.cells.len()];
    for &c in &child.cells {
        match parent.cells.binary_search(&(c / n)) {
            Ok(i) => counts[i] += 1,
            Err(_) => return Ok(false),
        }
    }
    Ok(counts.iter().all(|&c| c == t))
}
