//! Salem's dissection measures: admissible parameters, the infinite-product
//! Fourier transform, `δ_s`, and window averages of `|P|^s`.
//!
//! Transforms use `μ̂(ξ) = ∫ e^{-2πiξx} dμ(x)`, so the dissection polynomial is
//! `P(ξ) = (1/d) Σ_j e^{-2πi a_j ξ}`, the conjugate of the `e^{+2πi a_j ξ}`
//! form sometimes quoted; the product formula is otherwise unchanged.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, capacity, domain};
use crate::rng::{stream, tag};
use crate::scalar::Real;

/// Candidate budget for exhaustive verification of direction vectors.
pub const DIRECTION_BUDGET: u128 = 1_000_000_000;

/// How `κ_m` is chosen inside `[(1 - 1/(2m²))κ, κ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaRule {
    /// `κ_m = (1 - 1/(2m²))κ`.
    LowerEdge,
    /// `κ_m = κ`.
    Constant,
    /// Explicit `κ_1, …, κ_n`; later indices use the lower edge.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalemParams {
    d: usize,
    a: Vec<f64>,
    alpha: f64,
    kappa: f64,
    rule: KappaRule,
}

impl SalemParams {
    /// Validates the kappa condition `0 < κ < min gaps` and `κ < 1 - a_d`
    /// with `κ = d^{-1/α}`; the stricter spacing condition is only reported.
    pub fn new(a: Vec<f64>, alpha: f64, rule: KappaRule) -> Result<Self> {
        let d = a.len();
        if d < 2 {
            return domain("a dissection needs d ≥ 2 points");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain("alpha must lie in (0, 1)");
        }
        if !(a[0] > 0.0) || !(a[d - 1] < 1.0) || a.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("a must satisfy 0 < a_1 < … < a_d < 1");
        }
        let kappa = (d as f64).powf(-1.0 / alpha);
        let min_gap = a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if !(kappa < min_gap && kappa < 1.0 - a[d - 1]) {
            return domain(format!(
                "kappa = {kappa:.6} violates 0 < kappa < min(a_j - a_(j-1)) = {min_gap:.6} and kappa < 1 - a_d"
            ));
        }
        if let KappaRule::Explicit(v) = &rule {
            if v.is_empty() {
                return domain("explicit kappa sequence is empty");
            }
            for (i, &k) in v.iter().enumerate() {
                let m = (i + 1) as f64;
                if !(k >= (1.0 - 0.5 / (m * m)) * kappa && k <= kappa) {
                    return domain(format!("kappa_{} = {k} is outside its bracket", i + 1));
                }
            }
        }
        Ok(Self { d, a, alpha, kappa, rule })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn rule(&self) -> &KappaRule {
        &self.rule
    }

    /// `κ_m` for `m ≥ 1`.
    pub fn kappa_m(&self, m: u32) -> f64 {
        match &self.rule {
            KappaRule::LowerEdge => {
                let mf = f64::from(m.max(1));
                (1.0 - 0.5 / (mf * mf)) * self.kappa
            }
            KappaRule::Constant => self.kappa,
            KappaRule::Explicit(v) if (m.max(1) as usize) <= v.len() => v[m.max(1) as usize - 1],
            KappaRule::Explicit(_) => {
                let mf = f64::from(m);
                (1.0 - 0.5 / (mf * mf)) * self.kappa
            }
        }
    }

    /// `L_n = κ_1 ⋯ κ_n` for `n = 0..=depth`.
    pub fn lengths(&self, depth: u32) -> Vec<f64> {
        let mut out = Vec::with_capacity(depth as usize + 1);
        let mut l = 1.0;
        out.push(l);
        for m in 1..=depth {
            l *= self.kappa_m(m);
            out.push(l);
        }
        out
    }

    /// `0 < a_1 < 1/d - κ` and `κ < a_j - a_{j-1} < 1/d`.
    pub fn revised_a_ok(&self) -> bool {
        revised_a_holds(&self.a, self.kappa)
    }
}

fn revised_a_holds(a: &[f64], kappa: f64) -> bool {
    let inv_d = 1.0 / a.len() as f64;
    a[0] > 0.0
        && a[0] < inv_d - kappa
        && a.windows(2).all(|w| {
            let g = w[1] - w[0];
            kappa < g && g < inv_d
        })
}

/// `P(u) = (1/d) Σ_j e^{-2πi a_j u}`.
#[inline]
pub fn dissection_polynomial<T: Real>(a: &[f64], u: T) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &aj in a {
        let angle = -T::two_pi() * T::of(aj) * u;
        acc = acc + Complex::new(angle.cos(), angle.sin());
    }
    acc / T::of_u64(a.len() as u64)
}

/// `P(ξ) Π_{n=1}^{depth} P(ξ κ_1⋯κ_n)` and the bound
/// `2π|ξ| Σ_{n>depth} κ_1⋯κ_n ≤ 2π|ξ| L_depth κ / (1-κ)` on its distance to
/// `μ̂(ξ)`, from `|P(u) - 1| ≤ 2π|u|`.
pub fn salem_fourier<T: Real>(params: &SalemParams, xi: T, depth: u32) -> Result<(Complex<T>, T)> {
    if depth < 1 {
        return domain("depth must be at least 1");
    }
    if xi == T::zero() {
        return Ok((Complex::new(T::one(), T::zero()), T::zero()));
    }
    let lengths = params.lengths(depth);
    let mut value = Complex::new(T::one(), T::zero());
    for &l in &lengths {
        value = value * dissection_polynomial(&params.a, xi * T::of(l));
    }
    let k = params.kappa;
    let bound = T::two_pi() * xi.abs() * T::of(lengths[depth as usize] * k / (1.0 - k));
    Ok((value, bound))
}

/// White intervals of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissectionLevel {
    pub level: u32,
    /// Left endpoints, increasing.
    pub left: Vec<f64>,
    /// Common length `κ_1⋯κ_n`.
    pub length: f64,
    /// Mass `d^{-n}` per interval.
    pub mass: f64,
}

/// Levels `0..=depth`, level 0 being `[0, 1]`.
pub fn dissection_levels(params: &SalemParams, depth: u32) -> Result<Vec<DissectionLevel>> {
    let count = (params.d as u128).checked_pow(depth);
    if count.is_none_or(|c| c > 10_000_000) {
        return capacity(format!("d^depth = {}^{depth} intervals exceed 10^7", params.d));
    }
    let lengths = params.lengths(depth);
    let mut levels = vec![DissectionLevel {
        level: 0,
        left: vec![0.0],
        length: 1.0,
        mass: 1.0,
    }];
    for n in 1..=depth {
        let parent = levels.last().unwrap();
        let l = parent.length;
        let left = parent
            .left
            .iter()
            .flat_map(|&x| params.a.iter().map(move |&aj| x + l * aj))
            .collect();
        levels.push(DissectionLevel {
            level: n,
            left,
            length: lengths[n as usize],
            mass: parent.mass / params.d as f64,
        });
    }
    Ok(levels)
}

/// `∫ e^{-2πiξx} dF_n(x)` for the level's distribution function, which rises
/// linearly by `d^{-n}` across each white interval:
/// `Σ_I d^{-n} e^{-2πiξ l_I} · (1 - e^{-2πiξL})/(2πiξL)`.
pub fn level_fourier(level: &DissectionLevel, xi: f64) -> Complex<f64> {
    let u = xi * level.length;
    let box_t = if u == 0.0 {
        Complex::new(1.0, 0.0)
    } else {
        let half = std::f64::consts::PI * u;
        Complex::new(half.cos(), -half.sin()) * (half.sin() / half)
    };
    let sum: Complex<f64> = level
        .left
        .par_iter()
        .map(|&l| {
            let angle = -std::f64::consts::TAU * xi * l;
            Complex::new(angle.cos(), angle.sin())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    sum * box_t * level.mass
}

/// `inf |b·j|` over `0 ≠ j ∈ Z^d`, `j·1 = 0`, `‖j‖_∞ ≤ s/2 + 1`, by
/// enumerating the first `d - 1` coordinates.
pub fn delta_s(b: &[f64], s: f64) -> Result<f64> {
    let d = b.len();
    if d < 2 {
        return domain("delta_s needs d ≥ 2");
    }
    if !(s > 0.0) {
        return domain("s must be positive");
    }
    if (s + 3.0).powi(d as i32) > 1e8 {
        return capacity(format!("box of size (s+3)^d = {:.3e} exceeds 10^8", (s + 3.0).powi(d as i32)));
    }
    let r = (s / 2.0 + 1.0).floor() as i64;
    let width = (2 * r + 1) as u64;
    let total = width.pow((d - 1) as u32);
    let best = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let mut sum = 0i64;
            let mut dot = 0.0;
            let mut nonzero = false;
            for &bi in &b[..d - 1] {
                let j = (c % width) as i64 - r;
                c /= width;
                sum += j;
                dot += j as f64 * bi;
                nonzero |= j != 0;
            }
            let last = -sum;
            if !nonzero || last.abs() > r {
                return f64::INFINITY;
            }
            (dot + last as f64 * b[d - 1]).abs()
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

/// A vector `x ∈ (0,1)^m` with `|x·r| ≥ M^{-2m}` for `0 < ‖r‖_∞ ≤ M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionVector {
    pub x: Vec<f64>,
    pub radius: u64,
    /// `min |x·r|` over the box, from the exhaustive check.
    pub min_dot: f64,
    pub threshold: f64,
    pub attempts: u32,
}

/// `min |x·r|` over `0 < ‖r‖_∞ ≤ radius`, exact over the box: sums over the
/// two halves of the coordinates are sorted and matched.
pub fn min_lattice_dot(x: &[f64], radius: u64) -> Result<f64> {
    let m = x.len();
    if m == 0 {
        return domain("empty vector");
    }
    let width = 2 * radius as u128 + 1;
    if width.checked_pow(m as u32).is_none_or(|c| c > DIRECTION_BUDGET) {
        return capacity(format!(
            "(2M+1)^m = {width}^{m} candidates exceed the 10^9 verification budget; use smaller m or M"
        ));
    }
    let half_sums = |coords: &[f64]| -> Vec<f64> {
        let mut sums = vec![0.0];
        for &xi in coords {
            let mut next = Vec::with_capacity(sums.len() * width as usize);
            for &s in &sums {
                for r in -(radius as i64)..=radius as i64 {
                    next.push(s + r as f64 * xi);
                }
            }
            sums = next;
        }
        sums
    };
    let split = m / 2;
    let left = half_sums(&x[..split]);
    let mut right: Vec<(f64, bool)> = {
        let sums = half_sums(&x[split..]);
        let zero_index = sums.len() / 2;
        sums.into_iter().enumerate().map(|(i, v)| (v, i == zero_index)).collect()
    };
    right.sort_by(|p, q| p.0.total_cmp(&q.0));
    let left_zero = left.len() / 2;
    let best = left
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let idx = right.partition_point(|&(v, _)| v < -s);
            let mut best = f64::INFINITY;
            for j in idx.saturating_sub(2)..(idx + 2).min(right.len()) {
                let (v, is_zero) = right[j];
                if i == left_zero && is_zero {
                    continue;
                }
                best = best.min((s + v).abs());
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

fn direction_attempt(m: usize, radius: u64, seed: u64, key: &[u64], attempt: u32) -> Vec<f64> {
    let mut path = vec![tag::DIRECTION];
    path.extend_from_slice(key);
    path.push(u64::from(attempt));
    let mut rng = stream(seed, &path);
    let _ = radius;
    (0..m)
        .map(|_| loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        })
        .collect()
}

/// Rejection-samples a direction vector and verifies it exhaustively.
pub fn pick_direction_vector(m: usize, radius: u64, seed: u64) -> Result<DirectionVector> {
    pick_direction_keyed(m, radius, seed, &[])
}

fn pick_direction_keyed(m: usize, radius: u64, seed: u64, key: &[u64]) -> Result<DirectionVector> {
    if m == 0 || radius == 0 {
        return domain("m and M must be positive");
    }
    if m < 10 || radius < 10 {
        log::warn!("direction vector with m = {m}, M = {radius} below the lemma's range m, M ≥ 10");
    }
    let threshold = (radius as f64).powf(-2.0 * m as f64);
    let mut best = 0.0f64;
    for attempt in 0..1000 {
        let x = direction_attempt(m, radius, seed, key, attempt);
        let min_dot = min_lattice_dot(&x, radius)?;
        if min_dot >= threshold {
            return Ok(DirectionVector {
                x,
                radius,
                min_dot,
                threshold,
                attempts: attempt + 1,
            });
        }
        best = best.max(min_dot);
    }
    Err(Error::ConstructionFailure {
        retries: 1000,
        best,
        reason: format!("no direction vector cleared M^(-2m) = {threshold:e}"),
    })
}

/// Fraction of single draws rejected, and the volume bound
/// `2 (2M+1)^m M^{-2m}` on that probability.
pub fn direction_rejection_rate(m: usize, radius: u64, draws: u32, seed: u64) -> Result<(f64, f64)> {
    if draws == 0 {
        return domain("draws must be at least 1");
    }
    let threshold = (radius as f64).powf(-2.0 * m as f64);
    let rejected = (0..draws)
        .into_par_iter()
        .map(|i| {
            let x = direction_attempt(m, radius, seed, &[u64::MAX], i);
            min_lattice_dot(&x, radius).map(|v| u32::from(v < threshold))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<u32>();
    let bound = 2.0 * ((2 * radius + 1) as f64).powi(m as i32) * threshold;
    Ok((f64::from(rejected) / f64::from(draws), bound.min(1.0)))
}

/// A spacing vector `a` with its `δ_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ACertificate {
    pub a: Vec<f64>,
    pub kappa: f64,
    pub delta_s: f64,
    pub revised_a_ok: bool,
    pub eta: Vec<f64>,
    /// Radius used for the direction-vector check; below `d·s` when capped.
    pub direction_radius: u64,
    pub attempts: u32,
}

/// Chooses `a` through `ζ_j = 1 + (d^{1/α-1} - 1) η_j`,
/// `a_j - a_{j-1} = d^{-1/α} ζ_j`, with `a_1` at the midpoint of `(0, 1/d - κ)`.
pub fn pick_a(d: usize, alpha: f64, s: f64, seed: u64) -> Result<ACertificate> {
    if d < 2 {
        return domain("d must be at least 2");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain("alpha must lie in (0, 1)");
    }
    if !(s > 0.0) {
        return domain("s must be positive");
    }
    let m = d - 1;
    let full = (d as f64 * s).ceil() as u64;
    let mut radius = full.max(1);
    while (2 * radius as u128 + 1).pow(m as u32) > DIRECTION_BUDGET && radius > 1 {
        radius -= 1;
    }
    if radius < full {
        log::warn!("direction-vector radius capped at {radius} (d·s = {full}) to stay within the verification budget");
    }
    let df = d as f64;
    let kappa = df.powf(-1.0 / alpha);
    let spread = df.powf(1.0 / alpha - 1.0) - 1.0;
    for attempt in 0..100u32 {
        let dir = pick_direction_keyed(m, radius, seed, &[tag::SALEM_A, u64::from(attempt)])?;
        let mut a = Vec::with_capacity(d);
        a.push((1.0 / df - kappa) / 2.0);
        for &eta in &dir.x {
            let zeta = 1.0 + spread * eta;
            a.push(a.last().unwrap() + kappa * zeta);
        }
        let revised = revised_a_holds(&a, kappa);
        if revised && a[d - 1] + kappa < 1.0 {
            let delta = delta_s(&a, s)?;
            return Ok(ACertificate {
                a,
                kappa,
                delta_s: delta,
                revised_a_ok: true,
                eta: dir.x,
                direction_radius: radius,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::ConstructionFailure {
        retries: 100,
        best: f64::NAN,
        reason: "no direction vector produced an admissible a".into(),
    })
}

/// How a window average was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMethod {
    /// `|Q|^{2q}` expanded as a trigonometric polynomial and integrated termwise.
    Trigonometric,
    /// Adaptive Gauss–Kronrod (7/15) on unit panels.
    GaussKronrod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowAverage {
    pub average: f64,
    pub bound: f64,
    pub pass: bool,
    pub error_estimate: f64,
    pub method: AverageMethod,
}

/// `(1/T) ∫_{t0}^{t0+T} |P(ξ)|^s dξ` with `λ_j = 1/d`, against
/// `2(s/2+1)^{s/2} d^{-s/2}`.
pub fn window_average(params: &SalemParams, s: f64, big_t: f64, t0: f64) -> Result<WindowAverage> {
    let lambda = vec![1.0 / params.d as f64; params.d];
    window_average_weighted(&params.a, &lambda, s, big_t, t0)
}

/// `(1/T) ∫_{t0}^{t0+T} |Q(ξ)|^s dξ` for `Q(ξ) = Σ λ_j e^{-2πi b_j ξ}`, against
/// `2(s/2+1)^{s/2} (Σλ_j²)^{s/2}`.
///
/// Even integer `s` is integrated exactly; otherwise adaptive quadrature with
/// relative tolerance `10^{-8}` per panel is used.
pub fn window_average_weighted(b: &[f64], lambda: &[f64], s: f64, big_t: f64, t0: f64) -> Result<WindowAverage> {
    if b.len() != lambda.len() || b.is_empty() {
        return domain("b and lambda must be nonempty and of equal length");
    }
    if !(s > 0.0) || !(big_t > 0.0) || !t0.is_finite() {
        return domain("need s > 0, T > 0 and finite t0");
    }
    let l2: f64 = lambda.iter().map(|l| l * l).sum();
    let bound = 2.0 * (s / 2.0 + 1.0).powf(s / 2.0) * l2.powf(s / 2.0);
    let q = (s / 2.0).round();
    let even = (s - 2.0 * q).abs() == 0.0 && q >= 1.0;
    let (average, error_estimate, method) = if even && multi_index_count(b.len(), q as u32) <= 20_000 {
        (trig_average(b, lambda, q as u32, big_t, t0), 0.0, AverageMethod::Trigonometric)
    } else {
        let (integral, err) = gauss_kronrod(|x| dissection_weighted(b, lambda, x).norm().powf(s), t0, t0 + big_t)?;
        (integral / big_t, err / big_t, AverageMethod::GaussKronrod)
    };
    Ok(WindowAverage {
        average,
        bound,
        pass: average <= bound,
        error_estimate,
        method,
    })
}

fn dissection_weighted(b: &[f64], lambda: &[f64], xi: f64) -> Complex<f64> {
    b.iter()
        .zip(lambda)
        .map(|(&bj, &lj)| {
            let angle = -std::f64::consts::TAU * bj * xi;
            Complex::new(angle.cos(), angle.sin()) * lj
        })
        .sum()
}

fn multi_index_count(d: usize, q: u32) -> u128 {
    // C(q + d - 1, d - 1)
    let (n, k) = (q as u128 + d as u128 - 1, d as u128 - 1);
    let mut c = 1u128;
    for i in 0..k.min(n - k) {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// All `j ∈ N^d` with `|j| = q`, paired with `(q!/j!) λ^j`.
fn multinomial_terms(lambda: &[f64], q: u32) -> Vec<(Vec<u32>, f64)> {
    fn rec(d: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == d - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            rec(d, left - v, prefix, out);
            prefix.pop();
        }
    }
    let mut idx = Vec::new();
    rec(lambda.len(), q, &mut Vec::new(), &mut idx);
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    idx.into_iter()
        .map(|j| {
            let coeff = j.iter().zip(lambda).fold(fact(q), |acc, (&e, &l)| acc * l.powi(e as i32) / fact(e));
            (j, coeff)
        })
        .collect()
}

/// `Q^q = Σ_j c_j e^{-2πiξ j·b}`, so the window average of `|Q|^{2q}` is
/// `Σ_{j,i} c_j c_i · avg e^{-2πiξ (j-i)·b}` with
/// `avg e^{-2πiξω} = e^{-2πiω(t0+T/2)} sin(πωT)/(πωT)`.
fn trig_average(b: &[f64], lambda: &[f64], q: u32, big_t: f64, t0: f64) -> f64 {
    let terms: Vec<(f64, f64)> = multinomial_terms(lambda, q)
        .into_iter()
        .map(|(j, c)| (j.iter().zip(b).map(|(&e, &bj)| f64::from(e) * bj).sum(), c))
        .collect();
    terms
        .par_iter()
        .map(|&(fj, cj)| {
            terms
                .iter()
                .map(|&(fi, ci)| {
                    let omega = fj - fi;
                    if omega == 0.0 {
                        return cj * ci;
                    }
                    let x = std::f64::consts::PI * omega * big_t;
                    let phase = std::f64::consts::TAU * omega * (t0 + big_t / 2.0);
                    cj * ci * phase.cos() * x.sin() / x
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate and its difference from the embedded
/// 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WEIGHTS[7];
    let mut g = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        k += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            g += G_WEIGHTS[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, depth: u32) -> (f64, f64) {
    let (v, e) = gk15(f, a, b);
    if e <= 1e-10 * v.abs().max(1e-300) + 1e-15 * (b - a) || depth >= 30 {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adapt(f, a, m, depth + 1);
    let (v2, e2) = adapt(f, m, b, depth + 1);
    (v1 + v2, e1 + e2)
}

/// Adaptive Gauss–Kronrod on unit-length panels, summed in panel order.
pub fn gauss_kronrod(f: impl Fn(f64) -> f64 + Sync, a: f64, b: f64) -> Result<(f64, f64)> {
    let panels = (b - a).ceil().max(1.0);
    if panels > 1e8 {
        return capacity(format!("{panels:.3e} quadrature panels exceed the 10^8 limit"));
    }
    let n = panels as u64;
    let h = (b - a) / n as f64;
    let parts: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
            adapt(&f, lo, hi, 0)
        })
        .collect();
    Ok(parts.into_iter().fold((0.0, 0.0), |(v, e), (pv, pe)| (v + pv, e + pe)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::Signed;

    fn params2() -> SalemParams {
        SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::Constant).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::LowerEdge).is_ok());
        assert!(SalemParams::new(vec![0.3, 0.4], 0.5, KappaRule::LowerEdge).is_err());
        assert!(SalemParams::new(vec![0.3], 0.5, KappaRule::LowerEdge).is_err());
        assert!(SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::Explicit(vec![0.1])).is_err());
        let p = SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::Explicit(vec![0.2, 0.24])).unwrap();
        assert_eq!(p.kappa_m(2), 0.24);
        assert_eq!(p.kappa_m(7), (1.0 - 1.0 / 98.0) * 0.25);
        // a_1 = 0.3 ≥ 1/2 - 1/4.
        assert!(!params2().revised_a_ok());
    }

    #[test]
    fn fourier_at_zero_and_modulus() {
        let p = params2();
        let (v, b) = salem_fourier(&p, 0.0f64, 10).unwrap();
        assert_eq!((v, b), (Complex::new(1.0, 0.0), 0.0));
        for i in 0..500 {
            let xi = i as f64 * 0.731 - 100.0;
            let (v, _) = salem_fourier(&p, xi, 40).unwrap();
            assert!(v.norm() <= 1.0 + 1e-15);
            let (w, _) = salem_fourier(&p, -xi, 40).unwrap();
            assert!((v - w.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn trunc_bound_monotone() {
        let p = SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::LowerEdge).unwrap();
        let b = |xi: f64, depth| salem_fourier(&p, xi, depth).unwrap().1;
        assert!(b(10.0, 5) > b(10.0, 6));
        assert!(b(20.0, 5) > b(10.0, 5));
        assert!(b(10.0, 10) <= b(10.0, 5) * p.kappa().powi(5));
    }

    #[test]
    fn product_matches_level_distribution() {
        let p = SalemParams::new(vec![0.3, 0.65], 0.5, KappaRule::LowerEdge).unwrap();
        let levels = dissection_levels(&p, 16).unwrap();
        let last = levels.last().unwrap();
        for xi in [1.0, 17.0, 100.0, 256.0] {
            let (v, tb) = salem_fourier(&p, xi, 40).unwrap();
            let oracle = level_fourier(last, xi);
            let discretization = std::f64::consts::TAU * xi * last.length;
            assert!((v - oracle).norm() <= tb + discretization + 1e-12, "xi = {xi}");
        }
    }

    #[test]
    fn levels_nest_exactly() {
        // Rational replay of the dissection with a = (1/10, 2/5, 7/10), κ = 1/4.
        let kappas = [
            Ratio::new(3i128, 16),
            Ratio::new(29, 128),
            Ratio::new(31, 128),
            Ratio::new(63, 256),
            Ratio::new(127, 512),
        ];
        let explicit = kappas.iter().map(|q| *q.numer() as f64 / *q.denom() as f64).collect();
        let alpha = 3f64.ln() / 4f64.ln();
        let p = SalemParams::new(vec![0.1, 0.4, 0.7], alpha, KappaRule::Explicit(explicit)).unwrap();
        let levels = dissection_levels(&p, 5).unwrap();
        let a = [Ratio::new(1i128, 10), Ratio::new(2, 5), Ratio::new(7, 10)];
        let mut exact = vec![(Ratio::from_integer(0i128), Ratio::from_integer(1i128))];
        for (n, level) in levels.iter().enumerate().skip(1) {
            let mut next = Vec::new();
            for &(l, len) in &exact {
                for &aj in &a {
                    let child = (l + len * aj, len * kappas[n - 1]);
                    assert!(child.0 >= l && child.0 + child.1 <= l + len);
                    next.push(child);
                }
            }
            for w in next.windows(2) {
                assert!(w[0].0 + w[0].1 < w[1].0);
            }
            assert_eq!(level.left.len(), 3usize.pow(n as u32));
            for (x, &(l, len)) in level.left.iter().zip(&next) {
                assert!((x - *l.numer() as f64 / *l.denom() as f64).abs() < 1e-15);
                assert!((level.length - *len.numer() as f64 / *len.denom() as f64).abs() < 1e-15);
            }
            assert!((level.mass * level.left.len() as f64 - 1.0).abs() < 1e-12);
            exact = next;
        }
    }

    #[test]
    fn delta_s_examples() {
        assert_eq!(delta_s(&[0.2, 0.55], 2.0).unwrap(), (0.55f64 - 0.2).abs());
        assert_eq!(delta_s(&[0.2, 0.3, 0.3], 2.0).unwrap(), 0.0);
        let a = [0.11, 0.37, 0.52, 0.9];
        let d = delta_s(&a, 4.0).unwrap();
        let perm = delta_s(&[0.52, 0.11, 0.9, 0.37], 4.0).unwrap();
        let shifted = delta_s(&a.map(|v| v + 0.25), 4.0).unwrap();
        assert!((d - perm).abs() < 1e-15 && (d - shifted).abs() < 1e-14);
    }

    #[test]
    fn delta_s_matches_rational_enumeration() {
        let a = [Ratio::new(3i64, 17), Ratio::new(5, 11), Ratio::new(7, 13), Ratio::new(29, 31)];
        let r = 3i64; // s = 4
        let mut best: Option<Ratio<i64>> = None;
        for j0 in -r..=r {
            for j1 in -r..=r {
                for j2 in -r..=r {
                    let j3 = -(j0 + j1 + j2);
                    if j3.abs() > r || (j0, j1, j2, j3) == (0, 0, 0, 0) {
                        continue;
                    }
                    let v = (a[0] * j0 + a[1] * j1 + a[2] * j2 + a[3] * j3).abs();
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        let best = best.unwrap();
        let float: Vec<f64> = a.iter().map(|q| *q.numer() as f64 / *q.denom() as f64).collect();
        let d = delta_s(&float, 4.0).unwrap();
        assert!((d - *best.numer() as f64 / *best.denom() as f64).abs() < 1e-15);
    }

    #[test]
    fn lattice_min_matches_brute_force() {
        let x = [0.318, 0.7071, 0.1234];
        let fast = min_lattice_dot(&x, 4).unwrap();
        let mut slow = f64::INFINITY;
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                for c in -4i64..=4 {
                    if (a, b, c) != (0, 0, 0) {
                        slow = slow.min((a as f64 * x[0] + b as f64 * x[1] + c as f64 * x[2]).abs());
                    }
                }
            }
        }
        assert!((fast - slow).abs() < 1e-15);
        assert!(min_lattice_dot(&[0.5; 10], 10).is_err());
    }

    #[test]
    fn direction_vectors() {
        let v = pick_direction_vector(1, 10, 4).unwrap();
        assert!(v.x[0] >= 1e-2);
        let v = pick_direction_vector(2, 10, 1).unwrap();
        assert_eq!(v, pick_direction_vector(2, 10, 1).unwrap());
        assert!(v.min_dot >= 1e-4);
        let (rate, bound) = direction_rejection_rate(1, 10, 1000, 9).unwrap();
        let sigma = (bound * (1.0 - bound) / 1000.0).sqrt();
        assert!(rate <= bound + 3.0 * sigma);
    }

    #[test]
    fn pick_a_is_admissible() {
        for seed in 0..5 {
            let c = pick_a(2, 0.7, 2.0, seed).unwrap();
            let p = SalemParams::new(c.a.clone(), 0.7, KappaRule::LowerEdge).unwrap();
            assert!(p.revised_a_ok());
            assert_eq!(c.delta_s, (c.a[1] - c.a[0]).abs());
            assert!(c.delta_s > c.kappa && c.delta_s < 0.5);
        }
    }

    #[test]
    fn second_moment_tends_to_sum_of_squares() {
        let b = [0.1, 0.3 + 2f64.sqrt() / 10.0, 0.8];
        let lambda = [1.0 / 3.0; 3];
        let w = window_average_weighted(&b, &lambda, 2.0, 1e5, 0.0).unwrap();
        assert!((w.average - 1.0 / 3.0).abs() < 1e-3);
        assert!(w.pass && (w.bound - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_and_adaptive_averages_agree() {
        let b = [0.05, 0.31, 0.47, 0.83];
        let lambda = [0.1, 0.2, 0.3, 0.4];
        let exact = window_average_weighted(&b, &lambda, 4.0, 300.0, 12.5).unwrap();
        assert_eq!(exact.method, AverageMethod::Trigonometric);
        let (v, _) = gauss_kronrod(|x| dissection_weighted(&b, &lambda, x).norm().powi(4), 12.5, 312.5).unwrap();
        assert!((exact.average - v / 300.0).abs() < 1e-10 * exact.average);
        let odd = window_average_weighted(&b, &lambda, 3.0, 300.0, 12.5).unwrap();
        assert_eq!(odd.method, AverageMethod::GaussKronrod);
    }

    #[test]
    fn average_is_homogeneous() {
        let b = [0.05, 0.31, 0.47];
        let lambda = [0.2, 0.3, 0.5];
        let scaled: Vec<f64> = lambda.iter().map(|l| 3.0 * l).collect();
        for s in [3.0, 4.0] {
            let w1 = window_average_weighted(&b, &lambda, s, 200.0, 1.0).unwrap();
            let w2 = window_average_weighted(&b, &scaled, s, 200.0, 1.0).unwrap();
            assert!((w2.average - 3f64.powf(s) * w1.average).abs() < 1e-9 * w2.average);
        }
    }
}
