//! Brownian images of Frostman measures: path sampling, Fourier moments,
//! the regularized trilinear form `Λ_ε` and its closed-form expectation.
//!
//! `μ̂(ξ) = ∫ e^{-2πiξW(t)} dθ(t)` with `θ` discretized into atoms that are
//! snapped to the dyadic grid of the path.

use num_complex::Complex;
use rand::Rng;
use rand::distr::Distribution;
use rand::distr::weighted::WeightedIndex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, capacity, domain};
use crate::measure::LevelApproximation;
use crate::rng::{stream, tag};
use crate::scalar::Real;

pub const MAX_GRID_DEPTH: u32 = 24;
/// Depth of the grid built from independent increments; finer levels are
/// filled in by midpoint bridges.
const COARSE_DEPTH: u32 = 10;

/// `W(i 2^{-g})` for `i = 0..=2^g`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath<T> {
    grid_depth: u32,
    values: Vec<T>,
    seed: u64,
    index: u64,
}

impl<T: Real> BrownianPath<T> {
    pub fn grid_depth(&self) -> u32 {
        self.grid_depth
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// `W(i 2^{-g})`.
    pub fn at(&self, i: usize) -> T {
        self.values[i]
    }
}

/// One path on the grid of depth `g`; equal to path 0 of any ensemble with
/// the same seed and depth.
pub fn sample_path<T: Real>(g: u32, seed: u64) -> Result<BrownianPath<T>> {
    sample_path_indexed(g, seed, 0)
}

/// Path `index` of the family keyed by `seed`.
pub fn sample_path_indexed<T: Real>(g: u32, seed: u64, index: u64) -> Result<BrownianPath<T>> {
    if g > MAX_GRID_DEPTH {
        return capacity(format!("grid depth {g} exceeds {MAX_GRID_DEPTH}"));
    }
    let mut rng = stream(seed, &[tag::PATH, index]);
    let n = 1usize << g;
    let coarse = g.min(COARSE_DEPTH);
    let stride = 1usize << (g - coarse);
    let mut values = vec![T::zero(); n + 1];
    let sd = T::of((-(coarse as f64) * std::f64::consts::LN_2).exp().sqrt());
    for i in 1..=(1usize << coarse) {
        values[i * stride] = values[(i - 1) * stride] + sd * T::standard_normal(&mut rng);
    }
    for level in coarse + 1..=g {
        let half = 1usize << (g - level);
        // Bridge midpoint of an interval of length h has variance h/4.
        let sd = T::of((2.0f64).powi(-(level as i32 + 1)).sqrt());
        let two = T::of(2.0);
        for m in (half..n).step_by(2 * half) {
            values[m] = (values[m - half] + values[m + half]) / two + sd * T::standard_normal(&mut rng);
        }
    }
    Ok(BrownianPath {
        grid_depth: g,
        values,
        seed,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Uniform,
    Cantor,
    PointMass,
    Atoms,
}

/// A discretized Frostman measure `θ`: atoms `(t_i, w_i)` with `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseMeasure {
    kind: BaseKind,
    atoms: Vec<(f64, f64)>,
    /// Width of the cell each atom stands for; 0 for genuine point masses.
    cell_width: f64,
}

impl BaseMeasure {
    /// Equal atoms at the midpoints of `n` equal cells.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("uniform base needs at least one atom");
        }
        let w = 1.0 / n as f64;
        Ok(Self {
            kind: BaseKind::Uniform,
            atoms: (0..n).map(|i| ((i as f64 + 0.5) * w, w)).collect(),
            cell_width: w,
        })
    }

    /// Equal atoms at the midpoints of the surviving cells.
    pub fn cantor(approx: &LevelApproximation) -> Result<Self> {
        if approx.cells().is_empty() {
            return domain("Cantor base needs at least one cell");
        }
        let m = approx.modulus() as f64;
        let w = 1.0 / approx.cells().len() as f64;
        Ok(Self {
            kind: BaseKind::Cantor,
            atoms: approx.cells().iter().map(|&p| ((p as f64 + 0.5) / m, w)).collect(),
            cell_width: 1.0 / m,
        })
    }

    pub fn point_mass(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return domain("atom outside [0, 1]");
        }
        Ok(Self {
            kind: BaseKind::PointMass,
            atoms: vec![(t, 1.0)],
            cell_width: 0.0,
        })
    }

    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return domain("no atoms");
        }
        if atoms.iter().any(|&(t, w)| !(0.0..=1.0).contains(&t) || !(w >= 0.0)) {
            return domain("atoms must lie in [0, 1] with nonnegative weights");
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("weights sum to {total}, not 1"));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            kind: BaseKind::Atoms,
            atoms,
            cell_width: 0.0,
        })
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    /// Grid indices `round(t 2^g)` with weights, in increasing order.
    pub fn snapped(&self, g: u32) -> Vec<(usize, f64)> {
        let n = (1u64 << g) as f64;
        self.atoms
            .iter()
            .map(|&(t, w)| (((t * n).round() as usize).min(1 << g), w))
            .collect()
    }
}

/// `Σ_i w_i e^{-2πiξW(t_i)}`.
pub fn image_fourier<T: Real>(path: &BrownianPath<T>, base: &BaseMeasure, xi: T) -> Complex<T> {
    base.snapped(path.grid_depth)
        .into_iter()
        .map(|(i, w)| {
            let angle = -T::two_pi() * xi * path.values[i];
            Complex::new(angle.cos(), angle.sin()) * T::of(w)
        })
        .sum()
}

/// `E|μ̂(ξ)|² = Σ_{i,k} w_i w_k e^{-2π²ξ²|t_i - t_k|}` at the snapped atoms,
/// in linear time: with times sorted, the cross terms telescope through
/// `A_{k+1} = (A_k + w_k) e^{-c(t_{k+1} - t_k)}`.
pub fn exact_abs2(base: &BaseMeasure, xi: f64, g: u32) -> f64 {
    let c = 2.0 * std::f64::consts::PI.powi(2) * xi * xi;
    let scale = 1.0 / (1u64 << g) as f64;
    let atoms = base.snapped(g);
    let mut diag = 0.0;
    let mut cross = 0.0;
    let mut acc = 0.0;
    for (k, &(i, w)) in atoms.iter().enumerate() {
        if k > 0 {
            let gap = (i - atoms[k - 1].0) as f64 * scale;
            acc = (acc + atoms[k - 1].1) * (-c * gap).exp();
        }
        cross += w * acc;
        diag += w * w;
    }
    diag + 2.0 * cross
}

/// Independent paths sharing one base measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianEnsemble {
    pub path_count: usize,
    pub grid_depth: u32,
    pub base: BaseMeasure,
    pub seed: u64,
}

impl BrownianEnsemble {
    pub fn new(path_count: usize, grid_depth: u32, base: BaseMeasure, seed: u64) -> Result<Self> {
        if path_count == 0 {
            return domain("ensemble needs at least one path");
        }
        if grid_depth > MAX_GRID_DEPTH {
            return capacity(format!("grid depth {grid_depth} exceeds {MAX_GRID_DEPTH}"));
        }
        Ok(Self {
            path_count,
            grid_depth,
            base,
            seed,
        })
    }

    pub fn path(&self, i: usize) -> Result<BrownianPath<f64>> {
        sample_path_indexed(self.grid_depth, self.seed, i as u64)
    }

    /// Positions `W(t_i)` and weights of the base atoms along path `i`.
    fn image_atoms(&self, i: usize) -> Result<Vec<(f64, f64)>> {
        let path = self.path(i)?;
        Ok(self
            .base
            .snapped(self.grid_depth)
            .into_iter()
            .map(|(k, w)| (path.values[k], w))
            .collect())
    }
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Jackknife estimate of a smooth function of column means: `rows[i]` holds
/// the observations of sample `i`.
pub fn jackknife(rows: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let totals: Vec<f64> = (0..width).map(|c| compensated_sum(rows.iter().map(|r| r[c]))).collect();
    let full: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
    let estimate = f(&full);
    if n < 2 {
        return (estimate, f64::NAN);
    }
    let leave: Vec<f64> = rows
        .iter()
        .map(|r| {
            let means: Vec<f64> = totals.iter().zip(r).map(|(t, x)| (t - x) / (n - 1) as f64).collect();
            f(&means)
        })
        .collect();
    let bar = compensated_sum(leave.iter().copied()) / n as f64;
    let var = (n - 1) as f64 / n as f64 * compensated_sum(leave.iter().map(|v| (v - bar).powi(2)));
    (estimate, var.sqrt())
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub xi: f64,
    /// Sample mean of `|μ̂(ξ)|^{2q}`.
    pub mean: f64,
    pub stderr: f64,
    /// `E|μ̂(ξ)|²` from the double sum, for `q = 1`.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub q: f64,
    pub paths: usize,
    pub rows: Vec<MomentRow>,
    /// Fitted slope of `log E|μ̂|^{2q}` against `log|ξ|`.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
}

/// Monte Carlo moments `E|μ̂(ξ)|^{2q}` with jackknife errors, and the fitted
/// log-log slope over all of `xi_list`.
pub fn moment_estimate(ensemble: &BrownianEnsemble, xi_list: &[f64], q: f64) -> Result<MomentReport> {
    if !(q > 0.0) {
        return domain("q must be positive");
    }
    if xi_list.is_empty() || xi_list.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return domain("xi values must be finite and nonzero");
    }
    let rows: Vec<Vec<f64>> = (0..ensemble.path_count)
        .into_par_iter()
        .map(|i| {
            let atoms = ensemble.image_atoms(i)?;
            Ok(xi_list
                .iter()
                .map(|&xi| {
                    let z: Complex<f64> = atoms
                        .iter()
                        .map(|&(x, w)| {
                            let (s, c) = (-std::f64::consts::TAU * xi * x).sin_cos();
                            Complex::new(c * w, s * w)
                        })
                        .sum();
                    z.norm_sqr().powf(q)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let out = xi_list
        .iter()
        .enumerate()
        .map(|(c, &xi)| {
            let column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let (mean, stderr) = mean_stderr(&column);
            MomentRow {
                xi,
                mean,
                stderr,
                exact: (q == 1.0).then(|| exact_abs2(&ensemble.base, xi, ensemble.grid_depth)),
            }
        })
        .collect();
    let logs: Vec<f64> = xi_list.iter().map(|x| x.abs().ln()).collect();
    let distinct = logs.iter().any(|&l| l != logs[0]);
    let (slope, slope_stderr) = if distinct {
        let (s, e) = jackknife(&rows, |means| {
            let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
            ols_slope(&logs, &y)
        });
        (Some(s), Some(e))
    } else {
        (None, None)
    };
    Ok(MomentReport {
        q,
        paths: ensemble.path_count,
        rows: out,
        slope,
        slope_stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEps {
    pub epsilon: f64,
    pub value: f64,
    pub imag: f64,
    /// Bound on the part of the integral beyond `±xi_max`.
    pub tail_bound: f64,
    pub xi_max: f64,
    pub step: f64,
    pub converged: bool,
}

/// Cutoff at which `e^{-2π²εξ²}` has fallen to `10^{-15}`.
pub fn default_xi_max(epsilon: f64) -> f64 {
    (15.0 * std::f64::consts::LN_10 / (2.0 * std::f64::consts::PI.powi(2) * epsilon)).sqrt()
}

/// Trapezoid sum of `μ̂(ξ)² μ̂(-2ξ) e^{-2π²εξ²}` on the grid `kh`, `|k| ≤ K`,
/// with `μ̂` advanced by the per-atom phase `e^{-2πi h x}`.
fn trapezoid(atoms: &[(f64, f64)], epsilon: f64, big_k: i64, h: f64) -> Complex<f64> {
    const RESYNC: i64 = 256;
    let a = 2.0 * std::f64::consts::PI.powi(2) * epsilon;
    let phase = |t: f64| {
        let (s, c) = (-std::f64::consts::TAU * t).sin_cos();
        Complex::new(c, s)
    };
    let step: Vec<Complex<f64>> = atoms.iter().map(|&(x, _)| phase(h * x)).collect();
    let mut u = vec![Complex::new(0.0, 0.0); atoms.len()];
    let mut v = vec![Complex::new(0.0, 0.0); atoms.len()];
    let mut terms = Vec::with_capacity((2 * big_k + 1) as usize);
    for k in -big_k..=big_k {
        let xi = k as f64 * h;
        if (k + big_k) % RESYNC == 0 {
            for (i, &(x, _)) in atoms.iter().enumerate() {
                u[i] = phase(xi * x);
                v[i] = phase(-2.0 * xi * x);
            }
        } else {
            for i in 0..atoms.len() {
                u[i] *= step[i];
                v[i] *= step[i].conj() * step[i].conj();
            }
        }
        let mut m1 = Complex::new(0.0, 0.0);
        let mut m2 = Complex::new(0.0, 0.0);
        for (i, &(_, w)) in atoms.iter().enumerate() {
            m1 += u[i] * w;
            m2 += v[i] * w;
        }
        let weight = if k.abs() == big_k { 0.5 } else { 1.0 };
        terms.push(m1 * m1 * m2 * ((-a * xi * xi).exp() * weight));
    }
    Complex::new(
        compensated_sum(terms.iter().map(|z| z.re)),
        compensated_sum(terms.iter().map(|z| z.im)),
    ) * h
}

fn lambda_from_atoms(atoms: &[(f64, f64)], epsilon: f64, xi_max: f64, quad_step: f64) -> Result<LambdaEps> {
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    if !(xi_max > 0.0 && quad_step > 0.0 && quad_step <= xi_max) {
        return domain("need 0 < quad_step ≤ xi_max");
    }
    let mut big_k = (xi_max / quad_step).ceil() as i64;
    let mut prev = trapezoid(atoms, epsilon, big_k, xi_max / big_k as f64);
    let mut converged = false;
    for _ in 0..16 {
        if big_k > 1 << 26 {
            break;
        }
        big_k *= 2;
        let next = trapezoid(atoms, epsilon, big_k, xi_max / big_k as f64);
        let change = (next.re - prev.re).abs();
        prev = next;
        if change < 1e-4 * next.re.abs() || change < 1e-14 {
            converged = true;
            break;
        }
    }
    let a = 2.0 * std::f64::consts::PI.powi(2) * epsilon;
    Ok(LambdaEps {
        epsilon,
        value: prev.re,
        imag: prev.im,
        tail_bound: (-a * xi_max * xi_max).exp() / (a * xi_max),
        xi_max,
        step: xi_max / big_k as f64,
        converged,
    })
}

/// `Λ_ε = ∫ μ̂(ξ)² μ̂(-2ξ) e^{-2π²εξ²} dξ` over `[-xi_max, xi_max]`, halving
/// the trapezoid step from `quad_step` until the value moves by less than
/// `10^{-4}` relative.
pub fn lambda_continuous(
    path: &BrownianPath<f64>,
    base: &BaseMeasure,
    epsilon: f64,
    xi_max: f64,
    quad_step: f64,
) -> Result<LambdaEps> {
    let atoms: Vec<(f64, f64)> = base
        .snapped(path.grid_depth)
        .into_iter()
        .map(|(k, w)| (path.values[k], w))
        .collect();
    lambda_from_atoms(&atoms, epsilon, xi_max, quad_step)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub epsilon: f64,
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<f64>,
}

/// `Λ_ε` on the first `paths` paths of the ensemble, with default cutoff and
/// an initial step of `1/(20 (1 + 2 sup|W|))`.
pub fn lambda_ensemble(ensemble: &BrownianEnsemble, epsilon: f64, paths: usize) -> Result<LambdaSummary> {
    if paths == 0 {
        return domain("need at least one path");
    }
    let xi_max = default_xi_max(epsilon);
    let values = (0..paths)
        .into_par_iter()
        .map(|i| {
            let atoms = ensemble.image_atoms(i)?;
            let sup = atoms.iter().fold(0.0f64, |m, a| m.max(a.0.abs()));
            let step = (1.0 / (20.0 * (1.0 + 2.0 * sup))).min(xi_max);
            let l = lambda_from_atoms(&atoms, epsilon, xi_max, step)?;
            if !l.converged {
                log::warn!("Λ_ε quadrature on path {i} stopped before reaching 1e-4 relative change");
            }
            Ok(l.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, stderr) = mean_stderr(&values);
    Ok(LambdaSummary {
        epsilon,
        mean,
        stderr,
        values,
    })
}

/// Variance of `2W(t_3) - W(t_1) - W(t_2)` by cases on where `t_3` falls in
/// the sorted triple `s_1 ≤ s_2 ≤ s_3`:
/// last `(s_2-s_1) + 4(s_3-s_2)`, middle `s_3 - s_1`, first `4(s_2-s_1) + (s_3-s_2)`.
pub fn sigma_sq(t: [f64; 3]) -> f64 {
    let (lo, hi) = if t[0] <= t[1] { (t[0], t[1]) } else { (t[1], t[0]) };
    let t3 = t[2];
    if t3 >= hi {
        (hi - lo) + 4.0 * (t3 - hi)
    } else if t3 >= lo {
        hi - lo
    } else {
        4.0 * (lo - t3) + (hi - lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub epsilon: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// `E Λ_ε = (2π)^{-1/2} E[(σ²(t) + ε)^{-1/2}]` over triples drawn from `θ³`.
///
/// For `ε > 0` the atoms themselves are sampled, matching paths evaluated
/// on the same base. At `ε = 0` coincident atoms would make the integrand
/// infinite, so each atom is spread uniformly over its cell.
pub fn lambda_expectation_closed(base: &BaseMeasure, epsilon: f64, samples: u64, seed: u64) -> Result<ClosedForm> {
    if !(epsilon >= 0.0) {
        return domain("epsilon must be nonnegative");
    }
    if samples < 2 {
        return domain("need at least two samples");
    }
    if epsilon == 0.0 && base.cell_width == 0.0 {
        return domain("point masses give an infinite expectation at epsilon = 0");
    }
    let weights: Vec<f64> = base.atoms.iter().map(|a| a.1).collect();
    let index = WeightedIndex::new(&weights).map_err(|e| Error::Domain(format!("invalid weights: {e}")))?;
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, &[tag::TRIPLE, c]);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut draw = || {
                let (t, _) = base.atoms[index.sample(&mut rng)];
                if epsilon == 0.0 {
                    (t + (rng.random::<f64>() - 0.5) * base.cell_width).clamp(0.0, 1.0)
                } else {
                    t
                }
            };
            let vals: Vec<f64> = (0..count)
                .map(|_| {
                    let t = [draw(), draw(), draw()];
                    norm / (sigma_sq(t) + epsilon).sqrt()
                })
                .collect();
            (
                compensated_sum(vals.iter().copied()),
                compensated_sum(vals.iter().map(|v| v * v)),
            )
        })
        .collect();
    let n = samples as f64;
    let s1 = compensated_sum(parts.iter().map(|p| p.0));
    let s2 = compensated_sum(parts.iter().map(|p| p.1));
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(ClosedForm {
        epsilon,
        value: mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}

/// `(1-λ)² E(X)² / E(X²)`.
pub fn paley_zygmund(mean: f64, second_moment: f64, lambda: f64) -> f64 {
    (1.0 - lambda).powi(2) * mean * mean / second_moment
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PzBound {
    pub epsilon: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// `sup_λ (1-λ)² Ê²/Ê₂` over `λ ∈ {0.1, …, 0.9}`.
    pub bound: f64,
    pub stderr: f64,
    pub lambda: f64,
    /// Set when `Ê ≤ 0`, where the inequality says nothing.
    pub inconclusive: bool,
}

/// Lower bound on `P(Λ_ε > λ E Λ_ε)` from sample moments over `lambda_samples` paths.
pub fn ap_probability(ensemble: &BrownianEnsemble, epsilon: f64, lambda_samples: usize) -> Result<PzBound> {
    let summary = lambda_ensemble(ensemble, epsilon, lambda_samples)?;
    Ok(paley_zygmund_bound(&summary.values, epsilon))
}

/// The Paley–Zygmund bound from observed values of `Λ_ε`.
pub fn paley_zygmund_bound(values: &[f64], epsilon: f64) -> PzBound {
    let rows: Vec<Vec<f64>> = values.iter().map(|&x| vec![x, x * x]).collect();
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let second = compensated_sum(values.iter().map(|x| x * x)) / n;
    let (lambda, bound) = (1..=9)
        .map(|i| {
            let l = f64::from(i) / 10.0;
            (l, paley_zygmund(mean, second, l))
        })
        .fold((0.1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let (_, stderr) = jackknife(&rows, |m| paley_zygmund(m[0], m[1], lambda));
    let inconclusive = !(mean > 0.0) || !(second > 0.0);
    PzBound {
        epsilon,
        mean,
        second_moment: second,
        bound: if inconclusive { 0.0 } else { bound },
        stderr,
        lambda,
        inconclusive,
    }
}
