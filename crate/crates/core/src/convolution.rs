//! Exact linear convolution of nonnegative integer sequences.
//!
//! Large inputs go through a zero-padded `f64` FFT. The result is rounded to
//! integers only when a rigorous error radius for the transform is below 1/2;
//! otherwise, or for small inputs, the convolution is summed directly.

use num_complex::Complex;
use rustfft::FftPlanner;

/// Inputs with fewer nonzero products than this are convolved directly.
const DIRECT_WORK_LIMIT: u128 = 1 << 22;

/// How a convolution was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvolutionRoute {
    Direct,
    /// FFT with the stated worst-case rounding radius.
    Fft { radius: f64 },
}

/// Worst-case `ℓ∞` error of an FFT convolution of length `2^log_len` whose
/// inputs have Euclidean norms `norm_a` and `norm_b`.
///
/// This is Percival's bound with unit roundoff `2^-53` and twiddle error taken
/// as four units, doubled for margin.
pub fn fft_error_radius(norm_a: f64, norm_b: f64, log_len: u32) -> f64 {
    let eps = f64::EPSILON / 2.0;
    let beta = 4.0 * eps;
    let n = f64::from(log_len);
    let growth = (3.0 * n) * (1.0 + eps).ln()
        + (3.0 * n + 1.0) * (1.0 + eps * 5f64.sqrt()).ln()
        + (3.0 * n) * (1.0 + beta).ln();
    2.0 * norm_a * norm_b * growth.exp_m1()
}

/// `c[s] = Σ_{i+j=s} a[i]·b[j]`, exactly.
pub fn convolve(a: &[u64], b: &[u64]) -> (Vec<u128>, ConvolutionRoute) {
    if a.is_empty() || b.is_empty() {
        return (Vec::new(), ConvolutionRoute::Direct);
    }
    let out_len = a.len() + b.len() - 1;
    let nnz_a = a.iter().filter(|&&x| x != 0).count() as u128;
    let nnz_b = b.iter().filter(|&&x| x != 0).count() as u128;
    if nnz_a * nnz_b <= DIRECT_WORK_LIMIT {
        return (convolve_direct(a, b), ConvolutionRoute::Direct);
    }
    let fft_len = out_len.next_power_of_two();
    let log_len = fft_len.trailing_zeros();
    let norm = |v: &[u64]| v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    let radius = fft_error_radius(norm(a), norm(b), log_len);
    let max_exact = 2f64.powi(52);
    let peak = a.iter().copied().max().unwrap_or(0) as f64
        * b.iter().copied().max().unwrap_or(0) as f64
        * a.len().min(b.len()) as f64;
    if radius >= 0.5 || peak >= max_exact {
        return (convolve_direct(a, b), ConvolutionRoute::Direct);
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);
    let lift = |v: &[u64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
        for (slot, &x) in buf.iter_mut().zip(v) {
            slot.re = x as f64;
        }
        buf
    };
    let mut fa = lift(a);
    forward.process(&mut fa);
    let same = std::ptr::eq(a, b);
    if same {
        for z in fa.iter_mut() {
            *z = *z * *z;
        }
    } else {
        let mut fb = lift(b);
        forward.process(&mut fb);
        for (za, zb) in fa.iter_mut().zip(&fb) {
            *za *= zb;
        }
    }
    inverse.process(&mut fa);
    let scale = 1.0 / fft_len as f64;
    let out = fa[..out_len]
        .iter()
        .map(|z| (z.re * scale).round().max(0.0) as u128)
        .collect();
    (out, ConvolutionRoute::Fft { radius })
}

/// Direct `O(nnz(a)·nnz(b))` convolution.
pub fn convolve_direct(a: &[u64], b: &[u64]) -> Vec<u128> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    let nz_b: Vec<(usize, u128)> = b
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x != 0)
        .map(|(j, &x)| (j, x as u128))
        .collect();
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let x = x as u128;
        for &(j, y) in &nz_b {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_inputs_are_direct() {
        let (c, route) = convolve(&[1, 2, 3], &[4, 5]);
        assert_eq!(c, vec![4, 13, 22, 15]);
        assert_eq!(route, ConvolutionRoute::Direct);
    }

    #[test]
    fn fft_route_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<u64> = (0..6000).map(|_| u64::from(rng.random_bool(0.6))).collect();
        let b: Vec<u64> = (0..5000).map(|_| rng.random_range(0..4)).collect();
        let (c, route) = convolve(&a, &b);
        assert!(matches!(route, ConvolutionRoute::Fft { radius } if radius < 0.5));
        assert_eq!(c, convolve_direct(&a, &b));
    }

    #[test]
    fn self_convolution_of_indicator() {
        let a = vec![1u64; 4000];
        let (c, _) = convolve(&a, &a);
        for (s, &v) in c.iter().enumerate() {
            let expected = (s.min(2 * 3999 - s) + 1) as u128;
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn huge_values_fall_back_to_direct() {
        let a = vec![u64::MAX >> 8; 3000];
        let (c, route) = convolve(&a, &a);
        assert_eq!(route, ConvolutionRoute::Direct);
        assert_eq!(c[0], (a[0] as u128) * (a[0] as u128));
    }
}
