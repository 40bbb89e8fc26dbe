//! Three-term progressions among the cells of Cantor approximations.
//!
//! Cells are intervals of width `1/M`. The midpoint set of cells `p` and `r`
//! is `[(p+r)/2M, (p+r+2)/2M)`, which meets cell `q` exactly when
//! `|p + r - 2q| ≤ 1`; the default slack of 2 also admits the touching
//! boundary cases, so a cell triple is a progression "up to slack" when
//! `|p + r - 2q| ≤ slack`.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::convolution::convolve;
use crate::error::{Result, capacity, domain};
use crate::measure::{LevelApproximation, step_density};
use crate::spectral::{LambdaEstimate, Provenance, coefficient_tail_bound, fourier_table, lambda_spatial_step};

pub const DEFAULT_SLACK: u64 = 2;
/// Most witnesses returned by one call.
pub const WITNESS_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct APWitness {
    pub level: u32,
    pub p: u64,
    pub q: u64,
    pub r: u64,
    /// Deepest level holding a descendant triple within the slack.
    pub persistence_depth: u32,
    /// `p + r = 2q`.
    pub exact: bool,
}

/// Cells `q` with `|s - 2q| ≤ slack`, as a range of indices into `cells`.
fn middle_range(cells: &[u64], s: u64, slack: u64) -> std::ops::Range<usize> {
    let lo = s.saturating_sub(slack).div_ceil(2);
    let hi = (s + slack) / 2;
    cells.partition_point(|&c| c < lo)..cells.partition_point(|&c| c <= hi)
}

/// Counts ordered `(p, q, r)` with `|p + r - 2q| ≤ slack`, trivial triples
/// included, and lists up to [`WITNESS_CAP`] witnesses with `p ≠ r`.
pub fn brute_force_triples(approx: &LevelApproximation, slack: u64) -> Result<(u64, Vec<APWitness>)> {
    let cells = approx.cells();
    if cells.len() > 5000 {
        return capacity(format!("{} cells exceed the brute-force limit of 5000", cells.len()));
    }
    let mut count = 0u64;
    let mut witnesses = Vec::new();
    for &p in cells {
        for &r in cells {
            let range = middle_range(cells, p + r, slack);
            count += range.len() as u64;
            if p != r {
                for &q in &cells[range] {
                    if witnesses.len() < WITNESS_CAP {
                        witnesses.push(APWitness {
                            level: approx.level(),
                            p,
                            q,
                            r,
                            persistence_depth: approx.level(),
                            exact: p + r == 2 * q,
                        });
                    }
                }
            }
        }
    }
    witnesses.sort_by_key(|w| (w.p, w.q, w.r));
    Ok((count, witnesses))
}

/// The same count from the linear self-convolution of the cell indicator:
/// `Σ_{q ∈ A} Σ_{|e| ≤ slack} (1_A * 1_A)(2q + e)`.
pub fn count_triples_conv(approx: &LevelApproximation, slack: u64) -> Result<u64> {
    let m = approx.modulus();
    if m > 1 << 20 {
        return capacity(format!("modulus {m} exceeds 2^20"));
    }
    let cells = approx.cells();
    if cells.is_empty() {
        return Ok(0);
    }
    let mut indicator = vec![0u64; m as usize];
    for &p in cells {
        indicator[p as usize] = 1;
    }
    let (conv, _) = convolve(&indicator, &indicator);
    let total: u128 = cells
        .par_iter()
        .map(|&q| {
            let lo = (2 * q).saturating_sub(slack) as usize;
            let hi = ((2 * q + slack) as usize).min(conv.len() - 1);
            conv[lo..=hi].iter().sum::<u128>()
        })
        .sum();
    Ok(total as u64)
}

fn children(cells: &[u64], parent: u64, n: u64) -> &[u64] {
    let lo = cells.partition_point(|&c| c < parent * n);
    let hi = cells.partition_point(|&c| c < (parent + 1) * n);
    &cells[lo..hi]
}

/// Index of the deepest level in `chain[idx..]` reached by descendants of `(p, q, r)`.
fn descend(chain: &[LevelApproximation], ratios: &[u64], idx: usize, (p, q, r): (u64, u64, u64), slack: u64) -> usize {
    let last = chain.len() - 1;
    if idx == last {
        return idx;
    }
    let next = chain[idx + 1].cells();
    let n = ratios[idx];
    let (cp, cq, cr) = (children(next, p, n), children(next, q, n), children(next, r, n));
    let mut best = idx;
    for &p2 in cp {
        for &r2 in cr {
            for &q2 in &cq[middle_range(cq, p2 + r2, slack)] {
                best = best.max(descend(chain, ratios, idx + 1, (p2, q2, r2), slack));
                if best == last {
                    return best;
                }
            }
        }
    }
    best
}

/// Nontrivial slack-triples of `chain[0]`, each with the deepest level to
/// which some descendant triple survives, deepest first.
///
/// Every level must refine the previous one by an integer factor. Pass the
/// chain from the first level that has more than one cell.
pub fn find_persistent_triples(chain: &[LevelApproximation], slack: u64) -> Result<Vec<APWitness>> {
    let Some(first) = chain.first() else {
        return Ok(Vec::new());
    };
    let mut ratios = Vec::with_capacity(chain.len());
    for w in chain.windows(2) {
        let (a, b) = (w[0].modulus(), w[1].modulus());
        if b % a != 0 {
            return domain(format!("modulus {b} does not refine {a}"));
        }
        ratios.push(b / a);
    }
    let (_, roots) = brute_force_triples(first, slack)?;
    let mut out: Vec<APWitness> = roots
        .into_par_iter()
        .map(|mut w| {
            let idx = descend(chain, &ratios, 0, (w.p, w.q, w.r), slack);
            w.persistence_depth = chain[idx].level();
            w
        })
        .collect();
    out.sort_by(|a, b| {
        b.persistence_depth
            .cmp(&a.persistence_depth)
            .then((a.p, a.q, a.r).cmp(&(b.p, b.q, b.r)))
    });
    Ok(out)
}

/// Slack-triples with `p ≠ r`: the convolution count less the trivial
/// triples `(p, q, p)`, which need `|p - q| ≤ slack/2`.
pub fn count_nontrivial_triples(approx: &LevelApproximation, slack: u64) -> Result<u64> {
    let cells = approx.cells();
    let total = if approx.modulus() <= 1 << 20 {
        count_triples_conv(approx, slack)?
    } else {
        brute_force_triples(approx, slack)?.0
    };
    let h = slack / 2;
    let trivial: u64 = cells
        .iter()
        .map(|&p| (cells.partition_point(|&c| c <= p + h) - cells.partition_point(|&c| c + h < p)) as u64)
        .sum();
    Ok(total - trivial)
}

/// `(level, witness_count, persistent_count)` rows: nontrivial triples of
/// each level, and how many of the roots persist to it.
pub fn witness_summary(chain: &[LevelApproximation], witnesses: &[APWitness], slack: u64) -> Result<Vec<(u32, u64, u64)>> {
    chain
        .iter()
        .map(|a| {
            let count = count_nontrivial_triples(a, slack)?;
            let persistent = witnesses.iter().filter(|w| w.persistence_depth >= a.level()).count() as u64;
            Ok((a.level(), count, persistent))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaVsCount {
    pub lambda: LambdaEstimate,
    /// Exact spatial value of the step density's `Λ`.
    #[serde(skip)]
    pub normalized_count: BigRational,
    pub normalized_count_f64: f64,
    /// `|series - exact| ≤ tail`.
    pub agree: bool,
}

/// The Fourier series `Σ_{|k|≤cutoff} f̂(k)² f̂(-2k)` of the level's step
/// density against its exact spatial value, with the rigorous coefficient
/// tail bound.
pub fn lambda_vs_count(approx: &LevelApproximation, cutoff: u64) -> Result<LambdaVsCount> {
    if !approx.in_middle_third() {
        return domain("support is not inside [1/3, 2/3]; apply rescale_to_middle_third first");
    }
    if cutoff == 0 {
        return domain("cutoff must be at least 1");
    }
    let density = step_density(approx);
    let table = fourier_table::<f64>(approx, 2 * cutoff)?;
    let c = cutoff as i64;
    let (mut re, mut im) = (0.0, 0.0);
    for k in -c..=c {
        let z = table.get(k) * table.get(k) * table.get(-2 * k);
        re += z.re;
        im += z.im;
    }
    let tail = coefficient_tail_bound(&density, cutoff)?;
    let exact = lambda_spatial_step(&density)?;
    let exact_f64 = exact.to_f64().unwrap_or(f64::NAN);
    let lambda = LambdaEstimate::new(re, im, tail, cutoff, Provenance::Certified);
    Ok(LambdaVsCount {
        agree: (re - exact_f64).abs() <= tail + 1e-12 * (1.0 + exact_f64.abs()),
        lambda,
        normalized_count: exact,
        normalized_count_f64: exact_f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(m: u64, cells: &[u64]) -> LevelApproximation {
        LevelApproximation::new(1, m, cells.to_vec()).unwrap()
    }

    #[test]
    fn small_counts() {
        let (c, w) = brute_force_triples(&approx(3, &[0, 1, 2]), 0).unwrap();
        assert_eq!(c, 5);
        assert_eq!(
            w.iter().map(|w| (w.p, w.q, w.r)).collect::<Vec<_>>(),
            vec![(0, 1, 2), (2, 1, 0)]
        );
        assert!(w.iter().all(|w| w.exact));
        let (c, w) = brute_force_triples(&approx(2, &[0, 1]), 0).unwrap();
        assert_eq!((c, w.len()), (2, 0));
        assert_eq!(count_triples_conv(&approx(3, &[0, 1, 2]), 0).unwrap(), 5);
        assert!(LevelApproximation::new(1, 7, vec![]).is_err());
    }

    #[test]
    fn full_set_parity_count() {
        for m in [1u64, 2, 7, 10, 33] {
            let a = LevelApproximation::full(0, m).unwrap();
            assert_eq!(count_triples_conv(&a, 0).unwrap(), (m * m).div_ceil(2));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn convolution_matches_brute_force(
            m in 1u64..400,
            picks in proptest::collection::vec(0u64..400, 1..200),
            slack in 0u64..3,
        ) {
            let mut cells: Vec<u64> = picks.into_iter().map(|p| p % m).collect();
            cells.sort_unstable();
            cells.dedup();
            let a = approx(m, &cells);
            prop_assert_eq!(count_triples_conv(&a, slack).unwrap(), brute_force_triples(&a, slack).unwrap().0);
        }

        #[test]
        fn nontrivial_count_matches_witnesses(
            m in 1u64..300,
            picks in proptest::collection::vec(0u64..300, 1..60),
            slack in 0u64..4,
        ) {
            let mut cells: Vec<u64> = picks.into_iter().map(|p| p % m).collect();
            cells.sort_unstable();
            cells.dedup();
            let a = approx(m, &cells);
            let listed = brute_force_triples(&a, slack).unwrap().1.len() as u64;
            prop_assert_eq!(count_nontrivial_triples(&a, slack).unwrap(), listed);
        }
    }

    #[test]
    fn full_chain_persists() {
        let chain: Vec<_> = (1..=3).map(|j| LevelApproximation::full(j, 4u64.pow(j)).unwrap()).collect();
        let w = find_persistent_triples(&chain, 0).unwrap();
        assert!(!w.is_empty());
        assert!(w.iter().all(|w| w.persistence_depth == 3 && w.exact));
    }

    #[test]
    fn single_cells_have_no_witness() {
        let chain: Vec<_> = (1..=3)
            .map(|j| LevelApproximation::new(j, 4u64.pow(j), vec![4u64.pow(j) - 1]).unwrap())
            .collect();
        assert!(find_persistent_triples(&chain, 2).unwrap().is_empty());
    }

    #[test]
    fn persistence_is_exhaustive() {
        // Level 2 keeps only children that break every progression but one.
        let l1 = approx(4, &[0, 1, 2, 3]);
        let l2 = LevelApproximation::new(2, 16, vec![0, 5, 10, 14]).unwrap();
        let w = find_persistent_triples(&[l1, l2.clone()], 0).unwrap();
        for wit in &w {
            let alive = brute_force_triples(&l2, 0)
                .unwrap()
                .1
                .iter()
                .any(|c| c.p / 4 == wit.p && c.q / 4 == wit.q && c.r / 4 == wit.r);
            assert_eq!(wit.persistence_depth == 2, alive, "{wit:?}");
        }
        assert!(w.windows(2).all(|p| p[0].persistence_depth >= p[1].persistence_depth));
    }

    #[test]
    fn slack_monotone() {
        let l1 = approx(8, &[0, 2, 3, 5, 7]);
        let l2 = LevelApproximation::new(2, 64, vec![1, 17, 20, 26, 42, 45, 58, 61]).unwrap();
        let chain = [l1, l2];
        let key = |w: &APWitness| (w.p, w.q, w.r, w.persistence_depth);
        let a: Vec<_> = find_persistent_triples(&chain, 1).unwrap().iter().map(key).collect();
        let b: Vec<_> = find_persistent_triples(&chain, 2).unwrap().iter().map(key).collect();
        for t in &a {
            assert!(b.iter().any(|u| u.0 == t.0 && u.1 == t.1 && u.2 == t.2 && u.3 >= t.3));
        }
    }

    #[test]
    fn uniform_middle_third() {
        let a = LevelApproximation::new(1, 3, vec![1]).unwrap();
        let r = lambda_vs_count(&a, 1 << 12).unwrap();
        assert_eq!(r.normalized_count, BigRational::new(3.into(), 2.into()));
        assert!(r.agree, "{r:?}");
        let outside = LevelApproximation::new(1, 3, vec![0]).unwrap();
        assert!(lambda_vs_count(&outside, 16).is_err());
    }

    #[test]
    fn separated_cells_agree() {
        // Cells 8 and 12 of 27: no cell sits at their midpoint.
        let a = LevelApproximation::new(1, 27, vec![9, 13, 17]).unwrap();
        let r = lambda_vs_count(&a, 1 << 12).unwrap();
        assert!(r.agree && r.lambda.imag.abs() < 1e-12, "{r:?}");
        let b = LevelApproximation::new(1, 27, vec![9, 14]).unwrap();
        let r = lambda_vs_count(&b, 1 << 12).unwrap();
        assert!(r.agree, "{r:?}");
    }
}
