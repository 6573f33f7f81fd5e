//! Fixed-order pairwise summation.
//!
//! Every reduction in the crate goes through these helpers so that sums are
//! reproducible bit for bit, independent of how the terms were produced.

const LEAF: usize = 32;

/// Pairwise (tree) sum of a slice with a fixed split rule.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise sum of `term(i)` for `i in 0..n`, same tree as [`pairwise_sum`].
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        if hi - lo <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, n, &term)
}
