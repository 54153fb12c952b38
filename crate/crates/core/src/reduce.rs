//! Order-fixed summation, so totals do not depend on the thread count.

const LEAF: usize = 256;

/// Pairwise sum over a fixed binary split of the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    if xs.len() > 16 * LEAF {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Maximum of finite values; NaN anywhere propagates as NaN.
pub fn max_value(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut m = 0.0f64;
    for x in xs {
        if x.is_nan() {
            return f64::NAN;
        }
        m = m.max(x);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (0..100_000).map(|i| (i % 17) as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), naive);
    }

    #[test]
    fn nan_propagates_in_max() {
        assert!(max_value([1.0, f64::NAN, 2.0]).is_nan());
        assert_eq!(max_value([1.0, 3.0, 2.0]), 3.0);
    }
}
