//! Deterministic summation helpers.
//!
//! All norms and means in this crate go through these routines so results
//! are reproducible across runs and thread counts. `pairwise_sum` uses a
//! perfect binary reduction tree, which makes sums of 2^m identical values
//! exact (each internal add doubles the value, and scaling by a power of
//! two is exact in IEEE arithmetic). `sorted_pairwise_sum` additionally
//! sorts, so the result depends only on the multiset of summands and is
//! bitwise invariant under permutations of the input.

/// Pairwise (binary-tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut buf = values.to_vec();
    let mut n = buf.len();
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            buf[i] = buf[2 * i] + buf[2 * i + 1];
        }
        if n % 2 == 1 {
            buf[half] = buf[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    buf[0]
}

/// Pairwise summation of `f(v)` over a slice, sorted before accumulation
/// so the result is bitwise permutation-invariant.
pub fn sorted_pairwise_map_sum(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut buf: Vec<f64> = values.iter().map(|&v| f(v)).collect();
    buf.sort_unstable_by(f64::total_cmp);
    pairwise_sum_in_place(&mut buf)
}

fn pairwise_sum_in_place(buf: &mut [f64]) -> f64 {
    let mut n = buf.len();
    if n == 0 {
        return 0.0;
    }
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            buf[i] = buf[2 * i] + buf[2 * i + 1];
        }
        if n % 2 == 1 {
            buf[half] = buf[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    buf[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(sorted_pairwise_map_sum(&[], |v| v), 0.0);
    }

    #[test]
    fn constant_power_of_two_sum_is_exact() {
        // 2^k copies of any value sum exactly under a perfect tree.
        let v = vec![3.7_f64; 4096];
        assert_eq!(pairwise_sum(&v), 3.7 * 4096.0);
    }

    #[test]
    fn sorted_sum_is_permutation_invariant() {
        let mut v: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let s1 = sorted_pairwise_map_sum(&v, |x| x);
        v.reverse();
        v.rotate_left(313);
        let s2 = sorted_pairwise_map_sum(&v, |x| x);
        assert_eq!(s1.to_bits(), s2.to_bits());
    }

    #[test]
    fn agrees_with_naive_sum() {
        let v: Vec<f64> = (1..=100).map(|i| 1.0 / i as f64).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }
}
