//! Betti numbers of the free 2-step nilpotent group `H(n)` from
//! self-conjugate Young diagrams and the hook-content formula.
//!
//! `a_i = Σ_{f+g=i} Σ_λ Π_{(s,t)∈λ} (n + t - s) / h(s,t)`, where `λ` runs
//! over self-conjugate diagrams with `f + 2g` boxes and `f` diagonal boxes.
//! This is computed without any linear algebra, so it is an independent
//! check on the Koszul route.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HookError {
    #[error("hook-content product for {0:?} is not an integer")]
    NonIntegerResult(Vec<usize>),
    #[error("{0:?} is not a self-conjugate partition")]
    NotSelfConjugate(Vec<usize>),
    #[error("n must be at least 1")]
    ZeroRank,
}

/// A partition equal to its own transpose.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelfConjugatePartition {
    parts: Vec<usize>,
}

fn transpose(parts: &[usize]) -> Vec<usize> {
    let cols = parts.first().copied().unwrap_or(0);
    (1..=cols).map(|c| parts.iter().filter(|&&p| p >= c).count()).collect()
}

impl SelfConjugatePartition {
    pub fn new(parts: Vec<usize>) -> Result<Self, HookError> {
        let valid = parts.iter().all(|&p| p > 0) && parts.windows(2).all(|w| w[0] >= w[1]) && transpose(&parts) == parts;
        if !valid {
            return Err(HookError::NotSelfConjugate(parts));
        }
        Ok(SelfConjugatePartition { parts })
    }

    /// The diagram whose diagonal hooks have the given (strictly
    /// decreasing, odd) lengths.
    fn from_hooks(hooks: &[usize]) -> Self {
        let arms: Vec<usize> = hooks.iter().map(|h| (h - 1) / 2).collect();
        let f = arms.len();
        let mut parts: Vec<usize> = (0..f).map(|k| k + 1 + arms[k]).collect();
        let depth = arms.first().map_or(0, |a| a + 1);
        for row in f..depth {
            // row index 0-based; hook k reaches rows k..=k+arm_k
            parts.push((0..f).filter(|&k| k + arms[k] >= row).count());
        }
        SelfConjugatePartition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of cells `(i, i)`.
    pub fn diagonal(&self) -> usize {
        self.parts.iter().enumerate().filter(|(i, &p)| p > *i).count()
    }

    /// Hook length at the 1-based cell `(s, t)`.
    pub fn hook_length(&self, s: usize, t: usize) -> usize {
        let arm = self.parts[s - 1] - t;
        let leg = self.parts[s..].iter().filter(|&&p| p >= t).count();
        arm + leg + 1
    }
}

/// Strictly decreasing odd numbers, `count` of them, summing to `size`,
/// in reverse lexicographic order.
fn distinct_odd_parts(size: usize, count: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if count == 0 {
        if size == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    // the smallest possible sum of `count` distinct odd parts is count^2
    if size < count * count {
        return;
    }
    let mut h = max.min(size);
    if h % 2 == 0 {
        h = h.saturating_sub(1);
    }
    while h >= 2 * count - 1 {
        prefix.push(h);
        distinct_odd_parts(size - h, count - 1, h.saturating_sub(2), prefix, out);
        prefix.pop();
        if h < 2 {
            break;
        }
        h -= 2;
    }
}

/// All self-conjugate partitions with `size` boxes and `diagonal` diagonal
/// boxes, via their decomposition into diagonal hooks.
pub fn enumerate_self_conjugate(size: usize, diagonal: usize) -> Vec<SelfConjugatePartition> {
    let mut hooks = Vec::new();
    distinct_odd_parts(size, diagonal, size, &mut Vec::new(), &mut hooks);
    hooks.iter().map(|h| SelfConjugatePartition::from_hooks(h)).collect()
}

/// `Π (n + t - s) / h(s, t)` over the cells of `λ`, evaluated exactly.
pub fn hook_content_dimension(lambda: &SelfConjugatePartition, n: usize) -> Result<BigUint, HookError> {
    if n == 0 {
        return Err(HookError::ZeroRank);
    }
    if lambda.parts.len() > n {
        return Ok(BigUint::zero());
    }
    let mut num = BigInt::one();
    let mut den = BigUint::one();
    for (s0, &len) in lambda.parts.iter().enumerate() {
        let s = s0 + 1;
        for t in 1..=len {
            num *= BigInt::from(n as i64 + t as i64 - s as i64);
            den *= BigUint::from(lambda.hook_length(s, t));
        }
    }
    let (q, r) = num.div_rem(&BigInt::from(den));
    if !r.is_zero() || q.is_negative() {
        return Err(HookError::NonIntegerResult(lambda.parts.clone()));
    }
    Ok(q.magnitude().clone())
}

/// Betti numbers `a_0..a_m` of `H(n)`, `m = C(n+1, 2)`.
pub fn unp_betti(n: usize) -> Result<Vec<BigUint>, HookError> {
    if n == 0 {
        return Err(HookError::ZeroRank);
    }
    let m = n * (n + 1) / 2;
    (0..=m)
        .map(|i| {
            let mut a = BigUint::zero();
            for f in 0..=i {
                let g = i - f;
                for lambda in enumerate_self_conjugate(f + 2 * g, f) {
                    a += hook_content_dimension(&lambda, n)?;
                }
            }
            Ok(a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// All partitions of `n`, by brute force.
    fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in (1..=max.min(n)).rev() {
            for mut rest in partitions(n - first, first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    fn scan(size: usize, diagonal: usize) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = partitions(size, size)
            .into_iter()
            .filter(|p| transpose(p) == *p)
            .filter(|p| p.iter().enumerate().filter(|(i, &x)| x > *i).count() == diagonal)
            .collect();
        v.sort();
        v
    }

    fn sc(parts: &[usize]) -> SelfConjugatePartition {
        SelfConjugatePartition::new(parts.to_vec()).unwrap()
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_self_conjugate(3, 1), vec![sc(&[2, 1])]);
        assert_eq!(enumerate_self_conjugate(1, 1), vec![sc(&[1])]);
        for d in 0..4 {
            assert!(enumerate_self_conjugate(2, d).is_empty());
        }
        assert_eq!(enumerate_self_conjugate(0, 0).len(), 1);
        assert_eq!(enumerate_self_conjugate(4, 2), vec![sc(&[2, 2])]);
    }

    #[test]
    fn enumeration_matches_exhaustive_scan() {
        for size in 0..=16 {
            for diagonal in 0..=4 {
                let mut got: Vec<Vec<usize>> = enumerate_self_conjugate(size, diagonal)
                    .into_iter()
                    .map(|p| p.parts)
                    .collect();
                got.sort();
                assert_eq!(got, scan(size, diagonal), "size {size}, diagonal {diagonal}");
            }
        }
    }

    #[test]
    fn partition_invariants() {
        let p = sc(&[3, 2, 1]);
        assert_eq!(p.size(), 6);
        assert_eq!(p.diagonal(), 2);
        assert_eq!(p.hook_length(1, 1), 5);
        assert!(SelfConjugatePartition::new(vec![2]).is_err());
        assert!(SelfConjugatePartition::new(vec![1, 2]).is_err());
    }

    #[test]
    fn hook_content_examples() {
        for n in 1..10u64 {
            assert_eq!(hook_content_dimension(&sc(&[1]), n as usize).unwrap(), BigUint::from(n));
            let expected = n * (n + 1) * (n - 1) / 3;
            assert_eq!(hook_content_dimension(&sc(&[2, 1]), n as usize).unwrap(), BigUint::from(expected));
        }
        assert!(hook_content_dimension(&sc(&[2, 1]), 1).unwrap().is_zero());
        assert_eq!(hook_content_dimension(&sc(&[]), 3).unwrap(), BigUint::one());
        assert_eq!(hook_content_dimension(&sc(&[1]), 0), Err(HookError::ZeroRank));
    }

    #[test]
    fn unp_examples() {
        assert_eq!(unp_betti(1).unwrap(), big(&[1, 1]));
        assert_eq!(unp_betti(2).unwrap(), big(&[1, 2, 2, 1]));
        assert_eq!(unp_betti(3).unwrap(), big(&[1, 3, 8, 12, 8, 3, 1]));
        assert_eq!(&unp_betti(4).unwrap()[..4], big(&[1, 4, 20, 56]).as_slice());
    }

    #[test]
    fn closed_forms() {
        for n in 1..=8u64 {
            let a = unp_betti(n as usize).unwrap();
            assert_eq!(a[1], BigUint::from(n));
            if a.len() > 2 {
                assert_eq!(a[2], BigUint::from(n * (n + 1) * (n - 1) / 3));
            }
            if a.len() > 3 {
                assert_eq!(a[3], BigUint::from(n * (n * n - 1) * (3 * n - 4) * (n + 3) / 60));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn palindrome_and_total(n in 1usize..=8) {
            let a = unp_betti(n).unwrap();
            let m = n * (n + 1) / 2;
            prop_assert_eq!(a.len(), m + 1);
            prop_assert!(a[m].is_one());
            for i in 0..=m {
                prop_assert_eq!(&a[i], &a[m - i]);
            }
            let total: BigUint = a.iter().sum();
            prop_assert!(total <= BigUint::one() << m);
        }
    }
}
