//! Poincaré polynomials and series of the form `q(t) / (1 - t²)^v`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::koszul::BettiTable;

/// Polynomial with nonnegative integer coefficients, index = degree, no
/// trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoincarePolynomial {
    coefficients: Vec<BigUint>,
}

impl PoincarePolynomial {
    pub fn new(coefficients: Vec<BigUint>) -> Self {
        let mut coefficients = coefficients;
        while coefficients.last().is_some_and(Zero::is_zero) {
            coefficients.pop();
        }
        PoincarePolynomial { coefficients }
    }

    pub fn from_dims<T: Copy + Into<u64>>(dims: &[T]) -> Self {
        Self::new(dims.iter().map(|&d| BigUint::from(d.into())).collect())
    }

    pub fn from_betti(table: &BettiTable) -> Self {
        Self::new(table.dims().iter().map(|&d| BigUint::from(d)).collect())
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    pub fn coefficient(&self, d: usize) -> BigUint {
        self.coefficients.get(d).cloned().unwrap_or_default()
    }

    /// Degree of the polynomial; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn eval_minus_one(&self) -> BigInt {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(d, c)| {
                let c = BigInt::from(c.clone());
                if d % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum()
    }
}

impl std::fmt::Display for PoincarePolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| match (d, c.is_one()) {
                (0, _) => c.to_string(),
                (1, true) => "t".to_string(),
                (1, false) => format!("{c}t"),
                (_, true) => format!("t^{d}"),
                (_, false) => format!("{c}t^{d}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// `numerator / (1 - t²)^denominator_exponent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoincareSeries {
    pub numerator: PoincarePolynomial,
    pub denominator_exponent: usize,
}

impl PoincareSeries {
    pub fn new(numerator: PoincarePolynomial, denominator_exponent: usize) -> Self {
        PoincareSeries {
            numerator,
            denominator_exponent,
        }
    }

    /// First `n + 1` coefficients of the power series.
    pub fn expand(&self, n: usize) -> Vec<BigUint> {
        expand(self, n)
    }
}

/// `C(k + v - 1, v - 1)` for `k = 0..=kmax`: the coefficients of
/// `1 / (1 - s)^v`.
fn negative_binomial_row(v: usize, kmax: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut c = BigUint::one();
    for k in 0..=kmax {
        if v == 0 {
            out.push(if k == 0 { BigUint::one() } else { BigUint::zero() });
            continue;
        }
        out.push(c.clone());
        // C(k + v, v - 1) = C(k + v - 1, v - 1) * (k + v) / (k + 1)
        c = c * BigUint::from(k + v) / BigUint::from(k + 1);
    }
    out
}

pub fn expand(s: &PoincareSeries, n: usize) -> Vec<BigUint> {
    let weights = negative_binomial_row(s.denominator_exponent, n / 2);
    (0..=n)
        .map(|d| {
            (0..=d / 2)
                .map(|k| s.numerator.coefficient(d - 2 * k) * &weights[k])
                .sum()
        })
        .collect()
}

/// Multiplies a truncated power series by `(1 - t²)^v`, truncating at the
/// same degree. Used to check [`expand`] by exact division.
pub fn multiply_by_denominator(coeffs: &[BigUint], v: usize) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = coeffs.iter().map(|c| BigInt::from(c.clone())).collect();
    for _ in 0..v {
        for d in (2..out.len()).rev() {
            let prev = out[d - 2].clone();
            out[d] -= prev;
        }
    }
    out
}

/// Consistency checks on a numerator for an extension with `w` and `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesChecks {
    pub palindrome: bool,
    pub euler_zero: bool,
    pub degree_match: bool,
}

impl SeriesChecks {
    pub fn all(&self) -> bool {
        self.palindrome && self.euler_zero && self.degree_match
    }
}

pub fn checks(q: &PoincarePolynomial, w: usize, r: usize) -> SeriesChecks {
    let n = w + r;
    let palindrome = (0..=n).all(|d| q.coefficient(d) == q.coefficient(n - d)) && q.degree().is_none_or(|d| d <= n);
    // q(-1) = 0 is only forced when there is at least one e-variable
    let euler_zero = w == 0 || q.eval_minus_one().is_zero();
    SeriesChecks {
        palindrome,
        euler_zero,
        degree_match: q.degree() == Some(n),
    }
}

/// Weak growth within each parity class past the numerator degree. Holds
/// whenever the denominator exponent is positive.
pub fn expansion_is_monotone(coeffs: &[BigUint], numerator_degree: usize) -> bool {
    (numerator_degree + 2..coeffs.len()).all(|d| coeffs[d] >= coeffs[d - 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(c: &[u64]) -> PoincarePolynomial {
        PoincarePolynomial::from_dims(c)
    }

    fn big(c: &[u64]) -> Vec<BigUint> {
        c.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn from_dims_examples() {
        assert_eq!(poly(&[1, 2, 2, 1]).to_string(), "1 + 2t + 2t^2 + t^3");
        assert_eq!(poly(&[1]).to_string(), "1");
        assert_eq!(poly(&[1, 2, 1, 0, 0]).coefficients(), big(&[1, 2, 1]).as_slice());
        assert_eq!(poly(&[0, 0]).degree(), None);
    }

    #[test]
    fn expand_examples() {
        let s = PoincareSeries::new(poly(&[1, 2, 2, 1]), 3);
        assert_eq!(s.expand(5), big(&[1, 2, 5, 7, 12, 15]));
        let s = PoincareSeries::new(poly(&[1]), 1);
        assert_eq!(s.expand(4), big(&[1, 0, 1, 0, 1]));
        let s = PoincareSeries::new(poly(&[1, 3, 8, 12, 8, 3, 1]), 0);
        assert_eq!(s.expand(8), big(&[1, 3, 8, 12, 8, 3, 1, 0, 0]));
    }

    #[test]
    fn expand_oracle() {
        // brute force: multiply q by (1 + t^2 + t^4 + ...) v times
        let q = [1u64, 3, 8, 12, 8, 3, 1];
        let v = 6;
        let n = 20;
        let mut acc: Vec<u64> = (0..=n).map(|d| q.get(d).copied().unwrap_or(0)).collect();
        for _ in 0..v {
            for d in 2..=n {
                acc[d] += acc[d - 2];
            }
        }
        let s = PoincareSeries::new(poly(&q), v);
        assert_eq!(s.expand(n), big(&acc));
    }

    #[test]
    fn checks_examples() {
        let c = checks(&poly(&[1, 2, 2, 1]), 2, 1);
        assert!(c.palindrome && c.euler_zero && c.degree_match);
        let c = checks(&poly(&[1, 3, 8, 12, 8, 3, 1]), 3, 3);
        assert!(c.all());
        let c = checks(&poly(&[1, 0, 1]), 1, 1);
        assert!(c.palindrome);
        assert!(!c.euler_zero);
        assert!(c.degree_match);
        let c = checks(&poly(&[1, 2, 2]), 2, 1);
        assert!(!c.palindrome && !c.degree_match);
    }

    proptest! {
        #[test]
        fn division_recovers_numerator(q in prop::collection::vec(0u64..1000, 1..8), v in 0usize..6, n in 0usize..30) {
            let p = poly(&q);
            let s = PoincareSeries::new(p.clone(), v);
            let e = s.expand(n);
            let back = multiply_by_denominator(&e, v);
            for d in 0..=n {
                prop_assert_eq!(back[d].clone(), BigInt::from(p.coefficient(d)));
            }
            if let (Some(deg), true) = (p.degree(), v > 0) {
                prop_assert!(expansion_is_monotone(&e, deg));
            }
        }
    }
}
