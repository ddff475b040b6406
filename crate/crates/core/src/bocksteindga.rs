//! The bigraded algebra `F_p[ζ_k, ζ_{i,j}] ⊗ Λ(x_k, x_{i,j})` with the
//! Bockstein as a degree-one derivation, and its quotient for `U(n, p)`.
//!
//! Generators are indexed `0..n` for the single-index ones and `n..` for the
//! pairs `(i, j)`, `i < j`, in lexicographic order. Text form: `z1`,
//! `z[1,2]`, `x1`, `x[1,2]`, and `s` in place of `z` after restriction.

use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::extalg::merge_inversions;
use crate::fplin::Prime;

/// Largest `n` with `n + C(n, 2) ≤ 64`.
pub const MAX_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BocksteinError {
    #[error("the Bockstein formulas are only available for p > 3, got p = {0}")]
    PrimeTooSmall(u32),
    #[error("n = {0} is out of range (1..={MAX_N})")]
    RankOutOfRange(usize),
    #[error("operands live in different ambients")]
    AmbientMismatch,
    #[error("parse error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
}

/// `ζ^exps · x_ext`, with the polynomial part written first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BiMonomial {
    pub ext: u64,
    pub exps: Vec<u32>,
}

impl BiMonomial {
    pub fn degree(&self) -> usize {
        self.ext.count_ones() as usize + 2 * self.exps.iter().map(|&e| e as usize).sum::<usize>()
    }
}

impl Ord for BiMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.degree(), Reverse(&self.exps), self.ext).cmp(&(other.degree(), Reverse(&other.exps), other.ext))
    }
}

impl PartialOrd for BiMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigradedElement {
    n: usize,
    p: Prime,
    restricted: bool,
    terms: BTreeMap<BiMonomial, u32>,
}

fn generator_count(n: usize) -> usize {
    n + n * (n.saturating_sub(1)) / 2
}

/// Index of the pair `(i, j)`, 0-based with `i < j`.
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    n + i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn pair_of(n: usize, k: usize) -> (usize, usize) {
    let mut rest = k - n;
    for i in 0..n {
        let row = n - i - 1;
        if rest < row {
            return (i, i + 1 + rest);
        }
        rest -= row;
    }
    unreachable!("generator index out of range")
}

impl BigradedElement {
    pub fn zero(n: usize, p: Prime) -> Result<Self, BocksteinError> {
        if n == 0 || n > MAX_N {
            return Err(BocksteinError::RankOutOfRange(n));
        }
        Ok(BigradedElement {
            n,
            p,
            restricted: false,
            terms: BTreeMap::new(),
        })
    }

    fn like(&self) -> Self {
        BigradedElement {
            n: self.n,
            p: self.p,
            restricted: self.restricted,
            terms: BTreeMap::new(),
        }
    }

    fn monomial(&self, m: BiMonomial, c: u32) -> Self {
        let mut out = self.like();
        out.add_term(m, c);
        out
    }

    pub fn one(n: usize, p: Prime) -> Result<Self, BocksteinError> {
        let z = Self::zero(n, p)?;
        let m = BiMonomial {
            ext: 0,
            exps: vec![0; generator_count(n)],
        };
        Ok(z.monomial(m, 1))
    }

    fn generator(n: usize, p: Prime, k: usize, exterior: bool) -> Result<Self, BocksteinError> {
        let z = Self::zero(n, p)?;
        let mut exps = vec![0; generator_count(n)];
        let ext = if exterior {
            1u64 << k
        } else {
            exps[k] = 1;
            0
        };
        Ok(z.monomial(BiMonomial { ext, exps }, 1))
    }

    fn check_index(n: usize, i: usize) -> Result<(), BocksteinError> {
        if i == 0 || i > n {
            return Err(BocksteinError::Syntax {
                pos: 0,
                message: format!("index {i} outside 1..={n}"),
            });
        }
        Ok(())
    }

    fn check_pair(n: usize, i: usize, j: usize) -> Result<usize, BocksteinError> {
        Self::check_index(n, i)?;
        Self::check_index(n, j)?;
        if i >= j {
            return Err(BocksteinError::Syntax {
                pos: 0,
                message: format!("pair [{i},{j}] needs i < j"),
            });
        }
        Ok(pair_index(n, i - 1, j - 1))
    }

    /// `ζ_i`, 1-based.
    pub fn zeta(n: usize, p: Prime, i: usize) -> Result<Self, BocksteinError> {
        Self::check_index(n, i)?;
        Self::generator(n, p, i - 1, false)
    }

    /// `ζ_{i,j}`, 1-based, `i < j`.
    pub fn zeta_pair(n: usize, p: Prime, i: usize, j: usize) -> Result<Self, BocksteinError> {
        let k = Self::check_pair(n, i, j)?;
        Self::generator(n, p, k, false)
    }

    /// `x_i`, 1-based.
    pub fn x(n: usize, p: Prime, i: usize) -> Result<Self, BocksteinError> {
        Self::check_index(n, i)?;
        Self::generator(n, p, i - 1, true)
    }

    /// `x_{i,j}`, 1-based, `i < j`.
    pub fn x_pair(n: usize, p: Prime, i: usize, j: usize) -> Result<Self, BocksteinError> {
        let k = Self::check_pair(n, i, j)?;
        Self::generator(n, p, k, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BiMonomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree when every term has the same degree; `None` for zero or mixed.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(BiMonomial::degree);
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    fn add_term(&mut self, m: BiMonomial, c: u32) {
        let c = c % self.p.value();
        if c == 0 {
            return;
        }
        let p = self.p;
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = p.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn compatible(&self, other: &Self) -> Result<(), BocksteinError> {
        if self.n != other.n || self.p != other.p || self.restricted != other.restricted {
            return Err(BocksteinError::AmbientMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, BocksteinError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: u32) -> Self {
        let mut out = self.like();
        for (m, &a) in &self.terms {
            out.add_term(m.clone(), self.p.mul(a, c % self.p.value()));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(self.p.value() - 1)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, BocksteinError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, BocksteinError> {
        self.compatible(other)?;
        let mut out = self.like();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                if a.ext & b.ext != 0 {
                    continue;
                }
                let negative = merge_inversions(a.ext, b.ext) % 2 == 1;
                let c = self.p.mul(ca, cb);
                let m = BiMonomial {
                    ext: a.ext | b.ext,
                    exps: a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect(),
                };
                out.add_term(m, if negative { self.p.neg(c) } else { c });
            }
        }
        if out.restricted {
            out = out.reduce_restricted();
        }
        Ok(out)
    }

    /// `β` on a generator index.
    fn bockstein_generator(&self, k: usize, exterior: bool) -> Self {
        let n = self.n;
        let p = self.p;
        if k < n {
            return self.like();
        }
        let (i, j) = pair_of(n, k);
        let gen = |idx: usize, ext: bool| {
            let mut g = Self::generator(n, p, idx, ext).expect("valid index");
            g.restricted = self.restricted;
            g
        };
        let out = if exterior {
            gen(i, true).mul(&gen(j, true)).expect("same ambient").neg()
        } else {
            gen(i, false)
                .mul(&gen(j, true))
                .and_then(|a| a.sub(&gen(j, false).mul(&gen(i, true))?))
                .expect("same ambient")
        };
        if self.restricted {
            out.reduce_restricted()
        } else {
            out
        }
    }

    /// Generators of a monomial in product order: ζ's, then x's ascending.
    fn factors(m: &BiMonomial) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for (k, &e) in m.exps.iter().enumerate() {
            out.extend(std::iter::repeat_n((k, false), e as usize));
        }
        let mut ext = m.ext;
        while ext != 0 {
            out.push((ext.trailing_zeros() as usize, true));
            ext &= ext - 1;
        }
        out
    }

    fn bockstein_monomial(&self, m: &BiMonomial) -> Self {
        let factors = Self::factors(m);
        let gen = |(k, ext): (usize, bool)| {
            let mut g = Self::generator(self.n, self.p, k, ext).expect("valid index");
            g.restricted = self.restricted;
            g
        };
        let mut result = self.like();
        let mut prefix = {
            let mut one = Self::one(self.n, self.p).expect("valid rank");
            one.restricted = self.restricted;
            one
        };
        // β(g_1..g_m) = Σ_j (-1)^{|g_1..g_{j-1}|} g_1..g_{j-1} β(g_j) g_{j+1}..g_m
        let mut odd_prefix = false;
        for (idx, &f) in factors.iter().enumerate() {
            let b = self.bockstein_generator(f.0, f.1);
            if !b.is_zero() {
                let mut term = prefix.mul(&b).expect("same ambient");
                for &g in &factors[idx + 1..] {
                    term = term.mul(&gen(g)).expect("same ambient");
                }
                if odd_prefix {
                    term = term.neg();
                }
                result = result.add(&term).expect("same ambient");
            }
            prefix = prefix.mul(&gen(f)).expect("same ambient");
            odd_prefix ^= f.1;
        }
        result
    }

    fn bockstein_unchecked(&self) -> Self {
        let mut out = self.like();
        for (m, &c) in &self.terms {
            for (t, &d) in &self.bockstein_monomial(m).terms {
                out.add_term(t.clone(), self.p.mul(c, d));
            }
        }
        out
    }

    /// Image in the quotient by `x_{i,j}` and `x_i x_j`, with `ζ` read as `s`.
    pub fn restrict_to_unp(&self) -> Self {
        let mut out = self.reduce_restricted();
        out.restricted = true;
        out
    }

    fn reduce_restricted(&self) -> Self {
        let low = if self.n >= 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let mut out = self.like();
        for (m, &c) in &self.terms {
            if m.ext & !low == 0 && m.ext.count_ones() <= 1 {
                out.add_term(m.clone(), c);
            }
        }
        out
    }

    /// Parses the display grammar: terms `[coeff*]factor*factor...` joined
    /// by `+` or `-`, factors `z1`, `z[1,2]^3`, `x[1,2]`, or `s`/`x` in the
    /// restricted quotient. A bare integer is a scalar.
    pub fn parse(text: &str, n: usize, p: Prime, restricted: bool) -> Result<Self, BocksteinError> {
        let mut out = Self::zero(n, p)?;
        out.restricted = restricted;
        let err = |pos: usize, message: &str| BocksteinError::Syntax {
            pos,
            message: message.to_string(),
        };
        let bytes = text.as_bytes();
        let mut pos = 0;
        let skip_ws = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };
        let number = |pos: &mut usize| -> Option<u64> {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            text[start..*pos].parse().ok()
        };
        skip_ws(&mut pos);
        if text.trim() == "0" {
            return Ok(out);
        }
        let mut first = true;
        while pos < bytes.len() {
            let mut negative = false;
            if bytes[pos] == b'+' || bytes[pos] == b'-' {
                negative = bytes[pos] == b'-';
                pos += 1;
                skip_ws(&mut pos);
            } else if !first {
                return Err(err(pos, "expected '+' or '-'"));
            }
            first = false;
            let mut term = Self::one(n, p)?;
            term.restricted = restricted;
            loop {
                skip_ws(&mut pos);
                let start = pos;
                let Some(&ch) = bytes.get(pos) else {
                    return Err(err(pos, "expected a factor"));
                };
                let factor = if ch.is_ascii_digit() {
                    let v = number(&mut pos).ok_or_else(|| err(start, "bad integer"))?;
                    term.scale((v % p.value() as u64) as u32)
                } else {
                    let exterior = match (ch, restricted) {
                        (b'x', _) => true,
                        (b'z', false) | (b's', true) => false,
                        _ => return Err(err(pos, "unknown generator")),
                    };
                    pos += 1;
                    let g = if bytes.get(pos) == Some(&b'[') {
                        pos += 1;
                        let i = number(&mut pos).ok_or_else(|| err(pos, "expected index"))? as usize;
                        if bytes.get(pos) != Some(&b',') {
                            return Err(err(pos, "expected ','"));
                        }
                        pos += 1;
                        let j = number(&mut pos).ok_or_else(|| err(pos, "expected index"))? as usize;
                        if bytes.get(pos) != Some(&b']') {
                            return Err(err(pos, "expected ']'"));
                        }
                        pos += 1;
                        let k = Self::check_pair(n, i, j).map_err(|_| err(start, "bad pair index"))?;
                        Self::generator(n, p, k, exterior)?
                    } else {
                        let i = number(&mut pos).ok_or_else(|| err(pos, "expected index"))? as usize;
                        Self::check_index(n, i).map_err(|_| err(start, "index out of range"))?;
                        Self::generator(n, p, i - 1, exterior)?
                    };
                    let mut g = g;
                    g.restricted = restricted;
                    let mut power = 1;
                    if bytes.get(pos) == Some(&b'^') {
                        pos += 1;
                        power = number(&mut pos).ok_or_else(|| err(pos, "expected exponent"))?;
                    }
                    let mut f = Self::one(n, p)?;
                    f.restricted = restricted;
                    for _ in 0..power {
                        f = f.mul(&g)?;
                    }
                    term.mul(&f)?
                };
                term = factor;
                skip_ws(&mut pos);
                if bytes.get(pos) == Some(&b'*') {
                    pos += 1;
                    continue;
                }
                break;
            }
            if negative {
                term = term.neg();
            }
            out = out.add(&term)?;
            skip_ws(&mut pos);
        }
        if first {
            return Err(err(0, "empty expression"));
        }
        Ok(out)
    }
}

impl fmt::Display for BigradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let poly = if self.restricted { 's' } else { 'z' };
        let name = |k: usize| {
            if k < self.n {
                format!("{}", k + 1)
            } else {
                let (i, j) = pair_of(self.n, k);
                format!("[{},{}]", i + 1, j + 1)
            }
        };
        for (idx, (m, &c)) in self.terms.iter().enumerate() {
            let s = self.p.signed(c);
            let mut factors: Vec<String> = Vec::new();
            for (k, &e) in m.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("{poly}{}", name(k))),
                    _ => factors.push(format!("{poly}{}^{e}", name(k))),
                }
            }
            let mut ext = m.ext;
            while ext != 0 {
                factors.push(format!("x{}", name(ext.trailing_zeros() as usize)));
                ext &= ext - 1;
            }
            let mag = s.unsigned_abs();
            let body = match (mag, factors.is_empty()) {
                (_, true) => mag.to_string(),
                (1, false) => factors.join("*"),
                (_, false) => format!("{mag}*{}", factors.join("*")),
            };
            match (idx, s < 0) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

/// `β(a)`. On a restricted element this is the induced Bockstein of the
/// quotient.
pub fn bockstein(a: &BigradedElement) -> Result<BigradedElement, BocksteinError> {
    if a.p.value() <= 3 {
        return Err(BocksteinError::PrimeTooSmall(a.p.value()));
    }
    Ok(a.bockstein_unchecked())
}

pub fn restrict_to_unp(a: &BigradedElement) -> BigradedElement {
    a.restrict_to_unp()
}

/// Every monomial of total degree at most `max_degree`.
pub fn monomials_up_to(n: usize, p: Prime, max_degree: usize) -> Result<Vec<BigradedElement>, BocksteinError> {
    let z = BigradedElement::zero(n, p)?;
    let g = generator_count(n);
    let mut out = Vec::new();
    let mut exps = vec![0u32; g];
    fn polys(k: usize, budget: usize, exps: &mut Vec<u32>, acc: &mut Vec<Vec<u32>>) {
        if k == exps.len() {
            acc.push(exps.clone());
            return;
        }
        for e in 0..=budget {
            exps[k] = e as u32;
            polys(k + 1, budget - e, exps, acc);
        }
        exps[k] = 0;
    }
    let mut all_polys = Vec::new();
    polys(0, max_degree / 2, &mut exps, &mut all_polys);
    for ext in 0..(1u64 << g) {
        let xd = ext.count_ones() as usize;
        if xd > max_degree {
            continue;
        }
        for e in &all_polys {
            let m = BiMonomial { ext, exps: e.clone() };
            if m.degree() <= max_degree {
                out.push(z.monomial(m, 1));
            }
        }
    }
    out.sort_by(|a, b| a.terms.keys().next().cmp(&b.terms.keys().next()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DifferentialReport {
    pub n: usize,
    pub p: u32,
    pub max_degree: usize,
    pub monomials_checked: usize,
    pub beta_squared_violations: Vec<String>,
    pub degree_violations: Vec<String>,
    pub leibniz_pairs_checked: usize,
    pub leibniz_violations: Vec<String>,
    pub seed: u64,
}

impl DifferentialReport {
    pub fn ok(&self) -> bool {
        self.beta_squared_violations.is_empty() && self.degree_violations.is_empty() && self.leibniz_violations.is_empty()
    }
}

/// `β ∘ β = 0` and degree `+1` on every monomial of degree `≤ max_degree`,
/// and the graded Leibniz rule on `pairs` seeded random homogeneous pairs.
pub fn verify_differential(n: usize, p: Prime, max_degree: usize, pairs: usize, seed: u64) -> Result<DifferentialReport, BocksteinError> {
    if p.value() <= 3 {
        return Err(BocksteinError::PrimeTooSmall(p.value()));
    }
    let monomials = monomials_up_to(n, p, max_degree)?;
    let per: Vec<(Option<String>, Option<String>)> = monomials
        .par_iter()
        .map(|m| {
            let b = m.bockstein_unchecked();
            let d = m.homogeneous_degree().expect("monomial");
            let degree_bad = (!b.is_zero() && b.homogeneous_degree() != Some(d + 1)).then(|| m.to_string());
            let square_bad = (!b.bockstein_unchecked().is_zero()).then(|| m.to_string());
            (square_bad, degree_bad)
        })
        .collect();
    let beta_squared_violations = per.iter().filter_map(|(s, _)| s.clone()).collect();
    let degree_violations = per.iter().filter_map(|(_, d)| d.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_degree: BTreeMap<usize, Vec<&BigradedElement>> = BTreeMap::new();
    for m in &monomials {
        by_degree.entry(m.homogeneous_degree().expect("monomial")).or_default().push(m);
    }
    let degrees: Vec<usize> = by_degree.keys().copied().collect();
    let random_homogeneous = |rng: &mut ChaCha8Rng| {
        let d = degrees[rng.gen_range(0..degrees.len())];
        let pool = &by_degree[&d];
        let mut a = BigradedElement::zero(n, p).expect("valid rank");
        for _ in 0..rng.gen_range(1..=3) {
            let m = pool[rng.gen_range(0..pool.len())];
            a = a.add(&m.scale(rng.gen_range(1..p.value()))).expect("same ambient");
        }
        a
    };
    let mut leibniz_violations = Vec::new();
    for _ in 0..pairs {
        let a = random_homogeneous(&mut rng);
        let b = random_homogeneous(&mut rng);
        let lhs = a.mul(&b)?.bockstein_unchecked();
        let mut rhs = a.bockstein_unchecked().mul(&b)?;
        let second = a.mul(&b.bockstein_unchecked())?;
        let odd = a.homogeneous_degree().is_some_and(|d| d % 2 == 1);
        rhs = rhs.add(&if odd { second.neg() } else { second })?;
        if lhs != rhs {
            leibniz_violations.push(format!("({a}) * ({b})"));
        }
    }
    Ok(DifferentialReport {
        n,
        p: p.value(),
        max_degree,
        monomials_checked: monomials.len(),
        beta_squared_violations,
        degree_violations,
        leibniz_pairs_checked: pairs,
        leibniz_violations,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn indexing() {
        for n in 1..=MAX_N {
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(pair_of(n, pair_index(n, i, j)), (i, j));
                }
            }
        }
        assert_eq!(pair_index(3, 0, 1), 3);
        assert_eq!(pair_index(3, 1, 2), 5);
        assert_eq!(generator_count(3), 6);
    }

    #[test]
    fn generator_formulas() {
        let q = p(5);
        let b = bockstein(&BigradedElement::x_pair(2, q, 1, 2).unwrap()).unwrap();
        assert_eq!(b.to_string(), "-x1*x2");
        let b = bockstein(&BigradedElement::zeta_pair(2, q, 1, 2).unwrap()).unwrap();
        assert_eq!(b.to_string(), "z1*x2 - z2*x1");
        assert!(bockstein(&BigradedElement::x(2, q, 1).unwrap()).unwrap().is_zero());
        assert!(bockstein(&BigradedElement::zeta(2, q, 2).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn leibniz_example() {
        let q = p(5);
        let a = BigradedElement::zeta_pair(2, q, 1, 2).unwrap().mul(&BigradedElement::x_pair(2, q, 1, 2).unwrap()).unwrap();
        assert_eq!(bockstein(&a).unwrap().to_string(), "z1*x2*x[1,2] - z2*x1*x[1,2] - z[1,2]*x1*x2");
    }

    #[test]
    fn squares_vanish_on_examples() {
        let q = p(7);
        for e in [
            BigradedElement::zeta_pair(3, q, 1, 2).unwrap(),
            BigradedElement::x_pair(3, q, 2, 3).unwrap(),
        ] {
            assert!(bockstein(&bockstein(&e).unwrap()).unwrap().is_zero());
        }
    }

    #[test]
    fn small_primes_rejected() {
        let a = BigradedElement::x(2, p(3), 1).unwrap();
        assert_eq!(bockstein(&a), Err(BocksteinError::PrimeTooSmall(3)));
        assert!(verify_differential(2, p(3), 2, 1, 0).is_err());
    }

    #[test]
    fn sweep_n3() {
        let r = verify_differential(3, p(5), 6, 200, 0).unwrap();
        assert!(r.ok(), "{r:?}");
        // Σ C(6, a) C(b + 5, 5) over a + 2b ≤ 6
        let expected: usize = (0..=6usize)
            .flat_map(|a| (0..=3usize).map(move |b| (a, b)))
            .filter(|(a, b)| a + 2 * b <= 6)
            .map(|(a, b)| binom(6, a) * binom(b + 5, 5))
            .sum();
        assert_eq!(r.monomials_checked, expected);
        let r = verify_differential(3, p(7), 4, 100, 1).unwrap();
        assert!(r.ok());
    }

    #[test]
    fn restriction_examples() {
        let q = p(5);
        assert!(BigradedElement::x_pair(2, q, 1, 2).unwrap().restrict_to_unp().is_zero());
        let x12 = BigradedElement::x(2, q, 1).unwrap().mul(&BigradedElement::x(2, q, 2).unwrap()).unwrap();
        assert!(x12.restrict_to_unp().is_zero());
        let s = BigradedElement::zeta_pair(2, q, 1, 2).unwrap().restrict_to_unp();
        assert_eq!(s.to_string(), "s[1,2]");
        assert_eq!(bockstein(&s).unwrap().to_string(), "s1*x2 - s2*x1");
        let x1 = BigradedElement::x(2, q, 1).unwrap().restrict_to_unp();
        let x2 = BigradedElement::x(2, q, 2).unwrap().restrict_to_unp();
        assert!(x1.mul(&x2).unwrap().is_zero());
    }

    #[test]
    fn parse_examples() {
        let q = p(5);
        let a = BigradedElement::parse("z1*x2 - z2*x1", 2, q, false).unwrap();
        assert_eq!(a, bockstein(&BigradedElement::zeta_pair(2, q, 1, 2).unwrap()).unwrap());
        let b = BigradedElement::parse("2*z[1,2]^2*x[1,2] + 3", 2, q, false).unwrap();
        assert_eq!(b.to_string(), "-2 + 2*z[1,2]^2*x[1,2]");
        assert!(BigradedElement::parse("x1*x1", 2, q, false).unwrap().is_zero());
        assert!(BigradedElement::parse("z3", 2, q, false).is_err());
        assert!(BigradedElement::parse("s1", 2, q, false).is_err());
        assert!(BigradedElement::parse("x[2,1]", 2, q, false).is_err());
        assert!(BigradedElement::parse("", 2, q, false).is_err());
    }

    fn arb_element(n: usize, q: Prime) -> impl Strategy<Value = BigradedElement> {
        let g = generator_count(n);
        prop::collection::vec(
            (0u64..(1u64 << g), prop::collection::vec(0u32..3, g), 1u32..q.value()),
            0..4,
        )
        .prop_map(move |terms| {
            let mut a = BigradedElement::zero(n, q).unwrap();
            for (ext, exps, c) in terms {
                a.add_term(BiMonomial { ext, exps }, c);
            }
            a
        })
    }

    fn arb_homogeneous(n: usize, q: Prime) -> impl Strategy<Value = BigradedElement> {
        arb_element(n, q).prop_map(|a| {
            let Some(d) = a.terms.keys().next().map(BiMonomial::degree) else {
                return a;
            };
            let mut out = a.like();
            for (m, &c) in &a.terms {
                if m.degree() == d {
                    out.add_term(m.clone(), c);
                }
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn beta_squared_and_degree(a in arb_element(3, p(7))) {
            let b = bockstein(&a).unwrap();
            prop_assert!(bockstein(&b).unwrap().is_zero());
            if let (Some(d), Some(e)) = (a.homogeneous_degree(), b.homogeneous_degree()) {
                prop_assert_eq!(e, d + 1);
            }
        }

        #[test]
        fn leibniz(a in arb_homogeneous(3, p(5)), b in arb_homogeneous(3, p(5))) {
            let lhs = bockstein(&a.mul(&b).unwrap()).unwrap();
            let second = a.mul(&bockstein(&b).unwrap()).unwrap();
            let sign_odd = a.homogeneous_degree().is_some_and(|d| d % 2 == 1);
            let rhs = bockstein(&a).unwrap().mul(&b).unwrap().add(&if sign_odd { second.neg() } else { second }).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn restriction_commutes(a in arb_element(3, p(5)), b in arb_element(3, p(5))) {
            prop_assert_eq!(
                bockstein(&a).unwrap().restrict_to_unp(),
                bockstein(&a.restrict_to_unp()).unwrap()
            );
            prop_assert_eq!(
                a.mul(&b).unwrap().restrict_to_unp(),
                a.restrict_to_unp().mul(&b.restrict_to_unp()).unwrap()
            );
        }

        #[test]
        fn display_roundtrip(a in arb_element(3, p(7)), restricted in any::<bool>()) {
            let a = if restricted { a.restrict_to_unp() } else { a };
            let back = BigradedElement::parse(&a.to_string(), 3, p(7), restricted).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
