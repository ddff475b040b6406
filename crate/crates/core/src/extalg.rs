//! The graded-commutative algebra `Λ(e_1..e_w) ⊗ Λ(x_1..x_r)` over `F_p`.
//!
//! Monomials are a pair of bitmasks. The product order is "all `e` factors,
//! then all `x` factors", each in increasing index order. Every generator has
//! degree one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::fplin::Prime;

pub const MAX_VARIABLES: usize = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    #[error("elements live in different ambients: {0} vs {1}")]
    AmbientMismatch(Ambient, Ambient),
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("variable {var}{index} is out of range (allowed 1..={max})")]
    IndexOutOfRange { var: char, index: usize, max: usize },
    #[error("w + r = {0} exceeds the limit of {MAX_VARIABLES} variables")]
    TooManyVariables(usize),
}

/// Number of `e` and `x` variables plus the coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ambient {
    w: usize,
    r: usize,
    p: Prime,
}

impl Ambient {
    pub fn new(w: usize, r: usize, p: Prime) -> Result<Self, ExtError> {
        if w + r > MAX_VARIABLES {
            return Err(ExtError::TooManyVariables(w + r));
        }
        Ok(Ambient { w, r, p })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn top_degree(&self) -> usize {
        self.w + self.r
    }

    /// All monomials of total degree `d`, in the canonical coordinate order.
    pub fn basis(&self, d: usize) -> Vec<Monomial> {
        if d > self.top_degree() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in d.saturating_sub(self.w)..=d.min(self.r) {
            for x in subsets(self.r, k) {
                for e in subsets(self.w, d - k) {
                    out.push(Monomial { e, x });
                }
            }
        }
        out.sort();
        out
    }

    fn check(&self, m: Monomial) -> bool {
        (self.w == 64 || m.e >> self.w == 0) && (self.r == 64 || m.x >> self.r == 0)
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(w={}, r={}, p={})", self.w, self.r, self.p)
    }
}

/// Bitmasks with exactly `k` of the low `n` bits set, in increasing order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::new();
    let mut s = (1u64 << k) - 1;
    while s < limit {
        out.push(s);
        // Gosper's hack
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

/// Sign exponent of merging two increasing index sets: number of pairs
/// `(i in a, j in b)` with `i > j`.
#[inline]
pub(crate) fn merge_inversions(a: u64, b: u64) -> u32 {
    let mut count = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        count += (a >> j >> 1).count_ones();
    }
    count
}

/// A basis monomial `e_S x_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    e: u64,
    x: u64,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { e: 0, x: 0 };

    pub fn from_masks(e: u64, x: u64) -> Self {
        Monomial { e, x }
    }

    /// Builds `e_{i1}..e_{ik} x_{j1}..` from 1-based index lists, which must
    /// be strictly increasing.
    pub fn from_indices(e: &[usize], x: &[usize]) -> Option<Self> {
        fn mask(idx: &[usize]) -> Option<u64> {
            let mut m = 0u64;
            let mut last = 0;
            for &i in idx {
                if i <= last || i > 64 {
                    return None;
                }
                m |= 1 << (i - 1);
                last = i;
            }
            Some(m)
        }
        Some(Monomial {
            e: mask(e)?,
            x: mask(x)?,
        })
    }

    pub fn e_mask(&self) -> u64 {
        self.e
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn e_indices(&self) -> Vec<usize> {
        bits(self.e)
    }

    pub fn x_indices(&self) -> Vec<usize> {
        bits(self.x)
    }

    pub fn degree(&self) -> usize {
        (self.e.count_ones() + self.x.count_ones()) as usize
    }

    /// Product of two basis monomials: `None` if a factor repeats, otherwise
    /// the merged monomial and whether the sign is negative.
    #[inline]
    pub fn wedge(self, other: Monomial) -> Option<(Monomial, bool)> {
        if self.e & other.e != 0 || self.x & other.x != 0 {
            return None;
        }
        let swaps = merge_inversions(self.e, other.e)
            + merge_inversions(self.x, other.x)
            + self.x.count_ones() * other.e.count_ones();
        Some((
            Monomial {
                e: self.e | other.e,
                x: self.x | other.x,
            },
            swaps % 2 == 1,
        ))
    }
}

fn bits(mut m: u64) -> Vec<usize> {
    let mut out = Vec::new();
    while m != 0 {
        out.push(m.trailing_zeros() as usize + 1);
        m &= m - 1;
    }
    out
}

// Canonical order: degree, then x-part as an integer, then e-part as an integer.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(self.x.cmp(&other.x))
            .then(self.e.cmp(&other.e))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e == 0 && self.x == 0 {
            return write!(f, "1");
        }
        let factors: Vec<String> = self
            .e_indices()
            .into_iter()
            .map(|i| format!("e{i}"))
            .chain(self.x_indices().into_iter().map(|i| format!("x{i}")))
            .collect();
        write!(f, "{}", factors.join("^"))
    }
}

/// Sparse element of the exterior algebra; stores only nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExtElement {
    ambient: Ambient,
    terms: BTreeMap<Monomial, u32>,
}

impl ExtElement {
    pub fn zero(ambient: Ambient) -> Self {
        ExtElement {
            ambient,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ambient: Ambient) -> Self {
        Self::monomial(ambient, Monomial::ONE, 1)
    }

    pub fn monomial(ambient: Ambient, m: Monomial, coeff: u32) -> Self {
        assert!(ambient.check(m), "monomial outside ambient {ambient}");
        let mut out = Self::zero(ambient);
        out.add_term(m, coeff);
        out
    }

    /// The generator `e_i` (1-based).
    pub fn e(ambient: Ambient, i: usize) -> Result<Self, ExtError> {
        if i == 0 || i > ambient.w {
            return Err(ExtError::IndexOutOfRange {
                var: 'e',
                index: i,
                max: ambient.w,
            });
        }
        Ok(Self::monomial(ambient, Monomial::from_masks(1 << (i - 1), 0), 1))
    }

    /// The generator `x_i` (1-based).
    pub fn x(ambient: Ambient, i: usize) -> Result<Self, ExtError> {
        if i == 0 || i > ambient.r {
            return Err(ExtError::IndexOutOfRange {
                var: 'x',
                index: i,
                max: ambient.r,
            });
        }
        Ok(Self::monomial(ambient, Monomial::from_masks(0, 1 << (i - 1)), 1))
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, u32)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: Monomial) -> u32 {
        self.terms.get(&m).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(d)` if every term has degree `d`; the zero element is
    /// homogeneous of every degree and reports `None`.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Monomial::degree);
        let d = it.next()?;
        it.all(|x| x == d).then_some(d)
    }

    pub fn is_homogeneous(&self, d: usize) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, coeff: u32) {
        let p = self.ambient.p;
        let c = coeff % p.value();
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0);
        *entry = p.add(*entry, c);
        if *entry == 0 {
            self.terms.remove(&m);
        }
    }

    fn same_ambient(&self, other: &ExtElement) -> Result<(), ExtError> {
        if self.ambient != other.ambient {
            return Err(ExtError::AmbientMismatch(self.ambient, other.ambient));
        }
        Ok(())
    }

    pub fn add(&self, other: &ExtElement) -> Result<ExtElement, ExtError> {
        self.same_ambient(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ExtElement) -> Result<ExtElement, ExtError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: u32) -> ExtElement {
        let p = self.ambient.p;
        let mut out = Self::zero(self.ambient);
        for (m, a) in self.terms() {
            out.add_term(m, p.mul(a, c % p.value()));
        }
        out
    }

    pub fn neg(&self) -> ExtElement {
        self.scale(self.ambient.p.value() - 1)
    }

    pub fn wedge(&self, other: &ExtElement) -> Result<ExtElement, ExtError> {
        self.same_ambient(other)?;
        let p = self.ambient.p;
        let mut out = Self::zero(self.ambient);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some((m, negative)) = a.wedge(b) {
                    let c = p.mul(ca, cb);
                    out.add_term(m, if negative { p.neg(c) } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Reinterprets the element in a larger ambient with the same `w` and `p`.
    pub fn embed(&self, target: Ambient) -> Result<ExtElement, ExtError> {
        if target.w != self.ambient.w || target.p != self.ambient.p || target.r < self.ambient.r {
            return Err(ExtError::AmbientMismatch(self.ambient, target));
        }
        Ok(ExtElement {
            ambient: target,
            terms: self.terms.clone(),
        })
    }

    /// Coordinates with respect to `basis` (which must contain every
    /// monomial of the element).
    pub fn to_coordinates(&self, index: &std::collections::HashMap<Monomial, usize>, len: usize) -> Vec<u32> {
        let mut v = vec![0; len];
        for (m, c) in self.terms() {
            v[index[&m]] = c;
        }
        v
    }

    pub fn from_coordinates(ambient: Ambient, basis: &[Monomial], coords: &[u32]) -> ExtElement {
        let mut out = Self::zero(ambient);
        for (&m, &c) in basis.iter().zip(coords) {
            out.add_term(m, c);
        }
        out
    }

    /// Parses the element grammar
    /// `element := term (('+'|'-') term)*`, `term := [coeff] factor ('^' factor)*`,
    /// `factor := 'e'INT | 'x'INT`. A bare integer is accepted as a scalar term.
    pub fn parse(text: &str, ambient: Ambient) -> Result<ExtElement, ExtError> {
        Parser::new(text, ambient).element()
    }
}

impl fmt::Display for ExtElement {
    /// Canonical text form, with coefficients printed as minimal-magnitude
    /// signed integers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let p = self.ambient.p;
        for (k, (m, c)) in self.terms().enumerate() {
            let s = p.signed(c);
            let mag = s.unsigned_abs();
            match (k, s < 0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m == Monomial::ONE {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag} {m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtElement[{}]({})", self.ambient, self)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ambient: Ambient,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, ambient: Ambient) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            ambient,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExtError> {
        Err(ExtError::Syntax {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn integer(&mut self) -> Result<Option<u64>, ExtError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match digits.parse::<u64>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => {
                self.pos = start;
                self.error("integer too large")
            }
        }
    }

    fn element(&mut self) -> Result<ExtElement, ExtError> {
        let mut out = ExtElement::zero(self.ambient);
        let mut negative = false;
        if self.peek() == Some(b'-') {
            negative = true;
            self.pos += 1;
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let term = self.term()?;
            out = out.add(&if negative { term.neg() } else { term })?;
            match self.peek() {
                None => return Ok(out),
                Some(b'+') => negative = false,
                Some(b'-') => negative = true,
                Some(c) => return self.error(format!("unexpected character '{}'", c as char)),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<ExtElement, ExtError> {
        let p = self.ambient.p;
        let coeff = self.integer()?;
        let mut acc = ExtElement::one(self.ambient);
        let mut factors = 0;
        loop {
            match self.peek() {
                Some(b'e') | Some(b'x') => {}
                _ if factors == 0 && coeff.is_some() => break,
                _ => return self.error("expected a factor 'e<INT>' or 'x<INT>'"),
            }
            let var = self.src[self.pos] as char;
            let at = self.pos;
            self.pos += 1;
            if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                return self.error("expected an index after the variable name");
            }
            let index = self.integer()?.expect("digit present") as usize;
            let factor = match var {
                'e' => ExtElement::e(self.ambient, index),
                _ => ExtElement::x(self.ambient, index),
            }
            .map_err(|e| match e {
                ExtError::IndexOutOfRange { .. } => e,
                _ => ExtError::Syntax {
                    pos: at,
                    message: e.to_string(),
                },
            })?;
            acc = acc.wedge(&factor)?;
            factors += 1;
            if self.peek() == Some(b'^') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let c = coeff.map_or(1, |c| (c % p.value() as u64) as u32);
        Ok(acc.scale(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn amb(w: usize, r: usize, p: u64) -> Ambient {
        Ambient::new(w, r, Prime::new(p).unwrap()).unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn wedge_examples() {
        let a = amb(3, 0, 5);
        let e1 = ExtElement::e(a, 1).unwrap();
        let e2 = ExtElement::e(a, 2).unwrap();
        let e12 = ExtElement::monomial(a, Monomial::from_indices(&[1, 2], &[]).unwrap(), 1);
        assert_eq!(e1.wedge(&e2).unwrap(), e12);
        assert_eq!(e2.wedge(&e1).unwrap(), e12.scale(4));
        assert!(e1.wedge(&e1).unwrap().is_zero());
        let other = ExtElement::e(amb(3, 1, 5), 1).unwrap();
        assert!(matches!(e1.wedge(&other), Err(ExtError::AmbientMismatch(..))));
    }

    #[test]
    fn e_moves_past_x_with_sign() {
        let a = amb(1, 1, 7);
        let e1 = ExtElement::e(a, 1).unwrap();
        let x1 = ExtElement::x(a, 1).unwrap();
        assert_eq!(x1.wedge(&e1).unwrap(), e1.wedge(&x1).unwrap().neg());
    }

    #[test]
    fn basis_examples() {
        let a = amb(2, 1, 3);
        assert_eq!(a.basis(0), vec![Monomial::ONE]);
        let b1: Vec<String> = a.basis(1).iter().map(|m| m.to_string()).collect();
        assert_eq!(b1, ["e1", "e2", "x1"]);
        let b3: Vec<String> = a.basis(3).iter().map(|m| m.to_string()).collect();
        assert_eq!(b3, ["e1^e2^x1"]);
        assert!(a.basis(4).is_empty());
        let b2: Vec<String> = a.basis(2).iter().map(|m| m.to_string()).collect();
        assert_eq!(b2, ["e1^e2", "e1^x1", "e2^x1"]);
    }

    #[test]
    fn basis_counts() {
        for (w, r) in [(0, 0), (3, 0), (2, 3), (4, 6), (5, 4)] {
            let a = amb(w, r, 3);
            let mut total = 0;
            for d in 0..=w + r {
                let b = a.basis(d);
                assert_eq!(b.len(), binom(w + r, d));
                assert!(b.windows(2).all(|p| p[0] < p[1]));
                total += b.len();
            }
            assert_eq!(total, 1 << (w + r));
        }
    }

    #[test]
    fn parse_examples() {
        let a = amb(3, 1, 5);
        let v = ExtElement::parse("e1^e2 + 2 e1^e3", a).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.coefficient(Monomial::from_indices(&[1, 2], &[]).unwrap()), 1);
        assert_eq!(v.coefficient(Monomial::from_indices(&[1, 3], &[]).unwrap()), 2);

        let v = ExtElement::parse("e2^e1", a).unwrap();
        let e12 = ExtElement::parse("e1^e2", a).unwrap();
        assert_eq!(v, e12.neg());

        assert!(ExtElement::parse("3 e1^e1", a).unwrap().is_zero());
        assert_eq!(ExtElement::parse("-e1 + 6x1 - 1", a).unwrap().to_string(), "-1 - e1 + x1");
        assert_eq!(ExtElement::parse("2e1^x1", a).unwrap().to_string(), "2 e1^x1");
        assert_eq!(ExtElement::parse("0", a).unwrap().to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        let a = amb(2, 1, 5);
        assert!(matches!(
            ExtElement::parse("e3", a),
            Err(ExtError::IndexOutOfRange { var: 'e', index: 3, .. })
        ));
        assert!(matches!(
            ExtElement::parse("x2", a),
            Err(ExtError::IndexOutOfRange { var: 'x', index: 2, .. })
        ));
        assert!(matches!(ExtElement::parse("e1 +", a), Err(ExtError::Syntax { pos: 4, .. })));
        assert!(matches!(ExtElement::parse("e1 * e2", a), Err(ExtError::Syntax { pos: 3, .. })));
        assert!(matches!(ExtElement::parse("y1", a), Err(ExtError::Syntax { pos: 0, .. })));
        assert!(matches!(ExtElement::parse("e", a), Err(ExtError::Syntax { .. })));
        assert!(matches!(ExtElement::parse("", a), Err(ExtError::Syntax { .. })));
    }

    fn element_strategy(w: usize, r: usize, p: u64, degree: Option<usize>) -> impl Strategy<Value = ExtElement> {
        let a = amb(w, r, p);
        let all: Vec<Monomial> = match degree {
            Some(d) => a.basis(d),
            None => (0..=w + r).flat_map(|d| a.basis(d)).collect(),
        };
        prop::collection::vec((prop::sample::select(all), 1u32..p as u32), 0..5).prop_map(move |ts| {
            let mut out = ExtElement::zero(a);
            for (m, c) in ts {
                out.add_term(m, c);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn graded_commutative((a, b) in (0usize..4, 0usize..4).prop_flat_map(|(da, db)| {
            (element_strategy(3, 2, 7, Some(da)), element_strategy(3, 2, 7, Some(db)))
        })) {
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap();
            match (a.homogeneous_degree(), b.homogeneous_degree()) {
                (Some(da), Some(db)) if da * db % 2 == 1 => prop_assert_eq!(ab, ba.neg()),
                _ => prop_assert_eq!(ab, ba),
            }
        }

        #[test]
        fn associative(a in element_strategy(3, 2, 5, None), b in element_strategy(3, 2, 5, None), c in element_strategy(3, 2, 5, None)) {
            prop_assert_eq!(
                a.wedge(&b).unwrap().wedge(&c).unwrap(),
                a.wedge(&b.wedge(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn degree_one_squares_vanish(a in element_strategy(4, 2, 11, Some(1))) {
            prop_assert!(a.wedge(&a).unwrap().is_zero());
        }

        #[test]
        fn format_parse_roundtrip(a in element_strategy(3, 2, 7, None)) {
            let text = a.to_string();
            prop_assert_eq!(ExtElement::parse(&text, a.ambient()).unwrap(), a);
        }
    }
}
