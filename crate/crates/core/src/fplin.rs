//! Exact linear algebra over the prime field `F_p`.
//!
//! Everything here is dense Gaussian elimination with a fixed pivot rule
//! (first nonzero entry of the leftmost remaining column), so the output of
//! [`kernel_basis`] and [`quotient_representatives`] is reproducible.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FpError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the prime must be odd, got {0}")]
    EvenPrime(u64),
    #[error("modulus {0} exceeds 2^31")]
    TooLarge(u64),
    #[error("boundary vector #{index} is not in the span of the cycles")]
    BoundaryNotCycle { index: usize },
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// An odd prime below `2^31`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u32);

impl Prime {
    pub fn new(value: u64) -> Result<Self, FpError> {
        if value >= 1 << 31 {
            return Err(FpError::TooLarge(value));
        }
        if value < 2 || (2..).take_while(|d| d * d <= value).any(|d| value % d == 0) {
            return Err(FpError::NotPrime(value));
        }
        if value == 2 {
            return Err(FpError::EvenPrime(value));
        }
        Ok(Prime(value as u32))
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    /// Reduces a signed integer to its least nonnegative residue.
    #[inline]
    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.0 as u64 - b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    /// Multiplicative inverse of a nonzero residue (Fermat).
    pub fn inv(self, a: u32) -> u32 {
        assert!(a % self.0 != 0, "zero has no inverse mod {}", self.0);
        let mut base = a as u64 % self.0 as u64;
        let mut exp = self.0 as u64 - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.0 as u64;
            }
            base = base * base % self.0 as u64;
            exp >>= 1;
        }
        acc as u32
    }

    /// Signed representative of minimal magnitude, in `(-p/2, p/2]`.
    pub fn signed(self, a: u32) -> i64 {
        let a = a % self.0;
        if a as u64 * 2 > self.0 as u64 {
            a as i64 - self.0 as i64
        } else {
            a as i64
        }
    }
}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u64> for Prime {
    type Error = FpError;
    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Prime::new(value)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0 as u64
    }
}

/// Dense matrix over `F_p`, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct FpMatrix {
    rows: usize,
    cols: usize,
    p: Prime,
    data: Vec<u32>,
}

impl FpMatrix {
    pub fn zeros(rows: usize, cols: usize, p: Prime) -> Self {
        FpMatrix {
            rows,
            cols,
            p,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, p: Prime) -> Self {
        let mut m = Self::zeros(n, n, p);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from signed integer rows, reducing every entry mod `p`.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R], p: Prime) -> Result<Self, FpError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FpError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&x| p.reduce(x)));
        }
        Ok(FpMatrix {
            rows: rows.len(),
            cols,
            p,
            data,
        })
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(columns: &[Vec<u32>], rows: usize, p: Prime) -> Self {
        let mut m = Self::zeros(rows, columns.len(), p);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                m.data[i * m.cols + j] = v % p.value();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u32) {
        self.data[row * self.cols + col] = value % self.p.value();
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &FpMatrix) -> Result<FpMatrix, FpError> {
        if self.cols != other.rows {
            return Err(FpError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let p = self.p.value() as u64;
        let mut out = FpMatrix::zeros(self.rows, other.cols, self.p);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] = ((out.data[idx] as u64 + a * other.get(k, j) as u64) % p) as u32;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p.value() as u64;
        (0..self.rows)
            .map(|i| {
                let s = self
                    .row(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p);
                s as u32
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let p = self.p;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, r * self.cols + j);
                }
            }
            let inv = p.inv(self.get(r, c));
            for j in c..self.cols {
                let idx = r * self.cols + j;
                self.data[idx] = p.mul(self.data[idx], inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.get(i, c);
                if f == 0 {
                    continue;
                }
                for j in c..self.cols {
                    let sub = p.mul(f, self.data[r * self.cols + j]);
                    let idx = i * self.cols + j;
                    self.data[idx] = p.sub(self.data[idx], sub);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMatrix {}x{} over F_{}", self.rows, self.cols, self.p)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// Reduced row echelon form of `m` and its pivot columns.
pub fn row_echelon(m: &FpMatrix) -> (FpMatrix, Vec<usize>) {
    let mut r = m.clone();
    let pivots = r.rref();
    (r, pivots)
}

pub fn rank(m: &FpMatrix) -> usize {
    m.clone().rref().len()
}

/// Basis of the null space `{v : m v = 0}`, one vector per free column, read
/// off the reduced echelon form.
pub fn kernel_basis(m: &FpMatrix) -> Vec<Vec<u32>> {
    let p = m.p;
    let mut r = m.clone();
    let pivots = r.rref();
    let mut is_pivot = vec![false; m.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..m.cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![0u32; m.cols];
            v[free] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = p.neg(r.get(row, free));
            }
            v
        })
        .collect()
}

/// Incrementally maintained echelon basis of a subspace of `F_p^n`, keeping
/// track of how each basis row is expressed in the vectors that were inserted.
#[derive(Debug, Clone)]
pub struct SpanSolver {
    p: Prime,
    len: usize,
    inserted: usize,
    // (pivot column, normalized row, combination of inserted vectors)
    rows: Vec<(usize, Vec<u32>, Vec<(usize, u32)>)>,
}

impl SpanSolver {
    pub fn new(len: usize, p: Prime) -> Self {
        SpanSolver {
            p,
            len,
            inserted: 0,
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    /// Reduces `v` against the basis. Returns the residue and the combination
    /// of inserted vectors that was subtracted.
    fn reduce(&self, v: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let p = self.p;
        let mut v = v.to_vec();
        let mut combo = vec![0u32; self.inserted];
        for (pc, row, rc) in &self.rows {
            let f = v[*pc];
            if f == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(row) {
                if y != 0 {
                    *x = p.sub(*x, p.mul(f, y));
                }
            }
            for &(k, c) in rc {
                combo[k] = p.add(combo[k], p.mul(f, c));
            }
        }
        (v, combo)
    }

    /// Adds `v` to the generating set. Returns `true` when it enlarged the span.
    pub fn insert(&mut self, v: &[u32]) -> bool {
        assert_eq!(v.len(), self.len);
        let p = self.p;
        let index = self.inserted;
        let (mut residue, combo) = self.reduce(v);
        self.inserted += 1;
        let Some(pc) = residue.iter().position(|&x| x != 0) else {
            return false;
        };
        // residue = v - sum combo_k g_k
        let mut rc: Vec<(usize, u32)> = combo
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| (k, p.neg(c)))
            .collect();
        rc.push((index, 1));
        let inv = p.inv(residue[pc]);
        for x in residue.iter_mut() {
            *x = p.mul(*x, inv);
        }
        for (_, c) in rc.iter_mut() {
            *c = p.mul(*c, inv);
        }
        // keep reduced form: clear the new pivot column from existing rows
        for (_, row, orc) in self.rows.iter_mut() {
            let f = row[pc];
            if f == 0 {
                continue;
            }
            for (x, &y) in row.iter_mut().zip(&residue) {
                if y != 0 {
                    *x = p.sub(*x, p.mul(f, y));
                }
            }
            let mut dense: std::collections::BTreeMap<usize, u32> = orc.iter().copied().collect();
            for &(k, c) in &rc {
                let e = dense.entry(k).or_insert(0);
                *e = p.sub(*e, p.mul(f, c));
            }
            *orc = dense.into_iter().filter(|&(_, c)| c != 0).collect();
        }
        self.rows.push((pc, residue, rc));
        true
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        assert_eq!(v.len(), self.len);
        self.reduce(v).0.iter().all(|&x| x == 0)
    }

    /// Coefficients `c` with `v = sum c_k g_k` over the inserted vectors `g_k`,
    /// or `None` when `v` is outside the span. Dependent inserted vectors get
    /// coefficient zero.
    pub fn solve(&self, v: &[u32]) -> Option<Vec<u32>> {
        assert_eq!(v.len(), self.len);
        let (residue, combo) = self.reduce(v);
        residue.iter().all(|&x| x == 0).then_some(combo)
    }
}

/// Representatives of `span(cycles) / span(boundaries)`.
///
/// Scans `cycles` in order and keeps each one that is independent of the
/// boundaries together with the representatives kept so far.
pub fn quotient_representatives(
    cycles: &[Vec<u32>],
    boundaries: &[Vec<u32>],
    p: Prime,
) -> Result<Vec<Vec<u32>>, FpError> {
    let Some(len) = cycles.first().or(boundaries.first()).map(Vec::len) else {
        return Ok(Vec::new());
    };
    for v in cycles.iter().chain(boundaries) {
        if v.len() != len {
            return Err(FpError::DimensionMismatch {
                expected: len,
                found: v.len(),
            });
        }
    }
    let mut cycle_span = SpanSolver::new(len, p);
    for c in cycles {
        cycle_span.insert(c);
    }
    let mut span = SpanSolver::new(len, p);
    for (index, b) in boundaries.iter().enumerate() {
        if !cycle_span.contains(b) {
            return Err(FpError::BoundaryNotCycle { index });
        }
        span.insert(b);
    }
    Ok(cycles
        .iter()
        .filter(|c| span.insert(c))
        .cloned()
        .collect())
}
