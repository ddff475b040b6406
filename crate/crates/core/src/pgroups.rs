//! Finite p-groups of exponent `p²` built from 2-step nilpotent `F_p`-Lie
//! algebras.
//!
//! The underlying set is a free `Z/p²`-module `K` with one coordinate per
//! basis vector of the algebra, and the product is
//! `x·y = x + y + i([π(x), π(y)])`, where `π` reduces mod `p` and `i` lifts
//! a residue vector to its least representative times `p`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fplin::{self, FpMatrix, Prime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PGroupError {
    #[error("element {0:?} is not in the group")]
    ConstraintViolation(Vec<u32>),
    #[error("group of order p^{order_exponent} exceeds the exhaustive bound {bound}; use sampled mode")]
    BudgetExceeded { order_exponent: usize, bound: u64 },
    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),
    #[error("prime {0} is too large for Z/p^2 arithmetic (limit 65535)")]
    PrimeTooLarge(u32),
    #[error("expected {expected} coordinates, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A 2-step nilpotent Lie algebra given by integer structure constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStepLieAlgebra {
    dim: usize,
    labels: Vec<String>,
    // [b_i, b_j] for i < j as (i, j, k, c): coefficient c on b_k
    brackets: Vec<(usize, usize, usize, i64)>,
    central: Vec<bool>,
}

impl TwoStepLieAlgebra {
    /// `table[i][j]` is the coordinate vector of `[b_i, b_j]`.
    pub fn new(table: Vec<Vec<Vec<i64>>>, central: Vec<bool>, labels: Vec<String>) -> Result<Self, PGroupError> {
        let dim = table.len();
        let bad = |msg: String| Err(PGroupError::InvalidAlgebra(msg));
        if central.len() != dim || labels.len() != dim {
            return bad("center mask and labels must match the dimension".into());
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != dim || row.iter().any(|v| v.len() != dim) {
                return bad(format!("bracket table row {i} has the wrong shape"));
            }
        }
        let mut brackets = Vec::new();
        for i in 0..dim {
            if table[i][i].iter().any(|&c| c != 0) {
                return bad(format!("[b{i}, b{i}] must vanish"));
            }
            for j in 0..dim {
                for k in 0..dim {
                    let c = table[i][j][k];
                    if c != -table[j][i][k] {
                        return bad(format!("bracket of b{i}, b{j} is not antisymmetric"));
                    }
                    if c != 0 && !central[k] {
                        return bad(format!("[b{i}, b{j}] leaves the declared center"));
                    }
                    if c != 0 && (central[i] || central[j]) {
                        return bad(format!("central element in a nonzero bracket [b{i}, b{j}]"));
                    }
                    if i < j && c != 0 {
                        brackets.push((i, j, k, c));
                    }
                }
            }
        }
        Ok(TwoStepLieAlgebra {
            dim,
            labels,
            brackets,
            central,
        })
    }

    /// The free 2-step nilpotent algebra on `n` generators: basis
    /// `e_1..e_n` then `e_{i,j}` (`i < j`, lexicographic) with
    /// `[e_i, e_j] = e_{i,j}` central.
    pub fn free_two_step(n: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let dim = n + pairs.len();
        let mut table = vec![vec![vec![0i64; dim]; dim]; dim];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            table[i][j][n + k] = 1;
            table[j][i][n + k] = -1;
        }
        let central = (0..dim).map(|k| k >= n).collect();
        let labels = (1..=n)
            .map(|i| format!("e{i}"))
            .chain(pairs.iter().map(|&(i, j)| format!("e{},{}", i + 1, j + 1)))
            .collect();
        Self::new(table, central, labels).expect("free 2-step algebra is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_central(&self, k: usize) -> bool {
        self.central[k]
    }

    pub fn is_abelian(&self) -> bool {
        self.brackets.is_empty()
    }

    /// `[u, v]` for residue vectors mod `p`, accumulated into `out`.
    fn bracket_into(&self, u: &[u32], v: &[u32], p: u32, out: &mut [u32]) {
        let p = p as i64;
        out.iter_mut().for_each(|x| *x = 0);
        for &(i, j, k, c) in &self.brackets {
            let t = (u[i] as i64 * v[j] as i64 - u[j] as i64 * v[i] as i64) % p;
            if t != 0 {
                out[k] = ((out[k] as i64 + t * c).rem_euclid(p)) as u32;
            }
        }
    }

    pub fn bracket(&self, u: &[u32], v: &[u32], p: Prime) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        let (u, v): (Vec<u32>, Vec<u32>) = (
            u.iter().map(|x| x % p.value()).collect(),
            v.iter().map(|x| x % p.value()).collect(),
        );
        self.bracket_into(&u, &v, p.value(), &mut out);
        out
    }
}

/// Coordinates in `K`, residues mod `p²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PGroupElement(pub Vec<u32>);

impl PGroupElement {
    pub fn coords(&self) -> &[u32] {
        &self.0
    }
}

/// `π⁻¹(S)` inside the group of a 2-step algebra, or the whole group when
/// there is no constraint.
#[derive(Debug, Clone)]
pub struct PGroup {
    algebra: TwoStepLieAlgebra,
    p: Prime,
    // reduced echelon basis of S, with pivots
    constraint: Option<(Vec<Vec<u32>>, Vec<usize>)>,
}

impl PGroup {
    pub fn new(algebra: TwoStepLieAlgebra, p: Prime, constraint: Option<Vec<Vec<u32>>>) -> Result<Self, PGroupError> {
        if p.value() > u16::MAX as u32 {
            return Err(PGroupError::PrimeTooLarge(p.value()));
        }
        let dim = algebra.dim();
        let constraint = match constraint {
            None => None,
            Some(vs) => {
                if let Some(v) = vs.iter().find(|v| v.len() != dim) {
                    return Err(PGroupError::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    });
                }
                let mut m = FpMatrix::zeros(vs.len(), dim, p);
                for (i, v) in vs.iter().enumerate() {
                    for (j, &c) in v.iter().enumerate() {
                        m.set(i, j, c);
                    }
                }
                let (r, pivots) = fplin::row_echelon(&m);
                let basis = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
                Some((basis, pivots))
            }
        };
        Ok(PGroup { algebra, p, constraint })
    }

    /// `G(𝔥(n))`.
    pub fn free(n: usize, p: Prime) -> Result<Self, PGroupError> {
        Self::new(TwoStepLieAlgebra::free_two_step(n), p, None)
    }

    /// `U(n, p) = π⁻¹(span(e_1..e_n))` inside `G(𝔥(n))`.
    pub fn unp(n: usize, p: Prime) -> Result<Self, PGroupError> {
        let algebra = TwoStepLieAlgebra::free_two_step(n);
        let dim = algebra.dim();
        let s = (0..n)
            .map(|i| {
                let mut v = vec![0; dim];
                v[i] = 1;
                v
            })
            .collect();
        Self::new(algebra, p, Some(s))
    }

    pub fn algebra(&self) -> &TwoStepLieAlgebra {
        &self.algebra
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    fn modulus(&self) -> u32 {
        self.p.value() * self.p.value()
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Dimension of `S`, or of the whole algebra without a constraint.
    pub fn constraint_dim(&self) -> usize {
        self.constraint.as_ref().map_or(self.dim(), |(b, _)| b.len())
    }

    /// `log_p |G|`.
    pub fn order_exponent(&self) -> usize {
        self.dim() + self.constraint_dim()
    }

    pub fn order(&self) -> Option<u128> {
        (self.p.value() as u128).checked_pow(self.order_exponent() as u32)
    }

    pub fn contains(&self, x: &PGroupElement) -> bool {
        x.0.len() == self.dim() && x.0.iter().all(|&c| c < self.modulus()) && self.projection_in_s(&x.0)
    }

    fn projection_in_s(&self, x: &[u32]) -> bool {
        let Some((basis, pivots)) = &self.constraint else {
            return true;
        };
        let p = self.p;
        let mut v: Vec<u32> = x.iter().map(|c| c % p.value()).collect();
        for (row, &pc) in basis.iter().zip(pivots) {
            let f = v[pc];
            if f != 0 {
                for (a, &b) in v.iter_mut().zip(row) {
                    *a = p.sub(*a, p.mul(f, b));
                }
            }
        }
        v.iter().all(|&c| c == 0)
    }

    pub fn element(&self, coords: &[i64]) -> Result<PGroupElement, PGroupError> {
        if coords.len() != self.dim() {
            return Err(PGroupError::DimensionMismatch {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        let q = self.modulus() as i64;
        let x = PGroupElement(coords.iter().map(|&c| c.rem_euclid(q) as u32).collect());
        if !self.projection_in_s(&x.0) {
            return Err(PGroupError::ConstraintViolation(x.0));
        }
        Ok(x)
    }

    pub fn identity(&self) -> PGroupElement {
        PGroupElement(vec![0; self.dim()])
    }

    fn mul_into(&self, x: &[u32], y: &[u32], scratch: &mut [u32], out: &mut [u32]) {
        let p = self.p.value();
        let q = self.modulus();
        let px: Vec<u32> = x.iter().map(|c| c % p).collect();
        let py: Vec<u32> = y.iter().map(|c| c % p).collect();
        self.algebra.bracket_into(&px, &py, p, scratch);
        for k in 0..out.len() {
            out[k] = ((x[k] as u64 + y[k] as u64 + p as u64 * scratch[k] as u64) % q as u64) as u32;
        }
    }

    fn mul_raw(&self, x: &PGroupElement, y: &PGroupElement) -> PGroupElement {
        let mut scratch = vec![0; self.dim()];
        let mut out = vec![0; self.dim()];
        self.mul_into(&x.0, &y.0, &mut scratch, &mut out);
        PGroupElement(out)
    }

    pub fn multiply(&self, x: &PGroupElement, y: &PGroupElement) -> Result<PGroupElement, PGroupError> {
        for z in [x, y] {
            if !self.contains(z) {
                return Err(PGroupError::ConstraintViolation(z.0.clone()));
            }
        }
        Ok(self.mul_raw(x, y))
    }

    /// `x⁻¹ = -x`, since `[π(x), π(-x)] = 0`.
    pub fn inverse(&self, x: &PGroupElement) -> PGroupElement {
        let q = self.modulus();
        PGroupElement(x.0.iter().map(|&c| (q - c) % q).collect())
    }

    pub fn power(&self, x: &PGroupElement, k: u64) -> PGroupElement {
        let mut acc = self.identity();
        for _ in 0..k {
            acc = self.mul_raw(&acc, x);
        }
        acc
    }

    /// `x·y·x⁻¹·y⁻¹`.
    pub fn commutator(&self, x: &PGroupElement, y: &PGroupElement) -> PGroupElement {
        let xy = self.mul_raw(x, y);
        let xyx = self.mul_raw(&xy, &self.inverse(x));
        self.mul_raw(&xyx, &self.inverse(y))
    }

    /// Least `k ≥ 1` with `x^k = 1`, found by repeated multiplication.
    pub fn order_of(&self, x: &PGroupElement) -> Result<u64, PGroupError> {
        if !self.contains(x) {
            return Err(PGroupError::ConstraintViolation(x.0.clone()));
        }
        let id = self.identity();
        let p = self.p.value() as u64;
        let mut acc = self.identity();
        for k in 1..=p * p {
            acc = self.mul_raw(&acc, x);
            if acc == id {
                return Ok(k);
            }
        }
        unreachable!("every element has order dividing p^2")
    }

    fn fast_order(&self, x: &PGroupElement) -> u64 {
        let id = self.identity();
        let p = self.p.value() as u64;
        if *x == id {
            return 1;
        }
        let xp = self.power(x, p);
        if xp == id {
            p
        } else {
            debug_assert_eq!(self.power(&xp, p), id);
            p * p
        }
    }

    fn lift(&self, v: &[u32]) -> Vec<u32> {
        v.to_vec()
    }

    /// Generators: lifts of a basis of `S` and `p·b_k` for every `k`.
    pub fn generators(&self) -> Vec<PGroupElement> {
        let dim = self.dim();
        let p = self.p.value();
        let mut out: Vec<PGroupElement> = match &self.constraint {
            Some((basis, _)) => basis.iter().map(|v| PGroupElement(self.lift(v))).collect(),
            None => (0..dim)
                .map(|k| {
                    let mut v = vec![0; dim];
                    v[k] = 1;
                    PGroupElement(v)
                })
                .collect(),
        };
        out.extend((0..dim).map(|k| {
            let mut v = vec![0; dim];
            v[k] = p;
            PGroupElement(v)
        }));
        out
    }

    /// Every element, in lexicographic order of coordinates.
    pub fn elements(&self) -> Vec<PGroupElement> {
        let dim = self.dim();
        let p = self.p.value();
        let q = self.modulus();
        let s_basis: Vec<Vec<u32>> = match &self.constraint {
            Some((b, _)) => b.clone(),
            None => (0..dim)
                .map(|k| {
                    let mut v = vec![0; dim];
                    v[k] = 1;
                    v
                })
                .collect(),
        };
        // residues of π(x) in S
        let mut heads = vec![vec![0u32; dim]];
        for b in &s_basis {
            let mut next = Vec::with_capacity(heads.len() * p as usize);
            for h in &heads {
                for c in 0..p {
                    next.push(h.iter().zip(b).map(|(&a, &bb)| (a + c * bb) % p).collect());
                }
            }
            heads = next;
        }
        let mut out = Vec::with_capacity(heads.len() * (p as usize).pow(dim as u32));
        for h in &heads {
            let mut tails = vec![h.clone()];
            for k in 0..dim {
                let mut next = Vec::with_capacity(tails.len() * p as usize);
                for t in &tails {
                    for c in 0..p {
                        let mut v: Vec<u32> = t.clone();
                        v[k] = (v[k] + c * p) % q;
                        next.push(v);
                    }
                }
                tails = next;
            }
            out.extend(tails.into_iter().map(PGroupElement));
        }
        out.sort();
        out
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> PGroupElement {
        let dim = self.dim();
        let p = self.p.value();
        let q = self.modulus();
        let mut v = vec![0u32; dim];
        match &self.constraint {
            Some((basis, _)) => {
                for b in basis {
                    let c = rng.gen_range(0..p);
                    for (a, &bb) in v.iter_mut().zip(b) {
                        *a = (*a + c * bb) % p;
                    }
                }
            }
            None => v.iter_mut().for_each(|a| *a = rng.gen_range(0..p)),
        }
        for a in v.iter_mut() {
            *a = (*a + p * rng.gen_range(0..p)) % q;
        }
        PGroupElement(v)
    }

    /// `log_p` of the order of the subgroup generated by elements of `p·K`.
    fn central_subgroup_exponent(&self, gens: &[PGroupElement]) -> usize {
        debug_assert!(gens.iter().all(|g| g.0.iter().all(|&c| c % self.p.value() == 0)));
        let (free, torsion) = submodule_type(
            &gens.iter().map(|g| g.0.clone()).collect::<Vec<_>>(),
            self.p,
        );
        2 * free + torsion
    }

    pub fn verify(&self, options: &VerifyOptions) -> Result<VerificationReport, PGroupError> {
        let order = self.order();
        let fits = order.is_some_and(|o| o <= options.exhaustive_bound as u128);
        let exhaustive = match options.mode {
            VerifyMode::Exhaustive if !fits => {
                return Err(PGroupError::BudgetExceeded {
                    order_exponent: self.order_exponent(),
                    bound: options.exhaustive_bound,
                })
            }
            VerifyMode::Exhaustive => true,
            VerifyMode::Sampled => false,
            VerifyMode::Auto => fits,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let id = self.identity();
        let p = self.p.value() as u64;
        let gens = self.generators();

        let mut report = VerificationReport {
            order_exponent: self.order_exponent(),
            group_order: order.map(|o| o.to_string()).unwrap_or_else(|| format!("{}^{}", p, self.order_exponent())),
            exhaustive,
            associativity_ok: true,
            associativity_exhaustive: false,
            associativity_checks: 0,
            identity_inverse_ok: true,
            order_p_elements: None,
            pc_ok: true,
            pc_exhaustive: false,
            omega1_rank: 0,
            abelianization_rank: 0,
            commutator_rank: 0,
            exponent: 1,
            seed: options.seed,
        };

        // subgroups generated inside p·K
        let phi: Vec<PGroupElement> = gens
            .iter()
            .map(|g| self.power(g, p))
            .chain(gens.iter().flat_map(|a| gens.iter().map(move |b| (a, b))).map(|(a, b)| self.commutator(a, b)))
            .collect();
        let commutators: Vec<PGroupElement> = gens
            .iter()
            .flat_map(|a| gens.iter().map(move |b| (a, b)))
            .map(|(a, b)| self.commutator(a, b))
            .collect();
        report.abelianization_rank = self.order_exponent() - self.central_subgroup_exponent(&phi);
        report.commutator_rank = self.central_subgroup_exponent(&commutators);

        if exhaustive {
            let elements = self.elements();
            let n = elements.len() as u64;
            report.identity_inverse_ok = elements.par_iter().all(|x| {
                let inv = self.inverse(x);
                self.contains(&inv)
                    && self.mul_raw(x, &id) == *x
                    && self.mul_raw(&id, x) == *x
                    && self.mul_raw(x, &inv) == id
                    && self.mul_raw(&inv, x) == id
            });

            if n.checked_pow(3).is_some_and(|t| t <= options.triple_budget) {
                let (ok, checks) = self.associativity_table(&elements);
                report.associativity_ok = ok;
                report.associativity_checks = checks;
                report.associativity_exhaustive = true;
            } else {
                let (ok, checks) = self.associativity_sampled(&mut rng, options.samples);
                report.associativity_ok = ok;
                report.associativity_checks = checks;
            }

            let omega: Vec<&PGroupElement> = elements.par_iter().filter(|x| self.power(x, p) == id).collect();
            report.order_p_elements = Some(omega.len() as u64);
            let omega_owned: Vec<PGroupElement> = omega.iter().map(|&x| x.clone()).collect();
            let (free, torsion) = submodule_type(&omega_owned.iter().map(|g| g.0.clone()).collect::<Vec<_>>(), self.p);
            report.omega1_rank = if free == 0 { torsion } else { 2 * free + torsion };
            let omega_closed = (p as u128).checked_pow(report.omega1_rank as u32) == Some(omega.len() as u128);

            if (omega.len() as u64).saturating_mul(n) <= options.triple_budget {
                report.pc_exhaustive = true;
                report.pc_ok = omega_closed
                    && omega
                        .par_iter()
                        .all(|z| elements.iter().all(|g| self.mul_raw(z, g) == self.mul_raw(g, z)));
            } else {
                report.pc_ok = omega_closed && self.pc_against(&omega_owned, &gens, &mut rng, options.samples);
            }

            report.exponent = elements.par_iter().map(|x| self.fast_order(x)).max().unwrap_or(1);
        } else {
            let samples: Vec<PGroupElement> = (0..options.samples.min(10_000)).map(|_| self.random_element(&mut rng)).collect();
            report.identity_inverse_ok = samples.iter().all(|x| {
                let inv = self.inverse(x);
                self.mul_raw(x, &id) == *x && self.mul_raw(x, &inv) == id && self.mul_raw(&inv, x) == id
            });
            let (ok, checks) = self.associativity_sampled(&mut rng, options.samples);
            report.associativity_ok = ok;
            report.associativity_checks = checks;

            // elements of order dividing p in the sample all lie in p·K; use
            // p·b_k as candidate generators and check each has order p
            let candidates: Vec<PGroupElement> = gens[self.constraint_dim()..].to_vec();
            let all_order_p = candidates.iter().all(|z| self.power(z, p) == id);
            let sample_omega_in_pk = samples
                .iter()
                .filter(|x| self.power(x, p) == id)
                .all(|x| x.0.iter().all(|&c| c % p as u32 == 0));
            report.omega1_rank = self.central_subgroup_exponent(&candidates);
            report.pc_ok = all_order_p && sample_omega_in_pk && self.pc_against(&candidates, &gens, &mut rng, options.samples);
            report.exponent = samples.iter().chain(&gens).map(|x| self.fast_order(x)).max().unwrap_or(1);
        }
        Ok(report)
    }

    fn associativity_table(&self, elements: &[PGroupElement]) -> (bool, u64) {
        let n = elements.len();
        let index: HashMap<&PGroupElement, u32> = elements.iter().enumerate().map(|(i, e)| (e, i as u32)).collect();
        let table: Vec<u32> = elements
            .par_iter()
            .flat_map_iter(|x| {
                let index = &index;
                elements.iter().map(move |y| index[&self.mul_raw(x, y)])
            })
            .collect();
        let ok = (0..n).into_par_iter().all(|a| {
            (0..n).all(|b| {
                let ab = table[a * n + b] as usize;
                (0..n).all(|c| {
                    let bc = table[b * n + c] as usize;
                    table[ab * n + c] == table[a * n + bc]
                })
            })
        });
        (ok, (n as u64).pow(3))
    }

    fn associativity_sampled(&self, rng: &mut ChaCha8Rng, samples: usize) -> (bool, u64) {
        let ok = (0..samples).all(|_| {
            let (x, y, z) = (self.random_element(rng), self.random_element(rng), self.random_element(rng));
            self.mul_raw(&self.mul_raw(&x, &y), &z) == self.mul_raw(&x, &self.mul_raw(&y, &z))
        });
        (ok, samples as u64)
    }

    /// Each `z` commutes with every generator, plus random spot checks on
    /// products of the given elements against random group elements.
    fn pc_against(&self, omega: &[PGroupElement], gens: &[PGroupElement], rng: &mut ChaCha8Rng, samples: usize) -> bool {
        let on_gens = omega
            .iter()
            .all(|z| gens.iter().all(|g| self.mul_raw(z, g) == self.mul_raw(g, z)));
        let spot = (0..samples.min(10_000)).all(|_| {
            let mut z = self.identity();
            for o in omega {
                let k = rng.gen_range(0..self.p.value() as u64);
                z = self.mul_raw(&z, &self.power(o, k));
            }
            let g = self.random_element(rng);
            self.mul_raw(&z, &g) == self.mul_raw(&g, &z)
        });
        on_gens && spot
    }
}

/// Isomorphism type `(a, b)` of the `Z/p²`-submodule spanned by `gens`:
/// `(Z/p²)^a ⊕ (Z/p)^b`. Unit pivots are eliminated first; the remaining
/// rows are all divisible by `p`, and their quotient by `p` is reduced mod `p`.
pub fn submodule_type(gens: &[Vec<u32>], p: Prime) -> (usize, usize) {
    let Some(len) = gens.first().map(Vec::len) else {
        return (0, 0);
    };
    let pv = p.value() as i64;
    let q = pv * pv;
    let mut rows: Vec<Vec<i64>> = gens.iter().map(|g| g.iter().map(|&c| c as i64 % q).collect()).collect();
    let mut free = 0;
    while let Some((r, c)) = rows
        .iter()
        .enumerate()
        .find_map(|(i, row)| row.iter().position(|&x| x % pv != 0).map(|j| (i, j)))
    {
        let pivot = rows.swap_remove(r);
        let inv = inverse_mod(pivot[c], q);
        for row in rows.iter_mut() {
            let f = row[c] * inv % q;
            if f != 0 {
                for (a, &b) in row.iter_mut().zip(&pivot) {
                    *a = (*a - f * b).rem_euclid(q);
                }
            }
        }
        free += 1;
    }
    let mut m = FpMatrix::zeros(rows.len(), len, p);
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            m.set(i, j, (x / pv) as u32);
        }
    }
    (free, fplin::rank(&m))
}

fn inverse_mod(a: i64, m: i64) -> i64 {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    debug_assert_eq!(old_r, 1);
    old_s.rem_euclid(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    Exhaustive,
    Sampled,
    /// Exhaustive when the order fits the bound, sampled otherwise.
    Auto,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub mode: VerifyMode,
    pub exhaustive_bound: u64,
    /// Cap on `|G|³` for exhaustive associativity (and on `|Ω₁|·|G|` for the
    /// exhaustive centrality sweep).
    pub triple_budget: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mode: VerifyMode::Auto,
            exhaustive_bound: 1_000_000,
            triple_budget: 100_000_000,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub order_exponent: usize,
    pub group_order: String,
    pub exhaustive: bool,
    pub associativity_ok: bool,
    pub associativity_exhaustive: bool,
    pub associativity_checks: u64,
    pub identity_inverse_ok: bool,
    /// Number of elements with `x^p = 1` (exhaustive mode only).
    pub order_p_elements: Option<u64>,
    pub pc_ok: bool,
    pub pc_exhaustive: bool,
    pub omega1_rank: usize,
    pub abelianization_rank: usize,
    pub commutator_rank: usize,
    pub exponent: u64,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prime(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn free_two_step_examples() {
        let a = TwoStepLieAlgebra::free_two_step(2);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.brackets, vec![(0, 1, 2, 1)]);
        assert_eq!(a.labels(), ["e1", "e2", "e1,2"]);
        let a = TwoStepLieAlgebra::free_two_step(1);
        assert_eq!(a.dim(), 1);
        assert!(a.is_abelian());
        assert_eq!(TwoStepLieAlgebra::free_two_step(3).dim(), 6);
        assert_eq!(TwoStepLieAlgebra::free_two_step(3).bracket(&[0, 1, 0, 0, 0, 0], &[0, 0, 1, 0, 0, 0], prime(5)), vec![0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn invalid_algebras() {
        let labels = || vec!["a".to_string(), "b".to_string()];
        // not antisymmetric
        let t = vec![vec![vec![0, 0], vec![0, 1]], vec![vec![0, 1], vec![0, 0]]];
        assert!(TwoStepLieAlgebra::new(t, vec![false, true], labels()).is_err());
        // bracket outside the center
        let t = vec![vec![vec![0, 0], vec![1, 0]], vec![vec![-1, 0], vec![0, 0]]];
        assert!(TwoStepLieAlgebra::new(t, vec![false, true], labels()).is_err());
    }

    #[test]
    fn multiply_examples() {
        let g = PGroup::free(2, prime(3)).unwrap();
        let x = g.element(&[1, 0, 0]).unwrap();
        let y = g.element(&[0, 1, 0]).unwrap();
        assert_eq!(g.multiply(&x, &y).unwrap().coords(), &[1, 1, 3]);
        assert_eq!(g.multiply(&y, &x).unwrap().coords(), &[1, 1, 6]);
        assert_eq!(g.multiply(&x, &g.identity()).unwrap(), x);

        let u = PGroup::unp(2, prime(3)).unwrap();
        let bad = PGroupElement(vec![0, 0, 1]);
        assert!(matches!(u.multiply(&bad, &x), Err(PGroupError::ConstraintViolation(_))));
        assert!(u.element(&[0, 0, 1]).is_err());
        assert!(u.element(&[0, 0, 3]).is_ok());
    }

    #[test]
    fn order_examples() {
        let g = PGroup::free(2, prime(3)).unwrap();
        assert_eq!(g.order_of(&g.element(&[1, 0, 0]).unwrap()).unwrap(), 9);
        assert_eq!(g.order_of(&g.element(&[3, 0, 0]).unwrap()).unwrap(), 3);
        assert_eq!(g.order_of(&g.identity()).unwrap(), 1);
    }

    #[test]
    fn unp23_report() {
        let u = PGroup::unp(2, prime(3)).unwrap();
        assert_eq!(u.order(), Some(243));
        let r = u.verify(&VerifyOptions::default()).unwrap();
        assert!(r.exhaustive && r.associativity_exhaustive);
        assert_eq!(r.associativity_checks, 243u64.pow(3));
        assert!(r.associativity_ok && r.identity_inverse_ok && r.pc_ok && r.pc_exhaustive);
        assert_eq!(r.order_p_elements, Some(27));
        assert_eq!(r.omega1_rank, 3);
        assert_eq!(r.abelianization_rank, 2);
        assert_eq!(r.commutator_rank, 1);
        assert_eq!(r.exponent, 9);
    }

    #[test]
    fn free_group_report() {
        let g = PGroup::free(2, prime(5)).unwrap();
        assert_eq!(g.order_exponent(), 6);
        let r = g.verify(&VerifyOptions::default()).unwrap();
        assert!(r.exhaustive && !r.associativity_exhaustive);
        assert!(r.associativity_ok && r.pc_ok && r.identity_inverse_ok);
        assert_eq!(r.order_p_elements, Some(125));
        assert_eq!(r.omega1_rank, 3);
        assert_eq!(r.abelianization_rank, 3);
        assert_eq!(r.exponent, 25);

        let sampled = g
            .verify(&VerifyOptions {
                mode: VerifyMode::Sampled,
                samples: 2_000,
                ..Default::default()
            })
            .unwrap();
        assert!(!sampled.exhaustive);
        assert!(sampled.pc_ok && sampled.associativity_ok);
        assert_eq!(sampled.omega1_rank, 3);
        assert_eq!(sampled.order_p_elements, None);
    }

    #[test]
    fn abelian_case() {
        let u = PGroup::unp(1, prime(3)).unwrap();
        assert_eq!(u.order(), Some(9));
        let r = u.verify(&VerifyOptions::default()).unwrap();
        assert!(r.associativity_ok && r.pc_ok);
        assert_eq!(r.abelianization_rank, 1);
        assert_eq!(r.commutator_rank, 0);
        assert_eq!(r.omega1_rank, 1);
        assert_eq!(r.exponent, 9);
    }

    #[test]
    fn unp3_ranks() {
        for p in [3u64, 5] {
            let u = PGroup::unp(3, prime(p)).unwrap();
            let r = u
                .verify(&VerifyOptions {
                    mode: VerifyMode::Sampled,
                    samples: 2_000,
                    ..Default::default()
                })
                .unwrap();
            assert_eq!(r.abelianization_rank, 3);
            assert_eq!(r.commutator_rank, 3);
            assert_eq!(r.omega1_rank, 6);
            assert!(r.pc_ok && r.associativity_ok);
        }
    }

    #[test]
    fn budget() {
        let g = PGroup::free(3, prime(5)).unwrap();
        let err = g
            .verify(&VerifyOptions {
                mode: VerifyMode::Exhaustive,
                ..Default::default()
            })
            .unwrap_err();
        assert_eq!(err, PGroupError::BudgetExceeded { order_exponent: 12, bound: 1_000_000 });
    }

    #[test]
    fn submodule_types() {
        let p = prime(3);
        assert_eq!(submodule_type(&[vec![1, 0], vec![0, 3]], p), (1, 1));
        assert_eq!(submodule_type(&[vec![3, 0], vec![6, 0]], p), (0, 1));
        assert_eq!(submodule_type(&[vec![1, 3], vec![2, 6]], p), (1, 0));
        assert_eq!(submodule_type(&[vec![1, 1], vec![1, 4]], p), (1, 1));
        assert_eq!(submodule_type(&[], p), (0, 0));
    }

    #[test]
    fn elements_enumeration() {
        let u = PGroup::unp(2, prime(3)).unwrap();
        let e = u.elements();
        assert_eq!(e.len(), 243);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(e.iter().all(|x| u.contains(x)));
    }

    proptest! {
        #[test]
        fn pth_power_is_p_times(seed in any::<u64>(), n in 1usize..4, p in prop::sample::select(vec![3u64, 5, 7])) {
            let g = PGroup::free(n, prime(p)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = g.random_element(&mut rng);
            let q = (p * p) as u32;
            let px: Vec<u32> = x.0.iter().map(|&c| c * p as u32 % q).collect();
            prop_assert_eq!(g.power(&x, p).0, px);
            let ord = g.order_of(&x).unwrap();
            prop_assert!(ord == 1 || ord == p || ord == p * p);
        }

        #[test]
        fn associative_samples(seed in any::<u64>(), n in 1usize..4) {
            let g = PGroup::unp(n, prime(5)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y, z) = (g.random_element(&mut rng), g.random_element(&mut rng), g.random_element(&mut rng));
            prop_assert!(g.contains(&x));
            prop_assert_eq!(
                g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap(),
                g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap()
            );
        }
    }
}
