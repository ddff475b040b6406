//! Koszul complexes `Λ(e_1..e_w) ⊗ Λ(x_1..x_r)` with `δ(x_i) = q_i`, their
//! homology, and the cup product on homology.
//!
//! Homology is computed block by block: the basis monomials are split into
//! the connected components of the graph whose edges are the nonzero entries
//! of `δ`. Each component is a direct summand subcomplex, so the homology of
//! the whole complex is the direct sum of the homology of the components.
//! For monomial quadratics (the `U(n,p)` case) the components are the weight
//! spaces of the torus action and are tiny compared with the full complex.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::extalg::{Ambient, ExtElement, ExtError, Monomial};
use crate::fplin::{self, FpError, FpMatrix, Prime, SpanSolver};

/// Hard limit on `w + r`; matrix sides reach `C(w + r, d)`.
pub const MAX_GENERATORS: usize = 22;
/// Above this many generators a warning is attached to the complex.
pub const WARN_GENERATORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KoszulError {
    #[error("K does not contain the image of the Bockstein (b-coordinate corank {corank})")]
    BocksteinNotContained { corank: usize },
    #[error("the k-invariant basis is linearly dependent (rank {rank} < {count})")]
    DegenerateSubspace { rank: usize, count: usize },
    #[error("the quadratics are linearly dependent (rank {rank} < {count})")]
    DependentQuadratics { rank: usize, count: usize },
    #[error("r = {r} exceeds C(w, 2) = {max}")]
    TooManyQuadratics { r: usize, max: usize },
    #[error("w + r = {0} exceeds the limit of {MAX_GENERATORS}")]
    TooLarge(usize),
    #[error("not a quadratic form in the e-variables: {0}")]
    NotQuadratic(String),
    #[error("bockstein part has length {found}, expected {expected}")]
    BocksteinLength { expected: usize, found: usize },
    #[error("element is not a cocycle")]
    NotCocycle,
    #[error("classes come from different homology tables")]
    TableMismatch,
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Fp(#[from] FpError),
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A homogeneous degree-2 element of `Λ(e_1..e_w)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm(ExtElement);

impl QuadraticForm {
    pub fn new(element: ExtElement) -> Result<Self, KoszulError> {
        if element.ambient().r() != 0 || !element.is_homogeneous(2) {
            return Err(KoszulError::NotQuadratic(element.to_string()));
        }
        Ok(QuadraticForm(element))
    }

    /// Builds `Σ c e_i e_j` from 1-based `(i, j, c)` triples with `i < j`.
    pub fn from_triples(w: usize, p: Prime, triples: &[(usize, usize, i64)]) -> Result<Self, KoszulError> {
        let ambient = Ambient::new(w, 0, p)?;
        let mut out = ExtElement::zero(ambient);
        for &(i, j, c) in triples {
            let ei = ExtElement::e(ambient, i)?;
            let ej = ExtElement::e(ambient, j)?;
            if i >= j {
                return Err(KoszulError::NotQuadratic(format!("triple ({i}, {j}) needs i < j")));
            }
            out = out.add(&ei.wedge(&ej)?.scale(p.reduce(c)))?;
        }
        Ok(QuadraticForm(out))
    }

    pub fn parse(text: &str, w: usize, p: Prime) -> Result<Self, KoszulError> {
        Self::new(ExtElement::parse(text, Ambient::new(w, 0, p)?)?)
    }

    pub fn element(&self) -> &ExtElement {
        &self.0
    }

    pub fn w(&self) -> usize {
        self.0.ambient().w()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `(i, j, c)` triples, 1-based, `i < j`, in canonical order.
    pub fn triples(&self) -> Vec<(usize, usize, u32)> {
        self.0
            .terms()
            .map(|(m, c)| {
                let idx = m.e_indices();
                (idx[0], idx[1], c)
            })
            .collect()
    }

    /// Coordinates in the canonical basis of `Λ²(e_1..e_w)`.
    fn coordinates(&self) -> Vec<u32> {
        let basis = self.0.ambient().basis(2);
        basis.iter().map(|&m| self.0.coefficient(m)).collect()
    }
}

impl std::fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One basis vector of `K ⊂ H²(W; F_p)`: coefficients on `b_1..b_w` plus a
/// quadratic exterior part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KBasisVector {
    pub bockstein: Vec<u32>,
    pub quadratic: QuadraticForm,
}

/// The subspace `K ⊂ H²(W; F_p)` defining a central extension.
#[derive(Debug, Clone)]
pub struct KInvariantSubspace {
    w: usize,
    p: Prime,
    basis: Vec<KBasisVector>,
}

impl KInvariantSubspace {
    pub fn new(w: usize, p: Prime, basis: Vec<KBasisVector>) -> Result<Self, KoszulError> {
        for v in &basis {
            if v.bockstein.len() != w {
                return Err(KoszulError::BocksteinLength {
                    expected: w,
                    found: v.bockstein.len(),
                });
            }
            if v.quadratic.w() != w || v.quadratic.element().ambient().prime() != p {
                return Err(ExtError::AmbientMismatch(
                    v.quadratic.element().ambient(),
                    Ambient::new(w, 0, p)?,
                )
                .into());
            }
        }
        let basis = basis
            .into_iter()
            .map(|v| KBasisVector {
                bockstein: v.bockstein.iter().map(|&c| c % p.value()).collect(),
                quadratic: v.quadratic,
            })
            .collect();
        Ok(KInvariantSubspace { w, p, basis })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn v(&self) -> usize {
        self.basis.len()
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn basis(&self) -> &[KBasisVector] {
        &self.basis
    }

    /// Row-reduces the basis with the `b`-coordinates first. Succeeds iff the
    /// projection onto the `b`-coordinates is onto; the rows left without a
    /// `b`-pivot are the quadratics of the Koszul complex.
    pub fn canonicalize(&self) -> Result<KoszulComplex, KoszulError> {
        let (w, p) = (self.w, self.p);
        let quad_basis = Ambient::new(w, 0, p)?.basis(2);
        let cols = w + quad_basis.len();
        let mut m = FpMatrix::zeros(self.basis.len(), cols, p);
        for (i, v) in self.basis.iter().enumerate() {
            for (j, &c) in v.bockstein.iter().enumerate() {
                m.set(i, j, c);
            }
            for (j, c) in v.quadratic.coordinates().into_iter().enumerate() {
                m.set(i, w + j, c);
            }
        }
        let (reduced, pivots) = fplin::row_echelon(&m);
        if pivots.len() < self.basis.len() {
            return Err(KoszulError::DegenerateSubspace {
                rank: pivots.len(),
                count: self.basis.len(),
            });
        }
        let b_rank = pivots.iter().filter(|&&c| c < w).count();
        if b_rank < w {
            return Err(KoszulError::BocksteinNotContained { corank: w - b_rank });
        }
        let ambient = Ambient::new(w, 0, p)?;
        let quadratics = (b_rank..pivots.len())
            .map(|row| {
                let coords: Vec<u32> = (0..quad_basis.len()).map(|j| reduced.get(row, w + j)).collect();
                QuadraticForm(ExtElement::from_coordinates(ambient, &quad_basis, &coords))
            })
            .collect();
        KoszulComplex::new(w, quadratics, p)
    }
}

/// The complex `Λ(e_1..e_w) ⊗ Λ(x_1..x_r)` with `δ(e_i) = 0`, `δ(x_t) = q_t`.
#[derive(Debug, Clone)]
pub struct KoszulComplex {
    ambient: Ambient,
    quadratics: Vec<QuadraticForm>,
    // q_t as (e-mask, coefficient) pairs
    images: Vec<Vec<(u64, u32)>>,
    independent: bool,
    warnings: Vec<String>,
}

impl KoszulComplex {
    /// Rejects linearly dependent quadratics.
    pub fn new(w: usize, quadratics: Vec<QuadraticForm>, p: Prime) -> Result<Self, KoszulError> {
        let c = Self::build(w, quadratics, p)?;
        if !c.independent {
            let rank = c.quadratic_rank();
            return Err(KoszulError::DependentQuadratics {
                rank,
                count: c.quadratics.len(),
            });
        }
        let max = binom(w, 2);
        if c.r() > max {
            return Err(KoszulError::TooManyQuadratics { r: c.r(), max });
        }
        Ok(c)
    }

    /// Accepts dependent quadratics. The homology is still computed, but the
    /// `b_1 = w` guarantee is lost.
    pub fn new_forced(w: usize, quadratics: Vec<QuadraticForm>, p: Prime) -> Result<Self, KoszulError> {
        let mut c = Self::build(w, quadratics, p)?;
        if !c.independent {
            c.warnings.push(format!(
                "quadratics are linearly dependent (rank {} of {}); b_1 = w is not guaranteed",
                c.quadratic_rank(),
                c.r()
            ));
        }
        Ok(c)
    }

    fn build(w: usize, quadratics: Vec<QuadraticForm>, p: Prime) -> Result<Self, KoszulError> {
        let r = quadratics.len();
        if w + r > MAX_GENERATORS {
            return Err(KoszulError::TooLarge(w + r));
        }
        let qa = Ambient::new(w, 0, p)?;
        for q in &quadratics {
            if q.element().ambient() != qa {
                return Err(ExtError::AmbientMismatch(q.element().ambient(), qa).into());
            }
        }
        let mut warnings = Vec::new();
        if w + r > WARN_GENERATORS {
            warnings.push(format!(
                "w + r = {} exceeds {WARN_GENERATORS}; the complex has 2^{} basis monomials",
                w + r,
                w + r
            ));
        }
        let images = quadratics
            .iter()
            .map(|q| q.element().terms().map(|(m, c)| (m.e_mask(), c)).collect())
            .collect();
        let mut c = KoszulComplex {
            ambient: Ambient::new(w, r, p)?,
            quadratics,
            images,
            independent: true,
            warnings,
        };
        c.independent = c.quadratic_rank() == r;
        Ok(c)
    }

    fn quadratic_rank(&self) -> usize {
        let len = binom(self.w(), 2);
        let mut s = SpanSolver::new(len, self.prime());
        self.quadratics.iter().filter(|q| s.insert(&q.coordinates())).count()
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn w(&self) -> usize {
        self.ambient.w()
    }

    pub fn r(&self) -> usize {
        self.ambient.r()
    }

    pub fn prime(&self) -> Prime {
        self.ambient.prime()
    }

    pub fn top_degree(&self) -> usize {
        self.ambient.top_degree()
    }

    pub fn quadratics(&self) -> &[QuadraticForm] {
        &self.quadratics
    }

    /// Whether the quadratics are linearly independent (Frattini basis).
    pub fn quadratics_independent(&self) -> bool {
        self.independent
    }

    /// `p > r + 1`, the range where the homology is known to be the
    /// cohomology of the group modulo the polynomial part.
    pub fn hypothesis_met(&self) -> bool {
        self.prime().value() as usize > self.r() + 1
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `δ` on a basis monomial, as (monomial, coefficient) pairs.
    fn delta_monomial(&self, m: Monomial) -> Vec<(Monomial, u32)> {
        let p = self.prime();
        let s = m.e_mask().count_ones();
        let mut out = Vec::new();
        let mut xs = m.x_mask();
        let mut j = 0u32;
        while xs != 0 {
            let t = xs.trailing_zeros();
            xs &= xs - 1;
            let rest = Monomial::from_masks(m.e_mask(), m.x_mask() & !(1 << t));
            // (-1)^{|S| + j - 1} with 1-based j
            let negative = (s + j) % 2 == 1;
            for &(qe, c) in &self.images[t as usize] {
                if let Some((prod, neg)) = Monomial::from_masks(qe, 0).wedge(rest) {
                    let c = if negative ^ neg { p.neg(c) } else { c };
                    out.push((prod, c));
                }
            }
            j += 1;
        }
        out
    }

    pub fn differential(&self, elem: &ExtElement) -> Result<ExtElement, KoszulError> {
        if elem.ambient() != self.ambient {
            return Err(ExtError::AmbientMismatch(elem.ambient(), self.ambient).into());
        }
        let p = self.prime();
        let mut out = ExtElement::zero(self.ambient);
        for (m, c) in elem.terms() {
            for (image, d) in self.delta_monomial(m) {
                out.add_term(image, p.mul(c, d));
            }
        }
        Ok(out)
    }

    /// Matrix of `δ: C^d → C^{d+1}` in the canonical bases. For the top degree
    /// this is the `0 × 1` matrix.
    pub fn differential_matrix(&self, d: usize) -> FpMatrix {
        let source = self.ambient.basis(d);
        let target = self.ambient.basis(d + 1);
        let index: HashMap<Monomial, usize> = target.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let p = self.prime();
        let mut out = FpMatrix::zeros(target.len(), source.len(), p);
        for (col, &m) in source.iter().enumerate() {
            for (image, c) in self.delta_monomial(m) {
                let row = index[&image];
                out.set(row, col, p.add(out.get(row, col), c));
            }
        }
        out
    }

    /// Homology of the complex with representative cocycles in every degree.
    pub fn betti(&self) -> BettiTable {
        let top = self.top_degree();
        let p = self.prime();
        let bases: Vec<Vec<Monomial>> = (0..=top).map(|d| self.ambient.basis(d)).collect();
        let mut offsets = vec![0usize; top + 2];
        for d in 0..=top {
            offsets[d + 1] = offsets[d] + bases[d].len();
        }
        let index: Vec<HashMap<Monomial, usize>> = bases
            .iter()
            .map(|b| b.iter().enumerate().map(|(i, &m)| (m, i)).collect())
            .collect();

        // sparse δ per degree: for each source monomial, (target index, coeff)
        let deltas: Vec<Vec<Vec<(usize, u32)>>> = (0..=top)
            .into_par_iter()
            .map(|d| {
                bases[d]
                    .iter()
                    .map(|&m| {
                        let mut col: Vec<(usize, u32)> = Vec::new();
                        for (image, c) in self.delta_monomial(m) {
                            let i = index[d + 1][&image];
                            match col.iter_mut().find(|(j, _)| *j == i) {
                                Some(entry) => entry.1 = p.add(entry.1, c),
                                None => col.push((i, c)),
                            }
                        }
                        col.retain(|&(_, c)| c != 0);
                        col.sort_unstable();
                        col
                    })
                    .collect()
            })
            .collect();

        let mut uf = UnionFind::new(offsets[top + 1]);
        for d in 0..top {
            for (i, col) in deltas[d].iter().enumerate() {
                for &(j, _) in col {
                    uf.union(offsets[d] + i, offsets[d + 1] + j);
                }
            }
        }

        // components numbered by their smallest global index
        let mut comp_id: HashMap<usize, usize> = HashMap::new();
        let mut members: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut block_of: Vec<Vec<(usize, usize)>> = bases.iter().map(|b| vec![(0, 0); b.len()]).collect();
        for d in 0..=top {
            for i in 0..bases[d].len() {
                let root = uf.find(offsets[d] + i);
                let next = comp_id.len();
                let c = *comp_id.entry(root).or_insert(next);
                if c == members.len() {
                    members.push(vec![Vec::new(); top + 1]);
                }
                block_of[d][i] = (c, members[c][d].len());
                members[c][d].push(i);
            }
        }

        let blocks: Vec<Block> = members
            .into_par_iter()
            .map(|degrees| Block::compute(degrees, &deltas, &block_of, p))
            .collect();

        let mut dims = vec![0usize; top + 1];
        let mut representatives = vec![Vec::new(); top + 1];
        let mut first_rep = vec![vec![0usize; top + 1]; blocks.len()];
        for d in 0..=top {
            for (c, block) in blocks.iter().enumerate() {
                first_rep[c][d] = dims[d];
                let degree = &block.degrees[d];
                for rep in &degree.reps {
                    let mut elem = ExtElement::zero(self.ambient);
                    for (k, &v) in rep.iter().enumerate() {
                        elem.add_term(bases[d][degree.members[k]], v);
                    }
                    representatives[d].push(elem);
                }
                dims[d] += degree.reps.len();
            }
        }

        BettiTable {
            complex: self.clone(),
            dims,
            representatives,
            index,
            block_of,
            blocks,
            first_rep,
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// One connected component of the complex, restricted to each degree.
#[derive(Debug, Clone)]
struct Block {
    degrees: Vec<BlockDegree>,
}

#[derive(Debug, Clone)]
struct BlockDegree {
    // indices into the canonical basis of this degree
    members: Vec<usize>,
    // homology representatives and boundaries, in local coordinates
    reps: Vec<Vec<u32>>,
    boundaries: Vec<Vec<u32>>,
}

impl Block {
    fn compute(
        members: Vec<Vec<usize>>,
        deltas: &[Vec<Vec<(usize, u32)>>],
        block_of: &[Vec<(usize, usize)>],
        p: Prime,
    ) -> Block {
        let top = members.len() - 1;
        // local matrix of δ from degree d to d + 1
        let local = |d: usize| -> FpMatrix {
            let rows = if d < top { members[d + 1].len() } else { 0 };
            let mut m = FpMatrix::zeros(rows, members[d].len(), p);
            if d < top {
                for (col, &i) in members[d].iter().enumerate() {
                    for &(j, c) in &deltas[d][i] {
                        m.set(block_of[d + 1][j].1, col, c);
                    }
                }
            }
            m
        };
        let mut degrees = Vec::with_capacity(top + 1);
        let mut incoming: Vec<Vec<u32>> = Vec::new();
        for d in 0..=top {
            let outgoing = local(d);
            let cycles = if members[d].is_empty() {
                Vec::new()
            } else {
                fplin::kernel_basis(&outgoing)
            };
            let reps = fplin::quotient_representatives(&cycles, &incoming, p)
                .expect("δ∘δ = 0, so boundaries are cycles");
            let boundaries = std::mem::take(&mut incoming);
            incoming = (0..outgoing.cols())
                .map(|c| outgoing.column(c))
                .filter(|c| c.iter().any(|&x| x != 0))
                .collect();
            degrees.push(BlockDegree {
                members: members[d].clone(),
                reps,
                boundaries,
            });
        }
        Block { degrees }
    }
}

/// Homology of a [`KoszulComplex`]: dimensions and representative cocycles.
#[derive(Debug, Clone)]
pub struct BettiTable {
    complex: KoszulComplex,
    dims: Vec<usize>,
    representatives: Vec<Vec<ExtElement>>,
    index: Vec<HashMap<Monomial, usize>>,
    block_of: Vec<Vec<(usize, usize)>>,
    blocks: Vec<Block>,
    first_rep: Vec<Vec<usize>>,
}

/// Summary of a [`BettiTable`] suitable for reports.
#[derive(Debug, Clone, Serialize)]
pub struct BettiSummary {
    pub dims: Vec<usize>,
    pub total: usize,
    pub euler_characteristic: i64,
}

impl BettiTable {
    pub fn complex(&self) -> &KoszulComplex {
        &self.complex
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, d: usize) -> usize {
        self.dims.get(d).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .enumerate()
            .map(|(d, &b)| if d % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }

    pub fn summary(&self) -> BettiSummary {
        BettiSummary {
            dims: self.dims.clone(),
            total: self.total(),
            euler_characteristic: self.euler_characteristic(),
        }
    }

    pub fn representatives(&self, d: usize) -> &[ExtElement] {
        self.representatives.get(d).map_or(&[], Vec::as_slice)
    }

    pub fn class(&self, d: usize, i: usize) -> Option<CohomologyClass<'_>> {
        let rep = self.representatives.get(d)?.get(i)?;
        Some(CohomologyClass {
            table: self,
            degree: d,
            representative: rep.clone(),
        })
    }

    pub fn unit(&self) -> CohomologyClass<'_> {
        self.class(0, 0).expect("H^0 is one-dimensional")
    }

    /// The class of a cocycle.
    pub fn class_of(&self, elem: &ExtElement) -> Result<CohomologyClass<'_>, KoszulError> {
        if !self.complex.differential(elem)?.is_zero() {
            return Err(KoszulError::NotCocycle);
        }
        let degree = match elem.homogeneous_degree() {
            Some(d) => d,
            None if elem.is_zero() => 0,
            None => return Err(KoszulError::NotCocycle),
        };
        Ok(CohomologyClass {
            table: self,
            degree,
            representative: elem.clone(),
        })
    }

    fn zero_class(&self, degree: usize) -> CohomologyClass<'_> {
        CohomologyClass {
            table: self,
            degree,
            representative: ExtElement::zero(self.complex.ambient),
        }
    }

    /// Coordinates of a cocycle of degree `d` with respect to the
    /// representatives of `H^d`.
    pub fn coordinates(&self, d: usize, elem: &ExtElement) -> Result<Vec<u32>, KoszulError> {
        let mut coords = vec![0u32; self.dim(d)];
        if d > self.complex.top_degree() {
            return Ok(coords);
        }
        if !elem.is_homogeneous(d) {
            return Err(KoszulError::NotCocycle);
        }
        let p = self.complex.prime();
        let mut by_block: HashMap<usize, Vec<(usize, u32)>> = HashMap::new();
        for (m, c) in elem.terms() {
            let (b, local) = self.block_of[d][self.index[d][&m]];
            by_block.entry(b).or_default().push((local, c));
        }
        for (b, entries) in by_block {
            let degree = &self.blocks[b].degrees[d];
            let mut v = vec![0u32; degree.members.len()];
            for (k, c) in entries {
                v[k] = c;
            }
            let mut solver = SpanSolver::new(v.len(), p);
            for g in degree.reps.iter().chain(&degree.boundaries) {
                solver.insert(g);
            }
            let combo = solver.solve(&v).ok_or(KoszulError::NotCocycle)?;
            for k in 0..degree.reps.len() {
                coords[self.first_rep[b][d] + k] = combo[k];
            }
        }
        Ok(coords)
    }

    fn vector_to_element(&self, d: usize, coords: &[u32]) -> ExtElement {
        let mut out = ExtElement::zero(self.complex.ambient);
        for (rep, &c) in self.representatives(d).iter().zip(coords) {
            if c != 0 {
                out = out.add(&rep.scale(c)).expect("same ambient");
            }
        }
        out
    }

    /// Cup product of two classes, with the canonical representative of the
    /// result. Products above the top degree are the zero class.
    pub fn cup<'a>(&'a self, a: &CohomologyClass<'a>, b: &CohomologyClass<'a>) -> Result<CohomologyClass<'a>, KoszulError> {
        if !std::ptr::eq(a.table, self) || !std::ptr::eq(b.table, self) {
            return Err(KoszulError::TableMismatch);
        }
        let degree = a.degree + b.degree;
        if degree > self.complex.top_degree() {
            return Ok(self.zero_class(degree));
        }
        let product = a.representative.wedge(&b.representative)?;
        if !self.complex.differential(&product)?.is_zero() {
            return Err(KoszulError::NotCocycle);
        }
        let coords = self.coordinates(degree, &product)?;
        Ok(CohomologyClass {
            table: self,
            degree,
            representative: self.vector_to_element(degree, &coords),
        })
    }
}

/// A homology class, carried by a representative cocycle.
#[derive(Debug, Clone)]
pub struct CohomologyClass<'a> {
    table: &'a BettiTable,
    degree: usize,
    representative: ExtElement,
}

impl<'a> CohomologyClass<'a> {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn representative(&self) -> &ExtElement {
        &self.representative
    }

    pub fn coordinates(&self) -> Vec<u32> {
        self.table
            .coordinates(self.degree, &self.representative)
            .expect("classes hold cocycles")
    }

    pub fn is_zero(&self) -> bool {
        self.coordinates().iter().all(|&c| c == 0)
    }

    pub fn cup(&self, other: &CohomologyClass<'a>) -> Result<CohomologyClass<'a>, KoszulError> {
        self.table.cup(self, other)
    }

    pub fn scale(&self, c: u32) -> CohomologyClass<'a> {
        CohomologyClass {
            table: self.table,
            degree: self.degree,
            representative: self.representative.scale(c),
        }
    }
}

impl PartialEq for CohomologyClass<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.table, other.table)
            && (self.degree == other.degree || (self.is_zero() && other.is_zero()))
            && self.coordinates() == other.coordinates()
    }
}

/// The complex of `U(n, p)`: `w = n`, quadratics `e_i e_j` for `i < j` in
/// lexicographic order.
pub fn unp_complex(n: usize, p: Prime) -> Result<KoszulComplex, KoszulError> {
    let mut quadratics = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            quadratics.push(QuadraticForm::from_triples(n, p, &[(i, j, 1)])?);
        }
    }
    KoszulComplex::new(n, quadratics, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prime(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    fn heisenberg(p: u64) -> KoszulComplex {
        let q = QuadraticForm::parse("e1^e2", 2, prime(p)).unwrap();
        KoszulComplex::new(2, vec![q], prime(p)).unwrap()
    }

    fn kvec(w: usize, p: u64, b: &[u32], q: &str) -> KBasisVector {
        KBasisVector {
            bockstein: b.to_vec(),
            quadratic: if q.is_empty() {
                QuadraticForm::from_triples(w, prime(p), &[]).unwrap()
            } else {
                QuadraticForm::parse(q, w, prime(p)).unwrap()
            },
        }
    }

    #[test]
    fn canonicalize_examples() {
        let k = KInvariantSubspace::new(
            2,
            prime(5),
            vec![kvec(2, 5, &[1, 0], ""), kvec(2, 5, &[0, 1], ""), kvec(2, 5, &[1, 0], "e1^e2")],
        )
        .unwrap();
        let c = k.canonicalize().unwrap();
        assert_eq!(c.r(), 1);
        assert_eq!(c.quadratics()[0].to_string(), "e1^e2");

        let k = KInvariantSubspace::new(2, prime(5), vec![kvec(2, 5, &[1, 0], ""), kvec(2, 5, &[0, 1], "")]).unwrap();
        assert_eq!(k.canonicalize().unwrap().r(), 0);

        let k = KInvariantSubspace::new(2, prime(5), vec![kvec(2, 5, &[1, 0], ""), kvec(2, 5, &[0, 0], "e1^e2")]).unwrap();
        assert_eq!(k.canonicalize().unwrap_err(), KoszulError::BocksteinNotContained { corank: 1 });

        let k = KInvariantSubspace::new(
            2,
            prime(5),
            vec![kvec(2, 5, &[1, 0], "e1^e2"), kvec(2, 5, &[0, 1], ""), kvec(2, 5, &[2, 0], "2 e1^e2")],
        )
        .unwrap();
        assert_eq!(
            k.canonicalize().unwrap_err(),
            KoszulError::DegenerateSubspace { rank: 2, count: 3 }
        );

        assert!(matches!(
            KInvariantSubspace::new(2, prime(5), vec![kvec(2, 5, &[1], "")]),
            Err(KoszulError::BocksteinLength { .. })
        ));
    }

    #[test]
    fn differential_examples() {
        let c = heisenberg(5);
        let a = c.ambient();
        let x1 = ExtElement::x(a, 1).unwrap();
        let e1 = ExtElement::e(a, 1).unwrap();
        assert_eq!(c.differential(&x1).unwrap().to_string(), "e1^e2");
        assert!(c.differential(&e1).unwrap().is_zero());
        assert!(c.differential(&e1.wedge(&x1).unwrap()).unwrap().is_zero());
        // δ(e3 x1) = -e1 e2 e3 in w = 3
        let q = QuadraticForm::parse("e1^e2", 3, prime(5)).unwrap();
        let c3 = KoszulComplex::new(3, vec![q], prime(5)).unwrap();
        let v = ExtElement::parse("e3^x1", c3.ambient()).unwrap();
        assert_eq!(c3.differential(&v).unwrap().to_string(), "-e1^e2^e3");
        let wrong = ExtElement::e(Ambient::new(3, 0, prime(5)).unwrap(), 1).unwrap();
        assert!(matches!(c3.differential(&wrong), Err(KoszulError::Ext(ExtError::AmbientMismatch(..)))));
    }

    #[test]
    fn differential_matrix_examples() {
        let c = heisenberg(5);
        let m = c.differential_matrix(1);
        assert_eq!((m.rows(), m.cols()), (3, 3));
        assert_eq!(fplin::rank(&m), 1);
        // x1 (column 2) maps to e1e2 (row 0)
        assert_eq!(m.get(0, 2), 1);
        assert!(c.differential_matrix(0).is_zero());
        let top = c.differential_matrix(3);
        assert_eq!((top.rows(), top.cols()), (0, 1));

        let exterior = KoszulComplex::new(3, vec![], prime(3)).unwrap();
        for d in 0..=3 {
            assert!(exterior.differential_matrix(d).is_zero());
        }
    }

    #[test]
    fn betti_examples() {
        let t = heisenberg(5).betti();
        assert_eq!(t.dims(), &[1, 2, 2, 1]);
        let reps: Vec<String> = t.representatives(2).iter().map(|r| r.to_string()).collect();
        let a = t.complex().ambient();
        let span = [ExtElement::parse("e1^x1", a).unwrap(), ExtElement::parse("e2^x1", a).unwrap()];
        assert_eq!(reps.len(), 2);
        for r in t.representatives(2) {
            assert!(r.terms().all(|(m, _)| span.iter().any(|s| s.coefficient(m) != 0)));
        }

        let t = KoszulComplex::new(2, vec![], prime(3)).unwrap().betti();
        assert_eq!(t.dims(), &[1, 2, 1]);

        let t = unp_complex(3, prime(7)).unwrap().betti();
        assert_eq!(t.dims(), &[1, 3, 8, 12, 8, 3, 1]);
        for d in 0..=6 {
            for r in t.representatives(d) {
                assert!(r.is_homogeneous(d));
                assert!(t.complex().differential(r).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn dependent_quadratics() {
        let p = prime(5);
        let q = QuadraticForm::parse("e1^e2", 2, p).unwrap();
        let err = KoszulComplex::new(2, vec![q.clone(), q.clone()], p).unwrap_err();
        assert_eq!(err, KoszulError::DependentQuadratics { rank: 1, count: 2 });
        let c = KoszulComplex::new_forced(2, vec![q.clone(), q], p).unwrap();
        assert!(!c.quadratics_independent());
        assert_eq!(c.warnings().len(), 1);
        let t = c.betti();
        // x1 - x2 is a cocycle, so b_1 = 3 > w
        assert_eq!(t.dim(1), 3);
    }

    #[test]
    fn size_guard() {
        let p = prime(101);
        let c = unp_complex(5, p).unwrap();
        assert!(c.warnings().is_empty());
        let c = unp_complex(6, p).unwrap();
        assert_eq!(c.w() + c.r(), 21);
        assert_eq!(c.warnings().len(), 1);
        assert!(matches!(unp_complex(7, p), Err(KoszulError::TooLarge(28))));
    }

    #[test]
    fn hypothesis_flag() {
        assert!(unp_complex(3, prime(7)).unwrap().hypothesis_met());
        assert!(!unp_complex(3, prime(3)).unwrap().hypothesis_met());
        assert!(heisenberg(3).hypothesis_met());
    }

    #[test]
    fn cup_examples() {
        let t = heisenberg(5).betti();
        let a = t.complex().ambient();
        let e1 = t.class_of(&ExtElement::e(a, 1).unwrap()).unwrap();
        let e2 = t.class_of(&ExtElement::e(a, 2).unwrap()).unwrap();
        assert!(e1.cup(&e2).unwrap().is_zero());

        let e2x1 = t.class_of(&ExtElement::parse("e2^x1", a).unwrap()).unwrap();
        let top = e1.cup(&e2x1).unwrap();
        assert_eq!(top.degree(), 3);
        assert!(!top.is_zero());
        assert_eq!(top, t.class_of(&ExtElement::parse("e1^e2^x1", a).unwrap()).unwrap());

        let unit = t.unit();
        for d in 0..=3 {
            for i in 0..t.dim(d) {
                let c = t.class(d, i).unwrap();
                assert_eq!(unit.cup(&c).unwrap(), c);
            }
        }

        let over = top.cup(&e1).unwrap();
        assert_eq!(over.degree(), 4);
        assert!(over.is_zero());

        let other = heisenberg(5).betti();
        assert_eq!(e1.cup(&other.unit()).unwrap_err(), KoszulError::TableMismatch);
        assert_eq!(t.class_of(&ExtElement::x(a, 1).unwrap()).unwrap_err(), KoszulError::NotCocycle);
    }

    #[test]
    fn cup_is_well_defined() {
        // adding a boundary to a representative does not change the product
        let t = heisenberg(7).betti();
        let a = t.complex().ambient();
        let x1 = ExtElement::x(a, 1).unwrap();
        let e1x1 = ExtElement::parse("e1^x1", a).unwrap();
        let shifted = e1x1.add(&t.complex().differential(&x1).unwrap()).unwrap();
        let e2 = t.class_of(&ExtElement::e(a, 2).unwrap()).unwrap();
        let c1 = t.class_of(&e1x1).unwrap().cup(&e2).unwrap();
        let c2 = t.class_of(&shifted).unwrap().cup(&e2).unwrap();
        assert_eq!(c1, c2);
        let boundary = t.class_of(&ExtElement::parse("e1^e2", a).unwrap()).unwrap();
        assert!(boundary.is_zero());
    }

    fn random_complex() -> impl Strategy<Value = KoszulComplex> {
        (1usize..=5, prop::sample::select(vec![3u64, 5, 7]))
            .prop_flat_map(|(w, p)| {
                let len = binom(w, 2);
                let rmax = len.min(4);
                (Just(w), Just(p), 0..=rmax).prop_flat_map(move |(w, p, r)| {
                    (
                        Just(w),
                        Just(p),
                        prop::collection::vec(prop::collection::vec(0u32..p as u32, len), r),
                    )
                })
            })
            .prop_filter_map("independent quadratics", |(w, p, rows)| {
                let pr = prime(p);
                let basis = Ambient::new(w, 0, pr).unwrap().basis(2);
                let qs = rows
                    .iter()
                    .map(|coords| {
                        QuadraticForm::new(ExtElement::from_coordinates(Ambient::new(w, 0, pr).unwrap(), &basis, coords))
                            .unwrap()
                    })
                    .collect();
                KoszulComplex::new(w, qs, pr).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delta_squared_vanishes(c in random_complex()) {
            for d in 0..c.top_degree() {
                let prod = c.differential_matrix(d + 1).mul(&c.differential_matrix(d)).unwrap();
                prop_assert!(prod.is_zero());
            }
        }

        #[test]
        fn duality_and_euler(c in random_complex()) {
            let t = c.betti();
            let n = c.top_degree();
            for d in 0..=n {
                prop_assert_eq!(t.dim(d), t.dim(n - d));
            }
            prop_assert_eq!(t.euler_characteristic(), 0);
            prop_assert_eq!(t.dim(0), 1);
            prop_assert_eq!(t.dim(1), c.w());
            prop_assert_eq!(t.dim(n), 1);
        }

        #[test]
        fn betti_matches_rank_formula(c in random_complex()) {
            let t = c.betti();
            for d in 0..=c.top_degree() {
                let out = c.differential_matrix(d);
                let kernel = out.cols() - fplin::rank(&out);
                let image = if d == 0 { 0 } else { fplin::rank(&c.differential_matrix(d - 1)) };
                prop_assert_eq!(t.dim(d), kernel - image);
            }
        }

        #[test]
        fn cup_graded_commutative_and_associative(c in random_complex(), picks in prop::collection::vec((0usize..6, 0usize..32), 3)) {
            let t = c.betti();
            let n = c.top_degree();
            let classes: Vec<CohomologyClass> = picks
                .iter()
                .map(|&(d, i)| {
                    let d = d.min(n);
                    t.class(d, i % t.dim(d).max(1)).unwrap_or_else(|| t.unit())
                })
                .collect();
            let (a, b, x) = (&classes[0], &classes[1], &classes[2]);
            let ab = a.cup(b).unwrap();
            let ba = b.cup(a).unwrap();
            let sign = if a.degree() * b.degree() % 2 == 1 { c.prime().value() - 1 } else { 1 };
            prop_assert_eq!(ab.clone(), ba.scale(sign));
            prop_assert_eq!(ab.cup(x).unwrap(), a.cup(&b.cup(x).unwrap()).unwrap());
        }
    }

    #[test]
    fn prime_independence_unp3() {
        let dims: Vec<Vec<usize>> = [7, 11, 101].iter().map(|&p| unp_complex(3, prime(p)).unwrap().betti().dims().to_vec()).collect();
        assert!(dims.windows(2).all(|w| w[0] == w[1]));
    }
}
