//! Deterministic exact linear algebra over a prime field `F_p`.
//!
//! All other modules reduce their computations to the operations here:
//! ranks, kernels, images, canonical solves, and subspace arithmetic.
//!
//! Two canonical forms carry the determinism guarantees of the crate:
//!
//! * matrices are reduced with ordinary Gauss-Jordan elimination, so
//!   [`Matrix::solve`] returns the echelon-canonical solution with all free
//!   coordinates zero;
//! * subspaces are stored in reduced column-echelon form with strictly
//!   increasing pivot rows, so two equal subspaces have bit-identical basis
//!   matrices no matter which generating set produced them.
//!
//! Every "choose a splitting" in the constructions downstream is realized as
//! [`Subspace::complement`]: the span of standard basis vectors at the
//! non-pivot rows of the echelon basis.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// The requested characteristic is not a prime number.
    NotPrime(u64),
    /// `quotient_basis(a, b)` was called with `a` not contained in `b`.
    NotContained,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrime(p) => write!(f, "{p} is not prime"),
            Error::NotContained => write!(f, "subspace containment violation in quotient"),
        }
    }
}

impl std::error::Error for Error {}

/// The ground field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    p: u64,
}

pub const DEFAULT_PRIME: u64 = 5;

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec { p: DEFAULT_PRIME }
    }
}

impl FieldSpec {
    pub fn new(p: u64) -> Result<Self, Error> {
        if is_prime(p) {
            Ok(FieldSpec { p })
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    (a + b) % p
}

#[inline]
fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    (a + p - b % p) % p
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    (a * b) % p
}

/// Multiplicative inverse by Fermat; `a` must be nonzero mod `p`.
fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0, "inverse of zero");
    // p is small (a configuration parameter), so square-and-multiply is ample.
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    result
}

/// Dense row-major matrix over `F_p`.
///
/// Degenerate shapes (`0 x n`, `n x 0`) are legal everywhere and have rank 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    p: u64,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} mod {} [", self.rows, self.cols, self.p)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{} ", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix {
            p: field.p,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from rows of integers (reduced mod p; negatives are not
    /// representable in `u64`, use `from_signed_rows` for those).
    pub fn from_rows(field: FieldSpec, rows: &[Vec<u64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Matrix::zeros(field, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_signed_rows(field: FieldSpec, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Matrix::zeros(field, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v.rem_euclid(field.p as i64) as u64);
            }
        }
        m
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { p: self.p }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.entries[r * self.cols + c] = v % self.p;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn col(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row(&self, r: usize) -> Vec<u64> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field(), self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.check_same_shape(other);
        let mut m = self.clone();
        for (a, &b) in m.entries.iter_mut().zip(other.entries.iter()) {
            *a = add_mod(*a, b, self.p);
        }
        m
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.check_same_shape(other);
        let mut m = self.clone();
        for (a, &b) in m.entries.iter_mut().zip(other.entries.iter()) {
            *a = sub_mod(*a, b, self.p);
        }
        m
    }

    pub fn neg(&self) -> Matrix {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = sub_mod(0, *a, self.p);
        }
        m
    }

    pub fn scale(&self, s: u64) -> Matrix {
        let mut m = self.clone();
        for a in m.entries.iter_mut() {
            *a = mul_mod(*a, s % self.p, self.p);
        }
        m
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.p, other.p, "field mismatch");
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut m = Matrix::zeros(self.field(), self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = add_mod(m.get(r, c), mul_mod(a, other.get(k, c), self.p), self.p);
                    m.set(r, c, v);
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|r| {
                let mut acc = 0u64;
                for c in 0..self.cols {
                    acc = add_mod(acc, mul_mod(self.get(r, c), v[c] % self.p, self.p), self.p);
                }
                acc
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.p, other.p, "field mismatch");
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut m = Matrix::zeros(self.field(), self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                m.set(r, self.cols + c, other.get(r, c));
            }
        }
        m
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.p, other.p, "field mismatch");
        assert_eq!(self.cols, other.cols, "col mismatch in vstack");
        let mut m = Matrix::zeros(self.field(), self.rows + other.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c));
            }
        }
        for r in 0..other.rows {
            for c in 0..self.cols {
                m.set(self.rows + r, c, other.get(r, c));
            }
        }
        m
    }

    pub fn block_diag(field: FieldSpec, blocks: &[&Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Matrix::zeros(field, rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            assert_eq!(b.p, field.p, "field mismatch");
            for r in 0..b.rows {
                for c in 0..b.cols {
                    m.set(ro + r, co + c, b.get(r, c));
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        m
    }

    pub fn from_cols(field: FieldSpec, rows: usize, cols: &[Vec<u64>]) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn submatrix_cols(&self, keep: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field(), self.rows, keep.len());
        for (j, &c) in keep.iter().enumerate() {
            for r in 0..self.rows {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    fn check_same_shape(&self, other: &Matrix) {
        assert_eq!(self.p, other.p, "field mismatch");
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
    }

    /// In-place Gauss-Jordan reduction; returns pivot column indices.
    fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let mut sel = None;
            for r in row..self.rows {
                if self.get(r, col) != 0 {
                    sel = Some(r);
                    break;
                }
            }
            let Some(sel) = sel else { continue };
            if sel != row {
                for c in 0..self.cols {
                    let (a, b) = (self.get(row, c), self.get(sel, c));
                    self.set(row, c, b);
                    self.set(sel, c, a);
                }
            }
            let inv = inv_mod(self.get(row, col), self.p);
            for c in 0..self.cols {
                let v = mul_mod(self.get(row, c), inv, self.p);
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row {
                    let f = self.get(r, col);
                    if f != 0 {
                        for c in 0..self.cols {
                            let v = sub_mod(
                                self.get(r, c),
                                mul_mod(f, self.get(row, c), self.p),
                                self.p,
                            );
                            self.set(r, c, v);
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Canonical kernel of the matrix, as a subspace of `F_p^cols`.
    pub fn kernel(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let pivot_set: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &c in &pivots {
                v[c] = true;
            }
            v
        };
        let mut gens: Vec<Vec<u64>> = Vec::new();
        for free in 0..self.cols {
            if pivot_set[free] {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = sub_mod(0, r.get(i, free), self.p);
            }
            gens.push(v);
        }
        Subspace::from_generators(self.field(), self.cols, &gens)
    }

    /// Canonical column span, as a subspace of `F_p^rows`.
    pub fn image(&self) -> Subspace {
        let gens: Vec<Vec<u64>> = (0..self.cols).map(|c| self.col(c)).collect();
        Subspace::from_generators(self.field(), self.rows, &gens)
    }

    /// Echelon-canonical solution of `self * x = target` (free coordinates
    /// zero), or `None` when the target is not in the image.
    pub fn solve(&self, target: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(target.len(), self.rows, "target length mismatch");
        let rhs = Matrix::from_cols(self.field(), self.rows, &[target.to_vec()]);
        self.solve_matrix(&rhs).map(|m| m.col(0))
    }

    /// Columnwise canonical solve: finds `X` with `self * X = targets`.
    pub fn solve_matrix(&self, targets: &Matrix) -> Option<Matrix> {
        assert_eq!(self.rows, targets.rows, "target rows mismatch");
        let aug = self.hstack(targets);
        let (r, pivots) = aug.rref();
        // pivots in the target block mean inconsistency
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Matrix::zeros(self.field(), self.cols, targets.cols);
        for (i, &pc) in pivots.iter().enumerate() {
            for j in 0..targets.cols {
                x.set(pc, j, r.get(i, self.cols + j));
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let id = Matrix::identity(self.field(), self.rows);
        let aug = self.hstack(&id);
        let (r, pivots) = aug.rref();
        if pivots.len() != self.rows || pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut inv = Matrix::zeros(self.field(), self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                inv.set(i, j, r.get(i, self.cols + j));
            }
        }
        Some(inv)
    }
}

/// Outcome of [`rank_kernel_image`].
#[derive(Debug, Clone)]
pub struct RankKernelImage {
    pub rank: usize,
    pub kernel: Subspace,
    pub image: Subspace,
}

/// Rank, canonical kernel and canonical image of a matrix in one call.
pub fn rank_kernel_image(m: &Matrix) -> RankKernelImage {
    let kernel = m.kernel();
    let image = m.image();
    RankKernelImage {
        rank: image.dim(),
        kernel,
        image,
    }
}

/// A linear subspace of `F_p^ambient`, stored canonically.
///
/// The basis matrix is in reduced column-echelon form: pivot rows strictly
/// increase from left to right, pivots are 1 and are the only nonzero entry
/// in their row. This makes equality of subspaces literal equality of basis
/// matrices.
#[derive(Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
    pivot_rows: Vec<usize>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subspace dim {} of F_{}^{} {:?}",
            self.dim(),
            self.basis.p,
            self.ambient,
            self.basis
        )
    }
}

impl Subspace {
    /// Canonical subspace spanned by the given vectors.
    pub fn from_generators(field: FieldSpec, ambient: usize, gens: &[Vec<u64>]) -> Subspace {
        for g in gens {
            assert_eq!(g.len(), ambient, "generator length mismatch");
        }
        let rows: Vec<Vec<u64>> = gens.to_vec();
        let m = Matrix::from_rows(field, &rows);
        // RREF of the transposed generator matrix, transposed back, is the
        // reduced column echelon form of the span.
        let (r, pivots) = m.rref();
        let mut basis = Matrix::zeros(field, ambient, pivots.len());
        for (i, _) in pivots.iter().enumerate() {
            for c in 0..ambient {
                basis.set(c, i, r.get(i, c));
            }
        }
        Subspace {
            ambient,
            basis,
            pivot_rows: pivots,
        }
    }

    /// Canonical subspace spanned by the columns of a matrix.
    pub fn from_matrix_columns(m: &Matrix) -> Subspace {
        let gens: Vec<Vec<u64>> = (0..m.cols()).map(|c| m.col(c)).collect();
        Subspace::from_generators(m.field(), m.rows(), &gens)
    }

    pub fn zero(field: FieldSpec, ambient: usize) -> Subspace {
        Subspace::from_generators(field, ambient, &[])
    }

    pub fn full(field: FieldSpec, ambient: usize) -> Subspace {
        let gens: Vec<Vec<u64>> = (0..ambient)
            .map(|i| {
                let mut v = vec![0; ambient];
                v[i] = 1;
                v
            })
            .collect();
        Subspace::from_generators(field, ambient, &gens)
    }

    pub fn field(&self) -> FieldSpec {
        self.basis.field()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Canonical basis matrix (`ambient x dim`, reduced column echelon).
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivot_rows
    }

    pub fn contains_vector(&self, v: &[u64]) -> bool {
        self.coords_of(v).is_some()
    }

    /// Coordinates of `v` in the canonical basis, if `v` lies in the span.
    pub fn coords_of(&self, v: &[u64]) -> Option<Vec<u64>> {
        self.basis.solve(v)
    }

    /// Coordinates of several vectors at once (columns of `m`).
    pub fn coords_of_matrix(&self, m: &Matrix) -> Option<Matrix> {
        self.basis.solve_matrix(m)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        (0..other.dim()).all(|c| self.contains_vector(&other.basis.col(c)))
    }

    /// The deterministic complement: span of standard basis vectors at the
    /// non-pivot rows of the echelon basis.
    pub fn complement(&self) -> Subspace {
        let mut gens = Vec::new();
        for row in 0..self.ambient {
            if !self.pivot_rows.contains(&row) {
                let mut v = vec![0; self.ambient];
                v[row] = 1;
                gens.push(v);
            }
        }
        Subspace::from_generators(self.field(), self.ambient, &gens)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        let mut gens: Vec<Vec<u64>> = (0..self.dim()).map(|c| self.basis.col(c)).collect();
        gens.extend((0..other.dim()).map(|c| other.basis.col(c)));
        Subspace::from_generators(self.field(), self.ambient, &gens)
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        if self.is_zero() || other.is_zero() {
            return Subspace::zero(self.field(), self.ambient);
        }
        // kernel of [A | B]: pairs (x, y) with A x = -B y, so A x ranges over
        // the intersection
        let stacked = self.basis.hstack(&other.basis);
        let ker = stacked.kernel();
        let mut gens = Vec::new();
        for c in 0..ker.dim() {
            let v = ker.basis.col(c);
            let x = &v[..self.dim()];
            gens.push(self.basis.mul_vec(x));
        }
        Subspace::from_generators(self.field(), self.ambient, &gens)
    }

    /// Columns extending `a`'s basis to a basis of `b` (requires `a ⊆ b`).
    ///
    /// The returned columns are drawn from `b`'s canonical basis, so the
    /// output is deterministic; together with `a` they span `b`.
    pub fn quotient_basis(a: &Subspace, b: &Subspace) -> Result<Matrix, Error> {
        assert_eq!(a.ambient, b.ambient, "ambient mismatch");
        if !b.contains(a) {
            return Err(Error::NotContained);
        }
        let mut kept: Vec<usize> = Vec::new();
        let mut span = a.clone();
        for c in 0..b.dim() {
            let col = b.basis.col(c);
            if !span.contains_vector(&col) {
                kept.push(c);
                span = span.sum(&Subspace::from_generators(a.field(), a.ambient, &[col]));
            }
        }
        Ok(b.basis.submatrix_cols(&kept))
    }

    /// Basis completion: a complement of `self` inside `other` (requires
    /// `self ⊆ other`), spanned by columns of `other`'s canonical basis.
    pub fn complement_within(&self, other: &Subspace) -> Result<Subspace, Error> {
        let cols = Subspace::quotient_basis(self, other)?;
        Ok(Subspace::from_matrix_columns(&cols))
    }

    /// Image of the subspace under a linear map.
    pub fn map_by(&self, m: &Matrix) -> Subspace {
        assert_eq!(m.cols(), self.ambient, "map domain mismatch");
        Subspace::from_matrix_columns(&m.mul(&self.basis))
    }

    /// Preimage `m^{-1}(self)` as a subspace of the domain of `m`.
    pub fn preimage_under(&self, m: &Matrix) -> Subspace {
        assert_eq!(m.rows(), self.ambient, "map codomain mismatch");
        // x is in the preimage iff m x lands in the span: kernel of the
        // composite (quotient by self) . m
        let proj = projection_killing(self);
        proj.mul(m).kernel()
    }
}

/// A matrix `q` with kernel exactly `s`, canonical for `s`.
///
/// Rows are indexed by the non-pivot rows of `s`; `q` restricted to the
/// deterministic complement of `s` is the identity in those coordinates.
pub fn projection_killing(s: &Subspace) -> Matrix {
    let field = s.field();
    let n = s.ambient_dim();
    let comp = s.complement();
    // [basis(s) | basis(comp)] is invertible; the rows of its inverse at the
    // complement block give the projection
    let m = s.basis().hstack(comp.basis());
    let inv = m.inverse().expect("complement construction is a direct sum");
    let mut q = Matrix::zeros(field, comp.dim(), n);
    for r in 0..comp.dim() {
        for c in 0..n {
            q.set(r, c, inv.get(s.dim() + r, c));
        }
    }
    q
}

/// Given subspaces whose direct sum is the whole ambient space, returns the
/// projection matrices onto each block (in block coordinates).
pub fn block_projections(blocks: &[&Subspace]) -> Vec<Matrix> {
    assert!(!blocks.is_empty());
    let field = blocks[0].field();
    let n = blocks[0].ambient_dim();
    let mut m = blocks[0].basis().clone();
    for b in &blocks[1..] {
        assert_eq!(b.ambient_dim(), n, "ambient mismatch");
        m = m.hstack(b.basis());
    }
    assert_eq!(m.cols(), n, "blocks do not fill the ambient space");
    let inv = m.inverse().expect("blocks are not a direct sum");
    let mut out = Vec::new();
    let mut offset = 0;
    for b in blocks {
        let mut q = Matrix::zeros(field, b.dim(), n);
        for r in 0..b.dim() {
            for c in 0..n {
                q.set(r, c, inv.get(offset + r, c));
            }
        }
        out.push(q);
        offset += b.dim();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::DetRng;

    fn f(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn random_matrix(rng: &mut DetRng, field: FieldSpec, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, rng.below(field.p()));
            }
        }
        m
    }

    #[test]
    fn field_spec_rejects_composites() {
        assert!(FieldSpec::new(4).is_err());
        assert!(FieldSpec::new(1).is_err());
        assert!(FieldSpec::new(0).is_err());
        assert!(FieldSpec::new(2).is_ok());
        assert!(FieldSpec::new(13).is_ok());
    }

    #[test]
    fn rki_identity() {
        let m = Matrix::identity(f(5), 3);
        let rki = rank_kernel_image(&m);
        assert_eq!(rki.rank, 3);
        assert_eq!(rki.kernel.dim(), 0);
        assert_eq!(rki.image, Subspace::full(f(5), 3));
    }

    #[test]
    fn rki_ones_over_f2_matches_enumeration() {
        let m = Matrix::from_rows(f(2), &[vec![1, 1], vec![1, 1]]);
        let rki = rank_kernel_image(&m);
        assert_eq!(rki.rank, 1);
        // Independent oracle: enumerate all four vectors of F_2^2.
        let mut null = Vec::new();
        for a in 0..2u64 {
            for b in 0..2u64 {
                if m.mul_vec(&[a, b]).iter().all(|&x| x == 0) && (a, b) != (0, 0) {
                    null.push(vec![a, b]);
                }
            }
        }
        assert_eq!(null, vec![vec![1, 1]]);
        assert_eq!(rki.kernel.dim(), 1);
        assert_eq!(rki.kernel.basis().col(0), vec![1, 1]);
    }

    #[test]
    fn rki_zero_matrix() {
        let m = Matrix::zeros(f(5), 2, 3);
        let rki = rank_kernel_image(&m);
        assert_eq!(rki.rank, 0);
        assert_eq!(rki.kernel, Subspace::full(f(5), 3));
        assert!(rki.image.is_zero());
    }

    #[test]
    fn solve_identity() {
        let m = Matrix::identity(f(5), 3);
        assert_eq!(m.solve(&[1, 0, 0]), Some(vec![1, 0, 0]));
    }

    #[test]
    fn solve_underdetermined_is_canonical() {
        // solve([[1,1]], [3]) over F_5: canonical solution has the free
        // coordinate zero
        let m = Matrix::from_rows(f(5), &[vec![1, 1]]);
        let x = m.solve(&[3]).unwrap();
        assert_eq!(x, vec![3, 0]);
        assert_eq!(m.mul_vec(&x), vec![3]);
    }

    #[test]
    fn solve_zero_matrix_nonzero_target() {
        let m = Matrix::zeros(f(5), 2, 2);
        assert_eq!(m.solve(&[1, 0]), None);
    }

    #[test]
    fn complement_examples() {
        let e1 = Subspace::from_generators(f(5), 2, &[vec![1, 0]]);
        assert_eq!(
            e1.complement(),
            Subspace::from_generators(f(5), 2, &[vec![0, 1]])
        );

        // span{(1,1)} in F_2^2 has pivot row 0, so complement is e_2
        let diag = Subspace::from_generators(f(2), 2, &[vec![1, 1]]);
        let comp = diag.complement();
        assert_eq!(comp, Subspace::from_generators(f(2), 2, &[vec![0, 1]]));
        // direct sum check by rank
        assert_eq!(diag.sum(&comp).dim(), 2);

        let full = Subspace::full(f(3), 4);
        assert!(full.complement().is_zero());
    }

    #[test]
    fn intersect_examples() {
        let a = Subspace::from_generators(f(5), 3, &[vec![1, 0, 0], vec![0, 1, 0]]);
        let b = Subspace::from_generators(f(5), 3, &[vec![0, 1, 0], vec![0, 0, 1]]);
        let i = a.intersect(&b);
        assert_eq!(i, Subspace::from_generators(f(5), 3, &[vec![0, 1, 0]]));

        // scalar multiples span the same line
        let c = Subspace::from_generators(f(5), 3, &[vec![1, 2, 0]]);
        let d = Subspace::from_generators(f(5), 3, &[vec![2, 4, 0]]);
        let i2 = c.intersect(&d);
        assert_eq!(i2.dim(), 1);
        assert!(c.contains(&i2) && d.contains(&i2) && i2.contains(&c));
    }

    #[test]
    fn quotient_basis_examples() {
        let zero = Subspace::zero(f(5), 2);
        let full = Subspace::full(f(5), 2);
        let q = Subspace::quotient_basis(&zero, &full).unwrap();
        assert_eq!(q, Matrix::identity(f(5), 2));

        let a = Subspace::from_generators(f(5), 2, &[vec![1, 0]]);
        let b = Subspace::from_generators(f(5), 2, &[vec![0, 1]]);
        assert_eq!(
            Subspace::quotient_basis(&b, &a),
            Err(Error::NotContained)
        );
    }

    #[test]
    fn canonicity_under_permuted_generators() {
        let mut rng = DetRng::new(7);
        for p in [2u64, 3, 5] {
            let field = f(p);
            for _ in 0..60 {
                let n = 1 + rng.usize_below(5);
                let k = 1 + rng.usize_below(4);
                let gens: Vec<Vec<u64>> = (0..k)
                    .map(|_| (0..n).map(|_| rng.below(p)).collect())
                    .collect();
                let mut permuted = gens.clone();
                permuted.reverse();
                // also rescale by a nonzero constant
                let c = 1 + rng.below(p - 1);
                for g in permuted.iter_mut() {
                    for x in g.iter_mut() {
                        *x = (*x * c) % p;
                    }
                }
                let s1 = Subspace::from_generators(field, n, &gens);
                let s2 = Subspace::from_generators(field, n, &permuted);
                assert_eq!(s1, s2, "canonical form must not depend on generators");
            }
        }
    }

    #[test]
    fn random_rank_nullity_solve_complement() {
        let mut rng = DetRng::new(2024);
        let mut count = 0;
        while count < 1000 {
            let p = [2u64, 3, 5][rng.usize_below(3)];
            let field = f(p);
            let rows = rng.usize_below(7);
            let cols = rng.usize_below(7);
            let m = random_matrix(&mut rng, field, rows, cols);
            let rki = rank_kernel_image(&m);
            // rank-nullity
            assert_eq!(rki.rank + rki.kernel.dim(), cols);
            // kernel vectors are annihilated
            for c in 0..rki.kernel.dim() {
                let v = rki.kernel.basis().col(c);
                assert!(m.mul_vec(&v).iter().all(|&x| x == 0));
            }
            // solve exactly reproduces a target in the image
            if cols > 0 {
                let x: Vec<u64> = (0..cols).map(|_| rng.below(p)).collect();
                let target = m.mul_vec(&x);
                let sol = m.solve(&target).expect("target is in the image");
                assert_eq!(m.mul_vec(&sol), target);
            }
            // complement direct-sum check by rank
            let comp = rki.image.complement();
            assert_eq!(rki.image.sum(&comp).dim(), rows);
            assert!(rki.image.intersect(&comp).is_zero());
            count += 1;
        }
    }

    #[test]
    fn intersect_sum_dimension_formula() {
        let mut rng = DetRng::new(99);
        for _ in 0..500 {
            let p = [2u64, 3, 5][rng.usize_below(3)];
            let field = f(p);
            let n = 1 + rng.usize_below(6);
            let ka = rng.usize_below(4);
            let kb = rng.usize_below(4);
            let a = random_matrix(&mut rng, field, n, ka).image();
            let b = random_matrix(&mut rng, field, n, kb).image();
            let i = a.intersect(&b);
            let s = a.sum(&b);
            assert_eq!(i.dim() + s.dim(), a.dim() + b.dim());
            assert!(a.contains(&i) && b.contains(&i));
            assert!(s.contains(&a) && s.contains(&b));
        }
    }

    #[test]
    fn projection_killing_kills_exactly() {
        let mut rng = DetRng::new(5150);
        for _ in 0..100 {
            let p = [2u64, 5][rng.usize_below(2)];
            let field = f(p);
            let n = 1 + rng.usize_below(5);
            let k = rng.usize_below(4);
            let s = random_matrix(&mut rng, field, n, k).image();
            let q = projection_killing(&s);
            assert_eq!(q.kernel(), s);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix(p: u64) -> impl Strategy<Value = Matrix> {
            (0usize..5, 0usize..5).prop_flat_map(move |(rows, cols)| {
                proptest::collection::vec(0u64..p, rows * cols).prop_map(move |entries| {
                    let field = FieldSpec::new(p).unwrap();
                    let mut m = Matrix::zeros(field, rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            m.set(r, c, entries[r * cols + c]);
                        }
                    }
                    m
                })
            })
        }

        proptest! {
            #[test]
            fn rank_nullity_holds(m in arb_matrix(5)) {
                let rki = rank_kernel_image(&m);
                prop_assert_eq!(rki.rank + rki.kernel.dim(), m.cols());
            }

            #[test]
            fn span_is_generator_independent(m in arb_matrix(3)) {
                let s1 = m.image();
                // doubled generators span the same subspace
                let doubled = m.hstack(&m);
                let s2 = doubled.image();
                prop_assert_eq!(s1, s2);
            }

            #[test]
            fn complement_is_direct(m in arb_matrix(5)) {
                let s = m.image();
                let c = s.complement();
                prop_assert!(s.intersect(&c).is_zero());
                prop_assert_eq!(s.sum(&c).dim(), m.rows());
            }
        }
    }

    #[test]
    fn preimage_under_roundtrip() {
        let mut rng = DetRng::new(31);
        for _ in 0..100 {
            let field = f(5);
            let rows = 1 + rng.usize_below(4);
            let cols = 1 + rng.usize_below(4);
            let m = random_matrix(&mut rng, field, rows, cols);
            let k = rng.usize_below(3);
            let s = random_matrix(&mut rng, field, rows, k).image();
            let pre = s.preimage_under(&m);
            // every preimage vector maps into s
            for c in 0..pre.dim() {
                let v = pre.basis().col(c);
                assert!(s.contains_vector(&m.mul_vec(&v)));
            }
            // kernel is always in the preimage
            assert!(pre.contains(&m.kernel()));
        }
    }
}
