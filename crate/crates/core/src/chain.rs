//! Non-negatively graded chain complexes over `F_p` and their standard
//! constructions.
//!
//! The differential lowers degree; `d[n]` maps degree `n` to degree `n-1`.
//! Homology at each degree comes with deterministic cycle representatives
//! (the echelon complement of the boundaries inside the cycles) and a
//! retraction `project` that vanishes on boundaries, so induced maps on
//! homology are honest matrices and functoriality is a checked property.

use std::fmt;

use crate::exactalg::{self, FieldSpec, Matrix, Subspace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// `d[degree-1] * d[degree]` is nonzero.
    NotAComplex { degree: usize },
    /// A differential has the wrong shape for the stated dimensions.
    ShapeMismatch { degree: usize },
    /// A chain-map component fails `f d = d f` at the given degree.
    NotAChainMap { degree: usize },
    /// Mixed characteristics.
    FieldMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotAComplex { degree } => write!(f, "d∘d ≠ 0 at degree {degree}"),
            Error::ShapeMismatch { degree } => {
                write!(f, "differential shape mismatch at degree {degree}")
            }
            Error::NotAChainMap { degree } => {
                write!(f, "chain map condition fails at degree {degree}")
            }
            Error::FieldMismatch => write!(f, "mixed field characteristics"),
        }
    }
}

impl std::error::Error for Error {}

/// A non-negatively graded chain complex with finite support.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainComplex {
    field: FieldSpec,
    dims: Vec<usize>,
    /// `d[n]: dims[n] -> dims[n-1]`; `d[0]` has zero rows.
    d: Vec<Matrix>,
}

impl fmt::Debug for ChainComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChainComplex dims {:?} mod {}", self.dims, self.field.p())
    }
}

impl ChainComplex {
    /// Builds and validates a complex. `diffs[i]` is `d[i+1]`; `d[0]` is
    /// implicit.
    pub fn new(field: FieldSpec, dims: Vec<usize>, diffs: Vec<Matrix>) -> Result<Self, Error> {
        let n = dims.len();
        if n == 0 {
            return Ok(ChainComplex {
                field,
                dims,
                d: vec![],
            });
        }
        if diffs.len() + 1 != n {
            return Err(Error::ShapeMismatch { degree: diffs.len() });
        }
        let mut d = Vec::with_capacity(n);
        d.push(Matrix::zeros(field, 0, dims[0]));
        for (i, m) in diffs.into_iter().enumerate() {
            let degree = i + 1;
            if m.p() != field.p() {
                return Err(Error::FieldMismatch);
            }
            if m.rows() != dims[degree - 1] || m.cols() != dims[degree] {
                return Err(Error::ShapeMismatch { degree });
            }
            d.push(m);
        }
        for degree in 2..n {
            if !d[degree - 1].mul(&d[degree]).is_zero() {
                return Err(Error::NotAComplex { degree });
            }
        }
        Ok(ChainComplex { field, dims, d })
    }

    pub fn zero(field: FieldSpec) -> Self {
        ChainComplex {
            field,
            dims: vec![],
            d: vec![],
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// One past the highest stored degree.
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim_at(&self, n: usize) -> usize {
        self.dims.get(n).copied().unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// The differential out of degree `n` (zeros when out of range).
    pub fn d_at(&self, n: usize) -> Matrix {
        if n < self.d.len() {
            self.d[n].clone()
        } else {
            let rows = if n == 0 { 0 } else { self.dim_at(n - 1) };
            Matrix::zeros(self.field, rows, self.dim_at(n))
        }
    }

    pub fn is_zero_complex(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    /// Cycles `Z_n = Ker d_n` (all of degree 0 at `n = 0`).
    pub fn cycles(&self, n: usize) -> Subspace {
        if n == 0 {
            Subspace::full(self.field, self.dim_at(0))
        } else {
            self.d_at(n).kernel()
        }
    }

    /// Boundaries `B_n = Im d_{n+1}`.
    pub fn boundaries(&self, n: usize) -> Subspace {
        self.d_at(n + 1).image()
    }

    pub fn max_degree(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .enumerate()
            .map(|(n, &d)| if n % 2 == 0 { d as i64 } else { -(d as i64) })
            .sum()
    }

    /// Homology at degree `k` with deterministic representatives.
    pub fn homology(&self, k: usize) -> Homology {
        let n = self.dim_at(k);
        let z = self.cycles(k);
        let b = self.boundaries(k);
        // complement of boundaries inside cycles, realized in cycle
        // coordinates so the choice is the standard echelon one
        let b_in_z = z
            .coords_of_matrix(b.basis())
            .expect("boundaries are cycles");
        let b_z = Subspace::from_matrix_columns(&b_in_z);
        let comp = b_z.complement_within(&Subspace::full(self.field, z.dim())).unwrap();
        let reps = z.basis().mul(comp.basis());
        let h = reps.cols();
        // projection: invert [B | reps | complement-of-Z] and keep the rows of
        // the reps block
        let project = if n == 0 {
            Matrix::zeros(self.field, 0, 0)
        } else {
            let zc = z.complement();
            let mut m = b.basis().hstack(&reps);
            m = m.hstack(zc.basis());
            let inv = m.inverse().expect("B ⊕ R ⊕ C spans the degree");
            let mut proj = Matrix::zeros(self.field, h, n);
            for r in 0..h {
                for c in 0..n {
                    proj.set(r, c, inv.get(b.dim() + r, c));
                }
            }
            proj
        };
        Homology {
            dim: h,
            cycle_reps: reps,
            project,
        }
    }

    pub fn homology_dims(&self) -> Vec<usize> {
        (0..self.len()).map(|k| self.homology(k).dim).collect()
    }

    pub fn direct_sum(&self, other: &ChainComplex) -> ChainComplex {
        let len = self.len().max(other.len());
        let mut dims = Vec::with_capacity(len);
        let mut diffs = Vec::new();
        for n in 0..len {
            dims.push(self.dim_at(n) + other.dim_at(n));
        }
        for n in 1..len {
            diffs.push(Matrix::block_diag(
                self.field,
                &[&self.d_at(n), &other.d_at(n)],
            ));
        }
        ChainComplex::new(self.field, dims, diffs).expect("sum of complexes is a complex")
    }
}

/// Homology of one degree: dimension, chosen cycle representatives, and the
/// retraction onto those representatives (vanishing on boundaries).
#[derive(Debug, Clone)]
pub struct Homology {
    pub dim: usize,
    /// `dims[k] x dim`; columns are cycles spanning a complement of the
    /// boundaries inside the cycles.
    pub cycle_reps: Matrix,
    /// `dim x dims[k]`; `project * cycle_reps = I` and `project * d = 0`.
    pub project: Matrix,
}

/// Sphere complex `K(V, n)`: `V` concentrated in degree `n`.
pub fn sphere(field: FieldSpec, dim_v: usize, n: usize) -> ChainComplex {
    let mut dims = vec![0; n + 1];
    dims[n] = dim_v;
    let diffs = (1..=n)
        .map(|k| Matrix::zeros(field, dims[k - 1], dims[k]))
        .collect();
    ChainComplex::new(field, dims, diffs).unwrap()
}

/// Disk complex `CK(V, m)`: copies of `V` in degrees `m` and `m+1` with the
/// identity differential.
pub fn disk(field: FieldSpec, dim_v: usize, m: usize) -> ChainComplex {
    let mut dims = vec![0; m + 2];
    dims[m] = dim_v;
    dims[m + 1] = dim_v;
    let mut diffs: Vec<Matrix> = (1..=m + 1)
        .map(|k| Matrix::zeros(field, dims[k - 1], dims[k]))
        .collect();
    diffs[m] = Matrix::identity(field, dim_v);
    ChainComplex::new(field, dims, diffs).unwrap()
}

/// A degree-0 chain map.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainMap {
    source: ChainComplex,
    target: ChainComplex,
    /// `f[n]: source_n -> target_n`; absent degrees are zero.
    components: Vec<Matrix>,
}

impl fmt::Debug for ChainMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ChainMap {:?} -> {:?}",
            self.source.dims(),
            self.target.dims()
        )
    }
}

impl ChainMap {
    pub fn new(
        source: ChainComplex,
        target: ChainComplex,
        components: Vec<Matrix>,
    ) -> Result<Self, Error> {
        if source.field().p() != target.field().p() {
            return Err(Error::FieldMismatch);
        }
        let len = source.len().max(target.len()).max(components.len());
        let mut comps = Vec::with_capacity(len);
        for n in 0..len {
            let m = components.get(n).cloned().unwrap_or_else(|| {
                Matrix::zeros(source.field(), target.dim_at(n), source.dim_at(n))
            });
            if m.rows() != target.dim_at(n) || m.cols() != source.dim_at(n) {
                return Err(Error::ShapeMismatch { degree: n });
            }
            comps.push(m);
        }
        let map = ChainMap {
            source,
            target,
            components: comps,
        };
        map.check_chain_condition()?;
        Ok(map)
    }

    fn check_chain_condition(&self) -> Result<(), Error> {
        let len = self.components.len();
        for n in 1..len {
            let lhs = self.f_at(n - 1).mul(&self.source.d_at(n));
            let rhs = self.target.d_at(n).mul(&self.f_at(n));
            if lhs != rhs {
                return Err(Error::NotAChainMap { degree: n });
            }
        }
        Ok(())
    }

    pub fn zero(source: ChainComplex, target: ChainComplex) -> Self {
        ChainMap::new(source, target, vec![]).expect("zero map is a chain map")
    }

    pub fn identity(c: &ChainComplex) -> Self {
        let comps = (0..c.len())
            .map(|n| Matrix::identity(c.field(), c.dim_at(n)))
            .collect();
        ChainMap::new(c.clone(), c.clone(), comps).expect("identity is a chain map")
    }

    pub fn source(&self) -> &ChainComplex {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex {
        &self.target
    }

    pub fn f_at(&self, n: usize) -> Matrix {
        self.components.get(n).cloned().unwrap_or_else(|| {
            Matrix::zeros(
                self.source.field(),
                self.target.dim_at(n),
                self.source.dim_at(n),
            )
        })
    }

    pub fn compose(&self, inner: &ChainMap) -> ChainMap {
        assert_eq!(
            inner.target.dims(),
            self.source.dims(),
            "composition shape mismatch"
        );
        let len = inner.source.len().max(self.target.len());
        let comps = (0..len).map(|n| self.f_at(n).mul(&inner.f_at(n))).collect();
        ChainMap::new(inner.source.clone(), self.target.clone(), comps)
            .expect("composite of chain maps is a chain map")
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        let len = self.components.len().max(other.components.len());
        let comps = (0..len).map(|n| self.f_at(n).add(&other.f_at(n))).collect();
        ChainMap::new(self.source.clone(), self.target.clone(), comps)
            .expect("sum of chain maps is a chain map")
    }

    /// Induced matrix on homology at degree `k` with respect to the
    /// deterministic representatives of source and target.
    pub fn induced_on_homology(&self, k: usize) -> Matrix {
        let hs = self.source.homology(k);
        let ht = self.target.homology(k);
        ht.project.mul(&self.f_at(k)).mul(&hs.cycle_reps)
    }

    pub fn is_quasi_iso(&self) -> bool {
        let len = self.source.len().max(self.target.len());
        (0..len).all(|k| {
            let m = self.induced_on_homology(k);
            m.rows() == m.cols() && m.rank() == m.rows()
        })
    }

    /// Degreewise injectivity.
    pub fn is_monic(&self) -> bool {
        (0..self.components.len()).all(|n| self.f_at(n).kernel().is_zero())
    }
}

/// Mapping cone: `cone(f)_n = target_n ⊕ source_{n-1}`,
/// `d(y, x) = (d y + f x, -d x)`.
pub fn cone(f: &ChainMap) -> ChainComplex {
    let field = f.source().field();
    let len = f.target().len().max(f.source().len() + 1);
    let dims: Vec<usize> = (0..len)
        .map(|n| {
            f.target().dim_at(n) + if n > 0 { f.source().dim_at(n - 1) } else { 0 }
        })
        .collect();
    let mut diffs = Vec::new();
    for n in 1..len {
        let ty = f.target().dim_at(n);
        let sx = if n > 0 { f.source().dim_at(n - 1) } else { 0 };
        let rows = dims[n - 1];
        let mut m = Matrix::zeros(field, rows, ty + sx);
        let dt = f.target().d_at(n);
        for r in 0..dt.rows() {
            for c in 0..ty {
                m.set(r, c, dt.get(r, c));
            }
        }
        let fc = f.f_at(n - 1);
        for r in 0..fc.rows() {
            for c in 0..sx {
                m.set(r, ty + c, fc.get(r, c));
            }
        }
        if n >= 2 {
            let ds = f.source().d_at(n - 1).neg();
            let ty_prev = f.target().dim_at(n - 1);
            for r in 0..ds.rows() {
                for c in 0..sx {
                    m.set(ty_prev + r, ty + c, ds.get(r, c));
                }
            }
        }
        diffs.push(m);
    }
    ChainComplex::new(field, dims, diffs).expect("cone of a chain map is a complex")
}

/// The cone on a complex itself: `CX := cone(id_X)`, contractible.
pub fn cone_on(c: &ChainComplex) -> ChainComplex {
    cone(&ChainMap::identity(c))
}

/// `k`-fold suspension, `Σ^k X = cone(X -> 0)` iterated: degrees shift up by
/// `k` and the differential picks up the sign `(-1)^k`.
pub fn suspend(c: &ChainComplex, k: usize) -> ChainComplex {
    let mut out = c.clone();
    for _ in 0..k {
        out = cone(&ChainMap::zero(out.clone(), ChainComplex::zero(c.field())));
    }
    out
}

/// Reduced suspension: shift degrees up by `k`, differential unchanged.
pub fn reduced_suspend(c: &ChainComplex, k: usize) -> ChainComplex {
    if c.is_empty() || k == 0 && c.len() > 0 {
        if k == 0 {
            return c.clone();
        }
    }
    let field = c.field();
    let len = c.len() + k;
    let mut dims = vec![0; k];
    dims.extend_from_slice(c.dims());
    let mut diffs = Vec::new();
    for n in 1..len {
        if n < k + 1 {
            diffs.push(Matrix::zeros(field, dims[n - 1], dims[n]));
        } else {
            diffs.push(c.d_at(n - k));
        }
    }
    if dims.is_empty() {
        return ChainComplex::zero(field);
    }
    ChainComplex::new(field, dims, diffs).expect("shift preserves d∘d = 0")
}

/// `k`-truncation: degrees `< k` unchanged, degree `k` replaced by the
/// cokernel of `d_{k+1}`, zero above; returns the natural surjection
/// `p_k: c -> tau_k c` alongside.
pub fn truncate(c: &ChainComplex, k: usize) -> (ChainComplex, ChainMap) {
    let field = c.field();
    let b = c.boundaries(k); // image of d_{k+1}
    let q = exactalg::projection_killing(&b);
    let cok = q.rows();
    let mut dims: Vec<usize> = (0..k).map(|n| c.dim_at(n)).collect();
    dims.push(cok);
    let mut diffs = Vec::new();
    for n in 1..k {
        diffs.push(c.d_at(n));
    }
    if k >= 1 {
        // induced differential on the cokernel: well-defined since d d = 0
        let comp = b.complement();
        diffs.push(c.d_at(k).mul(comp.basis()));
    }
    let tau = ChainComplex::new(field, dims, diffs).expect("truncation is a complex");
    let mut comps: Vec<Matrix> = (0..k).map(|n| Matrix::identity(field, c.dim_at(n))).collect();
    comps.push(q);
    let p = ChainMap::new(c.clone(), tau.clone(), comps).expect("p_k is a chain map");
    (tau, p)
}

/// `(k-1)`-connected cover: degrees `> k` unchanged, degree `k` replaced by
/// the cycles `Z_k`, zero below; returns the natural inclusion
/// `iota_k: cover -> c` alongside.
pub fn conn_cover(c: &ChainComplex, k: usize) -> (ChainComplex, ChainMap) {
    let field = c.field();
    let z = c.cycles(k);
    let len = c.len().max(k + 1);
    let mut dims = vec![0; k];
    dims.push(z.dim());
    for n in k + 1..len {
        dims.push(c.dim_at(n));
    }
    let mut diffs = Vec::new();
    for n in 1..dims.len() {
        if n < k + 1 {
            diffs.push(Matrix::zeros(field, dims[n - 1], dims[n]));
        } else if n == k + 1 {
            // d_{k+1} factors through the cycles
            let factored = z
                .coords_of_matrix(&c.d_at(k + 1))
                .expect("boundaries are cycles");
            diffs.push(factored);
        } else {
            diffs.push(c.d_at(n));
        }
    }
    let cover = ChainComplex::new(field, dims.clone(), diffs).expect("cover is a complex");
    let mut comps = Vec::new();
    for n in 0..dims.len() {
        if n < k {
            comps.push(Matrix::zeros(field, c.dim_at(n), 0));
        } else if n == k {
            comps.push(z.basis().clone());
        } else {
            comps.push(Matrix::identity(field, c.dim_at(n)));
        }
    }
    let iota = ChainMap::new(cover.clone(), c.clone(), comps).expect("iota_k is a chain map");
    (cover, iota)
}

/// One summand of a sphere/disk splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Summand {
    /// `K(V, degree)` with `dim V = dim_v`.
    Sphere { dim_v: usize, degree: usize },
    /// `CK(V, degree)`: cells in `degree` and `degree + 1`.
    Disk { dim_v: usize, degree: usize },
}

/// A sphere/disk decomposition witnessed by per-degree changes of basis.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub summands: Vec<Summand>,
    /// `basis[n]` is invertible; its columns list, in order: boundary cells
    /// (disk bottoms), homology cells (spheres), then disk tops.
    pub basis: Vec<Matrix>,
}

/// Splits a complex into spheres and disks (always possible over a field).
///
/// The multiset of summands is an invariant: the number of spheres in degree
/// `n` is `dim H_n`, the number of disks at `m` is `rank d_{m+1}`.
pub fn split_spheres_disks(c: &ChainComplex) -> Splitting {
    let field = c.field();
    let len = c.len();
    // complements of the cycles, chosen top-down so disk tops are fixed first
    let tops: Vec<Subspace> = (0..len).map(|n| c.cycles(n).complement()).collect();
    let mut summands = Vec::new();
    let mut basis = Vec::new();
    for n in 0..len {
        // bottoms: images of the chosen tops one degree up
        let bottom = if n + 1 < len {
            c.d_at(n + 1).mul(tops[n + 1].basis())
        } else {
            Matrix::zeros(field, c.dim_at(n), 0)
        };
        let h = c.homology(n);
        let mut m = bottom.clone();
        m = m.hstack(&h.cycle_reps);
        m = m.hstack(tops[n].basis());
        assert_eq!(m.rows(), m.cols(), "splitting must fill the degree");
        basis.push(m);
        if h.dim > 0 {
            summands.push(Summand::Sphere {
                dim_v: h.dim,
                degree: n,
            });
        }
        if bottom.cols() > 0 {
            summands.push(Summand::Disk {
                dim_v: bottom.cols(),
                degree: n,
            });
        }
    }
    Splitting { summands, basis }
}

/// Mapping-path fiber of `f` in non-negatively graded complexes:
/// `Fib(f)_n = source_n ⊕ target_{n+1}` for `n >= 1` with
/// `d(x, w) = (d x, -d w - f x)`, and in degree 0 the cycles of that formula,
/// `Ker(source_0 ⊕ target_1 -> target_0)`, so the homology long exact
/// sequence holds down to degree 0.
pub struct FiberParts {
    pub fiber: ChainComplex,
    /// Inclusion `Fib(f)_0 ⊆ source_0 ⊕ target_1` in the ambient coordinates.
    pub degree0: Subspace,
    /// `Fib(f) -> source`.
    pub proj: ChainMap,
    /// `Ω target -> Fib(f)`.
    pub from_loops: ChainMap,
    /// `Ω target = fiber(0 -> target)`.
    pub loops: ChainComplex,
}

pub fn fiber(f: &ChainMap) -> FiberParts {
    let field = f.source().field();
    let src = f.source();
    let tgt = f.target();
    let len = src.len().max(tgt.len().saturating_sub(1)).max(1);
    // degree 0: cycles of the unbounded formula, i.e. f(x) + d(w) = 0
    let d0 = f.f_at(0).hstack(&tgt.d_at(1));
    let deg0 = d0.kernel();
    let mut dims: Vec<usize> = vec![deg0.dim()];
    for n in 1..len {
        dims.push(src.dim_at(n) + tgt.dim_at(n + 1));
    }
    let mut diffs = Vec::new();
    for n in 1..len {
        let sx = src.dim_at(n);
        let tw = tgt.dim_at(n + 1);
        // ambient differential into source_{n-1} ⊕ target_n
        let rows_amb = src.dim_at(n - 1) + tgt.dim_at(n);
        let mut m = Matrix::zeros(field, rows_amb, sx + tw);
        let ds = src.d_at(n);
        for r in 0..ds.rows() {
            for c in 0..sx {
                m.set(r, c, ds.get(r, c));
            }
        }
        let fc = f.f_at(n).neg();
        let off = src.dim_at(n - 1);
        for r in 0..fc.rows() {
            for c in 0..sx {
                m.set(off + r, c, fc.get(r, c));
            }
        }
        let dt = tgt.d_at(n + 1).neg();
        for r in 0..dt.rows() {
            for c in 0..tw {
                m.set(off + r, sx + c, dt.get(r, c));
            }
        }
        if n == 1 {
            // land in the degree-0 cycle coordinates
            m = deg0
                .coords_of_matrix(&m)
                .expect("d_1 of the fiber lands in the degree-0 cycles");
        }
        diffs.push(m);
    }
    let fib = ChainComplex::new(field, dims, diffs).expect("fiber of a chain map is a complex");
    let proj_comps: Vec<Matrix> = (0..len)
        .map(|n| {
            if n == 0 {
                // x-part of the degree-0 basis
                let mut m = Matrix::zeros(field, src.dim_at(0), fib.dim_at(0));
                for c in 0..deg0.dim() {
                    for r in 0..src.dim_at(0) {
                        m.set(r, c, deg0.basis().get(r, c));
                    }
                }
                m
            } else {
                let mut m = Matrix::zeros(field, src.dim_at(n), fib.dim_at(n));
                for i in 0..src.dim_at(n) {
                    m.set(i, i, 1);
                }
                m
            }
        })
        .collect();
    let proj = ChainMap::new(fib.clone(), src.clone(), proj_comps).expect("proj is a chain map");
    let loops_parts = loops_of(tgt);
    let from_comps: Vec<Matrix> = (0..len)
        .map(|n| {
            if n == 0 {
                // Z_1(target) -> deg0 coordinates: w -> (0, w)
                let z = &loops_parts.cycles0;
                let mut amb = Matrix::zeros(field, src.dim_at(0) + tgt.dim_at(1), z.dim());
                for c in 0..z.dim() {
                    for r in 0..tgt.dim_at(1) {
                        amb.set(src.dim_at(0) + r, c, z.basis().get(r, c));
                    }
                }
                deg0
                    .coords_of_matrix(&amb)
                    .expect("loop cycles land in the fiber degree 0")
            } else {
                let mut m = Matrix::zeros(field, fib.dim_at(n), loops_parts.complex.dim_at(n));
                for i in 0..tgt.dim_at(n + 1) {
                    m.set(src.dim_at(n) + i, i, 1);
                }
                m
            }
        })
        .collect();
    let from_loops = ChainMap::new(loops_parts.complex.clone(), fib.clone(), from_comps)
        .expect("loop leg is a chain map");
    FiberParts {
        fiber: fib,
        degree0: deg0,
        proj,
        from_loops,
        loops: loops_parts.complex,
    }
}

pub struct LoopsParts {
    pub complex: ChainComplex,
    /// Degree 0 of the loop complex is `Z_1(c)` in these coordinates.
    pub cycles0: Subspace,
}

/// Loop complex `Ω c = fiber(0 -> c)`: degree `n >= 1` is `c_{n+1}` with
/// negated differential, degree 0 is `Z_1(c)`, so `H_n(Ω c) = H_{n+1}(c)`
/// in all degrees `n >= 0`.
pub fn loops_of(c: &ChainComplex) -> LoopsParts {
    let field = c.field();
    let z1 = c.cycles(1);
    if c.len() <= 1 {
        return LoopsParts {
            complex: ChainComplex::zero(field),
            cycles0: z1,
        };
    }
    let len = c.len() - 1;
    let mut dims: Vec<usize> = vec![z1.dim()];
    for n in 1..len {
        dims.push(c.dim_at(n + 1));
    }
    let mut diffs: Vec<Matrix> = Vec::new();
    for n in 1..len {
        let d = c.d_at(n + 1).neg();
        if n == 1 {
            diffs.push(z1.coords_of_matrix(&d).expect("boundaries are cycles"));
        } else {
            diffs.push(d);
        }
    }
    LoopsParts {
        complex: ChainComplex::new(field, dims, diffs).expect("loops of a complex is a complex"),
        cycles0: z1,
    }
}

/// Convenience: the loop complex itself.
pub fn fiber_loops(c: &ChainComplex) -> ChainComplex {
    loops_of(c).complex
}

/// Graded vector space (no differential), finite support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedVS {
    pub dims: Vec<usize>,
}

impl GradedVS {
    pub fn zero() -> Self {
        GradedVS { dims: vec![] }
    }

    pub fn concentrated(dim: usize, degree: usize) -> Self {
        let mut dims = vec![0; degree + 1];
        dims[degree] = dim;
        GradedVS { dims }
    }

    pub fn dim_at(&self, n: usize) -> usize {
        self.dims.get(n).copied().unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }
}

/// A map of graded vector spaces allowing several non-negative shifts
/// (the `Ch+` morphisms restricted to formal data).
///
/// Components are keyed by `(shift, source_degree)` and map
/// `source[deg] -> target[deg + shift]`. Composition adds shifts and
/// distributes over the stored components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedMap {
    pub source: GradedVS,
    pub target: GradedVS,
    components: std::collections::BTreeMap<(usize, usize), Matrix>,
}

impl GradedMap {
    pub fn zero(source: GradedVS, target: GradedVS) -> Self {
        GradedMap {
            source,
            target,
            components: Default::default(),
        }
    }

    pub fn identity(v: &GradedVS, field: FieldSpec) -> Self {
        let mut m = GradedMap::zero(v.clone(), v.clone());
        for (deg, &d) in v.dims.iter().enumerate() {
            if d > 0 {
                m.set_component(0, deg, Matrix::identity(field, d));
            }
        }
        m
    }

    pub fn set_component(&mut self, shift: usize, deg: usize, m: Matrix) {
        assert_eq!(m.cols(), self.source.dim_at(deg), "component domain mismatch");
        assert_eq!(
            m.rows(),
            self.target.dim_at(deg + shift),
            "component codomain mismatch"
        );
        if m.is_zero() {
            self.components.remove(&(shift, deg));
        } else {
            self.components.insert((shift, deg), m);
        }
    }

    pub fn component(&self, shift: usize, deg: usize, field: FieldSpec) -> Matrix {
        self.components.get(&(shift, deg)).cloned().unwrap_or_else(|| {
            Matrix::zeros(field, self.target.dim_at(deg + shift), self.source.dim_at(deg))
        })
    }

    pub fn components(&self) -> impl Iterator<Item = (&(usize, usize), &Matrix)> {
        self.components.iter()
    }

    pub fn shifts(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.components.keys().map(|k| k.0).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// `self ∘ inner`; shifts add.
    pub fn compose(&self, inner: &GradedMap, field: FieldSpec) -> GradedMap {
        assert_eq!(inner.target, self.source, "graded composition mismatch");
        let mut out = GradedMap::zero(inner.source.clone(), self.target.clone());
        for (&(s2, deg), m2) in inner.components.iter() {
            for (&(s1, mid), m1) in self.components.iter() {
                if mid == deg + s2 {
                    let shift = s1 + s2;
                    let prod = m1.mul(m2);
                    let existing = out.component(shift, deg, field);
                    out.set_component(shift, deg, existing.add(&prod));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &GradedMap, field: FieldSpec) -> GradedMap {
        assert_eq!(self.source, other.source);
        assert_eq!(self.target, other.target);
        let mut out = self.clone();
        for (&(s, deg), m) in other.components.iter() {
            let existing = out.component(s, deg, field);
            out.set_component(s, deg, existing.add(m));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }
}
