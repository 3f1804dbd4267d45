//! Diagrams of chain complexes indexed by a finite poset: functoriality
//! validation, homology diagrams, (co)limits over sub-posets, Reedy and
//! minimal cofibrant replacement, diagram-level truncation and covers, the
//! formality predicates, and the stage-2 Ind extension.

use std::collections::BTreeMap;
use std::fmt;

use crate::chain::{self, ChainComplex, ChainMap, GradedMap, GradedVS};
use crate::exactalg::{block_projections, projection_killing, FieldSpec, Matrix, Subspace};
use crate::poset::{Ind2Obj, IndIndex2, Obj, Poset};

#[derive(Debug, Clone)]
pub enum Error {
    /// An arrow is missing or has mismatched endpoints.
    BadArrow { from: Obj, to: Obj, reason: String },
    /// Two Hasse routes between the same objects disagree.
    NonCommuting {
        from: Obj,
        to: Obj,
        via: (Obj, Obj),
        degree: usize,
    },
    Chain(chain::Error),
    /// A cocone passed to a colimit factorization is not compatible.
    IncompatibleCocone { from: Obj, to: Obj },
    /// Minimal cofibrancy fails; clauses are listed per object.
    NotMinimallyCofibrant(Vec<CheckFailure>),
    /// The inductive minimal replacement hit an obstruction.
    ReplacementObstructed { object: Obj, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadArrow { from, to, reason } => {
                write!(f, "bad arrow {from} -> {to}: {reason}")
            }
            Error::NonCommuting {
                from,
                to,
                via,
                degree,
            } => write!(
                f,
                "square does not commute from {from} to {to} via covers {} and {} at degree {degree}",
                via.0, via.1
            ),
            Error::Chain(e) => write!(f, "{e}"),
            Error::IncompatibleCocone { from, to } => {
                write!(f, "cocone legs disagree along {from} -> {to}")
            }
            Error::NotMinimallyCofibrant(fails) => {
                write!(f, "not minimally cofibrant: {fails:?}")
            }
            Error::ReplacementObstructed { object, reason } => {
                write!(f, "minimal replacement obstructed at object {object}: {reason}")
            }
        }
    }
}

impl std::error::Error for Error {}

impl From<chain::Error> for Error {
    fn from(e: chain::Error) -> Self {
        Error::Chain(e)
    }
}

/// One failed clause of the minimal-cofibrancy check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckFailure {
    /// An initial object carries a nonzero differential (a disk with no
    /// predecessor to cone it off).
    InitialNotFormal { object: Obj, degree: usize },
    /// Boundaries at the object are not covered by latching cycles: some
    /// disk bottom is not the image of a predecessor cycle.
    DiskNotConedOff { object: Obj, degree: usize },
    /// The latching map is not degreewise injective.
    LatchingNotMonic { object: Obj, degree: usize },
}

/// A functor from a finite poset into chain complexes.
///
/// Arrows are stored per Hasse cover; all composites along parallel routes
/// are checked to agree exactly at construction, and the full table of
/// composite maps is kept for `map_between`.
#[derive(Clone)]
pub struct Diagram {
    index: Poset,
    objects: Vec<ChainComplex>,
    arrows: BTreeMap<(Obj, Obj), ChainMap>,
    /// Composite maps for every related pair, built by dynamic programming.
    maps: BTreeMap<(Obj, Obj), ChainMap>,
}

impl fmt::Debug for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Diagram over {} objects, dims {:?}",
            self.index.len(),
            self.objects.iter().map(|c| c.dims().to_vec()).collect::<Vec<_>>()
        )
    }
}

impl Diagram {
    pub fn new(
        index: Poset,
        objects: Vec<ChainComplex>,
        arrows: BTreeMap<(Obj, Obj), ChainMap>,
    ) -> Result<Self, Error> {
        assert_eq!(index.len(), objects.len(), "one complex per object");
        for &(a, b) in index.covers() {
            let f = arrows.get(&(a, b)).ok_or_else(|| Error::BadArrow {
                from: a,
                to: b,
                reason: "missing cover arrow".into(),
            })?;
            if f.source() != &objects[a] || f.target() != &objects[b] {
                return Err(Error::BadArrow {
                    from: a,
                    to: b,
                    reason: "arrow endpoints do not match objects".into(),
                });
            }
        }
        let maps = build_map_table(&index, &objects, &arrows)?;
        Ok(Diagram {
            index,
            objects,
            arrows,
            maps,
        })
    }

    pub fn index(&self) -> &Poset {
        &self.index
    }

    pub fn field(&self) -> FieldSpec {
        self.objects
            .first()
            .map(|c| c.field())
            .unwrap_or_default()
    }

    pub fn object(&self, a: Obj) -> &ChainComplex {
        &self.objects[a]
    }

    pub fn objects(&self) -> &[ChainComplex] {
        &self.objects
    }

    pub fn arrow(&self, a: Obj, b: Obj) -> &ChainMap {
        &self.arrows[&(a, b)]
    }

    pub fn arrows(&self) -> &BTreeMap<(Obj, Obj), ChainMap> {
        &self.arrows
    }

    /// The composite map for any `a <= b`.
    pub fn map_between(&self, a: Obj, b: Obj) -> ChainMap {
        if a == b {
            ChainMap::identity(&self.objects[a])
        } else {
            self.maps[&(a, b)].clone()
        }
    }

    /// Re-checks functoriality (used after hand-editing in tests and by the
    /// file loader); `Diagram::new` already performs this check.
    pub fn validate(&self) -> Result<(), Error> {
        build_map_table(&self.index, &self.objects, &self.arrows).map(|_| ())
    }

    pub fn max_len(&self) -> usize {
        self.objects.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

fn build_map_table(
    index: &Poset,
    objects: &[ChainComplex],
    arrows: &BTreeMap<(Obj, Obj), ChainMap>,
) -> Result<BTreeMap<(Obj, Obj), ChainMap>, Error> {
    let mut maps: BTreeMap<(Obj, Obj), ChainMap> = BTreeMap::new();
    // topological order by filtration depth
    let info = crate::poset::validate_lattice(index);
    let mut order: Vec<Obj> = (0..index.len()).collect();
    order.sort_by_key(|&x| (info.filtration[x], x));
    for &b in &order {
        for a in 0..index.len() {
            if !index.lt(a, b) {
                continue;
            }
            let mut composite: Option<(ChainMap, Obj)> = None;
            for c in index.covered_by(b) {
                if !index.leq(a, c) {
                    continue;
                }
                let leg = if a == c {
                    arrows[&(c, b)].clone()
                } else {
                    arrows[&(c, b)].compose(&maps[&(a, c)])
                };
                match &composite {
                    None => composite = Some((leg, c)),
                    Some((prev, via)) => {
                        if prev != &leg {
                            let degree = (0..objects[a].len().max(objects[b].len()))
                                .find(|&n| prev.f_at(n) != leg.f_at(n))
                                .unwrap_or(0);
                            return Err(Error::NonCommuting {
                                from: a,
                                to: b,
                                via: (*via, c),
                                degree,
                            });
                        }
                    }
                }
            }
            let (m, _) = composite.expect("a < b implies a route through a cover");
            maps.insert((a, b), m);
        }
    }
    Ok(maps)
}

/// A diagram of graded vector spaces with graded maps (shifts allowed).
#[derive(Debug, Clone)]
pub struct GradedDiagram {
    pub index: Poset,
    pub field: FieldSpec,
    pub objects: Vec<GradedVS>,
    /// Arrows per related pair `(a, b)`, `a < b` (closed under composition).
    pub arrows: BTreeMap<(Obj, Obj), GradedMap>,
}

impl GradedDiagram {
    /// Checks that arrows compose: for every `a < b < c`,
    /// `arrow(b,c) ∘ arrow(a,b) = arrow(a,c)`.
    pub fn validate_functorial(&self) -> bool {
        for a in 0..self.index.len() {
            for b in 0..self.index.len() {
                if !self.index.lt(a, b) {
                    continue;
                }
                for c in 0..self.index.len() {
                    if !self.index.lt(b, c) {
                        continue;
                    }
                    let composite = self.arrows[&(b, c)].compose(&self.arrows[&(a, b)], self.field);
                    if composite != self.arrows[&(a, c)] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Objectwise homology with induced maps on the deterministic cycle
/// representatives; functoriality of the result is exact by construction.
pub fn homology_diagram(d: &Diagram) -> GradedDiagram {
    let field = d.field();
    let objects: Vec<GradedVS> = d
        .objects()
        .iter()
        .map(|c| GradedVS {
            dims: c.homology_dims(),
        })
        .collect();
    let mut arrows = BTreeMap::new();
    for a in 0..d.index().len() {
        for b in 0..d.index().len() {
            if !d.index().lt(a, b) {
                continue;
            }
            let f = d.map_between(a, b);
            let mut g = GradedMap::zero(objects[a].clone(), objects[b].clone());
            for k in 0..objects[a].dims.len() {
                let m = f.induced_on_homology(k);
                if m.rows() > 0 && m.cols() > 0 {
                    g.set_component(0, k, m);
                }
            }
            arrows.insert((a, b), g);
        }
    }
    GradedDiagram {
        index: d.index().clone(),
        field,
        objects,
        arrows,
    }
}

/// A degreewise colimit over a sub-poset, with its cocone and a
/// factorization facility for arbitrary compatible cocones.
pub struct ColimitData {
    pub complex: ChainComplex,
    pub sub: Vec<Obj>,
    /// Structure map from each sub-object into the colimit.
    pub cocone: BTreeMap<Obj, ChainMap>,
    /// Block start of each sub-object per degree.
    offsets: Vec<BTreeMap<Obj, usize>>,
    total_dims: Vec<usize>,
    /// Projection (per degree) from the total sum onto colimit coordinates.
    quotient: Vec<Matrix>,
    /// Inclusion (per degree) of colimit coordinates into the total sum.
    section: Vec<Matrix>,
    field: FieldSpec,
}

impl ColimitData {
    /// Factors a compatible cocone `legs[a]: X(a) -> T` through the colimit.
    /// Returns `None` when the legs are not compatible with the relations.
    pub fn factor_cocone(
        &self,
        target: &ChainComplex,
        legs: &BTreeMap<Obj, ChainMap>,
    ) -> Option<ChainMap> {
        let len = self.total_dims.len();
        let mut comps = Vec::new();
        for n in 0..len {
            // assemble the legs blockwise on the total space
            let mut total = Matrix::zeros(self.field, target.dim_at(n), self.total_dims[n]);
            for (&a, leg) in legs {
                let off = self.offsets[n][&a];
                let f = leg.f_at(n);
                for r in 0..f.rows() {
                    for c in 0..f.cols() {
                        total.set(r, off + c, f.get(r, c));
                    }
                }
            }
            // well-defined iff the relations die, i.e. the map factors
            // through the quotient
            let factored = total.mul(&self.section[n]).mul(&self.quotient[n]);
            if factored != total {
                return None;
            }
            comps.push(total.mul(&self.section[n]));
        }
        ChainMap::new(self.complex.clone(), target.clone(), comps).ok()
    }
}

/// Degreewise colimit of the restriction of `d` to `sub`: quotient of the
/// direct sum by the relations along all arrows within `sub`.
pub fn colimit_over(d: &Diagram, sub: &[Obj]) -> ColimitData {
    let field = d.field();
    let len = sub.iter().map(|&a| d.object(a).len()).max().unwrap_or(0);
    let mut offsets: Vec<BTreeMap<Obj, usize>> = Vec::with_capacity(len);
    let mut total_dims = Vec::with_capacity(len);
    for n in 0..len {
        let mut map = BTreeMap::new();
        let mut cum = 0;
        for &a in sub {
            map.insert(a, cum);
            cum += d.object(a).dim_at(n);
        }
        offsets.push(map);
        total_dims.push(cum);
    }
    // relation span per degree, from every arrow within the sub-poset
    let mut rel_gens: Vec<Vec<Vec<u64>>> = vec![Vec::new(); len];
    for &a in sub {
        for &b in sub {
            if !d.index().lt(a, b) {
                continue;
            }
            let f = d.map_between(a, b);
            for n in 0..len {
                let da = d.object(a).dim_at(n);
                for v in 0..da {
                    let mut gen = vec![0u64; total_dims[n]];
                    gen[offsets[n][&a] + v] = 1;
                    let fv = f.f_at(n).col(v);
                    let off_b = offsets[n][&b];
                    for (r, &x) in fv.iter().enumerate() {
                        let cur = gen[off_b + r];
                        gen[off_b + r] = (cur + field.p() - x % field.p()) % field.p();
                    }
                    rel_gens[n].push(gen);
                }
            }
        }
    }
    let mut quotient = Vec::with_capacity(len);
    let mut section = Vec::with_capacity(len);
    let mut dims = Vec::with_capacity(len);
    for n in 0..len {
        let rel = Subspace::from_generators(field, total_dims[n], &rel_gens[n]);
        let q = projection_killing(&rel);
        let comp = rel.complement();
        dims.push(q.rows());
        quotient.push(q);
        section.push(comp.basis().clone());
    }
    // induced differential
    let mut diffs = Vec::new();
    for n in 1..len {
        let mut dd = Matrix::zeros(field, total_dims[n - 1], total_dims[n]);
        for &a in sub {
            let da = d.object(a).d_at(n);
            let co = offsets[n][&a];
            let ro = offsets[n - 1][&a];
            for r in 0..da.rows() {
                for c in 0..da.cols() {
                    dd.set(ro + r, co + c, da.get(r, c));
                }
            }
        }
        diffs.push(quotient[n - 1].mul(&dd).mul(&section[n]));
    }
    let complex = ChainComplex::new(field, dims, diffs).expect("colimit is a complex");
    let mut cocone = BTreeMap::new();
    for &a in sub {
        let comps: Vec<Matrix> = (0..len)
            .map(|n| {
                let mut e = Matrix::zeros(field, total_dims[n], d.object(a).dim_at(n));
                let off = offsets[n][&a];
                for r in 0..d.object(a).dim_at(n) {
                    e.set(off + r, r, 1);
                }
                quotient[n].mul(&e)
            })
            .collect();
        cocone.insert(
            a,
            ChainMap::new(d.object(a).clone(), complex.clone(), comps)
                .expect("cocone legs are chain maps"),
        );
    }
    ColimitData {
        complex,
        sub: sub.to_vec(),
        cocone,
        offsets,
        total_dims,
        quotient,
        section,
        field,
    }
}

impl ColimitData {
    /// Verifies the universal property against every upper bound of the
    /// sub-poset within the diagram's index: the cocone into `X(u)` factors
    /// uniquely through the colimit.
    pub fn verify_universal(&self, d: &Diagram) -> bool {
        for u in 0..d.index().len() {
            if !self.sub.iter().all(|&a| d.index().leq(a, u)) {
                continue;
            }
            let legs: BTreeMap<Obj, ChainMap> = self
                .sub
                .iter()
                .map(|&a| (a, d.map_between(a, u)))
                .collect();
            match self.factor_cocone(d.object(u), &legs) {
                Some(phi) => {
                    for &a in &self.sub {
                        let via = phi.compose(&self.cocone[&a]);
                        if via != legs[&a] {
                            return false;
                        }
                    }
                }
                None => return false,
            }
        }
        true
    }
}

/// The latching data of an object: the colimit over its strict predecessors
/// and the induced map into the object.
pub fn latching(d: &Diagram, b: Obj) -> (ColimitData, Option<ChainMap>) {
    let preds = d.index().strict_predecessors(b);
    let colim = colimit_over(d, &preds);
    if preds.is_empty() {
        return (colim, None);
    }
    let legs: BTreeMap<Obj, ChainMap> = preds.iter().map(|&a| (a, d.map_between(a, b))).collect();
    let lm = colim
        .factor_cocone(d.object(b), &legs)
        .expect("diagram arrows form a compatible cocone");
    (colim, Some(lm))
}

/// The latching colimit of a partially built replacement: the colimit of
/// the strict predecessors of `b` (already processed), plus the compatible
/// cocone into the original object and its factorization.
struct PartialLatch {
    colim: ColimitData,
    /// Back-mapping from sub-poset ids to original ids.
    back: Vec<Obj>,
}

fn partial_latching(
    index: &Poset,
    objects: &[ChainComplex],
    arrows: &BTreeMap<(Obj, Obj), ChainMap>,
    b: Obj,
) -> Result<PartialLatch, Error> {
    let closure: Vec<Obj> = (0..index.len()).filter(|&x| index.lt(x, b)).collect();
    let (sub_poset, back) = induced_subposet(index, &closure);
    let sub_objects: Vec<ChainComplex> = closure.iter().map(|&x| objects[x].clone()).collect();
    let mut sub_arrows = BTreeMap::new();
    for &(x, y) in sub_poset.covers() {
        let (gx, gy) = (back[x], back[y]);
        let m = arrows
            .get(&(gx, gy))
            .cloned()
            .unwrap_or_else(|| compose_along(index, arrows, gx, gy));
        sub_arrows.insert((x, y), m);
    }
    let subd = Diagram::new(sub_poset, sub_objects, sub_arrows)?;
    let all: Vec<Obj> = (0..subd.index().len()).collect();
    let colim = colimit_over(&subd, &all);
    Ok(PartialLatch { colim, back })
}

/// Reedy cofibrant replacement via mapping cylinders: every latching map of
/// the result is degreewise injective, and the returned per-object maps back
/// to the input are quasi-isomorphisms.
pub fn reedy_cofibrant_replace(d: &Diagram) -> Result<(Diagram, Vec<ChainMap>), Error> {
    let index = d.index().clone();
    let info = crate::poset::validate_lattice(&index);
    let mut order: Vec<Obj> = (0..index.len()).collect();
    order.sort_by_key(|&x| (info.filtration[x], x));
    let field = d.field();
    let mut objects: Vec<ChainComplex> = vec![ChainComplex::zero(field); index.len()];
    let mut etas: Vec<Option<ChainMap>> = vec![None; index.len()];
    let mut arrows: BTreeMap<(Obj, Obj), ChainMap> = BTreeMap::new();
    for &b in &order {
        if index.strict_predecessors(b).is_empty() {
            objects[b] = d.object(b).clone();
            etas[b] = Some(ChainMap::identity(d.object(b)));
            continue;
        }
        let latch = partial_latching(&index, &objects, &arrows, b)?;
        let legs: BTreeMap<Obj, ChainMap> = (0..latch.back.len())
            .map(|i| {
                let g = latch.back[i];
                (i, d.map_between(g, b).compose(etas[g].as_ref().unwrap()))
            })
            .collect();
        let ell = latch
            .colim
            .factor_cocone(d.object(b), &legs)
            .expect("eta naturality keeps the cocone compatible");
        let (cyl, a_incl, pi) = mapping_cylinder(&ell);
        objects[b] = cyl;
        etas[b] = Some(pi);
        for g in index.covered_by(b) {
            let i = latch.back.iter().position(|&x| x == g).unwrap();
            arrows.insert((g, b), a_incl.compose(&latch.colim.cocone[&i]));
        }
    }
    let etas: Vec<ChainMap> = etas.into_iter().map(|e| e.unwrap()).collect();
    let replaced = Diagram::new(index, objects, arrows)?;
    Ok((replaced, etas))
}

fn compose_along(
    index: &Poset,
    arrows: &BTreeMap<(Obj, Obj), ChainMap>,
    a: Obj,
    b: Obj,
) -> ChainMap {
    let path = index.hasse_path(a, b).expect("a <= b");
    let mut m = arrows[&(path[0], path[1])].clone();
    for w in path[1..].windows(2) {
        m = arrows[&(w[0], w[1])].compose(&m);
    }
    m
}

/// Mapping cylinder of `f: A -> B`: `Cyl_n = A_n ⊕ A_{n-1} ⊕ B_n` with
/// `d(a, a', b) = (d a + a', -d a', d b - f a')`; returns the cylinder, the
/// cofibration `A -> Cyl` and the projection quasi-iso `Cyl -> B`.
pub fn mapping_cylinder(f: &ChainMap) -> (ChainComplex, ChainMap, ChainMap) {
    let field = f.source().field();
    let a = f.source();
    let b = f.target();
    let len = a.len().max(b.len()).max(a.len() + 1);
    let dims: Vec<usize> = (0..len)
        .map(|n| a.dim_at(n) + if n > 0 { a.dim_at(n - 1) } else { 0 } + b.dim_at(n))
        .collect();
    let mut diffs = Vec::new();
    for n in 1..len {
        let (an, an1, bn) = (a.dim_at(n), a.dim_at(n - 1), b.dim_at(n));
        let rows = dims[n - 1];
        let mut m = Matrix::zeros(field, rows, dims[n]);
        let da = a.d_at(n);
        // d a  -> first block of rows
        for r in 0..da.rows() {
            for c in 0..an {
                m.set(r, c, da.get(r, c));
            }
        }
        // a' adds into the first block
        for r in 0..an1 {
            m.set(r, an + r, 1);
        }
        // -d a' into the second block
        if n >= 2 {
            let da1 = a.d_at(n - 1).neg();
            let ro = a.dim_at(n - 1);
            for r in 0..da1.rows() {
                for c in 0..an1 {
                    m.set(ro + r, an + c, da1.get(r, c));
                }
            }
        }
        // d b - f a' into the third block
        let db = b.d_at(n);
        let ro = a.dim_at(n - 1) + if n >= 2 { a.dim_at(n - 2) } else { 0 };
        for r in 0..db.rows() {
            for c in 0..bn {
                m.set(ro + r, an + an1 + c, db.get(r, c));
            }
        }
        let fa = f.f_at(n - 1).neg();
        for r in 0..fa.rows() {
            for c in 0..an1 {
                m.set(ro + r, an + c, fa.get(r, c));
            }
        }
        diffs.push(m);
    }
    let cyl = ChainComplex::new(field, dims, diffs).expect("cylinder is a complex");
    let incl_comps: Vec<Matrix> = (0..len)
        .map(|n| {
            let mut m = Matrix::zeros(field, cyl.dim_at(n), a.dim_at(n));
            for r in 0..a.dim_at(n) {
                m.set(r, r, 1);
            }
            m
        })
        .collect();
    let incl = ChainMap::new(a.clone(), cyl.clone(), incl_comps).expect("A -> Cyl is a chain map");
    let proj_comps: Vec<Matrix> = (0..len)
        .map(|n| {
            let mut m = Matrix::zeros(field, b.dim_at(n), cyl.dim_at(n));
            let f_n = f.f_at(n);
            for r in 0..f_n.rows() {
                for c in 0..f_n.cols() {
                    m.set(r, c, f_n.get(r, c));
                }
            }
            let off = a.dim_at(n) + if n > 0 { a.dim_at(n - 1) } else { 0 };
            for r in 0..b.dim_at(n) {
                m.set(r, off + r, 1);
            }
            m
        })
        .collect();
    let proj = ChainMap::new(cyl.clone(), b.clone(), proj_comps).expect("Cyl -> B is a chain map");
    (cyl, incl, proj)
}

/// Homotopy colimit: colimit of the Reedy cofibrant replacement.
pub fn hocolim(d: &Diagram, sub: &[Obj]) -> Result<ChainComplex, Error> {
    let (replaced, _) = reedy_cofibrant_replace(d)?;
    Ok(colimit_over(&replaced, sub).complex)
}

/// Minimal-cofibrancy check:
/// (a) sphere/disk splittability is automatic over a field and recorded by
/// constructing the splitting; (b) initial objects are formal and every disk
/// bottom at a non-initial object lies in the image of the latching cycles;
/// (c) latching maps are degreewise monic.
pub fn minimal_cofibrant_check(d: &Diagram) -> Result<(), Error> {
    let mut failures = Vec::new();
    let minima = d.index().minima();
    for b in 0..d.index().len() {
        let x = d.object(b);
        let _split = chain::split_spheres_disks(x);
        if minima.contains(&b) {
            for n in 1..x.len() {
                if !x.d_at(n).is_zero() {
                    failures.push(CheckFailure::InitialNotFormal {
                        object: b,
                        degree: n,
                    });
                }
            }
            continue;
        }
        let (colim, lm) = latching(d, b);
        let lm = lm.expect("non-initial object has predecessors");
        for n in 0..x.len().max(colim.complex.len()) {
            if !lm.f_at(n).kernel().is_zero() {
                failures.push(CheckFailure::LatchingNotMonic {
                    object: b,
                    degree: n,
                });
            }
            let bd = x.boundaries(n);
            if bd.is_zero() {
                continue;
            }
            let latch_cycles = colim.complex.cycles(n).map_by(&lm.f_at(n));
            if !latch_cycles.contains(&bd) {
                failures.push(CheckFailure::DiskNotConedOff {
                    object: b,
                    degree: n,
                });
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::NotMinimallyCofibrant(failures))
    }
}

/// Builds a minimal cofibrant model inductively along the filtration:
/// initial objects become their homology; at each later object the latching
/// colimit is kept, disks are attached on the homology classes that die
/// entering the object, and new spheres adjoin the unhit homology. Returns
/// the model and objectwise quasi-isomorphisms back to the input.
pub fn minimal_cofibrant_replace(d: &Diagram) -> Result<(Diagram, Vec<ChainMap>), Error> {
    let index = d.index().clone();
    let field = d.field();
    let info = crate::poset::validate_lattice(&index);
    let mut order: Vec<Obj> = (0..index.len()).collect();
    order.sort_by_key(|&x| (info.filtration[x], x));
    let mut objects: Vec<ChainComplex> = vec![ChainComplex::zero(field); index.len()];
    let mut etas: Vec<Option<ChainMap>> = vec![None; index.len()];
    let mut arrows: BTreeMap<(Obj, Obj), ChainMap> = BTreeMap::new();
    for &b in &order {
        let target = d.object(b);
        if index.strict_predecessors(b).is_empty() {
            // homology as spheres
            let hdims = target.homology_dims();
            let m = ChainComplex::new(
                field,
                hdims.clone(),
                (1..hdims.len())
                    .map(|n| Matrix::zeros(field, hdims[n - 1], hdims[n]))
                    .collect(),
            )
            .unwrap();
            let comps: Vec<Matrix> = (0..m.len()).map(|n| target.homology(n).cycle_reps).collect();
            etas[b] = Some(ChainMap::new(m.clone(), target.clone(), comps)?);
            objects[b] = m;
            continue;
        }
        let latch = partial_latching(&index, &objects, &arrows, b)?;
        let legs: BTreeMap<Obj, ChainMap> = (0..latch.back.len())
            .map(|i| {
                let g = latch.back[i];
                (i, d.map_between(g, b).compose(etas[g].as_ref().unwrap()))
            })
            .collect();
        let kappa = latch
            .colim
            .factor_cocone(target, &legs)
            .expect("eta naturality keeps the cocone compatible");
        let l = latch.colim.complex.clone();
        let len = l.len().max(target.len()) + 1;
        // per-degree new cells
        let mut disk_cells: Vec<Matrix> = Vec::new(); // reps of ker φ_m, in L_m coords
        let mut sphere_cells: Vec<Matrix> = Vec::new(); // reps of coker φ_m, in X(b)_m coords
        for m in 0..len {
            let hl = l.homology(m);
            let hx = target.homology(m);
            let phi = kappa.induced_on_homology(m);
            disk_cells.push(hl.cycle_reps.mul(phi.kernel().basis()));
            sphere_cells.push(hx.cycle_reps.mul(phi.image().complement().basis()));
        }
        // assemble M(b): L ⊕ disk cells (in degree m+1, bounding the classes
        // dying at m) ⊕ new spheres
        let mut dims = Vec::new();
        for n in 0..len {
            let disks_above = if n >= 1 { disk_cells[n - 1].cols() } else { 0 };
            dims.push(l.dim_at(n) + disks_above + sphere_cells[n].cols());
        }
        while dims.len() > 1 && *dims.last().unwrap() == 0 {
            dims.pop();
        }
        let mut diffs = Vec::new();
        for n in 1..dims.len() {
            let mut m = Matrix::zeros(field, dims[n - 1], dims[n]);
            let dl = l.d_at(n);
            for r in 0..dl.rows() {
                for c in 0..dl.cols() {
                    m.set(r, c, dl.get(r, c));
                }
            }
            let cells = &disk_cells[n - 1];
            for r in 0..cells.rows() {
                for c in 0..cells.cols() {
                    m.set(r, l.dim_at(n) + c, cells.get(r, c));
                }
            }
            diffs.push(m);
        }
        let model = ChainComplex::new(field, dims.clone(), diffs)?;
        // eta_b
        let mut comps = Vec::new();
        for n in 0..model.len() {
            let mut m = Matrix::zeros(field, target.dim_at(n), model.dim_at(n));
            let k = kappa.f_at(n);
            for r in 0..k.rows() {
                for c in 0..k.cols() {
                    m.set(r, c, k.get(r, c));
                }
            }
            let disks_here = if n >= 1 { disk_cells[n - 1].cols() } else { 0 };
            if n >= 1 {
                // disk cells: canonical bounding chains in the target
                let cells = &disk_cells[n - 1];
                for c in 0..cells.cols() {
                    let img = kappa.f_at(n - 1).mul_vec(&cells.col(c));
                    let bchain = target.d_at(n).solve(&img).ok_or_else(|| {
                        Error::ReplacementObstructed {
                            object: b,
                            reason: format!(
                                "dying latching class at degree {} does not bound",
                                n - 1
                            ),
                        }
                    })?;
                    for (r, &v) in bchain.iter().enumerate() {
                        m.set(r, l.dim_at(n) + c, v);
                    }
                }
            }
            let spheres = &sphere_cells[n];
            for c in 0..spheres.cols() {
                for r in 0..spheres.rows() {
                    m.set(r, l.dim_at(n) + disks_here + c, spheres.get(r, c));
                }
            }
            comps.push(m);
        }
        let eta = ChainMap::new(model.clone(), target.clone(), comps)?;
        if !eta.is_quasi_iso() {
            return Err(Error::ReplacementObstructed {
                object: b,
                reason: "constructed model is not quasi-isomorphic to the input".into(),
            });
        }
        // arrows into b: predecessor -> L -> M(b)
        for g in index.covered_by(b) {
            let i = latch.back.iter().position(|&x| x == g).unwrap();
            let incl_comps: Vec<Matrix> = (0..model.len())
                .map(|n| {
                    let mut m = Matrix::zeros(field, model.dim_at(n), l.dim_at(n));
                    for r in 0..l.dim_at(n) {
                        m.set(r, r, 1);
                    }
                    m
                })
                .collect();
            let incl = ChainMap::new(l.clone(), model.clone(), incl_comps)?;
            arrows.insert((g, b), incl.compose(&latch.colim.cocone[&i]));
        }
        objects[b] = model;
        etas[b] = Some(eta);
    }
    let etas: Vec<ChainMap> = etas.into_iter().map(|e| e.unwrap()).collect();
    let replaced = Diagram::new(index, objects, arrows)?;
    minimal_cofibrant_check(&replaced)?;
    Ok((replaced, etas))
}

/// The induced sub-poset on a set of objects; returns it with the
/// back-mapping to the original ids.
pub fn induced_subposet(index: &Poset, objs: &[Obj]) -> (Poset, Vec<Obj>) {
    let back: Vec<Obj> = objs.to_vec();
    let labels: Vec<String> = objs.iter().map(|&x| index.label(x).to_string()).collect();
    let mut rels = Vec::new();
    for (i, &x) in objs.iter().enumerate() {
        for (j, &y) in objs.iter().enumerate() {
            if index.lt(x, y) {
                rels.push((i, j));
            }
        }
    }
    (
        Poset::new(labels, &rels).expect("induced subposet is a poset"),
        back,
    )
}

/// Objectwise truncation of a diagram with the induced maps and the natural
/// surjections.
pub fn truncate_diagram(d: &Diagram, k: usize) -> (Diagram, Vec<ChainMap>) {
    let field = d.field();
    let mut objects = Vec::new();
    let mut ps = Vec::new();
    for a in 0..d.index().len() {
        let (t, p) = chain::truncate(d.object(a), k);
        objects.push(t);
        ps.push(p);
    }
    let mut arrows = BTreeMap::new();
    for &(a, b) in d.index().covers() {
        let f = d.arrow(a, b);
        let mut comps = Vec::new();
        for n in 0..=k {
            if n < k {
                comps.push(f.f_at(n));
            } else {
                // induced on cokernels: q_b ∘ f_k ∘ section_a
                let qa = ps[a].f_at(k);
                let _ = qa;
                let qb = ps[b].f_at(k);
                let sa = d.object(a).boundaries(k).complement();
                comps.push(qb.mul(&f.f_at(k)).mul(sa.basis()));
            }
        }
        arrows.insert(
            (a, b),
            ChainMap::new(objects[a].clone(), objects[b].clone(), comps)
                .expect("truncation is functorial"),
        );
    }
    let _ = field;
    (
        Diagram::new(d.index().clone(), objects, arrows).expect("truncated diagram is valid"),
        ps,
    )
}

/// Objectwise connected cover of a diagram with the induced maps and the
/// natural inclusions.
pub fn conn_cover_diagram(d: &Diagram, k: usize) -> (Diagram, Vec<ChainMap>) {
    let mut objects = Vec::new();
    let mut iotas = Vec::new();
    for a in 0..d.index().len() {
        let (c, iota) = chain::conn_cover(d.object(a), k);
        objects.push(c);
        iotas.push(iota);
    }
    let mut arrows = BTreeMap::new();
    for &(a, b) in d.index().covers() {
        let f = d.arrow(a, b);
        let len = objects[a].len().max(objects[b].len());
        let mut comps = Vec::new();
        for n in 0..len {
            if n < k {
                comps.push(Matrix::zeros(d.field(), objects[b].dim_at(n), objects[a].dim_at(n)));
            } else if n == k {
                // restriction to cycles: f(Z_k(a)) ⊆ Z_k(b)
                let za = d.object(a).cycles(k);
                let zb = d.object(b).cycles(k);
                let img = f.f_at(k).mul(za.basis());
                comps.push(zb.coords_of_matrix(&img).expect("cycles map to cycles"));
            } else {
                comps.push(f.f_at(n));
            }
        }
        arrows.insert(
            (a, b),
            ChainMap::new(objects[a].clone(), objects[b].clone(), comps)
                .expect("cover is functorial"),
        );
    }
    (
        Diagram::new(d.index().clone(), objects, arrows).expect("cover diagram is valid"),
        iotas,
    )
}

/// A `k`-hybrid presentation: formal graded data below degree `k`, a chain
/// diagram from degree `k` up, and the seam retractions.
#[derive(Debug, Clone)]
pub struct HybridDiagram {
    pub index: Poset,
    pub k: usize,
    /// Degrees `< k`: graded vector spaces with graded maps.
    pub low: GradedDiagram,
    /// Degrees `>= k` (stored unshifted: complexes supported in degrees
    /// `>= k`).
    pub high: Diagram,
    /// Per object: retraction `X_k -> Z_k` coordinates of the seam.
    pub seam: Vec<Matrix>,
}

/// Presents a diagram as a `k`-hybrid: the low part is the homology below
/// `k` (valid when the diagram is `k`-formal), the high part the objectwise
/// `(k-1)`-connected cover.
pub fn to_hybrid(d: &Diagram, k: usize) -> HybridDiagram {
    let field = d.field();
    let (high, _) = conn_cover_diagram(d, k);
    let low_objects: Vec<GradedVS> = d
        .objects()
        .iter()
        .map(|c| GradedVS {
            dims: (0..k).map(|n| c.homology(n).dim).collect(),
        })
        .collect();
    let mut low_arrows = BTreeMap::new();
    for a in 0..d.index().len() {
        for b in 0..d.index().len() {
            if !d.index().lt(a, b) {
                continue;
            }
            let f = d.map_between(a, b);
            let mut g = GradedMap::zero(low_objects[a].clone(), low_objects[b].clone());
            for n in 0..k {
                let m = f.induced_on_homology(n);
                if m.rows() > 0 && m.cols() > 0 {
                    g.set_component(0, n, m);
                }
            }
            low_arrows.insert((a, b), g);
        }
    }
    let seam: Vec<Matrix> = d
        .objects()
        .iter()
        .map(|c| {
            let z = c.cycles(k);
            if c.dim_at(k) == 0 {
                Matrix::zeros(field, 0, 0)
            } else {
                let comp = z.complement();
                block_projections(&[&z, &comp])[0].clone()
            }
        })
        .collect();
    HybridDiagram {
        index: d.index().clone(),
        k,
        low: GradedDiagram {
            index: d.index().clone(),
            field,
            objects: low_objects,
            arrows: low_arrows,
        },
        high,
        seam,
    }
}

/// A diagram is `k`-formal when every object agrees with its homology below
/// degree `k`: all differentials `d_j` vanish for `j <= k`.
pub fn is_k_formal(d: &Diagram, k: usize) -> bool {
    d.objects().iter().all(|c| {
        (1..=k.min(c.len().saturating_sub(0)))
            .all(|j| c.d_at(j).is_zero())
    })
}

/// `k`-hybrid: `k`-formal with a minimally cofibrant `(k-1)`-connected
/// cover.
pub fn is_k_hybrid(d: &Diagram, k: usize) -> bool {
    if !is_k_formal(d, k) {
        return false;
    }
    let (cover, _) = conn_cover_diagram(d, k);
    minimal_cofibrant_check(&cover).is_ok()
}

/// The downward closure of a fan within the index: the left Kan extension
/// of the diagram takes its colimit there, which keeps the extended functor
/// total on the completed index.
pub fn fan_closure(index: &Poset, alpha: Obj, gamma: &[Obj]) -> Vec<Obj> {
    let mut members: Vec<Obj> = (0..index.len())
        .filter(|&x| {
            x == alpha
                || gamma.contains(&x)
                || gamma.iter().any(|&g| index.lt(x, g))
                || index.lt(x, alpha)
        })
        .collect();
    members.sort_unstable();
    members
}

/// Extends a (cofibrant) diagram to the stage-2 Ind-completion index:
/// formal colimit objects take the colimit over the downward closure of
/// their fan (the Kan-extension value), structure maps to upper bounds are
/// induced by the universal property.
pub fn extend_ind2(d: &Diagram, idx: &IndIndex2) -> Result<Diagram, Error> {
    let mut objects = Vec::new();
    let mut colims: BTreeMap<usize, ColimitData> = BTreeMap::new();
    for (i, o) in idx.objects.iter().enumerate() {
        match o {
            Ind2Obj::Base(a) => objects.push(d.object(*a).clone()),
            Ind2Obj::Colim { alpha, gamma } => {
                let fan = fan_closure(d.index(), *alpha, gamma);
                let c = colimit_over(d, &fan);
                objects.push(c.complex.clone());
                colims.insert(i, c);
            }
        }
    }
    let mut arrows = BTreeMap::new();
    for &(x, y) in idx.poset.covers() {
        let m = match (&idx.objects[x], &idx.objects[y]) {
            (Ind2Obj::Base(a), Ind2Obj::Base(b)) => d.map_between(*a, *b),
            (Ind2Obj::Base(a), Ind2Obj::Colim { .. }) => {
                colims[&y].cocone[a].clone()
            }
            (Ind2Obj::Colim { alpha, gamma }, Ind2Obj::Base(u)) => {
                let fan = fan_closure(d.index(), *alpha, gamma);
                let legs: BTreeMap<Obj, ChainMap> = fan
                    .iter()
                    .map(|&a| (a, d.map_between(a, *u)))
                    .collect();
                colims[&x]
                    .factor_cocone(d.object(*u), &legs)
                    .ok_or(Error::IncompatibleCocone { from: x, to: y })?
            }
            (Ind2Obj::Colim { .. }, Ind2Obj::Colim { .. }) => {
                return Err(Error::BadArrow {
                    from: x,
                    to: y,
                    reason: "no structure maps between formal colimits".into(),
                })
            }
        };
        arrows.insert((x, y), m);
    }
    Diagram::new(idx.poset.clone(), objects, arrows)
}

#[cfg(test)]
mod tests;
