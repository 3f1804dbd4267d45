//! Secondary structure of diagrams: kernel families `K^a_Γ`, evaluation maps
//! and differential values with indeterminacy, the inclusion-exclusion
//! sequence and its exactness after `H_{k+1}`, and the global derived
//! diagram.
//!
//! Values are computed by an explicit chain-level chase: a class that dies at
//! two incomparable objects bounds there, and the signed difference of the
//! pushed bounding chains represents the value in the join. The homotopy
//! colimit route is kept alongside as the independent oracle.

use std::collections::BTreeMap;
use std::fmt;

use crate::chain::{ChainMap, GradedMap, GradedVS};
use crate::diagram::{
    self, colimit_over, reedy_cofibrant_replace, Diagram, HybridDiagram,
};
use crate::exactalg::{FieldSpec, Matrix, Subspace};
use crate::poset::{
    self, DerivedEdgeKind, DerivedIndex, DerivedObj, Obj, PathObject, Poset, DEFAULT_MAX_GAMMA,
};

#[derive(Debug, Clone)]
pub enum Error {
    Poset(poset::Error),
    Diagram(String),
    /// The chased class does not die at the stated object.
    NotInKernel { object: Obj, degree: usize },
    /// The realized inclusion-exclusion sequence failed exactness.
    ExactnessFailure { path: PathObject, position: usize },
    /// A path-morphism compatibility square failed.
    SquareFailure { edge: (usize, usize) },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Poset(e) => write!(f, "{e}"),
            Error::Diagram(e) => write!(f, "{e}"),
            Error::NotInKernel { object, degree } => {
                write!(f, "class does not die at object {object} in degree {degree}")
            }
            Error::ExactnessFailure { path, position } => write!(
                f,
                "inclusion-exclusion sequence not exact at position {position} for {path:?}"
            ),
            Error::SquareFailure { edge } => {
                write!(f, "compatibility square fails at edge {edge:?}")
            }
        }
    }
}

impl std::error::Error for Error {}

impl From<poset::Error> for Error {
    fn from(e: poset::Error) -> Self {
        Error::Poset(e)
    }
}

impl From<diagram::Error> for Error {
    fn from(e: diagram::Error) -> Self {
        Error::Diagram(e.to_string())
    }
}

/// The kernels `K^a_{Γ'}` of one family: for every nonempty subset of
/// `gamma`, the subspace of `H_k X(alpha)` dying at all its members.
#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub alpha: Obj,
    pub degree: usize,
    pub gamma: Vec<Obj>,
    /// Keyed by sorted nonempty subsets of `gamma`.
    pub kernels: BTreeMap<Vec<Obj>, Subspace>,
}

impl KernelFamily {
    pub fn kernel(&self, subset: &[Obj]) -> &Subspace {
        let mut key = subset.to_vec();
        key.sort_unstable();
        &self.kernels[&key]
    }
}

/// Kernels for one path object: exact intersections of the single-object
/// kernels, monotone under inclusion of subsets.
pub fn kernel_family(d: &Diagram, k: usize, path: &PathObject) -> KernelFamily {
    let alpha = path.alpha;
    let h = d.object(alpha).homology(k);
    let field = d.field();
    let mut singles: BTreeMap<Obj, Subspace> = BTreeMap::new();
    for &g in &path.gamma {
        let m = d.map_between(alpha, g).induced_on_homology(k);
        singles.insert(g, m.kernel());
    }
    let mut kernels = BTreeMap::new();
    let m = path.gamma.len();
    for mask in 1u32..(1 << m) {
        let subset: Vec<Obj> = (0..m)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| path.gamma[i])
            .collect();
        let mut acc = Subspace::full(field, h.dim);
        for &g in &subset {
            acc = acc.intersect(&singles[&g]);
        }
        kernels.insert(subset, acc);
    }
    KernelFamily {
        alpha,
        degree: k,
        gamma: path.gamma.clone(),
        kernels,
    }
}

/// Kernel families for several paths rooted at the same object.
pub fn kernels(d: &Diagram, alpha: Obj, k: usize, families: &[PathObject]) -> Vec<KernelFamily> {
    families
        .iter()
        .map(|p| {
            assert_eq!(p.alpha, alpha, "family not rooted at alpha");
            kernel_family(d, k, p)
        })
        .collect()
}

/// The value of a secondary differential at an incomparable pair, with its
/// indeterminacy.
#[derive(Debug, Clone)]
pub struct EvalValue {
    /// `K^a_{γδ}` as a subspace of `H_k X(alpha)`.
    pub kernel: Subspace,
    /// `dim H_{k+1} X(beta)  x  dim kernel`: the class of
    /// `f_γ b_γ - f_δ b_δ` per kernel basis vector (γ before δ by label).
    pub value: Matrix,
    /// Image of `H_{k+1} X(γ) ⊕ H_{k+1} X(δ)` in `H_{k+1} X(beta)`.
    pub indeterminacy: Subspace,
}

impl EvalValue {
    /// Rank of the value modulo the indeterminacy.
    pub fn rank_mod_indeterminacy(&self) -> usize {
        let total = self.value.image().sum(&self.indeterminacy);
        total.dim() - self.indeterminacy.dim()
    }
}

/// Chain-level chase for the value at an incomparable pair `{γ, δ}` with
/// join `beta`: for each basis class of the pair kernel, choose the canonical
/// bounding chains in both cones and take the class of their signed
/// difference in `H_{k+1} X(beta)`.
pub fn eval_value(
    d: &Diagram,
    alpha: Obj,
    pair: (Obj, Obj),
    beta: Obj,
    k: usize,
) -> Result<EvalValue, Error> {
    let field = d.field();
    // order the pair by label (the signed-diagonal convention)
    let (g, del) = if d.index().label(pair.0) <= d.index().label(pair.1) {
        (pair.0, pair.1)
    } else {
        (pair.1, pair.0)
    };
    let ha = d.object(alpha).homology(k);
    let hb = d.object(beta).homology(k + 1);
    let kg = d.map_between(alpha, g).induced_on_homology(k).kernel();
    let kd = d.map_between(alpha, del).induced_on_homology(k).kernel();
    let kernel = kg.intersect(&kd);
    let mut cols = Vec::new();
    for c in 0..kernel.dim() {
        let x = kernel.basis().col(c);
        let z = ha.cycle_reps.mul_vec(&x);
        let mut legs = Vec::new();
        for (obj, sign_pos) in [(g, true), (del, false)] {
            let v = d.map_between(alpha, obj).f_at(k).mul_vec(&z);
            let b = d
                .object(obj)
                .d_at(k + 1)
                .solve(&v)
                .ok_or(Error::NotInKernel { object: obj, degree: k })?;
            let pushed = d.map_between(obj, beta).f_at(k + 1).mul_vec(&b);
            legs.push((pushed, sign_pos));
        }
        let mut w = vec![0u64; d.object(beta).dim_at(k + 1)];
        for (pushed, pos) in legs {
            for (i, &val) in pushed.iter().enumerate() {
                let adj = if pos { val } else { (field.p() - val % field.p()) % field.p() };
                w[i] = (w[i] + adj) % field.p();
            }
        }
        cols.push(hb.project.mul_vec(&w));
    }
    let value = Matrix::from_cols(field, hb.dim, &cols);
    let ig = d.map_between(g, beta).induced_on_homology(k + 1).image();
    let idel = d.map_between(del, beta).induced_on_homology(k + 1).image();
    Ok(EvalValue {
        kernel,
        value,
        indeterminacy: ig.sum(&idel),
    })
}

/// The realized partial derived diagram of one path: the inclusion-exclusion
/// chain of suspended kernels, the canonical maps into the homotopy colimit
/// of the fan, the evaluation maps into the join, and the assembled values.
#[derive(Debug, Clone)]
pub struct PartialDerived {
    pub path: PathObject,
    pub degree: usize,
    pub family: KernelFamily,
    /// Čech levels from `|Γ|` down to 2: per level the sorted subsets.
    pub levels: Vec<Vec<Vec<Obj>>>,
    /// Signed boundary maps between consecutive levels.
    pub cech: Vec<Matrix>,
    /// Canonical isos/maps `K_{pair} -> H_{k+1}(hocolim of the fan)`.
    pub sigma: BTreeMap<(Obj, Obj), Matrix>,
    /// Evaluation maps `K_{pair} -> H_{k+1} X(beta)`.
    pub psi: BTreeMap<(Obj, Obj), Matrix>,
    /// Values `psi ∘ d̂` on the full kernel `K_Γ`.
    pub values: BTreeMap<(Obj, Obj), Matrix>,
    /// Indeterminacy in `H_{k+1} X(beta)`.
    pub indeterminacy: Subspace,
    pub hocolim_h_dim: usize,
}

/// The kernel-restricted fan `X'` of a path: at the root, the span of the
/// chosen cycle representatives of `U = Σ K_{pairs}`; at each `γ`, the image
/// of those representatives together with the canonical bounding chains of
/// the part of `U` dying at `γ`.
struct RestrictedFan {
    /// Fan diagram over the star poset (root first, then gamma in order).
    fan: Diagram,
    /// `U ⊆ H_k X(alpha)`.
    u: Subspace,
    /// Degree-`k` spans at each gamma (ambient coordinates of `X(γ)_k`).
    incl_k: Vec<Matrix>,
    /// Degree-`k+1` cell inclusions at each gamma.
    incl_k1: Vec<Matrix>,
}

fn restricted_fan(d: &Diagram, path: &PathObject, k: usize, family: &KernelFamily) -> RestrictedFan {
    let field = d.field();
    let alpha = path.alpha;
    let ha = d.object(alpha).homology(k);
    let mm = path.gamma.len();
    // U = sum of all pair kernels
    let mut u = Subspace::zero(field, ha.dim);
    for i in 0..mm {
        for j in i + 1..mm {
            u = u.sum(family.kernel(&[path.gamma[i], path.gamma[j]]));
        }
    }
    let u_reps = ha.cycle_reps.mul(u.basis()); // columns: chains in X(alpha)_k
    // star poset: 0 = alpha, 1..=m the gammas
    let mut labels = vec![d.index().label(alpha).to_string()];
    let mut rels = Vec::new();
    for (i, &g) in path.gamma.iter().enumerate() {
        labels.push(d.index().label(g).to_string());
        rels.push((0, i + 1));
    }
    let star = Poset::new(labels, &rels).expect("star is a poset");
    // root object: U concentrated in degree k
    let root = {
        let mut dims = vec![0; k + 1];
        dims[k] = u.dim();
        let diffs = (1..dims.len())
            .map(|n| Matrix::zeros(field, dims[n - 1], dims[n]))
            .collect();
        crate::chain::ChainComplex::new(field, dims, diffs).unwrap()
    };
    let mut objects = vec![root.clone()];
    let mut arrows = BTreeMap::new();
    let mut incl_k = Vec::new();
    let mut incl_k1 = Vec::new();
    for (i, &g) in path.gamma.iter().enumerate() {
        let f = d.map_between(alpha, g);
        let image_k = f.f_at(k).mul(&u_reps);
        let span_k = Subspace::from_matrix_columns(&image_k);
        // part of U dying at g, with canonical bounding cells
        let kg = d.map_between(alpha, g).induced_on_homology(k).kernel();
        let ug = u.intersect(&kg);
        let mut cells = Vec::new();
        for c in 0..ug.dim() {
            let v = ug.basis().col(c);
            let z = ha.cycle_reps.mul_vec(&v);
            let img = f.f_at(k).mul_vec(&z);
            let b = d
                .object(g)
                .d_at(k + 1)
                .solve(&img)
                .expect("dying class bounds in its cone");
            cells.push(b);
        }
        let cell_matrix = Matrix::from_cols(field, d.object(g).dim_at(k + 1), &cells);
        let span_k1 = Subspace::from_matrix_columns(&cell_matrix);
        // abstract complex at g: degrees k and k+1
        let mut dims = vec![0; k + 2];
        dims[k] = span_k.dim();
        dims[k + 1] = span_k1.dim();
        let mut diffs: Vec<Matrix> = (1..dims.len())
            .map(|n| Matrix::zeros(field, dims[n - 1], dims[n]))
            .collect();
        let d_cells = d.object(g).d_at(k + 1).mul(span_k1.basis());
        diffs[k] = span_k
            .coords_of_matrix(&d_cells)
            .expect("cell boundaries lie in the degree-k span");
        let cx = crate::chain::ChainComplex::new(field, dims, diffs)
            .expect("restricted cone is a complex");
        // arrow root -> g: U-coords to span coordinates of the image
        let arr = span_k
            .coords_of_matrix(&image_k)
            .expect("image lies in its own span");
        let mut comps: Vec<Matrix> = Vec::new();
        for n in 0..=k {
            if n == k {
                comps.push(arr.clone());
            } else {
                comps.push(Matrix::zeros(field, cx.dim_at(n), root.dim_at(n)));
            }
        }
        arrows.insert(
            (0, i + 1),
            ChainMap::new(root.clone(), cx.clone(), comps).expect("restriction is a chain map"),
        );
        objects.push(cx);
        incl_k.push(span_k.basis().clone());
        incl_k1.push(span_k1.basis().clone());
    }
    let fan = Diagram::new(star, objects, arrows).expect("restricted fan is functorial");
    RestrictedFan {
        fan,
        u,
        incl_k,
        incl_k1,
    }
}

/// Builds the partial derived diagram and checks `H_{k+1}`-exactness of the
/// inclusion-exclusion sequence
/// `0 -> K_Γ -> ⊕ K_{Γ\γ} -> ... -> ⊕ K_{pairs} -> H_{k+1}(hocolim X') -> 0`
/// against the homotopy colimit of the kernel-restricted fan.
pub fn inclusion_exclusion(
    d: &Diagram,
    path: &PathObject,
    k: usize,
) -> Result<PartialDerived, Error> {
    let field = d.field();
    let beta = path.beta.expect("path carries a join");
    let family = kernel_family(d, k, path);
    let mm = path.gamma.len();
    let restricted = restricted_fan(d, path, k, &family);
    let (replaced, etas) = reedy_cofibrant_replace(&restricted.fan)?;
    let all: Vec<Obj> = (0..replaced.index().len()).collect();
    let colim = colimit_over(&replaced, &all);
    let p_h = colim.complex.homology(k + 1);
    let ha = d.object(path.alpha).homology(k);
    // sigma per pair: chase inside the replaced restricted fan
    let mut sigma = BTreeMap::new();
    let mut psi = BTreeMap::new();
    // map from the hocolim into X(beta): legs are the ambient inclusions
    // followed by the diagram maps
    let legs: BTreeMap<Obj, ChainMap> = (0..replaced.index().len())
        .map(|i| {
            let leg = if i == 0 {
                // root: U-coords -> X(alpha) -> X(beta)
                let mut comps = Vec::new();
                for n in 0..=k {
                    if n == k {
                        comps.push(
                            d.map_between(path.alpha, beta)
                                .f_at(k)
                                .mul(&ha.cycle_reps)
                                .mul(restricted.u.basis()),
                        );
                    } else {
                        comps.push(Matrix::zeros(
                            field,
                            d.object(beta).dim_at(n),
                            restricted.fan.object(0).dim_at(n),
                        ));
                    }
                }
                ChainMap::new(
                    restricted.fan.object(0).clone(),
                    d.object(beta).clone(),
                    comps,
                )
                .expect("root leg is a chain map")
            } else {
                let g = path.gamma[i - 1];
                let mut comps = Vec::new();
                for n in 0..=(k + 1) {
                    let m = if n == k {
                        d.map_between(g, beta).f_at(k).mul(&restricted.incl_k[i - 1])
                    } else if n == k + 1 {
                        d.map_between(g, beta)
                            .f_at(k + 1)
                            .mul(&restricted.incl_k1[i - 1])
                    } else {
                        Matrix::zeros(
                            field,
                            d.object(beta).dim_at(n),
                            restricted.fan.object(i).dim_at(n),
                        )
                    };
                    comps.push(m);
                }
                ChainMap::new(
                    restricted.fan.object(i).clone(),
                    d.object(beta).clone(),
                    comps,
                )
                .expect("gamma leg is a chain map")
            };
            (i, leg.compose(&etas[i]))
        })
        .collect();
    let to_beta = colim
        .factor_cocone(d.object(beta), &legs)
        .expect("restricted fan maps into the join compatibly");
    let to_beta_h = to_beta.induced_on_homology(k + 1);
    for i in 0..mm {
        for j in i + 1..mm {
            let (g, del) = order_by_label(d, path.gamma[i], path.gamma[j]);
            let pair_kernel = family.kernel(&[g, del]);
            let mut cols = Vec::new();
            for c in 0..pair_kernel.dim() {
                let x = pair_kernel.basis().col(c);
                // x as U-coordinates at the root
                let zu = restricted
                    .u
                    .coords_of(&x)
                    .expect("pair kernels lie in U");
                let za = etas[0]
                    .f_at(k)
                    .solve(&zu)
                    .expect("initial replacement is the identity");
                let mut w = vec![0u64; colim.complex.dim_at(k + 1)];
                for (obj, positive) in [(g, true), (del, false)] {
                    let gp = 1 + path.gamma.iter().position(|&x| x == obj).unwrap();
                    let v = replaced.map_between(0, gp).f_at(k).mul_vec(&za);
                    let b = replaced
                        .object(gp)
                        .d_at(k + 1)
                        .solve(&v)
                        .ok_or(Error::NotInKernel { object: obj, degree: k })?;
                    let pushed = colim.cocone[&gp].f_at(k + 1).mul_vec(&b);
                    for (r, &val) in pushed.iter().enumerate() {
                        let adj = if positive {
                            val
                        } else {
                            (field.p() - val % field.p()) % field.p()
                        };
                        w[r] = (w[r] + adj) % field.p();
                    }
                }
                cols.push(p_h.project.mul_vec(&w));
            }
            let sg = Matrix::from_cols(field, p_h.dim, &cols);
            let ps = to_beta_h.mul(&sg);
            sigma.insert((g, del), sg);
            psi.insert((g, del), ps);
        }
    }
    // Čech chain: levels from |Γ| down to 2
    let mut levels: Vec<Vec<Vec<Obj>>> = Vec::new();
    for t in (2..=mm).rev() {
        let mut subs = Vec::new();
        for mask in 1u32..(1 << mm) {
            if mask.count_ones() as usize != t {
                continue;
            }
            let s: Vec<Obj> = (0..mm)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| path.gamma[i])
                .collect();
            subs.push(s);
        }
        subs.sort();
        levels.push(subs);
    }
    let level_dim = |subs: &Vec<Vec<Obj>>| -> usize {
        subs.iter().map(|s| family.kernel(s).dim()).sum()
    };
    let mut cech = Vec::new();
    for w in levels.windows(2) {
        let (src, tgt) = (&w[0], &w[1]);
        let mut m = Matrix::zeros(field, level_dim(tgt), level_dim(src));
        let mut col_off = 0;
        for s in src {
            let ks = family.kernel(s);
            for (drop_idx, &dropped) in s.iter().enumerate() {
                let smaller: Vec<Obj> = s
                    .iter()
                    .copied()
                    .filter(|&x| x != dropped)
                    .collect();
                let kt = family.kernel(&smaller);
                let incl = kt
                    .coords_of_matrix(ks.basis())
                    .expect("kernels are monotone");
                let row_off: usize = tgt
                    .iter()
                    .take_while(|t| **t != smaller)
                    .map(|t| family.kernel(t).dim())
                    .sum();
                let negate = drop_idx % 2 == 1;
                for r in 0..incl.rows() {
                    for c in 0..incl.cols() {
                        let v = if negate {
                            (field.p() - incl.get(r, c) % field.p()) % field.p()
                        } else {
                            incl.get(r, c)
                        };
                        let cur = m.get(row_off + r, col_off + c);
                        m.set(row_off + r, col_off + c, (cur + v) % field.p());
                    }
                }
            }
            col_off += ks.dim();
        }
        cech.push(m);
    }
    // final map: pair level into H_{k+1}(hocolim)
    let pair_level = levels.last().expect("at least the pair level exists");
    let mut final_map = Matrix::zeros(field, p_h.dim, level_dim(pair_level));
    {
        let mut col_off = 0;
        for s in pair_level {
            let (g, del) = order_by_label(d, s[0], s[1]);
            let sg = &sigma[&(g, del)];
            for r in 0..sg.rows() {
                for c in 0..sg.cols() {
                    final_map.set(r, col_off + c, sg.get(r, c));
                }
            }
            col_off += sg.cols();
        }
    }
    // exactness check of 0 -> K_Γ -> ... -> pairs -> H_{k+1}(hocolim) -> 0;
    // the Čech chain already starts at the top level {Γ}
    {
        let mut maps: Vec<Matrix> = cech.clone();
        maps.push(final_map.clone());
        // verify: injective start, surjective end, image = kernel in between
        for (i, w) in maps.windows(2).enumerate() {
            if w[1].mul(&w[0]) != Matrix::zeros(field, w[1].rows(), w[0].cols()) {
                return Err(Error::ExactnessFailure {
                    path: path.clone(),
                    position: i,
                });
            }
            if w[0].image() != w[1].kernel() {
                return Err(Error::ExactnessFailure {
                    path: path.clone(),
                    position: i,
                });
            }
        }
        if let Some(first) = maps.first() {
            if !first.kernel().is_zero() {
                return Err(Error::ExactnessFailure {
                    path: path.clone(),
                    position: 0,
                });
            }
        }
        if let Some(last) = maps.last() {
            if last.image().dim() != p_h.dim {
                return Err(Error::ExactnessFailure {
                    path: path.clone(),
                    position: maps.len(),
                });
            }
        }
    }
    // assembled values on K_Γ and the indeterminacy at beta
    let kg = family.kernel(&path.gamma);
    let mut values = BTreeMap::new();
    for (&(g, del), ps) in &psi {
        let pair_kernel = family.kernel(&[g, del]);
        let incl = pair_kernel
            .coords_of_matrix(kg.basis())
            .expect("K_Γ includes into every pair kernel");
        values.insert((g, del), ps.mul(&incl));
    }
    let mut indeterminacy = Subspace::zero(field, d.object(beta).homology(k + 1).dim);
    for &g in &path.gamma {
        indeterminacy =
            indeterminacy.sum(&d.map_between(g, beta).induced_on_homology(k + 1).image());
    }
    Ok(PartialDerived {
        path: path.clone(),
        degree: k,
        family,
        levels,
        cech,
        sigma,
        psi,
        values,
        indeterminacy,
        hocolim_h_dim: p_h.dim,
    })
}

fn order_by_label(d: &Diagram, a: Obj, b: Obj) -> (Obj, Obj) {
    if d.index().label(a) <= d.index().label(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// The global derived diagram: graded values on the derived index with
/// graded maps (shifts 0 or +1) on its generating edges.
#[derive(Debug, Clone)]
pub struct GlobalDerived {
    pub index: DerivedIndex,
    pub field: FieldSpec,
    /// Working degree `k` of the input hybrid.
    pub degree: usize,
    pub values: Vec<GradedVS>,
    /// Arrow per generating edge (indexed like `index.edges`).
    pub arrows: Vec<GradedMap>,
    /// Kernel subspaces per kernel object id.
    pub kernel_spaces: BTreeMap<usize, Subspace>,
    /// Realized partial derived diagrams, one per path.
    pub partials: Vec<PartialDerived>,
}

impl GlobalDerived {
    pub fn value_of(&self, id: usize) -> &GradedVS {
        &self.values[id]
    }

    /// The path-morphism compatibility squares and the pullback squares commute,
    /// and the result is formal through degree `k+1` by construction.
    pub fn validate(&self) -> Result<(), Error> {
        let field = self.field;
        let edge_map: BTreeMap<(usize, usize), &GradedMap> = self
            .index
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b, _))| ((a, b), &self.arrows[i]))
            .collect();
        for (i, &(a, b, kind)) in self.index.edges.iter().enumerate() {
            if kind != DerivedEdgeKind::StructC {
                continue;
            }
            // psi' then base H-map vs StructC then psi
            let (DerivedObj::Kernel { beta: b1, .. }, DerivedObj::Kernel { beta: b2, .. }) =
                (&self.index.objects[a], &self.index.objects[b])
            else {
                continue;
            };
            let psi1 = edge_map
                .iter()
                .find(|(&(x, y), _)| {
                    x == a && matches!(self.index.objects[y], DerivedObj::Base(bb) if bb == *b1)
                })
                .map(|(_, m)| (*m).clone());
            let psi2 = edge_map
                .iter()
                .find(|(&(x, y), _)| {
                    x == b && matches!(self.index.objects[y], DerivedObj::Base(bb) if bb == *b2)
                })
                .map(|(_, m)| (*m).clone());
            let (Some(psi1), Some(psi2)) = (psi1, psi2) else {
                continue;
            };
            // base composite H(beta1 -> beta2) restricted to the +1 slot
            let base_map = self.base_composite(*b1, *b2);
            let lhs = base_map.compose(&psi1, field);
            let rhs = psi2.compose(&self.arrows[i], field);
            // compare only the degree (k -> k+1) component; the j-composites
            // land below and are checked by base functoriality
            let l = lhs.component(1, self.degree, field);
            let r = rhs.component(1, self.degree, field);
            if l != r {
                return Err(Error::SquareFailure { edge: (a, b) });
            }
        }
        // pullback squares: j ∘ toKernel = theta ∘ toSource on values
        for &(pb, kid, kindk) in self.index.edges.iter().filter(|&&(_, _, k)| {
            k == DerivedEdgeKind::PullbackKernel
        }) {
            let _ = kindk;
            let DerivedObj::Pullback { alpha, source, .. } = &self.index.objects[pb] else {
                continue;
            };
            let to_kernel = edge_map[&(pb, kid)];
            let j = self
                .index
                .edges
                .iter()
                .enumerate()
                .find(|(_, &(x, y, kk))| {
                    x == kid
                        && kk == DerivedEdgeKind::J
                        && matches!(self.index.objects[y], DerivedObj::Base(aa) if aa == *alpha)
                })
                .map(|(i, _)| &self.arrows[i])
                .expect("kernel object has a j edge");
            let src_id = self.index.base_id(*source);
            let to_source = edge_map[&(pb, src_id)];
            let theta = self.base_composite(*source, *alpha);
            let lhs = j.compose(to_kernel, field);
            let rhs = theta.compose(to_source, field);
            let l = lhs.component(0, self.degree, field);
            let r = rhs.component(0, self.degree, field);
            if l != r {
                return Err(Error::SquareFailure { edge: (pb, kid) });
            }
        }
        Ok(())
    }

    /// Composite base arrow `a -> b` along base covers.
    pub fn base_composite(&self, a: Obj, b: Obj) -> GradedMap {
        let field = self.field;
        if a == b {
            return GradedMap::identity(&self.values[self.index.base_id(a)], field);
        }
        let path = self
            .index
            .base
            .hasse_path(a, b)
            .expect("a <= b in the base");
        let edge = |x: Obj, y: Obj| -> GradedMap {
            let (xi, yi) = (self.index.base_id(x), self.index.base_id(y));
            self.index
                .edges
                .iter()
                .enumerate()
                .find(|(_, &(s, t, kk))| s == xi && t == yi && kk == DerivedEdgeKind::BaseCover)
                .map(|(i, _)| self.arrows[i].clone())
                .expect("base covers carry arrows")
        };
        let mut m = edge(path[0], path[1]);
        for w in path[1..].windows(2) {
            m = edge(w[0], w[1]).compose(&m, field);
        }
        m
    }
}

/// The global derived diagram of a `k`-hybrid presentation:
/// the base maps by homology through degree `k+1`, kernel objects carry the
/// family kernels at degree `k`, pair objects evaluate into their joins with
/// shift `+1`, pullback objects take vector-space fiber products.
pub fn global_derived(h: &HybridDiagram) -> Result<GlobalDerived, Error> {
    global_derived_with(h, DEFAULT_MAX_GAMMA)
}

pub fn global_derived_with(h: &HybridDiagram, max_gamma: usize) -> Result<GlobalDerived, Error> {
    let d = &h.high;
    let k = h.k;
    let field = d.field();
    let index = poset::derived_index(d.index(), max_gamma)?;
    // base values: low dims below k, homology of the high part at k and k+1
    let base_value = |a: Obj| -> GradedVS {
        let mut dims: Vec<usize> = (0..k).map(|n| h.low.objects[a].dim_at(n)).collect();
        dims.push(d.object(a).homology(k).dim);
        dims.push(d.object(a).homology(k + 1).dim);
        GradedVS { dims }
    };
    let mut values = Vec::new();
    let mut kernel_spaces = BTreeMap::new();
    for (id, o) in index.objects.iter().enumerate() {
        match o {
            DerivedObj::Base(a) => values.push(base_value(*a)),
            DerivedObj::Kernel { alpha, subset, beta } => {
                let po = PathObject::new(d.index(), *alpha, subset.clone(), Some(*beta));
                let fam = kernel_family(d, k, &po);
                let ker = fam.kernel(subset).clone();
                values.push(GradedVS::concentrated(ker.dim(), k));
                kernel_spaces.insert(id, ker);
            }
            DerivedObj::Pullback {
                alpha,
                subset,
                beta,
                source,
            } => {
                let po = PathObject::new(d.index(), *alpha, subset.clone(), Some(*beta));
                let fam = kernel_family(d, k, &po);
                let ker = fam.kernel(subset);
                // fiber product K ×_{H_k(alpha)} H_k(source)
                let theta = d.map_between(*source, *alpha).induced_on_homology(k);
                let m = ker.basis().hstack(&theta.neg());
                values.push(GradedVS::concentrated(m.kernel().dim(), k));
            }
        }
    }
    // partial derived diagrams per path
    let mut partials = Vec::new();
    for po in &index.paths {
        partials.push(inclusion_exclusion(d, po, k)?);
    }
    // arrows per edge
    let mut arrows = Vec::new();
    for &(x, y, kind) in &index.edges {
        let src = values[x].clone();
        let tgt = values[y].clone();
        let mut g = GradedMap::zero(src.clone(), tgt.clone());
        match kind {
            DerivedEdgeKind::BaseCover => {
                let (DerivedObj::Base(a), DerivedObj::Base(b)) =
                    (&index.objects[x], &index.objects[y])
                else {
                    unreachable!()
                };
                // low components (all shifts), then H_k and H_{k+1}
                if k > 0 {
                    if let Some(low) = h.low.arrows.get(&(*a, *b)) {
                        for (&(s, deg), m) in low.components() {
                            if deg + s < k {
                                g.set_component(s, deg, m.clone());
                            }
                        }
                    }
                }
                let f = d.map_between(*a, *b);
                for n in [k, k + 1] {
                    let m = f.induced_on_homology(n);
                    if !m.is_zero() {
                        g.set_component(0, n, m);
                    }
                }
            }
            DerivedEdgeKind::Chain | DerivedEdgeKind::StructC => {
                let ks = &kernel_spaces[&x];
                let kt = &kernel_spaces[&y];
                let incl = kt
                    .coords_of_matrix(ks.basis())
                    .expect("kernel inclusion along the edge");
                if !incl.is_zero() {
                    g.set_component(0, k, incl);
                }
            }
            DerivedEdgeKind::J => {
                let ks = &kernel_spaces[&x];
                if !ks.is_zero() {
                    g.set_component(0, k, ks.basis().clone());
                }
            }
            DerivedEdgeKind::Psi => {
                let DerivedObj::Kernel { alpha, subset, beta } = &index.objects[x] else {
                    unreachable!()
                };
                let ev = eval_value(d, *alpha, (subset[0], subset[1]), *beta, k)?;
                if !ev.value.is_zero() {
                    g.set_component(1, k, ev.value);
                }
            }
            DerivedEdgeKind::PullbackSource | DerivedEdgeKind::PullbackKernel => {
                let DerivedObj::Pullback {
                    alpha,
                    subset,
                    beta,
                    source,
                } = &index.objects[x]
                else {
                    unreachable!()
                };
                let po = PathObject::new(d.index(), *alpha, subset.clone(), Some(*beta));
                let fam = kernel_family(d, k, &po);
                let ker = fam.kernel(subset);
                let theta = d.map_between(*source, *alpha).induced_on_homology(k);
                let fp = ker.basis().hstack(&theta.neg()).kernel();
                let fp_basis = fp.basis();
                // coordinates: first block in K-coords, second in H_k(source)
                let kd = ker.dim();
                let hs = theta.cols();
                let mut proj_k = Matrix::zeros(field, kd, fp.dim());
                let mut proj_s = Matrix::zeros(field, hs, fp.dim());
                for c in 0..fp.dim() {
                    for r in 0..kd {
                        proj_k.set(r, c, fp_basis.get(r, c));
                    }
                    for r in 0..hs {
                        proj_s.set(r, c, fp_basis.get(kd + r, c));
                    }
                }
                let m = if kind == DerivedEdgeKind::PullbackKernel {
                    proj_k
                } else {
                    proj_s
                };
                if !m.is_zero() {
                    g.set_component(0, k, m);
                }
            }
        }
        arrows.push(g);
    }
    let gd = GlobalDerived {
        index,
        field,
        degree: k,
        values,
        arrows,
        kernel_spaces,
        partials,
    };
    gd.validate()?;
    Ok(gd)
}
