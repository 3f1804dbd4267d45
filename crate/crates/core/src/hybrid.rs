//! The hybridization engine: expanded derived diagrams, the reconstruction
//! maps and their equivalence reports, the hybrid-approximation step, the
//! iterated tower `Hyb^k` / `Der^k`, and the desk-scale certification of the
//! reconstruction theorem.
//!
//! One hybridization step takes a `k`-hybrid state (formal graded data below
//! degree `k`, an honest minimally cofibrant chain diagram from degree `k`
//! up), computes the degree-`k` secondary data (kernels, evaluation values,
//! indeterminacies), and assembles the `(k+1)`-hybrid state: base objects are
//! replaced by their `k`-connected covers, kernel tops become formal objects,
//! the suspended pair objects and the formal colimits of the fans become
//! genuine one- and two-degree chain objects carrying the next level's
//! homology. Formal classes whose outgoing values vanish coordinate across
//! incomparable mediator families and produce the higher composite
//! differentials by an alternating chain-level chase.

use std::collections::BTreeMap;
use std::fmt;

use crate::chain::{ChainComplex, ChainMap, GradedVS};
use crate::derived::{self, GlobalDerived};
use crate::diagram::{
    self, colimit_over, conn_cover_diagram, homology_diagram, minimal_cofibrant_check,
    minimal_cofibrant_replace, Diagram, HybridDiagram,
};
use crate::exactalg::{FieldSpec, Matrix, Subspace};
use crate::poset::{self, Obj, PathObject, Poset, DEFAULT_MAX_GAMMA};

#[derive(Debug, Clone)]
pub enum Error {
    Poset(poset::Error),
    Diagram(String),
    Derived(String),
    /// The coordinated chase could not close its alternating cycle.
    CoordinationFailure { root: usize },
    /// A reconstruction or certification check failed.
    Certification(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Poset(e) => write!(f, "{e}"),
            Error::Diagram(e) => write!(f, "{e}"),
            Error::Derived(e) => write!(f, "{e}"),
            Error::CoordinationFailure { root } => {
                write!(f, "alternating chase does not close at formal root {root}")
            }
            Error::Certification(e) => write!(f, "certification failure: {e}"),
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

impl From<derived::Error> for Error {
    fn from(e: derived::Error) -> Self {
        Error::Derived(e.to_string())
    }
}

/// Provenance of an object in the iterated index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    /// An object of the previous level's index (base objects of level 0 are
    /// the original diagram's objects).
    Carried(usize),
    /// Formal kernel top of a path, content in degree `level`.
    KernelTop {
        alpha: usize,
        gamma: Vec<usize>,
        beta: usize,
    },
    /// Suspended pair object, content in degree `level + 1`.
    PairObj {
        alpha: usize,
        pair: (usize, usize),
        beta: usize,
    },
    /// Formal colimit of a path fan.
    Colim { alpha: usize, gamma: Vec<usize> },
    /// Formal kernel top of a coordinated (formal-root) path.
    FormalTop {
        root: usize,
        mediators: Vec<usize>,
        beta: usize,
    },
}

/// Formal edge record between objects of the iterated index.
#[derive(Debug, Clone)]
pub struct LowEdge {
    pub src: usize,
    pub tgt: usize,
    /// Degree shift of the component.
    pub shift: usize,
    /// Source degree of the component.
    pub degree: usize,
    pub matrix: Matrix,
    pub kind: LowEdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowEdgeKind {
    /// `j`: kernel content includes into the root's homology.
    Inclusion,
    /// Formal differential into a suspended pair object.
    FormalDiff,
    /// Evaluation value into the join's homology.
    Value,
    /// Carried homology-induced component of a base arrow.
    Induced,
}

/// The `k`-hybrid state of the tower.
#[derive(Clone)]
pub struct HybridState {
    pub level: usize,
    pub field: FieldSpec,
    /// Chain diagram supported in degrees `>= level` over the current index.
    pub high: Diagram,
    /// Formal graded parts below `level`, per object.
    pub low: Vec<GradedVS>,
    pub low_edges: Vec<LowEdge>,
    pub roles: Vec<Role>,
    /// For each object of the original index, its id in the current index.
    pub base_ids: Vec<usize>,
    /// Per level: for each base object, the natural map (cover inclusion
    /// composed with any re-minimalization) from the new high part into the
    /// previous one; the zig-zag witnesses for the certification.
    pub descent: Vec<Vec<ChainMap>>,
}

impl fmt::Debug for HybridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HybridState level {} over {} objects",
            self.level,
            self.high.index().len()
        )
    }
}

/// One evaluated path of a level.
#[derive(Debug, Clone)]
pub struct PathValue {
    /// Path in the level's index.
    pub path: PathObject,
    pub kernel_dim: usize,
    /// Per ordered pair: the value matrix into `H_{k+1}` of the join and its
    /// rank modulo the indeterminacy.
    pub pair_values: BTreeMap<(usize, usize), Matrix>,
    pub pair_ranks: BTreeMap<(usize, usize), usize>,
    pub indeterminacy_dim: usize,
}

/// A coordinated formal-root path: the composite higher differential.
#[derive(Debug, Clone)]
pub struct FormalPathValue {
    pub root: usize,
    pub mediators: Vec<usize>,
    pub beta: usize,
    pub kernel_dim: usize,
    /// Value of the alternating chase on the kernel basis, into
    /// `H_{level+1}` of the join.
    pub value: Matrix,
    pub value_rank_mod_indeterminacy: usize,
    pub indeterminacy_dim: usize,
    /// Total degree shift of the composite differential from the root.
    pub total_shift: usize,
}

/// The secondary data of one level of the tower.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub level: usize,
    pub paths: Vec<PathValue>,
    pub formal_paths: Vec<FormalPathValue>,
}

/// Initializes the tower from a diagram: the input is made minimally
/// cofibrant if needed; the per-object quasi-isomorphisms back to the input
/// are returned for the certification zig-zag.
pub fn init_state(x: &Diagram) -> Result<(HybridState, Vec<ChainMap>), Error> {
    let (model, etas) = if minimal_cofibrant_check(x).is_ok() {
        (
            x.clone(),
            x.objects().iter().map(ChainMap::identity).collect(),
        )
    } else {
        minimal_cofibrant_replace(x)?
    };
    let n = model.index().len();
    Ok((
        HybridState {
            level: 0,
            field: model.field(),
            high: model,
            low: vec![GradedVS::zero(); n],
            low_edges: vec![],
            roles: (0..n).map(Role::Carried).collect(),
            base_ids: (0..n).collect(),
            descent: vec![],
        },
        etas,
    ))
}

/// Chain-level witnesses of an evaluation: for each kernel basis vector the
/// cycle `f_g b_g - f_d b_d` in the join, plus the projected value.
struct EvalChains {
    #[allow(dead_code)]
    kernel: Subspace,
    /// `dim X(beta)_{k+1} x dim kernel`, columns are cycles.
    chains: Matrix,
    value: Matrix,
    indeterminacy: Subspace,
}

fn eval_with_chains(
    d: &Diagram,
    alpha: Obj,
    pair: (Obj, Obj),
    beta: Obj,
    k: usize,
) -> Result<EvalChains, Error> {
    let field = d.field();
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
    let mut chain_cols = Vec::new();
    let mut value_cols = Vec::new();
    for c in 0..kernel.dim() {
        let x = kernel.basis().col(c);
        let z = ha.cycle_reps.mul_vec(&x);
        let mut w = vec![0u64; d.object(beta).dim_at(k + 1)];
        for (obj, positive) in [(g, true), (del, false)] {
            let v = d.map_between(alpha, obj).f_at(k).mul_vec(&z);
            let b = d
                .object(obj)
                .d_at(k + 1)
                .solve(&v)
                .ok_or_else(|| Error::Derived(format!("class does not die at {obj}")))?;
            let pushed = d.map_between(obj, beta).f_at(k + 1).mul_vec(&b);
            for (i, &val) in pushed.iter().enumerate() {
                let adj = if positive {
                    val
                } else {
                    (field.p() - val % field.p()) % field.p()
                };
                w[i] = (w[i] + adj) % field.p();
            }
        }
        value_cols.push(hb.project.mul_vec(&w));
        chain_cols.push(w);
    }
    let chains = Matrix::from_cols(field, d.object(beta).dim_at(k + 1), &chain_cols);
    let value = Matrix::from_cols(field, hb.dim, &value_cols);
    let ig = d.map_between(g, beta).induced_on_homology(k + 1).image();
    let idel = d.map_between(del, beta).induced_on_homology(k + 1).image();
    Ok(EvalChains {
        kernel,
        chains,
        value,
        indeterminacy: ig.sum(&idel),
    })
}

fn rank_mod(value: &Matrix, indet: &Subspace) -> usize {
    value.image().sum(indet).dim() - indet.dim()
}

/// One hybridization step `k -> k+1`: returns the level's secondary data and
/// the next state.
pub fn step(state: &HybridState) -> Result<(LevelData, HybridState), Error> {
    let k = state.level;
    let d = &state.high;
    let index = d.index();
    // (i) genuine paths at degree k, pruned to nonzero kernels
    let all_paths = poset::all_path_objects(index, DEFAULT_MAX_GAMMA)?;
    let mut kept: Vec<(PathObject, derived::KernelFamily)> = Vec::new();
    let mut path_values = Vec::new();
    for po in &all_paths {
        if d.object(po.alpha).homology(k).dim == 0 {
            continue;
        }
        let fam = derived::kernel_family(d, k, po);
        if fam.kernel(&po.gamma).is_zero() {
            continue;
        }
        let beta = po.beta.expect("emitted paths have joins");
        let mut pair_values = BTreeMap::new();
        let mut pair_ranks = BTreeMap::new();
        let mut indet_dim = 0;
        for i in 0..po.gamma.len() {
            for j in i + 1..po.gamma.len() {
                let pr = (po.gamma[i], po.gamma[j]);
                let ev = eval_with_chains(d, po.alpha, pr, beta, k)?;
                pair_ranks.insert(pr, rank_mod(&ev.value, &ev.indeterminacy));
                indet_dim = indet_dim.max(ev.indeterminacy.dim());
                pair_values.insert(pr, ev.value);
            }
        }
        path_values.push(PathValue {
            path: po.clone(),
            kernel_dim: fam.kernel(&po.gamma).dim(),
            pair_values,
            pair_ranks,
            indeterminacy_dim: indet_dim,
        });
        kept.push((po.clone(), fam));
    }
    // (ii) coordinated formal-root paths: roots with formal content and
    // outgoing formal differentials into mediators carrying H_k
    let mut formal_paths = Vec::new();
    for (rid, role) in state.roles.iter().enumerate() {
        let is_formal_top = matches!(role, Role::KernelTop { .. } | Role::FormalTop { .. });
        if !is_formal_top {
            continue;
        }
        let content: usize = state.low[rid].total_dim();
        if content == 0 {
            continue;
        }
        let root_degree = state.low[rid]
            .dims
            .iter()
            .rposition(|&d| d > 0)
            .expect("nonzero content");
        // mediators: formal-differential successors with genuine H_k
        let mediators: Vec<(usize, Matrix)> = state
            .low_edges
            .iter()
            .filter(|e| e.src == rid && e.kind == LowEdgeKind::FormalDiff)
            .map(|e| (e.tgt, e.matrix.clone()))
            .filter(|(m, _)| d.object(*m).homology(k).dim > 0)
            .collect();
        if mediators.len() < 2 {
            continue;
        }
        // families: subsets of pairwise incomparable mediators with a join
        let ids: Vec<usize> = mediators.iter().map(|(m, _)| *m).collect();
        for mask in 1u32..(1 << ids.len()) {
            if mask.count_ones() < 2 {
                continue;
            }
            let fam: Vec<usize> = (0..ids.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| ids[i])
                .collect();
            if !index.is_antichain(&fam) {
                continue;
            }
            // all common upper bounds: the first joins can have trivial
            // kernels while deeper ones coordinate (the composite
            // differentials live there)
            let joins = index.upper_bounds(&fam);
            for beta in joins {
                if !fam.iter().all(|&m| index.lt(m, beta)) {
                    continue;
                }
                match coordinate_family(state, rid, root_degree, &mediators, &fam, beta)? {
                    Some(fp) => formal_paths.push(fp),
                    None => {}
                }
            }
        }
    }
    let data = LevelData {
        level: k,
        paths: path_values,
        formal_paths,
    };
    let next = assemble_next_state(state, &kept)?;
    Ok((data, next))
}

/// The alternating chase of a coordinated family: kernels of the composite
/// values through each mediator, and the signed sum of bounding chains at
/// the join.
fn coordinate_family(
    state: &HybridState,
    root: usize,
    root_degree: usize,
    mediators: &[(usize, Matrix)],
    fam: &[usize],
    beta: usize,
) -> Result<Option<FormalPathValue>, Error> {
    let field = state.field;
    let _ = field;
    let k = state.level;
    let d = &state.high;
    let index = d.index();
    let content_dim = state.low[root].dim_at(root_degree);
    // order the family by label
    let mut ordered = fam.to_vec();
    ordered.sort_by(|&a, &b| index.label(a).cmp(index.label(b)));
    // kernel: classes of the root content whose mediator images die by beta
    let mut kernel = Subspace::full(field, content_dim);
    for &m in &ordered {
        let e = mediators
            .iter()
            .find(|(mm, _)| *mm == m)
            .map(|(_, mat)| mat.clone())
            .expect("mediator edge present");
        let comp = d.map_between(m, beta).induced_on_homology(k).mul(&e);
        kernel = kernel.intersect(&comp.kernel());
    }
    if kernel.is_zero() {
        return Ok(None);
    }
    // death sites: per mediator, the earliest successor below beta where the
    // kernel image dies
    let info = poset::validate_lattice(index);
    let mut sites = Vec::new();
    for &m in &ordered {
        let e = mediators
            .iter()
            .find(|(mm, _)| *mm == m)
            .map(|(_, mat)| mat.clone())
            .unwrap();
        let img = e.mul(kernel.basis());
        let mut candidates: Vec<usize> = (0..index.len())
            .filter(|&u| index.lt(m, u) && index.leq(u, beta))
            .collect();
        candidates.sort_by_key(|&u| (info.filtration[u], u));
        let site = candidates
            .into_iter()
            .find(|&u| d.map_between(m, u).induced_on_homology(k).mul(&img).is_zero())
            .expect("kernel classes die by beta");
        sites.push(site);
    }
    // alternating chase
    let hb = d.object(beta).homology(k + 1);
    let mut value_cols = Vec::new();
    for c in 0..kernel.dim() {
        let x = kernel.basis().col(c);
        // cycle condition: the signed sum of the pushed representatives
        // vanishes at beta
        let mut vsum = vec![0u64; d.object(beta).dim_at(k)];
        let mut chains = vec![0u64; d.object(beta).dim_at(k + 1)];
        for (i, &m) in ordered.iter().enumerate() {
            let e = mediators
                .iter()
                .find(|(mm, _)| *mm == m)
                .map(|(_, mat)| mat.clone())
                .unwrap();
            let cls = e.mul_vec(&x);
            let w = d.object(m).homology(k).cycle_reps.mul_vec(&cls);
            let positive = i % 2 == 0;
            let pushed_beta = d.map_between(m, beta).f_at(k).mul_vec(&w);
            for (r, &v) in pushed_beta.iter().enumerate() {
                let adj = if positive {
                    v
                } else {
                    (field.p() - v % field.p()) % field.p()
                };
                vsum[r] = (vsum[r] + adj) % field.p();
            }
            // bound at the death site, push to beta
            let site = sites[i];
            let at_site = d.map_between(m, site).f_at(k).mul_vec(&w);
            let b = d
                .object(site)
                .d_at(k + 1)
                .solve(&at_site)
                .ok_or(Error::CoordinationFailure { root })?;
            let pushed = d.map_between(site, beta).f_at(k + 1).mul_vec(&b);
            for (r, &v) in pushed.iter().enumerate() {
                let adj = if positive {
                    v
                } else {
                    (field.p() - v % field.p()) % field.p()
                };
                chains[r] = (chains[r] + adj) % field.p();
            }
        }
        if vsum.iter().any(|&v| v != 0) {
            // the alternating boundary does not cancel: the composite value
            // is undefined for this family
            return Ok(None);
        }
        value_cols.push(hb.project.mul_vec(&chains));
    }
    let value = Matrix::from_cols(field, hb.dim, &value_cols);
    let mut indet = Subspace::zero(field, hb.dim);
    for (i, _) in ordered.iter().enumerate() {
        indet = indet.sum(
            &d.map_between(sites[i], beta)
                .induced_on_homology(k + 1)
                .image(),
        );
    }
    Ok(Some(FormalPathValue {
        root,
        mediators: ordered,
        beta,
        kernel_dim: kernel.dim(),
        value_rank_mod_indeterminacy: rank_mod(&value, &indet),
        value,
        indeterminacy_dim: indet.dim(),
        total_shift: k + 1 - root_degree,
    }))
}

/// Builds the `(k+1)`-hybrid state: covered base objects, formal kernel
/// tops, suspended pair objects and fan colimits, with exact chain-level
/// arrows throughout.
fn assemble_next_state(
    state: &HybridState,
    kept: &[(PathObject, derived::KernelFamily)],
) -> Result<HybridState, Error> {
    let field = state.field;
    let k = state.level;
    let d = &state.high;
    let index = d.index();
    // covered base diagram with the natural inclusions
    let (covered, iotas) = conn_cover_diagram(d, k + 1);
    let n_old = index.len();
    // new object table
    let mut labels: Vec<String> = index.labels().to_vec();
    let mut roles: Vec<Role> = state.roles.iter().map(|r| promote_role(r)).collect();
    let mut relations: Vec<(usize, usize)> = Vec::new();
    for a in 0..n_old {
        for b in 0..n_old {
            if index.lt(a, b) {
                relations.push((a, b));
            }
        }
    }
    let mut objects: Vec<ChainComplex> = covered.objects().to_vec();
    let mut low: Vec<GradedVS> = Vec::new();
    for (i, l) in state.low.iter().enumerate() {
        let mut dims = l.dims.clone();
        while dims.len() < k {
            dims.push(0);
        }
        dims.push(d.object(i).homology(k).dim);
        low.push(GradedVS { dims });
    }
    // carry the old formal edges and add the H_k-induced components
    let mut low_edges: Vec<LowEdge> = state.low_edges.clone();
    for a in 0..n_old {
        for b in 0..n_old {
            if !index.lt(a, b) {
                continue;
            }
            let m = d.map_between(a, b).induced_on_homology(k);
            if !m.is_zero() {
                low_edges.push(LowEdge {
                    src: a,
                    tgt: b,
                    shift: 0,
                    degree: k,
                    matrix: m,
                    kind: LowEdgeKind::Induced,
                });
            }
        }
    }
    // collect new arrows for the high diagram
    let mut new_arrows: BTreeMap<(usize, usize), ChainMap> = BTreeMap::new();
    for &(a, b) in covered.index().covers() {
        new_arrows.insert((a, b), covered.arrow(a, b).clone());
    }
    // formal colimit objects, deduped by fan
    let mut ic_ids: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut ic_colims: BTreeMap<usize, diagram::ColimitData> = BTreeMap::new();
    let mut ic_iotas: BTreeMap<usize, ChainMap> = BTreeMap::new();
    for (po, _) in kept {
        let key = (po.alpha, po.gamma.clone());
        if ic_ids.contains_key(&key) {
            continue;
        }
        // colimit over the downward closure of the fan (the Kan-extension
        // value): the high part is kept minimally cofibrant, so this
        // computes the homotopy colimit
        let fan = diagram::fan_closure(index, po.alpha, &po.gamma);
        let colim = colimit_over(d, &fan);
        let (ic_cover, ic_iota) = crate::chain::conn_cover(&colim.complex, k + 1);
        let ic_id = objects.len();
        labels.push(format!(
            "colim{}[{}]",
            k,
            fan.iter()
                .map(|&x| index.label(x))
                .collect::<Vec<_>>()
                .join(",")
        ));
        objects.push(ic_cover.clone());
        roles.push(Role::Colim {
            alpha: po.alpha,
            gamma: po.gamma.clone(),
        });
        low.push(GradedVS::zero());
        for &x in &fan {
            relations.push((x, ic_id));
            let leg = cover_restrict(&colim.cocone[&x], &iotas[x], &ic_iota, k + 1)?;
            let leg = ChainMap::new(objects[x].clone(), ic_cover.clone(), leg)
                .map_err(|e| Error::Diagram(e.to_string()))?;
            new_arrows.insert((x, ic_id), leg);
        }
        // colimit to every common upper bound of the fan
        let ubs: Vec<usize> = (0..n_old)
            .filter(|&u| po.gamma.iter().all(|&g| index.lt(g, u)))
            .collect();
        for &u in &ubs {
            relations.push((ic_id, u));
            let legs: BTreeMap<Obj, ChainMap> =
                fan.iter().map(|&x| (x, d.map_between(x, u))).collect();
            let to_u = colim
                .factor_cocone(d.object(u), &legs)
                .ok_or_else(|| Error::Diagram("fan does not map to its bound".into()))?;
            let comps = cover_restrict(&to_u, &ic_iota, &iotas[u], k + 1)?;
            let m = ChainMap::new(ic_cover.clone(), objects[u].clone(), comps)
                .map_err(|e| Error::Diagram(e.to_string()))?;
            new_arrows.insert((ic_id, u), m);
        }
        ic_colims.insert(ic_id, colim);
        ic_iotas.insert(ic_id, ic_iota);
        ic_ids.insert(key, ic_id);
    }
    // suspended pair objects, deduped by (alpha, pair); evaluation edges go
    // to the minimal joins of the pair (the joins of its own m = 2 path)
    let mut pair_ids: BTreeMap<(usize, (usize, usize)), usize> = BTreeMap::new();
    let mut pair_kernels: BTreeMap<usize, Subspace> = BTreeMap::new();
    for (po, _) in kept {
        for i in 0..po.gamma.len() {
            for j in i + 1..po.gamma.len() {
                let pr = (po.gamma[i], po.gamma[j]);
                let key = (po.alpha, pr);
                if pair_ids.contains_key(&key) {
                    continue;
                }
                // kernel of the pair (independent of the ambient path)
                let kg_a = d.map_between(po.alpha, pr.0).induced_on_homology(k).kernel();
                let kg_b = d.map_between(po.alpha, pr.1).induced_on_homology(k).kernel();
                let kernel = kg_a.intersect(&kg_b);
                let pair_id = objects.len();
                labels.push(format!(
                    "S{}[{};{},{}]",
                    k,
                    index.label(po.alpha),
                    index.label(pr.0),
                    index.label(pr.1)
                ));
                let mut dims = vec![0; k + 2];
                dims[k + 1] = kernel.dim();
                let diffs = (1..dims.len())
                    .map(|nn| Matrix::zeros(field, dims[nn - 1], dims[nn]))
                    .collect();
                let pair_cx = ChainComplex::new(field, dims, diffs)
                    .map_err(|e| Error::Diagram(e.to_string()))?;
                objects.push(pair_cx.clone());
                roles.push(Role::PairObj {
                    alpha: po.alpha,
                    pair: pr,
                    beta: po.beta.unwrap(),
                });
                low.push(GradedVS::zero());
                // evaluation edges into the minimal joins of the pair
                for beta in index.minimal_upper_bounds(&[pr.0, pr.1]) {
                    if !(index.lt(pr.0, beta) && index.lt(pr.1, beta)) {
                        continue;
                    }
                    let ev = eval_with_chains(d, po.alpha, pr, beta, k)?;
                    relations.push((pair_id, beta));
                    let zb = d.object(beta).cycles(k + 1);
                    let in_cover = zb
                        .coords_of_matrix(&ev.chains)
                        .expect("witness chains are cycles");
                    let mut comps = Vec::new();
                    for nn in 0..=k {
                        comps.push(Matrix::zeros(field, objects[beta].dim_at(nn), 0));
                    }
                    comps.push(in_cover);
                    let psi_map = ChainMap::new(pair_cx.clone(), objects[beta].clone(), comps)
                        .map_err(|e| Error::Diagram(e.to_string()))?;
                    new_arrows.insert((pair_id, beta), psi_map);
                }
                pair_kernels.insert(pair_id, kernel);
                pair_ids.insert(key, pair_id);
            }
        }
    }
    // sigma edges: each pair object includes into the colimit of its own
    // fan (gluing it into larger fans would force the inclusion-exclusion
    // relation through a non-monic latching; that coordination lives in the
    // level data instead)
    for ((alpha, gamma), &ic_id) in &ic_ids {
        if gamma.len() != 2 {
            continue;
        }
        let colim = &ic_colims[&ic_id];
        let ic_iota = &ic_iotas[&ic_id];
        let ic_cover = objects[ic_id].clone();
        for i in 0..gamma.len() {
            for j in i + 1..gamma.len() {
                let pr = (gamma[i], gamma[j]);
                let Some(&pair_id) = pair_ids.get(&(*alpha, pr)) else {
                    continue;
                };
                relations.push((pair_id, ic_id));
                let kernel = &pair_kernels[&pair_id];
                let sigma = pair_sigma_chains(d, colim, *alpha, pr, kernel, k)?;
                let zc = colim.complex.cycles(k + 1);
                let sigma_cover = zc
                    .coords_of_matrix(&sigma)
                    .expect("sigma chains are cycles");
                let _ = ic_iota;
                let mut comps = Vec::new();
                for nn in 0..=k {
                    comps.push(Matrix::zeros(field, ic_cover.dim_at(nn), 0));
                }
                comps.push(sigma_cover);
                let sigma_map =
                    ChainMap::new(objects[pair_id].clone(), ic_cover.clone(), comps)
                        .map_err(|e| Error::Diagram(e.to_string()))?;
                new_arrows.insert((pair_id, ic_id), sigma_map);
            }
        }
    }
    // kernel tops: formal objects, one per kept path
    for (po, fam) in kept {
        let beta = po.beta.unwrap();
        let kg = fam.kernel(&po.gamma).clone();
        let top_id = objects.len();
        labels.push(format!(
            "K{}[{};{};{}]",
            k,
            index.label(po.alpha),
            po.gamma
                .iter()
                .map(|&g| index.label(g))
                .collect::<Vec<_>>()
                .join(","),
            index.label(beta)
        ));
        objects.push(ChainComplex::zero(field));
        roles.push(Role::KernelTop {
            alpha: po.alpha,
            gamma: po.gamma.clone(),
            beta,
        });
        let mut top_low = vec![0; k + 1];
        top_low[k] = kg.dim();
        low.push(GradedVS { dims: top_low });
        relations.push((top_id, po.alpha));
        low_edges.push(LowEdge {
            src: top_id,
            tgt: po.alpha,
            shift: 0,
            degree: k,
            matrix: kg.basis().clone(),
            kind: LowEdgeKind::Inclusion,
        });
        for i in 0..po.gamma.len() {
            for j in i + 1..po.gamma.len() {
                let pr = (po.gamma[i], po.gamma[j]);
                let pair_id = pair_ids[&(po.alpha, pr)];
                let incl = pair_kernels[&pair_id]
                    .coords_of_matrix(kg.basis())
                    .expect("K_Γ lies in every pair kernel");
                low_edges.push(LowEdge {
                    src: top_id,
                    tgt: pair_id,
                    shift: 1,
                    degree: k,
                    matrix: incl,
                    kind: LowEdgeKind::FormalDiff,
                });
                relations.push((top_id, pair_id));
            }
        }
    }
    // assemble the index and fill zero arrows for covers involving formal
    // tops (their high parts vanish)
    let new_index = Poset::new(labels, &relations)?;
    let mut arrows = BTreeMap::new();
    for &(a, b) in new_index.covers() {
        if let Some(m) = new_arrows.remove(&(a, b)) {
            arrows.insert((a, b), m);
        } else {
            arrows.insert(
                (a, b),
                ChainMap::zero(objects[a].clone(), objects[b].clone()),
            );
        }
    }
    let high = Diagram::new(new_index, objects, arrows)?;
    let descent_maps: Vec<ChainMap> = state
        .base_ids
        .iter()
        .map(|&id| iotas[id].clone())
        .collect();
    let mut descent = state.descent.clone();
    descent.push(descent_maps);
    Ok(HybridState {
        level: k + 1,
        field,
        high,
        low,
        low_edges,
        roles,
        base_ids: state.base_ids.clone(),
        descent,
    })
}

fn promote_role(r: &Role) -> Role {
    match r {
        Role::Carried(i) => Role::Carried(*i),
        other => other.clone(),
    }
}

/// Restricts a chain map between complexes to their `(k)`-connected covers:
/// degree `k` factors through the cycles, higher degrees are unchanged.
fn cover_restrict(
    f: &ChainMap,
    iota_src: &ChainMap,
    iota_tgt: &ChainMap,
    k: usize,
) -> Result<Vec<Matrix>, Error> {
    let field = f.source().field();
    let len = iota_src.source().len().max(iota_tgt.source().len());
    let mut comps = Vec::new();
    for n in 0..len {
        if n < k {
            comps.push(Matrix::zeros(
                field,
                iota_tgt.source().dim_at(n),
                iota_src.source().dim_at(n),
            ));
        } else {
            // f restricted: tgt-cover coords of f(iota_src)
            let img = f.f_at(n).mul(&iota_src.f_at(n));
            let m = if n == k {
                // land in the cycle coordinates
                let tgt_basis = iota_tgt.f_at(k);
                tgt_basis
                    .solve_matrix(&img)
                    .ok_or_else(|| Error::Diagram("cover restriction not well defined".into()))?
            } else {
                img
            };
            comps.push(m);
        }
    }
    Ok(comps)
}

/// The canonical suspension cycles of a pair inside the fan colimit:
/// `cocone_g(b_g) - cocone_d(b_d)` per kernel basis vector.
fn pair_sigma_chains(
    d: &Diagram,
    colim: &diagram::ColimitData,
    alpha: Obj,
    pair: (Obj, Obj),
    kernel: &Subspace,
    k: usize,
) -> Result<Matrix, Error> {
    let field = d.field();
    let (g, del) = if d.index().label(pair.0) <= d.index().label(pair.1) {
        (pair.0, pair.1)
    } else {
        (pair.1, pair.0)
    };
    let ha = d.object(alpha).homology(k);
    let mut cols = Vec::new();
    for c in 0..kernel.dim() {
        let x = kernel.basis().col(c);
        let z = ha.cycle_reps.mul_vec(&x);
        let mut w = vec![0u64; colim.complex.dim_at(k + 1)];
        for (obj, positive) in [(g, true), (del, false)] {
            let v = d.map_between(alpha, obj).f_at(k).mul_vec(&z);
            let b = d
                .object(obj)
                .d_at(k + 1)
                .solve(&v)
                .ok_or_else(|| Error::Derived(format!("class does not die at {obj}")))?;
            let pushed = colim.cocone[&obj].f_at(k + 1).mul_vec(&b);
            for (r, &val) in pushed.iter().enumerate() {
                let adj = if positive {
                    val
                } else {
                    (field.p() - val % field.p()) % field.p()
                };
                w[r] = (w[r] + adj) % field.p();
            }
        }
        cols.push(w);
    }
    Ok(Matrix::from_cols(field, colim.complex.dim_at(k + 1), &cols))
}

/// The per-object, per-stage splitting record of the expansion: unique-path
/// kernels, incomparable-pair kernels, and the chain-level splittings of the
/// boundary picking them out.
#[derive(Debug, Clone)]
pub struct SplittingLedger {
    /// Per object of the base index: the unique-path kernel part `D̄` (the
    /// deterministic complement of the pair-kernel sum inside the full
    /// kernel toward the maxima) as a subspace of `H_k` of the root it came
    /// from, keyed `(root, object)`.
    pub d_parts: BTreeMap<(Obj, Obj), Subspace>,
    /// Per `(root, object)`: the incomparable-pair kernel sum `Ē`.
    pub e_parts: BTreeMap<(Obj, Obj), Subspace>,
    /// Chain-level bounding cells chosen for the `Ē`-classes, per
    /// `(root, object)`: columns in degree `k+1` of the object.
    pub sigma_cells: BTreeMap<(Obj, Obj), Matrix>,
    /// Chain-level bounding cells for the `D̄`-classes.
    pub rho_cells: BTreeMap<(Obj, Obj), Matrix>,
}

/// The expanded derived diagram: a minimally cofibrant realization of the
/// derived data over the stage-2 Ind-completion index, filtered by the
/// poset filtration, with the splitting ledger of the choices.
pub struct ExpandedDerived {
    pub index: poset::IndIndex2,
    pub diagram: Diagram,
    /// Per object: the filtration stage at which it is fully built (its
    /// poset filtration level).
    pub stages: Vec<usize>,
    pub ledger: SplittingLedger,
    /// Objectwise quasi-isomorphisms onto the truncated Ind-extension.
    pub etas: Vec<ChainMap>,
    /// The truncated Ind-extension itself (the comparison target).
    pub truncated: Diagram,
}

/// Builds the expanded derived diagram of a `k`-hybrid presentation: the
/// `(k+1)`-truncation of the stage-2 Ind-extension of the high part is
/// replaced by its minimal model, which realizes exactly the
/// spheres-plus-cones structure dictated by the kernel data.
pub fn expand(h: &HybridDiagram) -> Result<ExpandedDerived, Error> {
    let d = &h.high;
    let k = h.k;
    let ii = poset::ind2_index(d.index(), DEFAULT_MAX_GAMMA)?;
    let extended = diagram::extend_ind2(d, &ii)?;
    let (truncated, _) = diagram::truncate_diagram(&extended, k + 1);
    let (model, etas) = minimal_cofibrant_replace(&truncated)?;
    let info = poset::validate_lattice(&ii.poset);
    // ledger: per root and object, the unique-path and pair-kernel parts
    let mut d_parts = BTreeMap::new();
    let mut e_parts = BTreeMap::new();
    let mut sigma_cells = BTreeMap::new();
    let mut rho_cells = BTreeMap::new();
    let field = d.field();
    for root in 0..d.index().len() {
        let h_root = d.object(root).homology(k);
        if h_root.dim == 0 {
            continue;
        }
        let paths = poset::incomparable_families(d.index(), root, None, DEFAULT_MAX_GAMMA)?;
        // pair-kernel sum per object gamma above the root
        for gamma in d.index().strict_successors(root) {
            let kg = d.map_between(root, gamma).induced_on_homology(k).kernel();
            if kg.is_zero() {
                continue;
            }
            let mut e = Subspace::zero(field, h_root.dim);
            for po in &paths {
                if !po.gamma.contains(&gamma) {
                    continue;
                }
                for &other in &po.gamma {
                    if other == gamma {
                        continue;
                    }
                    let ko = d.map_between(root, other).induced_on_homology(k).kernel();
                    e = e.sum(&kg.intersect(&ko));
                }
            }
            let e = e.intersect(&kg);
            let dd = e.complement_within(&kg).expect("E lies inside the kernel");
            // chain-level splittings: canonical bounding cells at gamma
            let bound = |space: &Subspace| -> Matrix {
                let mut cols = Vec::new();
                for c in 0..space.dim() {
                    let z = h_root.cycle_reps.mul_vec(&space.basis().col(c));
                    let v = d.map_between(root, gamma).f_at(k).mul_vec(&z);
                    let b = d
                        .object(gamma)
                        .d_at(k + 1)
                        .solve(&v)
                        .expect("kernel classes bound at their cone");
                    cols.push(b);
                }
                Matrix::from_cols(field, d.object(gamma).dim_at(k + 1), &cols)
            };
            sigma_cells.insert((root, gamma), bound(&e));
            rho_cells.insert((root, gamma), bound(&dd));
            d_parts.insert((root, gamma), dd);
            e_parts.insert((root, gamma), e);
        }
    }
    // stage splittings verified: D ∩ E = 0 per key
    for (key, dd) in &d_parts {
        let e = &e_parts[key];
        if !dd.intersect(e).is_zero() {
            return Err(Error::Certification(format!(
                "splitting ledger overlaps at {key:?}"
            )));
        }
    }
    minimal_cofibrant_check(&model)?;
    Ok(ExpandedDerived {
        index: ii,
        stages: info.filtration,
        diagram: model,
        ledger: SplittingLedger {
            d_parts,
            e_parts,
            sigma_cells,
            rho_cells,
        },
        etas,
        truncated,
    })
}

/// The reconstruction report: objectwise maps between the truncated
/// Ind-extension and the expansion, with the homology comparison.
pub struct Reconstruction {
    /// Per object of the Ind index: quasi-iso from the expansion into the
    /// truncation (the weak inverse direction).
    pub phi: Vec<ChainMap>,
    /// Section candidates `Omega` where the truncation includes back.
    pub omega: Vec<Option<ChainMap>>,
    pub h_isos: bool,
    pub natural: bool,
}

/// Reconstructs the truncation of a hybrid from its expansion: the
/// expansion's structure maps are quasi-isomorphisms onto the truncated
/// Ind-extension objectwise; the report certifies the homology isomorphisms
/// through degree `k+1` and the naturality of the comparison.
pub fn reconstruct(h: &HybridDiagram, e: &ExpandedDerived) -> Result<Reconstruction, Error> {
    let k = h.k;
    let mut h_isos = true;
    let mut natural = true;
    // phi: the stored minimal-model quasi-isos
    let phi = e.etas.clone();
    let mut omega = Vec::new();
    for (i, f) in phi.iter().enumerate() {
        for deg in 0..=(k + 1) {
            let m = f.induced_on_homology(deg);
            if m.rows() != m.cols() || m.rank() != m.rows() {
                h_isos = false;
            }
        }
        // a section on homology always exists over a field; chain-level we
        // record the inclusion of cycles realizing it where the model's
        // cells inject, and leave it absent otherwise
        let src = f.source();
        let tgt = f.target();
        let mut comps = Vec::new();
        let mut ok = true;
        for deg in 0..src.len().max(tgt.len()) {
            let fm = f.f_at(deg);
            match fm.solve_matrix(&Matrix::identity(e.diagram.field(), tgt.dim_at(deg))) {
                Some(sec) => comps.push(sec),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            omega.push(ChainMap::new(tgt.clone(), src.clone(), comps).ok());
        } else {
            omega.push(None);
        }
        let _ = i;
    }
    // naturality: the phis commute with the diagram arrows
    for &(a, b) in e.diagram.index().covers() {
        let lhs = e.truncated.arrow(a, b).compose(&phi[a]);
        let rhs = phi[b].compose(e.diagram.arrow(a, b));
        if lhs != rhs {
            natural = false;
        }
    }
    Ok(Reconstruction {
        phi,
        omega,
        h_isos,
        natural,
    })
}

/// The hybrid approximation of a `k`-hybrid presentation: one step of the
/// tower, packaged with the level's secondary data.
pub struct HybridApprox {
    pub state: HybridState,
    pub data: LevelData,
}

pub fn hybrid_approx(y: &HybridDiagram) -> Result<HybridApprox, Error> {
    let n = y.high.index().len();
    let state = HybridState {
        level: y.k,
        field: y.high.field(),
        high: y.high.clone(),
        low: y.low.objects.clone(),
        low_edges: vec![],
        roles: (0..n).map(Role::Carried).collect(),
        base_ids: (0..n).collect(),
        descent: vec![],
    };
    let (data, next) = step(&state)?;
    Ok(HybridApprox { state: next, data })
}

/// The full tower: iterates the hybridization step from a (minimally
/// cofibrant replacement of a) diagram.
pub struct Tower {
    pub levels: Vec<LevelData>,
    pub state: HybridState,
    /// Quasi-isos from the initial minimal model to the input.
    pub init_etas: Vec<ChainMap>,
    /// The initial minimal model.
    pub initial: Diagram,
}

pub fn hybridize(x: &Diagram, k: usize) -> Result<Tower, Error> {
    let (mut state, etas) = init_state(x)?;
    let initial = state.high.clone();
    let mut levels = Vec::new();
    for _ in 0..k {
        let (data, next) = step(&state)?;
        levels.push(data);
        state = next;
    }
    Ok(Tower {
        levels,
        state,
        init_etas: etas,
        initial,
    })
}

/// The level-`k` derived data of a diagram: the global derived diagram of
/// the `(k-1)`-th hybrid state (per the inductive definition), plus the
/// coordinated formal-root values beyond the pairwise data.
pub struct DerivedLevel {
    pub global: GlobalDerived,
    pub data: LevelData,
}

pub fn derived_k(x: &Diagram, k: usize) -> Result<DerivedLevel, Error> {
    assert!(k >= 1, "the derived tower starts at level 1");
    let tower = hybridize(x, k - 1)?;
    let state = &tower.state;
    // present the state as a hybrid diagram for the derived machinery
    let h = state_as_hybrid(state);
    let global = derived::global_derived(&h)?;
    let (data, _) = step(state)?;
    Ok(DerivedLevel { global, data })
}

fn state_as_hybrid(state: &HybridState) -> HybridDiagram {
    let field = state.field;
    let index = state.high.index().clone();
    let mut arrows = BTreeMap::new();
    for a in 0..index.len() {
        for b in 0..index.len() {
            if !index.lt(a, b) {
                continue;
            }
            let mut g = crate::chain::GradedMap::zero(state.low[a].clone(), state.low[b].clone());
            for e in &state.low_edges {
                if e.src == a && e.tgt == b && e.degree + e.shift < state.level {
                    let existing = g.component(e.shift, e.degree, field);
                    if existing.rows() == e.matrix.rows() && existing.cols() == e.matrix.cols() {
                        g.set_component(e.shift, e.degree, existing.add(&e.matrix));
                    }
                }
            }
            arrows.insert((a, b), g);
        }
    }
    HybridDiagram {
        index: index.clone(),
        k: state.level,
        low: diagram::GradedDiagram {
            index: index.clone(),
            field,
            objects: state.low.clone(),
            arrows,
        },
        high: state.high.clone(),
        seam: vec![],
    }
}

/// The Theorem-A style certificate: per level and per original object, the
/// zig-zag of homology isomorphisms connecting the tower back to the
/// truncation of the input.
#[derive(Debug)]
pub struct TheoremAReport {
    pub levels: usize,
    /// Per original object and degree `i <= k`: the composite zig-zag map on
    /// homology is an isomorphism.
    pub h_isos: bool,
    /// The zig-zag commutes with the arrows of the original index.
    pub natural: bool,
    /// Per-level formal prefixes agree with the homology of the input.
    pub prefixes_match: bool,
    pub details: Vec<String>,
}

impl TheoremAReport {
    pub fn certified(&self) -> bool {
        self.h_isos && self.natural && self.prefixes_match
    }
}

/// Runs the tower through level `k` and certifies that the result, restricted
/// to the original index, recovers the `k`-truncation of the input up to a
/// zig-zag of objectwise homology isomorphisms.
pub fn verify_theorem_a(x: &Diagram, k: usize) -> Result<TheoremAReport, Error> {
    let tower = hybridize(x, k)?;
    let state = &tower.state;
    let hx = homology_diagram(x);
    let mut details = Vec::new();
    let mut h_isos = true;
    let mut natural = true;
    let mut prefixes_match = true;
    // formal prefixes carry exactly the homology of the input below level k
    for (orig, &id) in state.base_ids.iter().enumerate() {
        for i in 0..k {
            let want = hx.objects[orig].dim_at(i);
            let got = state.low[id].dim_at(i);
            if want != got {
                prefixes_match = false;
                details.push(format!(
                    "prefix mismatch at object {orig} degree {i}: {got} vs {want}"
                ));
            }
        }
    }
    // zig-zag: X <-eta- initial model <-descents- level covers; on homology
    // in degrees i <= k each leg is an isomorphism in its range
    for (orig, &id) in state.base_ids.iter().enumerate() {
        // the descent chain ends at the level-k cover of the initial model
        for i in 0..=k {
            // eta leg: initial model -> X
            let m0 = tower.init_etas[orig].induced_on_homology(i);
            if m0.rows() != m0.cols() || m0.rank() != m0.rows() {
                h_isos = false;
                details.push(format!("eta not iso at object {orig} degree {i}"));
            }
        }
        // descent legs: level-(l+1) cover -> level-l high, iso on H_i for
        // i >= l+1
        for (l, maps) in state.descent.iter().enumerate() {
            for i in (l + 1)..=k.max(l + 1) {
                if i > k + 1 {
                    continue;
                }
                let m = maps[orig].induced_on_homology(i);
                if m.rows() != m.cols() || m.rank() != m.rows() {
                    h_isos = false;
                    details.push(format!(
                        "descent level {l} not iso at object {orig} degree {i}"
                    ));
                }
            }
        }
        let _ = id;
    }
    // naturality of each zig-zag leg over the original index
    for &(a, b) in x.index().covers() {
        // eta leg
        let lhs = x.arrow(a, b).compose(&tower.init_etas[a]);
        let rhs = tower.init_etas[b].compose(&tower.initial.arrow(a, b));
        if lhs != rhs {
            natural = false;
            details.push(format!("eta leg not natural on cover ({a},{b})"));
        }
    }
    // descent legs are natural by construction (cover inclusions); verify on
    // the stored maps against consecutive highs is implicit in their
    // construction through `conn_cover_diagram`, which validates arrows.
    Ok(TheoremAReport {
        levels: k,
        h_isos,
        natural,
        prefixes_match,
        details,
    })
}
