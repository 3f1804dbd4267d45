//! Finite indexing posets: validation, filtration, incomparable families,
//! path objects `(alpha, Gamma, beta)`, the derived index and the stage-2
//! Ind-completion index.
//!
//! Objects are identified by dense indices into a label table. The order
//! relation is stored as a closed boolean matrix; Hasse covers are derived.

use std::collections::BTreeSet;
use std::fmt;

/// Object id within a poset.
pub type Obj = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Antisymmetry failed for the two objects.
    NotAPartialOrder(Obj, Obj),
    /// A relation referenced an object out of range.
    UnknownObject(usize),
    /// An incomparable family exceeded the configured cap on `|Gamma|`.
    GammaCapExceeded { alpha: Obj, size: usize },
    /// Duplicate label in the object table.
    DuplicateLabel(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotAPartialOrder(a, b) => {
                write!(f, "relation is not antisymmetric between #{a} and #{b}")
            }
            Error::UnknownObject(i) => write!(f, "object index {i} out of range"),
            Error::GammaCapExceeded { alpha, size } => write!(
                f,
                "incomparable family of size {size} at object #{alpha} exceeds the max-gamma cap"
            ),
            Error::DuplicateLabel(l) => write!(f, "duplicate object label {l:?}"),
        }
    }
}

impl std::error::Error for Error {}

/// A finite poset with labeled objects.
#[derive(Clone, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    /// `leq[a * n + b]` iff `a <= b`; reflexive-transitively closed.
    leq: Vec<bool>,
    covers: Vec<(Obj, Obj)>,
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poset({} objects, covers {:?})", self.len(), self.covers)
    }
}

impl Poset {
    /// Builds a poset from generating relations `(a, b)` meaning `a < b`.
    /// The reflexive-transitive closure is taken; antisymmetry is checked.
    pub fn new(labels: Vec<String>, relations: &[(Obj, Obj)]) -> Result<Self, Error> {
        let n = labels.len();
        {
            let mut seen = BTreeSet::new();
            for l in &labels {
                if !seen.insert(l.clone()) {
                    return Err(Error::DuplicateLabel(l.clone()));
                }
            }
        }
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for &(a, b) in relations {
            if a >= n || b >= n {
                return Err(Error::UnknownObject(a.max(b)));
            }
            leq[a * n + b] = true;
        }
        // Floyd-Warshall style closure
        for k in 0..n {
            for a in 0..n {
                if leq[a * n + k] {
                    for b in 0..n {
                        if leq[k * n + b] {
                            leq[a * n + b] = true;
                        }
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && leq[a * n + b] && leq[b * n + a] {
                    return Err(Error::NotAPartialOrder(a, b));
                }
            }
        }
        let mut covers = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && leq[a * n + b] {
                    let direct = !(0..n).any(|c| {
                        c != a && c != b && leq[a * n + c] && leq[c * n + b]
                    });
                    if direct {
                        covers.push((a, b));
                    }
                }
            }
        }
        Ok(Poset { labels, leq, covers })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: Obj) -> &str {
        &self.labels[a]
    }

    pub fn index_of(&self, label: &str) -> Option<Obj> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn leq(&self, a: Obj, b: Obj) -> bool {
        self.leq[a * self.len() + b]
    }

    #[inline]
    pub fn lt(&self, a: Obj, b: Obj) -> bool {
        a != b && self.leq(a, b)
    }

    pub fn incomparable(&self, a: Obj, b: Obj) -> bool {
        !self.leq(a, b) && !self.leq(b, a)
    }

    /// Hasse edges `(a, b)` with `a < b` and nothing in between.
    pub fn covers(&self) -> &[(Obj, Obj)] {
        &self.covers
    }

    pub fn covers_of(&self, a: Obj) -> Vec<Obj> {
        self.covers
            .iter()
            .filter(|&&(x, _)| x == a)
            .map(|&(_, y)| y)
            .collect()
    }

    pub fn covered_by(&self, b: Obj) -> Vec<Obj> {
        self.covers
            .iter()
            .filter(|&&(_, y)| y == b)
            .map(|&(x, _)| x)
            .collect()
    }

    pub fn strict_successors(&self, a: Obj) -> Vec<Obj> {
        (0..self.len()).filter(|&b| self.lt(a, b)).collect()
    }

    pub fn strict_predecessors(&self, b: Obj) -> Vec<Obj> {
        (0..self.len()).filter(|&a| self.lt(a, b)).collect()
    }

    pub fn minima(&self) -> Vec<Obj> {
        (0..self.len())
            .filter(|&a| !(0..self.len()).any(|x| self.lt(x, a)))
            .collect()
    }

    pub fn maxima(&self) -> Vec<Obj> {
        (0..self.len())
            .filter(|&a| !(0..self.len()).any(|x| self.lt(a, x)))
            .collect()
    }

    pub fn is_antichain(&self, set: &[Obj]) -> bool {
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                if !self.incomparable(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Common upper bounds of a nonempty set.
    pub fn upper_bounds(&self, set: &[Obj]) -> Vec<Obj> {
        (0..self.len())
            .filter(|&u| set.iter().all(|&s| self.leq(s, u)))
            .collect()
    }

    /// Minimal common upper bounds.
    pub fn minimal_upper_bounds(&self, set: &[Obj]) -> Vec<Obj> {
        let ub = self.upper_bounds(set);
        ub.iter()
            .copied()
            .filter(|&u| !ub.iter().any(|&v| v != u && self.leq(v, u)))
            .collect()
    }

    /// A deterministic Hasse path `a = x_0 < x_1 < ... < x_k = b`
    /// (smallest-index covers first); `None` when `a ≰ b`.
    pub fn hasse_path(&self, a: Obj, b: Obj) -> Option<Vec<Obj>> {
        if !self.leq(a, b) {
            return None;
        }
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let next = self
                .covers_of(cur)
                .into_iter()
                .find(|&c| self.leq(c, b))
                .expect("cover toward b exists while cur < b");
            path.push(next);
            cur = next;
        }
        Some(path)
    }
}

/// Result of [`validate_lattice`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeInfo {
    pub minima: Vec<Obj>,
    pub maxima: Vec<Obj>,
    /// Length of the longest Hasse chain from a minimum to each object.
    pub filtration: Vec<usize>,
}

/// Minima, maxima and the distance filtration of a finite poset.
pub fn validate_lattice(p: &Poset) -> LatticeInfo {
    let n = p.len();
    let minima = p.minima();
    let maxima = p.maxima();
    let mut filtration = vec![0usize; n];
    // process objects in topological order by number of strict predecessors
    let mut order: Vec<Obj> = (0..n).collect();
    order.sort_by_key(|&a| p.strict_predecessors(a).len());
    for &b in &order {
        let preds = p.covered_by(b);
        if !preds.is_empty() {
            filtration[b] = preds.iter().map(|&a| filtration[a] + 1).max().unwrap();
        }
    }
    LatticeInfo {
        minima,
        maxima,
        filtration,
    }
}

/// A factorization `(alpha, Gamma, beta)`: at least two pairwise
/// incomparable objects strictly above `alpha`, optionally below a common
/// join `beta`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathObject {
    pub alpha: Obj,
    /// Sorted, pairwise incomparable, each `> alpha`.
    pub gamma: Vec<Obj>,
    /// A common join of `gamma` (always present for emitted path objects;
    /// `None` models the beta-less systems of the forgetful functor).
    pub beta: Option<Obj>,
}

impl PathObject {
    pub fn new(p: &Poset, alpha: Obj, gamma: Vec<Obj>, beta: Option<Obj>) -> PathObject {
        let mut g = gamma;
        g.sort_unstable();
        debug_assert!(g.len() >= 2, "gamma needs at least two members");
        debug_assert!(g.iter().all(|&x| p.lt(alpha, x)), "gamma above alpha");
        debug_assert!(p.is_antichain(&g), "gamma must be an antichain");
        if let Some(b) = beta {
            debug_assert!(g.iter().all(|&x| p.lt(x, b)), "beta joins gamma");
        }
        PathObject {
            alpha,
            gamma: g,
            beta,
        }
    }
}

/// Default cap on `|Gamma|`.
pub const DEFAULT_MAX_GAMMA: usize = 4;

/// Enumerates path objects rooted at `alpha`.
///
/// Families are antichains among the covers of `alpha` (the deeper kernels
/// are reached through path morphisms). With `beta` given, families are
/// restricted strictly below it and emitted with that join; otherwise one
/// path object is emitted per minimal common upper bound, and families with
/// no common upper bound are skipped. Output is lexicographically ordered
/// and deterministic. Families larger than `max_gamma` are a hard error.
pub fn incomparable_families(
    p: &Poset,
    alpha: Obj,
    beta: Option<Obj>,
    max_gamma: usize,
) -> Result<Vec<PathObject>, Error> {
    let mut candidates: Vec<Obj> = p
        .covers_of(alpha)
        .into_iter()
        .filter(|&g| match beta {
            Some(b) => p.lt(g, b),
            None => true,
        })
        .collect();
    candidates.sort_unstable();
    let mut out = Vec::new();
    let mut stack: Vec<Obj> = Vec::new();
    fn extend(
        p: &Poset,
        alpha: Obj,
        beta: Option<Obj>,
        max_gamma: usize,
        candidates: &[Obj],
        from: usize,
        stack: &mut Vec<Obj>,
        out: &mut Vec<PathObject>,
    ) -> Result<(), Error> {
        if stack.len() >= 2 {
            if stack.len() > max_gamma {
                return Err(Error::GammaCapExceeded {
                    alpha,
                    size: stack.len(),
                });
            }
            match beta {
                Some(b) => out.push(PathObject::new(p, alpha, stack.clone(), Some(b))),
                None => {
                    for join in p.minimal_upper_bounds(stack) {
                        if stack.iter().all(|&g| p.lt(g, join)) {
                            out.push(PathObject::new(p, alpha, stack.clone(), Some(join)));
                        }
                    }
                }
            }
        }
        for (i, &c) in candidates.iter().enumerate().skip(from) {
            if stack.iter().all(|&s| p.incomparable(s, c)) {
                stack.push(c);
                extend(p, alpha, beta, max_gamma, candidates, i + 1, stack, out)?;
                stack.pop();
            }
        }
        Ok(())
    }
    extend(p, alpha, beta, max_gamma, &candidates, 0, &mut stack, &mut out)?;
    out.sort();
    Ok(out)
}

/// All path objects of a poset, over every root, deterministic order.
pub fn all_path_objects(p: &Poset, max_gamma: usize) -> Result<Vec<PathObject>, Error> {
    let mut out = Vec::new();
    for alpha in 0..p.len() {
        out.extend(incomparable_families(p, alpha, None, max_gamma)?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Witness for a morphism of path objects `(alpha, Gamma', beta') ->
/// (alpha, Gamma, beta)`: for each member of `Gamma'` the least dominating
/// member of `Gamma`. Requires the same root, `beta' <= beta` when both are
/// present, and every member of `Gamma` to dominate some member of `Gamma'`.
pub fn path_morphism(p: &Poset, from: &PathObject, to: &PathObject) -> Option<Vec<usize>> {
    if from.alpha != to.alpha {
        return None;
    }
    if let (Some(b1), Some(b2)) = (from.beta, to.beta) {
        if !p.leq(b1, b2) {
            return None;
        }
    }
    let mut assignment = Vec::with_capacity(from.gamma.len());
    for &g1 in &from.gamma {
        let i = to.gamma.iter().position(|&g2| p.leq(g1, g2))?;
        assignment.push(i);
    }
    // the matching must cover the target family for kernels to include
    for i in 0..to.gamma.len() {
        if !from.gamma.iter().any(|&g1| p.leq(g1, to.gamma[i])) {
            return None;
        }
    }
    Some(assignment)
}

/// One object of the derived index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivedObj {
    Base(Obj),
    /// Formal kernel object `K^alpha_{subset}` bound for `beta`.
    Kernel {
        alpha: Obj,
        subset: Vec<Obj>,
        beta: Obj,
    },
    /// Formal pullback of `(j_alpha, theta: source -> alpha)` for the full
    /// kernel object of a path rooted at `alpha`.
    Pullback {
        alpha: Obj,
        subset: Vec<Obj>,
        beta: Obj,
        source: Obj,
    },
}

/// The kind of a generating edge of the derived index.
///
/// The evaluation edges are genuinely distinct morphisms from the
/// `j`-composites (they carry the degree `+1` values), so the index keeps an
/// explicit edge list; the reachability closure is still a poset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivedEdgeKind {
    /// Hasse cover of the base poset.
    BaseCover,
    /// Inclusion-exclusion chain edge between kernel objects of one family.
    Chain,
    /// `j_alpha`: kernel object into its root.
    J,
    /// Evaluation edge of a pair object into its join.
    Psi,
    /// Structure edge for a path morphism between pair objects.
    StructC,
    /// Pullback projection to the `theta` source.
    PullbackSource,
    /// Pullback projection to the kernel object.
    PullbackKernel,
}

/// The derived category of a poset: base objects, kernel objects for every
/// path object and subset of its family, and one layer of formal pullbacks.
#[derive(Debug, Clone)]
pub struct DerivedIndex {
    pub base: Poset,
    pub paths: Vec<PathObject>,
    pub objects: Vec<DerivedObj>,
    /// Generating edges with their kinds.
    pub edges: Vec<(usize, usize, DerivedEdgeKind)>,
    /// The reachability closure, as a validated poset over `objects`.
    pub poset: Poset,
}

impl DerivedIndex {
    pub fn object_id(&self, o: &DerivedObj) -> Option<usize> {
        self.objects.iter().position(|x| x == o)
    }

    pub fn base_id(&self, a: Obj) -> usize {
        self.object_id(&DerivedObj::Base(a)).expect("base object present")
    }
}

fn subset_label(base: &Poset, s: &[Obj]) -> String {
    s.iter()
        .map(|&g| base.label(g))
        .collect::<Vec<_>>()
        .join(",")
}

/// Builds the derived index `J_D` of a poset.
pub fn derived_index(base: &Poset, max_gamma: usize) -> Result<DerivedIndex, Error> {
    let paths = all_path_objects(base, max_gamma)?;
    // kernel objects: subset closure of the path families, keyed
    // (alpha, subset, beta)
    let mut kernel_keys: BTreeSet<(Obj, Vec<Obj>, Obj)> = BTreeSet::new();
    for po in &paths {
        let beta = po.beta.expect("emitted paths carry a join");
        let m = po.gamma.len();
        for mask in 1u32..(1 << m) {
            if mask.count_ones() < 2 {
                continue;
            }
            let subset: Vec<Obj> = (0..m)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| po.gamma[i])
                .collect();
            kernel_keys.insert((po.alpha, subset, beta));
        }
    }
    let mut objects: Vec<DerivedObj> = (0..base.len()).map(DerivedObj::Base).collect();
    let mut labels: Vec<String> = base.labels().to_vec();
    for (alpha, subset, beta) in &kernel_keys {
        labels.push(format!(
            "K[{};{};{}]",
            base.label(*alpha),
            subset_label(base, subset),
            base.label(*beta)
        ));
        objects.push(DerivedObj::Kernel {
            alpha: *alpha,
            subset: subset.clone(),
            beta: *beta,
        });
    }
    // pullbacks: one layer, for covers theta: source -> alpha and full
    // kernel objects of paths rooted at alpha
    let mut pullbacks: BTreeSet<(Obj, Vec<Obj>, Obj, Obj)> = BTreeSet::new();
    for po in &paths {
        let beta = po.beta.unwrap();
        for source in base.covered_by(po.alpha) {
            pullbacks.insert((po.alpha, po.gamma.clone(), beta, source));
        }
    }
    for (alpha, subset, beta, source) in &pullbacks {
        labels.push(format!(
            "P[{};{};{};{}]",
            base.label(*alpha),
            subset_label(base, subset),
            base.label(*beta),
            base.label(*source)
        ));
        objects.push(DerivedObj::Pullback {
            alpha: *alpha,
            subset: subset.clone(),
            beta: *beta,
            source: *source,
        });
    }
    let id_of = |o: &DerivedObj| objects.iter().position(|x| x == o).unwrap();
    let mut edges: Vec<(usize, usize, DerivedEdgeKind)> = base
        .covers()
        .iter()
        .map(|&(a, b)| {
            (
                id_of(&DerivedObj::Base(a)),
                id_of(&DerivedObj::Base(b)),
                DerivedEdgeKind::BaseCover,
            )
        })
        .collect();
    for (alpha, subset, beta) in &kernel_keys {
        let me = id_of(&DerivedObj::Kernel {
            alpha: *alpha,
            subset: subset.clone(),
            beta: *beta,
        });
        edges.push((me, id_of(&DerivedObj::Base(*alpha)), DerivedEdgeKind::J));
        if subset.len() == 2 {
            edges.push((me, id_of(&DerivedObj::Base(*beta)), DerivedEdgeKind::Psi));
        } else {
            for drop in 0..subset.len() {
                let smaller: Vec<Obj> = subset
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &g)| g)
                    .collect();
                let tgt = DerivedObj::Kernel {
                    alpha: *alpha,
                    subset: smaller,
                    beta: *beta,
                };
                edges.push((me, id_of(&tgt), DerivedEdgeKind::Chain));
            }
        }
    }
    // structure edges for path morphisms, between pair objects
    let pairs: Vec<&(Obj, Vec<Obj>, Obj)> =
        kernel_keys.iter().filter(|(_, s, _)| s.len() == 2).collect();
    for &k1 in &pairs {
        for &k2 in &pairs {
            if k1 == k2 || k1.0 != k2.0 {
                continue;
            }
            let (alpha, s1, b1) = k1;
            let (_, s2, b2) = k2;
            if !base.leq(*b1, *b2) {
                continue;
            }
            let dominated = s1.iter().all(|&g1| s2.iter().any(|&g2| base.leq(g1, g2)))
                && s2.iter().all(|&g2| s1.iter().any(|&g1| base.leq(g1, g2)));
            if dominated {
                let o1 = DerivedObj::Kernel {
                    alpha: *alpha,
                    subset: s1.clone(),
                    beta: *b1,
                };
                let o2 = DerivedObj::Kernel {
                    alpha: *alpha,
                    subset: s2.clone(),
                    beta: *b2,
                };
                edges.push((id_of(&o1), id_of(&o2), DerivedEdgeKind::StructC));
            }
        }
    }
    for (alpha, subset, beta, source) in &pullbacks {
        let me = id_of(&DerivedObj::Pullback {
            alpha: *alpha,
            subset: subset.clone(),
            beta: *beta,
            source: *source,
        });
        edges.push((
            me,
            id_of(&DerivedObj::Base(*source)),
            DerivedEdgeKind::PullbackSource,
        ));
        edges.push((
            me,
            id_of(&DerivedObj::Kernel {
                alpha: *alpha,
                subset: subset.clone(),
                beta: *beta,
            }),
            DerivedEdgeKind::PullbackKernel,
        ));
    }
    let relations: Vec<(usize, usize)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
    let poset = Poset::new(labels, &relations)?;
    Ok(DerivedIndex {
        base: base.clone(),
        paths,
        objects,
        edges,
        poset,
    })
}

/// One object of the stage-2 Ind-completion index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ind2Obj {
    Base(Obj),
    /// Formal colimit of the fan `{alpha} ∪ gamma`.
    Colim { alpha: Obj, gamma: Vec<Obj> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ind2EdgeKind {
    BaseCover,
    /// Fan member into its formal colimit.
    FanLeg,
    /// Formal colimit into a common upper bound of its fan.
    ToUpperBound,
}

/// Stage-2 Ind-completion: one formal colimit object per fan occurring in a
/// path object, with structure maps from the fan and to every common upper
/// bound.
#[derive(Debug, Clone)]
pub struct IndIndex2 {
    pub base: Poset,
    pub fans: Vec<(Obj, Vec<Obj>)>,
    pub objects: Vec<Ind2Obj>,
    pub edges: Vec<(usize, usize, Ind2EdgeKind)>,
    pub poset: Poset,
}

impl IndIndex2 {
    pub fn object_id(&self, o: &Ind2Obj) -> Option<usize> {
        self.objects.iter().position(|x| x == o)
    }
}

pub fn ind2_index(base: &Poset, max_gamma: usize) -> Result<IndIndex2, Error> {
    let paths = all_path_objects(base, max_gamma)?;
    let mut fans: BTreeSet<(Obj, Vec<Obj>)> = BTreeSet::new();
    for po in &paths {
        fans.insert((po.alpha, po.gamma.clone()));
    }
    let fans: Vec<(Obj, Vec<Obj>)> = fans.into_iter().collect();
    let mut objects: Vec<Ind2Obj> = (0..base.len()).map(Ind2Obj::Base).collect();
    let mut labels: Vec<String> = base.labels().to_vec();
    for (alpha, gamma) in &fans {
        labels.push(format!(
            "colim[{};{}]",
            base.label(*alpha),
            subset_label(base, gamma)
        ));
        objects.push(Ind2Obj::Colim {
            alpha: *alpha,
            gamma: gamma.clone(),
        });
    }
    let id_of = |o: &Ind2Obj| objects.iter().position(|x| x == o).unwrap();
    let mut edges: Vec<(usize, usize, Ind2EdgeKind)> = base
        .covers()
        .iter()
        .map(|&(a, b)| {
            (
                id_of(&Ind2Obj::Base(a)),
                id_of(&Ind2Obj::Base(b)),
                Ind2EdgeKind::BaseCover,
            )
        })
        .collect();
    for (alpha, gamma) in &fans {
        let me = id_of(&Ind2Obj::Colim {
            alpha: *alpha,
            gamma: gamma.clone(),
        });
        edges.push((id_of(&Ind2Obj::Base(*alpha)), me, Ind2EdgeKind::FanLeg));
        for &g in gamma {
            edges.push((id_of(&Ind2Obj::Base(g)), me, Ind2EdgeKind::FanLeg));
        }
        for u in base.upper_bounds(gamma) {
            if gamma.iter().all(|&g| base.lt(g, u)) {
                edges.push((me, id_of(&Ind2Obj::Base(u)), Ind2EdgeKind::ToUpperBound));
            }
        }
    }
    let relations: Vec<(usize, usize)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
    let poset = Poset::new(labels, &relations)?;
    Ok(IndIndex2 {
        base: base.clone(),
        fans,
        objects,
        edges,
        poset,
    })
}

/// Builds the `n`-cube poset `I^n`: subsets of `{1..n}` ordered by reverse
/// inclusion (the full set is initial), labels like `110`.
pub fn cube_poset(n: usize) -> Poset {
    let size = 1usize << n;
    let label = |mask: usize| -> String {
        (0..n)
            .map(|i| if mask & (1 << i) != 0 { '1' } else { '0' })
            .collect()
    };
    let labels: Vec<String> = (0..size).map(|m| label(m)).collect();
    let mut relations = Vec::new();
    for m in 0..size {
        for i in 0..n {
            if m & (1 << i) != 0 {
                // drop one element: reverse inclusion makes this an arrow
                relations.push((m, m & !(1 << i)));
            }
        }
    }
    Poset::new(labels, &relations).expect("cube is a poset")
}

/// Chain poset `0 < 1 < ... < n-1`.
pub fn chain_poset(n: usize) -> Poset {
    let labels = (0..n).map(|i| format!("c{i}")).collect();
    let relations: Vec<(Obj, Obj)> = (1..n).map(|i| (i - 1, i)).collect();
    Poset::new(labels, &relations).expect("chain is a poset")
}

/// Fan poset: `alpha < gamma_1 .. gamma_m < beta`.
pub fn fan_poset(m: usize) -> Poset {
    let mut labels = vec!["a".to_string()];
    for i in 0..m {
        labels.push(format!("g{i}"));
    }
    labels.push("b".to_string());
    let mut relations = Vec::new();
    for i in 0..m {
        relations.push((0, 1 + i));
        relations.push((1 + i, m + 1));
    }
    Poset::new(labels, &relations).expect("fan is a poset")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Poset {
        Poset::new(
            vec!["00".into(), "01".into(), "10".into(), "11".into()],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap()
    }

    #[test]
    fn lattice_info_square() {
        let p = square();
        let info = validate_lattice(&p);
        assert_eq!(info.minima, vec![0]);
        assert_eq!(info.maxima, vec![3]);
        assert_eq!(info.filtration, vec![0, 1, 1, 2]);
    }

    #[test]
    fn lattice_info_chain_and_antichain() {
        let c = chain_poset(3);
        let info = validate_lattice(&c);
        assert_eq!(info.filtration, vec![0, 1, 2]);

        let a = Poset::new(vec!["a".into(), "b".into()], &[]).unwrap();
        let info = validate_lattice(&a);
        assert_eq!(info.minima, vec![0, 1]);
        assert_eq!(info.maxima, vec![0, 1]);
        assert_eq!(info.filtration, vec![0, 0]);
    }

    #[test]
    fn poset_rejects_cycles() {
        let err = Poset::new(
            vec!["a".into(), "b".into()],
            &[(0, 1), (1, 0)],
        );
        assert!(matches!(err, Err(Error::NotAPartialOrder(_, _))));
    }

    #[test]
    fn families_on_fan() {
        // Three incomparable middles over alpha with join beta
        let p = fan_poset(3);
        let fams = incomparable_families(&p, 0, None, DEFAULT_MAX_GAMMA).unwrap();
        // one triple and its three pairs, each with join beta
        assert_eq!(fams.len(), 4);
        assert!(fams.iter().all(|f| f.beta == Some(4)));
        assert_eq!(fams.iter().filter(|f| f.gamma.len() == 2).count(), 3);
        assert_eq!(fams.iter().filter(|f| f.gamma.len() == 3).count(), 1);
    }

    #[test]
    fn families_on_chain_empty() {
        let p = chain_poset(4);
        for a in 0..4 {
            assert!(incomparable_families(&p, a, None, 4).unwrap().is_empty());
        }
    }

    #[test]
    fn families_on_cube_match_bruteforce() {
        let p = cube_poset(3);
        let init = p.index_of("111").unwrap();
        let fams = incomparable_families(&p, init, None, 4).unwrap();
        // brute force: antichains of size >= 2 among the covers of 111
        // admitting a common upper bound
        let covers = p.covers_of(init);
        let mut expected = 0;
        for mask in 1u32..(1 << covers.len()) {
            if mask.count_ones() < 2 {
                continue;
            }
            let set: Vec<Obj> = (0..covers.len())
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| covers[i])
                .collect();
            if p.is_antichain(&set) {
                expected += p.minimal_upper_bounds(&set).len();
            }
        }
        assert_eq!(fams.len(), expected);
        // three facet pairs and the facet triple
        assert_eq!(fams.iter().filter(|f| f.gamma.len() == 2).count(), 3);
        assert_eq!(fams.iter().filter(|f| f.gamma.len() == 3).count(), 1);
        for f in &fams {
            assert!(p.is_antichain(&f.gamma));
        }
    }

    #[test]
    fn families_restricted_below_beta() {
        // with beta given, families are restricted strictly below it and
        // emitted with that join
        let p = cube_poset(3);
        let init = p.index_of("111").unwrap();
        let beta = p.index_of("100").unwrap();
        let fams = incomparable_families(&p, init, Some(beta), 4).unwrap();
        assert_eq!(fams.len(), 1);
        assert_eq!(fams[0].beta, Some(beta));
        assert_eq!(fams[0].gamma.len(), 2);
        for &g in &fams[0].gamma {
            assert!(p.lt(g, beta));
        }
    }

    #[test]
    fn gamma_cap_errors() {
        let p = fan_poset(5);
        let err = incomparable_families(&p, 0, None, 4);
        assert!(matches!(err, Err(Error::GammaCapExceeded { .. })));
    }

    #[test]
    fn path_morphism_cases() {
        let p = fan_poset(3);
        let fams = incomparable_families(&p, 0, None, 4).unwrap();
        let triple = fams.iter().find(|f| f.gamma.len() == 3).unwrap();
        let pair = fams.iter().find(|f| f.gamma.len() == 2).unwrap();
        // inclusion of a pair into the triple
        let w = path_morphism(&p, pair, triple);
        assert!(w.is_none(), "triple not dominated by a pair elementwise");
        // identity morphism
        assert!(path_morphism(&p, pair, pair).is_some());
        // disjoint incomparable pairs with no order relation: build a poset
        // with two separate diamonds over one root
        let q = Poset::new(
            vec![
                "a".into(),
                "g1".into(),
                "g2".into(),
                "h1".into(),
                "h2".into(),
                "b1".into(),
                "b2".into(),
            ],
            &[(0, 1), (0, 2), (1, 5), (2, 5), (0, 3), (0, 4), (3, 6), (4, 6)],
        )
        .unwrap();
        let po1 = PathObject::new(&q, 0, vec![1, 2], Some(5));
        let po2 = PathObject::new(&q, 0, vec![3, 4], Some(6));
        assert!(path_morphism(&q, &po1, &po2).is_none());
    }

    #[test]
    fn path_morphism_reflexive_transitive() {
        let p = cube_poset(3);
        let mut all = Vec::new();
        for a in 0..p.len() {
            all.extend(incomparable_families(&p, a, None, 4).unwrap());
        }
        for f in &all {
            assert!(path_morphism(&p, f, f).is_some(), "reflexive");
        }
        for f1 in &all {
            for f2 in &all {
                for f3 in &all {
                    if path_morphism(&p, f1, f2).is_some()
                        && path_morphism(&p, f2, f3).is_some()
                    {
                        assert!(
                            path_morphism(&p, f1, f3).is_some(),
                            "transitive: {f1:?} -> {f2:?} -> {f3:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn derived_index_square() {
        let p = square();
        let di = derived_index(&p, 4).unwrap();
        let kernels: Vec<_> = di
            .objects
            .iter()
            .filter(|o| matches!(o, DerivedObj::Kernel { .. }))
            .collect();
        assert_eq!(kernels.len(), 1, "square adds exactly one kernel object");
        let k = di
            .object_id(&DerivedObj::Kernel {
                alpha: 0,
                subset: vec![1, 2],
                beta: 3,
            })
            .unwrap();
        // edges to alpha and to beta
        assert!(di.poset.lt(k, di.base_id(0)));
        assert!(di.poset.lt(k, di.base_id(3)));
        // no pullbacks: alpha is initial
        assert!(!di
            .objects
            .iter()
            .any(|o| matches!(o, DerivedObj::Pullback { .. })));
    }

    #[test]
    fn derived_index_chain_is_base() {
        let p = chain_poset(4);
        let di = derived_index(&p, 4).unwrap();
        assert_eq!(di.objects.len(), 4);
        assert_eq!(di.poset.len(), 4);
    }

    #[test]
    fn derived_index_fan_links_chain() {
        let p = fan_poset(3);
        let di = derived_index(&p, 4).unwrap();
        let kernels: Vec<_> = di
            .objects
            .iter()
            .filter(|o| matches!(o, DerivedObj::Kernel { .. }))
            .collect();
        // the triple and its three pairs, deduped across paths
        assert_eq!(kernels.len(), 4);
        let triple = di
            .object_id(&DerivedObj::Kernel {
                alpha: 0,
                subset: vec![1, 2, 3],
                beta: 4,
            })
            .unwrap();
        for pair in [vec![1, 2], vec![1, 3], vec![2, 3]] {
            let pid = di
                .object_id(&DerivedObj::Kernel {
                    alpha: 0,
                    subset: pair,
                    beta: 4,
                })
                .unwrap();
            assert!(di.poset.lt(triple, pid), "chain edge triple -> pair");
            assert!(di.poset.lt(pid, di.base_id(4)), "pair -> join");
        }
        assert!(di.poset.lt(triple, di.base_id(0)), "j edge");
    }

    #[test]
    fn derived_and_ind2_outputs_are_posets_with_monotone_filtration() {
        for p in [square(), fan_poset(3), cube_poset(3), chain_poset(5)] {
            let di = derived_index(&p, 4).unwrap();
            let info = validate_lattice(&di.poset);
            for &(a, b) in di.poset.covers() {
                assert!(info.filtration[a] < info.filtration[b]);
            }
            let ii = ind2_index(&p, 4).unwrap();
            let info = validate_lattice(&ii.poset);
            for &(a, b) in ii.poset.covers() {
                assert!(info.filtration[a] < info.filtration[b]);
            }
        }
    }

    #[test]
    fn ind2_square_has_one_colimit() {
        let p = square();
        let ii = ind2_index(&p, 4).unwrap();
        assert_eq!(ii.fans.len(), 1);
        let c = ii
            .object_id(&Ind2Obj::Colim {
                alpha: 0,
                gamma: vec![1, 2],
            })
            .unwrap();
        // receives from the fan, maps to the join
        assert!(ii.poset.lt(ii.object_id(&Ind2Obj::Base(0)).unwrap(), c));
        assert!(ii.poset.lt(ii.object_id(&Ind2Obj::Base(1)).unwrap(), c));
        assert!(ii.poset.lt(c, ii.object_id(&Ind2Obj::Base(3)).unwrap()));
    }

    #[test]
    fn ind2_chain_adds_nothing() {
        let p = chain_poset(4);
        let ii = ind2_index(&p, 4).unwrap();
        assert_eq!(ii.poset.len(), 4);
    }

    #[test]
    fn hasse_path_is_deterministic() {
        let p = cube_poset(3);
        let a = p.index_of("111").unwrap();
        let b = p.index_of("000").unwrap();
        let path = p.hasse_path(a, b).unwrap();
        assert_eq!(path.len(), 4);
        assert_eq!(path[0], a);
        assert_eq!(path[3], b);
        let again = p.hasse_path(a, b).unwrap();
        assert_eq!(path, again);
    }
}
