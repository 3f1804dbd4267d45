//! Example generators: the cube diagrams `D^n_V`, the minimal tower `M_n`,
//! and randomized corpora for the property suites.

use std::collections::BTreeMap;

use crate::chain::{split_spheres_disks, ChainComplex, ChainMap};
use crate::diagram::{colimit_over, Diagram};
use crate::exactalg::{FieldSpec, Matrix};
use crate::poset::{self, Obj, Poset};
use crate::specseq::DoubleComplex;
use crate::util::DetRng;

/// Cells of the Koszul model at a cube vertex: one cell `V_S` per subset `S`
/// of the complement of the vertex, graded by `|S|`; the top cell is dropped
/// at the terminal vertex. Cells are ordered by ascending mask per degree.
fn koszul_cells(complement: usize, degree: usize, exclude_top_mask: Option<usize>) -> Vec<usize> {
    let mut cells = Vec::new();
    let mut sub = complement;
    // enumerate subsets of `complement` in ascending mask order
    loop {
        if (sub.count_ones() as usize) == degree && Some(sub) != exclude_top_mask {
            cells.push(sub);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & complement;
    }
    cells.sort_unstable();
    cells
}

fn koszul_sign(s: usize, set: usize) -> i64 {
    // (-1)^(position of s within the sorted set)
    let below = set & ((1usize << s) - 1);
    if below.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn koszul_complex(
    field: FieldSpec,
    dim_v: usize,
    complement: usize,
    exclude_top: bool,
) -> ChainComplex {
    let n_bits = complement.count_ones() as usize;
    let exclude = if exclude_top { Some(complement) } else { None };
    let top_degree = if exclude_top { n_bits.saturating_sub(1) } else { n_bits };
    let mut dims = Vec::new();
    let mut cells_by_degree = Vec::new();
    for j in 0..=top_degree {
        let cells = koszul_cells(complement, j, exclude);
        dims.push(cells.len() * dim_v);
        cells_by_degree.push(cells);
    }
    let mut diffs = Vec::new();
    for j in 1..=top_degree {
        let src = &cells_by_degree[j];
        let tgt = &cells_by_degree[j - 1];
        let mut m = Matrix::zeros(field, tgt.len() * dim_v, src.len() * dim_v);
        for (ci, &s_mask) in src.iter().enumerate() {
            for s in 0..64 {
                if s_mask & (1usize << s) == 0 {
                    continue;
                }
                let smaller = s_mask & !(1usize << s);
                let ti = tgt
                    .iter()
                    .position(|&t| t == smaller)
                    .expect("face cell present");
                let sign = koszul_sign(s, s_mask);
                let val = if sign > 0 { 1 } else { field.p() - 1 };
                for v in 0..dim_v {
                    m.set(ti * dim_v + v, ci * dim_v + v, val);
                }
            }
        }
        diffs.push(m);
    }
    ChainComplex::new(field, dims, diffs).expect("Koszul model is a complex")
}

/// The cube diagram `D^n_V` over `I^n`: `K(V, 0)` at the initial vertex,
/// iterated cones (Koszul models) in between, and the minimal model of
/// `K(V, n-1)` (the colimit of the rest) at the terminal vertex. Minimally
/// cofibrant away from the terminal vertex by construction.
pub fn gen_cube(field: FieldSpec, n: usize, dim_v: usize) -> Diagram {
    assert!(n >= 1, "cube dimension must be at least 1");
    let index = poset::cube_poset(n);
    let full = (1usize << n) - 1;
    // poset object ids are the masks themselves (cube_poset convention)
    let value = |mask: usize| -> ChainComplex {
        let complement = full & !mask;
        koszul_complex(field, dim_v, complement, mask == 0)
    };
    let objects: Vec<ChainComplex> = (0..(1usize << n)).map(value).collect();
    let mut arrows = BTreeMap::new();
    for &(a, b) in index.covers() {
        // vertex a has the larger mask; cells of a's complement embed into
        // b's complement cells by identity of masks
        let ca = full & !a;
        let cb = full & !b;
        let ea = if a == 0 { Some(ca) } else { None };
        let eb = if b == 0 { Some(cb) } else { None };
        let src = &objects[a];
        let tgt = &objects[b];
        let mut comps = Vec::new();
        for deg in 0..src.len() {
            let cells_a = koszul_cells(ca, deg, ea);
            let cells_b = koszul_cells(cb, deg, eb);
            let mut m = Matrix::zeros(field, tgt.dim_at(deg), src.dim_at(deg));
            for (ci, &s_mask) in cells_a.iter().enumerate() {
                if let Some(ti) = cells_b.iter().position(|&t| t == s_mask) {
                    for v in 0..dim_v {
                        m.set(ti * dim_v + v, ci * dim_v + v, 1);
                    }
                }
            }
            comps.push(m);
        }
        arrows.insert(
            (a, b),
            ChainMap::new(src.clone(), tgt.clone(), comps).expect("cell inclusion is a chain map"),
        );
    }
    Diagram::new(index, objects, arrows).expect("cube diagram is functorial")
}

/// The minimal model `L^k` of `K(V, k)`: `V` in degree 0 and two copies
/// `V(i) ⊕ V'(i)` in degrees `1..=k`, with `d(v, v') = z_{i-1}(v + v')`
/// where `z_i` is the cycle embedding `v -> (v, -v)`.
fn l_complex(field: FieldSpec, dim_v: usize, k: usize) -> ChainComplex {
    let mut dims = vec![dim_v];
    for _ in 1..=k {
        dims.push(2 * dim_v);
    }
    let mut diffs = Vec::new();
    for i in 1..=k {
        diffs.push(l_diff(field, dim_v, i));
    }
    ChainComplex::new(field, dims, diffs).expect("L^k is a complex")
}

fn l_diff(field: FieldSpec, dim_v: usize, i: usize) -> Matrix {
    let id = Matrix::identity(field, dim_v);
    if i == 1 {
        // (v, v') -> v + v'
        id.hstack(&id)
    } else {
        // (v, v') -> (v + v', -(v + v'))
        let top = id.hstack(&id);
        let bottom = top.neg();
        top.vstack(&bottom)
    }
}

/// Cycle embedding `z_k: V -> (L^k)_k`.
fn z_embed(field: FieldSpec, dim_v: usize, k: usize) -> Matrix {
    let id = Matrix::identity(field, dim_v);
    if k == 0 {
        id
    } else {
        id.vstack(&id.neg())
    }
}

/// Cone `CL^k` (`prime = false`) or `C'L^k` (`prime = true`): `L^k` with one
/// new cell of `V` in degree `k+1` bounding the cycle `z_k`. The two cones
/// are equal as complexes; they differ in how they include into `L^{k+1}`.
fn cone_l(field: FieldSpec, dim_v: usize, k: usize) -> ChainComplex {
    let l = l_complex(field, dim_v, k);
    let mut dims = l.dims().to_vec();
    dims.push(dim_v);
    let mut diffs: Vec<Matrix> = (1..=k).map(|i| l.d_at(i)).collect();
    diffs.push(z_embed(field, dim_v, k));
    ChainComplex::new(field, dims, diffs).expect("CL^k is a complex")
}

/// Inclusion of `CL^k` (or `C'L^k` for `prime`) into a complex whose degrees
/// `<= k` equal `L^k` and whose degree `k+1` is `V(k+1) ⊕ V'(k+1)`.
fn cone_l_inclusion(
    field: FieldSpec,
    dim_v: usize,
    k: usize,
    src: &ChainComplex,
    tgt: &ChainComplex,
    prime: bool,
) -> ChainMap {
    let mut comps = Vec::new();
    for deg in 0..src.len() {
        let mut m = Matrix::zeros(field, tgt.dim_at(deg), src.dim_at(deg));
        if deg <= k {
            for r in 0..src.dim_at(deg) {
                m.set(r, r, 1);
            }
        } else {
            // the cone cell lands in the V or V' slot
            let off = if prime { dim_v } else { 0 };
            for v in 0..dim_v {
                m.set(off + v, v, 1);
            }
        }
        comps.push(m);
    }
    ChainMap::new(src.clone(), tgt.clone(), comps).expect("cone inclusion is a chain map")
}

/// The minimal tower `M_n`: `K(V,0)` mapping into two parallel chains of
/// cones `CL^k`, `C'L^k` (`k = 0..n-1`, all four arrows between consecutive
/// levels) that merge into the minimal model `L^n` of `K(V, n)`.
pub fn gen_minimal(field: FieldSpec, n: usize, dim_v: usize) -> Diagram {
    assert!(n >= 1, "tower height must be at least 1");
    let mut labels = vec!["a".to_string()];
    for k in 0..n {
        labels.push(format!("t{k}"));
    }
    for k in 0..n {
        labels.push(format!("b{k}"));
    }
    labels.push("w".to_string());
    let a = 0usize;
    let t = |k: usize| 1 + k;
    let b = |k: usize| 1 + n + k;
    let w = 1 + 2 * n;
    let mut rels: Vec<(Obj, Obj)> = vec![(a, t(0)), (a, b(0))];
    for k in 0..n.saturating_sub(1) {
        for s in [t(k), b(k)] {
            for d in [t(k + 1), b(k + 1)] {
                rels.push((s, d));
            }
        }
    }
    rels.push((t(n - 1), w));
    rels.push((b(n - 1), w));
    let index = Poset::new(labels, &rels).expect("M_n index is a poset");
    let mut objects = vec![ChainComplex::zero(field); index.len()];
    objects[a] = l_complex(field, dim_v, 0);
    for k in 0..n {
        objects[t(k)] = cone_l(field, dim_v, k);
        objects[b(k)] = cone_l(field, dim_v, k);
    }
    objects[w] = l_complex(field, dim_v, n);
    let mut arrows = BTreeMap::new();
    // a -> cones: degree-0 inclusion
    for (tgt, _prime) in [(t(0), false), (b(0), false)] {
        let src = &objects[a];
        let mut comps = vec![Matrix::identity(field, dim_v)];
        comps.push(Matrix::zeros(field, dim_v, 0));
        arrows.insert(
            (a, tgt),
            ChainMap::new(src.clone(), objects[tgt].clone(), comps)
                .expect("sphere inclusion is a chain map"),
        );
    }
    for k in 0..n.saturating_sub(1) {
        for (s, prime) in [(t(k), false), (b(k), true)] {
            for dsts in [t(k + 1), b(k + 1)] {
                arrows.insert(
                    (s, dsts),
                    cone_l_inclusion(field, dim_v, k, &objects[s], &objects[dsts], prime),
                );
            }
        }
    }
    for (s, prime) in [(t(n - 1), false), (b(n - 1), true)] {
        arrows.insert(
            (s, w),
            cone_l_inclusion(field, dim_v, n - 1, &objects[s], &objects[w], prime),
        );
    }
    Diagram::new(index, objects, arrows).expect("M_n is functorial")
}

/// The strict-zero square of the introduction's example: `K(V,0)` mapping to
/// two zero objects over `K(V,1)`, all maps zero. Not cofibrant; its
/// secondary value vanishes (the split homotopy type).
pub fn strict_zero_square(field: FieldSpec, dim_v: usize) -> Diagram {
    let index = Poset::new(
        vec!["s".into(), "c1".into(), "c2".into(), "t".into()],
        &[(0, 1), (0, 2), (1, 3), (2, 3)],
    )
    .unwrap();
    let s = crate::chain::sphere(field, dim_v, 0);
    let z = ChainComplex::zero(field);
    let k1 = crate::chain::sphere(field, dim_v, 1);
    let mut arrows = BTreeMap::new();
    arrows.insert((0, 1), ChainMap::zero(s.clone(), z.clone()));
    arrows.insert((0, 2), ChainMap::zero(s.clone(), z.clone()));
    arrows.insert((1, 3), ChainMap::zero(z.clone(), k1.clone()));
    arrows.insert((2, 3), ChainMap::zero(z.clone(), k1.clone()));
    Diagram::new(index, vec![s, z.clone(), z, k1], arrows).unwrap()
}

/// Zero diagram over a poset.
pub fn zero_diagram(field: FieldSpec, index: &Poset) -> Diagram {
    let z = ChainComplex::zero(field);
    let mut arrows = BTreeMap::new();
    for &(x, y) in index.covers() {
        arrows.insert((x, y), ChainMap::zero(z.clone(), z.clone()));
    }
    Diagram::new(index.clone(), vec![z; index.len()], arrows).unwrap()
}

/// A random minimally cofibrant diagram over `index`: initial objects are
/// random sphere packages, later objects keep their latching colimit, cone
/// off a random independent set of latching homology classes, and adjoin
/// random new spheres.
pub fn random_minimal_diagram(
    rng: &mut DetRng,
    field: FieldSpec,
    index: &Poset,
    max_degree: usize,
    max_dim: usize,
) -> Diagram {
    let info = poset::validate_lattice(index);
    let mut order: Vec<Obj> = (0..index.len()).collect();
    order.sort_by_key(|&x| (info.filtration[x], x));
    let mut objects: Vec<ChainComplex> = vec![ChainComplex::zero(field); index.len()];
    let mut arrows: BTreeMap<(Obj, Obj), ChainMap> = BTreeMap::new();
    for &bv in &order {
        if index.strict_predecessors(bv).is_empty() {
            let dims: Vec<usize> = (0..=max_degree).map(|_| rng.usize_below(max_dim + 1)).collect();
            let diffs = (1..dims.len())
                .map(|i| Matrix::zeros(field, dims[i - 1], dims[i]))
                .collect();
            objects[bv] = ChainComplex::new(field, dims, diffs).unwrap();
            continue;
        }
        let preds: Vec<Obj> = index.strict_predecessors(bv);
        let (sub_poset, back) = crate::diagram::induced_subposet(index, &preds);
        let sub_objects: Vec<ChainComplex> = back.iter().map(|&x| objects[x].clone()).collect();
        let mut sub_arrows = BTreeMap::new();
        for &(x, y) in sub_poset.covers() {
            sub_arrows.insert((x, y), existing_map(index, &arrows, back[x], back[y]));
        }
        let subd = Diagram::new(sub_poset, sub_objects, sub_arrows).unwrap();
        let all: Vec<Obj> = (0..subd.index().len()).collect();
        let colim = colimit_over(&subd, &all);
        let l = colim.complex.clone();
        let len = l.len().max(max_degree + 1) + 1;
        // random dying classes and new spheres per degree
        let mut disk_cells = Vec::new();
        let mut sphere_dims = Vec::new();
        for m in 0..len {
            let h = l.homology(m);
            let r = rng.usize_below(h.dim + 1);
            // random independent combination of homology classes
            let mut w = Matrix::zeros(field, h.dim, r);
            for c in 0..r {
                for rr in 0..h.dim {
                    w.set(rr, c, rng.below(field.p()));
                }
            }
            let img = w.image();
            disk_cells.push(h.cycle_reps.mul(img.basis()));
            sphere_dims.push(if m <= max_degree {
                rng.usize_below(max_dim + 1)
            } else {
                0
            });
        }
        let mut dims = Vec::new();
        for nn in 0..len {
            let disks_above = if nn >= 1 { disk_cells[nn - 1].cols() } else { 0 };
            dims.push(l.dim_at(nn) + disks_above + sphere_dims[nn]);
        }
        while dims.len() > 1 && *dims.last().unwrap() == 0 {
            dims.pop();
        }
        let mut diffs = Vec::new();
        for nn in 1..dims.len() {
            let mut m = Matrix::zeros(field, dims[nn - 1], dims[nn]);
            let dl = l.d_at(nn);
            for r in 0..dl.rows() {
                for c in 0..dl.cols() {
                    m.set(r, c, dl.get(r, c));
                }
            }
            let cells = &disk_cells[nn - 1];
            for r in 0..cells.rows() {
                for c in 0..cells.cols() {
                    m.set(r, l.dim_at(nn) + c, cells.get(r, c));
                }
            }
            diffs.push(m);
        }
        let model = ChainComplex::new(field, dims, diffs).unwrap();
        for g in index.covered_by(bv) {
            let i = back.iter().position(|&x| x == g).unwrap();
            let incl_comps: Vec<Matrix> = (0..model.len())
                .map(|nn| {
                    let mut m = Matrix::zeros(field, model.dim_at(nn), l.dim_at(nn));
                    for r in 0..l.dim_at(nn) {
                        m.set(r, r, 1);
                    }
                    m
                })
                .collect();
            let incl = ChainMap::new(l.clone(), model.clone(), incl_comps).unwrap();
            arrows.insert((g, bv), incl.compose(&colim.cocone[&i]));
        }
        objects[bv] = model;
    }
    Diagram::new(index.clone(), objects, arrows).expect("random minimal diagram is functorial")
}

fn existing_map(
    index: &Poset,
    arrows: &BTreeMap<(Obj, Obj), ChainMap>,
    a: Obj,
    b: Obj,
) -> ChainMap {
    if let Some(m) = arrows.get(&(a, b)) {
        return m.clone();
    }
    let path = index.hasse_path(a, b).expect("a <= b");
    let mut m = arrows[&(path[0], path[1])].clone();
    for wdw in path[1..].windows(2) {
        m = arrows[&(wdw[0], wdw[1])].compose(&m);
    }
    m
}

/// A small library of poset shapes for the randomized suites.
pub fn random_poset(rng: &mut DetRng, max_objects: usize) -> Poset {
    match rng.below(5) {
        0 => poset::chain_poset(2 + rng.usize_below(max_objects.saturating_sub(2).max(1))),
        1 => poset::fan_poset(2 + rng.usize_below(2)),
        2 => poset::cube_poset(2),
        3 => {
            // square with a tail
            Poset::new(
                vec![
                    "r".into(),
                    "x".into(),
                    "y".into(),
                    "j".into(),
                    "z".into(),
                ],
                &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)],
            )
            .unwrap()
        }
        _ => {
            // two roots merging
            Poset::new(
                vec!["a".into(), "b".into(), "m".into(), "n".into(), "top".into()],
                &[(0, 2), (1, 2), (0, 3), (1, 3), (2, 4), (3, 4)],
            )
            .unwrap()
        }
    }
}

/// A random chain map `x -> y`, built on a sphere/disk basis of the source:
/// sphere cells go to random cycles, disk tops to random chains (bottoms
/// follow).
pub fn random_chain_map(rng: &mut DetRng, x: &ChainComplex, y: &ChainComplex) -> ChainMap {
    let field = x.field();
    let sp = split_spheres_disks(x);
    let len = x.len();
    let mut comps: Vec<Matrix> = (0..len.max(y.len()))
        .map(|n| Matrix::zeros(field, y.dim_at(n), x.dim_at(n)))
        .collect();
    let mut top_images: Vec<Matrix> = (0..len)
        .map(|n| Matrix::zeros(field, y.dim_at(n), 0))
        .collect();
    for n in 0..len {
        let tops = x.cycles(n).complement().dim();
        let mut img = Matrix::zeros(field, y.dim_at(n), tops);
        for c in 0..tops {
            for r in 0..y.dim_at(n) {
                img.set(r, c, rng.below(field.p()));
            }
        }
        top_images[n] = img;
    }
    for n in 0..len {
        let h = x.homology(n);
        let z = y.cycles(n);
        let bottom_img = if n + 1 < len {
            y.d_at(n + 1).mul(&top_images[n + 1])
        } else {
            Matrix::zeros(field, y.dim_at(n), 0)
        };
        let mut hom_img = Matrix::zeros(field, y.dim_at(n), h.dim);
        for c in 0..h.dim {
            let mut v = vec![0u64; z.dim()];
            for e in v.iter_mut() {
                *e = rng.below(field.p());
            }
            let w = z.basis().mul_vec(&v);
            for (r, &val) in w.iter().enumerate() {
                hom_img.set(r, c, val);
            }
        }
        let mut img = bottom_img;
        img = img.hstack(&hom_img);
        img = img.hstack(&top_images[n]);
        comps[n] = img.mul(&sp.basis[n].inverse().unwrap());
    }
    ChainMap::new(x.clone(), y.clone(), comps).expect("constructed map is a chain map")
}

/// A random valid double complex: a direct sum of elementary bricks (dots,
/// vertical and horizontal disks, commuting squares, and the length-3 and
/// length-5 zigzags that drive nonzero `d^2` and `d^3`), conjugated by
/// random chain automorphisms of each column.
pub fn random_double_complex(
    rng: &mut DetRng,
    field: FieldSpec,
    cols: usize,
    max_deg: usize,
    max_dim: usize,
) -> DoubleComplex {
    // bigraded cells per (p, q) plus the two differentials as sparse blocks
    let mut dims = vec![vec![0usize; max_deg + 3]; cols];
    // vertical: (p, q) -> (p, q-1); horizontal: (p, q) -> (p-1, q)
    let mut vert: BTreeMap<(usize, usize), Vec<(usize, usize, u64)>> = BTreeMap::new();
    let mut horiz: BTreeMap<(usize, usize), Vec<(usize, usize, u64)>> = BTreeMap::new();
    let add_cell = |dims: &mut Vec<Vec<usize>>, p: usize, q: usize, k: usize| -> usize {
        let idx = dims[p][q];
        dims[p][q] += k;
        idx
    };
    let bricks = 2 + rng.usize_below(5);
    for _ in 0..bricks {
        let k = 1 + rng.usize_below(max_dim);
        match rng.below(6) {
            0 => {
                // dot
                let p = rng.usize_below(cols);
                let q = rng.usize_below(max_deg + 1);
                add_cell(&mut dims, p, q, k);
            }
            1 => {
                // vertical disk
                let p = rng.usize_below(cols);
                let q = rng.usize_below(max_deg + 1);
                let a = add_cell(&mut dims, p, q + 1, k);
                let b = add_cell(&mut dims, p, q, k);
                for i in 0..k {
                    vert.entry((p, q + 1)).or_default().push((a + i, b + i, 1));
                }
            }
            2 if cols >= 2 => {
                // horizontal disk
                let p = 1 + rng.usize_below(cols - 1);
                let q = rng.usize_below(max_deg + 1);
                let a = add_cell(&mut dims, p, q, k);
                let b = add_cell(&mut dims, p - 1, q, k);
                for i in 0..k {
                    horiz.entry((p, q)).or_default().push((a + i, b + i, 1));
                }
            }
            3 if cols >= 2 => {
                // commuting square
                let p = 1 + rng.usize_below(cols - 1);
                let q = rng.usize_below(max_deg + 1);
                let a = add_cell(&mut dims, p, q + 1, k);
                let b = add_cell(&mut dims, p, q, k);
                let c = add_cell(&mut dims, p - 1, q + 1, k);
                let e = add_cell(&mut dims, p - 1, q, k);
                for i in 0..k {
                    vert.entry((p, q + 1)).or_default().push((a + i, b + i, 1));
                    horiz.entry((p, q + 1)).or_default().push((a + i, c + i, 1));
                    horiz.entry((p, q)).or_default().push((b + i, e + i, 1));
                    vert.entry((p - 1, q + 1)).or_default().push((c + i, e + i, 1));
                }
            }
            4 if cols >= 3 => {
                // d^2 zigzag: A(p,q) -h-> B(p-1,q) <-v- C(p-1,q+1) -h-> D(p-2,q+1)
                let p = 2 + rng.usize_below(cols - 2);
                let q = rng.usize_below(max_deg + 1);
                let a = add_cell(&mut dims, p, q, k);
                let b = add_cell(&mut dims, p - 1, q, k);
                let c = add_cell(&mut dims, p - 1, q + 1, k);
                let dd = add_cell(&mut dims, p - 2, q + 1, k);
                for i in 0..k {
                    horiz.entry((p, q)).or_default().push((a + i, b + i, 1));
                    vert.entry((p - 1, q + 1)).or_default().push((c + i, b + i, 1));
                    horiz.entry((p - 1, q + 1)).or_default().push((c + i, dd + i, 1));
                }
            }
            _ if cols >= 4 => {
                // d^3 zigzag through four columns
                let p = 3 + rng.usize_below(cols - 3);
                let q = rng.usize_below(max_deg + 1);
                let a = add_cell(&mut dims, p, q, k);
                let b = add_cell(&mut dims, p - 1, q, k);
                let c = add_cell(&mut dims, p - 1, q + 1, k);
                let e = add_cell(&mut dims, p - 2, q + 1, k);
                let f = add_cell(&mut dims, p - 2, q + 2, k);
                let g = add_cell(&mut dims, p - 3, q + 2, k);
                for i in 0..k {
                    horiz.entry((p, q)).or_default().push((a + i, b + i, 1));
                    vert.entry((p - 1, q + 1)).or_default().push((c + i, b + i, 1));
                    horiz.entry((p - 1, q + 1)).or_default().push((c + i, e + i, 1));
                    vert.entry((p - 2, q + 2)).or_default().push((f + i, e + i, 1));
                    horiz.entry((p - 2, q + 2)).or_default().push((f + i, g + i, 1));
                }
            }
            _ => {
                let p = rng.usize_below(cols);
                let q = rng.usize_below(max_deg + 1);
                add_cell(&mut dims, p, q, k);
            }
        }
    }
    // assemble columns
    let mut columns = Vec::new();
    for p in 0..cols {
        let mut len = dims[p].len();
        while len > 1 && dims[p][len - 1] == 0 {
            len -= 1;
        }
        let cdims: Vec<usize> = dims[p][..len].to_vec();
        let mut diffs = Vec::new();
        for q in 1..len {
            let mut m = Matrix::zeros(field, cdims[q - 1], cdims[q]);
            if let Some(entries) = vert.get(&(p, q)) {
                for &(src, tgt, val) in entries {
                    m.set(tgt, src, val);
                }
            }
            diffs.push(m);
        }
        columns.push(ChainComplex::new(field, cdims, diffs).expect("brick columns are complexes"));
    }
    let mut horizontal = Vec::new();
    for p in 1..cols {
        let src = &columns[p];
        let tgt = &columns[p - 1];
        let mut comps = Vec::new();
        for q in 0..src.len() {
            let mut m = Matrix::zeros(field, tgt.dim_at(q), src.dim_at(q));
            if let Some(entries) = horiz.get(&(p, q)) {
                for &(s, t, val) in entries {
                    m.set(t, s, val);
                }
            }
            comps.push(m);
        }
        horizontal.push(ChainMap::new(src.clone(), tgt.clone(), comps).expect("bricks commute"));
    }
    let dc = DoubleComplex::new(columns, horizontal).expect("bricks form a double complex");
    // conjugate each column by a random chain automorphism (id + random map)
    let mut new_columns = Vec::new();
    let mut autos = Vec::new();
    for p in 0..cols {
        let c = dc.column(p);
        let auto = loop {
            let m = random_chain_map(rng, c, c);
            let phi = m.add(&ChainMap::identity(c));
            if (0..c.len()).all(|n| phi.f_at(n).inverse().is_some()) {
                break phi;
            }
        };
        new_columns.push(c.clone());
        autos.push(auto);
    }
    let mut new_horizontal = Vec::new();
    for p in 1..cols {
        let inv_comps: Vec<Matrix> = (0..dc.column(p).len())
            .map(|n| autos[p].f_at(n).inverse().unwrap())
            .collect();
        let inv = ChainMap::new(
            dc.column(p).clone(),
            dc.column(p).clone(),
            inv_comps,
        )
        .expect("inverse of a chain automorphism is a chain map");
        new_horizontal.push(autos[p - 1].compose(dc.horizontal(p)).compose(&inv));
    }
    DoubleComplex::new(new_columns, new_horizontal).expect("conjugation preserves the structure")
}
