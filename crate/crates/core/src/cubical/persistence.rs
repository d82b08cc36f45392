//! Fast persistence for 3D T-constructed complexes.
//!
//! * dim 0: union-find over vertices, edges in filtration order (elder rule).
//! * dim 2: union-find over voxels plus one exterior node, faces in reverse
//!   filtration order. A face that merges two regions of the complement
//!   creates a void that dies when the younger region's highest voxel enters.
//! * dim 1: column reduction of face boundaries. Faces already known to create
//!   voids are cleared (their columns reduce to zero), the rest are reduced
//!   with stored, fully reduced columns.

use rayon::prelude::*;

use super::{Cell, Diagram, DiagramMeta, FilteredCubicalComplex, PersistencePair};

const NONE: u32 = u32::MAX;

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }
}

/// Cells of one dimension, sorted by (value, doubled index).
fn sorted_cells(cx: &FilteredCubicalComplex, vals: &[f64], dim: usize) -> Vec<u32> {
    let [sx, sy, sz] = cx.shape;
    let mut cells = Vec::new();
    let mut l = 0u32;
    for z in 0..sz {
        for y in 0..sy {
            for x in 0..sx {
                if (x & 1) + (y & 1) + (z & 1) == dim {
                    cells.push(l);
                }
                l += 1;
            }
        }
    }
    cells.par_sort_unstable_by(|&a, &b| {
        vals[a as usize]
            .total_cmp(&vals[b as usize])
            .then(a.cmp(&b))
    });
    cells
}

struct Ctx<'a> {
    cx: &'a FilteredCubicalComplex,
    vals: &'a [f64],
    strides: [usize; 3],
}

impl Ctx<'_> {
    fn cell(&self, l: u32) -> Cell {
        Cell::from_doubled(self.cx.unlinear(l as usize))
    }

    fn pair(&self, dim: u8, birth: u32, death: Option<u32>) -> PersistencePair {
        let b = self.vals[birth as usize];
        let d = death.map_or(f64::INFINITY, |d| self.vals[d as usize]);
        PersistencePair::with_cells(
            self.cx,
            dim,
            self.cell(birth),
            death.map(|d| self.cell(d)),
            b,
            d,
        )
    }

    #[inline]
    fn less(&self, a: u32, b: u32) -> bool {
        self.vals[a as usize]
            .total_cmp(&self.vals[b as usize])
            .then(a.cmp(&b))
            .is_lt()
    }
}

fn dim0(ctx: &Ctx, edges: &[u32]) -> Vec<PersistencePair> {
    let cx = ctx.cx;
    let [sx, sy, sz] = cx.shape;
    let (vx, vy, vz) = (sx.div_ceil(2), sy.div_ceil(2), sz.div_ceil(2));
    let vid = |c: [usize; 3]| (c[0] / 2 + vx * (c[1] / 2 + vy * (c[2] / 2))) as u32;
    let vlin = |v: u32| {
        let v = v as usize;
        let (x, r) = (v % vx, v / vx);
        cx.linear([2 * x, 2 * (r % vy), 2 * (r / vy)]) as u32
    };

    let mut uf = UnionFind::new(vx * vy * vz);
    // oldest vertex (doubled index) of each root
    let oldest: Vec<u32> = (0..(vx * vy * vz) as u32).map(vlin).collect();
    let mut pairs = Vec::new();

    for &e in edges {
        let c = cx.unlinear(e as usize);
        let axis = (0..3).find(|&a| c[a] & 1 == 1).unwrap();
        let mut lo = c;
        lo[axis] -= 1;
        let mut hi = c;
        hi[axis] += 1;
        let (ra, rb) = (uf.find(vid(lo)), uf.find(vid(hi)));
        if ra == rb {
            continue;
        }
        let (oa, ob) = (oldest[ra as usize], oldest[rb as usize]);
        let (elder, younger, young_birth) = if ctx.less(oa, ob) {
            (ra, rb, ob)
        } else {
            (rb, ra, oa)
        };
        uf.parent[younger as usize] = elder;
        if ctx.vals[young_birth as usize] < ctx.vals[e as usize] {
            pairs.push(ctx.pair(0, young_birth, Some(e)));
        }
    }
    let root = uf.find(0);
    pairs.push(ctx.pair(0, oldest[root as usize], None));
    pairs
}

/// Returns the dim-2 pairs and a flag per face (in `faces` order) marking the
/// faces that create voids.
fn dim2(ctx: &Ctx, faces: &[u32]) -> (Vec<PersistencePair>, Vec<bool>) {
    let cx = ctx.cx;
    let dims = cx.top.dims();
    let nvox = dims.len();
    let exterior = nvox as u32;
    let voxel_of = |c: [usize; 3]| -> u32 {
        if (0..3).any(|a| c[a] == 0 || c[a] >= cx.shape[a]) {
            exterior
        } else {
            dims.index((c[0] - 1) / 2, (c[1] - 1) / 2, (c[2] - 1) / 2) as u32
        }
    };
    let vox_lin = |v: u32| {
        let [x, y, z] = dims.coords(v as usize);
        cx.linear([2 * x + 1, 2 * y + 1, 2 * z + 1]) as u32
    };

    let mut uf = UnionFind::new(nvox + 1);
    // youngest-in-reverse = highest voxel of each region; NONE for the exterior
    let mut top: Vec<u32> = (0..nvox as u32).map(vox_lin).collect();
    top.push(NONE);
    let mut positive = vec![false; faces.len()];
    let mut pairs = Vec::new();

    for (rank, &f) in faces.iter().enumerate().rev() {
        let c = cx.unlinear(f as usize);
        let axis = (0..3).find(|&a| c[a] & 1 == 0).unwrap();
        let mut lo = c;
        let mut hi = c;
        hi[axis] += 1;
        let va = if c[axis] == 0 {
            exterior
        } else {
            lo[axis] -= 1;
            voxel_of(lo)
        };
        let vb = voxel_of(hi);
        let (ra, rb) = (uf.find(va), uf.find(vb));
        if ra == rb {
            continue;
        }
        positive[rank] = true;
        let (ta, tb) = (top[ra as usize], top[rb as usize]);
        // the region whose highest voxel comes earlier in the filtration dies
        let a_elder = tb != NONE && (ta == NONE || ctx.less(tb, ta));
        let (elder, younger, young_top) = if a_elder { (ra, rb, tb) } else { (rb, ra, ta) };
        uf.parent[younger as usize] = elder;
        if ctx.vals[f as usize] < ctx.vals[young_top as usize] {
            pairs.push(ctx.pair(2, f, Some(young_top)));
        }
    }
    (pairs, positive)
}

/// Symmetric difference of two columns sorted in descending order.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Greater => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Less => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

fn dim1(ctx: &Ctx, edges: &[u32], faces: &[u32], positive: &[bool]) -> Vec<PersistencePair> {
    let cx = ctx.cx;
    let mut edge_rank = vec![NONE; cx.num_cells()];
    for (r, &e) in edges.iter().enumerate() {
        edge_rank[e as usize] = r as u32;
    }

    // reduced column stored for each pivot (edge rank)
    let mut slot = vec![NONE; edges.len()];
    let mut starts: Vec<usize> = vec![0];
    let mut arena: Vec<u32> = Vec::new();
    let mut col: Vec<u32> = Vec::with_capacity(64);
    let mut scratch: Vec<u32> = Vec::with_capacity(64);
    let mut pairs = Vec::new();

    for (rank, &f) in faces.iter().enumerate() {
        if positive[rank] {
            continue;
        }
        let c = cx.unlinear(f as usize);
        col.clear();
        for (a, &ca) in c.iter().enumerate() {
            if ca & 1 == 1 {
                let s = ctx.strides[a] as u32;
                col.push(edge_rank[(f - s) as usize]);
                col.push(edge_rank[(f + s) as usize]);
            }
        }
        col.sort_unstable_by(|a, b| b.cmp(a));

        while let Some(&pivot) = col.first() {
            let s = slot[pivot as usize];
            if s == NONE {
                break;
            }
            let (start, end) = (starts[s as usize], starts[s as usize + 1]);
            add_columns(&col, &arena[start..end], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        let Some(&pivot) = col.first() else {
            // a face outside the cleared set that still creates a cycle; the
            // dual pass should have caught it
            debug_assert!(false, "unexpected zero column for face {f}");
            continue;
        };
        slot[pivot as usize] = (starts.len() - 1) as u32;
        arena.extend_from_slice(&col);
        starts.push(arena.len());

        let e = edges[pivot as usize];
        if ctx.vals[e as usize] < ctx.vals[f as usize] {
            pairs.push(ctx.pair(1, e, Some(f)));
        }
    }
    pairs
}

/// Persistence diagrams in dimensions 0, 1, 2 with Z/2 coefficients.
/// Zero-persistence pairs are dropped.
pub fn compute_persistence(cx: &FilteredCubicalComplex) -> Diagram {
    let vals = cx.cell_values();
    let [sx, sy, _] = cx.shape;
    let ctx = Ctx {
        cx,
        vals: &vals,
        strides: [1, sx, sx * sy],
    };
    let (edges, faces) = rayon::join(|| sorted_cells(cx, &vals, 1), || sorted_cells(cx, &vals, 2));
    let (p0, (p2, positive)) = rayon::join(|| dim0(&ctx, &edges), || dim2(&ctx, &faces));
    let p1 = dim1(&ctx, &edges, &faces, &positive);

    let mut pairs = p0;
    pairs.extend(p1);
    pairs.extend(p2);
    Diagram::new(
        pairs,
        DiagramMeta {
            spacing: cx.top.dims().spacing,
            ..DiagramMeta::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::build_filtration;
    use crate::grid::{GridDims, ScalarField};

    fn dgm(nx: usize, ny: usize, nz: usize, v: &[f64]) -> Diagram {
        let f = ScalarField::new(GridDims::new(nx, ny, nz).unwrap(), v.to_vec()).unwrap();
        compute_persistence(&build_filtration(&f))
    }

    #[test]
    fn constant_field_has_one_bar() {
        let d = dgm(2, 2, 2, &[3.0; 8]);
        assert_eq!(d.intervals(), vec![(0, 3.0, f64::INFINITY)]);
    }

    #[test]
    fn three_voxel_line() {
        let d = dgm(3, 1, 1, &[0.0, 5.0, 1.0]);
        assert_eq!(d.intervals(), vec![(0, 0.0, f64::INFINITY), (0, 1.0, 5.0)]);
        let p = d.in_dim(0).find(|p| !p.is_essential()).unwrap();
        assert_eq!(p.birth_voxel, Some([2, 0, 0]));
        assert_eq!(p.death_voxel, Some([1, 0, 0]));
    }

    #[test]
    fn ring_of_voxels_has_a_loop() {
        // 3x3x1 slab: low ring around a high center
        let mut v = vec![0.0; 9];
        v[4] = 7.0;
        let d = dgm(3, 3, 1, &v);
        assert_eq!(d.intervals(), vec![(0, 0.0, f64::INFINITY), (1, 0.0, 7.0)]);
    }

    #[test]
    fn enclosed_voxel_makes_a_void() {
        let mut v = vec![0.0; 27];
        v[13] = 4.0;
        let d = dgm(3, 3, 3, &v);
        assert_eq!(d.intervals(), vec![(0, 0.0, f64::INFINITY), (2, 0.0, 4.0)]);
        let p = d.in_dim(2).next().unwrap();
        assert_eq!(p.death_voxel, Some([1, 1, 1]));
    }
}
