//! T-constructed cubical complexes and their sublevel persistence over Z/2.
//!
//! Voxels are the top-dimensional cells. Every lower-dimensional cell takes
//! the minimum value of the voxels it bounds. Cells are addressed on the
//! doubled grid of size `(2nx+1) x (2ny+1) x (2nz+1)`: a cell with anchor
//! `a` and extent `e` sits at `2a + e`, so odd coordinates mark the axes the
//! cell spans and the cell dimension is the number of odd coordinates.
//!
//! The filtration order is `(value, dim, doubled linear index)`. Diagrams do
//! not depend on this tie rule; the critical cells reported for each pair do.

mod naive;
mod persistence;

pub use naive::{naive_persistence, sublevel_betti, NAIVE_CELL_LIMIT};
pub use persistence::compute_persistence;

use serde::{Deserialize, Serialize};

use crate::grid::ScalarField;

pub const TIE_RULE: &str = "value,dim,linear-index";

/// A cube of the complex: `anchor` is the lowest vertex (in voxel
/// coordinates), `extent` marks the axes along which the cell has length one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub dim: u8,
    pub anchor: [usize; 3],
    pub extent: [bool; 3],
}

impl Cell {
    pub fn from_doubled(c: [usize; 3]) -> Self {
        let extent = c.map(|v| v % 2 == 1);
        Cell {
            dim: extent.iter().filter(|&&e| e).count() as u8,
            anchor: c.map(|v| v / 2),
            extent,
        }
    }

    pub fn doubled(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| 2 * self.anchor[a] + self.extent[a] as usize)
    }

    pub fn voxel(x: usize, y: usize, z: usize) -> Self {
        Cell {
            dim: 3,
            anchor: [x, y, z],
            extent: [true; 3],
        }
    }
}

/// Sublevel filtration of the cubical complex spanned by a voxel field.
#[derive(Debug, Clone)]
pub struct FilteredCubicalComplex {
    top: ScalarField,
    shape: [usize; 3],
}

/// Builds the T-constructed filtration. Cell values are derived on demand.
pub fn build_filtration(field: &ScalarField) -> FilteredCubicalComplex {
    let [nx, ny, nz] = field.dims().shape();
    FilteredCubicalComplex {
        top: field.clone(),
        shape: [2 * nx + 1, 2 * ny + 1, 2 * nz + 1],
    }
}

impl FilteredCubicalComplex {
    pub fn top_values(&self) -> &ScalarField {
        &self.top
    }

    /// Doubled-grid extents.
    pub fn doubled_shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn num_cells(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn linear(&self, c: [usize; 3]) -> usize {
        c[0] + self.shape[0] * (c[1] + self.shape[1] * c[2])
    }

    #[inline]
    pub fn unlinear(&self, l: usize) -> [usize; 3] {
        let x = l % self.shape[0];
        let r = l / self.shape[0];
        [x, r % self.shape[1], r / self.shape[1]]
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        let c = cell.doubled();
        (0..3).all(|a| c[a] < self.shape[a])
    }

    /// Voxels incident to the cell at doubled coordinates `c` (1 to 8 of them).
    fn incident_voxels(&self, c: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
        let [nx, ny, nz] = self.top.dims().shape();
        let n = [nx, ny, nz];
        let range = move |a: usize| -> (usize, usize) {
            if c[a] % 2 == 1 {
                let v = (c[a] - 1) / 2;
                (v, v)
            } else {
                let hi = c[a] / 2;
                (hi.saturating_sub(1), hi.min(n[a] - 1))
            }
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        (z0..=z1).flat_map(move |z| (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| [x, y, z])))
    }

    /// Filtration value of a cell: the minimum over its incident voxels.
    pub fn value(&self, cell: &Cell) -> f64 {
        self.incident_voxels(cell.doubled())
            .map(|[x, y, z]| self.top.get(x, y, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// The incident voxel realizing the cell's value (lowest index on ties).
    pub fn generating_voxel(&self, cell: &Cell) -> [usize; 3] {
        let mut best = None::<([usize; 3], f64)>;
        for v in self.incident_voxels(cell.doubled()) {
            let val = self.top.get(v[0], v[1], v[2]);
            if best.is_none_or(|(_, b)| val < b) {
                best = Some((v, val));
            }
        }
        best.expect("every cell has an incident voxel").0
    }

    /// Faces of a cell: two per spanned axis.
    pub fn boundary(&self, cell: &Cell) -> Vec<Cell> {
        let c = cell.doubled();
        let mut out = Vec::with_capacity(2 * cell.dim as usize);
        for a in 0..3 {
            if c[a] % 2 == 1 {
                let mut lo = c;
                lo[a] -= 1;
                let mut hi = c;
                hi[a] += 1;
                out.push(Cell::from_doubled(lo));
                out.push(Cell::from_doubled(hi));
            }
        }
        out
    }

    /// Number of cells in each dimension.
    pub fn cell_counts(&self) -> [usize; 4] {
        let [nx, ny, nz] = self.top.dims().shape();
        // cells along one axis: n+1 even positions, n odd positions
        let per_axis = |n: usize| [n + 1, n];
        let (ax, ay, az) = (per_axis(nx), per_axis(ny), per_axis(nz));
        let mut counts = [0; 4];
        for (i, cx) in ax.iter().enumerate() {
            for (j, cy) in ay.iter().enumerate() {
                for (k, cz) in az.iter().enumerate() {
                    counts[i + j + k] += cx * cy * cz;
                }
            }
        }
        counts
    }

    /// Values of every cell, indexed by doubled linear index. Computed as a
    /// separable min over the axes, which equals the min over incident voxels.
    pub fn cell_values(&self) -> Vec<f64> {
        let [sx, sy, sz] = self.shape;
        let dims = self.top.dims();
        let mut vals = vec![f64::INFINITY; sx * sy * sz];
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    vals[self.linear([2 * x + 1, 2 * y + 1, 2 * z + 1])] = self.top.get(x, y, z);
                }
            }
        }
        let strides = [1, sx, sx * sy];
        for a in 0..3 {
            let stride = strides[a];
            let mut l = 0;
            for cz in 0..sz {
                for cy in 0..sy {
                    for cx in 0..sx {
                        let c = [cx, cy, cz][a];
                        if c % 2 == 0 {
                            let lo = if c > 0 {
                                vals[l - stride]
                            } else {
                                f64::INFINITY
                            };
                            let hi = if c + 1 < self.shape[a] {
                                vals[l + stride]
                            } else {
                                f64::INFINITY
                            };
                            vals[l] = lo.min(hi);
                        }
                        l += 1;
                    }
                }
            }
        }
        vals
    }
}

/// One bar of the barcode, half-open `[birth, death)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub birth_cell: Option<Cell>,
    pub death_cell: Option<Cell>,
    /// Voxels realizing the birth/death values.
    pub birth_voxel: Option<[usize; 3]>,
    pub death_voxel: Option<[usize; 3]>,
}

impl PersistencePair {
    pub fn finite(dim: u8, birth: f64, death: f64) -> Self {
        Self {
            dim,
            birth,
            death,
            birth_cell: None,
            death_cell: None,
            birth_voxel: None,
            death_voxel: None,
        }
    }

    pub fn essential(dim: u8, birth: f64) -> Self {
        Self::finite(dim, birth, f64::INFINITY)
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub(crate) fn with_cells(
        cx: &FilteredCubicalComplex,
        dim: u8,
        birth_cell: Cell,
        death_cell: Option<Cell>,
        birth: f64,
        death: f64,
    ) -> Self {
        Self {
            dim,
            birth,
            death,
            birth_voxel: Some(cx.generating_voxel(&birth_cell)),
            death_voxel: death_cell.map(|c| cx.generating_voxel(&c)),
            birth_cell: Some(birth_cell),
            death_cell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramMeta {
    pub source_hash: Option<u64>,
    pub spacing: f64,
    pub transform: String,
    pub tie_rule: String,
}

impl Default for DiagramMeta {
    fn default() -> Self {
        Self {
            source_hash: None,
            spacing: 1.0,
            transform: "none".into(),
            tie_rule: TIE_RULE.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagram {
    pub pairs: Vec<PersistencePair>,
    pub meta: DiagramMeta,
}

impl Diagram {
    pub fn new(mut pairs: Vec<PersistencePair>, meta: DiagramMeta) -> Self {
        sort_pairs(&mut pairs);
        Self { pairs, meta }
    }

    pub fn in_dim(&self, dim: u8) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    pub fn count(&self, dim: u8) -> usize {
        self.in_dim(dim).count()
    }

    /// `(dim, birth, death)` triples in canonical order.
    pub fn intervals(&self) -> Vec<(u8, f64, f64)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .map(|p| (p.dim, p.birth, p.death))
            .collect();
        v.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });
        v
    }

    /// Number of bars of each dimension containing `t`.
    pub fn betti_at(&self, t: f64) -> [usize; 3] {
        let mut b = [0; 3];
        for p in &self.pairs {
            if p.birth <= t && t < p.death {
                b[p.dim as usize] += 1;
            }
        }
        b
    }

    /// Alternating sum of bars alive at `t`.
    pub fn euler_at(&self, t: f64) -> i64 {
        let b = self.betti_at(t);
        b[0] as i64 - b[1] as i64 + b[2] as i64
    }
}

fn sort_pairs(pairs: &mut [PersistencePair]) {
    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
            .then(a.birth_cell.cmp(&b.birth_cell))
    });
}
