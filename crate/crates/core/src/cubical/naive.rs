//! Reference implementations used as test oracles. Plain boundary-matrix
//! reduction over every cell with explicitly stored columns; no clearing,
//! no duality, no union-find.

use std::collections::HashMap;

use super::{build_filtration, Cell, Diagram, DiagramMeta, PersistencePair};
use crate::error::{Error, Result};
use crate::grid::ScalarField;

pub const NAIVE_CELL_LIMIT: usize = 100_000;

struct Filtration {
    cells: Vec<Cell>,
    values: Vec<f64>,
}

fn full_filtration(field: &ScalarField) -> Result<Filtration> {
    let cx = build_filtration(field);
    let n = cx.num_cells();
    if n > NAIVE_CELL_LIMIT {
        return Err(Error::TooLarge {
            cells: n,
            limit: NAIVE_CELL_LIMIT,
        });
    }
    let mut entries: Vec<(f64, u8, usize, Cell)> = (0..n)
        .map(|l| {
            let cell = Cell::from_doubled(cx.unlinear(l));
            (cx.value(&cell), cell.dim, l, cell)
        })
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(Filtration {
        values: entries.iter().map(|e| e.0).collect(),
        cells: entries.into_iter().map(|e| e.3).collect(),
    })
}

/// Ground-truth persistence by textbook left-to-right column reduction.
/// Refuses complexes with more than [`NAIVE_CELL_LIMIT`] cells.
pub fn naive_persistence(field: &ScalarField) -> Result<Diagram> {
    let cx = build_filtration(field);
    let filt = full_filtration(field)?;
    let position: HashMap<Cell, usize> = filt
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, i))
        .collect();

    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(filt.cells.len());
    let mut owner_of_low: HashMap<usize, usize> = HashMap::new();
    let mut paired = vec![false; filt.cells.len()];
    let mut pairs = Vec::new();

    for (j, cell) in filt.cells.iter().enumerate() {
        let mut col: Vec<usize> = cx.boundary(cell).iter().map(|f| position[f]).collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            let Some(&k) = owner_of_low.get(&low) else {
                break;
            };
            let mut sum: Vec<usize> = col
                .iter()
                .filter(|r| reduced[k].binary_search(r).is_err())
                .copied()
                .collect();
            sum.extend(reduced[k].iter().filter(|r| col.binary_search(r).is_err()));
            sum.sort_unstable();
            col = sum;
        }
        if let Some(&low) = col.last() {
            owner_of_low.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let (b, d) = (filt.values[low], filt.values[j]);
            if b < d {
                let bc = filt.cells[low];
                pairs.push(PersistencePair::with_cells(
                    &cx,
                    bc.dim,
                    bc,
                    Some(*cell),
                    b,
                    d,
                ));
            }
        }
        reduced.push(col);
    }
    for (i, cell) in filt.cells.iter().enumerate() {
        if !paired[i] {
            pairs.push(PersistencePair::with_cells(
                &cx,
                cell.dim,
                *cell,
                None,
                filt.values[i],
                f64::INFINITY,
            ));
        }
    }
    Ok(Diagram::new(
        pairs,
        DiagramMeta {
            spacing: field.dims().spacing,
            ..DiagramMeta::default()
        },
    ))
}

/// Rank over Z/2 of a set of sparse rows, by Gaussian elimination on bitsets.
fn rank_z2(rows: Vec<Vec<usize>>, width: usize) -> usize {
    let words = width.div_ceil(64).max(1);
    let mut basis: Vec<Option<Vec<u64>>> = vec![None; width];
    let mut rank = 0;
    for row in rows {
        let mut bits = vec![0u64; words];
        for c in row {
            bits[c / 64] ^= 1 << (c % 64);
        }
        while let Some(lead) = (0..words).rev().find(|&w| bits[w] != 0) {
            let lead = lead * 64 + 63 - bits[lead].leading_zeros() as usize;
            match &basis[lead] {
                Some(b) => bits.iter_mut().zip(b).for_each(|(x, y)| *x ^= y),
                None => {
                    basis[lead] = Some(bits);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// Betti numbers `b_0..b_3` of the sublevel complex `{cells with value <= t}`,
/// from ranks of its boundary matrices.
pub fn sublevel_betti(field: &ScalarField, t: f64) -> Result<[usize; 4]> {
    let cx = build_filtration(field);
    let filt = full_filtration(field)?;
    let mut by_dim: [Vec<Cell>; 4] = Default::default();
    for (cell, &v) in filt.cells.iter().zip(&filt.values) {
        if v <= t {
            by_dim[cell.dim as usize].push(*cell);
        }
    }
    let local: Vec<HashMap<Cell, usize>> = by_dim
        .iter()
        .map(|cells| cells.iter().enumerate().map(|(i, c)| (*c, i)).collect())
        .collect();
    let mut ranks = [0usize; 5];
    for k in 1..4 {
        let rows = by_dim[k]
            .iter()
            .map(|c| cx.boundary(c).iter().map(|f| local[k - 1][f]).collect())
            .collect();
        ranks[k] = rank_z2(rows, by_dim[k - 1].len());
    }
    Ok([0, 1, 2, 3].map(|k| by_dim[k].len() - ranks[k] - ranks[k + 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;

    #[test]
    fn constant_field() {
        let f = ScalarField::constant(GridDims::cube(3).unwrap(), -2.0).unwrap();
        let d = naive_persistence(&f).unwrap();
        assert_eq!(d.intervals(), vec![(0, -2.0, f64::INFINITY)]);
    }

    #[test]
    fn two_voxels() {
        let f = ScalarField::new(GridDims::new(2, 1, 1).unwrap(), vec![1.0, 4.0]).unwrap();
        let d = naive_persistence(&f).unwrap();
        assert_eq!(d.intervals(), vec![(0, 1.0, f64::INFINITY)]);
    }

    #[test]
    fn three_voxel_line() {
        let f = ScalarField::new(GridDims::new(3, 1, 1).unwrap(), vec![0.0, 5.0, 1.0]).unwrap();
        let d = naive_persistence(&f).unwrap();
        assert_eq!(d.intervals(), vec![(0, 0.0, f64::INFINITY), (0, 1.0, 5.0)]);
    }

    #[test]
    fn refuses_large_instances() {
        let f = ScalarField::constant(GridDims::cube(32).unwrap(), 0.0).unwrap();
        assert!(matches!(naive_persistence(&f), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn betti_of_hollow_cube() {
        let mut v = vec![0.0; 27];
        v[13] = 4.0;
        let f = ScalarField::new(GridDims::cube(3).unwrap(), v).unwrap();
        assert_eq!(sublevel_betti(&f, 1.0).unwrap(), [1, 0, 1, 0]);
        assert_eq!(sublevel_betti(&f, 4.0).unwrap(), [1, 0, 0, 0]);
        assert_eq!(sublevel_betti(&f, -1.0).unwrap(), [0, 0, 0, 0]);
    }
}
