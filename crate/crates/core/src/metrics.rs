//! Bottleneck distance between diagrams and kernel density scores.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cubical::Diagram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub distance: f64,
    /// `(index in d1, index in d2)` among the pairs of the requested
    /// dimension, in diagram order; `None` is the diagonal.
    pub matching: Vec<(Option<usize>, Option<usize>)>,
}

#[derive(Clone, Copy)]
struct Point {
    idx: usize,
    birth: f64,
    death: f64,
}

impl Point {
    fn diag_cost(&self) -> f64 {
        (self.death - self.birth) / 2.0
    }

    fn cost(&self, o: &Point) -> f64 {
        (self.birth - o.birth)
            .abs()
            .max((self.death - o.death).abs())
    }
}

fn split(d: &Diagram, dim: u8) -> (Vec<Point>, Vec<Point>) {
    let (mut finite, mut essential) = (Vec::new(), Vec::new());
    for (idx, p) in d.in_dim(dim).enumerate() {
        let pt = Point {
            idx,
            birth: p.birth,
            death: p.death,
        };
        if p.is_essential() {
            essential.push(pt);
        } else {
            finite.push(pt);
        }
    }
    (finite, essential)
}

/// Hopcroft-Karp maximum matching. Returns the partner of each left node.
fn max_matching(n_right: usize, adj: &[Vec<u32>]) -> (usize, Vec<u32>) {
    const FREE: u32 = u32::MAX;
    let n_left = adj.len();
    let mut match_l = vec![FREE; n_left];
    let mut match_r = vec![FREE; n_right];
    let mut dist = vec![u32::MAX; n_left];
    let mut size = 0;
    let mut queue = VecDeque::new();
    loop {
        // BFS layering from free left nodes
        queue.clear();
        for u in 0..n_left {
            if match_l[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v as usize];
                if w == FREE {
                    found = true;
                } else if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[u] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        if !found {
            break;
        }
        // iterative DFS along layers
        let mut it = vec![0usize; n_left];
        for root in 0..n_left {
            if match_l[root] != FREE {
                continue;
            }
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if it[u] == adj[u].len() {
                    dist[u] = u32::MAX;
                    stack.pop();
                    continue;
                }
                let v = adj[u][it[u]];
                it[u] += 1;
                let w = match_r[v as usize];
                if w == FREE {
                    // augment along the stack
                    let mut v = v;
                    while let Some(u) = stack.pop() {
                        let prev = match_l[u];
                        match_l[u] = v;
                        match_r[v as usize] = u as u32;
                        v = prev;
                    }
                    size += 1;
                    break;
                } else if dist[w as usize] == dist[u] + 1 {
                    stack.push(w as usize);
                }
            }
        }
    }
    (size, match_l)
}

/// Perfect matching between `a` and `b` (diagonal allowed) with every matched
/// cost at most `r`, if one exists.
fn feasible(a: &[Point], b: &[Point], r: f64) -> Option<Matching> {
    let mut edges: Vec<Vec<u32>> = {
        let grid = Buckets::new(b, r);
        a.iter()
            .map(|p| {
                let mut e = Vec::new();
                grid.near(p, |j| {
                    if p.cost(&b[j]) <= r {
                        e.push(j as u32);
                    }
                });
                e.sort_unstable();
                e
            })
            .collect()
    };
    let mut b_linked = vec![false; b.len()];
    for e in &edges {
        for &j in e {
            b_linked[j as usize] = true;
        }
    }

    let mut result = Vec::new();
    // points without any partner within r can only go to the diagonal
    let mut a_keep = Vec::new();
    for (i, p) in a.iter().enumerate() {
        if edges[i].is_empty() {
            if p.diag_cost() > r {
                return None;
            }
            result.push((Some(p.idx), None));
        } else {
            a_keep.push(i);
        }
    }
    let mut b_keep = Vec::new();
    let mut b_local = vec![u32::MAX; b.len()];
    for (j, q) in b.iter().enumerate() {
        if !b_linked[j] {
            if q.diag_cost() > r {
                return None;
            }
            result.push((None, Some(q.idx)));
        } else {
            b_local[j] = b_keep.len() as u32;
            b_keep.push(j);
        }
    }
    let (na, nb) = (a_keep.len(), b_keep.len());
    let must_a = a_keep.iter().filter(|&&i| a[i].diag_cost() > r).count();
    let must_b = b_keep.iter().filter(|&&j| b[j].diag_cost() > r).count();
    if must_a > nb || must_b > na {
        return None;
    }

    // left: kept A then diagonal copies of kept B; right: kept B then
    // diagonal copies of kept A
    let mut adj: Vec<Vec<u32>> = Vec::with_capacity(na + nb);
    for (li, &i) in a_keep.iter().enumerate() {
        let mut e: Vec<u32> = std::mem::take(&mut edges[i])
            .into_iter()
            .map(|j| b_local[j as usize])
            .collect();
        if a[i].diag_cost() <= r {
            e.push((nb + li) as u32);
        }
        adj.push(e);
    }
    let diag_a: Vec<u32> = (0..na).map(|li| (nb + li) as u32).collect();
    for (lj, &j) in b_keep.iter().enumerate() {
        let mut e = Vec::with_capacity(na + 1);
        if b[j].diag_cost() <= r {
            e.push(lj as u32);
        }
        e.extend_from_slice(&diag_a);
        adj.push(e);
    }
    let (size, match_l) = max_matching(na + nb, &adj);
    if size < na + nb {
        return None;
    }
    for (li, &i) in a_keep.iter().enumerate() {
        let m = match_l[li] as usize;
        if m < nb {
            result.push((Some(a[i].idx), Some(b[b_keep[m]].idx)));
        } else {
            result.push((Some(a[i].idx), None));
        }
    }
    for (lj, &j) in b_keep.iter().enumerate() {
        if (match_l[na + lj] as usize) == lj {
            result.push((None, Some(b[j].idx)));
        }
    }
    Some(result)
}

/// Points of one diagram hashed into square cells of side `cell`, for
/// L-infinity range queries of radius at most `cell`.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(pts: &[Point], radius: f64) -> Self {
        let cell = if radius > 0.0 { radius } else { 1.0 };
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (j, q) in pts.iter().enumerate() {
            map.entry(Self::key(cell, q)).or_default().push(j);
        }
        Buckets { cell, map }
    }

    fn key(cell: f64, p: &Point) -> (i64, i64) {
        (
            (p.birth / cell).floor() as i64,
            (p.death / cell).floor() as i64,
        )
    }

    fn near(&self, p: &Point, mut f: impl FnMut(usize)) {
        let (kx, ky) = Self::key(self.cell, p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.map.get(&(kx + dx, ky + dy)) {
                    v.iter().for_each(|&j| f(j));
                }
            }
        }
    }
}

/// Every cost that lies in `(lo, hi]`.
fn candidates_between(a: &[Point], b: &[Point], lo: f64, hi: f64) -> Vec<f64> {
    let mut c: Vec<f64> = a
        .iter()
        .chain(b)
        .map(Point::diag_cost)
        .filter(|&v| v > lo && v <= hi)
        .collect();
    let grid = Buckets::new(b, hi);
    for p in a {
        grid.near(p, |j| {
            let v = p.cost(&b[j]);
            if v > lo && v <= hi {
                c.push(v);
            }
        });
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

type Matching = Vec<(Option<usize>, Option<usize>)>;

/// The optimal value is one of the pairwise or diagonal costs. Bisect on
/// the reals until few costs remain in the bracket, then search those.
fn finite_bottleneck(a: &[Point], b: &[Point]) -> (f64, Matching) {
    if let Some(m) = feasible(a, b, 0.0) {
        return (0.0, m);
    }
    let mut lo = 0.0;
    let mut hi = a.iter().chain(b).map(Point::diag_cost).fold(0.0, f64::max);
    let mut best = feasible(a, b, hi).expect("all-diagonal matching is feasible");
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        match feasible(a, b, mid) {
            Some(m) => {
                hi = mid;
                best = m;
            }
            None => lo = mid,
        }
    }
    let cands = candidates_between(a, b, lo, hi);
    let (mut i, mut j) = (0, cands.len());
    // cands[j..] feasible, cands[..i] infeasible
    let mut value = hi;
    while i < j {
        let mid = (i + j) / 2;
        match feasible(a, b, cands[mid]) {
            Some(m) => {
                j = mid;
                value = cands[mid];
                best = m;
            }
            None => i = mid + 1,
        }
    }
    (value, best)
}

/// Exact bottleneck distance between the dimension-`dim` parts of two
/// diagrams. Essential pairs are matched among themselves by birth only;
/// differing essential counts give an infinite distance.
pub fn bottleneck(d1: &Diagram, d2: &Diagram, dim: u8) -> MatchingResult {
    let (a, ea) = split(d1, dim);
    let (b, eb) = split(d2, dim);

    let mut matching = Vec::new();
    let mut ess_dist: f64 = 0.0;
    if ea.len() != eb.len() {
        ess_dist = f64::INFINITY;
        matching.extend(ea.iter().map(|p| (Some(p.idx), None)));
        matching.extend(eb.iter().map(|q| (None, Some(q.idx))));
    } else {
        let (mut sa, mut sb) = (ea.clone(), eb.clone());
        sa.sort_by(|x, y| x.birth.total_cmp(&y.birth));
        sb.sort_by(|x, y| x.birth.total_cmp(&y.birth));
        for (p, q) in sa.iter().zip(&sb) {
            ess_dist = ess_dist.max((p.birth - q.birth).abs());
            matching.push((Some(p.idx), Some(q.idx)));
        }
    }

    let (finite_dist, best) = finite_bottleneck(&a, &b);
    matching.extend(best);
    MatchingResult {
        distance: finite_dist.max(ess_dist),
        matching,
    }
}

/// Gaussian kernel density of each finite pair of dimension `dim` among the
/// finite pairs of that dimension (self term included).
pub fn density_scores(dgm: &Diagram, dim: u8, sigma: f64) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = dgm
        .in_dim(dim)
        .filter(|p| !p.is_essential())
        .map(|p| (p.birth, p.death))
        .collect();
    let inv = 1.0 / (2.0 * sigma * sigma);
    pts.iter()
        .map(|&(b, d)| {
            pts.iter()
                .map(|&(b2, d2)| (-((b - b2).powi(2) + (d - d2).powi(2)) * inv).exp())
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::{DiagramMeta, PersistencePair};

    fn dgm(pts: &[(f64, f64)]) -> Diagram {
        Diagram::new(
            pts.iter()
                .map(|&(b, d)| PersistencePair::finite(1, b, d))
                .collect(),
            DiagramMeta::default(),
        )
    }

    /// Enumerates every partial bijection between the two point sets.
    fn brute_force(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        fn rec(
            a: &[(f64, f64)],
            b: &[(f64, f64)],
            i: usize,
            used: &mut Vec<bool>,
            acc: f64,
        ) -> f64 {
            let diag = |p: (f64, f64)| (p.1 - p.0) / 2.0;
            if i == a.len() {
                let rest = b
                    .iter()
                    .zip(used.iter())
                    .filter(|(_, &u)| !u)
                    .map(|(&q, _)| diag(q))
                    .fold(0.0, f64::max);
                return acc.max(rest);
            }
            let mut best = rec(a, b, i + 1, used, acc.max(diag(a[i])));
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    let c = (a[i].0 - b[j].0).abs().max((a[i].1 - b[j].1).abs());
                    best = best.min(rec(a, b, i + 1, used, acc.max(c)));
                    used[j] = false;
                }
            }
            best
        }
        rec(a, b, 0, &mut vec![false; b.len()], 0.0)
    }

    #[test]
    fn identical_is_zero() {
        let d = dgm(&[(0.0, 2.0), (1.0, 5.0)]);
        assert_eq!(bottleneck(&d, &d, 1).distance, 0.0);
    }

    #[test]
    fn single_point_to_diagonal() {
        let r = bottleneck(&dgm(&[(0.0, 2.0)]), &dgm(&[]), 1);
        assert_eq!(r.distance, 1.0);
        assert_eq!(r.matching, vec![(Some(0), None)]);
    }

    #[test]
    fn shifted_point() {
        let r = bottleneck(&dgm(&[(0.0, 4.0)]), &dgm(&[(0.5, 3.5)]), 1);
        assert_eq!(r.distance, 0.5);
        assert_eq!(r.matching, vec![(Some(0), Some(0))]);
    }

    #[test]
    fn matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let pts = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<(f64, f64)> {
                (0..n)
                    .map(|_| {
                        let b: f64 = rng.random_range(-3.0..3.0);
                        (b, b + rng.random_range(0.05..3.0))
                    })
                    .collect()
            };
            let na = rng.random_range(0..5);
            let nb = rng.random_range(0..5);
            let a = pts(&mut rng, na);
            let b = pts(&mut rng, nb);
            let got = bottleneck(&dgm(&a), &dgm(&b), 1);
            assert_eq!(got.distance, brute_force(&a, &b), "{a:?} {b:?}");
            // matching covers every point exactly once
            let mut seen_a = vec![0; na];
            let mut seen_b = vec![0; nb];
            for (i, j) in &got.matching {
                if let Some(i) = i {
                    seen_a[*i] += 1;
                }
                if let Some(j) = j {
                    seen_b[*j] += 1;
                }
            }
            assert!(seen_a.iter().chain(&seen_b).all(|&c| c == 1));
        }
    }

    #[test]
    fn essential_pairs() {
        let meta = DiagramMeta::default();
        let a = Diagram::new(vec![PersistencePair::essential(0, -3.0)], meta.clone());
        let b = Diagram::new(vec![PersistencePair::essential(0, -2.5)], meta.clone());
        assert_eq!(bottleneck(&a, &b, 0).distance, 0.5);
        let c = Diagram::new(vec![], meta);
        assert_eq!(bottleneck(&a, &c, 0).distance, f64::INFINITY);
    }

    #[test]
    fn density_examples() {
        let one = dgm(&[(0.0, 1.0)]);
        assert_eq!(density_scores(&one, 1, 0.5), vec![1.0]);
        let two = dgm(&[(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(density_scores(&two, 1, 0.5), vec![2.0, 2.0]);
        let apart = dgm(&[(0.0, 1.0), (0.5, 1.0)]);
        let expect = 1.0 + (-0.5f64).exp();
        for s in density_scores(&apart, 1, 0.5) {
            assert!((s - expect).abs() < 1e-12);
            assert!((s - 1.6065).abs() < 1e-4);
        }
    }
}
