//! Small analytic solids: the fast diagram matches the naive oracle exactly
//! and the continuum diagram up to discretization.

use sdph::classify::filter_persistence;
use sdph::cubical::{build_filtration, compute_persistence, naive_persistence};
use sdph::grid::{close_boundary, GridDims};
use sdph::metrics::bottleneck;
use sdph::sdt::signed_distance;
use sdph::synth::{expected_diagram, rasterize, AnalyticShape, ShapeKind};

fn check(shape: &str, tol: f64) {
    let kind: ShapeKind = shape.parse().unwrap();
    let solid = AnalyticShape::centered(kind, GridDims::cube(21).unwrap());
    let mask = close_boundary(&rasterize(&solid).unwrap(), 3).unwrap();
    let sdf = signed_distance(&mask, 1.0).unwrap();

    let fast = compute_persistence(&build_filtration(&sdf.field));
    let naive = naive_persistence(&sdf.field).unwrap();
    assert_eq!(fast.intervals(), naive.intervals(), "{shape}");

    let kept = filter_persistence(&fast, 1.0);
    let expect = expected_diagram(&solid);
    for dim in 0..3 {
        assert_eq!(
            kept.count(dim),
            expect.count(dim),
            "{shape} dim {dim}: {:?}",
            kept.intervals()
        );
        let d = bottleneck(&kept, &expect, dim).distance;
        assert!(d <= tol, "{shape} dim {dim}: distance {d}");
    }
}

#[test]
fn ball() {
    check("ball:6", 1.0);
}

#[test]
fn shell() {
    check("shell:3,6", 1.5);
}

#[test]
fn two_balls() {
    check("two-balls:3,3,8", 1.5);
}

#[test]
fn torus() {
    check("torus:5,2", 2.0);
}
