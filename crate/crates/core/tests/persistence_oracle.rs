use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdph::cubical::{build_filtration, compute_persistence, naive_persistence, sublevel_betti};
use sdph::grid::{GridDims, ScalarField};

fn random_int_field(seed: u64, dims: GridDims, max: i32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField::from_fn(dims, |_, _, _| rng.random_range(0..=max) as f64).unwrap()
}

#[test]
fn agrees_with_oracle_on_odd_shapes() {
    for (i, &(nx, ny, nz)) in [
        (1, 1, 1),
        (5, 1, 1),
        (4, 3, 1),
        (2, 5, 3),
        (7, 2, 2),
        (3, 3, 6),
    ]
    .iter()
    .enumerate()
    {
        for seed in 0..10 {
            let f = random_int_field(100 * i as u64 + seed, GridDims::new(nx, ny, nz).unwrap(), 4);
            let fast = compute_persistence(&build_filtration(&f));
            let slow = naive_persistence(&f).unwrap();
            assert_eq!(
                fast.intervals(),
                slow.intervals(),
                "{nx}x{ny}x{nz} seed {seed}"
            );
        }
    }
}

#[test]
fn agrees_with_oracle_on_continuous_values() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = GridDims::new(5, 4, 6).unwrap();
        let f = ScalarField::from_fn(d, |_, _, _| rng.random::<f64>() - 0.5).unwrap();
        let fast = compute_persistence(&build_filtration(&f));
        let slow = naive_persistence(&f).unwrap();
        assert_eq!(fast.intervals(), slow.intervals());
        // with distinct values the critical cells agree as well
        let cells = |d: &sdph::cubical::Diagram| {
            let mut v: Vec<_> = d
                .pairs
                .iter()
                .map(|p| (p.birth_cell, p.death_cell))
                .collect();
            v.sort();
            v
        };
        assert_eq!(cells(&fast), cells(&slow));
    }
}

#[test]
fn bars_reproduce_sublevel_betti_numbers() {
    for seed in 0..8 {
        let f = random_int_field(seed, GridDims::new(4, 4, 3).unwrap(), 5);
        let dgm = compute_persistence(&build_filtration(&f));
        for t in 0..=5 {
            let t = t as f64;
            let bars = dgm.betti_at(t);
            let direct = sublevel_betti(&f, t).unwrap();
            assert_eq!(&direct[..3], &bars[..], "seed {seed} t {t}");
            assert_eq!(direct[3], 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn monotone_reparameterization_maps_pairs(seed in 0u64..1000) {
        let f = random_int_field(seed, GridDims::new(4, 3, 3).unwrap(), 6);
        let g = f.map(|v| (v * 0.7).exp() - 3.0).unwrap();
        let df = compute_persistence(&build_filtration(&f));
        let dg = compute_persistence(&build_filtration(&g));
        let mapped: Vec<_> = df
            .intervals()
            .into_iter()
            .map(|(k, b, d)| (k, (b * 0.7).exp() - 3.0, if d.is_infinite() { d } else { (d * 0.7).exp() - 3.0 }))
            .collect();
        prop_assert_eq!(mapped, dg.intervals());
    }

    #[test]
    fn one_essential_bar_and_euler_one(seed in 0u64..1000) {
        let f = random_int_field(seed, GridDims::new(5, 4, 3).unwrap(), 9);
        let dgm = compute_persistence(&build_filtration(&f));
        prop_assert_eq!(dgm.pairs.iter().filter(|p| p.is_essential()).count(), 1);
        prop_assert!(dgm.pairs.iter().all(|p| p.is_essential() == (p.dim == 0 && p.death.is_infinite())));
        prop_assert_eq!(dgm.euler_at(f.max_value()), 1);
        prop_assert!(dgm.pairs.iter().filter(|p| !p.is_essential()).all(|p| p.birth < p.death));
    }
}
