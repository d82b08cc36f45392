//! Second-order statistics of sampled fields against the kernel.

use sdph::grid::{GridDims, ScalarField};
use sdph::synth::{grf_preset_with_dims, sample_grf, GrfSpec, Preset};

fn variance(f: &ScalarField) -> f64 {
    let v = f.values();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}

/// Periodic lag-`h` autocovariance along `axis`.
fn lag_cov(f: &ScalarField, axis: usize, h: usize) -> f64 {
    let [nx, ny, nz] = f.dims().shape();
    let mut sum = 0.0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut q = [x, y, z];
                q[axis] = (q[axis] + h) % [nx, ny, nz][axis];
                sum += f.get(x, y, z) * f.get(q[0], q[1], q[2]);
            }
        }
    }
    sum / f.dims().len() as f64
}

#[test]
fn f1_marginal_variance() {
    let dims = GridDims::cube(100).unwrap();
    let mean: f64 = (0..5)
        .map(|s| variance(&grf_preset_with_dims(Preset::F1, s, dims).unwrap()))
        .sum::<f64>()
        / 5.0;
    assert!((0.85..=1.15).contains(&mean), "mean variance {mean}");
}

#[test]
fn lag_covariance_matches_kernel() {
    let dims = GridDims::cube(48).unwrap();
    let n = 20;
    let mut acc = 0.0;
    for s in 0..n {
        let f = sample_grf(&GrfSpec::isotropic(dims, 8.0, s)).unwrap();
        acc += (0..3).map(|a| lag_cov(&f, a, 8)).sum::<f64>() / 3.0;
    }
    let got = acc / n as f64;
    let want = (-std::f64::consts::FRAC_PI_4).exp();
    assert!((got - want).abs() < 0.1, "lag-8 covariance {got} vs {want}");
}

#[test]
fn f2_is_anisotropic() {
    let dims = GridDims::cube(64).unwrap();
    let mut c = [0.0; 3];
    for s in 0..4 {
        let f = grf_preset_with_dims(Preset::F2, s, dims).unwrap();
        for (a, v) in c.iter_mut().enumerate() {
            *v += lag_cov(&f, a, 8);
        }
    }
    // longest correlation along x, shortest along y
    assert!(c[0] > c[2] && c[2] > c[1], "{c:?}");
}
