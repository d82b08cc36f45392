//! Synthetic inputs: Gaussian random fields with a squared-exponential
//! covariance, and analytic solids whose diagrams are known in closed form.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cubical::{Diagram, DiagramMeta, PersistencePair};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridDims, ScalarField};

/// Boundary shell kept clear around analytic shapes.
pub const SHAPE_MARGIN: usize = 3;

/// Spectrum entries below `-CLIP_TOLERANCE * max` count as clipped; smaller
/// negative values are round-off and are zeroed silently.
const CLIP_TOLERANCE: f64 = 1e-9;
const MAX_CLIP_FRACTION: f64 = 0.01;

/// Zero-mean stationary field with covariance
/// `C(h) = variance * exp(-(pi/4) |A h|^2)`, `A = diag(1/l1, 1/l2, 1/l3) R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub dims: GridDims,
    pub variance: f64,
    /// Voxel units.
    pub lengthscales: [f64; 3],
    /// Orthonormal rotation, row-major.
    pub rotation: [[f64; 3]; 3],
    pub seed: u64,
}

pub const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl GrfSpec {
    pub fn isotropic(dims: GridDims, lengthscale: f64, seed: u64) -> Self {
        Self {
            dims,
            variance: 1.0,
            lengthscales: [lengthscale; 3],
            rotation: IDENTITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidParameter("variance must be positive".into()));
        }
        if self
            .lengthscales
            .iter()
            .any(|l| !(*l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "lengthscales must be positive".into(),
            ));
        }
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "rotation is not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Covariance at lag `h` (voxel units).
    pub fn covariance(&self, h: [f64; 3]) -> f64 {
        let mut q = 0.0;
        for i in 0..3 {
            let rh: f64 = (0..3).map(|k| self.rotation[i][k] * h[k]).sum();
            q += (rh / self.lengthscales[i]).powi(2);
        }
        self.variance * (-std::f64::consts::FRAC_PI_4 * q).exp()
    }

    /// True when every lengthscale is at most a quarter of its axis length,
    /// so the periodic wrap-around of the kernel is negligible.
    pub fn kernel_fits(&self) -> bool {
        let n = self.dims.shape();
        self.lengthscales
            .iter()
            .all(|&l| n.iter().all(|&m| l <= m as f64 / 4.0))
    }
}

/// In-place 3D FFT over an x-fastest buffer.
fn fft3(data: &mut [Complex64], shape: [usize; 3], inverse: bool) {
    let [nx, ny, nz] = shape;
    let mut planner = FftPlanner::new();
    let plan = |p: &mut FftPlanner<f64>, n: usize| -> std::sync::Arc<dyn Fft<f64>> {
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    };
    plan(&mut planner, nx).process(data);

    let fy = plan(&mut planner, ny);
    let mut line = vec![Complex64::default(); ny.max(nz)];
    for z in 0..nz {
        for x in 0..nx {
            let base = x + nx * ny * z;
            for y in 0..ny {
                line[y] = data[base + nx * y];
            }
            fy.process(&mut line[..ny]);
            for y in 0..ny {
                data[base + nx * y] = line[y];
            }
        }
    }

    let fz = plan(&mut planner, nz);
    let slab = nx * ny;
    for base in 0..slab {
        for z in 0..nz {
            line[z] = data[base + slab * z];
        }
        fz.process(&mut line[..nz]);
        for z in 0..nz {
            data[base + slab * z] = line[z];
        }
    }
}

fn wrapped_lag(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Eigenvalues of the periodized covariance (its DFT) and the fraction of
/// frequencies that had to be clipped from clearly negative values.
fn covariance_spectrum(spec: &GrfSpec) -> (Vec<f64>, f64) {
    let dims = spec.dims;
    let [nx, ny, nz] = dims.shape();
    // image copies needed before the kernel drops below ~1e-20
    let reach = 8.0 * spec.lengthscales.iter().copied().fold(0.0, f64::max);
    let images = |n: usize| (reach / n as f64).ceil() as i64;
    let (kx, ky, kz) = (images(nx), images(ny), images(nz));
    let mut c = Vec::with_capacity(dims.len());
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let h = [wrapped_lag(x, nx), wrapped_lag(y, ny), wrapped_lag(z, nz)];
                let mut sum = 0.0;
                for mz in -kz..=kz {
                    for my in -ky..=ky {
                        for mx in -kx..=kx {
                            sum += spec.covariance([
                                h[0] + (mx * nx as i64) as f64,
                                h[1] + (my * ny as i64) as f64,
                                h[2] + (mz * nz as i64) as f64,
                            ]);
                        }
                    }
                }
                c.push(Complex64::new(sum, 0.0));
            }
        }
    }
    fft3(&mut c, dims.shape(), false);
    let lambda_max = c.iter().map(|v| v.re).fold(0.0, f64::max);
    let mut clipped = 0usize;
    let lambda = c
        .iter()
        .map(|v| {
            if v.re < -CLIP_TOLERANCE * lambda_max {
                clipped += 1;
            }
            v.re.max(0.0)
        })
        .collect();
    (lambda, clipped as f64 / dims.len() as f64)
}

/// One realization by spectral synthesis on the periodic grid: white noise
/// filtered by the square root of the covariance spectrum.
pub fn sample_grf(spec: &GrfSpec) -> Result<ScalarField> {
    spec.validate()?;
    let dims = spec.dims;
    let (lambda, clip) = covariance_spectrum(spec);
    if clip > MAX_CLIP_FRACTION {
        return Err(Error::SpectrumClip { fraction: clip });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut buf: Vec<Complex64> = (0..dims.len())
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    fft3(&mut buf, dims.shape(), false);
    for (b, l) in buf.iter_mut().zip(&lambda) {
        *b *= l.sqrt();
    }
    fft3(&mut buf, dims.shape(), true);
    let n = dims.len() as f64;
    ScalarField::new(dims, buf.into_iter().map(|v| v.re / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::F1, Preset::F2, Preset::F3, Preset::F4, Preset::F5];
    pub const SIZE: usize = 100;
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(Preset::F1),
            "F2" => Ok(Preset::F2),
            "F3" => Ok(Preset::F3),
            "F4" => Ok(Preset::F4),
            "F5" => Ok(Preset::F5),
            _ => Err(Error::InvalidParameter(format!("unknown preset {s:?}"))),
        }
    }
}

fn base_spec(lengthscales: [f64; 3], dims: GridDims, seed: u64) -> GrfSpec {
    GrfSpec {
        dims,
        variance: 1.0,
        lengthscales,
        rotation: IDENTITY,
        seed,
    }
}

const F1_SCALES: [f64; 3] = [8.0, 8.0, 8.0];
// l1 = 8 with l2/l1 = 0.7 and l3/l1 = 0.85
const F2_SCALES: [f64; 3] = [8.0, 8.0 * 0.7, 8.0 * 0.85];
const F3_SCALES: [f64; 3] = [5.0, 5.0, 5.0];

/// Preset field at the standard 100^3 size.
pub fn grf_preset(preset: Preset, seed: u64) -> Result<ScalarField> {
    grf_preset_with_dims(preset, seed, GridDims::cube(Preset::SIZE)?)
}

impl Preset {
    /// Independent fields summed to form the preset, and a constant shift
    /// applied to the sum.
    pub fn recipe(self, seed: u64, dims: GridDims) -> (Vec<GrfSpec>, f64) {
        match self {
            Preset::F1 => (vec![base_spec(F1_SCALES, dims, seed)], 0.0),
            Preset::F2 => (vec![base_spec(F2_SCALES, dims, seed)], 0.0),
            Preset::F3 => (vec![base_spec(F3_SCALES, dims, seed)], 0.0),
            Preset::F4 => (vec![base_spec(F3_SCALES, dims, seed)], -0.5),
            Preset::F5 => (
                vec![
                    base_spec(F1_SCALES, dims, seed),
                    base_spec(F3_SCALES, dims, seed.wrapping_add(1)),
                ],
                0.0,
            ),
        }
    }
}

/// Preset field on a custom grid (same kernels, e.g. reduced size for tests).
pub fn grf_preset_with_dims(preset: Preset, seed: u64, dims: GridDims) -> Result<ScalarField> {
    let (specs, shift) = preset.recipe(seed, dims);
    let mut field = sample_grf(&specs[0])?;
    for spec in &specs[1..] {
        field = field.add(&sample_grf(spec)?)?;
    }
    if shift != 0.0 {
        field = field.map(|v| v + shift)?;
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    Ball { radius: f64 },
    Shell { inner: f64, outer: f64 },
    TwoBalls { r1: f64, r2: f64, separation: f64 },
    Torus { major: f64, minor: f64 },
}

impl FromStr for ShapeKind {
    type Err = Error;

    /// `ball:R`, `shell:R1,R2`, `two-balls:R1,R2,D`, `torus:R,r`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad shape spec {s:?}"));
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if nums.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(bad());
        }
        let kind = match (name, &nums[..]) {
            ("ball", &[radius]) => ShapeKind::Ball { radius },
            ("shell", &[inner, outer]) if inner < outer => ShapeKind::Shell { inner, outer },
            ("two-balls" | "two_balls", &[r1, r2, separation]) => {
                ShapeKind::TwoBalls { r1, r2, separation }
            }
            ("torus", &[major, minor]) if minor < major => ShapeKind::Torus { major, minor },
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShapeKind::Ball { radius } => write!(f, "ball:{radius}"),
            ShapeKind::Shell { inner, outer } => write!(f, "shell:{inner},{outer}"),
            ShapeKind::TwoBalls { r1, r2, separation } => {
                write!(f, "two-balls:{r1},{r2},{separation}")
            }
            ShapeKind::Torus { major, minor } => write!(f, "torus:{major},{minor}"),
        }
    }
}

/// A solid placed in a grid. Parameters are in voxel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticShape {
    pub kind: ShapeKind,
    pub dims: GridDims,
    pub center: [f64; 3],
}

impl AnalyticShape {
    /// Centered on the voxel at `n / 2` along each axis. Two balls are placed
    /// along x, symmetric about the center; the torus lies in the xy plane.
    pub fn centered(kind: ShapeKind, dims: GridDims) -> Self {
        let center = dims.shape().map(|n| (n / 2) as f64);
        Self { kind, dims, center }
    }

    fn ball_centers(&self) -> Option<([f64; 3], [f64; 3])> {
        match self.kind {
            ShapeKind::TwoBalls { separation, .. } => {
                let [cx, cy, cz] = self.center;
                Some((
                    [cx - separation / 2.0, cy, cz],
                    [cx + separation / 2.0, cy, cz],
                ))
            }
            _ => None,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of the solid.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let c = self.center;
        let half = match self.kind {
            ShapeKind::Ball { radius } => [radius; 3],
            ShapeKind::Shell { outer, .. } => [outer; 3],
            ShapeKind::Torus { major, minor } => [major + minor, major + minor, minor],
            ShapeKind::TwoBalls { r1, r2, .. } => {
                let (a, b) = self.ball_centers().unwrap();
                let lo = [a[0] - r1, c[1] - r1.max(r2), c[2] - r1.max(r2)];
                let hi = [b[0] + r2, c[1] + r1.max(r2), c[2] + r1.max(r2)];
                return (lo, hi);
            }
        };
        (
            [0, 1, 2].map(|a| c[a] - half[a]),
            [0, 1, 2].map(|a| c[a] + half[a]),
        )
    }

    /// The solid must leave a clear shell of `margin` voxels on every side.
    pub fn check_fits(&self, margin: usize) -> Result<()> {
        let (lo, hi) = self.bounds();
        let n = self.dims.shape();
        for a in 0..3 {
            if lo[a] < margin as f64 || hi[a] > (n[a] - 1) as f64 - margin as f64 {
                return Err(Error::ShapeExceedsGrid(format!(
                    "{} spans [{}, {}] on axis {a}, grid allows [{margin}, {}]",
                    self.kind,
                    lo[a],
                    hi[a],
                    n[a] as isize - 1 - margin as isize
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let dist = |a: [f64; 3], b: [f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        match self.kind {
            ShapeKind::Ball { radius } => dist(p, self.center) <= radius,
            ShapeKind::Shell { inner, outer } => {
                let r = dist(p, self.center);
                inner <= r && r <= outer
            }
            ShapeKind::TwoBalls { r1, r2, .. } => {
                let (a, b) = self.ball_centers().unwrap();
                dist(p, a) <= r1 || dist(p, b) <= r2
            }
            ShapeKind::Torus { major, minor } => {
                let [x, y, z] = [0, 1, 2].map(|a| p[a] - self.center[a]);
                let rho = (x * x + y * y).sqrt();
                ((rho - major).powi(2) + z * z).sqrt() <= minor
            }
        }
    }
}

/// Voxel is foreground iff its center lies in the closed solid.
pub fn rasterize(shape: &AnalyticShape) -> Result<BinaryMask> {
    shape.check_fits(SHAPE_MARGIN)?;
    Ok(BinaryMask::from_fn(shape.dims, |x, y, z| {
        shape.contains([x as f64, y as f64, z as f64])
    }))
}

/// Continuum diagram of the solid's signed distance function (values only).
pub fn expected_diagram(shape: &AnalyticShape) -> Diagram {
    use PersistencePair as P;
    let pairs = match shape.kind {
        ShapeKind::Ball { radius } => vec![P::essential(0, -radius)],
        ShapeKind::Shell { inner, outer } => {
            let t = (outer - inner) / 2.0;
            vec![P::essential(0, -t), P::finite(2, -t, inner)]
        }
        ShapeKind::TwoBalls { r1, r2, separation } => {
            if separation > r1 + r2 {
                vec![
                    P::essential(0, -r1.max(r2)),
                    P::finite(0, -r1.min(r2), (separation - r1 - r2) / 2.0),
                ]
            } else {
                vec![P::essential(0, -r1.max(r2))]
            }
        }
        ShapeKind::Torus { major, minor } => {
            vec![P::essential(0, -minor), P::finite(1, -minor, major - minor)]
        }
    };
    Diagram::new(
        pairs,
        DiagramMeta {
            spacing: shape.dims.spacing,
            transform: "analytic".into(),
            ..DiagramMeta::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(l: f64, seed: u64) -> GrfSpec {
        GrfSpec::isotropic(GridDims::cube(24).unwrap(), l, seed)
    }

    #[test]
    fn same_seed_same_field() {
        let a = sample_grf(&small_spec(3.0, 9)).unwrap();
        let b = sample_grf(&small_spec(3.0, 9)).unwrap();
        assert_eq!(a, b);
        let c = sample_grf(&small_spec(3.0, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn covariance_kernel_values() {
        let s = small_spec(8.0, 0);
        assert_eq!(s.covariance([0.0; 3]), 1.0);
        let expect = (-std::f64::consts::FRAC_PI_4).exp();
        assert!((s.covariance([8.0, 0.0, 0.0]) - expect).abs() < 1e-15);
        assert!((s.covariance([0.0, 0.0, -8.0]) - expect).abs() < 1e-15);
    }

    #[test]
    fn spectrum_is_clean_for_presets() {
        let spec = base_spec(F3_SCALES, GridDims::cube(40).unwrap(), 0);
        let (lambda, clip) = covariance_spectrum(&spec);
        assert_eq!(clip, 0.0);
        // sum of eigenvalues / N = c(0) = variance
        let mean = lambda.iter().sum::<f64>() / lambda.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small_spec(2.0, 0);
        s.rotation[0][1] = 0.5;
        assert!(sample_grf(&s).is_err());
        let mut s = small_spec(2.0, 0);
        s.lengthscales[2] = 0.0;
        assert!(sample_grf(&s).is_err());
    }

    #[test]
    fn rotated_spec_is_accepted() {
        let (c, s) = (0.6f64, 0.8f64);
        let mut spec = small_spec(3.0, 1);
        spec.rotation = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        spec.lengthscales = [4.0, 2.0, 3.0];
        assert!(sample_grf(&spec).is_ok());
    }

    #[test]
    fn kernel_fit_check() {
        assert!(!small_spec(30.0, 0).kernel_fits());
        assert!(small_spec(6.0, 0).kernel_fits());
    }

    #[test]
    fn f4_is_f3_shifted() {
        let d = GridDims::cube(20).unwrap();
        let f3 = grf_preset_with_dims(Preset::F3, 4, d).unwrap();
        let f4 = grf_preset_with_dims(Preset::F4, 4, d).unwrap();
        for (a, b) in f4.values().iter().zip(f3.values()) {
            assert_eq!(*a, b - 0.5);
        }
    }

    #[test]
    fn f5_is_sum_of_f1_and_next_seed_f3() {
        let d = GridDims::cube(20).unwrap();
        let f1 = grf_preset_with_dims(Preset::F1, 4, d).unwrap();
        let f3 = grf_preset_with_dims(Preset::F3, 5, d).unwrap();
        let f5 = grf_preset_with_dims(Preset::F5, 4, d).unwrap();
        for ((s, a), b) in f5.values().iter().zip(f1.values()).zip(f3.values()) {
            assert_eq!(*s, a + b);
        }
    }

    #[test]
    fn shape_parsing() {
        assert_eq!(
            "two-balls:10,10,34".parse::<ShapeKind>().unwrap(),
            ShapeKind::TwoBalls {
                r1: 10.0,
                r2: 10.0,
                separation: 34.0
            }
        );
        assert_eq!(
            "torus:16,6".parse::<ShapeKind>().unwrap().to_string(),
            "torus:16,6"
        );
        assert!("shell:16,10".parse::<ShapeKind>().is_err());
        assert!("cube:3".parse::<ShapeKind>().is_err());
        assert!("ball:-1".parse::<ShapeKind>().is_err());
    }

    #[test]
    fn ball_voxel_count_and_symmetry() {
        let d = GridDims::cube(64).unwrap();
        let shape = AnalyticShape::centered(ShapeKind::Ball { radius: 20.0 }, d);
        let m = rasterize(&shape).unwrap();
        let n = m.count_ones() as f64;
        let volume = 4.0 / 3.0 * std::f64::consts::PI * 8000.0;
        assert!((n - volume).abs() / volume < 0.05, "{n}");
        // integer lattice points with x^2+y^2+z^2 <= 400
        assert_eq!(m.count_ones(), 33401);
        // axis permutations and reflections about the center voxel (32)
        for z in 1..64 {
            for y in 1..64 {
                for x in 1..64 {
                    let v = m.get_xyz(x, y, z);
                    assert_eq!(v, m.get_xyz(y, z, x));
                    assert_eq!(v, m.get_xyz(y, x, z));
                    assert_eq!(v, m.get_xyz(64 - x, y, z));
                }
            }
        }
    }

    #[test]
    fn two_balls_too_far_apart() {
        let d = GridDims::cube(64).unwrap();
        let kind = ShapeKind::TwoBalls {
            r1: 10.0,
            r2: 10.0,
            separation: 100.0,
        };
        assert!(matches!(
            rasterize(&AnalyticShape::centered(kind, d)),
            Err(Error::ShapeExceedsGrid(_))
        ));
    }

    #[test]
    fn expected_diagrams() {
        let d = GridDims::cube(64).unwrap();
        let iv = |k| expected_diagram(&AnalyticShape::centered(k, d)).intervals();
        assert_eq!(
            iv(ShapeKind::Ball { radius: 20.0 }),
            vec![(0, -20.0, f64::INFINITY)]
        );
        assert_eq!(
            iv(ShapeKind::Shell {
                inner: 10.0,
                outer: 16.0
            }),
            vec![(0, -3.0, f64::INFINITY), (2, -3.0, 10.0)]
        );
        assert_eq!(
            iv(ShapeKind::TwoBalls {
                r1: 10.0,
                r2: 10.0,
                separation: 34.0
            }),
            vec![(0, -10.0, 7.0), (0, -10.0, f64::INFINITY)]
        );
        assert_eq!(
            iv(ShapeKind::Torus {
                major: 16.0,
                minor: 6.0
            }),
            vec![(0, -6.0, f64::INFINITY), (1, -6.0, 10.0)]
        );
    }
}
